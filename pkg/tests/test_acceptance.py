"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line (shown even under output
capture).  Run as a script for the same lines without pytest::

    python3 tests/test_acceptance.py
"""
import json
import subprocess
import sys
import time

import numpy as np
import pytest

from flowsolve.benchmarks import affine_field, mixture_config_dict, mixture_field
from flowsolve.coeffs import node_weights, step_coefficients
from flowsolve.core import (
    FunctionField,
    TimeSchedule,
    VelocityEvalRecord,
    make_shifted_schedule,
    make_uniform_schedule,
)
from flowsolve.experiments import parse_config, run_sweep
from flowsolve.fields import AffineField, GaussianMixtureFlowField, PolyTimeField, eval_gm_flow
from flowsolve.metrics import fit_order
from flowsolve.solvers import SolverConfig, sample

_LINES = []


def report(num, name, ok, detail, elapsed, limit):
    ok = bool(ok) and elapsed < limit
    line = f"{'PASS' if ok else 'FAIL'} [{num:2d}] {name}: {detail} ({elapsed:.2f}s, limit {limit:g}s)"
    _LINES.append(line)
    if __name__ == "__main__":
        print(line, flush=True)
    return ok


# 1 -------------------------------------------------------------------------

def _random_case(rng):
    d = int(rng.integers(1, 4))
    kind = rng.integers(3)
    if kind == 0:
        field = AffineField(rng.normal(size=(d, d)), rng.normal(size=d))
    elif kind == 1:
        field = PolyTimeField(rng.normal(size=int(rng.integers(1, 5))), dim=d)
    else:
        k = int(rng.integers(1, 4))
        field = GaussianMixtureFlowField(rng.dirichlet(np.ones(k)), rng.normal(size=(k, d)) * 2, rng.uniform(0.2, 1.5))
    n = int(rng.integers(1, 30))
    sched = make_shifted_schedule(n, rng.uniform(0.5, 4.0)) if rng.random() < 0.5 else make_uniform_schedule(n)
    x = rng.standard_normal((int(rng.integers(1, 5)), d))
    return field, sched, x


def test_c01_euler_reduction():
    t0 = time.perf_counter()
    bad = 0
    for seed in range(100):
        field, sched, x = _random_case(np.random.default_rng(seed))
        a = sample(SolverConfig("euler", sched), field, x).as_array()
        b = sample(SolverConfig("flow", sched, order=1), field, x).as_array()
        bad += not (a.shape == b.shape and np.array_equal(a, b))
    assert report(1, "Euler reduction", bad == 0, f"{100 - bad}/100 bit-identical", time.perf_counter() - t0, 10)


# 2 -------------------------------------------------------------------------

AB = {
    2: [3 / 2, -1 / 2],
    3: [23 / 12, -16 / 12, 5 / 12],
}


def test_c02_adams_bashforth_weights():
    t0 = time.perf_counter()
    worst = 0.0
    for h in (0.1, 0.05, 1 / 7):
        for s, ref in AB.items():
            t_prev = 0.5
            nodes = [t_prev + k * h for k in range(1, s)]
            w = node_weights(step_coefficients(t_prev, t_prev - h, nodes)) / (-h)
            worst = max(worst, np.max(np.abs(w - ref)))
    assert report(2, "AB2/AB3 weights", worst <= 1e-12, f"max deviation {worst:.2e}", time.perf_counter() - t0, 1)


# 3 -------------------------------------------------------------------------

def test_c03_vandermonde_residual():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        p = int(rng.integers(1, 5))
        # a decreasing grid segment in [0, 1]: p cached nodes, t_prev, t_next
        gaps = rng.uniform(0.01, 0.3, size=p + 1)
        times = 1.0 - np.concatenate([[0.0], np.cumsum(gaps)]) * rng.uniform(0.2, 1.0) / gaps.sum()
        coef = step_coefficients(times[p], times[p + 1], times[:p][::-1])
        worst = max(worst, coef.residual())
    assert report(3, "Vandermonde residual", worst <= 1e-10, f"max residual {worst:.2e}", time.perf_counter() - t0, 5)


# 4 -------------------------------------------------------------------------

def _warm_run(s, degree, corrector):
    f = PolyTimeField([0] * degree + [1])
    sched = TimeSchedule((0.6, 0.45, 0.3, 0.2, 0.1, 0.0), partial=True)
    x0 = np.zeros(1)
    hist = [VelocityEvalRecord(0.6 + 0.15 * k, f.velocity(x0, 0.6 + 0.15 * k), x0) for k in range(s - 1, 0, -1)]
    traj = sample(SolverConfig("flow", sched, s, use_corrector=corrector), f, x0, history=hist)
    exact = np.array([(t ** (degree + 1) - 0.6 ** (degree + 1)) / (degree + 1) for t in sched.times])
    got = np.array([st[0] for st in traj.states])
    return got, exact


def test_c04_polynomial_exactness():
    t0 = time.perf_counter()
    errs = {}
    for s in (2, 3):
        got, exact = _warm_run(s, s - 1, False)
        errs[f"s={s} pred"] = abs(got[-1] - exact[-1])
        got, exact = _warm_run(s, s, True)
        # the final endpoint is never corrected (that would cost an extra evaluation)
        errs[f"s={s} corr"] = np.max(np.abs(got[1:-1] - exact[1:-1]))
    worst = max(errs.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in errs.items())
    assert report(4, "polynomial exactness", worst <= 1e-9, detail, time.perf_counter() - t0, 5)


# 5 -------------------------------------------------------------------------

SLOPES = [
    ("euler", dict(method="euler"), 1.0, 0.2),
    ("heun", dict(method="heun"), 2.0, 0.2),
    ("rk3", dict(method="rk3"), 3.0, 0.3),
    ("flow s=2", dict(method="flow", order=2), 2.0, 0.3),
    ("flow s=3", dict(method="flow", order=3), 3.0, 0.3),
    ("flow s=2+c", dict(method="flow", order=2, use_corrector=True), 3.0, 0.4),
]


def test_c05_convergence_slopes():
    t0 = time.perf_counter()
    f = affine_field()
    x = np.random.default_rng(5).standard_normal((16, 2))
    exact = f.exact_endpoint(x, 1.0, 0.0)
    ns = [20, 40, 80, 160]
    ok, parts = True, []
    for name, kw, target, tol in SLOPES:
        errs = [np.sqrt(np.mean(np.sum((sample(SolverConfig(schedule=make_uniform_schedule(n), **kw), f, x).final - exact) ** 2, -1))) for n in ns]
        slope = fit_order(ns, errs).slope
        ok &= abs(slope - target) <= tol
        parts.append(f"{name} {slope:.2f}")
    assert report(5, "convergence slopes", ok, ", ".join(parts), time.perf_counter() - t0, 60)


# 6 -------------------------------------------------------------------------

def test_c06_nfe_accounting():
    t0 = time.perf_counter()
    f = affine_field()
    sched = make_uniform_schedule(10)
    got = {}
    for name, kw in [("flow", dict(method="flow", order=2, use_corrector=True)), ("euler", dict(method="euler")),
                     ("heun", dict(method="heun")), ("rk3", dict(method="rk3"))]:
        counter = FunctionField(f.velocity, dim=2)
        traj = sample(SolverConfig(schedule=sched, **kw), counter, np.ones(2))
        assert counter.nfe == traj.nfe
        got[name] = traj.nfe
    want = {"flow": 10, "euler": 10, "heun": 20, "rk3": 30}
    detail = ", ".join(f"{k}={v}" for k, v in got.items())
    assert report(6, "NFE accounting", got == want, detail, time.perf_counter() - t0, 1)


# 7 -------------------------------------------------------------------------

def _values(res):
    out = {}
    for c in res.cells:
        for m, v in (c.values or {}).items():
            out[(c.spec.method.value, c.spec.order, c.spec.corrector, c.nfe, m)] = v
    return out


@pytest.mark.slow
def test_c07_mixture_direction_of_effect():
    t0 = time.perf_counter()
    cfg = parse_config(mixture_config_dict(trials=2000, metrics=["rmse", "w2", "energy"]))
    res = run_sweep(cfg, write=False)
    v = _values(res)
    flow, eul = ("flow", 2, True), ("euler", 1, False)
    ok = not res.failed
    parts = []
    for n in (7, 8, 9, 10):
        ok &= v[(*flow, n, "rmse")] < v[(*eul, n, "rmse")]
        parts.append(f"NFE{n} {v[(*flow, n, 'rmse')]:.4f}<{v[(*eul, n, 'rmse')]:.4f}")
    for m in ("w2", "energy"):
        ok &= v[(*flow, 10, m)] < v[(*eul, 10, m)]
        parts.append(f"{m}@10 {v[(*flow, 10, m)]:.4f}<{v[(*eul, 10, m)]:.4f}")
    assert report(7, "mixture direction of effect", ok, "; ".join(parts), time.perf_counter() - t0, 120)


# 8 -------------------------------------------------------------------------

@pytest.mark.slow
def test_c08_ablation_ordering():
    t0 = time.perf_counter()
    solvers = [{"method": "flow", "order": s, "corrector": False} for s in (1, 2, 3)]
    cfg = parse_config(mixture_config_dict(trials=2000, nfe=[10], solvers=solvers))
    v = _values(run_sweep(cfg, write=False))
    r1, r2, r3 = (v[("flow", s, False, 10, "rmse")] for s in (1, 2, 3))
    ok = r3 < r2 < r1
    assert report(8, "ablation ordering", ok, f"s3 {r3:.4f} < s2 {r2:.4f} < s1 {r1:.4f}", time.perf_counter() - t0, 60)


# 9 -------------------------------------------------------------------------

def mc_velocity(field, x, t, n, rng):
    """Self-normalised importance estimate of E[x1 - x0 | x_t = x] and its
    delta-method standard error.

    Draws whichever endpoint makes the other one a deterministic function of
    ``x`` and weights by the density of that other endpoint."""
    d = x.size
    if t >= 0.5:
        x0 = field.sample_data(n, rng)
        x1 = (x - (1 - t) * x0) / t
        logw = -0.5 * np.sum(x1**2, -1)
    else:
        x1 = rng.standard_normal((n, d))
        x0 = (x - t * x1) / (1 - t)
        logw = field.log_density_data(x0)
    w = np.exp(logw - logw.max())
    w /= w.sum()
    y = x1 - x0
    est = w @ y
    se = np.sqrt((w**2) @ (y - est) ** 2)
    return est, se


def test_c09_mixture_oracle():
    t0 = time.perf_counter()
    field = mixture_field()
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(50):
        t = rng.uniform(0.05, 0.95)
        x = t * rng.standard_normal(2) + (1 - t) * field.sample_data(1, rng)[0]
        est, se = mc_velocity(field, x, t, 100_000, rng)
        z = np.abs(eval_gm_flow(field, x, t) - est) / se
        worst = max(worst, float(np.max(z)))
    assert report(9, "mixture Monte-Carlo oracle", worst <= 3.0, f"max |z| {worst:.2f} over 50 points", time.perf_counter() - t0, 60)


# 10 ------------------------------------------------------------------------

def test_c10_cli_determinism(tmp_path):
    t0 = time.perf_counter()
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(mixture_config_dict(metrics=["rmse", "w2", "energy"]), indent=2))
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        proc = subprocess.run([sys.executable, "-m", "flowsolve", "sweep", "--config", str(cfg), "--out", str(out), "--seed", "3"],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append((out / "sweep.csv").read_bytes())
    assert report(10, "CLI determinism", outs[0] == outs[1], f"{len(outs[0])} bytes identical", time.perf_counter() - t0, 30)


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    fails = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_c"):
            try:
                fn(Path(tempfile.mkdtemp())) if "tmp_path" in fn.__code__.co_varnames else fn()
            except AssertionError:
                fails += 1
    sys.exit(1 if fails else 0)
