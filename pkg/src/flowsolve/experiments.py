"""Config-driven solver sweeps and convergence studies.

A config is one JSON object::

    {
      "field":    {"kind": "gaussian_mixture", "weights": [...], "means": [[...]], "std": 0.5},
      "solvers":  [{"method": "euler"}, {"method": "flow", "order": 2, "corrector": true}],
      "schedule": {"kind": "uniform"},            # or {"kind": "shifted", "shift": 3.0}
      "nfe":      [7, 8, 9, 10],
      "trials":   2000,
      "seed":     0,
      "metrics":  ["rmse"],                       # rmse, linf, w2, energy
      "out":      "results"
    }

Field kinds: ``gaussian_mixture``, ``affine`` (``A``, ``b``), ``poly_time``
(``coeffs``, ``dim``) and ``grid`` (``path``).

In a sweep each ``nfe`` entry is an evaluation budget; a method using ``k``
evaluations per step gets ``nfe // k`` steps and the CSV reports the count
actually spent.  In a convergence study each entry is a number of steps.

Initial noise is drawn from ``numpy.random.Generator(Philox(seed))``; exact
target samples (for ``w2``/``energy``) come from ``Philox(seed).jumped()``.
"""
from __future__ import annotations

import csv
import io
import json
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Any

import numpy as np

from .coeffs import MAX_ORDER
from .core import FlowSolveError, VelocityField, make_shifted_schedule, make_uniform_schedule
from .fields import AffineField, GaussianMixtureFlowField, PolyTimeField
from .metrics import ConvergenceResult, energy_distance, fit_order, rmse, sample_w2
from .solvers import Method, SolverConfig, expected_nfe, sample
from .svgplot import emit_svg_plot

__all__ = [
    "CSV_HEADER",
    "ConfigError",
    "SolverSpec",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "build_field",
    "run_sweep",
    "run_convergence",
    "write_csv",
    "REFERENCE_STEPS",
]

CSV_HEADER = ["solver", "order", "corrector", "schedule", "nfe", "trial_count", "metric", "value", "elapsed_ms"]
REFERENCE_STEPS = 1000
METRICS = ("rmse", "linf", "w2", "energy")
FIELD_KINDS = ("gaussian_mixture", "affine", "poly_time", "grid")


class ConfigError(FlowSolveError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass(frozen=True)
class SolverSpec:
    method: Method
    order: int = 1
    corrector: bool = False

    @property
    def label(self) -> str:
        if self.method is not Method.FLOW:
            return self.method.value
        return f"flow(s={self.order}{',corrector' if self.corrector else ''})"


@dataclass
class ExperimentConfig:
    field: dict
    solvers: list[SolverSpec]
    nfe: list[int]
    trials: int
    seed: int = 0
    schedule: dict = dc_field(default_factory=lambda: {"kind": "uniform"})
    metrics: list[str] = dc_field(default_factory=lambda: ["rmse"])
    out: str = "results"
    timing: bool = False
    base_dir: Path = dc_field(default_factory=Path.cwd)

    @property
    def schedule_label(self) -> str:
        if self.schedule["kind"] == "shifted":
            return f"shifted({self.schedule['shift']:g})"
        return "uniform"

    def make_schedule(self, n_steps: int):
        if self.schedule["kind"] == "shifted":
            return make_shifted_schedule(n_steps, self.schedule["shift"])
        return make_uniform_schedule(n_steps)


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def parse_config(raw: dict, text: str | None = None, base_dir=None) -> ExperimentConfig:
    """Validate a decoded config.  ``text`` (the JSON source) lets errors
    point at the offending line."""

    def fail(key, msg):
        raise ConfigError(msg, _line_of(text, key))

    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", 1)
    for key in ("field", "solvers", "nfe", "trials"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}", 1)

    fld = raw["field"]
    if not isinstance(fld, dict) or fld.get("kind") not in FIELD_KINDS:
        fail("field", f"field.kind must be one of {FIELD_KINDS}")

    solvers = []
    if not isinstance(raw["solvers"], list) or not raw["solvers"]:
        fail("solvers", "solvers must be a non-empty list")
    for s in raw["solvers"]:
        if not isinstance(s, dict):
            fail("solvers", "each solver must be an object")
        try:
            method = Method(s.get("method"))
        except ValueError:
            fail("solvers", f"unknown solver method {s.get('method')!r}")
        order = s.get("order", 1 if method is not Method.FLOW else 2)
        corrector = s.get("corrector", False)
        if not isinstance(order, int) or not 1 <= order <= MAX_ORDER:
            fail("order", f"solver order must be an integer in [1, {MAX_ORDER}], got {order!r}")
        if not isinstance(corrector, bool):
            fail("corrector", "corrector must be true or false")
        if method is not Method.FLOW:
            order, corrector = 1, False
        solvers.append(SolverSpec(method, order, corrector))

    nfe = raw["nfe"]
    if not isinstance(nfe, list) or not nfe or not all(isinstance(n, int) and n >= 1 for n in nfe):
        fail("nfe", "nfe must be a non-empty list of positive integers")
    trials = raw["trials"]
    if not isinstance(trials, int) or isinstance(trials, bool) or trials < 1:
        fail("trials", f"trials must be a positive integer, got {trials!r}")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        fail("seed", "seed must be a non-negative integer")

    sched = raw.get("schedule", {"kind": "uniform"})
    if not isinstance(sched, dict) or sched.get("kind") not in ("uniform", "shifted"):
        fail("schedule", "schedule.kind must be 'uniform' or 'shifted'")
    if sched["kind"] == "shifted":
        shift = sched.get("shift")
        if not isinstance(shift, (int, float)) or shift <= 0:
            fail("shift", "shifted schedule needs a positive 'shift'")
        sched = {"kind": "shifted", "shift": float(shift)}

    metrics = raw.get("metrics", ["rmse"])
    if not isinstance(metrics, list) or not metrics or any(m not in METRICS for m in metrics):
        fail("metrics", f"metrics must be a non-empty subset of {METRICS}")

    cfg = ExperimentConfig(
        field=fld,
        solvers=solvers,
        nfe=list(nfe),
        trials=trials,
        seed=seed,
        schedule=sched,
        metrics=list(metrics),
        out=str(raw.get("out", "results")),
        timing=bool(raw.get("timing", False)),
        base_dir=Path(base_dir) if base_dir else Path.cwd(),
    )
    try:
        build_field(cfg)
    except (FlowSolveError, ValueError, TypeError, KeyError, OSError) as exc:
        fail("field", f"invalid field: {exc}")
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    return parse_config(raw, text, base_dir=path.parent)


def build_field(cfg: ExperimentConfig) -> VelocityField:
    f = cfg.field
    kind = f["kind"]
    if kind == "gaussian_mixture":
        return GaussianMixtureFlowField(f["weights"], f["means"], f["std"])
    if kind == "affine":
        return AffineField(f["A"], f.get("b"))
    if kind == "poly_time":
        return PolyTimeField(f["coeffs"], dim=int(f.get("dim", 1)))
    from .gridfile import load_grid_field

    p = Path(f["path"])
    return load_grid_field(p if p.is_absolute() else cfg.base_dir / p)


def initial_noise(cfg: ExperimentConfig, dim: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    return rng.standard_normal((cfg.trials, dim))


def target_samples(cfg: ExperimentConfig, field: VelocityField, reference: np.ndarray) -> np.ndarray:
    if isinstance(field, GaussianMixtureFlowField):
        rng = np.random.Generator(np.random.Philox(cfg.seed).jumped())
        return field.sample_data(cfg.trials, rng)
    return reference


def reference_endpoints(field: VelocityField, x1: np.ndarray) -> np.ndarray:
    """Exact t=0 endpoints where known, else dense RK-3 on 1000 uniform steps."""
    if isinstance(field, (AffineField, PolyTimeField)):
        return field.exact_endpoint(x1, 1.0, 0.0)
    cfg = SolverConfig(Method.RK3, make_uniform_schedule(REFERENCE_STEPS))
    return sample(cfg, field, x1).final


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("FLOWSOLVE_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class CellResult:
    spec: SolverSpec
    nfe: int | None
    values: dict[str, float] | None
    elapsed_ms: float
    error: str | None = None


def _run_cell(cfg, field, spec: SolverSpec, n_steps: int, x1, reference, targets) -> CellResult:
    t0 = time.perf_counter()
    try:
        if n_steps < 1:
            raise FlowSolveError(f"budget too small for {spec.label}")
        sc = SolverConfig(spec.method, cfg.make_schedule(n_steps), spec.order, spec.corrector)
        traj = sample(sc, field, x1)
        xN = traj.final
        wanted = set(cfg.metrics)
        if (reference is None and wanted & {"rmse", "linf"}) or (targets is None and wanted & {"w2", "energy"}):
            raise FlowSolveError("reference solution unavailable")
        vals = {}
        for m in cfg.metrics:
            if m == "rmse":
                vals[m] = rmse(xN, reference)
            elif m == "linf":
                vals[m] = float(np.max(np.abs(xN - reference)))
            elif m == "w2":
                vals[m] = sample_w2(xN, targets)
            elif m == "energy":
                vals[m] = energy_distance(xN, targets)
        if not all(np.isfinite(v) for v in vals.values()):
            raise FlowSolveError("metric is not finite")
        return CellResult(spec, traj.nfe, vals, (time.perf_counter() - t0) * 1e3)
    except (FlowSolveError, FloatingPointError, ValueError) as exc:
        nfe = expected_nfe(spec.method, max(n_steps, 0))
        return CellResult(spec, nfe, None, (time.perf_counter() - t0) * 1e3, str(exc))


def _rows(cfg: ExperimentConfig, cells: list[CellResult]) -> list[list[str]]:
    rows = []
    for c in cells:
        for m in cfg.metrics:
            value = "failed" if c.values is None else repr(c.values[m])
            rows.append([
                c.spec.method.value,
                str(c.spec.order),
                str(c.spec.corrector).lower(),
                cfg.schedule_label,
                str(c.nfe),
                str(cfg.trials),
                m,
                value,
                f"{c.elapsed_ms:.3f}" if cfg.timing else "",
            ])
    return rows


def write_csv(path, rows: list[list[str]]) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(rows)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


@dataclass
class SweepResult:
    rows: list[list[str]]
    cells: list[CellResult]
    csv_path: Path | None = None

    @property
    def failed(self) -> bool:
        return any(c.error for c in self.cells)


def run_sweep(cfg: ExperimentConfig, out_dir=None, write: bool = True) -> SweepResult:
    """Every (solver, NFE budget) cell on the same seeded initial noise."""
    field = build_field(cfg)
    dim = field.dim or int(cfg.field.get("dim", 1))
    x1 = initial_noise(cfg, dim)
    try:
        reference = reference_endpoints(field, x1)
    except FlowSolveError:
        # no trustworthy reference: every cell that needs it reports "failed"
        reference = None
    targets = None
    if {"w2", "energy"} & set(cfg.metrics):
        targets = target_samples(cfg, field, reference)

    jobs = []
    for spec in cfg.solvers:
        per_step = expected_nfe(spec.method, 1)
        for budget in cfg.nfe:
            jobs.append((spec, budget // per_step))
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        futures = [pool.submit(_run_cell, cfg, field, s, n, x1, reference, targets) for s, n in jobs]
        cells = [f.result() for f in futures]
    rows = _rows(cfg, cells)
    res = SweepResult(rows, cells)
    if write:
        out = Path(out_dir or cfg.out)
        res.csv_path = write_csv(out / "sweep.csv", rows)
    return res


@dataclass
class ConvergenceReport:
    results: dict[SolverSpec, ConvergenceResult]
    rows: list[list[str]]
    failures: dict[SolverSpec, str]
    csv_path: Path | None = None
    svg_path: Path | None = None

    @property
    def failed(self) -> bool:
        return bool(self.failures)


def run_convergence(cfg: ExperimentConfig, out_dir=None, write: bool = True) -> ConvergenceReport:
    """Endpoint RMSE against the exact solution for each step count, plus
    the fitted order per solver."""
    field = build_field(cfg)
    if not isinstance(field, (AffineField, PolyTimeField)):
        raise ConfigError("convergence needs a field with an exact solution (affine or poly_time)")
    steps = sorted(cfg.nfe)
    if len(steps) < 4:
        raise ConfigError("convergence needs at least 4 step counts")
    ratios = np.array(steps[1:]) / np.array(steps[:-1])
    if not np.allclose(ratios, ratios[0]) or ratios[0] <= 1:
        raise ConfigError("convergence step counts must form an increasing geometric progression")
    dim = field.dim or int(cfg.field.get("dim", 1))
    x1 = initial_noise(cfg, dim)
    exact = field.exact_endpoint(x1, 1.0, 0.0)

    results, failures, rows = {}, {}, []
    for spec in cfg.solvers:
        errors = []
        try:
            for n in steps:
                sc = SolverConfig(spec.method, cfg.make_schedule(n), spec.order, spec.corrector)
                errors.append(rmse(sample(sc, field, x1).final, exact))
            res = fit_order(steps, errors)
        except FlowSolveError as exc:
            failures[spec] = str(exc)
            continue
        results[spec] = res
        common = [spec.method.value, str(spec.order), str(spec.corrector).lower(), cfg.schedule_label]
        for n, e in zip(steps, errors):
            rows.append(common + [str(n), str(cfg.trials), "rmse", repr(e), ""])
        rows.append(common + ["", str(cfg.trials), "slope", repr(res.slope), ""])
        rows.append(common + ["", str(cfg.trials), "r_squared", repr(res.r_squared), ""])

    report = ConvergenceReport(results, rows, failures)
    if write:
        out = Path(out_dir or cfg.out)
        report.csv_path = write_csv(out / "convergence.csv", rows)
        if results:
            series = {s.label: (r.step_counts, r.errors) for s, r in results.items()}
            report.svg_path = emit_svg_plot(
                series, out / "convergence.svg", xlabel="steps N", ylabel="endpoint RMSE",
                logx=True, logy=True, title="convergence",
            )
    return report


def plot_csv(csv_path, svg_path) -> Path:
    """Plot ``value`` against ``nfe`` for every (solver, metric) in a result CSV."""
    series: dict[str, tuple[list[float], list[float]]] = {}
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ConfigError(f"{csv_path}: unexpected CSV header {reader.fieldnames}")
        for row in reader:
            if not row["nfe"] or row["value"] == "failed":
                continue
            label = row["solver"]
            if row["solver"] == "flow":
                label += f"(s={row['order']}{',corrector' if row['corrector'] == 'true' else ''})"
            key = f"{label} {row['metric']}"
            xs, ys = series.setdefault(key, ([], []))
            xs.append(float(row["nfe"]))
            ys.append(float(row["value"]))
    if not series:
        raise ConfigError(f"{csv_path}: no plottable rows")
    logy = all(v > 0 for _, ys in series.values() for v in ys)
    return emit_svg_plot(series, svg_path, xlabel="NFE", ylabel="value", logy=logy)


def config_to_dict(cfg: ExperimentConfig) -> dict[str, Any]:
    return {
        "field": cfg.field,
        "solvers": [{"method": s.method.value, "order": s.order, "corrector": s.corrector} for s in cfg.solvers],
        "schedule": cfg.schedule,
        "nfe": cfg.nfe,
        "trials": cfg.trials,
        "seed": cfg.seed,
        "metrics": cfg.metrics,
        "out": cfg.out,
    }
