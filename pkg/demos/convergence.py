# %% [markdown]
# # Empirical order on a linear field
#
# ``dx/dt = A x + b`` has an exact endpoint via the matrix exponential.
# Halving the step size should cut the error by ``2**p``.

# %%
import numpy as np

from flowsolve import SolverConfig, fit_order, make_uniform_schedule, sample
from flowsolve.benchmarks import affine_field

field = affine_field()
x = np.array([1.0, 0.5])
exact = field.exact_endpoint(x, 1.0, 0.0)
steps = [20, 40, 80, 160]

runs = {
    "euler": dict(method="euler"),
    "heun": dict(method="heun"),
    "rk3": dict(method="rk3"),
    "flow s=2": dict(method="flow", order=2),
    "flow s=3": dict(method="flow", order=3),
    "flow s=2 + corrector": dict(method="flow", order=2, use_corrector=True),
}

# %%
for name, kw in runs.items():
    errs = [np.linalg.norm(sample(SolverConfig(schedule=make_uniform_schedule(n), **kw), field, x).final - exact) for n in steps]
    res = fit_order(steps, errs)
    print(f"{name:22s} slope {res.slope:5.2f}  errors {' '.join(f'{e:.1e}' for e in errs)}")

# %% [markdown]
# Without the start-up correction the first Euler step dominates and order 3
# falls back to 2.

# %%
errs = [np.linalg.norm(sample(SolverConfig("flow", make_uniform_schedule(n), 3, warmup_corrector=False), field, x).final - exact)
        for n in steps]
print("flow s=3, plain start-up", round(fit_order(steps, errs).slope, 2))
