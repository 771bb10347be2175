# %% [markdown]
# # Tabulated velocity fields
#
# Sample the closed-form mixture velocity on a grid, save it in the binary
# grid format, reload it and integrate through multilinear interpolation.

# %%
import numpy as np

from flowsolve import SolverConfig, make_uniform_schedule, sample
from flowsolve.benchmarks import mixture_field
from flowsolve.gridfile import load_grid_field, save_grid_field

field = mixture_field()
ts = np.linspace(0.0, 1.0, 41)
ax = np.linspace(-6.0, 6.0, 121)
X, Y = np.meshgrid(ax, ax, indexing="ij")
pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
values = np.stack([field.velocity(pts, t).reshape(ax.size, ax.size, 2) for t in ts])

path = save_grid_field("mixture.flowgrid", values, -6.0, 6.0, 0.0, 1.0)
grid = load_grid_field(path)

# %%
x1 = np.random.default_rng(1).standard_normal((200, 2))
cfg = SolverConfig("flow", make_uniform_schedule(10), order=2, use_corrector=True)
a = sample(cfg, field, x1).final
b = sample(cfg, grid, x1).final
print("max gap between analytic and tabulated runs:", np.abs(a - b).max())
