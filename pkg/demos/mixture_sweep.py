# %% [markdown]
# # NFE sweep through the experiment runner
#
# Same code path as ``flowsolve sweep``, driven from Python.  Writes a CSV
# and an SVG to ``demo_out/``.

# %%
from flowsolve.benchmarks import mixture_config_dict
from flowsolve.experiments import parse_config, plot_csv, run_sweep

cfg = parse_config(mixture_config_dict(
    solvers=[
        {"method": "euler"},
        {"method": "heun"},
        {"method": "flow", "order": 2, "corrector": True},
        {"method": "flow", "order": 3},
    ],
    nfe=[6, 8, 10, 12],
    trials=500,
    metrics=["rmse", "energy"],
))
res = run_sweep(cfg, out_dir="demo_out")
for row in res.rows:
    print(",".join(row))

# %%
print(plot_csv(res.csv_path, "demo_out/sweep.svg"))
