"""Standard test problems shared by the test-suite, demos and configs."""
from __future__ import annotations

from .fields import AffineField, GaussianMixtureFlowField

MIXTURE_WEIGHTS = [0.4, 0.6]
MIXTURE_MEANS = [[-2.0, 1.0], [2.0, -1.0]]
MIXTURE_STD = 0.5

AFFINE_A = [[-0.5, 1.0], [-1.0, -0.3]]
AFFINE_B = [0.2, -0.1]


def mixture_field() -> GaussianMixtureFlowField:
    """Two well-separated, unequally weighted 2-D components."""
    return GaussianMixtureFlowField(MIXTURE_WEIGHTS, MIXTURE_MEANS, MIXTURE_STD)


def affine_field() -> AffineField:
    """Damped rotation plus drift; non-normal enough to exercise all error terms."""
    return AffineField(AFFINE_A, AFFINE_B)


def mixture_config_dict(**overrides) -> dict:
    cfg = {
        "field": {"kind": "gaussian_mixture", "weights": MIXTURE_WEIGHTS, "means": MIXTURE_MEANS, "std": MIXTURE_STD},
        "solvers": [{"method": "euler"}, {"method": "flow", "order": 2, "corrector": True}],
        "schedule": {"kind": "uniform"},
        "nfe": [7, 8, 9, 10],
        "trials": 200,
        "seed": 0,
        "metrics": ["rmse"],
    }
    cfg.update(overrides)
    return cfg
