"""Cached multistep flow-ODE samplers and benchmark tools.

>>> import numpy as np
>>> from flowsolve import SolverConfig, make_uniform_schedule, sample
>>> from flowsolve.benchmarks import mixture_field
>>> cfg = SolverConfig("flow", make_uniform_schedule(10), order=2, use_corrector=True)
>>> traj = sample(cfg, mixture_field(), np.zeros((4, 2)))
>>> traj.nfe
10
"""
from .coeffs import StepCoefficients, compute_c, node_weights, solve_b, step_coefficients
from .core import (
    CountingField,
    FlowSolveError,
    FunctionField,
    HistoryBuffer,
    InvalidArgumentError,
    InvalidStateError,
    NumericalFailureError,
    SingularSystemError,
    TimeSchedule,
    VelocityEvalRecord,
    VelocityField,
    history_pop_newest,
    history_push,
    make_shifted_schedule,
    make_uniform_schedule,
)
from .fields import AffineField, GaussianMixtureFlowField, GridField, PolyTimeField
from .metrics import ConvergenceResult, endpoint_error, energy_distance, fit_order, gaussian_w2
from .solvers import (
    Method,
    SolverConfig,
    SolverStepError,
    TrajectoryRecord,
    sample,
    step_euler,
    step_flow_correct,
    step_flow_predict,
    step_heun,
    step_rk3,
)

__version__ = "0.1.0"
