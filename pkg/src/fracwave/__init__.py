"""Finite element solvers for the time-fractional wave equation with a variable order alpha(t).

Two solvers share one discretization: a time-stepping scheme (``run_tss``,
O(M N^2)) and a divide-and-conquer all-at-once solver (``run_fdac``,
O(M N log^2 N)); they return the same frames up to rounding.
"""

from .fdac import BlockSystemView, assemble_rhs, fdac_solve, run_fdac
from .fem import (
    MeshMismatchError,
    MeshSpec,
    OperatorPair,
    SeparableSource,
    apply_mass,
    apply_stiffness,
    assemble_operators,
    grid_l2_diff,
    interpolate,
    l2_error,
    load_vector,
)
from .kernel import (
    AssumptionError,
    AssumptionReport,
    LagWeights,
    Preset,
    VariableOrder,
    check_assumption_a,
    digamma,
    eval_g,
    eval_k,
    lag_weights,
    toeplitz_first_column,
)
from .oracles import (
    ManufacturedCase,
    RateTable,
    conv_poly3,
    converge_table,
    manufactured_case,
    source_ex1,
    source_ex2,
    source_residual,
    spectral_mode_solve,
)
from .stepsolver import StepSolver, build_step_solver
from .toeplitz import ToeplitzSpec, build_L_block, toeplitz_matvec
from .tss import ProblemSetup, Trajectory, initial_frames, run_tss

__version__ = "0.1.0"
