"""Constrained minimax optimization by a first-order augmented Lagrangian
method, with certified stationarity/KKT residuals and oracle counting."""

from .core import (ConstrainedMinimaxProblem, GradCheckReport, MultiplierPair,
                   OracleCounters, ProblemConstants, SolveTrace, TraceRow,
                   TRACE_COLUMNS, eval_al, eval_al_x, eval_objective,
                   finite_diff_check, instrument)
from .errors import (FeasibilityNotFound, InvalidInput, InvalidParameter,
                     IterationLimitExceeded, MissingConstant, NotFound,
                     NumericalFailure, SolverError)
from .prox import (fbs_step, positive_part, project_nonneg_ball, prox_box,
                   prox_l1, prox_zero)
from .scc import (SafeguardLimits, SccParams, SccProblem, SccResult,
                  make_params, solve_scc)
from .ncc import NccConfig, NccProblem, NccResult, build_subproblem, solve_ncc
from .alm import (AlmConfig, AlmOutput, al_subproblem, choose_init,
                  lipschitz_Lk, schedule_length, solve_alm, update_multipliers)
from .kkt import (KktResiduals, StationarityCertificate, certify_stationarity,
                  kkt_residuals)
from . import bounds, problems

__version__ = "0.1.0"

__all__ = [
    "ConstrainedMinimaxProblem", "GradCheckReport", "MultiplierPair",
    "OracleCounters", "ProblemConstants", "SolveTrace", "TraceRow",
    "TRACE_COLUMNS", "eval_al", "eval_al_x", "eval_objective",
    "finite_diff_check", "instrument",
    "FeasibilityNotFound", "InvalidInput", "InvalidParameter",
    "IterationLimitExceeded", "MissingConstant", "NotFound",
    "NumericalFailure", "SolverError",
    "fbs_step", "positive_part", "project_nonneg_ball", "prox_box",
    "prox_l1", "prox_zero",
    "SafeguardLimits", "SccParams", "SccProblem", "SccResult", "make_params",
    "solve_scc",
    "NccConfig", "NccProblem", "NccResult", "build_subproblem", "solve_ncc",
    "AlmConfig", "AlmOutput", "al_subproblem", "choose_init", "lipschitz_Lk",
    "schedule_length", "solve_alm", "update_multipliers",
    "KktResiduals", "StationarityCertificate", "certify_stationarity",
    "kkt_residuals",
    "bounds", "problems",
]
