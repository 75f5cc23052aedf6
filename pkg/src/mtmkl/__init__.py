"""Multi-task multiple kernel learning with exact-penalty descent."""

from ._backend import SMO_BACKEND
from .data import SplitSpec, TaskData, load_dataset, make_tasks, scale_unit_interval, split
from .epf import FitResult, IterationTrace, SolverConfig, fit
from .kernels import KernelBank, KernelSpec, build_bank, combine, eval_kernel, gram_matrix
from .learners import (DualSolution, LearnerKind, LinearizedObjective, SolverError,
                       dual_objective, linearize, maximize_dual)
from .model import TrainedModel, evaluate, load, save
from .theta import FeasibleRegion, ThetaState, solve_lp_ball, solve_lplq, solve_region
from .train import train_model

__version__ = "0.1.0"
