"""Weakly-driven quantum-walk hypothesis tests and small-n Pauli channel screening."""

__version__ = "0.1.0"

from .channels import KrausChannel, build_controlled_overwrite, build_reset, build_reverse_overwrite, dilate
from .estimators import PauliEigenvalueScreen, WeakWalkTest
from .matcore import DensityMatrix, partial_trace, tensor, validate_density
from .params import InfeasibleTargetsError, ProtocolTargets, SolvedParams, solve
from .pauli import PauliChannelSpec, PauliTestConfig, run_estimation_demo
from .protocol import Verdict, decide, run_double_stage, run_single_stage
from .survival import SurvivalCurve, survival_curve
from .walk import WalkConfig, classify_drive, walk_channel, walk_unitary

__all__ = [
    "DensityMatrix", "InfeasibleTargetsError", "KrausChannel", "PauliChannelSpec", "PauliEigenvalueScreen",
    "PauliTestConfig", "ProtocolTargets", "SolvedParams", "SurvivalCurve", "Verdict", "WalkConfig",
    "WeakWalkTest", "build_controlled_overwrite", "build_reset", "build_reverse_overwrite", "classify_drive",
    "decide", "dilate", "partial_trace", "run_double_stage", "run_estimation_demo", "run_single_stage",
    "solve", "survival_curve", "tensor", "validate_density", "walk_channel", "walk_unitary",
]
