from .aus import aus_step, kaplan_yorke, lyapunov_spectrum
from .basis import ReductionBasis, identity_basis, load_basis, save_basis
from .dmd import DmdResult, dmd, dmd_basis
from .pod import pod_basis
from .reduced_model import (
    OptimalProposal,
    ReducedModel,
    build_reduced_model,
    identity_reduced_model,
)

__all__ = [
    "DmdResult",
    "OptimalProposal",
    "ReducedModel",
    "ReductionBasis",
    "aus_step",
    "build_reduced_model",
    "dmd",
    "dmd_basis",
    "identity_basis",
    "identity_reduced_model",
    "kaplan_yorke",
    "load_basis",
    "lyapunov_spectrum",
    "pod_basis",
    "save_basis",
]
