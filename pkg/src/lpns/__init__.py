"""Littlewood-Paley, Lorentz-norm and paraproduct toolkit with a periodic vorticity solver."""

__version__ = "0.1.0"

from .littlewood_paley import (  # noqa: E402
    CutoffSystem,
    DyadicBlocks,
    UndefinedRatioError,
    bernstein_ratio,
    block_grad_l2_norms,
    block_l2_norms,
    build_cutoffs,
    decompose,
    delta_q,
    s_j,
)
from .norms import (  # noqa: E402
    BlockSeries,
    TimeSeries,
    chain_bound,
    embedding_lhs,
    separable_embedding_lhs,
    level_sets,
    lorentz_dual_norm,
    q_norm_sq,
    weak_lp_time_norm,
)
from .paraproduct import AliasingError, bony_split, para_R, para_T  # noqa: E402
from .solver import BlowUpError, CFLError, SolverConfig, SolverState, VorticitySolver, run, step  # noqa: E402
from .spectral import (  # noqa: E402
    Grid,
    SpectralField,
    abc_velocity,
    biot_savart,
    curl,
    inverse_transform,
    leray_project,
    random_field,
    random_velocity,
    transform,
)

__all__ = [
    "AliasingError",
    "BlockSeries",
    "BlowUpError",
    "CFLError",
    "CutoffSystem",
    "DyadicBlocks",
    "Grid",
    "SolverConfig",
    "SolverState",
    "SpectralField",
    "TimeSeries",
    "UndefinedRatioError",
    "VorticitySolver",
    "abc_velocity",
    "bernstein_ratio",
    "biot_savart",
    "block_grad_l2_norms",
    "block_l2_norms",
    "bony_split",
    "build_cutoffs",
    "chain_bound",
    "curl",
    "decompose",
    "delta_q",
    "embedding_lhs",
    "inverse_transform",
    "leray_project",
    "level_sets",
    "lorentz_dual_norm",
    "para_R",
    "para_T",
    "q_norm_sq",
    "random_field",
    "random_velocity",
    "run",
    "s_j",
    "step",
    "transform",
    "weak_lp_time_norm",
]
