"""Dirac electron states in a chiral two-wave electromagnetic space-time crystal."""

__version__ = "0.1.0"

from .chiral_core import (  # noqa: E402
    DEFAULT_PARAMS,
    ChiralParams,
    DispersionBranch,
    StructuralCoefficients,
    solve_branch,
    solve_dispersion,
)
from .observables import ground_state_locator, observables_at, sigma10, splitting_scan, velocity_zero_crossing  # noqa: E402
from .superposition import (  # noqa: E402
    SuperpositionSpec,
    bi_fields,
    bi_means,
    bi_periods,
    direct_fields,
    precession_params,
    uni_fields,
    uni_means,
)
from .wavefunction import PlaneState, basic_states, residual_R  # noqa: E402

__all__ = [
    "__version__",
    "ChiralParams",
    "DEFAULT_PARAMS",
    "DispersionBranch",
    "StructuralCoefficients",
    "solve_branch",
    "solve_dispersion",
    "observables_at",
    "sigma10",
    "splitting_scan",
    "ground_state_locator",
    "velocity_zero_crossing",
    "SuperpositionSpec",
    "uni_fields",
    "uni_means",
    "bi_fields",
    "bi_means",
    "bi_periods",
    "direct_fields",
    "precession_params",
    "PlaneState",
    "basic_states",
    "residual_R",
]
