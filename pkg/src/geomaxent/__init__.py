"""Maximum-entropy estimation of geometric quantum states on CP^{D-1}."""

__version__ = "0.1.0"

from .core import (
    DensityMatrix,
    DiscreteEnsemble,
    EigenSystem,
    HermitianMatrix,
    eigh,
    ensemble_density,
    observable_value,
    validate_density,
)
from .manifold import (
    PurePoint,
    UniformSampler,
    from_homogeneous,
    fs_total_volume,
    sample_uniform,
    to_homogeneous,
)
from .partition import (
    divided_diff_exp,
    log_divided_diff_exp,
    log_partition,
    moments_eigenbasis,
    moments_matrix,
)
from .maxent import (
    MaxEntState,
    SolveReport,
    ansatz_audit,
    gamma_objective,
    gaussian_ansatz,
    geometric_entropy,
    solve_multipliers,
    solve_multipliers_reference,
)
from .montecarlo import (
    estimate_density_matrix,
    estimate_entropy,
    estimate_observable,
    sample_maxent,
)
from .tomography import Povm, linear_inversion, outcome_probabilities, simulate_counts
