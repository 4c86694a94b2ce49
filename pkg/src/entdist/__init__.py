"""Toolkit for Gaussian entanglement distribution with a separable mediator.

Builds and transforms Gaussian states in the covariance-matrix formalism,
certifies separability (PPT and gain-optimized product criterion), simulates
the three-step distribution protocol with correlated classical displacements
and a-posteriori noise correction, inverts the beam-splitter phase-jitter
map, and reconstructs covariance matrices with block error bars from sampled
quadrature data.
"""

from ._version import __version__
from .dephasing import (
    DephasingParams,
    dephase_forward,
    dephase_invert,
    first_moment_matrix,
    jitter_noise_term,
    phase_variance_from_degrees,
)
from .errors import NumericalError, ValidationError
from .eigen import hermitian_eigenvalues, symmetric_eigenvalues
from .protocol import (
    NoisePlan,
    ProtocolConfig,
    ProtocolTrace,
    SampleSet,
    a_posteriori_correct,
    analytic_corrected_state,
    analytic_stage_state,
    apply_loss,
    build_resource_state,
    run_protocol,
    simulate_ensemble,
    standard_noise_plan,
)
from .separability import (
    CriterionPoint,
    PptVerdict,
    classicality_check,
    duan_product,
    optimize_gain,
    ppt_test,
)
from .states import (
    GaussianState,
    QuadratureCombination,
    SymplecticOp,
    apply_symplectic,
    beam_splitter,
    displace,
    min_physicality_eigenvalue,
    partial_transpose,
    phase_shift,
    quadratic_form_variance,
    reduce_to_modes,
    squeezed_vacuum,
    symplectic_form,
    tensor,
    vacuum_state,
)
from .tomography import (
    MeasurementSetting,
    PairStatistics,
    ShapeStats,
    block_errors,
    pair_statistics_from_samples,
    project_pair_statistics,
    reconstruct_covariance,
    shape_statistics,
)
