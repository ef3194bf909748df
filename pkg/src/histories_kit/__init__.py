"""Consistent-histories toolkit: projective decompositions, history families,
CHSH machinery, hidden-variable feasibility, and reproducible sampling."""

from __future__ import annotations

from .config import TOLERANCES, Tolerances
from .errors import (
    DimensionMismatchError,
    InconsistentFamilyError,
    InvalidPDIError,
    MalformedLocalPDIError,
    NonCommutingABError,
    NonCommutingError,
    ParseError,
    PointerTooSmallError,
    ProbabilityNormalizationError,
    ResolutionError,
    ToolkitError,
    VerificationFailedError,
    ZeroProbabilityConditionError,
    ZeroProbabilityOutcomeError,
)
from .hilbert import (
    PDI,
    GridWavefunction,
    Ket,
    Observable,
    Operator,
    Projector,
    Region,
    builtin_operator,
    common_refinement,
    commutes,
    partial_trace,
    pdi_compatible,
    pdi_validate,
    possesses,
    region_projector,
    spectral_decompose,
    tensor_product,
    tensor_state,
)
from .histories import (
    ConsistencyReport,
    HistoryFamily,
    MeasurementModel,
    ProbabilityTable,
    StandardFamilies,
    TimeGrid,
    build_measurement_model,
    chain_vector,
    conditional_probability,
    consistency_check,
    family_probabilities,
    standard_families,
)
from .bell import (
    SINGLET_OPTIMAL_ANGLES_DEG,
    CHSHOperators,
    CHSHValue,
    CollapseResult,
    CorrelationData,
    DeterministicStrategy,
    FeasibilityReport,
    LHVModel,
    NeonSetup,
    SettingPair,
    chsh_operator,
    chsh_value,
    collapse_conditional,
    joint_probabilities,
    lambda_model_fixed_settings,
    lhv_deterministic_bound,
    lhv_feasibility,
    neon_setup,
    no_signaling_check,
    sigma_zx,
    singlet_chsh_operators,
    singlet_state,
)
from .sampler import (
    EmpiricalCHSH,
    RunConfig,
    SampleResult,
    empirical_chsh,
    sample_pdi,
    uniform_stream,
)

__version__ = "0.1.0"
