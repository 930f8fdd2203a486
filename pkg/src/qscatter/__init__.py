"""qscatter: entanglement through complex scattering channels.

Simulation and analysis toolkit for two-photon experiments behind a
multimode scattering medium: channel models and their state isomorphism,
phase-stepping transmission-matrix reconstruction, one-sided unscrambling
with projective measurements only, and Schmidt-number certification from
coincidence tables.
"""

from .bases import (
    BasisFamily,
    check_lambdas,
    mub,
    parse_basis_spec,
    rotate_matrix,
    standard_family,
    tilted,
)
from .certify import (
    CertificationReport,
    TargetState,
    c_lambda,
    estimate_lambda,
    fidelity_exact,
    fidelity_lower_bound,
    fidelity_uniform_closed_form,
    matched_moments,
)
from .channel import (
    ChannelModel,
    EffectiveT,
    ModeEmbedding,
    choi_state,
    compose_two_channels,
    default_embedding,
    drop_reference,
    effective_t,
    haar_channel,
    kraus_tp,
    load_channel,
    load_fixture_lambda,
    load_fixture_tm0,
    save_channel,
    transmitted_state,
)
from .cli import ScenarioConfig, main, run_scenario
from .errors import (
    CertificationFailure,
    ConditioningError,
    ConfigError,
    DegenerateReferenceError,
    DimensionMismatchError,
    InvalidDimensionError,
    NormalizationError,
    TagConflictError,
    ToolkitError,
    UnsupportedDimensionError,
)
from .measure import (
    NOISELESS,
    THETA_GRID,
    CountTable,
    PhaseStepRecord,
    coincidence_prob,
    load_count_table,
    measure_correlations,
    phase_step_scan_e,
    phase_step_scan_s,
    probability_table,
    sample_counts,
    save_count_table,
    zeta_correct,
)
from .numerics import (
    DEFAULT_TOLERANCES,
    ToleranceConfig,
    condition_number,
    dag,
    dist_up_to_scalar,
    haar_unitary,
    is_prime,
    is_unitary,
    load_matrix_csv,
    rng_from,
    save_matrix_csv,
    substream,
)
from .states import (
    BipartiteState,
    SchmidtSpectrum,
    apply_one_sided,
    load_state,
    make_state,
    max_entangled,
    project,
    save_state,
    schmidt,
    weighted_source,
)
from .tomo import (
    EMatrix,
    Reconstruction,
    SMatrix,
    assemble_t,
    extract_e,
    extract_s,
    fix_gauge,
    reconstruct,
    tag_basis,
)
from .unscramble import (
    UnscrambleOperators,
    VOperator,
    alice_kets,
    build_v,
    build_w,
    measure_recovered,
    predict_table,
    recovered_probs,
    slm_eta,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
