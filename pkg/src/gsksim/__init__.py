"""gsksim: group secret-key generation on a 3-node chain, with insider
attacks and the power-ratio / Doppler-spread detectors, plus a deterministic
Monte Carlo PD/PFA harness."""

__version__ = "0.1.0"

from .attack import (
    AttackAction,
    DifferentKeyGeneralStrategy,
    DifferentKeyStaticStrategy,
    HonestStrategy,
    LowRateStrategy,
    different_key_general_action,
    different_key_static_action,
    honest_action,
    low_rate_action,
    make_strategy,
)
from .channel import (
    ChannelTrace,
    DopplerParams,
    bessel_j0,
    doppler_coefficient,
    generate_trace,
    lag1_autocorrelation,
)
from .detection import (
    DetectionReport,
    DopplerResult,
    PowerRatioResult,
    doppler_detect,
    fuse,
    power_ratio_detect,
)
from .experiment import (
    AttackSpec,
    CellResult,
    ExperimentConfig,
    TrialResult,
    derive_trial_seed,
    estimate_pd_pfa,
    eta_from_db,
    run_trial,
    sweep,
)
from .keybits import (
    KeyMaterial,
    KeyRate,
    NOMINAL_MAGNITUDE_THRESHOLD,
    key_rate,
    keys_from_session,
    mismatch_rate,
    quantize,
    structure_diagnostics,
)
from .protocol import (
    NoiseModel,
    RoundObservations,
    SessionObservations,
    calibrate_noise,
    run_round,
    run_session,
)
