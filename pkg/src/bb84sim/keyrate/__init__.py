from .decoy import (
    DecoyObservations,
    IntensityObservation,
    YieldBounds,
    decoy_bounds,
    ideal_bounds,
    lp_bounds,
    lp_min_y1,
    model_observations,
    true_single_photon,
)
from .formulas import (
    RateModelParams,
    approx_rate,
    binary_entropy,
    error_threshold,
    gllp_rate,
    model_gain_qber,
    optimize_mu,
    p_multi,
    p_rec,
    single_photon_rate,
)
from .sweep import (
    CSV_COLUMNS,
    MODES,
    SweepRow,
    SweepTemplate,
    cutoff_distance,
    eta_at,
    loglog_slope,
    optimize_rate,
    rows_to_csv,
    sweep_rates,
)
