"""Branching processes with interactions and their moment-dual jump-diffusions."""

from .analysis import (
    AbsorbingRegimeError,
    Distribution,
    ScaleTable,
    dual_fixation_limit,
    empirical_distribution,
    fixation_probability,
    fixation_time_bound,
    fixation_time_green,
    in_closed_form_family,
    scale_function,
    stationary_closed_form,
    stationary_numeric,
    stationary_residual,
)
from .ctmc import (
    BatchResult,
    GeneratorMatrix,
    MCEstimate,
    build_generator,
    gf_samples,
    hitting_time,
    hitting_times,
    mc_generating_function,
    simulate_z,
    simulate_z_batch,
)
from .dual import (
    DualUndefinedError,
    fixation_batch,
    fixation_sample,
    mc_moment,
    mu_of_x,
    sigma2_of_x,
    simulate_wf_efficiency,
    simulate_x,
    simulate_x_batch,
    wf_efficiency_step,
)
from .harness import (
    STANDARD_MODELS,
    DualityReport,
    ProbeReport,
    cdi_probe,
    duality_check,
    duality_grid,
    explosion_probe,
    grid_verdict,
    parity_probe,
    uniform_convergence_probe,
)
from .model import (
    InteractionParams,
    LambdaMeasure,
    LongTermClass,
    Regime,
    catastrophe_rates,
    classify_long_term,
    classify_regime,
    derive,
    drift_at,
    drift_closed_form,
    lambda_nk,
    load_params,
    params_from_dict,
    params_to_dict,
    transition_rates,
)
from .rng import make_rng

__version__ = "0.1.0"
