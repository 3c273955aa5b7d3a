"""System-wide credit concentration risk from overlapping loan portfolios.

Build a risk-weighted lender/borrower exposure network, project it onto the
lenders (impact matrix, Dependency Index), run null-model and stress
scenarios, and turn the results into a co-exposure capital add-on on top of
IRB capital and the granularity adjustment.
"""

from .network import (
    Borrower,
    BorrowerGraph,
    ExposureNetwork,
    ImpactMatrix,
    NetworkError,
    StepWeightParams,
    apply_pd_weights,
    apply_step_weights,
    asymmetry_check,
    borrower_projection,
    coexposure_kernel,
    impact_matrix,
    load_exposures,
    reconcile_categories,
)
from .concentration import (
    ConcentrationReport,
    concentration_report,
    dependency_index,
    dependency_index_sys,
    dependency_indices,
    hhi,
    overlap_risk_composition,
    overlap_stats,
)
from .irb import (
    CapitalParams,
    borrower_capital,
    granularity_adjustment,
    irb_k,
    maturity_adjustment,
    portfolio_k,
    uvw_gamma_curve,
)
from .addon import (
    CoexposureParams,
    capital_report,
    double_count_ratio,
    k_ce,
    k_tilde,
    lender_inputs,
    total_capital,
    x_ce,
)
from .scenarios import (
    borrower_stress,
    downgrade,
    generate_ds1_like,
    generate_ds2_like,
    grow_overlap,
    randomize_within_risk,
    shuffled_network,
)
from .montecarlo import SimConfig, SimResult, downturn_pd, simulate_losses, simulate_network
from .calibration import CalibrationResult, capital_gap, fit_alpha_eta

__version__ = "0.1.0"
