//! Price formation driven by inert agents: rate functions, the fluid limit,
//! the feedback and no-feedback simulators, and the limit processes.

pub mod feedback;
pub mod fluid;
pub mod limits;
pub mod no_feedback;
pub mod rates;
pub mod toys;

pub use feedback::{simulate_feedback, MarketConfig, MarketParams, PricePath};
pub use fluid::{integrate_rk4, mean_rates, solve_fluid, FluidSolution, MeanRates};
pub use limits::{
    estimate_sigma, fou_unit_variance, gamma_cov, gamma_cov_scaled, on_off_gamma, process_x, rescaled_fluctuation, rescaled_imbalance,
    simulate_fou_limit, simulate_z, CovGrid, FouLimitSampler, SecondOrderPath, SigmaEstimate, ZSampler,
};
pub use no_feedback::{no_feedback_reference, simulate_no_feedback, simulate_no_feedback_mapped, Elasticity, OccupationIntegral};
pub use rates::{RateDef, RateSpec, ScalarFn, SEPARABILITY_NON_DEGENERATE};
pub use toys::{simulate_fractional_vol, simulate_random_coeff, CoefficientLaw, FracVolPath, ScalarLaw};
