//! Log-domain special functions: erfc, the product weight `w`, the series
//! `f_{N−2}` and `f_∞`, and their leading-order asymptotics.

mod asymptotics;
mod erfc;
mod series;
mod signed_log;
mod weight;

pub use asymptotics::{f_asym_bulk, f_edge, f_transition, transition_uses_bulk_branch, weight_asym, VALIDITY_M};
pub use erfc::{erf, erfc, erfcx, log_erfc};
pub use series::{f_inf, f_series, f_series_generic, TruncatedSeries};
pub use signed_log::{LogSum, SignedLog};
pub use weight::{
    log_weight_direct, log_weight_step, weight, weight_moment, weight_moment_exact, LogWeight, WeightConfig,
};

/// `ln Γ(x)` (libm's `lgamma`, accurate to a few ulp).
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}
