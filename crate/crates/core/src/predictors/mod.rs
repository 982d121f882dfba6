//! Online least squares learners.
//!
//! [`OlsState`] is the generic ridge learner; [`LdsLearner`] applies it to
//! fully observed states with regressor `(x_t; u_t)`, and [`ArLearner`] to
//! observations with a lag-ℓ autoregressive regressor.

mod learners;
mod ols;

pub use learners::{ar_features, ArConfig, ArLearner, LdsLearner};
pub use ols::{
    ols_batch_solve, orr_regret_bound, residual_closed_form, run_online, OlsCheckpoint, OlsState,
    OnlineRun, REFACTOR_INTERVAL,
};
