//! Early detection of lifetime-value winners in A/B tests.
//!
//! Each group's daily average response is fitted with a log-log regression
//! and extrapolated to a lifetime horizon. A residual bootstrap turns the
//! extrapolation into a distribution of lifetime values per group, and the
//! paired bootstrap differences decide the winner: control, unless the
//! evidence that test is better is significant.
//!
//! Alongside the method the crate ships a cohort simulator with geometric
//! churn, a one-sided Welch t-test baseline, and a retrospective harness that
//! scores both methods against the analytic long-run winner.
//!
//! ```
//! use ltv_bootstrap::{bootstrap_ltv, difference_test, BootstrapConfig, DailySeries, Decision};
//!
//! let control = DailySeries::consecutive("control", (1..=14).map(|d| 1.0 / f64::from(d).sqrt()).collect())?;
//! let test = control.with_label("test");
//! let cfg = BootstrapConfig::new(7).with_iterations(100);
//! let verdict = difference_test(&bootstrap_ltv(&control, &cfg)?, &bootstrap_ltv(&test, &cfg)?, 0.05)?;
//! assert_eq!(verdict.decision, Decision::Control);
//! # Ok::<(), ltv_bootstrap::Error>(())
//! ```

mod error;
mod par;
mod stats;

pub mod baseline;
pub mod bootstrap;
pub mod csvio;
pub mod model;
pub mod report;
pub mod retro;
pub mod rng;
pub mod series;
pub mod sim;

pub use baseline::{decide_winner_standard, welch_t_test, UserCumulative, WelchResult};
pub use bootstrap::{
    bootstrap_ltv, bootstrap_ltv_with_band, decide_winner, difference_test, resample_pseudo_series, BootstrapConfig,
    Decision, DifferenceVerdict, ExtrapolationBand, LtvDistribution,
};
pub use csvio::{load_daily_csv, read_daily_csv, save_daily_csv, write_daily_csv};
pub use error::{Error, Result};
pub use model::{extrapolate_ltv, fit_loglog, predict_log, ExtrapolationConfig, LogLogDesign, LogLogFit};
pub use report::{evaluate, select_groups, write_plot_csv, EvaluateOptions, EvaluationReport};
pub use retro::{run_retrospective, RetrospectiveConfig, RetrospectiveSummary};
pub use series::DailySeries;
pub use sim::{crossover_scenario, simulate, GroupParams, SimScenario, SimulatedExperiment};
pub use stats::quantile_sorted;
