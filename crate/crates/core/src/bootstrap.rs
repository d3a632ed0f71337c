//! Residual bootstrap of lifetime value and the two-group difference test.
//!
//! For one group the full sample is fitted once. Each iteration then draws
//! `n` log-space residuals with replacement, adds them to the original fitted
//! log values, refits on the pseudo-data and sums the refitted curve out to the
//! horizon. Iteration `j` reads only the random stream
//! `(seed, fnv1a(group label), j)` (see [`crate::rng`]), so results do not
//! depend on scheduling, and groups with different labels are resampled
//! independently.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    extrapolate_ltv, for_each_daily_value, log_day_table, ExtrapolationConfig, LogLogDesign, LogLogFit,
};
use crate::par::try_map_indexed;
use crate::rng::{draw_index, fnv1a, stream_rng};
use crate::series::DailySeries;
use crate::stats::quantile_sorted;

pub const DEFAULT_ITERATIONS: usize = 2000;
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Slack on the `1 - p <= alpha` comparison so a proportion sitting exactly on
/// the boundary is not lost to rounding in `1 - p`.
const BOUNDARY_EPS: f64 = 1e-12;

/// Which group the decision policy picks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Control,
    Test,
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Decision::Control => "control",
            Decision::Test => "test",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub iterations: usize,
    pub seed: u64,
    pub horizon: ExtrapolationConfig,
}

impl BootstrapConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            iterations: DEFAULT_ITERATIONS,
            seed,
            horizon: ExtrapolationConfig::default(),
        }
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_horizon(mut self, horizon: ExtrapolationConfig) -> Self {
        self.horizon = horizon;
        self
    }

    fn validate(&self, series: &DailySeries) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("bootstrap needs at least one iteration".into()));
        }
        if self.horizon.horizon < series.last_day() {
            return Err(Error::HorizonTooShort {
                horizon: self.horizon.horizon,
                max_day: series.last_day(),
            });
        }
        Ok(())
    }
}

/// Bootstrap lifetime values for one group, ordered by iteration index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtvDistribution {
    pub group_label: String,
    pub samples: Vec<f64>,
    /// Lifetime value of the original (non-resampled) fit.
    pub point_estimate: f64,
}

/// Per-day quantiles of the bootstrap daily curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationBand {
    pub days: Vec<u32>,
    pub median: Vec<f64>,
    pub p05: Vec<f64>,
    pub p95: Vec<f64>,
}

/// Draws `fit.n()` residual indices from `rng` and writes
/// `fitted_log_i + residual[k_i]` into `out`.
fn resample_log_values<R: RngCore + ?Sized>(fit: &LogLogFit, rng: &mut R, out: &mut Vec<f64>) {
    let residuals = fit.residuals();
    let n = residuals.len();
    out.clear();
    out.extend(fit.fitted_log().iter().map(|f| f + residuals[draw_index(rng, n)]));
}

/// One residual-bootstrap pseudo series: values `exp(fitted_log_i + e*_i)`.
pub fn resample_pseudo_series<R: RngCore + ?Sized>(
    fit: &LogLogFit,
    series: &DailySeries,
    rng: &mut R,
) -> Result<DailySeries> {
    if fit.n() != series.len() || fit.days() != series.days() {
        return Err(Error::InvalidSeries("fit was not produced from this series".into()));
    }
    let mut log_values = Vec::with_capacity(fit.n());
    resample_log_values(fit, rng, &mut log_values);
    series.with_values(log_values.into_iter().map(f64::exp).collect())
}

/// Stream key of a group: FNV-1a of its label bytes.
pub fn group_stream_key(label: &str) -> u64 {
    fnv1a(label.as_bytes())
}

struct Engine<'a> {
    fit: LogLogFit,
    design: LogLogDesign,
    log_days: Vec<f64>,
    key: u64,
    config: &'a BootstrapConfig,
}

impl<'a> Engine<'a> {
    fn new(series: &DailySeries, config: &'a BootstrapConfig) -> Result<Self> {
        config.validate(series)?;
        let design = LogLogDesign::for_series(series)?;
        let log_values: Vec<f64> = series.values().iter().map(|v| v.ln()).collect();
        let fit = design.fit(&log_values);
        Ok(Self {
            fit,
            design,
            log_days: log_day_table(config.horizon.horizon),
            key: group_stream_key(series.group_label()),
            config,
        })
    }

    fn point_estimate(&self) -> Result<f64> {
        extrapolate_ltv(&self.fit, None, &self.config.horizon)
    }

    /// Runs iteration `j`; pushes the daily curve into `daily` when given.
    fn iteration(&self, j: usize, mut daily: Option<&mut Vec<f64>>) -> Result<f64> {
        let mut rng = stream_rng(self.config.seed, self.key, j as u64);
        let mut log_star = Vec::with_capacity(self.fit.n());
        resample_log_values(&self.fit, &mut rng, &mut log_star);
        let refit = self.design.fit(&log_star);
        if !refit.beta0().is_finite() || !refit.beta1().is_finite() {
            return Err(Error::DegenerateResample { iteration: j });
        }
        let pseudo: Vec<f64> = log_star.iter().map(|v| v.exp()).collect();
        let mut total = 0.0;
        for_each_daily_value(&refit, Some(&pseudo), &self.config.horizon, &self.log_days, |_, v| {
            total += v;
            if let Some(d) = daily.as_deref_mut() {
                d.push(v);
            }
        })?;
        Ok(total)
    }
}

/// Bootstrap distribution of lifetime value for one group.
pub fn bootstrap_ltv(series: &DailySeries, config: &BootstrapConfig) -> Result<LtvDistribution> {
    let engine = Engine::new(series, config)?;
    let samples = try_map_indexed(config.iterations, |j| engine.iteration(j, None))?;
    Ok(LtvDistribution {
        group_label: series.group_label().to_string(),
        samples,
        point_estimate: engine.point_estimate()?,
    })
}

/// [`bootstrap_ltv`] plus per-day 5/50/95% quantiles of the bootstrap curves.
/// Samples are identical to those of [`bootstrap_ltv`] for the same inputs.
pub fn bootstrap_ltv_with_band(
    series: &DailySeries,
    config: &BootstrapConfig,
) -> Result<(LtvDistribution, ExtrapolationBand)> {
    let engine = Engine::new(series, config)?;
    let horizon = config.horizon.horizon as usize;
    let runs = try_map_indexed(config.iterations, |j| {
        let mut daily = Vec::with_capacity(horizon);
        engine.iteration(j, Some(&mut daily)).map(|ltv| (ltv, daily))
    })?;

    let mut band = ExtrapolationBand {
        days: (1..=config.horizon.horizon).collect(),
        median: Vec::with_capacity(horizon),
        p05: Vec::with_capacity(horizon),
        p95: Vec::with_capacity(horizon),
    };
    let mut column = Vec::with_capacity(runs.len());
    for d in 0..horizon {
        column.clear();
        column.extend(runs.iter().map(|(_, daily)| daily[d]));
        column.sort_by(f64::total_cmp);
        band.median.push(quantile_sorted(&column, 0.5));
        band.p05.push(quantile_sorted(&column, 0.05));
        band.p95.push(quantile_sorted(&column, 0.95));
    }

    let dist = LtvDistribution {
        group_label: series.group_label().to_string(),
        samples: runs.into_iter().map(|(ltv, _)| ltv).collect(),
        point_estimate: engine.point_estimate()?,
    };
    Ok((dist, band))
}

/// Paired bootstrap differences and the resulting decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceVerdict {
    /// `control.samples[j] - test.samples[j]`.
    pub diffs: Vec<f64>,
    /// Fraction of diffs strictly above zero (control ahead).
    pub p_control_minus_test_positive: f64,
    /// Fraction of diffs strictly below zero (test ahead).
    pub p_test_minus_control_positive: f64,
    pub alpha: f64,
    pub decision: Decision,
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig(format!("alpha {alpha} outside [0, 1]")));
    }
    Ok(())
}

/// Pairs the two distributions by iteration index and applies [`decide_winner`].
pub fn difference_test(control: &LtvDistribution, test: &LtvDistribution, alpha: f64) -> Result<DifferenceVerdict> {
    check_alpha(alpha)?;
    if control.samples.len() != test.samples.len() {
        return Err(Error::LengthMismatch {
            control: control.samples.len(),
            test: test.samples.len(),
        });
    }
    if control.samples.is_empty() {
        return Err(Error::InvalidConfig("empty bootstrap distributions".into()));
    }
    let diffs: Vec<f64> = control.samples.iter().zip(&test.samples).map(|(c, t)| c - t).collect();
    let b = diffs.len() as f64;
    let control_ahead = diffs.iter().filter(|&&d| d > 0.0).count() as f64 / b;
    let test_ahead = diffs.iter().filter(|&&d| d < 0.0).count() as f64 / b;
    Ok(DifferenceVerdict {
        diffs,
        p_control_minus_test_positive: control_ahead,
        p_test_minus_control_positive: test_ahead,
        alpha,
        decision: decide_winner(test_ahead, alpha),
    })
}

/// Control unless the bootstrap evidence that test beats control is
/// significant: `Test` iff `1 - p_test_minus_control_positive <= alpha`.
pub fn decide_winner(p_test_minus_control_positive: f64, alpha: f64) -> Decision {
    if 1.0 - p_test_minus_control_positive <= alpha + BOUNDARY_EPS {
        Decision::Test
    } else {
        Decision::Control
    }
}
