//! Two-group evaluation: bootstrap both groups, test the difference, and
//! collect everything a caller needs to report or plot.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bootstrap::{
    bootstrap_ltv_with_band, decide_winner, difference_test, BootstrapConfig, Decision, ExtrapolationBand,
    LtvDistribution, DEFAULT_ALPHA,
};
use crate::error::{Error, Result};
use crate::model::{fit_loglog, WEEKDAY_TERMS};
use crate::series::DailySeries;
use crate::stats::{mean, quantile_sorted};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluateOptions {
    pub bootstrap: BootstrapConfig,
    pub alpha: f64,
    /// Echoed into the report; the offset itself is applied when loading data.
    pub log_offset: Option<f64>,
}

impl EvaluateOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            bootstrap: BootstrapConfig::new(seed),
            alpha: DEFAULT_ALPHA,
            log_offset: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LtvQuantiles {
    pub q025: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q975: f64,
}

impl LtvQuantiles {
    pub fn of(samples: &[f64]) -> Self {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            q025: quantile_sorted(&sorted, 0.025),
            q25: quantile_sorted(&sorted, 0.25),
            q50: quantile_sorted(&sorted, 0.5),
            q75: quantile_sorted(&sorted, 0.75),
            q975: quantile_sorted(&sorted, 0.975),
        }
    }

    pub fn is_ordered(&self) -> bool {
        self.q025 <= self.q25 && self.q25 <= self.q50 && self.q50 <= self.q75 && self.q75 <= self.q975
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub day: u32,
    pub median: f64,
    pub p05: f64,
    pub p95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub label: String,
    pub n_observations: usize,
    pub last_observed_day: u32,
    pub beta0: f64,
    pub beta1: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub weekday_coefs: Option<[f64; WEEKDAY_TERMS]>,
    pub sigma2: f64,
    pub ltv_point_estimate: f64,
    pub ltv_mean: f64,
    pub ltv_quantiles: LtvQuantiles,
    pub band: Vec<BandPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub seed: u64,
    pub iterations: usize,
    pub horizon: u32,
    pub include_observed_pseudo: bool,
    pub log_offset: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub control: GroupReport,
    pub test: GroupReport,
    pub p_control_minus_test_positive: f64,
    pub p_test_minus_control_positive: f64,
    pub alpha: f64,
    pub decision: Decision,
    pub config: ReportConfig,
}

impl EvaluationReport {
    /// True when `decision` agrees with the decision rule applied to the
    /// reported proportion.
    pub fn is_consistent(&self) -> bool {
        decide_winner(self.p_test_minus_control_positive, self.alpha) == self.decision
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

fn group_report(series: &DailySeries, dist: &LtvDistribution, band: &ExtrapolationBand) -> Result<GroupReport> {
    let fit = fit_loglog(series)?;
    Ok(GroupReport {
        label: series.group_label().to_string(),
        n_observations: series.len(),
        last_observed_day: series.last_day(),
        beta0: fit.beta0(),
        beta1: fit.beta1(),
        weekday_coefs: fit.weekday_coefs().copied(),
        sigma2: fit.sigma2(),
        ltv_point_estimate: dist.point_estimate,
        ltv_mean: mean(&dist.samples),
        ltv_quantiles: LtvQuantiles::of(&dist.samples),
        band: band
            .days
            .iter()
            .enumerate()
            .map(|(i, &day)| BandPoint {
                day,
                median: band.median[i],
                p05: band.p05[i],
                p95: band.p95[i],
            })
            .collect(),
    })
}

/// Full pipeline for one experiment.
pub fn evaluate(control: &DailySeries, test: &DailySeries, options: &EvaluateOptions) -> Result<EvaluationReport> {
    let (control_dist, control_band) = bootstrap_ltv_with_band(control, &options.bootstrap)?;
    let (test_dist, test_band) = bootstrap_ltv_with_band(test, &options.bootstrap)?;
    let verdict = difference_test(&control_dist, &test_dist, options.alpha)?;
    let cfg = &options.bootstrap;
    Ok(EvaluationReport {
        control: group_report(control, &control_dist, &control_band)?,
        test: group_report(test, &test_dist, &test_band)?,
        p_control_minus_test_positive: verdict.p_control_minus_test_positive,
        p_test_minus_control_positive: verdict.p_test_minus_control_positive,
        alpha: verdict.alpha,
        decision: verdict.decision,
        config: ReportConfig {
            seed: cfg.seed,
            iterations: cfg.iterations,
            horizon: cfg.horizon.horizon,
            include_observed_pseudo: cfg.horizon.include_observed_pseudo,
            log_offset: options.log_offset,
        },
    })
}

/// Picks the control and test series out of a file's groups.
///
/// The file must hold exactly two groups, unless both labels are the same: then
/// the one named series plays both roles (an A/A comparison) and other groups
/// are ignored. Both roles then share one random stream, so every bootstrap
/// difference is an exact tie.
pub fn select_groups(
    mut series: Vec<DailySeries>,
    control_label: &str,
    test_label: &str,
) -> Result<(DailySeries, DailySeries)> {
    let take = |series: &mut Vec<DailySeries>, label: &str| {
        series
            .iter()
            .position(|s| s.group_label() == label)
            .map(|i| series.swap_remove(i))
            .ok_or_else(|| Error::GroupSelection(format!("group '{label}' not found in input")))
    };
    if control_label == test_label {
        let both = take(&mut series, control_label)?;
        return Ok((both.clone(), both));
    }
    let found = series.len();
    if found != 2 {
        let labels: Vec<&str> = series.iter().map(DailySeries::group_label).collect();
        return Err(Error::GroupSelection(format!(
            "expected exactly two groups, found {found} ({})",
            labels.join(", ")
        )));
    }
    let control = take(&mut series, control_label)?;
    let test = take(&mut series, test_label)?;
    Ok((control, test))
}

/// Plot-data CSV: `group,day,observed,extrap_median,extrap_p05,extrap_p95`,
/// one row per group and day of the horizon. `observed` is empty on days
/// without an observation.
pub fn write_plot_csv<W: Write>(
    writer: W,
    report: &EvaluationReport,
    control: &DailySeries,
    test: &DailySeries,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["group", "day", "observed", "extrap_median", "extrap_p05", "extrap_p95"])
        .map_err(csv_err)?;
    for (group, series) in [(&report.control, control), (&report.test, test)] {
        let mut next = 0;
        for point in &group.band {
            let observed = if series.days().get(next) == Some(&point.day) {
                next += 1;
                series.values()[next - 1].to_string()
            } else {
                String::new()
            };
            w.write_record([
                group.label.clone(),
                point.day.to_string(),
                observed,
                point.median.to_string(),
                point.p05.to_string(),
                point.p95.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}
