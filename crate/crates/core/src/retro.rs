//! Retrospective accuracy harness.
//!
//! Every replicate simulates the scenario, decides at `evaluation_day` with
//! both the bootstrap extrapolation and the Welch test, and scores each
//! decision against the analytic winner at `truth_day`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::baseline::standard_decision;
use crate::bootstrap::{bootstrap_ltv, difference_test, BootstrapConfig, Decision, DEFAULT_ALPHA, DEFAULT_ITERATIONS};
use crate::error::{Error, Result};
use crate::model::ExtrapolationConfig;
use crate::par::try_map_indexed;
use crate::rng::derive_seed;
use crate::sim::{simulate, SimScenario};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrospectiveConfig {
    pub n_experiments: usize,
    pub master_seed: u64,
    pub iterations: usize,
    pub horizon: ExtrapolationConfig,
    pub alpha: f64,
}

impl RetrospectiveConfig {
    pub fn new(n_experiments: usize, master_seed: u64) -> Self {
        Self {
            n_experiments,
            master_seed,
            iterations: DEFAULT_ITERATIONS,
            horizon: ExtrapolationConfig::default(),
            alpha: DEFAULT_ALPHA,
        }
    }

    /// Seeds of replicate `index`: (simulation, bootstrap).
    pub fn replicate_seeds(&self, index: usize) -> (u64, u64) {
        let i = index as u64;
        (
            derive_seed(self.master_seed, 2 * i),
            derive_seed(self.master_seed, 2 * i + 1),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodTally {
    pub success: usize,
    pub failure: usize,
    pub accuracy: f64,
    pub chose_control: usize,
    pub chose_test: usize,
}

impl MethodTally {
    fn from_decisions(decisions: impl Iterator<Item = (Decision, Decision)>) -> Self {
        let mut t = MethodTally {
            success: 0,
            failure: 0,
            accuracy: 0.0,
            chose_control: 0,
            chose_test: 0,
        };
        for (chosen, truth) in decisions {
            if chosen == truth {
                t.success += 1;
            } else {
                t.failure += 1;
            }
            match chosen {
                Decision::Control => t.chose_control += 1,
                Decision::Test => t.chose_test += 1,
            }
        }
        let n = t.success + t.failure;
        t.accuracy = if n == 0 { 0.0 } else { t.success as f64 / n as f64 };
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrospectiveSummary {
    pub n_experiments: usize,
    pub evaluation_day: u32,
    pub truth_day: u32,
    pub true_winner: Decision,
    pub proposed: MethodTally,
    pub standard: MethodTally,
    pub master_seed: u64,
    pub iterations: usize,
    pub horizon: u32,
    pub alpha: f64,
}

impl RetrospectiveSummary {
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub index: usize,
    pub simulation_seed: u64,
    pub bootstrap_seed: u64,
    pub true_winner: Decision,
    pub proposed: Decision,
    pub p_test_minus_control_positive: f64,
    pub standard: Decision,
    pub welch_t: f64,
    pub welch_p: f64,
}

pub fn run_replicate(scenario: &SimScenario, config: &RetrospectiveConfig, index: usize) -> Result<ReplicateOutcome> {
    let (simulation_seed, bootstrap_seed) = config.replicate_seeds(index);
    let experiment = simulate(&scenario.with_seed(simulation_seed))?;
    let eval_day = scenario.evaluation_day;

    let bootstrap = BootstrapConfig {
        iterations: config.iterations,
        seed: bootstrap_seed,
        horizon: config.horizon,
    };
    let control = bootstrap_ltv(&experiment.control.series()?.truncated(eval_day)?, &bootstrap)?;
    let test = bootstrap_ltv(&experiment.test.series()?.truncated(eval_day)?, &bootstrap)?;
    let verdict = difference_test(&control, &test, config.alpha)?;

    let (welch, standard) = standard_decision(
        &experiment.control.at_evaluation,
        &experiment.test.at_evaluation,
        config.alpha,
    )?;

    Ok(ReplicateOutcome {
        index,
        simulation_seed,
        bootstrap_seed,
        true_winner: experiment.true_winner,
        proposed: verdict.decision,
        p_test_minus_control_positive: verdict.p_test_minus_control_positive,
        standard,
        welch_t: welch.t,
        welch_p: welch.p_test_greater,
    })
}

/// Runs all replicates and tabulates both methods' accuracy.
pub fn run_retrospective(
    scenario: &SimScenario,
    config: &RetrospectiveConfig,
) -> Result<(RetrospectiveSummary, Vec<ReplicateOutcome>)> {
    scenario.validate()?;
    if config.n_experiments == 0 {
        return Err(Error::InvalidConfig("n_experiments must be >= 1".into()));
    }
    let outcomes = try_map_indexed(config.n_experiments, |i| {
        run_replicate(scenario, config, i).map_err(|e| Error::Replicate {
            index: i,
            source: Box::new(e),
        })
    })?;

    let summary = RetrospectiveSummary {
        n_experiments: outcomes.len(),
        evaluation_day: scenario.evaluation_day,
        truth_day: scenario.truth_day,
        true_winner: scenario.expected_winner(scenario.truth_day),
        proposed: MethodTally::from_decisions(outcomes.iter().map(|o| (o.proposed, o.true_winner))),
        standard: MethodTally::from_decisions(outcomes.iter().map(|o| (o.standard, o.true_winner))),
        master_seed: config.master_seed,
        iterations: config.iterations,
        horizon: config.horizon.horizon,
        alpha: config.alpha,
    };
    Ok((summary, outcomes))
}

/// Accuracy table: `method,success,failure,accuracy`.
pub fn write_summary_csv<W: Write>(writer: W, summary: &RetrospectiveSummary) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["method", "success", "failure", "accuracy"])
        .map_err(csv_err)?;
    for (name, tally) in [("standard", &summary.standard), ("proposed", &summary.proposed)] {
        w.write_record([
            name.to_string(),
            tally.success.to_string(),
            tally.failure.to_string(),
            tally.accuracy.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per replicate.
pub fn write_replicates_csv<W: Write>(writer: W, outcomes: &[ReplicateOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for o in outcomes {
        w.serialize(o).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}
