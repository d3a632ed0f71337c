//! Synthetic two-group cohort experiments.
//!
//! Each recruited user is active on day 1 and survives each further day with
//! probability `1 - churn_rate`, so `P(active on day t) = (1 - churn)^(t - 1)`.
//! An active user earns `daily_revenue * exp(sd * z - sd^2 / 2)` per day with
//! `z` standard normal; the `-sd^2 / 2` shift keeps the expected daily revenue
//! of an active user at exactly `daily_revenue`, so the analytic truth
//! `sum_t r (1 - churn)^(t - 1)` is the true expected cumulative value.
//!
//! Users are processed in fixed chunks of [`USERS_PER_CHUNK`]; chunk `c` of
//! group `g` reads the random stream `(seed, g, c)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::baseline::UserCumulative;
use crate::bootstrap::Decision;
use crate::error::{Error, Result};
use crate::par::map_indexed;
use crate::rng::stream_rng;
use crate::series::DailySeries;

pub const USERS_PER_CHUNK: usize = 4096;
pub const DEFAULT_EVALUATION_DAY: u32 = 14;
pub const DEFAULT_TRUTH_DAY: u32 = 60;

pub const CONTROL_LABEL: &str = "control";
pub const TEST_LABEL: &str = "test";

const CONTROL_STREAM_KEY: u64 = 0;
const TEST_STREAM_KEY: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupParams {
    pub n_users: usize,
    /// Expected revenue of an active user per day.
    pub daily_revenue: f64,
    /// Per-day churn hazard.
    pub churn_rate: f64,
    /// Standard deviation of the per-user, per-day log-normal revenue noise.
    pub revenue_noise_sd: f64,
}

impl GroupParams {
    fn validate(&self, which: &str) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(format!("{which}: {msg}")));
        if self.n_users < 1 {
            return bad("n_users must be >= 1".into());
        }
        if !(self.daily_revenue.is_finite() && self.daily_revenue > 0.0) {
            return bad(format!("daily_revenue {} must be > 0", self.daily_revenue));
        }
        if !(0.0..1.0).contains(&self.churn_rate) {
            return bad(format!("churn_rate {} outside [0, 1)", self.churn_rate));
        }
        if !(self.revenue_noise_sd.is_finite() && self.revenue_noise_sd >= 0.0) {
            return bad(format!("revenue_noise_sd {} must be >= 0", self.revenue_noise_sd));
        }
        Ok(())
    }

    /// Expected cumulative revenue per recruited user through `day`.
    pub fn expected_cumulative(&self, day: u32) -> f64 {
        let r = self.daily_revenue;
        if self.churn_rate == 0.0 {
            return r * f64::from(day);
        }
        let survive = 1.0 - self.churn_rate;
        r * (1.0 - survive.powi(day as i32)) / self.churn_rate
    }

    /// Expected average revenue per recruited user on `day`.
    pub fn expected_daily(&self, day: u32) -> f64 {
        self.daily_revenue * (1.0 - self.churn_rate).powi(day as i32 - 1)
    }
}

/// Generative parameters of a two-group experiment.
///
/// On disk this is one flat JSON object; see [`ScenarioFile`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioFile", into = "ScenarioFile")]
pub struct SimScenario {
    pub control: GroupParams,
    pub test: GroupParams,
    pub horizon_days: u32,
    pub seed: u64,
    pub evaluation_day: u32,
    pub truth_day: u32,
}

/// Flat on-disk form of [`SimScenario`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub control_n_users: usize,
    pub control_daily_revenue: f64,
    pub control_churn_rate: f64,
    pub control_revenue_noise_sd: f64,
    pub test_n_users: usize,
    pub test_daily_revenue: f64,
    pub test_churn_rate: f64,
    pub test_revenue_noise_sd: f64,
    pub horizon_days: u32,
    pub seed: u64,
    #[serde(default = "default_evaluation_day")]
    pub evaluation_day: u32,
    #[serde(default = "default_truth_day")]
    pub truth_day: u32,
}

fn default_evaluation_day() -> u32 {
    DEFAULT_EVALUATION_DAY
}

fn default_truth_day() -> u32 {
    DEFAULT_TRUTH_DAY
}

impl TryFrom<ScenarioFile> for SimScenario {
    type Error = Error;

    fn try_from(f: ScenarioFile) -> Result<Self> {
        let scenario = SimScenario {
            control: GroupParams {
                n_users: f.control_n_users,
                daily_revenue: f.control_daily_revenue,
                churn_rate: f.control_churn_rate,
                revenue_noise_sd: f.control_revenue_noise_sd,
            },
            test: GroupParams {
                n_users: f.test_n_users,
                daily_revenue: f.test_daily_revenue,
                churn_rate: f.test_churn_rate,
                revenue_noise_sd: f.test_revenue_noise_sd,
            },
            horizon_days: f.horizon_days,
            seed: f.seed,
            evaluation_day: f.evaluation_day,
            truth_day: f.truth_day,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

impl From<SimScenario> for ScenarioFile {
    fn from(s: SimScenario) -> Self {
        ScenarioFile {
            control_n_users: s.control.n_users,
            control_daily_revenue: s.control.daily_revenue,
            control_churn_rate: s.control.churn_rate,
            control_revenue_noise_sd: s.control.revenue_noise_sd,
            test_n_users: s.test.n_users,
            test_daily_revenue: s.test.daily_revenue,
            test_churn_rate: s.test.churn_rate,
            test_revenue_noise_sd: s.test.revenue_noise_sd,
            horizon_days: s.horizon_days,
            seed: s.seed,
            evaluation_day: s.evaluation_day,
            truth_day: s.truth_day,
        }
    }
}

impl SimScenario {
    /// Both groups drawn from the same process.
    pub fn identical(params: GroupParams, horizon_days: u32, seed: u64) -> Self {
        Self {
            control: params,
            test: params,
            horizon_days,
            seed,
            evaluation_day: DEFAULT_EVALUATION_DAY,
            truth_day: DEFAULT_TRUTH_DAY.min(horizon_days),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.control.validate("control")?;
        self.test.validate("test")?;
        if self.evaluation_day < 1 {
            return Err(Error::InvalidConfig("evaluation_day must be >= 1".into()));
        }
        if !(self.evaluation_day < self.truth_day && self.truth_day <= self.horizon_days) {
            return Err(Error::InvalidConfig(format!(
                "need evaluation_day < truth_day <= horizon_days, got {} / {} / {}",
                self.evaluation_day, self.truth_day, self.horizon_days
            )));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_users(mut self, n_users: usize) -> Self {
        self.control.n_users = n_users;
        self.test.n_users = n_users;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Group with the higher expected cumulative value at `day`; ties go to control.
    pub fn expected_winner(&self, day: u32) -> Decision {
        if self.test.expected_cumulative(day) > self.control.expected_cumulative(day) {
            Decision::Test
        } else {
            Decision::Control
        }
    }

    /// Relative lead of test over control in expected cumulative value at `day`.
    pub fn expected_lift(&self, day: u32) -> f64 {
        self.test.expected_cumulative(day) / self.control.expected_cumulative(day) - 1.0
    }

    /// First day on which the sign of the expected cumulative difference
    /// differs from its sign on day 1, searching up to `max_day`.
    pub fn crossover_day(&self, max_day: u32) -> Option<u32> {
        let diff = |d| self.test.expected_cumulative(d) - self.control.expected_cumulative(d);
        let initial = diff(1).signum();
        if diff(1) == 0.0 {
            return None;
        }
        (2..=max_day).find(|&d| diff(d).signum() != initial)
    }
}

/// Preset mirroring a short-term win that turns into a long-term loss.
///
/// Test earns more per active day but churns faster. Expected cumulative
/// revenue per user, test relative to control: about +2.2% at day 14, +0.9% at
/// day 28, -1.0% at day 60 and -2.0% at day 90. The curves cross on day 41.
pub fn crossover_scenario() -> SimScenario {
    SimScenario {
        control: GroupParams {
            n_users: 100_000,
            daily_revenue: 0.0225,
            churn_rate: 0.035,
            revenue_noise_sd: 0.5,
        },
        test: GroupParams {
            n_users: 100_000,
            daily_revenue: 0.02333,
            churn_rate: 0.03733,
            revenue_noise_sd: 0.5,
        },
        horizon_days: 90,
        seed: 2014,
        evaluation_day: DEFAULT_EVALUATION_DAY,
        truth_day: DEFAULT_TRUTH_DAY,
    }
}

/// Simulated outcome for one group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupOutcome {
    pub group_label: String,
    /// Revenue summed over users per day, divided by recruited users; `horizon_days` entries.
    pub daily_average: Vec<f64>,
    pub active_users: Vec<usize>,
    pub at_evaluation: UserCumulative,
    pub at_truth: UserCumulative,
}

impl GroupOutcome {
    /// Daily series up to the last day with any active user.
    pub fn series(&self) -> Result<DailySeries> {
        let len = self.active_users.iter().take_while(|&&a| a > 0).count();
        DailySeries::consecutive(self.group_label.clone(), self.daily_average[..len].to_vec())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedExperiment {
    pub control: GroupOutcome,
    pub test: GroupOutcome,
    /// Analytic winner at `truth_day`.
    pub true_winner: Decision,
    pub expected_control_at_truth: f64,
    pub expected_test_at_truth: f64,
}

struct ChunkResult {
    revenue: Vec<f64>,
    active: Vec<usize>,
    at_evaluation: Vec<f64>,
    at_truth: Vec<f64>,
}

fn simulate_chunk(params: &GroupParams, scenario: &SimScenario, key: u64, chunk: usize) -> ChunkResult {
    let horizon = scenario.horizon_days as usize;
    let first = chunk * USERS_PER_CHUNK;
    let users = USERS_PER_CHUNK.min(params.n_users - first);
    let mut rng = stream_rng(scenario.seed, key, chunk as u64);

    let sd = params.revenue_noise_sd;
    let log_survive = (1.0 - params.churn_rate).ln();
    let mut out = ChunkResult {
        revenue: vec![0.0; horizon],
        active: vec![0; horizon],
        at_evaluation: Vec::with_capacity(users),
        at_truth: Vec::with_capacity(users),
    };

    for _ in 0..users {
        // active on days 1..=lifetime
        let lifetime = if params.churn_rate == 0.0 {
            horizon
        } else {
            let u = 1.0 - rng.random::<f64>();
            let extra = (u.ln() / log_survive).floor();
            if extra >= horizon as f64 {
                horizon
            } else {
                1 + extra as usize
            }
        };
        let (mut cum_eval, mut cum_truth) = (0.0, 0.0);
        for day in 1..=lifetime.min(horizon) {
            let revenue = if sd > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                params.daily_revenue * (sd * z - 0.5 * sd * sd).exp()
            } else {
                params.daily_revenue
            };
            out.revenue[day - 1] += revenue;
            out.active[day - 1] += 1;
            if day <= scenario.evaluation_day as usize {
                cum_eval += revenue;
            }
            if day <= scenario.truth_day as usize {
                cum_truth += revenue;
            }
        }
        out.at_evaluation.push(cum_eval);
        out.at_truth.push(cum_truth);
    }
    out
}

fn simulate_group(params: &GroupParams, scenario: &SimScenario, key: u64, label: &str) -> GroupOutcome {
    let horizon = scenario.horizon_days as usize;
    let chunks = params.n_users.div_ceil(USERS_PER_CHUNK);
    let parts = map_indexed(chunks, |c| simulate_chunk(params, scenario, key, c));

    let mut revenue = vec![0.0; horizon];
    let mut active_users = vec![0; horizon];
    let mut at_evaluation = Vec::with_capacity(params.n_users);
    let mut at_truth = Vec::with_capacity(params.n_users);
    for part in parts {
        for d in 0..horizon {
            revenue[d] += part.revenue[d];
            active_users[d] += part.active[d];
        }
        at_evaluation.extend(part.at_evaluation);
        at_truth.extend(part.at_truth);
    }
    let n = params.n_users as f64;
    GroupOutcome {
        group_label: label.to_string(),
        daily_average: revenue.into_iter().map(|r| r / n).collect(),
        active_users,
        at_evaluation: UserCumulative {
            group_label: label.to_string(),
            values: at_evaluation,
        },
        at_truth: UserCumulative {
            group_label: label.to_string(),
            values: at_truth,
        },
    }
}

/// Runs both groups of the scenario. Deterministic in `scenario.seed`.
pub fn simulate(scenario: &SimScenario) -> Result<SimulatedExperiment> {
    scenario.validate()?;
    let control = simulate_group(&scenario.control, scenario, CONTROL_STREAM_KEY, CONTROL_LABEL);
    let test = simulate_group(&scenario.test, scenario, TEST_STREAM_KEY, TEST_LABEL);
    Ok(SimulatedExperiment {
        control,
        test,
        true_winner: scenario.expected_winner(scenario.truth_day),
        expected_control_at_truth: scenario.control.expected_cumulative(scenario.truth_day),
        expected_test_at_truth: scenario.test.expected_cumulative(scenario.truth_day),
    })
}
