//! Short-term comparison: a one-sided Welch t-test on per-user cumulative
//! response at the evaluation day, with no trend extrapolation.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::bootstrap::{check_alpha, Decision};
use crate::error::{Error, Result};
use crate::stats::{mean, sample_variance};

/// Per-user cumulative response through some day. Zeros are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserCumulative {
    pub group_label: String,
    pub values: Vec<f64>,
}

impl UserCumulative {
    pub fn new(group_label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidSeries(format!(
                "{} users; a t-test needs at least 2 per group",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!("non-finite user value {bad}")));
        }
        Ok(Self {
            group_label: group_label.into(),
            values,
        })
    }

    pub fn n_users(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    /// `(mean_test - mean_control) / se`.
    pub t: f64,
    /// Welch-Satterthwaite degrees of freedom.
    pub df: f64,
    /// One-sided p-value for "test mean exceeds control mean".
    pub p_test_greater: f64,
}

/// Welch's unequal-variance t-test.
///
/// The upper tail comes from `statrs`' Student-t survival function, which
/// evaluates the regularized incomplete beta function (accurate well past 1e-6).
/// When both groups are constant but differ, `t` is infinite and the p-value is
/// 0 or 1; the degrees of freedom fall back to `n1 + n2 - 2`.
pub fn welch_t_test(control: &UserCumulative, test: &UserCumulative) -> Result<WelchResult> {
    let (n_c, n_t) = (control.n_users() as f64, test.n_users() as f64);
    if n_c < 2.0 || n_t < 2.0 {
        return Err(Error::InvalidSeries("a t-test needs at least 2 users per group".into()));
    }
    let (m_c, m_t) = (control.mean(), test.mean());
    let se_c = sample_variance(&control.values) / n_c;
    let se_t = sample_variance(&test.values) / n_t;
    let se2 = se_c + se_t;

    if se2 == 0.0 {
        if m_c == m_t {
            return Err(Error::ZeroVariance);
        }
        let test_ahead = m_t > m_c;
        return Ok(WelchResult {
            t: if test_ahead { f64::INFINITY } else { f64::NEG_INFINITY },
            df: n_c + n_t - 2.0,
            p_test_greater: if test_ahead { 0.0 } else { 1.0 },
        });
    }

    let t = (m_t - m_c) / se2.sqrt();
    let df = se2 * se2 / (se_c * se_c / (n_c - 1.0) + se_t * se_t / (n_t - 1.0));
    let dist =
        StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidConfig(format!("Student-t with {df} dof: {e}")))?;
    Ok(WelchResult {
        t,
        df,
        p_test_greater: dist.sf(t),
    })
}

/// `Test` iff `p_one_sided <= alpha` (boundary counts as significant).
pub fn decide_winner_standard(p_one_sided: f64, alpha: f64) -> Decision {
    if p_one_sided <= alpha {
        Decision::Test
    } else {
        Decision::Control
    }
}

/// Welch test plus decision, validating `alpha`.
pub fn standard_decision(
    control: &UserCumulative,
    test: &UserCumulative,
    alpha: f64,
) -> Result<(WelchResult, Decision)> {
    check_alpha(alpha)?;
    let result = welch_t_test(control, test)?;
    Ok((result, decide_winner_standard(result.p_test_greater, alpha)))
}
