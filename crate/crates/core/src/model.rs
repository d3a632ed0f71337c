//! Log-log least squares: `ln Y = b0 + b1 ln T (+ weekday dummies)`.
//!
//! The design depends only on the observation days, so it is factored once
//! ([`LogLogDesign`]) and reused for every bootstrap refit. Regressors are
//! centred before forming the normal equations; the intercept is recovered
//! from the means afterwards.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::DailySeries;

/// Number of weekday dummy coefficients (weekday 0 is the reference category).
pub const WEEKDAY_TERMS: usize = 6;

/// Relative pivot size below which the normal equations are treated as singular.
const PIVOT_TOLERANCE: f64 = 1e-10;

/// How a fitted curve is summed into a lifetime value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtrapolationConfig {
    /// Last day included in the lifetime sum (days `1..=horizon`).
    pub horizon: u32,
    /// Observed days contribute the (pseudo-)data when true, model predictions otherwise.
    pub include_observed_pseudo: bool,
}

impl Default for ExtrapolationConfig {
    fn default() -> Self {
        Self {
            horizon: 365,
            include_observed_pseudo: true,
        }
    }
}

impl ExtrapolationConfig {
    pub fn with_horizon(horizon: u32) -> Self {
        Self {
            horizon,
            ..Self::default()
        }
    }
}

/// Fitted log-log regression.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLogFit {
    beta0: f64,
    beta1: f64,
    weekday_coefs: Option<[f64; WEEKDAY_TERMS]>,
    residuals: Vec<f64>,
    fitted_log: Vec<f64>,
    sigma2: f64,
    days: Vec<u32>,
    weekdays: Option<Vec<u8>>,
}

impl LogLogFit {
    /// A curve with no observations attached: every day of an extrapolation is a
    /// model prediction.
    pub fn from_coefficients(beta0: f64, beta1: f64) -> Self {
        Self {
            beta0,
            beta1,
            weekday_coefs: None,
            residuals: Vec::new(),
            fitted_log: Vec::new(),
            sigma2: 0.0,
            days: Vec::new(),
            weekdays: None,
        }
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    /// Coefficients for weekdays 1..=6, relative to weekday 0.
    pub fn weekday_coefs(&self) -> Option<&[f64; WEEKDAY_TERMS]> {
        self.weekday_coefs.as_ref()
    }

    /// Log-space residuals `ln Y_i - fitted_log_i`.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn fitted_log(&self) -> &[f64] {
        &self.fitted_log
    }

    /// Residual variance with `n - p` degrees of freedom.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn n(&self) -> usize {
        self.residuals.len()
    }

    pub fn days(&self) -> &[u32] {
        &self.days
    }

    pub fn has_weekday_terms(&self) -> bool {
        self.weekday_coefs.is_some()
    }

    /// Weekday of an arbitrary day, continuing the calendar of the first observation.
    pub fn weekday_of(&self, day: u32) -> Option<u8> {
        let weekdays = self.weekdays.as_ref()?;
        let offset = i64::from(day) - i64::from(self.days[0]);
        Some((i64::from(weekdays[0]) + offset).rem_euclid(7) as u8)
    }

    pub fn predict_log(&self, day: u32, weekday: Option<u8>) -> Result<f64> {
        if day == 0 {
            return Err(Error::InvalidConfig("prediction day must be >= 1".into()));
        }
        self.predict_with_log_day(f64::from(day).ln(), day, weekday)
    }

    #[inline]
    fn predict_with_log_day(&self, log_day: f64, day: u32, weekday: Option<u8>) -> Result<f64> {
        let base = self.beta0 + self.beta1 * log_day;
        match &self.weekday_coefs {
            None => Ok(base),
            Some(coefs) => match weekday {
                None => Err(Error::MissingCovariate { day }),
                Some(0) => Ok(base),
                Some(w) if w <= 6 => Ok(base + coefs[usize::from(w) - 1]),
                Some(w) => Err(Error::InvalidConfig(format!("weekday {w} outside 0..=6"))),
            },
        }
    }
}

/// Least-squares projection for a fixed set of observation days.
#[derive(Debug, Clone)]
pub struct LogLogDesign {
    days: Vec<u32>,
    weekdays: Option<Vec<u8>>,
    /// Regressor columns (ln T, then weekday dummies), uncentred.
    columns: Vec<Vec<f64>>,
    means: Vec<f64>,
    /// `(Zc'Zc)^-1 Zc'`, one row per regressor.
    projection: Vec<Vec<f64>>,
}

impl LogLogDesign {
    pub fn new(days: &[u32], weekdays: Option<&[u8]>) -> Result<Self> {
        let n = days.len();
        let mut columns = vec![days.iter().map(|&d| f64::from(d).ln()).collect::<Vec<_>>()];
        if let Some(weekdays) = weekdays {
            for w in 1..=WEEKDAY_TERMS as u8 {
                columns.push(weekdays.iter().map(|&x| f64::from(u8::from(x == w))).collect());
            }
        }
        let k = columns.len();
        if n < k + 2 {
            return Err(Error::DegenerateDesign(format!(
                "{n} observations for {} parameters; need at least {}",
                k + 1,
                k + 2
            )));
        }

        let means: Vec<f64> = columns.iter().map(|c| c.iter().sum::<f64>() / n as f64).collect();
        let centred: Vec<Vec<f64>> = columns
            .iter()
            .zip(&means)
            .map(|(c, m)| c.iter().map(|x| x - m).collect())
            .collect();

        let mut gram = vec![vec![0.0; k]; k];
        for a in 0..k {
            for b in 0..=a {
                let dot: f64 = centred[a].iter().zip(&centred[b]).map(|(x, y)| x * y).sum();
                gram[a][b] = dot;
                gram[b][a] = dot;
            }
        }
        let chol = cholesky(&gram).map_err(|col| {
            let what = if col == 0 {
                "log-day regressor has no spread".to_string()
            } else {
                format!("weekday {col} dummy is absent or collinear")
            };
            Error::DegenerateDesign(what)
        })?;

        let mut projection = vec![vec![0.0; n]; k];
        let mut rhs = vec![0.0; k];
        for i in 0..n {
            for (r, col) in rhs.iter_mut().zip(&centred) {
                *r = col[i];
            }
            let x = cholesky_solve(&chol, &rhs);
            for (row, xc) in projection.iter_mut().zip(x) {
                row[i] = xc;
            }
        }

        Ok(Self {
            days: days.to_vec(),
            weekdays: weekdays.map(<[u8]>::to_vec),
            columns,
            means,
            projection,
        })
    }

    pub fn for_series(series: &DailySeries) -> Result<Self> {
        Self::new(series.days(), series.weekday())
    }

    pub fn n(&self) -> usize {
        self.days.len()
    }

    /// OLS fit of the given log responses on this design.
    pub fn fit(&self, log_values: &[f64]) -> LogLogFit {
        let n = self.n();
        assert_eq!(log_values.len(), n, "log response length must match design");
        let mean_y = log_values.iter().sum::<f64>() / n as f64;

        let coefs: Vec<f64> = self
            .projection
            .iter()
            .map(|row| row.iter().zip(log_values).map(|(p, y)| p * (y - mean_y)).sum())
            .collect();
        let beta0 = mean_y - coefs.iter().zip(&self.means).map(|(c, m)| c * m).sum::<f64>();

        let fitted_log: Vec<f64> = (0..n)
            .map(|i| beta0 + coefs.iter().zip(&self.columns).map(|(c, col)| c * col[i]).sum::<f64>())
            .collect();
        let residuals: Vec<f64> = log_values.iter().zip(&fitted_log).map(|(y, f)| y - f).collect();
        let dof = n - coefs.len() - 1;
        let sigma2 = residuals.iter().map(|r| r * r).sum::<f64>() / dof as f64;

        let weekday_coefs = (coefs.len() > 1).then(|| {
            let mut w = [0.0; WEEKDAY_TERMS];
            w.copy_from_slice(&coefs[1..]);
            w
        });

        LogLogFit {
            beta0,
            beta1: coefs[0],
            weekday_coefs,
            residuals,
            fitted_log,
            sigma2,
            days: self.days.clone(),
            weekdays: self.weekdays.clone(),
        }
    }
}

/// Lower-triangular Cholesky factor; `Err(col)` names the first column whose
/// pivot collapses relative to its diagonal entry.
fn cholesky(a: &[Vec<f64>]) -> std::result::Result<Vec<Vec<f64>>, usize> {
    let k = a.len();
    let mut l = vec![vec![0.0; k]; k];
    for j in 0..k {
        let pivot = a[j][j] - (0..j).map(|p| l[j][p] * l[j][p]).sum::<f64>();
        if !(a[j][j] > 0.0 && pivot > PIVOT_TOLERANCE * a[j][j]) {
            return Err(j);
        }
        l[j][j] = pivot.sqrt();
        for i in j + 1..k {
            let s = a[i][j] - (0..j).map(|p| l[i][p] * l[j][p]).sum::<f64>();
            l[i][j] = s / l[j][j];
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let k = l.len();
    let mut y = vec![0.0; k];
    for i in 0..k {
        y[i] = (b[i] - (0..i).map(|p| l[i][p] * y[p]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        x[i] = (y[i] - (i + 1..k).map(|p| l[p][i] * x[p]).sum::<f64>()) / l[i][i];
    }
    x
}

/// Fits `ln Y` on `ln T`, adding weekday dummies when the series carries weekdays.
pub fn fit_loglog(series: &DailySeries) -> Result<LogLogFit> {
    let design = LogLogDesign::for_series(series)?;
    let log_values: Vec<f64> = series.values().iter().map(|v| v.ln()).collect();
    Ok(design.fit(&log_values))
}

pub fn predict_log(fit: &LogLogFit, day: u32, weekday: Option<u8>) -> Result<f64> {
    fit.predict_log(day, weekday)
}

/// Lifetime value: the sum of daily values over days `1..=horizon`.
///
/// Observed days take `pseudo_values` (or `exp(fitted_log)` when absent, or when
/// `include_observed_pseudo` is off); every other day takes `exp(predict_log)`.
pub fn extrapolate_ltv(fit: &LogLogFit, pseudo_values: Option<&[f64]>, config: &ExtrapolationConfig) -> Result<f64> {
    let log_days = log_day_table(config.horizon);
    let mut total = 0.0;
    for_each_daily_value(fit, pseudo_values, config, &log_days, |_, v| total += v)?;
    Ok(total)
}

/// `ln(d)` for `d = 1..=horizon`, indexed by `d - 1`.
pub(crate) fn log_day_table(horizon: u32) -> Vec<f64> {
    (1..=horizon).map(|d| f64::from(d).ln()).collect()
}

/// Visits `(day, value)` for every day in `1..=horizon`, in day order.
pub(crate) fn for_each_daily_value(
    fit: &LogLogFit,
    pseudo_values: Option<&[f64]>,
    config: &ExtrapolationConfig,
    log_days: &[f64],
    mut visit: impl FnMut(u32, f64),
) -> Result<()> {
    if let Some(&max_day) = fit.days.last() {
        if config.horizon < max_day {
            return Err(Error::HorizonTooShort {
                horizon: config.horizon,
                max_day,
            });
        }
    }
    if let Some(pseudo) = pseudo_values {
        if pseudo.len() != fit.n() {
            return Err(Error::InvalidSeries(format!(
                "{} pseudo values for a fit on {} observations",
                pseudo.len(),
                fit.n()
            )));
        }
        if let Some(bad) = pseudo.iter().find(|v| v.is_nan() || **v <= 0.0) {
            return Err(Error::InvalidSeries(format!("non-positive pseudo value {bad}")));
        }
    }
    debug_assert!(log_days.len() >= config.horizon as usize);

    let mut next_obs = 0;
    for day in 1..=config.horizon {
        let value = if fit.days.get(next_obs) == Some(&day) {
            let i = next_obs;
            next_obs += 1;
            match pseudo_values {
                Some(p) if config.include_observed_pseudo => p[i],
                _ => fit.fitted_log[i].exp(),
            }
        } else {
            let weekday = fit.weekday_of(day);
            fit.predict_with_log_day(log_days[day as usize - 1], day, weekday)?
                .exp()
        };
        visit(day, value);
    }
    Ok(())
}
