use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum observations for a two-parameter fit with one residual degree of freedom.
pub const MIN_OBSERVATIONS: usize = 3;

/// One group's observed daily average response.
///
/// `days` are 1-based day indices since the cohort started; `values` holds the
/// average response per recruited user on each day. The optional `weekday`
/// column carries a category in `0..7` per observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySeries {
    group_label: String,
    days: Vec<u32>,
    values: Vec<f64>,
    weekday: Option<Vec<u8>>,
}

impl DailySeries {
    pub fn new(
        group_label: impl Into<String>,
        days: Vec<u32>,
        values: Vec<f64>,
        weekday: Option<Vec<u8>>,
    ) -> Result<Self> {
        let series = Self {
            group_label: group_label.into(),
            days,
            values,
            weekday,
        };
        series.validate()?;
        Ok(series)
    }

    /// Series observed on consecutive days `1..=values.len()`.
    pub fn consecutive(group_label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let days = (1..=values.len() as u32).collect();
        Self::new(group_label, days, values, None)
    }

    fn validate(&self) -> Result<()> {
        if self.values.len() != self.days.len() {
            return Err(Error::InvalidSeries(format!(
                "{} days but {} values",
                self.days.len(),
                self.values.len()
            )));
        }
        if let Some(weekday) = &self.weekday {
            if weekday.len() != self.days.len() {
                return Err(Error::InvalidSeries(format!(
                    "{} days but {} weekday labels",
                    self.days.len(),
                    weekday.len()
                )));
            }
            if let Some(bad) = weekday.iter().find(|&&w| w > 6) {
                return Err(Error::InvalidSeries(format!("weekday {bad} outside 0..=6")));
            }
        }
        if self.days.len() < MIN_OBSERVATIONS {
            return Err(Error::InvalidSeries(format!(
                "{} observations, need at least {MIN_OBSERVATIONS}",
                self.days.len()
            )));
        }
        if self.days[0] < 1 {
            return Err(Error::InvalidSeries("day indices start at 1".into()));
        }
        if self.days.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSeries("days must be strictly increasing".into()));
        }
        for (&day, &value) in self.days.iter().zip(&self.values) {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveResponse {
                    line: None,
                    group: self.group_label.clone(),
                    day,
                    value,
                });
            }
        }
        Ok(())
    }

    pub fn group_label(&self) -> &str {
        &self.group_label
    }

    pub fn days(&self) -> &[u32] {
        &self.days
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weekday(&self) -> Option<&[u8]> {
        self.weekday.as_deref()
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn last_day(&self) -> u32 {
        *self.days.last().expect("validated series is non-empty")
    }

    /// Same days and labels with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(
            self.group_label.clone(),
            self.days.clone(),
            values,
            self.weekday.clone(),
        )
    }

    pub fn with_label(&self, group_label: impl Into<String>) -> Self {
        Self {
            group_label: group_label.into(),
            ..self.clone()
        }
    }

    /// Keeps only observations with `day <= last_day`.
    pub fn truncated(&self, last_day: u32) -> Result<Self> {
        let keep = self.days.partition_point(|&d| d <= last_day);
        Self::new(
            self.group_label.clone(),
            self.days[..keep].to_vec(),
            self.values[..keep].to_vec(),
            self.weekday.as_ref().map(|w| w[..keep].to_vec()),
        )
    }
}
