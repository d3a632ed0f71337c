use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A response value that cannot be log-transformed. `line` is set when the
    /// value came from a CSV row.
    #[error("{}", non_positive_message(*.line, .group, *.day, *.value))]
    NonPositiveResponse {
        line: Option<usize>,
        group: String,
        day: u32,
        value: f64,
    },

    #[error("degenerate regression design: {0}")]
    DegenerateDesign(String),

    #[error("fit has weekday terms but no weekday was supplied for day {day}")]
    MissingCovariate { day: u32 },

    #[error("horizon {horizon} is shorter than the last observed day {max_day}")]
    HorizonTooShort { horizon: u32, max_day: u32 },

    #[error("bootstrap refit produced non-finite coefficients at iteration {iteration}")]
    DegenerateResample { iteration: usize },

    #[error("bootstrap distributions differ in length: control {control}, test {test}")]
    LengthMismatch { control: usize, test: usize },

    #[error("both groups are constant and equal; no test is possible")]
    ZeroVariance,

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate day {day} for group '{group}'")]
    DuplicateDay { line: usize, group: String, day: u32 },

    #[error("{0}")]
    GroupSelection(String),

    #[error("replicate {index}: {source}")]
    Replicate { index: usize, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn non_positive_message(line: Option<usize>, group: &str, day: u32, value: f64) -> String {
    let what = format!("non-positive response {value} for group '{group}' on day {day}");
    match line {
        Some(line) => format!("line {line}: {what} (use a log offset to admit zero days)"),
        None => what,
    }
}
