use serde::{Deserialize, Serialize};

/// One JSON document per invocation.
///
/// `results` holds only values that are reproducible from the flags (and the
/// seed); anything timing-related goes into `timings` or `wall_time_seconds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord<P, R> {
    pub command: String,
    pub argv: Vec<String>,
    pub parameters: P,
    pub results: R,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub timings: Vec<Timing>,
    pub wall_time_seconds: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub label: String,
    pub seconds: String,
}

impl Timing {
    pub fn new(label: impl Into<String>, seconds: f64) -> Self {
        Timing {
            label: label.into(),
            seconds: num(seconds),
        }
    }
}

/// Decimal string with 17 significant digits.
pub fn num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    let decimals = (16 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}
