use divbench_core::stats::{mean, mean_ci};
use serde::{Deserialize, Serialize};

/// Mean with a t-based interval; the spread fields are absent below n = 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub n: usize,
    pub mean: f64,
    pub sd: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub level: f64,
}

pub fn estimate(values: &[f64], level: f64) -> Option<Estimate> {
    match values.len() {
        0 => None,
        1 => Some(Estimate {
            n: 1,
            mean: values[0],
            sd: None,
            ci_low: None,
            ci_high: None,
            level,
        }),
        _ => Some(match mean_ci(values, level) {
            Ok(s) => Estimate {
                n: s.n,
                mean: s.mean,
                sd: Some(s.sd),
                ci_low: Some(s.ci_low),
                ci_high: Some(s.ci_high),
                level,
            },
            Err(_) => Estimate {
                n: values.len(),
                mean: mean(values),
                sd: None,
                ci_low: None,
                ci_high: None,
                level,
            },
        }),
    }
}

/// Shortest round-trip form; empty for NaN.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}
