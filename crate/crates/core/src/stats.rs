//! Descriptive statistics, two-sided independent-samples t-tests,
//! Benjamini-Hochberg adjustment and all-pairs contrast tables.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("sample too small: need at least {need}, got {got}")]
    TooSmall { need: usize, got: usize },
    #[error("p-value {0} outside [0, 1]")]
    PValueOutOfRange(f64),
    #[error("need at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("confidence level {0} outside (0, 1)")]
    BadLevel(f64),
    #[error("reference sample is empty")]
    EmptyReference,
    #[error("sample contains a non-finite value")]
    NonFinite,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased variance (`n - 1` denominator).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    sample_variance(xs).sqrt()
}

// Lanczos approximation, g = 7, n = 9.
fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let mut sum = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=1000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Two-sided tail probability `P(|T| >= |t|)` for Student's t.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    incomplete_beta(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

/// Student's t cumulative distribution.
pub fn t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * t_two_sided_p(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Inverse of [`t_cdf`] by bisection.
pub fn t_quantile(q: f64, df: f64) -> f64 {
    if q == 0.5 {
        return 0.0;
    }
    if q < 0.5 {
        return -t_quantile(1.0 - q, df);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while t_cdf(hi, df) < q {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t_cdf(mid, df) < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TTestVariant {
    /// Unequal variances, Welch-Satterthwaite degrees of freedom.
    #[default]
    Welch,
    /// Equal variances, pooled estimate.
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    /// Both samples have zero variance; the statistic is a convention.
    pub degenerate: bool,
}

fn check_sample(xs: &[f64]) -> Result<(), StatsError> {
    if xs.len() < 2 {
        return Err(StatsError::TooSmall { need: 2, got: xs.len() });
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

/// Two-sided independent-samples t-test of `a` against `b`.
///
/// When both samples are constant the standard error is zero: equal means
/// give `t = 0, p = 1` and unequal means give `t = ±inf, p = 0`; both cases
/// set `degenerate`.
pub fn ttest_ind(a: &[f64], b: &[f64], variant: TTestVariant) -> Result<TTest, StatsError> {
    check_sample(a)?;
    check_sample(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_variance(a), sample_variance(b));
    let (se2, df) = match variant {
        TTestVariant::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let se2 = qa + qb;
            let df = if se2 > 0.0 {
                se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0))
            } else {
                na + nb - 2.0
            };
            (se2, df)
        }
        TTestVariant::Pooled => {
            let df = na + nb - 2.0;
            let sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            (sp2 * (1.0 / na + 1.0 / nb), df)
        }
    };
    let diff = ma - mb;
    if se2 == 0.0 {
        let (t, p) = if diff == 0.0 {
            (0.0, 1.0)
        } else {
            (diff.signum() * f64::INFINITY, 0.0)
        };
        return Ok(TTest {
            t,
            df,
            p,
            degenerate: true,
        });
    }
    let t = diff / se2.sqrt();
    Ok(TTest {
        t,
        df,
        p: t_two_sided_p(t, df),
        degenerate: false,
    })
}

/// Benjamini-Hochberg step-up adjustment; output is in input order.
pub fn fdr_adjust(p_values: &[f64]) -> Result<Vec<f64>, StatsError> {
    if let Some(&bad) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(StatsError::PValueOutOfRange(bad));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p_values[i].total_cmp(&p_values[j]));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for rank in (0..m).rev() {
        let idx = order[rank];
        let candidate = p_values[idx] * m as f64 / (rank + 1) as f64;
        running = running.min(candidate).min(1.0);
        // p * m / m can round below p
        adjusted[idx] = running.max(p_values[idx]);
    }
    Ok(adjusted)
}

/// Significance tier of an adjusted p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    #[serde(rename = "ns")]
    NotSignificant,
    #[serde(rename = "*")]
    P05,
    #[serde(rename = "**")]
    P01,
    #[serde(rename = "***")]
    P001,
}

impl Tier {
    pub fn from_p(p: f64) -> Self {
        if p < 0.001 {
            Tier::P001
        } else if p < 0.01 {
            Tier::P01
        } else if p < 0.05 {
            Tier::P05
        } else {
            Tier::NotSignificant
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Tier::NotSignificant => "ns",
            Tier::P05 => "*",
            Tier::P01 => "**",
            Tier::P001 => "***",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastResult {
    pub group_a: String,
    pub group_b: String,
    pub t: f64,
    pub df: f64,
    pub p_raw: f64,
    pub p_adj: f64,
    pub tier: Tier,
    pub degenerate: bool,
    /// Set when the test could not run; numeric fields are NaN then.
    pub error: Option<String>,
}

/// One t-test per unordered pair of groups (lexicographic order), with a
/// single BH adjustment across every successful cell.
pub fn contrast_matrix<I, S>(groups: I, variant: TTestVariant) -> Result<Vec<ContrastResult>, StatsError>
where
    I: IntoIterator<Item = (S, Vec<f64>)>,
    S: Into<String>,
{
    let groups: BTreeMap<String, Vec<f64>> = groups.into_iter().map(|(k, v)| (k.into(), v)).collect();
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    let names: Vec<&String> = groups.keys().collect();
    let mut cells = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            cells.push(match ttest_ind(&groups[*a], &groups[*b], variant) {
                Ok(test) => ContrastResult {
                    group_a: a.to_string(),
                    group_b: b.to_string(),
                    t: test.t,
                    df: test.df,
                    p_raw: test.p,
                    p_adj: f64::NAN,
                    tier: Tier::NotSignificant,
                    degenerate: test.degenerate,
                    error: None,
                },
                Err(e) => ContrastResult {
                    group_a: a.to_string(),
                    group_b: b.to_string(),
                    t: f64::NAN,
                    df: f64::NAN,
                    p_raw: f64::NAN,
                    p_adj: f64::NAN,
                    tier: Tier::NotSignificant,
                    degenerate: false,
                    error: Some(e.to_string()),
                },
            });
        }
    }
    let ok: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].error.is_none()).collect();
    let raw: Vec<f64> = ok.iter().map(|&i| cells[i].p_raw).collect();
    for (&i, p) in ok.iter().zip(fdr_adjust(&raw)?) {
        cells[i].p_adj = p;
        cells[i].tier = Tier::from_p(p);
    }
    Ok(cells)
}

/// Square, symmetric matrices over an ordered group list, for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub groups: Vec<String>,
    /// `t[i][j]` is the statistic of group i against group j.
    pub t: Vec<Vec<Option<f64>>>,
    pub p_adj: Vec<Vec<Option<f64>>>,
    pub tier: Vec<Vec<Option<Tier>>>,
    pub fdr_method: String,
}

impl Heatmap {
    pub fn from_contrasts(contrasts: &[ContrastResult]) -> Self {
        let mut groups: Vec<String> = contrasts
            .iter()
            .flat_map(|c| [c.group_a.clone(), c.group_b.clone()])
            .collect();
        groups.sort();
        groups.dedup();
        let k = groups.len();
        let pos = |g: &str| groups.iter().position(|x| x == g).expect("group listed");
        let finite = |x: f64| x.is_finite().then_some(x);
        let mut t = vec![vec![None; k]; k];
        let mut p = vec![vec![None; k]; k];
        let mut tier = vec![vec![None; k]; k];
        for c in contrasts {
            let (i, j) = (pos(&c.group_a), pos(&c.group_b));
            t[i][j] = finite(c.t);
            t[j][i] = finite(-c.t);
            p[i][j] = finite(c.p_adj);
            p[j][i] = finite(c.p_adj);
            if c.error.is_none() {
                tier[i][j] = Some(c.tier);
                tier[j][i] = Some(c.tier);
            }
        }
        Self {
            groups,
            t,
            p_adj: p,
            tier,
            fdr_method: "benjamini-hochberg".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub level: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Mean with a two-sided t confidence interval at `level`.
pub fn mean_ci(sample: &[f64], level: f64) -> Result<GroupSummary, StatsError> {
    check_sample(sample)?;
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::BadLevel(level));
    }
    let n = sample.len();
    let m = mean(sample);
    let sd = sample_sd(sample);
    let half = t_quantile(1.0 - (1.0 - level) / 2.0, n as f64 - 1.0) * sd / (n as f64).sqrt();
    Ok(GroupSummary {
        n,
        mean: m,
        sd,
        level,
        ci_low: m - half,
        ci_high: m + half,
    })
}

/// Percentage of the reference strictly below `value`.
pub fn percentile_of(value: f64, reference: &[f64]) -> Result<f64, StatsError> {
    if reference.is_empty() {
        return Err(StatsError::EmptyReference);
    }
    let below = reference.iter().filter(|&&r| r < value).count();
    Ok(100.0 * below as f64 / reference.len() as f64)
}
