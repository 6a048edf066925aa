//! Empirical overrun distributions, summary statistics and the hypothesis
//! tests used to describe a reference class.

mod distribution;
pub mod special;

pub use distribution::{build_distribution, OverrunDistribution};

use serde::Serialize;
use thiserror::Error;

/// Smallest sample accepted by [`t_test_mean_zero`].
pub const MIN_T_TEST_N: usize = 3;
/// Smallest sample accepted by [`jarque_bera_normality`].
pub const MIN_JARQUE_BERA_N: usize = 8;
/// Smallest sample (per side) accepted by [`ks_two_sample`].
pub const MIN_KS_N: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty reference class")]
    EmptyReferenceClass,
    #[error("non-finite value {0} in sample")]
    NonFinite(f64),
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("insufficient sample: {test} needs at least {needed} values, got {got}")]
    InsufficientSample {
        test: TestName,
        needed: usize,
        got: usize,
    },
    #[error("zero variance: {0} is undefined for a constant sample")]
    ZeroVariance(TestName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestName {
    TMeanZero,
    JarqueBeraNormality,
    KsTwoSample,
}

impl std::fmt::Display for TestName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TestName::TMeanZero => "t test (mean zero)",
            TestName::JarqueBeraNormality => "Jarque-Bera normality test",
            TestName::KsTwoSample => "two-sample Kolmogorov-Smirnov test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); `None` when n = 1.
    pub sd: Option<f64>,
    pub min: f64,
    pub max: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub test_name: TestName,
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n2: Option<usize>,
}

fn check_finite(sample: &[f64]) -> Result<(), StatsError> {
    match sample.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(StatsError::NonFinite(*v)),
        None => Ok(()),
    }
}

fn mean(sample: &[f64]) -> f64 {
    sample.iter().sum::<f64>() / sample.len() as f64
}

/// Sample variance with the n - 1 denominator (two-pass).
fn sample_variance(sample: &[f64], mean: f64) -> f64 {
    let ss: f64 = sample.iter().map(|v| (v - mean) * (v - mean)).sum();
    ss / (sample.len() - 1) as f64
}

/// True when the spread is indistinguishable from rounding noise, which is
/// what a constant sample leaves behind after the mean is subtracted.
fn negligible_variance(sample: &[f64], variance: f64) -> bool {
    let scale = sample
        .iter()
        .fold(0.0_f64, |a, v| a.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    variance <= (scale * 1e-14).powi(2)
}

pub fn summary(overruns: &[f64]) -> Result<SummaryStats, StatsError> {
    let dist = OverrunDistribution::new(overruns)?;
    let m = mean(overruns);
    let sd = (overruns.len() >= 2).then(|| sample_variance(overruns, m).sqrt());
    Ok(SummaryStats {
        n: dist.n(),
        mean: m,
        sd,
        min: dist.min(),
        max: dist.max(),
        median: dist.median(),
    })
}

/// One-sample two-sided t test of `mean == 0`.
pub fn t_test_mean_zero(overruns: &[f64]) -> Result<TestReport, StatsError> {
    let n = overruns.len();
    if n < MIN_T_TEST_N {
        return Err(StatsError::InsufficientSample {
            test: TestName::TMeanZero,
            needed: MIN_T_TEST_N,
            got: n,
        });
    }
    check_finite(overruns)?;
    let m = mean(overruns);
    let var = sample_variance(overruns, m);
    if negligible_variance(overruns, var) {
        return Err(StatsError::ZeroVariance(TestName::TMeanZero));
    }
    let t = m / (var.sqrt() / (n as f64).sqrt());
    Ok(TestReport {
        test_name: TestName::TMeanZero,
        statistic: t,
        p_value: special::student_t_two_sided(t, (n - 1) as f64),
        n,
        n2: None,
    })
}

/// Jarque-Bera test; `JB = n/6 (S^2 + K^2/4)` from moment-based skewness and
/// excess kurtosis, referred to chi-square with 2 degrees of freedom.
pub fn jarque_bera_normality(overruns: &[f64]) -> Result<TestReport, StatsError> {
    let n = overruns.len();
    if n < MIN_JARQUE_BERA_N {
        return Err(StatsError::InsufficientSample {
            test: TestName::JarqueBeraNormality,
            needed: MIN_JARQUE_BERA_N,
            got: n,
        });
    }
    check_finite(overruns)?;
    let nf = n as f64;
    let m = mean(overruns);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in overruns {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    if negligible_variance(overruns, m2) {
        return Err(StatsError::ZeroVariance(TestName::JarqueBeraNormality));
    }
    let skew = m3 / m2.powf(1.5);
    let excess_kurtosis = m4 / (m2 * m2) - 3.0;
    let jb = nf / 6.0 * (skew * skew + excess_kurtosis * excess_kurtosis / 4.0);
    Ok(TestReport {
        test_name: TestName::JarqueBeraNormality,
        statistic: jb,
        p_value: special::chi_square_upper(jb, 2.0),
        n,
        n2: None,
    })
}

/// Largest vertical gap between the two step ECDFs.
fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0_f64;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value at
/// effective size `n_a n_b / (n_a + n_b)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestReport, StatsError> {
    for s in [a, b] {
        if s.len() < MIN_KS_N {
            return Err(StatsError::InsufficientSample {
                test: TestName::KsTwoSample,
                needed: MIN_KS_N,
                got: s.len(),
            });
        }
        check_finite(s)?;
    }
    let d = ks_statistic(a, b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let effective_n = na * nb / (na + nb);
    Ok(TestReport {
        test_name: TestName::KsTwoSample,
        statistic: d,
        p_value: special::kolmogorov_survival(effective_n.sqrt() * d),
        n: a.len(),
        n2: Some(b.len()),
    })
}
