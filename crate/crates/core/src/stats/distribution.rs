use serde::Serialize;

use super::StatsError;

/// Empirical distribution of overrun fractions, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverrunDistribution {
    values: Vec<f64>,
}

impl OverrunDistribution {
    /// Builds a distribution from unsorted overruns. Duplicates are kept.
    pub fn new(overruns: &[f64]) -> Result<Self, StatsError> {
        if overruns.is_empty() {
            return Err(StatsError::EmptyReferenceClass);
        }
        if let Some(bad) = overruns.iter().find(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(*bad));
        }
        let mut values = overruns.to_vec();
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Share of values `<= x`. Right-continuous step function.
    pub fn ecdf(&self, x: f64) -> f64 {
        let at_or_below = self.values.partition_point(|v| *v <= x);
        at_or_below as f64 / self.values.len() as f64
    }

    /// Linear interpolation between order statistics.
    ///
    /// With 1-based sorted values `x_1..x_n`, `h = (n - 1) p + 1`,
    /// `k = floor(h)`, the result is `x_k + (h - k)(x_{k+1} - x_k)`, where
    /// `x_{n+1}` stands for `x_n`.
    pub fn quantile(&self, p: f64) -> Result<f64, StatsError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(StatsError::ProbabilityOutOfRange(p));
        }
        let n = self.values.len();
        let h = (n - 1) as f64 * p + 1.0;
        let k = h.floor();
        let idx = k as usize; // 1-based
        let lower = self.values[idx - 1];
        let upper = self.values[idx.min(n - 1)];
        Ok(lower + (h - k) * (upper - lower))
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5).expect("0.5 is a valid probability")
    }
}

/// Free-function form of [`OverrunDistribution::new`].
pub fn build_distribution(overruns: &[f64]) -> Result<OverrunDistribution, StatsError> {
    OverrunDistribution::new(overruns)
}
