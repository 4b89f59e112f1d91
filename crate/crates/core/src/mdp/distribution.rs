use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{GcrError, Result};
use crate::real::Real;

/// Probability mass function over dense outcome indices `0..len`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteDistribution<R> {
    probs: Vec<R>,
    support: Vec<usize>,
}

impl<R: Real> FiniteDistribution<R> {
    /// Builds a distribution from probabilities that already sum to one.
    pub fn from_probs(probs: Vec<R>) -> Result<Self> {
        validate_weights(&probs)?;
        let total: R = probs.iter().copied().sum();
        if (total - R::one()).abs() > R::lit(1e-12).max(R::epsilon() * R::lit(16.0)) {
            return Err(GcrError::DegenerateDistribution(format!("probabilities sum to {total}")));
        }
        let support = probs.iter().enumerate().filter(|(_, p)| **p > R::zero()).map(|(i, _)| i).collect();
        Ok(Self { probs, support })
    }

    pub fn point_mass(len: usize, at: usize) -> Result<Self> {
        if at >= len {
            return Err(GcrError::OutOfRange { what: "outcome", index: at, limit: len });
        }
        let mut probs = vec![R::zero(); len];
        probs[at] = R::one();
        Self::from_probs(probs)
    }

    pub fn uniform(len: usize) -> Result<Self> {
        make_distribution(&vec![R::one(); len])
    }

    pub fn probs(&self) -> &[R] {
        &self.probs
    }

    pub fn prob(&self, outcome: usize) -> R {
        self.probs[outcome]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Outcomes with positive probability, ascending.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// `Σ p_i v_i` over the support. Outcomes with zero mass are skipped so that
    /// infinite values there do not leak into the result.
    pub fn expect(&self, values: &[R]) -> R {
        self.support.iter().map(|&i| self.probs[i] * values[i]).sum()
    }

    pub fn expect_with(&self, mut f: impl FnMut(usize) -> R) -> R {
        self.support.iter().map(|&i| self.probs[i] * f(i)).sum()
    }

    pub fn convert<S: Real>(&self) -> FiniteDistribution<S> {
        FiniteDistribution {
            probs: self.probs.iter().map(|p| S::lit(p.as_f64())).collect(),
            support: self.support.clone(),
        }
    }
}

fn validate_weights<R: Real>(weights: &[R]) -> Result<()> {
    if weights.is_empty() {
        return Err(GcrError::DegenerateDistribution("no outcomes".into()));
    }
    for (index, w) in weights.iter().enumerate() {
        if !w.is_finite() || *w < R::zero() {
            return Err(GcrError::InvalidWeight { index, value: w.as_f64() });
        }
    }
    Ok(())
}

/// Normalizes nonnegative weights into a distribution. Zero weights are kept with zero mass.
pub fn make_distribution<R: Real>(weights: &[R]) -> Result<FiniteDistribution<R>> {
    validate_weights(weights)?;
    let total: R = weights.iter().copied().sum();
    if total <= R::zero() {
        return Err(GcrError::DegenerateDistribution("all weights are zero".into()));
    }
    let probs: Vec<R> = weights.iter().map(|w| *w / total).collect();
    let support = probs.iter().enumerate().filter(|(_, p)| **p > R::zero()).map(|(i, _)| i).collect();
    Ok(FiniteDistribution { probs, support })
}

pub fn expectation<R: Real>(dist: &FiniteDistribution<R>, values: &[R]) -> Result<R> {
    if values.len() != dist.len() {
        return Err(GcrError::LengthMismatch { expected: dist.len(), got: values.len() });
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(GcrError::NotANumber("expectation values"));
    }
    Ok(dist.expect(values))
}

/// How a Gaussian is discretized onto `0..=max_support`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PmfMode {
    /// Density evaluated at each integer, renormalized.
    #[default]
    Density,
    /// Mass of the unit bin centered on each integer, renormalized.
    CdfBins,
}

pub fn truncated_gaussian_pmf<R: Real>(
    mean: R,
    variance: R,
    max_support: usize,
    mode: PmfMode,
) -> Result<FiniteDistribution<R>> {
    if !(variance > R::zero()) {
        return Err(GcrError::InvalidParameter {
            name: "variance",
            reason: format!("must be positive, got {variance}"),
        });
    }
    let mu = mean.as_f64();
    let var = variance.as_f64();
    let weights: Vec<R> = match mode {
        PmfMode::Density => (0..=max_support)
            .map(|k| {
                let d = k as f64 - mu;
                R::lit((-d * d / (2.0 * var)).exp())
            })
            .collect(),
        PmfMode::CdfBins => {
            let normal = Normal::new(mu, var.sqrt())
                .map_err(|e| GcrError::InvalidParameter { name: "variance", reason: e.to_string() })?;
            (0..=max_support)
                .map(|k| {
                    let k = k as f64;
                    R::lit(normal.cdf(k + 0.5) - normal.cdf(k - 0.5))
                })
                .collect()
        }
    };
    make_distribution(&weights)
}
