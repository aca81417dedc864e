//! Entropy calculus for finite discrete distributions.
//!
//! Everything is computed in nats; bits appear only in [`EntropyReport`].

use serde::Serialize;

use crate::alphabet::nats_to_bits;
use crate::error::{Error, Result};

/// Allowed deviation of `sum(p)` from one.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// A validated probability vector over an alphabet of `weights.len()` symbols.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDistribution {
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    /// Validates `weights`. A sum within [`SUM_TOLERANCE`] of one is
    /// renormalized; anything further off is rejected.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty weight vector".into()));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "weight {i} is {w}, expected a finite non-negative number"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let weights = if total == 1.0 {
            weights
        } else {
            weights.into_iter().map(|w| w / total).collect()
        };
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        Ok(Self {
            weights: vec![1.0 / n as f64; n],
        })
    }

    pub fn point_mass(n: usize, index: usize) -> Result<Self> {
        if index >= n {
            return Err(Error::InvalidDistribution(format!(
                "point mass index {index} outside alphabet of {n}"
            )));
        }
        let mut weights = vec![0.0; n];
        weights[index] = 1.0;
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn alphabet_size(&self) -> usize {
        self.weights.len()
    }

    /// Number of symbols with non-zero weight.
    pub fn support_size(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }
}

/// `p ln(1/p)` with `0 ln(1/0) = 0`.
#[inline]
pub(crate) fn plogp_neg(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

pub fn shannon_entropy(d: &DiscreteDistribution) -> f64 {
    d.weights.iter().map(|&p| plogp_neg(p)).sum()
}

/// Rényi entropy of order `alpha` (`alpha > 0`, `alpha != 1`).
pub fn renyi_entropy(d: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) || alpha == 1.0 {
        return Err(Error::domain(format!(
            "Rényi order must be finite, positive and different from 1, got {alpha}"
        )));
    }
    // ln sum p^a = a ln pmax + ln sum (p / pmax)^a, which cannot underflow.
    let pmax = d.max_weight();
    let scaled: f64 = d
        .weights
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| (p / pmax).powf(alpha))
        .sum();
    let log_power_sum = alpha * pmax.ln() + scaled.ln();
    Ok((-log_power_sum / (alpha - 1.0)).max(0.0))
}

pub fn min_entropy(d: &DiscreteDistribution) -> f64 {
    -d.max_weight().ln()
}

/// `H_0`, the log of the size of the declared alphabet. Zero-weight symbols
/// still count, so `H_0 - H` is the deficiency against `ln N`.
pub fn support_log(d: &DiscreteDistribution) -> f64 {
    (d.alphabet_size() as f64).ln()
}

/// Law of the surprise `ln(1/P(x))` as `(value, probability)` pairs sorted by
/// value. Symbols with equal weight are merged and zero weights omitted.
pub fn surprise_values(d: &DiscreteDistribution) -> Vec<(f64, f64)> {
    let mut weights: Vec<f64> = d.weights.iter().copied().filter(|&p| p > 0.0).collect();
    weights.sort_by(|a, b| b.total_cmp(a));
    let mut out: Vec<(f64, f64, f64)> = Vec::new();
    for p in weights {
        match out.last_mut() {
            Some((_, atom, mass)) if *atom == p => *mass += p,
            _ => out.push((-p.ln(), p, p)),
        }
    }
    out.into_iter().map(|(v, _, m)| (v, m)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RenyiValue {
    pub alpha: f64,
    pub nats: f64,
    pub bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub alphabet_size: f64,
    pub shannon_nats: f64,
    pub shannon_bits: f64,
    pub renyi: Vec<RenyiValue>,
    pub min_entropy_nats: f64,
    pub min_entropy_bits: f64,
    pub support_log_nats: f64,
    pub support_log_bits: f64,
    /// `H_0 - H`.
    pub deficiency_nats: f64,
    pub deficiency_bits: f64,
}

impl EntropyReport {
    pub(crate) fn assemble(
        alphabet_size: f64,
        shannon: f64,
        renyi: Vec<(f64, f64)>,
        min_entropy: f64,
        support_log: f64,
        deficiency: f64,
    ) -> Self {
        Self {
            alphabet_size,
            shannon_nats: shannon,
            shannon_bits: nats_to_bits(shannon),
            renyi: renyi
                .into_iter()
                .map(|(alpha, nats)| RenyiValue {
                    alpha,
                    nats,
                    bits: nats_to_bits(nats),
                })
                .collect(),
            min_entropy_nats: min_entropy,
            min_entropy_bits: nats_to_bits(min_entropy),
            support_log_nats: support_log,
            support_log_bits: nats_to_bits(support_log),
            deficiency_nats: deficiency,
            deficiency_bits: nats_to_bits(deficiency),
        }
    }
}

pub fn report(d: &DiscreteDistribution, alphas: &[f64]) -> Result<EntropyReport> {
    let shannon = shannon_entropy(d);
    let renyi = alphas
        .iter()
        .map(|&a| renyi_entropy(d, a).map(|h| (a, h)))
        .collect::<Result<Vec<_>>>()?;
    let h0 = support_log(d);
    Ok(EntropyReport::assemble(
        d.alphabet_size() as f64,
        shannon,
        renyi,
        min_entropy(d),
        h0,
        (h0 - shannon).max(0.0),
    ))
}
