//! Two-level distributions: one heavy atom of mass `theta` and `N - 1`
//! light atoms sharing the rest equally.
//!
//! Among all distributions over `N` symbols with a given Shannon entropy,
//! these maximize every power sum `sum p^(1 + t)` for `t > 0`, so they give the
//! smallest Rényi entropy of each order `alpha > 1`. They are also the worst
//! case for the exponential moments of the surprise, which is what the
//! [`crate::tails`] module builds on.
//!
//! All closed forms are evaluated from `ln N`, so alphabets of `2^256` symbols
//! are handled without materializing a weight vector.

use serde::Serialize;

use crate::alphabet::Alphabet;
use crate::entropy::{plogp_neg, DiscreteDistribution, EntropyReport};
use crate::error::{Error, Result};

/// Bias threshold `gamma N` separating the small- and large-bias regimes.
pub const REGIME_THRESHOLD: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoLevelDistribution {
    alphabet: Alphabet,
    theta: f64,
    bias: f64,
}

impl TwoLevelDistribution {
    /// Heavy-atom mass `theta` in `[1/N, 1]`.
    pub fn from_theta(alphabet: Alphabet, theta: f64) -> Result<Self> {
        let floor = 1.0 / alphabet.size();
        if !(theta.is_finite() && theta >= floor && theta <= 1.0) {
            return Err(Error::domain(format!(
                "heavy-atom mass {theta} outside [1/{alphabet}, 1]"
            )));
        }
        Ok(Self {
            alphabet,
            theta,
            bias: theta - floor,
        })
    }

    /// Bias `gamma = theta - 1/N` in `[0, 1 - 1/N]`.
    pub fn from_bias(alphabet: Alphabet, bias: f64) -> Result<Self> {
        check_bias(alphabet, bias)?;
        let theta = (1.0 / alphabet.size() + bias).min(1.0);
        Ok(Self {
            alphabet,
            theta,
            bias,
        })
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        Self {
            alphabet,
            theta: 1.0 / alphabet.size(),
            bias: 0.0,
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Mass of each light atom, `(1 - theta) / (N - 1)`.
    pub fn light(&self) -> f64 {
        (1.0 - self.theta) / (self.alphabet.size() - 1.0)
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// `gamma N`.
    pub fn scaled_bias(&self) -> f64 {
        self.bias * self.alphabet.size()
    }

    /// `ln(theta (N - 1) / (1 - theta))`, the gap between the light and heavy
    /// surprises. Infinite for the point mass.
    pub fn log_ratio(&self) -> f64 {
        if self.theta >= 1.0 {
            return f64::INFINITY;
        }
        (self.scaled_bias() / (1.0 - self.theta)).ln_1p()
    }

    /// Values of the centered surprise `H - ln(1/P(x))` on the heavy atom and
    /// on a light atom.
    pub fn centered_surprise(&self) -> (f64, f64) {
        if self.bias == 0.0 || self.theta >= 1.0 {
            return (0.0, 0.0);
        }
        let l = self.log_ratio();
        ((1.0 - self.theta) * l, -self.theta * l)
    }

    pub fn shannon_entropy(&self) -> f64 {
        if self.bias == 0.0 {
            return self.alphabet.ln_size();
        }
        let light_mass = 1.0 - self.theta;
        plogp_neg(self.theta) + plogp_neg(light_mass) + light_mass * self.alphabet.ln_size_minus_one()
    }

    /// `ln N - H`.
    pub fn deficiency(&self) -> f64 {
        deficiency_at(self.alphabet, self.bias, self.theta)
    }

    pub fn min_entropy(&self) -> f64 {
        if self.bias == 0.0 {
            return self.alphabet.ln_size();
        }
        -self.theta.ln()
    }

    /// Rényi entropy of order `alpha` (`alpha > 0`, `alpha != 1`) in closed form.
    pub fn renyi_entropy(&self, alpha: f64) -> Result<f64> {
        if !(alpha.is_finite() && alpha > 0.0) || alpha == 1.0 {
            return Err(Error::domain(format!(
                "Rényi order must be finite, positive and different from 1, got {alpha}"
            )));
        }
        if self.bias == 0.0 {
            return Ok(self.alphabet.ln_size());
        }
        if self.theta >= 1.0 {
            return Ok(0.0);
        }
        // ln(theta^a + (N-1)^(1-a) (1-theta)^a) by log-sum-exp.
        let heavy = alpha * self.theta.ln();
        let light = alpha * (-self.theta).ln_1p() + (1.0 - alpha) * self.alphabet.ln_size_minus_one();
        let (hi, lo) = if heavy >= light { (heavy, light) } else { (light, heavy) };
        let log_power_sum = hi + (lo - hi).exp().ln_1p();
        Ok((-log_power_sum / (alpha - 1.0)).max(0.0))
    }

    /// The weight vector `(theta, light, ..., light)`, heavy atom first.
    pub fn as_distribution(&self) -> Result<DiscreteDistribution> {
        let n = self.alphabet.exact_size().ok_or_else(|| {
            Error::domain(format!(
                "alphabet of {} symbols is too large to materialize",
                self.alphabet
            ))
        })?;
        let mut weights = vec![self.light(); n];
        weights[0] = self.theta;
        DiscreteDistribution::new(weights)
    }

    pub fn report(&self, alphas: &[f64]) -> Result<EntropyReport> {
        let renyi = alphas
            .iter()
            .map(|&a| self.renyi_entropy(a).map(|h| (a, h)))
            .collect::<Result<Vec<_>>>()?;
        Ok(EntropyReport::assemble(
            self.alphabet.size(),
            self.shannon_entropy(),
            renyi,
            self.min_entropy(),
            self.alphabet.ln_size(),
            self.deficiency(),
        ))
    }
}

fn check_bias(alphabet: Alphabet, bias: f64) -> Result<()> {
    let max = 1.0 - 1.0 / alphabet.size();
    if !(bias.is_finite() && (0.0..=max).contains(&bias)) {
        return Err(Error::domain(format!(
            "bias {bias} outside [0, 1 - 1/{alphabet}]"
        )));
    }
    Ok(())
}

/// Deficiency written with `ln_1p` so the small-bias cancellation
/// (two `O(gamma)` terms summing to `O(gamma^2 N)`) keeps its precision.
fn deficiency_at(alphabet: Alphabet, bias: f64, theta: f64) -> f64 {
    if bias == 0.0 {
        return 0.0;
    }
    if theta >= 1.0 {
        return alphabet.ln_size();
    }
    let scaled = bias * alphabet.size();
    let heavy = theta * (scaled / (1.0 - theta)).ln_1p();
    let light = (-bias * alphabet.size_over_size_minus_one()).ln_1p();
    (heavy + light).clamp(0.0, alphabet.ln_size())
}

/// Entropy deficiency `ln N - H` of the two-level distribution with bias `gamma`.
pub fn deficiency_from_bias(alphabet: Alphabet, gamma: f64) -> Result<f64> {
    check_bias(alphabet, gamma)?;
    let theta = (1.0 / alphabet.size() + gamma).min(1.0);
    Ok(deficiency_at(alphabet, gamma, theta))
}

/// Bias of the two-level distribution with deficiency `delta_def` (nats).
/// Bisection on the deficiency, which is strictly increasing in the bias.
pub fn bias_from_deficiency(alphabet: Alphabet, delta_def: f64) -> Result<f64> {
    let max_def = alphabet.ln_size();
    if !(delta_def.is_finite() && (0.0..=max_def).contains(&delta_def)) {
        return Err(Error::domain(format!(
            "deficiency {delta_def} outside [0, ln {alphabet}]"
        )));
    }
    let max_bias = 1.0 - 1.0 / alphabet.size();
    if delta_def == 0.0 {
        return Ok(0.0);
    }
    if delta_def == max_def {
        return Ok(max_bias);
    }
    let f = |g: f64| deficiency_at(alphabet, g, (1.0 / alphabet.size() + g).min(1.0));
    Ok(bisect_increasing(f, delta_def, 0.0, max_bias))
}

/// Smallest float in `[lo, hi]` at which the non-decreasing `f` reaches
/// `target`, to the resolution of `f64`.
pub(crate) fn bisect_increasing(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..4096 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Return the endpoint whose image is closer to the target.
    if (f(lo) - target).abs() <= (f(hi) - target).abs() {
        lo
    } else {
        hi
    }
}

/// The two-level distribution over `alphabet` whose Shannon entropy is `k` nats.
pub fn solve_theta(alphabet: Alphabet, k: f64) -> Result<TwoLevelDistribution> {
    let ln_n = alphabet.ln_size();
    if !(k.is_finite() && (0.0..=ln_n).contains(&k)) {
        return Err(Error::domain(format!("entropy {k} outside [0, ln {alphabet}]")));
    }
    from_deficiency(alphabet, ln_n - k)
}

/// The two-level distribution with deficiency `delta_def` nats. Prefer this
/// over [`solve_theta`] when the deficiency is known directly: `ln N - k`
/// loses digits when `k` is close to `ln N`.
pub fn from_deficiency(alphabet: Alphabet, delta_def: f64) -> Result<TwoLevelDistribution> {
    let gamma = bias_from_deficiency(alphabet, delta_def)?;
    if delta_def == alphabet.ln_size() {
        return TwoLevelDistribution::from_theta(alphabet, 1.0);
    }
    TwoLevelDistribution::from_bias(alphabet, gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    SmallBias,
    Boundary,
    LargeBias,
}

pub fn regime(alphabet: Alphabet, gamma: f64) -> Regime {
    let scaled = gamma * alphabet.size();
    if (scaled - REGIME_THRESHOLD).abs() <= 1e-12 * REGIME_THRESHOLD {
        Regime::Boundary
    } else if scaled > REGIME_THRESHOLD {
        Regime::LargeBias
    } else {
        Regime::SmallBias
    }
}

fn check_order(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(Error::domain(format!(
            "worst-case Rényi entropy needs a finite order above 1, got {alpha}"
        )));
    }
    Ok(())
}

/// Smallest Rényi entropy of order `alpha > 1` among distributions over
/// `alphabet` with Shannon entropy `k` nats.
pub fn worst_renyi_given_shannon(alphabet: Alphabet, k: f64, alpha: f64) -> Result<f64> {
    check_order(alpha)?;
    solve_theta(alphabet, k)?.renyi_entropy(alpha)
}

/// As [`worst_renyi_given_shannon`], parameterized by the deficiency.
pub fn worst_renyi_given_deficiency(alphabet: Alphabet, delta_def: f64, alpha: f64) -> Result<f64> {
    check_order(alpha)?;
    from_deficiency(alphabet, delta_def)?.renyi_entropy(alpha)
}

/// Pointwise [`worst_renyi_given_shannon`] over `k_grid`.
pub fn worst_renyi_curve(alphabet: Alphabet, alpha: f64, k_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    k_grid
        .iter()
        .map(|&k| worst_renyi_given_shannon(alphabet, k, alpha).map(|h| (k, h)))
        .collect()
}
