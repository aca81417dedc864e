//! Independent numerical checks.
//!
//! [`oracle_max_power_sum`] and [`grid_oracle_2simplex`] maximize
//! `sum p^(1 + t)` over small simplices subject to `H(p) = k` without using
//! the two-level closed form, so they can confirm that the closed form is the
//! maximizer. [`simulate_tail`] samples sums of surprises to check analytic
//! tail bounds empirically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::alphabet::Alphabet;
use crate::entropy::{plogp_neg, shannon_entropy, DiscreteDistribution};
use crate::error::{Error, Result};
use crate::extremal::TwoLevelDistribution;
use crate::tails::{tail_epsilon, tail_epsilon_two_sided, TailQuery};

/// Largest alphabet the brute-force oracles accept.
pub const MAX_ORACLE_ALPHABET: usize = 6;

/// Constraint residual every oracle point must meet.
pub const ORACLE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeDiagnosis {
    /// Atoms in the upper half of the weight range.
    pub num_heavy: usize,
    /// Total mass of those atoms.
    pub heavy_mass: f64,
    /// Spread (max - min) among the remaining atoms.
    pub light_spread: f64,
}

impl ShapeDiagnosis {
    pub fn of(p: &[f64]) -> Self {
        let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = p.iter().copied().fold(f64::INFINITY, f64::min);
        let cut = min + 0.5 * (max - min);
        let spread = max - min;
        let (heavy, light): (Vec<f64>, Vec<f64>) = p.iter().partition(|&&w| spread > 0.0 && w > cut);
        let light_spread = match light.iter().copied().reduce(f64::max) {
            Some(hi) => hi - light.iter().copied().fold(f64::INFINITY, f64::min),
            None => 0.0,
        };
        Self {
            num_heavy: heavy.len(),
            heavy_mass: heavy.iter().sum(),
            light_spread,
        }
    }

    /// One heavy atom over lights equal to within `tolerance`.
    pub fn is_two_level(&self, tolerance: f64) -> bool {
        self.num_heavy == 1 && self.light_spread <= tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub best_value: f64,
    pub best_point: DiscreteDistribution,
    pub shape: ShapeDiagnosis,
    pub constraint_residual: f64,
}

impl OracleResult {
    fn from_point(p: Vec<f64>, k: f64, t: f64) -> Result<Self> {
        let best_value = power_sum(&p, t);
        let shape = ShapeDiagnosis::of(&p);
        let best_point = DiscreteDistribution::new(p)?;
        let constraint_residual = (shannon_entropy(&best_point) - k).abs();
        Ok(Self {
            best_value,
            best_point,
            shape,
            constraint_residual,
        })
    }
}

/// `sum p_i^(1 + t)` over the support.
pub fn power_sum(p: &[f64], t: f64) -> f64 {
    p.iter().filter(|&&w| w > 0.0).map(|&w| w.powf(1.0 + t)).sum()
}

fn entropy_of(p: &[f64]) -> f64 {
    p.iter().map(|&w| plogp_neg(w)).sum()
}

/// Split mass `r` into `(s, r - s)` with `s <= r/2` so that the pair
/// contributes `target` nats of entropy. `None` when `target` is outside
/// `[-r ln r, -r ln(r/2)]`.
fn split_pair(r: f64, target: f64) -> Option<(f64, f64)> {
    if r.is_nan() || r <= 0.0 {
        return None;
    }
    let g = |s: f64| plogp_neg(s) + plogp_neg(r - s);
    let (lo_val, hi_val) = (g(0.0), g(0.5 * r));
    if target < lo_val || target > hi_val + 1e-15 {
        return None;
    }
    let (mut lo, mut hi) = (0.0, 0.5 * r);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    Some((s, r - s))
}

/// Move `p` onto `H = k` along the segment towards the uniform point (when
/// `H(p) < k`) or towards the heaviest atom's point mass (when `H(p) > k`).
fn project_along_path(p: &[f64], k: f64) -> Vec<f64> {
    let n = p.len();
    let h = entropy_of(p);
    let target: Vec<f64> = if h < k {
        vec![1.0 / n as f64; n]
    } else {
        let top = p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        (0..n).map(|i| if i == top { 1.0 } else { 0.0 }).collect()
    };
    let mix = |lam: f64| -> Vec<f64> {
        p.iter()
            .zip(&target)
            .map(|(a, b)| (1.0 - lam) * a + lam * b)
            .collect()
    };
    let below = h < k;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let hm = entropy_of(&mix(mid));
        if (hm < k) == below {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mix(0.5 * (lo + hi))
}

fn check_oracle_args(n: usize, k: f64, t: f64) -> Result<()> {
    if !(2..=MAX_ORACLE_ALPHABET).contains(&n) {
        return Err(Error::domain(format!(
            "oracle alphabet must have 2..={MAX_ORACLE_ALPHABET} symbols, got {n}"
        )));
    }
    let ln_n = (n as f64).ln();
    if !(k > 0.0 && k < ln_n) {
        return Err(Error::domain(format!("entropy {k} must lie strictly inside (0, ln {n})")));
    }
    if !(t.is_finite() && t >= -1.0) || t == 0.0 {
        return Err(Error::domain(format!("exponent t must be >= -1 and non-zero, got {t}")));
    }
    Ok(())
}

/// One local search from a random start: perturb a single coordinate, then
/// restore both constraints by re-splitting two other coordinates.
fn local_search(n: usize, k: f64, t: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.gen_range(f64::EPSILON..1.0f64).ln()).collect();
    let total: f64 = raw.iter().sum();
    let start: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let mut p = project_along_path(&start, k);
    let mut value = power_sum(&p, t);

    let mut step = 0.25;
    while step > 1e-14 {
        let mut improved_any = false;
        for _ in 0..64 {
            let mut improved = false;
            for _ in 0..(8 * n) {
                let i = rng.gen_range(0..n);
                let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                let a = others[rng.gen_range(0..others.len())];
                let rest_idx: Vec<usize> = others.iter().copied().filter(|&j| j != a).collect();
                let b = rest_idx[rng.gen_range(0..rest_idx.len())];
                let delta = step * rng.gen_range(0.5..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let pi = p[i] + delta;
                let r = p[a] + p[b] - delta;
                if pi <= 0.0 || r <= 0.0 {
                    continue;
                }
                let rest: f64 = (0..n)
                    .filter(|&j| j != a && j != b && j != i)
                    .map(|j| plogp_neg(p[j]))
                    .sum::<f64>()
                    + plogp_neg(pi);
                let Some((s, rs)) = split_pair(r, k - rest) else {
                    continue;
                };
                for (pa, pb) in [(s, rs), (rs, s)] {
                    if pa <= 0.0 || pb <= 0.0 {
                        continue;
                    }
                    let mut q = p.clone();
                    q[i] = pi;
                    q[a] = pa;
                    q[b] = pb;
                    let v = power_sum(&q, t);
                    if v > value {
                        p = q;
                        value = v;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
            improved_any = true;
        }
        if !improved_any {
            step *= 0.5;
        }
    }
    p
}

/// Multi-start maximization of `sum p^(1 + t)` subject to `H(p) = k` over
/// probability vectors of length `n <= 6`. `budget` is the number of restarts;
/// restart `i` draws from its own stream of `seed`.
pub fn oracle_max_power_sum(n: usize, k: f64, t: f64, budget: usize, seed: u64) -> Result<OracleResult> {
    check_oracle_args(n, k, t)?;
    if n < 3 {
        return Err(Error::domain("with two symbols the constraint fixes the point up to order"));
    }
    if budget == 0 {
        return Err(Error::domain("oracle budget must be at least one restart"));
    }
    let best = (0..budget)
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(restart as u64);
            let p = local_search(n, k, t, &mut rng);
            (power_sum(&p, t), restart, p)
        })
        .reduce_with(|x, y| match x.0.total_cmp(&y.0) {
            std::cmp::Ordering::Less => y,
            std::cmp::Ordering::Greater => x,
            std::cmp::Ordering::Equal => if x.1 <= y.1 { x } else { y },
        })
        .expect("budget is positive");
    OracleResult::from_point(best.2, k, t)
}

/// Exhaustive scan of the 2-simplex (`N = 3`) at `resolution`, keeping points
/// within a band of `H(p) = k`, projecting each onto the constraint by
/// re-splitting the last two coordinates, then refining the best one.
pub fn grid_oracle_2simplex(k: f64, t: f64, resolution: f64) -> Result<OracleResult> {
    if !(1e-4..=1e-2).contains(&resolution) {
        return Err(Error::domain(format!(
            "grid resolution must lie in [1e-4, 1e-2], got {resolution}"
        )));
    }
    let ln3 = 3f64.ln();
    if (k - ln3).abs() <= 1e-12 {
        return OracleResult::from_point(vec![1.0 / 3.0; 3], k, t);
    }
    check_oracle_args(3, k, t)?;

    let steps = (1.0 / resolution).round() as usize;
    let band = 5.0 * resolution;
    // Best projected candidate as (value, first coordinate, order of the pair).
    let mut best: Option<(f64, f64, bool)> = None;
    let projected = |p1: f64, flip: bool| -> Option<(f64, Vec<f64>)> {
        let (s, rs) = split_pair(1.0 - p1, k - plogp_neg(p1))?;
        let p = if flip { vec![p1, rs, s] } else { vec![p1, s, rs] };
        Some((power_sum(&p, t), p))
    };
    for i in 0..=steps {
        let p1 = i as f64 * resolution;
        for j in 0..=(steps - i) {
            let p2 = j as f64 * resolution;
            let p3 = (1.0 - p1 - p2).max(0.0);
            let h = plogp_neg(p1) + plogp_neg(p2) + plogp_neg(p3);
            if (h - k).abs() > band {
                continue;
            }
            let flip = p2 > p3;
            if let Some((v, _)) = projected(p1, flip) {
                if best.is_none_or(|(bv, _, _)| v > bv) {
                    best = Some((v, p1, flip));
                }
            }
        }
    }
    let (mut value, mut center, flip) =
        best.ok_or_else(|| Error::domain(format!("no grid point within the band of H = {k}")))?;

    let mut half = resolution;
    while half > 1e-15 {
        for i in 0..=40 {
            let p1 = center - half + 2.0 * half * i as f64 / 40.0;
            if p1 <= 0.0 || p1 >= 1.0 {
                continue;
            }
            if let Some((v, _)) = projected(p1, flip) {
                if v > value {
                    value = v;
                    center = p1;
                }
            }
        }
        half /= 10.0;
    }
    let (_, point) = projected(center, flip).expect("center stays feasible");
    OracleResult::from_point(point, k, t)
}

/// Empirical frequency with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    pub frequency: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub sources: Vec<TwoLevelDistribution>,
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    pub deviation_grid: Vec<f64>,
    /// Frequency of `sum surprise < sum H - t`, the side certificates rely on.
    pub lower_tail: Vec<TailEstimate>,
    /// Frequency of `sum surprise > sum H + t`.
    pub upper_tail: Vec<TailEstimate>,
    /// Frequency of `|sum surprise - sum H| > t`.
    pub two_sided_tail: Vec<TailEstimate>,
    /// [`tail_epsilon`] at the largest source deficiency.
    pub analytic_tail: Vec<f64>,
    /// [`tail_epsilon_two_sided`] at the same deficiency.
    pub analytic_two_sided: Vec<f64>,
}

impl SimulationReport {
    /// Grid points where a one-sided frequency exceeds the analytic tail, or
    /// the two-sided frequency exceeds the union bound, by more than
    /// `sigmas` standard errors.
    pub fn violations(&self, sigmas: f64) -> Vec<usize> {
        let above = |e: &TailEstimate, bound: f64| e.frequency > bound + sigmas * e.std_error;
        (0..self.deviation_grid.len())
            .filter(|&i| {
                above(&self.lower_tail[i], self.analytic_tail[i])
                    || above(&self.upper_tail[i], self.analytic_tail[i])
                    || above(&self.two_sided_tail[i], self.analytic_two_sided[i])
            })
            .collect()
    }
}

/// Margin, in binomial standard errors, for Monte Carlo checks.
pub const MONTE_CARLO_SIGMAS: f64 = 3.0;

/// Minimum number of trials accepted by [`simulate_tail`].
pub const MIN_TRIALS: u64 = 1000;

/// Trials are split into this many blocks, each with its own random stream,
/// so results do not depend on the thread count.
const SIMULATION_BLOCKS: u64 = 64;

/// Draw `trials` sequences of `n` independent samples from `sources`
/// (recycled when shorter than `n`) and count how often the total centered
/// surprise falls below `-t` or above `t` for each grid deviation `t`.
pub fn simulate_tail(
    sources: &[TwoLevelDistribution],
    n: u64,
    deviation_grid: &[f64],
    trials: u64,
    seed: u64,
) -> Result<SimulationReport> {
    if deviation_grid.is_empty() {
        return Err(Error::domain("deviation grid is empty"));
    }
    if let Some(t) = deviation_grid.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::domain(format!("deviation {t} must be finite and non-negative")));
    }
    if trials < MIN_TRIALS {
        return Err(Error::domain(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    if n == 0 {
        return Err(Error::domain("sample count must be positive"));
    }
    if sources.is_empty() || (sources.len() != 1 && sources.len() as u64 != n) {
        return Err(Error::domain(format!(
            "need one source or exactly n = {n} sources, got {}",
            sources.len()
        )));
    }
    let alphabet: Alphabet = sources[0].alphabet();
    if sources.iter().any(|s| s.alphabet() != alphabet) {
        return Err(Error::domain("all sources must share one alphabet"));
    }

    // Per source: (theta, surprise minus entropy on heavy, on light).
    let laws: Vec<(f64, f64, f64)> = sources
        .iter()
        .map(|s| {
            let (up, down) = s.centered_surprise();
            (s.theta(), -up, -down)
        })
        .collect();

    let per_block = trials / SIMULATION_BLOCKS;
    let extra = trials % SIMULATION_BLOCKS;
    let slots = deviation_grid.len();
    // Per grid point: lower-tail hits, then upper-tail hits.
    let counts = (0..SIMULATION_BLOCKS)
        .into_par_iter()
        .map(|block| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(block);
            let mine = per_block + u64::from(block < extra);
            let mut hits = vec![0u64; 2 * slots];
            for _ in 0..mine {
                let mut total = 0.0;
                for i in 0..n as usize {
                    let (theta, heavy, light) = laws[i % laws.len()];
                    total += if rng.gen::<f64>() < theta { heavy } else { light };
                }
                for (j, &t) in deviation_grid.iter().enumerate() {
                    hits[j] += u64::from(total < -t);
                    hits[slots + j] += u64::from(total > t);
                }
            }
            hits
        })
        .reduce(
            || vec![0u64; 2 * slots],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    let estimate = |c: u64| {
        let f = c as f64 / trials as f64;
        TailEstimate {
            frequency: f,
            std_error: (f * (1.0 - f) / trials as f64).sqrt(),
        }
    };
    let lower_tail: Vec<TailEstimate> = counts[..slots].iter().map(|&c| estimate(c)).collect();
    let upper_tail: Vec<TailEstimate> = counts[slots..].iter().map(|&c| estimate(c)).collect();
    let two_sided_tail = (0..slots)
        .map(|j| estimate(counts[j] + counts[slots + j]))
        .collect();

    let delta = sources
        .iter()
        .map(|s| s.deficiency())
        .fold(0.0, f64::max);
    let queries = deviation_grid
        .iter()
        .map(|&t| TailQuery::new(n, alphabet, delta, t))
        .collect::<Result<Vec<_>>>()?;
    let analytic_tail = queries.iter().map(tail_epsilon).collect::<Result<Vec<_>>>()?;
    let analytic_two_sided = queries
        .iter()
        .map(tail_epsilon_two_sided)
        .collect::<Result<Vec<_>>>()?;

    Ok(SimulationReport {
        sources: sources.to_vec(),
        n,
        trials,
        seed,
        deviation_grid: deviation_grid.to_vec(),
        lower_tail,
        upper_tail,
        two_sided_tail,
        analytic_tail,
        analytic_two_sided,
    })
}
