//! Surprise exponential moments, sub-exponential envelopes and tail bounds.
//!
//! For a two-level distribution the centered surprise `Z = H - ln(1/P(x))`
//! takes two values, so its MGF and central moments have closed forms.
//! From those we get `(sigma^2, b)` envelopes, the tail of a sum of `n`
//! independent surprises with deficiency at most `delta`, and min-entropy
//! certificates: with probability at least `1 - epsilon` the total surprise is
//! at least `n (ln N - delta) - t`.

use rayon::prelude::*;
use serde::Serialize;

use crate::alphabet::{nats_to_bits, Alphabet};
use crate::error::{Error, Result};
use crate::extremal::{bias_from_deficiency, from_deficiency, regime, Regime, TwoLevelDistribution};

/// `E exp(t Z)` for the centered surprise `Z = H - ln(1/P(x))`, `t >= -1`.
pub fn mgf_exact(tl: &TwoLevelDistribution, t: f64) -> Result<f64> {
    if !(t.is_finite() && t >= -1.0) {
        return Err(Error::domain(format!(
            "surprise MGF is unbounded below t = -1, got t = {t}"
        )));
    }
    let theta = tl.theta();
    if theta >= 1.0 || tl.bias() == 0.0 {
        return Ok(1.0);
    }
    let (up, down) = tl.centered_surprise();
    // The light term can be huge times tiny; combine in the log domain.
    let heavy = theta * (t * up).exp();
    let light = ((-theta).ln_1p() + t * down).exp();
    Ok(heavy + light)
}

/// Central moment `E Z^j` of the centered surprise.
pub fn central_moment(tl: &TwoLevelDistribution, j: u32) -> f64 {
    match j {
        0 => 1.0,
        1 => 0.0,
        _ => {
            let theta = tl.theta();
            if theta >= 1.0 || tl.bias() == 0.0 {
                return 0.0;
            }
            let rest = 1.0 - theta;
            let e = (j - 1) as i32;
            theta * rest * (rest.powi(e) - (-theta).powi(e)) * tl.log_ratio().powi(j as i32)
        }
    }
}

/// Multipliers on the envelope formulas. The large-bias regime uses
/// `sigma^2 = sigma_large * gamma ln^2(gamma N)` and
/// `b = max(b_large * ln(gamma N), 1)`; the small-bias regime uses
/// `sigma^2 = sigma_small * gamma^2 N` and `b = max(gamma N, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeConstants {
    pub sigma_large: f64,
    pub sigma_small: f64,
    pub b_large: f64,
}

impl EnvelopeConstants {
    /// Output of [`calibrate_envelope`] on [`calibration_grid`], frozen.
    pub const CALIBRATED: Self = Self {
        sigma_large: 8.0,
        sigma_small: 2.0,
        b_large: 1.0,
    };

    const UNIT: Self = Self {
        sigma_large: 1.0,
        sigma_small: 1.0,
        b_large: 1.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubExpParams {
    pub sigma2: f64,
    pub b: f64,
    pub regime: Regime,
}

/// Envelope of the worst-case surprise at deficiency `delta_def` (nats),
/// using [`EnvelopeConstants::CALIBRATED`].
pub fn subexp_params(alphabet: Alphabet, delta_def: f64) -> Result<SubExpParams> {
    subexp_params_with(alphabet, delta_def, &EnvelopeConstants::CALIBRATED)
}

pub fn subexp_params_with(
    alphabet: Alphabet,
    delta_def: f64,
    constants: &EnvelopeConstants,
) -> Result<SubExpParams> {
    let gamma = bias_from_deficiency(alphabet, delta_def)?;
    Ok(params_for_bias(alphabet, gamma, constants))
}

fn params_for_bias(alphabet: Alphabet, gamma: f64, c: &EnvelopeConstants) -> SubExpParams {
    let scaled = gamma * alphabet.size();
    let regime = regime(alphabet, gamma);
    match regime {
        Regime::LargeBias => {
            let log = scaled.ln();
            SubExpParams {
                sigma2: c.sigma_large * gamma * log * log,
                b: (c.b_large * log).max(1.0),
                regime,
            }
        }
        Regime::SmallBias | Regime::Boundary => SubExpParams {
            sigma2: c.sigma_small * gamma * gamma * alphabet.size(),
            b: scaled.max(1.0),
            regime,
        },
    }
}

/// `(sum sigma_i^2, max b_i)` for a sum of independent variables. The
/// regime of the result is the largest-bias regime among the inputs.
pub fn aggregate(params: &[SubExpParams]) -> Result<SubExpParams> {
    let first = params
        .first()
        .ok_or_else(|| Error::domain("cannot aggregate an empty parameter list"))?;
    Ok(params.iter().skip(1).fold(*first, |acc, p| SubExpParams {
        sigma2: acc.sigma2 + p.sigma2,
        b: acc.b.max(p.b),
        regime: acc.regime.max(p.regime),
    }))
}

/// Smallest value of `exp(sigma^2 t^2 / 2) - mgf(t)` over `points` evenly
/// spaced `t` in `[-1/b, 1/b]`.
pub fn envelope_min_slack(tl: &TwoLevelDistribution, params: &SubExpParams, points: usize) -> f64 {
    let half = 1.0 / params.b;
    let points = points.max(2);
    (0..points)
        .map(|i| {
            let t = -half + 2.0 * half * i as f64 / (points - 1) as f64;
            let mgf = mgf_exact(tl, t).expect("b >= 1 keeps t >= -1");
            (params.sigma2 * t * t / 2.0).exp() - mgf
        })
        .fold(f64::INFINITY, f64::min)
}

/// Slack tolerated by the envelope check.
pub const ENVELOPE_SLACK: f64 = -1e-12;

/// Number of `t` points per grid cell in the envelope check.
pub const ENVELOPE_POINTS: usize = 401;

/// Bias values as multiples of `1/N` used to calibrate and validate envelopes.
const SCALED_BIASES: [f64; 16] = [
    1e-4, 1e-3, 0.01, 0.1, 0.5, 1.0, 1.5, 1.9, 2.1, 2.5, 3.0, 5.0, 10.0, 100.0, 1e3, 1e5,
];

/// Heavy-atom masses added to reach deep into the large-bias regime.
const HEAVY_MASSES: [f64; 5] = [0.25, 0.5, 0.9, 0.99, 0.999_999];

/// `(N, delta)` cells spanning both bias regimes for
/// `N in {16, 256, 2^16, 2^32}`.
pub fn calibration_grid() -> Vec<(Alphabet, f64)> {
    let mut grid = Vec::new();
    for bits in [4u32, 8, 16, 32] {
        let alphabet = Alphabet::from_bits(bits).expect("valid width");
        let n = alphabet.size();
        let max_bias = 1.0 - 1.0 / n;
        let biases = SCALED_BIASES
            .iter()
            .map(|s| s / n)
            .chain(HEAVY_MASSES.iter().map(|theta| theta - 1.0 / n))
            .filter(|&g| g > 0.0 && g < max_bias);
        for gamma in biases {
            let tl = TwoLevelDistribution::from_bias(alphabet, gamma).expect("bias in range");
            grid.push((alphabet, tl.deficiency()));
        }
        grid.push((alphabet, alphabet.ln_size()));
    }
    grid
}

/// Worst envelope slack over `grid` for the given constants, restricted to
/// cells whose regime satisfies `select`.
fn worst_slack(
    grid: &[(Alphabet, f64)],
    constants: &EnvelopeConstants,
    select: impl Fn(Regime) -> bool + Sync,
) -> f64 {
    grid.par_iter()
        .filter_map(|&(alphabet, delta)| {
            let tl = from_deficiency(alphabet, delta).ok()?;
            let params = subexp_params_with(alphabet, delta, constants).ok()?;
            select(params.regime).then(|| envelope_min_slack(&tl, &params, ENVELOPE_POINTS))
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// Smallest power-of-two multipliers (`1, 2, 4, ...`) for which every cell of
/// `grid` satisfies `exp(sigma^2 t^2 / 2) >= mgf(t) + ENVELOPE_SLACK` on
/// `|t| <= 1/b`. `b_large` stays at one.
pub fn calibrate_envelope(grid: &[(Alphabet, f64)]) -> Result<EnvelopeConstants> {
    let search = |set: &dyn Fn(f64) -> EnvelopeConstants, select: &(dyn Fn(Regime) -> bool + Sync)| {
        (0..40)
            .map(|k| 2f64.powi(k))
            .find(|&c| worst_slack(grid, &set(c), select) >= ENVELOPE_SLACK)
            .ok_or_else(|| Error::Inconsistent("no envelope multiplier below 2^40".into()))
    };
    let sigma_large = search(
        &|c| EnvelopeConstants {
            sigma_large: c,
            ..EnvelopeConstants::UNIT
        },
        &|r| r == Regime::LargeBias,
    )?;
    let sigma_small = search(
        &|c| EnvelopeConstants {
            sigma_small: c,
            ..EnvelopeConstants::UNIT
        },
        &|r| r != Regime::LargeBias,
    )?;
    Ok(EnvelopeConstants {
        sigma_large,
        sigma_small,
        b_large: 1.0,
    })
}

/// Which pair of tail formulas applies: a `ln(N delta)` factor when
/// `delta > 1/N`, none otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TailRegime {
    HighDeficiency,
    LowDeficiency,
}

pub fn tail_regime(alphabet: Alphabet, delta_def: f64) -> TailRegime {
    if delta_def > 0.0 && alphabet.ln_size() + delta_def.ln() > 0.0 {
        TailRegime::HighDeficiency
    } else {
        TailRegime::LowDeficiency
    }
}

/// `ln(N delta)` in the high-deficiency regime, `1` otherwise.
pub fn log_factor(alphabet: Alphabet, delta_def: f64) -> f64 {
    match tail_regime(alphabet, delta_def) {
        TailRegime::HighDeficiency => alphabet.ln_size() + delta_def.ln(),
        TailRegime::LowDeficiency => 1.0,
    }
}

/// `n` independent samples over `alphabet`, each with deficiency at most
/// `delta_def` nats, and a total deviation `t` nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailQuery {
    pub n: u64,
    pub alphabet: Alphabet,
    pub delta_def: f64,
    pub t: f64,
}

impl TailQuery {
    pub fn new(n: u64, alphabet: Alphabet, delta_def: f64, t: f64) -> Result<Self> {
        let q = Self {
            n,
            alphabet,
            delta_def,
            t,
        };
        q.validate()?;
        Ok(q)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::domain("sample count must be positive"));
        }
        check_deficiency(self.alphabet, self.delta_def)?;
        if !(self.t.is_finite() && self.t >= 0.0) {
            return Err(Error::domain(format!(
                "deviation must be finite and non-negative, got {}",
                self.t
            )));
        }
        Ok(())
    }

    /// `n delta`, where the two branches meet.
    pub fn crossover(&self) -> f64 {
        self.n as f64 * self.delta_def
    }
}

fn check_deficiency(alphabet: Alphabet, delta_def: f64) -> Result<()> {
    if !(delta_def.is_finite() && (0.0..=alphabet.ln_size()).contains(&delta_def)) {
        return Err(Error::domain(format!(
            "deficiency {delta_def} outside [0, ln {alphabet}]"
        )));
    }
    Ok(())
}

/// `exp(-t^2 / (2 n delta l))`, with `l` from [`log_factor`]. Written as
/// `(t / n delta) * (t / 2 l)` so that it equals [`linear_tail`] bit for bit at
/// `t = n delta`.
pub fn quadratic_tail(q: &TailQuery) -> f64 {
    let l = log_factor(q.alphabet, q.delta_def);
    (-(q.t / q.crossover()) * (q.t / (2.0 * l))).exp()
}

/// `exp(-t / (2 l))`.
pub fn linear_tail(q: &TailQuery) -> f64 {
    let l = log_factor(q.alphabet, q.delta_def);
    (-(q.t / (2.0 * l))).exp()
}

/// Bound on each one-sided tail, `Pr[sum surprise < sum H - t]` and
/// `Pr[sum surprise > sum H + t]`; quadratic branch up to `t = n delta`,
/// linear beyond it. Use [`tail_epsilon_two_sided`] for `|.| > t`. A zero deficiency means every surprise
/// is constant, so any positive deviation has probability zero.
pub fn tail_epsilon(q: &TailQuery) -> Result<f64> {
    q.validate()?;
    if q.t == 0.0 {
        return Ok(1.0);
    }
    if q.delta_def == 0.0 {
        return Ok(0.0);
    }
    let l = log_factor(q.alphabet, q.delta_def);
    if l.is_nan() || l <= 0.0 {
        return Err(Error::Inconsistent(format!(
            "non-positive log factor {l} in tail regime"
        )));
    }
    let value = if q.t <= q.crossover() {
        quadratic_tail(q)
    } else {
        linear_tail(q)
    };
    Ok(value.min(1.0))
}

/// [`tail_epsilon`] doubled (capped at one) for a union bound over both tails.
pub fn tail_epsilon_two_sided(q: &TailQuery) -> Result<f64> {
    Ok((2.0 * tail_epsilon(q)?).min(1.0))
}

/// Baseline tail `exp(-c n delta^2 / ln^2 N)` at per-sample accuracy `delta_acc`.
pub fn hr_tail(n: u64, alphabet: Alphabet, delta_acc: f64, c: f64) -> Result<f64> {
    if !(delta_acc.is_finite() && delta_acc >= 0.0) {
        return Err(Error::domain(format!("accuracy must be non-negative, got {delta_acc}")));
    }
    check_hr_constant(c)?;
    let ln_n = alphabet.ln_size();
    Ok((-c * n as f64 * (delta_acc / ln_n) * (delta_acc / ln_n)).exp())
}

fn check_hr_constant(c: f64) -> Result<()> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::domain(format!("baseline constant must be positive, got {c}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE", tag = "name")]
pub enum Method {
    /// Deficiency-aware tails from [`tail_epsilon`].
    Deficiency,
    /// Alphabet-only baseline from [`hr_tail`] with exponent constant `constant`.
    HolensteinRenner { constant: f64 },
}

impl Method {
    pub const DEFAULT_HR_CONSTANT: f64 = 1.0;

    pub fn holenstein_renner() -> Self {
        Method::HolensteinRenner {
            constant: Self::DEFAULT_HR_CONSTANT,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Method::Deficiency => "ours",
            Method::HolensteinRenner { .. } => "hr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub n: u64,
    pub alphabet: Alphabet,
    pub delta_def: f64,
    pub epsilon: f64,
    pub method: Method,
    /// Total deviation `t` in nats.
    pub deviation_t: f64,
    /// `max(0, n (ln N - delta) - t)` in nats.
    pub min_entropy_bound: f64,
    /// Bits per symbol.
    pub rate_per_symbol: f64,
}

impl Certificate {
    pub fn min_entropy_bits(&self) -> f64 {
        nats_to_bits(self.min_entropy_bound)
    }

    /// Min-entropy per bit of a `symbol_bits`-bit symbol.
    pub fn rate_per_bit(&self, symbol_bits: u32) -> f64 {
        self.rate_per_symbol / f64::from(symbol_bits)
    }

    /// Tail at the certified deviation under this certificate's method.
    pub fn tail_at_deviation(&self) -> Result<f64> {
        match self.method {
            Method::Deficiency => tail_epsilon(&TailQuery::new(
                self.n,
                self.alphabet,
                self.delta_def,
                self.deviation_t,
            )?),
            Method::HolensteinRenner { constant } => hr_tail(
                self.n,
                self.alphabet,
                self.deviation_t / self.n as f64,
                constant,
            ),
        }
    }
}

/// Grow `t` by a few ulps until `tail(t) <= epsilon`, absorbing the rounding
/// of a closed-form inversion.
fn settle(mut t: f64, epsilon: f64, tail: impl Fn(f64) -> f64) -> f64 {
    let mut step = t.abs().max(f64::MIN_POSITIVE) * f64::EPSILON;
    for _ in 0..256 {
        if tail(t) <= epsilon {
            break;
        }
        t += step;
        step *= 2.0;
    }
    t
}

/// Smallest deviation `t` with `tail_epsilon <= epsilon`, by inverting the
/// branch that applies.
pub fn deficiency_deviation(n: u64, alphabet: Alphabet, delta_def: f64, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    TailQuery::new(n, alphabet, delta_def, 0.0)?;
    if delta_def == 0.0 {
        return Ok(0.0);
    }
    let l = log_factor(alphabet, delta_def);
    let log_inv = -epsilon.ln();
    let crossover = n as f64 * delta_def;
    let quadratic = (2.0 * crossover * l * log_inv).sqrt();
    let t = if quadratic <= crossover {
        quadratic
    } else {
        2.0 * l * log_inv
    };
    Ok(settle(t, epsilon, |t| {
        tail_epsilon(&TailQuery {
            n,
            alphabet,
            delta_def,
            t,
        })
        .unwrap_or(1.0)
    }))
}

/// Deviation `t = ln N sqrt(n ln(1/epsilon) / c)` solving the baseline tail.
pub fn hr_deviation(n: u64, alphabet: Alphabet, epsilon: f64, c: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_hr_constant(c)?;
    if n == 0 {
        return Err(Error::domain("sample count must be positive"));
    }
    let t = alphabet.ln_size() * (n as f64 * -epsilon.ln() / c).sqrt();
    Ok(settle(t, epsilon, |t| {
        hr_tail(n, alphabet, t / n as f64, c).unwrap_or(1.0)
    }))
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

/// Min-entropy certificate for `n` independent samples over `alphabet` with
/// deficiency at most `delta_def` nats, at error probability `epsilon`.
pub fn certificate(
    n: u64,
    alphabet: Alphabet,
    delta_def: f64,
    epsilon: f64,
    method: Method,
) -> Result<Certificate> {
    let deviation_t = match method {
        Method::Deficiency => deficiency_deviation(n, alphabet, delta_def, epsilon)?,
        Method::HolensteinRenner { constant } => {
            check_deficiency(alphabet, delta_def)?;
            hr_deviation(n, alphabet, epsilon, constant)?
        }
    };
    let mean_total = n as f64 * (alphabet.ln_size() - delta_def);
    let min_entropy_bound = (mean_total - deviation_t).max(0.0);
    Ok(Certificate {
        n,
        alphabet,
        delta_def,
        epsilon,
        method,
        deviation_t,
        min_entropy_bound,
        rate_per_symbol: nats_to_bits(min_entropy_bound) / n as f64,
    })
}

/// One certificate per method at sample count `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub n: u64,
    pub certificates: Vec<Certificate>,
}

/// Certificates for every `n` in `1..=n_max`, rows in increasing `n`.
pub fn curve_min_entropy(
    n_max: u64,
    alphabet: Alphabet,
    delta_def: f64,
    epsilon: f64,
    methods: &[Method],
) -> Result<Vec<CurveRow>> {
    if n_max == 0 {
        return Err(Error::domain("n_max must be at least 1"));
    }
    (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let certificates = methods
                .iter()
                .map(|&m| certificate(n, alphabet, delta_def, epsilon, m))
                .collect::<Result<Vec<_>>>()?;
            Ok(CurveRow { n, certificates })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::bits_to_nats;
    use crate::entropy::surprise_values;
    use crate::extremal::solve_theta;
    use proptest::prelude::*;

    fn two_level(n: u64, theta: f64) -> TwoLevelDistribution {
        TwoLevelDistribution::from_theta(Alphabet::new(n).unwrap(), theta).unwrap()
    }

    #[test]
    fn mgf_examples() {
        let tl = two_level(10, 0.4);
        assert_eq!(mgf_exact(&tl, 0.0).unwrap(), 1.0);
        let u = TwoLevelDistribution::uniform(Alphabet::new(10).unwrap());
        for t in [-1.0, -0.3, 0.7, 5.0] {
            assert_eq!(mgf_exact(&u, t).unwrap(), 1.0);
        }
        assert!(mgf_exact(&tl, -1.0 - 1e-9).is_err());
    }

    #[test]
    fn mgf_at_minus_one_is_n_exp_minus_entropy() {
        let tl = two_level(4, 0.6);
        let k = tl.shannon_entropy();
        assert!((mgf_exact(&tl, -1.0).unwrap() - 4.0 * (-k).exp()).abs() < 1e-12);
    }

    #[test]
    fn mgf_matches_direct_expectation() {
        for (n, theta) in [(3u64, 0.5), (16, 0.1), (256, 0.9)] {
            let tl = two_level(n, theta);
            let d = tl.as_distribution().unwrap();
            let h = tl.shannon_entropy();
            for t in [-1.0, -0.5, 0.25, 1.0, 3.0] {
                let direct: f64 = surprise_values(&d)
                    .iter()
                    .map(|(s, p)| p * (t * (h - s)).exp())
                    .sum();
                let exact = mgf_exact(&tl, t).unwrap();
                assert!((exact - direct).abs() < 1e-12 * direct.max(1.0), "{n} {theta} {t}");
            }
        }
    }

    #[test]
    fn central_moment_examples() {
        let tl = two_level(8, 0.5);
        assert_eq!(central_moment(&tl, 0), 1.0);
        assert_eq!(central_moment(&tl, 1), 0.0);
        let l = tl.log_ratio();
        let variance = 0.5 * 0.5 * l * l;
        assert!((central_moment(&tl, 2) - variance).abs() < 1e-14);

        let d = tl.as_distribution().unwrap();
        let h = tl.shannon_entropy();
        let direct: f64 = surprise_values(&d)
            .iter()
            .map(|(s, p)| p * (h - s).powi(3))
            .sum();
        assert!((central_moment(&tl, 3) - direct).abs() < 1e-12);
    }

    #[test]
    fn calibration_is_frozen() {
        let calibrated = calibrate_envelope(&calibration_grid()).unwrap();
        assert_eq!(calibrated, EnvelopeConstants::CALIBRATED);
    }

    #[test]
    fn subexp_examples() {
        let a = Alphabet::new(256).unwrap();
        let zero = subexp_params(a, 0.0).unwrap();
        assert_eq!(zero.sigma2, 0.0);
        assert_eq!(zero.b, 1.0);

        let delta = bits_to_nats(0.024);
        let p = subexp_params(a, delta).unwrap();
        let tl = from_deficiency(a, delta).unwrap();
        assert_eq!(p.regime, regime(a, tl.bias()));
        assert!(envelope_min_slack(&tl, &p, ENVELOPE_POINTS) >= ENVELOPE_SLACK);

        let big = Alphabet::new(1 << 20).unwrap();
        let p = subexp_params(big, 1.0).unwrap();
        assert_eq!(p.regime, Regime::LargeBias);
        let g = bias_from_deficiency(big, 1.0).unwrap();
        let ratio = p.sigma2 / (g * (g * big.size()).ln().powi(2));
        assert!((ratio / EnvelopeConstants::CALIBRATED.sigma_large - 1.0).abs() < 1e-12);
        assert!(p.b >= 1.0);
    }

    #[test]
    fn small_bias_width_follows_scaled_bias() {
        let a = Alphabet::new(256).unwrap();
        for scaled in [0.01, 0.5, 1.5, 1.99] {
            let tl = TwoLevelDistribution::from_bias(a, scaled / 256.0).unwrap();
            let p = subexp_params(a, tl.deficiency()).unwrap();
            assert_eq!(p.regime, Regime::SmallBias);
            assert!((p.b - f64::max(scaled, 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn aggregate_examples() {
        let p = SubExpParams {
            sigma2: 1.5,
            b: 2.0,
            regime: Regime::SmallBias,
        };
        assert_eq!(aggregate(&[p]).unwrap(), p);
        let many = aggregate(&[p; 5]).unwrap();
        assert_eq!((many.sigma2, many.b), (7.5, 2.0));
        let q = SubExpParams {
            sigma2: 2.0,
            b: 3.0,
            regime: Regime::LargeBias,
        };
        let one = SubExpParams {
            sigma2: 1.0,
            b: 1.0,
            regime: Regime::SmallBias,
        };
        let mixed = aggregate(&[one, q]).unwrap();
        assert_eq!((mixed.sigma2, mixed.b, mixed.regime), (3.0, 3.0, Regime::LargeBias));
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn tail_examples() {
        let a = Alphabet::new(256).unwrap();
        let delta = bits_to_nats(0.024);
        assert_eq!(tail_epsilon(&TailQuery::new(100, a, delta, 0.0).unwrap()).unwrap(), 1.0);

        // Quadratic branch at t = n delta / 2, hand-evaluated:
        // exp(-(50 delta)^2 / (2 * 100 delta * ln(256 delta))).
        let t = 100.0 * delta / 2.0;
        let expected = (-(t * t) / (2.0 * 100.0 * delta * (256.0 * delta).ln())).exp();
        let got = tail_epsilon(&TailQuery::new(100, a, delta, t).unwrap()).unwrap();
        assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");

        assert!(TailQuery::new(100, a, delta, -1.0).is_err());
        assert!(TailQuery::new(0, a, delta, 1.0).is_err());
    }

    #[test]
    fn low_deficiency_branch_uses_unit_log_factor() {
        let a = Alphabet::new(256).unwrap();
        let delta = 1e-3;
        assert_eq!(tail_regime(a, delta), TailRegime::LowDeficiency);
        let q = TailQuery::new(10, a, delta, 0.005).unwrap();
        let expected = (-(0.005f64 * 0.005) / (2.0 * 10.0 * delta)).exp();
        assert!((tail_epsilon(&q).unwrap() - expected).abs() < 1e-15);
        let q = TailQuery::new(10, a, delta, 3.0).unwrap();
        assert!((tail_epsilon(&q).unwrap() - (-1.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn branches_meet_at_crossover() {
        let a = Alphabet::new(256).unwrap();
        for delta in [1e-3, 0.1, 2.0] {
            let q = TailQuery::new(37, a, delta, 37.0 * delta).unwrap();
            assert_eq!(quadratic_tail(&q), linear_tail(&q));
        }
    }

    #[test]
    fn hr_tail_examples() {
        let a = Alphabet::new(256).unwrap();
        assert_eq!(hr_tail(10, a, 0.0, 1.0).unwrap(), 1.0);
        let single = hr_tail(10, a, 0.3, 1.0).unwrap();
        let double = hr_tail(20, a, 0.3, 1.0).unwrap();
        assert!((double - single * single).abs() < 1e-15);

        let eps: f64 = 1e-6;
        let delta = 0.5;
        let c = 2.0;
        let log_n = a.ln_size();
        let n = log_n * log_n / (delta * delta) * (-eps.ln()) / c;
        // n must be integral for hr_tail; pick delta so it is.
        let n_int = n.ceil();
        let delta_exact = (log_n * log_n * (-eps.ln()) / (c * n_int)).sqrt();
        let tail = hr_tail(n_int as u64, a, delta_exact, c).unwrap();
        assert!((tail - eps).abs() < 1e-15);
    }

    #[test]
    fn certificate_no_confidence_limit() {
        let a = Alphabet::new(256).unwrap();
        let delta = bits_to_nats(0.024);
        let c = certificate(100, a, delta, 1.0 - 1e-12, Method::Deficiency).unwrap();
        assert!(c.deviation_t < 1e-4);
        assert!((c.min_entropy_bound - 100.0 * (a.ln_size() - delta)).abs() < 1e-4);
        assert!(certificate(100, a, delta, 1.0, Method::Deficiency).is_err());
        assert!(certificate(100, a, delta, 0.0, Method::Deficiency).is_err());
    }

    #[test]
    fn certificate_zero_deficiency() {
        let a = Alphabet::new(256).unwrap();
        let c = certificate(10, a, 0.0, 2f64.powi(-60), Method::Deficiency).unwrap();
        assert_eq!(c.deviation_t, 0.0);
        assert_eq!(c.min_entropy_bound, 10.0 * a.ln_size());
    }

    #[test]
    fn certificate_clamps_at_zero() {
        let a = Alphabet::new(256).unwrap();
        let c = certificate(1, a, 0.5, 0.5, Method::holenstein_renner()).unwrap();
        assert!(c.min_entropy_bound >= 0.0);
        let c = certificate(1, a, 0.5, 1e-9, Method::Deficiency).unwrap();
        assert_eq!(c.min_entropy_bound, 0.0);
        assert_eq!(c.rate_per_symbol, 0.0);
    }

    #[test]
    fn curve_rows() {
        let a = Alphabet::new(256).unwrap();
        let rows = curve_min_entropy(1, a, 0.01, 0.01, &[Method::Deficiency]).unwrap();
        assert_eq!(rows.len(), 1);
        let delta = bits_to_nats(0.024);
        let rows = curve_min_entropy(
            400,
            a,
            delta,
            2f64.powi(-60),
            &[Method::Deficiency, Method::holenstein_renner()],
        )
        .unwrap();
        let ours: Vec<f64> = rows.iter().map(|r| r.certificates[0].rate_per_symbol).collect();
        assert!(ours.windows(2).all(|w| w[1] >= w[0]));
        assert!(curve_min_entropy(0, a, delta, 0.1, &[Method::Deficiency]).is_err());
    }

    #[test]
    fn moment_series_matches_mgf() {
        let tl = solve_theta(Alphabet::new(16).unwrap(), 2.0).unwrap();
        for t in [-1.0f64, -0.5, 0.5, 1.0] {
            let mut series = 1.0;
            let mut fact = 1.0;
            for j in 2..=40u32 {
                fact *= j as f64;
                series += t.powi(j as i32) * central_moment(&tl, j) / fact;
            }
            // 1 + t * M_1 / 1! has M_1 = 0; the j = 1 factorial is one.
            assert!((series - mgf_exact(&tl, t).unwrap()).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn certificates_are_sound(
            n in 1u64..5000,
            bits in 1u32..40,
            frac in 0.0f64..1.0,
            log_eps in -200.0f64..-0.01,
        ) {
            let a = Alphabet::from_bits(bits).unwrap();
            let delta = frac * a.ln_size();
            let eps = log_eps.exp();
            for m in [Method::Deficiency, Method::holenstein_renner()] {
                let c = certificate(n, a, delta, eps, m).unwrap();
                prop_assert!(c.tail_at_deviation().unwrap() <= eps || delta == 0.0);
                prop_assert!(c.min_entropy_bound >= 0.0);
                prop_assert!(c.min_entropy_bound <= n as f64 * a.ln_size());
            }
        }

        #[test]
        fn tail_non_increasing_in_deviation(
            n in 1u64..1000, frac in 1e-6f64..1.0, t1 in 0.0f64..100.0, dt in 0.0f64..100.0,
        ) {
            let a = Alphabet::new(256).unwrap();
            let delta = frac * a.ln_size();
            let lo = tail_epsilon(&TailQuery::new(n, a, delta, t1).unwrap()).unwrap();
            let hi = tail_epsilon(&TailQuery::new(n, a, delta, t1 + dt).unwrap()).unwrap();
            prop_assert!(hi <= lo);
        }

        #[test]
        fn quadratic_tail_non_decreasing_in_n(
            n in 1u64..1000, extra in 0u64..1000, frac in 1e-6f64..1.0, share in 0.0f64..1.0,
        ) {
            let a = Alphabet::new(256).unwrap();
            let delta = frac * a.ln_size();
            let t = share * n as f64 * delta;
            let small = tail_epsilon(&TailQuery::new(n, a, delta, t).unwrap()).unwrap();
            let large = tail_epsilon(&TailQuery::new(n + extra, a, delta, t).unwrap()).unwrap();
            prop_assert!(large >= small);
        }
    }
}
