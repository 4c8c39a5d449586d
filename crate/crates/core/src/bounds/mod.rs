//! Closed-form moments, tail bounds and ψ₂ bounds for the coefficient.
//!
//! Every function here refuses to evaluate outside the hypotheses of the
//! inequality it implements (`l ≠ 0`, `N ≠ 2l`, `m < N/2`, `K > √N/2`)
//! rather than returning a number that was never claimed. Tail bounds are
//! returned raw: values above 1 are vacuous but correct.

mod qfunc;

use std::f64::consts::{E, LN_2, PI};

use serde::Serialize;

use crate::error::{domain, hypothesis, Result};
use crate::model::{dft_atom, ModelParams, Part};

pub use qfunc::{normal_pdf, normal_two_sided_quantile, q_function, q_sandwich};

fn check_t(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("threshold t must be finite and >= 0, got {t}")))
    }
}

fn check_frequency(params: &ModelParams) -> Result<()> {
    if params.is_dc() {
        return Err(hypothesis("formula needs l != 0"));
    }
    if params.is_degenerate_2l() {
        return Err(hypothesis("formula needs N != 2l"));
    }
    Ok(())
}

fn check_sparse(n: u32, m: u32) -> Result<()> {
    if m == 0 || m > n {
        return Err(domain(format!("need 1 <= m <= N, got N={n} m={m}")));
    }
    if 2 * u64::from(m) >= u64::from(n) {
        return Err(hypothesis(format!("formula needs m < N/2, got N={n} m={m}")));
    }
    Ok(())
}

/// Clamp a raw tail bound to a probability.
pub fn effective(bound: f64) -> f64 {
    bound.clamp(0.0, 1.0)
}

/// `(Var X, Var U, Var V) = (m(N−m)/N, m(N−m)/(2N), m(N−m)/(2N))`,
/// valid for `l ≠ 0` and `N ≠ 2l`.
pub fn variance_formula(params: &ModelParams) -> Result<(f64, f64, f64)> {
    check_frequency(params)?;
    let (n, m) = (f64::from(params.n()), f64::from(params.m()));
    let var_x = m * (n - m) / n;
    Ok((var_x, var_x / 2.0, var_x / 2.0))
}

/// Bounded-difference constants `c_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McDiarmidCoefficients {
    c: Vec<f64>,
}

impl McDiarmidCoefficients {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if c.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(domain("bounded-difference constants must be finite and >= 0"));
        }
        Ok(Self { c })
    }

    /// Constants of the coefficient viewed as a function of the mask bits:
    /// `|cos(2πkl/N)|` for the real part, `|sin(2πkl/N)|` for the imaginary
    /// part, and `1` for the modulus.
    pub fn for_part(params: &ModelParams, part: Part) -> Result<Self> {
        let c = (1..=params.n())
            .map(|k| {
                let a = dft_atom(k, params.l(), params.n())?;
                Ok(match part {
                    Part::Real => a.re.abs(),
                    Part::Imag => a.im.abs(),
                    Part::Modulus | Part::ModulusCentered | Part::Complex => 1.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(c)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.c
    }

    pub fn sum_of_squares(&self) -> f64 {
        crate::sum::compensated_sum(self.c.iter().map(|x| x * x))
    }
}

/// `2·exp(−2t²/Σc_k²)`.
pub fn mcdiarmid_bound(c: &McDiarmidCoefficients, t: f64) -> Result<f64> {
    check_t(t)?;
    let s = c.sum_of_squares();
    if !(s > 0.0) {
        return Err(domain("bounded-difference constants are all zero"));
    }
    Ok(2.0 * (-2.0 * t * t / s).exp())
}

fn check_n(n: u32) -> Result<()> {
    if n == 0 {
        Err(domain("N must be at least 1"))
    } else {
        Ok(())
    }
}

/// `2·exp(−4t²/N)`, bounding `P(|U| ≥ t)` and `P(|V| ≥ t)`.
pub fn tail_bound_uv(n: u32, t: f64) -> Result<f64> {
    check_n(n)?;
    check_t(t)?;
    Ok(2.0 * (-4.0 * t * t / f64::from(n)).exp())
}

/// `2·exp(−2t²/N)`, bounding `P(||X| − E|X|| ≥ t)`.
pub fn tail_bound_mod(n: u32, t: f64) -> Result<f64> {
    check_n(n)?;
    check_t(t)?;
    Ok(2.0 * (-2.0 * t * t / f64::from(n)).exp())
}

/// Exponent coefficient `ln((N−m)/m)/(N−2m)` of the entropy-type bound.
fn entropy_coeff(n: u32, m: u32) -> f64 {
    let (n, m) = (f64::from(n), f64::from(m));
    ((n - m) / m).ln() / (n - 2.0 * m)
}

/// `exp(−t²·ln((N−m)/m)/(N−2m))` for `m < N/2`: the same as
/// `exp(−ln((1−p)/p)·t²/(N(1−2p)))` with `p = m/N`, in integer form.
pub fn tail_bound_entropy(n: u32, m: u32, t: f64) -> Result<f64> {
    check_sparse(n, m)?;
    check_t(t)?;
    Ok((-t * t * entropy_coeff(n, m)).exp())
}

/// `exp(−max{4t²/N − ln 2, t²·ln((N−m)/m)/(N−2m)})` for `m < N/2`.
pub fn tail_bound_combined(n: u32, m: u32, t: f64) -> Result<f64> {
    check_sparse(n, m)?;
    check_t(t)?;
    let first = 4.0 * t * t / f64::from(n) - LN_2;
    let second = t * t * entropy_coeff(n, m);
    Ok((-first.max(second)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CrossoverKind {
    /// The entropy branch is the larger exponent for every `t ≥ 0`.
    SecondForAllT,
    /// The `4t²/N − ln 2` branch takes over for `t > t_star`.
    FirstBeyondTStar,
}

/// Which branch of the combined bound's maximum is active.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossoverVerdict {
    pub kind: CrossoverKind,
    pub t_star: Option<f64>,
    /// `4/N`.
    pub coeff_first: f64,
    /// `ln((N−m)/m)/(N−2m)`.
    pub coeff_second: f64,
}

/// Compare the quadratic coefficients of both branches.
///
/// If `coeff_second ≥ coeff_first` the second branch wins for all `t`
/// (the first one carries a `−ln 2` handicap); otherwise the branches cross
/// at `t* = √(ln 2/(coeff_first − coeff_second))`.
pub fn crossover_region(n: u32, m: u32) -> Result<CrossoverVerdict> {
    check_sparse(n, m)?;
    let coeff_first = 4.0 / f64::from(n);
    let coeff_second = entropy_coeff(n, m);
    Ok(if coeff_second >= coeff_first {
        CrossoverVerdict { kind: CrossoverKind::SecondForAllT, t_star: None, coeff_first, coeff_second }
    } else {
        CrossoverVerdict {
            kind: CrossoverKind::FirstBeyondTStar,
            t_star: Some((LN_2 / (coeff_first - coeff_second)).sqrt()),
            coeff_first,
            coeff_second,
        }
    })
}

/// `n^{n+1} N^n / (2^{2n−1} e^{n−1})`, an upper bound on `E[U^{2n}]`.
pub fn moment_bound(n_big: u32, order: u32) -> Result<f64> {
    check_n(n_big)?;
    if order == 0 {
        return Err(domain("moment order n must be >= 1"));
    }
    let k = f64::from(order);
    let log = (k + 1.0) * k.ln() + k * f64::from(n_big).ln() - (2.0 * k - 1.0) * LN_2 - (k - 1.0);
    Ok(log.exp())
}

/// `1 + 8eNK²/(4K² − N)²`, an upper bound on `E[exp(U²/K²)]` for `K > √N/2`.
pub fn exp_moment_bound(n: u32, k: f64) -> Result<f64> {
    check_n(n)?;
    let nf = f64::from(n);
    if !(k > nf.sqrt() / 2.0) {
        return Err(hypothesis(format!("exp-moment bound needs K > sqrt(N)/2, got K={k}")));
    }
    let k2 = k * k;
    let gap = 4.0 * k2 - nf;
    Ok(1.0 + 8.0 * E * nf * k2 / (gap * gap))
}

/// The constant `(√(2e) + √(2e+4))/4`.
pub fn psi2_upper_constant() -> f64 {
    ((2.0 * E).sqrt() + (2.0 * E + 4.0).sqrt()) / 4.0
}

/// `√N·(√(2e) + √(2e+4))/4`, the scale at which [`exp_moment_bound`] equals 2.
pub fn psi2_upper(n: u32) -> Result<f64> {
    check_n(n)?;
    Ok(f64::from(n).sqrt() * psi2_upper_constant())
}

/// `N/√ln 2`, from `‖X‖ψ₂ ≤ ‖X‖∞/√ln 2` with `‖U‖∞ ≤ N`.
pub fn psi2_sup_upper(n: u32) -> Result<f64> {
    check_n(n)?;
    Ok(f64::from(n) / LN_2.sqrt())
}

/// `(N + 8t²)·√π/(t√N) · Q(2√2·t/√N)`, a Q-function form of the `U`/`V`
/// tail bound; it is never smaller than [`tail_bound_uv`].
pub fn tail_bound_q(n: u32, t: f64) -> Result<f64> {
    check_n(n)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(domain(format!("Q-form bound needs finite t > 0, got {t}")));
    }
    let nf = f64::from(n);
    let x = 2.0 * 2f64.sqrt() * t / nf.sqrt();
    Ok((nf + 8.0 * t * t) * PI.sqrt() / (t * nf.sqrt()) * q_function(x))
}

fn ln_choose(n: u32, k: u32) -> f64 {
    libm::lgamma(f64::from(n) + 1.0) - libm::lgamma(f64::from(k) + 1.0) - libm::lgamma(f64::from(n - k) + 1.0)
}

/// `P(Binomial(n_trials, p_num/p_den) = k)`, via log-gamma; zero outside `[0, n_trials]`.
pub fn binomial_pmf(n_trials: u32, p_num: u32, p_den: u32, k: i64) -> Result<f64> {
    if p_den == 0 || p_num > p_den {
        return Err(domain(format!("probability {p_num}/{p_den} outside [0, 1]")));
    }
    if k < 0 || k > i64::from(n_trials) {
        return Ok(0.0);
    }
    let k = k as u32;
    let fails = n_trials - k;
    if p_num == 0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    if p_num == p_den {
        return Ok(if fails == 0 { 1.0 } else { 0.0 });
    }
    let ln_den = f64::from(p_den).ln();
    let ln_p = f64::from(p_num).ln() - ln_den;
    let ln_q = f64::from(p_den - p_num).ln() - ln_den;
    Ok((ln_choose(n_trials, k) + f64::from(k) * ln_p + f64::from(fails) * ln_q).exp())
}

/// `P(B′ − B″ = k)` for independent `B′, B″ ~ Binomial(l, p_num/p_den)`,
/// by direct convolution.
pub fn diff_binomial_pmf(l: u32, p_num: u32, p_den: u32, k: i64) -> Result<f64> {
    if k.abs() > i64::from(l) {
        binomial_pmf(l, p_num, p_den, 0)?;
        return Ok(0.0);
    }
    let terms = (0..=i64::from(l))
        .map(|j| Ok(binomial_pmf(l, p_num, p_den, j + k)? * binomial_pmf(l, p_num, p_den, j)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(crate::sum::compensated_sum(terms))
}
