//! The random variable itself: parameters, DFT atoms, mask evaluation and
//! Bernoulli mask sampling.
//!
//! A mask is a subset Σ ⊆ {1, …, N}; index `n` is stored at bit `n − 1`.
//! The l-th coefficient of the mask is `X = Σ_{n∈Σ} exp(−2πj·n·l/N)`, with
//! real part `U` and imaginary part `V`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::sum::CompensatedSum;

/// Integer parameters `(N, l, m)`: signal length, frequency index and
/// expected support size. The inclusion probability is kept as the exact
/// ratio `m/N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ModelParams {
    #[serde(rename = "N")]
    n: u32,
    l: u32,
    m: u32,
}

#[derive(Deserialize)]
struct RawParams {
    #[serde(rename = "N")]
    n: u32,
    l: u32,
    m: u32,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(raw.n, raw.l, raw.m)
    }
}

impl ModelParams {
    /// Requires `1 ≤ m ≤ N` and `0 ≤ l ≤ N − 1`.
    pub fn new(n: u32, l: u32, m: u32) -> Result<Self> {
        if n == 0 {
            return Err(domain("N must be at least 1"));
        }
        if l >= n {
            return Err(domain(format!("l = {l} must satisfy 0 <= l <= N-1 = {}", n - 1)));
        }
        if m == 0 || m > n {
            return Err(domain(format!("m = {m} must satisfy 1 <= m <= N = {n}")));
        }
        Ok(Self { n, l, m })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Inclusion probability `m/N` as an exact `(numerator, denominator)` pair.
    pub fn p_ratio(&self) -> (u32, u32) {
        (self.m, self.n)
    }

    pub fn p(&self) -> f64 {
        f64::from(self.m) / f64::from(self.n)
    }

    /// `l == 0`: every atom equals 1 and `X` is binomial.
    pub fn is_dc(&self) -> bool {
        self.l == 0
    }

    /// `N == 2l`: atoms alternate ±1.
    pub fn is_degenerate_2l(&self) -> bool {
        u64::from(self.n) == 2 * u64::from(self.l)
    }

    /// The same `N, m` at another frequency.
    pub fn with_l(&self, l: u32) -> Result<Self> {
        Self::new(self.n, l, self.m)
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N={} l={} m={}", self.n, self.l, self.m)
    }
}

/// A complex number produced by mask evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl ComplexValue {
    pub const ZERO: Self = Self { re: 0.0, im: 0.0 };

    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re, -self.im)
    }
}

impl std::ops::Add for ComplexValue {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.im + rhs.im)
    }
}

/// Which view of the coefficient is being studied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    /// `X` itself.
    Complex,
    /// `U = Re X`.
    Real,
    /// `V = Im X` (carries the minus sign of the atom).
    Imag,
    /// `|X|`.
    Modulus,
    /// `|X| − E|X|`; needs the expectation from an oracle or an estimate.
    ModulusCentered,
}

impl Part {
    pub const ALL: [Part; 5] = [
        Part::Complex,
        Part::Real,
        Part::Imag,
        Part::Modulus,
        Part::ModulusCentered,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Part::Complex => "complex",
            Part::Real => "real",
            Part::Imag => "imag",
            Part::Modulus => "modulus",
            Part::ModulusCentered => "modulus_centered",
        }
    }

    pub fn is_real_valued(&self) -> bool {
        !matches!(self, Part::Complex)
    }

    /// Project a complex value onto this part. `center` is used only by
    /// [`Part::ModulusCentered`].
    pub fn project(&self, x: ComplexValue, center: f64) -> f64 {
        match self {
            Part::Complex | Part::Modulus => x.modulus(),
            Part::Real => x.re,
            Part::Imag => x.im,
            Part::ModulusCentered => x.modulus() - center,
        }
    }
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Part {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Part::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| domain(format!("unknown part {s:?}")))
    }
}

/// Realization of the Bernoulli vector as a subset of `{1, …, N}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SupportMask {
    n: u32,
    words: Vec<u64>,
}

impl SupportMask {
    pub fn empty(n: u32) -> Self {
        Self { n, words: vec![0; (n as usize).div_ceil(64)] }
    }

    pub fn full(n: u32) -> Self {
        let mut mask = Self::empty(n);
        for idx in 1..=n {
            mask.set(idx);
        }
        mask
    }

    /// Mask from the low `n` bits of `bits` (`n ≤ 64`); bit `i` is index `i + 1`.
    pub fn from_bits(bits: u64, n: u32) -> Result<Self> {
        if n > 64 {
            return Err(domain("from_bits supports N <= 64"));
        }
        if n < 64 && bits >> n != 0 {
            return Err(domain(format!("bits {bits:#x} exceed N = {n}")));
        }
        let mut mask = Self::empty(n);
        if n > 0 {
            mask.words[0] = bits;
        }
        Ok(mask)
    }

    pub fn from_indices<I: IntoIterator<Item = u32>>(n: u32, indices: I) -> Result<Self> {
        let mut mask = Self::empty(n);
        for idx in indices {
            if idx == 0 || idx > n {
                return Err(domain(format!("index {idx} outside [1, {n}]")));
            }
            mask.set(idx);
        }
        Ok(mask)
    }

    fn set(&mut self, idx: u32) {
        let bit = (idx - 1) as usize;
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn contains(&self, idx: u32) -> bool {
        if idx == 0 || idx > self.n {
            return false;
        }
        let bit = (idx - 1) as usize;
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    /// `|Σ|`.
    pub fn len(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Members in increasing order (1-based).
    pub fn indices(&self) -> impl Iterator<Item = u32> + '_ {
        (1..=self.n).filter(move |&i| self.contains(i))
    }

    /// Low word, for `N ≤ 64`.
    pub fn bits(&self) -> Option<u64> {
        (self.n <= 64).then(|| self.words.first().copied().unwrap_or(0))
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(domain("masks of different length"));
        }
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect();
        Ok(Self { n: self.n, words })
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }
}

/// `(cos θ, −sin θ)` for `θ = 2π·r/N`, with `r` already reduced modulo `N`.
///
/// Residues past the half turn are folded onto `N − r` so that frequencies
/// `l` and `N − l` produce exactly conjugate atoms; quarter turns are exact.
fn unit_root(r: u64, n: u64) -> ComplexValue {
    debug_assert!(r < n);
    if r == 0 {
        return ComplexValue::new(1.0, 0.0);
    }
    let (folded, flip) = if 2 * r > n { (n - r, true) } else { (r, false) };
    let (s, c) = if 4 * folded == n {
        (1.0, 0.0)
    } else if 2 * folded == n {
        (0.0, -1.0)
    } else {
        (2.0 * PI * folded as f64 / n as f64).sin_cos()
    };
    let minus_sin = if flip { s } else { -s };
    ComplexValue::new(c, minus_sin)
}

/// `exp(−2πj·n·l/N)` for `1 ≤ n ≤ N`, `0 ≤ l ≤ N − 1`.
///
/// The angle is reduced with integer arithmetic on `n·l mod N` before any
/// trigonometric call.
pub fn dft_atom(n: u32, l: u32, big_n: u32) -> Result<ComplexValue> {
    if big_n == 0 || n == 0 || n > big_n {
        return Err(domain(format!("atom index n = {n} outside [1, {big_n}]")));
    }
    if l >= big_n {
        return Err(domain(format!("frequency l = {l} outside [0, {}]", big_n - 1)));
    }
    let modulus = u64::from(big_n);
    Ok(unit_root(u64::from(n) * u64::from(l) % modulus, modulus))
}

/// All `N` atoms for one `(N, l)`, indexed by `n − 1`.
#[derive(Debug, Clone)]
pub struct AtomTable {
    atoms: Vec<ComplexValue>,
}

impl AtomTable {
    pub fn new(params: &ModelParams) -> Self {
        let n = u64::from(params.n());
        let l = u64::from(params.l());
        let atoms = (1..=n).map(|idx| unit_root(idx * l % n, n)).collect();
        Self { atoms }
    }

    /// Atom for 1-based index `idx`.
    pub fn get(&self, idx: u32) -> ComplexValue {
        self.atoms[(idx - 1) as usize]
    }

    pub fn as_slice(&self) -> &[ComplexValue] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Compensated sum over a mask given as a bit word (`N ≤ 64`).
    pub fn sum_bits(&self, bits: u64) -> ComplexValue {
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        let mut rest = bits;
        while rest != 0 {
            let bit = rest.trailing_zeros() as usize;
            re.add(self.atoms[bit].re);
            im.add(self.atoms[bit].im);
            rest &= rest - 1;
        }
        ComplexValue::new(re.value(), im.value())
    }

    pub fn sum_mask(&self, mask: &SupportMask) -> ComplexValue {
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        for idx in mask.indices() {
            let a = self.get(idx);
            re.add(a.re);
            im.add(a.im);
        }
        ComplexValue::new(re.value(), im.value())
    }
}

/// The result of [`evaluate`]: complex for [`Part::Complex`], real otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Complex(ComplexValue),
    Real(f64),
}

impl Outcome {
    pub fn as_real(&self) -> Option<f64> {
        match self {
            Outcome::Real(v) => Some(*v),
            Outcome::Complex(_) => None,
        }
    }

    pub fn as_complex(&self) -> Option<ComplexValue> {
        match self {
            Outcome::Complex(c) => Some(*c),
            Outcome::Real(_) => None,
        }
    }
}

/// The complex coefficient of a mask.
pub fn evaluate_complex(mask: &SupportMask, params: &ModelParams) -> Result<ComplexValue> {
    if mask.n() != params.n() {
        return Err(domain(format!("mask has N = {} but params have N = {}", mask.n(), params.n())));
    }
    Ok(AtomTable::new(params).sum_mask(mask))
}

/// Evaluate a mask under one [`Part`].
///
/// [`Part::ModulusCentered`] has no meaning for a single mask without an
/// expectation and is rejected; use [`Part::project`] with a known center.
pub fn evaluate(mask: &SupportMask, params: &ModelParams, part: Part) -> Result<Outcome> {
    let x = evaluate_complex(mask, params)?;
    match part {
        Part::Complex => Ok(Outcome::Complex(x)),
        Part::ModulusCentered => Err(domain("modulus_centered needs E|X|; project with a center instead")),
        other => Ok(Outcome::Real(other.project(x, 0.0))),
    }
}

/// Bernoulli(m/N) inclusion decided on one 64-bit draw: include iff
/// `u·N < m·2^64`, compared exactly in 128-bit arithmetic.
#[inline]
pub fn bernoulli_include(u: u64, m: u32, n: u32) -> bool {
    u128::from(u) * u128::from(n) < u128::from(m) << 64
}

/// Draw a mask: each index independently with probability exactly `m/N`.
/// Consumes one `u64` per index, in index order.
pub fn sample_mask<R: RngCore + ?Sized>(params: &ModelParams, rng: &mut R) -> SupportMask {
    let mut mask = SupportMask::empty(params.n());
    for idx in 1..=params.n() {
        if bernoulli_include(rng.next_u64(), params.m(), params.n()) {
            mask.set(idx);
        }
    }
    mask
}

/// Draw a mask and return its coefficient directly, consuming the RNG
/// exactly as [`sample_mask`] does.
#[inline]
pub fn sample_value<R: RngCore + ?Sized>(
    atoms: &AtomTable,
    params: &ModelParams,
    rng: &mut R,
) -> ComplexValue {
    let (m, n) = params.p_ratio();
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for a in atoms.as_slice() {
        if bernoulli_include(rng.next_u64(), m, n) {
            re.add(a.re);
            im.add(a.im);
        }
    }
    ComplexValue::new(re.value(), im.value())
}

/// `(Σ_{k=1..N} cos(4πkl/N), Σ_{k=1..N} sin(4πkl/N))` for `1 ≤ l ≤ N − 1`.
///
/// Vanishes (to within `1e-10·N`) unless `N = 2l`, where it is `(N, 0)`.
pub fn trig_sums(big_n: u32, l: u32) -> Result<(f64, f64)> {
    if l == 0 {
        return Err(domain("trig_sums needs l >= 1"));
    }
    if l >= big_n {
        return Err(domain(format!("l = {l} must be below N = {big_n}")));
    }
    let n = u64::from(big_n);
    let mut cos_sum = CompensatedSum::new();
    let mut sin_sum = CompensatedSum::new();
    for k in 1..=n {
        let a = unit_root(2 * k * u64::from(l) % n, n);
        cos_sum.add(a.re);
        sin_sum.add(-a.im);
    }
    Ok((cos_sum.value(), sin_sum.value()))
}

/// Closed-form identification of the law of `X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpecialForm {
    /// `l = 0`: `X ~ Binomial(trials, p_num/p_den)`.
    Binomial { trials: u32, p_num: u32, p_den: u32 },
    /// `N = 2l`: `X = B′ − B″` with independent `B′, B″ ~ Binomial(trials, p)`.
    DifferenceOfBinomials { trials: u32, p_num: u32, p_den: u32 },
    Generic,
}

pub fn special_form(params: &ModelParams) -> SpecialForm {
    let (p_num, p_den) = params.p_ratio();
    if params.is_dc() {
        SpecialForm::Binomial { trials: params.n(), p_num, p_den }
    } else if params.is_degenerate_2l() {
        SpecialForm::DifferenceOfBinomials { trials: params.l(), p_num, p_den }
    } else {
        SpecialForm::Generic
    }
}
