//! Exact law of the coefficient by brute force over all 2^N masks.
//!
//! This is the ground truth every closed form and every Monte Carlo
//! estimate is compared against.

mod enumerate;
pub mod psi2;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{ComplexValue, ModelParams, Part};
use crate::sum::{compensated_sum, log_sum_exp};

pub use psi2::{Psi2Definition, Psi2Estimate};

/// Outcome values closer than this are treated as equal.
pub const VALUE_TOL: f64 = 1e-9;

/// Enumeration guard used unless overridden.
pub const DEFAULT_ENUM_GUARD: u32 = 24;

/// Largest guard the oracle accepts.
pub const MAX_ENUM_GUARD: u32 = 26;

/// Default bisection tolerance for the Orlicz norm.
pub const DEFAULT_PSI2_TOL: f64 = 1e-12;

/// Default largest exponent probed by the moment-sup norm.
pub const DEFAULT_P_MAX: f64 = 200.0;

/// Default number of log-spaced grid points for the moment-sup norm.
pub const DEFAULT_P_GRID: usize = 256;

/// One support point of an exact law. For real parts `im` is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub value: ComplexValue,
    pub prob: f64,
}

/// Full law of one [`Part`] of the coefficient: distinct values with
/// positive probabilities summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    params: ModelParams,
    part: Part,
    atoms: Vec<Atom>,
    /// `E|X|`, set for the centered modulus.
    center: Option<f64>,
}

impl ExactDistribution {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn part(&self) -> Part {
        self.part
    }

    /// Atoms sorted by value (lexicographically for complex values).
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// The `E|X|` that was subtracted, for [`Part::ModulusCentered`].
    pub fn center(&self) -> Option<f64> {
        self.center
    }

    fn real_values(&self) -> Result<impl Iterator<Item = (f64, f64)> + Clone + '_> {
        if self.part == Part::Complex {
            return Err(domain("operation needs a real-valued part; use real/imag/modulus"));
        }
        Ok(self.atoms.iter().map(|a| (a.value.re, a.prob)))
    }

    /// `E[f(value)]` with compensated summation.
    pub fn expect<F: Fn(ComplexValue) -> f64>(&self, f: F) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| f(a.value) * a.prob))
    }

    /// Total probability mass (one, up to rounding).
    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.prob))
    }

    /// `E[v^order]` for a real part; for [`Part::Modulus`] this is `E|X|^order`.
    pub fn moment(&self, order: u32) -> Result<f64> {
        if order == 0 {
            return Err(domain("moment order must be positive"));
        }
        let order = i32::try_from(order).map_err(|_| domain("moment order too large"))?;
        Ok(compensated_sum(self.real_values()?.map(|(v, p)| v.powi(order) * p)))
    }

    pub fn variance(&self) -> Result<f64> {
        let mean = self.moment(1)?;
        Ok(compensated_sum(self.real_values()?.map(|(v, p)| (v - mean).powi(2) * p)))
    }

    /// `E[X]` for the complex part.
    pub fn mean_complex(&self) -> ComplexValue {
        ComplexValue::new(self.expect(|x| x.re), self.expect(|x| x.im))
    }

    /// `E|X − E X|²` for the complex part (or the variance of a real part).
    pub fn complex_variance(&self) -> f64 {
        let mean = self.mean_complex();
        self.expect(|x| (x.re - mean.re).powi(2) + (x.im - mean.im).powi(2))
    }

    /// `P(|v| ≥ t)`; values within [`VALUE_TOL`] below `t` count as hits.
    /// The sum is clamped to `[0, 1]` so rounding cannot push it past one.
    pub fn tail(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(domain(format!("tail threshold must be >= 0, got {t}")));
        }
        let cut = t - VALUE_TOL;
        let mass = compensated_sum(self.atoms.iter().filter(|a| self.magnitude(a.value) >= cut).map(|a| a.prob));
        Ok(mass.clamp(0.0, 1.0))
    }

    fn magnitude(&self, v: ComplexValue) -> f64 {
        match self.part {
            Part::Complex => v.modulus(),
            _ => v.re.abs(),
        }
    }

    /// `ln E[exp(v²/K²)]`, computed in log space.
    pub fn log_exp_moment(&self, k: f64) -> Result<f64> {
        if !(k > 0.0) {
            return Err(domain(format!("scale K must be > 0, got {k}")));
        }
        let inv = 1.0 / (k * k);
        let terms = self.real_values()?.map(move |(v, p)| p.ln() + v * v * inv);
        Ok(log_sum_exp(terms))
    }

    /// `E[exp(v²/K²)]`; may be `+inf` when the exponent overflows.
    pub fn exp_moment(&self, k: f64) -> Result<f64> {
        if !(k > 0.0) {
            return Err(domain(format!("scale K must be > 0, got {k}")));
        }
        let inv = 1.0 / (k * k);
        let exponents_small = self.real_values()?.all(|(v, _)| v * v * inv <= 700.0);
        if exponents_small {
            Ok(compensated_sum(self.real_values()?.map(|(v, p)| (v * v * inv).exp() * p)))
        } else {
            Ok(self.log_exp_moment(k)?.exp())
        }
    }

    /// `ln E|v|^p` for real `p > 0`; `-inf` when the variable is a.s. zero.
    pub fn log_abs_moment(&self, p: f64) -> Result<f64> {
        let terms = self
            .real_values()?
            .filter(|(v, _)| *v != 0.0)
            .map(move |(v, prob)| prob.ln() + p * v.abs().ln());
        Ok(log_sum_exp(terms))
    }

    /// `max |v|` over the support (the sup norm).
    pub fn max_abs(&self) -> f64 {
        self.atoms.iter().map(|a| self.magnitude(a.value)).fold(0.0, f64::max)
    }

    /// Whether every support value is zero to within [`VALUE_TOL`].
    pub fn is_zero(&self) -> bool {
        self.max_abs() <= VALUE_TOL
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("distribution serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| domain(format!("invalid distribution JSON: {e}")))
    }
}

#[derive(Serialize, Deserialize)]
struct WireDistribution {
    params: ModelParams,
    part: Part,
    atoms: Vec<WireAtom>,
}

#[derive(Serialize, Deserialize)]
struct WireAtom {
    v: WireValue,
    p: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum WireValue {
    Real(f64),
    Complex([f64; 2]),
}

impl Serialize for ExactDistribution {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| WireAtom {
                v: if self.part == Part::Complex {
                    WireValue::Complex([a.value.re, a.value.im])
                } else {
                    WireValue::Real(a.value.re)
                },
                p: a.prob,
            })
            .collect();
        WireDistribution { params: self.params, part: self.part, atoms }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ExactDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = WireDistribution::deserialize(deserializer)?;
        let atoms = wire
            .atoms
            .into_iter()
            .map(|a| {
                let value = match (wire.part, a.v) {
                    (Part::Complex, WireValue::Complex([re, im])) => ComplexValue::new(re, im),
                    (Part::Complex, WireValue::Real(_)) => {
                        return Err(D::Error::custom("complex part needs [re, im] values"))
                    }
                    (_, WireValue::Real(v)) => ComplexValue::new(v, 0.0),
                    (_, WireValue::Complex(_)) => return Err(D::Error::custom("real part needs scalar values")),
                };
                Ok(Atom { value, prob: a.p })
            })
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { params: wire.params, part: wire.part, atoms, center: None })
    }
}

/// Brute-force oracle with a configurable enumeration guard.
#[derive(Debug, Clone, Copy)]
pub struct Oracle {
    guard: u32,
}

impl Default for Oracle {
    fn default() -> Self {
        Self { guard: DEFAULT_ENUM_GUARD }
    }
}

impl Oracle {
    pub fn with_guard(guard: u32) -> Result<Self> {
        if guard > MAX_ENUM_GUARD {
            return Err(domain(format!("enumeration guard {guard} above the hard limit {MAX_ENUM_GUARD}")));
        }
        Ok(Self { guard })
    }

    pub fn guard(&self) -> u32 {
        self.guard
    }

    pub fn can_enumerate(&self, params: &ModelParams) -> bool {
        params.n() <= self.guard
    }

    /// Law of `part` over all 2^N masks.
    pub fn distribution(&self, params: &ModelParams, part: Part) -> Result<ExactDistribution> {
        if !self.can_enumerate(params) {
            return Err(Error::Capability { n: params.n(), guard: self.guard });
        }
        let sweep = enumerate::sweep(params, part);
        let total = compensated_sum(sweep.groups.iter().map(|g| g.prob.value()));
        let center = (part == Part::ModulusCentered).then(|| sweep.modulus_mean / total);
        let shift = center.unwrap_or(0.0);
        let mut atoms: Vec<Atom> = sweep
            .groups
            .iter()
            .map(|g| {
                let mut value = g.representative();
                value.re -= shift;
                Atom { value, prob: g.prob.value() / total }
            })
            .collect();
        atoms.sort_by(|a, b| {
            a.value.re.total_cmp(&b.value.re).then(a.value.im.total_cmp(&b.value.im))
        });
        Ok(ExactDistribution { params: *params, part, atoms, center })
    }

    /// `E[v^order]` for `part ∈ {Real, Imag, Modulus}`.
    pub fn moment(&self, params: &ModelParams, part: Part, order: u32) -> Result<f64> {
        if !matches!(part, Part::Real | Part::Imag | Part::Modulus) {
            return Err(domain("exact_moment supports real, imag and modulus"));
        }
        self.distribution(params, part)?.moment(order)
    }

    /// `P(|part| ≥ t)`.
    pub fn tail(&self, params: &ModelParams, part: Part, t: f64) -> Result<f64> {
        self.distribution(params, part)?.tail(t)
    }

    /// `E[exp(v²/K²)]` for the real or imaginary part.
    pub fn exp_moment(&self, params: &ModelParams, part: Part, k: f64) -> Result<f64> {
        if !matches!(part, Part::Real | Part::Imag) {
            return Err(domain("exact_exp_moment supports real and imag"));
        }
        self.distribution(params, part)?.exp_moment(k)
    }

    /// Orlicz ψ₂ norm: the smallest `K` with `E[exp(v²/K²)] ≤ 2`.
    pub fn psi2_norm(&self, params: &ModelParams, part: Part, tol: f64) -> Result<Psi2Estimate> {
        let dist = self.distribution(params, part)?;
        psi2::orlicz_norm_exact(&dist, tol)
    }

    /// Moment-sup norm `sup_{p≥1} p^{-1/2} (E|v|^p)^{1/p}`.
    pub fn psi2_moment_norm(
        &self,
        params: &ModelParams,
        part: Part,
        p_max: f64,
        grid: usize,
    ) -> Result<Psi2Estimate> {
        let dist = self.distribution(params, part)?;
        psi2::moment_sup_norm(&dist, p_max, grid)
    }
}

/// [`Oracle::distribution`] with the default guard.
pub fn enumerate_distribution(params: &ModelParams, part: Part) -> Result<ExactDistribution> {
    Oracle::default().distribution(params, part)
}

pub fn exact_moment(params: &ModelParams, part: Part, order: u32) -> Result<f64> {
    Oracle::default().moment(params, part, order)
}

pub fn exact_tail(params: &ModelParams, part: Part, t: f64) -> Result<f64> {
    Oracle::default().tail(params, part, t)
}

pub fn exact_exp_moment(params: &ModelParams, part: Part, k: f64) -> Result<f64> {
    Oracle::default().exp_moment(params, part, k)
}

pub fn exact_psi2_norm(params: &ModelParams, part: Part, tol: f64) -> Result<Psi2Estimate> {
    Oracle::default().psi2_norm(params, part, tol)
}

pub fn exact_psi2_moment_norm(
    params: &ModelParams,
    part: Part,
    p_max: f64,
    grid: usize,
) -> Result<Psi2Estimate> {
    Oracle::default().psi2_moment_norm(params, part, p_max, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{evaluate_complex, SupportMask};

    fn params(n: u32, l: u32, m: u32) -> ModelParams {
        ModelParams::new(n, l, m).unwrap()
    }

    fn real_atoms(d: &ExactDistribution) -> Vec<(f64, f64)> {
        d.atoms().iter().map(|a| (a.value.re, a.prob)).collect()
    }

    #[test]
    fn two_point_frequency_law() {
        // atoms -1, +1 with p = 1/2
        let d = enumerate_distribution(&params(2, 1, 1), Part::Real).unwrap();
        let atoms = real_atoms(&d);
        assert_eq!(atoms.len(), 3);
        for ((v, p), (ev, ep)) in atoms.iter().zip([(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)]) {
            assert!((v - ev).abs() < 1e-15 && (p - ep).abs() < 1e-15);
        }
    }

    #[test]
    fn single_certain_atom() {
        let d = enumerate_distribution(&params(1, 0, 1), Part::Real).unwrap();
        assert_eq!(real_atoms(&d), vec![(1.0, 1.0)]);
    }

    #[test]
    fn moment_examples() {
        let p = params(8, 1, 4);
        assert!(exact_moment(&p, Part::Real, 1).unwrap().abs() < 1e-12);
        assert!((exact_moment(&p, Part::Real, 2).unwrap() - 1.0).abs() < 1e-12);
        assert!(exact_moment(&params(8, 1, 8), Part::Real, 2).unwrap().abs() < 1e-12);
        assert!(exact_moment(&p, Part::Complex, 2).is_err());
        assert!(exact_moment(&p, Part::Real, 0).is_err());
    }

    #[test]
    fn tail_examples() {
        let p = params(3, 1, 1);
        assert!((exact_tail(&p, Part::Real, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(exact_tail(&p, Part::Real, 4.0).unwrap(), 0.0);
        assert!((exact_tail(&p, Part::Real, 1.0).unwrap() - 6.0 / 27.0).abs() < 1e-15);
        assert!(exact_tail(&p, Part::Real, -1.0).is_err());
    }

    #[test]
    fn tail_brute_force_against_mask_loop() {
        // independent path: evaluate every mask directly, no grouping
        let p = params(7, 2, 3);
        let q: f64 = 3.0 / 7.0;
        for t in [0.3, 0.9, 1.5, 2.2] {
            let mut brute = 0.0;
            for bits in 0u64..(1 << 7) {
                let mask = SupportMask::from_bits(bits, 7).unwrap();
                let k = mask.len() as i32;
                let w = q.powi(k) * (1.0 - q).powi(7 - k);
                if evaluate_complex(&mask, &p).unwrap().im.abs() >= t {
                    brute += w;
                }
            }
            let exact = exact_tail(&p, Part::Imag, t).unwrap();
            assert!((exact - brute).abs() < 1e-14, "t={t}: {exact} vs {brute}");
        }
    }

    #[test]
    fn exp_moment_examples() {
        let p = params(2, 1, 1);
        let v = exact_exp_moment(&p, Part::Real, 1.0).unwrap();
        assert!((v - (0.5 + 0.5 * std::f64::consts::E)).abs() < 1e-14);
        let big = exact_exp_moment(&params(8, 1, 4), Part::Real, 1e9).unwrap();
        assert!((big - 1.0).abs() < 1e-12);
        let mid = exact_exp_moment(&params(8, 1, 4), Part::Real, 10.0).unwrap();
        assert!(mid > 1.0 && mid < 2.0);
        assert!(exact_exp_moment(&p, Part::Real, 0.0).is_err());
        assert!(exact_exp_moment(&p, Part::Modulus, 1.0).is_err());
    }

    #[test]
    fn exp_moment_survives_overflowing_exponents() {
        let d = enumerate_distribution(&params(12, 0, 6), Part::Real).unwrap();
        let log = d.log_exp_moment(0.1).unwrap();
        assert!(log.is_finite() && log > 700.0);
        assert_eq!(d.exp_moment(0.1).unwrap(), f64::INFINITY);
    }

    #[test]
    fn guard_refuses_large_n() {
        let o = Oracle::with_guard(10).unwrap();
        assert_eq!(
            o.distribution(&params(11, 1, 1), Part::Real),
            Err(Error::Capability { n: 11, guard: 10 })
        );
        assert!(Oracle::with_guard(27).is_err());
        assert!(matches!(
            enumerate_distribution(&params(25, 1, 1), Part::Real),
            Err(Error::Capability { .. })
        ));
    }

    #[test]
    fn distribution_invariants() {
        for part in Part::ALL {
            let d = enumerate_distribution(&params(10, 3, 4), part).unwrap();
            assert!((d.total_mass() - 1.0).abs() < 1e-12);
            assert!(d.atoms().iter().all(|a| a.prob > 0.0));
            for w in d.atoms().windows(2) {
                let gap = (w[1].value.re - w[0].value.re).hypot(w[1].value.im - w[0].value.im);
                assert!(gap > VALUE_TOL);
            }
            let bound = if part == Part::ModulusCentered { 20.0 } else { 10.0 };
            assert!(d.max_abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn centered_modulus_has_zero_mean() {
        let d = enumerate_distribution(&params(9, 2, 4), Part::ModulusCentered).unwrap();
        let m = enumerate_distribution(&params(9, 2, 4), Part::Modulus).unwrap();
        assert!(d.moment(1).unwrap().abs() < 1e-12);
        assert!((d.center().unwrap() - m.moment(1).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn json_shape() {
        let d = enumerate_distribution(&params(2, 1, 1), Part::Real).unwrap();
        let json = d.to_json();
        assert_eq!(
            json,
            r#"{"params":{"N":2,"l":1,"m":1},"part":"real","atoms":[{"v":-1.0,"p":0.25},{"v":0.0,"p":0.5},{"v":1.0,"p":0.25}]}"#
        );
        assert_eq!(ExactDistribution::from_json(&json).unwrap(), d);

        let c = enumerate_distribution(&params(4, 1, 2), Part::Complex).unwrap();
        let back = ExactDistribution::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert!(ExactDistribution::from_json(r#"{"params":{"N":2,"l":1,"m":1},"part":"complex","atoms":[{"v":1.0,"p":1.0}]}"#).is_err());
    }

    #[test]
    fn enumeration_is_thread_count_independent() {
        let p = params(19, 4, 6);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(6).build().unwrap();
        let a = one.install(|| enumerate_distribution(&p, Part::Complex).unwrap());
        let b = many.install(|| enumerate_distribution(&p, Part::Complex).unwrap());
        assert_eq!(a, b);
    }
}
