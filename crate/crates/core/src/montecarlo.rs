//! Seeded, parallel Monte Carlo estimation of the quantities the oracle
//! computes exactly: moments, tail probabilities and exponential moments.
//!
//! Samples are produced in fixed-size batches. Batch `b` draws from its own
//! ChaCha8 stream seeded with `seed ^ splitmix64(b)`, owns a private
//! [`Accumulator`], and batches are merged in a binary tree ordered by batch
//! index. The result is therefore bit-identical for any number of workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::normal_two_sided_quantile;
use crate::error::{domain, Error, Result};
use crate::model::{sample_value, AtomTable, ModelParams, Part};
use crate::oracle::psi2::{orlicz_bisect, Psi2Definition, Psi2Estimate};
use crate::oracle::VALUE_TOL;
use crate::sum::{compensated_sum, log_sum_exp};

/// Name of the generator and substream rule, echoed in snapshots.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.3); batch b seeded with seed ^ splitmix64(b)";

/// Default ceiling on `samples · N` draws for a single run.
pub const DEFAULT_WORK_CEILING: f64 = 1e11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    /// Samples per work unit.
    pub batch: u64,
    pub confidence: f64,
    /// Upper limit on `samples · N`.
    pub work_ceiling: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { samples: 100_000, seed: 42, batch: 1 << 16, confidence: 0.99, work_ceiling: DEFAULT_WORK_CEILING }
    }
}

impl McConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self { samples, seed, batch: (1 << 16).min(samples.max(1)), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(domain("samples must be positive"));
        }
        if self.batch == 0 || self.batch > self.samples {
            return Err(domain(format!("batch must satisfy 1 <= batch <= samples, got {}", self.batch)));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(domain(format!("confidence must lie in (0, 1), got {}", self.confidence)));
        }
        Ok(())
    }

    fn check_work(&self, params: &ModelParams) -> Result<()> {
        let work = self.samples as f64 * f64::from(params.n());
        if work > self.work_ceiling {
            return Err(Error::Resource(format!(
                "samples*N = {work:.3e} exceeds the ceiling {:.3e}",
                self.work_ceiling
            )));
        }
        Ok(())
    }

    fn batches(&self) -> u64 {
        self.samples.div_ceil(self.batch)
    }

    fn batch_len(&self, b: u64) -> u64 {
        self.batch.min(self.samples - b * self.batch)
    }
}

/// How a confidence half-width was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CiMethod {
    /// Two-sided Hoeffding interval for a mean of `[0, 1]` variables.
    HoeffdingInterval,
    /// Normal approximation with the sample variance; approximate.
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub estimate: f64,
    pub half_width: f64,
    pub n: u64,
    pub method: CiMethod,
}

impl EstimateWithCI {
    pub fn contains(&self, value: f64) -> bool {
        (self.estimate - value).abs() <= self.half_width
    }
}

/// Quantities to record in one pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McQueries {
    /// Real-valued parts to track; [`Part::Complex`] is rejected.
    pub parts: Vec<Part>,
    /// Largest moment order that will be queried.
    pub max_order: u32,
    /// Tail thresholds `t`.
    pub thresholds: Vec<f64>,
    /// Exponential-moment scales `K`.
    pub scales: Vec<f64>,
    /// `E|X|` for [`Part::ModulusCentered`]; estimated by a pilot run when absent.
    pub center: Option<f64>,
}

impl McQueries {
    pub fn new(parts: Vec<Part>) -> Self {
        Self { parts, max_order: 2, thresholds: Vec::new(), scales: Vec::new(), center: None }
    }

    pub fn with_max_order(mut self, order: u32) -> Self {
        self.max_order = order;
        self
    }

    pub fn with_thresholds(mut self, t: Vec<f64>) -> Self {
        self.thresholds = t;
        self
    }

    pub fn with_scales(mut self, k: Vec<f64>) -> Self {
        self.scales = k;
        self
    }

    pub fn with_center(mut self, center: f64) -> Self {
        self.center = Some(center);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.parts.is_empty() {
            return Err(domain("no parts registered"));
        }
        if self.parts.contains(&Part::Complex) {
            return Err(Error::Query("register real and imag instead of complex".into()));
        }
        if self.thresholds.iter().any(|t| !(*t >= 0.0)) {
            return Err(domain("tail thresholds must be >= 0"));
        }
        if self.scales.iter().any(|k| !(*k > 0.0)) {
            return Err(domain("scales K must be > 0"));
        }
        Ok(())
    }
}

/// Running reductions for one part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartAccumulator {
    pub part: Part,
    pub center: f64,
    /// `Σ v^k` for `k = 1 ..= 2·max_order` (`|v|^k` for the modulus).
    pub power_sums: Vec<f64>,
    /// Counts of `|v| ≥ t` per registered threshold.
    pub tail_hits: Vec<u64>,
    /// `Σ exp(v²/K²)` per registered scale.
    pub exp_sums: Vec<f64>,
    /// `Σ exp(2v²/K²)` per registered scale.
    pub exp_sq_sums: Vec<f64>,
}

impl PartAccumulator {
    fn new(part: Part, center: f64, orders: usize, thresholds: usize, scales: usize) -> Self {
        Self {
            part,
            center,
            power_sums: vec![0.0; orders],
            tail_hits: vec![0; thresholds],
            exp_sums: vec![0.0; scales],
            exp_sq_sums: vec![0.0; scales],
        }
    }

    fn merge(&mut self, other: &Self) {
        fn add(a: &mut [f64], b: &[f64]) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        add(&mut self.power_sums, &other.power_sums);
        add(&mut self.exp_sums, &other.exp_sums);
        add(&mut self.exp_sq_sums, &other.exp_sq_sums);
        self.tail_hits.iter_mut().zip(&other.tail_hits).for_each(|(x, y)| *x += y);
    }
}

/// Mergeable single-pass reductions over a stream of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accumulator {
    pub n: u64,
    pub max_order: u32,
    pub thresholds: Vec<f64>,
    pub scales: Vec<f64>,
    pub confidence: f64,
    pub parts: Vec<PartAccumulator>,
}

impl Accumulator {
    fn empty(queries: &McQueries, center: f64, confidence: f64) -> Self {
        let orders = 2 * queries.max_order as usize;
        let parts = queries
            .parts
            .iter()
            .map(|&p| PartAccumulator::new(p, center, orders, queries.thresholds.len(), queries.scales.len()))
            .collect();
        Self {
            n: 0,
            max_order: queries.max_order,
            thresholds: queries.thresholds.clone(),
            scales: queries.scales.clone(),
            confidence,
            parts,
        }
    }

    /// Record one complex sample.
    #[inline]
    pub fn push(&mut self, x: crate::model::ComplexValue) {
        self.n += 1;
        for acc in &mut self.parts {
            let v = acc.part.project(x, acc.center);
            let mut power = v;
            for s in &mut acc.power_sums {
                *s += power;
                power *= v;
            }
            let mag = v.abs();
            for (hits, &t) in acc.tail_hits.iter_mut().zip(&self.thresholds) {
                if mag >= t - VALUE_TOL {
                    *hits += 1;
                }
            }
            let v2 = v * v;
            for ((s, sq), &k) in acc.exp_sums.iter_mut().zip(acc.exp_sq_sums.iter_mut()).zip(&self.scales) {
                let e = (v2 / (k * k)).exp();
                *s += e;
                *sq += e * e;
            }
        }
    }

    /// Combine with an accumulator built from the same queries.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        let same_shape = self.max_order == other.max_order
            && self.thresholds == other.thresholds
            && self.scales == other.scales
            && self.parts.len() == other.parts.len()
            && self.parts.iter().zip(&other.parts).all(|(a, b)| a.part == b.part);
        if !same_shape {
            return Err(Error::Query("cannot merge accumulators built from different queries".into()));
        }
        self.n += other.n;
        for (a, b) in self.parts.iter_mut().zip(&other.parts) {
            a.merge(b);
        }
        Ok(())
    }

    fn part(&self, part: Part) -> Result<&PartAccumulator> {
        self.parts
            .iter()
            .find(|p| p.part == part)
            .ok_or_else(|| Error::Query(format!("part {part} was not registered")))
    }

    fn z(&self) -> f64 {
        normal_two_sided_quantile(self.confidence).expect("confidence validated")
    }

    fn normal_ci(&self, sum: f64, sum_sq: f64) -> EstimateWithCI {
        let n = self.n as f64;
        let mean = sum / n;
        let var = if self.n > 1 { ((sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0) } else { 0.0 };
        EstimateWithCI { estimate: mean, half_width: self.z() * (var / n).sqrt(), n: self.n, method: CiMethod::NormalApprox }
    }

    /// `E[v^order]` with a normal-approximation interval.
    pub fn moment(&self, part: Part, order: u32) -> Result<EstimateWithCI> {
        if order == 0 || order > self.max_order {
            return Err(Error::Query(format!("moment order {order} not recorded (max {})", self.max_order)));
        }
        let acc = self.part(part)?;
        let k = order as usize;
        Ok(self.normal_ci(acc.power_sums[k - 1], acc.power_sums[2 * k - 1]))
    }

    /// `P(|v| ≥ t)` with a two-sided Hoeffding interval.
    pub fn tail(&self, part: Part, t: f64) -> Result<EstimateWithCI> {
        let idx = self
            .thresholds
            .iter()
            .position(|x| x.to_bits() == t.to_bits())
            .ok_or_else(|| Error::Query(format!("threshold t = {t} was not registered before the run")))?;
        let hits = self.part(part)?.tail_hits[idx];
        let n = self.n as f64;
        let half_width = ((2.0 / (1.0 - self.confidence)).ln() / (2.0 * n)).sqrt();
        Ok(EstimateWithCI { estimate: hits as f64 / n, half_width, n: self.n, method: CiMethod::HoeffdingInterval })
    }

    /// `E[exp(v²/K²)]` with a normal-approximation interval.
    pub fn exp_moment(&self, part: Part, k: f64) -> Result<EstimateWithCI> {
        let idx = self
            .scales
            .iter()
            .position(|x| x.to_bits() == k.to_bits())
            .ok_or_else(|| Error::Query(format!("scale K = {k} was not registered before the run")))?;
        let acc = self.part(part)?;
        Ok(self.normal_ci(acc.exp_sums[idx], acc.exp_sq_sums[idx]))
    }
}

/// JSON snapshot with enough context to reproduce the run.
#[derive(Debug, Clone, Serialize)]
pub struct AccumulatorSnapshot<'a> {
    pub rng_algorithm: &'static str,
    pub params: ModelParams,
    pub config: McConfig,
    pub queries: &'a McQueries,
    pub accumulator: &'a Accumulator,
}

pub fn snapshot_json(params: &ModelParams, cfg: &McConfig, queries: &McQueries, acc: &Accumulator) -> String {
    let snap = AccumulatorSnapshot { rng_algorithm: RNG_ALGORITHM, params: *params, config: *cfg, queries, accumulator: acc };
    serde_json::to_string(&snap).expect("snapshot serializes")
}

/// SplitMix64 finalizer, used to decorrelate batch substream seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for batch `b`.
pub fn batch_rng(seed: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ splitmix64(b))
}

/// Pairwise merge in batch-index order.
fn tree_merge(mut level: Vec<Accumulator>) -> Accumulator {
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a.merge(&b).expect("batches share queries");
            }
            next.push(a);
        }
        level = next;
    }
    level.pop().expect("at least one batch")
}

/// Seed offset for the pilot run that estimates `E|X|`.
const PILOT_STREAM: u64 = 0x5049_4C4F_545F_4D43;

fn pilot_center(params: &ModelParams, cfg: &McConfig) -> Result<f64> {
    let pilot_cfg = McConfig { seed: cfg.seed ^ PILOT_STREAM, ..*cfg };
    let acc = run_batches(params, &McQueries::new(vec![Part::Modulus]).with_max_order(1), &pilot_cfg, 0.0)?;
    Ok(acc.moment(Part::Modulus, 1)?.estimate)
}

fn run_batches(params: &ModelParams, queries: &McQueries, cfg: &McConfig, center: f64) -> Result<Accumulator> {
    let atoms = AtomTable::new(params);
    let batches: Vec<Accumulator> = (0..cfg.batches())
        .into_par_iter()
        .map(|b| {
            let mut rng = batch_rng(cfg.seed, b);
            let mut acc = Accumulator::empty(queries, center, cfg.confidence);
            for _ in 0..cfg.batch_len(b) {
                acc.push(sample_value(&atoms, params, &mut rng));
            }
            acc
        })
        .collect();
    Ok(tree_merge(batches))
}

/// Draw `cfg.samples` masks and fill every registered reduction in one pass.
pub fn mc_run(params: &ModelParams, queries: &McQueries, cfg: &McConfig) -> Result<Accumulator> {
    cfg.validate()?;
    queries.validate()?;
    cfg.check_work(params)?;
    let center = if queries.parts.contains(&Part::ModulusCentered) {
        match queries.center {
            Some(c) => c,
            None => pilot_center(params, cfg)?,
        }
    } else {
        0.0
    };
    run_batches(params, queries, cfg, center)
}

/// [`mc_run`] on a dedicated pool with `workers` threads.
pub fn mc_run_with_workers(
    params: &ModelParams,
    queries: &McQueries,
    cfg: &McConfig,
    workers: usize,
) -> Result<Accumulator> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
    pool.install(|| mc_run(params, queries, cfg))
}

/// Tail estimate for a threshold registered before the run.
pub fn mc_tail(acc: &Accumulator, part: Part, t: f64) -> Result<EstimateWithCI> {
    acc.tail(part, t)
}

/// Draw the same sample stream as [`mc_run`] and keep the values of `part`.
pub fn mc_samples(params: &ModelParams, part: Part, cfg: &McConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    cfg.check_work(params)?;
    if part == Part::Complex {
        return Err(Error::Query("sample a real-valued part".into()));
    }
    let center = if part == Part::ModulusCentered { pilot_center(params, cfg)? } else { 0.0 };
    let atoms = AtomTable::new(params);
    let chunks: Vec<Vec<f64>> = (0..cfg.batches())
        .into_par_iter()
        .map(|b| {
            let mut rng = batch_rng(cfg.seed, b);
            (0..cfg.batch_len(b))
                .map(|_| part.project(sample_value(&atoms, params, &mut rng), center))
                .collect()
        })
        .collect();
    Ok(chunks.concat())
}

/// Plug-in Orlicz ψ₂ norm from a fixed sample set.
///
/// Every bisection probe reuses the same samples. `noise_half_width`
/// translates the standard error of the empirical objective at the root into
/// a scale uncertainty through the local slope; it is indicative, not a
/// certified interval.
pub fn mc_psi2(params: &ModelParams, part: Part, cfg: &McConfig, tol: f64) -> Result<Psi2Estimate> {
    if !(tol > 0.0) {
        return Err(domain(format!("tolerance must be > 0, got {tol}")));
    }
    let samples = mc_samples(params, part, cfg)?;
    psi2_from_samples(&samples, params.n(), tol, cfg.confidence)
}

/// Plug-in Orlicz norm of an empirical sample.
pub fn psi2_from_samples(samples: &[f64], n_hint: u32, tol: f64, confidence: f64) -> Result<Psi2Estimate> {
    if samples.is_empty() {
        return Err(domain("empty sample"));
    }
    let max_abs = samples.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if max_abs <= VALUE_TOL {
        return Ok(Psi2Estimate::zero(Psi2Definition::Orlicz));
    }
    let ln_n = (samples.len() as f64).ln();
    let ln2 = std::f64::consts::LN_2;
    let objective = |k: f64| {
        let inv = 1.0 / (k * k);
        log_sum_exp(samples.iter().map(|v| v * v * inv)) - ln_n - ln2
    };
    let upper = f64::from(n_hint).max(max_abs) / ln2.sqrt() + 1.0;
    let Some((lo, hi)) = orlicz_bisect(objective, upper, tol) else {
        return Ok(Psi2Estimate::zero(Psi2Definition::Orlicz));
    };
    let k = 0.5 * (lo + hi);
    let inv = 1.0 / (k * k);
    let count = samples.len() as f64;
    let ys: Vec<f64> = samples.iter().map(|v| (v * v * inv).exp()).collect();
    let mean = compensated_sum(ys.iter().copied()) / count;
    let var = compensated_sum(ys.iter().map(|y| (y - mean).powi(2))) / (count - 1.0).max(1.0);
    let slope = compensated_sum(samples.iter().zip(&ys).map(|(v, y)| -2.0 * v * v * y / (k * k * k))) / count;
    let z = normal_two_sided_quantile(confidence)?;
    let noise = if slope != 0.0 { z * (var / count).sqrt() / slope.abs() } else { f64::INFINITY };
    Ok(Psi2Estimate {
        norm: k,
        definition: Psi2Definition::Orlicz,
        bracket: (lo, hi),
        tolerance: tol.max(hi - lo),
        noise_half_width: noise,
    })
}
