//! Sub-Gaussian (ψ₂) norms of a discrete law.
//!
//! Two definitions are supported: the Orlicz norm
//! `inf{K > 0 : E[exp(X²/K²)] ≤ 2}` and the moment-sup norm
//! `sup_{p≥1} p^{-1/2} (E|X|^p)^{1/p}`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::sum::log_sum_exp;

use super::ExactDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Psi2Definition {
    Orlicz,
    MomentSup,
}

/// A ψ₂ norm value with the interval that certifies it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Psi2Estimate {
    pub norm: f64,
    pub definition: Psi2Definition,
    /// `lo ≤ norm ≤ hi`.
    pub bracket: (f64, f64),
    /// `hi − lo` never exceeds this.
    pub tolerance: f64,
    /// Extra uncertainty from sampling noise; zero for exact laws.
    pub noise_half_width: f64,
}

impl Psi2Estimate {
    pub(crate) fn zero(definition: Psi2Definition) -> Self {
        Self { norm: 0.0, definition, bracket: (0.0, 0.0), tolerance: 0.0, noise_half_width: 0.0 }
    }
}

/// Bisection for the root of a decreasing objective `f(K) = ln E[exp(X²/K²)] − ln 2`.
///
/// `upper` must be a scale at which the objective is already ≤ 0 (e.g.
/// `‖X‖∞/√ln2` plus slack); it is doubled if not. Returns `None` when the
/// objective is ≤ 0 all the way down to the smallest normal scale.
pub(crate) fn orlicz_bisect<F: FnMut(f64) -> f64>(mut f: F, upper: f64, tol: f64) -> Option<(f64, f64)> {
    let mut lo = 1e-6;
    while f(lo) <= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return None;
        }
    }
    let mut hi = upper.max(2.0 * lo);
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some((lo, hi))
}

/// Orlicz ψ₂ norm of an exact law.
pub fn orlicz_norm_exact(dist: &ExactDistribution, tol: f64) -> Result<Psi2Estimate> {
    if !(tol > 0.0) {
        return Err(domain(format!("tolerance must be > 0, got {tol}")));
    }
    // fail early on complex parts
    dist.log_exp_moment(1.0)?;
    if dist.is_zero() {
        return Ok(Psi2Estimate::zero(Psi2Definition::Orlicz));
    }
    let upper = f64::from(dist.params().n()) / std::f64::consts::LN_2.sqrt() + 1.0;
    let ln2 = std::f64::consts::LN_2;
    let objective = |k: f64| dist.log_exp_moment(k).expect("real part checked above") - ln2;
    match orlicz_bisect(objective, upper, tol) {
        Some((lo, hi)) => Ok(Psi2Estimate {
            norm: 0.5 * (lo + hi),
            definition: Psi2Definition::Orlicz,
            bracket: (lo, hi),
            tolerance: tol.max(hi - lo),
            noise_half_width: 0.0,
        }),
        None => Ok(Psi2Estimate::zero(Psi2Definition::Orlicz)),
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    a: f64,
    b: f64,
    upper: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.upper.total_cmp(&other.upper) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper.total_cmp(&other.upper)
    }
}

/// Relative gap at which the moment-sup search stops.
const MOMENT_SUP_REL_GAP: f64 = 1e-6;
const MOMENT_SUP_MAX_SPLITS: usize = 20_000;

/// Moment-sup ψ₂ norm of an exact law.
///
/// The supremum over `p ∈ [1, p_max]` is searched on a log-spaced grid,
/// refined by golden section around the best grid point. The bracket is
/// certified: on a cell `[a, b]`, `g(p) ≤ a^{-1/2} (E|X|^b)^{1/b}` because
/// `p ↦ (E|X|^p)^{1/p}` is nondecreasing, and for `p > p_max`,
/// `g(p) ≤ p_max^{-1/2} ‖X‖∞`. Cells are split until the bracket is tight.
pub fn moment_sup_norm(dist: &ExactDistribution, p_max: f64, grid: usize) -> Result<Psi2Estimate> {
    if !(p_max >= 1.0) || !p_max.is_finite() {
        return Err(domain(format!("p_max must be a finite number >= 1, got {p_max}")));
    }
    if grid < 2 {
        return Err(domain("moment-sup grid needs at least 2 points"));
    }
    dist.log_abs_moment(1.0)?;
    if dist.is_zero() {
        return Ok(Psi2Estimate::zero(Psi2Definition::MomentSup));
    }
    // (ln prob, ln |v|) once, so each evaluation costs one exp per atom
    let logs: Vec<(f64, f64)> = dist
        .atoms()
        .iter()
        .map(|a| (a.prob, a.value.re.abs()))
        .filter(|(_, v)| *v != 0.0)
        .map(|(prob, v)| (prob.ln(), v.ln()))
        .collect();
    let norm_root = |p: f64| log_sum_exp(logs.iter().map(|(lp, lv)| lp + p * lv)) / p;
    let log_g = |p: f64| -0.5 * p.ln() + norm_root(p);

    let points: Vec<f64> = (0..grid)
        .map(|i| p_max.powf(i as f64 / (grid - 1) as f64))
        .collect();
    let values: Vec<f64> = points.iter().map(|&p| log_g(p)).collect();
    let (best_idx, mut best) = values
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("grid is non-empty");

    // golden section on [p_{i-1}, p_{i+1}]
    let (mut a, mut b) = (points[best_idx.saturating_sub(1)], points[(best_idx + 1).min(grid - 1)]);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (log_g(c), log_g(d));
    for _ in 0..100 {
        if (b - a) <= 1e-12 * b {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = log_g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = log_g(d);
        }
    }
    best = best.max(fc).max(fd);

    let tail_upper = p_max.powf(-0.5) * dist.max_abs();
    let cell_upper = |a: f64, b: f64| (-0.5 * a.ln() + norm_root(b)).exp();
    let mut heap: BinaryHeap<Cell> = points
        .windows(2)
        .map(|w| Cell { a: w[0], b: w[1], upper: cell_upper(w[0], w[1]) })
        .collect();

    let mut lo = best.exp();
    let mut hi = tail_upper.max(lo);
    for _ in 0..MOMENT_SUP_MAX_SPLITS {
        let Some(top) = heap.peek().copied() else { break };
        hi = top.upper.max(tail_upper).max(lo);
        if hi - lo <= MOMENT_SUP_REL_GAP * lo {
            break;
        }
        heap.pop();
        let mid = (top.a * top.b).sqrt();
        lo = lo.max(log_g(mid).exp());
        heap.push(Cell { a: top.a, b: mid, upper: cell_upper(top.a, mid) });
        heap.push(Cell { a: mid, b: top.b, upper: cell_upper(mid, top.b) });
    }
    if let Some(top) = heap.peek() {
        hi = top.upper.max(tail_upper).max(lo);
    }

    Ok(Psi2Estimate {
        norm: lo,
        definition: Psi2Definition::MomentSup,
        bracket: (lo, hi),
        tolerance: hi - lo,
        noise_half_width: 0.0,
    })
}
