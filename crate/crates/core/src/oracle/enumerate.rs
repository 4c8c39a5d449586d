//! Exhaustive 2^N sweep.
//!
//! Masks are visited in reflected Gray-code order so consecutive masks differ
//! in one atom. The sweep is cut into fixed segments; each segment starts
//! from a directly computed sum and then updates a compensated running sum
//! one atom at a time. Segment results are merged in segment order, which
//! keeps the output independent of the number of worker threads.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::model::{AtomTable, ComplexValue, ModelParams, Part};
use crate::sum::CompensatedSum;

use super::VALUE_TOL;

/// log2 of the masks visited per segment.
const SEGMENT_BITS: u32 = 16;

type Key = (i64, i64);

#[derive(Debug, Clone, Copy, Default)]
pub(super) struct Group {
    pub sum_re: f64,
    pub sum_im: f64,
    pub count: u64,
    pub prob: CompensatedSum,
}

impl Group {
    fn absorb(&mut self, other: &Group) {
        self.sum_re += other.sum_re;
        self.sum_im += other.sum_im;
        self.count += other.count;
        self.prob.merge(&other.prob);
    }

    pub fn representative(&self) -> ComplexValue {
        let c = self.count as f64;
        ComplexValue::new(self.sum_re / c, self.sum_im / c)
    }
}

#[derive(Debug, Default)]
struct SegmentResult {
    groups: HashMap<Key, Group>,
    modulus_mean: CompensatedSum,
}

/// Output of a sweep: grouped outcomes (unsorted) and `E|X|`.
pub(super) struct Sweep {
    pub groups: Vec<Group>,
    pub modulus_mean: f64,
}

/// Probability of a mask with `k` members, for every `k`.
///
/// Computed in log space so that extreme `p` at large `N` does not
/// underflow term by term; `p = 1` is handled exactly.
pub(super) fn weights_by_count(params: &ModelParams) -> Vec<f64> {
    let n = params.n();
    let (m, den) = params.p_ratio();
    if m == den {
        let mut w = vec![0.0; n as usize + 1];
        w[n as usize] = 1.0;
        return w;
    }
    let ln_p = f64::from(m).ln() - f64::from(den).ln();
    let ln_q = f64::from(den - m).ln() - f64::from(den).ln();
    (0..=n)
        .map(|k| (f64::from(k) * ln_p + f64::from(n - k) * ln_q).exp())
        .collect()
}

fn key_of(part: Part, x: ComplexValue) -> (Key, ComplexValue) {
    let q = |v: f64| (v / VALUE_TOL).round() as i64;
    match part {
        Part::Complex => ((q(x.re), q(x.im)), x),
        _ => {
            let v = part.project(x, 0.0);
            ((q(v), 0), ComplexValue::new(v, 0.0))
        }
    }
}

fn sweep_segment(
    atoms: &[ComplexValue],
    weights: &[f64],
    part: Part,
    start: u64,
    len: u64,
) -> SegmentResult {
    let gray = |i: u64| i ^ (i >> 1);
    let mut mask = gray(start);
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    let mut rest = mask;
    while rest != 0 {
        let bit = rest.trailing_zeros() as usize;
        re.add(atoms[bit].re);
        im.add(atoms[bit].im);
        rest &= rest - 1;
    }
    let mut count = mask.count_ones() as usize;

    let mut out = SegmentResult::default();
    for i in start..start + len {
        if i != start {
            let bit = i.trailing_zeros() as usize;
            mask ^= 1 << bit;
            let a = atoms[bit];
            if mask >> bit & 1 == 1 {
                re.add(a.re);
                im.add(a.im);
                count += 1;
            } else {
                re.add(-a.re);
                im.add(-a.im);
                count -= 1;
            }
        }
        let w = weights[count];
        if w == 0.0 {
            continue;
        }
        let x = ComplexValue::new(re.value(), im.value());
        if matches!(part, Part::Modulus | Part::ModulusCentered) {
            out.modulus_mean.add(w * x.modulus());
        }
        let (key, v) = key_of(part, x);
        let g = out.groups.entry(key).or_default();
        g.sum_re += v.re;
        g.sum_im += v.im;
        g.count += 1;
        g.prob.add(w);
    }
    out
}

/// Visit all 2^N masks and group outcome values of `part`.
pub(super) fn sweep(params: &ModelParams, part: Part) -> Sweep {
    let n = params.n();
    debug_assert!(n <= 63);
    let atoms = AtomTable::new(params);
    let weights = weights_by_count(params);
    let total: u64 = 1 << n;
    let seg_len: u64 = 1 << n.min(SEGMENT_BITS);
    let segments = total / seg_len;
    // bounded number of live segment maps
    let block = (4 * rayon::current_num_threads() as u64).max(1);

    let mut merged: HashMap<Key, Group> = HashMap::new();
    let mut modulus_mean = CompensatedSum::new();
    let mut first = 0;
    while first < segments {
        let last = (first + block).min(segments);
        let results: Vec<SegmentResult> = (first..last)
            .into_par_iter()
            .map(|s| sweep_segment(atoms.as_slice(), &weights, part, s * seg_len, seg_len))
            .collect();
        for r in results {
            modulus_mean.merge(&r.modulus_mean);
            if merged.is_empty() {
                merged = r.groups;
                continue;
            }
            for (k, g) in r.groups {
                merged.entry(k).or_default().absorb(&g);
            }
        }
        first = last;
    }

    Sweep { groups: cluster(merged, part), modulus_mean: modulus_mean.value() }
}

/// Merge groups whose representatives fall within `VALUE_TOL` of each other
/// but landed in neighbouring quantization cells.
fn cluster(groups: HashMap<Key, Group>, part: Part) -> Vec<Group> {
    let mut entries: Vec<(Key, Group)> = groups.into_iter().collect();
    entries.sort_unstable_by_key(|(k, _)| *k);
    let index: HashMap<Key, usize> = entries.iter().enumerate().map(|(i, (k, _))| (*k, i)).collect();

    let mut parent: Vec<usize> = (0..entries.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    let neighbours: &[(i64, i64)] = if part == Part::Complex {
        &[(1, -1), (1, 0), (1, 1), (0, 1)]
    } else {
        &[(1, 0)]
    };
    for i in 0..entries.len() {
        let (key, g) = entries[i];
        let a = g.representative();
        for &(dx, dy) in neighbours {
            if let Some(&j) = index.get(&(key.0 + dx, key.1 + dy)) {
                let b = entries[j].1.representative();
                if (a.re - b.re).hypot(a.im - b.im) <= VALUE_TOL {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }
    }

    let mut roots: Vec<Option<Group>> = vec![None; entries.len()];
    for (i, (_, group)) in entries.iter().enumerate() {
        let r = find(&mut parent, i);
        match &mut roots[r] {
            Some(acc) => acc.absorb(group),
            slot @ None => *slot = Some(*group),
        }
    }
    roots.into_iter().flatten().collect()
}
