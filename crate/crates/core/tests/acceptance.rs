//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Reference values are computed here, independently
//! of the library, from first principles.

use std::f64::consts::{LN_2, PI};
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use spectral_mask::bounds::{
    crossover_region, exp_moment_bound, moment_bound, psi2_upper, q_function, q_sandwich, tail_bound_combined,
    tail_bound_entropy, tail_bound_mod, tail_bound_q, tail_bound_uv, CrossoverKind,
};
use spectral_mask::montecarlo::{mc_run, mc_run_with_workers, snapshot_json};
use spectral_mask::oracle::Oracle;
use spectral_mask::{McConfig, McQueries, ModelParams, Part};

const TOL: f64 = 1e-12;

/// `N ∈ 3..=12`, `1 ≤ l ≤ N−1`, `N ≠ 2l`, `1 ≤ m ≤ N`.
fn generic_grid() -> Vec<ModelParams> {
    let mut out = Vec::new();
    for n in 3..=12u32 {
        for l in (1..n).filter(|l| 2 * l != n) {
            for m in 1..=n {
                out.push(ModelParams::new(n, l, m).unwrap());
            }
        }
    }
    out
}

/// `t_i = (i/50)·2√N`, `i = 0..=50`.
fn t_grid(n: u32) -> Vec<f64> {
    (0..=50).map(|i| f64::from(i) / 50.0 * 2.0 * f64::from(n).sqrt()).collect()
}

/// Brute-force over every mask with naive trigonometry: `(prob, re, im)`.
fn brute_force(n: u32, l: u32, m: u32) -> Vec<(f64, f64, f64)> {
    let p = f64::from(m) / f64::from(n);
    (0u64..1 << n)
        .map(|bits| {
            let k = bits.count_ones() as i32;
            let w = p.powi(k) * (1.0 - p).powi(n as i32 - k);
            let (mut re, mut im) = (0.0, 0.0);
            for i in 0..n {
                if bits >> i & 1 == 1 {
                    let theta = -2.0 * PI * f64::from(i) * f64::from(l) / f64::from(n);
                    re += theta.cos();
                    im += theta.sin();
                }
            }
            (w, re, im)
        })
        .collect()
}

fn choose(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn binomial(n: u32, p: f64) -> Vec<f64> {
    (0..=n).map(|k| choose(u64::from(n), u64::from(k)) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)).collect()
}

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn moment_identities() -> Outcome {
    let oracle = Oracle::default();
    let mut worst = 0.0f64;
    let mut check = |got: f64, want: f64, what: &dyn Fn() -> String| -> Result<(), String> {
        let err = (got - want).abs();
        worst = worst.max(err);
        ensure(err <= TOL, || format!("{}: {got:e} vs {want:e}", what()))
    };
    for p in generic_grid() {
        let (n, m) = (f64::from(p.n()), f64::from(p.m()));
        let u = oracle.distribution(&p, Part::Real).map_err(|e| e.to_string())?;
        let v = oracle.distribution(&p, Part::Imag).map_err(|e| e.to_string())?;
        let x = oracle.distribution(&p, Part::Complex).map_err(|e| e.to_string())?;
        let mean = x.mean_complex();
        check(mean.re, 0.0, &|| format!("{p} E[X].re"))?;
        check(mean.im, 0.0, &|| format!("{p} E[X].im"))?;
        check(u.moment(1).unwrap(), 0.0, &|| format!("{p} E[U]"))?;
        check(v.moment(1).unwrap(), 0.0, &|| format!("{p} E[V]"))?;
        check(x.complex_variance(), m * (n - m) / n, &|| format!("{p} Var X"))?;
        check(u.variance().unwrap(), m * (n - m) / (2.0 * n), &|| format!("{p} Var U"))?;
        check(v.variance().unwrap(), m * (n - m) / (2.0 * n), &|| format!("{p} Var V"))?;
    }
    // the oracle itself against naive enumeration on a few points
    for (n, l, m) in [(7, 3, 2), (10, 3, 7), (12, 5, 4)] {
        let p = ModelParams::new(n, l, m).unwrap();
        let bf = brute_force(n, l, m);
        let bf_u2: f64 = bf.iter().map(|(w, re, _)| w * re * re).sum();
        let bf_v4: f64 = bf.iter().map(|(w, _, im)| w * im.powi(4)).sum();
        check(oracle.moment(&p, Part::Real, 2).unwrap(), bf_u2, &|| format!("{p} E[U^2] brute force"))?;
        check(oracle.moment(&p, Part::Imag, 4).unwrap(), bf_v4, &|| format!("{p} E[V^4] brute force"))?;
    }
    Ok(format!("{} grid points, max abs error {worst:.2e}", generic_grid().len()))
}

fn special_forms() -> Outcome {
    let oracle = Oracle::default();
    let mut worst = 0.0f64;
    let mass_at = |d: &spectral_mask::ExactDistribution, k: i64| -> f64 {
        d.atoms().iter().filter(|a| (a.value.re - k as f64).abs() < 1e-9).map(|a| a.prob).sum()
    };
    for n in 1..=12u32 {
        for m in 1..=n {
            let p = ModelParams::new(n, 0, m).unwrap();
            let d = oracle.distribution(&p, Part::Real).map_err(|e| e.to_string())?;
            let pmf = binomial(n, f64::from(m) / f64::from(n));
            for (k, want) in pmf.iter().enumerate() {
                let err = (mass_at(&d, k as i64) - want).abs();
                worst = worst.max(err);
                ensure(err <= TOL, || format!("{p} P(U={k}) off by {err:e}"))?;
            }
        }
    }
    for n in (2..=12u32).step_by(2) {
        let l = n / 2;
        for m in 1..=n {
            let p = ModelParams::new(n, l, m).unwrap();
            let d = oracle.distribution(&p, Part::Real).map_err(|e| e.to_string())?;
            let b = binomial(l, f64::from(m) / f64::from(n));
            for k in -(l as i64)..=l as i64 {
                // P(B' − B'' = k) by direct convolution
                let want: f64 = (0..=l as i64)
                    .filter(|j| (0..=l as i64).contains(&(j - k)))
                    .map(|j| b[j as usize] * b[(j - k) as usize])
                    .sum();
                let err = (mass_at(&d, k) - want).abs();
                worst = worst.max(err);
                ensure(err <= TOL, || format!("{p} P(U={k}) off by {err:e}"))?;
            }
        }
    }
    Ok(format!("max abs error {worst:.2e}"))
}

fn tail_domination() -> Outcome {
    let oracle = Oracle::default();
    let (mut checks, mut worst) = (0u64, f64::INFINITY);
    for p in generic_grid() {
        let n = f64::from(p.n());
        for part in [Part::Real, Part::Imag, Part::ModulusCentered] {
            let d = oracle.distribution(&p, part).map_err(|e| e.to_string())?;
            for t in t_grid(p.n()) {
                let (lib, indep) = match part {
                    Part::ModulusCentered => (tail_bound_mod(p.n(), t), 2.0 * (-2.0 * t * t / n).exp()),
                    _ => (tail_bound_uv(p.n(), t), 2.0 * (-4.0 * t * t / n).exp()),
                };
                let lib = lib.map_err(|e| e.to_string())?;
                ensure((lib - indep).abs() <= 1e-15 * indep.max(1e-300), || format!("{p} bound formula at t={t}"))?;
                let exact = d.tail(t).unwrap();
                checks += 1;
                worst = worst.min(indep - exact);
                ensure(exact <= indep, || format!("{p} {part} t={t}: {exact:e} > {indep:e}"))?;
            }
        }
    }
    Ok(format!("{checks} checks, zero violations, min slack {worst:.3e}"))
}

fn entropy_domination() -> Outcome {
    let oracle = Oracle::default();
    let (mut checks, mut violations) = (0u64, Vec::new());
    for p in generic_grid().into_iter().filter(|p| 2 * p.m() < p.n()) {
        let (n, m) = (f64::from(p.n()), f64::from(p.m()));
        for part in [Part::Real, Part::Imag] {
            let d = oracle.distribution(&p, part).map_err(|e| e.to_string())?;
            for t in t_grid(p.n()) {
                let second = t * t * ((n - m) / m).ln() / (n - 2.0 * m);
                let eq9 = (-second).exp();
                let eq10 = (-(4.0 * t * t / n - LN_2).max(second)).exp();
                let lib9 = tail_bound_entropy(p.n(), p.m(), t).unwrap();
                let lib10 = tail_bound_combined(p.n(), p.m(), t).unwrap();
                ensure((lib9 - eq9).abs() <= 1e-14 * eq9 && (lib10 - eq10).abs() <= 1e-14 * eq10, || {
                    format!("{p} t={t}: formula mismatch")
                })?;
                let exact = d.tail(t).unwrap();
                checks += 2;
                if exact > eq9 || exact > eq10 {
                    violations.push(format!("{p} {part} t={t}: {exact:e} vs {eq9:e}/{eq10:e}"));
                }
            }
        }
    }
    ensure(violations.is_empty(), || format!("{} violations: {:?}", violations.len(), violations))?;
    Ok(format!("{checks} checks, zero violations"))
}

fn crossover_claims() -> Outcome {
    let expect = |n: u32, m: u32, kind: CrossoverKind| -> Result<(), String> {
        let v = crossover_region(n, m).map_err(|e| e.to_string())?;
        ensure(v.kind == kind, || format!("N={n} m={m}: {:?}, expected {kind:?}", v.kind))?;
        // independent coefficient comparison
        let (nf, mf) = (f64::from(n), f64::from(m));
        let second = ((nf - mf) / mf).ln() / (nf - 2.0 * mf);
        let indep = if second >= 4.0 / nf { CrossoverKind::SecondForAllT } else { CrossoverKind::FirstBeyondTStar };
        ensure(indep == kind, || format!("N={n} m={m}: coefficient comparison disagrees"))
    };
    let mut cases = 0;
    expect(2304, 48, CrossoverKind::SecondForAllT)?;
    cases += 1;
    for c in [3, 10, 47] {
        for m in [5, 10, 48] {
            expect(c * m, m, CrossoverKind::FirstBeyondTStar)?;
            cases += 1;
        }
    }
    for m in [5, 10, 20, 48] {
        expect(48 * m, m, CrossoverKind::SecondForAllT)?;
        expect(47 * m, m, CrossoverKind::FirstBeyondTStar)?;
        cases += 2;
    }
    Ok(format!("{cases} cases"))
}

fn chain() -> Outcome {
    let oracle = Oracle::default();
    let mut checks = 0u64;
    for p in generic_grid() {
        let n = p.n();
        let d = oracle.distribution(&p, Part::Real).map_err(|e| e.to_string())?;
        for order in 1..=5u32 {
            let k = f64::from(order);
            // n^{n+1} N^n / (2^{2n−1} e^{n−1})
            let indep = k.powf(k + 1.0) * f64::from(n).powf(k) / (2f64.powf(2.0 * k - 1.0) * (k - 1.0).exp());
            let lib = moment_bound(n, order).unwrap();
            ensure((lib - indep).abs() <= 1e-12 * indep, || format!("moment bound N={n} n={order}"))?;
            let exact = d.moment(2 * order).unwrap();
            checks += 1;
            ensure(exact <= indep, || format!("{p} E[U^{}] = {exact:e} > {indep:e}", 2 * order))?;
        }
        let s = f64::from(n).sqrt();
        for k in [0.6, 0.75, 1.0, 2.0, 5.0].map(|c| c * s) {
            let nf = f64::from(n);
            let indep = 1.0 + 8.0 * std::f64::consts::E * nf * k * k / (4.0 * k * k - nf).powi(2);
            let lib = exp_moment_bound(n, k).unwrap();
            ensure((lib - indep).abs() <= 1e-12 * indep, || format!("exp moment bound N={n} K={k}"))?;
            let exact = d.exp_moment(k).unwrap();
            checks += 1;
            ensure(exact <= indep, || format!("{p} E[exp(U^2/K^2)] K={k}: {exact:e} > {indep:e}"))?;
        }
        let upper = psi2_upper(n).unwrap();
        let e = std::f64::consts::E;
        let indep_upper = s * ((2.0 * e).sqrt() + (2.0 * e + 4.0).sqrt()) / 4.0;
        ensure((upper - indep_upper).abs() <= 1e-13 * indep_upper, || format!("psi2 upper N={n}"))?;
        let norm = oracle.psi2_norm(&p, Part::Real, 1e-12).unwrap();
        checks += 1;
        ensure(norm.norm <= upper, || format!("{p} psi2 {} > {upper}", norm.norm))?;
        let at_root = exp_moment_bound(n, upper).unwrap();
        ensure((at_root - 2.0).abs() <= 1e-9, || format!("N={n}: exp moment bound at psi2 upper = {at_root}"))?;
    }
    Ok(format!("{checks} checks"))
}

/// Composite Gauss–Legendre (5 nodes) of the normal density over `[a, b]`.
fn integrate_normal(a: f64, b: f64, panels: usize) -> f64 {
    let nodes = [
        (0.0, 128.0 / 225.0),
        (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
        (0.906_179_845_938_664, 0.236_926_885_056_189_1),
    ];
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let mid = a + (i as f64 + 0.5) * h;
        for (x, w) in nodes {
            let t = mid + 0.5 * h * x;
            total += 0.5 * h * w * (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
        }
    }
    total
}

fn q_function_checks() -> Outcome {
    let quad = 0.5 - integrate_normal(0.0, 1.0, 200);
    let q1 = q_function(1.0);
    ensure((q1 - quad).abs() <= 1e-10, || format!("Q(1) = {q1} vs quadrature {quad}"))?;
    ensure((q1 - 0.158_655_253_9).abs() < 1e-10, || format!("Q(1) = {q1}"))?;
    for i in 0..100 {
        let x = 1e-3 * 1e4f64.powf(f64::from(i) / 99.0);
        let (lo, hi) = q_sandwich(x).unwrap();
        let q = q_function(x);
        ensure(lo < q && q < hi, || format!("x={x}: {lo} < {q} < {hi} fails"))?;
    }
    let mut checks = 0;
    for n in 3..=12u32 {
        for t in t_grid(n).into_iter().skip(1) {
            let (q, uv) = (tail_bound_q(n, t).unwrap(), tail_bound_uv(n, t).unwrap());
            checks += 1;
            ensure(q >= uv, || format!("N={n} t={t}: {q} < {uv}"))?;
        }
    }
    Ok(format!("|Q(1) - quadrature| = {:.1e}, {checks} Q-form checks", (q1 - quad).abs()))
}

fn monte_carlo() -> Outcome {
    let p = ModelParams::new(12, 5, 4).unwrap();
    let cfg = McConfig::new(10_000_000, 42);
    let queries = McQueries::new(vec![Part::Real]).with_thresholds(vec![1.0]);
    let acc = mc_run(&p, &queries, &cfg).map_err(|e| e.to_string())?;
    let second = acc.moment(Part::Real, 2).unwrap();
    let target = 4.0 * 8.0 / (2.0 * 12.0);
    ensure(second.contains(target), || format!("E[U^2] {second:?} misses {target}"))?;
    let exact_tail: f64 = brute_force(12, 5, 4).iter().filter(|(_, re, _)| re.abs() >= 1.0 - 1e-9).map(|x| x.0).sum();
    let oracle_tail = Oracle::default().tail(&p, Part::Real, 1.0).unwrap();
    ensure((exact_tail - oracle_tail).abs() < 1e-12, || format!("oracle tail {oracle_tail} vs {exact_tail}"))?;
    let tail = acc.tail(Part::Real, 1.0).unwrap();
    ensure(tail.contains(oracle_tail), || format!("P(|U| >= 1) {tail:?} misses {oracle_tail}"))?;
    let first = snapshot_json(&p, &cfg, &queries, &acc);
    let again = snapshot_json(&p, &cfg, &queries, &mc_run(&p, &queries, &cfg).unwrap());
    ensure(first == again, || "two runs differ".into())?;
    let one = snapshot_json(&p, &cfg, &queries, &mc_run_with_workers(&p, &queries, &cfg, 1).unwrap());
    let eight = snapshot_json(&p, &cfg, &queries, &mc_run_with_workers(&p, &queries, &cfg, 8).unwrap());
    ensure(first == one && one == eight, || "1 and 8 workers differ".into())?;
    Ok(format!(
        "E[U^2] = {:.6} ± {:.1e}, P(|U|>=1) = {:.6} ± {:.1e}, bit-identical",
        second.estimate, second.half_width, tail.estimate, tail.half_width
    ))
}

fn psi2_closed_case() -> Outcome {
    let p = ModelParams::new(2, 1, 1).unwrap();
    let norm = Oracle::default().psi2_norm(&p, Part::Real, 1e-13).unwrap().norm;
    let want = 1.0 / 3f64.ln().sqrt();
    ensure((norm - want).abs() <= 1e-9, || format!("{norm} vs {want}"))?;
    Ok(format!("{norm:.15} (error {:.1e})", (norm - want).abs()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("moment identities", moment_identities),
        ("special forms", special_forms),
        ("tail domination", tail_domination),
        ("entropy and combined tail bounds", entropy_domination),
        ("crossover classification", crossover_claims),
        ("moment, MGF and psi2 chain", chain),
        ("Q-function", q_function_checks),
        ("Monte Carlo consistency", monte_carlo),
        ("psi2 closed case", psi2_closed_case),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("acceptance {} {name}: PASS ({detail}; {secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("acceptance {} {name}: FAIL ({detail}; {secs:.1}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
