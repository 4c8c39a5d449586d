//! Tabular reports: tail bounds, crossover verdicts, ψ₂ norms and formula
//! sweeps, rendered as CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{
    self, crossover_region, tail_bound_combined, tail_bound_entropy, tail_bound_mod, tail_bound_q, tail_bound_uv,
};
use crate::config::{CliError, RunConfig};
use crate::error::{domain, Result};
use crate::model::{ModelParams, Part};
use crate::montecarlo::{mc_psi2, mc_run, EstimateWithCI, McConfig, McQueries};
use crate::oracle::{Oracle, DEFAULT_P_GRID, DEFAULT_P_MAX, DEFAULT_PSI2_TOL};
use crate::verify::crossover_reference_cases;

pub const TAILS_HEADER: &str = "t,exact,mc,mc_halfwidth,thm23,eq9,eq10,q_form";
pub const CROSSOVER_HEADER: &str = "N,m,coeff_first,coeff_second,verdict,t_star,reason";
pub const PSI2_HEADER: &str = "N,l,m,part,exact_psi2,mc_psi2,moment_psi2,upper_cor27,upper_eq12";
pub const SCAN_HEADER: &str = "N,l,m,x,value";

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn cell(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// Exact tail, Monte Carlo estimate and every applicable bound at one `t`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub params: ModelParams,
    pub part: Part,
    pub t: f64,
    /// Present iff `N` is within the oracle guard.
    pub exact: Option<f64>,
    pub mc: Option<EstimateWithCI>,
    /// Raw formula outputs, not clamped to `[0, 1]`.
    pub bounds: BTreeMap<&'static str, f64>,
    /// `bound ≥ exact`; empty when `exact` is absent.
    pub dominated: BTreeMap<&'static str, bool>,
}

impl BoundReport {
    fn csv_row(&self) -> String {
        let b = |k: &str| cell(self.bounds.get(k).copied());
        format!(
            "{},{},{},{},{},{},{},{}",
            fmt_num(self.t),
            cell(self.exact),
            cell(self.mc.map(|e| e.estimate)),
            cell(self.mc.map(|e| e.half_width)),
            b("thm23"),
            b("eq9"),
            b("eq10"),
            b("q_form"),
        )
    }
}

fn applicable_bounds(params: &ModelParams, part: Part, t: f64) -> Result<BTreeMap<&'static str, f64>> {
    let (n, m) = (params.n(), params.m());
    let mut out = BTreeMap::new();
    if params.is_dc() || params.is_degenerate_2l() {
        return Ok(out);
    }
    match part {
        Part::Real | Part::Imag => {
            out.insert("thm23", tail_bound_uv(n, t)?);
            if 2 * m < n {
                out.insert("eq9", tail_bound_entropy(n, m, t)?);
                out.insert("eq10", tail_bound_combined(n, m, t)?);
            }
            if t > 0.0 {
                out.insert("q_form", tail_bound_q(n, t)?);
            }
        }
        Part::ModulusCentered => {
            out.insert("thm23", tail_bound_mod(n, t)?);
        }
        Part::Modulus | Part::Complex => {}
    }
    Ok(out)
}

/// One [`BoundReport`] per threshold.
pub fn tail_reports(
    params: &ModelParams,
    part: Part,
    ts: &[f64],
    oracle: &Oracle,
    mc: Option<&McConfig>,
) -> Result<Vec<BoundReport>> {
    if part == Part::Complex {
        return Err(domain("tail reports need a real-valued part"));
    }
    let dist = if oracle.can_enumerate(params) { Some(oracle.distribution(params, part)?) } else { None };
    let acc = match mc {
        Some(cfg) => {
            let mut q = McQueries::new(vec![part]).with_thresholds(ts.to_vec());
            // reuse the exact center when there is one so both columns test the same event
            if let Some(c) = dist.as_ref().and_then(|d| d.center()) {
                q = q.with_center(c);
            }
            Some(mc_run(params, &q, cfg)?)
        }
        None => None,
    };
    ts.iter()
        .map(|&t| {
            let exact = dist.as_ref().map(|d| d.tail(t)).transpose()?;
            let bounds = applicable_bounds(params, part, t)?;
            let dominated = match exact {
                Some(e) => bounds.iter().map(|(k, b)| (*k, *b >= e)).collect(),
                None => BTreeMap::new(),
            };
            let mc = acc.as_ref().map(|a| a.tail(part, t)).transpose()?;
            Ok(BoundReport { params: *params, part, t, exact, mc, bounds, dominated })
        })
        .collect()
}

pub fn tails_file_name(params: &ModelParams, part: Part) -> String {
    format!("tails_N{}_l{}_m{}_{}.csv", params.n(), params.l(), params.m(), part)
}

pub fn tails_csv(reports: &[BoundReport]) -> String {
    let mut out = format!("{TAILS_HEADER}\n");
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Crossover rows for the reference cases followed by every `(N, m)` on the grid.
pub fn crossover_csv(cfg: &RunConfig) -> String {
    let mut pairs: Vec<(u32, u32)> = crossover_reference_cases().into_iter().map(|(n, m, _)| (n, m)).collect();
    let mut grid: Vec<(u32, u32)> = cfg.grid.params().iter().map(|p| (p.n(), p.m())).collect();
    grid.sort_unstable();
    grid.dedup();
    for pair in grid {
        if !pairs.contains(&pair) {
            pairs.push(pair);
        }
    }
    let mut out = format!("{CROSSOVER_HEADER}\n");
    for (n, m) in pairs {
        match crossover_region(n, m) {
            Ok(v) => {
                let _ = writeln!(
                    out,
                    "{n},{m},{},{},{:?},{},",
                    fmt_num(v.coeff_first),
                    fmt_num(v.coeff_second),
                    v.kind,
                    cell(v.t_star)
                );
            }
            Err(e) => {
                let reason = e.to_string().replace([',', '\n'], ";");
                let _ = writeln!(out, "{n},{m},,,,,{reason}");
            }
        }
    }
    out
}

struct Psi2Row {
    params: ModelParams,
    part: Part,
    exact: Option<f64>,
    mc: f64,
    moment: Option<f64>,
}

fn psi2_row(params: ModelParams, part: Part, oracle: &Oracle, mc: &McConfig) -> Result<Psi2Row> {
    let (exact, moment) = if oracle.can_enumerate(&params) {
        let d = oracle.distribution(&params, part)?;
        let orlicz = crate::oracle::psi2::orlicz_norm_exact(&d, DEFAULT_PSI2_TOL)?;
        let sup = crate::oracle::psi2::moment_sup_norm(&d, DEFAULT_P_MAX, DEFAULT_P_GRID)?;
        (Some(orlicz.norm), Some(sup.norm))
    } else {
        (None, None)
    };
    let mc = mc_psi2(&params, part, mc, 1e-9)?.norm;
    Ok(Psi2Row { params, part, exact, mc, moment })
}

/// ψ₂ norms of the real and imaginary parts over the grid, with both upper bounds.
pub fn psi2_csv(cfg: &RunConfig, oracle: &Oracle) -> Result<String> {
    let jobs: Vec<(ModelParams, Part)> = cfg
        .grid
        .params()
        .into_iter()
        .flat_map(|p| [(p, Part::Real), (p, Part::Imag)])
        .collect();
    let rows: Vec<Psi2Row> =
        jobs.into_par_iter().map(|(p, part)| psi2_row(p, part, oracle, &cfg.mc)).collect::<Result<_>>()?;
    let mut out = format!("{PSI2_HEADER}\n");
    for r in rows {
        let n = r.params.n();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            n,
            r.params.l(),
            r.params.m(),
            r.part,
            cell(r.exact),
            fmt_num(r.mc),
            cell(r.moment),
            fmt_num(bounds::psi2_upper(n)?),
            fmt_num(bounds::psi2_sup_upper(n)?),
        );
    }
    Ok(out)
}

/// Formulas available to [`scan_csv`].
pub const SCAN_FORMULAS: [&str; 10] = [
    "tail_bound_uv",
    "tail_bound_mod",
    "tail_bound_entropy",
    "tail_bound_combined",
    "tail_bound_q",
    "moment_bound",
    "exp_moment_bound",
    "psi2_upper",
    "psi2_sup_upper",
    "variance",
];

/// Sweeps one formula over the grid. `x` is `t` for tail bounds, `K` for
/// the exponential-moment bound and the order `n` for the moment bound.
/// Cells whose hypotheses fail are left empty.
pub fn scan_csv(cfg: &RunConfig, formula: &str) -> Result<String, CliError> {
    if !SCAN_FORMULAS.contains(&formula) {
        return Err(CliError::usage(format!("unknown formula {formula:?}; known: {}", SCAN_FORMULAS.join(","))));
    }
    let mut out = format!("{SCAN_HEADER}\n");
    for p in cfg.grid.params() {
        let (n, m) = (p.n(), p.m());
        let xs: Vec<Option<f64>> = match formula {
            "moment_bound" => (1..=5).map(|k| Some(f64::from(k))).collect(),
            "exp_moment_bound" => cfg.k_grid.values(n).into_iter().map(Some).collect(),
            "psi2_upper" | "psi2_sup_upper" | "variance" => vec![None],
            _ => cfg.t_grid.values(n).into_iter().map(Some).collect(),
        };
        for x in xs {
            let a = x.unwrap_or(0.0);
            let value = match formula {
                "tail_bound_uv" => tail_bound_uv(n, a),
                "tail_bound_mod" => tail_bound_mod(n, a),
                "tail_bound_entropy" => tail_bound_entropy(n, m, a),
                "tail_bound_combined" => tail_bound_combined(n, m, a),
                "tail_bound_q" => tail_bound_q(n, a),
                "moment_bound" => bounds::moment_bound(n, a as u32),
                "exp_moment_bound" => bounds::exp_moment_bound(n, a),
                "psi2_upper" => bounds::psi2_upper(n),
                "psi2_sup_upper" => bounds::psi2_sup_upper(n),
                _ => bounds::variance_formula(&p).map(|v| v.1),
            };
            let _ = writeln!(out, "{n},{},{m},{},{}", p.l(), cell(x), cell(value.ok()));
        }
    }
    Ok(out)
}
