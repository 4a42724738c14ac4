//! Convergence sweeps over `(method, p, n)` with CSV output and rate tables.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;

use crate::analysis::{compute_errors, estimate_eoc, ErrorNorm, ErrorReport};
use crate::coefficients::{BuiltinCase, PdeCoefficients};
use crate::dg_forms::{assemble_global_system, default_sigma, FormKind};
use crate::embedding::{build_embedding, RankRule};
use crate::error::{Error, Result};
use crate::local_ops::{LocalSettings, OperatorKind};
use crate::mesh::build_structured_mesh;
use crate::solver::{solve_embedded_trefftz, solve_standard_dg};
use crate::space::DgSpace;

pub const MAX_DEGREE: usize = 6;
pub const MAX_SUBDIVISIONS: usize = 128;
pub const CSV_HEADER: &str = "method,p,h,ndof_full,ndof_trefftz,l2error,dgerror";

/// Discretizations selectable in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentMethod {
    /// Standard DG on the full polynomial space.
    Dg,
    /// Embedded Trefftz DG with the element operator matching the problem.
    Et,
    /// Embedded Trefftz DG with box-restricted constraints.
    EtBox,
    /// Embedded quasi-Trefftz DG.
    Qt,
}

impl ExperimentMethod {
    pub const ALL: [ExperimentMethod; 4] = [
        ExperimentMethod::Dg,
        ExperimentMethod::Et,
        ExperimentMethod::EtBox,
        ExperimentMethod::Qt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentMethod::Dg => "dg",
            ExperimentMethod::Et => "et",
            ExperimentMethod::EtBox => "etbox",
            ExperimentMethod::Qt => "qt",
        }
    }

    /// Local operator for the Trefftz variants, `None` for plain DG.
    pub fn operator_kind(self, coeffs: &PdeCoefficients) -> Option<OperatorKind> {
        match self {
            ExperimentMethod::Dg => None,
            ExperimentMethod::Et if coeffs.has_diffusion() => Some(OperatorKind::DiffusionAdvectionReaction),
            ExperimentMethod::Et => Some(OperatorKind::AdvectionReaction),
            ExperimentMethod::EtBox => Some(OperatorKind::DiffusionBox),
            ExperimentMethod::Qt => Some(OperatorKind::QuasiTrefftzDiffusion),
        }
    }

    fn min_degree(self, coeffs: &PdeCoefficients) -> usize {
        self.operator_kind(coeffs).map_or(0, |k| k.min_degree())
    }
}

impl fmt::Display for ExperimentMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentMethod::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Unknown {
                what: "method",
                name: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub case: BuiltinCase,
    pub methods: Vec<ExperimentMethod>,
    pub p_list: Vec<usize>,
    pub n_list: Vec<usize>,
    /// Interior penalty parameter; `None` means `50 p^2`.
    pub sigma: Option<f64>,
    pub box_scale: f64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            case: BuiltinCase::ArExample,
            methods: vec![ExperimentMethod::Dg, ExperimentMethod::Et],
            p_list: vec![3],
            n_list: vec![4, 8],
            sigma: None,
            box_scale: LocalSettings::default().box_scale,
            out: None,
        }
    }
}

pub fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| Error::InvalidArgument(format!("bad {what} entry '{t}'")))
        })
        .collect()
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad {what} value '{s}'")))
}

/// `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!("config line {}: expected key=value, got '{raw}'", ln + 1))
        })?;
        out.insert(k.trim().replace('-', "_").to_ascii_lowercase(), v.trim().to_string());
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Overrides fields from parsed `key=value` pairs.
    pub fn apply_pairs(&mut self, pairs: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in pairs {
            match k.as_str() {
                "case" => self.case = v.parse()?,
                "methods" | "method" => self.methods = parse_methods(v)?,
                "p" | "p_list" => self.p_list = parse_list(v, "degree")?,
                "n" | "n_list" => self.n_list = parse_list(v, "subdivision")?,
                "sigma" => self.sigma = Some(parse_f64(v, "sigma")?),
                "box_scale" => self.box_scale = parse_f64(v, "box_scale")?,
                "out" => self.out = Some(PathBuf::from(v)),
                _ => {
                    return Err(Error::Unknown {
                        what: "config key",
                        name: k.clone(),
                    })
                }
            }
        }
        Ok(())
    }

    /// Checks ranges and method/case compatibility.
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() || self.p_list.is_empty() || self.n_list.is_empty() {
            return Err(Error::InvalidArgument("methods, p and n lists must be nonempty".into()));
        }
        if let Some(&p) = self.p_list.iter().find(|&&p| p > MAX_DEGREE) {
            return Err(Error::InvalidArgument(format!("degree {p} exceeds {MAX_DEGREE}")));
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n == 0 || n > MAX_SUBDIVISIONS) {
            return Err(Error::InvalidArgument(format!(
                "subdivision count {n} outside 1..={MAX_SUBDIVISIONS}"
            )));
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0) {
                return Err(Error::InvalidArgument(format!("sigma must be positive, got {s}")));
            }
        }
        if !(self.box_scale > 0.0 && self.box_scale <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "box_scale must lie in (0, 1], got {}",
                self.box_scale
            )));
        }
        let coeffs = self.case.coefficients();
        for m in &self.methods {
            if *m == ExperimentMethod::EtBox && !coeffs.has_diffusion() {
                return Err(Error::InvalidArgument(format!(
                    "method {m} needs a diffusion problem, case {} has none",
                    self.case
                )));
            }
            let pure_diffusion = matches!(self.case, BuiltinCase::BoxDiffusion2d | BuiltinCase::QtDiffusion);
            if *m == ExperimentMethod::Qt && !pure_diffusion {
                return Err(Error::InvalidArgument(format!(
                    "method {m} is only available for pure diffusion cases, not {}",
                    self.case
                )));
            }
            let min = m.min_degree(&coeffs);
            if let Some(&p) = self.p_list.iter().find(|&&p| p < min) {
                return Err(Error::InvalidArgument(format!("method {m} needs p >= {min}, got {p}")));
            }
        }
        Ok(())
    }

    pub fn sigma_for(&self, p: usize) -> f64 {
        self.sigma.unwrap_or_else(|| default_sigma(p))
    }
}

fn parse_methods(s: &str) -> Result<Vec<ExperimentMethod>> {
    let v: Vec<ExperimentMethod> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    Ok(v)
}

pub fn methods_from_str(s: &str) -> Result<Vec<ExperimentMethod>> {
    parse_methods(s)
}

/// One sweep entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: ExperimentMethod,
    pub n: usize,
    pub report: ErrorReport,
}

impl ResultRow {
    pub fn ndof_trefftz(&self) -> usize {
        self.report.ndof_trefftz.unwrap_or(self.report.ndof_full)
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{:.16e},{},{},{:.16e},{:.16e}",
            self.method,
            self.report.p,
            self.report.h,
            self.report.ndof_full,
            self.ndof_trefftz(),
            self.report.l2_error,
            self.report.vh_error
        )
    }
}

/// Solves the builtin problem with one method on the `n x n` mesh.
pub fn run_single(
    coeffs: &PdeCoefficients,
    method: ExperimentMethod,
    p: usize,
    n: usize,
    sigma: f64,
    box_scale: f64,
) -> Result<ErrorReport> {
    let mesh = build_structured_mesh(n)?;
    let space = DgSpace::new(mesh, p)?;
    let form = FormKind::for_problem(coeffs);
    let sys = assemble_global_system(form, &space, coeffs, sigma)?;
    let sol = match method.operator_kind(coeffs) {
        None => solve_standard_dg(&sys)?,
        Some(kind) => {
            let settings = LocalSettings {
                box_scale,
                ..LocalSettings::default()
            };
            let (_, emb) = build_embedding(&space, kind, coeffs, &settings, RankRule::default())?;
            solve_embedded_trefftz(&sys, &emb)?
        }
    };
    compute_errors(&space, &sol, coeffs, ErrorNorm::for_form(form, sigma))
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
}

impl ExperimentOutput {
    pub fn csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.csv_line());
            s.push('\n');
        }
        s
    }

    /// Rows of one `(method, p)` series, coarse to fine.
    pub fn series(&self, method: ExperimentMethod, p: usize) -> Vec<&ResultRow> {
        self.rows
            .iter()
            .filter(|r| r.method == method && r.report.p == p)
            .collect()
    }

    /// Least-squares rates `(l2, dg)` of one series.
    pub fn rates(&self, method: ExperimentMethod, p: usize) -> Result<(f64, f64)> {
        let s = self.series(method, p);
        let l2: Vec<_> = s.iter().map(|r| (r.report.h, r.report.l2_error)).collect();
        let dg: Vec<_> = s.iter().map(|r| (r.report.h, r.report.vh_error)).collect();
        Ok((estimate_eoc(&l2)?.least_squares, estimate_eoc(&dg)?.least_squares))
    }

    /// Human-readable rate table, one block per `(method, p)`.
    pub fn eoc_table(&self) -> String {
        let mut keys: Vec<(ExperimentMethod, usize)> = self.rows.iter().map(|r| (r.method, r.report.p)).collect();
        keys.dedup();
        let mut out = String::new();
        for (m, p) in keys {
            let s = self.series(m, p);
            let _ = writeln!(out, "method={m} p={p}");
            let _ = writeln!(out, "  {:>5} {:>12} {:>12} {:>8} {:>12} {:>8}", "n", "h", "l2error", "eoc", "dgerror", "eoc");
            for (i, r) in s.iter().enumerate() {
                let rate = |f: fn(&ErrorReport) -> f64| {
                    if i == 0 {
                        "-".to_string()
                    } else {
                        let prev = &s[i - 1].report;
                        estimate_eoc(&[(prev.h, f(prev)), (r.report.h, f(&r.report))])
                            .map(|e| format!("{:.2}", e.steps[0]))
                            .unwrap_or_else(|_| "n/a".into())
                    }
                };
                let _ = writeln!(
                    out,
                    "  {:>5} {:>12.4e} {:>12.4e} {:>8} {:>12.4e} {:>8}",
                    r.n,
                    r.report.h,
                    r.report.l2_error,
                    rate(|e| e.l2_error),
                    r.report.vh_error,
                    rate(|e| e.vh_error)
                );
            }
            match self.rates(m, p) {
                Ok((a, b)) => {
                    let _ = writeln!(out, "  least-squares: l2 {a:.3} dg {b:.3}");
                }
                Err(_) => {
                    let _ = writeln!(out, "  least-squares: n/a");
                }
            }
        }
        out
    }
}

/// Runs every `(method, p, n)` combination concurrently; rows are sorted by
/// method, degree and mesh size. The first failure aborts the sweep.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let coeffs = config.case.coefficients();
    let mut tuples = Vec::new();
    for &m in &config.methods {
        for &p in &config.p_list {
            for &n in &config.n_list {
                tuples.push((m, p, n));
            }
        }
    }
    tuples.sort();
    tuples.dedup();
    let rows = tuples
        .par_iter()
        .map(|&(m, p, n)| {
            run_single(&coeffs, m, p, n, config.sigma_for(p), config.box_scale)
                .map(|report| ResultRow { method: m, n, report })
                .map_err(|e| Error::Context {
                    context: format!("{} method={m} p={p} n={n}", config.case),
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentOutput { rows })
}
