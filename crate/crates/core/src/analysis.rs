//! Error norms, convergence-rate estimation and embedding diagnostics.

use std::fmt;

use rayon::prelude::*;

use crate::coefficients::PdeCoefficients;
use crate::dg_forms::{assemble_global_system, element_alpha_means, facet_alpha, FormKind};
use crate::embedding::{build_embedding, RankRule};
use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::local_ops::{LocalSettings, OperatorKind};
use crate::mesh::{Mesh2D, Point};
use crate::quadrature::{quadrature_rule, segment_rule, Domain};
use crate::solver::{solve_block_coupled, solve_embedded_trefftz, ComplementRule, DiscreteSolution, Method};
use crate::space::DgSpace;

/// Which mesh-dependent norm is reported next to the `L2` error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorNorm {
    /// `|e|^2 + sum_F int |beta_r . n| [e]^2 + sum_K h_K |beta_r . grad e|^2`.
    Advection,
    /// Interior penalty energy norm with penalty `sigma`.
    Diffusion { sigma: f64 },
}

impl ErrorNorm {
    pub fn for_form(kind: FormKind, sigma: f64) -> Self {
        match kind {
            FormKind::ArUpwind => ErrorNorm::Advection,
            FormKind::DarSip => ErrorNorm::Diffusion { sigma },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub l2_error: f64,
    pub vh_error: f64,
    pub h: f64,
    pub p: usize,
    pub method: Method,
    pub ndof_full: usize,
    pub ndof_trefftz: Option<usize>,
}

fn error_exactness(p: usize) -> usize {
    2 * p + 6
}

/// `L2` and mesh-dependent norms of `u_ex - u_h`.
pub fn compute_errors(
    space: &DgSpace,
    sol: &DiscreteSolution,
    coeffs: &PdeCoefficients,
    norm: ErrorNorm,
) -> Result<ErrorReport> {
    let exact = coeffs
        .exact
        .clone()
        .ok_or_else(|| Error::MissingExactSolution(coeffs.name.clone()))?;
    let (l2, vh) = error_norms(space, &sol.coefficients, &|x| exact.value(x), &|x| {
        crate::coefficients::gradient(exact.as_ref(), x)
            .ok_or_else(|| Error::MissingDerivative("gradient of the exact solution".into()))
    }, coeffs, norm)?;
    Ok(ErrorReport {
        l2_error: l2,
        vh_error: vh,
        h: space.mesh.max_diameter(),
        p: space.degree(),
        method: sol.method,
        ndof_full: sol.ndof_full,
        ndof_trefftz: sol.ndof_trefftz,
    })
}

type ScalarFn<'a> = dyn Fn(Point) -> f64 + Sync + 'a;
type GradFn<'a> = dyn Fn(Point) -> Result<[f64; 2]> + Sync + 'a;

/// `(|u - u_h|_L2, |u - u_h|_V)` for a reference `u` given by value and
/// gradient closures.
pub fn error_norms(
    space: &DgSpace,
    uh: &[f64],
    u: &ScalarFn<'_>,
    grad_u: &GradFn<'_>,
    coeffs: &PdeCoefficients,
    norm: ErrorNorm,
) -> Result<(f64, f64)> {
    if uh.len() != space.ndof() {
        return Err(Error::DimensionMismatch(format!(
            "solution has {} coefficients, space has {}",
            uh.len(),
            space.ndof()
        )));
    }
    let p = space.degree();
    let mesh = &space.mesh;

    // sup |beta| and inf (gamma - div beta / 2) over volume quadrature points
    let stats = (0..space.num_elements())
        .into_par_iter()
        .map(|k| -> Result<(f64, f64)> {
            let q = quadrature_rule(Domain::Triangle(mesh.geometries()[k].vertices), error_exactness(p))?;
            let mut bmax = 0.0f64;
            let mut g0 = f64::INFINITY;
            for (x, _) in q.iter() {
                let b = coeffs.beta_at(x);
                bmax = bmax.max(b[0].hypot(b[1]));
                if matches!(norm, ErrorNorm::Diffusion { .. }) {
                    g0 = g0.min(coeffs.gamma.value(x) - 0.5 * coeffs.div_beta(x)?);
                }
            }
            Ok((bmax, g0))
        })
        .collect::<Result<Vec<_>>>()?;
    let beta_max = stats.iter().map(|s| s.0).fold(0.0, f64::max);
    let gamma0 = stats.iter().map(|s| s.1).fold(f64::INFINITY, f64::min).max(0.0);
    let beta_scale = if beta_max > 0.0 { 1.0 / beta_max } else { 0.0 };

    let vol = (0..space.num_elements())
        .into_par_iter()
        .map(|k| -> Result<(f64, f64)> {
            let g = &mesh.geometries()[k];
            let q = quadrature_rule(Domain::Triangle(g.vertices), error_exactness(p))?;
            let basis = space.basis(k);
            let c = space.local(uh, k);
            let (mut l2, mut v) = (0.0, 0.0);
            for (x, w) in q.iter() {
                let (phi, grad) = basis.values_gradients(x);
                let mut val = u(x);
                let mut ge = grad_u(x)?;
                for j in 0..phi.len() {
                    val -= c[j] * phi[j];
                    ge[0] -= c[j] * grad[j][0];
                    ge[1] -= c[j] * grad[j][1];
                }
                l2 += w * val * val;
                match norm {
                    ErrorNorm::Advection => {
                        let b = coeffs.beta_at(x);
                        let d = beta_scale * (b[0] * ge[0] + b[1] * ge[1]);
                        v += w * (val * val + g.diameter * d * d);
                    }
                    ErrorNorm::Diffusion { .. } => {
                        let a = coeffs.alpha_at(x);
                        v += w * (a * (ge[0] * ge[0] + ge[1] * ge[1]) + gamma0 * val * val);
                    }
                }
            }
            Ok((l2, v))
        })
        .collect::<Result<Vec<_>>>()?;

    let means = match norm {
        ErrorNorm::Diffusion { .. } => element_alpha_means(space, coeffs)?,
        ErrorNorm::Advection => Vec::new(),
    };
    let facet_terms = mesh
        .facets()
        .par_iter()
        .map(|f| -> Result<f64> {
            let vs = mesh.vertices();
            let q = segment_rule(vs[f.vertices[0]], vs[f.vertices[1]], error_exactness(p))?;
            let mut s = 0.0;
            for (x, w) in q.iter() {
                let left = space.eval(uh, f.left, x);
                let jump = match f.right {
                    Some(r) => left - space.eval(uh, r, x),
                    None => left - u(x),
                };
                let b = coeffs.beta_at(x);
                let bn = (b[0] * f.normal[0] + b[1] * f.normal[1]).abs();
                s += w * jump * jump
                    * match norm {
                        ErrorNorm::Advection => beta_scale * bn,
                        ErrorNorm::Diffusion { sigma } => {
                            sigma * facet_alpha(f, &means) / f.length + 0.5 * bn
                        }
                    };
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;

    let l2: f64 = vol.iter().map(|t| t.0).sum();
    let v: f64 = vol.iter().map(|t| t.1).sum::<f64>() + facet_terms.iter().sum::<f64>();
    Ok((l2.max(0.0).sqrt(), v.max(0.0).sqrt()))
}

/// Per-step rates and least-squares slope of `log e` against `log h`.
#[derive(Debug, Clone, PartialEq)]
pub struct EocEstimate {
    pub steps: Vec<f64>,
    pub least_squares: f64,
}

pub fn estimate_eoc(data: &[(f64, f64)]) -> Result<EocEstimate> {
    if data.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "rate estimation needs at least 2 points, got {}",
            data.len()
        )));
    }
    for (i, &(h, e)) in data.iter().enumerate() {
        if !(h > 0.0) || !(e > 0.0) || !e.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "point {i}: mesh size {h} and error {e} must be positive and finite"
            )));
        }
        if i > 0 && !(h < data[i - 1].0) {
            return Err(Error::InvalidArgument("mesh sizes must be strictly decreasing".into()));
        }
    }
    let steps = data
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .collect();
    let xs: Vec<f64> = data.iter().map(|d| d.0.ln()).collect();
    let ys: Vec<f64> = data.iter().map(|d| d.1.ln()).collect();
    let nf = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(EocEstimate {
        steps,
        least_squares: sxy / sxx,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimRow {
    pub p: usize,
    pub n: usize,
    pub n_trefftz: usize,
    pub dim_q: usize,
}

#[derive(Debug, Clone)]
pub struct DiagnosticsReport {
    pub kind: OperatorKind,
    pub rho_max: f64,
    pub sigma_min_rel: f64,
    pub dim_table: Vec<DimRow>,
    /// `|u_embedded - u_block| / |u_embedded|`, or the failure message.
    pub block_equivalence_gap: std::result::Result<f64, String>,
    /// Elements whose full-row-rank guard failed.
    pub downgraded: usize,
}

impl fmt::Display for DiagnosticsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kind {}", self.kind)?;
        writeln!(f, "rho_max {:.6e}", self.rho_max)?;
        writeln!(f, "sigma_min_rel {:.6e}", self.sigma_min_rel)?;
        writeln!(f, "downgraded_elements {}", self.downgraded)?;
        writeln!(f, "p n n_T dim_Q")?;
        for r in &self.dim_table {
            writeln!(f, "{} {} {} {}", r.p, r.n, r.n_trefftz, r.dim_q)?;
        }
        match &self.block_equivalence_gap {
            Ok(g) => writeln!(f, "block_equivalence_gap {g:.6e}"),
            Err(e) => writeln!(f, "block_equivalence_gap unavailable: {e}"),
        }
    }
}

/// Local stability and decoupling witnesses for `kind` on `mesh`. Degenerate
/// situations are reported in the result rather than returned as errors,
/// except for failures to build the space itself.
pub fn run_diagnostics(
    mesh: &Mesh2D,
    p: usize,
    kind: OperatorKind,
    coeffs: &PdeCoefficients,
    settings: &LocalSettings,
    sigma: f64,
) -> Result<DiagnosticsReport> {
    let rule = RankRule::default();
    let mut dim_table = Vec::new();
    for q in kind.min_degree()..=p {
        let space = DgSpace::new(mesh.clone(), q)?;
        let (_, emb) = build_embedding(&space, kind, coeffs, settings, rule)?;
        let nt = emb.elements.iter().map(|e| e.n_trefftz()).max().unwrap_or(0);
        dim_table.push(DimRow {
            p: q,
            n: space.local_dim(),
            n_trefftz: nt,
            dim_q: kind.test_dim(q),
        });
    }
    let space = DgSpace::new(mesh.clone(), p)?;
    let (ops, emb) = build_embedding(&space, kind, coeffs, settings, rule)?;
    let rho_max = emb.rho_max(&ops);
    let sigma_min_rel = emb
        .elements
        .iter()
        .map(|e| e.sigma_min_rel())
        .fold(1.0, f64::min);
    let downgraded = emb.elements.iter().filter(|e| e.downgraded).count();
    let gap = (|| -> Result<f64> {
        let form = FormKind::for_problem(coeffs);
        let sys = assemble_global_system(form, &space, coeffs, sigma)?;
        let ue = solve_embedded_trefftz(&sys, &emb)?;
        let ub = solve_block_coupled(&ops, &sys, &emb, ComplementRule::SvdComplement, space.bases())?;
        let d: Vec<f64> = ue.coefficients.iter().zip(&ub.coefficients).map(|(a, b)| a - b).collect();
        let nu = norm2(&ue.coefficients);
        Ok(if nu > 0.0 { norm2(&d) / nu } else { norm2(&d) })
    })()
    .map_err(|e| e.to_string());
    Ok(DiagnosticsReport {
        kind,
        rho_max,
        sigma_min_rel,
        dim_table,
        block_equivalence_gap: gap,
        downgraded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::BuiltinCase;
    use crate::mesh::build_structured_mesh;

    #[test]
    fn eoc_examples() {
        let e = estimate_eoc(&[(1.0, 1.0), (0.5, 0.25)]).unwrap();
        assert!((e.steps[0] - 2.0).abs() < 1e-14);
        let c = estimate_eoc(&[(1.0, 3.0), (0.5, 3.0), (0.25, 3.0)]).unwrap();
        assert!(c.least_squares.abs() < 1e-14);
        let hs = [0.3, 0.2, 0.1, 0.05];
        let data: Vec<_> = hs.iter().map(|&h: &f64| (h, 3.0 * h.powf(4.5))).collect();
        let s = estimate_eoc(&data).unwrap();
        assert!((s.least_squares - 4.5).abs() < 1e-12);
        assert!(s.steps.iter().all(|r| (r - 4.5).abs() < 1e-12));
        assert!(estimate_eoc(&[(1.0, 1.0)]).is_err());
        assert!(estimate_eoc(&[(1.0, 1.0), (0.5, 0.0)]).is_err());
        assert!(estimate_eoc(&[(0.5, 1.0), (1.0, 0.5)]).is_err());
    }

    #[test]
    fn zero_solution_l2_error() {
        let space = DgSpace::new(build_structured_mesh(8).unwrap(), 2).unwrap();
        let c = BuiltinCase::ArExample.coefficients();
        let sol = DiscreteSolution {
            coefficients: vec![0.0; space.ndof()],
            method: Method::StandardDg,
            ndof_full: space.ndof(),
            ndof_trefftz: None,
            split: None,
        };
        let r = compute_errors(&space, &sol, &c, ErrorNorm::Advection).unwrap();
        assert!((r.l2_error - 0.5f64.sqrt()).abs() < 1e-10, "{}", r.l2_error);
    }

    #[test]
    fn diagnostics_ar_cubic() {
        let mesh = build_structured_mesh(4).unwrap();
        let c = BuiltinCase::ArExample.coefficients();
        let d = run_diagnostics(&mesh, 3, OperatorKind::AdvectionReaction, &c, &LocalSettings::default(), 0.0).unwrap();
        assert!(d.rho_max <= 1e-10);
        assert!(d.sigma_min_rel > 0.0 && d.sigma_min_rel <= 1.0);
        let row = d.dim_table.iter().find(|r| r.p == 3).unwrap();
        assert_eq!((row.n, row.n_trefftz, row.dim_q), (10, 4, 6));
        assert!(*d.block_equivalence_gap.as_ref().unwrap() <= 1e-8);
    }
}
