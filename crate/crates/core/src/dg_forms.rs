//! Global DG bilinear forms and load vectors on the full broken polynomial
//! space: upwind advection-reaction and symmetric interior penalty
//! diffusion-advection-reaction.

use std::fmt;
use std::io::Write;

use faer::Mat;
use rayon::prelude::*;

use crate::coefficients::PdeCoefficients;
use crate::error::{Error, Result};
use crate::linalg::BlockMatrix;
use crate::mesh::{Facet, Point};
use crate::quadrature::{quadrature_rule, segment_rule, Domain};
use crate::space::DgSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    ArUpwind,
    DarSip,
}

impl FormKind {
    /// SIP when the problem has diffusion, upwind otherwise.
    pub fn for_problem(coeffs: &PdeCoefficients) -> Self {
        if coeffs.has_diffusion() {
            FormKind::DarSip
        } else {
            FormKind::ArUpwind
        }
    }
}

impl fmt::Display for FormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormKind::ArUpwind => "AR_UPWIND",
            FormKind::DarSip => "DAR_SIP",
        })
    }
}

/// `50 p^2`.
pub fn default_sigma(p: usize) -> f64 {
    50.0 * (p * p) as f64
}

pub fn volume_exactness(p: usize) -> usize {
    2 * p + 4
}

pub fn facet_exactness(p: usize) -> usize {
    2 * p + 2
}

/// Assembled `A_h u = l_h`. Rows are indexed by test functions.
#[derive(Debug, Clone)]
pub struct DgSystem {
    pub matrix: BlockMatrix,
    pub rhs: Vec<f64>,
    pub kind: FormKind,
    pub sigma: f64,
    /// Per-facet `alpha_F` (empty for the upwind form).
    pub alpha_facet: Vec<f64>,
}

impl DgSystem {
    pub fn ndof(&self) -> usize {
        self.rhs.len()
    }

    /// Coordinate export, one `row col value` triple per line.
    pub fn write_matrix<W: Write>(&self, out: W) -> std::io::Result<()> {
        self.matrix.write_coordinate(out)
    }
}

/// Mean of alpha over each element (`None` for the upwind form).
pub fn element_alpha_means(space: &DgSpace, coeffs: &PdeCoefficients) -> Result<Vec<f64>> {
    let alpha = match &coeffs.alpha {
        Some(a) => a.clone(),
        None => return Ok(vec![0.0; space.num_elements()]),
    };
    let p = space.degree();
    space
        .mesh
        .geometries()
        .par_iter()
        .enumerate()
        .map(|(k, g)| {
            let q = quadrature_rule(Domain::Triangle(g.vertices), volume_exactness(p))?;
            let mut s = 0.0;
            for (x, w) in q.iter() {
                let a = alpha.value(x);
                if !(a > 0.0) {
                    return Err(Error::NonPositiveDiffusion {
                        element: k,
                        x: x[0],
                        y: x[1],
                        value: a,
                    });
                }
                s += w * a;
            }
            Ok(s / g.area)
        })
        .collect()
}

/// Facet diffusion weight: mean of the adjacent element means.
pub fn facet_alpha(facet: &Facet, means: &[f64]) -> f64 {
    match facet.right {
        Some(r) => 0.5 * (means[facet.left] + means[r]),
        None => means[facet.left],
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

struct FacetContribution {
    blocks: Vec<(usize, usize, Mat<f64>)>,
    rhs: Option<(usize, Vec<f64>)>,
}

fn volume_block(
    space: &DgSpace,
    coeffs: &PdeCoefficients,
    kind: FormKind,
    k: usize,
) -> Result<(Mat<f64>, Vec<f64>)> {
    let basis = space.basis(k);
    let g = &space.mesh.geometries()[k];
    let n = basis.dim();
    let q = quadrature_rule(Domain::Triangle(g.vertices), volume_exactness(space.degree()))?;
    let mut a = Mat::<f64>::zeros(n, n);
    let mut rhs = vec![0.0; n];
    for (x, w) in q.iter() {
        let (phi, grad) = basis.values_gradients(x);
        let beta = coeffs.beta_at(x);
        let gamma = coeffs.gamma.value(x);
        let alpha = match kind {
            FormKind::DarSip => {
                let a = coeffs.alpha_at(x);
                if !(a > 0.0) {
                    return Err(Error::NonPositiveDiffusion {
                        element: k,
                        x: x[0],
                        y: x[1],
                        value: a,
                    });
                }
                a
            }
            FormKind::ArUpwind => 0.0,
        };
        let f = coeffs.source.value(x);
        for j in 0..n {
            let conv = dot(beta, grad[j]) + gamma * phi[j];
            for i in 0..n {
                a[(i, j)] += w * (alpha * dot(grad[j], grad[i]) + conv * phi[i]);
            }
        }
        for i in 0..n {
            rhs[i] += w * f * phi[i];
        }
    }
    Ok((a, rhs))
}

fn facet_block(
    space: &DgSpace,
    coeffs: &PdeCoefficients,
    kind: FormKind,
    sigma: f64,
    facet: &Facet,
    alpha_f: f64,
) -> Result<FacetContribution> {
    let verts = space.mesh.vertices();
    let (a, b) = (verts[facet.vertices[0]], verts[facet.vertices[1]]);
    let q = segment_rule(a, b, facet_exactness(space.degree()))?;
    let nrm = facet.normal;
    let n = space.local_dim();
    let diffusive = kind == FormKind::DarSip;
    let pen = if diffusive { sigma * alpha_f / facet.length } else { 0.0 };
    let alpha_at = |x: Point, element: usize| -> Result<f64> {
        if !diffusive {
            return Ok(0.0);
        }
        let v = coeffs.alpha_at(x);
        if v > 0.0 {
            Ok(v)
        } else {
            Err(Error::NonPositiveDiffusion {
                element,
                x: x[0],
                y: x[1],
                value: v,
            })
        }
    };
    let k1 = facet.left;
    let b1 = space.basis(k1);

    match facet.right {
        Some(k2) => {
            let b2 = space.basis(k2);
            let m = 2 * n;
            let mut blk = Mat::<f64>::zeros(m, m);
            let mut jump = vec![0.0; m];
            let mut avg = vec![0.0; m];
            let mut flux = vec![0.0; m];
            for (x, w) in q.iter() {
                let (p1, g1) = b1.values_gradients(x);
                let (p2, g2) = b2.values_gradients(x);
                let a1 = alpha_at(x, k1)?;
                let a2 = alpha_at(x, k2)?;
                for j in 0..n {
                    jump[j] = p1[j];
                    jump[n + j] = -p2[j];
                    avg[j] = 0.5 * p1[j];
                    avg[n + j] = 0.5 * p2[j];
                    flux[j] = 0.5 * a1 * dot(g1[j], nrm);
                    flux[n + j] = 0.5 * a2 * dot(g2[j], nrm);
                }
                let bn = dot(coeffs.beta_at(x), nrm);
                for j in 0..m {
                    for i in 0..m {
                        let mut v = -flux[j] * jump[i] - jump[j] * flux[i] + pen * jump[j] * jump[i];
                        v += -bn * jump[j] * avg[i] + 0.5 * bn.abs() * jump[j] * jump[i];
                        blk[(i, j)] += w * v;
                    }
                }
            }
            let sub = |r: usize, c: usize| Mat::from_fn(n, n, |i, j| blk[(r * n + i, c * n + j)]);
            Ok(FacetContribution {
                blocks: vec![
                    (k1, k1, sub(0, 0)),
                    (k1, k2, sub(0, 1)),
                    (k2, k1, sub(1, 0)),
                    (k2, k2, sub(1, 1)),
                ],
                rhs: None,
            })
        }
        None => {
            let mut blk = Mat::<f64>::zeros(n, n);
            let mut rhs = vec![0.0; n];
            for (x, w) in q.iter() {
                let (p1, g1) = b1.values_gradients(x);
                let a1 = alpha_at(x, k1)?;
                let gd = coeffs.dirichlet.value(x);
                let bn = dot(coeffs.beta_at(x), nrm);
                let inflow = if bn < 0.0 { -bn } else { 0.0 };
                let flux: Vec<f64> = g1.iter().map(|g| a1 * dot(*g, nrm)).collect();
                for j in 0..n {
                    for i in 0..n {
                        let v = -flux[j] * p1[i] - p1[j] * flux[i] + (pen + inflow) * p1[j] * p1[i];
                        blk[(i, j)] += w * v;
                    }
                }
                for i in 0..n {
                    rhs[i] += w * gd * (-flux[i] + (pen + inflow) * p1[i]);
                }
            }
            Ok(FacetContribution {
                blocks: vec![(k1, k1, blk)],
                rhs: Some((k1, rhs)),
            })
        }
    }
}

/// Quadrature assembly of `a_h` and `l_h`, term by term.
pub fn assemble_global_system(
    kind: FormKind,
    space: &DgSpace,
    coeffs: &PdeCoefficients,
    sigma: f64,
) -> Result<DgSystem> {
    if kind == FormKind::DarSip {
        if !(sigma > 0.0) {
            return Err(Error::InvalidArgument(format!("penalty sigma must be positive, got {sigma}")));
        }
        if !coeffs.has_diffusion() {
            return Err(Error::InvalidArgument(format!(
                "interior penalty form requested for {} which has no diffusion",
                coeffs.name
            )));
        }
    }
    let ne = space.num_elements();
    let n = space.local_dim();
    let means = if kind == FormKind::DarSip {
        element_alpha_means(space, coeffs)?
    } else {
        Vec::new()
    };
    let alpha_facet: Vec<f64> = if kind == FormKind::DarSip {
        space.mesh.facets().iter().map(|f| facet_alpha(f, &means)).collect()
    } else {
        Vec::new()
    };

    let vols = (0..ne)
        .into_par_iter()
        .map(|k| volume_block(space, coeffs, kind, k))
        .collect::<Result<Vec<_>>>()?;
    let facets = space
        .mesh
        .facets()
        .par_iter()
        .enumerate()
        .map(|(fi, f)| {
            let af = alpha_facet.get(fi).copied().unwrap_or(0.0);
            facet_block(space, coeffs, kind, sigma, f, af)
        })
        .collect::<Result<Vec<_>>>()?;

    let sizes = vec![n; ne];
    let mut matrix = BlockMatrix::new(&sizes, &sizes);
    let mut rhs = vec![0.0; ne * n];
    for (k, (a, r)) in vols.into_iter().enumerate() {
        matrix.add_block(k, k, &a);
        for (dst, v) in rhs[k * n..(k + 1) * n].iter_mut().zip(r) {
            *dst += v;
        }
    }
    for c in facets {
        for (i, j, m) in &c.blocks {
            matrix.add_block(*i, *j, m);
        }
        if let Some((k, r)) = c.rhs {
            for (dst, v) in rhs[k * n..(k + 1) * n].iter_mut().zip(r) {
                *dst += v;
            }
        }
    }
    Ok(DgSystem {
        matrix,
        rhs,
        kind,
        sigma,
        alpha_facet,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{BuiltinCase, Constant};
    use crate::mesh::build_structured_mesh;
    use crate::poly::{MultiIndex, Polynomial};
    use std::sync::Arc;

    fn ones(space: &DgSpace) -> Vec<f64> {
        space.project(|_| 1.0).unwrap()
    }

    fn bilinear(sys: &DgSystem, u: &[f64], v: &[f64]) -> f64 {
        sys.matrix.mul_vec(u).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn ar_constant_identity() {
        let mesh = build_structured_mesh(3).unwrap();
        let space = DgSpace::new(mesh, 2).unwrap();
        let c = BuiltinCase::ArExample.coefficients();
        let sys = assemble_global_system(FormKind::ArUpwind, &space, &c, 0.0).unwrap();
        let one = ones(&space);
        let lhs = bilinear(&sys, &one, &one);
        // oracle: int gamma = int (x+y) = 1 over the square; inflow where beta.n < 0
        // beta = (-x, y): right side x=1 has n=(1,0), beta.n=-1; bottom y=0 has beta.n = 0
        let gl = crate::quadrature::gauss_legendre(8);
        let mut inflow = 0.0;
        for (t, w) in gl.0.iter().zip(&gl.1) {
            let s = 0.5 * (t + 1.0);
            let ww = 0.5 * w;
            let sides: [([f64; 2], [f64; 2]); 4] =
                [([s, 0.0], [0.0, -1.0]), ([1.0, s], [1.0, 0.0]), ([s, 1.0], [0.0, 1.0]), ([0.0, s], [-1.0, 0.0])];
            for (x, nrm) in sides {
                let bn = -x[0] * nrm[0] + x[1] * nrm[1];
                if bn < 0.0 {
                    inflow += ww * bn.abs();
                }
            }
        }
        assert!((lhs - (1.0 + inflow)).abs() < 1e-10, "{lhs} vs {}", 1.0 + inflow);
    }

    #[test]
    fn sip_constant_identity_and_symmetry() {
        let mesh = build_structured_mesh(1).unwrap();
        let space = DgSpace::new(mesh, 2).unwrap();
        let alpha = Polynomial::new(vec![(MultiIndex(0, 0), 1.0), (MultiIndex(1, 0), 1.0), (MultiIndex(0, 1), 1.0)]);
        let c = PdeCoefficients::diffusion("d", Arc::new(alpha), Arc::new(Constant(0.0)));
        let sigma = 7.0;
        let sys = assemble_global_system(FormKind::DarSip, &space, &c, sigma).unwrap();
        let one = ones(&space);
        let lhs = bilinear(&sys, &one, &one);
        // element means of 1+x+y on the two triangles: 1 + 2*(centroid sum)
        let mut expected = 0.0;
        for f in space.mesh.facets().iter().filter(|f| f.is_boundary()) {
            let cen = space.mesh.geometries()[f.left].centroid;
            let mean = 1.0 + cen[0] + cen[1];
            expected += sigma * mean / f.length * f.length;
        }
        assert!((lhs - expected).abs() < 1e-10 * expected, "{lhs} vs {expected}");
        let d = sys.matrix.to_dense();
        let mut asym = 0.0f64;
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                asym = asym.max((d[(i, j)] - d[(j, i)]).abs());
            }
        }
        assert!(asym <= 1e-10 * sys.matrix.frobenius());
        assert!(sys.rhs.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn zero_data_zero_load() {
        let mesh = build_structured_mesh(2).unwrap();
        let space = DgSpace::new(mesh, 3).unwrap();
        let c = BuiltinCase::DarExample
            .coefficients()
            .with_source(Arc::new(Constant(0.0)))
            .with_dirichlet(Arc::new(Constant(0.0)));
        let sys = assemble_global_system(FormKind::DarSip, &space, &c, default_sigma(3)).unwrap();
        assert!(sys.rhs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sparsity_follows_facets() {
        let mesh = build_structured_mesh(3).unwrap();
        let space = DgSpace::new(mesh, 1).unwrap();
        let c = BuiltinCase::DarExample.coefficients();
        let sys = assemble_global_system(FormKind::DarSip, &space, &c, 50.0).unwrap();
        for (&(i, j), _) in sys.matrix.blocks() {
            if i != j {
                assert!(space
                    .mesh
                    .facets()
                    .iter()
                    .any(|f| (f.left == i && f.right == Some(j)) || (f.left == j && f.right == Some(i))));
            }
        }
    }

    #[test]
    fn rejects_bad_penalty_and_alpha() {
        let mesh = build_structured_mesh(1).unwrap();
        let space = DgSpace::new(mesh, 1).unwrap();
        let c = BuiltinCase::DarExample.coefficients();
        assert!(assemble_global_system(FormKind::DarSip, &space, &c, 0.0).is_err());
        let neg = PdeCoefficients::diffusion("neg", Arc::new(Constant(-1.0)), Arc::new(Constant(0.0)));
        assert!(matches!(
            assemble_global_system(FormKind::DarSip, &space, &neg, 1.0),
            Err(Error::NonPositiveDiffusion { .. })
        ));
    }
}
