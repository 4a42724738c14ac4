use std::f64::consts::PI;

use faer::Side;
use proptest::prelude::*;

use etdg::analysis::{error_norms, estimate_eoc, ErrorNorm};
use etdg::basis::ElementBasis;
use etdg::coefficients::BuiltinCase;
use etdg::dg_forms::{assemble_global_system, default_sigma, FormKind};
use etdg::embedding::compute_embedding;
use etdg::embedding::RankRule;
use etdg::linalg::{mat_t_vec, mat_vec, norm2};
use etdg::local_ops::{assemble_local_operator, compute_box, leibniz_point_derivative, LocalSettings, OperatorKind};
use etdg::mesh::{build_structured_mesh, ElementGeometry};
use etdg::poly::{MultiIndex, MultiIndexSet, Polynomial};
use etdg::quadrature::{quadrature_rule, Domain};
use etdg::space::DgSpace;

fn triangle() -> impl Strategy<Value = ElementGeometry> {
    prop::array::uniform3(prop::array::uniform2(-2.0f64..2.0))
        .prop_map(|v| {
            let a2 = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
            ElementGeometry::from_vertices(if a2 > 0.0 { v } else { [v[0], v[2], v[1]] })
        })
        .prop_filter("shape regular", |g| g.inradius > 0.08 * g.diameter)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Barycentric coordinates of `x` in `g`.
fn barycentric(g: &ElementGeometry, x: [f64; 2]) -> [f64; 3] {
    let [a, b, c] = g.vertices;
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, .. ProptestConfig::default() })]

    #[test]
    fn basis_is_orthonormal(g in triangle(), p in 0usize..=6) {
        let b = ElementBasis::on_triangle(0, &g, p).unwrap();
        let q = quadrature_rule(Domain::Triangle(g.vertices), 2 * p + 2).unwrap();
        let m = b.gram(&q);
        for i in 0..b.dim() {
            for j in 0..b.dim() {
                let d = if i == j { 1.0 } else { 0.0 };
                prop_assert!((m[(i, j)] - d).abs() < 1e-10);
            }
        }
        prop_assert!((b.values(g.centroid)[0] - 1.0 / g.area.sqrt()).abs() < 1e-10 / g.area.sqrt());
    }

    #[test]
    fn basis_derivatives_match_differences(g in triangle(), p in 1usize..=5, s in 0.1f64..0.8, t in 0.1f64..0.8) {
        let b = ElementBasis::on_triangle(0, &g, p).unwrap();
        let [v0, v1, v2] = g.vertices;
        let w = (1.0 - s) * t;
        let x = [v0[0] + s * (v1[0] - v0[0]) + w * (v2[0] - v0[0]), v0[1] + s * (v1[1] - v0[1]) + w * (v2[1] - v0[1])];
        let e = b.eval(x);
        let h = 1e-5 * g.diameter;
        for d in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[d] += h;
            xm[d] -= h;
            let (vp, gp) = b.values_gradients(xp);
            let (vm, gm) = b.values_gradients(xm);
            for j in 0..b.dim() {
                // relative to the size of the whole gradient / Hessian of phi_j
                let gsize = e.gradients[j][0].hypot(e.gradients[j][1]).max(1e-300);
                let hs = e.hessians[j];
                let hsize = (hs[0][0].powi(2) + hs[0][1].powi(2) + hs[1][0].powi(2) + hs[1][1].powi(2)).sqrt();
                let fdg = (vp[j] - vm[j]) / (2.0 * h);
                prop_assert!((fdg - e.gradients[j][d]).abs() <= 1e-6 * gsize, "grad {} vs {}", fdg, e.gradients[j][d]);
                for c in 0..2 {
                    let fd = (gp[j][c] - gm[j][c]) / (2.0 * h);
                    let tol = 1e-6 * hsize.max(gsize / g.diameter);
                    prop_assert!((fd - hs[d][c]).abs() <= tol, "hess {} vs {} (size {})", fd, hs[d][c], hsize);
                }
            }
        }
    }

    #[test]
    fn quadrature_integrates_barycentric_monomials(g in triangle(), a in 0u32..6, b in 0u32..6, c in 0u32..6) {
        let d = (a + b + c) as usize;
        let q = quadrature_rule(Domain::Triangle(g.vertices), d).unwrap();
        let got = q.integrate(|x| {
            let l = barycentric(&g, x);
            l[0].powi(a as i32) * l[1].powi(b as i32) * l[2].powi(c as i32)
        });
        let want = 2.0 * g.area * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2);
        prop_assert!((got - want).abs() <= 1e-12 * want);
        prop_assert!((q.weights.iter().sum::<f64>() - g.area).abs() < 1e-12 * g.area.max(1.0));
        for &pt in &q.points {
            prop_assert!(g.contains(pt, 1e-12));
        }
    }

    #[test]
    fn leibniz_matches_finite_differences(
        ac in prop::collection::vec(-0.5f64..0.5, 6),
        wc in prop::collection::vec(-1.0f64..1.0, 15),
        x0 in prop::array::uniform2(-0.5f64..0.5),
    ) {
        let alpha = Polynomial::new(
            MultiIndexSet::graded(2).iter().zip(&ac).map(|(i, &c)| (i, if i == MultiIndex::ZERO { 2.0 } else { c })).collect(),
        );
        let w = Polynomial::new(MultiIndexSet::graded(4).iter().zip(&wc).map(|(i, &c)| (i, c)).collect());
        let g = |x: [f64; 2]| {
            alpha.eval(x) * (w.derivative(MultiIndex(2, 0), x) + w.derivative(MultiIndex(0, 2), x))
                + alpha.derivative(MultiIndex(1, 0), x) * w.derivative(MultiIndex(1, 0), x)
                + alpha.derivative(MultiIndex(0, 1), x) * w.derivative(MultiIndex(0, 1), x)
        };
        let h = 1e-3;
        let d1 = |f: &dyn Fn([f64; 2]) -> f64, x: [f64; 2], dir: usize| {
            let sh = |t: f64| { let mut y = x; y[dir] += t; f(y) };
            (-sh(2.0 * h) + 8.0 * sh(h) - 8.0 * sh(-h) + sh(-2.0 * h)) / (12.0 * h)
        };
        let cases: [(MultiIndex, f64); 4] = [
            (MultiIndex(0, 0), g(x0)),
            (MultiIndex(1, 0), d1(&g, x0, 0)),
            (MultiIndex(0, 1), d1(&g, x0, 1)),
            (MultiIndex(1, 1), d1(&|y| d1(&g, y, 0), x0, 1)),
        ];
        for (i, fd) in cases {
            let got = leibniz_point_derivative(i, |d| w.derivative(d, x0), &alpha, x0).unwrap();
            prop_assert!(rel_err(got, fd) < 1e-6, "{:?}: {} vs {}", i, got, fd);
        }
    }

    #[test]
    fn embedding_invariants(g in triangle(), p in 2usize..=5, k in 0usize..4) {
        let (kind, case) = [
            (OperatorKind::AdvectionReaction, BuiltinCase::ArExample),
            (OperatorKind::DiffusionAdvectionReaction, BuiltinCase::DarExample),
            (OperatorKind::DiffusionBox, BuiltinCase::BoxDiffusion2d),
            (OperatorKind::QuasiTrefftzDiffusion, BuiltinCase::QtDiffusion),
        ][k];
        // keep the element inside the region where the builtin coefficients are positive
        let shifted = ElementGeometry::from_vertices(g.vertices.map(|v| [0.25 + 0.1 * v[0], 0.25 + 0.1 * v[1]]));
        let b = ElementBasis::on_triangle(0, &shifted, p).unwrap();
        let op = assemble_local_operator(kind, &shifted, &b, &case.coefficients(), &LocalSettings::default()).unwrap();
        let e = compute_embedding(&op, RankRule::default()).unwrap();
        prop_assert_eq!(e.rank, op.rows());
        prop_assert_eq!(e.n_trefftz(), b.dim() - kind.test_dim(p));
        let tt = e.trefftz.transpose() * &e.trefftz;
        for i in 0..tt.nrows() {
            for j in 0..tt.ncols() {
                let d = if i == j { 1.0 } else { 0.0 };
                prop_assert!((tt[(i, j)] - d).abs() < 1e-10);
            }
        }
        let at = &op.matrix * &e.trefftz;
        prop_assert!(at.norm_l2() <= 1e-10 * (1.0 + op.matrix.norm_l2()));
        let r: Vec<f64> = mat_vec(&op.matrix, &e.particular).iter().zip(&op.rhs).map(|(a, b)| a - b).collect();
        prop_assert!(norm2(&r) <= 1e-9 * (1.0 + norm2(&op.rhs)));
        prop_assert!(norm2(&mat_t_vec(&e.trefftz, &e.particular)) <= 1e-9 * norm2(&e.particular).max(1e-300));
    }

    #[test]
    fn box_fits_inside_element(g in triangle(), scale in 0.01f64..1.0) {
        let bx = compute_box(&g, scale).unwrap();
        for c in bx.corners() {
            prop_assert!(g.contains(c, 1e-12));
        }
        prop_assert!(bx.side() >= 0.9f64.powi(50) * scale * g.diameter);
        prop_assert!(bx.side() <= scale * g.diameter * (1.0 + 1e-12));
    }

    #[test]
    fn synthetic_rates_recovered(rate in 0.5f64..6.0, c in 0.1f64..10.0) {
        let data: Vec<(f64, f64)> = [0.4, 0.2, 0.1, 0.05].iter().map(|&h: &f64| (h, c * h.powf(rate))).collect();
        let e = estimate_eoc(&data).unwrap();
        prop_assert!((e.least_squares - rate).abs() < 1e-10);
    }

    #[test]
    fn error_norms_are_homogeneous(s in -5.0f64..5.0, k in 0usize..2) {
        let space = DgSpace::new(build_structured_mesh(3).unwrap(), 2).unwrap();
        let (case, norm) = [
            (BuiltinCase::ArExample, ErrorNorm::Advection),
            (BuiltinCase::DarExample, ErrorNorm::Diffusion { sigma: default_sigma(2) }),
        ][k];
        let c = case.coefficients();
        let zero = vec![0.0; space.ndof()];
        let norms = |scale: f64| {
            error_norms(
                &space,
                &zero,
                &move |x: [f64; 2]| scale * (PI * (x[0] + x[1])).sin(),
                &move |x: [f64; 2]| {
                    let d = scale * PI * (PI * (x[0] + x[1])).cos();
                    Ok([d, d])
                },
                &c,
                norm,
            )
            .unwrap()
        };
        let (l1, v1) = norms(1.0);
        let (ls, vs) = norms(s);
        prop_assert!((ls - s.abs() * l1).abs() <= 1e-12 * l1.max(1.0));
        prop_assert!((vs - s.abs() * v1).abs() <= 1e-12 * v1.max(1.0));
    }

    #[test]
    fn sip_is_symmetric_without_advection(p in 1usize..=4, n in 1usize..=4) {
        let space = DgSpace::new(build_structured_mesh(n).unwrap(), p).unwrap();
        let c = BuiltinCase::BoxDiffusion2d.coefficients();
        let sys = assemble_global_system(FormKind::DarSip, &space, &c, default_sigma(p)).unwrap();
        let d = sys.matrix.to_dense();
        prop_assert!((&d - d.transpose()).norm_l2() <= 1e-10 * d.norm_l2());
        prop_assert!(d.llt(Side::Lower).is_ok());
    }

    #[test]
    fn upwind_coercivity_witness(coeffs in prop::collection::vec(-1.0f64..1.0, 8 * 6)) {
        let space = DgSpace::new(build_structured_mesh(2).unwrap(), 2).unwrap();
        let c = BuiltinCase::ArExample.coefficients();
        let sys = assemble_global_system(FormKind::ArUpwind, &space, &c, 0.0).unwrap();
        let v = coeffs;
        let avv: f64 = sys.matrix.mul_vec(&v).iter().zip(&v).map(|(a, b)| a * b).sum();
        // independent quadrature of the coercivity identity
        let mesh = &space.mesh;
        let mut rhs = 0.0;
        for k in 0..space.num_elements() {
            let q = quadrature_rule(Domain::Triangle(mesh.geometries()[k].vertices), 10).unwrap();
            rhs += q.integrate(|x| {
                let vx = space.eval(&v, k, x);
                (c.gamma.value(x) - 0.5 * c.div_beta(x).unwrap()) * vx * vx
            });
        }
        for f in mesh.facets() {
            let vs = mesh.vertices();
            let q = etdg::quadrature::segment_rule(vs[f.vertices[0]], vs[f.vertices[1]], 10).unwrap();
            rhs += q.integrate(|x| {
                let b = c.beta_at(x);
                let bn = (b[0] * f.normal[0] + b[1] * f.normal[1]).abs();
                let j = match f.right {
                    Some(r) => space.eval(&v, f.left, x) - space.eval(&v, r, x),
                    None => space.eval(&v, f.left, x),
                };
                0.5 * bn * j * j
            });
        }
        prop_assert!(avv >= 0.9 * rhs - 1e-12);
        prop_assert!((avv - rhs).abs() <= 1e-9 * rhs.max(1.0));
    }
}

#[test]
fn monomial_gram_conditioning_does_not_grow() {
    let mut prev = f64::INFINITY;
    for n in [2, 4, 8, 16] {
        let mesh = build_structured_mesh(n).unwrap();
        let g = &mesh.geometries()[0];
        let b = ElementBasis::on_triangle(0, g, 4).unwrap();
        let m = b.monomial_gram();
        let svd = etdg::linalg::full_svd(&(m.clone() * (1.0 / g.area))).unwrap();
        let cond = svd.s[0] / svd.s[svd.s.len() - 1];
        assert!(cond <= prev * (1.0 + 1e-8), "n={n}: {cond} > {prev}");
        prev = cond;
    }
}

#[test]
fn facet_normals_are_consistent() {
    for n in 1..=6 {
        let mesh = build_structured_mesh(n).unwrap();
        for f in mesh.facets() {
            let c1 = mesh.geometries()[f.left].centroid;
            match f.right {
                Some(r) => {
                    let c2 = mesh.geometries()[r].centroid;
                    assert!(f.normal[0] * (c2[0] - c1[0]) + f.normal[1] * (c2[1] - c1[1]) > 0.0);
                }
                None => {
                    let mid = {
                        let v = mesh.vertices();
                        let (a, b) = (v[f.vertices[0]], v[f.vertices[1]]);
                        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
                    };
                    let out = [mid[0] + 1e-3 * f.normal[0], mid[1] + 1e-3 * f.normal[1]];
                    assert!(!(0.0..=1.0).contains(&out[0]) || !(0.0..=1.0).contains(&out[1]));
                }
            }
        }
        let area: f64 = mesh.geometries().iter().map(|g| g.area).sum();
        assert!((area - 1.0).abs() < 1e-12);
    }
}
