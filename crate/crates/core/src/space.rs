//! Broken polynomial space `P^p(T_h)` over a mesh.

use rayon::prelude::*;

use crate::basis::ElementBasis;
use crate::error::Result;
use crate::mesh::{Mesh2D, Point};
use crate::poly::poly_dim;

#[derive(Debug, Clone)]
pub struct DgSpace {
    pub mesh: Mesh2D,
    degree: usize,
    bases: Vec<ElementBasis>,
}

impl DgSpace {
    pub fn new(mesh: Mesh2D, degree: usize) -> Result<Self> {
        let bases = mesh
            .geometries()
            .par_iter()
            .enumerate()
            .map(|(k, g)| ElementBasis::on_triangle(k, g, degree))
            .collect::<Result<Vec<_>>>()?;
        Ok(DgSpace {
            mesh,
            degree,
            bases,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Local dimension `dim P^p`.
    pub fn local_dim(&self) -> usize {
        poly_dim(self.degree)
    }

    pub fn num_elements(&self) -> usize {
        self.mesh.num_elements()
    }

    pub fn ndof(&self) -> usize {
        self.local_dim() * self.num_elements()
    }

    pub fn basis(&self, k: usize) -> &ElementBasis {
        &self.bases[k]
    }

    pub fn bases(&self) -> &[ElementBasis] {
        &self.bases
    }

    pub fn dof_range(&self, k: usize) -> std::ops::Range<usize> {
        let n = self.local_dim();
        k * n..(k + 1) * n
    }

    /// Restriction of a global coefficient vector to element `k`.
    pub fn local<'a>(&self, u: &'a [f64], k: usize) -> &'a [f64] {
        &u[self.dof_range(k)]
    }

    pub fn eval(&self, u: &[f64], k: usize, x: Point) -> f64 {
        self.bases[k].eval_function(self.local(u, k), x)
    }

    /// Element-wise `L2` projection of `f` (quadrature exactness `2p + 4`).
    pub fn project<F: Fn(Point) -> f64 + Sync>(&self, f: F) -> Result<Vec<f64>> {
        let parts = (0..self.num_elements())
            .into_par_iter()
            .map(|k| {
                let g = self.mesh.geometries()[k];
                let q = crate::quadrature::quadrature_rule(
                    crate::quadrature::Domain::Triangle(g.vertices),
                    2 * self.degree + 4,
                )?;
                Ok(crate::basis::l2_project(&f, &self.bases[k], &q))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(parts.concat())
    }
}
