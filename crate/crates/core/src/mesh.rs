//! Simplicial meshes of the unit square with the facet topology needed for
//! jump and average terms.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// A mesh edge shared by one (boundary) or two (interior) triangles.
///
/// `normal` is the unit normal pointing out of `left`. Jumps are taken as
/// `u|left - u|right`.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub vertices: [usize; 2],
    pub left: usize,
    pub right: Option<usize>,
    pub normal: Point,
    pub length: f64,
}

impl Facet {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }
}

/// Cached geometric data of a triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub vertices: [Point; 3],
    pub diameter: f64,
    pub area: f64,
    pub centroid: Point,
    pub incenter: Point,
    pub inradius: f64,
}

impl ElementGeometry {
    pub fn from_vertices(vertices: [Point; 3]) -> Self {
        let [a, b, c] = vertices;
        // side lengths opposite to each vertex
        let la = dist(b, c);
        let lb = dist(c, a);
        let lc = dist(a, b);
        let area = 0.5 * signed_double_area(a, b, c).abs();
        let perimeter = la + lb + lc;
        let incenter = [
            (la * a[0] + lb * b[0] + lc * c[0]) / perimeter,
            (la * a[1] + lb * b[1] + lc * c[1]) / perimeter,
        ];
        ElementGeometry {
            vertices,
            diameter: la.max(lb).max(lc),
            area,
            centroid: [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0],
            incenter,
            inradius: area / (0.5 * perimeter),
        }
    }

    /// Closed-triangle containment with a relative tolerance on the
    /// barycentric coordinates.
    pub fn contains(&self, x: Point, tol: f64) -> bool {
        let [a, b, c] = self.vertices;
        let d = signed_double_area(a, b, c);
        let l0 = signed_double_area(x, b, c) / d;
        let l1 = signed_double_area(a, x, c) / d;
        let l2 = signed_double_area(a, b, x) / d;
        l0 >= -tol && l1 >= -tol && l2 >= -tol
    }
}

/// Triangulation with facet topology.
#[derive(Debug, Clone)]
pub struct Mesh2D {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    facets: Vec<Facet>,
    element_facets: Vec<[usize; 3]>,
    geometry: Vec<ElementGeometry>,
}

impl Mesh2D {
    /// Builds a mesh from counterclockwise triangles. Fails on zero-area or
    /// clockwise triangles and on edges shared by more than two triangles.
    pub fn from_triangles(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mut geometry = Vec::with_capacity(triangles.len());
        for (k, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= vertices.len() {
                    return Err(Error::OutOfRange {
                        index: v,
                        len: vertices.len(),
                    });
                }
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let d = signed_double_area(a, b, c);
            let scale = dist(a, b).max(dist(b, c)).max(dist(c, a));
            if d.abs() <= 1e-14 * scale * scale {
                return Err(Error::DegenerateElement {
                    element: k,
                    reason: "zero area".into(),
                });
            }
            if d < 0.0 {
                return Err(Error::DegenerateElement {
                    element: k,
                    reason: "clockwise vertex order".into(),
                });
            }
            geometry.push(ElementGeometry::from_vertices([a, b, c]));
        }

        let mut edge_to_facet: HashMap<(usize, usize), usize> = HashMap::new();
        let mut facets: Vec<Facet> = Vec::new();
        let mut element_facets = vec![[usize::MAX; 3]; triangles.len()];
        for (k, tri) in triangles.iter().enumerate() {
            for local in 0..3 {
                let v0 = tri[local];
                let v1 = tri[(local + 1) % 3];
                let key = (v0.min(v1), v0.max(v1));
                match edge_to_facet.get(&key) {
                    Some(&f) => {
                        let facet = &mut facets[f];
                        if facet.right.is_some() {
                            return Err(Error::InvalidArgument(format!(
                                "edge ({v0}, {v1}) shared by more than two triangles"
                            )));
                        }
                        facet.right = Some(k);
                        element_facets[k][local] = f;
                    }
                    None => {
                        let (p0, p1) = (vertices[v0], vertices[v1]);
                        let length = dist(p0, p1);
                        // outward for a counterclockwise triangle: rotate the edge clockwise
                        let normal = [(p1[1] - p0[1]) / length, -(p1[0] - p0[0]) / length];
                        let f = facets.len();
                        facets.push(Facet {
                            vertices: [v0, v1],
                            left: k,
                            right: None,
                            normal,
                            length,
                        });
                        edge_to_facet.insert(key, f);
                        element_facets[k][local] = f;
                    }
                }
            }
        }

        Ok(Mesh2D {
            vertices,
            triangles,
            facets,
            element_facets,
            geometry,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// Facet indices of element `k`, in local edge order (v0v1, v1v2, v2v0).
    pub fn element_facets(&self, k: usize) -> [usize; 3] {
        self.element_facets[k]
    }

    pub fn num_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn element_geometry(&self, k: usize) -> Result<&ElementGeometry> {
        self.geometry.get(k).ok_or(Error::OutOfRange {
            index: k,
            len: self.geometry.len(),
        })
    }

    pub fn geometries(&self) -> &[ElementGeometry] {
        &self.geometry
    }

    /// Largest element diameter.
    pub fn max_diameter(&self) -> f64 {
        self.geometry.iter().map(|g| g.diameter).fold(0.0, f64::max)
    }

    /// Plain-text dump: `v x y` per vertex, then `t i j k` per triangle
    /// (0-based).
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for v in &self.vertices {
            writeln!(out, "v {} {}", v[0], v[1])?;
        }
        for t in &self.triangles {
            writeln!(out, "t {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

/// Uniform triangulation of the unit square with `n` cells per side, each
/// cell split along its lower-left to upper-right diagonal.
pub fn build_structured_mesh(n: usize) -> Result<Mesh2D> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "mesh subdivisions must be at least 1".into(),
        ));
    }
    let step = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * step, j as f64 * step]);
        }
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let a = idx(i, j);
            let b = idx(i + 1, j);
            let c = idx(i + 1, j + 1);
            let d = idx(i, j + 1);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    Mesh2D::from_triangles(vertices, triangles)
}

/// Geometry of element `k`.
pub fn element_geometry(mesh: &Mesh2D, k: usize) -> Result<ElementGeometry> {
    mesh.element_geometry(k).copied()
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub(crate) fn signed_double_area(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
}
