//! Structured triangulation of the unit square Ω = (-1/2, 1/2)².
//!
//! Each grid cell is split along the same diagonal, giving 2n² congruent
//! right triangles with longest edge h = √2/n. Vertices on ∂Ω carry the
//! homogeneous Dirichlet condition and are excluded from the unknowns.

use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct Mesh {
    n: usize,
    vertices: Vec<[f64; 2]>,
    /// counter-clockwise vertex triples
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    /// interior_index[v] = Some(position among the unknowns)
    interior_index: Vec<Option<usize>>,
    /// inverse of interior_index
    interior_vertices: Vec<usize>,
}

/// Builds the n×n uniform-diagonal triangulation. Requires n ≥ 2 so at least
/// one interior vertex exists.
pub fn build_unit_square_mesh(n: usize) -> Result<Mesh> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "mesh subdivision n must be at least 2, got {n}"
        )));
    }
    let np = n + 1;
    let mut vertices = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            vertices.push([-0.5 + i as f64 / n as f64, -0.5 + j as f64 / n as f64]);
        }
    }
    let vid = |i: usize, j: usize| j * np + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let boundary: Vec<bool> = vertices
        .iter()
        .map(|v| {
            (v[0].abs() - 0.5).abs() <= 1e-12 || (v[1].abs() - 0.5).abs() <= 1e-12
        })
        .collect();
    let mut interior_index = vec![None; vertices.len()];
    let mut interior_vertices = Vec::new();
    for (v, &on_boundary) in boundary.iter().enumerate() {
        if !on_boundary {
            interior_index[v] = Some(interior_vertices.len());
            interior_vertices.push(v);
        }
    }
    Ok(Mesh { n, vertices, triangles, boundary, interior_index, interior_vertices })
}

impl Mesh {
    pub fn subdivisions(&self) -> usize {
        self.n
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_interior(&self) -> usize {
        self.interior_vertices.len()
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn interior_index(&self, v: usize) -> Option<usize> {
        self.interior_index[v]
    }

    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior_vertices
    }

    /// Longest edge; √2/n for this triangulation.
    pub fn mesh_size(&self) -> f64 {
        std::f64::consts::SQRT_2 / self.n as f64
    }

    /// Signed area of triangle t; positive for the CCW orientation invariant.
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    /// Expands an interior-dof vector to all vertices, zero on the boundary.
    pub fn scatter_interior(&self, interior: &[f64]) -> Vec<f64> {
        assert_eq!(interior.len(), self.n_interior());
        let mut full = vec![0.0; self.n_vertices()];
        for (k, &v) in self.interior_vertices.iter().enumerate() {
            full[v] = interior[k];
        }
        full
    }

    /// Restricts a full vertex vector to the interior dofs.
    pub fn restrict_interior(&self, full: &[f64]) -> Vec<f64> {
        assert_eq!(full.len(), self.n_vertices());
        self.interior_vertices.iter().map(|&v| full[v]).collect()
    }
}
