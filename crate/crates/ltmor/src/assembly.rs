//! P1 finite element assembly on the triangulated unit square.
//!
//! Stiffness uses one-point quadrature at the centroid, exact for the
//! piecewise-constant coefficient fields supported here; mass is the exact
//! consistent P1 element matrix. Dirichlet conditions are imposed by
//! restriction to interior degrees of freedom.

use crate::linalg::{CooBuilder, SparseSymMatrix};
use crate::mesh::Mesh;
use crate::{Error, Result};

/// Symmetric 2×2 material coefficient A(x), constant per evaluation point.
#[derive(Clone, Debug)]
pub enum CoefficientField {
    Identity,
    /// nx × ny grid of blocks over Ω, row-major from the lower-left block;
    /// each entry is [a11, a12, a22].
    PiecewiseBlocks {
        nx: usize,
        ny: usize,
        entries: Vec<[f64; 3]>,
    },
}

impl CoefficientField {
    /// Validates uniform positive definiteness (per block for the piecewise
    /// field).
    pub fn validate(&self) -> Result<()> {
        match self {
            CoefficientField::Identity => Ok(()),
            CoefficientField::PiecewiseBlocks { nx, ny, entries } => {
                if *nx == 0 || *ny == 0 || entries.len() != nx * ny {
                    return Err(Error::InvalidArgument(format!(
                        "piecewise coefficient needs nx*ny entries, got {} for {}x{}",
                        entries.len(),
                        nx,
                        ny
                    )));
                }
                for (k, e) in entries.iter().enumerate() {
                    let det = e[0] * e[2] - e[1] * e[1];
                    if !(e[0] > 0.0 && det > 0.0) {
                        return Err(Error::InvalidArgument(format!(
                            "coefficient block {k} is not positive definite"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// A(x) as [[a11, a12], [a12, a22]].
    pub fn eval(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        match self {
            CoefficientField::Identity => [[1.0, 0.0], [0.0, 1.0]],
            CoefficientField::PiecewiseBlocks { nx, ny, entries } => {
                let clamp = |t: f64, m: usize| {
                    (((t + 0.5) * m as f64).floor() as isize).clamp(0, m as isize - 1) as usize
                };
                let (bi, bj) = (clamp(x[0], *nx), clamp(x[1], *ny));
                let e = entries[bj * nx + bi];
                [[e[0], e[1]], [e[1], e[2]]]
            }
        }
    }
}

/// P1 element stiffness for a CCW triangle with coefficient matrix `a`.
pub fn element_stiffness(p: &[[f64; 2]; 3], a: [[f64; 2]; 2]) -> [[f64; 3]; 3] {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
        - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let area = 0.5 * det;
    // constant hat gradients: ∇φ_i = rot(p_{i+1} - p_{i+2}) / (2 area)
    let grads = [
        [(p[1][1] - p[2][1]) / det, (p[2][0] - p[1][0]) / det],
        [(p[2][1] - p[0][1]) / det, (p[0][0] - p[2][0]) / det],
        [(p[0][1] - p[1][1]) / det, (p[1][0] - p[0][0]) / det],
    ];
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        let agi = [
            a[0][0] * grads[i][0] + a[0][1] * grads[i][1],
            a[1][0] * grads[i][0] + a[1][1] * grads[i][1],
        ];
        for j in 0..3 {
            k[i][j] = area * (agi[0] * grads[j][0] + agi[1] * grads[j][1]);
        }
    }
    k
}

/// Exact P1 element mass for a CCW triangle.
pub fn element_mass(p: &[[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
        - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let w = 0.5 * det / 12.0;
    let mut m = [[w; 3]; 3];
    for i in 0..3 {
        m[i][i] = 2.0 * w;
    }
    m
}

fn assemble(
    mesh: &Mesh,
    interior_only: bool,
    element: impl Fn(&[[f64; 2]; 3], [f64; 2]) -> [[f64; 3]; 3],
) -> SparseSymMatrix {
    let dim = if interior_only { mesh.n_interior() } else { mesh.n_vertices() };
    let mut builder = CooBuilder::new(dim);
    for tri in mesh.triangles() {
        let p = [
            mesh.vertices()[tri[0]],
            mesh.vertices()[tri[1]],
            mesh.vertices()[tri[2]],
        ];
        let centroid = [
            (p[0][0] + p[1][0] + p[2][0]) / 3.0,
            (p[0][1] + p[1][1] + p[2][1]) / 3.0,
        ];
        let ke = element(&p, centroid);
        for i in 0..3 {
            for j in 0..3 {
                let (gi, gj) = if interior_only {
                    match (mesh.interior_index(tri[i]), mesh.interior_index(tri[j])) {
                        (Some(a), Some(b)) => (a, b),
                        _ => continue,
                    }
                } else {
                    (tri[i], tri[j])
                };
                builder.push(gi, gj, ke[i][j]);
            }
        }
    }
    builder.build()
}

/// Stiffness on interior dofs: K_ij = ∫ A∇φ_j · ∇φ_i.
pub fn assemble_stiffness(mesh: &Mesh, coeff: &CoefficientField) -> Result<SparseSymMatrix> {
    coeff.validate()?;
    Ok(assemble(mesh, true, |p, c| element_stiffness(p, coeff.eval(c))))
}

/// Stiffness over all vertices, no boundary condition applied.
pub fn assemble_stiffness_full(mesh: &Mesh, coeff: &CoefficientField) -> Result<SparseSymMatrix> {
    coeff.validate()?;
    Ok(assemble(mesh, false, |p, c| element_stiffness(p, coeff.eval(c))))
}

/// Consistent mass on interior dofs.
pub fn assemble_mass(mesh: &Mesh) -> SparseSymMatrix {
    assemble(mesh, true, |p, _| element_mass(p))
}

/// Mass over all vertices; row sums integrate hat functions, so
/// 1ᵀM1 = |Ω| = 1.
pub fn assemble_mass_full(mesh: &Mesh) -> SparseSymMatrix {
    assemble(mesh, false, |p, _| element_mass(p))
}

/// Inner product defining the spatial norm the basis is orthonormal in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GramKind {
    /// B = K (seminorm of the Dirichlet space; the default)
    Stiffness,
    /// B = K + M (full graph norm)
    StiffnessPlusMass,
}

impl GramKind {
    pub fn label(&self) -> &'static str {
        match self {
            GramKind::Stiffness => "stiffness",
            GramKind::StiffnessPlusMass => "stiffness-plus-mass",
        }
    }
}

/// Assembles the Gram matrix B from already-built K and M.
pub fn assemble_gram(
    k: &SparseSymMatrix,
    m: &SparseSymMatrix,
    kind: GramKind,
) -> SparseSymMatrix {
    match kind {
        GramKind::Stiffness => k.clone(),
        GramKind::StiffnessPlusMass => k.add_scaled(m, 1.0),
    }
}

/// Spatial load profile: an isotropic Gaussian bump.
#[derive(Clone, Debug)]
pub struct SpatialSource {
    pub center: [f64; 2],
    pub width: f64,
}

impl SpatialSource {
    pub fn new(center: [f64; 2], width: f64) -> Result<SpatialSource> {
        if !(width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "source width must be positive, got {width}"
            )));
        }
        Ok(SpatialSource { center, width })
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let dx = x[0] - self.center[0];
        let dy = x[1] - self.center[1];
        let z = self.width;
        1.0 / ((2.0 * std::f64::consts::PI).sqrt() * z)
            * (-(dx * dx + dy * dy) / (2.0 * z * z)).exp()
    }

    /// Nodal interpolant on the interior dofs.
    pub fn interior_values(&self, mesh: &Mesh) -> Vec<f64> {
        mesh.interior_vertices()
            .iter()
            .map(|&v| self.eval(mesh.vertices()[v]))
            .collect()
    }

    /// Nodal interpolant on every vertex.
    pub fn vertex_values(&self, mesh: &Mesh) -> Vec<f64> {
        mesh.vertices().iter().map(|&v| self.eval(v)).collect()
    }
}

/// Load vector b = M p_h on the interior dofs.
pub fn build_source_vector(mass: &SparseSymMatrix, p_interior: &[f64]) -> Vec<f64> {
    mass.apply(p_interior)
}
