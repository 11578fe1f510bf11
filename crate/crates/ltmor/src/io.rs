//! File formats: plain-text field files for visualization, CSV report
//! tables, and a small binary container for the reduced basis.
//!
//! CSV numeric cells use the `{:e}` exponent form, which is the shortest
//! representation that round-trips, so identical runs produce identical
//! bytes. Field files use plain decimal for easier import into plotting
//! tools.

use crate::assembly::GramKind;
use crate::mesh::Mesh;
use crate::metrics::TimingReport;
use crate::{Error, Result};
use nalgebra::DMatrix;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

const BASIS_MAGIC: [u8; 4] = *b"LTMB";
const BASIS_VERSION: u32 = 1;

/// Nodal field over the full vertex set in the three-section layout:
/// `vertices` (x y per line), `triangles` (three indices per line),
/// `values` (one value per line).
pub fn write_field_file(path: &Path, mesh: &Mesh, values: &[f64]) -> Result<()> {
    if values.len() != mesh.n_vertices() {
        return Err(Error::InvalidArgument(format!(
            "field has {} values for {} vertices",
            values.len(),
            mesh.n_vertices()
        )));
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "vertices {}", mesh.n_vertices())?;
    for v in mesh.vertices() {
        writeln!(w, "{} {}", v[0], v[1])?;
    }
    writeln!(w, "triangles {}", mesh.n_triangles())?;
    for t in mesh.triangles() {
        writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "values {}", values.len())?;
    for v in values {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_singular_values(path: &Path, sigma: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "index,value")?;
    for (i, s) in sigma.iter().enumerate() {
        writeln!(w, "{i},{s:e}")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub r: usize,
    pub m: usize,
    pub l2: f64,
    pub h1: f64,
}

pub fn write_rel_error(path: &Path, rows: &[ErrorRow]) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "R,M,L2,H1")?;
    for row in rows {
        writeln!(w, "{},{},{:e},{:e}", row.r, row.m, row.l2, row.h1)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timings(path: &Path, timing: &TimingReport) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "phase,seconds")?;
    for (phase, secs) in timing.rows() {
        writeln!(w, "{phase},{secs:e}")?;
    }
    w.flush()?;
    Ok(())
}

/// Basis container written by the offline stage and consumed by the online
/// stage; checks at load time that it was built for the same discretization.
pub struct StoredBasis {
    pub mesh_n: usize,
    pub gram: GramKind,
    pub phi: DMatrix<f64>,
    pub singular_values: Vec<f64>,
}

pub fn write_basis(
    path: &Path,
    mesh_n: usize,
    gram: GramKind,
    phi: &DMatrix<f64>,
    singular_values: &[f64],
) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(&BASIS_MAGIC)?;
    w.write_all(&BASIS_VERSION.to_le_bytes())?;
    w.write_all(&(mesh_n as u64).to_le_bytes())?;
    w.write_all(&[match gram {
        GramKind::Stiffness => 0u8,
        GramKind::StiffnessPlusMass => 1u8,
    }])?;
    w.write_all(&(phi.nrows() as u64).to_le_bytes())?;
    w.write_all(&(phi.ncols() as u64).to_le_bytes())?;
    w.write_all(&(singular_values.len() as u64).to_le_bytes())?;
    for v in phi.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in singular_values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_basis(path: &Path) -> Result<StoredBasis> {
    let format_err = |reason: &str| Error::Format {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| format_err("file too short for header"))?;
    if magic != BASIS_MAGIC {
        return Err(format_err("not a basis file (bad magic)"));
    }
    let version = read_u32(&mut r, path)?;
    if version != BASIS_VERSION {
        return Err(format_err(&format!("unsupported version {version}")));
    }
    let mesh_n = read_u64(&mut r, path)? as usize;
    let mut gram_byte = [0u8; 1];
    r.read_exact(&mut gram_byte)
        .map_err(|_| format_err("truncated header"))?;
    let gram = match gram_byte[0] {
        0 => GramKind::Stiffness,
        1 => GramKind::StiffnessPlusMass,
        other => return Err(format_err(&format!("unknown inner-product tag {other}"))),
    };
    let rows = read_u64(&mut r, path)? as usize;
    let cols = read_u64(&mut r, path)? as usize;
    let sigma_len = read_u64(&mut r, path)? as usize;
    if rows == 0 || cols == 0 || cols > rows || sigma_len > 1_000_000_000 {
        return Err(format_err("implausible dimensions"));
    }
    let mut phi = DMatrix::zeros(rows, cols);
    let mut buf = [0u8; 8];
    for j in 0..cols {
        for i in 0..rows {
            r.read_exact(&mut buf)
                .map_err(|_| format_err("truncated basis data"))?;
            phi[(i, j)] = f64::from_le_bytes(buf);
        }
    }
    let mut singular_values = Vec::with_capacity(sigma_len);
    for _ in 0..sigma_len {
        r.read_exact(&mut buf)
            .map_err(|_| format_err("truncated singular values"))?;
        singular_values.push(f64::from_le_bytes(buf));
    }
    Ok(StoredBasis { mesh_n, gram, phi, singular_values })
}

fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|_| Error::Format {
        path: path.display().to_string(),
        reason: "truncated header".into(),
    })?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read, path: &Path) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(|_| Error::Format {
        path: path.display().to_string(),
        reason: "truncated header".into(),
    })?;
    Ok(u64::from_le_bytes(buf))
}

pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let r = BufReader::new(std::fs::File::open(path)?);
    Ok(r.lines().collect::<std::io::Result<Vec<_>>>()?)
}

/// Scatters interior values to all vertices (boundary zeros) for field dumps.
pub fn field_from_interior(mesh: &Mesh, interior: &[f64]) -> Vec<f64> {
    mesh.scatter_interior(interior)
}
