//! Artifact formats: legacy ASCII VTK frames, the per-sweep energy CSV, and
//! the plain-text state file that `energy-report` reads back.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nematic::fields::VectorField;
use nematic::flow::StepRecord;
use nematic::mesh::Mesh;

use crate::{CliError, CliResult};

/// Write one unstructured-grid frame with the order parameter as point
/// scalars and the director as point vectors. 2d data is padded with a zero
/// third component, so the same file layout covers both dimensions.
pub fn write_vtk(
    path: &Path,
    mesh: &Mesh,
    s: &[f64],
    n: &VectorField,
    step: usize,
) -> CliResult<()> {
    let nn = mesh.node_count();
    let nc = mesh.cell_count();
    let nv = mesh.dim + 1;
    let mut w = BufWriter::new(File::create(path)?);

    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "nematic state after sweep {step}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;

    writeln!(w, "POINTS {nn} double")?;
    for i in 0..nn {
        let p = mesh.node3(i);
        writeln!(w, "{} {} {}", p[0], p[1], p[2])?;
    }

    writeln!(w, "CELLS {nc} {}", nc * (nv + 1))?;
    for c in 0..nc {
        write!(w, "{}", nv)?;
        for &v in mesh.cell(c) {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }

    let cell_type = if mesh.dim == 2 { 5 } else { 10 };
    writeln!(w, "CELL_TYPES {nc}")?;
    for _ in 0..nc {
        writeln!(w, "{cell_type}")?;
    }

    writeln!(w, "POINT_DATA {nn}")?;
    writeln!(w, "SCALARS s double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for &v in s {
        writeln!(w, "{v}")?;
    }
    writeln!(w, "VECTORS n double")?;
    for i in 0..nn {
        let v = n.node3(i);
        writeln!(w, "{} {} {}", v[0], v[1], v[2])?;
    }

    w.flush()?;
    Ok(())
}

/// Energy history writer: one header, one row per sweep, full-precision
/// floats so reruns can be compared byte for byte.
pub struct CsvWriter {
    w: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path) -> CliResult<CsvWriter> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "step,e1,e2,total,e1_tilde,c1,min_s,decrement")?;
        Ok(CsvWriter { w })
    }

    pub fn row(&mut self, rec: &StepRecord) -> CliResult<()> {
        writeln!(
            self.w,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            rec.step, rec.e1, rec.e2, rec.total, rec.e1_tilde, rec.c1, rec.min_s, rec.decrement
        )?;
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.w.flush()?;
        Ok(())
    }
}

/// Save a state as text: a `dim node_count` header, then one node per line
/// with the order parameter followed by the director components, at full
/// precision so a reload reproduces the energies exactly.
pub fn write_state(path: &Path, dim: usize, s: &[f64], n: &VectorField) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{dim} {}", s.len())?;
    for (i, &si) in s.iter().enumerate() {
        write!(w, "{si:.16e}")?;
        for &c in n.node(i) {
            write!(w, " {c:.16e}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn malformed(path: &Path, detail: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("malformed state file {}: {detail}", path.display()))
}

/// Read a state file back. Any structural problem (bad header, wrong entry
/// count, unparseable number) is a configuration error, not an IO error.
pub fn read_state(path: &Path) -> CliResult<(usize, Vec<f64>, VectorField)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();

    let header = lines.next().ok_or_else(|| malformed(path, "empty file"))?;
    let mut parts = header.split_whitespace();
    let dim: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| malformed(path, "header must start with the dimension"))?;
    let nn: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| malformed(path, "header must give the node count"))?;
    if parts.next().is_some() {
        return Err(malformed(path, "header has trailing tokens"));
    }
    if dim != 2 && dim != 3 {
        return Err(malformed(path, format!("dimension {dim} is not 2 or 3")));
    }

    let mut s = Vec::with_capacity(nn);
    let mut data = Vec::with_capacity(nn * dim);
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if s.len() == nn {
            return Err(malformed(path, format!("more than {nn} node lines")));
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| malformed(path, format!("line {}: {e}", k + 2)))?;
        if vals.len() != 1 + dim {
            return Err(malformed(
                path,
                format!("line {}: expected {} values, found {}", k + 2, 1 + dim, vals.len()),
            ));
        }
        s.push(vals[0]);
        data.extend_from_slice(&vals[1..]);
    }
    if s.len() != nn {
        return Err(malformed(path, format!("expected {nn} node lines, found {}", s.len())));
    }

    Ok((dim, s, VectorField::from_data(dim, data)))
}
