//! CSV writers for the numeric outputs.
//!
//! Floats are written in Rust's shortest round-trip form, so a file is a pure
//! function of the values it holds.

use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::kernels::{KernelColumn, LineProfile};
use crate::reconstruct::{LineReconstruction, ProbeEstimate};
use crate::singularity::SingularFit;

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Writes a header and rows of numbers.
pub fn write_rows<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Argument(format!(
                "row has {} values for {} columns",
                row.len(),
                header.len()
            )));
        }
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn coords(p: &Point, n: usize) -> Vec<f64> {
    p.iter().take(n).copied().collect()
}

fn coord_header(n: usize) -> Vec<&'static str> {
    ["x1", "x2", "x3"][..n].to_vec()
}

/// Kernel column: x₁, …, x_n, value.
pub fn write_column<W: Write>(out: W, column: &KernelColumn, n: usize) -> Result<()> {
    let mut header = coord_header(n);
    header.push("value");
    write_rows(
        out,
        &header,
        column.points.iter().zip(&column.values).map(|(p, v)| {
            let mut row = coords(p, n);
            row.push(*v);
            row
        }),
    )
}

/// Ballistic profile: t, η.
pub fn write_profile<W: Write>(out: W, profile: &LineProfile) -> Result<()> {
    write_rows(
        out,
        &["t", "eta"],
        profile.ts.iter().zip(&profile.values).map(|(t, v)| vec![*t, *v]),
    )
}

/// Line reconstruction: t, σ, σ_a, ∫σ.
pub fn write_line<W: Write>(out: W, line: &LineReconstruction) -> Result<()> {
    write_rows(
        out,
        &["t", "sigma", "sigma_a", "depth"],
        (0..line.ts.len()).map(|i| vec![line.ts[i], line.sigma[i], line.sigma_a[i], line.depth[i]]),
    )
}

/// Singular fit: ε, probe value, fitted model.
pub fn write_fit<W: Write>(out: W, fit: &SingularFit) -> Result<()> {
    write_rows(out, &["eps", "f", "model"], fit.rows().into_iter().map(|(e, f, m)| vec![e, f, m]))
}

/// Anisotropy probes: x₁, …, x_n, σ, σ_a, σ_g, g (NaN when not recovered).
pub fn write_probes<W: Write>(out: W, probes: &[ProbeEstimate], n: usize) -> Result<()> {
    let mut header = coord_header(n);
    header.extend(["sigma", "sigma_a", "sigma_g", "g"]);
    write_rows(
        out,
        &header,
        probes.iter().map(|p| {
            let mut row = coords(&p.point, n);
            row.extend([p.sigma, p.sigma_a, p.sigma_g, p.g.unwrap_or(f64::NAN)]);
            row
        }),
    )
}
