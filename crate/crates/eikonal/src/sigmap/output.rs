//! Emission of scan artifacts: node CSV, component-report JSON, and one PGM
//! raster per time slice.

use super::{ComponentReport, LabeledGrid};
use crate::classify::StratumLabel;
use crate::error::{EikonalError, Result};
use std::io::Write;
use std::path::Path;

/// Gray level of each stratum in the PGM rasters.
pub fn label_gray(label: StratumLabel) -> u8 {
    match label {
        StratumLabel::Smooth => 255,
        StratumLabel::P0 => 170,
        StratumLabel::T1 => 85,
        StratumLabel::Sigma => 0,
        StratumLabel::Ambiguous => 128,
    }
}

/// Writes the node table: one row per node, `x..., t, label, u, grad_norm`,
/// with `grad_norm` left empty where `|grad u|` is undefined.
pub fn write_nodes_csv<W: Write>(grid: &LabeledGrid, mut w: W) -> std::io::Result<()> {
    let spec = &grid.spec;
    write!(w, "# schema: {}\n", crate::SCHEMA_VERSION)?;
    for a in 0..spec.spatial_dim() {
        write!(w, "x{a},")?;
    }
    writeln!(w, "t,label,u,grad_norm")?;
    for i in 0..spec.node_count() {
        let (x, t) = spec.node_point(i);
        for c in &x {
            write!(w, "{c:.12e},")?;
        }
        let node = &grid.nodes[i];
        let label = if grid.valid[i] { node.label.as_str() } else { "error" };
        write!(w, "{t:.12e},{label},")?;
        if node.u.is_nan() {
            write!(w, ",")?;
        } else {
            write!(w, "{:.12e},", node.u)?;
        }
        if node.grad_norm.is_nan() {
            writeln!(w)?;
        } else {
            writeln!(w, "{:.12e}", node.grad_norm)?;
        }
    }
    Ok(())
}

/// Serializes a component report as pretty JSON.
pub fn component_report_json(report: &ComponentReport) -> Result<String> {
    serde_json::to_string_pretty(report)
        .map_err(|e| EikonalError::InvalidArgument(format!("serialize report: {e}")))
}

/// Writes one binary PGM (P5, maxval 255) per time slice into `dir`, named
/// `{prefix}_t{k:04}.pgm`. The label-to-gray map is documented in the file
/// header comment. Returns the written paths.
pub fn write_pgm_slices(grid: &LabeledGrid, dir: &Path, prefix: &str) -> Result<Vec<std::path::PathBuf>> {
    let spec = &grid.spec;
    let io_err = |e: std::io::Error| EikonalError::InvalidArgument(format!("pgm write: {e}"));
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let (width, height) = match spec.spatial_dim() {
        1 => (spec.space_res[0], 1),
        _ => (spec.space_res[0], spec.space_res[1]),
    };
    let mut paths = Vec::new();
    for k in 0..spec.t_res {
        let t = spec.t_min + spec.t_spacing() * k as f64;
        let path = dir.join(format!("{prefix}_t{k:04}.pgm"));
        let mut buf = Vec::with_capacity(width * height + 128);
        write!(
            buf,
            "P5\n# labels: Smooth=255 P0=170 T1=85 Sigma=0 Ambiguous=128; t={t:.6}\n{width} {height}\n255\n"
        )
        .map_err(io_err)?;
        for row in 0..height {
            for col in 0..width {
                let coords: Vec<usize> = match spec.spatial_dim() {
                    1 => vec![col, k],
                    _ => vec![col, row, k],
                };
                let i = spec.ravel(&coords);
                let gray = if grid.valid[i] {
                    label_gray(grid.nodes[i].label)
                } else {
                    255
                };
                buf.push(gray);
            }
        }
        std::fs::write(&path, &buf).map_err(io_err)?;
        paths.push(path);
    }
    Ok(paths)
}
