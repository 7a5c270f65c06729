//! Field output: legacy-VTK structured points and a CSV point cloud.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::qoi::locate;
use crate::error::Result;
use crate::levelset::LevelSet;
use crate::weakform::{FlowSolution, Space};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExportStats {
    pub points: usize,
    pub masked: usize,
}

impl ExportStats {
    pub fn masked_fraction(&self) -> f64 {
        self.masked as f64 / self.points as f64
    }
}

struct Sample {
    x: [f64; 2],
    inside: bool,
    u: [f64; 2],
    p: f64,
}

/// Samples velocity and pressure on a uniform lattice over the ambient box
/// with `samples_per_cell` intervals per cell and direction. Exterior samples
/// are masked: written as zero with `inside = 0`, and left out of the CSV.
pub fn export_fields<V: Write, C: Write>(
    space: &Space<f64>,
    ls: &dyn LevelSet<f64>,
    sol: &FlowSolution<f64>,
    samples_per_cell: usize,
    vtk: &mut V,
    csv: &mut C,
) -> Result<ExportStats> {
    let grid = space.mesh.grid();
    let (lo, hi) = grid.bounds();
    let s = samples_per_cell.max(1);
    let cells = grid.cells();
    let dims = [cells[0] * s + 1, cells[1] * s + 1];
    let step = [0, 1].map(|d| (hi[d] - lo[d]) / (dims[d] - 1) as f64);
    let mut samples = Vec::with_capacity(dims[0] * dims[1]);
    for j in 0..dims[1] {
        for i in 0..dims[0] {
            let x = [lo[0] + i as f64 * step[0], lo[1] + j as f64 * step[1]];
            let inside = ls.value(x) >= 0.0 && locate(space, x).is_some();
            let (u, p) = if inside {
                (sol.velocity(space, x)?, sol.pressure(space, x)?)
            } else {
                ([0.0; 2], 0.0)
            };
            samples.push(Sample { x, inside, u, p });
        }
    }
    writeln!(vtk, "# vtk DataFile Version 3.0")?;
    writeln!(vtk, "flow fields")?;
    writeln!(vtk, "ASCII")?;
    writeln!(vtk, "DATASET STRUCTURED_POINTS")?;
    writeln!(vtk, "DIMENSIONS {} {} 1", dims[0], dims[1])?;
    writeln!(vtk, "ORIGIN {:.12e} {:.12e} 0", lo[0], lo[1])?;
    writeln!(vtk, "SPACING {:.12e} {:.12e} 1", step[0], step[1])?;
    writeln!(vtk, "POINT_DATA {}", samples.len())?;
    writeln!(vtk, "SCALARS inside int 1\nLOOKUP_TABLE default")?;
    for q in &samples {
        writeln!(vtk, "{}", u8::from(q.inside))?;
    }
    writeln!(vtk, "SCALARS pressure double 1\nLOOKUP_TABLE default")?;
    for q in &samples {
        writeln!(vtk, "{:.12e}", q.p)?;
    }
    writeln!(vtk, "SCALARS speed double 1\nLOOKUP_TABLE default")?;
    for q in &samples {
        writeln!(vtk, "{:.12e}", q.u[0].hypot(q.u[1]))?;
    }
    writeln!(vtk, "VECTORS velocity double")?;
    for q in &samples {
        writeln!(vtk, "{:.12e} {:.12e} 0", q.u[0], q.u[1])?;
    }
    writeln!(csv, "x,y,u1,u2,p")?;
    for q in samples.iter().filter(|q| q.inside) {
        writeln!(csv, "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}", q.x[0], q.x[1], q.u[0], q.u[1], q.p)?;
    }
    Ok(ExportStats {
        points: samples.len(),
        masked: samples.iter().filter(|q| !q.inside).count(),
    })
}
