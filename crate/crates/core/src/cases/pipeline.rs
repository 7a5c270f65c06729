//! Geometry, mesh, quadrature, assembly, solve and analysis for one case.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{CaseConfig, GeometrySpec};
use super::geometry::discretize;
use crate::analysis::export::{export_fields, ExportStats};
use crate::analysis::manufactured::{ManufacturedName, ManufacturedSolution};
use crate::analysis::norms::{convergence_rates, error_norms, pressure_bounds, ErrorNorms, PressureBounds, Rates};
use crate::analysis::qoi::{drag_lift_by_quadrature, exact_force_on_circle, pressure_drop, qoi_drag_lift, DragLift, QoiConfig};
use crate::error::{Error, Result};
use crate::immersion::{classify_cell, CutGeometry, CutQuadrature, ImmersionParams};
use crate::levelset::{region, Shape};
use crate::mesh::BackgroundMesh;
use crate::solver::{infsup_constant, solve_navier_stokes, solve_stokes, write_history_csv, write_spectrum_csv, InfSupResult, PicardHistory};
use crate::weakform::{assemble_convection, assemble_system, FlowSolution, PhysicalSetup, Space, SystemBlocks};

/// Published reference values for the channel case.
pub const TUREK_DRAG: f64 = 5.57953523384;
pub const TUREK_LIFT: f64 = 0.010618948146;
pub const TUREK_PRESSURE_DROP: f64 = 0.11752016697;

/// Largest number of scalar functions for the dense inf-sup diagnostic.
pub const INFSUP_MAX_FUNCTIONS: usize = 4000;

/// Panels of the exact-traction reference quadrature.
const ORACLE_PANELS: usize = 10_000;

/// Everything built for one mesh of a case.
pub struct Discretization {
    pub shape: Shape<f64>,
    pub space: Space<f64>,
    pub geometry: CutGeometry<f64>,
    /// Assembly quadrature.
    pub quad: CutQuadrature<f64>,
    pub h: f64,
}

impl CaseConfig {
    pub fn assembly_order(&self) -> usize {
        self.immersion.gauss_order.max(self.degree + 1)
    }

    pub fn manufactured(&self) -> Option<ManufacturedSolution> {
        let name = match self.geometry {
            GeometrySpec::QuarterAnnulus { .. } | GeometrySpec::Sliver { .. } => ManufacturedName::QuarterAnnulus,
            GeometrySpec::SquareCylinder { .. } => ManufacturedName::SquareCylinder,
            GeometrySpec::Turek(_) => return None,
        };
        Some(ManufacturedSolution::new(name, self.physics.viscosity, self.physics.convection))
    }

    pub fn physical_setup(&self) -> PhysicalSetup<f64> {
        let mut setup = PhysicalSetup::homogeneous(self.physics.viscosity);
        setup.convection = self.physics.convection;
        if let Some(ms) = self.manufactured() {
            setup.body_force = Arc::new(move |p| ms.body_force(p));
            setup.dirichlet = Arc::new(move |p, _| ms.velocity(p));
            setup.pressure_mean_zero = true;
        } else if let GeometrySpec::Turek(t) = &self.geometry {
            let t = t.clone();
            setup.dirichlet = Arc::new(move |p, r| if r == region::AMBIENT_LEFT { [t.inflow(p[1]), 0.0] } else { [0.0; 2] });
            setup.neumann_regions = vec![region::AMBIENT_RIGHT];
            setup.pressure_mean_zero = false;
        }
        setup
    }

    /// Force measurement settings, for cases with a cylinder.
    pub fn qoi(&self) -> Option<QoiConfig> {
        match &self.geometry {
            GeometrySpec::SquareCylinder { radius } => Some(QoiConfig {
                target_region: region::CYLINDER,
                normalization: *radius,
                probes: None,
            }),
            GeometrySpec::Turek(t) => Some(QoiConfig {
                target_region: region::CYLINDER,
                normalization: t.force_scale(),
                probes: Some(t.probes()),
            }),
            _ => None,
        }
    }

    /// Reference drag, lift and pressure drop.
    pub fn reference(&self) -> Option<Reference> {
        match &self.geometry {
            GeometrySpec::SquareCylinder { radius } => {
                let ms = self.manufactured()?;
                let f = exact_force_on_circle(&ms, self.physics.viscosity, [0.5, 0.5], *radius, ORACLE_PANELS);
                Some(Reference {
                    c_d: f[0] / radius,
                    c_l: f[1] / radius,
                    pressure_drop: None,
                })
            }
            GeometrySpec::Turek(_) => Some(Reference {
                c_d: TUREK_DRAG,
                c_l: TUREK_LIFT,
                pressure_drop: Some(TUREK_PRESSURE_DROP),
            }),
            _ => None,
        }
    }

    pub fn discretization(&self, mesh: usize) -> Result<Discretization> {
        let (shape, grid, h) = discretize(&self.geometry, mesh)?;
        let p = ImmersionParams {
            rho_max: self.immersion.rho_max,
            gauss_order: self.assembly_order(),
        };
        let bg = BackgroundMesh::build(grid, |_, a, b| classify_cell(&shape, a, b, &p))?;
        let geometry = CutGeometry::build(&bg, &shape, &p);
        let quad = geometry.quadrature(p.gauss_order);
        let space = Space::new(bg, self.degree)?;
        Ok(Discretization {
            shape,
            space,
            geometry,
            quad,
            h,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub c_d: f64,
    pub c_l: f64,
    pub pressure_drop: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshResult {
    pub mesh: usize,
    pub h: f64,
    pub functions: usize,
    /// Velocity and pressure unknowns, `3 n`.
    pub n_dof: usize,
    pub cut_cells: usize,
    pub errors: Option<ErrorNorms>,
    pub drag_lift: Option<DragLift>,
    /// The same functional by direct quadrature.
    pub drag_lift_quadrature: Option<DragLift>,
    pub c_d_error: Option<f64>,
    pub c_l_error: Option<f64>,
    pub pressure_drop: Option<f64>,
    pub pressure: PressureBounds,
    pub infsup: Option<InfSupResult>,
    pub picard: Option<PicardHistory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSummary {
    pub name: String,
    pub config: CaseConfig,
    pub reference: Option<Reference>,
    pub rows: Vec<MeshResult>,
    /// Observed orders per quantity.
    pub rates: BTreeMap<String, Rates>,
    pub export: Option<ExportStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshTiming {
    pub mesh: usize,
    pub geometry_s: f64,
    pub assembly_s: f64,
    pub solve_s: f64,
    pub analysis_s: f64,
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = out.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(e).context(path.display().to_string()))
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<()> {
    let mut f = create(out, name)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

fn solve(cfg: &CaseConfig, d: &Discretization, setup: &PhysicalSetup<f64>, blocks: &SystemBlocks<f64>) -> Result<(FlowSolution<f64>, Option<PicardHistory>)> {
    if !cfg.physics.convection {
        return Ok((solve_stokes(blocks, setup.pressure_mean_zero)?, None));
    }
    let (sol, history) = solve_navier_stokes(blocks, setup.pressure_mean_zero, &cfg.solver, |u| assemble_convection(&d.space, &d.quad, u))?;
    if !history.converged {
        return Err(Error::NotConverged {
            iterations: history.increments.len(),
            increment: history.increments.last().copied().unwrap_or(f64::NAN),
        });
    }
    Ok((sol, Some(history)))
}

fn run_mesh(cfg: &CaseConfig, mesh: usize, reference: Option<&Reference>, export_to: Option<&Path>) -> Result<(MeshResult, MeshTiming, Option<ExportStats>)> {
    let t0 = Instant::now();
    let d = cfg.discretization(mesh)?;
    let setup = cfg.physical_setup();
    let stab = cfg.stabilization_params();
    let t1 = Instant::now();
    let blocks = assemble_system(&d.space, &d.quad, &setup, &stab)?;
    let t2 = Instant::now();
    let (sol, picard) = solve(cfg, &d, &setup, &blocks)?;
    let t3 = Instant::now();
    let n = d.space.n();
    let errors = match cfg.manufactured() {
        Some(ms) => {
            let q = d.geometry.quadrature(cfg.assembly_order() + 1);
            Some(error_norms(&d.space, &sol, &ms, &q, setup.pressure_mean_zero)?)
        }
        None => None,
    };
    let (mut drag_lift, mut drag_lift_quadrature, mut pdrop) = (None, None, None);
    if let Some(q) = cfg.qoi() {
        drag_lift = Some(qoi_drag_lift(&d.space, &d.quad, &setup, &blocks, &sol, &q)?);
        drag_lift_quadrature = Some(drag_lift_by_quadrature(&d.space, &d.quad, &setup, &sol, &q)?);
        if let Some([p1, p2]) = q.probes {
            pdrop = Some(pressure_drop(&d.space, &d.shape, &sol, p1, p2)?);
        }
    }
    let infsup = if cfg.infsup {
        if n > INFSUP_MAX_FUNCTIONS {
            return Err(Error::Config(format!(
                "inf-sup diagnostic is dense; {n} functions exceed the limit of {INFSUP_MAX_FUNCTIONS}"
            )));
        }
        Some(infsup_constant(&blocks)?)
    } else {
        None
    };
    let export = match export_to {
        Some(out) => {
            let mut vtk = create(out, &format!("fields_{mesh}.vtk"))?;
            let mut csv = create(out, &format!("fields_{mesh}.csv"))?;
            Some(export_fields(&d.space, &d.shape, &sol, cfg.export.samples_per_cell, &mut vtk, &mut csv)?)
        }
        None => None,
    };
    let t4 = Instant::now();
    let result = MeshResult {
        mesh,
        h: d.h,
        functions: n,
        n_dof: 3 * n,
        cut_cells: d.space.mesh.num_cut(),
        errors,
        c_d_error: drag_lift.zip(reference).map(|(q, r)| (q.c_d - r.c_d).abs()),
        c_l_error: drag_lift.zip(reference).map(|(q, r)| (q.c_l - r.c_l).abs()),
        drag_lift,
        drag_lift_quadrature,
        pressure_drop: pdrop,
        pressure: pressure_bounds(&d.space, &sol, &d.quad),
        infsup,
        picard,
    };
    let timing = MeshTiming {
        mesh,
        geometry_s: (t1 - t0).as_secs_f64(),
        assembly_s: (t2 - t1).as_secs_f64(),
        solve_s: (t3 - t2).as_secs_f64(),
        analysis_s: (t4 - t3).as_secs_f64(),
    };
    Ok((result, timing, export))
}

/// Observed orders for every quantity present on all rows.
fn table_rates(rows: &[MeshResult]) -> Result<BTreeMap<String, Rates>> {
    let mut out = BTreeMap::new();
    if rows.len() < 2 {
        return Ok(out);
    }
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let columns: [(&str, fn(&MeshResult) -> Option<f64>); 5] = [
        ("velocity_l2", |r| r.errors.map(|e| e.velocity_l2)),
        ("velocity_h1", |r| r.errors.map(|e| e.velocity_h1)),
        ("pressure_l2", |r| r.errors.map(|e| e.pressure_l2)),
        ("c_d_error", |r| r.c_d_error),
        ("c_l_error", |r| r.c_l_error),
    ];
    for (name, get) in columns {
        let vals: Option<Vec<f64>> = rows.iter().map(get).collect();
        if let Some(v) = vals {
            if v.iter().all(|&e| e > 0.0) {
                out.insert(name.to_string(), convergence_rates(&h, &v)?);
            }
        }
    }
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12e}")).unwrap_or_default()
}

pub fn write_convergence_csv<W: Write>(out: &mut W, summary: &CaseSummary) -> Result<()> {
    let names = ["velocity_l2", "velocity_h1", "pressure_l2", "c_d_error"];
    write!(out, "mesh,h,n_dof")?;
    for n in names {
        write!(out, ",{n},rate_{n}")?;
    }
    writeln!(out, ",c_d,c_l,c_l_error,delta_p,lambda_h,picard_iterations")?;
    for (i, r) in summary.rows.iter().enumerate() {
        write!(out, "{},{:.12e},{}", r.mesh, r.h, r.n_dof)?;
        let vals = [
            r.errors.map(|e| e.velocity_l2),
            r.errors.map(|e| e.velocity_h1),
            r.errors.map(|e| e.pressure_l2),
            r.c_d_error,
        ];
        for (name, v) in names.iter().zip(vals) {
            let rate = summary.rates.get(*name).and_then(|rt| i.checked_sub(1).map(|j| rt.pairwise[j]));
            write!(out, ",{},{}", opt(v), opt(rate))?;
        }
        writeln!(
            out,
            ",{},{},{},{},{},{}",
            opt(r.drag_lift.map(|q| q.c_d)),
            opt(r.drag_lift.map(|q| q.c_l)),
            opt(r.c_l_error),
            opt(r.pressure_drop),
            opt(r.infsup.as_ref().map(|s| s.lambda_h)),
            r.picard.as_ref().map(|p| p.increments.len().to_string()).unwrap_or_default()
        )?;
    }
    Ok(())
}

/// Runs every mesh of the study. With `out`, writes `convergence.csv`,
/// `summary.json`, `timings.json`, per-mesh Picard histories and spectra, and
/// fields on the finest mesh when export is enabled.
pub fn run_case(cfg: &CaseConfig, out: Option<&Path>) -> Result<(CaseSummary, Vec<MeshTiming>)> {
    cfg.validate()?;
    if let Some(o) = out {
        std::fs::create_dir_all(o).map_err(|e| Error::Io(e).context(o.display().to_string()))?;
    }
    let reference = cfg.reference();
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    let mut export = None;
    let last = cfg.study.meshes.len() - 1;
    for (i, &mesh) in cfg.study.meshes.iter().enumerate() {
        let export_to = out.filter(|_| i == last && cfg.export.samples_per_cell > 0);
        let (row, timing, ex) = run_mesh(cfg, mesh, reference.as_ref(), export_to)
            .map_err(|e| e.context(format!("case `{}`, mesh {mesh}", cfg.name)))?;
        log::info!("{} mesh {mesh}: {} dofs, {:.2}s", cfg.name, row.n_dof, timing.solve_s);
        if let Some(o) = out {
            if let Some(h) = &row.picard {
                write_history_csv(&mut create(o, &format!("picard_{mesh}.csv"))?, h)?;
            }
            if let Some(s) = &row.infsup {
                write_spectrum_csv(&mut create(o, &format!("spectrum_{mesh}.csv"))?, s)?;
            }
        }
        export = export.or(ex);
        rows.push(row);
        timings.push(timing);
    }
    let summary = CaseSummary {
        name: cfg.name.clone(),
        config: cfg.clone(),
        reference,
        rates: table_rates(&rows)?,
        rows,
        export,
    };
    if let Some(o) = out {
        write_convergence_csv(&mut create(o, "convergence.csv")?, &summary)?;
        write_json(o, "summary.json", &summary)?;
        write_json(o, "timings.json", &timings)?;
    }
    Ok((summary, timings))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Gamma,
    GammaTilde,
    RhoMax,
    Degree,
}

impl std::str::FromStr for SweepParameter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(Self::Gamma),
            "gamma_tilde" | "gammaTilde" => Ok(Self::GammaTilde),
            "rho_max" | "rhoMax" => Ok(Self::RhoMax),
            "k" | "degree" => Ok(Self::Degree),
            other => Err(Error::Config(format!("unknown sweep parameter `{other}`"))),
        }
    }
}

impl SweepParameter {
    pub fn apply(self, cfg: &CaseConfig, value: f64) -> Result<CaseConfig> {
        let mut c = cfg.clone();
        let as_count = || {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::Config(format!("{self:?} needs a non-negative integer, got {value}")))
            }
        };
        match self {
            Self::Gamma => c.stabilization.gamma = Some(value),
            Self::GammaTilde => c.stabilization.gamma_tilde = Some(value),
            Self::RhoMax => c.immersion.rho_max = as_count()?,
            Self::Degree => c.degree = as_count()?,
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub runs: Vec<CaseSummary>,
}

/// Repeats the case for each value; each run writes into `out/run_<i>`.
pub fn run_sweep(cfg: &CaseConfig, parameter: SweepParameter, values: &[f64], out: Option<&Path>) -> Result<SweepSummary> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let mut runs = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        let c = parameter.apply(cfg, v)?;
        let sub = out.map(|o| o.join(format!("run_{i}")));
        let (s, _) = run_case(&c, sub.as_deref()).map_err(|e| e.context(format!("sweep {parameter:?} = {v}")))?;
        runs.push(s);
    }
    let summary = SweepSummary {
        parameter,
        values: values.to_vec(),
        runs,
    };
    if let Some(o) = out {
        let mut f = create(o, "sweep.csv")?;
        writeln!(f, "value,mesh,h,velocity_l2,velocity_h1,pressure_l2,c_d,lambda_h")?;
        for (v, run) in summary.values.iter().zip(&summary.runs) {
            for r in &run.rows {
                writeln!(
                    f,
                    "{v:.12e},{},{:.12e},{},{},{},{},{}",
                    r.mesh,
                    r.h,
                    opt(r.errors.map(|e| e.velocity_l2)),
                    opt(r.errors.map(|e| e.velocity_h1)),
                    opt(r.errors.map(|e| e.pressure_l2)),
                    opt(r.drag_lift.map(|q| q.c_d)),
                    opt(r.infsup.as_ref().map(|s| s.lambda_h))
                )?;
            }
        }
        write_json(o, "sweep.json", &summary)?;
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfSupRow {
    pub mesh: usize,
    pub h: f64,
    pub functions: usize,
    pub result: InfSupResult,
}

/// Inf-sup constants over the study meshes, without solving.
pub fn run_infsup(cfg: &CaseConfig, out: Option<&Path>) -> Result<Vec<InfSupRow>> {
    cfg.validate()?;
    let setup = cfg.physical_setup();
    let stab = cfg.stabilization_params();
    let mut rows = Vec::new();
    for &mesh in &cfg.study.meshes {
        let ctx = |e: Error| e.context(format!("inf-sup for `{}`, mesh {mesh}", cfg.name));
        let d = cfg.discretization(mesh).map_err(ctx)?;
        let n = d.space.n();
        if n > INFSUP_MAX_FUNCTIONS {
            return Err(ctx(Error::Config(format!("{n} functions exceed the dense limit {INFSUP_MAX_FUNCTIONS}"))));
        }
        let blocks = assemble_system(&d.space, &d.quad, &setup, &stab).map_err(ctx)?;
        let result = infsup_constant(&blocks).map_err(ctx)?;
        rows.push(InfSupRow {
            mesh,
            h: d.h,
            functions: n,
            result,
        });
    }
    if let Some(o) = out {
        std::fs::create_dir_all(o)?;
        let mut f = create(o, "infsup.csv")?;
        writeln!(f, "mesh,h,functions,lambda_h,kernel_modes")?;
        for r in &rows {
            writeln!(f, "{},{:.12e},{},{:.12e},{}", r.mesh, r.h, r.functions, r.result.lambda_h, r.result.kernel_modes)?;
        }
        write_json(o, "infsup.json", &rows)?;
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadCheck {
    pub mesh: usize,
    pub exact_area: f64,
    /// `(rho_max, area, |error|)`.
    pub rows: Vec<(usize, f64, f64)>,
    pub rate: Option<Rates>,
}

/// Area of the tessellated domain for `rho_max = 1 ..= immersion.rho_max` on
/// the first study mesh.
pub fn run_quadcheck(cfg: &CaseConfig, out: Option<&Path>) -> Result<QuadCheck> {
    cfg.validate()?;
    let mesh = cfg.study.meshes[0];
    let (shape, grid, _) = discretize(&cfg.geometry, mesh)?;
    let exact_area = match &cfg.geometry {
        GeometrySpec::SquareCylinder { radius } => 1.0 - std::f64::consts::PI * radius * radius,
        _ => shape.exact_area().ok_or_else(|| Error::Config("no closed-form area for this geometry".into()))?,
    };
    let mut rows = Vec::new();
    for rho in 1..=cfg.immersion.rho_max.max(1) {
        let p = ImmersionParams {
            rho_max: rho,
            gauss_order: cfg.assembly_order(),
        };
        let bg = BackgroundMesh::build(grid.clone(), |_, a, b| classify_cell(&shape, a, b, &p))?;
        let area = CutGeometry::build(&bg, &shape, &p).area();
        rows.push((rho, area, (area - exact_area).abs()));
    }
    let rate = if rows.len() >= 2 && rows.iter().all(|r| r.2 > 0.0) {
        let h: Vec<f64> = rows.iter().map(|r| 0.5f64.powi(r.0 as i32)).collect();
        let e: Vec<f64> = rows.iter().map(|r| r.2).collect();
        Some(convergence_rates(&h, &e)?)
    } else {
        None
    };
    let check = QuadCheck {
        mesh,
        exact_area,
        rows,
        rate,
    };
    if let Some(o) = out {
        std::fs::create_dir_all(o)?;
        let mut f = create(o, "quadcheck.csv")?;
        writeln!(f, "rho_max,area,error")?;
        for (r, a, e) in &check.rows {
            writeln!(f, "{r},{a:.15e},{e:.6e}")?;
        }
        write_json(o, "quadcheck.json", &check)?;
    }
    Ok(check)
}
