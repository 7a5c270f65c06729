use std::path::Path;

use immersoflow::analysis::qoi::{drag_lift_by_quadrature, pressure_drop, qoi_drag_lift};
use immersoflow::cases::{run_case, CaseConfig};
use immersoflow::solver::solve_stokes;
use immersoflow::weakform::{assemble_system, FlowSolution, PhysicalSetup};

fn square_cylinder(overrides: &[&str]) -> CaseConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/square_cylinder.json");
    CaseConfig::load(&path).unwrap().with_overrides(overrides).unwrap()
}

#[test]
fn residual_and_pointwise_drag_agree() {
    let cfg = square_cylinder(&["study.meshes=[6]", "immersion.rho_max=3", "physics.convection=false"]);
    let d = cfg.discretization(6).unwrap();
    let setup = cfg.physical_setup();
    let blocks = assemble_system(&d.space, &d.quad, &setup, &cfg.stabilization_params()).unwrap();
    let sol = solve_stokes(&blocks, true).unwrap();
    let q = cfg.qoi().unwrap();
    let a = qoi_drag_lift(&d.space, &d.quad, &setup, &blocks, &sol, &q).unwrap();
    let b = drag_lift_by_quadrature(&d.space, &d.quad, &setup, &sol, &q).unwrap();
    for c in 0..2 {
        assert!((a.force[c] - b.force[c]).abs() <= 1e-10 * a.force[0].abs().max(1.0), "{a:?} {b:?}");
    }
    let reference = cfg.reference().unwrap();
    assert!((a.c_d - reference.c_d).abs() < 0.2 * reference.c_d.abs());
}

#[test]
fn oracle_drag_is_stable() {
    let r = square_cylinder(&[]).reference().unwrap();
    assert!((r.c_d - 0.151379252693684).abs() < 1e-10, "{}", r.c_d);
    assert!(r.pressure_drop.is_none());
}

#[test]
fn zero_flow_has_no_force_and_no_pressure_drop() {
    let cfg = square_cylinder(&["study.meshes=[5]", "immersion.rho_max=2"]);
    let d = cfg.discretization(5).unwrap();
    let setup = PhysicalSetup::homogeneous(1.0);
    let blocks = assemble_system(&d.space, &d.quad, &setup, &cfg.stabilization_params()).unwrap();
    let n = d.space.n();
    let sol = FlowSolution {
        uhat: vec![0.0; 2 * n],
        phat: vec![0.0; n],
        lambda: None,
    };
    let q = cfg.qoi().unwrap();
    let f = qoi_drag_lift(&d.space, &d.quad, &setup, &blocks, &sol, &q).unwrap();
    assert_eq!((f.c_d, f.c_l), (0.0, 0.0));
    // any field: identical probes give a zero difference
    let sol = solve_stokes(&assemble_system(&d.space, &d.quad, &cfg.physical_setup(), &cfg.stabilization_params()).unwrap(), true).unwrap();
    let p = [0.1, 0.3];
    assert_eq!(pressure_drop(&d.space, &d.shape, &sol, p, p).unwrap(), 0.0);
    assert!(pressure_drop(&d.space, &d.shape, &sol, [0.5, 0.5], p).is_err());
}

#[test]
fn export_masks_the_cylinder() {
    let cfg = square_cylinder(&["study.meshes=[8]", "immersion.rho_max=3", "export.samples_per_cell=8"]);
    let dir = tempfile::tempdir().unwrap();
    let (s, _) = run_case(&cfg, Some(dir.path())).unwrap();
    let e = s.export.unwrap();
    let hole = std::f64::consts::PI * 0.125 * 0.125;
    assert!((e.masked_fraction() - hole).abs() < 0.01, "{}", e.masked_fraction());
    let csv = std::fs::read_to_string(dir.path().join("fields_8.csv")).unwrap();
    assert!(csv.starts_with("x,y,u1,u2,p"));
    assert_eq!(csv.lines().count() - 1, e.points - e.masked);
    assert!(dir.path().join("fields_8.vtk").exists());
}
