//! Case configuration and dotted-key overrides.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::geometry::TurekData;
use crate::error::{Error, Result};
use crate::immersion::ImmersionParams;
use crate::solver::PicardConfig;
use crate::weakform::StabilizationParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    /// Annulus `r_inner < r < r_outer` in the first quadrant, immersed in
    /// `[-offset, extent - offset]^2`.
    QuarterAnnulus {
        r_inner: f64,
        r_outer: f64,
        offset: f64,
        extent: f64,
    },
    /// The same annulus in `[-d, size - d]^2` with `d` chosen so that the
    /// first grid lines cut off slivers of width `1/n^2` along both axes.
    Sliver { r_inner: f64, r_outer: f64, size: f64 },
    /// Unit square with a centered cylinder.
    SquareCylinder { radius: f64 },
    /// Channel flow past a cylinder on a graded grid.
    Turek(TurekData),
}

/// Stabilization overrides; unset entries take the degree-dependent defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilizationSpec {
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub gamma_tilde: Option<f64>,
}

impl StabilizationSpec {
    pub fn resolve(&self, degree: usize) -> StabilizationParams<f64> {
        let d = StabilizationParams::recommended(degree);
        StabilizationParams {
            beta: self.beta.unwrap_or(d.beta),
            gamma: self.gamma.unwrap_or(d.gamma),
            gamma_tilde: self.gamma_tilde.unwrap_or(d.gamma_tilde),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSpec {
    pub viscosity: f64,
    /// Solve Navier-Stokes (and include the inertia term in manufactured
    /// forcing) instead of Stokes.
    pub convection: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    /// Cells per side for uniform cases, number of uniform refinements of the
    /// graded base grid for the channel case.
    pub meshes: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportSpec {
    /// Lattice intervals per cell and direction; 0 disables field output.
    pub samples_per_cell: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub name: String,
    pub geometry: GeometrySpec,
    pub degree: usize,
    /// `gauss_order` is raised to at least `degree + 1` for assembly.
    pub immersion: ImmersionParams,
    #[serde(default)]
    pub stabilization: StabilizationSpec,
    pub physics: PhysicsSpec,
    #[serde(default)]
    pub solver: PicardConfig,
    pub study: StudySpec,
    /// Compute the inf-sup constant on every mesh (dense, small meshes only).
    #[serde(default)]
    pub infsup: bool,
    #[serde(default)]
    pub export: ExportSpec,
}

impl CaseConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(e).context(path.display().to_string()))?;
        Self::from_json(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(1..=4).contains(&self.degree) {
            return bad(format!("degree {} not in 1..=4", self.degree));
        }
        if self.study.meshes.is_empty() {
            return bad("study.meshes is empty".into());
        }
        if self.immersion.rho_max > 12 {
            return bad(format!("rho_max {} too large", self.immersion.rho_max));
        }
        if !(self.physics.viscosity > 0.0) {
            return bad("viscosity must be positive".into());
        }
        self.solver.validate()?;
        let uniform = !matches!(self.geometry, GeometrySpec::Turek(_));
        if uniform && self.study.meshes.contains(&0) {
            return bad("mesh sizes must be positive".into());
        }
        match &self.geometry {
            GeometrySpec::QuarterAnnulus {
                r_inner,
                r_outer,
                offset,
                extent,
            } => {
                if !(0.0 < *r_inner && r_inner < r_outer) {
                    return bad("quarter annulus needs 0 < r_inner < r_outer".into());
                }
                if !(*offset > 0.0 && r_outer + offset < *extent) {
                    return bad("quarter annulus must lie inside the ambient box".into());
                }
            }
            GeometrySpec::Sliver { r_inner, r_outer, size } => {
                if !(0.0 < *r_inner && r_inner < r_outer && r_outer < size) {
                    return bad("sliver annulus must lie inside the ambient box".into());
                }
                if let Some(&n) = self.study.meshes.iter().find(|&&n| n < 2) {
                    return bad(format!("sliver case needs at least 2 cells per side, got {n}"));
                }
            }
            GeometrySpec::SquareCylinder { radius } => {
                if !(*radius > 0.0 && *radius < 0.5) {
                    return bad("cylinder must lie inside the unit square".into());
                }
            }
            GeometrySpec::Turek(t) => t.validate()?,
        }
        Ok(())
    }

    pub fn stabilization_params(&self) -> StabilizationParams<f64> {
        self.stabilization.resolve(self.degree)
    }

    /// Applies `key.path=value` overrides. Values are parsed as JSON, falling
    /// back to a plain string. Unknown keys are rejected.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut root = serde_json::to_value(self)?;
        for o in overrides {
            let o = o.as_ref();
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            let mut slot = &mut root;
            for part in key.split('.') {
                slot = match slot {
                    Value::Object(map) => map
                        .get_mut(part)
                        .ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?,
                    _ => return Err(Error::Config(format!("unknown key `{key}`"))),
                };
            }
            *slot = value;
        }
        let cfg: Self = serde_json::from_value(root).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CaseConfig {
        CaseConfig {
            name: "qa".into(),
            geometry: GeometrySpec::QuarterAnnulus {
                r_inner: 1.0,
                r_outer: 4.0,
                offset: 0.03,
                extent: 4.5,
            },
            degree: 1,
            immersion: ImmersionParams::default(),
            stabilization: StabilizationSpec::default(),
            physics: PhysicsSpec {
                viscosity: 1.0,
                convection: false,
            },
            solver: PicardConfig::default(),
            study: StudySpec { meshes: vec![11] },
            infsup: false,
            export: ExportSpec::default(),
        }
    }

    #[test]
    fn overrides_reach_nested_and_optional_keys() {
        let c = sample()
            .with_overrides(&["degree=2", "stabilization.gamma=0.5", "study.meshes=[11,22]", "geometry.offset=0.05"])
            .unwrap();
        assert_eq!(c.degree, 2);
        assert_eq!(c.stabilization.gamma, Some(0.5));
        assert_eq!(c.stabilization_params().gamma_tilde, 1e-3);
        assert_eq!(c.study.meshes, vec![11, 22]);
        assert!(matches!(c.geometry, GeometrySpec::QuarterAnnulus { offset, .. } if offset == 0.05));
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(sample().with_overrides(&["degre=2"]).is_err());
        assert!(sample().with_overrides(&["physics.viscosity.x=2"]).is_err());
        assert!(sample().with_overrides(&["degree"]).is_err());
        assert!(sample().with_overrides(&["degree=9"]).is_err());
        assert!(sample().with_overrides(&["geometry.r_outer=5"]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = sample();
        let text = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(CaseConfig::from_json(&text).unwrap(), c);
        assert!(CaseConfig::from_json(&text.replace("\"degree\"", "\"degreee\"")).is_err());
    }
}
