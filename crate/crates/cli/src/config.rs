//! Run configuration: JSON document, dotted-path overrides, validation and hashing.

use std::path::{Path, PathBuf};

use meancurv::axisym::MeridianProfile;
use meancurv::critical::CriticalOptions;
use meancurv::geometry::{DomainKind, Point};
use meancurv::mc_operator::{BoundaryCondition, ProblemSpec};
use meancurv::solver::{uniform_schedule, SolverOptions};
use meancurv::verify::{property_claim, Tolerances};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Syntax(String),
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("bad override '{0}': expected KEY=VALUE")]
    Override(String),
}

fn field_error(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        path: path.to_string(),
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Homotopy,
    Axisym,
    Compare,
    Verify,
    MeshReport,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Homotopy => "homotopy",
            Command::Axisym => "axisym",
            Command::Compare => "compare",
            Command::Verify => "verify",
            Command::MeshReport => "mesh-report",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Disk {
        #[serde(alias = "R")]
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    RoundedPolygon {
        vertices: Vec<Point>,
        #[serde(alias = "r")]
        radius: f64,
    },
    /// Ball in n ≥ 3 dimensions, solved on its meridian section.
    Ball {
        #[serde(alias = "R")]
        radius: f64,
    },
    /// Spheroid with semi-axis `a` across and `b` along the axis of revolution.
    Spheroid {
        a: f64,
        b: f64,
    },
}

/// Planar domain or axisymmetric profile.
#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    Planar(DomainKind),
    Meridian(MeridianProfile),
}

impl DomainConfig {
    pub fn geometry(&self) -> Geometry {
        match self {
            DomainConfig::Disk { radius } => Geometry::Planar(DomainKind::Disk { radius: *radius }),
            DomainConfig::Ellipse { a, b } => Geometry::Planar(DomainKind::Ellipse { a: *a, b: *b }),
            DomainConfig::RoundedPolygon { vertices, radius } => Geometry::Planar(DomainKind::RoundedPolygon {
                vertices: vertices.clone(),
                radius: *radius,
            }),
            DomainConfig::Ball { radius } => Geometry::Meridian(MeridianProfile::Ball { radius: *radius }),
            DomainConfig::Spheroid { a, b } => Geometry::Meridian(MeridianProfile::Spheroid { a: *a, b: *b }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcKind {
    Neumann,
    Robin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(rename = "H", alias = "mean_curvature")]
    pub mean_curvature: f64,
    pub bc: BcKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default = "one")]
    pub t: f64,
    /// Dimension for axisymmetric domains; planar domains are two-dimensional.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_dim: Option<usize>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub h_target: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { h_target: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomotopyConfig {
    /// Number of uniform steps from t = 0 to t = 1.
    pub steps: usize,
    /// Explicit schedule, overriding `steps`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<f64>>,
    /// Run the continuation as part of `verify` on planar domains.
    pub in_verify: bool,
}

impl Default for HomotopyConfig {
    fn default() -> Self {
        Self {
            steps: 10,
            schedule: None,
            in_verify: true,
        }
    }
}

impl HomotopyConfig {
    pub fn schedule(&self) -> Vec<f64> {
        self.schedule.clone().unwrap_or_else(|| uniform_schedule(self.steps))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareField {
    /// The computed solution.
    Solution,
    /// Synthetic Re((x₁ + i x₂)^degree).
    Harmonic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareAgainst {
    Cylinder,
    Quadratic,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub field: CompareField,
    pub degree: u32,
    pub against: CompareAgainst,
    /// Center of the analysis; defaults to the critical point, or the origin for synthetic fields.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Point>,
    /// Sector-count radius; defaults to max(4h, 0.3·dist(p, ∂Ω)).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            field: CompareField::Solution,
            degree: 3,
            against: CompareAgainst::Cylinder,
            point: None,
            radius: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub domain: DomainConfig,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub critical: CriticalOptions,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub homotopy: HomotopyConfig,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub properties: Option<Vec<String>>,
}

/// Validated configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub raw: RawConfig,
    pub geometry: Geometry,
    pub spec: ProblemSpec,
    pub n_dim: usize,
    pub schedule: Vec<f64>,
    /// SHA-256 of the canonical configuration, output directory excluded.
    pub hash: String,
}

/// Sets `value` at the dotted `path` of a JSON object, creating objects on the way.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(assignment.to_string()))?;
    if key.is_empty() {
        return Err(ConfigError::Override(assignment.to_string()));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| field_error(&parts[..i].join("."), "not an object"))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

pub fn load(path: &Path, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text, overrides)
}

/// Parses, applies overrides, validates and hashes a configuration document.
pub fn parse(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut doc: Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let raw: RawConfig = serde_path_to_error::deserialize(&doc).map_err(|e| {
        let path = e.path().to_string();
        field_error(if path.is_empty() { "." } else { &path }, e.into_inner().to_string())
    })?;
    validate(raw)
}

fn positive(path: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(field_error(path, format!("must be a positive finite number, got {x}")))
    }
}

fn validate(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let p = &raw.problem;
    positive("problem.H", p.mean_curvature)?;
    if !(0.0..=1.0).contains(&p.t) {
        return Err(field_error("problem.t", format!("must lie in [0, 1], got {}", p.t)));
    }
    let bc = match p.bc {
        BcKind::Robin => {
            if p.c.is_some() {
                return Err(field_error("problem.c", "not allowed when bc = robin"));
            }
            let alpha = p.alpha.ok_or_else(|| field_error("problem.alpha", "required when bc = robin"))?;
            positive("problem.alpha", alpha)?;
            BoundaryCondition::Robin { alpha }
        }
        BcKind::Neumann => {
            if p.alpha.is_some() {
                return Err(field_error("problem.alpha", "not allowed when bc = neumann"));
            }
            let c = p.c.ok_or_else(|| field_error("problem.c", "required when bc = neumann"))?;
            positive("problem.c", c)?;
            BoundaryCondition::Neumann { c }
        }
    };
    let geometry = raw.domain.geometry();
    let n_dim = match (&geometry, p.n_dim) {
        (Geometry::Planar(_), None | Some(2)) => 2,
        (Geometry::Planar(_), Some(n)) => {
            return Err(field_error("problem.n_dim", format!("planar domains are two-dimensional, got {n}")))
        }
        (Geometry::Meridian(_), None) => 3,
        (Geometry::Meridian(_), Some(n)) if (2..=8).contains(&n) => n,
        (Geometry::Meridian(_), Some(n)) => {
            return Err(field_error("problem.n_dim", format!("must lie in [2, 8], got {n}")))
        }
    };
    match &raw.domain {
        DomainConfig::Disk { radius } | DomainConfig::Ball { radius } => positive("domain.radius", *radius)?,
        DomainConfig::Ellipse { a, b } | DomainConfig::Spheroid { a, b } => {
            positive("domain.a", *a)?;
            positive("domain.b", *b)?;
        }
        DomainConfig::RoundedPolygon { vertices, radius } => {
            positive("domain.radius", *radius)?;
            if vertices.len() < 3 {
                return Err(field_error("domain.vertices", "needs at least three vertices"));
            }
        }
    }
    positive("mesh.h_target", raw.mesh.h_target)?;
    positive("solver.newton_tol", raw.solver.newton_tol)?;
    if raw.solver.max_iter == 0 {
        return Err(field_error("solver.max_iter", "must be at least 1"));
    }
    if !(raw.solver.armijo_factor > 0.0 && raw.solver.armijo_factor < 1.0) {
        return Err(field_error("solver.armijo_factor", "must lie in (0, 1)"));
    }
    if !(raw.solver.armijo_c > 0.0 && raw.solver.armijo_c < 1.0) {
        return Err(field_error("solver.armijo_c", "must lie in (0, 1)"));
    }
    positive("critical.degeneracy_tol", raw.critical.degeneracy_tol)?;
    positive("critical.grad_tol_rel", raw.critical.grad_tol_rel)?;
    positive("critical.merge_factor", raw.critical.merge_factor)?;
    positive("critical.index_radius_factor", raw.critical.index_radius_factor)?;
    for (name, v) in [
        ("tolerances.sign_deadband", raw.tolerances.sign_deadband),
        ("tolerances.trace_rel", raw.tolerances.trace_rel),
        ("tolerances.cross_rel", raw.tolerances.cross_rel),
        ("tolerances.monotone_tol", raw.tolerances.monotone_tol),
        ("tolerances.volume_per_h2", raw.tolerances.volume_per_h2),
        ("tolerances.coarse_fraction", raw.tolerances.coarse_fraction),
    ] {
        positive(name, v)?;
    }
    if raw.homotopy.steps == 0 {
        return Err(field_error("homotopy.steps", "must be at least 1"));
    }
    let schedule = raw.homotopy.schedule();
    if schedule.first().is_none_or(|t| *t < 0.0)
        || schedule.windows(2).any(|w| !(w[0] < w[1]))
        || schedule.last() != Some(&1.0)
    {
        return Err(field_error(
            "homotopy.schedule",
            "must increase strictly within [0, 1] and end at 1",
        ));
    }
    if !(1..=8).contains(&raw.compare.degree) {
        return Err(field_error("compare.degree", "must lie in [1, 8]"));
    }
    if let Some(r) = raw.compare.radius {
        positive("compare.radius", r)?;
    }
    if let Some(names) = &raw.properties {
        for (i, n) in names.iter().enumerate() {
            property_claim(n).map_err(|e| field_error(&format!("properties[{i}]"), e.to_string()))?;
        }
    }
    let spec = ProblemSpec::new(p.mean_curvature, bc)
        .map_err(|e| field_error("problem", e.to_string()))?
        .with_t(p.t)
        .with_n_dim(n_dim);
    let hash = config_hash(&raw);
    Ok(RunConfig {
        geometry,
        spec,
        n_dim,
        schedule,
        hash,
        raw,
    })
}

/// SHA-256 over the canonical JSON of the configuration with defaults applied.
pub fn config_hash(raw: &RawConfig) -> String {
    let mut canonical = raw.clone();
    canonical.output = None;
    // serde_json maps are ordered by key, so this is a canonical form
    let value = serde_json::to_value(&canonical).expect("config serializes");
    let text = serde_json::to_string(&value).expect("value serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"domain": {"type": "disk", "R": 1.0},
        "problem": {"H": 0.8, "bc": "robin", "alpha": 1.0}}"#;

    fn path_of(text: &str, overrides: &[&str]) -> String {
        let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        match parse(text, &o).unwrap_err() {
            ConfigError::Field { path, .. } => path,
            e => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn minimal_defaults() {
        let cfg = parse(MINIMAL, &[]).unwrap();
        assert_eq!(cfg.raw.mesh.h_target, 0.1);
        assert_eq!(cfg.raw.solver.newton_tol, 1e-10);
        assert_eq!(cfg.schedule.len(), 11);
        assert_eq!(cfg.spec.t, 1.0);
        assert_eq!(cfg.n_dim, 2);
        assert_eq!(cfg.raw.seed, 0);
        assert_eq!(cfg.hash.len(), 64);
    }

    #[test]
    fn cross_field_and_range_errors() {
        assert_eq!(path_of(MINIMAL, &["problem.c=0.5"]), "problem.c");
        assert_eq!(path_of(MINIMAL, &["problem.t=1.5"]), "problem.t");
        assert_eq!(path_of(MINIMAL, &["problem.bc=neumann"]), "problem.alpha");
        assert_eq!(path_of(MINIMAL, &["mesh.h_target=-1"]), "mesh.h_target");
        assert_eq!(path_of(MINIMAL, &["properties=[\"nope\"]"]), "properties[0]");
    }

    #[test]
    fn unknown_keys_rejected_with_path() {
        assert_eq!(path_of(MINIMAL, &["mesh.size=0.1"]), "mesh.size");
        assert_eq!(path_of(MINIMAL, &["extra=1"]), "extra");
        let p = path_of(MINIMAL, &["domain.c=1"]);
        assert!(p.starts_with("domain"), "{p}");
    }

    #[test]
    fn overrides_and_hash() {
        let a = parse(MINIMAL, &[]).unwrap();
        let b = parse(MINIMAL, &["mesh.h_target=0.1".into()]).unwrap();
        assert_eq!(a.hash, b.hash);
        let c = parse(MINIMAL, &["mesh.h_target=0.05".into()]).unwrap();
        assert_ne!(a.hash, c.hash);
        assert_eq!(c.raw.mesh.h_target, 0.05);
        let d = parse(MINIMAL, &["output.dir=elsewhere".into()]).unwrap();
        assert_eq!(a.hash, d.hash);
        assert!(matches!(parse(MINIMAL, &["novalue".into()]), Err(ConfigError::Override(_))));
    }

    #[test]
    fn meridian_dimension() {
        let text = r#"{"domain": {"type": "ball", "R": 1.0},
            "problem": {"H": 0.8, "bc": "robin", "alpha": 1.0}}"#;
        assert_eq!(parse(text, &[]).unwrap().n_dim, 3);
        assert_eq!(path_of(MINIMAL, &["problem.n_dim=3"]), "problem.n_dim");
    }
}
