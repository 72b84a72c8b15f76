//! Subcommand orchestration and the report document.

use std::path::Path;

use meancurv::axisym::{axis_critical_points, meridian_mesh_seeded, solve_meridian, MeridianProblem};
use meancurv::critical::{find_critical_points, CriticalPointRecord};
use meancurv::geometry::{triangulate_seeded, ConvexDomain, MeshQuality, Point, TriMesh};
use meancurv::mc_operator::{neumann_feasibility, Feasibility, FeasibilityStatus, ScalarField};
use meancurv::nodal::{
    default_fit_window, difference_field, is_degenerate_contact, leading_order_fit, sector_count, trace_nodal_set,
    CylinderSolution, LeadingOrderFit, NodalArcSet, QuadraticModel,
};
use meancurv::solver::{homotopy_solve, newton_solve, HomotopyTrace, SolveReport};
use meancurv::verify::{
    run_suite, verdict_of, verify_homotopy_stability, verify_solution, Provenance, SuiteConfig, SuiteGeometry,
    Verdict, VerificationReport,
};
use meancurv::Error;
use serde::Serialize;

use crate::artifacts::{self, mesh_hash, Artifacts};
use crate::config::{Command, CompareAgainst, CompareField, Geometry, RunConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_INVALID: i32 = 4;

pub const SCHEMA: &str = "meancurv-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    VerificationFailed,
    Nonconvergence,
    Infeasible,
    Invalid,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => EXIT_PASS,
            Status::VerificationFailed => EXIT_VERIFICATION_FAILED,
            Status::Nonconvergence => EXIT_NONCONVERGENCE,
            Status::Infeasible | Status::Invalid => EXIT_INVALID,
        }
    }

    fn of_error(e: &Error) -> Self {
        match e {
            Error::Infeasible { .. } => Status::Infeasible,
            Error::SolverFailure { .. } | Error::LinearFailure(_) => Status::Nonconvergence,
            _ => Status::Invalid,
        }
    }

    fn of_verdict(v: Verdict) -> Self {
        match v {
            Verdict::Pass => Status::Ok,
            Verdict::Fail => Status::VerificationFailed,
            Verdict::Error => Status::Invalid,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareReport {
    pub field: CompareField,
    pub against: CompareAgainst,
    pub point: Point,
    pub radius: f64,
    pub sector_count: Option<usize>,
    pub fit: Option<LeadingOrderFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub degenerate_contact: bool,
    /// Vertices dropped because the comparison function is undefined there.
    pub clipped_vertices: usize,
    pub arcs: usize,
    pub junction: Option<Point>,
}

/// The report document written as report.json.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub status: Status,
    pub exit_code: i32,
    pub command: &'static str,
    pub config_hash: String,
    pub n_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub warnings: Vec<String>,
    pub mesh: Option<MeshQuality>,
    pub mesh_hash: Option<String>,
    pub feasibility: Option<Feasibility>,
    pub solver: Option<SolveReport>,
    pub critical_points: Vec<CriticalPointRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub homotopy: Option<HomotopyTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationReport>,
}

impl Report {
    fn new(command: Command, cfg: &RunConfig) -> Self {
        Self {
            schema: SCHEMA,
            status: Status::Ok,
            exit_code: EXIT_PASS,
            command: command.name(),
            config_hash: cfg.hash.clone(),
            n_dim: cfg.n_dim,
            message: None,
            warnings: Vec::new(),
            mesh: None,
            mesh_hash: None,
            feasibility: None,
            solver: None,
            critical_points: Vec::new(),
            homotopy: None,
            compare: None,
            verification: None,
        }
    }

    fn set_status(&mut self, status: Status) {
        self.status = status;
        self.exit_code = status.exit_code();
    }

    fn fail(&mut self, e: &Error) {
        self.set_status(Status::of_error(e));
        self.message = Some(e.to_string());
        if let Error::SolverFailure { report } = e {
            self.solver = Some((**report).clone());
        }
    }
}

/// Report for a configuration that could not be parsed.
pub fn invalid_report(command: Command, message: String) -> Report {
    Report {
        schema: SCHEMA,
        status: Status::Invalid,
        exit_code: EXIT_INVALID,
        command: command.name(),
        config_hash: String::new(),
        n_dim: 0,
        message: Some(message),
        warnings: Vec::new(),
        mesh: None,
        mesh_hash: None,
        feasibility: None,
        solver: None,
        critical_points: Vec::new(),
        homotopy: None,
        compare: None,
        verification: None,
    }
}

/// Result of one invocation; artifacts are written by the caller.
pub struct Outcome {
    pub report: Report,
    pub artifacts: Artifacts,
}

fn planar_domain(cfg: &RunConfig) -> Option<ConvexDomain> {
    match &cfg.geometry {
        Geometry::Planar(kind) => ConvexDomain::from_kind(kind).ok(),
        Geometry::Meridian(_) => None,
    }
}

/// Builds the mesh, after the feasibility gate for planar Neumann data.
fn prepare_mesh(cfg: &RunConfig, report: &mut Report) -> Option<TriMesh> {
    let result = match &cfg.geometry {
        Geometry::Planar(kind) => ConvexDomain::from_kind(kind).and_then(|domain| {
            report.warnings.extend(domain.warnings().iter().cloned());
            if let Some(f) = neumann_feasibility(&domain, &cfg.spec) {
                report.feasibility = Some(f);
                if f.status == FeasibilityStatus::Infeasible {
                    return Err(Error::Infeasible {
                        demand: f.demand,
                        bound: f.bound,
                    });
                }
            }
            triangulate_seeded(&domain, cfg.raw.mesh.h_target, cfg.raw.seed)
        }),
        Geometry::Meridian(profile) => meridian_mesh_seeded(profile, cfg.raw.mesh.h_target, cfg.raw.seed),
    };
    match result {
        Ok(mesh) => {
            report.mesh = Some(mesh.quality());
            report.mesh_hash = Some(mesh_hash(&mesh));
            Some(mesh)
        }
        Err(e) => {
            report.fail(&e);
            None
        }
    }
}

fn suite_config(cfg: &RunConfig, with_schedule: bool) -> SuiteConfig {
    let geometry = match &cfg.geometry {
        Geometry::Planar(kind) => SuiteGeometry::Planar(kind.clone()),
        Geometry::Meridian(profile) => SuiteGeometry::Meridian {
            profile: *profile,
            n_dim: cfg.n_dim,
        },
    };
    let planar = matches!(cfg.geometry, Geometry::Planar(_));
    SuiteConfig {
        geometry,
        spec: cfg.spec,
        h_target: cfg.raw.mesh.h_target,
        seed: cfg.raw.seed,
        solver: cfg.raw.solver,
        critical: cfg.raw.critical,
        tolerances: cfg.raw.tolerances,
        schedule: (with_schedule && planar).then(|| cfg.schedule.clone()),
        properties: cfg.raw.properties.clone(),
    }
}

/// Runs `command` on a validated configuration.
pub fn run(command: Command, cfg: &RunConfig, solution: Option<&Path>) -> Outcome {
    let mut outcome = match command {
        Command::MeshReport => mesh_report(cfg),
        Command::Solve => solve(cfg),
        Command::Homotopy => homotopy(cfg),
        Command::Compare => compare(cfg),
        Command::Axisym => {
            if matches!(cfg.geometry, Geometry::Planar(_)) {
                let mut report = Report::new(command, cfg);
                report.set_status(Status::Invalid);
                report.message = Some("domain.type: axisym needs a ball or spheroid".into());
                return Outcome {
                    report,
                    artifacts: Artifacts::default(),
                };
            }
            suite(Command::Axisym, cfg, None)
        }
        Command::Verify => suite(Command::Verify, cfg, solution),
    };
    if let Some(c) = cfg.raw.command.filter(|c| *c != command) {
        outcome.report.warnings.push(format!(
            "configuration names command '{}', ran '{}'",
            c.name(),
            command.name()
        ));
    }
    outcome
}

fn mesh_report(cfg: &RunConfig) -> Outcome {
    let mut report = Report::new(Command::MeshReport, cfg);
    let mesh = prepare_mesh(cfg, &mut report);
    Outcome {
        report,
        artifacts: Artifacts {
            mesh,
            ..Default::default()
        },
    }
}

fn solve(cfg: &RunConfig) -> Outcome {
    let mut report = Report::new(Command::Solve, cfg);
    let Some(mesh) = prepare_mesh(cfg, &mut report) else {
        return Outcome {
            report,
            artifacts: Artifacts::default(),
        };
    };
    let solved = match &cfg.geometry {
        Geometry::Planar(_) => newton_solve(&mesh, &cfg.spec, &ScalarField::zeros(&mesh), &cfg.raw.solver),
        Geometry::Meridian(profile) => MeridianProblem::new(*profile, cfg.n_dim, cfg.spec)
            .and_then(|p| solve_meridian(&mesh, &p, None, &cfg.raw.solver)),
    };
    let (values, solver) = match solved {
        Ok((f, rep)) => (f.values, rep),
        Err(e) => {
            report.fail(&e);
            return Outcome {
                report,
                artifacts: Artifacts {
                    mesh: Some(mesh),
                    ..Default::default()
                },
            };
        }
    };
    report.solver = Some(solver);
    let field = ScalarField {
        mesh: &mesh,
        values: values.clone(),
    };
    let h_mc = cfg.spec.mean_curvature;
    let (records, nodal) = match &cfg.geometry {
        Geometry::Planar(_) => {
            let records = find_critical_points(&field, h_mc, &cfg.raw.critical);
            let nodal = records
                .first()
                .and_then(|r| cylinder_difference_arcs(&field, r, h_mc));
            (records, nodal)
        }
        Geometry::Meridian(_) => (
            axis_critical_points(&field, h_mc, &cfg.raw.critical).unwrap_or_default(),
            meancurv::axisym::axial_derivative_nodal_set(&field).ok(),
        ),
    };
    report.critical_points = records.clone();
    Outcome {
        report,
        artifacts: Artifacts {
            mesh: Some(mesh),
            values: Some(values),
            critical_points: records,
            nodal,
        },
    }
}

fn cylinder_difference_arcs(field: &ScalarField<'_>, r: &CriticalPointRecord, h_mc: f64) -> Option<NodalArcSet> {
    let cyl = CylinderSolution::new(field.eval(r.location)?, h_mc).ok()?;
    let diff = difference_field(field, cyl.surface(r.location, [1.0, 0.0])).ok()?;
    trace_nodal_set(&diff.field()).ok()
}

fn homotopy(cfg: &RunConfig) -> Outcome {
    let mut report = Report::new(Command::Homotopy, cfg);
    if matches!(cfg.geometry, Geometry::Meridian(_)) {
        report.set_status(Status::Invalid);
        report.message = Some("domain.type: homotopy needs a planar domain".into());
        return Outcome {
            report,
            artifacts: Artifacts::default(),
        };
    }
    let Some(mesh) = prepare_mesh(cfg, &mut report) else {
        return Outcome {
            report,
            artifacts: Artifacts::default(),
        };
    };
    let spec = cfg.spec.with_t(1.0);
    let (values, trace) = match homotopy_solve(&mesh, &spec, &cfg.schedule, &cfg.raw.solver, &cfg.raw.critical) {
        Ok((f, trace)) => (Some(f.values), trace),
        Err(failure) => {
            report.fail(&failure.error);
            (None, failure.trace)
        }
    };
    let prop = verify_homotopy_stability(&trace);
    let props = vec![prop];
    let verdict = verdict_of(&props);
    report.verification = Some(VerificationReport {
        verdict: if values.is_some() { verdict } else { Verdict::Error },
        properties: props,
        provenance: Provenance {
            h_target: cfg.raw.mesh.h_target,
            mesh_h: Some(mesh.h),
            n_vertices: Some(mesh.n_vertices()),
            solver: None,
        },
        failure: None,
    });
    let records = trace.steps.last().map(|s| s.critical_points.clone()).unwrap_or_default();
    if values.is_some() {
        report.set_status(Status::of_verdict(verdict));
    }
    report.critical_points = records.clone();
    report.homotopy = Some(trace);
    Outcome {
        report,
        artifacts: Artifacts {
            mesh: Some(mesh),
            values,
            critical_points: records,
            nodal: None,
        },
    }
}

fn re_z(k: u32, center: Point) -> impl Fn(Point) -> f64 {
    move |p| {
        let (x, y) = (p[0] - center[0], p[1] - center[1]);
        x.hypot(y).powi(k as i32) * (k as f64 * y.atan2(x)).cos()
    }
}

fn compare(cfg: &RunConfig) -> Outcome {
    let mut report = Report::new(Command::Compare, cfg);
    let cc = &cfg.raw.compare;
    if planar_domain(cfg).is_none() {
        report.set_status(Status::Invalid);
        report.message = Some("domain.type: compare needs a planar domain".into());
        return Outcome {
            report,
            artifacts: Artifacts::default(),
        };
    }
    let Some(mesh) = prepare_mesh(cfg, &mut report) else {
        return Outcome {
            report,
            artifacts: Artifacts::default(),
        };
    };
    let h_mc = cfg.spec.mean_curvature;
    let (values, records, point) = match cc.field {
        CompareField::Harmonic => {
            let p = cc.point.unwrap_or([0.0, 0.0]);
            (ScalarField::from_fn(&mesh, re_z(cc.degree, p)).values, Vec::new(), p)
        }
        CompareField::Solution => match newton_solve(&mesh, &cfg.spec, &ScalarField::zeros(&mesh), &cfg.raw.solver) {
            Ok((f, rep)) => {
                report.solver = Some(rep);
                let records = find_critical_points(&f, h_mc, &cfg.raw.critical);
                let p = match (cc.point, records.first()) {
                    (Some(p), _) => p,
                    (None, Some(r)) => r.location,
                    (None, None) => {
                        report.set_status(Status::VerificationFailed);
                        report.message = Some("no critical point to compare at".into());
                        report.critical_points = records;
                        return Outcome {
                            report,
                            artifacts: Artifacts {
                                values: Some(f.values),
                                mesh: Some(mesh),
                                ..Default::default()
                            },
                        };
                    }
                };
                (f.values, records, p)
            }
            Err(e) => {
                report.fail(&e);
                return Outcome {
                    report,
                    artifacts: Artifacts {
                        mesh: Some(mesh),
                        ..Default::default()
                    },
                };
            }
        },
    };
    let field = ScalarField {
        mesh: &mesh,
        values: values.clone(),
    };
    let against = if cc.field == CompareField::Harmonic {
        CompareAgainst::None
    } else {
        cc.against
    };
    let height = field.eval(point).unwrap_or(f64::NAN);
    let diff = match against {
        CompareAgainst::None => Ok(meancurv::nodal::DifferenceField::Full(field.clone())),
        CompareAgainst::Cylinder => {
            // the cylinder axis follows the direction of least curvature at the critical point
            let dir = records
                .first()
                .map(|r| least_curvature_direction(r.hessian))
                .unwrap_or([1.0, 0.0]);
            CylinderSolution::new(height, h_mc).and_then(|c| difference_field(&field, c.surface(point, dir)))
        }
        CompareAgainst::Quadratic => {
            let hess = records.first().map_or([[0.0; 2]; 2], |r| r.hessian);
            let q = QuadraticModel::centered(height, point, hess);
            difference_field(&field, |p| Ok(q.value(p)))
        }
    };
    let mut cmp = CompareReport {
        field: cc.field,
        against,
        point,
        radius: f64::NAN,
        sector_count: None,
        fit: None,
        error: None,
        degenerate_contact: false,
        clipped_vertices: 0,
        arcs: 0,
        junction: None,
    };
    let mut nodal = None;
    match diff {
        Ok(d) => {
            if let meancurv::nodal::DifferenceField::Clipped(c) = &d {
                cmp.clipped_vertices = c.dropped_vertices;
            }
            let df = d.field();
            let dmesh = df.mesh;
            let radius = cc
                .radius
                .unwrap_or_else(|| (4.0 * dmesh.h).max(0.3 * dmesh.distance_to_boundary(point)));
            cmp.radius = radius;
            let mut errors = Vec::new();
            match sector_count(&df, point, radius) {
                Ok(s) => cmp.sector_count = Some(s),
                Err(e) => errors.push(format!("sector count: {e}")),
            }
            let [a, b] = default_fit_window(dmesh, point);
            match leading_order_fit(&df, point, a, b) {
                Ok(f) => cmp.fit = Some(f),
                Err(e) => errors.push(format!("order fit: {e}")),
            }
            match trace_nodal_set(&df) {
                Ok(set) => {
                    cmp.arcs = set.arcs.len();
                    cmp.junction = set.junction;
                    nodal = Some(set);
                }
                Err(e) => errors.push(format!("nodal set: {e}")),
            }
            if !errors.is_empty() {
                cmp.error = Some(errors.join("; "));
            }
            cmp.degenerate_contact = match (cmp.sector_count, cmp.fit) {
                (Some(s), Some(f)) => is_degenerate_contact(s, f.k),
                _ => false,
            };
        }
        Err(e) => cmp.error = Some(e.to_string()),
    }
    // a degenerate contact of a solution with its cylinder is a verification failure
    if cc.field == CompareField::Solution && against == CompareAgainst::Cylinder && cmp.degenerate_contact {
        report.set_status(Status::VerificationFailed);
    }
    report.critical_points = records.clone();
    report.compare = Some(cmp);
    Outcome {
        report,
        artifacts: Artifacts {
            mesh: Some(mesh),
            values: Some(values),
            critical_points: records,
            nodal,
        },
    }
}

fn least_curvature_direction(h: [[f64; 2]; 2]) -> Point {
    let lam = meancurv::critical::eigenvalues(h)[0];
    if h[0][1].abs() > 1e-14 {
        let v = [h[0][1], lam - h[0][0]];
        let n = v[0].hypot(v[1]);
        [v[0] / n, v[1] / n]
    } else if h[0][0] <= h[1][1] {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    }
}

fn suite(command: Command, cfg: &RunConfig, solution: Option<&Path>) -> Outcome {
    let mut report = Report::new(command, cfg);
    let scfg = suite_config(cfg, cfg.raw.homotopy.in_verify && command == Command::Verify);
    if let Some(path) = solution {
        return reverify(report, cfg, &scfg, path);
    }
    if let Some(domain) = planar_domain(cfg) {
        report.warnings.extend(domain.warnings().iter().cloned());
        report.feasibility = neumann_feasibility(&domain, &cfg.spec);
    }
    let out = run_suite(&scfg);
    if let Some(f) = out.report.failure.as_ref() {
        report.message = Some(f.message.clone());
        if f.feasibility.is_some() {
            report.feasibility = f.feasibility;
        }
        report.set_status(match f.kind {
            meancurv::verify::FailureKind::Infeasible => Status::Infeasible,
            meancurv::verify::FailureKind::Nonconvergence => Status::Nonconvergence,
            meancurv::verify::FailureKind::InvalidInput => Status::Invalid,
        });
    } else {
        report.set_status(Status::of_verdict(out.report.verdict));
    }
    if let Some(mesh) = &out.mesh {
        report.mesh = Some(mesh.quality());
        report.mesh_hash = Some(mesh_hash(mesh));
    }
    report.solver = out.report.provenance.solver.clone();
    report.critical_points = out.critical_points.clone();
    report.homotopy = out.homotopy.clone();
    report.verification = Some(out.report);
    Outcome {
        report,
        artifacts: Artifacts {
            mesh: out.mesh,
            values: out.values,
            critical_points: out.critical_points,
            nodal: out.nodal,
        },
    }
}

/// Verifies a stored solution on the regenerated mesh without solving.
fn reverify(mut report: Report, cfg: &RunConfig, scfg: &SuiteConfig, path: &Path) -> Outcome {
    let invalid = |mut report: Report, msg: String| {
        report.set_status(Status::Invalid);
        report.message = Some(msg);
        Outcome {
            report,
            artifacts: Artifacts::default(),
        }
    };
    let stored = match artifacts::read_solution(path) {
        Ok(s) => s,
        Err(e) => return invalid(report, format!("cannot read solution: {e}")),
    };
    if stored.config_hash != cfg.hash {
        return invalid(report, "solution was produced by a different configuration".into());
    }
    let Some(mesh) = prepare_mesh(cfg, &mut report) else {
        return Outcome {
            report,
            artifacts: Artifacts::default(),
        };
    };
    if report.mesh_hash.as_deref() != Some(stored.mesh_hash.as_str()) || stored.values.len() != mesh.n_vertices() {
        return invalid(report, "solution does not match the regenerated mesh".into());
    }
    match verify_solution(scfg, &mesh, &stored.values, None, None) {
        Ok((vr, records, nodal)) => {
            report.set_status(Status::of_verdict(vr.verdict));
            report.critical_points = records.clone();
            report.verification = Some(vr);
            Outcome {
                report,
                artifacts: Artifacts {
                    mesh: Some(mesh),
                    values: Some(stored.values),
                    critical_points: records,
                    nodal,
                },
            }
        }
        Err(e) => {
            report.fail(&e);
            Outcome {
                report,
                artifacts: Artifacts::default(),
            }
        }
    }
}
