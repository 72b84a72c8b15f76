//! Qualitative properties of solutions checked as pass/fail numerical tests,
//! and the suite runner that solves a configured problem and checks them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::axisym::{
    axial_derivative_nodal_set, axis_critical_points, axis_hessian, check_monotone, meridian_mesh_seeded,
    gamma_half, revolution_volume, sphere_area, MeridianProblem, MeridianProfile, MirroredMesh,
};
use crate::critical::{
    boundary_offset_loop, eigenvalues, find_critical_points, gradient_index, interior_max_scan, Classification,
    CriticalCounts, CriticalOptions, CriticalPointRecord,
};
use crate::error::Error;
use crate::geometry::{dist, triangulate_seeded, ConvexDomain, DomainKind, EdgeKind, Point, TriMesh};
use crate::mc_operator::{
    neumann_feasibility, BoundaryCondition, Discretization, Feasibility, FeasibilityStatus, ProblemSpec, ScalarField,
};
use crate::nodal::{
    default_fit_window, difference_field, is_degenerate_contact, leading_order_fit, sector_count, trace_nodal_set,
    CylinderSolution, NodalArcSet,
};
use crate::solver::{homotopy_solve, newton_solve, HomotopyTrace, SolveReport, SolverOptions};

/// Every property the suite knows, with the claim it checks.
pub const PROPERTIES: &[(&str, &str)] = &[
    ("sign_negative", "Robin solutions are negative on the closed domain"),
    ("boundary_flux_positive", "Robin solutions have outward normal derivative -alpha*u > 0 on the boundary"),
    ("critical_existence", "a solution has at least one interior critical point"),
    ("critical_uniqueness", "a solution on a convex domain has exactly one critical point"),
    ("critical_minimum", "the critical point is an interior minimum"),
    ("morse", "every critical point is non-degenerate, |K| above the dead band"),
    ("no_interior_maximum", "a solution has no interior local maximum"),
    ("index_sum", "the gradient winds once around an inward offset of the boundary and the critical indices sum to it"),
    ("critical_identity", "the Laplacian equals H at a critical point"),
    ("saddle_equivalence", "at least two minima exist if and only if a saddle exists"),
    ("nondegenerate_contact", "the difference to the osculating cylinder has order two and four sectors at the critical point"),
    ("homotopy_stability", "along the homotopy in t the solution keeps one non-degenerate minimum and no saddle"),
    ("axis_critical_point", "an axisymmetric solution has a unique critical point and it lies on the axis"),
    ("axis_hessian_positive", "the Hessian at the axis critical point is diagonal and positive definite"),
    ("radial_monotone", "an axisymmetric solution increases strictly in the distance to the axis"),
    ("axial_nodal_arc", "the nodal set of the axial derivative is one curve from the axis to the boundary"),
    ("revolution_volume", "the weighted meridian measure reproduces the volume of the solid of revolution"),
];

/// Claim text of a registered property; unknown names are errors.
pub fn property_claim(name: &str) -> crate::Result<&'static str> {
    PROPERTIES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, c)| *c)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown property '{name}'")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyStatus {
    Pass,
    Fail,
    Warn,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyRecord {
    pub name: String,
    pub claim: String,
    pub status: PropertyStatus,
    pub measured: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl PropertyRecord {
    fn new(name: &str, status: PropertyStatus) -> Self {
        Self {
            name: name.to_string(),
            claim: property_claim(name).expect("registered property").to_string(),
            status,
            measured: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            note: None,
        }
    }

    fn pass_if(name: &str, ok: bool) -> Self {
        Self::new(name, if ok { PropertyStatus::Pass } else { PropertyStatus::Fail })
    }

    fn skipped(name: &str, note: &str) -> Self {
        Self::new(name, PropertyStatus::Skipped).with_note(note)
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.measured.insert(key.to_string(), value);
        self
    }

    fn with_tol(mut self, key: &str, value: f64) -> Self {
        self.tolerances.insert(key.to_string(), value);
        self
    }

    fn with_point(self, key: &str, p: Point) -> Self {
        self.with(&format!("{key}_x"), p[0]).with(&format!("{key}_y"), p[1])
    }

    fn with_note(mut self, note: &str) -> Self {
        self.note = Some(note.to_string());
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute dead band of value-sign checks.
    pub sign_deadband: f64,
    /// Relative tolerance of the critical Laplacian identity.
    pub trace_rel: f64,
    /// Mixed Hessian term relative to the smallest diagonal entry.
    pub cross_rel: f64,
    /// Dead band of the radial monotonicity check.
    pub monotone_tol: f64,
    /// Relative volume error allowed per h².
    pub volume_per_h2: f64,
    /// Meshes with h above this fraction of the diameter only warn on existence.
    pub coarse_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sign_deadband: 1e-10,
            trace_rel: 0.1,
            cross_rel: 0.1,
            monotone_tol: 1e-10,
            volume_per_h2: 1.0,
            coarse_fraction: 0.3,
        }
    }
}

/// Sign conditions of Robin solutions on the vertices of `boundary`.
pub fn verify_sign_conditions(
    field: &ScalarField<'_>,
    spec: &ProblemSpec,
    boundary: &[usize],
    tol: &Tolerances,
) -> Vec<PropertyRecord> {
    let alpha = match spec.bc {
        BoundaryCondition::Robin { alpha } => alpha,
        BoundaryCondition::Neumann { .. } => {
            let note = "Neumann data: the normal derivative equals c > 0 by construction";
            return vec![
                PropertyRecord::skipped("sign_negative", note),
                PropertyRecord::skipped("boundary_flux_positive", note),
            ];
        }
    };
    let mesh = field.mesh;
    let d = tol.sign_deadband;
    let status = |worst: f64| {
        if worst > d {
            PropertyStatus::Pass
        } else if worst >= -d {
            PropertyStatus::Warn
        } else {
            PropertyStatus::Fail
        }
    };
    let (imax, umax) = field
        .values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, (i, v)| if v > a.1 { (i, v) } else { a });
    let sign = PropertyRecord::new("sign_negative", status(-umax))
        .with("max_u", umax)
        .with_point("offender", mesh.vertices[imax])
        .with_tol("deadband", d);
    let (ib, fmin) = boundary
        .iter()
        .map(|&v| (v, -alpha * field.values[v]))
        .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let mut flux = PropertyRecord::new("boundary_flux_positive", status(fmin)).with_tol("deadband", d);
    flux = flux.with("min_flux", fmin);
    if ib != usize::MAX {
        flux = flux.with_point("offender", mesh.vertices[ib]);
    }
    vec![sign, flux]
}

/// Biconditional (at least two minima) ⟺ (a saddle exists) over the found critical points.
pub fn verify_saddle_equivalence(records: &[CriticalPointRecord]) -> PropertyRecord {
    let c = CriticalCounts::of(records);
    let (lhs, rhs) = (c.minima >= 2, c.saddles >= 1);
    PropertyRecord::pass_if("saddle_equivalence", lhs == rhs)
        .with("minima", c.minima as f64)
        .with("saddles", c.saddles as f64)
        .with("two_minima", lhs as u8 as f64)
        .with("saddle_exists", rhs as u8 as f64)
}

fn counts_record(name: &str, records: &[CriticalPointRecord], ok: bool) -> PropertyRecord {
    let c = CriticalCounts::of(records);
    PropertyRecord::pass_if(name, ok)
        .with("count", c.total() as f64)
        .with("minima", c.minima as f64)
        .with("maxima", c.maxima as f64)
        .with("saddles", c.saddles as f64)
        .with("degenerate", c.degenerate as f64)
}

/// Count, type and non-degeneracy of the critical points.
fn verify_counts(
    records: &[CriticalPointRecord],
    mean_curvature: f64,
    opts: &CriticalOptions,
    coarse: bool,
) -> Vec<PropertyRecord> {
    let mut out = Vec::new();
    let mut exist = counts_record("critical_existence", records, !records.is_empty());
    if coarse && exist.status == PropertyStatus::Fail {
        exist.status = PropertyStatus::Warn;
        exist.note = Some("mesh too coarse to resolve interior critical points".into());
    }
    out.push(exist);
    out.push(counts_record("critical_uniqueness", records, records.len() == 1));
    let is_min = records.len() == 1 && records[0].classification == Classification::Minimum;
    let mut min = PropertyRecord::pass_if("critical_minimum", is_min);
    if let Some(r) = records.first() {
        min = min
            .with_point("location", r.location)
            .with("eigenvalue_min", r.eigenvalues[0])
            .with("eigenvalue_max", r.eigenvalues[1]);
    }
    out.push(min);
    // smallest |K| relative to its dead band
    let mut worst = f64::INFINITY;
    let mut k_at = f64::NAN;
    for r in records {
        let scale = r.eigenvalues[0].abs().max(r.eigenvalues[1].abs()).max(mean_curvature);
        let ratio = r.gauss_curvature.abs() / (opts.degeneracy_tol * scale * scale);
        if ratio < worst {
            worst = ratio;
            k_at = r.gauss_curvature;
        }
    }
    let morse_ok = !records.is_empty()
        && worst > 1.0
        && records.iter().all(|r| r.classification != Classification::Degenerate);
    out.push(
        PropertyRecord::pass_if("morse", morse_ok)
            .with("gauss_curvature", k_at)
            .with("margin_ratio", worst)
            .with_tol("degeneracy_tol", opts.degeneracy_tol),
    );
    out
}

fn verify_no_max(field: &ScalarField<'_>) -> PropertyRecord {
    let maxima = interior_max_scan(field);
    let mut rec = PropertyRecord::pass_if("no_interior_maximum", maxima.is_empty()).with("count", maxima.len() as f64);
    if let Some(&v) = maxima.first() {
        rec = rec.with_point("offender", field.mesh.vertices[v]);
    }
    rec
}

fn verify_index(field: &ScalarField<'_>, records: &[CriticalPointRecord], opts: &CriticalOptions) -> PropertyRecord {
    let lp = boundary_offset_loop(field.mesh, 2.0 * field.mesh.h);
    let known: Vec<i32> = records.iter().filter_map(|r| r.index).collect();
    let sum: i32 = known.iter().sum();
    match gradient_index(field, &lp, opts.grad_tol_rel) {
        Ok(idx) => {
            let complete = known.len() == records.len();
            let ok = idx == 1 && (!complete || sum == idx) && !records.is_empty();
            let mut rec = PropertyRecord::pass_if("index_sum", ok)
                .with("loop_index", idx as f64)
                .with("critical_index_sum", sum as f64);
            if ok && !complete {
                rec.status = PropertyStatus::Warn;
                rec.note = Some("some critical points lie too close to the boundary for a local index".into());
            }
            rec
        }
        Err(e) => PropertyRecord::new("index_sum", PropertyStatus::Fail).with_note(&e.to_string()),
    }
}

/// Laplacian identity |trace − H| ≤ trace_rel·H at every critical point.
///
/// The discrete problem at parameter t is div(∇v/√(1+t²|∇v|²)) = H, whose
/// Laplacian at a critical point is H for every t.
fn verify_identity(traces: &[f64], mean_curvature: f64, tol: &Tolerances) -> PropertyRecord {
    let worst = traces
        .iter()
        .map(|t| (t - mean_curvature).abs())
        .fold(f64::NEG_INFINITY, f64::max);
    let ok = !traces.is_empty() && worst <= tol.trace_rel * mean_curvature;
    let mut rec = PropertyRecord::pass_if("critical_identity", ok)
        .with("max_deviation", worst)
        .with("mean_curvature", mean_curvature)
        .with_tol("trace_rel", tol.trace_rel);
    if let Some(t) = traces.first() {
        rec = rec.with("trace", *t);
    }
    rec
}

/// Sector count and leading order of u minus the osculating cylinder at the critical point.
pub fn verify_contact(
    field: &ScalarField<'_>,
    records: &[CriticalPointRecord],
    mean_curvature: f64,
) -> (PropertyRecord, Option<NodalArcSet>) {
    let Some(r) = records.first() else {
        return (
            PropertyRecord::skipped("nondegenerate_contact", "no critical point to compare at"),
            None,
        );
    };
    let p = r.location;
    let hs = r.hessian;
    // cylinder axis along the eigenvector of the smaller Hessian eigenvalue
    let lam = eigenvalues(hs)[0];
    let dir = if hs[0][1].abs() > 1e-14 {
        let v = [hs[0][1], lam - hs[0][0]];
        let n = v[0].hypot(v[1]);
        [v[0] / n, v[1] / n]
    } else if hs[0][0] <= hs[1][1] {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    let height = field.eval(p).unwrap_or(f64::NAN);
    let run = || -> crate::Result<(usize, f64, f64, NodalArcSet)> {
        let cyl = CylinderSolution::new(height, mean_curvature)?;
        let diff = difference_field(field, cyl.surface(p, dir))?;
        let d = diff.field();
        let mesh = d.mesh;
        let reach = mesh.distance_to_boundary(p);
        let radius = (4.0 * mesh.h).max(0.3 * reach);
        let sectors = sector_count(&d, p, radius)?;
        let [a, b] = default_fit_window(mesh, p);
        let fit = leading_order_fit(&d, p, a, b)?;
        let arcs = trace_nodal_set(&d)?;
        Ok((sectors, fit.k, radius, arcs))
    };
    match run() {
        Ok((sectors, k, radius, arcs)) => {
            let degenerate = is_degenerate_contact(sectors, k);
            let rec = PropertyRecord::pass_if("nondegenerate_contact", !degenerate && sectors == 4 && k <= 2.5)
                .with("sector_count", sectors as f64)
                .with("order", k)
                .with("radius", radius)
                .with_tol("max_order", 2.5);
            (rec, Some(arcs))
        }
        Err(e) => (
            PropertyRecord::new("nondegenerate_contact", PropertyStatus::Warn).with_note(&e.to_string()),
            None,
        ),
    }
}

/// Critical structure of a planar solution.
pub fn verify_critical_structure(
    field: &ScalarField<'_>,
    spec: &ProblemSpec,
    records: &[CriticalPointRecord],
    opts: &CriticalOptions,
    tol: &Tolerances,
) -> Vec<PropertyRecord> {
    let h_mc = spec.mean_curvature;
    let mut out = verify_counts(records, h_mc, opts, is_coarse(field.mesh, tol));
    out.push(verify_no_max(field));
    out.push(verify_index(field, records, opts));
    let traces: Vec<f64> = records.iter().map(|r| r.hessian[0][0] + r.hessian[1][1]).collect();
    out.push(verify_identity(&traces, h_mc, tol));
    out
}

/// Every recorded step keeps one minimum, no saddle and no degenerate point.
pub fn verify_homotopy_stability(trace: &HomotopyTrace) -> PropertyRecord {
    let bad: Vec<f64> = trace
        .steps
        .iter()
        .filter(|s| !(s.counts.minima == 1 && s.counts.saddles == 0 && s.morse))
        .map(|s| s.t)
        .collect();
    let k0 = trace
        .steps
        .first()
        .filter(|s| s.t == 0.0)
        .and_then(|s| s.critical_points.first())
        .map(|r| r.gauss_curvature);
    let k0_ok = k0.is_none_or(|k| k > 0.0);
    let mut rec = PropertyRecord::pass_if("homotopy_stability", bad.is_empty() && k0_ok && !trace.steps.is_empty())
        .with("steps", trace.steps.len() as f64)
        .with("failing_steps", bad.len() as f64)
        .with("t_reached", trace.steps.last().map_or(f64::NAN, |s| s.t));
    if let Some(k) = k0 {
        rec = rec.with("gauss_curvature_t0", k);
    }
    if let Some(t) = bad.first() {
        rec = rec.with("first_failing_t", *t);
    }
    if !trace.complete() {
        // partial data never counts as a pass
        if rec.status == PropertyStatus::Pass {
            rec.status = PropertyStatus::Warn;
        }
        rec.note = Some(format!(
            "continuation incomplete: {}",
            trace.failure.as_deref().unwrap_or("did not reach t = 1")
        ));
    }
    rec
}

fn is_coarse(mesh: &TriMesh, tol: &Tolerances) -> bool {
    let b: Vec<Point> = mesh.boundary_edges.iter().map(|e| mesh.vertices[e.v[0]]).collect();
    let mut diam = 0.0f64;
    for (i, p) in b.iter().enumerate() {
        for q in &b[i + 1..] {
            diam = diam.max(dist(*p, *q));
        }
    }
    mesh.h > tol.coarse_fraction * diam
}

/// All axisymmetric properties of a meridian solution.
pub fn verify_axisym(
    v: &ScalarField<'_>,
    problem: &MeridianProblem,
    opts: &CriticalOptions,
    tol: &Tolerances,
) -> (Vec<PropertyRecord>, Vec<CriticalPointRecord>, Option<NodalArcSet>) {
    let mesh = v.mesh;
    let h_mc = problem.spec.mean_curvature;
    let mut out = Vec::new();
    let records = match axis_critical_points(v, h_mc, opts) {
        Ok(r) => r,
        Err(e) => {
            out.push(PropertyRecord::new("axis_critical_point", PropertyStatus::Fail).with_note(&e.to_string()));
            return (out, Vec::new(), None);
        }
    };
    out.extend(verify_counts(&records, h_mc, opts, is_coarse(mesh, tol)));
    let on_axis = records.len() == 1 && records[0].location[0] <= 2.0 * mesh.h;
    let mut axis = PropertyRecord::pass_if("axis_critical_point", on_axis).with("count", records.len() as f64);
    if let Some(r) = records.first() {
        axis = axis.with_point("location", r.location).with_tol("axis_distance", 2.0 * mesh.h);
    }
    out.push(axis);

    if let Ok(mirrored) = MirroredMesh::new(mesh) {
        let full = ScalarField {
            mesh: &mirrored.mesh,
            values: mirrored.extend(&v.values),
        };
        out.push(verify_no_max(&full));
        let mut recs_full = records.clone();
        for r in recs_full.iter_mut() {
            r.location[0] = 0.0f64.max(r.location[0]);
        }
        out.push(verify_index(&full, &recs_full, opts));
    }

    match records.first().map(|r| axis_hessian(v, problem.n_dim, r.location[1])) {
        Some(Ok(hess)) => {
            out.push(verify_identity(&[hess.trace], h_mc, tol));
            let smallest = hess.diagonal.iter().cloned().fold(f64::INFINITY, f64::min);
            let ok = smallest > 0.0 && hess.cross_term.abs() <= tol.cross_rel * smallest;
            let mut rec = PropertyRecord::pass_if("axis_hessian_positive", ok)
                .with("cross_term", hess.cross_term)
                .with("trace", hess.trace)
                .with_tol("cross_rel", tol.cross_rel);
            for (k, d) in hess.diagonal.iter().enumerate() {
                rec = rec.with(&format!("d{}", k + 1), *d);
            }
            out.push(rec);
        }
        Some(Err(e)) => {
            out.push(PropertyRecord::new("critical_identity", PropertyStatus::Fail).with_note(&e.to_string()));
            out.push(PropertyRecord::new("axis_hessian_positive", PropertyStatus::Fail).with_note(&e.to_string()));
        }
        None => {
            out.push(PropertyRecord::new("critical_identity", PropertyStatus::Fail).with_note("no critical point"));
            out.push(PropertyRecord::new("axis_hessian_positive", PropertyStatus::Fail).with_note("no axis critical point"));
        }
    }

    let mono = check_monotone(v, tol.monotone_tol);
    out.push(
        PropertyRecord::pass_if("radial_monotone", mono.strict)
            .with("min_dv_dr", mono.min_dr)
            .with_point("offender", mono.location)
            .with("checked_vertices", mono.checked_vertices as f64)
            .with_tol("dead_band", mono.tol),
    );

    let nodal = axial_derivative_nodal_set(v).ok();
    let single = nodal.as_ref().is_some_and(|s| {
        s.arcs.len() == 1
            && s.arcs[0].ends.contains(&crate::nodal::ArcEnd::Boundary { kind: EdgeKind::Axis })
            && s.arcs[0].ends.contains(&crate::nodal::ArcEnd::Boundary { kind: EdgeKind::Outer })
    });
    out.push(
        PropertyRecord::pass_if("axial_nodal_arc", single)
            .with("arcs", nodal.as_ref().map_or(f64::NAN, |s| s.arcs.len() as f64)),
    );

    let (a, b) = problem.profile.semi_axes();
    let exact = revolved_volume(problem.n_dim, a, b);
    let vol = revolution_volume(mesh, problem.n_dim);
    let rel = (vol - exact).abs() / exact;
    let allowed = tol.volume_per_h2 * mesh.h * mesh.h;
    out.push(
        PropertyRecord::pass_if("revolution_volume", rel <= allowed)
            .with("volume", vol)
            .with("exact", exact)
            .with("relative_error", rel)
            .with_tol("relative", allowed),
    );
    (out, records, nodal)
}

/// Volume in R^n of the solid swept by the half-ellipse with semi-axes `a` (radial) and `b` (axial).
pub fn revolved_volume(n_dim: usize, a: f64, b: f64) -> f64 {
    // ∫∫ r^{n−2} over the half-ellipse = a^{n−1} b · B((n−1)/2, 3/2)
    let beta = gamma_half(n_dim - 1) * gamma_half(3) / gamma_half(n_dim + 2);
    let w = a.powi(n_dim as i32 - 1) * b * beta;
    if n_dim == 2 {
        2.0 * w
    } else {
        sphere_area(n_dim - 2) * w
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    InvalidInput,
    Infeasible,
    Nonconvergence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteFailure {
    pub kind: FailureKind,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feasibility: Option<Feasibility>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub h_target: f64,
    pub mesh_h: Option<f64>,
    pub n_vertices: Option<usize>,
    pub solver: Option<SolveReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub properties: Vec<PropertyRecord>,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<SuiteFailure>,
}

/// Pass iff every property that is neither warned nor skipped passes.
pub fn verdict_of(properties: &[PropertyRecord]) -> Verdict {
    if properties.iter().any(|p| p.status == PropertyStatus::Fail) {
        Verdict::Fail
    } else {
        Verdict::Pass
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SuiteGeometry {
    Planar(DomainKind),
    Meridian { profile: MeridianProfile, n_dim: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub geometry: SuiteGeometry,
    /// Problem at t = 1; `t` is ignored when a schedule is given.
    pub spec: ProblemSpec,
    pub h_target: f64,
    pub seed: u64,
    pub solver: SolverOptions,
    pub critical: CriticalOptions,
    pub tolerances: Tolerances,
    /// Homotopy schedule for planar problems.
    pub schedule: Option<Vec<f64>>,
    /// Restricts the report to these properties; every name must be registered.
    pub properties: Option<Vec<String>>,
}

/// Everything a suite run produced.
#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub report: VerificationReport,
    pub mesh: Option<TriMesh>,
    pub values: Option<Vec<f64>>,
    pub critical_points: Vec<CriticalPointRecord>,
    pub homotopy: Option<HomotopyTrace>,
    /// Difference-to-cylinder nodal set (planar) or axial-derivative nodal set (meridian).
    pub nodal: Option<NodalArcSet>,
}

impl SuiteOutcome {
    fn failed(h_target: f64, kind: FailureKind, message: String, feasibility: Option<Feasibility>) -> Self {
        Self {
            report: VerificationReport {
                verdict: Verdict::Error,
                properties: Vec::new(),
                provenance: Provenance {
                    h_target,
                    mesh_h: None,
                    n_vertices: None,
                    solver: None,
                },
                failure: Some(SuiteFailure {
                    kind,
                    message,
                    feasibility,
                }),
            },
            mesh: None,
            values: None,
            critical_points: Vec::new(),
            homotopy: None,
            nodal: None,
        }
    }
}

fn failure_kind(e: &Error) -> FailureKind {
    match e {
        Error::Infeasible { .. } => FailureKind::Infeasible,
        Error::SolverFailure { .. } | Error::LinearFailure(_) => FailureKind::Nonconvergence,
        _ => FailureKind::InvalidInput,
    }
}

/// Checks the configured properties on a given solution without solving.
pub fn verify_solution(
    cfg: &SuiteConfig,
    mesh: &TriMesh,
    values: &[f64],
    solver: Option<SolveReport>,
    homotopy: Option<&HomotopyTrace>,
) -> crate::Result<(VerificationReport, Vec<CriticalPointRecord>, Option<NodalArcSet>)> {
    if let Some(names) = &cfg.properties {
        for n in names {
            property_claim(n)?;
        }
    }
    let field = ScalarField::new(mesh, values.to_vec())?;
    let spec = cfg.spec.with_t(1.0);
    let (mut props, records, nodal) = match &cfg.geometry {
        SuiteGeometry::Planar(_) => {
            let boundary: Vec<usize> = mesh.boundary_edges.iter().map(|e| e.v[0]).collect();
            let mut props = verify_sign_conditions(&field, &spec, &boundary, &cfg.tolerances);
            let records = find_critical_points(&field, spec.mean_curvature, &cfg.critical);
            props.extend(verify_critical_structure(&field, &spec, &records, &cfg.critical, &cfg.tolerances));
            props.push(verify_saddle_equivalence(&records));
            let (contact, nodal) = verify_contact(&field, &records, spec.mean_curvature);
            props.push(contact);
            match homotopy {
                Some(trace) => props.push(verify_homotopy_stability(trace)),
                None => props.push(PropertyRecord::skipped("homotopy_stability", "no homotopy schedule configured")),
            }
            (props, records, nodal)
        }
        SuiteGeometry::Meridian { profile, n_dim } => {
            let problem = MeridianProblem::new(*profile, *n_dim, spec)?;
            let mut boundary: Vec<usize> = mesh
                .boundary_edges
                .iter()
                .filter(|e| e.kind == EdgeKind::Outer)
                .flat_map(|e| e.v)
                .collect();
            boundary.sort_unstable();
            boundary.dedup();
            let mut props = verify_sign_conditions(&field, &spec, &boundary, &cfg.tolerances);
            let (axis_props, records, nodal) = verify_axisym(&field, &problem, &cfg.critical, &cfg.tolerances);
            props.extend(axis_props);
            props.push(verify_saddle_equivalence(&records));
            (props, records, nodal)
        }
    };
    if let Some(names) = &cfg.properties {
        props.retain(|p| names.iter().any(|n| *n == p.name));
    }
    let report = VerificationReport {
        verdict: verdict_of(&props),
        properties: props,
        provenance: Provenance {
            h_target: cfg.h_target,
            mesh_h: Some(mesh.h),
            n_vertices: Some(mesh.n_vertices()),
            solver,
        },
        failure: None,
    };
    Ok((report, records, nodal))
}

/// Meshes, solves and verifies. Failures are reported in the outcome with verdict `error`.
pub fn run_suite(cfg: &SuiteConfig) -> SuiteOutcome {
    let fail = |e: Error, feas: Option<Feasibility>| SuiteOutcome::failed(cfg.h_target, failure_kind(&e), e.to_string(), feas);
    if let Some(names) = &cfg.properties {
        if let Some(Err(e)) = names.iter().map(|n| property_claim(n)).find(|r| r.is_err()) {
            return fail(e, None);
        }
    }
    let spec = cfg.spec.with_t(1.0);
    let (mesh, n_dim) = match &cfg.geometry {
        SuiteGeometry::Planar(kind) => {
            let domain = match ConvexDomain::from_kind(kind) {
                Ok(d) => d,
                Err(e) => return fail(e, None),
            };
            if let Err(e) = spec.validate() {
                return fail(e, None);
            }
            // the necessary condition is checked before anything is meshed or solved
            if let Some(f) = neumann_feasibility(&domain, &spec) {
                if f.status == FeasibilityStatus::Infeasible {
                    return fail(
                        Error::Infeasible {
                            demand: f.demand,
                            bound: f.bound,
                        },
                        Some(f),
                    );
                }
            }
            match triangulate_seeded(&domain, cfg.h_target, cfg.seed) {
                Ok(m) => (m, 2),
                Err(e) => return fail(e, None),
            }
        }
        SuiteGeometry::Meridian { profile, n_dim } => {
            let problem = match MeridianProblem::new(*profile, *n_dim, spec) {
                Ok(p) => p,
                Err(e) => return fail(e, None),
            };
            if let BoundaryCondition::Neumann { .. } = spec.bc {
                let (a, b) = profile.semi_axes();
                let volume = revolved_volume(*n_dim, a, b);
                let surface = revolved_surface(*n_dim, a, b);
                if let Some(f) = Feasibility::from_measures(&problem.spec, volume, surface) {
                    if f.status == FeasibilityStatus::Infeasible {
                        return fail(
                            Error::Infeasible {
                                demand: f.demand,
                                bound: f.bound,
                            },
                            Some(f),
                        );
                    }
                }
            }
            match meridian_mesh_seeded(profile, cfg.h_target, cfg.seed) {
                Ok(m) => (m, *n_dim),
                Err(e) => return fail(e, None),
            }
        }
    };
    let spec = spec.with_n_dim(n_dim);

    let mut homotopy = None;
    let mut solved: Option<(Vec<f64>, SolveReport)> = None;
    if let (Some(schedule), SuiteGeometry::Planar(_)) = (&cfg.schedule, &cfg.geometry) {
        match homotopy_solve(&mesh, &spec, schedule, &cfg.solver, &cfg.critical) {
            Ok((field, trace)) => {
                homotopy = Some(trace);
                // final-step report from a converged warm start, for provenance
                if let Ok((f, rep)) = newton_solve(&mesh, &spec, &field, &cfg.solver) {
                    solved = Some((f.values, rep));
                }
            }
            Err(failure) => homotopy = Some(failure.trace),
        }
    }
    if solved.is_none() {
        match newton_solve(&mesh, &spec, &ScalarField::zeros(&mesh), &cfg.solver) {
            Ok((f, rep)) => solved = Some((f.values, rep)),
            Err(e) => {
                let feas = match &e {
                    Error::Infeasible { .. } => {
                        let disc = Discretization::new(&mesh, n_dim);
                        Feasibility::from_measures(&spec, disc.measure(), disc.boundary_measure())
                    }
                    _ => None,
                };
                let solver = match &e {
                    Error::SolverFailure { report } => Some((**report).clone()),
                    _ => None,
                };
                let mut out = fail(e, feas);
                out.report.provenance.mesh_h = Some(mesh.h);
                out.report.provenance.n_vertices = Some(mesh.n_vertices());
                out.report.provenance.solver = solver;
                out.homotopy = homotopy;
                out.mesh = Some(mesh);
                return out;
            }
        }
    }
    let (values, report) = solved.expect("solution present");
    match verify_solution(cfg, &mesh, &values, Some(report), homotopy.as_ref()) {
        Ok((rep, records, nodal)) => SuiteOutcome {
            report: rep,
            mesh: Some(mesh),
            values: Some(values),
            critical_points: records,
            homotopy,
            nodal,
        },
        Err(e) => fail(e, None),
    }
}

/// Surface measure in R^n of the boundary swept by the half-ellipse arc.
pub fn revolved_surface(n_dim: usize, a: f64, b: f64) -> f64 {
    // ∫ r^{n−2} ds along r = a cos θ, z = b sin θ, θ ∈ [−π/2, π/2], composite Simpson
    let f = |th: f64| {
        let (sn, cs) = th.sin_cos();
        (a * cs).max(0.0).powi(n_dim as i32 - 2) * (a * a * sn * sn + b * b * cs * cs).sqrt()
    };
    let n = 2048;
    let (lo, step) = (-std::f64::consts::FRAC_PI_2, std::f64::consts::PI / n as f64);
    let mut s = f(lo) + f(-lo);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(lo + k as f64 * step);
    }
    let w = s * step / 3.0;
    if n_dim == 2 {
        2.0 * w
    } else {
        sphere_area(n_dim - 2) * w
    }
}
