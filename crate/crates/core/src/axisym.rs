//! Axisymmetric solutions in n ≥ 3 dimensions, solved on the meridian half
//! cross-section {(r, x_n) : r ≥ 0}.
//!
//! Meridian coordinates are stored as points [r, x_n]. The weak form carries
//! the weight r^{n−2}, which vanishes on the axis, so the axis needs no
//! boundary condition and v_r(0, ·) = 0 comes out of the discretization.

use serde::{Deserialize, Serialize};

use crate::critical::{find_critical_points, fit_quadratic, recover_gradient, CriticalOptions, CriticalPointRecord};
use crate::error::{Error, Result};
use crate::geometry::{dist, mesh_polygon, ConvexDomain, EdgeKind, Point, TriMesh};
use crate::mc_operator::{Discretization, ProblemSpec, ScalarField};
use crate::nodal::{trace_nodal_set, NodalArcSet};
use crate::solver::{newton_solve, SolveReport, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeridianProfile {
    /// Ball of radius R.
    Ball {
        #[serde(alias = "R")]
        radius: f64,
    },
    /// Spheroid with semi-axis `a` across the axis and `b` along it.
    Spheroid { a: f64, b: f64 },
}

impl MeridianProfile {
    /// Semi-axes (across, along) the axis of revolution.
    pub fn semi_axes(&self) -> (f64, f64) {
        match *self {
            MeridianProfile::Ball { radius } => (radius, radius),
            MeridianProfile::Spheroid { a, b } => (a, b),
        }
    }

    /// Full symmetric cross-section in the (r, x_n) plane.
    pub fn cross_section(&self) -> Result<ConvexDomain> {
        match *self {
            MeridianProfile::Ball { radius } => ConvexDomain::disk(radius),
            MeridianProfile::Spheroid { a, b } => ConvexDomain::ellipse(a, b),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeridianProblem {
    pub profile: MeridianProfile,
    pub n_dim: usize,
    pub spec: ProblemSpec,
}

impl MeridianProblem {
    /// `n_dim` = 2 is accepted as the planar reflection-symmetric case.
    pub fn new(profile: MeridianProfile, n_dim: usize, spec: ProblemSpec) -> Result<Self> {
        if n_dim < 2 {
            return Err(Error::InvalidParameter(format!("n_dim must be at least 2, got {n_dim}")));
        }
        let (a, b) = profile.semi_axes();
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter("profile semi-axes must be positive".into()));
        }
        let spec = spec.with_n_dim(n_dim);
        spec.validate()?;
        Ok(Self { profile, n_dim, spec })
    }
}

/// Mesh of the half cross-section r ≥ 0. Axis vertices have r = 0 exactly and
/// the axis edges are tagged [`EdgeKind::Axis`].
pub fn meridian_mesh(problem: &MeridianProblem, h_target: f64) -> Result<TriMesh> {
    meridian_mesh_seeded(&problem.profile, h_target, 0)
}

pub fn meridian_mesh_seeded(profile: &MeridianProfile, h_target: f64, seed: u64) -> Result<TriMesh> {
    let domain = profile.cross_section()?;
    let (_, b) = profile.semi_axes();
    let l = domain.length();
    if !(h_target > 0.0 && h_target < l / 16.0) {
        return Err(Error::InvalidParameter(format!(
            "h_target must lie in (0, L/16) = (0, {:.6}), got {h_target}",
            l / 16.0
        )));
    }
    // arc from the south pole through r > 0 to the north pole, counterclockwise
    let n_arc = (0.5 * l / (0.9 * h_target)).ceil() as usize;
    let mut boundary: Vec<Point> = (0..=n_arc)
        .map(|k| domain.point_at(-0.25 * l + 0.5 * l * k as f64 / n_arc as f64))
        .collect();
    boundary[0] = [0.0, -b];
    boundary[n_arc] = [0.0, b];
    let n_axis = (2.0 * b / (0.9 * h_target)).ceil() as usize;
    boundary.extend((1..n_axis).map(|k| [0.0, b - 2.0 * b * k as f64 / n_axis as f64]));
    let mesh = mesh_polygon(&boundary, h_target, seed, |p| domain.signed_distance(p).max(-p[0]))?;
    Ok(mesh.with_edge_kinds(|p, q| {
        if p[0] == 0.0 && q[0] == 0.0 {
            EdgeKind::Axis
        } else {
            EdgeKind::Outer
        }
    }))
}

/// Newton solve of the meridian equation, from `init` or from zero.
pub fn solve_meridian<'m>(
    mesh: &'m TriMesh,
    problem: &MeridianProblem,
    init: Option<&ScalarField<'_>>,
    opts: &SolverOptions,
) -> Result<(ScalarField<'m>, SolveReport)> {
    let zero = ScalarField::zeros(mesh);
    newton_solve(mesh, &problem.spec, init.unwrap_or(&zero), opts)
}

/// Γ(k/2) for a positive integer k.
pub fn gamma_half(k: usize) -> f64 {
    let mut g = if k % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if k % 2 == 0 { 1.0 } else { 0.5 };
    while x < 0.5 * k as f64 - 1e-12 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Surface measure of the unit sphere S^m in R^{m+1}, 2π^{(m+1)/2} / Γ((m+1)/2).
pub fn sphere_area(m: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(0.5 * (m + 1) as f64) / gamma_half(m + 1)
}

/// Volume of the solid of revolution in R^n swept by the meridian mesh.
pub fn revolution_volume(mesh: &TriMesh, n_dim: usize) -> f64 {
    let m = Discretization::new(mesh, n_dim).measure();
    if n_dim == 2 {
        2.0 * m
    } else {
        sphere_area(n_dim - 2) * m
    }
}

/// The half mesh reflected across the axis, sharing the axis vertices.
#[derive(Clone, Debug)]
pub struct MirroredMesh {
    pub mesh: TriMesh,
    /// Half-mesh vertex of every full-mesh vertex.
    pub source: Vec<usize>,
}

impl MirroredMesh {
    pub fn new(half: &TriMesh) -> Result<Self> {
        let n = half.n_vertices();
        let mut vertices = half.vertices.clone();
        let mut source: Vec<usize> = (0..n).collect();
        let mut image = vec![0usize; n];
        for (v, p) in half.vertices.iter().enumerate() {
            if p[0] == 0.0 {
                image[v] = v;
            } else {
                image[v] = vertices.len();
                vertices.push([-p[0], p[1]]);
                source.push(v);
            }
        }
        let mut cells = half.cells.clone();
        cells.extend(half.cells.iter().map(|c| [image[c[0]], image[c[2]], image[c[1]]]));
        Ok(Self {
            mesh: TriMesh::new(vertices, cells)?,
            source,
        })
    }

    /// Even extension of half-mesh values.
    pub fn extend(&self, values: &[f64]) -> Vec<f64> {
        self.source.iter().map(|&v| values[v]).collect()
    }
}

/// Outcome of the radial monotonicity check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCheck {
    /// ∂v/∂r > −tol at every checked vertex.
    pub holds: bool,
    /// ∂v/∂r > tol at every checked vertex.
    pub strict: bool,
    pub min_dr: f64,
    pub location: Point,
    pub checked_vertices: usize,
    pub tol: f64,
}

/// Recovered ∂v/∂r at all vertices with r > 2h.
pub fn check_monotone(v: &ScalarField<'_>, tol: f64) -> MonotoneCheck {
    let mesh = v.mesh;
    let grads = recover_gradient(v);
    let mut min_dr = f64::INFINITY;
    let mut location = [f64::NAN, f64::NAN];
    let mut checked = 0;
    for (p, g) in mesh.vertices.iter().zip(&grads) {
        if p[0] > 2.0 * mesh.h {
            checked += 1;
            if g[0] < min_dr {
                min_dr = g[0];
                location = *p;
            }
        }
    }
    MonotoneCheck {
        holds: min_dr > -tol,
        strict: min_dr > tol,
        min_dr,
        location,
        checked_vertices: checked,
        tol,
    }
}

/// Critical points of the even extension across the axis, in (r, x_n)
/// coordinates. The Hessian entries are (v_rr, v_rz, v_zz).
pub fn axis_critical_points(
    v: &ScalarField<'_>,
    mean_curvature: f64,
    opts: &CriticalOptions,
) -> Result<Vec<CriticalPointRecord>> {
    let mirrored = MirroredMesh::new(v.mesh)?;
    let full = ScalarField {
        mesh: &mirrored.mesh,
        values: mirrored.extend(&v.values),
    };
    let mut records = find_critical_points(&full, mean_curvature, opts);
    // the reflection duplicates off-axis points; keep the r ≥ 0 copy
    records.retain(|r| r.location[0] >= -v.mesh.h);
    for r in records.iter_mut() {
        r.location[0] = r.location[0].abs();
    }
    Ok(records)
}

/// Hessian of the revolved u at an axis critical point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisHessian {
    /// Refined critical point (0, z*).
    pub location: Point,
    /// u_{x_k x_k} for k = 1..n, the first n − 1 equal to lim v_r / r.
    pub diagonal: Vec<f64>,
    /// Mixed derivative v_rz from a two-dimensional fit, zero by symmetry.
    pub cross_term: f64,
    /// Sum of the diagonal, equal to Δu(p) = H at a critical point.
    pub trace: f64,
    pub fit_window: f64,
}

fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let m = rows.len();
    let k = rows.first()?.len();
    let a = nalgebra::DMatrix::from_fn(m, k, |i, j| rows[i][j]);
    let b = nalgebra::DVector::from_column_slice(rhs);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() < 1e-12 * smax {
        return None;
    }
    svd.solve(&b, 1e-14 * smax).ok().map(|x| x.iter().copied().collect())
}

/// Diagonal Hessian of the revolved solution at the axis point nearest `z_star`.
///
/// u_{x_n x_n} comes from a quadratic fit of v(0, ·) along the axis vertices,
/// the transverse entries from a fit of v(·, z*) in powers of r².
pub fn axis_hessian(v: &ScalarField<'_>, n_dim: usize, z_star: f64) -> Result<AxisHessian> {
    let mesh = v.mesh;
    let w = 5.0 * mesh.h;
    let axis: Vec<usize> = (0..mesh.n_vertices()).filter(|&i| mesh.vertices[i][0] == 0.0).collect();
    let fit_axis = |z0: f64| {
        let pts: Vec<usize> = axis
            .iter()
            .copied()
            .filter(|&i| (mesh.vertices[i][1] - z0).abs() <= w)
            .collect();
        let rows: Vec<Vec<f64>> = pts
            .iter()
            .map(|&i| {
                let d = (mesh.vertices[i][1] - z0) / w;
                vec![1.0, d, d * d]
            })
            .collect();
        let rhs: Vec<f64> = pts.iter().map(|&i| v.values[i]).collect();
        (pts.len() >= 5).then(|| least_squares(&rows, &rhs)).flatten()
    };
    let no_fit = || Error::InvalidParameter(format!("too few axis samples near x_n = {z_star:.4}"));
    let c = fit_axis(z_star).ok_or_else(no_fit)?;
    let mut z = z_star;
    if c[2] != 0.0 {
        z = (z_star - 0.5 * c[1] / c[2] * w).clamp(z_star - w, z_star + w);
    }
    let c = fit_axis(z).ok_or_else(no_fit)?;
    let v_zz = 2.0 * c[2] / (w * w);

    let samples = 16;
    let mut rows = Vec::with_capacity(samples + 1);
    let mut rhs = Vec::with_capacity(samples + 1);
    for j in 0..=samples {
        let r = w * j as f64 / samples as f64;
        let s = (r / w).powi(2);
        if let Some(val) = mesh.interpolate(&v.values, [r, z]) {
            rows.push(vec![1.0, s, s * s]);
            rhs.push(val);
        }
    }
    if rows.len() < 6 {
        return Err(Error::OutOfDomain { x: 0.0, y: z });
    }
    let beta = least_squares(&rows, &rhs).ok_or_else(no_fit)?;
    let v_rr = 2.0 * beta[1] / (w * w);

    let patch: Vec<usize> = (0..mesh.n_vertices())
        .filter(|&i| dist(mesh.vertices[i], [0.0, z]) <= w)
        .collect();
    let cross_term = fit_quadratic(v, &patch, [0.0, z]).map_or(f64::NAN, |f| f.hessian[0][1]);

    let mut diagonal = vec![v_rr; n_dim.saturating_sub(1)];
    diagonal.push(v_zz);
    Ok(AxisHessian {
        location: [0.0, z],
        trace: diagonal.iter().sum(),
        diagonal,
        cross_term,
        fit_window: w,
    })
}

/// Nodal set of the recovered ∂v/∂x_n on the half cross-section.
pub fn axial_derivative_nodal_set(v: &ScalarField<'_>) -> Result<NodalArcSet> {
    let values = recover_gradient(v).iter().map(|g| g[1]).collect();
    trace_nodal_set(&ScalarField { mesh: v.mesh, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nodal::ArcEnd;
    use crate::radial::RadialSolution;

    fn ball_problem(n: usize) -> MeridianProblem {
        MeridianProblem::new(
            MeridianProfile::Ball { radius: 1.0 },
            n,
            ProblemSpec::robin(0.8, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn half_disk_mesh() {
        let p = ball_problem(3);
        let mesh = meridian_mesh(&p, 0.1).unwrap();
        let axis: Vec<f64> = mesh.vertices.iter().filter(|q| q[0] == 0.0).map(|q| q[1]).collect();
        let lo = axis.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = axis.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!((lo, hi), (-1.0, 1.0));
        assert!(mesh.vertices.iter().all(|q| q[0] >= 0.0));
        assert!((mesh.total_area() - std::f64::consts::FRAC_PI_2).abs() < 0.02);
        let axis_len: f64 = mesh
            .boundary_edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Axis)
            .map(|e| e.length)
            .sum();
        assert!((axis_len - 2.0).abs() < 1e-12);
    }

    #[test]
    fn spheroid_mesh_and_refinement() {
        let profile = MeridianProfile::Spheroid { a: 0.7, b: 1.2 };
        let coarse = meridian_mesh_seeded(&profile, 0.1, 0).unwrap();
        let fine = meridian_mesh_seeded(&profile, 0.05, 0).unwrap();
        let area = 0.5 * std::f64::consts::PI * 0.7 * 1.2;
        assert!((fine.total_area() - area).abs() < 0.01);
        let ratio = fine.n_vertices() as f64 / coarse.n_vertices() as f64;
        assert!((2.5..=6.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn sphere_areas() {
        use std::f64::consts::PI;
        assert!((sphere_area(0) - 2.0).abs() < 1e-14);
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn ball_volume() {
        let mesh = meridian_mesh(&ball_problem(3), 0.05).unwrap();
        let vol = revolution_volume(&mesh, 3);
        assert!((vol - 4.0 / 3.0 * std::f64::consts::PI).abs() < 0.02, "{vol}");
    }

    #[test]
    fn ball_robin_matches_radial() {
        let p = ball_problem(3);
        let mesh = meridian_mesh(&p, 0.08).unwrap();
        let (v, rep) = solve_meridian(&mesh, &p, None, &SolverOptions::default()).unwrap();
        assert!(rep.converged);
        let exact = RadialSolution::robin(3, 0.8, 1.0, 1.0).unwrap();
        let err = mesh
            .vertices
            .iter()
            .zip(&v.values)
            .map(|(q, x)| (x - exact.value(q[0].hypot(q[1])).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(err < 8e-3, "error {err}");
        assert!(v.values.iter().all(|x| *x < 0.0));
        let mono = check_monotone(&v, 1e-10);
        assert!(mono.strict && mono.checked_vertices > 0);
        let recs = axis_critical_points(&v, 0.8, &CriticalOptions::default()).unwrap();
        assert_eq!(recs.len(), 1);
        assert!(recs[0].location[0] <= 2.0 * mesh.h && recs[0].location[1].abs() <= 2.0 * mesh.h);
        let hess = axis_hessian(&v, 3, recs[0].location[1]).unwrap();
        for d in &hess.diagonal {
            assert!((d - 0.8 / 3.0).abs() < 0.1 * 0.8 / 3.0, "{:?}", hess.diagonal);
        }
        assert!((hess.trace - 0.8).abs() < 0.08);
        assert!(hess.cross_term.abs() < 0.1 * 0.8 / 3.0);
        let set = axial_derivative_nodal_set(&v).unwrap();
        assert_eq!(set.arcs.len(), 1);
        let ends = set.arcs[0].ends;
        assert!(ends.contains(&ArcEnd::Boundary { kind: EdgeKind::Axis }));
        assert!(ends.contains(&ArcEnd::Boundary { kind: EdgeKind::Outer }));
    }

    #[test]
    fn planar_reduction_matches_mirrored_solve() {
        let p = ball_problem(2);
        let half = meridian_mesh(&p, 0.15).unwrap();
        let opts = SolverOptions::default();
        let (v, _) = solve_meridian(&half, &p, None, &opts).unwrap();
        let full = MirroredMesh::new(&half).unwrap();
        let (u, _) = newton_solve(&full.mesh, &p.spec, &ScalarField::zeros(&full.mesh), &opts).unwrap();
        for (i, x) in v.values.iter().enumerate() {
            assert!((x - u.values[i]).abs() <= 1e-8);
        }
    }

    #[test]
    fn ball_neumann_compatible() {
        let c: f64 = 0.5;
        let h_mc = 3.0 * c / (1.0 + c * c).sqrt();
        let p = MeridianProblem::new(
            MeridianProfile::Ball { radius: 1.0 },
            3,
            ProblemSpec::neumann(h_mc, c).unwrap(),
        )
        .unwrap();
        let mesh = meridian_mesh(&p, 0.08).unwrap();
        let (v, rep) = solve_meridian(&mesh, &p, None, &SolverOptions::default()).unwrap();
        assert!(rep.converged);
        let exact = RadialSolution::new(3, h_mc, 0.0);
        let disc = Discretization::new(&mesh, 3);
        let ex: Vec<f64> = mesh.vertices.iter().map(|q| exact.value(q[0].hypot(q[1])).unwrap()).collect();
        let mean = ex.iter().zip(disc.mass()).map(|(a, m)| a * m).sum::<f64>() / disc.measure();
        let err = v.values.iter().zip(&ex).map(|(a, b)| (a - (b - mean)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-2, "error {err}");
    }

    #[test]
    fn monotone_synthetic() {
        let mesh = meridian_mesh(&ball_problem(3), 0.1).unwrap();
        let down = ScalarField::from_fn(&mesh, |q| -q[0] * q[0]);
        let m = check_monotone(&down, 1e-10);
        assert!(!m.holds && m.location[0] > 0.0);
        let flat = ScalarField::from_fn(&mesh, |q| q[1]);
        let m = check_monotone(&flat, 1e-10);
        assert!(m.holds && !m.strict);
    }

    #[test]
    fn spheroid_hessian_positive() {
        let p = MeridianProblem::new(
            MeridianProfile::Spheroid { a: 0.7, b: 1.2 },
            3,
            ProblemSpec::robin(0.8, 1.0).unwrap(),
        )
        .unwrap();
        let mesh = meridian_mesh(&p, 0.06).unwrap();
        let (v, _) = solve_meridian(&mesh, &p, None, &SolverOptions::default()).unwrap();
        let recs = axis_critical_points(&v, 0.8, &CriticalOptions::default()).unwrap();
        assert_eq!(recs.len(), 1);
        let hess = axis_hessian(&v, 3, recs[0].location[1]).unwrap();
        let smallest = hess.diagonal.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(smallest > 0.0);
        assert!(hess.cross_term.abs() <= 0.1 * smallest);
    }
}
