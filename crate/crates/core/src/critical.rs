//! Critical points of piecewise-linear fields: detection from a recovered
//! gradient, refinement and Hessian estimation by local quadratic fits,
//! Morse classification and winding indices.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{add, dist, norm, scale, sub, Point, TriMesh};
use crate::mc_operator::ScalarField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Minimum,
    Maximum,
    Saddle,
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointRecord {
    pub location: Point,
    /// Magnitude of the interpolated recovered gradient at `location`.
    pub grad_norm: f64,
    /// Fitted second derivatives [[u₁₁, u₁₂], [u₂₁, u₂₂]].
    pub hessian: [[f64; 2]; 2],
    /// Hessian eigenvalues in ascending order.
    pub eigenvalues: [f64; 2],
    /// det of the Hessian.
    pub gauss_curvature: f64,
    pub classification: Classification,
    /// Winding number of the gradient on a circle of radius `index_radius`;
    /// absent when the circle leaves the mesh or the gradient nearly vanishes on it.
    pub index: Option<i32>,
    pub index_radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriticalOptions {
    /// Relative dead band for eigenvalues and Gaussian curvature.
    pub degeneracy_tol: f64,
    /// Gradient threshold as a fraction of the largest recovered gradient.
    pub grad_tol_rel: f64,
    /// Candidate clusters closer than this multiple of h are merged.
    pub merge_factor: f64,
    /// Index loops are circles of this multiple of h.
    pub index_radius_factor: f64,
}

impl Default for CriticalOptions {
    fn default() -> Self {
        Self {
            degeneracy_tol: 1e-2,
            grad_tol_rel: 1e-3,
            merge_factor: 2.0,
            index_radius_factor: 3.0,
        }
    }
}

/// Area-weighted average of the cell gradients around each vertex.
pub fn recover_gradient(field: &ScalarField<'_>) -> Vec<Point> {
    let mesh = field.mesh;
    let cell_grads: Vec<(Point, f64)> = (0..mesh.cells.len())
        .map(|c| (mesh.cell_gradient(&field.values, c), mesh.cell_area(c)))
        .collect();
    (0..mesh.n_vertices())
        .map(|v| {
            let mut acc = [0.0, 0.0];
            let mut area = 0.0;
            for &c in mesh.vertex_cells(v) {
                let (g, a) = cell_grads[c];
                acc = add(acc, scale(g, a));
                area += a;
            }
            scale(acc, 1.0 / area)
        })
        .collect()
}

fn interpolate_vec(mesh: &TriMesh, grads: &[Point], p: Point) -> Option<Point> {
    mesh.locate(p).map(|loc| {
        let cell = mesh.cells[loc.cell];
        let mut g = [0.0, 0.0];
        for i in 0..3 {
            g = add(g, scale(grads[cell[i]], loc.bary[i]));
        }
        g
    })
}

/// Eigenvalue-sign classification with a dead band of `degeneracy_tol · scale`,
/// where scale = max(|λ₁|, |λ₂|, `floor`).
pub fn classify(hessian: [[f64; 2]; 2], floor: f64, degeneracy_tol: f64) -> Classification {
    let [l1, l2] = eigenvalues(hessian);
    let scale = l1.abs().max(l2.abs()).max(floor);
    let band = degeneracy_tol * scale;
    if l1 > band && l2 > band {
        Classification::Minimum
    } else if l1 < -band && l2 < -band {
        Classification::Maximum
    } else if l1 * l2 < -degeneracy_tol * scale * scale {
        Classification::Saddle
    } else {
        Classification::Degenerate
    }
}

/// Eigenvalues of a symmetric 2×2 matrix, ascending.
pub fn eigenvalues(m: [[f64; 2]; 2]) -> [f64; 2] {
    let e = SymmetricEigen::new(Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])).eigenvalues;
    if e[0] <= e[1] {
        [e[0], e[1]]
    } else {
        [e[1], e[0]]
    }
}

/// Least-squares quadratic u ≈ a + g·x + ½ xᵀ Hs x around `center`.
#[derive(Clone, Copy, Debug)]
pub struct QuadraticFit {
    pub value: f64,
    pub gradient: Point,
    pub hessian: [[f64; 2]; 2],
    pub rms_residual: f64,
}

/// Fits a full quadratic to the field values at `vertices`, in coordinates centered at `center`.
pub fn fit_quadratic(field: &ScalarField<'_>, vertices: &[usize], center: Point) -> Option<QuadraticFit> {
    if vertices.len() < 6 {
        return None;
    }
    let mesh = field.mesh;
    let s = vertices
        .iter()
        .map(|&v| dist(mesh.vertices[v], center))
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let m = vertices.len();
    let mut a = DMatrix::zeros(m, 6);
    let mut b = DVector::zeros(m);
    for (k, &v) in vertices.iter().enumerate() {
        let d = sub(mesh.vertices[v], center);
        let (x, y) = (d[0] / s, d[1] / s);
        let row = [1.0, x, y, x * x, x * y, y * y];
        for j in 0..6 {
            a[(k, j)] = row[j];
        }
        b[k] = field.values[v];
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() < 1e-10 * smax {
        return None;
    }
    let c = svd.solve(&b, 1e-14 * smax).ok()?;
    let res = &a * &c - &b;
    let s2 = s * s;
    Some(QuadraticFit {
        value: c[0],
        gradient: [c[1] / s, c[2] / s],
        hessian: [[2.0 * c[3] / s2, c[4] / s2], [c[4] / s2, 2.0 * c[5] / s2]],
        rms_residual: (res.norm_squared() / m as f64).sqrt(),
    })
}

/// Vertices within two rings of the vertex closest to `p`, widened until the
/// fit has at least `min_points` samples.
fn patch_around(mesh: &TriMesh, p: Point, min_points: usize) -> Option<Vec<usize>> {
    let loc = mesh.locate(p)?;
    let cell = mesh.cells[loc.cell];
    let k = (0..3).max_by(|&i, &j| loc.bary[i].total_cmp(&loc.bary[j]))?;
    let mut patch = mesh.two_ring(cell[k]);
    while patch.len() < min_points {
        let mut grown = patch.clone();
        for &v in &patch {
            grown.extend_from_slice(mesh.vertex_neighbors(v));
        }
        grown.sort_unstable();
        grown.dedup();
        if grown.len() == patch.len() {
            break;
        }
        patch = grown;
    }
    Some(patch)
}

/// Locates, refines and classifies the interior critical points of `field`.
///
/// `curvature_floor` sets the smallest scale used by the dead band (the
/// prescribed mean curvature H for solutions of the equation).
pub fn find_critical_points(
    field: &ScalarField<'_>,
    curvature_floor: f64,
    opts: &CriticalOptions,
) -> Vec<CriticalPointRecord> {
    let mesh = field.mesh;
    let grads = recover_gradient(field);
    let gmax = grads.iter().map(|g| norm(*g)).fold(0.0f64, f64::max);
    if gmax == 0.0 {
        return Vec::new();
    }
    let h = mesh.h;

    // cells whose vertex gradients enclose the origin
    let mut candidates: Vec<Point> = Vec::new();
    for cell in &mesh.cells {
        let g = cell.map(|v| grads[v]);
        let det = crate::geometry::orient(g[0], g[1], g[2]);
        let spread = norm(g[0]).max(norm(g[1])).max(norm(g[2]));
        if det.abs() <= 1e-14 * spread * spread {
            continue;
        }
        let beta: [f64; 3] = std::array::from_fn(|i| {
            crate::geometry::orient(g[(i + 1) % 3], g[(i + 2) % 3], [0.0, 0.0]) / det
        });
        if beta.iter().all(|&b| b >= -1e-12) {
            let mut p = [0.0, 0.0];
            for i in 0..3 {
                p = add(p, scale(mesh.vertices[cell[i]], beta[i]));
            }
            candidates.push(p);
        }
    }

    let clusters = merge_points(&candidates, opts.merge_factor * h);
    let mut records: Vec<CriticalPointRecord> = Vec::new();
    for start in clusters {
        let location = refine(field, start, h).unwrap_or(start);
        if records
            .iter()
            .any(|r| dist(r.location, location) <= opts.merge_factor * h)
        {
            continue;
        }
        let fit = match patch_around(mesh, location, 12).and_then(|p| fit_quadratic(field, &p, location)) {
            Some(f) => f,
            None => continue,
        };
        let hessian = fit.hessian;
        let eig = eigenvalues(hessian);
        let grad_norm = interpolate_vec(mesh, &grads, location).map_or(f64::NAN, norm);
        let radius = opts.index_radius_factor * h;
        let index = if mesh.distance_to_boundary(location) > radius + h {
            gradient_index_with(mesh, &grads, &circle(location, radius, 64), 10.0 * opts.grad_tol_rel * gmax).ok()
        } else {
            None
        };
        records.push(CriticalPointRecord {
            location,
            grad_norm,
            hessian,
            eigenvalues: eig,
            gauss_curvature: hessian[0][0] * hessian[1][1] - hessian[0][1] * hessian[1][0],
            classification: classify(hessian, curvature_floor, opts.degeneracy_tol),
            index,
            index_radius: radius,
        });
    }
    records.sort_by(|a, b| {
        a.location[0]
            .total_cmp(&b.location[0])
            .then(a.location[1].total_cmp(&b.location[1]))
    });
    records
}

/// Single-linkage clustering; returns the mean of each cluster in first-seen order.
fn merge_points(points: &[Point], radius: f64) -> Vec<Point> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if dist(points[i], points[j]) <= radius {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut sums: Vec<(usize, Point, usize)> = Vec::new();
    for i in 0..n {
        let r = root(&mut parent, i);
        match sums.iter_mut().find(|s| s.0 == r) {
            Some(s) => {
                s.1 = add(s.1, points[i]);
                s.2 += 1;
            }
            None => sums.push((r, points[i], 1)),
        }
    }
    sums.into_iter().map(|(_, p, k)| scale(p, 1.0 / k as f64)).collect()
}

/// Newton iteration on the gradient of local quadratic fits.
fn refine(field: &ScalarField<'_>, start: Point, h: f64) -> Option<Point> {
    let mesh = field.mesh;
    let mut x = start;
    for _ in 0..8 {
        let patch = patch_around(mesh, x, 12)?;
        let fit = fit_quadratic(field, &patch, x)?;
        let hs = fit.hessian;
        let det = hs[0][0] * hs[1][1] - hs[0][1] * hs[1][0];
        let size = hs[0][0].abs() + hs[1][1].abs() + 2.0 * hs[0][1].abs();
        if det.abs() <= 1e-12 * size * size {
            return None;
        }
        let g = fit.gradient;
        let step = [
            -(hs[1][1] * g[0] - hs[0][1] * g[1]) / det,
            -(-hs[1][0] * g[0] + hs[0][0] * g[1]) / det,
        ];
        let next = add(x, step);
        if dist(next, start) > 2.0 * h || !mesh.contains(next) {
            return None;
        }
        x = next;
        if norm(step) < 1e-6 * h {
            break;
        }
    }
    Some(x)
}

/// Polygonal circle with `n` vertices.
pub fn circle(center: Point, radius: f64, n: usize) -> Vec<Point> {
    (0..n)
        .map(|k| {
            let th = TAU * k as f64 / n as f64;
            [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
        })
        .collect()
}

/// Closed loop through the boundary vertices, moved inward along the vertex normals by `offset`.
pub fn boundary_offset_loop(mesh: &TriMesh, offset: f64) -> Vec<Point> {
    mesh.boundary_vertex_normals()
        .into_iter()
        .map(|(v, n)| sub(mesh.vertices[v], scale(n, offset)))
        .collect()
}

fn gradient_index_with(mesh: &TriMesh, grads: &[Point], polyline: &[Point], threshold: f64) -> Result<i32> {
    if polyline.len() < 3 {
        return Err(Error::InvalidParameter("index loop needs at least three points".into()));
    }
    let spacing = 0.25 * mesh.h;
    let mut samples = Vec::new();
    for k in 0..polyline.len() {
        let (a, b) = (polyline[k], polyline[(k + 1) % polyline.len()]);
        let m = (dist(a, b) / spacing).ceil().max(1.0) as usize;
        for j in 0..m {
            samples.push(add(a, scale(sub(b, a), j as f64 / m as f64)));
        }
    }
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    let mut first = 0.0;
    let mut weakest = f64::INFINITY;
    for p in &samples {
        let g = interpolate_vec(mesh, grads, *p).ok_or_else(|| {
            Error::InvalidParameter(format!("index loop leaves the mesh at ({:.4}, {:.4})", p[0], p[1]))
        })?;
        weakest = weakest.min(norm(g));
        let ang = g[1].atan2(g[0]);
        match prev {
            None => first = ang,
            Some(a) => total += wrap(ang - a),
        }
        prev = Some(ang);
    }
    if weakest < threshold {
        return Err(Error::IllConditionedLoop {
            magnitude: weakest,
            threshold,
        });
    }
    total += wrap(first - prev.unwrap_or(first));
    Ok((total / TAU).round() as i32)
}

fn wrap(a: f64) -> f64 {
    let mut a = a % TAU;
    if a > std::f64::consts::PI {
        a -= TAU;
    } else if a <= -std::f64::consts::PI {
        a += TAU;
    }
    a
}

/// Winding number of the recovered gradient of `field` around the closed polyline `lp`.
///
/// Fails with an ill-conditioned-loop error where the gradient magnitude drops
/// below 10·grad_tol, grad_tol = `grad_tol_rel` · max recovered gradient.
pub fn gradient_index(field: &ScalarField<'_>, lp: &[Point], grad_tol_rel: f64) -> Result<i32> {
    let grads = recover_gradient(field);
    let gmax = grads.iter().map(|g| norm(*g)).fold(0.0f64, f64::max);
    gradient_index_with(field.mesh, &grads, lp, 10.0 * grad_tol_rel * gmax)
}

/// Interior vertices whose value strictly exceeds every mesh neighbor.
pub fn interior_max_scan(field: &ScalarField<'_>) -> Vec<usize> {
    let mesh = field.mesh;
    (0..mesh.n_vertices())
        .filter(|&v| {
            !mesh.is_boundary_vertex(v)
                && mesh
                    .vertex_neighbors(v)
                    .iter()
                    .all(|&w| field.values[v] > field.values[w])
        })
        .collect()
}

/// Counts of each classification.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalCounts {
    pub minima: usize,
    pub maxima: usize,
    pub saddles: usize,
    pub degenerate: usize,
}

impl CriticalCounts {
    pub fn of(records: &[CriticalPointRecord]) -> Self {
        let mut c = Self::default();
        for r in records {
            match r.classification {
                Classification::Minimum => c.minima += 1,
                Classification::Maximum => c.maxima += 1,
                Classification::Saddle => c.saddles += 1,
                Classification::Degenerate => c.degenerate += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.minima + self.maxima + self.saddles + self.degenerate
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{triangulate, ConvexDomain};

    fn disk_mesh(r: f64, h: f64) -> TriMesh {
        triangulate(&ConvexDomain::disk(r).unwrap(), h).unwrap()
    }

    #[test]
    fn linear_field_gradient_is_exact() {
        let mesh = disk_mesh(1.0, 0.2);
        let f = ScalarField::from_fn(&mesh, |p| 0.3 * p[0] - 1.1 * p[1] + 2.0);
        for (v, g) in recover_gradient(&f).iter().enumerate() {
            if !mesh.is_boundary_vertex(v) {
                assert!((g[0] - 0.3).abs() < 1e-12 && (g[1] + 1.1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn square_field_gradient_near_half() {
        let mesh = disk_mesh(1.0, 0.1);
        let f = ScalarField::from_fn(&mesh, |p| p[0] * p[0]);
        let grads = recover_gradient(&f);
        let g = interpolate_vec(&mesh, &grads, [0.5, 0.0]).unwrap();
        assert!((g[0] - 1.0).abs() < 0.05 && g[1].abs() < 0.05);
    }

    #[test]
    fn classify_examples() {
        let h = 0.8;
        assert_eq!(classify([[h / 2.0, 0.0], [0.0, h / 2.0]], h, 1e-2), Classification::Minimum);
        assert_eq!(classify([[h, 0.0], [0.0, 0.0]], h, 1e-2), Classification::Degenerate);
        assert_eq!(classify([[1.0, 0.0], [0.0, -1.0]], 0.0, 1e-2), Classification::Saddle);
        assert_eq!(classify([[-1.0, 0.2], [0.2, -2.0]], 0.0, 1e-2), Classification::Maximum);
    }

    #[test]
    fn paraboloid_minimum() {
        let mesh = disk_mesh(1.0, 0.1);
        let f = ScalarField::from_fn(&mesh, |p| p[0] * p[0] + p[1] * p[1]);
        let recs = find_critical_points(&f, 0.0, &CriticalOptions::default());
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert_eq!(r.classification, Classification::Minimum);
        assert!(norm(r.location) < 0.1);
        for i in 0..2 {
            assert!((r.hessian[i][i] - 2.0).abs() < 0.2);
        }
        assert_eq!(r.index, Some(1));
    }

    #[test]
    fn saddle_field() {
        let mesh = disk_mesh(1.0, 0.1);
        let f = ScalarField::from_fn(&mesh, |p| p[0] * p[0] - p[1] * p[1]);
        let recs = find_critical_points(&f, 0.0, &CriticalOptions::default());
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].classification, Classification::Saddle);
        assert!(recs[0].gauss_curvature < 0.0);
        assert_eq!(recs[0].index, Some(-1));
    }

    #[test]
    fn unit_circle_indices() {
        let mesh = disk_mesh(1.5, 0.1);
        let lp = circle([0.0, 0.0], 1.0, 100);
        let bowl = ScalarField::from_fn(&mesh, |p| p[0] * p[0] + p[1] * p[1]);
        assert_eq!(gradient_index(&bowl, &lp, 1e-3).unwrap(), 1);
        let saddle = ScalarField::from_fn(&mesh, |p| p[0] * p[0] - p[1] * p[1]);
        assert_eq!(gradient_index(&saddle, &lp, 1e-3).unwrap(), -1);
        // a loop through the minimum is ill-conditioned
        let bad = circle([0.5, 0.0], 0.5, 100);
        assert!(matches!(gradient_index(&bowl, &bad, 1e-3), Err(Error::IllConditionedLoop { .. })));
    }

    #[test]
    fn interior_maxima() {
        let mesh = disk_mesh(1.0, 0.1);
        let cap = ScalarField::from_fn(&mesh, |p| -(p[0] * p[0] + p[1] * p[1]));
        let maxima = interior_max_scan(&cap);
        assert_eq!(maxima.len(), 1);
        let nearest = (0..mesh.n_vertices())
            .min_by(|&a, &b| norm(mesh.vertices[a]).total_cmp(&norm(mesh.vertices[b])))
            .unwrap();
        assert_eq!(maxima[0], nearest);
        let flat = ScalarField::from_fn(&mesh, |_| 3.0);
        assert!(interior_max_scan(&flat).is_empty());
    }

    #[test]
    fn fit_recovers_exact_quadratic() {
        let mesh = disk_mesh(1.0, 0.1);
        let f = ScalarField::from_fn(&mesh, |p| 1.0 + 0.5 * p[0] - p[1] + 0.7 * p[0] * p[0] + 0.3 * p[0] * p[1] - 0.2 * p[1] * p[1]);
        let c = [0.1, 0.2];
        let patch = patch_around(&mesh, c, 12).unwrap();
        let fit = fit_quadratic(&f, &patch, c).unwrap();
        assert!((fit.hessian[0][0] - 1.4).abs() < 1e-9);
        assert!((fit.hessian[0][1] - 0.3).abs() < 1e-9);
        assert!((fit.hessian[1][1] + 0.4).abs() < 1e-9);
    }
}
