//! Comparison surfaces, nodal sets of difference fields, sector counts and
//! leading homogeneous order estimates near a point.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::critical::circle;
use crate::error::{Error, Result};
use crate::geometry::{add, dist, norm, scale, sub, EdgeKind, Point, TriMesh};
use crate::mc_operator::ScalarField;

/// Relative perturbation applied to exact zeros before marching.
pub const ZERO_PERTURBATION: f64 = 1e-12;
/// Samples on a circle for sector counts and sup norms.
pub const CIRCLE_SAMPLES: usize = 720;
/// Radii used by the leading-order fit.
pub const FIT_RADII: usize = 12;

/// One-dimensional mean curvature solution X(x₁) = h + (1/H)(1 − √(1 − H²x₁²)), |x₁| < 1/H.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderSolution {
    pub height: f64,
    pub mean_curvature: f64,
}

impl CylinderSolution {
    pub fn new(height: f64, mean_curvature: f64) -> Result<Self> {
        if !(mean_curvature > 0.0) || !height.is_finite() {
            return Err(Error::InvalidParameter(
                "cylinder needs H > 0 and a finite height".into(),
            ));
        }
        Ok(Self {
            height,
            mean_curvature,
        })
    }

    /// Half-width 1/H of the strip where X is defined.
    pub fn half_width(&self) -> f64 {
        1.0 / self.mean_curvature
    }

    fn s(&self, x: f64) -> Result<f64> {
        let s = self.mean_curvature * x;
        if s.abs() >= 1.0 || !s.is_finite() {
            return Err(Error::OutOfDomain { x, y: 0.0 });
        }
        Ok(s)
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        let s = self.s(x)?;
        Ok(self.height + (1.0 - (1.0 - s * s).sqrt()) / self.mean_curvature)
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        let s = self.s(x)?;
        Ok(s / (1.0 - s * s).sqrt())
    }

    pub fn second_derivative(&self, x: f64) -> Result<f64> {
        let s = self.s(x)?;
        Ok(self.mean_curvature / (1.0 - s * s).powf(1.5))
    }

    /// The cylinder over the plane, with its profile variable measured along
    /// the unit vector `direction` from `center`.
    pub fn surface(&self, center: Point, direction: Point) -> impl Fn(Point) -> Result<f64> + '_ {
        let d = scale(direction, 1.0 / norm(direction));
        move |p| {
            let x = sub(p, center);
            self.value(x[0] * d[0] + x[1] * d[1])
                .map_err(|_| Error::OutOfDomain { x: p[0], y: p[1] })
        }
    }
}

/// Quadratic q(x) = u0 + ½ (x−c)ᵀ A (x−c).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticModel {
    pub u0: f64,
    pub center: Point,
    pub hessian: [[f64; 2]; 2],
}

impl QuadraticModel {
    /// q = u0 + ½λ₁x₁² + ½λ₂x₂².
    pub fn new(u0: f64, lambda1: f64, lambda2: f64) -> Self {
        Self {
            u0,
            center: [0.0, 0.0],
            hessian: [[lambda1, 0.0], [0.0, lambda2]],
        }
    }

    pub fn centered(u0: f64, center: Point, hessian: [[f64; 2]; 2]) -> Self {
        Self { u0, center, hessian }
    }

    pub fn value(&self, p: Point) -> f64 {
        let x = sub(p, self.center);
        let a = self.hessian;
        self.u0 + 0.5 * (a[0][0] * x[0] * x[0] + 2.0 * a[0][1] * x[0] * x[1] + a[1][1] * x[1] * x[1])
    }

    pub fn laplacian(&self) -> f64 {
        self.hessian[0][0] + self.hessian[1][1]
    }
}

/// Difference restricted to the cells where the comparison function exists.
#[derive(Clone, Debug)]
pub struct ClippedDifference {
    pub mesh: TriMesh,
    pub values: Vec<f64>,
    /// Index in the original mesh of every retained vertex.
    pub original_vertices: Vec<usize>,
    pub dropped_vertices: usize,
}

impl ClippedDifference {
    pub fn field(&self) -> ScalarField<'_> {
        ScalarField {
            mesh: &self.mesh,
            values: self.values.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum DifferenceField<'m> {
    Full(ScalarField<'m>),
    /// The comparison function is undefined at some vertices, so the working
    /// subdomain is the union of cells where it is defined.
    Clipped(ClippedDifference),
}

impl DifferenceField<'_> {
    pub fn field(&self) -> ScalarField<'_> {
        match self {
            DifferenceField::Full(f) => f.clone(),
            DifferenceField::Clipped(c) => c.field(),
        }
    }

    pub fn is_clipped(&self) -> bool {
        matches!(self, DifferenceField::Clipped(_))
    }
}

/// Per-vertex `field − analytic`.
pub fn difference_field<'m>(
    field: &ScalarField<'m>,
    analytic: impl Fn(Point) -> Result<f64>,
) -> Result<DifferenceField<'m>> {
    let mesh = field.mesh;
    let diffs: Vec<Option<f64>> = mesh
        .vertices
        .iter()
        .zip(&field.values)
        .map(|(p, v)| analytic(*p).ok().map(|a| v - a))
        .collect();
    if diffs.iter().all(Option::is_some) {
        let values = diffs.into_iter().map(Option::unwrap).collect();
        return Ok(DifferenceField::Full(ScalarField { mesh, values }));
    }
    let mut new_index = vec![usize::MAX; mesh.n_vertices()];
    let mut original = Vec::new();
    let mut cells = Vec::new();
    for cell in &mesh.cells {
        if cell.iter().all(|&v| diffs[v].is_some()) {
            cells.push(cell.map(|v| {
                if new_index[v] == usize::MAX {
                    new_index[v] = original.len();
                    original.push(v);
                }
                new_index[v]
            }));
        }
    }
    if cells.is_empty() {
        return Err(Error::InvalidParameter(
            "comparison function is undefined on every cell".into(),
        ));
    }
    let vertices = original.iter().map(|&v| mesh.vertices[v]).collect();
    let values = original.iter().map(|&v| diffs[v].unwrap()).collect();
    let sub_mesh = TriMesh::new(vertices, cells)?;
    Ok(DifferenceField::Clipped(ClippedDifference {
        mesh: sub_mesh,
        values,
        dropped_vertices: mesh.n_vertices() - original.len(),
        original_vertices: original,
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum ArcEnd {
    /// Ends on a boundary edge of the given kind.
    Boundary { kind: EdgeKind },
    Junction,
    /// Closed curve, or a curve cut short inside the mesh.
    Interior,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodalArc {
    pub points: Vec<Point>,
    pub closed: bool,
    pub ends: [ArcEnd; 2],
}

impl NodalArc {
    pub fn length(&self) -> f64 {
        let open: f64 = self.points.windows(2).map(|w| dist(w[0], w[1])).sum();
        if self.closed && self.points.len() > 1 {
            open + dist(self.points[0], *self.points.last().unwrap())
        } else {
            open
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodalArcSet {
    pub arcs: Vec<NodalArc>,
    /// Point where several arcs meet.
    pub junction: Option<Point>,
}

fn perturbed(values: &[f64], level: f64) -> Vec<f64> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max((v - level).abs()));
    let eps = ZERO_PERTURBATION * if scale > 0.0 { scale } else { 1.0 };
    values
        .iter()
        .map(|v| if *v == level { eps } else { v - level })
        .collect()
}

/// Polylines of the piecewise-linear level set {values = level}.
pub fn level_set(mesh: &TriMesh, values: &[f64], level: f64) -> Vec<NodalArc> {
    let f = perturbed(values, level);
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let zero = |a: usize, b: usize| {
        let s = f[a] / (f[a] - f[b]);
        add(mesh.vertices[a], scale(sub(mesh.vertices[b], mesh.vertices[a]), s))
    };
    // each sign-changing cell contributes one segment between two edge zeros
    let mut links: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    for cell in &mesh.cells {
        let crossing: Vec<(usize, usize)> = (0..3)
            .map(|i| (cell[i], cell[(i + 1) % 3]))
            .filter(|&(a, b)| (f[a] > 0.0) != (f[b] > 0.0))
            .map(|(a, b)| key(a, b))
            .collect();
        if let [e0, e1] = crossing[..] {
            for (x, y) in [(e0, e1), (e1, e0)] {
                links.entry(x).or_insert_with(|| {
                    order.push(x);
                    Vec::new()
                });
                links.get_mut(&x).unwrap().push(y);
            }
        }
    }
    let boundary_kind: HashMap<(usize, usize), EdgeKind> = mesh
        .boundary_edges
        .iter()
        .map(|e| (key(e.v[0], e.v[1]), e.kind))
        .collect();
    let end_of = |e: (usize, usize)| match boundary_kind.get(&e) {
        Some(&kind) => ArcEnd::Boundary { kind },
        None => ArcEnd::Interior,
    };

    let mut visited: HashMap<(usize, usize), bool> = HashMap::new();
    let mut arcs = Vec::new();
    let walk = |start: (usize, usize), visited: &mut HashMap<(usize, usize), bool>| {
        let mut chain = vec![start];
        visited.insert(start, true);
        let mut cur = start;
        loop {
            let next = links[&cur].iter().find(|e| !visited.contains_key(*e)).copied();
            match next {
                Some(n) => {
                    visited.insert(n, true);
                    chain.push(n);
                    cur = n;
                }
                None => break,
            }
        }
        let closed = chain.len() > 2 && links[&cur].contains(&start) && links[&start].len() == 2;
        let points = chain.iter().map(|&(a, b)| zero(a, b)).collect();
        let ends = if closed {
            [ArcEnd::Interior, ArcEnd::Interior]
        } else {
            [end_of(start), end_of(cur)]
        };
        NodalArc { points, closed, ends }
    };
    // open chains start at edges with a single link, then the remaining loops
    for &e in &order {
        if links[&e].len() == 1 && !visited.contains_key(&e) {
            arcs.push(walk(e, &mut visited));
        }
    }
    for &e in &order {
        if !visited.contains_key(&e) {
            arcs.push(walk(e, &mut visited));
        }
    }
    arcs
}

/// Sign changes of `f` around the link of interior vertex `v`.
fn link_sign_changes(mesh: &TriMesh, f: &[f64], v: usize) -> usize {
    let c = mesh.vertices[v];
    let mut ring: Vec<(f64, usize)> = mesh
        .vertex_neighbors(v)
        .iter()
        .map(|&w| {
            let d = sub(mesh.vertices[w], c);
            (d[1].atan2(d[0]), w)
        })
        .collect();
    ring.sort_by(|a, b| a.0.total_cmp(&b.0));
    (0..ring.len())
        .filter(|&i| (f[ring[i].1] > 0.0) != (f[ring[(i + 1) % ring.len()].1] > 0.0))
        .count()
}

/// Where two or more nodal curves pass through a common vertex star, the
/// strongest cluster of such vertices is taken as the junction.
fn find_junction(mesh: &TriMesh, f: &[f64]) -> Option<Point> {
    let hits: Vec<(usize, usize)> = (0..mesh.n_vertices())
        .filter(|&v| !mesh.is_boundary_vertex(v))
        .map(|v| (v, link_sign_changes(mesh, f, v)))
        .filter(|&(_, n)| n >= 4)
        .collect();
    if hits.is_empty() {
        return None;
    }
    let radius = 2.0 * mesh.h;
    let mut cluster_of = vec![usize::MAX; hits.len()];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..hits.len() {
        if cluster_of[i] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        let mut members = vec![i];
        cluster_of[i] = id;
        let mut k = 0;
        while k < members.len() {
            let pi = mesh.vertices[hits[members[k]].0];
            for j in 0..hits.len() {
                if cluster_of[j] == usize::MAX && dist(pi, mesh.vertices[hits[j].0]) <= radius {
                    cluster_of[j] = id;
                    members.push(j);
                }
            }
            k += 1;
        }
        clusters.push(members);
    }
    let best = clusters.iter().max_by(|a, b| {
        let sa: usize = a.iter().map(|&i| hits[i].1).sum();
        let sb: usize = b.iter().map(|&i| hits[i].1).sum();
        sa.cmp(&sb).then(b.len().cmp(&a.len()))
    })?;
    let total: f64 = best.iter().map(|&i| hits[i].1 as f64).sum();
    let mut p = [0.0, 0.0];
    for &i in best {
        p = add(p, scale(mesh.vertices[hits[i].0], hits[i].1 as f64 / total));
    }
    Some(p)
}

/// Cuts every arc where it enters the disk of radius `radius` around `junction`.
fn split_at_junction(arcs: Vec<NodalArc>, junction: Point, radius: f64) -> Vec<NodalArc> {
    let mut out = Vec::new();
    for arc in arcs {
        let inside: Vec<bool> = arc.points.iter().map(|p| dist(*p, junction) < radius).collect();
        if !inside.iter().any(|&b| b) {
            out.push(arc);
            continue;
        }
        let n = arc.points.len();
        // for closed curves, rotate so the walk starts inside the disk
        let (points, inside, ends) = if arc.closed {
            let s = inside.iter().position(|&b| b).unwrap();
            let mut pts: Vec<Point> = arc.points[s..].to_vec();
            pts.extend_from_slice(&arc.points[..s]);
            pts.push(pts[0]);
            let mut ins: Vec<bool> = inside[s..].to_vec();
            ins.extend_from_slice(&inside[..s]);
            ins.push(true);
            (pts, ins, [ArcEnd::Junction, ArcEnd::Junction])
        } else {
            (arc.points, inside, arc.ends)
        };
        let m = points.len();
        let mut k = 0;
        while k < m {
            if inside[k] {
                k += 1;
                continue;
            }
            let start = k;
            while k < m && !inside[k] {
                k += 1;
            }
            let mut piece = Vec::with_capacity(k - start + 2);
            let first = if start == 0 { ends[0] } else { ArcEnd::Junction };
            if start > 0 {
                piece.push(junction);
            }
            piece.extend_from_slice(&points[start..k]);
            let last = if k == m { ends[1] } else { ArcEnd::Junction };
            if k < m {
                piece.push(junction);
            }
            out.push(NodalArc {
                points: piece,
                closed: false,
                ends: [first, last],
            });
        }
        let _ = n;
    }
    // pieces that are only a stub near the junction carry no geometry
    out.retain(|a| a.length() > radius);
    out
}

/// Nodal set {field = 0} as polylines, split into rays at a junction where
/// several curves meet.
pub fn trace_nodal_set(field: &ScalarField<'_>) -> Result<NodalArcSet> {
    if field.max_abs() == 0.0 {
        return Err(Error::InvalidParameter("field is identically zero".into()));
    }
    let mesh = field.mesh;
    let arcs = level_set(mesh, &field.values, 0.0);
    let f = perturbed(&field.values, 0.0);
    match find_junction(mesh, &f) {
        Some(j) => Ok(NodalArcSet {
            arcs: split_at_junction(arcs, j, 2.0 * mesh.h),
            junction: Some(j),
        }),
        None => Ok(NodalArcSet { arcs, junction: None }),
    }
}

fn check_circle(mesh: &TriMesh, p: Point, r: f64) -> Result<()> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    if !mesh.contains(p) || mesh.distance_to_boundary(p) < r {
        return Err(Error::OutOfDomain { x: p[0], y: p[1] });
    }
    Ok(())
}

fn circle_values(field: &ScalarField<'_>, p: Point, r: f64) -> Result<Vec<f64>> {
    circle(p, r, CIRCLE_SAMPLES)
        .into_iter()
        .map(|q| field.eval(q).ok_or(Error::OutOfDomain { x: q[0], y: q[1] }))
        .collect()
}

/// Sign changes of `field` along 720 samples of the circle of radius `r` about `p`.
pub fn sector_count(field: &ScalarField<'_>, p: Point, r: f64) -> Result<usize> {
    let mesh = field.mesh;
    if r < 4.0 * mesh.h * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "sector radius {r} is below 4h = {}",
            4.0 * mesh.h
        )));
    }
    check_circle(mesh, p, r)?;
    let vals = circle_values(field, p, r)?;
    let pos: Vec<bool> = vals.iter().map(|v| *v >= 0.0).collect();
    Ok((0..pos.len()).filter(|&i| pos[i] != pos[(i + 1) % pos.len()]).count())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeadingOrderFit {
    /// Estimated homogeneous degree.
    pub k: f64,
    pub r_range: [f64; 2],
    /// Root mean square misfit of the log-log regression.
    pub residual: f64,
    /// Indicative magnitude of the leading coefficient.
    pub amplitude: f64,
}

/// Default fit window [2h, min(0.3·diam, dist(p, ∂Ω)/2)].
pub fn default_fit_window(mesh: &TriMesh, p: Point) -> [f64; 2] {
    let boundary: Vec<Point> = mesh.boundary_edges.iter().map(|e| mesh.vertices[e.v[0]]).collect();
    let mut diam = 0.0f64;
    for (i, a) in boundary.iter().enumerate() {
        for b in &boundary[i + 1..] {
            diam = diam.max(dist(*a, *b));
        }
    }
    [2.0 * mesh.h, (0.3 * diam).min(0.5 * mesh.distance_to_boundary(p))]
}

/// Slope of log sup_{|x−p|=r} |field| against log r over 12 geometric radii.
pub fn leading_order_fit(field: &ScalarField<'_>, p: Point, r_min: f64, r_max: f64) -> Result<LeadingOrderFit> {
    let mesh = field.mesh;
    if !(r_min > 0.0 && r_max > r_min) {
        return Err(Error::InvalidParameter(format!("bad fit window [{r_min}, {r_max}]")));
    }
    if r_min < 2.0 * mesh.h * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "fit window starts below 2h = {}",
            2.0 * mesh.h
        )));
    }
    check_circle(mesh, p, r_max)?;
    let floor = 1e3 * f64::EPSILON * field.max_abs();
    let mut xs = Vec::with_capacity(FIT_RADII);
    let mut ys = Vec::with_capacity(FIT_RADII);
    let ratio = (r_max / r_min).powf(1.0 / (FIT_RADII - 1) as f64);
    for i in 0..FIT_RADII {
        let r = r_min * ratio.powi(i as i32);
        let sup = circle_values(field, p, r)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(sup > floor) {
            return Err(Error::UnderflowFit { magnitude: sup });
        }
        xs.push(r.ln());
        ys.push(sup.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let k = sxy / sxx;
    let c = my - k * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (k * x + c)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(LeadingOrderFit {
        k,
        r_range: [r_min, r_max],
        residual,
        amplitude: c.exp(),
    })
}

/// A degenerate contact shows at least six sectors and order at least three.
pub fn is_degenerate_contact(sectors: usize, k: f64) -> bool {
    sectors >= 6 && k >= 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{triangulate, ConvexDomain};
    use crate::radial::{RadialPoisson, RadialSolution};

    fn disk(h: f64) -> TriMesh {
        triangulate(&ConvexDomain::disk(1.0).unwrap(), h).unwrap()
    }

    fn re_z(k: i32) -> impl Fn(Point) -> f64 {
        move |p| {
            let (r, th) = (p[0].hypot(p[1]), p[1].atan2(p[0]));
            r.powi(k) * (k as f64 * th).cos()
        }
    }

    #[test]
    fn cylinder_values() {
        let x = CylinderSolution::new(0.0, 1.0).unwrap();
        assert_eq!(x.value(0.0).unwrap(), 0.0);
        assert_eq!(x.derivative(0.0).unwrap(), 0.0);
        assert!((x.second_derivative(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((x.value(0.6).unwrap() - 0.2).abs() < 1e-15);
        assert!(x.value(1.0).is_err());
        let (a, b) = (CylinderSolution::new(2.0, 0.5).unwrap(), CylinderSolution::new(0.0, 0.5).unwrap());
        for s in [-1.5, -0.3, 0.0, 0.9, 1.9] {
            assert!((a.value(s).unwrap() - 2.0 - b.value(s).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn cylinder_ode() {
        // X'' = H (1 + X'²)^{3/2}, with X' checked by central differences
        let x = CylinderSolution::new(0.3, 0.7).unwrap();
        for s in [-1.2, -0.4, 0.0, 0.5, 1.3] {
            let d = x.derivative(s).unwrap();
            let e = 1e-6;
            let fd = (x.value(s + e).unwrap() - x.value(s - e).unwrap()) / (2.0 * e);
            assert!((fd - d).abs() < 1e-7);
            let lhs = x.second_derivative(s).unwrap();
            assert!((lhs - 0.7 * (1.0 + d * d).powf(1.5)).abs() < 1e-12 * lhs.max(1.0));
        }
    }

    #[test]
    fn quadratic_examples() {
        assert_eq!(QuadraticModel::new(0.0, 1.0, 1.0).value([1.0, 1.0]), 1.0);
        assert_eq!(QuadraticModel::new(0.3, 0.8, 0.0).laplacian(), 0.8);
        // equals the t = 0 Robin disk solution 0.2ρ² − 0.6
        let q = QuadraticModel::new(-0.6, 0.4, 0.4);
        let v = RadialPoisson::robin(2, 0.8, 1.0, 1.0);
        for p in [[0.0, 0.0], [0.3, -0.4], [0.7, 0.1]] {
            assert!((q.value(p) - v.value(p[0].hypot(p[1]))).abs() < 1e-15);
        }
    }

    #[test]
    fn difference_with_self_is_zero() {
        let mesh = disk(0.2);
        let f = ScalarField::from_fn(&mesh, |p| p[0].sin() + p[1]);
        let d = difference_field(&f, |p| Ok(p[0].sin() + p[1])).unwrap();
        assert!(!d.is_clipped());
        assert_eq!(d.field().max_abs(), 0.0);
    }

    #[test]
    fn difference_clips_to_strip() {
        let mesh = disk(0.1);
        let f = ScalarField::zeros(&mesh);
        let cyl = CylinderSolution::new(0.0, 1.6).unwrap();
        let d = difference_field(&f, cyl.surface([0.0, 0.0], [1.0, 0.0])).unwrap();
        let DifferenceField::Clipped(c) = d else { panic!("expected clipping") };
        assert!(c.dropped_vertices > 0);
        assert!(c.mesh.vertices.iter().all(|p| p[0].abs() < 1.0 / 1.6));
    }

    #[test]
    fn linear_nodal_line() {
        let mesh = disk(0.1);
        let f = ScalarField::from_fn(&mesh, |p| p[0]);
        let set = trace_nodal_set(&f).unwrap();
        assert_eq!(set.arcs.len(), 1);
        assert!(set.junction.is_none());
        let arc = &set.arcs[0];
        assert!(arc.ends.iter().all(|e| matches!(e, ArcEnd::Boundary { .. })));
        // Hausdorff distance to the vertical diameter
        assert!(arc.points.iter().all(|p| p[0].abs() <= mesh.h));
        for k in 0..=20 {
            let y = -1.0 + 0.1 * k as f64;
            let d = arc.points.iter().map(|p| dist(*p, [0.0, y])).fold(f64::INFINITY, f64::min);
            assert!(d <= mesh.h, "gap {d} at y = {y}");
        }
    }

    #[test]
    fn cubic_nodal_rays() {
        let mesh = disk(0.05);
        let f = ScalarField::from_fn(&mesh, re_z(3));
        let set = trace_nodal_set(&f).unwrap();
        let j = set.junction.unwrap();
        assert!(norm(j) <= mesh.h);
        assert_eq!(set.arcs.len(), 6);
        for a in &set.arcs {
            let kinds: Vec<_> = a.ends.to_vec();
            assert!(kinds.contains(&ArcEnd::Junction));
            assert!(kinds.iter().any(|e| matches!(e, ArcEnd::Boundary { .. })));
        }
    }

    #[test]
    fn saddle_nodal_rays() {
        let mesh = disk(0.05);
        let f = ScalarField::from_fn(&mesh, |p| p[0] * p[0] - p[1] * p[1]);
        let set = trace_nodal_set(&f).unwrap();
        assert!(norm(set.junction.unwrap()) <= mesh.h);
        assert_eq!(set.arcs.len(), 4);
    }

    #[test]
    fn closed_level_set() {
        let mesh = disk(0.1);
        let f = ScalarField::from_fn(&mesh, |p| p[0] * p[0] + p[1] * p[1] - 0.25);
        let set = trace_nodal_set(&f).unwrap();
        assert_eq!(set.arcs.len(), 1);
        assert!(set.arcs[0].closed);
        assert!((set.arcs[0].length() - std::f64::consts::PI).abs() < 0.02);
    }

    #[test]
    fn harmonic_sectors_and_orders() {
        let mesh = disk(0.05);
        for k in 2..=4 {
            let f = ScalarField::from_fn(&mesh, re_z(k));
            assert_eq!(sector_count(&f, [0.0, 0.0], 0.5).unwrap(), 2 * k as usize);
            let [a, b] = default_fit_window(&mesh, [0.0, 0.0]);
            let fit = leading_order_fit(&f, [0.0, 0.0], a, b).unwrap();
            assert!((fit.k - k as f64).abs() <= 0.15, "k = {} for degree {k}", fit.k);
        }
    }

    #[test]
    fn bowl_order_two() {
        let mesh = disk(0.05);
        let f = ScalarField::from_fn(&mesh, |p| p[0] * p[0] + p[1] * p[1]);
        let fit = leading_order_fit(&f, [0.0, 0.0], 0.2, 0.45).unwrap();
        assert!((fit.k - 2.0).abs() <= 0.1);
        assert!((fit.amplitude - 1.0).abs() < 0.1);
        assert_eq!(sector_count(&f, [0.0, 0.0], 0.5).unwrap(), 0);
    }

    #[test]
    fn fit_errors() {
        let mesh = disk(0.05);
        let f = ScalarField::from_fn(&mesh, |p| p[0]);
        assert!(matches!(
            leading_order_fit(&f, [0.0, 0.0], 0.01, 0.3),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            leading_order_fit(&f, [0.5, 0.0], 0.2, 0.6),
            Err(Error::OutOfDomain { .. })
        ));
        let g = ScalarField::from_fn(&mesh, |p| if p[0].hypot(p[1]) < 0.6 { 0.0 } else { 1.0 });
        assert!(matches!(
            leading_order_fit(&g, [0.0, 0.0], 0.2, 0.4),
            Err(Error::UnderflowFit { .. })
        ));
        assert!(sector_count(&f, [0.0, 0.0], 0.1).is_err());
    }

    #[test]
    fn radial_minus_cylinder_is_saddle_contact() {
        let mesh = disk(0.05);
        let u = RadialSolution::new(2, 0.8, -0.6);
        let f = ScalarField::from_fn(&mesh, |p| u.value(p[0].hypot(p[1])).unwrap());
        let cyl = CylinderSolution::new(-0.6, 0.8).unwrap();
        let d = difference_field(&f, cyl.surface([0.0, 0.0], [1.0, 0.0])).unwrap();
        let d = d.field();
        assert_eq!(sector_count(&d, [0.0, 0.0], 0.3).unwrap(), 4);
        let [a, b] = default_fit_window(&mesh, [0.0, 0.0]);
        let fit = leading_order_fit(&d, [0.0, 0.0], a, b).unwrap();
        assert!(fit.k <= 2.5, "k = {}", fit.k);
        assert!(!is_degenerate_contact(4, fit.k));
    }

    #[test]
    fn radial_minus_quadratic_model_is_quartic() {
        // u0 + Hρ²/4 + H³ρ⁴/64 + …, so removing the quadratic leaves order four
        let mesh = disk(0.05);
        let u = RadialSolution::new(2, 0.8, -0.6);
        let f = ScalarField::from_fn(&mesh, |p| u.value(p[0].hypot(p[1])).unwrap());
        let q = QuadraticModel::new(-0.6, 0.4, 0.4);
        let d = difference_field(&f, |p| Ok(q.value(p))).unwrap();
        let fit = leading_order_fit(&d.field(), [0.0, 0.0], 0.2, 0.5).unwrap();
        assert!(fit.k >= 2.5, "k = {}", fit.k);
        assert!((fit.k - 4.0).abs() < 0.3, "k = {}", fit.k);
    }
}
