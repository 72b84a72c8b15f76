use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::delaunay::{Triangulation, NONE};
use super::{add, dist, dot, norm, orient, scale, segment_distance, sub, ConvexDomain, Point};
use crate::error::{Error, Result};

const MIN_ANGLE_DEG: f64 = 20.0;
const MAX_SMOOTHING_PASSES: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    /// Part of the physical boundary, carrying the Neumann or Robin flux.
    Outer,
    /// Lies on the symmetry axis of a meridian mesh; carries no flux.
    Axis,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    /// Endpoints in counterclockwise traversal order (domain on the left).
    pub v: [usize; 2],
    pub normal: Point,
    pub length: f64,
    pub kind: EdgeKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellLocation {
    pub cell: usize,
    pub bary: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshQuality {
    pub n_vertices: usize,
    pub n_cells: usize,
    pub h: f64,
    pub min_angle_deg: f64,
    pub max_angle_deg: f64,
    pub min_cell_area: f64,
    pub total_area: f64,
    pub boundary_length: f64,
}

#[derive(Clone, Debug)]
struct Locator {
    origin: Point,
    cell_size: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

/// Conforming triangulation with counterclockwise cells and an ordered boundary loop.
#[derive(Clone, Debug)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    pub cells: Vec<[usize; 3]>,
    /// Boundary edges in loop order.
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Longest edge length.
    pub h: f64,
    on_boundary: Vec<bool>,
    neighbors: Vec<Vec<usize>>,
    vertex_cells: Vec<Vec<usize>>,
    cell_adjacency: Vec<[usize; 3]>,
    locator: Locator,
}

impl TriMesh {
    /// Assembles connectivity for a vertex list and counterclockwise cells.
    pub fn new(vertices: Vec<Point>, cells: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        for (c, cell) in cells.iter().enumerate() {
            if cell.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidParameter(format!("cell {c} references a missing vertex")));
            }
            if orient(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]) <= 0.0 {
                return Err(Error::InvalidParameter(format!("cell {c} is not counterclockwise")));
            }
        }
        let mut edge_owner: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * cells.len());
        for (c, cell) in cells.iter().enumerate() {
            for i in 0..3 {
                let e = (cell[(i + 1) % 3], cell[(i + 2) % 3]);
                if edge_owner.insert(e, c).is_some() {
                    return Err(Error::InvalidParameter(format!("edge {e:?} used twice")));
                }
            }
        }
        let mut cell_adjacency = vec![[NONE; 3]; cells.len()];
        let mut next_on_boundary: HashMap<usize, usize> = HashMap::new();
        for (c, cell) in cells.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (cell[(i + 1) % 3], cell[(i + 2) % 3]);
                match edge_owner.get(&(b, a)) {
                    Some(&o) => cell_adjacency[c][i] = o,
                    None => {
                        if next_on_boundary.insert(a, b).is_some() {
                            return Err(Error::InvalidParameter(format!(
                                "boundary is not a simple loop at vertex {a}"
                            )));
                        }
                    }
                }
            }
        }
        let start = *next_on_boundary
            .keys()
            .min()
            .ok_or_else(|| Error::InvalidParameter("mesh has no boundary".into()))?;
        let mut boundary_edges = Vec::with_capacity(next_on_boundary.len());
        let mut a = start;
        loop {
            let b = next_on_boundary[&a];
            let d = sub(vertices[b], vertices[a]);
            let length = norm(d);
            boundary_edges.push(BoundaryEdge {
                v: [a, b],
                normal: [d[1] / length, -d[0] / length],
                length,
                kind: EdgeKind::Outer,
            });
            a = b;
            if a == start || boundary_edges.len() > next_on_boundary.len() {
                break;
            }
        }
        if a != start || boundary_edges.len() != next_on_boundary.len() {
            return Err(Error::InvalidParameter(
                "boundary edges do not form a single closed loop".into(),
            ));
        }
        let mut on_boundary = vec![false; nv];
        for e in &boundary_edges {
            on_boundary[e.v[0]] = true;
            on_boundary[e.v[1]] = true;
        }
        let mut neighbors = vec![Vec::new(); nv];
        let mut vertex_cells = vec![Vec::new(); nv];
        let mut h = 0.0f64;
        for (c, cell) in cells.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (cell[i], cell[(i + 1) % 3]);
                neighbors[a].push(b);
                neighbors[b].push(a);
                vertex_cells[cell[i]].push(c);
                h = h.max(dist(vertices[a], vertices[b]));
            }
        }
        for n in neighbors.iter_mut() {
            n.sort_unstable();
            n.dedup();
        }
        let locator = Locator::build(&vertices, &cells);
        Ok(Self {
            vertices,
            cells,
            boundary_edges,
            h,
            on_boundary,
            neighbors,
            vertex_cells,
            cell_adjacency,
            locator,
        })
    }

    /// Reassigns boundary edge kinds with a predicate on the edge endpoints.
    pub fn with_edge_kinds(mut self, kind: impl Fn(Point, Point) -> EdgeKind) -> Self {
        for e in self.boundary_edges.iter_mut() {
            e.kind = kind(self.vertices[e.v[0]], self.vertices[e.v[1]]);
        }
        self
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.on_boundary[v]
    }

    pub fn vertex_neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn vertex_cells(&self, v: usize) -> &[usize] {
        &self.vertex_cells[v]
    }

    /// Cells across the edges opposite each vertex of `c`, `None` on the boundary.
    pub fn cell_neighbors(&self, c: usize) -> [Option<usize>; 3] {
        self.cell_adjacency[c].map(|o| (o != NONE).then_some(o))
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        let [a, b, d] = self.cells[c];
        0.5 * orient(self.vertices[a], self.vertices[b], self.vertices[d])
    }

    pub fn cell_centroid(&self, c: usize) -> Point {
        let [a, b, d] = self.cells[c].map(|v| self.vertices[v]);
        [(a[0] + b[0] + d[0]) / 3.0, (a[1] + b[1] + d[1]) / 3.0]
    }

    /// Gradients of the three hat functions of cell `c`, in cell vertex order.
    pub fn hat_gradients(&self, c: usize) -> [Point; 3] {
        let p = self.cells[c].map(|v| self.vertices[v]);
        let two_a = orient(p[0], p[1], p[2]);
        std::array::from_fn(|i| {
            let (b, d) = (p[(i + 1) % 3], p[(i + 2) % 3]);
            [(b[1] - d[1]) / two_a, (d[0] - b[0]) / two_a]
        })
    }

    /// Constant gradient of the piecewise-linear interpolant of `values` on cell `c`.
    pub fn cell_gradient(&self, values: &[f64], c: usize) -> Point {
        let g = self.hat_gradients(c);
        let cell = self.cells[c];
        let mut out = [0.0; 2];
        for i in 0..3 {
            out = add(out, scale(g[i], values[cell[i]]));
        }
        out
    }

    /// Interior angles of cell `c` in degrees.
    pub fn cell_angles(&self, c: usize) -> [f64; 3] {
        let p = self.cells[c].map(|v| self.vertices[v]);
        triangle_angles(p[0], p[1], p[2])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.cells.len()).map(|c| self.cell_area(c)).sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_edges.iter().map(|e| e.length).sum()
    }

    /// Boundary vertices in loop order.
    pub fn boundary_loop(&self) -> Vec<usize> {
        self.boundary_edges.iter().map(|e| e.v[0]).collect()
    }

    /// Unit outward normal at each boundary vertex in loop order, averaged from the adjacent edges.
    pub fn boundary_vertex_normals(&self) -> Vec<(usize, Point)> {
        let m = self.boundary_edges.len();
        (0..m)
            .map(|k| {
                let prev = &self.boundary_edges[(k + m - 1) % m];
                let here = &self.boundary_edges[k];
                let n = add(prev.normal, here.normal);
                (here.v[0], scale(n, 1.0 / norm(n)))
            })
            .collect()
    }

    /// Distance from `p` to the nearest boundary edge.
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        self.boundary_edges
            .iter()
            .map(|e| segment_distance(p, self.vertices[e.v[0]], self.vertices[e.v[1]]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Vertices within two edge hops of `v`, including `v`, sorted.
    pub fn two_ring(&self, v: usize) -> Vec<usize> {
        let mut out = vec![v];
        for &a in &self.neighbors[v] {
            out.push(a);
            out.extend_from_slice(&self.neighbors[a]);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Cell containing `p` with barycentric coordinates, or `None` outside the mesh.
    pub fn locate(&self, p: Point) -> Option<CellLocation> {
        let mut best: Option<CellLocation> = None;
        let mut best_min = -1e-10;
        for &c in self.locator.candidates(p) {
            let q = self.cells[c].map(|v| self.vertices[v]);
            let area = orient(q[0], q[1], q[2]);
            let bary: [f64; 3] =
                std::array::from_fn(|i| orient(q[(i + 1) % 3], q[(i + 2) % 3], p) / area);
            let m = bary.iter().cloned().fold(f64::INFINITY, f64::min);
            if m >= best_min {
                best_min = m;
                best = Some(CellLocation { cell: c, bary });
                if m >= 0.0 {
                    break;
                }
            }
        }
        best
    }

    pub fn contains(&self, p: Point) -> bool {
        self.locate(p).is_some()
    }

    /// Piecewise-linear interpolation of per-vertex `values` at `p`.
    pub fn interpolate(&self, values: &[f64], p: Point) -> Option<f64> {
        self.locate(p).map(|loc| {
            let cell = self.cells[loc.cell];
            (0..3).map(|i| loc.bary[i] * values[cell[i]]).sum()
        })
    }

    pub fn quality(&self) -> MeshQuality {
        let mut min_angle = f64::INFINITY;
        let mut max_angle = 0.0f64;
        let mut min_area = f64::INFINITY;
        for c in 0..self.cells.len() {
            for a in self.cell_angles(c) {
                min_angle = min_angle.min(a);
                max_angle = max_angle.max(a);
            }
            min_area = min_area.min(self.cell_area(c));
        }
        MeshQuality {
            n_vertices: self.vertices.len(),
            n_cells: self.cells.len(),
            h: self.h,
            min_angle_deg: min_angle,
            max_angle_deg: max_angle,
            min_cell_area: min_area,
            total_area: self.total_area(),
            boundary_length: self.boundary_length(),
        }
    }
}

impl Locator {
    fn build(vertices: &[Point], cells: &[[usize; 3]]) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-300);
        let per_side = ((cells.len() as f64).sqrt().ceil() as usize).clamp(1, 1024);
        let cell_size = span / per_side as f64 * 1.000001;
        let nx = (((hi[0] - lo[0]) / cell_size).floor() as usize + 1).max(1);
        let ny = (((hi[1] - lo[1]) / cell_size).floor() as usize + 1).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        let pad = 1e-9 * span;
        for (c, cell) in cells.iter().enumerate() {
            let (mut clo, mut chi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for &v in cell {
                for k in 0..2 {
                    clo[k] = clo[k].min(vertices[v][k]);
                    chi[k] = chi[k].max(vertices[v][k]);
                }
            }
            let ix0 = (((clo[0] - pad - lo[0]) / cell_size).floor().max(0.0) as usize).min(nx - 1);
            let ix1 = (((chi[0] + pad - lo[0]) / cell_size).floor().max(0.0) as usize).min(nx - 1);
            let iy0 = (((clo[1] - pad - lo[1]) / cell_size).floor().max(0.0) as usize).min(ny - 1);
            let iy1 = (((chi[1] + pad - lo[1]) / cell_size).floor().max(0.0) as usize).min(ny - 1);
            for iy in iy0..=iy1 {
                for ix in ix0..=ix1 {
                    buckets[iy * nx + ix].push(c);
                }
            }
        }
        Self {
            origin: lo,
            cell_size,
            nx,
            ny,
            buckets,
        }
    }

    fn candidates(&self, p: Point) -> &[usize] {
        let fx = (p[0] - self.origin[0]) / self.cell_size;
        let fy = (p[1] - self.origin[1]) / self.cell_size;
        if !(fx >= 0.0 && fy >= 0.0) || fx >= self.nx as f64 || fy >= self.ny as f64 {
            return &[];
        }
        &self.buckets[fy as usize * self.nx + fx as usize]
    }
}

fn triangle_angles(a: Point, b: Point, c: Point) -> [f64; 3] {
    let ang = |p: Point, q: Point, r: Point| {
        let u = sub(q, p);
        let v = sub(r, p);
        super::cross(u, v).abs().atan2(dot(u, v)).to_degrees()
    };
    [ang(a, b, c), ang(b, c, a), ang(c, a, b)]
}

fn min_angle_of(tri: &Triangulation, t: usize) -> f64 {
    let v = tri.tris[t].v;
    let [a, b, c] = triangle_angles(tri.pts[v[0]], tri.pts[v[1]], tri.pts[v[2]]);
    a.min(b).min(c)
}

/// Triangulates a convex domain with target edge length `h_target`.
pub fn triangulate(domain: &ConvexDomain, h_target: f64) -> Result<TriMesh> {
    triangulate_seeded(domain, h_target, 0)
}

/// Same as [`triangulate`] with an explicit seed for the interior point jitter.
pub fn triangulate_seeded(domain: &ConvexDomain, h_target: f64, seed: u64) -> Result<TriMesh> {
    let l = domain.length();
    if !(h_target > 0.0 && h_target < l / 8.0) {
        return Err(Error::InvalidParameter(format!(
            "h_target must lie in (0, L/8) = (0, {:.6}), got {h_target}",
            l / 8.0
        )));
    }
    // slightly finer than h_target on the boundary: the inscribed polygon loses O(h²) area
    let nb = (l / (0.9 * h_target)).ceil() as usize;
    let boundary = domain.boundary_points(nb);
    mesh_polygon(&boundary, h_target, seed, |p| domain.signed_distance(p))
}

/// Meshes the convex polygon `boundary` (counterclockwise) with interior points on a
/// jittered hexagonal lattice, kept where `signed_distance` is at most −h/2.
///
/// The boundary polygon is preserved exactly; its vertices come first in the
/// resulting vertex list.
pub fn mesh_polygon(
    boundary: &[Point],
    h_target: f64,
    seed: u64,
    signed_distance: impl Fn(Point) -> f64,
) -> Result<TriMesh> {
    if boundary.len() < 3 || !(h_target > 0.0) {
        return Err(Error::InvalidParameter("polygon meshing needs three points and h > 0".into()));
    }
    let nb = boundary.len();
    let mut tri = Triangulation::from_convex_polygon(boundary);

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in boundary {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dy = h_target * 3f64.sqrt() / 2.0;
    let rows = ((hi[1] - lo[1]) / dy).floor() as usize + 1;
    let cols = ((hi[0] - lo[0]) / h_target).floor() as usize + 2;
    let y0 = 0.5 * (lo[1] + hi[1]) - 0.5 * (rows - 1) as f64 * dy;
    let x0 = 0.5 * (lo[0] + hi[0]) - 0.5 * (cols - 1) as f64 * h_target;
    let jitter = 1e-2 * h_target;
    for j in 0..rows {
        let shift = if j % 2 == 1 { 0.5 * h_target } else { 0.0 };
        let y = y0 + j as f64 * dy;
        let mut row: Vec<Point> = (0..cols)
            .map(|i| [x0 + shift + i as f64 * h_target, y])
            .collect();
        if j % 2 == 1 {
            row.reverse();
        }
        for p in row {
            let q = [
                p[0] + jitter * rng.random_range(-1.0..1.0),
                p[1] + jitter * rng.random_range(-1.0..1.0),
            ];
            if signed_distance(q) <= -0.5 * h_target {
                tri.insert(q);
            }
        }
    }

    for _round in 0..4 {
        smooth(&mut tri, nb);
        let long: Vec<Point> = long_interior_edges(&tri, 1.5 * h_target);
        if long.is_empty() {
            break;
        }
        for m in long {
            tri.insert(m);
        }
    }

    let mesh = TriMesh::new(tri.pts.clone(), tri.faces())?;
    let q = mesh.quality();
    if q.min_angle_deg < MIN_ANGLE_DEG {
        return Err(Error::MeshQuality {
            reason: "minimum angle below 20 degrees after smoothing".into(),
            min_angle_deg: q.min_angle_deg,
            h: q.h,
        });
    }
    if q.h > 1.5 * h_target {
        return Err(Error::MeshQuality {
            reason: format!("longest edge exceeds 1.5 x h_target = {:.4}", 1.5 * h_target),
            min_angle_deg: q.min_angle_deg,
            h: q.h,
        });
    }
    Ok(mesh)
}

fn long_interior_edges(tri: &Triangulation, limit: f64) -> Vec<Point> {
    let mut out = Vec::new();
    for (t, tr) in tri.tris.iter().enumerate() {
        for i in 0..3 {
            let o = tr.n[i];
            if o == NONE || o < t {
                continue;
            }
            let (a, b) = (tr.v[(i + 1) % 3], tr.v[(i + 2) % 3]);
            if dist(tri.pts[a], tri.pts[b]) > limit {
                out.push(scale(add(tri.pts[a], tri.pts[b]), 0.5));
            }
        }
    }
    out
}

/// Laplacian smoothing of interior vertices alternated with Delaunay flips.
/// A move is kept only if it does not worsen the smallest angle around the vertex.
fn smooth(tri: &mut Triangulation, n_fixed: usize) {
    for pass in 0..MAX_SMOOTHING_PASSES {
        let np = tri.pts.len();
        let mut nbrs = vec![Vec::new(); np];
        let mut incident = vec![Vec::new(); np];
        for (t, tr) in tri.tris.iter().enumerate() {
            for i in 0..3 {
                nbrs[tr.v[i]].push(tr.v[(i + 1) % 3]);
                incident[tr.v[i]].push(t);
            }
        }
        for v in n_fixed..np {
            if nbrs[v].is_empty() {
                continue;
            }
            let k = nbrs[v].len() as f64;
            let target = nbrs[v]
                .iter()
                .fold([0.0, 0.0], |acc, &w| add(acc, scale(tri.pts[w], 1.0 / k)));
            let before = incident[v]
                .iter()
                .map(|&t| min_angle_of(tri, t))
                .fold(f64::INFINITY, f64::min);
            let old = tri.pts[v];
            tri.pts[v] = target;
            let valid = incident[v].iter().all(|&t| {
                let w = tri.tris[t].v;
                orient(tri.pts[w[0]], tri.pts[w[1]], tri.pts[w[2]]) > 0.0
            });
            let after = incident[v]
                .iter()
                .map(|&t| min_angle_of(tri, t))
                .fold(f64::INFINITY, f64::min);
            if !valid || after < before {
                tri.pts[v] = old;
            }
        }
        tri.make_delaunay();
        let worst = (0..tri.tris.len())
            .map(|t| min_angle_of(tri, t))
            .fold(f64::INFINITY, f64::min);
        if pass >= 1 && worst >= MIN_ANGLE_DEG + 5.0 {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn check_invariants(mesh: &TriMesh, domain: &ConvexDomain) {
        let q = mesh.quality();
        assert!(q.min_cell_area > 0.0);
        assert!(q.min_angle_deg >= 20.0, "min angle {}", q.min_angle_deg);
        assert!((q.boundary_length - domain.length()).abs() <= 2.0 * q.h);
        for w in mesh.boundary_edges.windows(2) {
            assert_eq!(w[0].v[1], w[1].v[0]);
        }
        let first = mesh.boundary_edges.first().unwrap();
        let last = mesh.boundary_edges.last().unwrap();
        assert_eq!(last.v[1], first.v[0]);
    }

    #[test]
    fn disk_mesh_invariants_and_area() {
        let d = ConvexDomain::disk(1.0).unwrap();
        let m = triangulate(&d, 0.2).unwrap();
        check_invariants(&m, &d);
        assert!(m.h <= 0.3);
        assert!((m.total_area() - PI).abs() < 0.02, "area {}", m.total_area());
    }

    #[test]
    fn vertex_count_scales_with_inverse_square() {
        let d = ConvexDomain::disk(1.0).unwrap();
        let coarse = triangulate(&d, 0.2).unwrap();
        let fine = triangulate(&d, 0.1).unwrap();
        let ratio = fine.n_vertices() as f64 / coarse.n_vertices() as f64;
        assert!((2.5..=6.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn ellipse_single_loop() {
        let e = ConvexDomain::ellipse(1.3, 0.7).unwrap();
        let m = triangulate(&e, 0.1).unwrap();
        check_invariants(&m, &e);
        assert!((m.boundary_length() - e.length()).abs() < 0.2);
    }

    #[test]
    fn rounded_polygon_meshes() {
        let sq = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
        let d = ConvexDomain::rounded_polygon(&sq, 0.5).unwrap();
        let m = triangulate(&d, 0.15).unwrap();
        check_invariants(&m, &d);
    }

    #[test]
    fn deterministic() {
        let e = ConvexDomain::ellipse(1.3, 0.7).unwrap();
        let a = triangulate(&e, 0.12).unwrap();
        let b = triangulate(&e, 0.12).unwrap();
        assert_eq!(a.vertices, b.vertices);
        assert_eq!(a.cells, b.cells);
    }

    #[test]
    fn h_target_range() {
        let d = ConvexDomain::disk(1.0).unwrap();
        assert!(triangulate(&d, 0.0).is_err());
        assert!(triangulate(&d, 1.0).is_err());
    }

    #[test]
    fn hat_gradients_reproduce_linear_functions() {
        let d = ConvexDomain::disk(1.0).unwrap();
        let m = triangulate(&d, 0.25).unwrap();
        let vals: Vec<f64> = m.vertices.iter().map(|p| 2.0 * p[0] - 3.0 * p[1] + 1.0).collect();
        for c in 0..m.cells.len() {
            let g = m.cell_gradient(&vals, c);
            assert!((g[0] - 2.0).abs() < 1e-10 && (g[1] + 3.0).abs() < 1e-10);
        }
        let p = [0.123, -0.31];
        let v = m.interpolate(&vals, p).unwrap();
        assert!((v - (2.0 * p[0] - 3.0 * p[1] + 1.0)).abs() < 1e-12);
        assert!(m.interpolate(&vals, [1.5, 0.0]).is_none());
    }

    #[test]
    fn boundary_normals_point_outward() {
        let d = ConvexDomain::disk(1.0).unwrap();
        let m = triangulate(&d, 0.2).unwrap();
        for e in &m.boundary_edges {
            let mid = scale(add(m.vertices[e.v[0]], m.vertices[e.v[1]]), 0.5);
            assert!(dot(e.normal, mid) > 0.0);
        }
        for (v, n) in m.boundary_vertex_normals() {
            assert!(m.is_boundary_vertex(v));
            assert!(dot(n, m.vertices[v]) > 0.99);
        }
    }
}
