//! Piecewise-linear finite element discretization of
//! div(∇u/√(1+t²|∇u|²)) = H with Neumann or Robin conormal boundary flux.
//!
//! Integrals carry the weight r^{n−2} with r = x₁, which is identically one for
//! n = 2 and turns the same assembly into the meridian form of an axisymmetric
//! problem in n ≥ 3 dimensions. Edges marked as axis edges carry no flux.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, EdgeKind, Point, TriMesh};
use crate::sparse::SparseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// ∂u/∂n = c.
    Neumann { c: f64 },
    /// ∂u/∂n + αu = 0.
    Robin { alpha: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    /// Prescribed mean curvature H.
    pub mean_curvature: f64,
    pub bc: BoundaryCondition,
    /// Homotopy parameter: t = 0 is the Poisson problem, t = 1 the mean curvature problem.
    pub t: f64,
    pub n_dim: usize,
}

impl ProblemSpec {
    pub fn new(mean_curvature: f64, bc: BoundaryCondition) -> Result<Self> {
        let spec = Self {
            mean_curvature,
            bc,
            t: 1.0,
            n_dim: 2,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn robin(mean_curvature: f64, alpha: f64) -> Result<Self> {
        Self::new(mean_curvature, BoundaryCondition::Robin { alpha })
    }

    pub fn neumann(mean_curvature: f64, c: f64) -> Result<Self> {
        Self::new(mean_curvature, BoundaryCondition::Neumann { c })
    }

    pub fn with_t(self, t: f64) -> Self {
        Self { t, ..self }
    }

    pub fn with_n_dim(self, n_dim: usize) -> Self {
        Self { n_dim, ..self }
    }

    pub fn is_neumann(&self) -> bool {
        matches!(self.bc, BoundaryCondition::Neumann { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.mean_curvature > 0.0 && self.mean_curvature.is_finite()) {
            return bad(format!("H must be positive, got {}", self.mean_curvature));
        }
        match self.bc {
            BoundaryCondition::Neumann { c } if !(c > 0.0 && c.is_finite()) => {
                return bad(format!("neumann c must be positive, got {c}"))
            }
            BoundaryCondition::Robin { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                return bad(format!("robin alpha must be positive, got {alpha}"))
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.t) {
            return bad(format!("t must lie in [0, 1], got {}", self.t));
        }
        if self.n_dim < 2 {
            return bad(format!("dimension must be at least 2, got {}", self.n_dim));
        }
        Ok(())
    }
}

/// Per-vertex values of a piecewise-linear function on a mesh.
#[derive(Clone, Debug)]
pub struct ScalarField<'m> {
    pub mesh: &'m TriMesh,
    pub values: Vec<f64>,
}

impl<'m> ScalarField<'m> {
    pub fn new(mesh: &'m TriMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::InvalidParameter(format!(
                "field has {} values for {} vertices",
                values.len(),
                mesh.n_vertices()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("field value at vertex {i} is not finite")));
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: &'m TriMesh) -> Self {
        Self {
            mesh,
            values: vec![0.0; mesh.n_vertices()],
        }
    }

    /// Interpolates a function at the mesh vertices.
    pub fn from_fn(mesh: &'m TriMesh, f: impl Fn(Point) -> f64) -> Self {
        Self {
            mesh,
            values: mesh.vertices.iter().map(|&p| f(p)).collect(),
        }
    }

    pub fn eval(&self, p: Point) -> Option<f64> {
        self.mesh.interpolate(&self.values, p)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

const GAUSS2: [(f64, f64); 2] = [
    (0.211_324_865_405_187_1, 0.5),
    (0.788_675_134_594_812_9, 0.5),
];

#[derive(Clone, Debug)]
struct EdgeQuad {
    v: [usize; 2],
    length: f64,
    /// (position along the edge from v[0], weight including length and r^{n−2})
    points: [(f64, f64); 2],
}

/// Assembled geometric data of the discretization for one mesh and dimension.
#[derive(Clone, Debug)]
pub struct Discretization<'m> {
    pub mesh: &'m TriMesh,
    pub n_dim: usize,
    hat: Vec<[Point; 3]>,
    cell_weight: Vec<f64>,
    load: Vec<f64>,
    boundary_weight: Vec<f64>,
    edges: Vec<EdgeQuad>,
}

fn weight(p: Point, n_dim: usize) -> f64 {
    match n_dim {
        2 => 1.0,
        n => p[0].max(0.0).powi(n as i32 - 2),
    }
}

impl<'m> Discretization<'m> {
    pub fn new(mesh: &'m TriMesh, n_dim: usize) -> Self {
        let nv = mesh.n_vertices();
        let mut hat = Vec::with_capacity(mesh.cells.len());
        let mut cell_weight = Vec::with_capacity(mesh.cells.len());
        let mut load = vec![0.0; nv];
        for (c, cell) in mesh.cells.iter().enumerate() {
            hat.push(mesh.hat_gradients(c));
            let area = mesh.cell_area(c);
            let p = cell.map(|v| mesh.vertices[v]);
            // edge-midpoint rule: exact for weights of degree ≤ 2
            let mids: [Point; 3] = std::array::from_fn(|i| {
                let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
                [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
            });
            let wm = mids.map(|m| weight(m, n_dim));
            cell_weight.push(area * (wm[0] + wm[1] + wm[2]) / 3.0);
            for i in 0..3 {
                // φ_i is ½ at the two midpoints on its edges and 0 at the opposite one
                let s = 0.5 * (wm[(i + 1) % 3] + wm[(i + 2) % 3]);
                load[cell[i]] += area * s / 3.0;
            }
        }
        let mut boundary_weight = vec![0.0; nv];
        let mut edges = Vec::new();
        for e in &mesh.boundary_edges {
            if e.kind == EdgeKind::Axis {
                continue;
            }
            let (a, b) = (mesh.vertices[e.v[0]], mesh.vertices[e.v[1]]);
            let points = GAUSS2.map(|(s, w)| {
                let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                (s, w * e.length * weight(x, n_dim))
            });
            for &(s, w) in &points {
                boundary_weight[e.v[0]] += w * (1.0 - s);
                boundary_weight[e.v[1]] += w * s;
            }
            edges.push(EdgeQuad {
                v: e.v,
                length: e.length,
                points,
            });
        }
        Self {
            mesh,
            n_dim,
            hat,
            cell_weight,
            load,
            boundary_weight,
            edges,
        }
    }

    /// ∫ φ_i r^{n−2} dx for every vertex (lumped mass).
    pub fn mass(&self) -> &[f64] {
        &self.load
    }

    /// ∮ φ_i r^{n−2} ds over the flux-carrying boundary.
    pub fn boundary_weights(&self) -> &[f64] {
        &self.boundary_weight
    }

    /// Weighted measure of the domain, Σ_i ∫ φ_i r^{n−2}.
    pub fn measure(&self) -> f64 {
        self.load.iter().sum()
    }

    /// Weighted measure of the flux-carrying boundary.
    pub fn boundary_measure(&self) -> f64 {
        self.boundary_weight.iter().sum()
    }

    pub fn cell_weights(&self) -> &[f64] {
        &self.cell_weight
    }

    fn gradient(&self, values: &[f64], c: usize) -> Point {
        let cell = self.mesh.cells[c];
        let g = &self.hat[c];
        let mut out = [0.0; 2];
        for i in 0..3 {
            out[0] += g[i][0] * values[cell[i]];
            out[1] += g[i][1] * values[cell[i]];
        }
        out
    }

    /// Weighted integral of the conormal flux g over the boundary, ∮ g r^{n−2} ds.
    pub fn total_flux(&self, values: &[f64], spec: &ProblemSpec) -> f64 {
        let mut total = 0.0;
        for e in &self.edges {
            let tau = (values[e.v[1]] - values[e.v[0]]) / e.length;
            for &(s, w) in &e.points {
                let u = (1.0 - s) * values[e.v[0]] + s * values[e.v[1]];
                total += w * flux(spec, u, tau).value;
            }
        }
        total
    }

    pub fn residual(&self, values: &[f64], spec: &ProblemSpec) -> Vec<f64> {
        let t2 = spec.t * spec.t;
        let mut r: Vec<f64> = self.load.iter().map(|m| spec.mean_curvature * m).collect();
        for (c, cell) in self.mesh.cells.iter().enumerate() {
            let g = self.gradient(values, c);
            let q = 1.0 + t2 * (g[0] * g[0] + g[1] * g[1]);
            let f = self.cell_weight[c] / q.sqrt();
            for i in 0..3 {
                let h = self.hat[c][i];
                r[cell[i]] += f * (g[0] * h[0] + g[1] * h[1]);
            }
        }
        for e in &self.edges {
            let tau = (values[e.v[1]] - values[e.v[0]]) / e.length;
            for &(s, w) in &e.points {
                let u = (1.0 - s) * values[e.v[0]] + s * values[e.v[1]];
                let g = flux(spec, u, tau).value;
                r[e.v[0]] -= w * g * (1.0 - s);
                r[e.v[1]] -= w * g * s;
            }
        }
        r
    }

    /// Sparsity pattern of the Jacobian: vertex adjacency plus the diagonal.
    pub fn pattern(&self) -> SparseMatrix {
        let mesh = self.mesh;
        SparseMatrix::with_pattern(
            mesh.n_vertices(),
            (0..mesh.n_vertices()).map(|v| mesh.vertex_neighbors(v).to_vec()),
        )
    }

    pub fn jacobian(&self, values: &[f64], spec: &ProblemSpec) -> SparseMatrix {
        let t2 = spec.t * spec.t;
        let mut jac = self.pattern();
        for (c, cell) in self.mesh.cells.iter().enumerate() {
            let g = self.gradient(values, c);
            let q = 1.0 + t2 * (g[0] * g[0] + g[1] * g[1]);
            let isq = 1.0 / q.sqrt();
            // dT/dG = q^{-1/2} (I − t² G Gᵀ / q)
            let a = [
                [isq * (1.0 - t2 * g[0] * g[0] / q), -isq * t2 * g[0] * g[1] / q],
                [-isq * t2 * g[0] * g[1] / q, isq * (1.0 - t2 * g[1] * g[1] / q)],
            ];
            let w = self.cell_weight[c];
            for i in 0..3 {
                let hi = self.hat[c][i];
                for j in 0..3 {
                    let hj = self.hat[c][j];
                    let v = hi[0] * (a[0][0] * hj[0] + a[0][1] * hj[1])
                        + hi[1] * (a[1][0] * hj[0] + a[1][1] * hj[1]);
                    jac.add(cell[i], cell[j], w * v);
                }
            }
        }
        for e in &self.edges {
            let tau = (values[e.v[1]] - values[e.v[0]]) / e.length;
            let dtau = [-1.0 / e.length, 1.0 / e.length];
            for &(s, w) in &e.points {
                let u = (1.0 - s) * values[e.v[0]] + s * values[e.v[1]];
                let fl = flux(spec, u, tau);
                let phi = [1.0 - s, s];
                for i in 0..2 {
                    for j in 0..2 {
                        let d = fl.d_u * phi[j] + fl.d_tau * dtau[j];
                        jac.add(e.v[i], e.v[j], -w * phi[i] * d);
                    }
                }
            }
        }
        jac
    }

    /// Smallest and largest eigenvalue of the cell coefficient matrix
    /// q^{-1/2}(I − t²GGᵀ/q) over all cells.
    pub fn ellipticity_range(&self, values: &[f64], spec: &ProblemSpec) -> (f64, f64) {
        let t2 = spec.t * spec.t;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for c in 0..self.mesh.cells.len() {
            let g = self.gradient(values, c);
            let q = 1.0 + t2 * (g[0] * g[0] + g[1] * g[1]);
            lo = lo.min(q.powf(-1.5));
            hi = hi.max(q.powf(-0.5));
        }
        (lo, hi)
    }
}

/// Conormal flux g = n·T_t(∇u) at a boundary point together with its partial derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Flux {
    pub value: f64,
    pub d_u: f64,
    pub d_tau: f64,
}

/// Conormal flux for boundary value `u` and tangential derivative `tau`.
///
/// The normal derivative is fixed by the boundary condition (c, or −αu), so
/// |∇u|² on the boundary is (∂u/∂n)² + τ².
pub fn flux(spec: &ProblemSpec, u: f64, tau: f64) -> Flux {
    let t2 = spec.t * spec.t;
    match spec.bc {
        BoundaryCondition::Neumann { c } => {
            let q = 1.0 + t2 * (c * c + tau * tau);
            Flux {
                value: c / q.sqrt(),
                d_u: 0.0,
                d_tau: -c * t2 * tau * q.powf(-1.5),
            }
        }
        BoundaryCondition::Robin { alpha } => {
            let un = -alpha * u;
            let q = 1.0 + t2 * (un * un + tau * tau);
            Flux {
                value: un / q.sqrt(),
                d_u: -alpha * (1.0 + t2 * tau * tau) * q.powf(-1.5),
                d_tau: alpha * u * t2 * tau * q.powf(-1.5),
            }
        }
    }
}

/// Discrete residual vector of `field` for `spec`.
pub fn residual(field: &ScalarField<'_>, spec: &ProblemSpec) -> Vec<f64> {
    Discretization::new(field.mesh, spec.n_dim).residual(&field.values, spec)
}

/// Exact Jacobian of [`residual`] at `field`.
pub fn jacobian(field: &ScalarField<'_>, spec: &ProblemSpec) -> SparseMatrix {
    Discretization::new(field.mesh, spec.n_dim).jacobian(&field.values, spec)
}

/// Conormal flux on a boundary edge at its two Gauss points.
pub fn boundary_flux(field: &ScalarField<'_>, spec: &ProblemSpec, edge: usize) -> [f64; 2] {
    let e = &field.mesh.boundary_edges[edge];
    let (ua, ub) = (field.values[e.v[0]], field.values[e.v[1]]);
    let tau = (ub - ua) / e.length;
    GAUSS2.map(|(s, _)| flux(spec, (1.0 - s) * ua + s * ub, tau).value)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibilityStatus {
    Feasible,
    /// Within 1% of the bound: the necessary condition holds only marginally.
    Borderline,
    Infeasible,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub status: FeasibilityStatus,
    /// bound − demand.
    pub margin: f64,
    /// H |Ω|.
    pub demand: f64,
    /// c/√(1+t²c²) · |∂Ω|, the largest total conormal flux the data allow.
    pub bound: f64,
}

impl Feasibility {
    pub fn feasible(&self) -> bool {
        self.status == FeasibilityStatus::Feasible
    }

    /// Classifies the divergence-theorem condition H·|Ω| ≤ c/√(1+t²c²)·|∂Ω|.
    pub fn from_measures(spec: &ProblemSpec, volume: f64, surface: f64) -> Option<Self> {
        let c = match spec.bc {
            BoundaryCondition::Neumann { c } => c,
            BoundaryCondition::Robin { .. } => return None,
        };
        let demand = spec.mean_curvature * volume;
        let bound = c / (1.0 + spec.t * spec.t * c * c).sqrt() * surface;
        let margin = bound - demand;
        let tol = 1e-2 * bound;
        let status = if margin > tol {
            FeasibilityStatus::Feasible
        } else if margin >= -tol {
            FeasibilityStatus::Borderline
        } else {
            FeasibilityStatus::Infeasible
        };
        Some(Self {
            status,
            margin,
            demand,
            bound,
        })
    }
}

/// Necessary solvability condition for Neumann data on a planar domain.
/// Returns `None` for Robin problems, which need no such check.
pub fn neumann_feasibility(domain: &ConvexDomain, spec: &ProblemSpec) -> Option<Feasibility> {
    Feasibility::from_measures(spec, domain.area(), domain.length())
}
