use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::{add, cross, dist, dot, norm, scale, sub, Point};
use crate::error::{Error, Result};

/// Number of arc-length samples stored in the boundary table.
const TABLE_SIZE: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainKind {
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
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    /// Curvature is continuous and strictly positive.
    Smooth,
    /// Tangent is continuous but curvature jumps (straight pieces joined by arcs).
    C11,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySample {
    pub pos: Point,
    pub tangent: Point,
    pub curvature: f64,
}

/// A bounded convex planar region described by its arc-length parametrized boundary.
///
/// The boundary is traversed counterclockwise. Positions, unit tangents and
/// curvature are tabulated at uniform arc-length spacing and interpolated
/// with periodic cubic Hermite splines in between.
#[derive(Clone, Debug)]
pub struct ConvexDomain {
    kind: DomainKind,
    length: f64,
    area: f64,
    centroid: Point,
    samples: Vec<BoundarySample>,
    smoothness: Smoothness,
    warnings: Vec<String>,
}

impl ConvexDomain {
    pub fn from_kind(kind: &DomainKind) -> Result<Self> {
        match kind {
            DomainKind::Disk { radius } => Self::disk(*radius),
            DomainKind::Ellipse { a, b } => Self::ellipse(*a, *b),
            DomainKind::RoundedPolygon { vertices, radius } => {
                Self::rounded_polygon(vertices, *radius)
            }
        }
    }

    /// Disk of radius `radius` centered at the origin.
    pub fn disk(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "disk radius must be positive, got {radius}"
            )));
        }
        let length = TAU * radius;
        let samples = (0..TABLE_SIZE)
            .map(|k| {
                let th = TAU * k as f64 / TABLE_SIZE as f64;
                let (s, c) = th.sin_cos();
                BoundarySample {
                    pos: [radius * c, radius * s],
                    tangent: [-s, c],
                    curvature: 1.0 / radius,
                }
            })
            .collect();
        Ok(Self::assemble(
            DomainKind::Disk { radius },
            length,
            PI * radius * radius,
            samples,
            Smoothness::Smooth,
        ))
    }

    /// Ellipse with semi-axes `a` (along x₁) and `b` (along x₂), reparametrized by arc length.
    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ellipse semi-axes must be positive, got a = {a}, b = {b}"
            )));
        }
        let speed = |th: f64| (a * a * th.sin().powi(2) + b * b * th.cos().powi(2)).sqrt();
        let length: f64 = (0..4)
            .map(|q| {
                let lo = q as f64 * PI / 2.0;
                adaptive_simpson(&speed, lo, lo + PI / 2.0, 1e-14)
            })
            .sum();

        // cumulative arc length on a uniform parameter grid
        let panels = TABLE_SIZE;
        let dth = TAU / panels as f64;
        let mut cumulative = Vec::with_capacity(panels + 1);
        cumulative.push(0.0);
        for j in 0..panels {
            let lo = j as f64 * dth;
            let last = cumulative[j];
            cumulative.push(last + gauss_legendre(&speed, lo, lo + dth));
        }
        // rescale the grid sum onto the adaptive length; they agree to roundoff
        let grid_total = cumulative[panels];
        for c in cumulative.iter_mut() {
            *c *= length / grid_total;
        }

        let samples = (0..TABLE_SIZE)
            .map(|k| {
                let target = length * k as f64 / TABLE_SIZE as f64;
                let j = match cumulative.binary_search_by(|c| c.total_cmp(&target)) {
                    Ok(j) => j.min(panels - 1),
                    Err(j) => j.saturating_sub(1).min(panels - 1),
                };
                let lo = j as f64 * dth;
                let mut th = lo + dth * (target - cumulative[j]) / (cumulative[j + 1] - cumulative[j]);
                for _ in 0..8 {
                    let s_th = cumulative[j] + gauss_legendre(&speed, lo, th) * length / grid_total;
                    let step = (s_th - target) / speed(th);
                    th -= step;
                    if step.abs() < 1e-15 {
                        break;
                    }
                }
                let (sn, cs) = th.sin_cos();
                let sp = speed(th);
                BoundarySample {
                    pos: [a * cs, b * sn],
                    tangent: [-a * sn / sp, b * cs / sp],
                    curvature: a * b / sp.powi(3),
                }
            })
            .collect();
        Ok(Self::assemble(
            DomainKind::Ellipse { a, b },
            length,
            PI * a * b,
            samples,
            Smoothness::Smooth,
        ))
    }

    /// Convex polygon with every corner replaced by a tangent circular arc of radius `radius`.
    ///
    /// Vertices must be strictly convex and counterclockwise. The resulting
    /// boundary is only C^{1,1}; the domain carries a warning to that effect.
    pub fn rounded_polygon(vertices: &[Point], radius: f64) -> Result<Self> {
        let m = vertices.len();
        if m < 3 {
            return Err(Error::InvalidParameter(
                "rounded polygon needs at least three vertices".into(),
            ));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rounding radius must be positive, got {radius}"
            )));
        }
        let edge = |i: usize| sub(vertices[(i + 1) % m], vertices[i]);
        let mut turning = Vec::with_capacity(m);
        for i in 0..m {
            let d_in = edge((i + m - 1) % m);
            let d_out = edge(i);
            if norm(d_in) == 0.0 || norm(d_out) == 0.0 {
                return Err(Error::InvalidParameter("repeated polygon vertex".into()));
            }
            let c = cross(d_in, d_out);
            if c <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "polygon is not strictly convex counterclockwise at vertex {i}"
                )));
            }
            turning.push(c.atan2(dot(d_in, d_out)));
        }
        let total: f64 = turning.iter().sum();
        if (total - TAU).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "polygon winds {:.6} turns, expected one",
                total / TAU
            )));
        }
        let shortest = (0..m).map(|i| norm(edge(i))).fold(f64::INFINITY, f64::min);
        if radius >= 0.5 * shortest {
            return Err(Error::InvalidParameter(format!(
                "rounding radius {radius} must be below half the shortest edge {shortest}"
            )));
        }
        let setback: Vec<f64> = turning.iter().map(|phi| radius * (phi / 2.0).tan()).collect();

        let mut pieces = Vec::with_capacity(2 * m);
        for i in 0..m {
            let j = (i + 1) % m;
            let e = edge(i);
            let len = norm(e);
            let dir = scale(e, 1.0 / len);
            let straight = len - setback[i] - setback[j];
            if straight <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "rounding radius {radius} consumes edge {i} entirely"
                )));
            }
            pieces.push(Piece::Segment {
                start: add(vertices[i], scale(dir, setback[i])),
                dir,
                len: straight,
            });
            // arc at vertex j, starting where the straight part ends
            let arc_start = sub(vertices[j], scale(dir, setback[j]));
            let center = add(arc_start, scale([-dir[1], dir[0]], radius));
            let start_angle = (arc_start[1] - center[1]).atan2(arc_start[0] - center[0]);
            pieces.push(Piece::Arc {
                center,
                radius,
                start_angle,
                sweep: turning[j],
            });
        }
        let length: f64 = pieces.iter().map(Piece::length).sum();
        let area: f64 = pieces.iter().map(Piece::green_area).sum();

        let mut offsets = Vec::with_capacity(pieces.len());
        let mut acc = 0.0;
        for p in &pieces {
            offsets.push(acc);
            acc += p.length();
        }
        let samples = (0..TABLE_SIZE)
            .map(|k| {
                let s = length * k as f64 / TABLE_SIZE as f64;
                let idx = match offsets.binary_search_by(|o| o.total_cmp(&s)) {
                    Ok(i) => i,
                    Err(i) => i - 1,
                };
                pieces[idx].eval(s - offsets[idx])
            })
            .collect();
        let mut dom = Self::assemble(
            DomainKind::RoundedPolygon {
                vertices: vertices.to_vec(),
                radius,
            },
            length,
            area,
            samples,
            Smoothness::C11,
        );
        dom.warnings.push(
            "non-smooth corner curvature: boundary is C^{1,1}, curvature vanishes on straight pieces"
                .into(),
        );
        Ok(dom)
    }

    fn assemble(
        kind: DomainKind,
        length: f64,
        area: f64,
        samples: Vec<BoundarySample>,
        smoothness: Smoothness,
    ) -> Self {
        let ds = length / samples.len() as f64;
        let (mut mx, mut my) = (0.0, 0.0);
        for s in &samples {
            mx += 0.5 * s.pos[0] * s.pos[0] * s.tangent[1] * ds;
            my -= 0.5 * s.pos[1] * s.pos[1] * s.tangent[0] * ds;
        }
        Self {
            kind,
            length,
            area,
            centroid: [mx / area, my / area],
            samples,
            smoothness,
            warnings: Vec::new(),
        }
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn centroid(&self) -> Point {
        self.centroid
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn samples(&self) -> &[BoundarySample] {
        &self.samples
    }

    fn spacing(&self) -> f64 {
        self.length / self.samples.len() as f64
    }

    /// Sample index and local coordinate in [0, 1) for an arc-length position.
    fn locate(&self, s: f64) -> (usize, f64) {
        let n = self.samples.len();
        let u = s.rem_euclid(self.length) / self.spacing();
        let k = (u.floor() as usize).min(n - 1);
        (k, (u - k as f64).clamp(0.0, 1.0))
    }

    pub fn point_at(&self, s: f64) -> Point {
        let (k, t) = self.locate(s);
        let n = self.samples.len();
        let (a, b) = (&self.samples[k], &self.samples[(k + 1) % n]);
        let ds = self.spacing();
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        std::array::from_fn(|i| {
            h00 * a.pos[i] + h10 * ds * a.tangent[i] + h01 * b.pos[i] + h11 * ds * b.tangent[i]
        })
    }

    pub fn tangent_at(&self, s: f64) -> Point {
        let (k, t) = self.locate(s);
        let n = self.samples.len();
        let (a, b) = (&self.samples[k], &self.samples[(k + 1) % n]);
        let ds = self.spacing();
        let t2 = t * t;
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = -6.0 * t2 + 6.0 * t;
        let d11 = 3.0 * t2 - 2.0 * t;
        let d: Point = std::array::from_fn(|i| {
            (d00 * a.pos[i] + d01 * b.pos[i]) / ds + d10 * a.tangent[i] + d11 * b.tangent[i]
        });
        scale(d, 1.0 / norm(d))
    }

    /// Outward unit normal: the tangent rotated by −90°.
    pub fn normal_at(&self, s: f64) -> Point {
        let t = self.tangent_at(s);
        [t[1], -t[0]]
    }

    pub fn curvature_at(&self, s: f64) -> f64 {
        let (k, t) = self.locate(s);
        let n = self.samples.len();
        (1.0 - t) * self.samples[k].curvature + t * self.samples[(k + 1) % n].curvature
    }

    /// Arc-length parameter of the boundary point closest to `p`.
    pub fn closest_parameter(&self, p: Point) -> f64 {
        let ds = self.spacing();
        let (k, _) = self
            .samples
            .iter()
            .enumerate()
            .map(|(k, s)| (k, dist(p, s.pos)))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        let s0 = k as f64 * ds;
        let mut s = s0;
        for _ in 0..6 {
            let g = self.point_at(s);
            let t = self.tangent_at(s);
            let r = sub(p, g);
            let f = dot(r, t);
            let inward = [-t[1], t[0]];
            let fp = -1.0 + self.curvature_at(s) * dot(r, inward);
            if fp.abs() < 1e-14 {
                break;
            }
            let next = (s - f / fp).clamp(s0 - ds, s0 + ds);
            if (next - s).abs() < 1e-15 * self.length {
                s = next;
                break;
            }
            s = next;
        }
        s.rem_euclid(self.length)
    }

    /// Signed distance to the boundary: negative inside, positive outside.
    pub fn signed_distance(&self, p: Point) -> f64 {
        let s = self.closest_parameter(p);
        dot(sub(p, self.point_at(s)), self.normal_at(s))
    }

    /// True iff `p` lies strictly inside the boundary.
    pub fn contains(&self, p: Point) -> bool {
        // quick reject against the tangent lines at the table samples
        if self
            .samples
            .iter()
            .any(|s| dot(sub(p, s.pos), [s.tangent[1], -s.tangent[0]]) > 1e-9 * self.length)
        {
            return false;
        }
        self.signed_distance(p) < 0.0
    }

    /// Largest distance between two boundary points.
    pub fn diameter(&self) -> f64 {
        let stride = (self.samples.len() / 512).max(1);
        let pts: Vec<Point> = self.samples.iter().step_by(stride).map(|s| s.pos).collect();
        let mut best = 0.0f64;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                best = best.max(dist(*a, *b));
            }
        }
        best
    }

    /// `n` boundary points at uniform arc-length spacing, starting at s = 0.
    pub fn boundary_points(&self, n: usize) -> Vec<Point> {
        (0..n)
            .map(|k| self.point_at(self.length * k as f64 / n as f64))
            .collect()
    }
}

#[derive(Clone, Debug)]
enum Piece {
    Segment {
        start: Point,
        dir: Point,
        len: f64,
    },
    Arc {
        center: Point,
        radius: f64,
        start_angle: f64,
        sweep: f64,
    },
}

impl Piece {
    fn length(&self) -> f64 {
        match self {
            Piece::Segment { len, .. } => *len,
            Piece::Arc { radius, sweep, .. } => radius * sweep,
        }
    }

    /// Contribution ½∮(x dy − y dx) of this piece to the enclosed area.
    fn green_area(&self) -> f64 {
        match self {
            Piece::Segment { start, dir, len } => 0.5 * cross(*start, add(*start, scale(*dir, *len))),
            Piece::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => {
                let e0 = [start_angle.cos(), start_angle.sin()];
                let a1 = start_angle + sweep;
                let e1 = [a1.cos(), a1.sin()];
                0.5 * (radius * cross(*center, sub(e1, e0)) + radius * radius * sweep)
            }
        }
    }

    fn eval(&self, local: f64) -> BoundarySample {
        match self {
            Piece::Segment { start, dir, .. } => BoundarySample {
                pos: add(*start, scale(*dir, local)),
                tangent: *dir,
                curvature: 0.0,
            },
            Piece::Arc {
                center,
                radius,
                start_angle,
                ..
            } => {
                let th = start_angle + local / radius;
                let (s, c) = th.sin_cos();
                BoundarySample {
                    pos: [center[0] + radius * c, center[1] + radius * s],
                    tangent: [-s, c],
                    curvature: 1.0 / radius,
                }
            }
        }
    }
}

fn gauss_legendre(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [
        0.0,
        0.538_469_310_105_683_1,
        -0.538_469_310_105_683_1,
        0.906_179_845_938_664,
        -0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_08,
        0.236_926_885_056_189_08,
    ];
    let m = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    r * X.iter().zip(W).map(|(x, w)| w * f(m + r * x)).sum::<f64>()
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 40)
}
