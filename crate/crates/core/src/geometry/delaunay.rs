//! Incremental Delaunay triangulation inside a convex boundary polygon.
//!
//! Triangles store their vertices counterclockwise and the neighbor across the
//! edge opposite each vertex. Boundary edges have no neighbor and are never
//! flipped, so the boundary polygon is preserved as a constraint.

use super::{orient, Point};

pub(crate) const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Tri {
    pub v: [usize; 3],
    /// `n[i]` is the triangle across the edge opposite `v[i]`.
    pub n: [usize; 3],
}

#[derive(Clone, Debug)]
pub(crate) struct Triangulation {
    pub pts: Vec<Point>,
    pub tris: Vec<Tri>,
    last: usize,
}

#[inline]
fn next(i: usize) -> usize {
    (i + 1) % 3
}

#[inline]
fn prev(i: usize) -> usize {
    (i + 2) % 3
}

/// Positive when `d` lies inside the circumcircle of the counterclockwise triangle (a, b, c).
/// Returns the determinant together with a magnitude bound used for relative tolerances.
fn incircle(a: Point, b: Point, c: Point, d: Point) -> (f64, f64) {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let al = adx * adx + ady * ady;
    let bl = bdx * bdx + bdy * bdy;
    let cl = cdx * cdx + cdy * cdy;
    let det = al * (bdx * cdy - cdx * bdy) + bl * (cdx * ady - adx * cdy) + cl * (adx * bdy - bdx * ady);
    let perm = al * ((bdx * cdy).abs() + (cdx * bdy).abs())
        + bl * ((cdx * ady).abs() + (adx * cdy).abs())
        + cl * ((adx * bdy).abs() + (bdx * ady).abs());
    (det, perm)
}

impl Triangulation {
    /// Triangulates a convex counterclockwise polygon by ear clipping, then makes it Delaunay.
    pub fn from_convex_polygon(poly: &[Point]) -> Self {
        let n = poly.len();
        assert!(n >= 3, "polygon needs at least three vertices");
        let scale2 = {
            let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in poly {
                for k in 0..2 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
            (hi[0] - lo[0]).max(hi[1] - lo[1]).powi(2)
        };
        let mut ring: Vec<usize> = (0..n).collect();
        // twice the area of what is left to triangulate
        let mut remaining: f64 = (0..n).map(|i| super::cross(poly[i], poly[(i + 1) % n])).sum();
        let mut faces = Vec::with_capacity(n - 2);
        let mut start = 0;
        while ring.len() > 3 {
            let m = ring.len();
            let mut clipped = false;
            for off in 0..m {
                let k = (start + off) % m;
                let (a, b, c) = (ring[(k + m - 1) % m], ring[k], ring[(k + 1) % m]);
                let area = orient(poly[a], poly[b], poly[c]);
                if area <= 1e-14 * scale2 {
                    continue;
                }
                // never leave a ring whose points are all collinear
                if remaining - area <= 1e-12 * scale2 {
                    continue;
                }
                let blocked = ring.iter().any(|&q| {
                    q != a
                        && q != b
                        && q != c
                        && orient(poly[a], poly[b], poly[q]) >= 0.0
                        && orient(poly[b], poly[c], poly[q]) >= 0.0
                        && orient(poly[c], poly[a], poly[q]) >= 0.0
                });
                if blocked {
                    continue;
                }
                faces.push([a, b, c]);
                remaining -= area;
                ring.remove(k);
                start = k % ring.len();
                clipped = true;
                break;
            }
            assert!(clipped, "boundary polygon is not convex");
        }
        faces.push([ring[0], ring[1], ring[2]]);

        let mut tri = Self::from_faces(poly.to_vec(), &faces);
        tri.make_delaunay();
        tri
    }

    /// Builds the neighbor structure for a consistent counterclockwise face list.
    pub fn from_faces(pts: Vec<Point>, faces: &[[usize; 3]]) -> Self {
        let mut tris: Vec<Tri> = faces.iter().map(|&v| Tri { v, n: [NONE; 3] }).collect();
        let mut edges = std::collections::HashMap::with_capacity(3 * faces.len());
        for (t, f) in faces.iter().enumerate() {
            for i in 0..3 {
                edges.insert((f[next(i)], f[prev(i)]), (t, i));
            }
        }
        for (t, f) in faces.iter().enumerate() {
            for i in 0..3 {
                if let Some(&(o, _)) = edges.get(&(f[prev(i)], f[next(i)])) {
                    tris[t].n[i] = o;
                }
            }
        }
        Self { pts, tris, last: 0 }
    }

    fn replace_neighbor(&mut self, t: usize, old: usize, new: usize) {
        if t == NONE {
            return;
        }
        for k in 0..3 {
            if self.tris[t].n[k] == old {
                self.tris[t].n[k] = new;
                return;
            }
        }
    }

    fn index_in(&self, t: usize, v: usize) -> usize {
        self.tris[t].v.iter().position(|&x| x == v).expect("vertex not in triangle")
    }

    /// Flips the edge opposite `v[i]` of triangle `t`. After the flip, `t` holds
    /// (a, b, d) and the neighbor holds (a, d, c), where a = v[i].
    fn flip(&mut self, t: usize, i: usize) {
        let o = self.tris[t].n[i];
        let tv = self.tris[t].v;
        let tn = self.tris[t].n;
        let (a, b, c) = (tv[i], tv[next(i)], tv[prev(i)]);
        let j = (0..3)
            .find(|&k| self.tris[o].v[k] != b && self.tris[o].v[k] != c)
            .expect("degenerate neighbor");
        let on = self.tris[o].n;
        let d = self.tris[o].v[j];
        // o is (d, c, b) starting at j
        let n_bd = on[next(j)];
        let n_dc = on[prev(j)];
        let n_ab = tn[prev(i)];
        let n_ca = tn[next(i)];
        self.tris[t] = Tri {
            v: [a, b, d],
            n: [n_bd, o, n_ab],
        };
        self.tris[o] = Tri {
            v: [a, d, c],
            n: [n_dc, n_ca, t],
        };
        self.replace_neighbor(n_bd, o, t);
        self.replace_neighbor(n_ca, t, o);
    }

    /// True if the edge opposite `v[i]` of `t` should be flipped to restore the Delaunay property.
    fn illegal(&self, t: usize, i: usize) -> bool {
        let o = self.tris[t].n[i];
        if o == NONE {
            return false;
        }
        let tv = self.tris[t].v;
        let (a, b, c) = (tv[i], tv[next(i)], tv[prev(i)]);
        let d = match self.tris[o].v.iter().find(|&&x| x != b && x != c) {
            Some(&d) => d,
            None => return false,
        };
        let p = &self.pts;
        let (det, perm) = incircle(p[a], p[b], p[c], p[d]);
        if det <= 1e-10 * perm {
            return false;
        }
        // only flip convex quadrilaterals
        orient(p[a], p[b], p[d]) > 0.0 && orient(p[a], p[d], p[c]) > 0.0
    }

    /// Lawson flipping until every interior edge is locally Delaunay.
    pub fn make_delaunay(&mut self) -> usize {
        let mut flips = 0;
        let cap = 50 * self.tris.len() * self.tris.len() + 1000;
        loop {
            let mut changed = false;
            for t in 0..self.tris.len() {
                for i in 0..3 {
                    if self.illegal(t, i) {
                        self.flip(t, i);
                        flips += 1;
                        changed = true;
                    }
                }
            }
            if !changed || flips > cap {
                return flips;
            }
        }
    }

    /// Visibility walk from the last touched triangle. Returns the triangle
    /// containing `p` (closed), or `None` if `p` is outside the triangulation.
    pub fn locate(&self, p: Point) -> Option<usize> {
        let mut t = self.last.min(self.tris.len() - 1);
        let mut steps = 0;
        'walk: loop {
            steps += 1;
            if steps > 4 * self.tris.len() + 16 {
                break;
            }
            let v = self.tris[t].v;
            for i in 0..3 {
                if orient(self.pts[v[next(i)]], self.pts[v[prev(i)]], p) < 0.0 {
                    let o = self.tris[t].n[i];
                    if o == NONE {
                        return None;
                    }
                    t = o;
                    continue 'walk;
                }
            }
            return Some(t);
        }
        // walks cannot cycle on Delaunay meshes; this is a safety net
        (0..self.tris.len()).find(|&t| {
            let v = self.tris[t].v;
            (0..3).all(|i| orient(self.pts[v[next(i)]], self.pts[v[prev(i)]], p) >= 0.0)
        })
    }

    fn legalize(&mut self, mut stack: Vec<(usize, usize)>) {
        // each entry is (triangle, vertex id of the inserted point)
        let mut guard = 0;
        while let Some((t, p)) = stack.pop() {
            guard += 1;
            if guard > 100_000 {
                break;
            }
            let i = self.index_in(t, p);
            if self.illegal(t, i) {
                let o = self.tris[t].n[i];
                self.flip(t, i);
                stack.push((t, p));
                stack.push((o, p));
            }
        }
    }

    /// Inserts an interior point. Returns false if it falls outside or onto the boundary.
    pub fn insert(&mut self, p: Point) -> bool {
        let t = match self.locate(p) {
            Some(t) => t,
            None => return false,
        };
        let v = self.tris[t].v;
        let q = [self.pts[v[0]], self.pts[v[1]], self.pts[v[2]]];
        let area = orient(q[0], q[1], q[2]);
        let w: [f64; 3] = std::array::from_fn(|i| orient(q[next(i)], q[prev(i)], p) / area);
        if w.iter().any(|&x| x < -1e-12) {
            return false;
        }
        let tiny = 1e-9;
        let (imin, wmin) = w
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &x)| if x < acc.1 { (i, x) } else { acc });
        if w.iter().any(|&x| x > 1.0 - tiny) {
            // coincides with an existing vertex
            return false;
        }
        let id = self.pts.len();
        if wmin < tiny {
            if self.tris[t].n[imin] == NONE {
                return false;
            }
            self.pts.push(p);
            self.split_edge(t, imin, id);
        } else {
            self.pts.push(p);
            self.split_cell(t, id);
        }
        true
    }

    fn split_cell(&mut self, t: usize, p: usize) {
        let Tri { v: [a, b, c], n: [na, nb, nc] } = self.tris[t];
        let t1 = self.tris.len();
        let t2 = t1 + 1;
        self.tris[t] = Tri {
            v: [p, b, c],
            n: [na, t1, t2],
        };
        self.tris.push(Tri {
            v: [p, c, a],
            n: [nb, t2, t],
        });
        self.tris.push(Tri {
            v: [p, a, b],
            n: [nc, t, t1],
        });
        self.replace_neighbor(nb, t, t1);
        self.replace_neighbor(nc, t, t2);
        self.last = t;
        self.legalize(vec![(t, p), (t1, p), (t2, p)]);
    }

    fn split_edge(&mut self, t: usize, i: usize, p: usize) {
        let o = self.tris[t].n[i];
        let tv = self.tris[t].v;
        let tn = self.tris[t].n;
        let (a, b, c) = (tv[i], tv[next(i)], tv[prev(i)]);
        let j = (0..3)
            .find(|&k| self.tris[o].v[k] != b && self.tris[o].v[k] != c)
            .expect("degenerate neighbor");
        let on = self.tris[o].n;
        let d = self.tris[o].v[j];
        let n_ab = tn[prev(i)];
        let n_ca = tn[next(i)];
        let n_bd = on[next(j)];
        let n_dc = on[prev(j)];
        let t2 = self.tris.len();
        let t4 = t2 + 1;
        self.tris[t] = Tri {
            v: [p, a, b],
            n: [n_ab, t4, t2],
        };
        self.tris.push(Tri {
            v: [p, c, a],
            n: [n_ca, t, o],
        });
        self.tris[o] = Tri {
            v: [p, d, c],
            n: [n_dc, t2, t4],
        };
        self.tris.push(Tri {
            v: [p, b, d],
            n: [n_bd, o, t],
        });
        self.replace_neighbor(n_ca, t, t2);
        self.replace_neighbor(n_bd, o, t4);
        self.last = t;
        self.legalize(vec![(t, p), (t2, p), (o, p), (t4, p)]);
    }

    pub fn faces(&self) -> Vec<[usize; 3]> {
        self.tris.iter().map(|t| t.v).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_consistency(tri: &Triangulation) {
        for (t, tr) in tri.tris.iter().enumerate() {
            let p = &tri.pts;
            assert!(orient(p[tr.v[0]], p[tr.v[1]], p[tr.v[2]]) > 0.0, "cell {t} not ccw");
            for i in 0..3 {
                let o = tr.n[i];
                if o == NONE {
                    continue;
                }
                assert!(tri.tris[o].n.contains(&t), "neighbor link {t}->{o} not mutual");
                let (b, c) = (tr.v[next(i)], tr.v[prev(i)]);
                assert!(tri.tris[o].v.contains(&b) && tri.tris[o].v.contains(&c));
            }
        }
    }

    fn regular_polygon(n: usize) -> Vec<Point> {
        (0..n)
            .map(|k| {
                let th = std::f64::consts::TAU * k as f64 / n as f64;
                [th.cos(), th.sin()]
            })
            .collect()
    }

    #[test]
    fn ear_clip_counts() {
        let tri = Triangulation::from_convex_polygon(&regular_polygon(17));
        assert_eq!(tri.tris.len(), 15);
        check_consistency(&tri);
    }

    #[test]
    fn collinear_boundary_points() {
        let poly = vec![[0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [1.0, 0.5], [1.0, 1.0], [0.5, 1.0], [0.0, 1.0], [0.0, 0.5]];
        let tri = Triangulation::from_convex_polygon(&poly);
        assert_eq!(tri.tris.len(), 6);
        check_consistency(&tri);
    }

    #[test]
    fn insertions_keep_delaunay() {
        let mut tri = Triangulation::from_convex_polygon(&regular_polygon(24));
        let mut k = 0u64;
        for i in 0..40 {
            k = k.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let r = 0.8 * ((k >> 11) as f64 / (1u64 << 53) as f64).sqrt();
            let th = i as f64 * 2.399963;
            assert!(tri.insert([r * th.cos(), r * th.sin()]));
        }
        // an exact edge midpoint exercises the edge split
        let t0 = tri.tris[0];
        let (a, b) = (tri.pts[t0.v[0]], tri.pts[t0.v[1]]);
        let interior_edge = t0.n[2] != NONE;
        let inserted = tri.insert([(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]);
        assert_eq!(inserted, interior_edge);
        check_consistency(&tri);
        assert_eq!(tri.tris.len(), 2 * tri.pts.len() - 24 - 2);
        for t in 0..tri.tris.len() {
            for i in 0..3 {
                assert!(!tri.illegal(t, i));
            }
        }
    }

    #[test]
    fn outside_point_rejected() {
        let mut tri = Triangulation::from_convex_polygon(&regular_polygon(8));
        assert!(!tri.insert([2.0, 0.0]));
    }
}
