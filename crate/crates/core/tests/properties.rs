use std::sync::OnceLock;

use meancurv::critical::{classify, eigenvalues, Classification};
use meancurv::geometry::{triangulate, ConvexDomain, TriMesh};
use meancurv::mc_operator::{residual, Feasibility, ProblemSpec, ScalarField};
use meancurv::nodal::{level_set, sector_count, trace_nodal_set, CylinderSolution};
use proptest::prelude::*;

fn disk() -> &'static TriMesh {
    static MESH: OnceLock<TriMesh> = OnceLock::new();
    MESH.get_or_init(|| triangulate(&ConvexDomain::disk(1.0).unwrap(), 0.05).unwrap())
}

fn coarse_disk() -> &'static TriMesh {
    static MESH: OnceLock<TriMesh> = OnceLock::new();
    MESH.get_or_init(|| triangulate(&ConvexDomain::disk(1.0).unwrap(), 0.15).unwrap())
}

/// Re(e^{iφ}(z − p)^k).
fn harmonic(k: u32, phase: f64, p: [f64; 2]) -> impl Fn([f64; 2]) -> f64 {
    move |q| {
        let (x, y) = (q[0] - p[0], q[1] - p[1]);
        x.hypot(y).powi(k as i32) * (k as f64 * y.atan2(x) + phase).cos()
    }
}

fn cubic(c: [f64; 10]) -> impl Fn([f64; 2]) -> f64 {
    move |q| {
        let (x, y) = (q[0], q[1]);
        c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y
            + c[6] * x * x * x + c[7] * x * x * y + c[8] * x * y * y + c[9] * y * y * y
    }
}

fn rotate(h: [[f64; 2]; 2], theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    let r = [[c, -s], [s, c]];
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[i][j] += r[i][k] * h[k][l] * r[j][l];
                }
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn harmonic_sectors_are_twice_the_degree(k in 1u32..=5, phase in 0.0..std::f64::consts::TAU,
                                             px in -0.2..0.2f64, py in -0.2..0.2f64) {
        let mesh = disk();
        let f = ScalarField::from_fn(mesh, harmonic(k, phase, [px, py]));
        let r = 4.0 * mesh.h + 0.01;
        prop_assert_eq!(sector_count(&f, [px, py], r).unwrap(), 2 * k as usize);
    }

    #[test]
    fn sector_count_is_even(c in proptest::array::uniform10(-1.0..1.0f64),
                            px in -0.3..0.3f64, py in -0.3..0.3f64) {
        let mesh = disk();
        let f = ScalarField::from_fn(mesh, cubic(c));
        let r = 4.0 * mesh.h;
        prop_assert_eq!(sector_count(&f, [px, py], r).unwrap() % 2, 0);
    }

    #[test]
    fn nodal_arcs_stay_in_sign_changing_cells(c in proptest::array::uniform10(-1.0..1.0f64)) {
        let mesh = coarse_disk();
        let f = ScalarField::from_fn(mesh, cubic(c));
        let mut arcs = level_set(mesh, &f.values, 0.0);
        if let Ok(set) = trace_nodal_set(&f) {
            arcs.extend(set.arcs);
        }
        for arc in &arcs {
            for w in arc.points.windows(2) {
                let mid = [0.5 * (w[0][0] + w[1][0]), 0.5 * (w[0][1] + w[1][1])];
                let Some(loc) = mesh.locate(mid) else { continue };
                let vals = mesh.cells[loc.cell].map(|v| f.values[v]);
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(lo <= 0.0 && hi >= 0.0, "segment through a cell with values {:?}", vals);
            }
        }
    }

    #[test]
    fn neumann_residual_is_gauge_invariant(c in proptest::array::uniform10(-0.5..0.5f64),
                                           shift in -10.0..10.0f64, t in 0.0..=1.0f64) {
        let mesh = coarse_disk();
        let spec = ProblemSpec::neumann(0.6, 0.5).unwrap().with_t(t);
        let f = ScalarField::from_fn(mesh, cubic(c));
        let g = ScalarField::from_fn(mesh, |q| cubic(c)(q) + shift);
        for (a, b) in residual(&f, &spec).iter().zip(&residual(&g, &spec)) {
            prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        }
    }

    #[test]
    fn classification_is_rotation_and_scale_invariant(l1 in -2.0..2.0f64, l2 in -2.0..2.0f64,
                                                      theta in 0.0..std::f64::consts::TAU,
                                                      s in 0.1..10.0f64) {
        let (floor, tol) = (0.5, 1e-2);
        let diag = [[l1, 0.0], [0.0, l2]];
        let base = classify(diag, floor, tol);
        let rotated = rotate(diag, theta);
        let [e1, e2] = eigenvalues(rotated);
        prop_assert!((e1 - l1.min(l2)).abs() <= 1e-12 && (e2 - l1.max(l2)).abs() <= 1e-12);
        // boundary cases of the dead band may flip under rounding
        let band = tol * l1.abs().max(l2.abs()).max(floor);
        prop_assume!((l1.abs() - band).abs() > 1e-9 && (l2.abs() - band).abs() > 1e-9);
        prop_assume!(((l1 * l2).abs() - tol * (band / tol).powi(2)).abs() > 1e-9);
        prop_assert_eq!(classify(rotated, floor, tol), base);
        let scaled = [[s * l1, 0.0], [0.0, s * l2]];
        prop_assert_eq!(classify(scaled, s * floor, tol), base);
        let negated = classify([[-l1, 0.0], [0.0, -l2]], floor, tol);
        let expected = match base {
            Classification::Minimum => Classification::Maximum,
            Classification::Maximum => Classification::Minimum,
            other => other,
        };
        prop_assert_eq!(negated, expected);
    }

    #[test]
    fn cylinder_has_constant_curvature(height in -2.0..2.0f64, h_mc in 0.1..3.0f64, frac in -0.9..0.9f64) {
        let cyl = CylinderSolution::new(height, h_mc).unwrap();
        let x = frac * cyl.half_width();
        let d = cyl.derivative(x).unwrap();
        let dd = cyl.second_derivative(x).unwrap();
        // (X'/√(1+X'²))' = X''/(1+X'²)^{3/2}
        prop_assert!((dd / (1.0 + d * d).powf(1.5) - h_mc).abs() <= 1e-9 * h_mc.max(1.0));
        prop_assert!(cyl.value(x).unwrap() >= height);
    }

    #[test]
    fn feasibility_is_monotone_in_h(h1 in 0.01..3.0f64, h2 in 0.01..3.0f64, c in 0.05..3.0f64) {
        let rank = |s| match s {
            meancurv::mc_operator::FeasibilityStatus::Feasible => 0,
            meancurv::mc_operator::FeasibilityStatus::Borderline => 1,
            meancurv::mc_operator::FeasibilityStatus::Infeasible => 2,
        };
        let (lo, hi) = (h1.min(h2), h1.max(h2));
        let f = |h| Feasibility::from_measures(&ProblemSpec::neumann(h, c).unwrap(), std::f64::consts::PI, std::f64::consts::TAU).unwrap();
        prop_assert!(rank(f(lo).status) <= rank(f(hi).status));
        prop_assert!(f(lo).margin >= f(hi).margin);
    }
}
