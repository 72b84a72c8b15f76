//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::time::Instant;

use meancurv::axisym::{
    axial_derivative_nodal_set, axis_critical_points, axis_hessian, check_monotone, meridian_mesh, solve_meridian,
    MeridianProblem, MeridianProfile,
};
use meancurv::critical::{
    boundary_offset_loop, classify, eigenvalues, find_critical_points, gradient_index, interior_max_scan,
    Classification, CriticalCounts, CriticalOptions,
};
use meancurv::geometry::{dist, triangulate, ConvexDomain, EdgeKind, TriMesh};
use meancurv::mc_operator::{Discretization, ProblemSpec, ScalarField};
use meancurv::nodal::ArcEnd;
use meancurv::radial::RadialSolution;
use meancurv::solver::{homotopy_solve, newton_solve, uniform_schedule, SolverOptions};
use meancurv_cli::config::{self, Command};
use meancurv_cli::pipeline::{self, Status};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn disk(h: f64) -> TriMesh {
    triangulate(&ConvexDomain::disk(1.0).unwrap(), h).unwrap()
}

fn max_error(mesh: &TriMesh, values: &[f64], exact: impl Fn(f64) -> f64) -> f64 {
    mesh.vertices
        .iter()
        .zip(values)
        .map(|(p, v)| (v - exact(p[0].hypot(p[1]))).abs())
        .fold(0.0, f64::max)
}

fn disk_robin() -> Outcome {
    let start = Instant::now();
    let h_mc = 0.8;
    let mesh = disk(0.05);
    let spec = ProblemSpec::robin(h_mc, 1.0).unwrap();
    let (u, rep) = newton_solve(&mesh, &spec, &ScalarField::zeros(&mesh), &SolverOptions::default())
        .map_err(|e| e.to_string())?;
    let records = find_critical_points(&u, h_mc, &CriticalOptions::default());
    let elapsed = start.elapsed().as_secs_f64();
    let exact = RadialSolution::robin(2, h_mc, 1.0, 1.0).unwrap();
    let err = max_error(&mesh, &u.values, |r| exact.value(r).unwrap());
    let negative = u.values.iter().all(|v| *v < 0.0);
    let near: Vec<_> = records.iter().filter(|r| dist(r.location, [0.0, 0.0]) <= mesh.h).collect();
    let hess_ok = records.len() == 1
        && near.len() == 1
        && {
            let hs = near[0].hessian;
            let target = h_mc / 2.0;
            (hs[0][0] - target).abs() <= 0.1 * target
                && (hs[1][1] - target).abs() <= 0.1 * target
                && hs[0][1].abs() <= 0.1 * target
        };
    check(
        rep.converged && err <= 5e-3 && negative && hess_ok && elapsed <= 60.0,
        format!(
            "error {err:.2e} (≤ 5e-3), u < 0: {negative}, critical points {} ({} within h), Hessian {:?}, {elapsed:.2}s",
            records.len(),
            near.len(),
            near.first().map(|r| r.hessian)
        ),
    )
}

fn disk_neumann() -> Outcome {
    let (h_mc, c) = (0.6, 0.5);
    let spec = ProblemSpec::neumann(h_mc, c).unwrap();
    let exact = RadialSolution::new(2, h_mc, 0.0);
    let mut errors = Vec::new();
    let mut identity = f64::NAN;
    for h in [0.1, 0.05] {
        let mesh = disk(h);
        let (u, _) = newton_solve(&mesh, &spec, &ScalarField::zeros(&mesh), &SolverOptions::default())
            .map_err(|e| e.to_string())?;
        let disc = Discretization::new(&mesh, 2);
        let ex: Vec<f64> = mesh.vertices.iter().map(|p| exact.value(p[0].hypot(p[1])).unwrap()).collect();
        let mean = ex.iter().zip(disc.mass()).map(|(a, m)| a * m).sum::<f64>() / disc.measure();
        errors.push(
            u.values
                .iter()
                .zip(&ex)
                .map(|(a, b)| (a - (b - mean)).abs())
                .fold(0.0, f64::max),
        );
        let records = find_critical_points(&u, h_mc, &CriticalOptions::default());
        if records.len() != 1 {
            return Err(format!("{} critical points at h = {h}", records.len()));
        }
        let hs = records[0].hessian;
        identity = (hs[0][0] + hs[1][1] - h_mc).abs();
    }
    let ratio = errors[0] / errors[1];
    check(
        ratio >= 3.0 && identity <= 0.1 * h_mc,
        format!(
            "errors {:.2e}, {:.2e}, ratio {ratio:.2} (≥ 3), |Δu(p) − H| = {identity:.2e} (≤ {:.2e})",
            errors[0],
            errors[1],
            0.1 * h_mc
        ),
    )
}

fn feasibility_gate() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::config("neumann_infeasible");
    let code = common::run(&["solve", "--config", cfg.to_str().unwrap()], dir.path());
    let report = common::read_json(&dir.path().join("report.json"));
    let solved = !report["solver"].is_null() || dir.path().join("solution.csv").exists();
    check(
        code == 4 && report["status"] == "infeasible" && !solved,
        format!(
            "exit {code}, status {}, demand {} vs bound {}, solve attempted: {solved}",
            report["status"], report["feasibility"]["demand"], report["feasibility"]["bound"]
        ),
    )
}

fn ellipse_mesh() -> TriMesh {
    triangulate(&ConvexDomain::ellipse(1.3, 0.7).unwrap(), 0.05).unwrap()
}

fn generic_convex() -> Outcome {
    let h_mc = 0.5;
    let mesh = ellipse_mesh();
    let spec = ProblemSpec::robin(h_mc, 1.0).unwrap();
    let opts = CriticalOptions::default();
    let (u, _) = newton_solve(&mesh, &spec, &ScalarField::zeros(&mesh), &SolverOptions::default())
        .map_err(|e| e.to_string())?;
    let records = find_critical_points(&u, h_mc, &opts);
    if records.len() != 1 {
        return Err(format!("{} critical points", records.len()));
    }
    let r = &records[0];
    let [l1, l2] = eigenvalues(r.hessian);
    let band = opts.degeneracy_tol * l1.abs().max(l2.abs()).max(h_mc);
    let k = l1 * l2;
    let minimum = classify(r.hessian, h_mc, opts.degeneracy_tol) == Classification::Minimum;
    let maxima = interior_max_scan(&u).len();
    let index = gradient_index(&u, &boundary_offset_loop(&mesh, 2.0 * mesh.h), opts.grad_tol_rel)
        .map_err(|e| e.to_string())?;
    let counts = CriticalCounts::of(&records);
    let saddle = counts.saddles > 0;
    let two_minima = counts.minima >= 2;
    check(
        minimum && k.abs() > band * band && maxima == 0 && index == 1 && saddle == two_minima && !saddle,
        format!(
            "one minimum: {minimum}, K = {k:.4} (dead band {:.1e}), interior maxima {maxima}, loop index {index}, saddle {saddle} ⇔ two minima {two_minima}",
            band * band
        ),
    )
}

fn homotopy_stability() -> Outcome {
    let mesh = ellipse_mesh();
    let spec = ProblemSpec::robin(0.5, 1.0).unwrap();
    let schedule = uniform_schedule(10);
    let (_, trace) = homotopy_solve(
        &mesh,
        &spec,
        &schedule,
        &SolverOptions::default(),
        &CriticalOptions::default(),
    )
    .map_err(|f| f.to_string())?;
    let planned: Vec<_> = trace.steps.iter().filter(|s| !s.inserted).collect();
    let stable = trace
        .steps
        .iter()
        .all(|s| s.counts.minima == 1 && s.counts.saddles == 0 && s.counts.total() == 1);
    let k0 = trace.steps[0].critical_points.first().map_or(f64::NAN, |r| r.gauss_curvature);
    check(
        planned.len() == 11 && stable && trace.complete() && k0 > 0.0,
        format!(
            "{} scheduled steps (+{} inserted), one minimum and no saddle at every step: {stable}, K₀ = {k0:.4}",
            planned.len(),
            trace.steps.len() - planned.len()
        ),
    )
}

fn nodal_lab() -> Outcome {
    let cfg = config::load(&common::config("nodal_harmonic"), &[]).map_err(|e| e.to_string())?;
    let harmonic = pipeline::run(Command::Compare, &cfg, None).report;
    let hc = harmonic.compare.ok_or("no harmonic comparison")?;
    let cfg = config::load(
        &common::config("robin_disk"),
        &["compare.field=\"solution\"".into(), "compare.against=\"cylinder\"".into()],
    )
    .map_err(|e| e.to_string())?;
    let solution = pipeline::run(Command::Compare, &cfg, None).report;
    let sc = solution.compare.ok_or("no cylinder comparison")?;
    let hk = hc.fit.map_or(f64::NAN, |f| f.k);
    let sk = sc.fit.map_or(f64::NAN, |f| f.k);
    check(
        hc.sector_count == Some(6)
            && (hk - 3.0).abs() <= 0.15
            && sc.sector_count == Some(4)
            && sk <= 2.5
            && solution.status == Status::Ok,
        format!(
            "Re z³: {:?} sectors, k = {hk:.3}; solution − cylinder: {:?} sectors, k = {sk:.3}",
            hc.sector_count, sc.sector_count
        ),
    )
}

fn axisymmetric() -> Outcome {
    let h_mc = 0.8;
    let problem = MeridianProblem::new(
        MeridianProfile::Ball { radius: 1.0 },
        3,
        ProblemSpec::robin(h_mc, 1.0).unwrap(),
    )
    .unwrap();
    let mesh = meridian_mesh(&problem, 0.05).map_err(|e| e.to_string())?;
    let (v, _) = solve_meridian(&mesh, &problem, None, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let exact = RadialSolution::robin(3, h_mc, 1.0, 1.0).unwrap();
    let err = max_error(&mesh, &v.values, |r| exact.value(r).unwrap());
    let records = axis_critical_points(&v, h_mc, &CriticalOptions::default()).map_err(|e| e.to_string())?;
    let on_axis = records.len() == 1 && records[0].location[0] <= mesh.h;
    let z = records.first().map_or(0.0, |r| r.location[1]);
    let hess = axis_hessian(&v, 3, z).map_err(|e| e.to_string())?;
    let target = h_mc / 3.0;
    let diag_ok = hess.diagonal.iter().all(|d| (d - target).abs() <= 0.1 * target);
    let set = axial_derivative_nodal_set(&v).map_err(|e| e.to_string())?;
    let arc_ok = set.arcs.len() == 1 && {
        let ends = set.arcs[0].ends;
        ends.contains(&ArcEnd::Boundary { kind: EdgeKind::Axis })
            && ends.contains(&ArcEnd::Boundary { kind: EdgeKind::Outer })
    };
    let mono = check_monotone(&v, 0.0);
    check(
        err <= 5e-3 && on_axis && diag_ok && arc_ok && mono.strict,
        format!(
            "error {err:.2e} (≤ 5e-3), {} critical point(s) on axis: {on_axis}, diagonal {:?} vs {target:.4}, nodal arcs {} (axis to boundary: {arc_ok}), min ∂v/∂r for r > 2h = {:.3e}",
            records.len(),
            hess.diagonal,
            set.arcs.len(),
            mono.min_dr
        ),
    )
}

fn determinism_and_golden() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut codes = Vec::new();
    for name in common::GOLDEN {
        codes.push(common::check_golden(name, dir.path()).map_err(|e| format!("{name}: {e}"))?);
    }
    check(
        codes == [0, 4, 0],
        format!(
            "{} golden configs byte-identical on rerun and within {:.0e} of stored reports, exit codes {codes:?}",
            common::GOLDEN.len(),
            common::GOLDEN_TOL
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("disk Robin against the radial solution", disk_robin),
        ("disk Neumann convergence and critical identity", disk_neumann),
        ("Neumann feasibility gate", feasibility_gate),
        ("ellipse critical point structure", generic_convex),
        ("ellipse homotopy stability", homotopy_stability),
        ("nodal sectors and leading order", nodal_lab),
        ("axisymmetric ball in three dimensions", axisymmetric),
        ("determinism and golden reports", determinism_and_golden),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {}: {name} [{secs:.1}s] {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}: {name} [{secs:.1}s] {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
