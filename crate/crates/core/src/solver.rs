//! Damped Newton iteration, constrained linear solves and continuation in the
//! homotopy parameter t.
//!
//! Neumann problems determine u only up to a constant, and the boundary data
//! are in general not compatible with H on the discrete domain. They are solved
//! for (u, λ) with
//!   R(u) − λ·b = 0,   mᵀu = 0,
//! where b_i = ∮ φ_i ds and m_i = ∫ φ_i dx. The multiplier λ is a uniform
//! correction of the conormal flux; it is reported, and it vanishes exactly
//! when the data are compatible.

use serde::{Deserialize, Serialize};

use crate::critical::{find_critical_points, CriticalCounts, CriticalOptions, CriticalPointRecord};
use crate::error::{Error, Result};
use crate::geometry::TriMesh;
use crate::mc_operator::{Discretization, Feasibility, FeasibilityStatus, ProblemSpec, ScalarField};
pub use crate::sparse::{linear_solve, Constraint, LinearSolution};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Absolute tolerance on the max norm of the residual.
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Step reduction factor during backtracking.
    pub armijo_factor: f64,
    /// Sufficient decrease constant.
    pub armijo_c: f64,
    pub max_backtracks: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_iter: 50,
            armijo_factor: 0.5,
            armijo_c: 1e-4,
            max_backtracks: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    None,
    MeanZero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    /// Max norm of the residual at the returned field.
    pub final_residual_norm: f64,
    /// Accepted step length of every Newton iteration.
    pub damping_history: Vec<f64>,
    /// Euclidean residual norm before each iteration and at the end.
    pub residual_history: Vec<f64>,
    pub normalization: Normalization,
    pub t: f64,
    /// Uniform conormal flux correction λ of a Neumann solve.
    pub compatibility_multiplier: Option<f64>,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / weights.iter().sum::<f64>()
}

/// Discrete divergence-theorem check for Neumann data on the mesh, with
/// measures weighted by r^{n−2}.
pub fn discrete_feasibility(disc: &Discretization<'_>, spec: &ProblemSpec) -> Option<Feasibility> {
    Feasibility::from_measures(spec, disc.measure(), disc.boundary_measure())
}

struct System<'a, 'm> {
    disc: &'a Discretization<'m>,
    spec: &'a ProblemSpec,
}

impl System<'_, '_> {
    /// Residual of the (possibly augmented) system for state (u, λ).
    fn residual(&self, u: &[f64], lambda: f64) -> Vec<f64> {
        let mut r = self.disc.residual(u, self.spec);
        if self.spec.is_neumann() {
            for (ri, bi) in r.iter_mut().zip(self.disc.boundary_weights()) {
                *ri -= lambda * bi;
            }
        }
        r
    }

    /// Newton correction (δu, δλ) for residual `r`.
    fn correction(&self, u: &[f64], r: &[f64]) -> Result<(Vec<f64>, f64)> {
        let jac = self.disc.jacobian(u, self.spec);
        let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
        if self.spec.is_neumann() {
            // [[J, −b], [mᵀ, 0]] [δu; δλ] = [−r; 0]; the border column is b with μ = −δλ
            let sol = linear_solve(
                &jac,
                &rhs,
                &Constraint::Bordered {
                    row: self.disc.mass().to_vec(),
                    col: self.disc.boundary_weights().to_vec(),
                },
            )?;
            Ok((sol.x, -sol.multiplier))
        } else {
            let sol = linear_solve(&jac, &rhs, &Constraint::None)?;
            Ok((sol.x, 0.0))
        }
    }
}

/// Damped Newton solve from `init`.
///
/// Neumann solves are mean-normalized (mass-weighted) and carry the
/// compatibility multiplier; infeasible Neumann data are rejected before iterating.
pub fn newton_solve<'m>(
    mesh: &'m TriMesh,
    spec: &ProblemSpec,
    init: &ScalarField<'_>,
    opts: &SolverOptions,
) -> Result<(ScalarField<'m>, SolveReport)> {
    let disc = Discretization::new(mesh, spec.n_dim);
    newton_solve_with(&disc, spec, &init.values, opts)
}

pub(crate) fn newton_solve_with<'m>(
    disc: &Discretization<'m>,
    spec: &ProblemSpec,
    init: &[f64],
    opts: &SolverOptions,
) -> Result<(ScalarField<'m>, SolveReport)> {
    spec.validate()?;
    if !(opts.newton_tol > 0.0) {
        return Err(Error::InvalidParameter("newton_tol must be positive".into()));
    }
    let mesh = disc.mesh;
    if init.len() != mesh.n_vertices() || init.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "initial field must be finite with one value per vertex".into(),
        ));
    }
    let neumann = spec.is_neumann();
    if let Some(f) = discrete_feasibility(disc, spec) {
        if f.status == FeasibilityStatus::Infeasible {
            return Err(Error::Infeasible {
                demand: f.demand,
                bound: f.bound,
            });
        }
    }
    let sys = System { disc, spec };
    let mut u = init.to_vec();
    let mut lambda = 0.0;
    if neumann {
        let mean = weighted_mean(&u, disc.mass());
        u.iter_mut().for_each(|x| *x -= mean);
        let r = disc.residual(&u, spec);
        lambda = r.iter().sum::<f64>() / disc.boundary_measure();
    }
    let mut r = sys.residual(&u, lambda);
    let mut report = SolveReport {
        converged: false,
        iterations: 0,
        final_residual_norm: max_norm(&r),
        damping_history: Vec::new(),
        residual_history: vec![l2(&r)],
        normalization: if neumann { Normalization::MeanZero } else { Normalization::None },
        t: spec.t,
        compatibility_multiplier: neumann.then_some(lambda),
    };
    for _ in 0..opts.max_iter {
        if max_norm(&r) <= opts.newton_tol {
            report.converged = true;
            break;
        }
        let (du, dl) = sys.correction(&u, &r)?;
        let norm0 = l2(&r);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(a, d)| a + step * d).collect();
            let trial_lambda = lambda + step * dl;
            let rt = sys.residual(&trial, trial_lambda);
            let nt = l2(&rt);
            if nt.is_finite() && nt <= (1.0 - opts.armijo_c * step) * norm0 {
                accepted = Some((trial, trial_lambda, rt));
                break;
            }
            step *= opts.armijo_factor;
        }
        report.iterations += 1;
        match accepted {
            Some((nu, nl, nr)) => {
                u = nu;
                lambda = nl;
                r = nr;
                report.damping_history.push(step);
                report.residual_history.push(l2(&r));
            }
            None => {
                // no sufficient decrease even for the shortest step
                report.final_residual_norm = max_norm(&r);
                break;
            }
        }
    }
    report.final_residual_norm = max_norm(&r);
    if !report.converged && report.final_residual_norm <= opts.newton_tol {
        report.converged = true;
    }
    if neumann {
        // the constraint holds up to roundoff; remove it exactly
        let mean = weighted_mean(&u, disc.mass());
        u.iter_mut().for_each(|x| *x -= mean);
        report.compatibility_multiplier = Some(lambda);
    }
    if !report.converged {
        return Err(Error::SolverFailure {
            report: Box::new(report),
        });
    }
    Ok((ScalarField { mesh, values: u }, report))
}

/// Solution of the linear t = 0 problem Δv = H.
///
/// Neumann data are compatibilized by the uniform flux correction; the
/// incompatibility c·|∂Ω_h| − H·|Ω_h| is returned alongside (zero for Robin).
pub fn poisson_init<'m>(mesh: &'m TriMesh, spec: &ProblemSpec) -> Result<(ScalarField<'m>, f64)> {
    let spec0 = spec.with_t(0.0);
    spec0.validate()?;
    let disc = Discretization::new(mesh, spec0.n_dim);
    let zero = vec![0.0; mesh.n_vertices()];
    let r0 = disc.residual(&zero, &spec0);
    let jac = disc.jacobian(&zero, &spec0);
    let rhs: Vec<f64> = r0.iter().map(|x| -x).collect();
    if spec0.is_neumann() {
        let sol = linear_solve(
            &jac,
            &rhs,
            &Constraint::Bordered {
                row: disc.mass().to_vec(),
                col: disc.boundary_weights().to_vec(),
            },
        )?;
        let incompatibility = -r0.iter().sum::<f64>();
        Ok((ScalarField { mesh, values: sol.x }, incompatibility))
    } else {
        let sol = linear_solve(&jac, &rhs, &Constraint::None)?;
        Ok((ScalarField { mesh, values: sol.x }, 0.0))
    }
}

/// `n + 1` uniformly spaced homotopy parameters from 0 to 1.
pub fn uniform_schedule(steps: usize) -> Vec<f64> {
    let n = steps.max(1);
    (0..=n).map(|k| k as f64 / n as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomotopyStep {
    pub t: f64,
    /// True for parameters inserted by step halving.
    pub inserted: bool,
    pub iterations: usize,
    pub final_residual_norm: f64,
    pub compatibility_multiplier: Option<f64>,
    pub min_value: f64,
    pub max_value: f64,
    pub counts: CriticalCounts,
    /// Every critical point is non-degenerate.
    pub morse: bool,
    pub critical_points: Vec<CriticalPointRecord>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HomotopyTrace {
    pub steps: Vec<HomotopyStep>,
    /// Set when continuation stopped before reaching t = 1.
    pub failure: Option<String>,
}

impl HomotopyTrace {
    pub fn complete(&self) -> bool {
        self.failure.is_none() && self.steps.last().is_some_and(|s| s.t == 1.0)
    }
}

/// A failed continuation with everything computed before the failure.
#[derive(Debug)]
pub struct HomotopyFailure {
    pub error: Error,
    pub trace: HomotopyTrace,
}

impl std::fmt::Display for HomotopyFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let t = self.trace.steps.last().map_or(f64::NAN, |s| s.t);
        write!(f, "homotopy stopped after t = {t}: {}", self.error)
    }
}

impl std::error::Error for HomotopyFailure {}

/// Smallest parameter increment tried before giving up.
pub const MIN_HOMOTOPY_STEP: f64 = 1.0 / 320.0;

/// Continuation along the schedule, warm-starting each solve from the previous parameter.
pub fn homotopy_solve<'m>(
    mesh: &'m TriMesh,
    spec: &ProblemSpec,
    schedule: &[f64],
    opts: &SolverOptions,
    crit: &CriticalOptions,
) -> std::result::Result<(ScalarField<'m>, HomotopyTrace), Box<HomotopyFailure>> {
    let fail = |error: Error, trace: HomotopyTrace| Box::new(HomotopyFailure { error, trace });
    let mut trace = HomotopyTrace::default();
    if schedule.is_empty()
        || schedule.windows(2).any(|w| !(w[0] < w[1]))
        || schedule[0] < 0.0
        || *schedule.last().unwrap() != 1.0
    {
        return Err(fail(
            Error::InvalidParameter("schedule must increase strictly within [0, 1] and end at 1".into()),
            trace,
        ));
    }
    let disc = Discretization::new(mesh, spec.n_dim);
    let record = |field: &ScalarField<'_>, report: &SolveReport, inserted: bool| {
        let records = find_critical_points(field, spec.mean_curvature, crit);
        let counts = CriticalCounts::of(&records);
        HomotopyStep {
            t: report.t,
            inserted,
            iterations: report.iterations,
            final_residual_norm: report.final_residual_norm,
            compatibility_multiplier: report.compatibility_multiplier,
            min_value: field.values.iter().cloned().fold(f64::INFINITY, f64::min),
            max_value: field.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            counts,
            morse: counts.degenerate == 0,
            critical_points: records,
        }
    };

    let mut current: Vec<f64>;
    let mut t_prev;
    let t0 = schedule[0];
    let start = if t0 == 0.0 {
        match poisson_init(mesh, spec) {
            Ok((f, _)) => f.values,
            Err(e) => return Err(fail(e, trace)),
        }
    } else {
        vec![0.0; mesh.n_vertices()]
    };
    match newton_solve_with(&disc, &spec.with_t(t0), &start, opts) {
        Ok((f, rep)) => {
            trace.steps.push(record(&f, &rep, false));
            current = f.values;
            t_prev = t0;
        }
        Err(e) => {
            trace.failure = Some(e.to_string());
            return Err(fail(e, trace));
        }
    }

    for &target in &schedule[1..] {
        let mut dt = target - t_prev;
        while t_prev < target {
            let t = if t_prev + dt >= target { target } else { t_prev + dt };
            match newton_solve_with(&disc, &spec.with_t(t), &current, opts) {
                Ok((f, rep)) => {
                    trace.steps.push(record(&f, &rep, t != target));
                    current = f.values;
                    t_prev = t;
                }
                Err(e @ Error::SolverFailure { .. }) | Err(e @ Error::LinearFailure(_)) => {
                    dt *= 0.5;
                    if dt < MIN_HOMOTOPY_STEP * (1.0 - 1e-12) {
                        trace.failure = Some(e.to_string());
                        return Err(fail(e, trace));
                    }
                }
                Err(e) => {
                    trace.failure = Some(e.to_string());
                    return Err(fail(e, trace));
                }
            }
        }
    }
    Ok((ScalarField { mesh, values: current }, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{triangulate, ConvexDomain};
    use crate::mc_operator::residual;
    use crate::radial::{RadialPoisson, RadialSolution};
    use crate::sparse::SparseMatrix;

    fn disk(h: f64) -> TriMesh {
        triangulate(&ConvexDomain::disk(1.0).unwrap(), h).unwrap()
    }

    fn radius(p: [f64; 2]) -> f64 {
        p[0].hypot(p[1])
    }

    #[test]
    fn robin_disk_matches_radial_solution() {
        let mesh = disk(0.1);
        let spec = ProblemSpec::robin(0.8, 1.0).unwrap();
        let (u, rep) = newton_solve(&mesh, &spec, &ScalarField::zeros(&mesh), &SolverOptions::default()).unwrap();
        assert!(rep.converged && rep.final_residual_norm <= 1e-10);
        let exact = RadialSolution::robin(2, 0.8, 1.0, 1.0).unwrap();
        let err = mesh
            .vertices
            .iter()
            .zip(&u.values)
            .map(|(p, v)| (v - exact.value(radius(*p)).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 5e-3, "max error {err}");
    }

    #[test]
    fn residual_norm_is_monotone() {
        let mesh = disk(0.15);
        let spec = ProblemSpec::robin(1.2, 0.5).unwrap();
        let (_, rep) = newton_solve(&mesh, &spec, &ScalarField::zeros(&mesh), &SolverOptions::default()).unwrap();
        for w in rep.residual_history.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert_eq!(rep.damping_history.len(), rep.iterations);
    }

    #[test]
    fn infeasible_neumann_rejected() {
        let mesh = disk(0.1);
        let spec = ProblemSpec::neumann(1.0, 0.5).unwrap();
        let err = newton_solve(&mesh, &spec, &ScalarField::zeros(&mesh), &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
    }

    #[test]
    fn neumann_gauge_invariance() {
        let mesh = disk(0.15);
        let spec = ProblemSpec::neumann(0.6, 0.5).unwrap();
        let (u, _) = newton_solve(&mesh, &spec, &ScalarField::zeros(&mesh), &SolverOptions::default()).unwrap();
        let shifted = ScalarField::new(&mesh, u.values.iter().map(|v| v + 3.7).collect()).unwrap();
        let (r0, r1) = (residual(&u, &spec), residual(&shifted, &spec));
        for (a, b) in r0.iter().zip(&r1) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn neumann_flux_identity() {
        let mesh = disk(0.1);
        let spec = ProblemSpec::neumann(0.6, 0.5).unwrap();
        let opts = SolverOptions::default();
        let (u, rep) = newton_solve(&mesh, &spec, &ScalarField::zeros(&mesh), &opts).unwrap();
        let disc = Discretization::new(&mesh, 2);
        let lambda = rep.compatibility_multiplier.unwrap();
        let flux = disc.total_flux(&u.values, &spec) + lambda * disc.boundary_measure();
        let demand = spec.mean_curvature * disc.measure();
        assert!((flux - demand).abs() <= 10.0 * opts.newton_tol * mesh.n_vertices() as f64);
        // mass-weighted mean zero
        assert!(weighted_mean(&u.values, disc.mass()).abs() < 1e-14);
    }

    #[test]
    fn poisson_robin_disk() {
        let mesh = disk(0.05);
        let spec = ProblemSpec::robin(0.8, 1.0).unwrap();
        let (v, incompat) = poisson_init(&mesh, &spec).unwrap();
        assert_eq!(incompat, 0.0);
        let exact = RadialPoisson::robin(2, 0.8, 1.0, 1.0);
        let center = v.eval([0.0, 0.0]).unwrap();
        assert!((center - exact.value(0.0)).abs() < 5e-3, "v(0) = {center}");
    }

    #[test]
    fn poisson_neumann_compatible_and_not() {
        let mesh = disk(0.05);
        let disc = Discretization::new(&mesh, 2);
        // discretely compatible flux c = H |Ω_h| / |∂Ω_h|
        let h_mc = 0.6;
        let c = h_mc * disc.measure() / disc.boundary_measure();
        let spec = ProblemSpec::neumann(h_mc, c).unwrap();
        let (v, incompat) = poisson_init(&mesh, &spec).unwrap();
        assert!(incompat.abs() < 1e-12);
        let shift = weighted_mean(&mesh.vertices.iter().map(|p| 0.15 * radius(*p).powi(2)).collect::<Vec<_>>(), disc.mass());
        let err = mesh
            .vertices
            .iter()
            .zip(&v.values)
            .map(|(p, x)| (x - (0.15 * radius(*p).powi(2) - shift)).abs())
            .fold(0.0, f64::max);
        assert!(err < 2e-3, "error {err}");

        let spec = ProblemSpec::neumann(0.6, 0.5).unwrap();
        let (_, incompat) = poisson_init(&mesh, &spec).unwrap();
        let oracle = 0.5 * std::f64::consts::TAU - 0.6 * std::f64::consts::PI;
        assert!((incompat - oracle).abs() < 5e-3, "{incompat} vs {oracle}");
    }

    #[test]
    fn homotopy_path_independence() {
        let mesh = disk(0.15);
        let spec = ProblemSpec::robin(0.5, 1.0).unwrap();
        let opts = SolverOptions::default();
        let crit = CriticalOptions::default();
        let (a, trace) = homotopy_solve(&mesh, &spec, &uniform_schedule(10), &opts, &crit).unwrap();
        assert_eq!(trace.steps.len(), 11);
        assert!(trace.complete());
        let (b, _) = homotopy_solve(&mesh, &spec, &[1.0], &opts, &crit).unwrap();
        let diff = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-8);
        for s in &trace.steps {
            assert_eq!(s.counts.minima, 1);
            assert_eq!(s.counts.saddles, 0);
            assert!(radius(s.critical_points[0].location) <= mesh.h);
        }
    }

    #[test]
    fn bad_schedules_rejected() {
        let mesh = disk(0.25);
        let spec = ProblemSpec::robin(0.5, 1.0).unwrap();
        let o = SolverOptions::default();
        let c = CriticalOptions::default();
        assert!(homotopy_solve(&mesh, &spec, &[0.0, 0.5], &o, &c).is_err());
        assert!(homotopy_solve(&mesh, &spec, &[0.5, 0.2, 1.0], &o, &c).is_err());
    }

    #[test]
    fn identity_linear_solve() {
        let a = SparseMatrix::identity(4);
        let s = linear_solve(&a, &[1.0, 2.0, 3.0, 4.0], &Constraint::None).unwrap();
        assert_eq!(s.x, vec![1.0, 2.0, 3.0, 4.0]);
    }
}
