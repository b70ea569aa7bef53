//! Period-map (Serrin) iteration: march the Cauchy solution started from
//! zero across whole periods, detect the Cauchy property of the iterates,
//! and validate the resulting time-periodic state.

use serde::{Deserialize, Serialize};

use crate::field::DistributionField;
use crate::fit::DecayFit;
use crate::forcing::ForceField;
use crate::solver::Solver;
use crate::spectral::{BesovQ, DyadicFilter};
use crate::{Error, Result};

/// Convergence report of the period-map iteration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodMapReport {
    /// Norm of each iterate f(nT) in the convergence norm.
    pub iterate_norms: Vec<f64>,
    /// Successive differences d_n = ||f((n+1)T) - f(nT)||.
    pub differences: Vec<f64>,
    /// Regularity shift of the convergence norm (epsilon).
    pub epsilon: f64,
    /// Envelope constant: max_n d_n * (1 + nT)^{1/4 - eps/2}.
    pub envelope_constant: f64,
    /// Terminal periodicity residual ||f_T(T) - f_T(0)|| (filled by the
    /// verification pass).
    pub periodicity_residual: Option<f64>,
    pub converged: bool,
    pub periods_run: usize,
}

impl PeriodMapReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,norm,d_n\n");
        for (n, norm) in self.iterate_norms.iter().enumerate() {
            let d = self
                .differences
                .get(n)
                .map(|d| d.to_string())
                .unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", n, norm, d));
        }
        out
    }
}

/// The norm the iteration contracts in: `L^2_v(B^{1-eps}_{2,inf} + H^{N-1})`.
pub fn convergence_norm(f: &DistributionField, epsilon: f64, n_order: usize) -> f64 {
    let filter = DyadicFilter::for_grid(&f.space);
    f.besov_l2v(&filter, 1.0 - epsilon, BesovQ::Inf) + f.sobolev_l2v((n_order - 1) as f64)
}

fn field_difference(a: &DistributionField, b: &DistributionField) -> DistributionField {
    let mut out = a.clone();
    for (x, y) in out.coeffs.iter_mut().zip(b.coeffs.iter()) {
        *x -= y;
    }
    out
}

/// Settings for the iteration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodMapSettings {
    pub period: f64,
    pub epsilon: f64,
    pub n_max: usize,
    pub tol: f64,
}

impl Default for PeriodMapSettings {
    fn default() -> Self {
        PeriodMapSettings {
            period: 2.0 * std::f64::consts::PI,
            epsilon: 0.1,
            n_max: 200,
            tol: 1e-9,
        }
    }
}

/// Run the iteration from the given start (normally zero). Returns the last
/// iterate as the candidate periodic state and the convergence report.
pub fn serrin_iterate(
    solver: &Solver,
    force: &ForceField,
    start: DistributionField,
    settings: &PeriodMapSettings,
) -> Result<(DistributionField, PeriodMapReport)> {
    if !(0.0..0.5).contains(&settings.epsilon) {
        return Err(Error::InvalidParameter(
            "period-map epsilon must lie in (0, 1/2)".into(),
        ));
    }
    let steps_per_period = (settings.period / solver.cfg.dt).round() as u64;
    if ((steps_per_period as f64) * solver.cfg.dt - settings.period).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "time step {} does not divide the period {}",
            solver.cfg.dt, settings.period
        )));
    }
    let n_order = solver.cfg.n_order;
    let mut current = start;
    let mut iterate_norms = vec![convergence_norm(&current, settings.epsilon, n_order)];
    let mut differences = Vec::new();
    let mut converged = false;
    for _ in 0..settings.n_max {
        let (next, _) = solver.solve(
            current.clone(),
            force,
            settings.period,
            steps_per_period,
        )?;
        let diff = field_difference(&next, &current);
        let d = convergence_norm(&diff, settings.epsilon, n_order);
        differences.push(d);
        iterate_norms.push(convergence_norm(&next, settings.epsilon, n_order));
        current = next;
        if d < settings.tol {
            converged = true;
            break;
        }
    }
    let mut envelope_constant = 0.0f64;
    for (n, d) in differences.iter().enumerate() {
        let weight = (1.0 + (n as f64 + 1.0) * settings.period)
            .powf(0.25 - settings.epsilon / 2.0);
        envelope_constant = envelope_constant.max(d * weight);
    }
    let report = PeriodMapReport {
        iterate_norms,
        differences: differences.clone(),
        epsilon: settings.epsilon,
        envelope_constant,
        periodicity_residual: None,
        converged,
        periods_run: differences.len(),
    };
    if !converged && settings.tol > 0.0 {
        // Convergence failure is reported, not fatal: the caller decides.
        eprintln!(
            "period map did not reach tol {} in {} periods; last d_n = {:?}",
            settings.tol,
            settings.n_max,
            differences.last()
        );
    }
    Ok((current, report))
}

/// Integrate one period from the candidate and return the residual
/// `||f(T) - f_T(0)||` in the convergence norm.
pub fn verify_periodicity(
    solver: &Solver,
    force: &ForceField,
    candidate: &DistributionField,
    settings: &PeriodMapSettings,
) -> Result<f64> {
    let steps_per_period = (settings.period / solver.cfg.dt).round() as u64;
    let mut start = candidate.clone();
    // The candidate represents f_T(0); integrate one forcing period from a
    // fresh phase origin.
    start.step = 0;
    start.time = 0.0;
    let (end, _) = solver.solve(start, force, settings.period, steps_per_period)?;
    let diff = field_difference(&end, candidate);
    Ok(convergence_norm(
        &diff,
        settings.epsilon,
        solver.cfg.n_order,
    ))
}

/// Stationary oracle: with `E = -grad(phi)` the converged state must match
/// `F = e^{-phi} M`. Returns the relative L^2_{x,v} error of `F` against the
/// closed form.
pub fn stationary_relative_error(
    _solver: &Solver,
    phi_coeffs: &[num_complex::Complex64],
    converged: &DistributionField,
) -> Result<f64> {
    use num_complex::Complex64;
    let space = &converged.space;
    let vgrid = &converged.vgrid;
    let tf = crate::spectral::Transform::new(space);
    // Physical samples of phi.
    let mut phi = phi_coeffs.to_vec();
    tf.inverse(&mut phi);
    let phys = converged.to_physical(&tf);
    let mut num = 0.0;
    let mut den = 0.0;
    for p in 0..space.modes() {
        let w = (-phi[p].re).exp();
        for k in 0..vgrid.len() {
            let m = vgrid.maxw.m[k];
            let f_solver = m + vgrid.maxw.sqrt_m[k] * phys[(p, k)].re;
            let f_exact = w * m;
            num += (f_solver - f_exact).powi(2);
            den += f_exact.powi(2);
        }
    }
    let _ = Complex64::ZERO;
    if den == 0.0 {
        return Err(Error::Numerical("empty stationary reference".into()));
    }
    Ok((num / den).sqrt())
}

/// Evolve the perturbed and unperturbed solutions from the periodic state
/// and fit the decay of their difference in `L^2_v(H^s)` against
/// `(1+t)^{-s/2 - (3/2)(1/p - 1/2)}`.
pub struct PerturbationReturnStudy {
    pub s: f64,
    pub p: f64,
    pub horizon: f64,
    pub fit_window: (f64, f64),
}

pub fn perturbation_return(
    solver: &Solver,
    force: &ForceField,
    periodic_state: &DistributionField,
    perturbation: &DistributionField,
    settings: &PeriodMapSettings,
    study: &PerturbationReturnStudy,
) -> Result<DecayFit> {
    let steps_per_period = (settings.period / solver.cfg.dt).round() as u64;
    let expected = study.s / 2.0 + 1.5 * (1.0 / study.p - 0.5);
    let mut base = periodic_state.clone();
    base.step = 0;
    base.time = 0.0;
    let mut pert = periodic_state.clone();
    for (x, y) in pert.coeffs.iter_mut().zip(perturbation.coeffs.iter()) {
        *x += y;
    }
    pert.step = 0;
    pert.time = 0.0;

    let sample_every = (study.horizon / (40.0 * solver.cfg.dt)).ceil().max(1.0) as usize;
    let steps = (study.horizon / solver.cfg.dt).round() as usize;
    let mut samples = Vec::new();
    {
        let diff = field_difference(&pert, &base);
        samples.push((0.0, diff.sobolev_l2v(study.s)));
    }
    let mut a = base;
    let mut b = pert;
    for s in 0..steps {
        solver.step(&mut a, force, steps_per_period)?;
        solver.step(&mut b, force, steps_per_period)?;
        if (s + 1) % sample_every == 0 || s + 1 == steps {
            let diff = field_difference(&b, &a);
            samples.push((a.time, diff.sobolev_l2v(study.s)));
        }
    }
    Ok(crate::fit::fit_algebraic(
        format!("perturbation_return_s{}_p{}", study.s, study.p),
        &samples,
        study.fit_window,
        Some(expected),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::{assemble_linearized, Collision};
    use crate::forcing::Profile;
    use crate::solver::{Scheme, SolverConfig};
    use crate::spectral::SpatialGrid;
    use crate::velocity::build_grid;
    use std::sync::Arc;

    fn make_solver(dt: f64) -> Solver {
        let space = SpatialGrid::new(1, 8, 2.0 * std::f64::consts::PI).unwrap();
        let vgrid = Arc::new(build_grid(4.5, 6, 14).unwrap());
        let col = Collision::new(vgrid.clone());
        let op = Arc::new(assemble_linearized(&col).unwrap());
        let cfg = SolverConfig {
            dt,
            scheme: Scheme::Strang,
            n_order: 4,
            monitor_every: 10_000,
            ..Default::default()
        };
        Solver::new(space, col, op, cfg).unwrap()
    }

    #[test]
    fn zero_force_converges_at_first_period() {
        let solver = make_solver(std::f64::consts::PI / 16.0);
        let force = ForceField::zero(solver.space.clone());
        let settings = PeriodMapSettings {
            period: 2.0 * std::f64::consts::PI,
            epsilon: 0.1,
            n_max: 5,
            tol: 1e-9,
        };
        let start = DistributionField::zero(solver.space.clone(), solver.vgrid().clone());
        let (state, report) = serrin_iterate(&solver, &force, start, &settings).unwrap();
        assert!(report.converged);
        assert_eq!(report.periods_run, 1);
        assert_eq!(report.differences[0], 0.0);
        assert_eq!(state.l2_norm(), 0.0);
        let res = verify_periodicity(&solver, &force, &state, &settings).unwrap();
        assert_eq!(res, 0.0);
    }

    #[test]
    fn iteration_is_period_map_composition() {
        // Two periods of the iteration equal one two-period integration,
        // bit for bit: the iteration literally composes the time-T map.
        let solver = make_solver(std::f64::consts::PI / 16.0);
        let space = solver.space.clone();
        let phi = ForceField::gaussian_potential_coeffs(&space, 2e-3, 0.8);
        let force = ForceField::potential(space.clone(), &phi)
            .unwrap()
            .with_modulation(2.0 * std::f64::consts::PI, Profile::Sin)
            .unwrap();
        let settings = PeriodMapSettings {
            period: 2.0 * std::f64::consts::PI,
            epsilon: 0.1,
            n_max: 2,
            tol: 0.0,
        };
        let start = DistributionField::zero(space.clone(), solver.vgrid().clone());
        let (two_iter, _) = serrin_iterate(&solver, &force, start.clone(), &settings).unwrap();
        let spp = (settings.period / solver.cfg.dt).round() as u64;
        let (direct, _) = solver
            .solve(start, &force, 2.0 * settings.period, spp)
            .unwrap();
        assert_eq!(two_iter.coeffs, direct.coeffs);
    }

    #[test]
    fn stationary_error_vanishes_for_zero_potential() {
        let solver = make_solver(0.1);
        let space = solver.space.clone();
        let phi = vec![num_complex::Complex64::ZERO; space.modes()];
        let f = DistributionField::zero(space, solver.vgrid().clone());
        let err = stationary_relative_error(&solver, &phi, &f).unwrap();
        assert_eq!(err, 0.0);
    }
}
