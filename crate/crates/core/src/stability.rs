//! Two-solution difference experiments: evolve a pair of solutions under
//! the same force and fit the time-weighted decay of their difference in
//! the norm families of the stability estimate.

use serde::{Deserialize, Serialize};

use crate::field::{synthesize_shell_field, DistributionField, ShellSynthesis};
use crate::fit::{fit_algebraic, DecayFit};
use crate::forcing::ForceField;
use crate::solver::Solver;
use crate::spectral::{BesovQ, DyadicFilter};
use crate::{Error, Result};

/// A two-solution decay scenario.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityScenario {
    /// Initial-difference regularity, in (-3/2, 1/2].
    pub s0: f64,
    /// Target regularities for the difference norm, each >= s0.
    pub targets: Vec<f64>,
    pub epsilon: f64,
    pub amplitude: f64,
    pub seed: u64,
    pub horizon: f64,
    pub fit_window: (f64, f64),
    /// Steps between difference-norm samples.
    pub sample_every: usize,
}

impl StabilityScenario {
    pub fn validate(&self) -> Result<()> {
        if !(-1.5..=0.5).contains(&self.s0) || self.s0 <= -1.5 {
            return Err(Error::InvalidParameter(format!(
                "s0 must lie in (-3/2, 1/2], got {}",
                self.s0
            )));
        }
        for s in &self.targets {
            if *s < self.s0 {
                return Err(Error::InvalidParameter(format!(
                    "target s = {s} below s0 = {}",
                    self.s0
                )));
            }
            if *s < -1.5 + self.epsilon || *s > 1.0 - self.epsilon {
                return Err(Error::InvalidParameter(format!(
                    "target s = {s} outside [-3/2 + eps, 1 - eps]"
                )));
            }
        }
        Ok(())
    }
}

/// Realize the `B^{s0}_{2,inf}` membership hypothesis with a dyadic-shell
/// random field.
pub fn synthesize_initial_difference(
    space: &crate::spectral::SpatialGrid,
    vgrid: &std::sync::Arc<crate::velocity::VelocityGrid>,
    s0: f64,
    amplitude: f64,
    seed: u64,
) -> DistributionField {
    synthesize_shell_field(
        space,
        vgrid,
        &ShellSynthesis {
            s0,
            amplitude,
            seed,
            micro_only: false,
            axis_aligned: false,
        },
    )
}

/// The fitted decay data of one run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DifferenceDecayOutcome {
    pub fits: Vec<DecayFit>,
    /// (t, norm) series for the micro / weighted / mixed families.
    pub micro_series: Vec<(f64, f64)>,
    pub micro_fit: DecayFit,
}

/// Evolve the pair `(f0_base + g0, f0_base)` and fit the decay of the
/// difference in each requested norm.
pub fn run_difference_decay(
    solver: &Solver,
    force: &ForceField,
    f0_base: &DistributionField,
    g0: &DistributionField,
    sc: &StabilityScenario,
) -> Result<DifferenceDecayOutcome> {
    sc.validate()?;
    let filter = DyadicFilter::for_grid(&solver.space);
    let n_order = solver.cfg.n_order;
    let mut a = f0_base.clone();
    let mut b = f0_base.clone();
    for (x, y) in b.coeffs.iter_mut().zip(g0.coeffs.iter()) {
        *x += y;
    }
    let steps = (sc.horizon / solver.cfg.dt).round() as usize;
    let mut series: Vec<Vec<(f64, f64)>> = vec![Vec::new(); sc.targets.len()];
    let mut micro_series = Vec::new();
    let mut record = |t: f64, a: &DistributionField, b: &DistributionField,
                      series: &mut Vec<Vec<(f64, f64)>>,
                      micro_series: &mut Vec<(f64, f64)>| {
        let mut diff = a.clone();
        for (x, y) in diff.coeffs.iter_mut().zip(b.coeffs.iter()) {
            *x -= y;
        }
        for (si, s) in sc.targets.iter().enumerate() {
            let v = diff.besov_l2v(&filter, *s, BesovQ::Inf)
                + diff.sobolev_l2v((n_order - 1) as f64);
            series[si].push((t, v));
        }
        let (_, micro) = diff.macro_micro();
        let weighted = diff.velocity_weighted();
        let micro_norm = micro.l2_norm()
            + weighted.sobolev_l2v(1.0)
            + weighted.sobolev_l2v((n_order - 2) as f64);
        micro_series.push((t, micro_norm));
    };
    record(0.0, &b, &a, &mut series, &mut micro_series);
    for s in 0..steps {
        solver.step(&mut a, force, 0)?;
        solver.step(&mut b, force, 0)?;
        if (s + 1) % sc.sample_every == 0 || s + 1 == steps {
            record(a.time, &b, &a, &mut series, &mut micro_series);
        }
    }
    let mut fits = Vec::new();
    for (si, s) in sc.targets.iter().enumerate() {
        let mut fit = fit_algebraic(
            format!("difference_s{}", s),
            &series[si],
            sc.fit_window,
            Some(0.5 * (s - sc.s0)),
        );
        fit.parameter = Some(*s);
        fits.push(fit);
    }
    let micro_fit = fit_algebraic(
        "difference_micro_weighted",
        &micro_series,
        sc.fit_window,
        Some(0.5 * (1.0 - sc.epsilon - sc.s0)),
    );
    Ok(DifferenceDecayOutcome {
        fits,
        micro_series,
        micro_fit,
    })
}

/// Residual of the difference equation
/// `d/dt w + v.grad_x w + L w = Gamma-polarization - E.grad_v w + E.v w / 2`
/// evaluated on two discrete snapshots by central differencing; used as a
/// scheme-order consistency check.
pub fn error_equation_residual(
    solver: &Solver,
    force: &ForceField,
    f1_prev: &DistributionField,
    f1_next: &DistributionField,
    f2_prev: &DistributionField,
    f2_next: &DistributionField,
    theta_mid: f64,
) -> Result<f64> {
    use num_complex::Complex64;
    let space = &solver.space;
    let vgrid = solver.vgrid();
    let tf = crate::spectral::Transform::new(space);
    let dt = f1_next.time - f1_prev.time;
    if dt <= 0.0 {
        return Err(Error::InvalidParameter("snapshots out of order".into()));
    }
    let modes = space.modes();
    let nodes = vgrid.len();
    let mid = |a: &DistributionField, b: &DistributionField| -> DistributionField {
        let mut out = a.clone();
        for (x, y) in out.coeffs.iter_mut().zip(b.coeffs.iter()) {
            *x = 0.5 * (*x + y);
        }
        out
    };
    let f1_mid = mid(f1_prev, f1_next);
    let f2_mid = mid(f2_prev, f2_next);
    let mut w_mid = f1_mid.clone();
    for (x, y) in w_mid.coeffs.iter_mut().zip(f2_mid.coeffs.iter()) {
        *x -= y;
    }
    let mut sum_mid = f1_mid.clone();
    for (x, y) in sum_mid.coeffs.iter_mut().zip(f2_mid.coeffs.iter()) {
        *x += y;
    }

    // dw/dt by central difference.
    let mut residual = Array2Like::new(modes, nodes);
    for flat in 0..modes {
        for k in 0..nodes {
            let dwdt = ((f1_next.coeffs[(flat, k)] - f2_next.coeffs[(flat, k)])
                - (f1_prev.coeffs[(flat, k)] - f2_prev.coeffs[(flat, k)]))
                / dt;
            residual.set(flat, k, dwdt);
        }
    }
    // + v.grad_x w + L w (spectral transport, dense collision).
    for flat in 0..modes {
        let xi = space.wavenumber(flat);
        let row: Vec<Complex64> = w_mid.coeffs.row(flat).to_vec();
        let lw = solver.op.apply_complex(&row);
        for k in 0..nodes {
            let v = vgrid.nodes[k];
            let tr = v[0] * xi[0] + v[1] * xi[1] + v[2] * xi[2];
            let cur = residual.get(flat, k);
            residual.set(
                flat,
                k,
                cur + Complex64::new(0.0, tr) * row[k] + lw[k],
            );
        }
    }
    // - Gamma polarization - force couplings, evaluated pseudo-spectrally.
    let phys_sum = sum_mid.to_physical(&tf);
    let phys_w = w_mid.to_physical(&tf);
    let deriv = crate::derivatives::VelocityDerivative::new(vgrid);
    let mut dv_phys = Vec::new();
    for axis in 0..3 {
        let mut d = w_mid.clone();
        for flat in 0..modes {
            let row: Vec<Complex64> = w_mid.coeffs.row(flat).to_vec();
            let dr = deriv.apply_complex(&row, axis);
            for k in 0..nodes {
                d.coeffs[(flat, k)] = dr[k];
            }
        }
        dv_phys.push(d.to_physical(&tf));
    }
    let mut nl_phys = ndarray::Array2::<Complex64>::zeros((modes, nodes));
    for p in 0..modes {
        let sx: Vec<f64> = (0..nodes).map(|k| phys_sum[(p, k)].re).collect();
        let wx: Vec<f64> = (0..nodes).map(|k| phys_w[(p, k)].re).collect();
        // Exact bilinear polarization:
        // Gamma(f1,f1) - Gamma(f2,f2) = (Gamma(s,w) + Gamma(w,s)) / 2.
        let g1 = solver.collision.gamma(&sx, &wx)?;
        let g2 = solver.collision.gamma(&wx, &sx)?;
        let e = [
            theta_mid * force.physical[0][p],
            theta_mid * force.physical[1][p],
            theta_mid * force.physical[2][p],
        ];
        for k in 0..nodes {
            let v = vgrid.nodes[k];
            let ev = e[0] * v[0] + e[1] * v[1] + e[2] * v[2];
            let mut acc = Complex64::new(0.5 * (g1[k] + g2[k]), 0.0)
                + Complex64::new(0.5 * ev, 0.0) * phys_w[(p, k)];
            for a in 0..3 {
                if e[a] != 0.0 {
                    acc -= e[a] * dv_phys[a][(p, k)];
                }
            }
            nl_phys[(p, k)] = acc;
        }
    }
    let mask = solver.dealias_mask();
    let mut scratch = vec![Complex64::ZERO; modes];
    for k in 0..nodes {
        for p in 0..modes {
            scratch[p] = nl_phys[(p, k)];
        }
        tf.forward(&mut scratch);
        for p in 0..modes {
            // Match the solver's dealiasing convention for the nonlinear
            // terms.
            if solver.cfg.dealias && !mask[p] {
                continue;
            }
            let cur = residual.get(p, k);
            residual.set(p, k, cur - scratch[p]);
        }
    }
    let mut acc = 0.0;
    for flat in 0..modes {
        for k in 0..nodes {
            acc += residual.get(flat, k).norm_sqr();
        }
    }
    Ok((space.volume() * vgrid.w * acc).sqrt())
}

/// Minimal dense complex buffer (keeps the borrow checker quiet in the
/// residual assembly).
struct Array2Like {
    data: Vec<num_complex::Complex64>,
    cols: usize,
}

impl Array2Like {
    fn new(rows: usize, cols: usize) -> Self {
        Array2Like {
            data: vec![num_complex::Complex64::ZERO; rows * cols],
            cols,
        }
    }
    #[inline]
    fn get(&self, r: usize, c: usize) -> num_complex::Complex64 {
        self.data[r * self.cols + c]
    }
    #[inline]
    fn set(&mut self, r: usize, c: usize, v: num_complex::Complex64) {
        self.data[r * self.cols + c] = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::{assemble_linearized, Collision};
    use crate::solver::{Scheme, SolverConfig};
    use crate::spectral::SpatialGrid;
    use crate::velocity::build_grid;
    use std::sync::Arc;

    fn make_solver(dt: f64) -> Solver {
        let space = SpatialGrid::new(1, 16, 16.0 * std::f64::consts::PI).unwrap();
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
    fn scenario_validation() {
        let ok = StabilityScenario {
            s0: -0.5,
            targets: vec![0.0, 0.5],
            epsilon: 0.1,
            amplitude: 1e-3,
            seed: 1,
            horizon: 10.0,
            fit_window: (2.0, 10.0),
            sample_every: 5,
        };
        assert!(ok.validate().is_ok());
        let bad = StabilityScenario {
            targets: vec![-1.0],
            ..ok.clone()
        };
        assert!(bad.validate().is_err());
        let bad2 = StabilityScenario {
            s0: -1.6,
            ..ok
        };
        assert!(bad2.validate().is_err());
    }

    #[test]
    fn synthesis_reproducible_and_linear() {
        let space = SpatialGrid::new(1, 32, 16.0 * std::f64::consts::PI).unwrap();
        let vgrid = Arc::new(build_grid(4.5, 6, 6).unwrap());
        let a = synthesize_initial_difference(&space, &vgrid, -0.5, 1e-3, 9);
        let b = synthesize_initial_difference(&space, &vgrid, -0.5, 1e-3, 9);
        assert_eq!(a.coeffs, b.coeffs);
        let c = synthesize_initial_difference(&space, &vgrid, -0.5, 2e-3, 9);
        for (x, y) in a.coeffs.iter().zip(c.coeffs.iter()) {
            assert!((y - x * 2.0).norm() < 1e-15);
        }
    }

    #[test]
    fn identical_pair_stays_identical() {
        let solver = make_solver(0.1);
        let force = ForceField::zero(solver.space.clone());
        let f0 = synthesize_initial_difference(
            &solver.space,
            solver.vgrid(),
            0.0,
            1e-3,
            3,
        );
        let zero = DistributionField::zero(solver.space.clone(), solver.vgrid().clone());
        let sc = StabilityScenario {
            s0: 0.0,
            targets: vec![0.5],
            epsilon: 0.1,
            amplitude: 1e-3,
            seed: 3,
            horizon: 1.0,
            fit_window: (0.0, 1.0),
            sample_every: 2,
        };
        let out = run_difference_decay(&solver, &force, &f0, &zero, &sc).unwrap();
        for (_, v) in &out.micro_series {
            assert_eq!(*v, 0.0);
        }
    }

    #[test]
    fn error_equation_residual_is_scheme_order() {
        // The residual of the difference equation, evaluated on solver
        // snapshots, shrinks at the scheme's order under step refinement.
        // Content is kept on slow modes: the central time difference needs
        // |v.xi| dt well below one to expose the quadratic scaling.
        let space = SpatialGrid::new(1, 8, 8.0 * std::f64::consts::PI).unwrap();
        let vgrid = Arc::new(build_grid(4.5, 6, 14).unwrap());
        let col = Collision::new(vgrid.clone());
        let op = Arc::new(assemble_linearized(&col).unwrap());
        let phi = ForceField::gaussian_potential_coeffs(&space, 2e-3, 0.8);
        let force = ForceField::potential(space.clone(), &phi).unwrap();

        let f1_0 = synthesize_shell_field(
            &space,
            &vgrid,
            &ShellSynthesis {
                s0: 0.0,
                amplitude: 2e-2,
                seed: 4,
                micro_only: false,
                axis_aligned: false,
            },
        );
        let g0 = synthesize_shell_field(
            &space,
            &vgrid,
            &ShellSynthesis {
                s0: 0.0,
                amplitude: 1e-2,
                seed: 5,
                micro_only: false,
                axis_aligned: false,
            },
        );
        let band_limit = |f: &mut crate::field::DistributionField| {
            for flat in 0..space.modes() {
                if space.mode_ivec(flat)[0].abs() > 1 {
                    for k in 0..f.nodes() {
                        f.coeffs[(flat, k)] = num_complex::Complex64::ZERO;
                    }
                }
            }
        };
        let mut f1_0 = f1_0;
        let mut g0 = g0;
        band_limit(&mut f1_0);
        band_limit(&mut g0);
        let residual_at = |dt: f64| -> f64 {
            let cfg = SolverConfig {
                dt,
                scheme: Scheme::Strang,
                n_order: 3,
                monitor_every: 10_000,
                ..Default::default()
            };
            let solver = Solver::new(space.clone(), col.clone(), op.clone(), cfg).unwrap();
            let mut f1 = f1_0.clone();
            let mut f2 = f1_0.clone();
            for (x, y) in f2.coeffs.iter_mut().zip(g0.coeffs.iter()) {
                *x += y;
            }
            // Warm up to a fixed time so the stiff micro transient is gone
            // regardless of the step size, then take one central pair.
            let warm_steps = (1.0 / dt).round() as usize;
            for _ in 0..warm_steps {
                solver.step(&mut f1, &force, 0).unwrap();
                solver.step(&mut f2, &force, 0).unwrap();
            }
            let f1_prev = f1.clone();
            let f2_prev = f2.clone();
            solver.step(&mut f1, &force, 0).unwrap();
            solver.step(&mut f1, &force, 0).unwrap();
            solver.step(&mut f2, &force, 0).unwrap();
            solver.step(&mut f2, &force, 0).unwrap();
            error_equation_residual(&solver, &force, &f1_prev, &f1, &f2_prev, &f2, 1.0)
                .unwrap()
        };
        let r1 = residual_at(0.1);
        let r2 = residual_at(0.05);
        assert!(
            r1 / r2 > 2.5,
            "residual not scheme-order: {r1} -> {r2} (ratio {})",
            r1 / r2
        );
    }
}
