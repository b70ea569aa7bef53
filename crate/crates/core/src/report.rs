//! Run orchestration, artifact emission, and report comparison.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cache;
use crate::collision::{assemble_linearized, Budget, Collision};
use crate::config::{ExperimentBlock, ForceBlock, RunConfig};
use crate::field::{synthesize_shell_field, DistributionField, ShellSynthesis};
use crate::fit::{fits_to_csv, loglog_slope};
use crate::forcing::ForceField;
use crate::period::{
    serrin_iterate, stationary_relative_error, verify_periodicity, PeriodMapSettings,
};
use crate::semigroup::{
    dense_amplitude_series, verify_besov_decay, verify_pointwise_decay, BesovDecayStudy,
    ModeOperator, PointwiseDecayStudy,
};
use crate::solver::{lyapunov_monitor, Solver, SolverConfig};
use crate::spectral::SpatialGrid;
use crate::stability::{run_difference_decay, synthesize_initial_difference, StabilityScenario};
use crate::{Error, Result};

/// Run manifest: configuration hash, code version, and phase timings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    pub workers: usize,
    /// Wall-clock seconds per phase. Timings vary run to run; every other
    /// artifact is byte-deterministic for a fixed config and seed.
    pub timings: BTreeMap<String, f64>,
}

/// Files written by a run.
#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
}

fn write_artifact(
    dir: &Path,
    name: &str,
    contents: &str,
    artifacts: &mut Artifacts,
) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    artifacts.files.push(path.clone());
    Ok(path)
}

/// JSON value with the embedded config hash all reports carry.
fn report_value<T: Serialize>(config_hash: &str, body: &T) -> Value {
    serde_json::json!({
        "config_hash": config_hash,
        "report": body,
    })
}

struct RunContext {
    cfg: RunConfig,
    hash: String,
    vgrid: Arc<crate::velocity::VelocityGrid>,
    collision: Collision,
    op: Arc<crate::collision::LinearizedOperator>,
    space: SpatialGrid,
    timings: BTreeMap<String, f64>,
}

impl RunContext {
    fn prepare(cfg: RunConfig) -> Result<RunContext> {
        cfg.validate()?;
        let hash = cfg.hash();
        let mut timings = BTreeMap::new();
        let t0 = Instant::now();
        let dir = cache::cache_dir();
        let vgrid = cache::load_grid_cached(cfg.grid.r, cfg.grid.n_v, cfg.grid.n_angular, &dir)?;
        timings.insert("grid".into(), t0.elapsed().as_secs_f64());
        let budget = Budget {
            max_quadrature: cfg.budget.max_quadrature,
            max_dense_nodes: cfg.budget.max_dense_nodes,
        };
        let collision = Collision::with_budget(vgrid.clone(), budget);
        let t1 = Instant::now();
        let op_path =
            cache::operator_cache_path(&dir, cfg.grid.r, cfg.grid.n_v, cfg.grid.n_angular);
        let op = if cfg.cache_operator && op_path.exists() {
            match cache::read_operator_cache(&op_path, cfg.grid.r, cfg.grid.n_v, cfg.grid.n_angular)
            {
                Ok(matrix) => Arc::new(crate::collision::LinearizedOperator {
                    grid: vgrid.clone(),
                    nu: vgrid.maxw.nu.clone(),
                    matrix,
                }),
                Err(_) => Arc::new(assemble_linearized(&collision)?),
            }
        } else {
            let op = Arc::new(assemble_linearized(&collision)?);
            if cfg.cache_operator {
                let _ = cache::write_operator_cache(
                    &op.matrix,
                    cfg.grid.r,
                    cfg.grid.n_v,
                    cfg.grid.n_angular,
                    &op_path,
                );
            }
            op
        };
        timings.insert("operator".into(), t1.elapsed().as_secs_f64());
        let space = SpatialGrid::new(cfg.space.dim, cfg.space.n_x, cfg.space.box_length)?;
        Ok(RunContext {
            cfg,
            hash,
            vgrid,
            collision,
            op,
            space,
            timings,
        })
    }

    fn force(&self) -> Result<ForceField> {
        let space = self.space.clone();
        match &self.cfg.force {
            ForceBlock::Zero => Ok(ForceField::zero(space)),
            ForceBlock::Potential {
                amplitude,
                sigma,
                period,
                profile,
            } => {
                let phi = ForceField::gaussian_potential_coeffs(&space, *amplitude, *sigma);
                let mut e = ForceField::potential(space, &phi)?;
                if let Some(p) = period {
                    e = e.with_modulation(*p, *profile)?;
                }
                Ok(e)
            }
            ForceBlock::Rotational {
                epsilon,
                m,
                period,
                profile,
            } => {
                let mut e = ForceField::rotational(space, *epsilon, *m)?;
                if let Some(p) = period {
                    e = e.with_modulation(*p, *profile)?;
                }
                Ok(e)
            }
            ForceBlock::CustomSpectral {
                coeffs_path,
                period,
                profile,
            } => {
                let text = std::fs::read_to_string(coeffs_path)?;
                let raw: Vec<Vec<[f64; 2]>> = serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("custom spectral file: {e}")))?;
                if raw.len() != 3 {
                    return Err(Error::Config(
                        "custom spectral file needs three components".into(),
                    ));
                }
                let mut coeffs = [Vec::new(), Vec::new(), Vec::new()];
                for (a, comp) in raw.iter().enumerate() {
                    coeffs[a] = comp
                        .iter()
                        .map(|[re, im]| num_complex::Complex64::new(*re, *im))
                        .collect();
                }
                let mut e = ForceField::custom_spectral(space, coeffs)?;
                if let Some(p) = period {
                    e = e.with_modulation(*p, *profile)?;
                }
                Ok(e)
            }
        }
    }

    fn solver(&self) -> Result<Solver> {
        let sc = &self.cfg.solver;
        let cfg = SolverConfig {
            dt: sc.dt,
            scheme: sc.scheme,
            n_order: sc.n_order,
            s_low: sc.s_low,
            monitor_every: sc.monitor_every,
            enable_gamma: sc.enable_gamma,
            enable_force: sc.enable_force,
            positivity_samples: sc.positivity_samples,
            blowup_factor: sc.blowup_factor,
            dealias: sc.dealias,
        };
        Solver::new(self.space.clone(), self.collision.clone(), self.op.clone(), cfg)
    }

    fn initial_field(&self) -> Result<DistributionField> {
        match self.cfg.init.kind.as_str() {
            "zero" => Ok(DistributionField::zero(self.space.clone(), self.vgrid.clone())),
            "shell" => Ok(synthesize_shell_field(
                &self.space,
                &self.vgrid,
                &ShellSynthesis {
                    s0: self.cfg.init.s0,
                    amplitude: self.cfg.init.amplitude,
                    seed: self.cfg.seed,
                    micro_only: self.cfg.init.micro_only,
                    axis_aligned: self.cfg.init.axis_aligned,
                },
            )),
            other => Err(Error::Config(format!("init.kind: unknown kind {other}"))),
        }
    }
}

/// Execute the configured experiment, writing artifacts into the output
/// directory. Returns the list of files written.
pub fn run(cfg: RunConfig) -> Result<Artifacts> {
    let out_dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&out_dir)?;
    let mut ctx = RunContext::prepare(cfg)?;
    let mut artifacts = Artifacts::default();
    let t_run = Instant::now();
    let experiment_name;
    match ctx.cfg.experiment.clone() {
        ExperimentBlock::SemigroupDecay {
            small_band,
            saturation_band,
            t_max_small,
            t_max_big,
        } => {
            experiment_name = "semigroup-decay";
            let small = if small_band.is_empty() {
                let x0 = ctx.space.xi0();
                vec![x0, 2.0 * x0, 3.0 * x0]
            } else {
                small_band
            };
            let mut fits = verify_pointwise_decay(
                &ctx.op,
                &PointwiseDecayStudy {
                    xi_magnitudes: small.clone(),
                    t_max: t_max_small,
                    sample_dt: t_max_small / 100.0,
                    shear_data: true,
                    adjoint: false,
                },
            );
            // Diffusive coefficient from the smallest shell.
            let kappa_heat = fits
                .first()
                .map(|f| f.fitted_rate / f.parameter.unwrap().powi(2))
                .unwrap_or(0.0);
            if !saturation_band.is_empty() {
                fits.extend(verify_pointwise_decay(
                    &ctx.op,
                    &PointwiseDecayStudy {
                        xi_magnitudes: saturation_band,
                        t_max: t_max_big,
                        sample_dt: t_max_big / 80.0,
                        shear_data: true,
                        adjoint: false,
                    },
                ));
            }
            // Empirical xi0: largest |xi| where the heat-branch law holds
            // within ten percent.
            let scan: Vec<f64> = (1..=12).map(|i| 0.5 * i as f64).collect();
            let scan_fits = verify_pointwise_decay(
                &ctx.op,
                &PointwiseDecayStudy {
                    xi_magnitudes: scan.clone(),
                    t_max: t_max_big * 4.0,
                    sample_dt: t_max_big / 20.0,
                    shear_data: true,
                    adjoint: false,
                },
            );
            let mut xi0_empirical = 0.0;
            for f in &scan_fits {
                let xi = f.parameter.unwrap();
                if (f.fitted_rate / (kappa_heat * xi * xi) - 1.0).abs() < 0.10 {
                    xi0_empirical = xi;
                }
            }
            // Micro-data prefactor slope at fixed time over the small band.
            let micro_slope = {
                let grid = &ctx.vgrid;
                let mut dir: Vec<f64> = grid
                    .nodes
                    .iter()
                    .zip(&grid.maxw.sqrt_m)
                    .map(|(v, s)| v[0] * v[1] * s)
                    .collect();
                for e in &grid.null.vectors {
                    let c = grid.dot(&dir, e);
                    dir.iter_mut().zip(e).for_each(|(x, y)| *x -= c * y);
                }
                let f0: Vec<num_complex::Complex64> = dir
                    .iter()
                    .map(|x| num_complex::Complex64::new(*x, 0.0))
                    .collect();
                let mut pairs = Vec::new();
                for &xi in &small {
                    let mode = ModeOperator::new([xi, 0.0, 0.0], ctx.op.clone());
                    let series = dense_amplitude_series(&mode, &f0, 30.0, 1, false);
                    pairs.push((xi, series[1].1));
                }
                loglog_slope(&pairs)
            };
            write_artifact(&out_dir, "decay_fits.csv", &fits_to_csv(&fits), &mut artifacts)?;
            let body = serde_json::json!({
                "fits": fits,
                "kappa_heat": kappa_heat,
                "xi0_empirical": xi0_empirical,
                "micro_prefactor_slope": micro_slope,
            });
            write_artifact(
                &out_dir,
                "decay_fits.json",
                &serde_json::to_string_pretty(&report_value(&ctx.hash, &body)).unwrap(),
                &mut artifacts,
            )?;
        }
        ExperimentBlock::BesovDecay {
            s,
            s0,
            micro_only,
            t_max,
            march_dt,
            j0,
            fit_start,
            fit_end,
        } => {
            experiment_name = "besov-decay";
            let study = BesovDecayStudy {
                space: ctx.space.clone(),
                s,
                s0,
                micro_only,
                t_max,
                dt: march_dt,
                j0,
                fit_window: (fit_start, fit_end),
                seed: ctx.cfg.seed,
            };
            let out = verify_besov_decay(&ctx.op, &study)?;
            let mut csv = String::from("t,low_norm,high_norm\n");
            for ((t, lo), (_, hi)) in out.series_low.iter().zip(&out.series_high) {
                csv.push_str(&format!("{t},{lo},{hi}\n"));
            }
            write_artifact(&out_dir, "besov_series.csv", &csv, &mut artifacts)?;
            let body = serde_json::json!({
                "low_fit": out.low_fit,
                "high_fit": out.high_fit,
            });
            write_artifact(
                &out_dir,
                "besov_decay.json",
                &serde_json::to_string_pretty(&report_value(&ctx.hash, &body)).unwrap(),
                &mut artifacts,
            )?;
        }
        ExperimentBlock::Cauchy { t_end } => {
            experiment_name = "cauchy";
            let solver = ctx.solver()?;
            let force = ctx.force()?;
            let spp = force
                .period
                .map(|p| (p / solver.cfg.dt).round() as u64)
                .unwrap_or(0);
            let f0 = ctx.initial_field()?;
            let (f, trace) = solver.solve(f0, &force, t_end, spp)?;
            write_artifact(&out_dir, "trace.csv", &trace.to_csv(), &mut artifacts)?;
            let lyap = lyapunov_monitor(&trace, force.periodic_norm_sup(solver.cfg.n_order, 32));
            let body = serde_json::json!({
                "final_l2": f.l2_norm(),
                "final_energy": trace.rows.last().map(|r| r.energy_total),
                "lyapunov": lyap.ok(),
            });
            write_artifact(
                &out_dir,
                "cauchy.json",
                &serde_json::to_string_pretty(&report_value(&ctx.hash, &body)).unwrap(),
                &mut artifacts,
            )?;
            let snap = out_dir.join("final.snap");
            crate::field::write_snapshot(&f, ctx.cfg.grid.n_angular, &ctx.hash, &snap)?;
            artifacts.files.push(snap);
        }
        ExperimentBlock::PeriodMap {
            period,
            epsilon,
            n_max,
            tol,
            uniqueness_probe,
        } => {
            experiment_name = "period-map";
            let solver = ctx.solver()?;
            let force = ctx.force()?;
            let settings = PeriodMapSettings {
                period,
                epsilon,
                n_max,
                tol,
            };
            let start = DistributionField::zero(ctx.space.clone(), ctx.vgrid.clone());
            let (state, mut report) = serrin_iterate(&solver, &force, start, &settings)?;
            let residual = verify_periodicity(&solver, &force, &state, &settings)?;
            report.periodicity_residual = Some(residual);
            let mut probe_distance = None;
            if uniqueness_probe {
                let alt = synthesize_shell_field(
                    &ctx.space,
                    &ctx.vgrid,
                    &ShellSynthesis {
                        s0: 0.5,
                        amplitude: tol.sqrt().min(1e-3),
                        seed: ctx.cfg.seed + 1,
                        micro_only: false,
                        axis_aligned: false,
                    },
                );
                let (state2, _) = serrin_iterate(&solver, &force, alt, &settings)?;
                let mut diff = state.clone();
                for (x, y) in diff.coeffs.iter_mut().zip(state2.coeffs.iter()) {
                    *x -= y;
                }
                probe_distance = Some(crate::period::convergence_norm(
                    &diff,
                    epsilon,
                    solver.cfg.n_order,
                ));
            }
            write_artifact(&out_dir, "period_map.csv", &report.to_csv(), &mut artifacts)?;
            let body = serde_json::json!({
                "report": report,
                "uniqueness_probe_distance": probe_distance,
            });
            write_artifact(
                &out_dir,
                "period_map.json",
                &serde_json::to_string_pretty(&report_value(&ctx.hash, &body)).unwrap(),
                &mut artifacts,
            )?;
            let snap = out_dir.join("periodic_state.snap");
            crate::field::write_snapshot(&state, ctx.cfg.grid.n_angular, &ctx.hash, &snap)?;
            artifacts.files.push(snap);
        }
        ExperimentBlock::StationaryOracle {
            t_per_block,
            tol,
            n_max,
        } => {
            experiment_name = "stationary-oracle";
            let solver = ctx.solver()?;
            let (amplitude, sigma) = match &ctx.cfg.force {
                ForceBlock::Potential {
                    amplitude, sigma, ..
                } => (*amplitude, *sigma),
                _ => {
                    return Err(Error::Config(
                        "force.kind: stationary-oracle needs a potential force".into(),
                    ))
                }
            };
            let phi = ForceField::gaussian_potential_coeffs(&ctx.space, amplitude, sigma);
            let force = ForceField::potential(ctx.space.clone(), &phi)?;
            let settings = PeriodMapSettings {
                period: t_per_block,
                epsilon: 0.1,
                n_max,
                tol,
            };
            let start = DistributionField::zero(ctx.space.clone(), ctx.vgrid.clone());
            let (state, report) = serrin_iterate(&solver, &force, start, &settings)?;
            let err = stationary_relative_error(&solver, &phi, &state)?;
            let body = serde_json::json!({
                "relative_error": err,
                "converged": report.converged,
                "blocks_run": report.periods_run,
            });
            write_artifact(
                &out_dir,
                "stationary_oracle.json",
                &serde_json::to_string_pretty(&report_value(&ctx.hash, &body)).unwrap(),
                &mut artifacts,
            )?;
        }
        ExperimentBlock::Stability {
            s0,
            targets,
            epsilon,
            amplitude,
            horizon,
            fit_start,
            fit_end,
            sample_every,
        } => {
            experiment_name = "stability";
            let solver = ctx.solver()?;
            let force = ctx.force()?;
            let sc = StabilityScenario {
                s0,
                targets,
                epsilon,
                amplitude,
                seed: ctx.cfg.seed,
                horizon,
                fit_window: (fit_start, fit_end),
                sample_every,
            };
            let base = ctx.initial_field()?;
            let g0 = synthesize_initial_difference(
                &ctx.space,
                &ctx.vgrid,
                sc.s0,
                sc.amplitude,
                ctx.cfg.seed + 17,
            );
            let out = run_difference_decay(&solver, &force, &base, &g0, &sc)?;
            let mut all = out.fits.clone();
            all.push(out.micro_fit.clone());
            write_artifact(&out_dir, "stability_fits.csv", &fits_to_csv(&all), &mut artifacts)?;
            let body = serde_json::json!({
                "fits": out.fits,
                "micro_fit": out.micro_fit,
            });
            write_artifact(
                &out_dir,
                "stability.json",
                &serde_json::to_string_pretty(&report_value(&ctx.hash, &body)).unwrap(),
                &mut artifacts,
            )?;
        }
    }
    ctx.timings
        .insert("experiment".into(), t_run.elapsed().as_secs_f64());
    let manifest = Manifest {
        config_hash: ctx.hash.clone(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: experiment_name.into(),
        seed: ctx.cfg.seed,
        workers: ctx.cfg.workers,
        timings: ctx.timings.clone(),
    };
    write_artifact(
        &out_dir,
        "manifest.json",
        &serde_json::to_string_pretty(&manifest).unwrap(),
        &mut artifacts,
    )?;
    Ok(artifacts)
}

/// A field-by-field relative difference between two JSON reports.
#[derive(Clone, Debug, Serialize, Deserialize, Default)]
pub struct DiffReport {
    pub entries: Vec<(String, f64)>,
    pub max_relative: f64,
}

fn walk(a: &Value, b: &Value, path: String, out: &mut DiffReport) -> Result<()> {
    match (a, b) {
        (Value::Object(ma), Value::Object(mb)) => {
            let ka: Vec<&String> = ma.keys().collect();
            let kb: Vec<&String> = mb.keys().collect();
            if ka != kb {
                return Err(Error::Format(format!("schema mismatch at {path}")));
            }
            for k in ka {
                walk(&ma[k], &mb[k], format!("{path}/{k}"), out)?;
            }
        }
        (Value::Array(xa), Value::Array(xb)) => {
            if xa.len() != xb.len() {
                return Err(Error::Format(format!(
                    "schema mismatch at {path}: array lengths differ"
                )));
            }
            for (i, (x, y)) in xa.iter().zip(xb).enumerate() {
                walk(x, y, format!("{path}/{i}"), out)?;
            }
        }
        (Value::Number(na), Value::Number(nb)) => {
            let (x, y) = (na.as_f64().unwrap_or(0.0), nb.as_f64().unwrap_or(0.0));
            let denom = x.abs().max(y.abs()).max(1e-300);
            let rel = (x - y).abs() / denom;
            if rel > 0.0 {
                out.entries.push((path, rel));
                out.max_relative = out.max_relative.max(rel);
            }
        }
        (Value::String(sa), Value::String(sb)) => {
            if sa != sb && !path.ends_with("config_hash") {
                out.entries.push((path, 1.0));
                out.max_relative = 1.0;
            }
        }
        (x, y) => {
            if x != y {
                return Err(Error::Format(format!("schema mismatch at {path}")));
            }
        }
    }
    Ok(())
}

/// Compare two JSON reports of the same experiment kind.
pub fn compare_reports(path_a: &Path, path_b: &Path, force: bool) -> Result<DiffReport> {
    let a: Value = serde_json::from_str(&std::fs::read_to_string(path_a)?)
        .map_err(|e| Error::Format(format!("{e}")))?;
    let b: Value = serde_json::from_str(&std::fs::read_to_string(path_b)?)
        .map_err(|e| Error::Format(format!("{e}")))?;
    if !force {
        let ha = a.get("config_hash").and_then(|v| v.as_str());
        let hb = b.get("config_hash").and_then(|v| v.as_str());
        if let (Some(ha), Some(hb)) = (ha, hb) {
            if ha != hb {
                return Err(Error::Format(
                    "config hashes differ; pass --force to compare anyway".into(),
                ));
            }
        }
    }
    let mut out = DiffReport::default();
    walk(&a, &b, String::new(), &mut out)?;
    Ok(out)
}
