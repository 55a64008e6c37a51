//! The three experiment drivers and their CSV/JSON reports.

use std::path::Path;
use std::time::Instant;

use kvflow_core::analysis::{
    absorbing_ball_diagnostic, convergence_rates, error_norms, estimate_lambda1, fit_log_decay, forcing_l2_bound,
    reference_error_norms, DecayFit, EnergyTrace, ErrorReport,
};
use kvflow_core::assembly::Discretization;
use kvflow_core::stepper::{initial_state, run, FlowState, TimeGrid, Trajectory};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{fmt_num, fmt_opt, write_json, Csv};

/// Relative slack for the energy monotonicity check.
pub const ENERGY_SLACK: f64 = 1e-12;
/// Window of the log-linear decay fit.
pub const DECAY_WINDOW: (f64, f64) = (0.2, 1.0);
/// Default α as a fraction of its admissible supremum.
pub const ALPHA_FRACTION: f64 = 0.9;

struct LevelRun {
    disc: Discretization,
    grid: TimeGrid,
    trajectory: Trajectory,
    picard_iterations: usize,
}

fn run_level(cfg: &RunConfig, n: usize, k: f64) -> kvflow_core::Result<LevelRun> {
    let disc = Discretization::structured(n)?;
    let grid = TimeGrid::from_final_time(cfg.final_time, k)?;
    let problem = cfg.problem();
    let initial = initial_state(|p| problem.initial_velocity(p), &disc, cfg.initial.into())?;
    let trajectory = run(&disc, cfg.model(), grid, &problem, initial, &[])?;
    let picard_iterations = trajectory.records.iter().map(|r| r.report.picard_iterations).sum();
    Ok(LevelRun { disc, grid, trajectory, picard_iterations })
}

fn finest(cfg: &RunConfig) -> usize {
    *cfg.levels.last().expect("validated config has levels")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub k: f64,
    pub steps: usize,
    pub l2_err: f64,
    pub l2_rate: Option<f64>,
    pub h1_err: f64,
    pub h1_rate: Option<f64>,
    pub h1_seminorm_err: f64,
    pub p_err: f64,
    pub p_rate: Option<f64>,
    pub picard_iterations: usize,
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct ConvergenceReport {
    pub config: RunConfig,
    /// Mesh divisions of the reference solution (examples 2 and 3).
    pub reference_level: Option<usize>,
    pub rows: Vec<ConvergenceRow>,
    pub complete: bool,
    pub failure: Option<String>,
    #[serde(skip)]
    pub error: Option<CliError>,
}

impl ConvergenceReport {
    pub fn rates(&self, pick: impl Fn(&ConvergenceRow) -> Option<f64>) -> Vec<f64> {
        self.rows.iter().filter_map(pick).collect()
    }

    pub fn csv(&self) -> Csv {
        let mut csv = Csv::new(&["h", "l2_err", "l2_rate", "h1_err", "h1_rate", "p_err", "p_rate"]);
        for r in &self.rows {
            csv.row(&[
                fmt_num(r.h),
                fmt_num(r.l2_err),
                fmt_opt(r.l2_rate),
                fmt_num(r.h1_err),
                fmt_opt(r.h1_rate),
                fmt_num(r.p_err),
                fmt_opt(r.p_rate),
            ]);
        }
        csv
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        self.csv().write(&dir.join("convergence.csv"))?;
        write_json(&dir.join("convergence.json"), self)
    }
}

fn with_rates(errors: &[(usize, f64, f64, usize, ErrorReport, usize, f64)]) -> CliResult<Vec<ConvergenceRow>> {
    let rates = |pick: fn(&ErrorReport) -> f64| -> CliResult<Vec<Option<f64>>> {
        let pairs: Vec<(f64, f64)> = errors.iter().map(|e| (e.4.h, pick(&e.4))).collect();
        let r = convergence_rates(&pairs)?;
        Ok(std::iter::once(None).chain(r.into_iter().map(Some)).collect())
    };
    let l2 = rates(|e| e.l2_velocity)?;
    let h1 = rates(|e| e.h1_velocity)?;
    let p = rates(|e| e.l2_pressure_meanfree)?;
    Ok(errors
        .iter()
        .enumerate()
        .map(|(i, &(n, h, k, steps, e, picard_iterations, seconds))| ConvergenceRow {
            n,
            h,
            k,
            steps,
            l2_err: e.l2_velocity,
            l2_rate: l2[i],
            h1_err: e.h1_velocity,
            h1_rate: h1[i],
            h1_seminorm_err: e.h1_seminorm_velocity,
            p_err: e.l2_pressure_meanfree,
            p_rate: p[i],
            picard_iterations,
            seconds,
        })
        .collect())
}

/// Errors at the final time on every level, against the closed form
/// (example 1) or a finer reference run (examples 2 and 3). A failing level
/// stops the study; the rows computed so far are kept and the report is
/// flagged incomplete.
pub fn convergence_study(cfg: &RunConfig, mut progress: impl FnMut(&ConvergenceRow)) -> CliResult<ConvergenceReport> {
    let problem = cfg.problem();
    if cfg.example == 1 && !problem.has_exact() {
        return Err(CliError::Config(
            "example 1 convergence needs forcing_scale = initial_scale = 1 to keep its exact solution".into(),
        ));
    }
    let mut report = ConvergenceReport {
        config: cfg.clone(),
        reference_level: None,
        rows: Vec::new(),
        complete: false,
        failure: None,
        error: None,
    };

    let reference = if problem.has_exact() {
        None
    } else {
        let n_ref = finest(cfg) << cfg.reference_refinements;
        report.reference_level = Some(n_ref);
        match run_level(cfg, n_ref, cfg.time_step.for_level(finest(cfg))) {
            Ok(r) => Some(r),
            Err(source) => {
                report.failure = Some(format!("reference level n = {n_ref}: {source}"));
                report.error = Some(CliError::Level { level: n_ref, source });
                return Ok(report);
            }
        }
    };

    let mut errors = Vec::new();
    for &n in &cfg.levels {
        let start = Instant::now();
        let outcome = run_level(cfg, n, cfg.time_step.for_level(n)).and_then(|lvl| {
            let state = &lvl.trajectory.final_state;
            let e = match &reference {
                None => error_norms(state, &lvl.disc, &problem, lvl.grid.final_time())?,
                Some(r) => reference_error_norms(state, &lvl.disc, &r.trajectory.final_state, &r.disc)?,
            };
            Ok((lvl.grid, e, lvl.picard_iterations))
        });
        match outcome {
            Ok((grid, e, picard)) => {
                errors.push((n, e.h, grid.k(), grid.steps(), e, picard, start.elapsed().as_secs_f64()));
                let rows = with_rates(&errors)?;
                progress(rows.last().expect("one row per level"));
                report.rows = rows;
            }
            Err(source) => {
                report.failure = Some(format!("level n = {n}: {source}"));
                report.error = Some(CliError::Level { level: n, source });
                return Ok(report);
            }
        }
    }
    report.complete = true;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub norm_u: f64,
    pub norm_grad_u: f64,
    pub energy: f64,
}

fn trace_rows(trace: &EnergyTrace) -> Vec<TraceRow> {
    trace
        .samples
        .iter()
        .map(|s| TraceRow { t: s.t, norm_u: s.norm_u, norm_grad_u: s.norm_grad_u, energy: s.energy })
        .collect()
}

fn trace_csv(rows: &[TraceRow]) -> Csv {
    let mut csv = Csv::new(&["t", "norm_u", "norm_grad_u", "energy"]);
    for r in rows {
        csv.row(&[fmt_num(r.t), fmt_num(r.norm_u), fmt_num(r.norm_grad_u), fmt_num(r.energy)]);
    }
    csv
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitSummary {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    pub window: (f64, f64),
}

impl From<DecayFit> for FitSummary {
    fn from(f: DecayFit) -> Self {
        FitSummary {
            slope: f.slope,
            intercept: f.intercept,
            r_squared: f.r_squared,
            points: f.points,
            window: DECAY_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub config: RunConfig,
    pub n: usize,
    pub h: f64,
    pub k: f64,
    pub steps: usize,
    pub nonincreasing: bool,
    pub strictly_decreasing: bool,
    pub first_increase: Option<usize>,
    /// `None` when the run has fewer than two samples in the window.
    pub fit: Option<FitSummary>,
    pub final_norm_u: f64,
    pub trace: Vec<TraceRow>,
}

impl DecayReport {
    pub fn csv(&self) -> Csv {
        trace_csv(&self.trace)
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        self.csv().write(&dir.join("decay.csv"))?;
        #[derive(Serialize)]
        struct Summary<'a> {
            config: &'a RunConfig,
            n: usize,
            h: f64,
            k: f64,
            steps: usize,
            nonincreasing: bool,
            strictly_decreasing: bool,
            first_increase: Option<usize>,
            fit: Option<FitSummary>,
            final_norm_u: f64,
        }
        write_json(
            &dir.join("decay.json"),
            &Summary {
                config: &self.config,
                n: self.n,
                h: self.h,
                k: self.k,
                steps: self.steps,
                nonincreasing: self.nonincreasing,
                strictly_decreasing: self.strictly_decreasing,
                first_increase: self.first_increase,
                fit: self.fit,
                final_norm_u: self.final_norm_u,
            },
        )
    }
}

fn trace_of(lvl: &LevelRun, kappa: f64) -> EnergyTrace {
    EnergyTrace { kappa, samples: lvl.trajectory.energies() }
}

/// Energy trace of an unforced run on the finest level.
pub fn decay_study(cfg: &RunConfig) -> CliResult<DecayReport> {
    if cfg.problem().has_forcing() {
        return Err(CliError::Config(format!(
            "decay needs zero forcing: use example 2 or 3, or example 1 with forcing_scale = 0 (example {}, forcing_scale {})",
            cfg.example, cfg.forcing_scale
        )));
    }
    let n = finest(cfg);
    let k = cfg.time_step.for_level(n);
    let lvl = run_level(cfg, n, k).map_err(|source| CliError::Level { level: n, source })?;
    let trace = trace_of(&lvl, cfg.kappa);
    let fit = fit_log_decay(&trace.samples, DECAY_WINDOW.0, DECAY_WINDOW.1).ok().map(FitSummary::from);
    Ok(DecayReport {
        config: cfg.clone(),
        n,
        h: lvl.disc.h(),
        k: lvl.grid.k(),
        steps: lvl.grid.steps(),
        nonincreasing: trace.is_nonincreasing(ENERGY_SLACK),
        strictly_decreasing: trace.is_strictly_decreasing(),
        first_increase: trace.first_energy_increase(ENERGY_SLACK),
        fit,
        final_norm_u: trace.samples.last().map_or(0.0, |s| s.norm_u),
        trace: trace_rows(&trace),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundednessReport {
    pub config: RunConfig,
    pub n: usize,
    pub h: f64,
    pub k: f64,
    pub steps: usize,
    pub lambda1: f64,
    pub alpha: f64,
    pub alpha_bound: f64,
    /// `max ‖f(t)‖` over the time levels.
    pub f_bound: f64,
    pub rho0: f64,
    pub entry_step: Option<usize>,
    pub entry_time: Option<f64>,
    pub remains_inside: bool,
    pub permanent_entry: bool,
    pub sup_radius: f64,
    pub sup_norm_u: f64,
    /// `max ‖U^n‖` over `t_n ≤ 1`.
    pub sup_norm_u_first_unit: f64,
    pub monotone: bool,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

impl BoundednessReport {
    pub fn csv(&self) -> Csv {
        trace_csv(&self.trace)
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        self.csv().write(&dir.join("boundedness.csv"))?;
        write_json(&dir.join("boundedness.json"), self)
    }
}

/// Long run of example 1 with the absorbing-ball diagnostic.
pub fn boundedness_study(cfg: &RunConfig) -> CliResult<BoundednessReport> {
    if cfg.example != 1 {
        return Err(CliError::Config(format!("boundedness runs example 1 only, got example {}", cfg.example)));
    }
    let n = finest(cfg);
    let problem = cfg.problem();
    let level_err = |source| CliError::Level { level: n, source };
    let lvl = run_level(cfg, n, cfg.time_step.for_level(n)).map_err(level_err)?;
    let lambda1 = estimate_lambda1(&lvl.disc).map_err(level_err)?;
    let mut model = cfg.model();
    let alpha_bound = model.alpha_bound(lambda1);
    model.alpha = Some(cfg.alpha.unwrap_or(ALPHA_FRACTION * alpha_bound));
    let times: Vec<f64> = (0..=lvl.grid.steps()).map(|i| lvl.grid.time(i)).collect();
    let f_bound = forcing_l2_bound(|p, t| problem.forcing(p, t), &lvl.disc, &times);
    let trace = trace_of(&lvl, cfg.kappa);
    let ball = absorbing_ball_diagnostic(&trace, &model, f_bound, lambda1)?;
    Ok(BoundednessReport {
        config: cfg.clone(),
        n,
        h: lvl.disc.h(),
        k: lvl.grid.k(),
        steps: lvl.grid.steps(),
        lambda1,
        alpha: ball.alpha,
        alpha_bound,
        f_bound,
        rho0: ball.rho0,
        entry_step: ball.entry_step,
        entry_time: ball.entry_time,
        remains_inside: ball.remains_inside,
        permanent_entry: ball.permanent_entry(),
        sup_radius: ball.sup_radius,
        sup_norm_u: trace.sup_norm_u(),
        sup_norm_u_first_unit: trace.sup_norm_u_until(1.0),
        monotone: ball.monotone,
        trace: trace_rows(&trace),
    })
}

/// Final state of a single run, for callers that need the fields.
pub fn final_state(cfg: &RunConfig, n: usize) -> CliResult<(Discretization, FlowState)> {
    let lvl = run_level(cfg, n, cfg.time_step.for_level(n)).map_err(|source| CliError::Level { level: n, source })?;
    Ok((lvl.disc, lvl.trajectory.final_state))
}
