//! Backward Euler in time with Picard iteration on the convection term.
//!
//! Each step solves, for `n ≥ 1`,
//!
//! ```text
//! ((M + κA)/k + νA + N(W)) Uⁿ − Bᵀ Pⁿ = (M + κA) Uⁿ⁻¹ / k + Fⁿ
//!                                B Uⁿ = 0
//! ```
//!
//! with the convecting field `W` lagged one Picard iteration behind.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::analysis::{energy_sample, EnergySample};
use crate::assembly::{assemble_load, ConvectionAssembler, Discretization};
use crate::fem::interpolate_vector;
use crate::linalg::{norm2, solve_saddle, SaddleSolution, SaddleSolver, SaddleSystem};
use crate::mesh::Point;
use crate::problems::Forcing;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

pub const PICARD_TOL: f64 = 1e-10;
pub const PICARD_MAX: usize = 50;
/// A cached factorization is renewed once defect correction needs more
/// sweeps than this.
const REFACTOR_SWEEPS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    k: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(k: f64, steps: usize) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {k}")));
        }
        Ok(Self { k, steps })
    }

    /// `N = T / k`, which must be an integer up to 1e-12.
    pub fn from_final_time(final_time: f64, k: f64) -> Result<Self> {
        if !(final_time >= 0.0 && final_time.is_finite()) {
            return Err(Error::Config(format!("final time must be nonnegative, got {final_time}")));
        }
        let grid = Self::new(k, 0)?;
        let steps = libm::round(final_time / k);
        if (steps * k - final_time).abs() > 1e-12 * final_time.max(1.0) {
            return Err(Error::Config(format!("final time {final_time} is not a multiple of k = {k}")));
        }
        Ok(Self { steps: steps as usize, ..grid })
    }

    /// `N` equal steps covering `[0, T]`.
    pub fn uniform(final_time: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Config("a uniform grid needs at least one step".into()));
        }
        Self::new(final_time / steps as f64, steps)
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.steps)
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.k
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub nu: f64,
    pub kappa: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    /// Exponential weight of the absorbing-ball diagnostic.
    pub alpha: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { nu: 1.0, kappa: 1.0, picard_tol: PICARD_TOL, picard_max: PICARD_MAX, alpha: None }
    }
}

impl ModelConfig {
    pub fn new(nu: f64, kappa: f64) -> Self {
        Self { nu, kappa, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::Config(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::Config(format!("kappa must be nonnegative, got {}", self.kappa)));
        }
        if !(self.picard_tol > 0.0 && self.picard_tol < 1.0) {
            return Err(Error::Config(format!("picard_tol must lie in (0, 1), got {}", self.picard_tol)));
        }
        if self.picard_max == 0 {
            return Err(Error::Config("picard_max must be at least 1".into()));
        }
        if let Some(alpha) = self.alpha {
            if !(alpha >= 0.0 && alpha.is_finite()) {
                return Err(Error::Config(format!("alpha must be nonnegative, got {alpha}")));
            }
        }
        Ok(())
    }

    /// Supremum `νλ₁ / (4(1 + κλ₁))` of admissible exponential weights.
    pub fn alpha_bound(&self, lambda1: f64) -> f64 {
        self.nu * lambda1 / (4.0 * (1.0 + self.kappa * lambda1))
    }

    /// The configured α, checked against `0 < α < νλ₁/(4(1+κλ₁))`.
    pub fn admissible_alpha(&self, lambda1: f64) -> Result<f64> {
        let bound = self.alpha_bound(lambda1);
        match self.alpha {
            Some(alpha) if alpha > 0.0 && alpha < bound => Ok(alpha),
            Some(alpha) => Err(Error::Config(format!("alpha = {alpha} outside (0, {bound})"))),
            None => Err(Error::Config("alpha is not set".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialMode {
    /// Constrained L² projection onto discretely divergence-free fields.
    #[default]
    Projection,
    /// Nodal interpolation (not divergence-free in general).
    Interpolation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub n: usize,
    pub t: f64,
    pub velocity: Vec<f64>,
    /// One value per triangle.
    pub pressure: Vec<f64>,
}

impl FlowState {
    pub fn zero(disc: &Discretization) -> Self {
        Self {
            n: 0,
            t: 0.0,
            velocity: vec![0.0; disc.layout.n_velocity()],
            pressure: vec![0.0; disc.layout.n_pressure()],
        }
    }

    /// `‖B U‖` over all pressure rows.
    pub fn divergence_residual(&self, disc: &Discretization) -> f64 {
        norm2(&disc.forms.divergence.mul_vec(&self.velocity))
    }

    /// Largest absolute boundary velocity coefficient.
    pub fn boundary_max(&self, disc: &Discretization) -> f64 {
        disc.layout.velocity_boundary_dofs().iter().map(|&d| self.velocity[d].abs()).fold(0.0, f64::max)
    }
}

fn check_state(state: &FlowState, disc: &Discretization) -> Result<()> {
    if state.velocity.len() != disc.layout.n_velocity() || state.pressure.len() != disc.layout.n_pressure() {
        return Err(Error::Dimension(format!(
            "state has ({}, {}) unknowns, discretization has ({}, {})",
            state.velocity.len(),
            state.pressure.len(),
            disc.layout.n_velocity(),
            disc.layout.n_pressure()
        )));
    }
    Ok(())
}

/// `U⁰` from `M U⁰ + Bᵀμ = (u₀, φ)`, `B U⁰ = 0`.
pub fn project_initial(u0: impl Fn(Point) -> [f64; 2], disc: &Discretization) -> Result<FlowState> {
    let red = &disc.reduced;
    let load = assemble_load(|x, y, _| u0([x, y]), 0.0, &disc.mesh, &disc.layout);
    let rhs = red.reduction.restrict_vector(&load);
    let sys = SaddleSystem::new(red.mass.clone(), red.divergence.clone(), disc.pressure_nullspace())?;
    let (u, _) = solve_saddle(&sys, &rhs, &vec![0.0; disc.layout.n_pressure()])?;
    Ok(FlowState { velocity: red.reduction.expand_vector(&u), ..FlowState::zero(disc) })
}

/// Initial state by the chosen mode.
pub fn initial_state(u0: impl Fn(Point) -> [f64; 2], disc: &Discretization, mode: InitialMode) -> Result<FlowState> {
    match mode {
        InitialMode::Projection => project_initial(u0, disc),
        InitialMode::Interpolation => {
            let mut velocity = interpolate_vector(&disc.layout, u0);
            for &d in disc.layout.velocity_boundary_dofs() {
                velocity[d] = 0.0;
            }
            Ok(FlowState { velocity, ..FlowState::zero(disc) })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    pub picard_iterations: usize,
    /// Final `‖U^(m) − U^(m−1)‖ / ‖U^(m)‖` (0 for a zero iterate).
    pub picard_change: f64,
    pub sweeps: usize,
    pub refactorizations: usize,
}

/// Time stepper bound to one discretization, model and step size. Keeps a
/// factorization of the step matrix across iterations and steps.
pub struct Stepper<'a> {
    disc: &'a Discretization,
    config: ModelConfig,
    k: f64,
    /// `(M + κA)/k` on free DOFs
    history: CsrMatrix,
    /// `(M + κA)/k + νA` on free DOFs
    base: CsrMatrix,
    convection: ConvectionAssembler,
    convection_values: Vec<f64>,
    system: SaddleSystem,
    solver: Option<SaddleSolver>,
    stale: bool,
}

impl<'a> Stepper<'a> {
    pub fn new(disc: &'a Discretization, config: ModelConfig, k: f64) -> Result<Self> {
        config.validate()?;
        TimeGrid::new(k, 0)?;
        let red = &disc.reduced;
        debug_assert!(red.mass.same_pattern(&red.stiffness));
        let history = red.mass.add_scaled(1.0 / k, &red.stiffness, config.kappa / k);
        let base = red.mass.add_scaled(1.0 / k, &red.stiffness, config.kappa / k + config.nu);
        let convection = ConvectionAssembler::new(&disc.mesh, &disc.layout, &disc.forms.mass)?;
        let system = SaddleSystem::new(base.clone(), red.divergence.clone(), disc.pressure_nullspace())?;
        Ok(Self {
            disc,
            config,
            k,
            history,
            base,
            convection,
            convection_values: vec![0.0; disc.forms.mass.nnz()],
            system,
            solver: None,
            stale: true,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Step matrix `base + N(w)` restricted to the free DOFs.
    fn update_matrix(&mut self, w: &[f64]) -> Result<()> {
        self.convection.fill(w, &self.disc.layout, &mut self.convection_values)?;
        let positions = &self.disc.reduced.positions;
        let values = self.system.f.values_mut();
        for ((v, &b), &pos) in values.iter_mut().zip(self.base.values()).zip(positions) {
            *v = b + self.convection_values[pos];
        }
        Ok(())
    }

    fn factor(&mut self) -> Result<()> {
        match &mut self.solver {
            Some(s) => s.refactor(&self.system)?,
            None => self.solver = Some(SaddleSolver::new(&self.system)?),
        }
        self.stale = false;
        Ok(())
    }

    fn solve(
        &mut self,
        rhs_u: &[f64],
        rhs_p: &[f64],
        guess: (&[f64], &[f64]),
        report: &mut StepReport,
    ) -> Result<SaddleSolution> {
        let mut fresh = false;
        if self.stale || self.solver.is_none() {
            self.factor()?;
            report.refactorizations += 1;
            fresh = true;
        }
        loop {
            let solver = self.solver.as_ref().expect("factorized above");
            match solver.solve(&self.system, rhs_u, rhs_p, Some(guess)) {
                Ok(sol) => {
                    report.sweeps += sol.sweeps;
                    if sol.sweeps > REFACTOR_SWEEPS {
                        self.stale = true;
                    }
                    return Ok(sol);
                }
                Err(Error::Residual { .. }) if !fresh => {
                    self.factor()?;
                    report.refactorizations += 1;
                    fresh = true;
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Advance `prev` by one step with forcing evaluated at `t_n`.
    pub fn step(&mut self, prev: &FlowState, forcing: &dyn Forcing) -> Result<(FlowState, StepReport)> {
        check_state(prev, self.disc)?;
        let disc = self.disc;
        let red = &disc.reduced.reduction;
        let n = prev.n + 1;
        let t = n as f64 * self.k;

        let prev_free = red.restrict_vector(&prev.velocity);
        let mut rhs_u = self.history.mul_vec(&prev_free);
        if !forcing.is_zero() {
            let load = forcing.load(t, &disc.mesh, &disc.layout);
            for (r, &i) in rhs_u.iter_mut().zip(red.free_dofs()) {
                *r += load[i];
            }
        }
        let rhs_p = vec![0.0; disc.layout.n_pressure()];

        let mut report = StepReport::default();
        let mut w = prev.velocity.clone();
        let mut guess_u = prev_free;
        let mut guess_p: Vec<f64> = prev.pressure.iter().map(|p| -p).collect();
        for it in 1..=self.config.picard_max {
            self.update_matrix(&w)?;
            let sol = self.solve(&rhs_u, &rhs_p, (&guess_u, &guess_p), &mut report)?;
            let u = red.expand_vector(&sol.velocity);
            let diff = libm::sqrt(u.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum());
            let size = norm2(&u);
            let change = if size > 0.0 {
                diff / size
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            report.picard_iterations = it;
            report.picard_change = change;
            w = u;
            guess_u = sol.velocity;
            guess_p = sol.pressure;
            if change <= self.config.picard_tol {
                let pressure = guess_p.iter().map(|p| -p).collect();
                return Ok((FlowState { n, t, velocity: w, pressure }, report));
            }
        }
        Err(Error::PicardNonconvergence { iterations: self.config.picard_max, change: report.picard_change })
    }
}

/// Per-step scalar diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub n: usize,
    pub energy: EnergySample,
    pub divergence: f64,
    pub report: StepReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// One record per time level, starting with the initial state.
    pub records: Vec<StepRecord>,
    /// Full states at the requested checkpoint times, in time order.
    pub checkpoints: Vec<FlowState>,
    pub final_state: FlowState,
}

impl Trajectory {
    pub fn energies(&self) -> Vec<EnergySample> {
        self.records.iter().map(|r| r.energy).collect()
    }
}

/// Run `grid.steps()` steps from `initial`. Full states are kept only at
/// the checkpoint times (matched to the nearest time level).
pub fn run(
    disc: &Discretization,
    config: ModelConfig,
    grid: TimeGrid,
    forcing: &dyn Forcing,
    initial: FlowState,
    checkpoints: &[f64],
) -> Result<Trajectory> {
    run_with(disc, config, grid, forcing, initial, checkpoints, |_, _| {})
}

/// [`run`] with a callback after every accepted step.
pub fn run_with(
    disc: &Discretization,
    config: ModelConfig,
    grid: TimeGrid,
    forcing: &dyn Forcing,
    initial: FlowState,
    checkpoints: &[f64],
    mut observe: impl FnMut(&FlowState, &StepRecord),
) -> Result<Trajectory> {
    check_state(&initial, disc)?;
    let mut stepper = Stepper::new(disc, config, grid.k())?;
    let wanted = |n: usize| checkpoints.iter().any(|&c| (c - grid.time(n)).abs() <= 0.5 * grid.k());
    let record = |state: &FlowState, report: StepReport| StepRecord {
        n: state.n,
        energy: energy_sample(state, disc, config.kappa),
        divergence: state.divergence_residual(disc),
        report,
    };

    let mut records = Vec::with_capacity(grid.steps() + 1);
    let mut saved = Vec::new();
    let first = record(&initial, StepReport::default());
    observe(&initial, &first);
    records.push(first);
    if wanted(0) {
        saved.push(initial.clone());
    }
    let mut state = initial;
    for _ in 0..grid.steps() {
        let (next, report) =
            stepper.step(&state, forcing).map_err(|e| Error::Step { step: state.n + 1, source: Box::new(e) })?;
        let rec = record(&next, report);
        observe(&next, &rec);
        records.push(rec);
        if wanted(next.n) {
            saved.push(next.clone());
        }
        state = next;
    }
    Ok(Trajectory { records, checkpoints: saved, final_state: state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_convection;
    use crate::fem::{evaluate_vector, ERROR_DEGREE};
    use crate::problems::{FixedLoad, ManufacturedProblem, ZeroForcing};
    use crate::sparse::CsrMatrix;

    fn disc(n: usize) -> Discretization {
        Discretization::structured(n).unwrap()
    }

    fn energy(state: &FlowState, d: &Discretization, kappa: f64) -> f64 {
        d.forms.mass.quadratic_form(&state.velocity) + kappa * d.forms.stiffness.quadratic_form(&state.velocity)
    }

    #[test]
    fn time_grid_rules() {
        let g = TimeGrid::from_final_time(1.0, 1.0 / 64.0).unwrap();
        assert_eq!(g.steps(), 64);
        assert!((g.final_time() - 1.0).abs() < 1e-12);
        assert!(TimeGrid::from_final_time(1.0, 0.3).is_err());
        assert!(TimeGrid::new(0.0, 3).is_err());
        assert!(TimeGrid::new(f64::NAN, 3).is_err());
        assert_eq!(TimeGrid::from_final_time(0.0, 0.1).unwrap().steps(), 0);
        assert!((TimeGrid::uniform(10.0, 640).unwrap().k() - 1.0 / 64.0).abs() < 1e-16);
    }

    #[test]
    fn config_validation() {
        assert!(ModelConfig::default().validate().is_ok());
        assert!(ModelConfig::new(0.0, 1.0).validate().is_err());
        assert!(ModelConfig::new(1.0, -1.0).validate().is_err());
        assert!(ModelConfig::new(1.0, 0.0).validate().is_ok());
        assert!(ModelConfig { picard_tol: 1.0, ..ModelConfig::default() }.validate().is_err());
        assert!(ModelConfig { picard_max: 0, ..ModelConfig::default() }.validate().is_err());
        let lambda = 2.0 * core::f64::consts::PI * core::f64::consts::PI;
        let cfg = ModelConfig::default();
        let bound = cfg.alpha_bound(lambda);
        assert!((bound - lambda / (4.0 * (1.0 + lambda))).abs() < 1e-15);
        assert!(ModelConfig { alpha: Some(0.9 * bound), ..cfg }.admissible_alpha(lambda).is_ok());
        assert!(ModelConfig { alpha: Some(bound), ..cfg }.admissible_alpha(lambda).is_err());
        assert!(ModelConfig { alpha: Some(0.0), ..cfg }.admissible_alpha(lambda).is_err());
    }

    #[test]
    fn zero_initial_data_projects_to_zero() {
        let d = disc(4);
        let s = project_initial(|_| [0.0, 0.0], &d).unwrap();
        assert!(s.velocity.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn projection_is_identity_on_divergence_free_fields() {
        let d = disc(4);
        let p = ManufacturedProblem::example2();
        let first = project_initial(|x| p.initial_velocity(x), &d).unwrap();
        // project the discrete field itself
        let again = project_initial(|x| evaluate_vector(&first.velocity, &d.mesh, &d.layout, x).unwrap(), &d).unwrap();
        for (a, b) in first.velocity.iter().zip(&again.velocity) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(first.divergence_residual(&d) < 1e-9);
        assert_eq!(first.boundary_max(&d), 0.0);
    }

    #[test]
    fn projection_error_converges() {
        let p = ManufacturedProblem::example3();
        let mut errs = Vec::new();
        for n in [4, 8, 16] {
            let d = disc(n);
            let s = project_initial(|x| p.initial_velocity(x), &d).unwrap();
            assert!(s.divergence_residual(&d) < 1e-9);
            let rule = crate::fem::gauss_rule(ERROR_DEGREE).unwrap();
            let mut e2 = 0.0;
            for t in 0..d.mesh.n_triangles() {
                for (l, w) in rule.iter() {
                    let x = d.mesh.point_at(t, l);
                    let uh = crate::fem::vector_at(&s.velocity, &d.layout, t, l);
                    let u = p.initial_velocity(x);
                    e2 += 2.0 * d.mesh.area(t) * w * ((u[0] - uh[0]).powi(2) + (u[1] - uh[1]).powi(2));
                }
            }
            errs.push(libm::sqrt(e2));
        }
        let rate = libm::log2(errs[1] / errs[2]);
        assert!(rate >= 2.0, "{errs:?}");
    }

    #[test]
    fn zero_stays_zero() {
        let d = disc(3);
        let mut st = Stepper::new(&d, ModelConfig::default(), 0.1).unwrap();
        let (s, rep) = st.step(&FlowState::zero(&d), &ZeroForcing).unwrap();
        assert!(s.velocity.iter().all(|&v| v == 0.0));
        assert!(s.pressure.iter().all(|&v| v == 0.0));
        assert_eq!(rep.picard_iterations, 1);
        assert_eq!(s.n, 1);
    }

    #[test]
    fn steady_state_is_a_fixed_point() {
        let d = disc(4);
        let cfg = ModelConfig::new(0.5, 1e-3);
        // a discretely divergence-free state and an arbitrary pressure
        let p = ManufacturedProblem::steady(cfg.nu, cfg.kappa);
        let mut star = project_initial(
            |x| {
                let u = p.initial_velocity(x);
                [20.0 * u[0], 20.0 * u[1]]
            },
            &d,
        )
        .unwrap();
        star.pressure = (0..d.layout.n_pressure()).map(|i| libm::sin(i as f64)).collect();
        let areas = d.mesh.areas();
        let mean = star.pressure.iter().zip(&areas).map(|(p, a)| p * a).sum::<f64>();
        star.pressure.iter_mut().for_each(|p| *p -= mean);
        // load = νA U* + N(U*) U* − Bᵀ P*
        let n = assemble_convection(&star.velocity, &d.mesh, &d.layout).unwrap();
        let f: CsrMatrix = d.forms.stiffness.add_scaled(cfg.nu, &n, 1.0);
        let mut load = f.mul_vec(&star.velocity);
        let neg: Vec<f64> = star.pressure.iter().map(|v| -v).collect();
        d.forms.divergence.matvec_transpose_add(&neg, &mut load);

        let mut st = Stepper::new(&d, cfg, 0.05).unwrap();
        let (next, rep) = st.step(&star, &FixedLoad(load)).unwrap();
        let scale = norm2(&star.velocity);
        for (a, b) in next.velocity.iter().zip(&star.velocity) {
            assert!((a - b).abs() <= 5.0 * cfg.picard_tol * scale.max(1.0), "{a} vs {b}");
        }
        for (a, b) in next.pressure.iter().zip(&star.pressure) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert!(rep.picard_iterations <= 3);
    }

    #[test]
    fn unforced_energy_decreases() {
        let d = disc(4);
        for kappa in [0.0, 1.0] {
            let cfg = ModelConfig::new(1.0, kappa);
            let p = ManufacturedProblem::example3();
            let mut s = project_initial(
                |x| {
                    let u = p.initial_velocity(x);
                    [30.0 * u[0], 30.0 * u[1]]
                },
                &d,
            )
            .unwrap();
            let mut st = Stepper::new(&d, cfg, 0.01).unwrap();
            for _ in 0..10 {
                let (next, _) = st.step(&s, &ZeroForcing).unwrap();
                assert!(energy(&next, &d, kappa) <= energy(&s, &d, kappa) * (1.0 + 1e-12));
                assert!(next.divergence_residual(&d) < 1e-9);
                assert_eq!(next.boundary_max(&d), 0.0);
                s = next;
            }
        }
    }

    #[test]
    fn picard_cap_is_reported() {
        let d = disc(3);
        let cfg = ModelConfig { picard_max: 1, ..ModelConfig::default() };
        let p = ManufacturedProblem::example2();
        let s = project_initial(|x| p.initial_velocity(x), &d).unwrap();
        let mut st = Stepper::new(&d, cfg, 0.1).unwrap();
        assert!(matches!(st.step(&s, &ZeroForcing), Err(Error::PicardNonconvergence { iterations: 1, .. })));
    }

    #[test]
    fn run_keeps_records_and_checkpoints() {
        let d = disc(3);
        let p = ManufacturedProblem::example2();
        let s = project_initial(|x| p.initial_velocity(x), &d).unwrap();
        let grid = TimeGrid::from_final_time(0.5, 0.1).unwrap();
        let tr = run(&d, ModelConfig::default(), grid, &ZeroForcing, s.clone(), &[0.0, 0.3]).unwrap();
        assert_eq!(tr.records.len(), 6);
        assert_eq!(tr.checkpoints.len(), 2);
        assert_eq!(tr.checkpoints[1].n, 3);
        assert_eq!(tr.final_state.n, 5);
        for w in tr.records.windows(2) {
            assert!(w[1].energy.norm_u < w[0].energy.norm_u);
        }
        let empty =
            run(&d, ModelConfig::default(), TimeGrid::new(0.1, 0).unwrap(), &ZeroForcing, s.clone(), &[]).unwrap();
        assert_eq!(empty.records.len(), 1);
        assert_eq!(empty.final_state, s);
    }

    #[test]
    fn failing_step_carries_index() {
        let d = disc(3);
        let cfg = ModelConfig { picard_max: 1, ..ModelConfig::default() };
        let p = ManufacturedProblem::example2();
        let s = project_initial(|x| p.initial_velocity(x), &d).unwrap();
        let err = run(&d, cfg, TimeGrid::new(0.1, 3).unwrap(), &ZeroForcing, s, &[]).unwrap_err();
        assert!(matches!(err, Error::Step { step: 1, .. }));
    }

    #[test]
    fn interpolation_mode_zeroes_boundary() {
        let d = disc(4);
        let p = ManufacturedProblem::example3();
        let s = initial_state(|x| p.initial_velocity(x), &d, InitialMode::Interpolation).unwrap();
        assert_eq!(s.boundary_max(&d), 0.0);
        assert!(norm2(&s.velocity) > 0.0);
    }
}
