//! Error norms, convergence rates, energy diagnostics and the Poincaré
//! constant.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use libm::{log, sqrt};

use crate::assembly::{assemble_scalar_mass, assemble_scalar_stiffness, DirichletReduction, Discretization};
use crate::fem::{gauss_rule, vector_at, vector_gradient_at, ElementGeometry, ERROR_DEGREE};
use crate::linalg::factorize;
use crate::mesh::Point;
use crate::problems::ManufacturedProblem;
use crate::stepper::{FlowState, ModelConfig};
use crate::{Error, Result};

/// Relative eigenvalue change that ends inverse iteration.
pub const LAMBDA1_TOL: f64 = 1e-8;
pub const LAMBDA1_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub h: f64,
    pub l2_velocity: f64,
    /// `(‖e‖² + ‖∇e‖²)^{1/2}`
    pub h1_velocity: f64,
    pub h1_seminorm_velocity: f64,
    /// Pressure error after removing the mean of each field.
    pub l2_pressure_meanfree: f64,
}

impl ErrorReport {
    fn from_squares(h: f64, l2: f64, semi: f64, p: f64) -> Self {
        Self {
            h,
            l2_velocity: sqrt(l2),
            h1_velocity: sqrt(l2 + semi),
            h1_seminorm_velocity: sqrt(semi),
            l2_pressure_meanfree: sqrt(p.max(0.0)),
        }
    }
}

fn check_state(state: &FlowState, disc: &Discretization) -> Result<()> {
    if state.velocity.len() != disc.layout.n_velocity() || state.pressure.len() != disc.layout.n_pressure() {
        return Err(Error::Dimension("state does not match the discretization".into()));
    }
    Ok(())
}

fn sq(x: f64) -> f64 {
    x * x
}

fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total
}

/// Errors of `state` against closed-form fields, by degree-10 quadrature.
pub fn error_norms_with(
    state: &FlowState,
    disc: &Discretization,
    u: impl Fn(Point) -> [f64; 2],
    grad_u: impl Fn(Point) -> [[f64; 2]; 2],
    p: impl Fn(Point) -> f64,
) -> Result<ErrorReport> {
    check_state(state, disc)?;
    let rule = gauss_rule(ERROR_DEGREE)?;
    let mesh = &disc.mesh;
    let areas = mesh.areas();
    let ph_mean = weighted_mean(&state.pressure, &areas);

    let mut p_integral = 0.0;
    for t in 0..mesh.n_triangles() {
        for (l, w) in rule.iter() {
            p_integral += 2.0 * areas[t] * w * p(mesh.point_at(t, l));
        }
    }
    let p_mean = p_integral / areas.iter().sum::<f64>();

    let (mut l2, mut semi, mut p_err) = (0.0, 0.0, 0.0);
    for t in 0..mesh.n_triangles() {
        let geo = ElementGeometry::new(mesh.corners(t));
        let ph = state.pressure[t] - ph_mean;
        for (l, w) in rule.iter() {
            let x = mesh.point_at(t, l);
            let jw = 2.0 * areas[t] * w;
            let uh = vector_at(&state.velocity, &disc.layout, t, l);
            let gh = vector_gradient_at(&state.velocity, &disc.layout, &geo, t, l);
            let (ue, ge) = (u(x), grad_u(x));
            l2 += jw * (sq(ue[0] - uh[0]) + sq(ue[1] - uh[1]));
            for c in 0..2 {
                for d in 0..2 {
                    semi += jw * sq(ge[c][d] - gh[c][d]);
                }
            }
            p_err += jw * sq(p(x) - p_mean - ph);
        }
    }
    Ok(ErrorReport::from_squares(disc.h(), l2, semi, p_err))
}

/// Errors against the closed-form solution of `problem` at time `t`.
pub fn error_norms(
    state: &FlowState,
    disc: &Discretization,
    problem: &ManufacturedProblem,
    t: f64,
) -> Result<ErrorReport> {
    if !problem.has_exact() {
        return Err(Error::MissingReference);
    }
    error_norms_with(
        state,
        disc,
        |x| problem.exact_velocity(x, t).unwrap_or([0.0; 2]),
        |x| problem.exact_velocity_gradient(x, t).unwrap_or([[0.0; 2]; 2]),
        |x| problem.exact_pressure(x, t).unwrap_or(0.0),
    )
}

/// Errors of `state` against a solution on a nested, finer mesh. Integrates
/// over the reference elements and locates each quadrature point in the
/// coarse mesh.
pub fn reference_error_norms(
    state: &FlowState,
    disc: &Discretization,
    reference: &FlowState,
    reference_disc: &Discretization,
) -> Result<ErrorReport> {
    check_state(state, disc)?;
    check_state(reference, reference_disc)?;
    let rule = gauss_rule(ERROR_DEGREE)?;
    let (fine, coarse) = (&reference_disc.mesh, &disc.mesh);
    let coarse_geo: Vec<ElementGeometry> =
        (0..coarse.n_triangles()).map(|t| ElementGeometry::new(coarse.corners(t))).collect();
    let ph_mean = weighted_mean(&state.pressure, &coarse.areas());
    let fine_areas = fine.areas();
    let pf_mean = weighted_mean(&reference.pressure, &fine_areas);

    let (mut l2, mut semi, mut perr) = (0.0, 0.0, 0.0);
    for t in 0..fine.n_triangles() {
        let geo = ElementGeometry::new(fine.corners(t));
        let pf = reference.pressure[t] - pf_mean;
        for (l, w) in rule.iter() {
            let x = fine.point_at(t, l);
            let jw = 2.0 * fine_areas[t] * w;
            let uf = vector_at(&reference.velocity, &reference_disc.layout, t, l);
            let gf = vector_gradient_at(&reference.velocity, &reference_disc.layout, &geo, t, l);
            let (tc, lc) = coarse.locate_point(x)?;
            let uc = vector_at(&state.velocity, &disc.layout, tc, lc);
            let gc = vector_gradient_at(&state.velocity, &disc.layout, &coarse_geo[tc], tc, lc);
            l2 += jw * (sq(uf[0] - uc[0]) + sq(uf[1] - uc[1]));
            for c in 0..2 {
                for d in 0..2 {
                    semi += jw * sq(gf[c][d] - gc[c][d]);
                }
            }
            perr += jw * sq(pf - (state.pressure[tc] - ph_mean));
        }
    }
    Ok(ErrorReport::from_squares(disc.h(), l2, semi, perr))
}

/// `rate_i = log(e_{i−1}/e_i) / log(h_{i−1}/h_i)`, which is
/// `log₂(e_{i−1}/e_i)` when `h` halves.
pub fn convergence_rates(errors: &[(f64, f64)]) -> Result<Vec<f64>> {
    for &(h, e) in errors {
        if !(e > 0.0 && e.is_finite()) {
            return Err(Error::UndefinedRate(e));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::UndefinedRate(h));
        }
    }
    errors
        .windows(2)
        .map(|w| {
            let (h0, e0) = w[0];
            let (h1, e1) = w[1];
            if h0 == h1 {
                return Err(Error::UndefinedRate(h1));
            }
            Ok(log(e0 / e1) / log(h0 / h1))
        })
        .collect()
}

/// Rates for errors on meshes whose size halves from one entry to the next.
pub fn halving_rates(errors: &[f64]) -> Result<Vec<f64>> {
    let pairs: Vec<(f64, f64)> = errors.iter().enumerate().map(|(i, &e)| (libm::pow(0.5, i as f64), e)).collect();
    convergence_rates(&pairs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub t: f64,
    /// `‖U‖`
    pub norm_u: f64,
    /// `‖∇U‖`
    pub norm_grad_u: f64,
    /// `‖U‖² + κ‖∇U‖²`
    pub energy: f64,
}

pub fn energy_sample(state: &FlowState, disc: &Discretization, kappa: f64) -> EnergySample {
    let m = disc.forms.mass.quadratic_form(&state.velocity).max(0.0);
    let a = disc.forms.stiffness.quadratic_form(&state.velocity).max(0.0);
    EnergySample { t: state.t, norm_u: sqrt(m), norm_grad_u: sqrt(a), energy: m + kappa * a }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    pub kappa: f64,
    pub samples: Vec<EnergySample>,
}

pub fn energy_trace(states: &[FlowState], disc: &Discretization, kappa: f64) -> Result<EnergyTrace> {
    if states.is_empty() {
        return Err(Error::Config("energy trace of an empty trajectory".into()));
    }
    for s in states {
        check_state(s, disc)?;
    }
    Ok(EnergyTrace { kappa, samples: states.iter().map(|s| energy_sample(s, disc, kappa)).collect() })
}

impl EnergyTrace {
    /// First step `n` with `E^n > E^{n−1}(1 + slack)`, if any.
    pub fn first_energy_increase(&self, slack: f64) -> Option<usize> {
        self.samples.windows(2).position(|w| w[1].energy > w[0].energy * (1.0 + slack)).map(|i| i + 1)
    }

    pub fn is_nonincreasing(&self, slack: f64) -> bool {
        self.first_energy_increase(slack).is_none()
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].energy < w[0].energy)
    }

    pub fn sup_norm_u(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_u).fold(0.0, f64::max)
    }

    /// `max ‖U^n‖` over `t_n ≤ t`.
    pub fn sup_norm_u_until(&self, t: f64) -> f64 {
        self.samples.iter().filter(|s| s.t <= t + 1e-12).map(|s| s.norm_u).fold(0.0, f64::max)
    }
}

/// Least-squares line through `(t, log ‖U‖)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fit `log ‖U^n‖ ≈ intercept + slope·t` over samples with `t ∈ [t0, t1]`.
pub fn fit_log_decay(samples: &[EnergySample], t0: f64, t1: f64) -> Result<DecayFit> {
    let eps = 1e-12;
    let pts: Vec<(f64, f64)> =
        samples.iter().filter(|s| s.t >= t0 - eps && s.t <= t1 + eps).map(|s| (s.t, s.norm_u)).collect();
    if pts.len() < 2 {
        return Err(Error::Config(format!("decay fit over [{t0}, {t1}] needs at least two samples")));
    }
    if let Some(&(_, v)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::UndefinedRate(v));
    }
    let n = pts.len() as f64;
    let ys: Vec<f64> = pts.iter().map(|&(_, v)| log(v)).collect();
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (&(t, _), &y) in pts.iter().zip(&ys) {
        stt += (t - tm) * (t - tm);
        sty += (t - tm) * (y - ym);
        syy += (y - ym) * (y - ym);
    }
    if stt == 0.0 {
        return Err(Error::Config("decay fit needs distinct times".into()));
    }
    let slope = sty / stt;
    let r_squared = if syy > 0.0 { sty * sty / (stt * syy) } else { 1.0 };
    Ok(DecayFit { slope, intercept: ym - slope * tm, r_squared, points: pts.len() })
}

/// Smallest eigenvalue of the scalar Dirichlet problem `A x = λ M x` by
/// inverse iteration.
pub fn estimate_lambda1(disc: &Discretization) -> Result<f64> {
    let a = assemble_scalar_stiffness(&disc.mesh, &disc.layout);
    let m = assemble_scalar_mass(&disc.mesh, &disc.layout);
    let red = DirichletReduction::new(disc.layout.n_velocity_scalar(), &disc.layout.boundary_nodes())?;
    let (a, _) = red.restrict_square(&a);
    let (m, _) = red.restrict_square(&m);
    let lu = factorize(&a)?;

    let mut x = vec![1.0; red.n_free()];
    let mut lambda = f64::INFINITY;
    for _ in 0..LAMBDA1_MAX_ITER {
        let mx = m.mul_vec(&x);
        let y = lu.solve(&mx);
        let ymy = m.quadratic_form(&y);
        // yᵀAy = yᵀMx since Ay = Mx
        let next = y.iter().zip(&mx).map(|(a, b)| a * b).sum::<f64>() / ymy;
        let norm = sqrt(ymy);
        x = y.iter().map(|v| v / norm).collect();
        if (next - lambda).abs() <= LAMBDA1_TOL * next.abs() {
            return Ok(next);
        }
        lambda = next;
    }
    Err(Error::EigenNonconvergence(LAMBDA1_MAX_ITER))
}

/// `max_t ‖f(t)‖_{L²}` over the sampled times, by degree-10 quadrature.
pub fn forcing_l2_bound(f: impl Fn(Point, f64) -> [f64; 2], disc: &Discretization, times: &[f64]) -> f64 {
    let rule = gauss_rule(ERROR_DEGREE).expect("built-in quadrature degree");
    let mesh = &disc.mesh;
    let mut worst: f64 = 0.0;
    for &t in times {
        let mut sq = 0.0;
        for e in 0..mesh.n_triangles() {
            let area = mesh.area(e);
            for (l, w) in rule.iter() {
                let v = f(mesh.point_at(e, l), t);
                sq += 2.0 * area * w * (v[0] * v[0] + v[1] * v[1]);
            }
        }
        worst = worst.max(sqrt(sq));
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorbingBall {
    pub alpha: f64,
    /// `ρ₀ = ‖f‖ / (α ν λ₁)^{1/2}`
    pub rho0: f64,
    /// First step with `(‖U‖² + κ‖∇U‖²)^{1/2} ≤ ρ₀`.
    pub entry_step: Option<usize>,
    pub entry_time: Option<f64>,
    /// The trace stays inside the ball from the entry step on.
    pub remains_inside: bool,
    /// Largest energy radius over the whole trace.
    pub sup_radius: f64,
    /// The energy never increases.
    pub monotone: bool,
}

impl AbsorbingBall {
    pub fn permanent_entry(&self) -> bool {
        self.entry_step.is_some() && self.remains_inside
    }
}

pub fn absorbing_ball_diagnostic(
    trace: &EnergyTrace,
    config: &ModelConfig,
    f_bound: f64,
    lambda1: f64,
) -> Result<AbsorbingBall> {
    if trace.samples.is_empty() {
        return Err(Error::Config("absorbing-ball diagnostic of an empty trace".into()));
    }
    if !(f_bound >= 0.0 && f_bound.is_finite()) {
        return Err(Error::Config(format!("forcing bound must be nonnegative, got {f_bound}")));
    }
    let alpha = config.admissible_alpha(lambda1)?;
    let rho0 = f_bound / sqrt(alpha * config.nu * lambda1);
    let radius: Vec<f64> = trace.samples.iter().map(|s| sqrt(s.energy)).collect();
    let entry = radius.iter().position(|&r| r <= rho0);
    let remains_inside = entry.is_some_and(|i| radius[i..].iter().all(|&r| r <= rho0));
    Ok(AbsorbingBall {
        alpha,
        rho0,
        entry_step: entry,
        entry_time: entry.map(|i| trace.samples[i].t),
        remains_inside,
        sup_radius: radius.iter().copied().fold(0.0, f64::max),
        monotone: trace.is_nonincreasing(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::interpolate_vector;
    use core::f64::consts::PI;

    fn disc(n: usize) -> Discretization {
        Discretization::structured(n).unwrap()
    }

    #[test]
    fn halving_rates_of_reference_errors() {
        let r = halving_rates(&[0.430939, 0.203398, 0.065544, 0.017502]).unwrap();
        let expected = [1.0832, 1.6338, 1.9049];
        for (a, b) in r.iter().zip(expected) {
            assert!((a - b).abs() < 5e-5, "{a} vs {b}");
        }
        assert_eq!(halving_rates(&[0.3, 0.3]).unwrap(), vec![0.0]);
        assert!(matches!(halving_rates(&[0.3, 0.0]), Err(Error::UndefinedRate(_))));
        assert!(halving_rates(&[0.3]).unwrap().is_empty());
    }

    #[test]
    fn rates_use_mesh_ratio() {
        let r = convergence_rates(&[(0.3, 9.0), (0.1, 1.0)]).unwrap();
        assert!((r[0] - 2.0).abs() < 1e-14);
        assert!(convergence_rates(&[(0.1, 2.0), (0.1, 1.0)]).is_err());
    }

    #[test]
    fn exact_fields_have_zero_error() {
        let d = disc(2);
        // quadratic divergence-free field and a constant pressure
        let u = |p: Point| [p[1] * p[1], p[0] * p[0]];
        let mut state = FlowState::zero(&d);
        state.velocity = interpolate_vector(&d.layout, u);
        state.pressure = vec![3.0; d.layout.n_pressure()];
        let r = error_norms_with(&state, &d, u, |p| [[0.0, 2.0 * p[1]], [2.0 * p[0], 0.0]], |_| -7.0).unwrap();
        assert!(r.l2_velocity < 1e-14 && r.h1_velocity < 1e-13 && r.l2_pressure_meanfree < 1e-14, "{r:?}");
        assert!(r.h1_velocity >= r.h1_seminorm_velocity);
    }

    #[test]
    fn pressure_error_is_shift_invariant() {
        let d = disc(4);
        let problem = ManufacturedProblem::example1(1.0);
        let mut state = FlowState::zero(&d);
        state.pressure = (0..d.layout.n_pressure()).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = error_norms(&state, &d, &problem, 0.4).unwrap();
        state.pressure.iter_mut().for_each(|p| *p += 11.5);
        let b = error_norms(&state, &d, &problem, 0.4).unwrap();
        assert!((a.l2_pressure_meanfree - b.l2_pressure_meanfree).abs() < 1e-13);
        assert_eq!(
            error_norms(&state, &d, &ManufacturedProblem::example3(), 0.0).unwrap_err(),
            Error::MissingReference
        );
    }

    #[test]
    fn pressure_mean_is_subtracted() {
        // p = 40xy has mean 10; the zero discrete pressure sees ‖40xy − 10‖
        let d = disc(4);
        let problem = ManufacturedProblem::example1(1.0);
        let r = error_norms(&FlowState::zero(&d), &d, &problem, 0.0).unwrap();
        // ∫(40xy)² = 1600/9, minus 10²
        let expected = sqrt(1600.0 / 9.0 - 100.0);
        assert!((r.l2_pressure_meanfree - expected).abs() < 1e-10);
    }

    #[test]
    fn interpolation_error_rate() {
        let problem = ManufacturedProblem::example1(1.0);
        let mut errs = Vec::new();
        for n in [4, 8, 16] {
            let d = disc(n);
            let mut s = FlowState::zero(&d);
            s.velocity = interpolate_vector(&d.layout, |x| problem.exact_velocity(x, 0.0).unwrap());
            errs.push(error_norms(&s, &d, &problem, 0.0).unwrap().l2_velocity);
        }
        let rates = halving_rates(&errs).unwrap();
        assert!((rates[1] - 3.0).abs() < 0.2, "{rates:?}");
    }

    #[test]
    fn reference_errors_match_closed_form_on_nested_meshes() {
        let problem = ManufacturedProblem::example1(1.0);
        let coarse = disc(4);
        let fine = disc(8);
        let mut sc = FlowState::zero(&coarse);
        sc.velocity = interpolate_vector(&coarse.layout, |x| problem.exact_velocity(x, 0.0).unwrap());
        let mut sf = FlowState::zero(&fine);
        sf.velocity = interpolate_vector(&fine.layout, |x| problem.exact_velocity(x, 0.0).unwrap());
        // identical fields on both meshes: zero error
        let zero = reference_error_norms(&sc, &coarse, &sc.clone(), &coarse).unwrap();
        assert!(zero.l2_velocity < 1e-14 && zero.l2_pressure_meanfree < 1e-14);
        let r = reference_error_norms(&sc, &coarse, &sf, &fine).unwrap();
        let exact = error_norms(&sc, &coarse, &problem, 0.0).unwrap();
        assert!((r.l2_velocity - exact.l2_velocity).abs() < 0.2 * exact.l2_velocity);
    }

    #[test]
    fn energy_of_zero_trajectory() {
        let d = disc(2);
        let tr = energy_trace(&[FlowState::zero(&d), FlowState::zero(&d)], &d, 1.0).unwrap();
        assert!(tr.samples.iter().all(|s| s.energy == 0.0 && s.norm_u == 0.0));
        assert!(energy_trace(&[], &d, 1.0).is_err());
    }

    #[test]
    fn decay_fit_recovers_exponential() {
        let samples: Vec<EnergySample> = (0..=100)
            .map(|i| {
                let t = i as f64 / 100.0;
                let v = 3.0 * libm::exp(-2.5 * t);
                EnergySample { t, norm_u: v, norm_grad_u: v, energy: 2.0 * v * v }
            })
            .collect();
        let fit = fit_log_decay(&samples, 0.2, 1.0).unwrap();
        assert!((fit.slope + 2.5).abs() < 1e-12);
        assert!((fit.intercept - log(3.0)).abs() < 1e-12);
        assert!(fit.r_squared > 0.999_999);
        assert_eq!(fit.points, 81);
        assert!(fit_log_decay(&samples, 2.0, 3.0).is_err());
    }

    #[test]
    fn lambda1_converges_to_two_pi_squared() {
        let exact = 2.0 * PI * PI;
        let mut previous = f64::INFINITY;
        let mut errs = Vec::new();
        for n in [2, 4, 8] {
            let l = estimate_lambda1(&disc(n)).unwrap();
            assert!(l >= exact - 1e-9 && l < previous, "n={n}: {l}");
            previous = l;
            errs.push(l - exact);
        }
        assert!((previous - exact) / exact < 0.05);
        let rates = halving_rates(&errs).unwrap();
        assert!(rates[1] > 3.5, "{rates:?}");
    }

    #[test]
    fn ball_with_zero_forcing() {
        let lambda = 2.0 * PI * PI;
        let cfg = ModelConfig { alpha: Some(0.1), ..ModelConfig::default() };
        let samples: Vec<EnergySample> = (0..5)
            .map(|i| EnergySample {
                t: i as f64,
                norm_u: 1.0 / (1.0 + i as f64),
                norm_grad_u: 0.0,
                energy: 1.0 / (1.0 + i as f64),
            })
            .collect();
        let trace = EnergyTrace { kappa: 1.0, samples };
        let ball = absorbing_ball_diagnostic(&trace, &cfg, 0.0, lambda).unwrap();
        assert_eq!(ball.rho0, 0.0);
        assert!(ball.monotone);
        assert!(ball.entry_step.is_none());
        let bad = ModelConfig { alpha: Some(1.0), ..cfg };
        assert!(matches!(absorbing_ball_diagnostic(&trace, &bad, 0.0, lambda), Err(Error::Config(_))));
        let big = absorbing_ball_diagnostic(&trace, &cfg, 2.0, lambda).unwrap();
        assert_eq!(big.entry_step, Some(0));
        assert!(big.permanent_entry());
    }
}
