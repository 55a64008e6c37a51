//! Fast oracle checks on meshes with n ≤ 2.

use std::f64::consts::PI;

use kvflow_core::analysis::{estimate_lambda1, halving_rates, EnergyTrace};
use kvflow_core::assembly::{assemble_convection, Discretization};
use kvflow_core::problems::{forcing_consistency_check, ManufacturedProblem};
use kvflow_core::stepper::{initial_state, run, InitialMode, ModelConfig, TimeGrid};
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::oracle::compare_assembly;

pub const ORACLE_TOL: f64 = 1e-13;
pub const ANTISYMMETRY_TOL: f64 = 1e-12;
pub const FORCING_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, detail: detail.into() }
    }

    fn failed(name: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Check::new(name, false, format!("error: {err}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }
}

fn oracle_checks(out: &mut Vec<Check>) {
    for n in [1, 2] {
        let name = format!("assembly matches dense oracle (n = {n})");
        out.push(match compare_assembly(n, 11 + n as u64) {
            Ok(c) => Check::new(name, c.max() <= ORACLE_TOL, format!("max deviation {:.3e}", c.max())),
            Err(e) => Check::failed(name, e),
        });
    }
}

fn antisymmetry_check() -> Check {
    let name = "convection is antisymmetric (n = 2)";
    let disc = match Discretization::structured(2) {
        Ok(d) => d,
        Err(e) => return Check::failed(name, e),
    };
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let w: Vec<f64> = (0..disc.layout.n_velocity()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..disc.layout.n_velocity()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = match assemble_convection(&w, &disc.mesh, &disc.layout) {
            Ok(n) => n,
            Err(e) => return Check::failed(name, e),
        };
        let scale = v.iter().map(|x| x * x).sum::<f64>() * disc.forms.stiffness.quadratic_form(&w).sqrt();
        worst = worst.max(n.quadratic_form(&v).abs() / scale);
    }
    Check::new(name, worst <= ANTISYMMETRY_TOL, format!("max |vᵀN(w)v| / (‖v‖²‖∇w‖) = {worst:.3e}"))
}

fn forcing_checks(out: &mut Vec<Check>) {
    for kappa in [0.0, 1e-3, 1.0] {
        let name = format!("example 1 forcing matches its solution (kappa = {kappa})");
        out.push(match forcing_consistency_check(&ManufacturedProblem::example1(kappa), 200) {
            Ok(d) => Check::new(name, d < FORCING_TOL, format!("max residual {d:.3e}")),
            Err(e) => Check::failed(name, e),
        });
    }
}

fn rate_arithmetic_check() -> Check {
    let name = "rate arithmetic on reference errors";
    match halving_rates(&[0.430939, 0.203398, 0.065544, 0.017502]) {
        Ok(r) => {
            let expected = [1.0832, 1.6338, 1.9049];
            let ok = r.len() == 3 && r.iter().zip(expected).all(|(a, b)| (a - b).abs() < 5e-5);
            Check::new(name, ok, format!("{r:.4?}"))
        }
        Err(e) => Check::failed(name, e),
    }
}

fn energy_check() -> Check {
    let name = "unforced energy is nonincreasing (example 2, n = 2)";
    let result = (|| {
        let disc = Discretization::structured(2)?;
        let problem = ManufacturedProblem::example2();
        let init = initial_state(|p| problem.initial_velocity(p), &disc, InitialMode::Projection)?;
        let grid = TimeGrid::new(1.0 / 16.0, 8)?;
        let traj = run(&disc, ModelConfig::new(problem.nu, problem.kappa), grid, &problem, init, &[])?;
        Ok::<_, kvflow_core::Error>(EnergyTrace { kappa: problem.kappa, samples: traj.energies() })
    })();
    match result {
        Ok(t) => Check::new(
            name,
            t.is_nonincreasing(crate::studies::ENERGY_SLACK),
            format!("first increase at {:?}", t.first_energy_increase(crate::studies::ENERGY_SLACK)),
        ),
        Err(e) => Check::failed(name, e),
    }
}

fn lambda1_check() -> Check {
    let name = "lambda1 estimate bounds 2π² from above (n = 2)";
    match Discretization::structured(2).and_then(|d| estimate_lambda1(&d)) {
        Ok(l) => Check::new(name, l >= 2.0 * PI * PI, format!("lambda1 = {l:.6}")),
        Err(e) => Check::failed(name, e),
    }
}

pub fn run_selftest() -> SelftestReport {
    let mut checks = Vec::new();
    oracle_checks(&mut checks);
    checks.push(antisymmetry_check());
    forcing_checks(&mut checks);
    checks.push(rate_arithmetic_check());
    checks.push(energy_check());
    checks.push(lambda1_check());
    SelftestReport { checks }
}
