//! Run configuration: a JSON document whose fields can each be overridden on
//! the command line.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use kvflow_core::problems::ManufacturedProblem;
use kvflow_core::stepper::{InitialMode, ModelConfig, TimeGrid, PICARD_MAX, PICARD_TOL};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Time step choice: a fixed `k`, or `k = h²` per mesh level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeStep {
    Fixed(f64),
    Rule(StepRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepRule {
    #[serde(rename = "h^2")]
    HSquared,
}

impl TimeStep {
    pub const H_SQUARED: TimeStep = TimeStep::Rule(StepRule::HSquared);

    pub fn for_level(&self, n: usize) -> f64 {
        match *self {
            TimeStep::Fixed(k) => k,
            TimeStep::Rule(StepRule::HSquared) => 1.0 / (n * n) as f64,
        }
    }
}

impl fmt::Display for TimeStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeStep::Fixed(k) => write!(f, "{k}"),
            TimeStep::Rule(StepRule::HSquared) => f.write_str("h^2"),
        }
    }
}

impl FromStr for TimeStep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "h^2" | "k=h^2" | "h2" => Ok(TimeStep::H_SQUARED),
            other => other
                .parse::<f64>()
                .map(TimeStep::Fixed)
                .map_err(|_| format!("expected a number or \"h^2\", got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InitialData {
    Projection,
    Interpolation,
}

impl From<InitialData> for InitialMode {
    fn from(d: InitialData) -> Self {
        match d {
            InitialData::Projection => InitialMode::Projection,
            InitialData::Interpolation => InitialMode::Interpolation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub example: u8,
    pub nu: f64,
    pub kappa: f64,
    /// Mesh divisions per side, strictly increasing.
    pub levels: Vec<usize>,
    pub time_step: TimeStep,
    pub final_time: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub output_dir: PathBuf,
    #[serde(default = "default_initial")]
    pub initial: InitialData,
    /// Uniform refinements of the finest level used as reference solution.
    #[serde(default = "default_reference_refinements")]
    pub reference_refinements: usize,
    #[serde(default = "one")]
    pub forcing_scale: f64,
    #[serde(default = "one")]
    pub initial_scale: f64,
}

fn default_initial() -> InitialData {
    InitialData::Projection
}

fn default_reference_refinements() -> usize {
    2
}

fn one() -> f64 {
    1.0
}

/// Partial configuration as read from a file: absent fields fall back to
/// the command's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialConfig {
    example: Option<u8>,
    nu: Option<f64>,
    kappa: Option<f64>,
    levels: Option<Vec<usize>>,
    time_step: Option<TimeStep>,
    final_time: Option<f64>,
    picard_tol: Option<f64>,
    picard_max: Option<usize>,
    alpha: Option<f64>,
    output_dir: Option<PathBuf>,
    initial: Option<InitialData>,
    reference_refinements: Option<usize>,
    forcing_scale: Option<f64>,
    initial_scale: Option<f64>,
}

/// Command-line overrides; every field of [`RunConfig`] has one.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config file; flags override its fields
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Example number (1, 2 or 3)
    #[arg(long)]
    pub example: Option<u8>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Comma-separated mesh divisions, e.g. 4,8,16,32
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    /// Time step: a number or "h^2"
    #[arg(long = "time-step", visible_alias = "k")]
    pub time_step: Option<TimeStep>,
    /// Final time T
    #[arg(long = "final-time", visible_alias = "T")]
    pub final_time: Option<f64>,
    #[arg(long = "picard-tol")]
    pub picard_tol: Option<f64>,
    #[arg(long = "picard-max")]
    pub picard_max: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long = "output-dir")]
    pub output_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub initial: Option<InitialData>,
    #[arg(long = "reference-refinements")]
    pub reference_refinements: Option<usize>,
    #[arg(long = "forcing-scale")]
    pub forcing_scale: Option<f64>,
    #[arg(long = "initial-scale")]
    pub initial_scale: Option<f64>,
}

/// Which study a configuration is for; selects the defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    Convergence,
    Decay,
    Boundedness,
}

impl RunConfig {
    pub fn defaults(study: Study) -> Self {
        let base = RunConfig {
            example: 1,
            nu: 1.0,
            kappa: 1.0,
            levels: vec![2, 4, 8, 16, 32],
            time_step: TimeStep::H_SQUARED,
            final_time: 1.0,
            picard_tol: PICARD_TOL,
            picard_max: PICARD_MAX,
            alpha: None,
            output_dir: PathBuf::from("out"),
            initial: InitialData::Projection,
            reference_refinements: 2,
            forcing_scale: 1.0,
            initial_scale: 1.0,
        };
        match study {
            Study::Convergence => base,
            Study::Decay => RunConfig { example: 2, levels: vec![16], ..base },
            Study::Boundedness => RunConfig { levels: vec![8], final_time: 10.0, ..base },
        }
    }

    /// Defaults, then the JSON file (if any), then the flags.
    pub fn resolve(study: Study, overrides: &Overrides) -> CliResult<Self> {
        let mut cfg = Self::defaults(study);
        if let Some(path) = &overrides.config {
            cfg.apply_file(path)?;
        }
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_file(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let partial: PartialConfig =
            serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_path_buf(), source })?;
        self.merge(partial);
        Ok(())
    }

    fn merge(&mut self, p: PartialConfig) {
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = p.$field { self.$field = v; } )* };
        }
        take!(
            example,
            nu,
            kappa,
            levels,
            time_step,
            final_time,
            picard_tol,
            picard_max,
            output_dir,
            initial,
            reference_refinements,
            forcing_scale,
            initial_scale
        );
        if p.alpha.is_some() {
            self.alpha = p.alpha;
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        self.merge(PartialConfig {
            example: o.example,
            nu: o.nu,
            kappa: o.kappa,
            levels: o.levels.clone(),
            time_step: o.time_step,
            final_time: o.final_time,
            picard_tol: o.picard_tol,
            picard_max: o.picard_max,
            alpha: o.alpha,
            output_dir: o.output_dir.clone(),
            initial: o.initial,
            reference_refinements: o.reference_refinements,
            forcing_scale: o.forcing_scale,
            initial_scale: o.initial_scale,
        });
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(1..=3).contains(&self.example) {
            return Err(CliError::Config(format!("example must be 1, 2 or 3, got {}", self.example)));
        }
        if self.levels.is_empty() {
            return Err(CliError::Config("levels must not be empty".into()));
        }
        if self.levels[0] == 0 || self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config(format!(
                "levels must be positive and strictly increasing: {:?}",
                self.levels
            )));
        }
        if let TimeStep::Fixed(k) = self.time_step {
            if !(k > 0.0 && k.is_finite()) {
                return Err(CliError::Config(format!("time step must be positive, got {k}")));
            }
        }
        if !(self.final_time >= 0.0 && self.final_time.is_finite()) {
            return Err(CliError::Config(format!("final time must be nonnegative, got {}", self.final_time)));
        }
        for (name, v) in [("forcing_scale", self.forcing_scale), ("initial_scale", self.initial_scale)] {
            if !v.is_finite() {
                return Err(CliError::Config(format!("{name} must be finite")));
            }
        }
        self.model().validate()?;
        for &n in &self.levels {
            self.time_grid(n)?;
        }
        Ok(())
    }

    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            nu: self.nu,
            kappa: self.kappa,
            picard_tol: self.picard_tol,
            picard_max: self.picard_max,
            alpha: self.alpha,
        }
    }

    pub fn time_grid(&self, n: usize) -> CliResult<TimeGrid> {
        TimeGrid::from_final_time(self.final_time, self.time_step.for_level(n)).map_err(CliError::from)
    }

    pub fn problem(&self) -> ManufacturedProblem {
        let p = match self.example {
            1 => ManufacturedProblem::example1(self.kappa),
            2 => ManufacturedProblem::example2(),
            _ => ManufacturedProblem::example3(),
        };
        ManufacturedProblem { nu: self.nu, kappa: self.kappa, ..p }
            .with_forcing_scale(self.forcing_scale)
            .with_initial_scale(self.initial_scale)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
