//! TOML experiment configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dynamics::{CompositeModel, Environment, EvolveOptions, RateSemantics};
use crate::effrme::{EffRmeSpec, ResetChannel};
use crate::error::{Error, Result};
use crate::laser::LaserConfig;
use crate::operator::PopPair;
use crate::ratefit::{FitModel, FitProblem, Residual, SweepVariable};
use crate::virtual_qubit::TwoQubitMachine;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum Experiment {
    VirtualTemp,
    SteadyState,
    Evolve,
    FitRates,
    SweepFit,
    LaserSweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::VirtualTemp => "virtual-temp",
            Experiment::SteadyState => "steady-state",
            Experiment::Evolve => "evolve",
            Experiment::FitRates => "fit-rates",
            Experiment::SweepFit => "sweep-fit",
            Experiment::LaserSweep => "laser-sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub output: Option<PathBuf>,
    pub model: Option<ModelSection>,
    pub effrme: Option<EffRmeSection>,
    pub laser: Option<LaserConfig>,
    pub fit: Option<FitSection>,
    pub sweep: Option<SweepSection>,
    pub evolve: Option<EvolveSection>,
    pub integrator: Option<IntegratorSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineSection {
    pub pair: [usize; 2],
    pub omega1: f64,
    /// Defaults to `omega1` minus the target gap of `pair`.
    pub omega2: Option<f64>,
    pub temp1: f64,
    pub temp2: f64,
    pub rate1: f64,
    pub rate2: f64,
    pub coupling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    pub pair: [usize; 2],
    pub rate: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub energies: Vec<f64>,
    #[serde(default)]
    pub semantics: RateSemantics,
    pub machines: Vec<MachineSection>,
    pub env: Option<EnvSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub pair: [usize; 2],
    pub rate: f64,
    /// Reset temperature; give this or `pop_excited`.
    pub temperature: Option<f64>,
    pub pop_excited: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffRmeSection {
    pub energies: Vec<f64>,
    pub channels: Vec<ChannelSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualSection {
    #[default]
    Evolution,
    SteadyState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    #[serde(default)]
    pub residual: ResidualSection,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_budget")]
    pub max_evaluations: usize,
    pub initial_guess: Option<[f64; 3]>,
}

fn default_horizon() -> f64 {
    10.0
}

fn default_tolerance() -> f64 {
    1e-6
}

fn default_budget() -> usize {
    2000
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            residual: ResidualSection::default(),
            horizon: default_horizon(),
            tolerance: default_tolerance(),
            max_evaluations: default_budget(),
            initial_guess: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: String,
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
}

impl SweepSection {
    /// Explicit `values`, or `points` evenly spaced values from `start` to `stop`.
    pub fn resolve(&self) -> Result<Vec<f64>> {
        match (&self.values, self.start, self.stop, self.points) {
            (Some(v), None, None, None) => {
                if v.is_empty() {
                    return Err(Error::Config("sweep.values must not be empty".into()));
                }
                Ok(v.clone())
            }
            (None, Some(a), Some(b), Some(n)) => {
                if n == 0 {
                    return Err(Error::Config("sweep.points must be positive".into()));
                }
                if n == 1 {
                    return Ok(vec![a]);
                }
                Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
            }
            _ => Err(Error::Config("sweep needs either `values` or all of `start`, `stop`, `points`".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    /// Output times; alternatively `t_end` with `points`.
    pub times: Option<Vec<f64>>,
    pub t_end: Option<f64>,
    pub points: Option<usize>,
    /// Initial target populations; the machines start thermal.
    pub target_populations: Vec<f64>,
}

impl EvolveSection {
    pub fn resolve_times(&self) -> Result<Vec<f64>> {
        match (&self.times, self.t_end, self.points) {
            (Some(t), None, None) => Ok(t.clone()),
            (None, Some(end), Some(n)) if n >= 2 => Ok((0..n).map(|i| end * i as f64 / (n - 1) as f64).collect()),
            _ => Err(Error::Config("evolve needs either `times` or `t_end` with `points` >= 2".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub rtol: f64,
    pub atol: f64,
}

fn section<'a, T>(value: &'a Option<T>, name: &str) -> Result<&'a T> {
    value.as_ref().ok_or_else(|| Error::Config(format!("missing field: {name}")))
}

impl ModelSection {
    pub fn build(&self) -> Result<CompositeModel> {
        let n = self.energies.len();
        let mut machines = Vec::with_capacity(self.machines.len());
        for (i, m) in self.machines.iter().enumerate() {
            let [k, l] = m.pair;
            if k >= n || l >= n {
                return Err(Error::Config(format!("machines[{i}].pair {:?} outside {n} levels", m.pair)));
            }
            let omega2 = m.omega2.unwrap_or(m.omega1 - (self.energies[l] - self.energies[k]));
            machines.push(TwoQubitMachine::new(
                m.omega1,
                omega2,
                m.temp1,
                m.temp2,
                m.rate1,
                m.rate2,
                m.coupling,
                (k, l),
            )?);
        }
        let env = self.env.as_ref().map(|e| Environment {
            pair: (e.pair[0], e.pair[1]),
            rate: e.rate,
            temperature: e.temperature,
        });
        CompositeModel::new(self.energies.clone(), machines, env, self.semantics)
    }
}

impl EffRmeSection {
    pub fn build(&self) -> Result<EffRmeSpec> {
        let mut channels = Vec::with_capacity(self.channels.len());
        for (i, c) in self.channels.iter().enumerate() {
            let pair = (c.pair[0], c.pair[1]);
            let ch = match (c.temperature, c.pop_excited) {
                (Some(t), None) => {
                    let (k, l) = pair;
                    if k >= self.energies.len() || l >= self.energies.len() {
                        return Err(Error::Config(format!("channels[{i}].pair {:?} out of range", c.pair)));
                    }
                    ResetChannel::thermal(pair, c.rate, self.energies[l] - self.energies[k], t)?
                }
                (None, Some(p)) => ResetChannel::new(pair, c.rate, PopPair::from_excited(p))?,
                _ => {
                    return Err(Error::Config(format!(
                        "channels[{i}] needs exactly one of `temperature` or `pop_excited`"
                    )))
                }
            };
            channels.push(ch);
        }
        EffRmeSpec::new(self.energies.clone(), channels)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(describe_toml_error(e.message())))
    }

    pub fn model(&self) -> Result<CompositeModel> {
        section(&self.model, "model")?.build()
    }

    pub fn evolve_options(&self) -> EvolveOptions {
        let mut opts = EvolveOptions::default();
        if let Some(i) = &self.integrator {
            opts.rtol = i.rtol;
            opts.atol = i.atol;
        }
        opts
    }

    pub fn fit_problem(&self) -> Result<FitProblem> {
        let fit = self.fit.clone().unwrap_or_default();
        let model = match (&self.model, &self.effrme) {
            (Some(m), None) => FitModel::Composite(m.build()?),
            (None, Some(e)) => FitModel::Effective(e.build()?),
            (Some(_), Some(_)) => return Err(Error::Config("give either [model] or [effrme], not both".into())),
            (None, None) => return Err(Error::Config("missing field: model".into())),
        };
        let mut problem = FitProblem::new(model);
        problem.residual = match fit.residual {
            ResidualSection::Evolution => Residual::Evolution { horizon: fit.horizon },
            ResidualSection::SteadyState => Residual::SteadyState,
        };
        problem.initial_guess = fit.initial_guess;
        problem.tolerance = fit.tolerance;
        problem.max_evaluations = fit.max_evaluations;
        problem.evolve = self.evolve_options();
        problem.validate()?;
        Ok(problem)
    }

    pub fn sweep(&self) -> Result<(String, Vec<f64>)> {
        let s = section(&self.sweep, "sweep")?;
        Ok((s.variable.clone(), s.resolve()?))
    }

    pub fn fit_sweep(&self) -> Result<(SweepVariable, Vec<f64>)> {
        let (name, values) = self.sweep()?;
        Ok((name.parse().map_err(|_| Error::Config(format!("unknown sweep variable: {name}")))?, values))
    }

    pub fn laser(&self) -> Result<LaserConfig> {
        let cfg = *section(&self.laser, "laser")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn effrme(&self) -> Result<EffRmeSpec> {
        section(&self.effrme, "effrme")?.build()
    }

    pub fn evolve_section(&self) -> Result<&EvolveSection> {
        section(&self.evolve, "evolve")
    }
}

/// Rewrites serde's "missing field `x`" style into "missing field: x".
fn describe_toml_error(message: &str) -> String {
    for kind in ["missing field", "unknown field", "unknown variant"] {
        if let Some(rest) = message.strip_prefix(kind) {
            if let Some(name) = rest.trim_start().strip_prefix('`').and_then(|r| r.split('`').next()) {
                let tail = rest.trim_start()[name.len() + 2..].trim_start_matches(',').trim();
                return if tail.is_empty() { format!("{kind}: {name}") } else { format!("{kind}: {name} ({tail})") };
            }
        }
    }
    message.to_string()
}
