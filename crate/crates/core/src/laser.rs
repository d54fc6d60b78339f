//! Three-level laser pumped directly by hot and cold baths ("typical") or
//! through two-qubit machines ("virtual").
//!
//! Levels 0 and 1 form the lasing transition. Channel B drives (0,2) and
//! channel C drives (1,2); the lossy variants add an environment on (0,1).
//! In the virtual scheme the machines enter only through their virtual
//! qubits, with effective rates `q_B = Q_h·n_B` and `q_C = Q_c·n_C`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::effrme::{steady_state_three, PopulationVector};
use crate::error::{Error, Result};
use crate::operator::{thermal_populations, PopPair};
use crate::virtual_qubit::{machine_norm, virtual_qubit_of, virtual_temperature, TwoQubitMachine};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserConfig {
    pub energies: [f64; 3],
    pub omega_b1: f64,
    pub omega_c1: f64,
    pub t_hot: f64,
    pub t_cold: f64,
    pub t_env: f64,
    pub q_env: f64,
    pub q_hot: f64,
    pub q_cold: f64,
    #[serde(default)]
    pub lossless: bool,
}

impl Default for LaserConfig {
    fn default() -> Self {
        Self {
            energies: [0.0, 2.0, 3.0],
            omega_b1: 4.5,
            omega_c1: 1.3,
            t_hot: 5.0,
            t_cold: 1.2,
            t_env: 7.2,
            q_env: 0.1,
            q_hot: 2.0,
            q_cold: 1.5,
            lossless: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Typical,
    Virtual,
}

impl LaserConfig {
    pub fn validate(&self) -> Result<()> {
        let [w0, w1, w2] = self.energies;
        if !(w0 < w1 && w1 < w2) {
            return Err(Error::InvalidLaser(format!("energies must increase, got {:?}", self.energies)));
        }
        if !(self.omega_b1 - (w2 - w0) > 0.0) {
            return Err(Error::InvalidLaser(format!(
                "omega_b1 = {} leaves no positive second gap for transition (0, 2)",
                self.omega_b1
            )));
        }
        if !(self.omega_c1 - (w2 - w1) > 0.0) {
            return Err(Error::InvalidLaser(format!(
                "omega_c1 = {} leaves no positive second gap for transition (1, 2)",
                self.omega_c1
            )));
        }
        // equal bath temperatures are allowed as the equilibrium limit
        if !(self.t_cold > 0.0 && self.t_hot >= self.t_cold) {
            return Err(Error::InvalidLaser(format!(
                "need t_hot >= t_cold > 0, got {} and {}",
                self.t_hot, self.t_cold
            )));
        }
        if !(self.t_env > 0.0) {
            return Err(Error::InvalidLaser(format!("t_env must be positive, got {}", self.t_env)));
        }
        for (name, q) in [("q_env", self.q_env), ("q_hot", self.q_hot), ("q_cold", self.q_cold)] {
            if !(q >= 0.0) || !q.is_finite() {
                return Err(Error::InvalidLaser(format!("{name} must be non-negative, got {q}")));
            }
        }
        Ok(())
    }

    /// Machine on (0,2): first qubit at `T_h`, second at `T_c`. Its internal
    /// rates are not simulated.
    pub fn machine_b(&self) -> Result<TwoQubitMachine> {
        let gap = self.energies[2] - self.energies[0];
        TwoQubitMachine::for_transition(self.omega_b1, gap, self.t_hot, self.t_cold, 1.0, 1.0, 0.0, (0, 2))
    }

    /// Machine on (1,2): first qubit at `T_c`, second at `T_h`.
    pub fn machine_c(&self) -> Result<TwoQubitMachine> {
        let gap = self.energies[2] - self.energies[1];
        TwoQubitMachine::for_transition(self.omega_c1, gap, self.t_cold, self.t_hot, 1.0, 1.0, 0.0, (1, 2))
    }

    /// `T_h` above which `T_vB` is negative: `(Ω_B1/Ω_B2)·T_c`.
    pub fn inversion_threshold(&self) -> Result<f64> {
        let b = self.machine_b()?;
        Ok(b.omega1 / b.omega2 * self.t_cold)
    }
}

/// `(T_vB, T_vC)`.
pub fn laser_virtual_temperatures(cfg: &LaserConfig) -> Result<(f64, f64)> {
    cfg.validate()?;
    Ok((virtual_temperature(&cfg.machine_b()?)?, virtual_temperature(&cfg.machine_c()?)?))
}

/// Rates and populations of the (env, B, C) channels.
fn channels(cfg: &LaserConfig, scheme: Scheme) -> Result<([f64; 3], [PopPair; 3])> {
    cfg.validate()?;
    let [w0, w1, w2] = cfg.energies;
    let env = thermal_populations(w1 - w0, cfg.t_env)?;
    let q_env = if cfg.lossless { 0.0 } else { cfg.q_env };
    match scheme {
        Scheme::Typical => Ok((
            [q_env, cfg.q_hot, cfg.q_cold],
            [env, thermal_populations(w2 - w0, cfg.t_hot)?, thermal_populations(w2 - w1, cfg.t_cold)?],
        )),
        Scheme::Virtual => {
            let (b, c) = (cfg.machine_b()?, cfg.machine_c()?);
            Ok((
                [q_env, cfg.q_hot * machine_norm(&b)?, cfg.q_cold * machine_norm(&c)?],
                [env, virtual_qubit_of(&b)?.populations(), virtual_qubit_of(&c)?.populations()],
            ))
        }
    }
}

pub fn laser_steady_state(cfg: &LaserConfig, scheme: Scheme) -> Result<PopulationVector> {
    let (rates, pops) = channels(cfg, scheme)?;
    steady_state_three(rates, pops)
}

/// `p₁/p₀` of the lasing transition.
pub fn inversion_ratio(cfg: &LaserConfig, scheme: Scheme) -> Result<f64> {
    Ok(laser_steady_state(cfg, scheme)?.ratio(1, 0))
}

/// Curves of the inversion sweep, in table column order.
pub const CURVES: [(&str, Scheme, bool); 4] = [
    ("typical_lossless", Scheme::Typical, true),
    ("typical_lossy", Scheme::Typical, false),
    ("virtual_lossless", Scheme::Virtual, true),
    ("virtual_lossy", Scheme::Virtual, false),
];

#[derive(Debug, Clone, PartialEq)]
pub struct InversionRow {
    pub t_hot: f64,
    /// `p₁/p₀` per entry of [`CURVES`], or the error at this point.
    pub ratios: std::result::Result<[f64; 4], String>,
    pub virtual_temperatures: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionSweep {
    pub rows: Vec<InversionRow>,
    /// Lasing-threshold crossings `p₁/p₀ = 1` per curve.
    pub thresholds: [Vec<f64>; 4],
    /// Where the lossy virtual curve crosses the lossless typical curve.
    pub lossy_virtual_beats_typical: Vec<f64>,
}

/// Points where `y` changes sign, by linear interpolation. Points with
/// `None` break the curve.
pub fn zero_crossings(x: &[f64], y: &[Option<f64>]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..x.len() {
        let (Some(a), Some(b)) = (y[i - 1], y[i]) else { continue };
        if a == 0.0 {
            if i == 1 {
                out.push(x[0]);
            }
            continue;
        }
        if b == 0.0 {
            out.push(x[i]);
        } else if (a < 0.0) != (b < 0.0) {
            out.push(x[i - 1] + (x[i] - x[i - 1]) * a / (a - b));
        }
    }
    out
}

fn point(template: &LaserConfig, t_hot: f64) -> InversionRow {
    let cfg = LaserConfig { t_hot, ..*template };
    let ratios = (|| {
        let mut out = [0.0; 4];
        for (slot, (_, scheme, lossless)) in CURVES.iter().enumerate() {
            out[slot] = inversion_ratio(&LaserConfig { lossless: *lossless, ..cfg }, *scheme)?;
        }
        Ok::<_, Error>(out)
    })();
    InversionRow {
        t_hot,
        ratios: ratios.map_err(|e| e.to_string()),
        virtual_temperatures: laser_virtual_temperatures(&cfg).ok(),
    }
}

pub fn inversion_sweep(template: &LaserConfig, t_hot: &[f64], jobs: usize) -> Result<InversionSweep> {
    if t_hot.is_empty() {
        return Err(Error::InvalidLaser("sweep needs at least one temperature".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidLaser(format!("thread pool: {e}")))?;
    let rows: Vec<InversionRow> = pool.install(|| t_hot.par_iter().map(|&t| point(template, t)).collect());
    let curve = |f: &dyn Fn(&[f64; 4]) -> f64| -> Vec<Option<f64>> {
        rows.iter().map(|r| r.ratios.as_ref().ok().map(f)).collect()
    };
    let thresholds = std::array::from_fn(|k| zero_crossings(t_hot, &curve(&|r| r[k] - 1.0)));
    let lossy_virtual_beats_typical = zero_crossings(t_hot, &curve(&|r| r[3] - r[0]));
    Ok(InversionSweep { rows, thresholds, lossy_virtual_beats_typical })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn virtual_temperature_values() {
        let (tvb, tvc) = laser_virtual_temperatures(&LaserConfig::default()).unwrap();
        assert_relative_eq!(tvb, 3.0 / (4.5 / 5.0 - 1.5 / 1.2), max_relative = 1e-14);
        assert_abs_diff_eq!(tvb, -8.5714, epsilon = 1e-4);
        assert_relative_eq!(tvc, 1.0 / (1.3 / 1.2 - 0.3 / 5.0), max_relative = 1e-14);
        assert_abs_diff_eq!(tvc, 0.97720, epsilon = 1e-5);
    }

    #[test]
    fn threshold_value() {
        assert_relative_eq!(LaserConfig::default().inversion_threshold().unwrap(), 3.6, max_relative = 1e-14);
    }

    #[test]
    fn lossless_ratios() {
        let cfg = LaserConfig { lossless: true, ..LaserConfig::default() };
        let typical = inversion_ratio(&cfg, Scheme::Typical).unwrap();
        assert_relative_eq!(typical, (-3.0f64 / 5.0 + 1.0 / 1.2).exp(), max_relative = 1e-12);
        let (tvb, tvc) = laser_virtual_temperatures(&cfg).unwrap();
        let virt = inversion_ratio(&cfg, Scheme::Virtual).unwrap();
        assert_relative_eq!(virt, (-3.0 / tvb + 1.0 / tvc).exp(), max_relative = 1e-12);
        assert_abs_diff_eq!(virt, 3.94849, epsilon = 1e-5);
    }

    #[test]
    fn equilibrium_has_no_inversion() {
        let cfg = LaserConfig { t_hot: 1.2, lossless: true, ..LaserConfig::default() };
        for scheme in [Scheme::Typical, Scheme::Virtual] {
            assert_relative_eq!(inversion_ratio(&cfg, scheme).unwrap(), (-2.0f64 / 1.2).exp(), max_relative = 1e-12);
        }
    }

    #[test]
    fn ideal_virtual_temperatures_empty_ground_level() {
        // T_vB → −∞ (balanced B populations), T_vC → 0 (C fully in its ground state)
        let pops = [PopPair::from_excited(0.0), PopPair::from_excited(0.5), PopPair::from_excited(0.0)];
        let p = steady_state_three([0.0, 1.0, 1.0], pops).unwrap();
        assert_eq!(p.probs()[0], 0.0);
        assert_abs_diff_eq!(p.probs()[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn crossings_interpolate() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [Some(-1.0), Some(1.0), None, Some(2.0)];
        assert_eq!(zero_crossings(&x, &y), vec![1.5]);
    }

    #[test]
    fn rejects_invalid_configs() {
        assert!(LaserConfig { omega_b1: 3.0, ..LaserConfig::default() }.validate().is_err());
        assert!(LaserConfig { t_hot: 1.0, ..LaserConfig::default() }.validate().is_err());
        assert!(LaserConfig { energies: [0.0, 3.0, 2.0], ..LaserConfig::default() }.validate().is_err());
    }
}
