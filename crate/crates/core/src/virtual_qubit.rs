//! Virtual qubits of two-qubit machines.
//!
//! A machine of two qubits with gaps `omega1 > omega2`, each in contact with
//! its own bath, exposes the single-excitation manifold `{|0⟩|1⟩, |1⟩|0⟩}` as
//! an effective two-level bath with gap `omega1 - omega2`. The populations
//! are kept as the primary quantity; the virtual temperature is derived and
//! may be negative or infinite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{thermal_log_populations, thermal_populations, PopPair};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitMachine {
    pub omega1: f64,
    pub omega2: f64,
    pub temp1: f64,
    pub temp2: f64,
    /// `Q` (reset) or `Γ` (GKLS) of qubit 1.
    pub rate1: f64,
    pub rate2: f64,
    pub coupling: f64,
    /// Target levels `(k, l)`, `k < l`.
    pub target_pair: (usize, usize),
}

impl TwoQubitMachine {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        omega1: f64,
        omega2: f64,
        temp1: f64,
        temp2: f64,
        rate1: f64,
        rate2: f64,
        coupling: f64,
        target_pair: (usize, usize),
    ) -> Result<Self> {
        let m = Self { omega1, omega2, temp1, temp2, rate1, rate2, coupling, target_pair };
        m.validate()?;
        Ok(m)
    }

    /// Machine whose second gap is fixed by energy conservation with a
    /// target transition of size `target_gap`.
    #[allow(clippy::too_many_arguments)]
    pub fn for_transition(
        omega1: f64,
        target_gap: f64,
        temp1: f64,
        temp2: f64,
        rate1: f64,
        rate2: f64,
        coupling: f64,
        target_pair: (usize, usize),
    ) -> Result<Self> {
        Self::new(omega1, omega1 - target_gap, temp1, temp2, rate1, rate2, coupling, target_pair)
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega1 == self.omega2 {
            return Err(Error::DegenerateMachine(self.omega1));
        }
        if !(self.omega1 > self.omega2 && self.omega2 > 0.0) {
            return Err(Error::InvalidMachine(format!(
                "require omega1 > omega2 > 0, got {} and {}",
                self.omega1, self.omega2
            )));
        }
        if !(self.temp1 > 0.0 && self.temp2 > 0.0) {
            return Err(Error::InvalidMachine(format!(
                "bath temperatures must be positive, got {} and {}",
                self.temp1, self.temp2
            )));
        }
        if !(self.rate1 >= 0.0 && self.rate2 >= 0.0) {
            return Err(Error::InvalidMachine("rates must be non-negative".into()));
        }
        if !self.coupling.is_finite() {
            return Err(Error::InvalidMachine("coupling must be finite".into()));
        }
        let (k, l) = self.target_pair;
        if k >= l {
            return Err(Error::InvalidMachine(format!("target pair ({k}, {l}) must have k < l")));
        }
        Ok(())
    }

    pub fn gap(&self) -> f64 {
        self.omega1 - self.omega2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VirtualQubit {
    pub gap: f64,
    pub pop_ground: f64,
    pub pop_excited: f64,
    /// Weight of the virtual-qubit manifold in the machine's thermal state.
    pub norm: f64,
    /// Display only; populations are authoritative.
    pub vtemp: f64,
}

impl VirtualQubit {
    pub fn populations(&self) -> PopPair {
        PopPair { ground: self.pop_ground, excited: self.pop_excited }
    }
}

/// `(Ω₁ − Ω₂) / (Ω₁/T₁ − Ω₂/T₂)`, signed infinity when the denominator vanishes.
pub fn virtual_temperature(m: &TwoQubitMachine) -> Result<f64> {
    if m.omega1 == m.omega2 {
        return Err(Error::DegenerateMachine(m.omega1));
    }
    Ok(virtual_temperature_raw(m.omega1, m.omega2, m.temp1, m.temp2))
}

pub(crate) fn virtual_temperature_raw(omega1: f64, omega2: f64, temp1: f64, temp2: f64) -> f64 {
    (omega1 - omega2) / (omega1 / temp1 - omega2 / temp2)
}

pub fn virtual_qubit_of(m: &TwoQubitMachine) -> Result<VirtualQubit> {
    let vtemp = virtual_temperature(m)?;
    let (lg1, le1) = thermal_log_populations(m.omega1, m.temp1)?;
    let (lg2, le2) = thermal_log_populations(m.omega2, m.temp2)?;
    // ground: |0⟩₁|1⟩₂, excited: |1⟩₁|0⟩₂
    let ln_ground = lg1 + le2;
    let ln_excited = le1 + lg2;
    let norm = ln_ground.exp() + ln_excited.exp();
    let log_ratio = ln_excited - ln_ground;
    if log_ratio.is_nan() {
        return Err(Error::UndefinedVirtualQubit);
    }
    let pop_excited = (-crate::operator::softplus(-log_ratio)).exp();
    let pops = PopPair::from_excited(pop_excited);
    Ok(VirtualQubit { gap: m.omega1 - m.omega2, pop_ground: pops.ground, pop_excited: pops.excited, norm, vtemp })
}

/// Norm `τ₁ᵍτ₂ᵉ + τ₁ᵉτ₂ᵍ` straight from the bath Boltzmann factors.
pub fn machine_norm(m: &TwoQubitMachine) -> Result<f64> {
    let p1 = thermal_populations(m.omega1, m.temp1)?;
    let p2 = thermal_populations(m.omega2, m.temp2)?;
    Ok(p1.ground * p2.excited + p1.excited * p2.ground)
}

/// Effective thermalisation rate `2g²/(rate1 + rate2) · norm` of the
/// machine's virtual qubit, valid when the machine rates dominate `g`.
pub fn effective_rate_qvir(m: &TwoQubitMachine) -> Result<f64> {
    let total = m.rate1 + m.rate2;
    if total == 0.0 {
        return Err(Error::NoThermalisation);
    }
    Ok(2.0 * m.coupling * m.coupling / total * machine_norm(m)?)
}
