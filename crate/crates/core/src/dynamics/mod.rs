//! Composite target-plus-machines dynamics.
//!
//! Subsystem 0 is the `n`-level target; machine `i` owns qubits `1 + 2i`
//! (gap `omega1`) and `2 + 2i` (gap `omega2`).

mod integrate;
mod steady;
mod superop;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::effrme::EffRmeSpec;
use crate::error::{Error, Result};
use crate::operator::{
    ket_bra, thermal_populations, CMatrix, DensityMatrix, HilbertLayout, Operator, DEFAULT_DIM_LIMIT,
};
use crate::virtual_qubit::TwoQubitMachine;

pub use integrate::{evolve, evolve_times, EvolveOptions};
pub use steady::{steady_state_nullspace, SECTOR_LIMIT};
pub use superop::{ReducedGenerator, Superoperator, SuperoperatorBuilder, DENSE_LIMIT};

/// Whether machine rates are reset rates `Q` or spontaneous emission rates `Γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RateSemantics {
    #[default]
    Reset,
    Gkls,
}

/// Environment acting on one target transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub pair: (usize, usize),
    pub rate: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeModel {
    pub target_energies: Vec<f64>,
    pub machines: Vec<TwoQubitMachine>,
    pub env: Option<Environment>,
    pub semantics: RateSemantics,
}

/// Relative tolerance of the gap condition `Ω₁ − Ω₂ = ω_l − ω_k`.
const GAP_TOL: f64 = 1e-9;

impl CompositeModel {
    pub fn new(
        target_energies: Vec<f64>,
        machines: Vec<TwoQubitMachine>,
        env: Option<Environment>,
        semantics: RateSemantics,
    ) -> Result<Self> {
        let model = Self { target_energies, machines, env, semantics };
        model.validate()?;
        Ok(model)
    }

    pub fn n(&self) -> usize {
        self.target_energies.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n < 2 {
            return Err(Error::InvalidLayout(format!("target needs at least 2 levels, got {n}")));
        }
        for (i, m) in self.machines.iter().enumerate() {
            m.validate()?;
            let (k, l) = m.target_pair;
            if l >= n {
                return Err(Error::InvalidMachine(format!("machine {i} targets level {l} of a {n}-level system")));
            }
            let gap = self.target_energies[l] - self.target_energies[k];
            if (m.gap() - gap).abs() > GAP_TOL * gap.abs().max(1.0) {
                return Err(Error::EnergyConservation(format!(
                    "machine {i}: omega1 - omega2 = {} but target gap ({k}, {l}) = {gap}",
                    m.gap()
                )));
            }
        }
        if let Some(env) = &self.env {
            let (k, l) = env.pair;
            if k >= l || l >= n {
                return Err(Error::InvalidChannel(format!("environment pair ({k}, {l})")));
            }
            if !(env.rate >= 0.0) {
                return Err(Error::InvalidChannel(format!("environment rate {}", env.rate)));
            }
            if self.target_energies[l] <= self.target_energies[k] {
                return Err(Error::NonPositiveGap(self.target_energies[l] - self.target_energies[k]));
            }
        }
        self.layout().map(|_| ())
    }

    pub fn layout(&self) -> Result<HilbertLayout> {
        let mut dims = vec![self.n()];
        dims.extend(std::iter::repeat_n(2, 2 * self.machines.len()));
        HilbertLayout::with_limit(dims, 0, DEFAULT_DIM_LIMIT)
    }

    /// Product of the machine qubits' thermal states at their own baths.
    pub fn machine_thermal_populations(&self) -> Result<Vec<f64>> {
        let mut probs = vec![1.0];
        for m in &self.machines {
            for (omega, temp) in [(m.omega1, m.temp1), (m.omega2, m.temp2)] {
                let p = thermal_populations(omega, temp)?;
                probs = probs.iter().flat_map(|&x| [x * p.ground, x * p.excited]).collect();
            }
        }
        Ok(probs)
    }

    /// `ρ_target ⊗ τ_machines` on the composite layout.
    pub fn product_with_machines(&self, target: &CMatrix) -> Result<DensityMatrix> {
        let n = self.n();
        if target.nrows() != n || target.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: target.nrows() });
        }
        let machine = self.machine_thermal_populations()?;
        let m = machine.len();
        let mut full = CMatrix::zeros(n * m, n * m);
        for a in 0..n {
            for b in 0..n {
                let t = target[(a, b)];
                if t == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (x, &p) in machine.iter().enumerate() {
                    full[(a * m + x, b * m + x)] = t * p;
                }
            }
        }
        DensityMatrix::new(Operator::new(full, self.layout()?)?)
    }
}

pub fn build_hamiltonian(model: &CompositeModel) -> Result<Operator> {
    model.validate()?;
    let layout = model.layout()?;
    let d = layout.total_dim();
    let mut h = CMatrix::zeros(d, d);
    for s in 0..d {
        let mut e = model.target_energies[layout.digit(s, 0)];
        for (i, m) in model.machines.iter().enumerate() {
            e += m.omega1 * layout.digit(s, 1 + 2 * i) as f64;
            e += m.omega2 * layout.digit(s, 2 + 2 * i) as f64;
        }
        h[(s, s)] = Complex64::new(e, 0.0);
    }
    for (i, m) in model.machines.iter().enumerate() {
        if m.coupling == 0.0 {
            continue;
        }
        // g |k⟩⟨l| σ⁺₁ σ⁻₂ + h.c.
        let (k, l) = m.target_pair;
        let (q1, q2) = (1 + 2 * i, 2 + 2 * i);
        let g = Complex64::new(m.coupling, 0.0);
        for s in 0..d {
            if layout.digit(s, 0) == l && layout.digit(s, q1) == 0 && layout.digit(s, q2) == 1 {
                let t = s - (l - k) * layout.stride(0) + layout.stride(q1) - layout.stride(q2);
                h[(t, s)] += g;
                h[(s, t)] += g;
            }
        }
    }
    Operator::new(h, layout)
}

/// `1 / (exp(ω/T) − 1)` for `T > 0`.
pub fn bosonic_occupation(omega: f64, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) || temperature.is_infinite() {
        return Err(Error::BosonicOccupationUndefined(temperature));
    }
    if !(omega > 0.0) {
        return Err(Error::NonPositiveGap(omega));
    }
    Ok(1.0 / (omega / temperature).exp_m1())
}

fn diag(p: [f64; 2]) -> CMatrix {
    CMatrix::from_fn(2, 2, |r, c| if r == c { Complex64::new(p[r], 0.0) } else { Complex64::new(0.0, 0.0) })
}

type Triplets = Vec<(usize, usize, Complex64)>;

/// Nonzero entries of `|to⟩⟨from|` on subsystem `index`, identity elsewhere.
fn transition(layout: &HilbertLayout, index: usize, to: usize, from: usize) -> Triplets {
    let stride = layout.stride(index);
    (0..layout.total_dim())
        .filter(|&s| layout.digit(s, index) == from)
        .map(|s| (s + to * stride - from * stride, s, Complex64::new(1.0, 0.0)))
        .collect()
}

/// Reset master equation generator.
///
/// An environment covering the whole target resets it to its thermal state;
/// on a larger target it becomes the classical two-level channel
/// `Q(τᵉ|l⟩⟨k| · |k⟩⟨l| + τᵍ|k⟩⟨l| · |l⟩⟨k|)` in Lindblad form.
pub fn rme_generator(model: &CompositeModel) -> Result<Superoperator> {
    if model.semantics != RateSemantics::Reset {
        return Err(Error::WrongSemantics("rme_generator needs reset semantics".into()));
    }
    let h = build_hamiltonian(model)?;
    let layout = h.layout().clone();
    let mut b = SuperoperatorBuilder::new(layout.clone());
    b.hamiltonian(h.matrix())?;
    for (i, m) in model.machines.iter().enumerate() {
        let p1 = thermal_populations(m.omega1, m.temp1)?;
        let p2 = thermal_populations(m.omega2, m.temp2)?;
        b.reset(1 + 2 * i, m.rate1, &diag([p1.ground, p1.excited]))?;
        b.reset(2 + 2 * i, m.rate2, &diag([p2.ground, p2.excited]))?;
    }
    if let Some(env) = &model.env {
        let (k, l) = env.pair;
        let gap = model.target_energies[l] - model.target_energies[k];
        let pops = thermal_populations(gap, env.temperature)?;
        if model.n() == 2 {
            b.reset(0, env.rate, &diag([pops.ground, pops.excited]))?;
        } else {
            b.sparse_dissipator(&transition(&layout, 0, l, k), env.rate * pops.excited)?;
            b.sparse_dissipator(&transition(&layout, 0, k, l), env.rate * pops.ground)?;
        }
    }
    Ok(b.finish())
}

/// GKLS generator with thermal dissipators `Γ(n̄+1)D[σ⁻] + Γn̄D[σ⁺]` on every
/// machine qubit, where `D[A]ρ = 2AρA† − A†Aρ − ρA†A`.
///
/// An environment acts the same way on its target pair.
pub fn gkls_generator(model: &CompositeModel) -> Result<Superoperator> {
    if model.semantics != RateSemantics::Gkls {
        return Err(Error::WrongSemantics("gkls_generator needs gkls semantics".into()));
    }
    let h = build_hamiltonian(model)?;
    let layout = h.layout().clone();
    let mut b = SuperoperatorBuilder::new(layout.clone());
    b.hamiltonian(h.matrix())?;
    for (i, m) in model.machines.iter().enumerate() {
        for (q, omega, temp, gamma) in
            [(1 + 2 * i, m.omega1, m.temp1, m.rate1), (2 + 2 * i, m.omega2, m.temp2, m.rate2)]
        {
            let nbar = bosonic_occupation(omega, temp)?;
            b.sparse_dissipator(&transition(&layout, q, 0, 1), 2.0 * gamma * (nbar + 1.0))?;
            b.sparse_dissipator(&transition(&layout, q, 1, 0), 2.0 * gamma * nbar)?;
        }
    }
    if let Some(env) = &model.env {
        let (k, l) = env.pair;
        let nbar = bosonic_occupation(model.target_energies[l] - model.target_energies[k], env.temperature)?;
        b.sparse_dissipator(&transition(&layout, 0, k, l), 2.0 * env.rate * (nbar + 1.0))?;
        b.sparse_dissipator(&transition(&layout, 0, l, k), 2.0 * env.rate * nbar)?;
    }
    Ok(b.finish())
}

/// Generator matching the model's rate semantics.
pub fn generator(model: &CompositeModel) -> Result<Superoperator> {
    match model.semantics {
        RateSemantics::Reset => rme_generator(model),
        RateSemantics::Gkls => gkls_generator(model),
    }
}

impl Superoperator {
    /// The effective rate equation as a Lindblad generator on the bare
    /// target: each channel contributes jumps `√(qτᵉ)|l⟩⟨k|` and `√(qτᵍ)|k⟩⟨l|`.
    pub fn from_effrme(spec: &EffRmeSpec) -> Result<Self> {
        let n = spec.n();
        let layout = HilbertLayout::single(n)?;
        let mut b = SuperoperatorBuilder::new(layout);
        for ch in spec.channels() {
            let (k, l) = ch.pair;
            b.dissipator(&ket_bra(n, l, k), ch.rate * ch.pops.excited)?;
            b.dissipator(&ket_bra(n, k, l), ch.rate * ch.pops.ground)?;
        }
        Ok(b.finish())
    }
}
