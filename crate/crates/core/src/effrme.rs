//! Effective reset master equation for an `n`-level target.
//!
//! Every machine is replaced by a reset channel on one level pair `(k, l)`
//! that pulls the pair towards fixed populations `(τᵍ, τᵉ)` at rate `q`.
//! Coherences cannot be generated by such channels, so only populations are
//! tracked. Several channels may act on the same pair (for example an
//! environment and a virtual qubit on the lasing transition); their `q·τ`
//! contributions add in the generator.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{thermal_populations, PopPair};
use crate::virtual_qubit::VirtualQubit;

/// Reciprocal condition number below which the row-replaced generator is
/// treated as singular.
const RCOND_MIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResetChannel {
    pub pair: (usize, usize),
    pub rate: f64,
    pub pops: PopPair,
}

impl ResetChannel {
    pub fn new(pair: (usize, usize), rate: f64, pops: PopPair) -> Result<Self> {
        let (k, l) = pair;
        if k >= l {
            return Err(Error::InvalidChannel(format!("pair ({k}, {l}) must have k < l")));
        }
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::InvalidChannel(format!("rate {rate} must be finite and >= 0")));
        }
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !ok(pops.ground) || !ok(pops.excited) || (pops.ground + pops.excited - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidChannel(format!(
                "populations ({}, {}) are not a probability pair",
                pops.ground, pops.excited
            )));
        }
        Ok(Self { pair, rate, pops })
    }

    /// Channel towards the thermal state of a transition with gap `gap`.
    pub fn thermal(pair: (usize, usize), rate: f64, gap: f64, temperature: f64) -> Result<Self> {
        Self::new(pair, rate, thermal_populations(gap, temperature)?)
    }

    pub fn from_virtual_qubit(pair: (usize, usize), rate: f64, vq: &VirtualQubit) -> Result<Self> {
        Self::new(pair, rate, vq.populations())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffRmeSpec {
    n: usize,
    energies: Vec<f64>,
    channels: Vec<ResetChannel>,
    components: Vec<Vec<usize>>,
}

impl EffRmeSpec {
    pub fn new(energies: Vec<f64>, channels: Vec<ResetChannel>) -> Result<Self> {
        let n = energies.len();
        if n < 2 {
            return Err(Error::InvalidChannel(format!("need at least two levels, got {n}")));
        }
        if energies.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::InvalidChannel("energies must be non-decreasing".into()));
        }
        for c in &channels {
            if c.pair.1 >= n {
                return Err(Error::InvalidChannel(format!(
                    "pair ({}, {}) out of range for {n} levels",
                    c.pair.0, c.pair.1
                )));
            }
        }
        let components = connected_components(n, &channels);
        Ok(Self { n, energies, channels, components })
    }

    /// Levels without explicit energies, `0, 1, …, n−1`.
    pub fn with_levels(n: usize, channels: Vec<ResetChannel>) -> Result<Self> {
        Self::new((0..n).map(|k| k as f64).collect(), channels)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn channels(&self) -> &[ResetChannel] {
        &self.channels
    }

    /// Level sets connected by channels with nonzero rate.
    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn is_connected(&self) -> bool {
        self.components.len() == 1
    }
}

fn connected_components(n: usize, channels: &[ResetChannel]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut x = x;
        while parent[x] != r {
            let next = parent[x];
            parent[x] = r;
            x = next;
        }
        r
    }
    for c in channels.iter().filter(|c| c.rate > 0.0) {
        let a = find(&mut parent, c.pair.0);
        let b = find(&mut parent, c.pair.1);
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut root_of = vec![usize::MAX; n];
    for level in 0..n {
        let r = find(&mut parent, level);
        if root_of[r] == usize::MAX {
            root_of[r] = comps.len();
            comps.push(Vec::new());
        }
        comps[root_of[r]].push(level);
    }
    comps
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationVector {
    probs: Vec<f64>,
}

impl PopulationVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidState(format!("negative population in {probs:?}")));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("populations sum to {s}")));
        }
        Ok(Self { probs })
    }

    /// Normalises non-negative weights; round-off negatives down to −1e-12
    /// of the total are clamped to zero.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::UnderdeterminedSteadyState(format!(
                "weights {weights:?} have no positive normalisation"
            )));
        }
        let probs = weights
            .into_iter()
            .map(|w| {
                let p = w / total;
                if p < 0.0 && p > -1e-12 {
                    0.0
                } else {
                    p
                }
            })
            .collect();
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `p[upper] / p[lower]`.
    pub fn ratio(&self, upper: usize, lower: usize) -> f64 {
        self.probs[upper] / self.probs[lower]
    }

    pub fn max_abs_diff(&self, other: &PopulationVector) -> f64 {
        self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Time derivative of the populations.
pub fn effrme_rhs(spec: &EffRmeSpec, probs: &PopulationVector) -> Result<Vec<f64>> {
    if probs.len() != spec.n {
        return Err(Error::DimensionMismatch { expected: spec.n, actual: probs.len() });
    }
    let p = probs.probs();
    let mut d = vec![0.0; spec.n];
    for c in &spec.channels {
        let (k, l) = c.pair;
        let flux = c.rate * (-c.pops.excited * p[k] + c.pops.ground * p[l]);
        d[k] += flux;
        d[l] -= flux;
    }
    Ok(d)
}

/// Rate matrix `M` with `dp/dt = M p`; every column sums to zero.
pub fn build_generator_matrix(spec: &EffRmeSpec) -> DMatrix<f64> {
    let n = spec.n;
    let mut m = DMatrix::zeros(n, n);
    for c in &spec.channels {
        let (k, l) = c.pair;
        let up = c.rate * c.pops.excited;
        let down = c.rate * c.pops.ground;
        m[(l, k)] += up;
        m[(k, k)] -= up;
        m[(k, l)] += down;
        m[(l, l)] -= down;
    }
    m
}

/// Generator with its first row replaced by the normalisation constraint.
pub fn normalised_generator(spec: &EffRmeSpec) -> DMatrix<f64> {
    let mut m = build_generator_matrix(spec);
    m.row_mut(0).fill(1.0);
    m
}

fn disconnected_error(spec: &EffRmeSpec) -> Error {
    let detached: Vec<String> = spec.components[1..].iter().map(|c| format!("{c:?}")).collect();
    Error::UnderdeterminedSteadyState(format!(
        "levels {} are not connected to level 0 by any channel",
        detached.join(", ")
    ))
}

/// Steady state from `M' ρ = (1, 0, …, 0)ᵀ`, where `M'` is the generator
/// with its first row replaced by ones. Solved by LU with partial pivoting.
pub fn steady_state_cramer(spec: &EffRmeSpec) -> Result<PopulationVector> {
    if !spec.is_connected() {
        return Err(disconnected_error(spec));
    }
    let m = normalised_generator(spec);
    let sv = m.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > RCOND_MIN * smax) {
        return Err(Error::UnderdeterminedSteadyState(format!(
            "generator is rank deficient (condition number {:e})",
            smax / smin
        )));
    }
    let mut rhs = DVector::zeros(spec.n);
    rhs[0] = 1.0;
    let sol = m.lu().solve(&rhs).ok_or_else(|| Error::UnderdeterminedSteadyState("singular generator".into()))?;
    PopulationVector::from_weights(sol.iter().copied().collect())
}

/// Determinant by Laplace expansion along the first row.
fn laplace_det(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    match n {
        0 => 1.0,
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => (0..n)
            .filter(|&j| m[(0, j)] != 0.0)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * m[(0, j)] * laplace_det(&m.clone().remove_row(0).remove_column(j))
            })
            .sum(),
    }
}

/// Steady state from the first-row cofactors `Δ₁ⱼ` of the row-replaced
/// generator, normalised by their sum (which equals `det M'`).
/// Factorial cost; limited to `n ≤ 6`.
pub fn steady_state_cofactor(spec: &EffRmeSpec) -> Result<PopulationVector> {
    if spec.n > 6 {
        return Err(Error::InvalidChannel(format!("cofactor expansion limited to n <= 6, got {}", spec.n)));
    }
    if !spec.is_connected() {
        return Err(disconnected_error(spec));
    }
    let m = normalised_generator(spec);
    let cof: Vec<f64> = (0..spec.n)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * laplace_det(&m.clone().remove_row(0).remove_column(j))
        })
        .collect();
    // all cofactors carry the sign of det M'
    let sign = cof.iter().sum::<f64>().signum();
    PopulationVector::from_weights(cof.into_iter().map(|c| sign * c).collect())
}

/// Closed form for a qutrit with channels A on (0,1), B on (0,2) and C on
/// (1,2): a rate-weighted mix of the three two-channel steady states.
pub fn steady_state_three(rates: [f64; 3], pops: [PopPair; 3]) -> Result<PopulationVector> {
    let [qa, qb, qc] = rates;
    let [a, b, c] = pops;
    if rates.iter().any(|&q| !(q >= 0.0)) {
        return Err(Error::InvalidChannel(format!("rates {rates:?} must be >= 0")));
    }
    let tau_ab = [a.ground * b.ground, a.excited * b.ground, a.ground * b.excited];
    let tau_bc = [b.ground * c.excited, b.excited * c.ground, b.excited * c.excited];
    let tau_ca = [c.ground * a.ground, c.ground * a.excited, c.excited * a.excited];
    let (wab, wbc, wca) = (qa * qb, qb * qc, qc * qa);
    if wab + wbc + wca == 0.0 {
        return Err(Error::UnderdeterminedSteadyState("fewer than two channels with nonzero rate".into()));
    }
    let weights = (0..3).map(|j| wab * tau_ab[j] + wbc * tau_bc[j] + wca * tau_ca[j]).collect();
    PopulationVector::from_weights(weights)
}

/// Level pairs of a four-level target in the order used by
/// [`steady_state_four`].
pub const FOUR_LEVEL_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// The sixteen three-edge spanning trees of the complete graph on four
/// levels, each listed as its edges.
const FOUR_LEVEL_TREES: [[(usize, usize); 3]; 16] = [
    [(0, 3), (1, 3), (2, 3)],
    [(0, 3), (1, 3), (0, 2)],
    [(0, 3), (1, 3), (1, 2)],
    [(0, 3), (2, 3), (0, 1)],
    [(0, 3), (2, 3), (1, 2)],
    [(1, 3), (2, 3), (0, 1)],
    [(1, 3), (2, 3), (0, 2)],
    [(0, 3), (0, 1), (0, 2)],
    [(0, 3), (0, 1), (1, 2)],
    [(0, 3), (0, 2), (1, 2)],
    [(1, 3), (0, 1), (0, 2)],
    [(1, 3), (0, 1), (1, 2)],
    [(1, 3), (0, 2), (1, 2)],
    [(2, 3), (0, 1), (0, 2)],
    [(2, 3), (0, 1), (1, 2)],
    [(2, 3), (0, 2), (1, 2)],
];

/// Unnormalised steady state of non-competing channels forming a spanning
/// tree: level `j` collects `τᵍ` from every edge whose lower end lies on
/// `j`'s side of the cut and `τᵉ` otherwise.
fn tree_state(n: usize, edges: &[(usize, usize)], pops: &dyn Fn((usize, usize)) -> PopPair) -> Vec<f64> {
    let mut w = vec![1.0; n];
    for (cut, &(k, l)) in edges.iter().enumerate() {
        // levels reachable from k without crossing this edge
        let mut side = vec![false; n];
        side[k] = true;
        let mut changed = true;
        while changed {
            changed = false;
            for (i, &(a, b)) in edges.iter().enumerate() {
                if i != cut && side[a] != side[b] {
                    side[a] = true;
                    side[b] = true;
                    changed = true;
                }
            }
        }
        let p = pops((k, l));
        for (j, wj) in w.iter_mut().enumerate() {
            *wj *= if side[j] { p.ground } else { p.excited };
        }
    }
    w
}

/// Closed form for a four-level target with one channel on each of the six
/// pairs (ordered as [`FOUR_LEVEL_PAIRS`]): the sum over the sixteen
/// spanning trees of the rate products times the tree states.
pub fn steady_state_four(rates: [f64; 6], pops: [PopPair; 6]) -> Result<PopulationVector> {
    if rates.iter().any(|&q| !(q >= 0.0)) {
        return Err(Error::InvalidChannel(format!("rates {rates:?} must be >= 0")));
    }
    let slot = |pair: (usize, usize)| FOUR_LEVEL_PAIRS.iter().position(|&p| p == pair).expect("pair");
    let lookup = |pair: (usize, usize)| pops[slot(pair)];
    let mut total = [0.0; 4];
    for tree in &FOUR_LEVEL_TREES {
        let weight: f64 = tree.iter().map(|&e| rates[slot(e)]).product();
        if weight == 0.0 {
            continue;
        }
        let state = tree_state(4, tree, &lookup);
        for (t, s) in total.iter_mut().zip(state) {
            *t += weight * s;
        }
    }
    if total.iter().sum::<f64>() == 0.0 {
        return Err(Error::UnderdeterminedSteadyState("no spanning set of active channels".into()));
    }
    PopulationVector::from_weights(total.to_vec())
}

/// Qubit with an environment channel and a virtual-qubit channel on the same
/// transition; the steady state is `(Q_en τ_en + q_vir τ_vir)/(Q_en + q_vir)`.
pub fn two_channel_qubit_steady(
    q_env: f64,
    tau_env: PopPair,
    q_vir: f64,
    tau_vir: PopPair,
) -> Result<PopulationVector> {
    if !(q_env + q_vir > 0.0) {
        return Err(Error::UnderdeterminedSteadyState("q_env + q_vir must be positive".into()));
    }
    let spec = EffRmeSpec::with_levels(
        2,
        vec![ResetChannel::new((0, 1), q_env, tau_env)?, ResetChannel::new((0, 1), q_vir, tau_vir)?],
    )?;
    steady_state_cramer(&spec)
}
