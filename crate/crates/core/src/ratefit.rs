//! Fitting effective reset rates `(q_A, q_B, q_C)` to a composite qutrit model.
//!
//! Channels are indexed A = (0,1), B = (0,2), C = (1,2). The candidate
//! target state is the three-channel effRME steady state for the trial
//! rates; the residual measures how far the composite dynamics move it.
//!
//! That candidate depends only on the rate ratios, so the residual is
//! blind to a common scale. The optimiser works on the two log-ratios
//! `ln(q_A/q_B)` and `ln(q_C/q_B)` and reports rates whose geometric mean
//! equals that of the initial guess.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve, generator, steady_state_nullspace, CompositeModel, EvolveOptions, Superoperator};
use crate::effrme::{steady_state_three, EffRmeSpec};
use crate::error::{Error, Result};
use crate::operator::{partial_trace, CMatrix, PopPair};
use crate::virtual_qubit::{effective_rate_qvir, machine_norm, virtual_qubit_of};

pub const CHANNEL_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// The model the effective rates are fitted to.
#[derive(Debug, Clone, PartialEq)]
pub enum FitModel {
    Composite(CompositeModel),
    /// An effective reset model on the bare qutrit; its own rates are the exact answer.
    Effective(EffRmeSpec),
}

impl FitModel {
    fn check(&self) -> Result<()> {
        match self {
            FitModel::Composite(m) => {
                if m.n() != 3 {
                    return Err(Error::InvalidFit(format!("target must be a qutrit, got {} levels", m.n())));
                }
                self.channel_indices()?;
                m.validate()
            }
            FitModel::Effective(spec) => {
                if spec.n() != 3 {
                    return Err(Error::InvalidFit(format!("target must be a qutrit, got {} levels", spec.n())));
                }
                self.channel_indices().map(|_| ())
            }
        }
    }

    /// Index of the machine (or channel) serving each of A, B, C.
    fn channel_indices(&self) -> Result<[usize; 3]> {
        let pairs: Vec<(usize, usize)> = match self {
            FitModel::Composite(m) => m.machines.iter().map(|x| x.target_pair).collect(),
            FitModel::Effective(s) => s.channels().iter().map(|c| c.pair).collect(),
        };
        let mut out = [0; 3];
        for (slot, pair) in CHANNEL_PAIRS.iter().enumerate() {
            let hits: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i] == *pair).collect();
            if hits.len() != 1 {
                return Err(Error::InvalidFit(format!(
                    "need exactly one machine on pair {pair:?}, found {}",
                    hits.len()
                )));
            }
            out[slot] = hits[0];
        }
        Ok(out)
    }

    /// Reset populations of the A, B, C channels.
    pub fn channel_populations(&self) -> Result<[PopPair; 3]> {
        let idx = self.channel_indices()?;
        let mut out = [PopPair { ground: 1.0, excited: 0.0 }; 3];
        for (slot, &i) in idx.iter().enumerate() {
            out[slot] = match self {
                FitModel::Composite(m) => virtual_qubit_of(&m.machines[i])?.populations(),
                FitModel::Effective(s) => s.channels()[i].pops,
            };
        }
        Ok(out)
    }

    /// `2g²n/(rate₁ + rate₂)` per machine; unit rates for an effective model.
    pub fn seed_rates(&self) -> Result<[f64; 3]> {
        let idx = self.channel_indices()?;
        match self {
            FitModel::Composite(m) => {
                let mut out = [0.0; 3];
                for (slot, &i) in idx.iter().enumerate() {
                    out[slot] = effective_rate_qvir(&m.machines[i])?;
                }
                Ok(out)
            }
            FitModel::Effective(_) => Ok([1.0; 3]),
        }
    }

    /// Virtual-qubit norms of the A, B, C machines.
    pub fn norms(&self) -> Result<[f64; 3]> {
        let idx = self.channel_indices()?;
        match self {
            FitModel::Composite(m) => {
                let mut out = [0.0; 3];
                for (slot, &i) in idx.iter().enumerate() {
                    out[slot] = machine_norm(&m.machines[i])?;
                }
                Ok(out)
            }
            FitModel::Effective(_) => Err(Error::InvalidFit("effective models have no machine norms".into())),
        }
    }

    fn generator(&self) -> Result<Superoperator> {
        match self {
            FitModel::Composite(m) => generator(m),
            FitModel::Effective(s) => Superoperator::from_effrme(s),
        }
    }

    /// Reduced target state after evolving `target ⊗ τ_machines` (or `target` alone).
    fn propagate_target(
        &self,
        gen: &Superoperator,
        target: &CMatrix,
        horizon: f64,
        opts: &EvolveOptions,
    ) -> Result<CMatrix> {
        match self {
            FitModel::Composite(m) => {
                let rho0 = m.product_with_machines(target)?;
                let rho = evolve(gen, &rho0, horizon, opts)?;
                Ok(partial_trace(&rho, &[0])?.matrix().clone())
            }
            FitModel::Effective(_) => {
                let rho0 = crate::operator::DensityMatrix::new(crate::operator::Operator::new(
                    target.clone(),
                    gen.layout().clone(),
                )?)?;
                Ok(evolve(gen, &rho0, horizon, opts)?.matrix().clone())
            }
        }
    }

    fn steady_target(&self, gen: &Superoperator) -> Result<CMatrix> {
        let rho = steady_state_nullspace(gen)?;
        match self {
            FitModel::Composite(_) => Ok(partial_trace(&rho, &[0])?.matrix().clone()),
            FitModel::Effective(_) => Ok(rho.matrix().clone()),
        }
    }
}

/// How far the composite dynamics move a candidate state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Residual {
    /// `‖ρ_target(t) − ρ_target(0)‖_F` after evolving for `horizon`.
    Evolution { horizon: f64 },
    /// `‖ρ_target(∞) − ρ_target(0)‖_F` from the generator's null space.
    SteadyState,
}

impl Default for Residual {
    fn default() -> Self {
        Residual::Evolution { horizon: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitProblem {
    pub model: FitModel,
    pub residual: Residual,
    pub initial_guess: Option<[f64; 3]>,
    /// Simplex diameter in log-rate space at which the search stops.
    pub tolerance: f64,
    pub max_evaluations: usize,
    pub evolve: EvolveOptions,
}

impl FitProblem {
    pub fn new(model: FitModel) -> Self {
        Self {
            model,
            residual: Residual::default(),
            initial_guess: None,
            tolerance: 1e-6,
            max_evaluations: 2000,
            evolve: EvolveOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.check()?;
        if let Residual::Evolution { horizon } = self.residual {
            if !(horizon > 0.0) || !horizon.is_finite() {
                return Err(Error::InvalidFit(format!("horizon must be positive and finite, got {horizon}")));
            }
        }
        if let Some(g) = self.initial_guess {
            if g.iter().any(|q| !(*q > 0.0) || !q.is_finite()) {
                return Err(Error::InvalidFit(format!("initial guess entries must be positive, got {g:?}")));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidFit("tolerance must be positive".into()));
        }
        if self.max_evaluations == 0 {
            return Err(Error::InvalidFit("evaluation budget must be positive".into()));
        }
        Ok(())
    }

    fn guess(&self) -> Result<[f64; 3]> {
        match self.initial_guess {
            Some(g) => Ok(g),
            None => self.model.seed_rates(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub rates: [f64; 3],
    pub residual: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn ratio_ab(&self) -> f64 {
        self.rates[0] / self.rates[1]
    }

    pub fn ratio_bc(&self) -> f64 {
        self.rates[1] / self.rates[2]
    }

    pub fn ratio_ac(&self) -> f64 {
        self.rates[0] / self.rates[2]
    }
}

fn candidate(rates: [f64; 3], pops: [PopPair; 3]) -> Result<CMatrix> {
    let p = steady_state_three(rates, pops)?;
    let probs = p.probs();
    Ok(CMatrix::from_fn(3, 3, |r, c| num_complex::Complex64::new(if r == c { probs[r] } else { 0.0 }, 0.0)))
}

fn check_rates(rates: [f64; 3]) -> Result<()> {
    if rates.iter().any(|q| !(*q > 0.0) || !q.is_finite()) {
        return Err(Error::InvalidFit(format!("rates must be positive, got {rates:?}")));
    }
    Ok(())
}

/// Frobenius distance the model moves the candidate state for `rates`,
/// computed by a direct evolution (or steady-state solve).
pub fn fit_residual(model: &FitModel, rates: [f64; 3], residual: Residual, opts: &EvolveOptions) -> Result<f64> {
    model.check()?;
    check_rates(rates)?;
    let target = candidate(rates, model.channel_populations()?)?;
    let gen = model.generator()?;
    let moved = match residual {
        Residual::Evolution { horizon } => {
            if horizon == 0.0 {
                return Ok(0.0);
            }
            model.propagate_target(&gen, &target, horizon, opts)?
        }
        Residual::SteadyState => model.steady_target(&gen)?,
    };
    Ok((moved - target).norm())
}

/// Residual as a function of the candidate populations alone.
///
/// The map from initial target populations to final target state is linear,
/// so three evolutions (one per basis population) cover every candidate.
#[derive(Debug, Clone)]
pub struct Objective {
    pops: [PopPair; 3],
    kind: ObjectiveKind,
}

#[derive(Debug, Clone)]
enum ObjectiveKind {
    Response([CMatrix; 3]),
    Fixed(CMatrix),
}

impl Objective {
    pub fn build(model: &FitModel, residual: Residual, opts: &EvolveOptions) -> Result<Self> {
        model.check()?;
        let pops = model.channel_populations()?;
        let gen = model.generator()?;
        let kind = match residual {
            Residual::Evolution { horizon } => {
                let mut maps: [CMatrix; 3] = std::array::from_fn(|_| CMatrix::zeros(3, 3));
                for (k, slot) in maps.iter_mut().enumerate() {
                    let basis = CMatrix::from_fn(3, 3, |r, c| {
                        num_complex::Complex64::new(if r == k && c == k { 1.0 } else { 0.0 }, 0.0)
                    });
                    *slot = if horizon == 0.0 { basis } else { model.propagate_target(&gen, &basis, horizon, opts)? };
                }
                ObjectiveKind::Response(maps)
            }
            Residual::SteadyState => ObjectiveKind::Fixed(model.steady_target(&gen)?),
        };
        Ok(Self { pops, kind })
    }

    pub fn evaluate(&self, rates: [f64; 3]) -> Result<f64> {
        check_rates(rates)?;
        let target = candidate(rates, self.pops)?;
        let moved = match &self.kind {
            ObjectiveKind::Response(maps) => {
                let mut out = CMatrix::zeros(3, 3);
                for (k, a) in maps.iter().enumerate() {
                    out += a * num_complex::Complex64::new(target[(k, k)].re, 0.0);
                }
                out
            }
            ObjectiveKind::Fixed(ss) => ss.clone(),
        };
        Ok((moved - target).norm())
    }
}

struct NelderMeadOutcome {
    x: Vec<f64>,
    fx: f64,
    evaluations: usize,
    converged: bool,
}

/// Minimises `f` from an axis-aligned simplex of edge `step` around `x0`.
fn nelder_mead(f: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], step: f64, tol: f64, budget: usize) -> NelderMeadOutcome {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evaluations = n + 1;
    let diameter = |s: &[Vec<f64>]| {
        s[1..].iter().flat_map(|v| v.iter().zip(&s[0]).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max)
    };
    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        if diameter(&simplex) < tol {
            converged = true;
            break;
        }
        if evaluations >= budget {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (w - c)).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        evaluations += 1;
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            evaluations += 1;
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(-0.5);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = f(&xc);
            (xc, fc)
        };
        evaluations += 1;
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let v: Vec<f64> = simplex[0].iter().zip(&simplex[i]).map(|(b, x)| b + 0.5 * (x - b)).collect();
            values[i] = f(&v);
            simplex[i] = v;
            evaluations += 1;
        }
    }
    NelderMeadOutcome { x: simplex[0].clone(), fx: values[0], evaluations, converged }
}

const INITIAL_STEP: f64 = 0.5;
const RESTART_STEP: f64 = 0.05;

/// Rates `(e^{x₀}, 1, e^{x₁})` rescaled to geometric mean `gm`.
fn rates_from_ratios(x: &[f64], gm: f64) -> [f64; 3] {
    let shift = (x[0] + x[1]) / 3.0;
    [gm * (x[0] - shift).exp(), gm * (-shift).exp(), gm * (x[1] - shift).exp()]
}

fn ratios_of(rates: [f64; 3]) -> Vec<f64> {
    vec![(rates[0] / rates[1]).ln(), (rates[2] / rates[1]).ln()]
}

fn geometric_mean(rates: [f64; 3]) -> f64 {
    (rates.iter().map(|q| q.ln()).sum::<f64>() / 3.0).exp()
}

/// Fits with a precomputed objective, starting from `start` rates.
pub fn fit_with_objective(objective: &Objective, problem: &FitProblem, start: [f64; 3]) -> Result<FitResult> {
    check_rates(start)?;
    let gm = geometric_mean(start);
    let mut failure: Option<Error> = None;
    let mut f = |x: &[f64]| match objective.evaluate(rates_from_ratios(x, gm)) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            f64::INFINITY
        }
    };
    let budget = problem.max_evaluations;
    let first = nelder_mead(&mut f, &ratios_of(start), INITIAL_STEP, problem.tolerance, budget);
    let mut best = first;
    if best.evaluations < budget {
        let second = nelder_mead(&mut f, &best.x, RESTART_STEP, problem.tolerance, budget - best.evaluations);
        let evaluations = best.evaluations + second.evaluations;
        if second.fx <= best.fx {
            best = NelderMeadOutcome { evaluations, ..second };
        } else {
            best = NelderMeadOutcome { evaluations, converged: second.converged && best.converged, ..best };
        }
    }
    if !best.fx.is_finite() {
        return Err(failure.unwrap_or_else(|| Error::InvalidFit("residual is not finite".into())));
    }
    Ok(FitResult {
        rates: rates_from_ratios(&best.x, gm),
        residual: best.fx,
        evaluations: best.evaluations,
        converged: best.converged,
    })
}

pub fn fit_effective_rates(problem: &FitProblem) -> Result<FitResult> {
    problem.validate()?;
    let objective = Objective::build(&problem.model, problem.residual, &problem.evolve)?;
    fit_with_objective(&objective, problem, problem.guess()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "g_A")]
    CouplingA,
    #[serde(rename = "g_B")]
    CouplingB,
    #[serde(rename = "g_C")]
    CouplingC,
    #[serde(rename = "T_h")]
    HotTemperature,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::CouplingA => "g_A",
            SweepVariable::CouplingB => "g_B",
            SweepVariable::CouplingC => "g_C",
            SweepVariable::HotTemperature => "T_h",
        }
    }

    /// Copy of `model` with this variable set to `value`; `T_h` is the
    /// first-qubit bath temperature of every machine.
    pub fn apply(self, model: &CompositeModel, value: f64) -> Result<CompositeModel> {
        let mut out = model.clone();
        let pair = match self {
            SweepVariable::CouplingA => Some(CHANNEL_PAIRS[0]),
            SweepVariable::CouplingB => Some(CHANNEL_PAIRS[1]),
            SweepVariable::CouplingC => Some(CHANNEL_PAIRS[2]),
            SweepVariable::HotTemperature => None,
        };
        match pair {
            Some(pair) => {
                let mut hit = false;
                for m in out.machines.iter_mut().filter(|m| m.target_pair == pair) {
                    m.coupling = value;
                    hit = true;
                }
                if !hit {
                    return Err(Error::InvalidFit(format!("no machine on pair {pair:?}")));
                }
            }
            None => {
                for m in &mut out.machines {
                    m.temp1 = value;
                }
            }
        }
        out.validate()?;
        Ok(out)
    }
}

impl std::str::FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g_A" => Ok(SweepVariable::CouplingA),
            "g_B" => Ok(SweepVariable::CouplingB),
            "g_C" => Ok(SweepVariable::CouplingC),
            "T_h" => Ok(SweepVariable::HotTemperature),
            other => Err(Error::InvalidFit(format!("unknown sweep variable {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub fit: std::result::Result<FitResult, String>,
    /// Virtual-qubit norms `(n_A, n_B, n_C)` at this point.
    pub norms: Option<[f64; 3]>,
}

/// One fit per value, each warm-started from the previous optimum.
///
/// Objectives (the expensive evolutions) are built in parallel on up to
/// `jobs` threads; the fits themselves are sequential because of the warm start.
pub fn sweep_fit(
    template: &FitProblem,
    variable: SweepVariable,
    values: &[f64],
    jobs: usize,
) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::InvalidFit("sweep needs at least one value".into()));
    }
    let base = match &template.model {
        FitModel::Composite(m) => m,
        FitModel::Effective(_) => return Err(Error::InvalidFit("only composite models can be swept".into())),
    };
    template.validate()?;
    let build = |value: &f64| -> std::result::Result<(FitProblem, Objective), String> {
        let model = variable.apply(base, *value).map_err(|e| e.to_string())?;
        let problem = FitProblem { model: FitModel::Composite(model), ..template.clone() };
        let objective =
            Objective::build(&problem.model, problem.residual, &problem.evolve).map_err(|e| e.to_string())?;
        Ok((problem, objective))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidFit(format!("thread pool: {e}")))?;
    let prepared: Vec<_> = pool.install(|| values.par_iter().map(build).collect());

    let mut previous: Option<[f64; 3]> = None;
    let mut out = Vec::with_capacity(values.len());
    for (&value, prep) in values.iter().zip(prepared) {
        let point = match prep {
            Err(e) => SweepPoint { value, fit: Err(e), norms: None },
            Ok((problem, objective)) => {
                let norms = problem.model.norms().ok();
                let fit = (|| {
                    let seed = problem.guess()?;
                    let start = match previous {
                        // keep the previous ratios, take the scale from this point's seed
                        Some(prev) => rates_from_ratios(&ratios_of(prev), geometric_mean(seed)),
                        None => seed,
                    };
                    fit_with_objective(&objective, &problem, start)
                })();
                if let Ok(r) = &fit {
                    previous = Some(r.rates);
                }
                log::info!("{} = {value}: {:?}", variable.name(), fit);
                SweepPoint { value, fit: fit.map_err(|e| e.to_string()), norms }
            }
        };
        out.push(point);
    }
    Ok(out)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effrme::ResetChannel;
    use approx::assert_abs_diff_eq;

    fn spec(rates: [f64; 3]) -> EffRmeSpec {
        let chans = vec![
            ResetChannel::thermal((0, 1), rates[0], 2.0, 5.13).unwrap(),
            ResetChannel::thermal((0, 2), rates[1], 3.0, -8.57).unwrap(),
            ResetChannel::thermal((1, 2), rates[2], 1.0, 0.98).unwrap(),
        ];
        EffRmeSpec::with_levels(3, chans).unwrap()
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let mut f = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2);
        let out = nelder_mead(&mut f, &[0.0, 0.0], 0.5, 1e-9, 2000);
        assert!(out.converged);
        assert_abs_diff_eq!(out.x[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(out.x[1], -2.0, epsilon = 1e-8);
    }

    #[test]
    fn ratio_parametrisation_keeps_geometric_mean() {
        let r = rates_from_ratios(&[0.3, -1.2], 0.7);
        assert_abs_diff_eq!(geometric_mean(r), 0.7, epsilon = 1e-15);
        let back = ratios_of(r);
        assert_abs_diff_eq!(back[0], 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(back[1], -1.2, epsilon = 1e-14);
    }

    #[test]
    fn exact_rates_are_a_fixed_point() {
        let q = [0.3, 1.1, 0.7];
        let model = FitModel::Effective(spec(q));
        let r = fit_residual(&model, q, Residual::Evolution { horizon: 10.0 }, &EvolveOptions::default()).unwrap();
        assert!(r < 1e-8);
    }

    #[test]
    fn zero_horizon_gives_zero() {
        let model = FitModel::Effective(spec([0.3, 1.1, 0.7]));
        let r = fit_residual(&model, [5.0, 0.1, 2.0], Residual::Evolution { horizon: 0.0 }, &EvolveOptions::default())
            .unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn response_map_matches_direct_residual() {
        let model = FitModel::Effective(spec([0.3, 1.1, 0.7]));
        let kind = Residual::Evolution { horizon: 4.0 };
        let opts = EvolveOptions::default();
        let obj = Objective::build(&model, kind, &opts).unwrap();
        for rates in [[1.0, 1.0, 1.0], [0.2, 3.0, 0.9], [5.0, 0.1, 0.4]] {
            let direct = fit_residual(&model, rates, kind, &opts).unwrap();
            assert_abs_diff_eq!(obj.evaluate(rates).unwrap(), direct, epsilon = 1e-9);
        }
    }

    #[test]
    fn recovers_effective_rates() {
        let q = [0.3, 1.1, 0.7];
        let mut problem = FitProblem::new(FitModel::Effective(spec(q)));
        problem.initial_guess = Some([1.0, 1.0, 1.0]);
        let fit = fit_effective_rates(&problem).unwrap();
        assert!(fit.converged);
        assert!((fit.ratio_ab() / (q[0] / q[1]) - 1.0).abs() < 1e-3);
        assert!((fit.ratio_bc() / (q[1] / q[2]) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn invalid_problems() {
        let mut problem = FitProblem::new(FitModel::Effective(spec([0.3, 1.1, 0.7])));
        problem.residual = Residual::Evolution { horizon: -1.0 };
        assert!(problem.validate().is_err());
        problem.residual = Residual::default();
        problem.initial_guess = Some([1.0, 0.0, 1.0]);
        assert!(problem.validate().is_err());
        let two = EffRmeSpec::with_levels(3, vec![ResetChannel::thermal((0, 1), 1.0, 1.0, 1.0).unwrap()]).unwrap();
        assert!(FitProblem::new(FitModel::Effective(two)).validate().is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let x = [0.5, 1.0, 2.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-2.0)).collect();
        assert_abs_diff_eq!(log_log_slope(&x, &y), -2.0, epsilon = 1e-12);
    }
}
