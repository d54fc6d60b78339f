use approx::assert_relative_eq;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use vqthermo::dynamics::{
    evolve, generator, steady_state_nullspace, CompositeModel, EvolveOptions, RateSemantics, Superoperator,
};
use vqthermo::effrme::{steady_state_cofactor, steady_state_cramer, EffRmeSpec, ResetChannel};
use vqthermo::laser::{inversion_ratio, laser_virtual_temperatures, LaserConfig, Scheme};
use vqthermo::operator::{
    partial_trace, tensor_product, thermal_populations, CMatrix, DensityMatrix, HilbertLayout, Operator, PopPair,
};
use vqthermo::ratefit::{fit_effective_rates, fit_residual, FitModel, FitProblem, Objective, Residual};
use vqthermo::virtual_qubit::{
    effective_rate_qvir, machine_norm, virtual_qubit_of, virtual_temperature, TwoQubitMachine,
};

fn random_state(dim: usize, seed: &[f64]) -> DensityMatrix {
    let a = CMatrix::from_fn(dim, dim, |r, c| {
        let i = 2 * (r * dim + c);
        Complex64::new(seed[i % seed.len()] - 0.5, seed[(i + 1) % seed.len()] - 0.5)
    });
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    DensityMatrix::new(Operator::single(rho / tr).unwrap()).unwrap()
}

fn product_state(parts: &[DensityMatrix]) -> DensityMatrix {
    let ops: Vec<Operator> = parts.iter().map(|p| p.operator().clone()).collect();
    DensityMatrix::new(tensor_product(&ops).unwrap()).unwrap()
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn qutrit_model(semantics: RateSemantics) -> CompositeModel {
    let m = |omega1, gap, g, pair| TwoQubitMachine::for_transition(omega1, gap, 3.1, 1.2, 70.0, 50.0, g, pair).unwrap();
    CompositeModel::new(
        vec![0.0, 2.0, 3.0],
        vec![m(2.5, 2.0, 1.2, (0, 1)), m(4.5, 3.0, 1.5, (0, 2)), m(1.3, 1.0, 1.8, (1, 2))],
        None,
        semantics,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_dims_multiply(dims in prop::collection::vec(2usize..4, 1..5)) {
        let ops: Vec<Operator> = dims.iter().map(|&d| Operator::identity(d).unwrap()).collect();
        let t = tensor_product(&ops).unwrap();
        prop_assert_eq!(t.dim(), dims.iter().product::<usize>());
        prop_assert_eq!(t.layout().dims(), &dims[..]);
    }

    #[test]
    fn partial_trace_recovers_factors(
        da in 2usize..4,
        db in 2usize..4,
        seed in prop::collection::vec(0.0f64..1.0, 32),
    ) {
        let a = random_state(da, &seed);
        let b = random_state(db, &seed[7..]);
        let ab = product_state(&[a.clone(), b.clone()]);
        let ra = partial_trace(&ab, &[0]).unwrap();
        let rb = partial_trace(&ab, &[1]).unwrap();
        prop_assert!(max_abs(&(ra.matrix() - a.matrix())) < 1e-12);
        prop_assert!(max_abs(&(rb.matrix() - b.matrix())) < 1e-12);
    }

    #[test]
    fn partial_trace_keeps_state_valid(seed in prop::collection::vec(0.0f64..1.0, 200), keep in 0usize..3) {
        let rho = random_state(12, &seed);
        let rho = DensityMatrix::new(
            Operator::new(rho.matrix().clone(), HilbertLayout::new(vec![2, 3, 2], 0).unwrap()).unwrap(),
        )
        .unwrap();
        let red = partial_trace(&rho, &[keep]).unwrap();
        prop_assert!((red.operator().trace().re - 1.0).abs() < 1e-12);
        prop_assert!(red.operator().hermiticity_defect() < 1e-12);
        prop_assert!(red.min_eigenvalue() >= -1e-9);
    }

    #[test]
    fn thermal_pair_sums_to_one(gap in 1e-3f64..50.0, temp in 1e-2f64..1e3) {
        let p = thermal_populations(gap, temp).unwrap();
        prop_assert_eq!(p.ground + p.excited, 1.0);
        prop_assert!(p.excited < p.ground);
    }

    #[test]
    fn virtual_temperature_sign(
        omega2 in 0.1f64..5.0,
        extra in 0.1f64..5.0,
        t1 in 0.1f64..20.0,
        t2 in 0.1f64..20.0,
    ) {
        let omega1 = omega2 + extra;
        let m = TwoQubitMachine::new(omega1, omega2, t1, t2, 1.0, 1.0, 1.0, (0, 1)).unwrap();
        prop_assume!((t1 * omega2 - t2 * omega1).abs() > 1e-9);
        let tv = virtual_temperature(&m).unwrap();
        prop_assert_eq!(tv < 0.0, t1 * omega2 > t2 * omega1);
    }

    #[test]
    fn virtual_qubit_is_boltzmann(
        omega2 in 0.1f64..5.0,
        extra in 0.1f64..5.0,
        t1 in 0.2f64..20.0,
        t2 in 0.2f64..20.0,
    ) {
        let m = TwoQubitMachine::new(omega2 + extra, omega2, t1, t2, 1.0, 1.0, 1.0, (0, 1)).unwrap();
        let vq = virtual_qubit_of(&m).unwrap();
        prop_assume!(vq.vtemp.is_finite() && vq.vtemp != 0.0);
        let boltzmann = (-m.gap() / vq.vtemp).exp();
        prop_assert!((vq.pop_excited / vq.pop_ground / boltzmann - 1.0).abs() < 1e-10);
    }

    #[test]
    fn effective_rate_is_quadratic(g in 1e-3f64..10.0, r1 in 0.1f64..100.0, r2 in 0.1f64..100.0) {
        let m = TwoQubitMachine::new(2.5, 0.5, 3.1, 1.2, r1, r2, g, (0, 1)).unwrap();
        let m2 = TwoQubitMachine { coupling: 2.0 * g, ..m };
        let ratio = effective_rate_qvir(&m2).unwrap() / effective_rate_qvir(&m).unwrap();
        prop_assert!((ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn norm_symmetry(
        omega2 in 0.1f64..5.0,
        extra in 0.1f64..5.0,
        t1 in 0.2f64..20.0,
        t2 in 0.2f64..20.0,
    ) {
        let omega1 = omega2 + extra;
        let m = TwoQubitMachine::new(omega1, omega2, t1, t2, 1.0, 1.0, 1.0, (0, 1)).unwrap();
        // the swapped machine has a negative gap, so only the raw quantities are compared
        let a = thermal_populations(omega1, t1).unwrap();
        let b = thermal_populations(omega2, t2).unwrap();
        let vq = virtual_qubit_of(&m).unwrap();
        let norm = a.ground * b.excited + a.excited * b.ground;
        prop_assert!((machine_norm(&m).unwrap() - norm).abs() < 1e-15);
        prop_assert!((vq.pop_ground - a.ground * b.excited / norm).abs() < 1e-14);
        prop_assert!((vq.pop_excited - a.excited * b.ground / norm).abs() < 1e-14);
    }

    #[test]
    fn cofactor_matches_linear_solve(
        n in 2usize..6,
        rates in prop::collection::vec(1e-2f64..1e2, 10),
        grounds in prop::collection::vec(0.02f64..0.98, 10),
    ) {
        let mut channels = Vec::new();
        let mut i = 0;
        for k in 0..n {
            for l in k + 1..n {
                channels.push(ResetChannel::new((k, l), rates[i], PopPair::from_ground(grounds[i])).unwrap());
                i += 1;
            }
        }
        let spec = EffRmeSpec::with_levels(n, channels).unwrap();
        let a = steady_state_cramer(&spec).unwrap();
        let b = steady_state_cofactor(&spec).unwrap();
        for (x, y) in a.probs().iter().zip(b.probs()) {
            prop_assert!((x - y).abs() <= 1e-10 * y.abs().max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn laser_cold_virtual_temperature_below_bath(t_cold in 0.3f64..3.0, excess in 1e-3f64..30.0) {
        let cfg = LaserConfig { t_cold, t_hot: t_cold + excess, ..LaserConfig::default() };
        let (_, tvc) = laser_virtual_temperatures(&cfg).unwrap();
        prop_assert!(tvc < t_cold);
    }
}

#[test]
fn qubit_relaxes_exponentially() {
    let pops = PopPair::from_excited(0.3);
    let q = 0.7;
    let spec = EffRmeSpec::with_levels(2, vec![ResetChannel::new((0, 1), q, pops).unwrap()]).unwrap();
    let gen = Superoperator::from_effrme(&spec).unwrap();
    let rho0 = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
    for t in [0.1, 1.0, 3.0, 10.0] {
        let rho = evolve(&gen, &rho0, t, &EvolveOptions::default()).unwrap();
        assert_relative_eq!(rho.populations()[1], 0.3 * (1.0 - (-q * t).exp()), max_relative = 1e-8);
    }
}

#[test]
fn virtual_temperature_theorem_at_large_rates() {
    let temp_of = |q1: f64, q2: f64| {
        let m = TwoQubitMachine::for_transition(2.5, 2.0, 3.1, 1.2, q1, q2, 1.2, (0, 1)).unwrap();
        let model = CompositeModel::new(vec![0.0, 2.0], vec![m], None, RateSemantics::Reset).unwrap();
        let rho = steady_state_nullspace(&generator(&model).unwrap()).unwrap();
        let p = partial_trace(&rho, &[0]).unwrap().populations();
        2.0 / (p[0] / p[1]).ln()
    };
    let base = temp_of(50.0, 50.0);
    for (q1, q2) in [(50.0, 500.0), (500.0, 50.0), (500.0, 500.0)] {
        assert!((temp_of(q1, q2) / base - 1.0).abs() < 1e-3);
    }
}

fn effective_problem(truth: [f64; 3]) -> FitProblem {
    let pops = [0.15, 0.3, 0.4].map(PopPair::from_excited);
    let channels = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .zip(truth)
        .zip(pops)
        .map(|((&p, q), t)| ResetChannel::new(p, q, t).unwrap())
        .collect();
    FitProblem::new(FitModel::Effective(EffRmeSpec::with_levels(3, channels).unwrap()))
}

#[test]
fn self_consistent_fit_recovers_ratios() {
    for truth in [[0.3, 1.0, 2.0], [5.0, 0.2, 1.0], [1.0, 1.0, 1.0]] {
        let fit = fit_effective_rates(&effective_problem(truth)).unwrap();
        assert_relative_eq!(fit.ratio_ab(), truth[0] / truth[1], max_relative = 1e-2);
        assert_relative_eq!(fit.ratio_bc(), truth[1] / truth[2], max_relative = 1e-2);
    }
}

#[test]
fn response_map_matches_direct_evolution() {
    let model = FitModel::Composite(qutrit_model(RateSemantics::Gkls));
    let opts = EvolveOptions::default();
    let residual = Residual::Evolution { horizon: 4.0 };
    let objective = Objective::build(&model, residual, &opts).unwrap();
    for rates in [[0.01, 0.02, 0.015], [0.3, 0.05, 0.2]] {
        let direct = fit_residual(&model, rates, residual, &opts).unwrap();
        assert_relative_eq!(objective.evaluate(rates).unwrap(), direct, max_relative = 1e-6);
    }
}

#[test]
fn optimum_beats_perturbations_and_grid() {
    let mut problem = FitProblem::new(FitModel::Composite(qutrit_model(RateSemantics::Reset)));
    problem.residual = Residual::SteadyState;
    let objective = Objective::build(&problem.model, problem.residual, &problem.evolve).unwrap();
    let fit = fit_effective_rates(&problem).unwrap();
    for i in 0..3 {
        let mut r = fit.rates;
        r[i] *= 2.0;
        assert!(objective.evaluate(r).unwrap() > fit.residual);
    }
    let steps = [-0.4, -0.2, 0.0, 0.2, 0.4];
    for a in steps {
        for b in steps {
            for c in steps {
                let r = [fit.rates[0] * f64::exp(a), fit.rates[1] * f64::exp(b), fit.rates[2] * f64::exp(c)];
                assert!(objective.evaluate(r).unwrap() >= fit.residual - 1e-12);
            }
        }
    }
}

#[test]
fn halving_tolerance_never_increases_residual() {
    let mut problem = FitProblem::new(FitModel::Composite(qutrit_model(RateSemantics::Reset)));
    problem.residual = Residual::SteadyState;
    problem.tolerance = 1e-2;
    let mut last = f64::INFINITY;
    for _ in 0..8 {
        let fit = fit_effective_rates(&problem).unwrap();
        assert!(fit.residual <= last);
        last = fit.residual;
        problem.initial_guess = Some(fit.rates);
        problem.tolerance /= 2.0;
    }
}

#[test]
fn fit_ignores_machine_order() {
    let model = qutrit_model(RateSemantics::Reset);
    let mut reversed = model.clone();
    reversed.machines.reverse();
    let fit = |m: CompositeModel| {
        let mut p = FitProblem::new(FitModel::Composite(m));
        p.residual = Residual::SteadyState;
        fit_effective_rates(&p).unwrap()
    };
    let a = fit(model);
    let b = fit(reversed);
    assert_relative_eq!(a.ratio_ab(), b.ratio_ab(), max_relative = 1e-5);
    assert_relative_eq!(a.ratio_bc(), b.ratio_bc(), max_relative = 1e-5);
}

#[test]
fn lossless_virtual_inversion_grows_past_threshold() {
    let base = LaserConfig { lossless: true, ..LaserConfig::default() };
    let threshold = base.inversion_threshold().unwrap();
    let grid: Vec<f64> = (0..389).map(|i| 1.2 + 0.1 * i as f64).filter(|&t| t > threshold).collect();
    let ratios: Vec<f64> =
        grid.iter().map(|&t_hot| inversion_ratio(&LaserConfig { t_hot, ..base }, Scheme::Virtual).unwrap()).collect();
    assert!(ratios.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn vanishing_second_gap_recovers_typical_laser() {
    for t_hot in [2.0, 5.0, 20.0] {
        let cfg =
            LaserConfig { lossless: true, t_hot, omega_b1: 3.0 + 1e-6, omega_c1: 1.0 + 1e-6, ..LaserConfig::default() };
        let (tvb, tvc) = laser_virtual_temperatures(&cfg).unwrap();
        assert_relative_eq!(tvb, t_hot, max_relative = 1e-5);
        assert_relative_eq!(tvc, cfg.t_cold, max_relative = 1e-5);
        let virt = inversion_ratio(&cfg, Scheme::Virtual).unwrap();
        let typical = inversion_ratio(&cfg, Scheme::Typical).unwrap();
        assert_relative_eq!(virt, typical, max_relative = 1e-5);
    }
}

#[test]
fn generator_columns_sum_to_zero() {
    let spec = EffRmeSpec::with_levels(
        4,
        vec![
            ResetChannel::new((0, 1), 1.3, PopPair::from_excited(0.2)).unwrap(),
            ResetChannel::new((1, 3), 0.4, PopPair::from_excited(0.45)).unwrap(),
            ResetChannel::new((0, 2), 2.0, PopPair::from_excited(0.1)).unwrap(),
        ],
    )
    .unwrap();
    let m: DMatrix<f64> = vqthermo::effrme::build_generator_matrix(&spec);
    for c in 0..4 {
        assert!(m.column(c).sum().abs() < 1e-15);
    }
}
