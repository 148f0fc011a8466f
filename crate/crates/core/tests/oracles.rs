//! Spot checks of the library against independent reference computations.

mod common;

use parisi_core::initial::{validate_pair, PiecewiseLinearApprox};
use parisi_core::params::{convex_combination, l1_distance, refine_pair};
use parisi_core::pde::{constant_m_partials, constant_m_solution};
use parisi_core::probe::{
    conjecture_scan, covariance_check, constant_m_curve, odd_comparison_check, one_sided_scan, CovarianceVariant, Weight,
};
use parisi_core::{
    HermiteRule, InitialCondition, PairClass, ParisiProblem, Solver, SolverConfig, StepParam,
};

fn rule(order: usize) -> HermiteRule {
    HermiteRule::new(order).unwrap()
}

fn step(breakpoints: &[f64], values: &[f64]) -> StepParam {
    StepParam::new(breakpoints.to_vec(), values.to_vec()).unwrap()
}

#[test]
fn hermite_rule_structure() {
    for n in [1, 2, 5, 20, 40, 60, 120, 200] {
        let r = rule(n);
        let sum: f64 = r.weights().iter().sum();
        assert!((sum / std::f64::consts::PI.sqrt() - 1.0).abs() < 1e-12, "order {n}: {sum}");
        let nodes = r.nodes();
        assert!(nodes.windows(2).all(|w| w[1] > w[0]));
        for (a, b) in nodes.iter().zip(nodes.iter().rev()) {
            assert!((a + b).abs() < 1e-12);
        }
        assert!(r.weights().iter().all(|&w| w > 0.0));
    }
}

#[test]
fn hermite_polynomial_exactness() {
    // ∫ x^k e^{-x²} dx = Γ((k+1)/2) for even k, 0 for odd k.
    for n in [1usize, 3, 10, 25, 40] {
        let r = rule(n);
        let mut moment = std::f64::consts::PI.sqrt();
        for k in (0..2 * n).step_by(2) {
            let q: f64 = r.nodes().iter().zip(r.weights()).map(|(x, w)| w * x.powi(k as i32)).sum();
            assert!((q / moment - 1.0).abs() < 1e-10, "order {n}, k = {k}");
            moment *= (k as f64 + 1.0) / 2.0;
            let odd: f64 = r.nodes().iter().zip(r.weights()).map(|(x, w)| w * x.powi(k as i32 + 1)).sum();
            assert!(odd.abs() < 1e-10 * moment.max(1.0));
        }
    }
}

#[test]
fn quadrature_examples() {
    let r = rule(60);
    assert!((r.gauss_expectation(|_| 3.7, -2.0, 5.0).unwrap() - 3.7).abs() < 1e-12);
    assert!((r.gauss_expectation(|u| u, 1.5, 2.0).unwrap() - 1.5).abs() < 1e-12);
    let mgf = r.gauss_expectation(|u| (0.7 * u).exp(), 0.0, 1.0).unwrap();
    assert!((mgf - 0.245f64.exp()).abs() < 1e-12);
    assert!((r.log_moment(|u| u + 1.0, 0.0, 1.0, 0.5).unwrap() - 1.25).abs() < 1e-12);
    let lc = |u: f64| common::log_cosh(u);
    let exact = 0.5 + 2.0f64.cosh().ln();
    assert!((r.log_moment(lc, 2.0, 1.0, 1.0).unwrap() - exact).abs() < 1e-12);
}

#[test]
fn log_moment_matches_trapezoid_oracle() {
    let oracle = common::log_moment(common::log_cosh, 1.0, 1.0, 0.5);
    for order in [60, 120, 200] {
        let v = rule(order).log_moment(common::log_cosh, 1.0, 1.0, 0.5).unwrap();
        assert!((v - oracle).abs() < 1e-9, "order {order}: {v} vs {oracle}");
    }
}

#[test]
fn log_moment_survives_large_exponents() {
    let r = rule(60);
    let v = r.log_moment(|u| 650.0 + u, 0.0, 1.0, 1.0).unwrap();
    assert!((v - 650.5).abs() < 1e-9);
    assert!(r.gauss_expectation(|u| if u > 0.0 { f64::NAN } else { u }, 0.0, 1.0).is_err());
}

#[test]
fn param_examples() {
    let a = step(&[0.5], &[0.8, 0.2]);
    assert_eq!(a.evaluate(0.6).unwrap(), 0.2);
    assert_eq!(a.evaluate(0.5).unwrap(), 0.8);

    let (r1, r2) = refine_pair(&step(&[0.3], &[0.9, 0.5]), &step(&[0.6], &[0.7, 0.1]));
    assert_eq!(r1.breakpoints(), &[0.3, 0.6]);
    assert_eq!(r2.breakpoints(), &[0.3, 0.6]);
    for t in [0.1, 0.3, 0.45, 0.6, 0.9] {
        assert_eq!(r1.evaluate(t).unwrap(), if t <= 0.3 { 0.9 } else { 0.5 });
        assert_eq!(r2.evaluate(t).unwrap(), if t <= 0.6 { 0.7 } else { 0.1 });
    }

    let c = convex_combination(0.25, &StepParam::constant(0.3).unwrap(), &step(&[0.5], &[0.9, 0.5])).unwrap();
    assert_eq!(c.breakpoints(), &[0.5]);
    assert!((c.values()[0] - 0.75).abs() < 1e-15 && (c.values()[1] - 0.45).abs() < 1e-15);

    let a1 = StepParam::constant(0.4).unwrap();
    let a2 = step(&[0.5], &[0.8, 0.4]);
    let d = l1_distance(&a1, &a2);
    let riemann = common::riemann(|t| (a1.evaluate(t).unwrap() - a2.evaluate(t).unwrap()).abs(), 0.0, 1.0, 10_000);
    assert!((d - 0.2).abs() < 1e-15 && (d - riemann).abs() < 1e-4);

    let p = step(&[0.5], &[0.8, 0.2]);
    let riemann = common::riemann(|t| t * p.evaluate(1.0 - t).unwrap(), 0.0, 1.0, 100_000);
    assert!((p.penalty_integral() - riemann).abs() < 1e-4);
    assert_eq!(StepParam::constant(0.0).unwrap().penalty_integral(), 0.0);
    assert!((StepParam::constant(0.6).unwrap().penalty_integral() - 0.3).abs() < 1e-15);
}

#[test]
fn builtin_examples() {
    let lc = InitialCondition::builtin("log_cosh").unwrap();
    assert_eq!(lc.eval(0.0), [0.0, 0.0, 1.0]);
    let tail = 20.0 - std::f64::consts::LN_2;
    assert!((lc.value(20.0) - tail).abs() < 1e-9);
    assert!((lc.value(20.0) - common::log_cosh(20.0)).abs() < 1e-14);
    let lin = InitialCondition::builtin("linear(0.5, 1)").unwrap();
    assert_eq!((lin.deriv1(3.0), lin.deriv2(-1.0)), (0.5, 0.0));
    assert!(InitialCondition::builtin("quartic").is_err());
}

#[test]
fn piecewise_examples() {
    let s = PiecewiseLinearApprox::build(&InitialCondition::linear(1.0, 0.0).unwrap(), 3).unwrap();
    for x in [-7.0, -1.3, 0.0, 2.9, 11.0] {
        assert!((s.value(x) - (x - 2.0 / 3.0)).abs() < 1e-12);
    }
    let lc = InitialCondition::log_cosh();
    let s = PiecewiseLinearApprox::build(&lc, 2).unwrap();
    for x in [2.0, 2.5, 4.0, 30.0] {
        let expect = common::log_cosh(2.0) - 1.0 + 2.0f64.tanh() * (x - 2.0);
        assert!((s.value(x) - expect).abs() < 1e-12);
    }
    for i in 0..1000 {
        let x = -2.0 + 4.0 * (i as f64 + 0.5) / 1000.0;
        assert!(s.value(x) <= lc.value(x) - 0.5 + 1e-12);
    }
}

#[test]
fn mollified_matches_direct_convolution() {
    let lc = InitialCondition::log_cosh();
    let s = PiecewiseLinearApprox::build(&lc, 2).unwrap();
    let smooth = s.mollify();
    let c = common::bump_constant();
    for i in 0..100 {
        let x = -3.0 + 6.0 * i as f64 / 99.0;
        let oracle = common::convolve_with_bump(&|u| s.value(u), s.knots(), s.eps(), x, c);
        assert!((smooth.value(x) - oracle).abs() < 1e-8, "x = {x}");
    }
    let m_r = 2.0 + s.eps();
    for x in [m_r, m_r + 0.3, 7.0] {
        assert!((smooth.deriv1(x) - 2.0f64.tanh()).abs() < 1e-10);
    }
    let lin = PiecewiseLinearApprox::build(&InitialCondition::linear(1.0, 0.0).unwrap(), 5).unwrap().mollify();
    for x in [-4.0, 0.01, 0.1, 6.0] {
        assert!((lin.value(x) - (x - 0.4)).abs() < 1e-12);
    }
}

#[test]
fn pair_examples() {
    let lc = InitialCondition::log_cosh();
    assert_eq!(validate_pair(&lc, &lc), PairClass::F1);
    let double = InitialCondition::builtin("2*log_cosh").unwrap();
    assert_eq!(validate_pair(&lc, &double), PairClass::F1);
    let l1 = InitialCondition::linear(0.3, 0.0).unwrap();
    let l2 = InitialCondition::linear(0.7, 0.1).unwrap();
    // Lines with different slopes cross on the left, so value ordering fails.
    assert_eq!(validate_pair(&l1, &l2), PairClass::Neither);
    let l2 = InitialCondition::linear(0.3, 0.1).unwrap();
    assert_eq!(validate_pair(&l1, &l2), PairClass::F2);
}

#[test]
fn constant_m_examples() {
    let r = rule(60);
    let lc = InitialCondition::log_cosh();
    for x in [0.0, 1.0, -1.0, 3.0, -3.0] {
        for t in [0.25, 1.0] {
            let v = constant_m_solution(&lc, 1.0, x, t, &r).unwrap();
            assert!((v - (t / 2.0 + common::log_cosh(x))).abs() < 1e-9);
        }
    }
    let lin = InitialCondition::linear(0.8, -0.3).unwrap();
    let v = constant_m_solution(&lin, 0.4, 1.5, 0.6, &r).unwrap();
    assert!((v - (0.8 * 1.5 - 0.3 + 0.64 * 0.4 * 0.6 / 2.0)).abs() < 1e-12);
    let oracle = common::log_moment(common::log_cosh, 1.0, 1.0, 0.5);
    assert!((constant_m_solution(&lc, 0.5, 1.0, 1.0, &rule(200)).unwrap() - oracle).abs() < 1e-9);
}

#[test]
fn gibbs_derivatives_match_finite_differences() {
    let r = rule(60);
    let lc = InitialCondition::log_cosh();
    let (m, x, t, h) = (0.6, 1.2, 0.7, 1e-4);
    let f = |x: f64| constant_m_solution(&lc, m, x, t, &r).unwrap();
    let p = constant_m_partials(&lc, m, x, t, &r).unwrap();
    let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
    let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
    assert!((p.dx - d1).abs() < 1e-6);
    assert!((p.dxx - d2).abs() < 1e-5);

    let at_zero = constant_m_partials(&lc, 1.0, 0.0, 1.0, &r).unwrap();
    assert!(at_zero.dx.abs() < 1e-15);
    let lin = InitialCondition::linear(-0.4, 2.0).unwrap();
    let p = constant_m_partials(&lin, 0.7, 0.3, 0.5, &r).unwrap();
    assert!((p.dx + 0.4).abs() < 1e-14 && p.dxx.abs() < 1e-14);
}

#[test]
fn dxx_is_nonnegative_for_convex_data() {
    let r = rule(60);
    let phis = ["log_cosh", "soft_abs(0.5)", "smoothed_relu(1)", "linear(2,1)", "3*log_cosh"];
    for (k, name) in phis.iter().enumerate() {
        let phi = InitialCondition::builtin(name).unwrap();
        for i in 0..20 {
            let s = (k * 20 + i) as f64;
            let x = 4.0 * (s * 0.618_033_988_7).fract() - 2.0;
            let t = (s * 0.414_213_562_3).fract();
            let m = (s * 0.732_050_807_5).fract();
            let p = constant_m_partials(&phi, m, x, t, &r).unwrap();
            assert!(p.dxx >= -1e-10, "{name} at m={m}, x={x}, t={t}: {}", p.dxx);
        }
    }
}

#[test]
fn nested_oracle_agrees_with_grid_solver() {
    let solver = Solver::new(SolverConfig::default()).unwrap();
    let lc = InitialCondition::log_cosh();
    let a = step(&[0.5], &[0.8, 0.3]);
    let trace = solver.solve(&lc, &a).unwrap();
    for x in [0.0, 1.0, -1.0, 2.0, -2.0] {
        let oracle = common::nested_two_step(&common::log_cosh, 0.8, 0.5, 0.3, x);
        let v = trace.terminal_value(x).unwrap();
        assert!((v - oracle).abs() < 1e-6, "x = {x}: {v} vs {oracle}");
    }
}

#[test]
fn functional_examples() {
    let solver = Solver::new(SolverConfig::default()).unwrap();
    let lc = InitialCondition::log_cosh();
    let half = StepParam::constant(0.5).unwrap();
    let oracle = constant_m_solution(&lc, 0.5, 1.0, 1.0, &rule(200)).unwrap();
    let v = parisi_core::functional::parisi_functional(&solver, &lc, 1.0, &half).unwrap();
    assert!((v - oracle).abs() < 1e-7);

    let sk = ParisiProblem::sk(1.0, 0.0, 1).unwrap();
    let one = StepParam::constant(1.0).unwrap();
    let expect = std::f64::consts::LN_2 + 0.5 - 0.25;
    assert!((sk.value(&solver, &one).unwrap() - expect).abs() < 1e-12);
    let zero = StepParam::constant(0.0).unwrap();
    let expect = std::f64::consts::LN_2 + common::expectation(common::log_cosh, 0.0, 1.0);
    assert!((sk.value(&solver, &zero).unwrap() - expect).abs() < 1e-8);
}

#[test]
fn scan_examples() {
    let solver = Solver::new(SolverConfig::default()).unwrap();
    let alphas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let xs = [0.0, 1.0, -1.0, 2.0, -2.0];
    let lc = InitialCondition::log_cosh();
    let double = InitialCondition::builtin("2*log_cosh").unwrap();
    let a1 = step(&[0.4], &[0.5, 0.2]);
    let a2 = step(&[0.4], &[0.9, 0.6]);
    let report = one_sided_scan(&solver, &lc, &double, &a1, &a2, &alphas, &xs, 1e-7).unwrap();
    assert!(report.min_gap >= -1e-7, "{}", report.min_gap);
    for x in xs {
        assert!(report.gap(0.0, x).unwrap().abs() < 1e-9);
        assert!(report.gap(1.0, x).unwrap().abs() < 1e-9);
    }

    let refined = Solver::new(SolverConfig {
        grid: SolverConfig::default().grid.refined(),
        order: 120,
    })
    .unwrap();
    let c1 = step(&[0.5], &[0.8, 0.2]);
    let c2 = step(&[0.5], &[0.2, 0.8]);
    let coarse = conjecture_scan(&solver, &refined, &lc, &c1, &c2, &alphas, &xs, 1e-7).unwrap();
    let fine = conjecture_scan(&refined, &refined, &lc, &c1, &c2, &alphas, &xs, 1e-7).unwrap();
    for (a, b) in coarse.records.iter().zip(&fine.records) {
        assert!((a.gap - b.gap).abs() < 1e-6);
    }
    let same = conjecture_scan(&solver, &refined, &lc, &c1, &c1, &alphas, &xs, 1e-7).unwrap();
    assert!(same.records.iter().all(|r| r.gap.abs() < 1e-9));
}

#[test]
fn constant_m_curve_small_m_limit() {
    let lc = InitialCondition::log_cosh();
    let ms: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
    for x in [0.0, 0.5, 1.0, 2.0] {
        let curve = constant_m_curve(&rule(200), &lc, x, &ms, 1e-8).unwrap();
        assert!(curve.convex);
        let oracle = common::expectation(common::log_cosh, x, 1.0);
        assert!((curve.values[0] - oracle).abs() < 1e-8, "x = {x}");
    }
}

#[test]
fn sinh_representation_identity() {
    let r = rule(200);
    for (x, sigma) in [(1.0, 1.0), (0.3, 0.7), (2.0, 1.5)] {
        let direct = r.gauss_expectation(f64::tanh, x, sigma).unwrap();
        let kernel = common::sinh_representation(&f64::tanh, x, sigma);
        assert!((direct - kernel).abs() < 1e-8, "x = {x}, σ = {sigma}");
    }
    let gap = odd_comparison_check(&rule(60), &f64::tanh, &|u| u, &[0.0, 0.5, 1.0, 2.0, 3.0], 1.0).unwrap();
    assert!(gap >= -1e-10);
}

#[test]
fn covariance_matches_double_integral() {
    let r = rule(120);
    let lc = InitialCondition::log_cosh();
    let double = InitialCondition::builtin("2*log_cosh").unwrap();
    let (m1, m2) = (0.3, 0.8);
    let diff_even = |y: f64| m2 * double.value(y) - m1 * lc.value(y);
    for s in [0.0, 0.5, 1.0] {
        let log_w = |y: f64| (1.0 - s) * m1 * lc.value(y) + s * m2 * double.value(y);
        for x in [0.0, 0.5, 2.0] {
            let c = covariance_check(&r, &f64::tanh, &diff_even, Weight::LogUnnormalized(&log_w), x, 1.0, CovarianceVariant::EvenOdd)
                .unwrap();
            let oracle = common::covariance_2d(&f64::tanh, &diff_even, &log_w, x, 1.0);
            assert!(c >= -1e-10);
            assert!((c - oracle).abs() < 1e-6 * (1.0 + oracle.abs()), "s={s} x={x}: {c} vs {oracle}");
        }
        let mono = covariance_check(&r, &f64::tanh, &|y| y, Weight::LogUnnormalized(&log_w), 0.7, 1.0, CovarianceVariant::Monotone)
            .unwrap();
        let oracle = common::covariance_2d(&f64::tanh, &|y| y, &log_w, 0.7, 1.0);
        assert!((mono - oracle).abs() < 1e-6 * (1.0 + oracle.abs()));
    }
    let var = covariance_check(&r, &|y| y, &|y| y, Weight::Uniform, 0.3, 1.7, CovarianceVariant::Monotone).unwrap();
    assert!((var - 1.7 * 1.7).abs() < 1e-10);
}
