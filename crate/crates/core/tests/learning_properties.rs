use foliate::groups::{GroupElement, GroupFamily};
use foliate::learning::{
    check_equivariance, fit_multitask, fit_on_leaf, fit_scratch, gradient, objective, BasisFn,
    FitMethod, LearnerConfig, ModelSpace, RegressionData,
};
use foliate::pendulum::pendulum_model_space;
use foliate::taskspace::TaskPoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sin_const_space(omega: f64, phi: f64) -> ModelSpace {
    ModelSpace::new(
        1,
        vec![BasisFn::constant(), BasisFn::sin_wave(omega, phi)],
        vec![1],
        vec![0],
    )
    .unwrap()
}

fn wide_space(omega: f64, phi: f64) -> ModelSpace {
    let lo = 0.0;
    let hi = std::f64::consts::TAU;
    ModelSpace::new(
        1,
        vec![
            BasisFn::constant(),
            BasisFn::sin_wave(omega, phi),
            BasisFn::chebyshev(1, lo, hi),
            BasisFn::chebyshev(2, lo, hi),
            BasisFn::chebyshev(3, lo, hi),
        ],
        vec![2, 3, 4],
        vec![0, 1],
    )
    .unwrap()
}

fn lsq() -> LearnerConfig {
    LearnerConfig {
        method: FitMethod::LeastSquares,
        ..LearnerConfig::default()
    }
}

fn random_task(rng: &mut ChaCha8Rng) -> TaskPoint {
    let a = 0.3 + 2.2 * rng.random::<f64>();
    let omega = 0.4 + 2.0 * rng.random::<f64>();
    let phi = -2.5 + 5.0 * rng.random::<f64>();
    let c = -2.0 + 4.0 * rng.random::<f64>();
    TaskPoint::sinusoid(a, omega, phi, c).unwrap()
}

fn random_element(group: GroupFamily, rng: &mut ChaCha8Rng) -> GroupElement {
    match group {
        GroupFamily::Translation => {
            let mag = 0.3 + 2.2 * rng.random::<f64>();
            let a = if rng.random::<f64>() < 0.5 { mag } else { -mag };
            GroupElement::translation(a)
        }
        GroupFamily::Affine => {
            let a_mag = 0.3 + 1.7 * rng.random::<f64>();
            let a = if rng.random::<f64>() < 0.5 { a_mag } else { -a_mag };
            let b_mag = 0.3 + 2.2 * rng.random::<f64>();
            let b = if rng.random::<f64>() < 0.5 { b_mag } else { -b_mag };
            GroupElement::affine(a, b).unwrap()
        }
        GroupFamily::Rotation2D => unreachable!("no scalar action"),
    }
}

/// Least squares commutes with the group action on labels whenever the
/// model class contains the constant feature: transforming the task and
/// fitting equals fitting and transforming the coefficients.
#[test]
fn least_squares_is_equivariant_on_representable_tasks() {
    let mut rng = ChaCha8Rng::seed_from_u64(8100);
    for case in 0..100 {
        let f = random_task(&mut rng);
        let group = if case % 2 == 0 {
            GroupFamily::Translation
        } else {
            GroupFamily::Affine
        };
        let elem = random_element(group, &mut rng);
        let space = sin_const_space(f.coords()[1], f.coords()[2]);
        let report =
            check_equivariance(&space, &f, &elem, &lsq(), 60, 0.0, 9000 + case, 1e-9).unwrap();
        assert!(
            report.pass,
            "case {case} under {group}: gap {}",
            report.param_gap
        );
    }
}

#[test]
fn identity_element_gives_zero_parameter_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(8200);
    for group in [GroupFamily::Translation, GroupFamily::Affine] {
        for case in 0..10 {
            let f = random_task(&mut rng);
            let space = sin_const_space(f.coords()[1], f.coords()[2]);
            let elem = GroupElement::identity(group);
            let report =
                check_equivariance(&space, &f, &elem, &lsq(), 40, 0.0, 9500 + case, 1e-9)
                    .unwrap();
            assert_eq!(report.param_gap, 0.0, "{group} case {case}");
        }
    }
}

#[test]
fn parameter_action_is_a_homomorphism() {
    let mut rng = ChaCha8Rng::seed_from_u64(8300);
    let space = wide_space(1.0, 0.0);
    for group in [GroupFamily::Translation, GroupFamily::Affine] {
        for case in 0..1000 {
            let theta: Vec<f64> = (0..space.dim())
                .map(|_| -3.0 + 6.0 * rng.random::<f64>())
                .collect();
            let g1 = group.sample_element(&mut rng);
            let g2 = group.sample_element(&mut rng);
            let combined = space
                .parameter_action(&g1.compose(&g2).unwrap(), &theta)
                .unwrap();
            let stepwise = space
                .parameter_action(&g1, &space.parameter_action(&g2, &theta).unwrap())
                .unwrap();
            for (a, b) in combined.iter().zip(&stepwise) {
                assert!((a - b).abs() <= 1e-9, "{group} case {case}: {a} vs {b}");
            }
            let fixed = space
                .parameter_action(&GroupElement::identity(group), &theta)
                .unwrap();
            assert_eq!(fixed, theta, "{group} case {case}");
        }
    }
}

#[test]
fn frozen_coordinates_survive_fitting_bit_for_bit() {
    let mut rng = ChaCha8Rng::seed_from_u64(8400);
    for case in 0..50 {
        let f = random_task(&mut rng);
        let space = wide_space(f.coords()[1], f.coords()[2]);
        let ds = f.sample_dataset(30, 0.1, 700 + case).unwrap();
        let data = RegressionData::from_scalar(&ds);
        let frozen = vec![
            0.25 + rng.random::<f64>(),
            -0.5 + rng.random::<f64>(),
            0.1 * rng.random::<f64>(),
        ];
        for method in [FitMethod::LeastSquares, FitMethod::GradientDescent] {
            let cfg = LearnerConfig {
                method,
                max_iters: 60,
                ..LearnerConfig::default()
            };
            let fit = fit_on_leaf(&data, &space, &frozen, &cfg).unwrap();
            for (slot, want) in space.inv_idx().iter().zip(&frozen) {
                assert_eq!(
                    fit.theta[*slot].to_bits(),
                    want.to_bits(),
                    "case {case}: invariant block drifted"
                );
            }
        }
    }
}

#[test]
fn multitask_objective_never_increases() {
    let mut rng = ChaCha8Rng::seed_from_u64(8500);
    for case in 0..20 {
        let base = random_task(&mut rng);
        let space = wide_space(base.coords()[1], base.coords()[2]);
        let datasets: Vec<RegressionData> = (0..4)
            .map(|t| {
                let shift = GroupElement::translation(-2.0 + 4.0 * rng.random::<f64>());
                let task = shift.act_on_task(&base).unwrap();
                let ds = task.sample_dataset(25, 0.15, 800 + 10 * case + t).unwrap();
                RegressionData::from_scalar(&ds)
            })
            .collect();
        let cfg = LearnerConfig {
            method: FitMethod::LeastSquares,
            max_iters: 50,
            tol: 1e-12,
            ..LearnerConfig::default()
        };
        let fit = fit_multitask(&datasets, &space, &cfg).unwrap();
        for pair in fit.objective_curve.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-12,
                "case {case}: objective rose {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }
}

#[test]
fn multitask_on_one_repeated_task_matches_scratch() {
    let f = TaskPoint::sinusoid(1.7, 1.1, 0.4, -0.6).unwrap();
    let space = wide_space(1.1, 0.4);
    let ds = f.sample_dataset(40, 0.05, 31).unwrap();
    let data = RegressionData::from_scalar(&ds);
    let cfg = LearnerConfig {
        method: FitMethod::LeastSquares,
        max_iters: 5000,
        tol: 0.0,
        ..LearnerConfig::default()
    };
    let scratch = fit_scratch(&data, &space, &cfg).unwrap();
    let datasets = vec![data.clone(), data.clone(), data];
    let mt = fit_multitask(&datasets, &space, &cfg).unwrap();
    for t in 0..3 {
        let theta = mt.task_theta(&space, t);
        for (a, b) in theta.iter().zip(&scratch.theta) {
            assert!((a - b).abs() <= 1e-6, "task {t}: {a} vs {b}");
        }
    }
}

#[test]
fn multitask_recovers_shared_amplitude_and_per_task_offsets() {
    let omega = 1.3;
    let phi = 0.2;
    let amp = 2.1;
    let space = sin_const_space(omega, phi);
    let offsets = [0.5, -1.2, 2.0];
    let datasets: Vec<RegressionData> = offsets
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let task = TaskPoint::sinusoid(amp, omega, phi, c).unwrap();
            let ds = task.sample_dataset(50, 0.0, 40 + i as u64).unwrap();
            RegressionData::from_scalar(&ds)
        })
        .collect();
    let cfg = LearnerConfig {
        method: FitMethod::LeastSquares,
        max_iters: 200,
        tol: 1e-12,
        ..LearnerConfig::default()
    };
    let mt = fit_multitask(&datasets, &space, &cfg).unwrap();
    assert!((mt.shared_inv[0] - amp).abs() <= 1e-6, "amplitude {}", mt.shared_inv[0]);
    for (leaf, want) in mt.task_leaf.iter().zip(&offsets) {
        assert!((leaf[0] - want).abs() <= 1e-6, "offset {} vs {want}", leaf[0]);
    }
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8600);
    let step = 1e-6;
    for case in 0..100 {
        let f = random_task(&mut rng);
        let space = wide_space(f.coords()[1], f.coords()[2]);
        let ds = f.sample_dataset(20, 0.2, 900 + case).unwrap();
        let data = RegressionData::from_scalar(&ds);
        let l2 = if case % 3 == 0 { 0.01 } else { 0.0 };
        let theta: Vec<f64> = (0..space.dim())
            .map(|_| -2.0 + 4.0 * rng.random::<f64>())
            .collect();
        let grad = gradient(&space, &data, &theta, l2).unwrap();
        for j in 0..theta.len() {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[j] += step;
            minus[j] -= step;
            let numeric = (objective(&space, &data, &plus, l2).unwrap()
                - objective(&space, &data, &minus, l2).unwrap())
                / (2.0 * step);
            let scale = grad[j].abs().max(numeric.abs()).max(1.0);
            assert!(
                (grad[j] - numeric).abs() / scale <= 1e-5,
                "case {case} coord {j}: analytic {} vs numeric {numeric}",
                grad[j]
            );
        }
    }
}

#[test]
fn gradient_descent_agrees_with_the_closed_form() {
    let f = TaskPoint::sinusoid(1.4, 0.9, -0.3, 0.8).unwrap();
    let space = wide_space(0.9, -0.3);
    let ds = f.sample_dataset(60, 0.1, 19).unwrap();
    let data = RegressionData::from_scalar(&ds);
    let exact = fit_scratch(&data, &space, &lsq()).unwrap();
    let gd_cfg = LearnerConfig {
        method: FitMethod::GradientDescent,
        max_iters: 100_000,
        tol: 1e-12,
        step: 0.2,
        ..LearnerConfig::default()
    };
    let gd = fit_scratch(&data, &space, &gd_cfg).unwrap();
    for (a, b) in gd.theta.iter().zip(&exact.theta) {
        assert!((a - b).abs() <= 1e-4, "{a} vs {b}");
    }
}

/// Freezing the invariant block shrinks the search space to the leaf
/// dimension; the structural half of the transfer advantage.
#[test]
fn leaf_block_is_strictly_smaller_than_the_full_space() {
    let spaces = [wide_space(1.0, 0.0), pendulum_model_space()];
    for space in &spaces {
        assert!(space.leaf_idx().len() < space.dim());
        assert_eq!(space.leaf_idx().len() + space.inv_idx().len(), space.dim());
    }
    let pend = pendulum_model_space();
    assert_eq!(pend.dim(), 5);
    assert_eq!(pend.leaf_idx().len(), 2);
}
