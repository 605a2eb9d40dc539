use foliate::groups::{solve_relating, GroupElement, GroupFamily, RelateOutcome};
use foliate::taskspace::{TaskFamily, TaskPoint};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FAMILIES: [GroupFamily; 3] = [
    GroupFamily::Translation,
    GroupFamily::Affine,
    GroupFamily::Rotation2D,
];

fn max_param_diff(a: &GroupElement, b: &GroupElement) -> f64 {
    a.params()
        .iter()
        .zip(b.params())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn random_sinusoid(rng: &mut ChaCha8Rng) -> TaskPoint {
    let a = 0.3 + 2.5 * rng.random::<f64>();
    let omega = 0.4 + 2.0 * rng.random::<f64>();
    let phi = -2.5 + 5.0 * rng.random::<f64>();
    let c = -2.0 + 4.0 * rng.random::<f64>();
    TaskPoint::sinusoid(a, omega, phi, c).unwrap()
}

#[test]
fn group_axioms_hold_for_seeded_elements() {
    for (fi, family) in FAMILIES.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + fi as u64);
        let identity = GroupElement::identity(*family);
        for case in 0..1000 {
            let g1 = family.sample_element(&mut rng);
            let g2 = family.sample_element(&mut rng);
            let g3 = family.sample_element(&mut rng);

            let left_id = identity.compose(&g1).unwrap();
            let right_id = g1.compose(&identity).unwrap();
            assert!(max_param_diff(&left_id, &g1) <= 1e-9, "{family} case {case}");
            assert!(max_param_diff(&right_id, &g1) <= 1e-9, "{family} case {case}");

            let cancel = g1.compose(&g1.inverse()).unwrap();
            assert!(
                max_param_diff(&cancel, &identity) <= 1e-9,
                "{family} case {case}: {cancel:?}"
            );
            let cancel_other_side = g1.inverse().compose(&g1).unwrap();
            assert!(max_param_diff(&cancel_other_side, &identity) <= 1e-9);

            let left = g1.compose(&g2).unwrap().compose(&g3).unwrap();
            let right = g1.compose(&g2.compose(&g3).unwrap()).unwrap();
            assert!(
                max_param_diff(&left, &right) <= 1e-9,
                "{family} case {case}: {left:?} vs {right:?}"
            );
        }
    }
}

#[test]
fn task_action_is_compatible_with_composition() {
    let families = [TaskFamily::sinusoid(), TaskFamily::poly_basis(4)];
    for group in [GroupFamily::Translation, GroupFamily::Affine] {
        for task_family in &families {
            let mut rng = ChaCha8Rng::seed_from_u64(2000 + group.param_dim() as u64);
            let grid = task_family.domain().grid(100);
            for _ in 0..200 {
                let f = match task_family {
                    TaskFamily::Sinusoid { .. } => random_sinusoid(&mut rng),
                    TaskFamily::PolyBasis { .. } => {
                        let coords: Vec<f64> =
                            (0..4).map(|_| -2.0 + 4.0 * rng.random::<f64>()).collect();
                        TaskPoint::new(task_family.clone(), coords).unwrap()
                    }
                };
                let g1 = group.sample_element(&mut rng);
                let g2 = group.sample_element(&mut rng);
                let composed = g1.compose(&g2).unwrap().act_on_task(&f).unwrap();
                let sequential = g1.act_on_task(&g2.act_on_task(&f).unwrap()).unwrap();
                for &x in &grid {
                    let diff =
                        (composed.evaluate(x).unwrap() - sequential.evaluate(x).unwrap()).abs();
                    assert!(diff <= 1e-9, "{group} on {}: diff {diff}", task_family.name());
                }
            }
        }
    }
}

#[test]
fn relatedness_is_an_equivalence_relation() {
    for group in [GroupFamily::Translation, GroupFamily::Affine] {
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + group.param_dim() as u64);
        let grid = TaskFamily::sinusoid().domain().grid(101);
        let tol = 1e-6;
        for case in 0..200 {
            let f = random_sinusoid(&mut rng);
            let to_g = group.sample_element(&mut rng);
            let to_h = group.sample_element(&mut rng);
            let g = to_g.act_on_task(&f).unwrap();
            let h = to_h.act_on_task(&g).unwrap();

            // reflexive: the found element is the identity
            let self_rel = solve_relating(&f, &f, group, &grid, tol).unwrap();
            let elem = self_rel.element().expect("reflexive case must relate");
            assert!(
                max_param_diff(elem, &GroupElement::identity(group)) <= 1e-9,
                "{group} case {case}"
            );

            // symmetric: the inverse of the found element relates g back to f
            let fg = solve_relating(&f, &g, group, &grid, tol).unwrap();
            let fg_elem = fg.element().expect("constructed pair must relate").clone();
            let gf = solve_relating(&g, &f, group, &grid, tol).unwrap();
            assert!(gf.is_related(), "{group} case {case}");
            let back = foliate::groups::relating_residual(&fg_elem.inverse(), &g, &f, &grid)
                .unwrap();
            assert!(back <= tol, "{group} case {case}: residual {back}");

            // transitive: composing the two found elements relates f to h
            let gh = solve_relating(&g, &h, group, &grid, tol).unwrap();
            let gh_elem = gh.element().expect("constructed pair must relate");
            let fh_elem = gh_elem.compose(&fg_elem).unwrap();
            let fh_resid =
                foliate::groups::relating_residual(&fh_elem, &f, &h, &grid).unwrap();
            assert!(fh_resid <= tol, "{group} case {case}: residual {fh_resid}");
        }
    }
}

#[test]
fn unrelated_pairs_are_rejected() {
    let grid = TaskFamily::sinusoid().domain().grid(101);
    let f = TaskPoint::sinusoid(1.0, 1.0, 0.0, 0.0).unwrap();
    // scaling is outside the translation group
    let g = TaskPoint::sinusoid(1.3, 1.0, 0.0, 0.0).unwrap();
    let out = solve_relating(&f, &g, GroupFamily::Translation, &grid, 1e-6).unwrap();
    assert!(matches!(out, RelateOutcome::NotRelated { .. }));
    // a frequency change is outside both groups
    let h = TaskPoint::sinusoid(1.0, 2.0, 0.0, 0.0).unwrap();
    for group in [GroupFamily::Translation, GroupFamily::Affine] {
        let out = solve_relating(&f, &h, group, &grid, 1e-6).unwrap();
        assert!(matches!(out, RelateOutcome::NotRelated { .. }), "{group}");
    }
}

#[test]
fn rotations_preserve_radius() {
    let mut rng = ChaCha8Rng::seed_from_u64(4000);
    for _ in 0..1000 {
        let p = [
            -3.0 + 6.0 * rng.random::<f64>(),
            -3.0 + 6.0 * rng.random::<f64>(),
        ];
        let g = GroupFamily::Rotation2D.sample_element(&mut rng);
        let q = g.act_point2d(p).unwrap();
        let before = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let after = (q[0] * q[0] + q[1] * q[1]).sqrt();
        assert!((before - after).abs() <= 1e-12, "{before} vs {after}");
    }
}

proptest! {
    #[test]
    fn affine_inverse_round_trips_values(
        a in -5.0f64..5.0,
        b_mag in 0.1f64..5.0,
        flip in proptest::bool::ANY,
        y in -10.0f64..10.0,
    ) {
        let b = if flip { -b_mag } else { b_mag };
        let g = GroupElement::affine(a, b).unwrap();
        let there = g.act_pointwise(y).unwrap();
        let back = g.inverse().act_pointwise(there).unwrap();
        prop_assert!((back - y).abs() <= 1e-9 * (1.0 + y.abs()));
    }

    #[test]
    fn composition_acts_like_sequential_application(
        a1 in -3.0f64..3.0,
        b1 in 0.2f64..3.0,
        a2 in -3.0f64..3.0,
        b2 in 0.2f64..3.0,
        y in -5.0f64..5.0,
    ) {
        let g1 = GroupElement::affine(a1, b1).unwrap();
        let g2 = GroupElement::affine(a2, b2).unwrap();
        let one_shot = g1.compose(&g2).unwrap().act_pointwise(y).unwrap();
        let stepwise = g1.act_pointwise(g2.act_pointwise(y).unwrap()).unwrap();
        prop_assert!((one_shot - stepwise).abs() <= 1e-9);
    }
}
