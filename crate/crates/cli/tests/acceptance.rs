//! Acceptance gate for the whole artifact. Each test covers one release
//! criterion, prints exactly one `acceptance <name>: PASS` or `FAIL` line,
//! and fails the build if the criterion does not hold. Run with
//! `cargo test --test acceptance -- --nocapture` to see every line.

use std::process::Command;

use foliate::foliation::{
    check_atlas, check_foliated_transition, check_invariance, defect_chart_pair, invariant_count,
    orbit_foliation, polar_atlas, radius_quantity, sinusoid_shape_quantity, ActedSpace, Atlas,
};
use foliate::groups::{solve_relating, GroupElement, GroupFamily};
use foliate::harness::{run_transfer_experiment, ExperimentConfig, Preset, Strategy};
use foliate::learning::{
    check_equivariance, gradient, objective, BasisFn, FitMethod, LearnerConfig, ModelSpace,
    RegressionData,
};
use foliate::pendulum::{estimate_period, simulate, PendulumParams, STANDARD_GRAVITY};
use foliate::taskspace::{TaskFamily, TaskPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn criterion(name: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("acceptance {name}: PASS"),
        Err(reason) => {
            println!("acceptance {name}: FAIL ({reason})");
            panic!("acceptance criterion {name} failed: {reason}");
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

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
    TaskPoint::sinusoid(a, omega, phi, c).expect("amplitude is positive")
}

fn catalog_atlases() -> Vec<(GroupFamily, TaskFamily, Atlas)> {
    let mut out = Vec::new();
    for group in [GroupFamily::Translation, GroupFamily::Affine] {
        for family in [
            TaskFamily::sinusoid(),
            TaskFamily::poly_basis(3),
            TaskFamily::poly_basis(5),
        ] {
            let atlas = orbit_foliation(group, &family).expect("catalog pair");
            out.push((group, family, atlas));
        }
    }
    out
}

fn sample_task(family: &TaskFamily, rng: &mut ChaCha8Rng) -> TaskPoint {
    match family {
        TaskFamily::Sinusoid { .. } => random_sinusoid(rng),
        TaskFamily::PolyBasis { dim, .. } => {
            let mut coords: Vec<f64> =
                (0..*dim).map(|_| -2.0 + 4.0 * rng.random::<f64>()).collect();
            if *dim >= 2 && coords[1].abs() < 0.2 {
                coords[1] = 0.2_f64.copysign(coords[1] + 1e-3);
            }
            TaskPoint::new(family.clone(), coords).expect("dimensions match")
        }
    }
}

#[test]
fn a01_group_axioms() {
    criterion("group-axioms", || {
        let families = [
            GroupFamily::Translation,
            GroupFamily::Affine,
            GroupFamily::Rotation2D,
        ];
        for (fi, family) in families.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + fi as u64);
            let identity = GroupElement::identity(*family);
            for case in 0..1000 {
                let g1 = family.sample_element(&mut rng);
                let g2 = family.sample_element(&mut rng);
                let g3 = family.sample_element(&mut rng);
                let checks = [
                    ("left identity", identity.compose(&g1), &g1),
                    ("right identity", g1.compose(&identity), &g1),
                    ("right inverse", g1.compose(&g1.inverse()), &identity),
                    ("left inverse", g1.inverse().compose(&g1), &identity),
                ];
                for (law, got, want) in checks {
                    let got = got.map_err(|e| format!("{family} case {case}: {e}"))?;
                    let diff = max_param_diff(&got, want);
                    ensure(diff <= 1e-9, || {
                        format!("{family} case {case} {law}: diff {diff:.3e}")
                    })?;
                }
                let left = g1
                    .compose(&g2)
                    .and_then(|e| e.compose(&g3))
                    .map_err(|e| e.to_string())?;
                let right = g2
                    .compose(&g3)
                    .and_then(|e| g1.compose(&e))
                    .map_err(|e| e.to_string())?;
                let diff = max_param_diff(&left, &right);
                ensure(diff <= 1e-9, || {
                    format!("{family} case {case} associativity: diff {diff:.3e}")
                })?;
            }
        }
        Ok(())
    });
}

#[test]
fn a02_relatedness_is_an_equivalence_relation() {
    criterion("relatedness-equivalence", || {
        let tol = 1e-6;
        let grid = TaskFamily::sinusoid().domain().grid(101);
        for group in [GroupFamily::Translation, GroupFamily::Affine] {
            let mut rng = ChaCha8Rng::seed_from_u64(3000 + group.param_dim() as u64);
            for case in 0..200 {
                let f = random_sinusoid(&mut rng);
                let g = group
                    .sample_element(&mut rng)
                    .act_on_task(&f)
                    .map_err(|e| e.to_string())?;
                let h = group
                    .sample_element(&mut rng)
                    .act_on_task(&g)
                    .map_err(|e| e.to_string())?;

                let refl = solve_relating(&f, &f, group, &grid, tol)
                    .map_err(|e| e.to_string())?;
                let elem = refl
                    .element()
                    .ok_or_else(|| format!("{group} case {case}: not reflexive"))?;
                let id_gap = max_param_diff(elem, &GroupElement::identity(group));
                ensure(id_gap <= 1e-9, || {
                    format!("{group} case {case}: reflexive element off by {id_gap:.3e}")
                })?;

                let fg = solve_relating(&f, &g, group, &grid, tol)
                    .map_err(|e| e.to_string())?;
                let fg_elem = fg
                    .element()
                    .ok_or_else(|| format!("{group} case {case}: constructed pair unrelated"))?
                    .clone();
                let gf = solve_relating(&g, &f, group, &grid, tol)
                    .map_err(|e| e.to_string())?;
                ensure(gf.is_related(), || {
                    format!("{group} case {case}: not symmetric")
                })?;
                let back =
                    foliate::groups::relating_residual(&fg_elem.inverse(), &g, &f, &grid)
                        .map_err(|e| e.to_string())?;
                ensure(back <= tol, || {
                    format!("{group} case {case}: inverse residual {back:.3e}")
                })?;

                let gh = solve_relating(&g, &h, group, &grid, tol)
                    .map_err(|e| e.to_string())?;
                let gh_elem = gh
                    .element()
                    .ok_or_else(|| format!("{group} case {case}: second hop unrelated"))?;
                let fh_elem = gh_elem.compose(&fg_elem).map_err(|e| e.to_string())?;
                let fh_resid = foliate::groups::relating_residual(&fh_elem, &f, &h, &grid)
                    .map_err(|e| e.to_string())?;
                ensure(fh_resid <= tol, || {
                    format!("{group} case {case}: transitive residual {fh_resid:.3e}")
                })?;
            }
        }
        Ok(())
    });
}

#[test]
fn a03_catalog_quantities_are_invariant() {
    criterion("invariant-quantities", || {
        let radius = check_invariance(
            &radius_quantity(),
            GroupFamily::Rotation2D,
            &ActedSpace::plane(),
            1000,
            1e-12,
            51,
        )
        .map_err(|e| e.to_string())?;
        ensure(radius.pass, || {
            format!(
                "radius moved under rotations: max violation {:.3e}",
                radius.max_violation
            )
        })?;
        let shape = check_invariance(
            &sinusoid_shape_quantity(),
            GroupFamily::Affine,
            &ActedSpace::tasks(TaskFamily::sinusoid()),
            1000,
            1e-9,
            53,
        )
        .map_err(|e| e.to_string())?;
        ensure(shape.pass, || {
            format!(
                "(frequency, phase) moved under affine maps: max violation {:.3e}",
                shape.max_violation
            )
        })
    });
}

#[test]
fn a04_invariant_count_matches_every_catalog_atlas() {
    criterion("invariant-count", || {
        for (group, family, atlas) in catalog_atlases() {
            let (d, m, n) = atlas.dims();
            ensure(d == family.coord_dim(), || {
                format!("{group}/{}: ambient dim {d}", family.name())
            })?;
            ensure(n == group.param_dim(), || {
                format!("{group}/{}: leaf dim {n}", family.name())
            })?;
            let expected = invariant_count(d, n).map_err(|e| e.to_string())?;
            ensure(m == expected, || {
                format!(
                    "{group}/{}: transverse dim {m}, expected {expected}",
                    family.name()
                )
            })?;
        }
        Ok(())
    });
}

#[test]
fn a05_transition_checks_pass_and_the_planted_defect_is_measured() {
    criterion("transition-condition", || {
        let reports = check_atlas(&polar_atlas(), 200, 1e-5, 1e-6, 31)
            .map_err(|e| e.to_string())?;
        for r in &reports {
            ensure(r.pass, || format!("polar {}: violation {:.3e}", r.check, r.max_violation))?;
        }
        let overlap_sampled = reports
            .iter()
            .filter(|r| r.check.starts_with("foliated-transition"))
            .all(|r| r.samples > 0);
        ensure(overlap_sampled, || "polar overlap was never sampled".into())?;

        let (base, skew) = defect_chart_pair();
        for (a, b, dir) in [(&base, &skew, "forward"), (&skew, &base, "backward")] {
            let r = check_foliated_transition(a, b, 200, 1e-5, 1e-6, 41)
                .map_err(|e| e.to_string())?;
            ensure(!r.pass, || format!("defect pair passed in {dir} direction"))?;
            ensure((r.max_violation - 0.1).abs() <= 0.01, || {
                format!(
                    "defect magnitude {dir}: {:.4} not within 10% of 0.1",
                    r.max_violation
                )
            })?;
        }
        Ok(())
    });
}

#[test]
fn a06_group_actions_never_change_the_leaf() {
    criterion("orbit-leaf-consistency", || {
        for (group, family, atlas) in catalog_atlases() {
            let mut rng = ChaCha8Rng::seed_from_u64(600 + group.param_dim() as u64);
            for case in 0..500 {
                let f = sample_task(&family, &mut rng);
                let elem = group.sample_identity_component(&mut rng);
                let g = elem.act_on_task(&f).map_err(|e| e.to_string())?;
                let leaf_f = atlas.leaf_of(f.coords(), 1e-9).map_err(|e| e.to_string())?;
                let leaf_g = atlas.leaf_of(g.coords(), 1e-9).map_err(|e| e.to_string())?;
                ensure(leaf_f.matches(&leaf_g), || {
                    format!("{group}/{} case {case}: leaf changed", family.name())
                })?;
            }
        }
        Ok(())
    });
}

#[test]
fn a07_least_squares_is_equivariant_on_representable_tasks() {
    criterion("learner-equivariance", || {
        let mut rng = ChaCha8Rng::seed_from_u64(8100);
        let lsq = LearnerConfig {
            method: FitMethod::LeastSquares,
            ..LearnerConfig::default()
        };
        let mut passes = 0usize;
        let cases = 100usize;
        for case in 0..cases {
            let f = random_sinusoid(&mut rng);
            let group = if case % 2 == 0 {
                GroupFamily::Translation
            } else {
                GroupFamily::Affine
            };
            let elem = match group {
                GroupFamily::Translation => {
                    GroupElement::translation(-2.5 + 5.0 * rng.random::<f64>())
                }
                _ => {
                    let a = -2.0 + 4.0 * rng.random::<f64>();
                    let b_mag = 0.3 + 2.2 * rng.random::<f64>();
                    let b = if rng.random::<f64>() < 0.5 { b_mag } else { -b_mag };
                    GroupElement::affine(a, b).map_err(|e| e.to_string())?
                }
            };
            let space = ModelSpace::new(
                1,
                vec![
                    BasisFn::constant(),
                    BasisFn::sin_wave(f.coords()[1], f.coords()[2]),
                ],
                vec![1],
                vec![0],
            )
            .map_err(|e| e.to_string())?;
            let report =
                check_equivariance(&space, &f, &elem, &lsq, 60, 0.0, 9000 + case as u64, 1e-9)
                    .map_err(|e| e.to_string())?;
            if report.pass {
                passes += 1;
            }
        }
        ensure(passes == cases, || {
            format!("pass rate {}/{cases}, expected every case", passes)
        })
    });
}

#[test]
fn a08_analytic_gradient_matches_central_differences() {
    criterion("gradient-check", || {
        let mut rng = ChaCha8Rng::seed_from_u64(8600);
        let step = 1e-6;
        let tau = std::f64::consts::TAU;
        for case in 0..100u64 {
            let f = random_sinusoid(&mut rng);
            let space = ModelSpace::new(
                1,
                vec![
                    BasisFn::constant(),
                    BasisFn::sin_wave(f.coords()[1], f.coords()[2]),
                    BasisFn::chebyshev(1, 0.0, tau),
                    BasisFn::chebyshev(2, 0.0, tau),
                    BasisFn::chebyshev(3, 0.0, tau),
                ],
                vec![2, 3, 4],
                vec![0, 1],
            )
            .map_err(|e| e.to_string())?;
            let ds = f.sample_dataset(20, 0.2, 900 + case).map_err(|e| e.to_string())?;
            let data = RegressionData::from_scalar(&ds);
            let l2 = if case % 3 == 0 { 0.01 } else { 0.0 };
            let theta: Vec<f64> = (0..space.dim())
                .map(|_| -2.0 + 4.0 * rng.random::<f64>())
                .collect();
            let grad = gradient(&space, &data, &theta, l2).map_err(|e| e.to_string())?;
            for j in 0..theta.len() {
                let mut plus = theta.clone();
                let mut minus = theta.clone();
                plus[j] += step;
                minus[j] -= step;
                let numeric = (objective(&space, &data, &plus, l2).map_err(|e| e.to_string())?
                    - objective(&space, &data, &minus, l2).map_err(|e| e.to_string())?)
                    / (2.0 * step);
                let scale = grad[j].abs().max(numeric.abs()).max(1.0);
                let rel = (grad[j] - numeric).abs() / scale;
                ensure(rel <= 1e-5, || {
                    format!("case {case} coordinate {j}: relative error {rel:.3e}")
                })?;
            }
        }
        Ok(())
    });
}

#[test]
fn a09_pendulum_integrator_conserves_energy_and_period() {
    criterion("pendulum-integrator", || {
        let mut rng = ChaCha8Rng::seed_from_u64(7000);
        for seed in 0..20 {
            let m = 0.5 + 1.5 * rng.random::<f64>();
            let l = 0.5 + 1.5 * rng.random::<f64>();
            let p = PendulumParams::new(m, l, 0.0).map_err(|e| e.to_string())?;
            let theta0 = 0.3 + 0.9 * rng.random::<f64>();
            let omega0 = -1.0 + 2.0 * rng.random::<f64>();
            let traj = simulate(&p, (theta0, omega0), 1e-3, 10_000).map_err(|e| e.to_string())?;
            let drift = traj.max_energy_drift();
            ensure(drift < 1e-6, || {
                format!("seed {seed}: energy drift {drift:.3e}")
            })?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7100);
        for seed in 0..20 {
            let l = 0.4 + 1.6 * rng.random::<f64>();
            let m = 0.5 + 1.5 * rng.random::<f64>();
            let p = PendulumParams::new(m, l, 0.0).map_err(|e| e.to_string())?;
            let expected = 2.0 * std::f64::consts::PI * (l / STANDARD_GRAVITY).sqrt();
            let steps = (4.0 * expected / 1e-3).ceil() as usize;
            let traj = simulate(&p, (0.01, 0.0), 1e-3, steps).map_err(|e| e.to_string())?;
            let period = estimate_period(&traj)
                .ok_or_else(|| format!("seed {seed}: no full swing observed"))?;
            let rel = (period - expected).abs() / expected;
            ensure(rel < 1e-3, || {
                format!("seed {seed}: period off by {:.4}%", 100.0 * rel)
            })?;
        }
        Ok(())
    });
}

fn params_of(report: &foliate::harness::TransferReport, strategy: Strategy, trial: usize)
    -> Result<usize, String>
{
    report.trials[trial]
        .rows
        .iter()
        .find(|r| r.strategy == strategy)
        .map(|r| r.params_optimized)
        .ok_or_else(|| format!("trial {trial}: no {strategy:?} row"))
}

#[test]
fn a10_leaf_transfer_beats_scratch_under_equal_budgets() {
    criterion("transfer-benefit", || {
        let cfg = ExperimentConfig::default();
        ensure(cfg.trials == 50, || "default is not 50 trials".into())?;
        let report = run_transfer_experiment(&cfg).map_err(|e| e.to_string())?;
        let win = report
            .aggregates
            .win_rate_leaf_vs_scratch
            .ok_or_else(|| "win rate missing from aggregates".to_string())?;
        ensure(win >= 0.9, || {
            format!("leaf win rate {win:.2} below 0.9 over {} trials", cfg.trials)
        })?;
        for trial in 0..report.trials.len() {
            let leaf = params_of(&report, Strategy::Leaf, trial)?;
            let scratch = params_of(&report, Strategy::Scratch, trial)?;
            ensure(leaf < scratch, || {
                format!("trial {trial}: leaf optimized {leaf} of {scratch} parameters")
            })?;
        }

        let mut pend = ExperimentConfig::default();
        pend.experiment = Preset::Pendulum;
        let report = run_transfer_experiment(&pend).map_err(|e| e.to_string())?;
        ensure(!report.trials.is_empty(), || "pendulum preset ran no trials".into())?;
        for trial in 0..report.trials.len() {
            let leaf = params_of(&report, Strategy::Leaf, trial)?;
            let scratch = params_of(&report, Strategy::Scratch, trial)?;
            ensure(leaf < scratch, || {
                format!("pendulum trial {trial}: leaf optimized {leaf} of {scratch} parameters")
            })?;
        }
        let win = report
            .aggregates
            .win_rate_leaf_vs_scratch
            .ok_or_else(|| "pendulum win rate missing".to_string())?;
        ensure((0.0..=1.0).contains(&win), || {
            format!("pendulum win rate {win} outside [0, 1]")
        })
    });
}

fn rerun_identical(args: &[&str], files: &[&str]) -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs: Vec<Vec<Vec<u8>>> = Vec::new();
    for run in 0..2 {
        let out_dir = dir.path().join(format!("run{run}"));
        let mut argv: Vec<&str> = args.to_vec();
        let out_str = out_dir.to_str().expect("temp path is valid utf-8").to_string();
        argv.push("--out");
        argv.push(&out_str);
        let out = Command::new(env!("CARGO_BIN_EXE_foliate"))
            .args(&argv)
            .output()
            .map_err(|e| e.to_string())?;
        let code = out.status.code().unwrap_or(-1);
        if code != 0 && code != 1 {
            return Err(format!(
                "{args:?} exited with {code}: {}",
                String::from_utf8_lossy(&out.stderr)
            ));
        }
        let mut bytes = Vec::new();
        for file in files {
            let path = out_dir.join(file);
            bytes.push(
                std::fs::read(&path)
                    .map_err(|e| format!("{args:?}: missing {}: {e}", path.display()))?,
            );
        }
        outputs.push(bytes);
    }
    for (i, file) in files.iter().enumerate() {
        if outputs[0][i] != outputs[1][i] {
            return Err(format!("{args:?}: {file} differs between identical runs"));
        }
    }
    Ok(())
}

#[test]
fn a11_cli_reruns_are_byte_identical() {
    criterion("cli-determinism", || {
        rerun_identical(
            &[
                "transfer", "--seed", "17", "--set", "trials=3", "--set", "k_source=3",
                "--set", "budget_iters=60", "--set", "n_per_task=12",
            ],
            &["report.json", "report.csv", "plot.svg", "resolved-config.txt"],
        )?;
        rerun_identical(
            &["check-foliation", "--atlas", "polar", "--seed", "17"],
            &["report.json"],
        )?;
        rerun_identical(
            &["check-foliation", "--atlas", "defect-pair", "--seed", "17"],
            &["report.json"],
        )?;
        rerun_identical(
            &[
                "check-invariance", "--quantity", "sinusoid-shape", "--group", "affine",
                "--samples", "300", "--seed", "17",
            ],
            &["report.json"],
        )?;
        rerun_identical(
            &["check-equivariance", "--cases", "10", "--seed", "17"],
            &["report.json"],
        )?;
        rerun_identical(
            &[
                "orbit", "--coords", "1,2,0.5,0", "--group", "affine",
                "--element", "0.5,2", "--element", "1,0.5", "--seed", "17",
            ],
            &["orbit.csv"],
        )?;
        rerun_identical(
            &[
                "relate", "--group", "affine", "--from", "1,2,0.5,0", "--to", "2,2,0.5,1",
                "--seed", "17",
            ],
            &["relate.json"],
        )?;
        rerun_identical(
            &["pendulum-sim", "--steps", "500", "--seed", "17"],
            &["trajectory.csv"],
        )?;
        Ok(())
    });
}
