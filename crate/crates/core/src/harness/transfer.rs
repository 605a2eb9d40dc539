//! The transfer-benefit experiment: repeated trials comparing fitting
//! strategies on a fresh target task at an equal optimization budget.

use rand::Rng;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Preset, Strategy};
use super::HarnessError;
use crate::groups::{GroupElement, GroupFamily};
use crate::learning::{
    fit_multitask, fit_on_leaf, fit_scratch, BasisFn, FitMethod, FitResult, LearnerConfig,
    ModelSpace, MultitaskFit, RegressionData,
};
use crate::pendulum::{
    dynamics_dataset, pendulum_model_space, pendulum_task_point, PendulumParams, PendulumTask,
    StateBox,
};
use crate::taskspace::{voronoi_assign, TaskFamily, TaskPoint};

/// Result of one strategy on one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyRow {
    pub strategy: Strategy,
    /// Mean squared error against the noiseless target function on an
    /// evaluation grid; the headline score.
    pub final_loss: f64,
    /// Training objective on the target dataset at the fitted parameters.
    pub train_loss: f64,
    /// Number of coefficients the strategy optimized.
    pub params_optimized: usize,
    pub iterations_used: usize,
    /// First iteration whose training objective is within a relative 1e-6
    /// of the strategy's final one.
    pub iterations_to_tol: Option<usize>,
    pub converged: bool,
}

/// One trial: a fresh target task fitted by every configured strategy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub rows: Vec<StrategyRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyStat {
    pub strategy: Strategy,
    pub value: f64,
}

/// Cross-trial summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub median_final_loss: Vec<StrategyStat>,
    pub median_train_loss: Vec<StrategyStat>,
    /// Fraction of trials where `leaf` beats `scratch` on `final_loss`;
    /// absent unless both strategies ran.
    pub win_rate_leaf_vs_scratch: Option<f64>,
    /// Whether `leaf` optimized strictly fewer coefficients than `scratch`
    /// in every trial; absent unless both strategies ran.
    pub leaf_params_fewer: Option<bool>,
    /// The shared per-strategy iteration budget, for fairness auditing.
    pub budget_iters: usize,
}

/// Median training-objective curve of one strategy across trials, indexed
/// by iteration (curves shorter than the budget are extended with their
/// final value before taking medians).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyCurve {
    pub strategy: Strategy,
    pub median_train_loss: Vec<f64>,
}

/// Everything one experiment run produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialRecord>,
    pub aggregates: Aggregates,
    pub curves: Vec<StrategyCurve>,
}

type TrialOutput = (TrialRecord, Vec<(Strategy, Vec<f64>)>);

/// Runs the configured experiment. Deterministic in the configuration:
/// per-trial seeds are precomputed, so `jobs` changes wall time only.
pub fn run_transfer_experiment(cfg: &ExperimentConfig) -> Result<TransferReport, HarnessError> {
    cfg.validate()?;
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds: Vec<u64> = (0..cfg.trials).map(|_| master.next_u64()).collect();
    let outputs: Vec<TrialOutput> = if cfg.jobs <= 1 || cfg.trials <= 1 {
        seeds
            .iter()
            .enumerate()
            .map(|(i, &s)| run_trial(cfg, i, s))
            .collect::<Result<_, _>>()?
    } else {
        run_trials_parallel(cfg, &seeds)?
    };
    let mut trials = Vec::with_capacity(outputs.len());
    let mut curve_store: Vec<(Strategy, Vec<Vec<f64>>)> = cfg
        .strategies
        .iter()
        .map(|&s| (s, Vec::new()))
        .collect();
    for (record, curves) in outputs {
        trials.push(record);
        for (strategy, curve) in curves {
            if let Some(slot) = curve_store.iter_mut().find(|(s, _)| *s == strategy) {
                slot.1.push(curve);
            }
        }
    }
    let aggregates = aggregate(cfg, &trials);
    let curves = curve_store
        .into_iter()
        .map(|(strategy, list)| StrategyCurve {
            strategy,
            median_train_loss: median_curve(&list, cfg.budget_iters + 1),
        })
        .collect();
    Ok(TransferReport {
        config: cfg.clone(),
        trials,
        aggregates,
        curves,
    })
}

fn run_trials_parallel(
    cfg: &ExperimentConfig,
    seeds: &[u64],
) -> Result<Vec<TrialOutput>, HarnessError> {
    let jobs = cfg.jobs.min(seeds.len());
    let collected: Vec<Vec<(usize, Result<TrialOutput, HarnessError>)>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..jobs)
                .map(|w| {
                    scope.spawn(move || {
                        let mut out = Vec::new();
                        let mut i = w;
                        while i < seeds.len() {
                            out.push((i, run_trial(cfg, i, seeds[i])));
                            i += jobs;
                        }
                        out
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().map_err(|_| HarnessError::WorkerPanicked))
                .collect::<Result<_, _>>()
        })?;
    let mut indexed: Vec<(usize, Result<TrialOutput, HarnessError>)> =
        collected.into_iter().flatten().collect();
    indexed.sort_by_key(|(i, _)| *i);
    indexed.into_iter().map(|(_, r)| r).collect()
}

fn run_trial(cfg: &ExperimentConfig, trial: usize, seed: u64) -> Result<TrialOutput, HarnessError> {
    match cfg.experiment {
        Preset::Sinusoid => sinusoid_trial(cfg, trial, seed),
        Preset::Pendulum => pendulum_trial(cfg, trial, seed),
    }
}

fn gd_config(cfg: &ExperimentConfig) -> LearnerConfig {
    LearnerConfig {
        method: FitMethod::GradientDescent,
        max_iters: cfg.budget_iters,
        tol: cfg.gd_tol,
        step: cfg.gd_step,
        l2: cfg.l2,
        init: None,
    }
}

fn multitask_config(cfg: &ExperimentConfig) -> LearnerConfig {
    // tol 0 runs the alternating solve to its numerical fixed point; the
    // relative-decrease rule can stall well short of the joint optimum
    LearnerConfig {
        method: FitMethod::LeastSquares,
        max_iters: 1000,
        tol: 0.0,
        step: cfg.gd_step,
        l2: cfg.l2,
        init: None,
    }
}

fn iterations_to_tol(curve: &[f64]) -> Option<usize> {
    let last = *curve.last()?;
    curve
        .iter()
        .position(|&j| j - last <= 1e-6 * last.abs().max(1.0))
}

fn strategy_row(strategy: Strategy, fit: &FitResult, eval_loss: f64, params: usize) -> StrategyRow {
    StrategyRow {
        strategy,
        final_loss: eval_loss,
        train_loss: fit.final_loss,
        params_optimized: params,
        iterations_used: fit.iterations_used,
        iterations_to_tol: iterations_to_tol(&fit.loss_curve),
        converged: fit.converged,
    }
}

/// Distractor features in the sinusoid transfer basis. The gap between
/// searching all of the space and searching only the leaf grows with the
/// ambient dimension, so the count sets how visible the advantage is.
const SINUSOID_DISTRACTORS: usize = 8;

/// Basis for sinusoid transfer: the task's wave plus polynomial
/// distractors, partitioned by which coefficients the group moves.
///
/// Under translations only the constant coefficient moves (leaf size 1);
/// under affine maps the constant and wave coefficients move (leaf size 2).
/// The distractor coefficients are invariant with true value zero; under
/// translations the wave coefficient is invariant too, with true value
/// equal to the task amplitude.
fn sinusoid_space(group: GroupFamily, omega: f64, phi: f64) -> Result<ModelSpace, HarnessError> {
    let domain = TaskFamily::sinusoid().domain();
    let mut basis = vec![BasisFn::constant(), BasisFn::sin_wave(omega, phi)];
    for k in 1..=SINUSOID_DISTRACTORS {
        basis.push(BasisFn::chebyshev(k, domain.lo, domain.hi));
    }
    let inv_start = match group {
        GroupFamily::Translation => 1,
        GroupFamily::Affine => 2,
        GroupFamily::Rotation2D => unreachable!("validated by ExperimentConfig::validate"),
    };
    let dim = basis.len();
    let inv: Vec<usize> = (inv_start..dim).collect();
    let leaf: Vec<usize> = (0..inv_start).collect();
    Ok(ModelSpace::new(1, basis, inv, leaf)?)
}

fn sample_transfer_element<R: Rng>(group: GroupFamily, rng: &mut R) -> GroupElement {
    match group {
        GroupFamily::Translation => GroupElement::translation(-2.5 + 5.0 * rng.random::<f64>()),
        GroupFamily::Affine => {
            // identity component only: positive scales keep the leaf
            let a = -2.0 + 4.0 * rng.random::<f64>();
            let b = 0.4 + 2.1 * rng.random::<f64>();
            GroupElement::affine(a, b).expect("scale is bounded away from zero")
        }
        GroupFamily::Rotation2D => unreachable!("validated by ExperimentConfig::validate"),
    }
}

fn eval_loss_sinusoid(
    space: &ModelSpace,
    theta: &[f64],
    target: &TaskPoint,
) -> Result<f64, HarnessError> {
    let grid = target.family().domain().grid(201);
    let mut sum = 0.0;
    for &x in &grid {
        let d = space.predict(theta, &[x])? - target.evaluate(x)?;
        sum += d * d;
    }
    Ok(sum / grid.len() as f64)
}

fn fit_strategy(
    strategy: Strategy,
    target_data: &RegressionData,
    space: &ModelSpace,
    gd: &LearnerConfig,
    mt: &MultitaskFit,
    true_inv: &[f64],
    nearest_source: usize,
) -> Result<(FitResult, usize), HarnessError> {
    Ok(match strategy {
        Strategy::Scratch => (fit_scratch(target_data, space, gd)?, space.dim()),
        Strategy::Leaf => (
            fit_on_leaf(target_data, space, &mt.shared_inv, gd)?,
            space.leaf_idx().len(),
        ),
        Strategy::LeafTrue => (
            fit_on_leaf(target_data, space, true_inv, gd)?,
            space.leaf_idx().len(),
        ),
        Strategy::Similarity => {
            let warm = LearnerConfig {
                init: Some(mt.task_theta(space, nearest_source)),
                ..gd.clone()
            };
            (fit_scratch(target_data, space, &warm)?, space.dim())
        }
    })
}

fn sinusoid_trial(
    cfg: &ExperimentConfig,
    trial: usize,
    seed: u64,
) -> Result<TrialOutput, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = 0.6 + 2.0 * rng.random::<f64>();
    // frequencies start high enough that the wave stays well outside the
    // distractor span; otherwise the shared block is barely identifiable
    let omega = 1.4 + 1.6 * rng.random::<f64>();
    let phi = -2.6 + 5.2 * rng.random::<f64>();
    let c = -2.0 + 4.0 * rng.random::<f64>();
    let base = TaskPoint::sinusoid(amp, omega, phi, c)?;
    let space = sinusoid_space(cfg.group, omega, phi)?;

    let mut source_tasks = Vec::with_capacity(cfg.k_source);
    let mut source_data = Vec::with_capacity(cfg.k_source);
    for _ in 0..cfg.k_source {
        let elem = sample_transfer_element(cfg.group, &mut rng);
        let task = elem.act_on_task(&base)?;
        let ds = task.sample_dataset(cfg.n_per_task, cfg.noise_sigma, rng.next_u64())?;
        source_tasks.push(task);
        source_data.push(RegressionData::from_scalar(&ds));
    }
    let elem = sample_transfer_element(cfg.group, &mut rng);
    let target = elem.act_on_task(&base)?;
    let target_ds = target.sample_dataset(cfg.n_per_task, cfg.noise_sigma, rng.next_u64())?;
    let target_data = RegressionData::from_scalar(&target_ds);

    let mt = fit_multitask(&source_data, &space, &multitask_config(cfg))?;
    // distractor coefficients are truly zero; under translations the leading
    // invariant entry is the wave coefficient, preserved at the amplitude
    let mut true_inv = vec![0.0; space.inv_idx().len()];
    match cfg.group {
        GroupFamily::Translation => true_inv[0] = target.coords()[0],
        GroupFamily::Affine => {}
        GroupFamily::Rotation2D => unreachable!("validated by ExperimentConfig::validate"),
    }
    let nearest = voronoi_assign(&target, &source_tasks, 201)?;

    let gd = gd_config(cfg);
    let mut rows = Vec::with_capacity(cfg.strategies.len());
    let mut curves = Vec::with_capacity(cfg.strategies.len());
    for &strategy in &cfg.strategies {
        let (fit, params) =
            fit_strategy(strategy, &target_data, &space, &gd, &mt, &true_inv, nearest)?;
        let eval = eval_loss_sinusoid(&space, &fit.theta, &target)?;
        rows.push(strategy_row(strategy, &fit, eval, params));
        curves.push((strategy, fit.loss_curve));
    }
    Ok((TrialRecord { trial, seed, rows }, curves))
}

/// RMS gap between the angular accelerations of two pendulum tasks over a
/// state grid; the pendulum analog of the task-space distance.
fn pendulum_task_distance(a: &PendulumTask, b: &PendulumTask, bounds: &StateBox, n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        let theta =
            bounds.theta.0 + (bounds.theta.1 - bounds.theta.0) * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let omega =
                bounds.omega.0 + (bounds.omega.1 - bounds.omega.0) * j as f64 / (n - 1) as f64;
            let d = a.omega_dot(theta, omega) - b.omega_dot(theta, omega);
            sum += d * d;
        }
    }
    (sum / (n * n) as f64).sqrt()
}

fn eval_loss_pendulum(
    space: &ModelSpace,
    theta: &[f64],
    task: &PendulumTask,
    bounds: &StateBox,
) -> Result<f64, HarnessError> {
    let n = 21;
    let mut sum = 0.0;
    for i in 0..n {
        let th = bounds.theta.0 + (bounds.theta.1 - bounds.theta.0) * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let om =
                bounds.omega.0 + (bounds.omega.1 - bounds.omega.0) * j as f64 / (n - 1) as f64;
            let d = space.predict(theta, &[th, om])? - task.omega_dot(th, om);
            sum += d * d;
        }
    }
    Ok(sum / (n * n) as f64)
}

fn add_label_noise(data: &mut Vec<f64>, sigma: f64, seed: u64) {
    if sigma == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for y in data.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *y += sigma * z;
    }
}

fn pendulum_trial(
    cfg: &ExperimentConfig,
    trial: usize,
    seed: u64,
) -> Result<TrialOutput, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // 5x5 grid of pendulums over mass and length, fixed physical damping
    let mut grid = Vec::with_capacity(25);
    for i in 0..5 {
        for j in 0..5 {
            let mass = 0.6 + 1.2 * i as f64 / 4.0;
            let length = 0.6 + 1.2 * j as f64 / 4.0;
            grid.push(PendulumParams::new(mass, length, 0.1)?);
        }
    }
    let target_idx = rng.random_range(0..grid.len());
    let mut pool: Vec<usize> = (0..grid.len()).filter(|&i| i != target_idx).collect();
    for i in 0..cfg.k_source {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    let source_idx = &pool[..cfg.k_source];

    let bounds = StateBox::new((-3.0, 3.0), (-3.0, 3.0))?;
    let space = pendulum_model_space();

    let mut source_tasks = Vec::with_capacity(cfg.k_source);
    let mut source_data = Vec::with_capacity(cfg.k_source);
    for &idx in source_idx {
        let mut ds = dynamics_dataset(&grid[idx], cfg.n_per_task, &bounds, rng.next_u64())?;
        add_label_noise(&mut ds.targets, cfg.noise_sigma, rng.next_u64());
        source_tasks.push(pendulum_task_point(&grid[idx]));
        source_data.push(ds.to_regression()?);
    }
    let target_task = pendulum_task_point(&grid[target_idx]);
    let mut target_ds = dynamics_dataset(&grid[target_idx], cfg.n_per_task, &bounds, rng.next_u64())?;
    add_label_noise(&mut target_ds.targets, cfg.noise_sigma, rng.next_u64());
    let target_data = target_ds.to_regression()?;

    let mt = fit_multitask(&source_data, &space, &multitask_config(cfg))?;
    // true invariant block: dynamics never uses the distractor features
    let true_inv = vec![0.0, 0.0, 0.0];
    let nearest = source_tasks
        .iter()
        .enumerate()
        .map(|(i, t)| (i, pendulum_task_distance(&target_task, t, &bounds, 15)))
        .min_by(|(_, a), (_, b)| a.partial_cmp(b).expect("distances are finite"))
        .map(|(i, _)| i)
        .expect("at least two sources");

    let gd = gd_config(cfg);
    let mut rows = Vec::with_capacity(cfg.strategies.len());
    let mut curves = Vec::with_capacity(cfg.strategies.len());
    for &strategy in &cfg.strategies {
        let (fit, params) =
            fit_strategy(strategy, &target_data, &space, &gd, &mt, &true_inv, nearest)?;
        let eval = eval_loss_pendulum(&space, &fit.theta, &target_task, &bounds)?;
        rows.push(strategy_row(strategy, &fit, eval, params));
        curves.push((strategy, fit.loss_curve));
    }
    Ok((TrialRecord { trial, seed, rows }, curves))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("losses are finite"));
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn median_curve(curves: &[Vec<f64>], len: usize) -> Vec<f64> {
    if curves.is_empty() {
        return Vec::new();
    }
    (0..len)
        .map(|i| {
            let mut column: Vec<f64> = curves
                .iter()
                .map(|c| *c.get(i).or_else(|| c.last()).expect("curves are non-empty"))
                .collect();
            median(&mut column)
        })
        .collect()
}

fn aggregate(cfg: &ExperimentConfig, trials: &[TrialRecord]) -> Aggregates {
    let stat_for = |extract: &dyn Fn(&StrategyRow) -> f64| -> Vec<StrategyStat> {
        cfg.strategies
            .iter()
            .map(|&strategy| {
                let mut values: Vec<f64> = trials
                    .iter()
                    .flat_map(|t| t.rows.iter())
                    .filter(|r| r.strategy == strategy)
                    .map(extract)
                    .collect();
                StrategyStat {
                    strategy,
                    value: median(&mut values),
                }
            })
            .collect()
    };
    let median_final_loss = stat_for(&|r| r.final_loss);
    let median_train_loss = stat_for(&|r| r.train_loss);

    let both = cfg.strategies.contains(&Strategy::Leaf) && cfg.strategies.contains(&Strategy::Scratch);
    let (win_rate, params_fewer) = if both {
        let mut wins = 0_usize;
        let mut total = 0_usize;
        let mut fewer = true;
        for t in trials {
            let leaf = t.rows.iter().find(|r| r.strategy == Strategy::Leaf);
            let scratch = t.rows.iter().find(|r| r.strategy == Strategy::Scratch);
            if let (Some(l), Some(s)) = (leaf, scratch) {
                total += 1;
                if l.final_loss < s.final_loss {
                    wins += 1;
                }
                if l.params_optimized >= s.params_optimized {
                    fewer = false;
                }
            }
        }
        if total > 0 {
            (Some(wins as f64 / total as f64), Some(fewer))
        } else {
            (None, None)
        }
    } else {
        (None, None)
    };
    Aggregates {
        median_final_loss,
        median_train_loss,
        win_rate_leaf_vs_scratch: win_rate,
        leaf_params_fewer: params_fewer,
        budget_iters: cfg.budget_iters,
    }
}
