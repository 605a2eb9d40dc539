use foliate::groups::GroupFamily;
use foliate::harness::{
    emit_report, run_equivariance_suite, run_transfer_experiment, Aggregates, EquivSuiteConfig,
    ExperimentConfig, ReportFormat, Strategy, TransferReport,
};

fn quick_cfg() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.trials = 4;
    cfg.k_source = 3;
    cfg.n_per_task = 25;
    cfg.budget_iters = 40;
    cfg
}

#[test]
fn identical_configs_reproduce_identical_bytes() {
    let cfg = quick_cfg();
    let a = run_transfer_experiment(&cfg).unwrap();
    let b = run_transfer_experiment(&cfg).unwrap();
    assert_eq!(a.to_json().unwrap().into_bytes(), b.to_json().unwrap().into_bytes());
    assert_eq!(a.to_csv().into_bytes(), b.to_csv().into_bytes());
    assert_eq!(a.to_svg(), b.to_svg());
}

#[test]
fn thread_count_does_not_change_report_bytes() {
    let mut cfg = quick_cfg();
    let serial = run_transfer_experiment(&cfg).unwrap();
    cfg.jobs = 4;
    let parallel = run_transfer_experiment(&cfg).unwrap();
    assert_eq!(serial.to_csv(), parallel.to_csv());
    assert_eq!(
        serde_json::to_string(&serial.trials).unwrap(),
        serde_json::to_string(&parallel.trials).unwrap()
    );
}

#[test]
fn budget_is_shared_and_leaf_optimizes_fewer_parameters() {
    let cfg = quick_cfg();
    let report = run_transfer_experiment(&cfg).unwrap();
    assert_eq!(report.aggregates.budget_iters, cfg.budget_iters);
    for trial in &report.trials {
        let scratch = trial
            .rows
            .iter()
            .find(|r| r.strategy == Strategy::Scratch)
            .unwrap();
        let leaf = trial.rows.iter().find(|r| r.strategy == Strategy::Leaf).unwrap();
        for row in &trial.rows {
            assert!(row.iterations_used <= cfg.budget_iters);
        }
        assert!(leaf.params_optimized < scratch.params_optimized);
    }
    assert_eq!(report.aggregates.leaf_params_fewer, Some(true));
}

#[test]
fn csv_rows_count_strategies_times_trials() {
    let cfg = quick_cfg();
    let report = run_transfer_experiment(&cfg).unwrap();
    let csv = report.to_csv();
    assert_eq!(
        csv.lines().count(),
        1 + cfg.strategies.len() * cfg.trials
    );
}

#[test]
fn report_round_trips_through_json() {
    let mut cfg = quick_cfg();
    cfg.group = GroupFamily::Translation;
    let report = run_transfer_experiment(&cfg).unwrap();
    let back = TransferReport::from_json(&report.to_json().unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn empty_report_emits_valid_files() {
    let report = TransferReport {
        config: ExperimentConfig::default(),
        trials: vec![],
        aggregates: Aggregates {
            median_final_loss: vec![],
            median_train_loss: vec![],
            win_rate_leaf_vs_scratch: None,
            leaf_params_fewer: None,
            budget_iters: 0,
        },
        curves: vec![],
    };
    let csv = report.to_csv();
    assert_eq!(csv.lines().count(), 1, "header only");
    let dir = tempfile::tempdir().unwrap();
    for format in [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Svg] {
        let path = emit_report(&report, format, dir.path()).unwrap();
        assert!(path.exists());
    }
    let svg = std::fs::read_to_string(dir.path().join("plot.svg")).unwrap();
    assert!(svg.contains("no data"));
}

/// With a single noise-free observation the full model is underdetermined
/// while the one-dimensional leaf problem is exactly solvable, so the
/// restricted search wins by orders of magnitude.
#[test]
fn one_sample_favors_the_leaf_search() {
    let mut cfg = ExperimentConfig::default();
    cfg.group = GroupFamily::Translation;
    cfg.noise_sigma = 0.0;
    cfg.n_per_task = 1;
    // one sample per task, so the pooled sources must still outnumber the
    // shared invariant block for the multitask solve to be full rank
    cfg.k_source = 12;
    cfg.trials = 3;
    cfg.budget_iters = 3000;
    cfg.strategies = vec![Strategy::Scratch, Strategy::LeafTrue];
    let report = run_transfer_experiment(&cfg).unwrap();
    for trial in &report.trials {
        let scratch = trial
            .rows
            .iter()
            .find(|r| r.strategy == Strategy::Scratch)
            .unwrap();
        let leaf_true = trial
            .rows
            .iter()
            .find(|r| r.strategy == Strategy::LeafTrue)
            .unwrap();
        assert!(
            leaf_true.final_loss <= 1e-8,
            "trial {}: leaf-true loss {}",
            trial.trial,
            leaf_true.final_loss
        );
        assert!(
            scratch.final_loss > 100.0 * leaf_true.final_loss.max(1e-12),
            "trial {}: scratch {} vs leaf-true {}",
            trial.trial,
            scratch.final_loss,
            leaf_true.final_loss
        );
    }
}

/// Noise-free targets are inside the restricted model class, so freezing
/// the true invariant block leaves nothing to miss.
#[test]
fn true_invariants_reach_the_noise_floor() {
    let mut cfg = ExperimentConfig::default();
    cfg.noise_sigma = 0.0;
    cfg.trials = 10;
    cfg.strategies = vec![Strategy::LeafTrue];
    let report = run_transfer_experiment(&cfg).unwrap();
    for trial in &report.trials {
        let row = &trial.rows[0];
        assert!(
            row.final_loss <= 1e-10,
            "trial {}: loss {}",
            trial.trial,
            row.final_loss
        );
    }
}

#[test]
fn equivariance_suite_is_deterministic_and_passes() {
    let cfg = EquivSuiteConfig {
        cases: 30,
        ..EquivSuiteConfig::default()
    };
    let a = run_equivariance_suite(&cfg).unwrap();
    let b = run_equivariance_suite(&cfg).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert!(a.pass);
    assert_eq!(a.closed_pass_rate, 1.0);
    assert_eq!(a.rows.len(), 60);
}
