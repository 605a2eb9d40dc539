//! Batch equivariance sweep over random tasks and group elements.

use rand::Rng;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::groups::{GroupElement, GroupFamily};
use crate::learning::{
    check_equivariance, fit_scratch, BasisFn, FitMethod, LearnerConfig, ModelSpace,
    RegressionData,
};
use crate::taskspace::{TaskFamily, TaskPoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivSuiteConfig {
    /// Random cases; each contributes one closed-model row and one
    /// open-model row.
    pub cases: usize,
    /// Training points per fit.
    pub n_points: usize,
    pub noise_sigma: f64,
    /// Gap tolerance for a pass.
    pub tol: f64,
    pub seed: u64,
}

impl Default for EquivSuiteConfig {
    fn default() -> Self {
        Self {
            cases: 50,
            n_points: 40,
            noise_sigma: 0.1,
            tol: 1e-9,
            seed: 7,
        }
    }
}

/// One fitted comparison between predicted and actual parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivCaseRow {
    pub case: usize,
    pub group: GroupFamily,
    pub elem_params: Vec<f64>,
    /// Whether the model class is closed under the element's action (a
    /// constant feature absorbs shifts). Closed rows must pass; open rows
    /// quantify the equivariance failure.
    pub closed: bool,
    pub param_gap: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivSuiteReport {
    pub config: EquivSuiteConfig,
    pub rows: Vec<EquivCaseRow>,
    /// Fraction of closed rows within tolerance; 1.0 is the expected value.
    pub closed_pass_rate: f64,
    pub max_gap_closed: f64,
    /// Smallest observed failure among open rows, showing the gap is a
    /// structural property rather than noise.
    pub min_gap_open: f64,
    /// True when every closed row passed.
    pub pass: bool,
}

impl EquivSuiteReport {
    pub fn to_json(&self) -> Result<String, HarnessError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn summary_line(&self) -> String {
        format!(
            "equivariance cases={} closed_pass_rate={:.3} max_gap_closed={:.3e} min_gap_open={:.3e} pass={}",
            self.config.cases, self.closed_pass_rate, self.max_gap_closed, self.min_gap_open, self.pass
        )
    }
}

fn closed_space(omega: f64, phi: f64) -> ModelSpace {
    let domain = TaskFamily::sinusoid().domain();
    ModelSpace::new(
        1,
        vec![
            BasisFn::constant(),
            BasisFn::sin_wave(omega, phi),
            BasisFn::chebyshev(1, domain.lo, domain.hi),
            BasisFn::chebyshev(2, domain.lo, domain.hi),
        ],
        vec![1, 2, 3],
        vec![0],
    )
    .expect("closed suite basis is well-formed")
}

fn open_space(omega: f64, phi: f64) -> ModelSpace {
    let domain = TaskFamily::sinusoid().domain();
    ModelSpace::new(
        1,
        vec![
            BasisFn::sin_wave(omega, phi),
            BasisFn::chebyshev(1, domain.lo, domain.hi),
            BasisFn::chebyshev(2, domain.lo, domain.hi),
        ],
        vec![1, 2],
        vec![0],
    )
    .expect("open suite basis is well-formed")
}

/// Best-effort parameter prediction for a model class that cannot absorb
/// shifts: apply the scale, drop the shift.
fn open_prediction(elem: &GroupElement, theta: &[f64]) -> Vec<f64> {
    let scale = match elem.family() {
        GroupFamily::Translation => 1.0,
        GroupFamily::Affine => elem.params()[1],
        GroupFamily::Rotation2D => unreachable!("suite samples output-space groups only"),
    };
    theta.iter().map(|t| scale * t).collect()
}

/// Measures the equivariance failure of a shift-blind model: fits the task,
/// fits the transformed labels, and compares against the scale-only
/// prediction.
fn open_gap(
    space: &ModelSpace,
    f: &TaskPoint,
    elem: &GroupElement,
    cfg: &EquivSuiteConfig,
    lsq: &LearnerConfig,
    seed: u64,
) -> Result<f64, HarnessError> {
    let ds = f.sample_dataset(cfg.n_points, cfg.noise_sigma, seed)?;
    let data_f = RegressionData::from_scalar(&ds);
    let ys_g: Vec<f64> = ds
        .ys
        .iter()
        .map(|&y| elem.act_pointwise(y))
        .collect::<Result<_, _>>()
        .map_err(crate::learning::FitError::from)?;
    let data_g = RegressionData::new(data_f.xs().to_vec(), ys_g)?;
    let fit_f = fit_scratch(&data_f, space, lsq)?;
    let fit_g = fit_scratch(&data_g, space, lsq)?;
    let predicted = open_prediction(elem, &fit_f.theta);
    Ok(predicted
        .iter()
        .zip(&fit_g.theta)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Sweeps random sinusoid tasks and group elements. For each case, a model
/// with a constant feature is checked for exact parameter-space
/// equivariance, and a shift-blind model quantifies how equivariance fails
/// when the model class is not closed under the action.
pub fn run_equivariance_suite(cfg: &EquivSuiteConfig) -> Result<EquivSuiteReport, HarnessError> {
    if cfg.cases == 0 {
        return Err(HarnessError::Config(super::ConfigError::Invalid(
            "equivariance suite needs at least 1 case".into(),
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lsq = LearnerConfig {
        method: FitMethod::LeastSquares,
        l2: 1e-4,
        ..LearnerConfig::default()
    };
    let mut rows = Vec::with_capacity(cfg.cases * 2);
    for case in 0..cfg.cases {
        let amp = 0.5 + 2.0 * rng.random::<f64>();
        let omega = 0.6 + 1.8 * rng.random::<f64>();
        let phi = -2.6 + 5.2 * rng.random::<f64>();
        let c = -2.0 + 4.0 * rng.random::<f64>();
        let task = TaskPoint::sinusoid(amp, omega, phi, c)?;
        // alternate the group; shifts are bounded away from zero so open
        // rows have something to fail on
        let elem = if case % 2 == 0 {
            let a = 0.3 + 2.2 * rng.random::<f64>();
            let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
            GroupElement::translation(sign * a)
        } else {
            let a = 0.3 + 1.7 * rng.random::<f64>();
            let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
            let mag = 0.3 + 2.2 * rng.random::<f64>();
            let b = if rng.random::<f64>() < 0.5 { mag } else { -mag };
            GroupElement::affine(sign * a, b).expect("scale is bounded away from zero")
        };
        let data_seed = rng.next_u64();

        let closed = closed_space(omega, phi);
        let report = check_equivariance(
            &closed,
            &task,
            &elem,
            &lsq,
            cfg.n_points,
            cfg.noise_sigma,
            data_seed,
            cfg.tol,
        )?;
        rows.push(EquivCaseRow {
            case,
            group: elem.family(),
            elem_params: elem.params().to_vec(),
            closed: true,
            param_gap: report.param_gap,
            pass: report.pass,
        });

        let open = open_space(omega, phi);
        let gap = open_gap(&open, &task, &elem, cfg, &lsq, data_seed)?;
        rows.push(EquivCaseRow {
            case,
            group: elem.family(),
            elem_params: elem.params().to_vec(),
            closed: false,
            param_gap: gap,
            pass: gap <= cfg.tol,
        });
    }
    let closed_rows: Vec<&EquivCaseRow> = rows.iter().filter(|r| r.closed).collect();
    let closed_passed = closed_rows.iter().filter(|r| r.pass).count();
    let closed_pass_rate = closed_passed as f64 / closed_rows.len() as f64;
    let max_gap_closed = closed_rows
        .iter()
        .map(|r| r.param_gap)
        .fold(0.0_f64, f64::max);
    let min_gap_open = rows
        .iter()
        .filter(|r| !r.closed)
        .map(|r| r.param_gap)
        .fold(f64::INFINITY, f64::min);
    let pass = closed_passed == closed_rows.len();
    Ok(EquivSuiteReport {
        config: cfg.clone(),
        rows,
        closed_pass_rate,
        max_gap_closed,
        min_gap_open,
        pass,
    })
}
