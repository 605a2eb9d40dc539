//! Linear-in-parameters regression with a leaf-adapted parameter split.
//!
//! A [`ModelSpace`] is a feature basis whose coefficient vector is
//! partitioned into an *invariant* block (coordinates that stay fixed across
//! every task on one leaf) and a *leaf* block (coordinates that move along
//! it). Fitting comes in three shapes:
//!
//! * [`fit_scratch`] optimizes every coefficient;
//! * [`fit_on_leaf`] freezes the invariant block at given values
//!   (bit-exactly) and optimizes only the leaf block, which is what
//!   transfer along a known leaf looks like;
//! * [`fit_multitask`] shares one invariant block across several tasks while
//!   giving each its own leaf block, recovering the invariant values by
//!   alternating exact block minimization.
//!
//! [`check_equivariance`] verifies the least-squares learner commutes with
//! group actions: training on transformed labels lands exactly where the
//! parameter-space action [`ModelSpace::parameter_action`] predicts,
//! provided the model class is closed under the action (for shifts this
//! needs a constant feature).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::{GroupElement, GroupError, GroupFamily};
use crate::taskspace::{Dataset, TaskError, TaskPoint};

#[derive(Debug, Error)]
pub enum FitError {
    #[error("dataset is empty")]
    EmptyData,
    #[error("input has {got} coordinates, model expects {expected}")]
    InputDim { expected: usize, got: usize },
    #[error("parameter vector has {got} entries, model has {expected}")]
    ThetaLen { expected: usize, got: usize },
    #[error("invalid parameter partition: {0}")]
    PartitionInvalid(String),
    #[error("normal equations are rank deficient; add data or ridge regularization")]
    RankDeficient,
    #[error("multitask fitting needs at least 2 tasks, got {got}")]
    MultitaskNeedsTwo { got: usize },
    #[error("frozen invariant block has {got} entries, partition expects {expected}")]
    FrozenLen { expected: usize, got: usize },
    #[error("parameter action with a shift needs a constant feature in the basis")]
    NoConstantFeature,
    #[error("no parameter action is defined for {family} elements")]
    WrongFamily { family: GroupFamily },
    #[error("invalid learner configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Task(#[from] TaskError),
}

/// One feature: a named scalar function of the model input.
#[derive(Clone)]
pub struct BasisFn {
    name: String,
    constant: bool,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl BasisFn {
    pub fn custom(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            constant: false,
            f: Arc::new(f),
        }
    }

    /// The constant feature `1`. Shift actions on parameters are absorbed
    /// here, so mark it with this constructor rather than `custom`.
    pub fn constant() -> Self {
        Self {
            name: "1".into(),
            constant: true,
            f: Arc::new(|_| 1.0),
        }
    }

    /// The `i`-th input coordinate.
    pub fn coordinate(i: usize) -> Self {
        Self {
            name: format!("x{i}"),
            constant: false,
            f: Arc::new(move |x: &[f64]| x[i]),
        }
    }

    /// `sin(ω·x + φ)` of a scalar input.
    pub fn sin_wave(omega: f64, phi: f64) -> Self {
        Self {
            name: format!("sin({omega:.6}x{phi:+.6})"),
            constant: false,
            f: Arc::new(move |x: &[f64]| (omega * x[0] + phi).sin()),
        }
    }

    /// Chebyshev polynomial `T_k` of the scalar input rescaled from
    /// `[lo, hi]` to `[-1, 1]`.
    pub fn chebyshev(k: usize, lo: f64, hi: f64) -> Self {
        Self {
            name: format!("T{k}"),
            constant: false,
            f: Arc::new(move |x: &[f64]| {
                let t = 2.0 * (x[0] - lo) / (hi - lo) - 1.0;
                let (mut prev, mut cur) = (1.0, t);
                match k {
                    0 => 1.0,
                    1 => t,
                    _ => {
                        for _ in 2..=k {
                            let next = 2.0 * t * cur - prev;
                            prev = cur;
                            cur = next;
                        }
                        cur
                    }
                }
            }),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

impl std::fmt::Debug for BasisFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BasisFn")
            .field("name", &self.name)
            .field("constant", &self.constant)
            .finish()
    }
}

/// Feature basis plus the invariant/leaf partition of its coefficients.
#[derive(Clone, Debug)]
pub struct ModelSpace {
    input_dim: usize,
    basis: Vec<BasisFn>,
    inv_idx: Vec<usize>,
    leaf_idx: Vec<usize>,
    const_idx: Option<usize>,
}

impl ModelSpace {
    /// `inv_idx` and `leaf_idx` must partition `0..basis.len()`.
    pub fn new(
        input_dim: usize,
        basis: Vec<BasisFn>,
        inv_idx: Vec<usize>,
        leaf_idx: Vec<usize>,
    ) -> Result<Self, FitError> {
        if basis.is_empty() {
            return Err(FitError::PartitionInvalid("basis is empty".into()));
        }
        if input_dim == 0 {
            return Err(FitError::PartitionInvalid("input dimension is zero".into()));
        }
        let d = basis.len();
        let mut seen = vec![false; d];
        for &i in inv_idx.iter().chain(&leaf_idx) {
            if i >= d {
                return Err(FitError::PartitionInvalid(format!(
                    "index {i} out of range for {d} basis functions"
                )));
            }
            if seen[i] {
                return Err(FitError::PartitionInvalid(format!("index {i} appears twice")));
            }
            seen[i] = true;
        }
        if !seen.iter().all(|s| *s) {
            return Err(FitError::PartitionInvalid(
                "partition does not cover every coefficient".into(),
            ));
        }
        let const_idx = basis.iter().position(BasisFn::is_constant);
        Ok(Self {
            input_dim,
            basis,
            inv_idx,
            leaf_idx,
            const_idx,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn inv_idx(&self) -> &[usize] {
        &self.inv_idx
    }

    pub fn leaf_idx(&self) -> &[usize] {
        &self.leaf_idx
    }

    pub fn const_idx(&self) -> Option<usize> {
        self.const_idx
    }

    pub fn basis_names(&self) -> Vec<&str> {
        self.basis.iter().map(|b| b.name()).collect()
    }

    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>, FitError> {
        if x.len() != self.input_dim {
            return Err(FitError::InputDim {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        Ok(self.basis.iter().map(|b| b.eval(x)).collect())
    }

    pub fn predict(&self, theta: &[f64], x: &[f64]) -> Result<f64, FitError> {
        check_theta(self, theta)?;
        let phi = self.features(x)?;
        Ok(phi.iter().zip(theta).map(|(p, t)| p * t).sum())
    }

    /// How a group element moves fitted parameters: shifts add to the
    /// constant coefficient, affine maps scale everything and then shift
    /// the constant coefficient. A nonzero shift without a constant feature
    /// means the model class is not closed under the action, reported as
    /// [`FitError::NoConstantFeature`].
    pub fn parameter_action(
        &self,
        elem: &GroupElement,
        theta: &[f64],
    ) -> Result<Vec<f64>, FitError> {
        check_theta(self, theta)?;
        let (shift, scale) = match elem.family() {
            GroupFamily::Translation => (elem.params()[0], 1.0),
            GroupFamily::Affine => (elem.params()[0], elem.params()[1]),
            GroupFamily::Rotation2D => {
                return Err(FitError::WrongFamily {
                    family: elem.family(),
                })
            }
        };
        let mut out: Vec<f64> = theta.iter().map(|t| scale * t).collect();
        if shift != 0.0 {
            let c = self.const_idx.ok_or(FitError::NoConstantFeature)?;
            out[c] += shift;
        }
        Ok(out)
    }
}

/// Multi-input regression sample.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionData {
    xs: Vec<Vec<f64>>,
    ys: Vec<f64>,
}

impl RegressionData {
    pub fn new(xs: Vec<Vec<f64>>, ys: Vec<f64>) -> Result<Self, FitError> {
        if xs.is_empty() {
            return Err(FitError::EmptyData);
        }
        if xs.len() != ys.len() {
            return Err(FitError::InputDim {
                expected: xs.len(),
                got: ys.len(),
            });
        }
        let dim = xs[0].len();
        if xs.iter().any(|x| x.len() != dim) {
            return Err(FitError::InputDim {
                expected: dim,
                got: xs.iter().map(Vec::len).find(|&l| l != dim).unwrap_or(dim),
            });
        }
        Ok(Self { xs, ys })
    }

    /// Wraps a scalar-input dataset.
    pub fn from_scalar(ds: &Dataset) -> Self {
        Self {
            xs: ds.xs.iter().map(|&x| vec![x]).collect(),
            ys: ds.ys.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn xs(&self) -> &[Vec<f64>] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    /// Normal equations solved by Cholesky factorization.
    LeastSquares,
    /// Full-batch gradient descent with monotone backtracking.
    GradientDescent,
}

/// Optimizer settings shared by every fit entry point.
///
/// `tol` is the convergence threshold: max-norm of the (active) gradient
/// for gradient descent, relative objective decrease per sweep for the
/// multitask solver. `l2` is a ridge penalty applied to every coefficient
/// except the constant one, so shift equivariance stays exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub method: FitMethod,
    pub max_iters: usize,
    pub tol: f64,
    pub step: f64,
    pub l2: f64,
    /// Full-length starting parameters; zeros when absent. `fit_on_leaf`
    /// reads only the leaf coordinates from it.
    pub init: Option<Vec<f64>>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            method: FitMethod::GradientDescent,
            max_iters: 500,
            tol: 1e-6,
            step: 0.1,
            l2: 0.0,
            init: None,
        }
    }
}

impl LearnerConfig {
    fn validate(&self, space: &ModelSpace) -> Result<(), FitError> {
        if !(self.step > 0.0) {
            return Err(FitError::BadConfig(format!("step must be positive, got {}", self.step)));
        }
        if self.max_iters == 0 {
            return Err(FitError::BadConfig("max_iters must be at least 1".into()));
        }
        if self.l2 < 0.0 {
            return Err(FitError::BadConfig(format!("l2 must be non-negative, got {}", self.l2)));
        }
        if !(self.tol >= 0.0) {
            return Err(FitError::BadConfig(format!("tol must be non-negative, got {}", self.tol)));
        }
        if let Some(init) = &self.init {
            if init.len() != space.dim() {
                return Err(FitError::ThetaLen {
                    expected: space.dim(),
                    got: init.len(),
                });
            }
        }
        Ok(())
    }
}

/// Outcome of a single-task fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta: Vec<f64>,
    /// Training objective at `theta` (mean squared error plus ridge).
    pub final_loss: f64,
    /// Training objective after 0, 1, 2, … accepted iterations.
    pub loss_curve: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
}

fn check_theta(space: &ModelSpace, theta: &[f64]) -> Result<(), FitError> {
    if theta.len() != space.dim() {
        return Err(FitError::ThetaLen {
            expected: space.dim(),
            got: theta.len(),
        });
    }
    Ok(())
}

fn check_data(space: &ModelSpace, data: &RegressionData) -> Result<(), FitError> {
    if data.is_empty() {
        return Err(FitError::EmptyData);
    }
    if data.xs[0].len() != space.input_dim() {
        return Err(FitError::InputDim {
            expected: space.input_dim(),
            got: data.xs[0].len(),
        });
    }
    Ok(())
}

/// Training objective: `(1/n)·Σ (φ(xᵢ)·θ − yᵢ)² + l2·Σ_{j≠const} θⱼ²`.
pub fn objective(
    space: &ModelSpace,
    data: &RegressionData,
    theta: &[f64],
    l2: f64,
) -> Result<f64, FitError> {
    check_theta(space, theta)?;
    check_data(space, data)?;
    let mut sum = 0.0;
    for (x, y) in data.xs.iter().zip(&data.ys) {
        let r = space.predict(theta, x)? - y;
        sum += r * r;
    }
    let mut penalty = 0.0;
    for (j, t) in theta.iter().enumerate() {
        if Some(j) != space.const_idx() {
            penalty += t * t;
        }
    }
    Ok(sum / data.len() as f64 + l2 * penalty)
}

/// Gradient of [`objective`] in `theta`.
pub fn gradient(
    space: &ModelSpace,
    data: &RegressionData,
    theta: &[f64],
    l2: f64,
) -> Result<Vec<f64>, FitError> {
    check_theta(space, theta)?;
    check_data(space, data)?;
    let d = space.dim();
    let mut g = vec![0.0; d];
    for (x, y) in data.xs.iter().zip(&data.ys) {
        let phi = space.features(x)?;
        let r: f64 = phi.iter().zip(theta).map(|(p, t)| p * t).sum::<f64>() - y;
        for (gj, pj) in g.iter_mut().zip(&phi) {
            *gj += 2.0 * r * pj;
        }
    }
    let n = data.len() as f64;
    for (j, gj) in g.iter_mut().enumerate() {
        *gj /= n;
        if Some(j) != space.const_idx() {
            *gj += 2.0 * l2 * theta[j];
        }
    }
    Ok(g)
}

fn design_matrix(space: &ModelSpace, data: &RegressionData) -> Result<DMatrix<f64>, FitError> {
    let rows: Vec<Vec<f64>> = data
        .xs
        .iter()
        .map(|x| space.features(x))
        .collect::<Result<_, _>>()?;
    Ok(DMatrix::from_fn(data.len(), space.dim(), |i, j| rows[i][j]))
}

/// Normal-equations solve over the `active` coefficients with the remaining
/// ones pinned at `frozen` values (copied into the result bit-for-bit).
fn solve_restricted(
    space: &ModelSpace,
    data: &RegressionData,
    active: &[usize],
    frozen: &[(usize, f64)],
    l2: f64,
) -> Result<Vec<f64>, FitError> {
    let mut theta = vec![0.0; space.dim()];
    for &(i, v) in frozen {
        theta[i] = v;
    }
    if active.is_empty() {
        return Ok(theta);
    }
    let phi = design_matrix(space, data)?;
    let n = data.len() as f64;
    // residual after the frozen block's contribution
    let mut r = DVector::from_column_slice(&data.ys);
    for &(i, v) in frozen {
        r -= phi.column(i) * v;
    }
    let k = active.len();
    let phi_a = DMatrix::from_fn(data.len(), k, |row, col| phi[(row, active[col])]);
    let mut a_mat = phi_a.transpose() * &phi_a / n;
    for (col, &j) in active.iter().enumerate() {
        if Some(j) != space.const_idx() {
            a_mat[(col, col)] += l2;
        }
    }
    let rhs = phi_a.transpose() * r / n;
    let sol = solve_spd(a_mat, &rhs)?;
    for (col, &j) in active.iter().enumerate() {
        theta[j] = sol[col];
    }
    Ok(theta)
}

/// Cholesky solve that treats effectively singular systems as rank
/// deficient: rounding can turn an exact zero pivot into a tiny positive
/// one, so the factor's diagonal is checked against the largest pivot.
fn solve_spd(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>, FitError> {
    let chol = a.cholesky().ok_or(FitError::RankDeficient)?;
    let diag = chol.l_dirty().diagonal();
    let dmax = diag.iter().fold(0.0_f64, |acc, v| acc.max(*v));
    if diag.iter().any(|&v| v <= 1e-7 * dmax) {
        return Err(FitError::RankDeficient);
    }
    let sol = chol.solve(b);
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(FitError::RankDeficient);
    }
    Ok(sol)
}

/// Gradient descent over the coefficients flagged in `active_mask`, from
/// `theta`. The step size only ever shrinks (halved whenever a step would
/// increase the objective), so the loss curve is non-increasing.
fn descend(
    space: &ModelSpace,
    data: &RegressionData,
    cfg: &LearnerConfig,
    active_mask: &[bool],
    mut theta: Vec<f64>,
) -> Result<FitResult, FitError> {
    let mut step = cfg.step;
    let mut j_cur = objective(space, data, &theta, cfg.l2)?;
    let mut curve = vec![j_cur];
    let mut converged = false;
    let mut iterations_used = 0;
    for _ in 0..cfg.max_iters {
        let mut g = gradient(space, data, &theta, cfg.l2)?;
        for (gi, &m) in g.iter_mut().zip(active_mask) {
            if !m {
                *gi = 0.0;
            }
        }
        let gmax = g.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if gmax <= cfg.tol {
            converged = true;
            break;
        }
        let mut accepted = false;
        for _ in 0..64 {
            let mut trial = theta.clone();
            for (i, m) in active_mask.iter().enumerate() {
                if *m {
                    trial[i] -= step * g[i];
                }
            }
            let j_trial = objective(space, data, &trial, cfg.l2)?;
            if j_trial <= j_cur {
                theta = trial;
                j_cur = j_trial;
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if !accepted {
            // step size collapsed without progress
            break;
        }
        iterations_used += 1;
        curve.push(j_cur);
    }
    Ok(FitResult {
        theta,
        final_loss: j_cur,
        loss_curve: curve,
        iterations_used,
        converged,
    })
}

fn initial_theta(space: &ModelSpace, cfg: &LearnerConfig) -> Vec<f64> {
    cfg.init.clone().unwrap_or_else(|| vec![0.0; space.dim()])
}

/// Fits every coefficient.
pub fn fit_scratch(
    data: &RegressionData,
    space: &ModelSpace,
    cfg: &LearnerConfig,
) -> Result<FitResult, FitError> {
    cfg.validate(space)?;
    check_data(space, data)?;
    match cfg.method {
        FitMethod::LeastSquares => {
            let init = initial_theta(space, cfg);
            let j0 = objective(space, data, &init, cfg.l2)?;
            let all: Vec<usize> = (0..space.dim()).collect();
            let theta = solve_restricted(space, data, &all, &[], cfg.l2)?;
            let j1 = objective(space, data, &theta, cfg.l2)?;
            Ok(FitResult {
                theta,
                final_loss: j1,
                loss_curve: vec![j0, j1],
                iterations_used: 1,
                converged: true,
            })
        }
        FitMethod::GradientDescent => {
            let mask = vec![true; space.dim()];
            descend(space, data, cfg, &mask, initial_theta(space, cfg))
        }
    }
}

/// Fits only the leaf block; the invariant block is pinned at `frozen_inv`
/// (in `inv_idx` order) and lands in the result bit-for-bit.
pub fn fit_on_leaf(
    data: &RegressionData,
    space: &ModelSpace,
    frozen_inv: &[f64],
    cfg: &LearnerConfig,
) -> Result<FitResult, FitError> {
    cfg.validate(space)?;
    check_data(space, data)?;
    if frozen_inv.len() != space.inv_idx().len() {
        return Err(FitError::FrozenLen {
            expected: space.inv_idx().len(),
            got: frozen_inv.len(),
        });
    }
    let frozen: Vec<(usize, f64)> = space
        .inv_idx()
        .iter()
        .copied()
        .zip(frozen_inv.iter().copied())
        .collect();
    match cfg.method {
        FitMethod::LeastSquares => {
            let theta = solve_restricted(space, data, space.leaf_idx(), &frozen, cfg.l2)?;
            let j1 = objective(space, data, &theta, cfg.l2)?;
            let mut init = vec![0.0; space.dim()];
            for &(i, v) in &frozen {
                init[i] = v;
            }
            let j0 = objective(space, data, &init, cfg.l2)?;
            Ok(FitResult {
                theta,
                final_loss: j1,
                loss_curve: vec![j0, j1],
                iterations_used: 1,
                converged: true,
            })
        }
        FitMethod::GradientDescent => {
            let mut mask = vec![false; space.dim()];
            for &i in space.leaf_idx() {
                mask[i] = true;
            }
            let mut theta = vec![0.0; space.dim()];
            if let Some(init) = &cfg.init {
                for &i in space.leaf_idx() {
                    theta[i] = init[i];
                }
            }
            for &(i, v) in &frozen {
                theta[i] = v;
            }
            descend(space, data, cfg, &mask, theta)
        }
    }
}

/// Joint fit of several tasks with one shared invariant block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultitaskFit {
    /// Shared invariant coefficients, in `inv_idx` order.
    pub shared_inv: Vec<f64>,
    /// Per-task leaf coefficients, in `leaf_idx` order.
    pub task_leaf: Vec<Vec<f64>>,
    /// Total objective after 0, 1, 2, … sweeps; non-increasing.
    pub objective_curve: Vec<f64>,
    pub sweeps_used: usize,
    pub converged: bool,
}

impl MultitaskFit {
    /// Full parameter vector for task `t`.
    pub fn task_theta(&self, space: &ModelSpace, t: usize) -> Vec<f64> {
        let mut theta = vec![0.0; space.dim()];
        for (&i, &v) in space.inv_idx().iter().zip(&self.shared_inv) {
            theta[i] = v;
        }
        for (&i, &v) in space.leaf_idx().iter().zip(&self.task_leaf[t]) {
            theta[i] = v;
        }
        theta
    }
}

/// Alternating exact block minimization: the shared invariant block and each
/// task's leaf block are solved in closed form in turn, so the total
/// objective (sum of per-task objectives) never increases. Stops when the
/// relative decrease per sweep drops below `cfg.tol` or after
/// `cfg.max_iters` sweeps. `cfg.method` is ignored; updates are closed form.
pub fn fit_multitask(
    datasets: &[RegressionData],
    space: &ModelSpace,
    cfg: &LearnerConfig,
) -> Result<MultitaskFit, FitError> {
    cfg.validate(space)?;
    if datasets.len() < 2 {
        return Err(FitError::MultitaskNeedsTwo {
            got: datasets.len(),
        });
    }
    for data in datasets {
        check_data(space, data)?;
    }
    let t_count = datasets.len();
    let designs: Vec<DMatrix<f64>> = datasets
        .iter()
        .map(|d| design_matrix(space, d))
        .collect::<Result<_, _>>()?;
    let inv = space.inv_idx();
    let leaf = space.leaf_idx();
    let k_inv = inv.len();
    let mut shared = vec![0.0; k_inv];
    let mut leaves = vec![vec![0.0; leaf.len()]; t_count];

    let total = |shared: &[f64], leaves: &[Vec<f64>]| -> Result<f64, FitError> {
        let mut sum = 0.0;
        for (t, data) in datasets.iter().enumerate() {
            let mut theta = vec![0.0; space.dim()];
            for (&i, &v) in inv.iter().zip(shared) {
                theta[i] = v;
            }
            for (&i, &v) in leaf.iter().zip(&leaves[t]) {
                theta[i] = v;
            }
            sum += objective(space, data, &theta, cfg.l2)?;
        }
        Ok(sum)
    };

    let mut j_cur = total(&shared, &leaves)?;
    let mut curve = vec![j_cur];
    let mut converged = false;
    let mut sweeps_used = 0;
    for _ in 0..cfg.max_iters {
        // shared block: normal equations summed over tasks, leaf blocks fixed
        if k_inv > 0 {
            let mut a_mat = DMatrix::<f64>::zeros(k_inv, k_inv);
            let mut rhs = DVector::<f64>::zeros(k_inv);
            for (t, (data, phi)) in datasets.iter().zip(&designs).enumerate() {
                let n = data.len() as f64;
                let phi_inv = DMatrix::from_fn(data.len(), k_inv, |r, c| phi[(r, inv[c])]);
                let mut resid = DVector::from_column_slice(data.ys());
                for (col, &j) in leaf.iter().enumerate() {
                    resid -= phi.column(j) * leaves[t][col];
                }
                a_mat += phi_inv.transpose() * &phi_inv / n;
                rhs += phi_inv.transpose() * resid / n;
            }
            for (col, &j) in inv.iter().enumerate() {
                if Some(j) != space.const_idx() {
                    a_mat[(col, col)] += t_count as f64 * cfg.l2;
                }
            }
            let sol = solve_spd(a_mat, &rhs)?;
            shared = sol.iter().copied().collect();
        }
        // leaf blocks: per-task restricted solves with the shared block frozen
        let frozen: Vec<(usize, f64)> =
            inv.iter().copied().zip(shared.iter().copied()).collect();
        for (t, data) in datasets.iter().enumerate() {
            let theta = solve_restricted(space, data, leaf, &frozen, cfg.l2)?;
            for (col, &j) in leaf.iter().enumerate() {
                leaves[t][col] = theta[j];
            }
        }
        let j_next = total(&shared, &leaves)?;
        sweeps_used += 1;
        curve.push(j_next);
        let decrease = j_cur - j_next;
        j_cur = j_next;
        if decrease <= cfg.tol * j_cur.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    Ok(MultitaskFit {
        shared_inv: shared,
        task_leaf: leaves,
        objective_curve: curve,
        sweeps_used,
        converged,
    })
}

/// Outcome of one equivariance probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceReport {
    /// Max-norm gap between the prediction of the parameter action and the
    /// parameters actually fitted on transformed labels.
    pub param_gap: f64,
    pub pass: bool,
    pub tol: f64,
    pub theta_base: Vec<f64>,
    pub theta_transformed: Vec<f64>,
    pub theta_predicted: Vec<f64>,
}

/// Checks that fitting commutes with the group action: draws one dataset
/// from `f`, fits it, transforms the labels through `elem`, fits again, and
/// compares the second fit against [`ModelSpace::parameter_action`] applied
/// to the first.
///
/// With the least-squares method and a constant feature this is an exact
/// algebraic identity (the ridge skips the constant coefficient), so
/// `param_gap` sits at numerical rounding for any noise level.
#[allow(clippy::too_many_arguments)]
pub fn check_equivariance(
    space: &ModelSpace,
    f: &TaskPoint,
    elem: &GroupElement,
    cfg: &LearnerConfig,
    n: usize,
    noise_sigma: f64,
    seed: u64,
    tol: f64,
) -> Result<EquivarianceReport, FitError> {
    let ds = f.sample_dataset(n, noise_sigma, seed)?;
    let data_f = RegressionData::from_scalar(&ds);
    let ys_g: Vec<f64> = ds
        .ys
        .iter()
        .map(|&y| elem.act_pointwise(y))
        .collect::<Result<_, _>>()?;
    let data_g = RegressionData::new(data_f.xs().to_vec(), ys_g)?;
    let fit_f = fit_scratch(&data_f, space, cfg)?;
    let fit_g = fit_scratch(&data_g, space, cfg)?;
    let predicted = space.parameter_action(elem, &fit_f.theta)?;
    let param_gap = predicted
        .iter()
        .zip(&fit_g.theta)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(EquivarianceReport {
        param_gap,
        pass: param_gap <= tol,
        tol,
        theta_base: fit_f.theta,
        theta_transformed: fit_g.theta,
        theta_predicted: predicted,
    })
}
