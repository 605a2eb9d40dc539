//! Finite-dimensional task families, evaluation, datasets, and the
//! similarity machinery that transfer baselines compare against.
//!
//! A *task* is a regression target: a scalar function on a closed interval,
//! identified by a coordinate vector within a [`TaskFamily`]. Group elements
//! act on tasks through per-family coordinate rules (see
//! [`TaskFamily::apply_action`]); those rules are exactly the output-space
//! actions of [`crate::groups`], rewritten in coordinates.
//!
//! Similarity here is metric: the root-mean-square gap between two tasks on
//! an evaluation grid, thresholded by an epsilon. Relatedness (same orbit) is
//! a different notion, decided by [`crate::groups::solve_relating`]; the test
//! suites exercise tasks that are related but not similar and vice versa.

use std::f64::consts::PI;
use std::io::Write as IoWrite;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::{GroupElement, GroupFamily};
use crate::numfmt::float17;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("{family} task expects {expected} coordinates, got {got}")]
    CoordLen {
        family: String,
        expected: usize,
        got: usize,
    },
    #[error("sinusoid amplitude must be non-negative in canonical form, got {a}")]
    NegativeAmplitude { a: f64 },
    #[error("input {x} is outside the task domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("tasks belong to different families")]
    FamilyMismatch,
    #[error("domain requires lo < hi, got [{lo}, {hi}]")]
    InvalidDomain { lo: f64, hi: f64 },
    #[error("dataset size must be at least 1")]
    EmptySample,
    #[error("noise level must be non-negative, got {sigma}")]
    NegativeNoise { sigma: f64 },
    #[error("evaluation grid must have at least 1 point")]
    EmptyGrid,
    #[error("similarity threshold must be a non-negative finite number, got {eps}")]
    BadEpsilon { eps: f64 },
    #[error("reference set for nearest-task assignment is empty")]
    EmptyReferences,
    #[error("failed to write dataset: {0}")]
    Io(#[from] std::io::Error),
}

/// Closed interval of valid task inputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Self, TaskError> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(TaskError::InvalidDomain { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }

    /// Membership with a relative slack so grid endpoints computed in
    /// floating point never fall out.
    pub fn contains(&self, x: f64) -> bool {
        let slack = 1e-12 * (1.0 + self.lo.abs().max(self.hi.abs()));
        x >= self.lo - slack && x <= self.hi + slack
    }

    /// `n` evenly spaced points including both endpoints (`n = 1` gives the
    /// left endpoint).
    pub fn grid(&self, n: usize) -> Vec<f64> {
        if n == 0 {
            return Vec::new();
        }
        if n == 1 {
            return vec![self.lo];
        }
        let step = self.span() / (n - 1) as f64;
        (0..n)
            .map(|i| if i == n - 1 { self.hi } else { self.lo + i as f64 * step })
            .collect()
    }
}

/// A parametric family of scalar regression tasks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TaskFamily {
    /// `f(x) = A·sin(ω·x + φ) + c`, coordinates `[A, ω, φ, c]` with the
    /// canonical form `A ≥ 0`.
    Sinusoid { domain: Domain },
    /// `f(x) = Σ cᵢ·xⁱ`, coordinates `[c₀, …, c_{dim−1}]`.
    PolyBasis { dim: usize, domain: Domain },
}

impl TaskFamily {
    /// Sinusoids on `[0, 2π]`.
    pub fn sinusoid() -> Self {
        TaskFamily::Sinusoid {
            domain: Domain { lo: 0.0, hi: 2.0 * PI },
        }
    }

    /// Polynomials of the given coefficient count on `[-1, 1]`. `dim` must
    /// be at least 1.
    pub fn poly_basis(dim: usize) -> Self {
        assert!(dim >= 1, "polynomial family needs at least one coefficient");
        TaskFamily::PolyBasis {
            dim,
            domain: Domain { lo: -1.0, hi: 1.0 },
        }
    }

    pub fn with_domain(self, lo: f64, hi: f64) -> Result<Self, TaskError> {
        let domain = Domain::new(lo, hi)?;
        Ok(match self {
            TaskFamily::Sinusoid { .. } => TaskFamily::Sinusoid { domain },
            TaskFamily::PolyBasis { dim, .. } => TaskFamily::PolyBasis { dim, domain },
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TaskFamily::Sinusoid { .. } => "sinusoid",
            TaskFamily::PolyBasis { .. } => "poly-basis",
        }
    }

    pub fn coord_dim(&self) -> usize {
        match self {
            TaskFamily::Sinusoid { .. } => 4,
            TaskFamily::PolyBasis { dim, .. } => *dim,
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            TaskFamily::Sinusoid { domain } | TaskFamily::PolyBasis { domain, .. } => *domain,
        }
    }

    /// Coordinate form of `elem` acting on a task of this family, or `None`
    /// when the family declares no action for `elem`'s group.
    ///
    /// The returned coordinates are canonical: a negative affine scale on a
    /// sinusoid folds the sign into a phase shift of π so the amplitude
    /// stays non-negative.
    pub fn apply_action(&self, elem: &GroupElement, coords: &[f64]) -> Option<Vec<f64>> {
        match (self, elem.family()) {
            (TaskFamily::Sinusoid { .. }, GroupFamily::Translation) => {
                let a = elem.params()[0];
                let mut out = coords.to_vec();
                out[3] += a;
                Some(out)
            }
            (TaskFamily::Sinusoid { .. }, GroupFamily::Affine) => {
                let (a, b) = (elem.params()[0], elem.params()[1]);
                let (amp, omega, phi, c) = (coords[0], coords[1], coords[2], coords[3]);
                let (amp, phi) = if b >= 0.0 || amp == 0.0 {
                    (b.abs() * amp, phi)
                } else {
                    (b.abs() * amp, wrap_phase(phi + PI))
                };
                Some(vec![amp, omega, phi, b * c + a])
            }
            (TaskFamily::PolyBasis { .. }, GroupFamily::Translation) => {
                let mut out = coords.to_vec();
                out[0] += elem.params()[0];
                Some(out)
            }
            (TaskFamily::PolyBasis { .. }, GroupFamily::Affine) => {
                let (a, b) = (elem.params()[0], elem.params()[1]);
                let mut out: Vec<f64> = coords.iter().map(|c| b * c).collect();
                out[0] += a;
                Some(out)
            }
            (_, GroupFamily::Rotation2D) => None,
        }
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let r = phi.rem_euclid(two_pi);
    if r > PI {
        r - two_pi
    } else {
        r
    }
}

/// One task: a coordinate vector within a family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskPoint {
    family: TaskFamily,
    coords: Vec<f64>,
}

impl TaskPoint {
    pub fn new(family: TaskFamily, coords: Vec<f64>) -> Result<Self, TaskError> {
        if coords.len() != family.coord_dim() {
            return Err(TaskError::CoordLen {
                family: family.name().to_string(),
                expected: family.coord_dim(),
                got: coords.len(),
            });
        }
        if let TaskFamily::Sinusoid { .. } = family {
            if coords[0] < 0.0 {
                return Err(TaskError::NegativeAmplitude { a: coords[0] });
            }
        }
        Ok(Self { family, coords })
    }

    /// Sinusoid `A·sin(ω·x + φ) + c` on the default domain `[0, 2π]`.
    pub fn sinusoid(a: f64, omega: f64, phi: f64, c: f64) -> Result<Self, TaskError> {
        Self::new(TaskFamily::sinusoid(), vec![a, omega, phi, c])
    }

    pub fn family(&self) -> &TaskFamily {
        &self.family
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Evaluates the task function; errors when `x` lies outside the domain.
    pub fn evaluate(&self, x: f64) -> Result<f64, TaskError> {
        let domain = self.family.domain();
        if !domain.contains(x) {
            return Err(TaskError::OutOfDomain {
                x,
                lo: domain.lo,
                hi: domain.hi,
            });
        }
        Ok(match &self.family {
            TaskFamily::Sinusoid { .. } => {
                let [a, omega, phi, c] = [
                    self.coords[0],
                    self.coords[1],
                    self.coords[2],
                    self.coords[3],
                ];
                a * (omega * x + phi).sin() + c
            }
            TaskFamily::PolyBasis { .. } => {
                // Horner evaluation
                self.coords.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
        })
    }

    /// Task values on `n` evenly spaced domain points.
    pub fn grid_values(&self, n: usize) -> Result<Vec<f64>, TaskError> {
        self.family
            .domain()
            .grid(n)
            .into_iter()
            .map(|x| self.evaluate(x))
            .collect()
    }

    /// Draws `n` inputs uniformly from the domain and observes the task with
    /// additive Gaussian noise of standard deviation `noise_sigma`.
    /// Deterministic in `seed`: equal seeds give bit-identical datasets.
    pub fn sample_dataset(
        &self,
        n: usize,
        noise_sigma: f64,
        seed: u64,
    ) -> Result<Dataset, TaskError> {
        if n == 0 {
            return Err(TaskError::EmptySample);
        }
        if noise_sigma < 0.0 {
            return Err(TaskError::NegativeNoise { sigma: noise_sigma });
        }
        let domain = self.family.domain();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let x = domain.lo + domain.span() * rng.random::<f64>();
            let noise: f64 = rng.sample(StandardNormal);
            xs.push(x);
            ys.push(self.evaluate(x)? + noise_sigma * noise);
        }
        Ok(Dataset {
            xs,
            ys,
            noise_sigma,
            seed,
        })
    }
}

/// A regression sample drawn from one task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Writes `x,y` rows with 17 significant digits so values round-trip
    /// exactly.
    pub fn write_csv<W: IoWrite>(&self, w: &mut W) -> Result<(), TaskError> {
        writeln!(w, "x,y")?;
        for (x, y) in self.xs.iter().zip(&self.ys) {
            writeln!(w, "{},{}", float17(*x), float17(*y))?;
        }
        Ok(())
    }
}

/// Root-mean-square gap between two tasks of the same family on an evenly
/// spaced grid of `grid_n` points. A pseudometric on each family: symmetric,
/// triangle inequality, zero iff the tasks agree on the grid.
pub fn task_distance(f: &TaskPoint, g: &TaskPoint, grid_n: usize) -> Result<f64, TaskError> {
    if f.family() != g.family() {
        return Err(TaskError::FamilyMismatch);
    }
    if grid_n == 0 {
        return Err(TaskError::EmptyGrid);
    }
    let mut sum = 0.0;
    for x in f.family().domain().grid(grid_n) {
        let d = f.evaluate(x)? - g.evaluate(x)?;
        sum += d * d;
    }
    Ok((sum / grid_n as f64).sqrt())
}

/// Whether two tasks lie within `eps` of each other in [`task_distance`].
pub fn similar(f: &TaskPoint, g: &TaskPoint, eps: f64, grid_n: usize) -> Result<bool, TaskError> {
    if !eps.is_finite() || eps < 0.0 {
        return Err(TaskError::BadEpsilon { eps });
    }
    Ok(task_distance(f, g, grid_n)? <= eps)
}

/// Index of the reference task nearest to `target` in [`task_distance`];
/// ties break toward the lowest index. This is the cell assignment of the
/// tessellation that nearest-reference transfer schemes rely on.
pub fn voronoi_assign(
    target: &TaskPoint,
    references: &[TaskPoint],
    grid_n: usize,
) -> Result<usize, TaskError> {
    if references.is_empty() {
        return Err(TaskError::EmptyReferences);
    }
    let mut best = 0;
    let mut best_dist = task_distance(target, &references[0], grid_n)?;
    for (i, r) in references.iter().enumerate().skip(1) {
        let d = task_distance(target, r, grid_n)?;
        if d < best_dist {
            best = i;
            best_dist = d;
        }
    }
    Ok(best)
}
