//! Parameterized transformation groups, their algebra, and their actions on
//! tasks.
//!
//! Three families are supported:
//!
//! * `Translation`: vertical shifts of a task's outputs, `y ↦ y + a`.
//! * `Affine`: invertible affine output maps, `y ↦ b·y + a` with `b ≠ 0`.
//! * `Rotation2D`: rotations of plane points about the origin.
//!
//! Two tasks are *related* when some element of the chosen family maps one
//! onto the other; [`solve_relating`] decides this by least squares on a
//! sample grid followed by a residual check, so it also works on tasks that
//! are only available through noisy evaluation.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taskspace::{TaskError, TaskPoint};

/// Smallest |b| accepted for an affine element; below this the map is
/// treated as non-invertible.
pub const MIN_AFFINE_SCALE: f64 = 1e-12;

/// Variance threshold under which a task is considered constant on the grid,
/// making the affine scale unidentifiable.
const DEGENERATE_VARIANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("family mismatch: {left} vs {right}")]
    FamilyMismatch { left: GroupFamily, right: GroupFamily },
    #[error("{family} element expects {expected} parameters, got {got}")]
    ParamLen {
        family: GroupFamily,
        expected: usize,
        got: usize,
    },
    #[error("affine element with |b| <= {MIN_AFFINE_SCALE:.0e} is not invertible (b = {b})")]
    NonInvertible { b: f64 },
    #[error("{op} is not defined for {family} elements")]
    WrongFamily {
        op: &'static str,
        family: GroupFamily,
    },
    #[error("{family} has no declared action on the {task_family} task family")]
    NoActionRule {
        family: GroupFamily,
        task_family: String,
    },
    #[error("relating solver needs at least {need} grid points, got {got}")]
    GridTooSmall { need: usize, got: usize },
    #[error(transparent)]
    Task(#[from] TaskError),
}

/// The transformation families known to the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupFamily {
    Translation,
    Affine,
    #[serde(rename = "rotation-2d")]
    Rotation2D,
}

impl GroupFamily {
    /// Dimension of the parameter vector of an element of this family.
    pub fn param_dim(&self) -> usize {
        match self {
            GroupFamily::Translation => 1,
            GroupFamily::Affine => 2,
            GroupFamily::Rotation2D => 1,
        }
    }

    /// Draws a random element with parameters in a tame range; affine scales
    /// take either sign.
    pub fn sample_element<R: Rng>(&self, rng: &mut R) -> GroupElement {
        match self {
            GroupFamily::Translation => {
                GroupElement::translation(-3.0 + 6.0 * rng.random::<f64>())
            }
            GroupFamily::Affine => {
                let a = -3.0 + 6.0 * rng.random::<f64>();
                let mag = 0.25 + 3.75 * rng.random::<f64>();
                let b = if rng.random::<f64>() < 0.5 { mag } else { -mag };
                GroupElement::affine(a, b).expect("sampled scale is bounded away from zero")
            }
            GroupFamily::Rotation2D => {
                let theta = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * rng.random::<f64>();
                GroupElement::rotation(theta)
            }
        }
    }

    /// Like [`sample_element`](Self::sample_element) but restricted to the
    /// connected component of the identity (affine scales are positive).
    /// Orbits of this component are exactly the leaves of the catalog
    /// foliations, so leaf-preservation checks sample from it.
    pub fn sample_identity_component<R: Rng>(&self, rng: &mut R) -> GroupElement {
        match self {
            GroupFamily::Affine => {
                let a = -3.0 + 6.0 * rng.random::<f64>();
                let b = 0.25 + 3.75 * rng.random::<f64>();
                GroupElement::affine(a, b).expect("sampled scale is bounded away from zero")
            }
            _ => self.sample_element(rng),
        }
    }
}

impl fmt::Display for GroupFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GroupFamily::Translation => "translation",
            GroupFamily::Affine => "affine",
            GroupFamily::Rotation2D => "rotation-2d",
        };
        f.write_str(s)
    }
}

impl FromStr for GroupFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "translation" => Ok(GroupFamily::Translation),
            "affine" => Ok(GroupFamily::Affine),
            "rotation-2d" | "rotation2d" | "rotation" => Ok(GroupFamily::Rotation2D),
            other => Err(format!(
                "unknown group family `{other}` (expected translation, affine, or rotation-2d)"
            )),
        }
    }
}

/// One transformation from a [`GroupFamily`].
///
/// Parameter layout: Translation `[a]`, Affine `[a, b]` (shift first, then
/// scale), Rotation2D `[angle]` in radians.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupElement {
    family: GroupFamily,
    params: Vec<f64>,
}

impl GroupElement {
    pub fn new(family: GroupFamily, params: Vec<f64>) -> Result<Self, GroupError> {
        if params.len() != family.param_dim() {
            return Err(GroupError::ParamLen {
                family,
                expected: family.param_dim(),
                got: params.len(),
            });
        }
        if family == GroupFamily::Affine && params[1].abs() <= MIN_AFFINE_SCALE {
            return Err(GroupError::NonInvertible { b: params[1] });
        }
        Ok(Self { family, params })
    }

    pub fn translation(a: f64) -> Self {
        Self {
            family: GroupFamily::Translation,
            params: vec![a],
        }
    }

    pub fn affine(a: f64, b: f64) -> Result<Self, GroupError> {
        Self::new(GroupFamily::Affine, vec![a, b])
    }

    pub fn rotation(angle: f64) -> Self {
        Self {
            family: GroupFamily::Rotation2D,
            params: vec![angle],
        }
    }

    /// The element that leaves every task unchanged.
    pub fn identity(family: GroupFamily) -> Self {
        match family {
            GroupFamily::Translation => Self::translation(0.0),
            GroupFamily::Affine => Self::affine(0.0, 1.0).expect("b = 1 is invertible"),
            GroupFamily::Rotation2D => Self::rotation(0.0),
        }
    }

    pub fn family(&self) -> GroupFamily {
        self.family
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Composition `self ∘ inner`: `inner` acts first, `self` after.
    pub fn compose(&self, inner: &GroupElement) -> Result<GroupElement, GroupError> {
        if self.family != inner.family {
            return Err(GroupError::FamilyMismatch {
                left: self.family,
                right: inner.family,
            });
        }
        match self.family {
            GroupFamily::Translation => Ok(Self::translation(self.params[0] + inner.params[0])),
            GroupFamily::Affine => {
                // b1(b2 y + a2) + a1 = (b1 b2) y + (a1 + b1 a2)
                let (a1, b1) = (self.params[0], self.params[1]);
                let (a2, b2) = (inner.params[0], inner.params[1]);
                Self::affine(a1 + b1 * a2, b1 * b2)
            }
            GroupFamily::Rotation2D => Ok(Self::rotation(self.params[0] + inner.params[0])),
        }
    }

    pub fn inverse(&self) -> GroupElement {
        match self.family {
            GroupFamily::Translation => Self::translation(-self.params[0]),
            GroupFamily::Affine => {
                let (a, b) = (self.params[0], self.params[1]);
                // construction guarantees |b| > MIN_AFFINE_SCALE, and 1/b
                // stays finite, so this cannot fail
                Self::affine(-a / b, 1.0 / b).expect("inverse of an invertible affine map")
            }
            GroupFamily::Rotation2D => Self::rotation(-self.params[0]),
        }
    }

    /// Applies the output-space action to a single value: `a + y` for
    /// translations, `b·y + a` for affine maps.
    pub fn act_pointwise(&self, y: f64) -> Result<f64, GroupError> {
        match self.family {
            GroupFamily::Translation => Ok(y + self.params[0]),
            GroupFamily::Affine => Ok(self.params[1] * y + self.params[0]),
            GroupFamily::Rotation2D => Err(GroupError::WrongFamily {
                op: "act_pointwise",
                family: self.family,
            }),
        }
    }

    /// Rotates a plane point about the origin. Norm-preserving.
    pub fn act_point2d(&self, p: [f64; 2]) -> Result<[f64; 2], GroupError> {
        match self.family {
            GroupFamily::Rotation2D => {
                let (s, c) = self.params[0].sin_cos();
                Ok([c * p[0] - s * p[1], s * p[0] + c * p[1]])
            }
            _ => Err(GroupError::WrongFamily {
                op: "act_point2d",
                family: self.family,
            }),
        }
    }

    /// Transforms a task by acting on its coordinates, using the coordinate
    /// action rule declared by the task family. Pointwise this agrees with
    /// [`act_pointwise`](Self::act_pointwise) applied to the task's outputs.
    pub fn act_on_task(&self, f: &TaskPoint) -> Result<TaskPoint, GroupError> {
        let coords = f
            .family()
            .apply_action(self, f.coords())
            .ok_or_else(|| GroupError::NoActionRule {
                family: self.family,
                task_family: f.family().name().to_string(),
            })?;
        TaskPoint::new(f.family().clone(), coords).map_err(GroupError::from)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            GroupFamily::Translation => write!(f, "translation(a={})", self.params[0]),
            GroupFamily::Affine => {
                write!(f, "affine(a={}, b={})", self.params[0], self.params[1])
            }
            GroupFamily::Rotation2D => write!(f, "rotation(angle={})", self.params[0]),
        }
    }
}

/// Result of a relatedness query.
#[derive(Clone, Debug)]
pub enum RelateOutcome {
    /// A relating element was found with grid residual within tolerance.
    Related(GroupElement),
    /// The best-fitting element leaves a residual above tolerance.
    NotRelated { residual: f64 },
    /// The fit is degenerate: the source task is constant on the grid, so
    /// the affine scale is unidentifiable.
    Degenerate,
}

impl RelateOutcome {
    pub fn element(&self) -> Option<&GroupElement> {
        match self {
            RelateOutcome::Related(e) => Some(e),
            _ => None,
        }
    }

    pub fn is_related(&self) -> bool {
        matches!(self, RelateOutcome::Related(_))
    }
}

/// Maximum pointwise residual of `elem` mapping `f` onto `g` over `grid`.
pub fn relating_residual(
    elem: &GroupElement,
    f: &TaskPoint,
    g: &TaskPoint,
    grid: &[f64],
) -> Result<f64, GroupError> {
    let mut max_resid: f64 = 0.0;
    for &x in grid {
        let mapped = elem.act_pointwise(f.evaluate(x)?)?;
        max_resid = max_resid.max((mapped - g.evaluate(x)?).abs());
    }
    Ok(max_resid)
}

/// Decides whether `g` is related to `f` under `family` by recovering the
/// relating element on the grid.
///
/// Translation: the shift is the mean of `g − f`. Affine: `(b, a)` come from
/// simple linear least squares on the value pairs `(f(x), g(x))`. Either way
/// the candidate is accepted only if the maximum grid residual is within
/// `tol`.
pub fn solve_relating(
    f: &TaskPoint,
    g: &TaskPoint,
    family: GroupFamily,
    grid: &[f64],
    tol: f64,
) -> Result<RelateOutcome, GroupError> {
    let need = family.param_dim() + 1;
    if grid.len() < need {
        return Err(GroupError::GridTooSmall {
            need,
            got: grid.len(),
        });
    }
    let candidate = match family {
        GroupFamily::Translation => {
            let mut sum = 0.0;
            for &x in grid {
                sum += g.evaluate(x)? - f.evaluate(x)?;
            }
            GroupElement::translation(sum / grid.len() as f64)
        }
        GroupFamily::Affine => {
            let n = grid.len() as f64;
            let mut us = Vec::with_capacity(grid.len());
            let mut vs = Vec::with_capacity(grid.len());
            for &x in grid {
                us.push(f.evaluate(x)?);
                vs.push(g.evaluate(x)?);
            }
            let um = us.iter().sum::<f64>() / n;
            let vm = vs.iter().sum::<f64>() / n;
            let sxx: f64 = us.iter().map(|u| (u - um) * (u - um)).sum();
            if sxx / n <= DEGENERATE_VARIANCE {
                return Ok(RelateOutcome::Degenerate);
            }
            let sxy: f64 = us.iter().zip(&vs).map(|(u, v)| (u - um) * (v - vm)).sum();
            let b = sxy / sxx;
            let a = vm - b * um;
            if b.abs() <= MIN_AFFINE_SCALE {
                // the best linear fit collapses the outputs; no group element
                // (b != 0) realizes it
                let residual = us
                    .iter()
                    .zip(&vs)
                    .map(|(u, v)| (b * u + a - v).abs())
                    .fold(0.0_f64, f64::max);
                return Ok(RelateOutcome::NotRelated { residual });
            }
            GroupElement::affine(a, b)?
        }
        GroupFamily::Rotation2D => {
            return Err(GroupError::WrongFamily {
                op: "solve_relating",
                family,
            })
        }
    };
    let residual = relating_residual(&candidate, f, g, grid)?;
    if residual <= tol {
        Ok(RelateOutcome::Related(candidate))
    } else {
        Ok(RelateOutcome::NotRelated { residual })
    }
}

/// The orbit of `f` sampled at the given parameter vectors: element `i` of
/// the output is `element(param_grid[i])` applied to `f`.
pub fn orbit_grid(
    f: &TaskPoint,
    family: GroupFamily,
    param_grid: &[Vec<f64>],
) -> Result<Vec<TaskPoint>, GroupError> {
    param_grid
        .iter()
        .map(|params| {
            let elem = GroupElement::new(family, params.clone())?;
            elem.act_on_task(f)
        })
        .collect()
}
