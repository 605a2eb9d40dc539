//! Sampled numerical checks: chart round-trips, the foliated-transition
//! condition, and invariance of candidate quantities under group actions.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::chart::{Atlas, Chart};
use super::FoliationError;
use crate::groups::{GroupError, GroupFamily};
use crate::taskspace::TaskFamily;

/// Machine-readable outcome of one sampled check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    /// Stable name identifying what was checked.
    pub check: String,
    pub pass: bool,
    /// Worst violation seen across all effective samples.
    pub max_violation: f64,
    /// Number of effective samples (drawn points that satisfied the check's
    /// preconditions).
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    /// Present when the check could not run as intended, e.g. no sampled
    /// point landed in a chart overlap.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl CheckReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("check report serializes")
    }
}

fn sample_in_chart<R: Rng>(chart: &Chart, rng: &mut R) -> Option<Vec<f64>> {
    let p: Vec<f64> = chart
        .sample_box()
        .iter()
        .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
        .collect();
    chart.contains(&p).then_some(p)
}

fn inf_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Verifies that `backward ∘ forward` is the identity on sampled region
/// points, and `forward ∘ backward` the identity on their images.
pub fn check_chart_roundtrip(chart: &Chart, samples: usize, tol: f64, seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = 0;
    let mut max_violation: f64 = 0.0;
    let mut attempts = 0;
    let max_attempts = samples.saturating_mul(200).max(1000);
    while used < samples && attempts < max_attempts {
        attempts += 1;
        let Some(p) = sample_in_chart(chart, &mut rng) else {
            continue;
        };
        let Ok(coords) = chart.apply(&p) else { continue };
        let Ok(back) = chart.invert(&coords.transverse, &coords.leaf) else {
            continue;
        };
        max_violation = max_violation.max(inf_diff(&p, &back));
        // second leg only when rounding kept the reconstruction inside
        if chart.contains(&back) {
            if let Ok(again) = chart.apply(&back) {
                max_violation = max_violation
                    .max(inf_diff(&coords.transverse, &again.transverse))
                    .max(inf_diff(&coords.leaf, &again.leaf));
            }
        }
        used += 1;
    }
    let note = (used == 0).then(|| "no sample landed in the chart region".to_string());
    CheckReport {
        check: format!("roundtrip {}", chart.id()),
        pass: used > 0 && max_violation <= tol,
        max_violation,
        samples: used,
        tol,
        seed,
        note,
    }
}

/// Checks the foliated-transition condition between two charts: on overlap
/// points, the transverse output of `b` must not move when the leaf
/// coordinates of `a` are perturbed. Derivatives are estimated with central
/// differences of half-width `step`; samples whose perturbed points leave
/// the overlap are discarded.
///
/// A passing report over many samples is evidence the two charts foliate
/// consistently; `max_violation` near a constant (as with a sheared copy of
/// an identity chart) measures a genuine leaf dependence.
pub fn check_foliated_transition(
    a: &Chart,
    b: &Chart,
    samples: usize,
    step: f64,
    tol: f64,
    seed: u64,
) -> Result<CheckReport, FoliationError> {
    if a.dims().0 != b.dims().0 {
        return Err(FoliationError::DimMismatch {
            what: format!(
                "charts {} (d = {}) and {} (d = {})",
                a.id(),
                a.dims().0,
                b.id(),
                b.dims().0
            ),
        });
    }
    let (_, m_b, _) = b.dims();
    let (_, _, n_a) = a.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = 0;
    let mut in_overlap = 0usize;
    let mut attempts = 0;
    let max_attempts = samples.saturating_mul(400).max(2000);
    let mut max_violation: f64 = 0.0;
    while used < samples && attempts < max_attempts {
        attempts += 1;
        let Some(p) = sample_in_chart(a, &mut rng) else {
            continue;
        };
        if !b.contains(&p) {
            continue;
        }
        in_overlap += 1;
        let coords = a.apply(&p)?;
        let mut sample_ok = true;
        let mut local_max: f64 = 0.0;
        for j in 0..n_a {
            let mut y_plus = coords.leaf.clone();
            let mut y_minus = coords.leaf.clone();
            y_plus[j] += step;
            y_minus[j] -= step;
            let p_plus = a.invert(&coords.transverse, &y_plus)?;
            let p_minus = a.invert(&coords.transverse, &y_minus)?;
            if !a.contains(&p_plus)
                || !b.contains(&p_plus)
                || !a.contains(&p_minus)
                || !b.contains(&p_minus)
            {
                sample_ok = false;
                break;
            }
            let x_plus = b.apply(&p_plus)?.transverse;
            let x_minus = b.apply(&p_minus)?.transverse;
            for i in 0..m_b {
                let deriv = (x_plus[i] - x_minus[i]) / (2.0 * step);
                local_max = local_max.max(deriv.abs());
            }
        }
        if !sample_ok {
            continue;
        }
        used += 1;
        max_violation = max_violation.max(local_max);
    }
    // Vacuous pairs (no overlap at all) pass: the condition restricts
    // nothing there. Pairs whose overlap was seen but never admitted the
    // finite-difference stencil stay failed so a thin overlap cannot
    // silently count as verified.
    let (pass, note) = if used > 0 {
        (max_violation <= tol, None)
    } else if in_overlap == 0 {
        (
            true,
            Some("no overlap found within the sampling budget; condition holds vacuously".to_string()),
        )
    } else {
        (
            false,
            Some("overlap sampled but no point admitted the finite-difference stencil".to_string()),
        )
    };
    Ok(CheckReport {
        check: format!("foliated-transition {} -> {}", a.id(), b.id()),
        pass,
        max_violation,
        samples: used,
        tol,
        seed,
        note,
    })
}

/// Runs the round-trip check on every chart and the transition check on
/// every ordered pair of distinct charts.
pub fn check_atlas(
    atlas: &Atlas,
    samples: usize,
    step: f64,
    tol: f64,
    seed: u64,
) -> Result<Vec<CheckReport>, FoliationError> {
    let mut reports = Vec::new();
    for (i, c) in atlas.charts().iter().enumerate() {
        reports.push(check_chart_roundtrip(c, samples, tol, seed.wrapping_add(i as u64)));
    }
    for (i, a) in atlas.charts().iter().enumerate() {
        for (j, b) in atlas.charts().iter().enumerate() {
            if i == j {
                continue;
            }
            let pair_seed = seed.wrapping_add(1000 + (i * atlas.charts().len() + j) as u64);
            reports.push(check_foliated_transition(a, b, samples, step, tol, pair_seed)?);
        }
    }
    Ok(reports)
}

/// A candidate invariant: `k` scalar functions of a `d`-dimensional point
/// that should be constant along every orbit.
pub struct InvariantQuantity {
    name: String,
    input_dim: usize,
    k: usize,
    eval: Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl InvariantQuantity {
    pub fn new(
        name: impl Into<String>,
        input_dim: usize,
        k: usize,
        eval: Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    ) -> Self {
        Self {
            name: name.into(),
            input_dim,
            k,
            eval,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of scalar components.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>, FoliationError> {
        if p.len() != self.input_dim {
            return Err(FoliationError::PointDim {
                chart: self.name.clone(),
                expected: self.input_dim,
                got: p.len(),
            });
        }
        let out = (self.eval)(p);
        if out.len() != self.k {
            return Err(FoliationError::BadChart(format!(
                "{}: quantity produced {} components, expected {}",
                self.name,
                out.len(),
                self.k
            )));
        }
        Ok(out)
    }
}

impl std::fmt::Debug for InvariantQuantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InvariantQuantity")
            .field("name", &self.name)
            .field("input_dim", &self.input_dim)
            .field("k", &self.k)
            .finish()
    }
}

/// The space a group acts on during an invariance check, with a sampling
/// rule for representative points.
#[derive(Clone, Debug)]
pub enum ActedSpace {
    /// Plane points in a centered box, acted on by rotations.
    Plane { half_extent: f64 },
    /// Task coordinate vectors, acted on through the family's rules.
    Tasks { family: TaskFamily },
}

impl ActedSpace {
    pub fn plane() -> Self {
        ActedSpace::Plane { half_extent: 3.0 }
    }

    pub fn tasks(family: TaskFamily) -> Self {
        ActedSpace::Tasks { family }
    }

    pub fn point_dim(&self) -> usize {
        match self {
            ActedSpace::Plane { .. } => 2,
            ActedSpace::Tasks { family } => family.coord_dim(),
        }
    }

    /// Draws a point away from degenerate strata (zero amplitude, zero
    /// leading coefficient) so quantities built on ratios stay defined.
    fn sample_point<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            ActedSpace::Plane { half_extent } => {
                let h = *half_extent;
                vec![-h + 2.0 * h * rng.random::<f64>(), -h + 2.0 * h * rng.random::<f64>()]
            }
            ActedSpace::Tasks { family } => match family {
                TaskFamily::Sinusoid { .. } => vec![
                    0.2 + 2.8 * rng.random::<f64>(),
                    0.3 + 2.7 * rng.random::<f64>(),
                    -3.0 + 6.0 * rng.random::<f64>(),
                    -3.0 + 6.0 * rng.random::<f64>(),
                ],
                TaskFamily::PolyBasis { dim, .. } => {
                    let mut p: Vec<f64> =
                        (0..*dim).map(|_| -3.0 + 6.0 * rng.random::<f64>()).collect();
                    if *dim >= 2 {
                        let mag = 0.2 + 2.8 * rng.random::<f64>();
                        p[1] = if rng.random::<f64>() < 0.5 { mag } else { -mag };
                    }
                    p
                }
            },
        }
    }

    fn act(
        &self,
        elem: &crate::groups::GroupElement,
        p: &[f64],
    ) -> Result<Vec<f64>, FoliationError> {
        match self {
            ActedSpace::Plane { .. } => {
                let q = elem.act_point2d([p[0], p[1]])?;
                Ok(q.to_vec())
            }
            ActedSpace::Tasks { family } => family.apply_action(elem, p).ok_or_else(|| {
                FoliationError::Group(GroupError::NoActionRule {
                    family: elem.family(),
                    task_family: family.name().to_string(),
                })
            }),
        }
    }
}

/// Verifies that `q` is constant along orbits: for sampled points `p` and
/// identity-component elements `g`, compares `q(p)` with `q(g·p)` in the
/// max norm.
pub fn check_invariance(
    q: &InvariantQuantity,
    group: GroupFamily,
    space: &ActedSpace,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<CheckReport, FoliationError> {
    if q.input_dim() != space.point_dim() {
        return Err(FoliationError::DimMismatch {
            what: format!(
                "quantity {} expects dimension {}, space has {}",
                q.name(),
                q.input_dim(),
                space.point_dim()
            ),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_violation: f64 = 0.0;
    for _ in 0..samples {
        let p = space.sample_point(&mut rng);
        let elem = group.sample_identity_component(&mut rng);
        let moved = space.act(&elem, &p)?;
        let before = q.eval(&p)?;
        let after = q.eval(&moved)?;
        max_violation = max_violation.max(inf_diff(&before, &after));
    }
    Ok(CheckReport {
        check: format!("invariance {} under {}", q.name(), group),
        pass: samples > 0 && max_violation <= tol,
        max_violation,
        samples,
        tol,
        seed,
        note: None,
    })
}
