//! Chart and atlas types plus the leaf-labeling operations.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::FoliationError;

type RegionFn = dyn Fn(&[f64]) -> bool + Send + Sync;
type ForwardFn = dyn Fn(&[f64]) -> ChartCoords + Send + Sync;
type BackwardFn = dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync;

/// Split image of a point under a chart: `transverse` has the chart's `m`
/// leaf-labeling coordinates, `leaf` the `n` within-leaf coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartCoords {
    pub transverse: Vec<f64>,
    pub leaf: Vec<f64>,
}

/// A foliated chart on a region of `R^d`: a bijection between the region and
/// a product of transverse (`m`) and leaf (`n`) coordinates, `d = m + n`.
///
/// `sample_box` bounds an axis-aligned box that the numerical checks draw
/// candidate points from (rejection-sampled against the region).
pub struct Chart {
    id: String,
    d: usize,
    m: usize,
    n: usize,
    region: Box<RegionFn>,
    forward: Box<ForwardFn>,
    backward: Box<BackwardFn>,
    sample_box: Vec<(f64, f64)>,
}

impl Chart {
    pub fn new(
        id: impl Into<String>,
        d: usize,
        m: usize,
        n: usize,
        region: Box<RegionFn>,
        forward: Box<ForwardFn>,
        backward: Box<BackwardFn>,
        sample_box: Vec<(f64, f64)>,
    ) -> Result<Self, FoliationError> {
        let id = id.into();
        if m + n != d {
            return Err(FoliationError::BadChart(format!(
                "{id}: m + n = {} does not match d = {d}",
                m + n
            )));
        }
        if sample_box.len() != d {
            return Err(FoliationError::BadChart(format!(
                "{id}: sample box has {} sides, expected {d}",
                sample_box.len()
            )));
        }
        if sample_box.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(FoliationError::BadChart(format!(
                "{id}: sample box sides must have lo < hi"
            )));
        }
        Ok(Self {
            id,
            d,
            m,
            n,
            region,
            forward,
            backward,
            sample_box,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// `(d, m, n)`: ambient, transverse, and leaf dimensions.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.d, self.m, self.n)
    }

    pub fn sample_box(&self) -> &[(f64, f64)] {
        &self.sample_box
    }

    /// Whether the chart is defined at `p`.
    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.d && (self.region)(p)
    }

    /// Forward chart map; errors outside the region.
    pub fn apply(&self, p: &[f64]) -> Result<ChartCoords, FoliationError> {
        if p.len() != self.d {
            return Err(FoliationError::PointDim {
                chart: self.id.clone(),
                expected: self.d,
                got: p.len(),
            });
        }
        if !(self.region)(p) {
            return Err(FoliationError::OutsideRegion {
                chart: self.id.clone(),
            });
        }
        let out = (self.forward)(p);
        if out.transverse.len() != self.m || out.leaf.len() != self.n {
            return Err(FoliationError::BadChart(format!(
                "{}: forward map produced ({}, {}) coordinates, expected ({}, {})",
                self.id,
                out.transverse.len(),
                out.leaf.len(),
                self.m,
                self.n
            )));
        }
        Ok(out)
    }

    /// Inverse chart map from split coordinates back to the ambient space.
    pub fn invert(&self, transverse: &[f64], leaf: &[f64]) -> Result<Vec<f64>, FoliationError> {
        if transverse.len() != self.m {
            return Err(FoliationError::PointDim {
                chart: self.id.clone(),
                expected: self.m,
                got: transverse.len(),
            });
        }
        if leaf.len() != self.n {
            return Err(FoliationError::PointDim {
                chart: self.id.clone(),
                expected: self.n,
                got: leaf.len(),
            });
        }
        let p = (self.backward)(transverse, leaf);
        if p.len() != self.d {
            return Err(FoliationError::BadChart(format!(
                "{}: backward map produced {} coordinates, expected {}",
                self.id,
                p.len(),
                self.d
            )));
        }
        Ok(p)
    }
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("id", &self.id)
            .field("d", &self.d)
            .field("m", &self.m)
            .field("n", &self.n)
            .finish()
    }
}

/// Chart-to-chart coordinate change: interprets `coords` in `from`, maps the
/// underlying point through `to`. Both charts must contain the point.
pub fn transition(
    from: &Chart,
    to: &Chart,
    coords: &ChartCoords,
) -> Result<ChartCoords, FoliationError> {
    let p = from.invert(&coords.transverse, &coords.leaf)?;
    if !from.contains(&p) || !to.contains(&p) {
        return Err(FoliationError::NotInOverlap {
            from: from.id().to_string(),
            to: to.id().to_string(),
        });
    }
    to.apply(&p)
}

/// Label of the leaf slice through `p` as seen by one chart: the chart id
/// plus the transverse coordinates, compared up to `tol`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub chart_id: String,
    pub transverse: Vec<f64>,
    pub tol: f64,
}

impl Leaf {
    /// Whether two labels name the same slice: same chart, transverse
    /// coordinates within the larger of the two tolerances.
    pub fn matches(&self, other: &Leaf) -> bool {
        if self.chart_id != other.chart_id || self.transverse.len() != other.transverse.len() {
            return false;
        }
        let tol = self.tol.max(other.tol);
        self.transverse
            .iter()
            .zip(&other.transverse)
            .all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// The leaf slice through `p` in `chart`.
pub fn leaf_of(chart: &Chart, p: &[f64], tol: f64) -> Result<Leaf, FoliationError> {
    let coords = chart.apply(p)?;
    Ok(Leaf {
        chart_id: chart.id().to_string(),
        transverse: coords.transverse,
        tol,
    })
}

/// Whether `p` and `q` lie on the same leaf slice of `chart`, up to `tol` in
/// the transverse coordinates.
pub fn same_leaf(chart: &Chart, p: &[f64], q: &[f64], tol: f64) -> Result<bool, FoliationError> {
    Ok(leaf_of(chart, p, tol)?.matches(&leaf_of(chart, q, tol)?))
}

/// A collection of charts presenting one foliation. All charts must share
/// the same `(d, m, n)` dimensions.
#[derive(Debug)]
pub struct Atlas {
    id: String,
    charts: Vec<Chart>,
}

impl Atlas {
    pub fn new(id: impl Into<String>, charts: Vec<Chart>) -> Result<Self, FoliationError> {
        let id = id.into();
        if charts.is_empty() {
            return Err(FoliationError::EmptyAtlas { id });
        }
        let dims = charts[0].dims();
        for c in &charts[1..] {
            if c.dims() != dims {
                return Err(FoliationError::BadChart(format!(
                    "atlas {id}: chart {} has dimensions {:?}, expected {:?}",
                    c.id(),
                    c.dims(),
                    dims
                )));
            }
        }
        Ok(Self { id, charts })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    /// `(d, m, n)` shared by every chart.
    pub fn dims(&self) -> (usize, usize, usize) {
        self.charts[0].dims()
    }

    /// First chart whose region contains `p`.
    pub fn find_chart(&self, p: &[f64]) -> Option<&Chart> {
        self.charts.iter().find(|c| c.contains(p))
    }

    /// Leaf slice through `p` in the first covering chart.
    pub fn leaf_of(&self, p: &[f64], tol: f64) -> Result<Leaf, FoliationError> {
        let chart = self.find_chart(p).ok_or_else(|| FoliationError::OutsideRegion {
            chart: self.id.clone(),
        })?;
        leaf_of(chart, p, tol)
    }
}
