//! Charts, atlases, leaves, and numerical checks for foliated structure.
//!
//! A foliation of a `d`-dimensional space splits it into `n`-dimensional
//! leaves stacked along `m = d − n` transverse directions. A [`Chart`] makes
//! the split explicit: it maps its region to pairs `(x, y)` where `x` holds
//! the `m` transverse coordinates (constant along each leaf) and `y` holds
//! the `n` leaf coordinates (free along it). Within one chart a leaf slice is
//! labeled by `x` alone, which is what [`leaf_of`] returns.
//!
//! Whether two overlapping charts describe the *same* foliation is a
//! numerical question: the transverse part of the transition map between
//! them must not depend on the leaf coordinates.
//! [`check_foliated_transition`] estimates that dependence with central
//! finite differences and reports the worst derivative entry found.
//!
//! The [`catalog`] constructors supply ready-made atlases: polar coordinates
//! on the punctured plane (leaves are circles), a deliberately broken pair
//! that fails the transition check, and orbit foliations of the task
//! families where leaves are group orbits of the identity component.
//!
//! Counting dial: a `k`-dimensional invariant quantity on a `d`-dimensional
//! space with `n`-dimensional leaves satisfies `k = d − n`
//! ([`invariant_count`]); [`check_invariance`] verifies candidate quantities
//! against sampled group elements.

mod catalog;
mod chart;
mod checks;

pub use catalog::{
    defect_chart_pair, orbit_foliation, polar_atlas, poly_ratios_quantity, poly_tail_quantity,
    radius_quantity, sinusoid_profile_quantity, sinusoid_shape_quantity,
};
pub use chart::{leaf_of, same_leaf, transition, Atlas, Chart, ChartCoords, Leaf};
pub use checks::{
    check_atlas, check_chart_roundtrip, check_foliated_transition, check_invariance, ActedSpace,
    CheckReport, InvariantQuantity,
};

use thiserror::Error;

use crate::groups::{GroupError, GroupFamily};

#[derive(Debug, Error)]
pub enum FoliationError {
    #[error("chart {chart}: point lies outside the chart region")]
    OutsideRegion { chart: String },
    #[error("chart {chart}: expected {expected} coordinates, got {got}")]
    PointDim {
        chart: String,
        expected: usize,
        got: usize,
    },
    #[error("transition {from} -> {to}: point is not in the chart overlap")]
    NotInOverlap { from: String, to: String },
    #[error("leaf dimension {n} exceeds space dimension {d}")]
    CountExceedsDim { d: usize, n: usize },
    #[error("dimension mismatch: {what}")]
    DimMismatch { what: String },
    #[error("no catalog foliation for {group} acting on {family} tasks")]
    NoCatalogAtlas { group: GroupFamily, family: String },
    #[error("atlas {id} has no charts")]
    EmptyAtlas { id: String },
    #[error("chart construction: {0}")]
    BadChart(String),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Number of independent invariant coordinates a foliation admits: on a
/// `d`-dimensional space with `n`-dimensional leaves, `k = d − n`.
pub fn invariant_count(d: usize, n: usize) -> Result<usize, FoliationError> {
    if n > d {
        return Err(FoliationError::CountExceedsDim { d, n });
    }
    Ok(d - n)
}
