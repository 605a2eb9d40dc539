//! Transformation groups on task spaces, the foliations their orbits induce,
//! and transfer learning by searching only along a leaf.
//!
//! The crate is organized around a simple pipeline:
//!
//! * [`groups`]: parameterized transformation families (vertical shifts,
//!   affine output maps, plane rotations), their group algebra, and solvers
//!   that decide whether two tasks are related by recovering the relating
//!   element.
//! * [`taskspace`]: finite-dimensional task families (sinusoids, polynomial
//!   bases), noisy dataset generation, and an RMS task metric used for
//!   similarity and nearest-reference assignment.
//! * [`foliation`]: charts, atlases, leaves, invariant quantities, and
//!   numerical checks for the foliated transition condition.
//! * [`learning`]: linear-in-parameters model spaces partitioned into
//!   invariant and leaf coefficient blocks, with scratch, leaf-constrained,
//!   and multi-task (shared-block) fitting, plus equivariance checks of the
//!   least-squares learner.
//! * [`pendulum`]: the motivating dynamics family: RK4 simulation and
//!   angular-acceleration regression datasets over (mass, length).
//! * [`harness`]: seeded, reproducible transfer experiments comparing
//!   from-scratch fitting, leaf-constrained fitting, and similarity
//!   warm-starts, with JSON/CSV/SVG reports.

pub mod foliation;
pub mod groups;
pub mod harness;
pub mod learning;
pub mod pendulum;
pub mod taskspace;

pub(crate) mod numfmt;
