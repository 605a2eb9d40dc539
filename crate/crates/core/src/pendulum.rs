//! Damped pendulum dynamics: simulation, dynamics datasets, and the
//! reduction of a pendulum to a task point.
//!
//! The state is `(θ, ω)` with `θ̇ = ω` and
//! `ω̇ = −(g/l)·sin θ − (γ/(m·l²))·ω`. As a regression task the target is
//! `ω̇` as a function of the state, so a pendulum collapses to two effective
//! coordinates `(c_grav, c_damp) = (g/l, γ/(m·l²))`: pendulums with
//! different masses, lengths, and damping but equal effective coordinates
//! are the *same* task. [`pendulum_model_space`] fixes a five-feature basis
//! in which those tasks are linear, with the invariant block carrying the
//! features that true pendulum dynamics never uses (their shared true value
//! is zero) and the leaf block carrying the two physical coefficients.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learning::{BasisFn, FitError, ModelSpace, RegressionData};
use crate::numfmt::float17;

pub const STANDARD_GRAVITY: f64 = 9.81;

#[derive(Debug, Error)]
pub enum PendulumError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("damping must be non-negative and finite, got {value}")]
    NegativeDamping { value: f64 },
    #[error("time step must be positive and finite, got {dt}")]
    BadStep { dt: f64 },
    #[error("simulation needs at least 1 step")]
    NoSteps,
    #[error("dataset size must be at least 1")]
    EmptySample,
    #[error("state box requires lo <= hi on both axes")]
    BadBox,
    #[error("state became non-finite at step {step}")]
    NonFinite { step: usize },
}

/// Physical pendulum parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    pub mass: f64,
    pub length: f64,
    pub damping: f64,
    pub gravity: f64,
}

impl PendulumParams {
    pub fn new(mass: f64, length: f64, damping: f64) -> Result<Self, PendulumError> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(PendulumError::NonPositive {
                name: "mass",
                value: mass,
            });
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(PendulumError::NonPositive {
                name: "length",
                value: length,
            });
        }
        if !(damping >= 0.0) || !damping.is_finite() {
            return Err(PendulumError::NegativeDamping { value: damping });
        }
        Ok(Self {
            mass,
            length,
            damping,
            gravity: STANDARD_GRAVITY,
        })
    }

    pub fn with_gravity(mut self, gravity: f64) -> Result<Self, PendulumError> {
        if !(gravity > 0.0) || !gravity.is_finite() {
            return Err(PendulumError::NonPositive {
                name: "gravity",
                value: gravity,
            });
        }
        self.gravity = gravity;
        Ok(self)
    }
}

/// State derivative `(θ̇, ω̇)`.
pub fn dynamics(p: &PendulumParams, state: (f64, f64)) -> (f64, f64) {
    let (theta, omega) = state;
    (
        omega,
        -(p.gravity / p.length) * theta.sin() - p.damping / (p.mass * p.length * p.length) * omega,
    )
}

/// Mechanical energy `½·m·l²·ω² − m·g·l·cos θ`, zero reference at the pivot
/// height. Conserved when damping is zero; otherwise decays at rate `−γ·ω²`.
pub fn energy(p: &PendulumParams, state: (f64, f64)) -> f64 {
    let (theta, omega) = state;
    0.5 * p.mass * p.length * p.length * omega * omega
        - p.mass * p.gravity * p.length * theta.cos()
}

fn rk4_step(p: &PendulumParams, s: (f64, f64), dt: f64) -> (f64, f64) {
    let k1 = dynamics(p, s);
    let k2 = dynamics(p, (s.0 + 0.5 * dt * k1.0, s.1 + 0.5 * dt * k1.1));
    let k3 = dynamics(p, (s.0 + 0.5 * dt * k2.0, s.1 + 0.5 * dt * k2.1));
    let k4 = dynamics(p, (s.0 + dt * k3.0, s.1 + dt * k3.1));
    (
        s.0 + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        s.1 + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

/// A simulated path: `states[i]` at `times[i] = i·dt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: PendulumParams,
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<(f64, f64)>,
}

impl Trajectory {
    pub fn energies(&self) -> Vec<f64> {
        self.states.iter().map(|&s| energy(&self.params, s)).collect()
    }

    /// Largest absolute deviation of energy from its initial value.
    pub fn max_energy_drift(&self) -> f64 {
        let e = self.energies();
        let e0 = e[0];
        e.iter().fold(0.0_f64, |acc, v| acc.max((v - e0).abs()))
    }

    /// Writes `t,theta,omega,energy` rows with round-trippable floats.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "t,theta,omega,energy")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            writeln!(
                w,
                "{},{},{},{}",
                float17(*t),
                float17(s.0),
                float17(s.1),
                float17(energy(&self.params, *s))
            )?;
        }
        Ok(())
    }
}

/// Integrates the pendulum with classical fourth-order Runge-Kutta for
/// `steps` steps of size `dt`, returning `steps + 1` states including the
/// initial one.
pub fn simulate(
    p: &PendulumParams,
    init: (f64, f64),
    dt: f64,
    steps: usize,
) -> Result<Trajectory, PendulumError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(PendulumError::BadStep { dt });
    }
    if steps == 0 {
        return Err(PendulumError::NoSteps);
    }
    let mut states = Vec::with_capacity(steps + 1);
    let mut times = Vec::with_capacity(steps + 1);
    let mut s = init;
    states.push(s);
    times.push(0.0);
    for i in 1..=steps {
        s = rk4_step(p, s, dt);
        if !s.0.is_finite() || !s.1.is_finite() {
            return Err(PendulumError::NonFinite { step: i });
        }
        states.push(s);
        times.push(i as f64 * dt);
    }
    Ok(Trajectory {
        params: *p,
        dt,
        times,
        states,
    })
}

/// Mean period of the pendulum's oscillation, from upward zero crossings of
/// `θ` (linearly interpolated). `None` when fewer than two crossings occur.
pub fn estimate_period(traj: &Trajectory) -> Option<f64> {
    let mut crossings = Vec::new();
    for i in 0..traj.states.len() - 1 {
        let (a, b) = (traj.states[i].0, traj.states[i + 1].0);
        if a < 0.0 && b >= 0.0 {
            let frac = -a / (b - a);
            crossings.push(traj.times[i] + frac * traj.dt);
        }
    }
    if crossings.len() < 2 {
        return None;
    }
    Some((crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}

/// Rectangular sampling region for pendulum states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateBox {
    pub theta: (f64, f64),
    pub omega: (f64, f64),
}

impl StateBox {
    pub fn new(theta: (f64, f64), omega: (f64, f64)) -> Result<Self, PendulumError> {
        if !(theta.0 <= theta.1) || !(omega.0 <= omega.1) {
            return Err(PendulumError::BadBox);
        }
        Ok(Self { theta, omega })
    }
}

/// Supervised sample of the dynamics: states paired with their exact `ω̇`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsDataset {
    pub states: Vec<(f64, f64)>,
    pub targets: Vec<f64>,
    pub seed: u64,
}

impl DynamicsDataset {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// View as generic regression data with inputs `(θ, ω)`.
    pub fn to_regression(&self) -> Result<RegressionData, FitError> {
        RegressionData::new(
            self.states.iter().map(|&(t, o)| vec![t, o]).collect(),
            self.targets.clone(),
        )
    }

    /// Writes `theta,omega,omega_dot` rows with round-trippable floats.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "theta,omega,omega_dot")?;
        for (s, y) in self.states.iter().zip(&self.targets) {
            writeln!(w, "{},{},{}", float17(s.0), float17(s.1), float17(*y))?;
        }
        Ok(())
    }
}

/// Draws `n` states uniformly from `bounds` and labels each with the exact
/// angular acceleration. Deterministic in `seed`.
pub fn dynamics_dataset(
    p: &PendulumParams,
    n: usize,
    bounds: &StateBox,
    seed: u64,
) -> Result<DynamicsDataset, PendulumError> {
    if n == 0 {
        return Err(PendulumError::EmptySample);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let theta = bounds.theta.0 + (bounds.theta.1 - bounds.theta.0) * rng.random::<f64>();
        let omega = bounds.omega.0 + (bounds.omega.1 - bounds.omega.0) * rng.random::<f64>();
        states.push((theta, omega));
        targets.push(dynamics(p, (theta, omega)).1);
    }
    Ok(DynamicsDataset {
        states,
        targets,
        seed,
    })
}

/// A pendulum reduced to its effective task coordinates: the dynamics
/// depend on `(m, l, γ, g)` only through these two numbers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendulumTask {
    /// `g / l`.
    pub c_grav: f64,
    /// `γ / (m·l²)`.
    pub c_damp: f64,
}

impl PendulumTask {
    /// Angular acceleration at a state.
    pub fn omega_dot(&self, theta: f64, omega: f64) -> f64 {
        -self.c_grav * theta.sin() - self.c_damp * omega
    }

    /// True coefficients in [`pendulum_model_space`] order.
    pub fn true_theta(&self) -> [f64; 5] {
        [-self.c_grav, -self.c_damp, 0.0, 0.0, 0.0]
    }
}

/// Projects physical parameters onto the task space.
pub fn pendulum_task_point(p: &PendulumParams) -> PendulumTask {
    PendulumTask {
        c_grav: p.gravity / p.length,
        c_damp: p.damping / (p.mass * p.length * p.length),
    }
}

/// Five-feature model of `ω̇(θ, ω)`: `[sin θ, ω, 1, θ, θ·ω]`.
///
/// True pendulum dynamics lives in the span of the first two features, so
/// the last three have true coefficient zero for every pendulum; they form
/// the invariant block that multitask fitting should drive to zero, while
/// `(sin θ, ω)` coefficients vary per task along the leaf.
pub fn pendulum_model_space() -> ModelSpace {
    ModelSpace::new(
        2,
        vec![
            BasisFn::custom("sin(theta)", |x: &[f64]| x[0].sin()),
            BasisFn::custom("omega", |x: &[f64]| x[1]),
            BasisFn::constant(),
            BasisFn::custom("theta", |x: &[f64]| x[0]),
            BasisFn::custom("theta*omega", |x: &[f64]| x[0] * x[1]),
        ],
        vec![2, 3, 4],
        vec![0, 1],
    )
    .expect("pendulum basis partition is consistent")
}
