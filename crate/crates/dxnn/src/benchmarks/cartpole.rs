//! Double pole balancing: two poles of different lengths hinged on one cart,
//! integrated with fourth-order Runge-Kutta, friction included.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phenotype::{Phenotype, StepError};

#[derive(Debug, Error)]
pub enum PhysicsError {
    #[error("state became non-finite during integration")]
    NonFinite,
    #[error("controller failure: {0}")]
    Controller(#[from] StepError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta1: f64,
    pub theta1_dot: f64,
    pub theta2: f64,
    pub theta2_dot: f64,
}

impl CartPoleState {
    pub fn is_finite(&self) -> bool {
        [self.x, self.x_dot, self.theta1, self.theta1_dot, self.theta2, self.theta2_dot]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Wieland's parameterization: 1 kg cart, a long pole (1 m, 0.1 kg) and a
/// short pole (0.1 m, 0.01 kg), with cart and hinge friction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpbConstants {
    pub cart_mass: f64,
    pub pole_mass: [f64; 2],
    /// Half-lengths: the center of mass sits halfway up each pole.
    pub pole_half_length: [f64; 2],
    pub gravity: f64,
    pub cart_friction: f64,
    pub pole_friction: f64,
}

impl Default for DpbConstants {
    fn default() -> Self {
        DpbConstants {
            cart_mass: 1.0,
            pole_mass: [0.1, 0.01],
            pole_half_length: [0.5, 0.05],
            gravity: -9.8,
            cart_friction: 5.0e-4,
            pole_friction: 2.0e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpbConfig {
    pub constants: DpbConstants,
    /// RK4 integration step (s).
    pub dt: f64,
    /// Integration substeps per control step; control period = dt * substeps.
    pub substeps: usize,
    pub force_max: f64,
    /// Nonzero controller outputs are pushed out to at least this magnitude.
    pub force_min: f64,
    /// Control steps to survive for a solve.
    pub horizon: usize,
    pub track_limit: f64,
    pub angle_limit: f64,
    pub initial_theta1: f64,
    // Input scaling, chosen to keep nominal ranges near [-1, 1].
    pub scale_x: f64,
    pub scale_x_dot: f64,
    pub scale_theta: f64,
    pub scale_theta_dot: f64,
}

impl Default for DpbConfig {
    fn default() -> Self {
        DpbConfig {
            constants: DpbConstants::default(),
            dt: 0.01,
            substeps: 2,
            force_max: 10.0,
            force_min: 10.0 / 256.0,
            horizon: 100_000,
            track_limit: 2.4,
            angle_limit: 36.0_f64.to_radians(),
            initial_theta1: 4.0_f64.to_radians(),
            scale_x: 2.4,
            scale_x_dot: 10.0,
            scale_theta: 0.524,
            scale_theta_dot: 5.0,
        }
    }
}

impl DpbConfig {
    pub fn initial_state(&self) -> CartPoleState {
        CartPoleState {
            x: 0.0,
            x_dot: 0.0,
            theta1: self.initial_theta1,
            theta1_dot: 0.0,
            theta2: 0.0,
            theta2_dot: 0.0,
        }
    }

    pub fn in_bounds(&self, s: &CartPoleState) -> bool {
        s.x.abs() <= self.track_limit
            && s.theta1.abs() <= self.angle_limit
            && s.theta2.abs() <= self.angle_limit
    }
}

/// Time derivatives of the state under `force`, in the standard
/// effective-mass form:
///
///   x''     = (F - mu_c*sgn(x') + sum_i F~_i) / (M + sum_i m~_i)
///   theta'' = -(3 / 4l_i) (x'' cos(th_i) + g sin(th_i) + mu_p th'_i / (m_i l_i))
///
/// with F~_i = m_i l_i th'_i^2 sin(th_i)
///             + (3/4) m_i cos(th_i) (mu_p th'_i / (m_i l_i) + g sin(th_i))
/// and  m~_i = m_i (1 - (3/4) cos^2(th_i)),  g = -9.8.
pub fn derivatives(s: &CartPoleState, force: f64, c: &DpbConstants) -> CartPoleState {
    let poles = [(s.theta1, s.theta1_dot, 0usize), (s.theta2, s.theta2_dot, 1usize)];
    let mut eff_force = 0.0;
    let mut eff_mass = 0.0;
    for &(theta, theta_dot, i) in &poles {
        let m = c.pole_mass[i];
        let l = c.pole_half_length[i];
        let (sin_t, cos_t) = theta.sin_cos();
        eff_force += m * l * theta_dot * theta_dot * sin_t
            + 0.75 * m * cos_t * (c.pole_friction * theta_dot / (m * l) + c.gravity * sin_t);
        eff_mass += m * (1.0 - 0.75 * cos_t * cos_t);
    }
    let cart_drag = if s.x_dot == 0.0 { 0.0 } else { c.cart_friction * s.x_dot.signum() };
    let x_dd = (force - cart_drag + eff_force) / (c.cart_mass + eff_mass);
    let theta_dd = |theta: f64, theta_dot: f64, i: usize| {
        let m = c.pole_mass[i];
        let l = c.pole_half_length[i];
        -(0.75 / l)
            * (x_dd * theta.cos() + c.gravity * theta.sin() + c.pole_friction * theta_dot / (m * l))
    };
    CartPoleState {
        x: s.x_dot,
        x_dot: x_dd,
        theta1: s.theta1_dot,
        theta1_dot: theta_dd(s.theta1, s.theta1_dot, 0),
        theta2: s.theta2_dot,
        theta2_dot: theta_dd(s.theta2, s.theta2_dot, 1),
    }
}

fn axpy(s: &CartPoleState, k: &CartPoleState, h: f64) -> CartPoleState {
    CartPoleState {
        x: s.x + h * k.x,
        x_dot: s.x_dot + h * k.x_dot,
        theta1: s.theta1 + h * k.theta1,
        theta1_dot: s.theta1_dot + h * k.theta1_dot,
        theta2: s.theta2 + h * k.theta2,
        theta2_dot: s.theta2_dot + h * k.theta2_dot,
    }
}

/// One classic RK4 step with the force held constant over the step.
pub fn rk4_step(
    s: &CartPoleState,
    force: f64,
    dt: f64,
    c: &DpbConstants,
) -> Result<CartPoleState, PhysicsError> {
    let k1 = derivatives(s, force, c);
    let k2 = derivatives(&axpy(s, &k1, dt / 2.0), force, c);
    let k3 = derivatives(&axpy(s, &k2, dt / 2.0), force, c);
    let k4 = derivatives(&axpy(s, &k3, dt), force, c);
    let out = CartPoleState {
        x: s.x + dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
        x_dot: s.x_dot + dt / 6.0 * (k1.x_dot + 2.0 * k2.x_dot + 2.0 * k3.x_dot + k4.x_dot),
        theta1: s.theta1 + dt / 6.0 * (k1.theta1 + 2.0 * k2.theta1 + 2.0 * k3.theta1 + k4.theta1),
        theta1_dot: s.theta1_dot
            + dt / 6.0 * (k1.theta1_dot + 2.0 * k2.theta1_dot + 2.0 * k3.theta1_dot + k4.theta1_dot),
        theta2: s.theta2 + dt / 6.0 * (k1.theta2 + 2.0 * k2.theta2 + 2.0 * k3.theta2 + k4.theta2),
        theta2_dot: s.theta2_dot
            + dt / 6.0 * (k1.theta2_dot + 2.0 * k2.theta2_dot + 2.0 * k3.theta2_dot + k4.theta2_dot),
    };
    if out.is_finite() {
        Ok(out)
    } else {
        Err(PhysicsError::NonFinite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DpbVariant {
    /// 6 scaled inputs: x, x', theta1, theta1', theta2, theta2'.
    WithVelocities,
    /// 3 scaled inputs: x, theta1, theta2; fitness = steps survived.
    NoVelocitiesUndamped,
    /// 3 scaled inputs; oscillation-damping fitness.
    NoVelocitiesDamped,
}

impl DpbVariant {
    pub fn sensor_length(self) -> usize {
        match self {
            DpbVariant::WithVelocities => 6,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeResult {
    pub fitness: f64,
    pub steps_survived: usize,
    pub solved: bool,
}

/// The damping fitness: 0.1 f1 + 0.9 f2 with f1 = t/1000 and f2 = 0 below
/// 100 steps, else 0.75 over the last-100-step sum of |x|+|x'|+|th1|+|th1'|.
pub fn damped_fitness(steps: usize, last_100_sum: f64) -> f64 {
    let f1 = steps as f64 / 1000.0;
    let f2 = if steps < 100 { 0.0 } else { 0.75 / last_100_sum };
    0.1 * f1 + 0.9 * f2
}

/// Run one episode: feed the scaled state, read a scalar force command, hold
/// it over `substeps` RK4 substeps, stop on a boundary violation or at the
/// horizon.
pub fn run_dpb_episode(
    phenotype: &mut Phenotype,
    config: &DpbConfig,
    variant: DpbVariant,
) -> Result<EpisodeResult, PhysicsError> {
    phenotype.reset();
    let mut state = config.initial_state();
    let mut steps = 0usize;
    // Rolling window of |x|+|x'|+|theta1|+|theta1'| over the last 100 steps.
    let mut window = std::collections::VecDeque::with_capacity(100);
    let mut window_sum = 0.0;

    'episode: while steps < config.horizon {
        let inputs = match variant {
            DpbVariant::WithVelocities => vec![
                state.x / config.scale_x,
                state.x_dot / config.scale_x_dot,
                state.theta1 / config.scale_theta,
                state.theta1_dot / config.scale_theta_dot,
                state.theta2 / config.scale_theta,
                state.theta2_dot / config.scale_theta_dot,
            ],
            _ => vec![
                state.x / config.scale_x,
                state.theta1 / config.scale_theta,
                state.theta2 / config.scale_theta,
            ],
        };
        let outputs = phenotype.step(&[inputs])?;
        let command = outputs
            .iter()
            .find(|v| !v.is_empty())
            .map(|v| v[0])
            .unwrap_or(0.0);
        let mut force = (command * config.force_max).clamp(-config.force_max, config.force_max);
        if force != 0.0 && force.abs() < config.force_min {
            force = config.force_min.copysign(force);
        }
        for _ in 0..config.substeps {
            state = rk4_step(&state, force, config.dt, &config.constants)?;
            if !config.in_bounds(&state) {
                break 'episode;
            }
        }
        steps += 1;
        let wiggle =
            state.x.abs() + state.x_dot.abs() + state.theta1.abs() + state.theta1_dot.abs();
        window.push_back(wiggle);
        window_sum += wiggle;
        if window.len() > 100 {
            window_sum -= window.pop_front().unwrap();
        }
    }

    let solved = steps >= config.horizon;
    let fitness = match variant {
        DpbVariant::NoVelocitiesDamped => damped_fitness(steps, window_sum),
        _ => steps as f64,
    };
    Ok(EpisodeResult { fitness, steps_survived: steps, solved })
}
