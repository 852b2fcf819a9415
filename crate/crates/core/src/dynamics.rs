//! Target kinematics: the 9-state constant-acceleration process model,
//! white-jerk process noise, ground-truth trajectory generators, and
//! position extraction.
//!
//! The state is `[position | velocity | acceleration]`, each a 3-vector, so
//! the transition is linear. Circular ground truth is then a mild model
//! mismatch absorbed by the jerk intensity `q`.

use nalgebra::{DMatrix, DVector, Vector3};

use crate::{Error, Result};

/// Dimension of the target state vector.
pub const STATE_DIM: usize = 9;

/// Target kinematic state, fixed ordering `[pos | vel | acc]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
}

impl TargetState {
    pub fn zero() -> Self {
        Self {
            position: Vector3::zeros(),
            velocity: Vector3::zeros(),
            acceleration: Vector3::zeros(),
        }
    }

    /// Stack into a 9-vector.
    pub fn to_vector(&self) -> DVector<f64> {
        let mut v = DVector::zeros(STATE_DIM);
        v.fixed_rows_mut::<3>(0).copy_from(&self.position);
        v.fixed_rows_mut::<3>(3).copy_from(&self.velocity);
        v.fixed_rows_mut::<3>(6).copy_from(&self.acceleration);
        v
    }

    pub fn from_vector(v: &DVector<f64>) -> Result<Self> {
        if v.len() != STATE_DIM {
            return Err(Error::DimensionMismatch {
                expected: STATE_DIM,
                got: v.len(),
            });
        }
        Ok(Self {
            position: extract_position(v),
            velocity: Vector3::new(v[3], v[4], v[5]),
            acceleration: Vector3::new(v[6], v[7], v[8]),
        })
    }
}

/// First three components of a stacked state vector (the H·X projection).
pub fn extract_position(state: &DVector<f64>) -> Vector3<f64> {
    Vector3::new(state[0], state[1], state[2])
}

/// Discrete-time constant-acceleration model with white-jerk intensity `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessModel {
    /// Step duration, seconds.
    pub dt: f64,
    /// Jerk power spectral density, (m/s³)²·s.
    pub jerk_psd: f64,
}

impl ProcessModel {
    pub fn new(dt: f64, jerk_psd: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be > 0, got {dt}")));
        }
        if !(jerk_psd >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "jerk_psd must be >= 0, got {jerk_psd}"
            )));
        }
        Ok(Self { dt, jerk_psd })
    }

    /// Deterministic part of the transition: constant-acceleration kinematics.
    pub fn transition(&self, s: &TargetState) -> TargetState {
        let dt = self.dt;
        TargetState {
            position: s.position + s.velocity * dt + s.acceleration * (0.5 * dt * dt),
            velocity: s.velocity + s.acceleration * dt,
            acceleration: s.acceleration,
        }
    }

    /// Transition applied to a stacked 9-vector (used on sigma points).
    pub fn transition_vector(&self, x: &DVector<f64>) -> DVector<f64> {
        let dt = self.dt;
        let half_dt2 = 0.5 * dt * dt;
        let mut out = x.clone();
        for axis in 0..3 {
            out[axis] = x[axis] + x[3 + axis] * dt + x[6 + axis] * half_dt2;
            out[3 + axis] = x[3 + axis] + x[6 + axis] * dt;
        }
        out
    }

    /// The transition as a 9×9 matrix; the model is linear, so this is exact
    /// and doubles as an oracle for the sigma-point prediction.
    pub fn transition_matrix(&self) -> DMatrix<f64> {
        let dt = self.dt;
        let mut f = DMatrix::identity(STATE_DIM, STATE_DIM);
        for axis in 0..3 {
            f[(axis, 3 + axis)] = dt;
            f[(axis, 6 + axis)] = 0.5 * dt * dt;
            f[(3 + axis, 6 + axis)] = dt;
        }
        f
    }

    /// Discretized white-jerk process noise, per axis
    ///
    /// ```text
    /// q · [ dt⁵/20  dt⁴/8  dt³/6 ]
    ///     [ dt⁴/8   dt³/3  dt²/2 ]
    ///     [ dt³/6   dt²/2  dt    ]
    /// ```
    ///
    /// arranged on the `[pos | vel | acc]` ordering. Symmetric PSD.
    pub fn noise_covariance(&self) -> DMatrix<f64> {
        let dt = self.dt;
        let q = self.jerk_psd;
        let block = [
            [dt.powi(5) / 20.0, dt.powi(4) / 8.0, dt.powi(3) / 6.0],
            [dt.powi(4) / 8.0, dt.powi(3) / 3.0, dt.powi(2) / 2.0],
            [dt.powi(3) / 6.0, dt.powi(2) / 2.0, dt],
        ];
        let mut cov = DMatrix::zeros(STATE_DIM, STATE_DIM);
        for b1 in 0..3 {
            for b2 in 0..3 {
                for axis in 0..3 {
                    cov[(3 * b1 + axis, 3 * b2 + axis)] = q * block[b1][b2];
                }
            }
        }
        cov
    }
}

/// Time-ordered target states at uniform `dt`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<TargetState>,
}

impl Trajectory {
    /// Uniform circular motion at constant depth.
    ///
    /// The target starts at bearing angle `initial_bearing` on the circle
    /// (angle from the +x axis at the circle center) and moves
    /// counter-clockwise with tangential speed `speed`; the acceleration is
    /// centripetal with magnitude speed²/radius.
    pub fn circular(
        center: Vector3<f64>,
        radius: f64,
        speed: f64,
        dt: f64,
        duration: f64,
        initial_bearing: f64,
    ) -> Result<Self> {
        if !(radius > 0.0) || !(speed > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "circular trajectory needs radius > 0 and speed > 0, got radius={radius}, speed={speed}"
            )));
        }
        if !(dt > 0.0) || !(duration >= 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "need dt > 0 and duration >= 0, got dt={dt}, duration={duration}"
            )));
        }
        let omega = speed / radius;
        let steps = (duration / dt + 1e-9).floor() as usize;
        let states = (0..=steps)
            .map(|k| {
                let phi = initial_bearing + omega * dt * k as f64;
                let (sin, cos) = phi.sin_cos();
                TargetState {
                    position: center + Vector3::new(radius * cos, radius * sin, 0.0),
                    velocity: Vector3::new(-speed * sin, speed * cos, 0.0),
                    acceleration: Vector3::new(
                        -speed * omega * cos,
                        -speed * omega * sin,
                        0.0,
                    ),
                }
            })
            .collect();
        Ok(Self { dt, states })
    }

    /// Constant-velocity straight path, zero acceleration.
    pub fn line(
        start: Vector3<f64>,
        velocity: Vector3<f64>,
        dt: f64,
        duration: f64,
    ) -> Result<Self> {
        if !(dt > 0.0) || !(duration >= 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "need dt > 0 and duration >= 0, got dt={dt}, duration={duration}"
            )));
        }
        let steps = (duration / dt + 1e-9).floor() as usize;
        let states = (0..=steps)
            .map(|k| TargetState {
                position: start + velocity * (dt * k as f64),
                velocity,
                acceleration: Vector3::zeros(),
            })
            .collect();
        Ok(Self { dt, states })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}
