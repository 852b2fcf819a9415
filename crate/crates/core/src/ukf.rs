//! Centralized unscented Kalman filter over stacked magnetometer
//! measurements.
//!
//! The 9-state kinematic estimate is propagated through the sigma-point
//! transform: 2N+1 = 19 points drawn from the covariance factor, pushed
//! through the (linear) motion model, and regenerated at the predicted
//! estimate for the measurement update. The innovation covariance always
//! includes the additive measurement-noise term σ²I, and the gain is
//! obtained by solving K·P = T — never by forming P⁻¹ explicitly.
//!
//! With n sensors the stacked measurement dimension m is n (scalar) or 3n
//! (vector), while the sigma spread of predicted measurements has rank at
//! most 19. For large arrays the gain is therefore computed through the
//! equivalent low-rank route (`GainPath::LowRank`), which solves a 19×19
//! system instead of an m×m one; both routes are held to agree by tests.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;

use crate::dynamics::{extract_position, ProcessModel, Trajectory, STATE_DIM};
use crate::numerics::{solve_spd, spd_factor, symmetrize};
use crate::sensing::{MeasurementBatch, SensorArray};
use crate::{Error, Result};

/// Number of sigma points for the 9-dimensional state.
pub const SIGMA_COUNT: usize = 2 * STATE_DIM + 1;

/// Measurement dimension up to which the gain is solved against the full
/// innovation covariance; larger systems use the low-rank route.
const DENSE_GAIN_LIMIT: usize = 64;

/// Unscented-transform configuration. κ > 0 spreads the sigma points as
/// √(N+κ) times the covariance factor columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UkfConfig {
    kappa: f64,
}

impl UkfConfig {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "kappa must be > 0, got {kappa}"
            )));
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

impl Default for UkfConfig {
    fn default() -> Self {
        Self { kappa: 1.0 }
    }
}

/// State mean (9) and symmetric positive-definite covariance (9×9).
#[derive(Debug, Clone, PartialEq)]
pub struct FilterEstimate {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl FilterEstimate {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        if mean.len() != STATE_DIM {
            return Err(Error::DimensionMismatch {
                expected: STATE_DIM,
                got: mean.len(),
            });
        }
        if covariance.nrows() != STATE_DIM || covariance.ncols() != STATE_DIM {
            return Err(Error::DimensionMismatch {
                expected: STATE_DIM,
                got: covariance.nrows(),
            });
        }
        Ok(Self { mean, covariance })
    }

    pub fn is_finite(&self) -> bool {
        self.mean.iter().all(|v| v.is_finite()) && self.covariance.iter().all(|v| v.is_finite())
    }
}

/// Sigma weights: a₀ = κ/(N+κ), aᵢ = 1/(2(N+κ)) otherwise. All positive
/// and summing to one.
pub fn sigma_weights(cfg: &UkfConfig) -> [f64; SIGMA_COUNT] {
    let n_kappa = STATE_DIM as f64 + cfg.kappa;
    let mut w = [1.0 / (2.0 * n_kappa); SIGMA_COUNT];
    w[0] = cfg.kappa / n_kappa;
    w
}

/// Sigma points around `mean`: the mean itself plus ±√(N+κ)·Lⱼ for each
/// column of the covariance factor L.
pub fn sigma_points(
    mean: &DVector<f64>,
    covariance: &DMatrix<f64>,
    cfg: &UkfConfig,
) -> Result<Vec<DVector<f64>>> {
    let factor = spd_factor(covariance)?;
    let scale = (STATE_DIM as f64 + cfg.kappa).sqrt();
    let l = factor.lower();
    let mut points = Vec::with_capacity(SIGMA_COUNT);
    points.push(mean.clone());
    for j in 0..STATE_DIM {
        points.push(mean + l.column(j) * scale);
    }
    for j in 0..STATE_DIM {
        points.push(mean - l.column(j) * scale);
    }
    Ok(points)
}

/// Time update: propagate the sigma points through the motion model and add
/// the process noise.
pub fn predict(
    est: &FilterEstimate,
    pm: &ProcessModel,
    cfg: &UkfConfig,
) -> Result<FilterEstimate> {
    let weights = sigma_weights(cfg);
    let points = sigma_points(&est.mean, &est.covariance, cfg)?;
    let propagated: Vec<DVector<f64>> =
        points.iter().map(|p| pm.transition_vector(p)).collect();

    let mut mean = DVector::zeros(STATE_DIM);
    for (w, p) in weights.iter().zip(&propagated) {
        mean.axpy(*w, p, 1.0);
    }

    let mut covariance = pm.noise_covariance();
    for (w, p) in weights.iter().zip(&propagated) {
        let d = p - &mean;
        covariance.ger(*w, &d, &d, 1.0);
    }
    symmetrize(&mut covariance);
    Ok(FilterEstimate { mean, covariance })
}

/// Which linear system the Kalman gain is solved through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainPath {
    /// Factor the full m×m innovation covariance.
    Dense,
    /// Solve the equivalent 19×19 system (innovation spread has rank ≤ 19).
    LowRank,
}

/// Measurement update with an automatically chosen gain path.
pub fn update(
    est: &FilterEstimate,
    batch: &MeasurementBatch,
    array: &SensorArray,
    moment: &Vector3<f64>,
    cfg: &UkfConfig,
) -> Result<FilterEstimate> {
    let path = if array.measurement_dim() <= DENSE_GAIN_LIMIT {
        GainPath::Dense
    } else {
        GainPath::LowRank
    };
    update_with_gain_path(est, batch, array, moment, cfg, path)
}

/// Measurement update of a predicted estimate against one stacked batch.
///
/// Sigma points are regenerated from the predicted estimate, mapped through
/// the array's measurement model at each point's position, and the usual
/// innovation/cross-covariance statistics assembled. The posterior
/// covariance is re-symmetrized before being returned.
pub fn update_with_gain_path(
    est: &FilterEstimate,
    batch: &MeasurementBatch,
    array: &SensorArray,
    moment: &Vector3<f64>,
    cfg: &UkfConfig,
    path: GainPath,
) -> Result<FilterEstimate> {
    let m = array.measurement_dim();
    if batch.values.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: batch.values.len(),
        });
    }
    let weights = sigma_weights(cfg);
    let points = sigma_points(&est.mean, &est.covariance, cfg)?;

    // Predicted measurement per sigma point, one column each.
    let mut meas = DMatrix::zeros(m, SIGMA_COUNT);
    let mut column = DVector::zeros(m);
    for (j, point) in points.iter().enumerate() {
        array.predict_into(&extract_position(point), moment, &mut column)?;
        meas.set_column(j, &column);
    }

    // Weighted measurement mean, then turn `meas` into a deviation matrix.
    let mut meas_mean = DVector::zeros(m);
    for (j, w) in weights.iter().enumerate() {
        meas_mean.axpy(*w, &meas.column(j), 1.0);
    }
    for mut col in meas.column_iter_mut() {
        col -= &meas_mean;
    }

    // State deviations, weighted once (the shared factor of T and P).
    let mut state_dev_w = DMatrix::zeros(STATE_DIM, SIGMA_COUNT);
    for (j, point) in points.iter().enumerate() {
        state_dev_w.set_column(j, &((point - &est.mean) * weights[j]));
    }
    // Cross covariance T = Σ wⱼ (χⱼ−x̂)(yⱼ−ŷ)ᵀ, 9×m.
    let cross = &state_dev_w * meas.transpose();

    let sigma2 = array.noise_std() * array.noise_std();
    let gain: DMatrix<f64> = match path {
        GainPath::Dense => {
            // P = Σ wⱼ dⱼdⱼᵀ + σ²I, then solve Kᵀ from P·Kᵀ = Tᵀ.
            let mut meas_dev_w = meas.clone();
            for (j, w) in weights.iter().enumerate() {
                meas_dev_w.column_mut(j).scale_mut(*w);
            }
            let mut innov_cov = &meas_dev_w * meas.transpose();
            for i in 0..m {
                innov_cov[(i, i)] += sigma2;
            }
            symmetrize(&mut innov_cov);
            solve_spd(&innov_cov, &cross.transpose())?.transpose()
        }
        GainPath::LowRank => {
            // P = σ²I + VVᵀ with V = D·diag(√w):
            // K = σ⁻²T − σ⁻⁴·(T V)·(I + σ⁻²VᵀV)⁻¹·Vᵀ.
            let mut v = meas;
            for (j, w) in weights.iter().enumerate() {
                v.column_mut(j).scale_mut(w.sqrt());
            }
            let vtv = v.transpose() * &v;
            let mut capacity = vtv / sigma2;
            for i in 0..SIGMA_COUNT {
                capacity[(i, i)] += 1.0;
            }
            symmetrize(&mut capacity);
            let cross_v = &cross * &v; // 9×19
            let solved = solve_spd(&capacity, &cross_v.transpose())?; // 19×9
            let correction = (&v * &solved).transpose(); // 9×m
            (&cross - correction / sigma2) / sigma2
        }
    };

    let innovation = &batch.values - &meas_mean;
    let mean = &est.mean + &gain * &innovation;
    // K·P = T by construction, so K·P·Kᵀ = T·Kᵀ.
    let mut covariance = &est.covariance - &cross * gain.transpose();
    symmetrize(&mut covariance);
    Ok(FilterEstimate { mean, covariance })
}

/// One recorded step of a tracking run.
#[derive(Debug, Clone)]
pub struct TrackStep {
    pub time_index: usize,
    pub mean: DVector<f64>,
    pub covariance_trace: f64,
    /// ‖estimated position − true position‖ in meters.
    pub error_m: f64,
}

/// A full tracking run. Divergence (non-finite state or a failed
/// factorization) is data, not an error: the run stops and records where.
#[derive(Debug, Clone)]
pub struct TrackResult {
    pub steps: Vec<TrackStep>,
    pub diverged_at: Option<usize>,
}

impl TrackResult {
    pub fn errors(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.error_m).collect()
    }
}

/// Run the predict/update recursion along a ground-truth trajectory,
/// synthesizing measurements from `rng` at every step after the first.
pub fn track(
    trajectory: &Trajectory,
    array: &SensorArray,
    moment: &Vector3<f64>,
    cfg: &UkfConfig,
    pm: &ProcessModel,
    init: &FilterEstimate,
    rng: &mut impl Rng,
) -> TrackResult {
    assert!(
        (trajectory.dt - pm.dt).abs() <= 1e-12 * pm.dt.abs(),
        "trajectory dt {} and process-model dt {} disagree",
        trajectory.dt,
        pm.dt
    );
    let mut steps = Vec::with_capacity(trajectory.len());
    let record = |k: usize, est: &FilterEstimate, truth_pos: &Vector3<f64>| TrackStep {
        time_index: k,
        mean: est.mean.clone(),
        covariance_trace: est.covariance.trace(),
        error_m: (extract_position(&est.mean) - truth_pos).norm(),
    };

    let mut est = init.clone();
    steps.push(record(0, &est, &trajectory.states[0].position));

    for k in 1..trajectory.len() {
        let truth = &trajectory.states[k];
        let stepped = predict(&est, pm, cfg)
            .and_then(|predicted| {
                let batch = array.synthesize(&truth.position, moment, k, rng)?;
                update(&predicted, &batch, array, moment, cfg)
            });
        match stepped {
            Ok(next) if next.is_finite() => {
                est = next;
                steps.push(record(k, &est, &truth.position));
            }
            _ => {
                return TrackResult {
                    steps,
                    diverged_at: Some(k),
                };
            }
        }
    }
    TrackResult {
        steps,
        diverged_at: None,
    }
}
