//! Scenario orchestration: Monte Carlo tracking trials, RMSE aggregation,
//! failure classification, and sensor-outage resilience sweeps.
//!
//! Trials are independent work units keyed by (master seed, trial index);
//! they run in parallel and are reduced in trial order, so every aggregate
//! is independent of scheduling. A trial is failed when its position error
//! ever exceeds the failure threshold or the filter diverges numerically;
//! per-step RMSE averages only trials that have not failed by that step, so
//! diverged runs cannot dominate the curves they are excluded from.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::dynamics::TargetState;
use crate::rng::{outage_rng, trial_rng};
use crate::sensing::{ModelKind, SensorArray};
use crate::ukf::{track, FilterEstimate, TrackResult};
use crate::{Error, Result};

/// Outcome of one tracking trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    /// Position error per step, truncated where the filter diverged.
    pub errors: Vec<f64>,
    /// Step at which the filter diverged numerically, if it did.
    pub diverged_at: Option<usize>,
    pub failed: bool,
    /// First step with error above threshold, or the divergence step.
    pub failure_step: Option<usize>,
}

/// Apply the failure rule to a raw error sequence.
///
/// Raising the threshold can only move the failure step later or clear it,
/// never create one.
pub fn classify(errors: &[f64], diverged_at: Option<usize>, threshold_m: f64) -> TrialResult {
    let exceeded = errors.iter().position(|&e| e > threshold_m);
    let failure_step = match (exceeded, diverged_at) {
        (Some(e), Some(d)) => Some(e.min(d)),
        (Some(e), None) => Some(e),
        (None, Some(d)) => Some(d),
        (None, None) => None,
    };
    TrialResult {
        errors: errors.to_vec(),
        diverged_at,
        failed: failure_step.is_some(),
        failure_step,
    }
}

fn initial_estimate(
    cfg: &ScenarioConfig,
    truth: &TargetState,
    rng: &mut impl Rng,
) -> Result<FilterEstimate> {
    use rand_distr::{Distribution, Normal};
    let stds = cfg.filter.init_perturbation_std;
    let mut mean = truth.to_vector();
    // fixed draw order: position, velocity, acceleration, xyz each
    for block in 0..3 {
        let normal = Normal::new(0.0, stds[block])
            .map_err(|e| Error::InvalidConfig(format!("filter.init_perturbation_std: {e}")))?;
        for axis in 0..3 {
            mean[3 * block + axis] += normal.sample(rng);
        }
    }
    let diag = cfg.filter.init_covariance_diag;
    let mut cov_diag = DVector::zeros(9);
    for block in 0..3 {
        for axis in 0..3 {
            cov_diag[3 * block + axis] = diag[block];
        }
    }
    FilterEstimate::new(mean, nalgebra::DMatrix::from_diagonal(&cov_diag))
}

/// One tracking run against a prebuilt array, with the trial's seeded
/// initialization and measurement noise.
fn run_trial_on(cfg: &ScenarioConfig, array: &SensorArray, trial_index: u64) -> Result<TrialResult> {
    let (_, result) = run_trial_track(cfg, array, trial_index)?;
    Ok(classify(
        &result.errors(),
        result.diverged_at,
        cfg.experiment.failure_threshold_m,
    ))
}

/// The raw tracking run behind [`run_trial`], exposed for trace export.
pub fn run_trial_track(
    cfg: &ScenarioConfig,
    array: &SensorArray,
    trial_index: u64,
) -> Result<(crate::dynamics::Trajectory, TrackResult)> {
    let trajectory = cfg.build_trajectory()?;
    let pm = cfg.process_model()?;
    let ukf_cfg = cfg.ukf_config()?;
    let moment = cfg.moment();
    let mut rng = trial_rng(cfg.experiment.master_seed, trial_index);
    let init = initial_estimate(cfg, &trajectory.states[0], &mut rng)?;
    let result = track(&trajectory, array, &moment, &ukf_cfg, &pm, &init, &mut rng);
    Ok((trajectory, result))
}

/// Run a single Monte Carlo trial of the configured scenario.
///
/// Deterministic in (master_seed, trial_index); every failure mode folds
/// into the `failed` flag.
pub fn run_trial(cfg: &ScenarioConfig, trial_index: u64) -> Result<TrialResult> {
    let array = cfg.build_array(None, None)?;
    run_trial_on(cfg, &array, trial_index)
}

/// Per-step RMSE over surviving trials plus the failure rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    /// RMSE at each step over trials alive at that step; `None` once no
    /// trial survives.
    pub rmse_m: Vec<Option<f64>>,
    /// Number of trials contributing at each step.
    pub alive: Vec<usize>,
    pub failure_rate: f64,
    pub runs: usize,
    /// Step duration, for time axes in exports.
    pub dt: f64,
}

fn aggregate(trials: &[TrialResult], num_steps: usize, dt: f64) -> Aggregate {
    let alive_at = |t: &TrialResult, k: usize| t.failure_step.is_none_or(|fs| k < fs);
    let mut rmse_m = Vec::with_capacity(num_steps);
    let mut alive = Vec::with_capacity(num_steps);
    for k in 0..num_steps {
        // fixed trial order + compensated summation: the reduction is
        // independent of how the trials were scheduled
        let mut sum = 0.0_f64;
        let mut comp = 0.0_f64;
        let mut n = 0usize;
        for t in trials {
            if alive_at(t, k) && k < t.errors.len() {
                let term = t.errors[k] * t.errors[k] - comp;
                let next = sum + term;
                comp = (next - sum) - term;
                sum = next;
                n += 1;
            }
        }
        alive.push(n);
        rmse_m.push(if n > 0 { Some((sum / n as f64).sqrt()) } else { None });
    }
    let failures = trials.iter().filter(|t| t.failed).count();
    Aggregate {
        rmse_m,
        alive,
        failure_rate: failures as f64 / trials.len().max(1) as f64,
        runs: trials.len(),
        dt,
    }
}

fn monte_carlo_on(
    cfg: &ScenarioConfig,
    base_array: &SensorArray,
    outage_count: usize,
    runs: usize,
) -> Result<Aggregate> {
    if runs == 0 {
        return Err(Error::InvalidConfig("experiment.runs must be >= 1".into()));
    }
    let num_steps = cfg.build_trajectory()?.len();
    let trials: Vec<TrialResult> = (0..runs as u64)
        .into_par_iter()
        .map(|trial| {
            let array = if outage_count > 0 {
                let mut rng = outage_rng(cfg.experiment.master_seed, trial);
                apply_outage(base_array, outage_count, &mut rng)?
            } else {
                base_array.clone()
            };
            run_trial_on(cfg, &array, trial)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(&trials, num_steps, cfg.trajectory_dt()?))
}

/// Run the configured number of trials and aggregate them.
pub fn monte_carlo(cfg: &ScenarioConfig) -> Result<Aggregate> {
    let array = cfg.build_array(None, None)?;
    monte_carlo_on(cfg, &array, 0, cfg.experiment.runs)
}

/// Remove a uniformly random subset of `failed_count` sensors, preserving
/// the order of the survivors. Deterministic for a given RNG state.
pub fn apply_outage(
    array: &SensorArray,
    failed_count: usize,
    rng: &mut impl Rng,
) -> Result<SensorArray> {
    if failed_count >= array.len() {
        return Err(Error::InvalidConfig(format!(
            "cannot fail {failed_count} of {} sensors",
            array.len()
        )));
    }
    if failed_count == 0 {
        return Ok(array.clone());
    }
    let removed: Vec<usize> = rand::seq::index::sample(rng, array.len(), failed_count).into_vec();
    array.without_sensors(&removed)
}

/// One cell of a resilience sweep.
#[derive(Debug, Clone)]
pub struct ResilienceEntry {
    pub failed_count: usize,
    pub noise_std_tesla: f64,
    pub model_kind: ModelKind,
    pub aggregate: Aggregate,
}

/// Outage sweep: for every (failed count, noise level, model kind) cell,
/// run `runs` trials with a fresh random outage subset per trial.
pub fn resilience_study(
    cfg: &ScenarioConfig,
    failed_counts: &[usize],
    runs: usize,
) -> Result<Vec<ResilienceEntry>> {
    let mut entries = Vec::new();
    for &count in failed_counts {
        for &noise in &cfg.noise_levels() {
            for kind in cfg.model_kinds() {
                let base = cfg.build_array(Some(kind), Some(noise))?;
                let aggregate = monte_carlo_on(cfg, &base, count, runs)?;
                entries.push(ResilienceEntry {
                    failed_count: count,
                    noise_std_tesla: noise,
                    model_kind: kind,
                    aggregate,
                });
            }
        }
    }
    Ok(entries)
}

/// Elementwise scalar/vector RMSE ratio over steps where both are defined.
pub fn rmse_ratio(scalar: &Aggregate, vector: &Aggregate) -> Result<Vec<Option<f64>>> {
    if scalar.rmse_m.len() != vector.rmse_m.len() {
        return Err(Error::DimensionMismatch {
            expected: scalar.rmse_m.len(),
            got: vector.rmse_m.len(),
        });
    }
    Ok(scalar
        .rmse_m
        .iter()
        .zip(&vector.rmse_m)
        .map(|(s, v)| match (s, v) {
            (Some(s), Some(v)) if *v > 0.0 => Some(s / v),
            _ => None,
        })
        .collect())
}

/// Median of the defined entries of a ratio sequence.
pub fn median_ratio(ratios: &[Option<f64>]) -> Option<f64> {
    let mut defined: Vec<f64> = ratios.iter().filter_map(|r| *r).collect();
    if defined.is_empty() {
        return None;
    }
    defined.sort_by(|a, b| a.total_cmp(b));
    Some(defined[defined.len() / 2])
}
