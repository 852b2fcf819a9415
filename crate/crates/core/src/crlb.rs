//! Fisher information and Cramér–Rao bounds on target position.
//!
//! A scalar sensor contributes I = ∇‖B‖ᵀ∇‖B‖ / σ² (rank ≤ 1: one sensor
//! alone can never localize), a vector sensor I = JᵀJ / σ² (rank 3 for
//! generic geometry: one sensor suffices). Sensors measure independently,
//! so a network's information is the sum. The reported bound value is
//! √Tr(F⁻¹) in meters — the total position standard deviation no unbiased
//! estimator can beat — or `Unobservable` when the information matrix is
//! numerically rank-deficient, in which case the bound is infinite.
//!
//! Inversion here runs with the jitter policy disabled: regularizing a
//! singular information matrix would hide exactly the observability
//! structure this module exists to expose.

use nalgebra::{DMatrix, Matrix3, Vector3};
use rayon::prelude::*;

use crate::dipole;
use crate::dynamics::Trajectory;
use crate::numerics::{invert_spd, numeric_rank, DEFAULT_RANK_TOL};
use crate::sensing::{ModelKind, SensorArray};
use crate::{Error, Result};

/// Position-information matrix (3×3, units 1/m²) for one measurement model.
#[derive(Debug, Clone, PartialEq)]
pub struct Fim {
    pub matrix: Matrix3<f64>,
    pub model_kind: ModelKind,
}

impl Fim {
    fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_iterator(3, 3, self.matrix.iter().copied())
    }

    pub fn rank(&self) -> usize {
        numeric_rank(&self.to_dmatrix(), DEFAULT_RANK_TOL)
    }
}

/// √Tr(CRLB) in meters, or the distinguished unobservable marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrlbValue {
    Observable(f64),
    Unobservable,
}

impl CrlbValue {
    pub fn is_observable(&self) -> bool {
        matches!(self, CrlbValue::Observable(_))
    }

    /// The bound in meters; unobservable geometry maps to +∞.
    pub fn meters_or_inf(&self) -> f64 {
        match self {
            CrlbValue::Observable(v) => *v,
            CrlbValue::Unobservable => f64::INFINITY,
        }
    }
}

/// Information from a single scalar magnetometer at displacement `d`.
///
/// Zero field (M = 0) carries no position information through the norm;
/// that case returns the zero matrix by convention.
pub fn scalar_fim(
    displacement: &Vector3<f64>,
    moment: &Vector3<f64>,
    noise_std: f64,
) -> Result<Fim> {
    let matrix = match dipole::norm_gradient(displacement, moment) {
        Ok(g) => g.transpose() * g / (noise_std * noise_std),
        Err(Error::ZeroField) => Matrix3::zeros(),
        Err(e) => return Err(e),
    };
    Ok(Fim {
        matrix,
        model_kind: ModelKind::Scalar,
    })
}

/// Information from a single vector magnetometer at displacement `d`.
pub fn vector_fim(
    displacement: &Vector3<f64>,
    moment: &Vector3<f64>,
    noise_std: f64,
) -> Result<Fim> {
    let j = dipole::jacobian(displacement, moment)?;
    let mut matrix = j.transpose() * j / (noise_std * noise_std);
    // analytically symmetric; keep it so to the last bit
    matrix = (matrix + matrix.transpose()) * 0.5;
    Ok(Fim {
        matrix,
        model_kind: ModelKind::Vector,
    })
}

/// Total network information: the sum of per-sensor contributions of the
/// array's measurement kind.
pub fn total_fim(
    array: &SensorArray,
    target: &Vector3<f64>,
    moment: &Vector3<f64>,
    noise_std: f64,
) -> Result<Fim> {
    let mut matrix = Matrix3::zeros();
    for sensor in array.positions() {
        let d = sensor - target;
        let contribution = match array.model_kind() {
            ModelKind::Scalar => scalar_fim(&d, moment, noise_std)?,
            ModelKind::Vector => vector_fim(&d, moment, noise_std)?,
        };
        matrix += contribution.matrix;
    }
    Ok(Fim {
        matrix,
        model_kind: array.model_kind(),
    })
}

/// √Tr(F⁻¹) when the information matrix has full numeric rank;
/// `Unobservable` otherwise (the bound is infinite).
pub fn sqrt_trace_crlb(fim: &Fim) -> CrlbValue {
    let m = fim.to_dmatrix();
    if numeric_rank(&m, DEFAULT_RANK_TOL) < 3 {
        return CrlbValue::Unobservable;
    }
    match invert_spd(&m) {
        Ok(inv) => CrlbValue::Observable(inv.trace().sqrt()),
        Err(_) => CrlbValue::Unobservable,
    }
}

/// Rectangular evaluation region for bound maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapRegion {
    pub x_extent: [f64; 2],
    pub y_extent: [f64; 2],
    /// Node counts per axis; at least 2 each.
    pub nx: usize,
    pub ny: usize,
}

impl MapRegion {
    pub fn x_coords(&self) -> Vec<f64> {
        axis_coords(self.x_extent, self.nx)
    }

    pub fn y_coords(&self) -> Vec<f64> {
        axis_coords(self.y_extent, self.ny)
    }
}

fn axis_coords(extent: [f64; 2], n: usize) -> Vec<f64> {
    let step = (extent[1] - extent[0]) / (n - 1) as f64;
    (0..n).map(|i| extent[0] + step * i as f64).collect()
}

/// Bound values over a grid of candidate target positions at fixed height.
#[derive(Debug, Clone)]
pub struct CrlbMap {
    pub region: MapRegion,
    pub target_z: f64,
    /// Row-major over y then x: `values[iy * nx + ix]`.
    pub values: Vec<CrlbValue>,
}

impl CrlbMap {
    pub fn value_at(&self, ix: usize, iy: usize) -> CrlbValue {
        self.values[iy * self.region.nx + ix]
    }
}

/// Evaluate √Tr(CRLB) for the array at every node of `region`, with the
/// candidate target at height `target_z`. Nodes are independent and
/// evaluated in parallel; the result does not depend on evaluation order.
pub fn crlb_map(
    array: &SensorArray,
    region: &MapRegion,
    target_z: f64,
    moment: &Vector3<f64>,
    noise_std: f64,
) -> Result<CrlbMap> {
    if region.nx < 2 || region.ny < 2 {
        return Err(Error::InvalidConfig(format!(
            "map resolution must be at least 2 per axis, got {}x{}",
            region.nx, region.ny
        )));
    }
    let xs = region.x_coords();
    let ys = region.y_coords();
    let values = (0..region.nx * region.ny)
        .into_par_iter()
        .map(|idx| {
            let target = Vector3::new(xs[idx % region.nx], ys[idx / region.nx], target_z);
            total_fim(array, &target, moment, noise_std).map(|fim| sqrt_trace_crlb(&fim))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CrlbMap {
        region: *region,
        target_z,
        values,
    })
}

/// Per-step bound along a trajectory, in trajectory order.
pub fn along_trajectory(
    array: &SensorArray,
    trajectory: &Trajectory,
    moment: &Vector3<f64>,
    noise_std: f64,
) -> Result<Vec<CrlbValue>> {
    trajectory
        .states
        .iter()
        .map(|s| total_fim(array, &s.position, moment, noise_std).map(|f| sqrt_trace_crlb(&f)))
        .collect()
}
