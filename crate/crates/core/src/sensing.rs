//! Sensor-array geometry and the scalar/vector measurement models.
//!
//! A network is an ordered list of fixed sensor positions plus a measurement
//! kind. Scalar magnetometers report ‖B‖ (one value per sensor); vector
//! magnetometers report the full field (three values per sensor). The fusion
//! center consumes the stacked measurement vector in sensor order, so order
//! is part of the contract.

use nalgebra::{DVector, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dipole;
use crate::{Error, Result};

/// Which quantity each sensor in an array measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Field magnitude ‖B‖, one entry per sensor.
    Scalar,
    /// Full field vector, three entries per sensor.
    Vector,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Scalar => write!(f, "scalar"),
            ModelKind::Vector => write!(f, "vector"),
        }
    }
}

/// Fixed network of magnetometers with i.i.d. Gaussian noise of std
/// `noise_std` tesla per measured component.
#[derive(Debug, Clone)]
pub struct SensorArray {
    positions: Vec<Vector3<f64>>,
    model_kind: ModelKind,
    noise_std: f64,
}

impl SensorArray {
    pub fn new(
        positions: Vec<Vector3<f64>>,
        model_kind: ModelKind,
        noise_std: f64,
    ) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidGeometry("array has no sensors".into()));
        }
        if !(noise_std > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise_std must be > 0, got {noise_std}"
            )));
        }
        for (i, a) in positions.iter().enumerate() {
            if !a.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidGeometry(format!(
                    "sensor {i} has a non-finite position"
                )));
            }
            for (j, b) in positions.iter().enumerate().skip(i + 1) {
                if a == b {
                    return Err(Error::InvalidGeometry(format!(
                        "sensors {i} and {j} share the position {a:?}"
                    )));
                }
            }
        }
        Ok(Self {
            positions,
            model_kind,
            noise_std,
        })
    }

    /// Square grid anchored at (x_min, y_min): sensors at
    /// (x_min + i·spacing, y_min + j·spacing, depth) for every grid index
    /// inside the extents inclusive.
    pub fn grid(
        x_extent: [f64; 2],
        y_extent: [f64; 2],
        spacing: f64,
        depth: f64,
        model_kind: ModelKind,
        noise_std: f64,
    ) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "spacing must be > 0, got {spacing}"
            )));
        }
        let span_x = x_extent[1] - x_extent[0];
        let span_y = y_extent[1] - y_extent[0];
        if !(span_x >= 0.0) || !(span_y >= 0.0) {
            return Err(Error::InvalidGeometry(
                "grid extents are degenerate or reversed".into(),
            ));
        }
        // Small relative slack so an exactly-fitting last row is not lost to
        // float rounding.
        let nx = (span_x / spacing + 1e-9).floor() as usize + 1;
        let ny = (span_y / spacing + 1e-9).floor() as usize + 1;
        let mut positions = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                positions.push(Vector3::new(
                    x_extent[0] + spacing * i as f64,
                    y_extent[0] + spacing * j as f64,
                    depth,
                ));
            }
        }
        Self::new(positions, model_kind, noise_std)
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn model_kind(&self) -> ModelKind {
        self.model_kind
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    /// Stacked measurement dimension: n for scalar arrays, 3n for vector.
    pub fn measurement_dim(&self) -> usize {
        match self.model_kind {
            ModelKind::Scalar => self.len(),
            ModelKind::Vector => 3 * self.len(),
        }
    }

    /// Same network with the sensors at `removed` indices dropped,
    /// preserving the order of the survivors.
    pub fn without_sensors(&self, removed: &[usize]) -> Result<Self> {
        let keep: Vec<Vector3<f64>> = self
            .positions
            .iter()
            .enumerate()
            .filter(|(i, _)| !removed.contains(i))
            .map(|(_, p)| *p)
            .collect();
        Self::new(keep, self.model_kind, self.noise_std)
    }

    /// Noise-free stacked measurement of a dipole at `target` with moment
    /// `moment`, in sensor order.
    pub fn predict(
        &self,
        target: &Vector3<f64>,
        moment: &Vector3<f64>,
        time_index: usize,
    ) -> Result<MeasurementBatch> {
        let mut values = DVector::zeros(self.measurement_dim());
        self.predict_into(target, moment, &mut values)?;
        Ok(MeasurementBatch { time_index, values })
    }

    /// `predict` writing into a preallocated vector (hot path of the filter).
    pub(crate) fn predict_into(
        &self,
        target: &Vector3<f64>,
        moment: &Vector3<f64>,
        out: &mut DVector<f64>,
    ) -> Result<()> {
        debug_assert_eq!(out.len(), self.measurement_dim());
        match self.model_kind {
            ModelKind::Scalar => {
                for (i, sensor) in self.positions.iter().enumerate() {
                    out[i] = dipole::field_norm(&(sensor - target), moment)?;
                }
            }
            ModelKind::Vector => {
                for (i, sensor) in self.positions.iter().enumerate() {
                    let b = dipole::field(&(sensor - target), moment)?;
                    out.fixed_rows_mut::<3>(3 * i).copy_from(&b);
                }
            }
        }
        Ok(())
    }

    /// Noisy measurement: prediction plus i.i.d. zero-mean Gaussian noise of
    /// std `noise_std` per component, drawn from `rng` in component order.
    pub fn synthesize(
        &self,
        target: &Vector3<f64>,
        moment: &Vector3<f64>,
        time_index: usize,
        rng: &mut impl Rng,
    ) -> Result<MeasurementBatch> {
        let mut batch = self.predict(target, moment, time_index)?;
        let normal = Normal::new(0.0, self.noise_std)
            .map_err(|e| Error::InvalidConfig(format!("noise_std: {e}")))?;
        for v in batch.values.iter_mut() {
            *v += normal.sample(rng);
        }
        Ok(batch)
    }
}

/// Stacked measurement vector received by the fusion center at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBatch {
    pub time_index: usize,
    /// Length n (scalar) or 3n (vector), sensor order preserved.
    pub values: DVector<f64>,
}
