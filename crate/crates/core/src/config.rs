//! Scenario configuration: a single JSON document with sections
//! `{array, noise, target, trajectory, filter, experiment, map}`, all units
//! SI. The same schema drives every command, and the canned scenario
//! library used by the experiment suite is generated from code here so the
//! files on disk and the in-memory configs can never drift apart.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::crlb::MapRegion;
use crate::dynamics::{ProcessModel, Trajectory};
use crate::sensing::{ModelKind, SensorArray};
use crate::ukf::UkfConfig;
use crate::{Error, Result};

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub array: ArraySection,
    pub noise: NoiseSection,
    pub target: TargetSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectorySection>,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    pub model_kind: ModelKind,
    pub geometry: ArrayGeometry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ArrayGeometry {
    /// Square grid anchored at the minimum corner, all sensors at `depth`.
    Grid {
        x_extent: [f64; 2],
        y_extent: [f64; 2],
        spacing: f64,
        depth: f64,
    },
    /// Explicit sensor positions (meters).
    Explicit { positions: Vec<[f64; 3]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// Measurement noise std σ, tesla per measured component.
    pub std_tesla: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    /// Dipole moment, A·m².
    pub moment: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TrajectorySection {
    Circular {
        center: [f64; 3],
        radius: f64,
        speed: f64,
        initial_bearing: f64,
        dt: f64,
        duration: f64,
    },
    Line {
        start: [f64; 3],
        velocity: [f64; 3],
        dt: f64,
        duration: f64,
    },
}

impl TrajectorySection {
    pub fn dt(&self) -> f64 {
        match self {
            TrajectorySection::Circular { dt, .. } => *dt,
            TrajectorySection::Line { dt, .. } => *dt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    /// Sigma-point spread parameter κ > 0.
    pub kappa: f64,
    /// White-jerk intensity q of the motion model, (m/s³)²·s.
    pub jerk_psd: f64,
    /// Std of the initial-state perturbation per block [pos, vel, acc].
    pub init_perturbation_std: [f64; 3],
    /// Initial covariance diagonal per block [pos, vel, acc].
    pub init_covariance_diag: [f64; 3],
}

impl Default for FilterSection {
    fn default() -> Self {
        // Calibrated against the bay-scale tracking studies: the white-jerk
        // intensity must admit the slow turn of the circular pass without
        // inflating the coasting covariance past what the sensor spacing
        // can reacquire, and the handoff is a tight acquisition fix with
        // the acceleration taken as known at start.
        Self {
            kappa: 1.0,
            jerk_psd: 2e-7,
            init_perturbation_std: [5.0, 0.3, 0.0],
            init_covariance_diag: [25.0, 0.09, 1e-6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// A trial whose error ever exceeds this is counted as failed.
    pub failure_threshold_m: f64,
    pub runs: usize,
    pub master_seed: u64,
    /// Outage sweep sizes for resilience runs (empty = no sweep).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failed_counts: Vec<usize>,
    /// Noise levels swept by resilience runs; empty = just `noise.std_tesla`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub noise_levels_tesla: Vec<f64>,
    /// Model kinds swept by resilience runs; empty = just `array.model_kind`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub model_kinds: Vec<ModelKind>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            failure_threshold_m: 200.0,
            runs: 100,
            master_seed: 42,
            failed_counts: Vec::new(),
            noise_levels_tesla: Vec::new(),
            model_kinds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSection {
    pub x_extent: [f64; 2],
    pub y_extent: [f64; 2],
    /// Node counts [nx, ny], at least 2 each.
    pub resolution: [usize; 2],
    pub target_z: f64,
    /// Kinds to map; empty = just `array.model_kind`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub model_kinds: Vec<ModelKind>,
}

impl MapSection {
    pub fn region(&self) -> MapRegion {
        MapRegion {
            x_extent: self.x_extent,
            y_extent: self.y_extent,
            nx: self.resolution[0],
            ny: self.resolution[1],
        }
    }
}

impl ScenarioConfig {
    /// Parse a JSON config document.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Canonical JSON serialization (pretty-printed, stable field order).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    pub fn moment(&self) -> Vector3<f64> {
        Vector3::from(self.target.moment)
    }

    /// Build the sensor array, optionally overriding the measurement kind
    /// and noise std (used by sweeps).
    pub fn build_array(
        &self,
        kind: Option<ModelKind>,
        noise_std: Option<f64>,
    ) -> Result<SensorArray> {
        let kind = kind.unwrap_or(self.array.model_kind);
        let noise = noise_std.unwrap_or(self.noise.std_tesla);
        match &self.array.geometry {
            ArrayGeometry::Grid {
                x_extent,
                y_extent,
                spacing,
                depth,
            } => SensorArray::grid(*x_extent, *y_extent, *spacing, *depth, kind, noise),
            ArrayGeometry::Explicit { positions } => SensorArray::new(
                positions.iter().map(|p| Vector3::from(*p)).collect(),
                kind,
                noise,
            ),
        }
    }

    pub fn build_trajectory(&self) -> Result<Trajectory> {
        match &self.trajectory {
            None => Err(Error::InvalidConfig(
                "trajectory: section required for this command".into(),
            )),
            Some(TrajectorySection::Circular {
                center,
                radius,
                speed,
                initial_bearing,
                dt,
                duration,
            }) => Trajectory::circular(
                Vector3::from(*center),
                *radius,
                *speed,
                *dt,
                *duration,
                *initial_bearing,
            ),
            Some(TrajectorySection::Line {
                start,
                velocity,
                dt,
                duration,
            }) => Trajectory::line(Vector3::from(*start), Vector3::from(*velocity), *dt, *duration),
        }
    }

    pub fn trajectory_dt(&self) -> Result<f64> {
        self.trajectory
            .as_ref()
            .map(|t| t.dt())
            .ok_or_else(|| Error::InvalidConfig("trajectory: section missing".into()))
    }

    pub fn process_model(&self) -> Result<ProcessModel> {
        ProcessModel::new(self.trajectory_dt()?, self.filter.jerk_psd)
    }

    pub fn ukf_config(&self) -> Result<UkfConfig> {
        UkfConfig::new(self.filter.kappa)
    }

    /// Noise levels for sweeps, defaulting to the scenario's own σ.
    pub fn noise_levels(&self) -> Vec<f64> {
        if self.experiment.noise_levels_tesla.is_empty() {
            vec![self.noise.std_tesla]
        } else {
            self.experiment.noise_levels_tesla.clone()
        }
    }

    /// Model kinds for sweeps, defaulting to the array's own kind.
    pub fn model_kinds(&self) -> Vec<ModelKind> {
        if self.experiment.model_kinds.is_empty() {
            vec![self.array.model_kind]
        } else {
            self.experiment.model_kinds.clone()
        }
    }

    /// Model kinds mapped by `crlb-map`, defaulting to the array's own kind.
    pub fn map_kinds(&self) -> Vec<ModelKind> {
        match &self.map {
            Some(m) if !m.model_kinds.is_empty() => m.model_kinds.clone(),
            _ => vec![self.array.model_kind],
        }
    }

    /// Check every section, naming the offending field in the error.
    pub fn validate(&self) -> Result<()> {
        if !(self.noise.std_tesla > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise.std_tesla must be > 0, got {}",
                self.noise.std_tesla
            )));
        }
        if self.target.moment.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("target.moment must be finite".into()));
        }
        self.build_array(None, None)
            .map_err(|e| Error::InvalidConfig(format!("array: {e}")))?;
        if let Some(t) = &self.trajectory {
            self.build_trajectory()
                .map_err(|e| Error::InvalidConfig(format!("trajectory: {e}")))?;
            if !(t.dt() > 0.0) {
                return Err(Error::InvalidConfig("trajectory.dt must be > 0".into()));
            }
        }
        if !(self.filter.kappa > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "filter.kappa must be > 0, got {}",
                self.filter.kappa
            )));
        }
        if !(self.filter.jerk_psd >= 0.0) {
            return Err(Error::InvalidConfig("filter.jerk_psd must be >= 0".into()));
        }
        if self.filter.init_perturbation_std.iter().any(|&s| !(s >= 0.0)) {
            return Err(Error::InvalidConfig(
                "filter.init_perturbation_std must be >= 0".into(),
            ));
        }
        if self.filter.init_covariance_diag.iter().any(|&s| !(s >= 0.0)) {
            return Err(Error::InvalidConfig(
                "filter.init_covariance_diag must be >= 0".into(),
            ));
        }
        if !(self.experiment.failure_threshold_m > 0.0) {
            return Err(Error::InvalidConfig(
                "experiment.failure_threshold_m must be > 0".into(),
            ));
        }
        if self.experiment.runs == 0 {
            return Err(Error::InvalidConfig("experiment.runs must be >= 1".into()));
        }
        if self.experiment.noise_levels_tesla.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidConfig(
                "experiment.noise_levels_tesla must be > 0".into(),
            ));
        }
        if let Some(map) = &self.map {
            if map.resolution[0] < 2 || map.resolution[1] < 2 {
                return Err(Error::InvalidConfig(format!(
                    "map.resolution must be at least 2 per axis, got {:?}",
                    map.resolution
                )));
            }
            if !(map.x_extent[1] > map.x_extent[0]) || !(map.y_extent[1] > map.y_extent[0]) {
                return Err(Error::InvalidConfig("map extents are empty".into()));
            }
        }
        Ok(())
    }

    /// A small, valid scenario used as a starting point in tests.
    pub fn example() -> Self {
        Self {
            array: ArraySection {
                model_kind: ModelKind::Vector,
                geometry: ArrayGeometry::Grid {
                    x_extent: [-100.0, 100.0],
                    y_extent: [-100.0, 100.0],
                    spacing: 100.0,
                    depth: -25.0,
                },
            },
            noise: NoiseSection { std_tesla: 1e-11 },
            target: TargetSection {
                moment: [600.0, 0.0, 0.0],
            },
            trajectory: None,
            filter: FilterSection::default(),
            experiment: ExperimentSection::default(),
            map: None,
        }
    }
}

pub const PICOTESLA: f64 = 1e-12;

/// Canned scenario library backing the experiment suite.
///
/// - `fig2_demo`, `fig4a_demo`, `fig4b_demo`: single-configuration bound
///   maps for the few-sensor demonstration geometries.
/// - `scenario1_25m`, `scenario1_80m`: the 49-sensor grid with bound maps
///   and per-step bounds along a circular pass, at both sensor depths.
/// - `scenario2_<spacing>m_<noise>pT_<kind>`: bay-scale tracking runs over
///   a 3400×3000 m grid, one revolution of an 11-knot circular pass.
/// - `table2_caseI/II/III`: outage resilience sweeps (10/15/20 failed
///   sensors) over both kinds and the 32/160 pT noise levels.
pub fn canned_scenarios() -> Vec<(String, ScenarioConfig)> {
    let mut out = Vec::new();

    let demo_map = |kinds: Vec<ModelKind>| MapSection {
        x_extent: [-50.0, 50.0],
        y_extent: [-50.0, 50.0],
        resolution: [41, 41],
        target_z: 0.0,
        model_kinds: kinds,
    };

    // three scalar sensors, bound map around them
    let mut fig2 = ScenarioConfig::example();
    fig2.array = ArraySection {
        model_kind: ModelKind::Scalar,
        geometry: ArrayGeometry::Explicit {
            positions: vec![
                [10.0, 10.0, -25.0],
                [10.0, -10.0, -25.0],
                [-10.0, -10.0, -25.0],
            ],
        },
    };
    fig2.map = Some(demo_map(vec![]));
    out.push(("fig2_demo".to_string(), fig2));

    // one vector sensor, two moment orientations
    for (name, moment) in [
        ("fig4a_demo", [600.0, 0.0, 0.0]),
        ("fig4b_demo", [600.0, 600.0, 2.0]),
    ] {
        let mut cfg = ScenarioConfig::example();
        cfg.array = ArraySection {
            model_kind: ModelKind::Vector,
            geometry: ArrayGeometry::Explicit {
                positions: vec![[0.0, 0.0, -25.0]],
            },
        };
        cfg.target.moment = moment;
        cfg.map = Some(demo_map(vec![]));
        out.push((name.to_string(), cfg));
    }

    // 49-sensor grid at 10 pT, circular pass over the array
    for (name, depth) in [("scenario1_25m", -25.0), ("scenario1_80m", -80.0)] {
        let mut cfg = ScenarioConfig::example();
        cfg.array = ArraySection {
            model_kind: ModelKind::Vector,
            geometry: ArrayGeometry::Grid {
                x_extent: [-400.0, 800.0],
                y_extent: [-800.0, 400.0],
                spacing: 200.0,
                depth,
            },
        };
        cfg.noise.std_tesla = 10.0 * PICOTESLA;
        cfg.trajectory = Some(TrajectorySection::Circular {
            center: [200.0, -200.0, 0.0],
            radius: 400.0,
            speed: 5.0,
            initial_bearing: 0.0,
            dt: 1.0,
            duration: 503.0,
        });
        cfg.map = Some(MapSection {
            x_extent: [-400.0, 800.0],
            y_extent: [-800.0, 400.0],
            resolution: [61, 61],
            target_z: 0.0,
            model_kinds: vec![ModelKind::Scalar, ModelKind::Vector],
        });
        out.push((name.to_string(), cfg));
    }

    // bay-scale tracking grid: a circular pass at ~11 knots
    let speed = 5.66;
    let duration = 996.0;
    // Circle geometry tuned so the path re-passes within ~50 m of some
    // sensor at least every ~48 s on the 200 m grid and every ~97 s on the
    // 400 m grid; over the worst such stretch the constant-acceleration
    // model drifts only ~40 m, well inside the 200 m failure threshold.
    // The pass starts 20 s of travel before a 50 m pass of the sensor at
    // (2400, 1600) — a node of both the 200 m and 400 m grids — so the
    // filter locks on at every spacing before its initial velocity
    // uncertainty matters, while no sensor sits inside the initial
    // sigma-point cloud at t = 0.
    let radius = 850.0;
    let center = [1600.0, 1600.0, 0.0];
    let initial_bearing = -20.0 * speed / radius;
    let scenario2 = |spacing: f64, noise_pt: f64, kind: ModelKind| {
        let mut cfg = ScenarioConfig::example();
        cfg.array = ArraySection {
            model_kind: kind,
            geometry: ArrayGeometry::Grid {
                x_extent: [0.0, 3400.0],
                y_extent: [0.0, 3000.0],
                spacing,
                depth: -24.0,
            },
        };
        cfg.noise.std_tesla = noise_pt * PICOTESLA;
        cfg.trajectory = Some(TrajectorySection::Circular {
            center,
            radius,
            speed,
            initial_bearing,
            dt: 1.0,
            duration,
        });
        cfg
    };
    for spacing in [200.0, 300.0, 400.0] {
        for noise_pt in [32.0, 160.0, 320.0] {
            for kind in [ModelKind::Scalar, ModelKind::Vector] {
                let name = format!("scenario2_{spacing:.0}m_{noise_pt:.0}pT_{kind}");
                out.push((name, scenario2(spacing, noise_pt, kind)));
            }
        }
    }

    // outage resilience sweeps on the densest grid
    for (name, failed) in [
        ("table2_caseI", 10usize),
        ("table2_caseII", 15),
        ("table2_caseIII", 20),
    ] {
        let mut cfg = scenario2(200.0, 32.0, ModelKind::Vector);
        cfg.experiment.failed_counts = vec![failed];
        cfg.experiment.noise_levels_tesla = vec![32.0 * PICOTESLA, 160.0 * PICOTESLA];
        cfg.experiment.model_kinds = vec![ModelKind::Scalar, ModelKind::Vector];
        out.push((name.to_string(), cfg));
    }

    out
}

/// Look up one canned scenario by name.
pub fn canned_scenario(name: &str) -> Option<ScenarioConfig> {
    canned_scenarios()
        .into_iter()
        .find(|(n, _)| n == name)
        .map(|(_, c)| c)
}
