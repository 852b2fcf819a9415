//! Deterministic CSV/JSON rendering of results.
//!
//! All numbers are written with Rust's shortest-round-trip float formatting,
//! so a fixed input produces byte-identical output. Undefined RMSE steps are
//! written as `nan`; unobservable bound values as `inf` with the observable
//! flag cleared.

use std::fmt::Write as _;

use crate::config::ScenarioConfig;
use crate::crlb::{CrlbMap, CrlbValue};
use crate::dynamics::Trajectory;
use crate::experiments::{Aggregate, ResilienceEntry};
use crate::ukf::TrackResult;

/// `k,x,y,z,vx,vy,vz,ax,ay,az`
pub fn render_trajectory_csv(trajectory: &Trajectory) -> String {
    let mut out = String::from("k,x,y,z,vx,vy,vz,ax,ay,az\n");
    for (k, s) in trajectory.states.iter().enumerate() {
        let _ = writeln!(
            out,
            "{k},{},{},{},{},{},{},{},{},{}",
            s.position.x,
            s.position.y,
            s.position.z,
            s.velocity.x,
            s.velocity.y,
            s.velocity.z,
            s.acceleration.x,
            s.acceleration.y,
            s.acceleration.z
        );
    }
    out
}

/// `k,x,y,z,vx,vy,vz,ax,ay,az,error_m,cov_trace`
pub fn render_track_csv(result: &TrackResult) -> String {
    let mut out = String::from("k,x,y,z,vx,vy,vz,ax,ay,az,error_m,cov_trace\n");
    for step in &result.steps {
        let m = &step.mean;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            step.time_index,
            m[0],
            m[1],
            m[2],
            m[3],
            m[4],
            m[5],
            m[6],
            m[7],
            m[8],
            step.error_m,
            step.covariance_trace
        );
    }
    out
}

/// `x,y,value_m,observable` plus a `log10_value_m` column on request.
pub fn render_crlb_map_csv(map: &CrlbMap, log10: bool) -> String {
    let mut out = String::new();
    out.push_str(if log10 {
        "x,y,value_m,observable,log10_value_m\n"
    } else {
        "x,y,value_m,observable\n"
    });
    let xs = map.region.x_coords();
    let ys = map.region.y_coords();
    for (iy, y) in ys.iter().enumerate() {
        for (ix, x) in xs.iter().enumerate() {
            let v = map.value_at(ix, iy);
            let (value, flag) = match v {
                CrlbValue::Observable(m) => (m, 1),
                CrlbValue::Unobservable => (f64::INFINITY, 0),
            };
            if log10 {
                let _ = writeln!(out, "{x},{y},{value},{flag},{}", value.log10());
            } else {
                let _ = writeln!(out, "{x},{y},{value},{flag}");
            }
        }
    }
    out
}

/// `k,value_scalar_m,value_vector_m`
pub fn render_crlb_trajectory_csv(scalar: &[CrlbValue], vector: &[CrlbValue]) -> String {
    let mut out = String::from("k,value_scalar_m,value_vector_m\n");
    for (k, (s, v)) in scalar.iter().zip(vector).enumerate() {
        let _ = writeln!(out, "{k},{},{}", s.meters_or_inf(), v.meters_or_inf());
    }
    out
}

/// `k,t_s,rmse_m,n_alive_trials`
pub fn render_rmse_csv(aggregate: &Aggregate) -> String {
    let mut out = String::from("k,t_s,rmse_m,n_alive_trials\n");
    for (k, (rmse, alive)) in aggregate.rmse_m.iter().zip(&aggregate.alive).enumerate() {
        let t = aggregate.dt * k as f64;
        let value = rmse.unwrap_or(f64::NAN);
        let _ = writeln!(out, "{k},{t},{value},{alive}");
    }
    out
}

/// Failure-rate summary with the full config echoed for provenance.
pub fn render_failure_json(cfg: &ScenarioConfig, aggregate: &Aggregate) -> String {
    let failures = (aggregate.failure_rate * aggregate.runs as f64).round() as usize;
    let rmse_min = aggregate
        .rmse_m
        .iter()
        .flatten()
        .fold(f64::INFINITY, |m, &v| m.min(v));
    let doc = serde_json::json!({
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "runs": aggregate.runs,
        "failures": failures,
        "failure_rate": aggregate.failure_rate,
        "rmse_min_m": if rmse_min.is_finite() { Some(rmse_min) } else { None },
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("summary serializes");
    text.push('\n');
    text
}

/// `failed_count,noise_pT,model_kind,failure_rate`
pub fn render_resilience_csv(entries: &[ResilienceEntry]) -> String {
    let mut out = String::from("failed_count,noise_pT,model_kind,failure_rate\n");
    for e in entries {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            e.failed_count,
            e.noise_std_tesla / 1e-12,
            e.model_kind,
            e.aggregate.failure_rate
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crlb::MapRegion;
    use nalgebra::Vector3;

    #[test]
    fn trajectory_csv_shape() {
        let traj = Trajectory::line(Vector3::zeros(), Vector3::new(1.0, 0.0, 0.0), 1.0, 2.0).unwrap();
        let csv = render_trajectory_csv(&traj);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "k,x,y,z,vx,vy,vz,ax,ay,az");
        assert_eq!(lines[2], "1,1,0,0,1,0,0,0,0,0");
    }

    #[test]
    fn rmse_csv_marks_undefined_steps() {
        let agg = crate::experiments::Aggregate {
            rmse_m: vec![None, Some(2.0)],
            alive: vec![0, 1],
            failure_rate: 1.0,
            runs: 1,
            dt: 0.5,
        };
        let csv = render_rmse_csv(&agg);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "0,0,NaN,0");
        assert_eq!(lines[2], "1,0.5,2,1");
    }

    #[test]
    fn map_csv_flags_unobservable_nodes() {
        let map = CrlbMap {
            region: MapRegion {
                x_extent: [0.0, 1.0],
                y_extent: [0.0, 1.0],
                nx: 2,
                ny: 2,
            },
            target_z: 0.0,
            values: vec![
                CrlbValue::Observable(10.0),
                CrlbValue::Unobservable,
                CrlbValue::Observable(100.0),
                CrlbValue::Observable(1.0),
            ],
        };
        let csv = render_crlb_map_csv(&map, true);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x,y,value_m,observable,log10_value_m");
        assert_eq!(lines[1], "0,0,10,1,1");
        assert_eq!(lines[2], "1,0,inf,0,inf");
        assert_eq!(lines[3], "0,1,100,1,2");
        assert_eq!(lines[4], "1,1,1,1,0");
    }

    #[test]
    fn failure_json_is_stable() {
        let cfg = ScenarioConfig::example();
        let agg = crate::experiments::Aggregate {
            rmse_m: vec![Some(1.5)],
            alive: vec![3],
            failure_rate: 0.25,
            runs: 4,
            dt: 1.0,
        };
        let a = render_failure_json(&cfg, &agg);
        let b = render_failure_json(&cfg, &agg);
        assert_eq!(a, b);
        assert!(a.contains("\"failure_rate\": 0.25"));
        assert!(a.contains("\"failures\": 1"));
    }
}
