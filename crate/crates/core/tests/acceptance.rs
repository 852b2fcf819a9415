//! Acceptance suite: one test per acceptance criterion, each printing a
//! PASS line per sub-check (visible with `--nocapture`). Every tolerance is
//! pinned here in code. Two tracking bands at 160 pT on sparse grids are
//! known not to be met by this tracker (see the failure messages for the
//! measured mechanism); they are asserted faithfully rather than loosened.

use magtrack_core::config::canned_scenario;
use magtrack_core::dynamics::{ProcessModel, Trajectory, STATE_DIM};
use magtrack_core::experiments::{median_ratio, monte_carlo, resilience_study, rmse_ratio};
use magtrack_core::numerics::max_abs;
use magtrack_core::rng::seeded_rng;
use magtrack_core::sensing::{ModelKind, SensorArray};
use magtrack_core::ukf::{predict, track, FilterEstimate, UkfConfig};
use magtrack_core::{crlb, dipole};

use nalgebra::{DMatrix, DVector, Matrix3, RowVector3, Vector3};
use rand::Rng;

fn random_geometry(rng: &mut impl Rng) -> (Vector3<f64>, Vector3<f64>) {
    let d = Vector3::new(
        rng.gen_range(-100.0..100.0),
        rng.gen_range(-100.0..100.0),
        rng.gen_range(5.0..100.0),
    );
    let m = Vector3::new(
        rng.gen_range(-800.0..800.0),
        rng.gen_range(-800.0..800.0),
        rng.gen_range(-800.0..800.0),
    );
    (d, m)
}

/// Criterion 1: field, Jacobian, and norm gradient agree with central
/// finite differences to 1e-6 relative over 100 seeded configurations, and
/// the r⁻³ / r⁻⁴ scale laws hold to 1e-9 relative.
#[test]
fn criterion_1_kernel_correctness() {
    let mut rng = seeded_rng(101);
    for _ in 0..100 {
        let (d, m) = random_geometry(&mut rng);
        let h = 1e-4 * d.norm();

        let jac = dipole::jacobian(&d, &m).unwrap();
        let mut fd_jac = Matrix3::zeros();
        for axis in 0..3 {
            let mut dp = d;
            let mut dm = d;
            dp[axis] += h;
            dm[axis] -= h;
            fd_jac.set_column(
                axis,
                &((dipole::field(&dp, &m).unwrap() - dipole::field(&dm, &m).unwrap())
                    / (2.0 * h)),
            );
        }
        let scale = jac.amax().max(fd_jac.amax());
        assert!(
            (jac - fd_jac).amax() <= 1e-6 * scale,
            "field Jacobian disagrees with finite differences at d={d:?} m={m:?}"
        );

        if dipole::field_norm(&d, &m).unwrap() >= 1e-15 {
            let grad = dipole::norm_gradient(&d, &m).unwrap();
            let mut fd_grad = RowVector3::zeros();
            for axis in 0..3 {
                let mut dp = d;
                let mut dm = d;
                dp[axis] += h;
                dm[axis] -= h;
                fd_grad[axis] = (dipole::field_norm(&dp, &m).unwrap()
                    - dipole::field_norm(&dm, &m).unwrap())
                    / (2.0 * h);
            }
            let gscale = grad.amax().max(fd_grad.amax());
            assert!(
                (grad - fd_grad).amax() <= 1e-6 * gscale,
                "norm gradient disagrees with finite differences at d={d:?} m={m:?}"
            );
        }

        let c = rng.gen_range(0.5..4.0);
        let b1 = dipole::field(&d, &m).unwrap();
        let b2 = dipole::field(&(d * c), &m).unwrap();
        assert!(
            (b2 - b1 / (c * c * c)).amax() <= 1e-9 * b1.amax(),
            "field r^-3 scale law failed"
        );
        let j2 = dipole::jacobian(&(d * c), &m).unwrap();
        assert!(
            (j2 - jac / c.powi(4)).amax() <= 1e-9 * jac.amax(),
            "Jacobian r^-4 scale law failed"
        );
    }
    println!("acceptance criterion 1 (kernel correctness): PASS");
}

/// Criterion 2: single scalar sensor FIM has numeric rank ≤ 1 on 10⁴
/// random configurations, a single vector sensor is generically rank 3,
/// and vector-minus-scalar information is PSD throughout.
#[test]
fn criterion_2_fim_structure() {
    let mut rng = seeded_rng(202);
    let sigma = 1e-11;
    for i in 0..10_000 {
        let (d, m) = random_geometry(&mut rng);
        let s = crlb::scalar_fim(&d, &m, sigma).unwrap();
        assert!(s.rank() <= 1, "config {i}: scalar FIM rank {}", s.rank());

        // vector rank and PSD ordering sampled every 10th config to keep
        // the eigen-decompositions within the time budget
        if i % 10 == 0 {
            let v = crlb::vector_fim(&d, &m, sigma).unwrap();
            assert_eq!(v.rank(), 3, "config {i}: vector FIM rank");
            let eigs = nalgebra::SymmetricEigen::new(v.matrix - s.matrix).eigenvalues;
            let floor = -1e-10 * v.matrix.trace();
            assert!(
                eigs.iter().all(|&e| e >= floor),
                "config {i}: vector-scalar FIM difference not PSD"
            );
        }
    }
    println!("acceptance criterion 2 (FIM structure): PASS");
}

/// Criterion 3: √Tr(CRLB) doubles exactly (1e-12 relative) when σ doubles.
#[test]
fn criterion_3_crlb_scaling() {
    let mut rng = seeded_rng(303);
    for _ in 0..50 {
        let (d, m) = random_geometry(&mut rng);
        let base = crlb::sqrt_trace_crlb(&crlb::vector_fim(&d, &m, 1e-11).unwrap());
        let doubled = crlb::sqrt_trace_crlb(&crlb::vector_fim(&d, &m, 2e-11).unwrap());
        if let (crlb::CrlbValue::Observable(a), crlb::CrlbValue::Observable(b)) = (base, doubled) {
            assert!(
                (b - 2.0 * a).abs() <= 1e-12 * b.abs(),
                "doubling noise did not double the bound: {a} vs {b}"
            );
        } else {
            panic!("generic geometry must be observable");
        }
    }
    println!("acceptance criterion 3 (CRLB noise scaling): PASS");
}

/// Criterion 4: on the 49-sensor grid at 10 pT the vector bound beats the
/// scalar bound at every trajectory step for both depths, and the
/// single-vector-sensor map is symmetric about the x-axis for a moment
/// aligned with +x.
#[test]
fn criterion_4_scenario_grid_bounds() {
    for name in ["scenario1_25m", "scenario1_80m"] {
        let cfg = canned_scenario(name).unwrap();
        let trajectory = cfg.build_trajectory().unwrap();
        let moment = cfg.moment();
        let sigma = cfg.noise.std_tesla;
        let scalar = cfg.build_array(Some(ModelKind::Scalar), None).unwrap();
        let vector = cfg.build_array(Some(ModelKind::Vector), None).unwrap();
        assert_eq!(scalar.len(), 49);
        let s = crlb::along_trajectory(&scalar, &trajectory, &moment, sigma).unwrap();
        let v = crlb::along_trajectory(&vector, &trajectory, &moment, sigma).unwrap();
        for (k, (sv, vv)) in s.iter().zip(&v).enumerate() {
            assert!(
                vv.meters_or_inf() < sv.meters_or_inf(),
                "{name} step {k}: vector bound {} not below scalar bound {}",
                vv.meters_or_inf(),
                sv.meters_or_inf()
            );
        }
        println!("acceptance criterion 4: vector < scalar bound along the {name} pass: PASS");
    }

    let cfg = canned_scenario("fig4a_demo").unwrap();
    let map_section = cfg.map.as_ref().unwrap();
    let array = cfg.build_array(None, None).unwrap();
    let map = crlb::crlb_map(
        &array,
        &map_section.region(),
        map_section.target_z,
        &cfg.moment(),
        cfg.noise.std_tesla,
    )
    .unwrap();
    let (nx, ny) = (map.region.nx, map.region.ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let a = map.value_at(ix, iy);
            let b = map.value_at(ix, ny - 1 - iy);
            match (a, b) {
                (crlb::CrlbValue::Observable(x), crlb::CrlbValue::Observable(y)) => {
                    assert!(
                        (x - y).abs() <= 1e-9 * x.abs(),
                        "map asymmetric about the x-axis at node ({ix},{iy})"
                    );
                }
                (x, y) => assert_eq!(x, y, "observability not mirrored at ({ix},{iy})"),
            }
        }
    }
    println!("acceptance criterion 4 (grid bounds and map symmetry): PASS");
}

/// Criterion 5: with the linear transition the sigma-point prediction
/// equals the closed-form Kalman prediction to 1e-9 relative, and a
/// noise-free truth-initialized line track stays within 1e-6 m.
#[test]
fn criterion_5_ukf_oracles() {
    let cfg = UkfConfig::new(1.0).unwrap();
    let pm = ProcessModel::new(1.0, 0.05).unwrap();
    let f = pm.transition_matrix();
    let mut rng = seeded_rng(505);
    for _ in 0..20 {
        let mean = DVector::from_fn(STATE_DIM, |_, _| rng.gen_range(-50.0..50.0));
        let g = DMatrix::from_fn(STATE_DIM, STATE_DIM, |_, _| rng.gen_range(-1.0..1.0));
        let cov = &g * g.transpose() + DMatrix::identity(STATE_DIM, STATE_DIM) * 0.1;
        let est = FilterEstimate::new(mean, cov).unwrap();
        let predicted = predict(&est, &pm, &cfg).unwrap();
        let mean_oracle = &f * &est.mean;
        let cov_oracle = &f * &est.covariance * f.transpose() + pm.noise_covariance();
        assert!(
            (&predicted.mean - &mean_oracle).norm() <= 1e-9 * mean_oracle.norm(),
            "predicted mean deviates from the linear oracle"
        );
        assert!(
            max_abs(&(&predicted.covariance - &cov_oracle)) <= 1e-9 * max_abs(&cov_oracle),
            "predicted covariance deviates from the linear oracle"
        );
    }
    println!("acceptance criterion 5: sigma-point prediction matches the linear oracle: PASS");

    // exact regime: noise-free measurements, truth init, exact motion model
    let trajectory = Trajectory::line(
        Vector3::new(-50.0, 10.0, 0.0),
        Vector3::new(1.0, 0.5, 0.0),
        1.0,
        100.0,
    )
    .unwrap();
    let array = SensorArray::new(
        vec![
            Vector3::new(40.0, 35.0, -25.0),
            Vector3::new(-30.0, 20.0, -25.0),
            Vector3::new(10.0, -45.0, -25.0),
            Vector3::new(-15.0, -25.0, -25.0),
        ],
        ModelKind::Vector,
        1e-20,
    )
    .unwrap();
    let init = FilterEstimate::new(
        trajectory.states[0].to_vector(),
        DMatrix::from_diagonal(&DVector::from_vec(vec![
            1e-12, 1e-12, 1e-12, 1e-14, 1e-14, 1e-14, 1e-16, 1e-16, 1e-16,
        ])),
    )
    .unwrap();
    let pm0 = ProcessModel::new(1.0, 0.0).unwrap();
    let result = track(
        &trajectory,
        &array,
        &Vector3::new(600.0, 0.0, 0.0),
        &cfg,
        &pm0,
        &init,
        &mut seeded_rng(1),
    );
    assert!(result.diverged_at.is_none(), "exact-regime track diverged");
    assert_eq!(result.steps.len(), 101);
    let max_err = result.errors().into_iter().fold(0.0f64, f64::max);
    assert!(max_err <= 1e-6, "exact-regime error reached {max_err:e} m");
    println!("acceptance criterion 5 (UKF oracle equivalence): PASS");
}

/// Criterion 6: tracking bands on the bay-scale grids at 100 runs.
#[test]
fn criterion_6_tracking_bands() {
    let started = std::time::Instant::now();
    let run = |name: &str| {
        let cfg = canned_scenario(name).unwrap();
        assert_eq!(cfg.experiment.runs, 100);
        monte_carlo(&cfg).unwrap()
    };

    let scalar_32 = run("scenario2_200m_32pT_scalar");
    assert!(
        (0.02..=0.20).contains(&scalar_32.failure_rate),
        "scalar 200 m / 32 pT failure rate {} outside [0.02, 0.20]",
        scalar_32.failure_rate
    );
    println!(
        "acceptance criterion 6: scalar 200 m/32 pT failure rate {:.3} in [0.02, 0.20]: PASS",
        scalar_32.failure_rate
    );

    let vector_32 = run("scenario2_200m_32pT_vector");
    assert!(
        vector_32.failure_rate <= 0.01,
        "vector 200 m / 32 pT failure rate {} above 0.01",
        vector_32.failure_rate
    );
    println!(
        "acceptance criterion 6: vector 200 m/32 pT failure rate {:.3} <= 0.01: PASS",
        vector_32.failure_rate
    );

    let ratios = rmse_ratio(&scalar_32, &vector_32).unwrap();
    let median = median_ratio(&ratios).expect("both aggregates define RMSE somewhere");
    assert!(median >= 3.0, "median scalar/vector RMSE ratio {median} below 3");
    println!("acceptance criterion 6: median scalar/vector RMSE ratio {median:.1} >= 3: PASS");

    let scalar_400 = run("scenario2_400m_160pT_scalar");
    assert!(
        scalar_400.failure_rate >= 0.50,
        "scalar 400 m / 160 pT failure rate {} below 0.50",
        scalar_400.failure_rate
    );
    println!(
        "acceptance criterion 6: scalar 400 m/160 pT failure rate {:.3} >= 0.50: PASS",
        scalar_400.failure_rate
    );

    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs() <= 600,
        "criterion 6 runtime {}s exceeded 10 min",
        elapsed.as_secs()
    );

    // Known-unattained band: a 400 m grid at 160 pT gives this tracker only
    // brief, sparse high-SNR windows; they pin position but not velocity,
    // so inter-pass coasting drifts past the 200 m failure threshold late
    // in the pass. Measured across wide tuning scans the floor stays near
    // 100% failures; the band is asserted as required rather than loosened.
    let vector_400 = run("scenario2_400m_160pT_vector");
    assert!(
        vector_400.failure_rate <= 0.05,
        "vector 400 m / 160 pT failure rate {:.3} above 0.05 (known limitation: \
         velocity lock is not sustainable between 70-97 s pass windows at this \
         noise level; see the project notes)",
        vector_400.failure_rate
    );
    println!("acceptance criterion 6 (tracking bands): PASS");
}

/// Criterion 7: outage resilience. Scalar failure rate at 160 pT is
/// nondecreasing in the outage count (within two-sigma Monte Carlo noise);
/// the vector network stays at ≤ 1% failures at every count.
#[test]
fn criterion_7_resilience_ordering() {
    let mut cfg = canned_scenario("table2_caseI").unwrap();
    cfg.experiment.model_kinds = vec![ModelKind::Scalar, ModelKind::Vector];
    let counts = [0usize, 10, 15, 20];
    let entries = resilience_study(&cfg, &counts, cfg.experiment.runs).unwrap();

    let rate = |count: usize, noise: f64, kind: ModelKind| {
        entries
            .iter()
            .find(|e| {
                e.failed_count == count
                    && (e.noise_std_tesla - noise).abs() < 1e-18
                    && e.model_kind == kind
            })
            .map(|e| (e.aggregate.failure_rate, e.aggregate.runs))
            .expect("cell present")
    };

    // scalar at 160 pT: nondecreasing within 2 sigma of the pooled binomial noise
    let noise160 = 1.6e-10;
    for pair in counts.windows(2) {
        let (p1, n1) = rate(pair[0], noise160, ModelKind::Scalar);
        let (p2, n2) = rate(pair[1], noise160, ModelKind::Scalar);
        let pooled = (p1 * n1 as f64 + p2 * n2 as f64) / (n1 + n2) as f64;
        let sigma = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
        assert!(
            p2 >= p1 - 2.0 * sigma,
            "scalar 160 pT failure rate decreased beyond noise: {} sensors out {p1}, {} out {p2}",
            pair[0],
            pair[1]
        );
    }
    println!("acceptance criterion 7: scalar 160 pT failure rate nondecreasing in outages: PASS");

    // vector at 32 pT: at most 1% at every count
    for &count in &counts {
        let (p, _) = rate(count, 3.2e-11, ModelKind::Vector);
        assert!(
            p <= 0.01,
            "vector 32 pT failure rate {p} above 0.01 with {count} sensors out"
        );
    }
    println!("acceptance criterion 7: vector 32 pT failure rate <= 1% at all counts: PASS");

    // Known-unattained band at 160 pT: outages remove exactly the close
    // passes the vector tracker needs at this noise level, so its failure
    // rate grows with the outage count instead of staying at the floor.
    for &count in &counts {
        let (p, _) = rate(count, noise160, ModelKind::Vector);
        assert!(
            p <= 0.01,
            "vector 160 pT failure rate {p:.3} above 0.01 with {count} sensors out \
             (known limitation: see the project notes)"
        );
    }
    println!("acceptance criterion 7 (resilience ordering): PASS");
}
