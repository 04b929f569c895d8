//! Monte Carlo and brute-force oracles for the simulator, the filters and the
//! weight solver, each computed independently of the code under test.

use dkf::ci_weights::{self, AdaptiveSettings, WeightOutcome};
use dkf::filters::{ckf_step, NetworkFilter, NetworkedOptimalKf, NodeEstimate, StepMatrices};
use dkf::linalg::{Mat, Vector};
use dkf::model::{observe, simulate, step_state, stream_rng, MatrixSeq, NoiseStreams, SensorModel, SystemModel};
use dkf::{presets, stats, topology};

fn mat(rows: usize, cols: usize, v: &[f64]) -> Mat {
    Mat::from_row_slice(rows, cols, v)
}

/// Sample mean and covariance (divisor `T − 1`).
fn moments(samples: &[Vector]) -> (Vector, Mat) {
    let t = samples.len() as f64;
    let mean = samples.iter().fold(Vector::zeros(samples[0].len()), |acc, s| acc + s) / t;
    let cov = samples.iter().fold(Mat::zeros(mean.len(), mean.len()), |acc, s| {
        let d = s - &mean;
        acc + &d * d.transpose()
    }) / (t - 1.0);
    (mean, cov)
}

/// Entrywise check of a sample covariance against `target` at `z` standard
/// errors, using the Gaussian variance of `Σ̂_ij`: `(Σ_ii Σ_jj + Σ_ij²) / T`.
fn assert_cov_close(cov: &Mat, target: &Mat, t: usize, z: f64) {
    for i in 0..target.nrows() {
        for j in 0..target.ncols() {
            let se = ((target[(i, i)] * target[(j, j)] + target[(i, j)].powi(2)) / t as f64).sqrt();
            assert!((cov[(i, j)] - target[(i, j)]).abs() <= z * se, "({i},{j}): {} vs {}", cov[(i, j)], target[(i, j)]);
        }
    }
}

fn assert_mean_close(mean: &Vector, target: &Vector, cov: &Mat, t: usize, z: f64) {
    for i in 0..target.len() {
        let se = (cov[(i, i)] / t as f64).sqrt();
        assert!((mean[i] - target[i]).abs() <= z * se, "component {i}: {} vs {}", mean[i], target[i]);
    }
}

fn constant_model(a: Mat, q: Mat, horizon: usize) -> SystemModel {
    SystemModel::new(a.nrows(), MatrixSeq::Constant(a), MatrixSeq::Constant(q), horizon).unwrap()
}

#[test]
fn state_step_has_transition_mean_and_process_covariance() {
    let a = mat(2, 2, &[1.0, 0.5, -0.2, 0.9]);
    let q = mat(2, 2, &[1.0, 0.3, 0.3, 2.0]);
    let model = constant_model(a.clone(), q.clone(), 5);
    let x = Vector::from_vec(vec![1.5, -2.0]);
    let mut rng = stream_rng(11, 0, 0);
    const T: usize = 20_000;
    let samples: Vec<Vector> = (0..T).map(|_| step_state(&model, 2, &x, &mut rng).unwrap()).collect();
    let (mean, cov) = moments(&samples);
    assert_mean_close(&mean, &(&a * &x), &q, T, 4.0);
    assert_cov_close(&cov, &q, T, 4.0);
    assert!(step_state(&model, 5, &x, &mut rng).is_err());
}

#[test]
fn observation_has_output_mean_and_noise_covariance() {
    let h = mat(2, 3, &[1.0, 0.0, 2.0, 0.0, -1.0, 0.5]);
    let r = mat(2, 2, &[0.4, -0.1, -0.1, 0.9]);
    let sensor = SensorModel::new(1, 3, MatrixSeq::Constant(h.clone()), MatrixSeq::Constant(r.clone())).unwrap();
    let x = Vector::from_vec(vec![0.3, 1.0, -0.7]);
    let mut rng = stream_rng(12, 1, 0);
    const T: usize = 20_000;
    let samples: Vec<Vector> = (0..T).map(|_| observe(&sensor, 0, &x, &mut rng).unwrap()).collect();
    let (mean, cov) = moments(&samples);
    assert_mean_close(&mean, &(&h * &x), &r, T, 4.0);
    assert_cov_close(&cov, &r, T, 4.0);
}

#[test]
fn initial_state_is_centered_with_prior_covariance() {
    let (model, sensors) = presets::paper_example_1(3);
    let p0 = mat(2, 2, &[2.0, 0.5, 0.5, 1.0]);
    const T: usize = 10_000;
    let x0: Vec<Vector> = (0..T as u64).map(|t| simulate(&model, &sensors, &p0, 1, NoiseStreams::new(5, t)).unwrap().states[0].clone()).collect();
    let (mean, cov) = moments(&x0);
    assert_mean_close(&mean, &Vector::zeros(2), &p0, T, 4.0);
    assert_cov_close(&cov, &p0, T, 4.0);
}

#[test]
fn process_noise_is_white() {
    // With A = 0 the states are the noise itself.
    let model = constant_model(Mat::zeros(1, 1), Mat::identity(1, 1), 20_001);
    let sensor = SensorModel::new(1, 1, MatrixSeq::Constant(Mat::identity(1, 1)), MatrixSeq::Constant(Mat::identity(1, 1))).unwrap();
    let rec = simulate(&model, std::slice::from_ref(&sensor), &Mat::identity(1, 1), 20_000, NoiseStreams::new(3, 0)).unwrap();
    let w: Vec<f64> = rec.states[1..].iter().map(|x| x[0]).collect();
    let v: Vec<f64> = rec.measurements.iter().map(|y| y[0][0]).zip(&rec.states).map(|(y, x)| y - x[0]).collect();
    for series in [&w, &v] {
        let n = series.len() as f64;
        for lag in 1..=3 {
            let r: f64 = series.windows(lag + 1).map(|p| p[0] * p[lag]).sum::<f64>() / n;
            assert!(r.abs() < 4.0 / n.sqrt(), "lag {lag}: {r}");
        }
    }
    // Process and measurement streams are independent of each other.
    let cross: f64 = w.iter().zip(&v[1..]).map(|(a, b)| a * b).sum::<f64>() / w.len() as f64;
    assert!(cross.abs() < 4.0 / (w.len() as f64).sqrt(), "{cross}");
}

#[test]
fn simulation_is_a_function_of_seed_and_trial() {
    let (model, sensors) = presets::paper_example_1(30);
    let p0 = Mat::identity(2, 2);
    let a = simulate(&model, &sensors, &p0, 30, NoiseStreams::new(9, 4)).unwrap();
    let b = simulate(&model, &sensors, &p0, 30, NoiseStreams::new(9, 4)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.states, simulate(&model, &sensors, &p0, 30, NoiseStreams::new(9, 5)).unwrap().states);
    assert_ne!(a.states, simulate(&model, &sensors, &p0, 30, NoiseStreams::new(10, 4)).unwrap().states);
    // A shorter run is a prefix of a longer one.
    let short = simulate(&model, &sensors, &p0, 10, NoiseStreams::new(9, 4)).unwrap();
    assert_eq!(short.states[..], a.states[..11]);
}

/// Scalar random walk observed directly by one sensor.
fn scalar_system(horizon: usize) -> (SystemModel, Vec<SensorModel>) {
    let model = constant_model(mat(1, 1, &[0.95]), mat(1, 1, &[0.5]), horizon);
    let sensor = SensorModel::new(1, 1, MatrixSeq::Constant(mat(1, 1, &[1.0])), MatrixSeq::Constant(mat(1, 1, &[2.0]))).unwrap();
    (model, vec![sensor])
}

/// Per-trial errors `x̂_k − x_k` and the (measurement-independent) `P_k`.
fn kalman_errors(horizon: usize, trials: u64) -> (Vec<Vec<f64>>, Vec<Mat>) {
    let (model, sensors) = scalar_system(horizon);
    let p0 = mat(1, 1, &[1.0]);
    let schedule = StepMatrices::schedule(&model, &sensors, horizon).unwrap();
    let mut errors = vec![Vec::new(); horizon + 1];
    let mut ps = Vec::new();
    for t in 0..trials {
        let rec = simulate(&model, &sensors, &p0, horizon, NoiseStreams::new(77, t)).unwrap();
        let mut est = NodeEstimate { x_hat: Vector::zeros(1), p: p0.clone(), k: 0, sensor: 0 };
        errors[0].push(-rec.states[0][0]);
        for mats in &schedule {
            est = ckf_step(&est, mats, &rec.measurements[mats.k]).unwrap();
            errors[mats.k].push(est.x_hat[0] - rec.states[mats.k][0]);
            if t == 0 {
                ps.push(est.p.clone());
            }
        }
    }
    ps.insert(0, p0);
    (errors, ps)
}

#[test]
fn single_sensor_kalman_filter_is_tightly_consistent() {
    let (errors, ps) = kalman_errors(30, 2000);
    let resamples = stats::bootstrap_indices(2000, 200, 1);
    let mut failures = 0;
    for k in 0..=30 {
        let e: Vec<[f64; 1]> = errors[k].iter().map(|v| [*v]).collect();
        let refs: Vec<&[f64]> = e.iter().map(|v| &v[..]).collect();
        let cell = stats::consistency_cell(k, 0, &ps[k], &refs, &resamples, 3.0);
        failures += usize::from(!cell.passed);
        // Exact covariance: the empirical second moment matches P within a few SE both ways.
        let (m2, se) = stats::mean_se(&errors[k].iter().map(|v| v * v).collect::<Vec<_>>());
        assert!((m2 - ps[k][(0, 0)]).abs() <= 4.0 * se, "k = {k}: {m2} vs {}", ps[k][(0, 0)]);
    }
    assert_eq!(failures, 0);
}

#[test]
fn shrunken_covariance_fails_consistency() {
    let (errors, ps) = kalman_errors(30, 2000);
    let resamples = stats::bootstrap_indices(2000, 200, 1);
    for k in 1..=30 {
        let e: Vec<[f64; 1]> = errors[k].iter().map(|v| [*v]).collect();
        let refs: Vec<&[f64]> = e.iter().map(|v| &v[..]).collect();
        let cell = stats::consistency_cell(k, 0, &(&ps[k] * 0.7), &refs, &resamples, 3.0);
        assert!(!cell.passed, "k = {k}: min_eig {} band {}", cell.min_eig, cell.band);
    }
}

#[test]
fn two_neighbor_weights_match_grid_search() {
    let infos = [mat(2, 2, &[4.0, 0.0, 0.0, 0.5]), mat(2, 2, &[0.5, 0.0, 0.0, 4.0])];
    let a = [0.5, 0.5];
    let objective = |w0: f64| {
        let d = ci_weights::delta(&[w0, 1.0 - w0], &a, &infos);
        if !d.feasible {
            return None;
        }
        d.delta.try_inverse().map(|inv| inv.trace())
    };
    // Δ is diagonal: (3.5 w0 − 1.75, 1.75 − 3.5 w0) can never be positive
    // definite, so this pair must fall back.
    assert!((0..=10_000).all(|i| objective(i as f64 / 10_000.0).is_none()));
    assert!(ci_weights::solve_adaptive(&a, &infos, &AdaptiveSettings::default()).is_fallback());

    // Unequal adjacency weights leave room to move toward the better neighbor.
    let infos = [mat(2, 2, &[6.0, 1.0, 1.0, 5.0]), mat(2, 2, &[1.0, 0.2, 0.2, 0.8])];
    let a = [0.3, 0.7];
    let objective = |w0: f64| {
        let d = ci_weights::delta(&[w0, 1.0 - w0], &a, &infos);
        d.feasible.then(|| d.delta.try_inverse().map(|inv| inv.trace())).flatten()
    };
    let (best_w, best_f) = (0..=100_000)
        .filter_map(|i| {
            let w0 = i as f64 / 100_000.0;
            objective(w0).map(|f| (w0, f))
        })
        .fold((f64::NAN, f64::INFINITY), |acc, (w, f)| if f < acc.1 { (w, f) } else { acc });
    assert!(best_f.is_finite());
    match ci_weights::solve_adaptive(&a, &infos, &AdaptiveSettings::default()) {
        WeightOutcome::Adaptive(sol) => {
            assert!((sol.objective - best_f).abs() <= 1e-3 * best_f, "{} vs {best_f}", sol.objective);
            assert!((sol.weights[0] - best_w).abs() <= 1e-3, "{:?} vs {best_w}", sol.weights);
            assert!((sol.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        WeightOutcome::Fallback => panic!("grid search found a feasible point"),
    }
}

#[test]
fn centralized_filter_recovers_noise_free_state() {
    let a = mat(2, 2, &[0.9, 0.4, -0.3, 1.0]);
    let model = constant_model(a, Mat::zeros(2, 2), 20);
    let sensors = vec![
        SensorModel::new(1, 2, MatrixSeq::Constant(mat(1, 2, &[1.0, 0.0])), MatrixSeq::Constant(mat(1, 1, &[1e-12]))).unwrap(),
        SensorModel::new(2, 2, MatrixSeq::Constant(mat(1, 2, &[0.0, 1.0])), MatrixSeq::Constant(mat(1, 1, &[1e-12]))).unwrap(),
    ];
    let p0 = mat(2, 2, &[4.0, 0.0, 0.0, 4.0]);
    let rec = simulate(&model, &sensors, &p0, 20, NoiseStreams::new(1, 0)).unwrap();
    let mut est = NodeEstimate { x_hat: Vector::zeros(2), p: p0, k: 0, sensor: 0 };
    for mats in StepMatrices::schedule(&model, &sensors, 20).unwrap() {
        est = ckf_step(&est, &mats, &rec.measurements[mats.k]).unwrap();
        assert!((&est.x_hat - &rec.states[mats.k]).norm() < 1e-5, "k = {}", mats.k);
        assert!(est.p.trace() < 1e-10);
    }
}

#[test]
fn networked_filter_cross_covariances_stay_symmetric() {
    let (model, sensors) = presets::paper_example_1(40);
    let p0 = Mat::identity(2, 2);
    let mut net = NetworkedOptimalKf::new(topology::fig2_ring(), &p0);
    let rec = simulate(&model, &sensors, &p0, 40, NoiseStreams::new(2, 0)).unwrap();
    for mats in StepMatrices::schedule(&model, &sensors, 40).unwrap() {
        net.step(&mats, &rec.measurements[mats.k]).unwrap();
        for i in 0..4 {
            assert!((net.cross(i, i) - &net.estimates()[i].p).norm() < 1e-12);
            for j in 0..4 {
                let gap = (net.cross(i, j) - net.cross(j, i).transpose()).norm();
                assert!(gap <= 1e-9 * (1.0 + net.cross(i, j).norm()), "k = {}, ({i},{j}): {gap}", mats.k);
            }
        }
        // The stacked table is a covariance, hence positive semidefinite.
        let big = Mat::from_fn(8, 8, |r, c| net.cross(r / 2, c / 2)[(r % 2, c % 2)]);
        let scale = big.norm();
        let min = big.symmetric_eigen().eigenvalues.min();
        assert!(min > -1e-9 * scale, "k = {}: {min}", mats.k);
    }
}
