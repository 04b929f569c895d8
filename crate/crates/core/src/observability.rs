//! State-transition products and the stacked observability Gramian.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::{SensorModel, SystemModel};

/// `Φ_{j,k} = A_{j-1} ⋯ A_k`, with `Φ_{k,k} = I`.
pub fn transition(model: &SystemModel, j: usize, k: usize) -> Result<Mat> {
    if j < k {
        return Err(Error::InvalidArgument(format!("transition requires j >= k, got j = {j}, k = {k}")));
    }
    let n = model.state_dim();
    let mut phi = Mat::identity(n, n);
    for t in k..j {
        phi = model.a(t)?.as_ref() * phi;
    }
    Ok(phi)
}

/// `H_k` stacked in sensor order and `R_k` block-diagonal in the same order.
pub fn stack(sensors: &[SensorModel], k: usize, state_dim: usize) -> Result<(Mat, Mat)> {
    let hs = sensors.iter().map(|s| s.h(k).map(|h| h.into_owned())).collect::<Result<Vec<_>>>()?;
    let rs = sensors.iter().map(|s| s.r(k).map(|r| r.into_owned())).collect::<Result<Vec<_>>>()?;
    Ok((linalg::vstack(&hs, state_dim), linalg::block_diag(&rs)))
}

/// `Σ_i H_{k,i}ᵀ R_{k,i}⁻¹ H_{k,i}`, equal to `H_kᵀ R_k⁻¹ H_k` for the stacked pair.
pub fn information_contribution(sensors: &[SensorModel], k: usize, state_dim: usize) -> Result<Mat> {
    let mut info = Mat::zeros(state_dim, state_dim);
    for s in sensors {
        let h = s.h(k)?;
        let r = s.r(k)?;
        let chol = linalg::cholesky(&r).ok_or_else(|| Error::NotPositiveDefinite {
            what: format!("R of sensor {}", s.id),
            k,
        })?;
        let rinv_h = chol.solve(h.as_ref());
        info += h.transpose() * rinv_h;
    }
    Ok(linalg::symmetrize(info))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GramianReport {
    pub window_start: usize,
    pub window: usize,
    #[serde(skip)]
    pub gramian: Mat,
    pub alpha_hat: f64,
    pub beta_hat: f64,
    /// `beta_hat / alpha_hat`, infinite when the Gramian is singular.
    pub condition: f64,
}

/// `Σ_{j=k}^{k+N̄} Φ_{j,k}ᵀ H_jᵀ R_j⁻¹ H_j Φ_{j,k}`.
pub fn gramian(model: &SystemModel, sensors: &[SensorModel], k: usize, window: usize) -> Result<GramianReport> {
    let n = model.state_dim();
    let mut g = Mat::zeros(n, n);
    let mut phi = Mat::identity(n, n);
    for j in k..=k + window {
        let info = information_contribution(sensors, j, n)?;
        g += phi.transpose() * info * &phi;
        if j < k + window {
            phi = model.a(j)?.as_ref() * phi;
        }
    }
    let g = linalg::symmetrize(g);
    let ev = linalg::sym_eigenvalues(&g);
    let alpha_hat = ev[0].max(0.0);
    let beta_hat = *ev.last().unwrap();
    let condition = if alpha_hat > 0.0 { beta_hat / alpha_hat } else { f64::INFINITY };
    Ok(GramianReport {
        window_start: k,
        window,
        gramian: g,
        alpha_hat,
        beta_hat,
        condition,
    })
}

/// The Gramian conjugated by `Φ_{k+N̄,k}⁻¹`; positive definite whenever the
/// Gramian is and `A` is invertible over the window. Errors if `Φ` is singular.
pub fn conjugated_gramian(model: &SystemModel, sensors: &[SensorModel], k: usize, window: usize) -> Result<Mat> {
    let report = gramian(model, sensors, k, window)?;
    let phi = transition(model, k + window, k)?;
    let f = (!linalg::is_numerically_singular(&phi))
        .then(|| phi.try_inverse())
        .flatten()
        .ok_or_else(|| Error::Numerical(format!("transition over [{k}, {}] is singular", k + window)))?;
    Ok(linalg::symmetrize(f.transpose() * report.gramian * f))
}

/// Optional thresholds for the uniform observability check.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, serde::Deserialize)]
pub struct UcoThresholds {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UcoReport {
    pub passed: bool,
    pub window: usize,
    pub min_alpha: f64,
    pub max_beta: f64,
    /// Window start with the smallest `alpha_hat`.
    pub worst_k: usize,
    pub reports: Vec<GramianReport>,
}

/// Relative floor below which `alpha_hat` counts as zero when no `alpha` is declared.
const RANK_TOL: f64 = 1e-10;

/// Sweeps window starts in `k_range` (inclusive). Without declared thresholds
/// the check passes iff every Gramian is numerically nonsingular.
pub fn check_uco(
    model: &SystemModel,
    sensors: &[SensorModel],
    window: usize,
    k_range: std::ops::RangeInclusive<usize>,
    thresholds: UcoThresholds,
) -> Result<UcoReport> {
    let reports = k_range.map(|k| gramian(model, sensors, k, window)).collect::<Result<Vec<_>>>()?;
    let (worst_k, min_alpha) = reports
        .iter()
        .map(|r| (r.window_start, r.alpha_hat))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, 0.0));
    let max_beta = reports.iter().map(|r| r.beta_hat).fold(0.0, f64::max);
    let alpha_ok = match thresholds.alpha {
        Some(a) => min_alpha >= a && a > 0.0,
        None => reports.iter().all(|r| r.alpha_hat > RANK_TOL * r.beta_hat.max(1.0)),
    };
    let beta_ok = thresholds.beta.is_none_or(|b| max_beta <= b);
    Ok(UcoReport {
        passed: !reports.is_empty() && alpha_ok && beta_ok,
        window,
        min_alpha,
        max_beta,
        worst_k,
        reports,
    })
}

/// Smallest window in `candidates` for which `check_uco` passes.
pub fn smallest_window(
    model: &SystemModel,
    sensors: &[SensorModel],
    candidates: std::ops::RangeInclusive<usize>,
    last_start: usize,
    thresholds: UcoThresholds,
) -> Result<Option<UcoReport>> {
    for w in candidates {
        let report = check_uco(model, sensors, w, 0..=last_start, thresholds)?;
        if report.passed {
            return Ok(Some(report));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MatrixSeq;
    use crate::presets;

    fn scalar_model(a: f64, horizon: usize) -> SystemModel {
        SystemModel::new(1, MatrixSeq::Constant(Mat::from_element(1, 1, a)), MatrixSeq::Constant(Mat::identity(1, 1)), horizon).unwrap()
    }

    fn sensor(id: usize, h: Mat, r: Mat) -> SensorModel {
        let n = h.ncols();
        SensorModel::new(id, n, MatrixSeq::Constant(h), MatrixSeq::Constant(r)).unwrap()
    }

    #[test]
    fn transition_identity_and_powers() {
        let (model, _) = presets::paper_example_1(20);
        assert_eq!(transition(&model, 4, 4).unwrap(), Mat::identity(2, 2));
        let direct = model.a(1).unwrap().as_ref() * model.a(0).unwrap().as_ref();
        let phi = transition(&model, 2, 0).unwrap();
        assert!((phi - direct).amax() < 1e-14);
        assert!(transition(&model, 1, 2).is_err());

        let a = Mat::from_row_slice(2, 2, &[1.0, 0.05, 0.0, 1.0]);
        let m = SystemModel::new(2, MatrixSeq::Constant(a.clone()), MatrixSeq::Constant(Mat::identity(2, 2)), 10).unwrap();
        assert!((transition(&m, 5, 2).unwrap() - &a * &a * &a).amax() < 1e-15);
    }

    #[test]
    fn stacked_example_one_at_zero() {
        let (_, sensors) = presets::paper_example_1(10);
        let (h, r) = stack(&sensors, 0, 2).unwrap();
        let expected_h = Mat::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, -1.0, 2.0, 0.0, 0.0]);
        assert!((h - expected_h).amax() < 1e-15);
        let expected_r = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 0.6, 0.4, 0.3]));
        assert_eq!(r, expected_r);
    }

    #[test]
    fn scalar_gramian_sums() {
        let m = scalar_model(1.0, 10);
        let s = sensor(1, Mat::identity(1, 1), Mat::identity(1, 1));
        let g = gramian(&m, &[s], 0, 2).unwrap();
        assert!((g.gramian[(0, 0)] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn example_one_is_globally_observable() {
        let (model, sensors) = presets::paper_example_1(200);
        let g = gramian(&model, &sensors, 0, 12).unwrap();
        assert!(g.alpha_hat > 0.1, "{g:?}");
        for s in &sensors {
            // Individually every sensor fails.
            let solo = gramian(&model, std::slice::from_ref(s), 0, 12).unwrap();
            assert!(solo.alpha_hat < 1e-9 * solo.beta_hat.max(1.0) || s.id == 1 || s.id == 3);
        }
        let uco = check_uco(&model, &sensors, 12, 0..=120, UcoThresholds::default()).unwrap();
        assert!(uco.passed);
    }

    #[test]
    fn zero_observation_sensors_only() {
        let (model, sensors) = presets::paper_example_1(200);
        let blind: Vec<_> = sensors.into_iter().filter(|s| s.id == 2 || s.id == 4).collect();
        let g = gramian(&model, &blind, 0, 12).unwrap();
        assert_eq!(g.alpha_hat, 0.0);
        assert_eq!(g.beta_hat, 0.0);
        assert!(!check_uco(&model, &blind, 12, 0..=120, UcoThresholds::default()).unwrap().passed);
    }

    #[test]
    fn fully_observed_identity() {
        let m = SystemModel::new(2, MatrixSeq::Constant(Mat::identity(2, 2)), MatrixSeq::Constant(Mat::identity(2, 2)), 50).unwrap();
        let s = sensor(1, Mat::identity(2, 2), Mat::identity(2, 2));
        let r = check_uco(&m, &[s], 4, 0..=10, UcoThresholds { alpha: Some(5.0), beta: Some(5.0) }).unwrap();
        assert!(r.passed);
        assert!((r.min_alpha - 5.0).abs() < 1e-12);
    }

    #[test]
    fn sensor_order_and_window_monotonicity() {
        let (model, sensors) = presets::paper_example_1(100);
        let mut rev = sensors.clone();
        rev.reverse();
        for k in [0, 7, 30] {
            let a = gramian(&model, &sensors, k, 10).unwrap().gramian;
            let b = gramian(&model, &rev, k, 10).unwrap().gramian;
            assert!((&a - &b).amax() < 1e-9 * a.amax());
            let shorter = gramian(&model, &sensors, k, 9).unwrap().gramian;
            assert!(linalg::min_eigenvalue(&(a - shorter)) >= -1e-9);
        }
    }

    #[test]
    fn conjugated_gramian_on_regular_window() {
        let (model, sensors) = presets::paper_example_1(100);
        // k = 6..=9 avoids the singular steps 1, 5 and 13.
        let c = conjugated_gramian(&model, &sensors, 6, 3).unwrap();
        assert!(linalg::min_eigenvalue(&c) > 0.0);
        assert!(conjugated_gramian(&model, &sensors, 0, 3).is_err());
    }
}
