//! Code-defined scenarios: the analytic four-sensor time-varying system and the
//! twenty-sensor time-invariant comparison system.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::linalg::{Mat, Vector};
use crate::model::{stream_rng, MatrixSeq, RegularityWindow, SensorModel, SystemModel};

/// Four sensors observing a 2-state plant whose `A_k` is singular at
/// `k ≡ 1, 5 (mod 12)`. Sensors 2 and 4 observe nothing.
pub fn paper_example_1(horizon: usize) -> (SystemModel, Vec<SensorModel>) {
    let a = MatrixSeq::analytic(2, 2, |k| {
        Mat::from_row_slice(2, 2, &[1.1, 0.05, 1.1, 0.1 * (k as f64 * PI / 6.0).sin()])
    });
    let q = MatrixSeq::Constant(Mat::from_diagonal(&Vector::from_vec(vec![0.5, 0.7])));
    let model = SystemModel::new(2, a, q, horizon).expect("static model");

    let r = [0.5, 0.6, 0.4, 0.3];
    let scalar = |v: f64| MatrixSeq::Constant(Mat::from_element(1, 1, v));
    let sensors = vec![
        SensorModel::new(
            1,
            2,
            MatrixSeq::analytic(1, 2, |k| Mat::from_row_slice(1, 2, &[1.0 + (k as f64 * PI / 12.0).sin(), 0.0])),
            scalar(r[0]),
        ),
        SensorModel::new(2, 2, MatrixSeq::Constant(Mat::zeros(1, 2)), scalar(r[1])),
        SensorModel::new(
            3,
            2,
            MatrixSeq::analytic(1, 2, |k| Mat::from_row_slice(1, 2, &[-1.0, 1.0 + (k as f64 * PI / 12.0).cos()])),
            scalar(r[2]),
        ),
        SensorModel::new(4, 2, MatrixSeq::Constant(Mat::zeros(1, 2)), scalar(r[3])),
    ]
    .into_iter()
    .collect::<Result<Vec<_>, _>>()
    .expect("static sensors");
    (model, sensors)
}

/// Regularity anchors for [`paper_example_1`]: `A_k` is nonsingular on
/// `k ∈ [6 + 12l, 12 + 12l]`.
pub fn paper_example_1_window(horizon: usize) -> RegularityWindow {
    RegularityWindow::periodic(6, 12, horizon, 7, 1e-3)
}

/// Candidate observation rows for the twenty-sensor system.
pub const EXAMPLE_2_ROWS: [[f64; 2]; 4] = [[1.0, 1.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]];

/// Which candidate row each sensor drew, kept for the run summary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RowDraw {
    pub seed: u64,
    pub choices: Vec<usize>,
}

/// Twenty sensors, `A = [[1, 0.05], [0, 1]]`, `Q = I`, `R_i = 1`, each `H_i`
/// drawn uniformly from [`EXAMPLE_2_ROWS`] using `seed`.
pub fn paper_example_2(horizon: usize, seed: u64) -> (SystemModel, Vec<SensorModel>, RowDraw) {
    const SENSORS: usize = 20;
    let a = Mat::from_row_slice(2, 2, &[1.0, 0.05, 0.0, 1.0]);
    let model = SystemModel::new(2, MatrixSeq::Constant(a), MatrixSeq::Constant(Mat::identity(2, 2)), horizon).expect("static model");
    // Dedicated channel so the draw never overlaps the noise streams.
    let mut rng = stream_rng(seed, u64::MAX, 0);
    let choices: Vec<usize> = (0..SENSORS).map(|_| rng.random_range(0..EXAMPLE_2_ROWS.len())).collect();
    let sensors = choices
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            SensorModel::new(
                i + 1,
                2,
                MatrixSeq::Constant(Mat::from_row_slice(1, 2, &EXAMPLE_2_ROWS[c])),
                MatrixSeq::Constant(Mat::identity(1, 1)),
            )
            .expect("static sensor")
        })
        .collect();
    (model, sensors, RowDraw { seed, choices })
}
