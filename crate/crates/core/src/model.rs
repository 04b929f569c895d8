//! Time-varying linear plant, per-sensor observation models, noise sampling and
//! validation of the standing assumptions the filters rely on.

use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};

type Generator = Arc<dyn Fn(usize) -> Mat + Send + Sync>;

/// A matrix-valued function of the time index, evaluated lazily.
#[derive(Clone)]
pub enum MatrixSeq {
    Constant(Mat),
    /// One matrix per step; indexing past the end is an error.
    Table(Arc<[Mat]>),
    Analytic {
        rows: usize,
        cols: usize,
        f: Generator,
    },
}

impl MatrixSeq {
    pub fn analytic(rows: usize, cols: usize, f: impl Fn(usize) -> Mat + Send + Sync + 'static) -> Self {
        MatrixSeq::Analytic {
            rows,
            cols,
            f: Arc::new(f),
        }
    }

    pub fn table(mats: Vec<Mat>) -> Self {
        MatrixSeq::Table(mats.into())
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            MatrixSeq::Constant(m) => m.shape(),
            MatrixSeq::Table(t) => t.first().map_or((0, 0), |m| m.shape()),
            MatrixSeq::Analytic { rows, cols, .. } => (*rows, *cols),
        }
    }

    pub fn at(&self, k: usize) -> Result<Cow<'_, Mat>> {
        match self {
            MatrixSeq::Constant(m) => Ok(Cow::Borrowed(m)),
            MatrixSeq::Table(t) => t.get(k).map(Cow::Borrowed).ok_or(Error::TimeIndex {
                context: "matrix table",
                k,
                limit: t.len(),
            }),
            MatrixSeq::Analytic { rows, cols, f } => {
                let m = f(k);
                if m.shape() != (*rows, *cols) {
                    return Err(Error::dims("analytic matrix generator", format!("{rows}x{cols}"), format!("{}x{}", m.nrows(), m.ncols())));
                }
                Ok(Cow::Owned(m))
            }
        }
    }
}

impl fmt::Debug for MatrixSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixSeq::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            MatrixSeq::Table(t) => write!(f, "Table(len = {})", t.len()),
            MatrixSeq::Analytic { rows, cols, .. } => write!(f, "Analytic({rows}x{cols})"),
        }
    }
}

/// The plant `x_{k+1} = A_k x_k + ω_k`, `ω_k ~ N(0, Q_k)`.
#[derive(Clone, Debug)]
pub struct SystemModel {
    state_dim: usize,
    a: MatrixSeq,
    q: MatrixSeq,
    horizon: usize,
}

impl SystemModel {
    pub fn new(state_dim: usize, a: MatrixSeq, q: MatrixSeq, horizon: usize) -> Result<Self> {
        if state_dim == 0 {
            return Err(Error::InvalidArgument("state dimension must be positive".into()));
        }
        for (name, seq) in [("A", &a), ("Q", &q)] {
            if seq.shape() != (state_dim, state_dim) {
                let (r, c) = seq.shape();
                return Err(Error::dims(format!("system matrix {name}"), format!("{state_dim}x{state_dim}"), format!("{r}x{c}")));
            }
        }
        Ok(Self { state_dim, a, q, horizon })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Same dynamics with a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Self {
        Self { horizon, ..self.clone() }
    }

    pub fn a(&self, k: usize) -> Result<Cow<'_, Mat>> {
        self.a.at(k)
    }

    pub fn q(&self, k: usize) -> Result<Cow<'_, Mat>> {
        self.q.at(k)
    }
}

/// Sensor `i`: `y_{k,i} = H_{k,i} x_k + v_{k,i}`, `v_{k,i} ~ N(0, R_{k,i})`.
#[derive(Clone, Debug)]
pub struct SensorModel {
    /// One-based sensor id.
    pub id: usize,
    meas_dim: usize,
    h: MatrixSeq,
    r: MatrixSeq,
}

impl SensorModel {
    pub fn new(id: usize, state_dim: usize, h: MatrixSeq, r: MatrixSeq) -> Result<Self> {
        let (m, n) = h.shape();
        if n != state_dim || m == 0 {
            return Err(Error::dims(format!("H of sensor {id}"), format!("m x {state_dim}"), format!("{m}x{n}")));
        }
        if r.shape() != (m, m) {
            let (rr, rc) = r.shape();
            return Err(Error::dims(format!("R of sensor {id}"), format!("{m}x{m}"), format!("{rr}x{rc}")));
        }
        Ok(Self { id, meas_dim: m, h, r })
    }

    pub fn meas_dim(&self) -> usize {
        self.meas_dim
    }

    pub fn h(&self, k: usize) -> Result<Cow<'_, Mat>> {
        self.h.at(k)
    }

    pub fn r(&self, k: usize) -> Result<Cow<'_, Mat>> {
        self.r.at(k)
    }
}

/// Anchor times `k_l` after which `A` stays uniformly nonsingular for `window_len` steps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityWindow {
    pub anchors: Vec<usize>,
    pub window_len: usize,
    pub lower_bound: f64,
}

impl RegularityWindow {
    /// Anchors `first, first + period, …` up to and including `until`.
    pub fn periodic(first: usize, period: usize, until: usize, window_len: usize, lower_bound: f64) -> Self {
        let anchors = (first..=until).step_by(period.max(1)).collect();
        Self {
            anchors,
            window_len,
            lower_bound,
        }
    }
}

/// Ground truth and measurements for one Monte Carlo trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    /// `x_0 ..= x_K`.
    pub states: Vec<Vector>,
    /// `measurements[k][i]` is `y_{k,i}`.
    pub measurements: Vec<Vec<Vector>>,
    pub seed: u64,
    pub trial: u64,
}

impl TrajectoryRecord {
    pub fn horizon(&self) -> usize {
        self.states.len().saturating_sub(1)
    }
}

/// Counter-based random streams: one root seed, independent sub-streams per
/// (trial, channel). Channel 0 drives `x_0` and the process noise, channel
/// `1 + i` drives sensor `i`'s measurement noise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseStreams {
    pub root_seed: u64,
    pub trial: u64,
}

impl NoiseStreams {
    pub fn new(root_seed: u64, trial: u64) -> Self {
        Self { root_seed, trial }
    }

    pub fn process(&self) -> ChaCha8Rng {
        stream_rng(self.root_seed, 0, self.trial)
    }

    pub fn sensor(&self, index: usize) -> ChaCha8Rng {
        stream_rng(self.root_seed, 1 + index as u64, self.trial)
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic generator for `(root, channel, stream)`.
pub fn stream_rng(root: u64, channel: u64, stream: u64) -> ChaCha8Rng {
    let mut state = root ^ channel.wrapping_mul(0xD605_BBB5_8C8A_BF5D);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Draws from `N(0, cov)` as `L z` with `cov = L Lᵀ`. An all-zero covariance
/// yields the zero vector.
pub fn sample_gaussian<R: Rng + ?Sized>(cov: &Mat, rng: &mut R, what: &str, k: usize) -> Result<Vector> {
    let n = cov.nrows();
    if cov.iter().all(|v| *v == 0.0) {
        return Ok(Vector::zeros(n));
    }
    let chol = linalg::cholesky(cov).ok_or_else(|| Error::NotPositiveDefinite { what: what.to_string(), k })?;
    let z = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok(chol.l() * z)
}

/// One step of the plant: `A_k x + ω_k`.
pub fn step_state<R: Rng + ?Sized>(model: &SystemModel, k: usize, x: &Vector, rng: &mut R) -> Result<Vector> {
    if k >= model.horizon() {
        return Err(Error::TimeIndex {
            context: "system horizon",
            k,
            limit: model.horizon(),
        });
    }
    if x.len() != model.state_dim() {
        return Err(Error::dims("step_state", model.state_dim(), x.len()));
    }
    let a = model.a(k)?;
    let q = model.q(k)?;
    let w = sample_gaussian(&q, rng, "Q", k)?;
    Ok(a.as_ref() * x + w)
}

/// One measurement: `H_{k,i} x + v_{k,i}`.
pub fn observe<R: Rng + ?Sized>(sensor: &SensorModel, k: usize, x: &Vector, rng: &mut R) -> Result<Vector> {
    let h = sensor.h(k)?;
    if h.ncols() != x.len() {
        return Err(Error::dims(format!("observe (sensor {})", sensor.id), h.ncols(), x.len()));
    }
    let r = sensor.r(k)?;
    let v = sample_gaussian(&r, rng, &format!("R of sensor {}", sensor.id), k)?;
    Ok(h.as_ref() * x + v)
}

/// Simulates `x_0 ~ N(0, P_0)` and the plant up to `horizon`, with every
/// sensor's measurement stream for `k = 0..=horizon`.
pub fn simulate(model: &SystemModel, sensors: &[SensorModel], p0: &Mat, horizon: usize, streams: NoiseStreams) -> Result<TrajectoryRecord> {
    if horizon > model.horizon() {
        return Err(Error::TimeIndex {
            context: "system horizon",
            k: horizon,
            limit: model.horizon(),
        });
    }
    if p0.shape() != (model.state_dim(), model.state_dim()) {
        return Err(Error::dims("P0", model.state_dim(), p0.nrows()));
    }
    let mut proc_rng = streams.process();
    let mut sensor_rngs: Vec<_> = (0..sensors.len()).map(|i| streams.sensor(i)).collect();

    let mut states = Vec::with_capacity(horizon + 1);
    let mut measurements = Vec::with_capacity(horizon + 1);
    let mut x = sample_gaussian(p0, &mut proc_rng, "P0", 0)?;
    for k in 0..=horizon {
        let ys = sensors
            .iter()
            .zip(sensor_rngs.iter_mut())
            .map(|(s, rng)| observe(s, k, &x, rng))
            .collect::<Result<Vec<_>>>()?;
        measurements.push(ys);
        let next = if k < horizon { Some(step_state(model, k, &x, &mut proc_rng)?) } else { None };
        states.push(x);
        match next {
            Some(n) => x = n,
            None => break,
        }
    }
    Ok(TrajectoryRecord {
        states,
        measurements,
        seed: streams.root_seed,
        trial: streams.trial,
    })
}

/// Declared constants the validator compares against. Unset values are only measured.
#[derive(Clone, Debug, Default, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionBounds {
    /// Upper bound on `λ_max(A_k A_kᵀ)`.
    pub beta1: Option<f64>,
    /// Scalar lower bound on `λ_min(Q_k)`.
    pub q_lower: Option<f64>,
    /// Scalar upper bound on `λ_max(Q_k)`.
    pub q_upper: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    /// The filters cannot run.
    Hard,
    /// A theoretical guarantee is lost; the filters still run.
    Soft,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Finding {
    pub check: String,
    pub status: Status,
    pub severity: Severity,
    pub detail: String,
    pub witness_k: Option<usize>,
    pub witness_value: Option<f64>,
}

impl Finding {
    pub fn pass(check: &str, detail: impl Into<String>) -> Self {
        Self {
            check: check.into(),
            status: Status::Pass,
            severity: Severity::Soft,
            detail: detail.into(),
            witness_k: None,
            witness_value: None,
        }
    }

    pub fn fail(check: &str, severity: Severity, detail: impl Into<String>, witness_k: Option<usize>, witness_value: Option<f64>) -> Self {
        Self {
            check: check.into(),
            status: Status::Fail,
            severity,
            detail: detail.into(),
            witness_k,
            witness_value,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
    /// Steps where `A_k` is numerically singular. Informational only.
    pub singular_steps: Vec<usize>,
    pub q_min_eig: f64,
    pub q_max_eig: f64,
    pub a_max_gain: f64,
}

impl ValidationReport {
    pub fn has_hard_failure(&self) -> bool {
        self.findings.iter().any(|f| f.status == Status::Fail && f.severity == Severity::Hard)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.status == Status::Fail)
    }

    pub fn find(&self, check: &str) -> Option<&Finding> {
        self.findings.iter().find(|f| f.check == check)
    }
}

/// Checks the noise, boundedness and regularity assumptions over `0..=horizon`.
/// Numerically singular `A_k` are recorded, not failed.
pub fn validate_assumptions(model: &SystemModel, sensors: &[SensorModel], window: Option<&RegularityWindow>, bounds: &AssumptionBounds) -> ValidationReport {
    let mut report = ValidationReport {
        q_min_eig: f64::INFINITY,
        q_max_eig: f64::NEG_INFINITY,
        a_max_gain: 0.0,
        ..Default::default()
    };
    let horizon = model.horizon();
    let dyn_steps = horizon.max(1);

    // Process noise.
    let mut q_failure = None;
    let mut eval_failure = None;
    for k in 0..dyn_steps {
        let q = match model.q(k) {
            Ok(q) => q,
            Err(e) => {
                eval_failure.get_or_insert((k, e.to_string()));
                break;
            }
        };
        let ev = linalg::sym_eigenvalues(&q);
        report.q_min_eig = report.q_min_eig.min(ev[0]);
        report.q_max_eig = report.q_max_eig.max(*ev.last().unwrap());
        if q_failure.is_none() && (linalg::cholesky(&q).is_none() || (&*q - q.transpose()).amax() > 1e-12 * q.amax().max(1.0)) {
            q_failure = Some((k, ev[0]));
        }
    }
    report.findings.push(match q_failure {
        None => Finding::pass("noise.q_positive_definite", format!("Q_k symmetric positive definite for k < {dyn_steps}")),
        Some((k, e)) => Finding::fail("noise.q_positive_definite", Severity::Hard, "Q_k is not symmetric positive definite", Some(k), Some(e)),
    });

    let mut q_bound_fail = None;
    if let Some(lo) = bounds.q_lower {
        if report.q_min_eig < lo {
            q_bound_fail = Some(format!("min eigenvalue {:.6e} below declared {lo:e}", report.q_min_eig));
        }
    }
    if let Some(hi) = bounds.q_upper {
        if report.q_max_eig > hi {
            q_bound_fail = Some(format!("max eigenvalue {:.6e} above declared {hi:e}", report.q_max_eig));
        }
    }
    report.findings.push(match q_bound_fail {
        None if report.q_min_eig > 0.0 => Finding::pass(
            "noise.q_bounds",
            format!("{:.6e} I <= Q_k <= {:.6e} I", report.q_min_eig, report.q_max_eig),
        ),
        None => Finding::fail("noise.q_bounds", Severity::Soft, "no positive lower bound on Q_k", None, Some(report.q_min_eig)),
        Some(msg) => Finding::fail("noise.q_bounds", Severity::Soft, msg, None, None),
    });

    // Measurement noise and observation shapes.
    let mut r_failure = None;
    for s in sensors {
        for k in 0..=horizon {
            let (h, r) = match (s.h(k), s.r(k)) {
                (Ok(h), Ok(r)) => (h, r),
                (Err(e), _) | (_, Err(e)) => {
                    eval_failure.get_or_insert((k, format!("sensor {}: {e}", s.id)));
                    break;
                }
            };
            if h.ncols() != model.state_dim() {
                eval_failure.get_or_insert((k, format!("sensor {}: H has {} columns", s.id, h.ncols())));
            }
            if r_failure.is_none() && linalg::cholesky(&r).is_none() {
                r_failure = Some((s.id, k, linalg::min_eigenvalue(&r)));
            }
        }
    }
    report.findings.push(match r_failure {
        None => Finding::pass("noise.r_positive_definite", "R_{k,i} positive definite for every sensor"),
        Some((id, k, e)) => Finding::fail(
            "noise.r_positive_definite",
            Severity::Hard,
            format!("R of sensor {id} is not positive definite"),
            Some(k),
            Some(e),
        ),
    });
    if let Some((k, msg)) = eval_failure {
        report.findings.push(Finding::fail("model.evaluation", Severity::Hard, msg, Some(k), None));
    }

    // Boundedness of A_k and singular steps.
    let mut beta1_witness = None;
    for k in 0..dyn_steps {
        let Ok(a) = model.a(k) else { break };
        let gain = linalg::max_eigenvalue(&(a.as_ref() * a.transpose()));
        report.a_max_gain = report.a_max_gain.max(gain);
        if let Some(b1) = bounds.beta1 {
            if gain > b1 && beta1_witness.is_none() {
                beta1_witness = Some((k, gain));
            }
        }
        if linalg::is_numerically_singular(&a) {
            report.singular_steps.push(k);
        }
    }
    report.findings.push(match (bounds.beta1, beta1_witness) {
        (_, Some((k, g))) => Finding::fail(
            "dynamics.bounded",
            Severity::Soft,
            format!("lambda_max(A_k A_k^T) = {g:.6e} exceeds beta1"),
            Some(k),
            Some(g),
        ),
        (Some(b1), None) => Finding::pass("dynamics.bounded", format!("lambda_max(A_k A_k^T) <= {b1:e} (sup {:.6e})", report.a_max_gain)),
        (None, None) if report.a_max_gain.is_finite() => {
            Finding::pass("dynamics.bounded", format!("measured sup lambda_max(A_k A_k^T) = {:.6e}", report.a_max_gain))
        }
        (None, None) => Finding::fail("dynamics.bounded", Severity::Soft, "unbounded A_k", None, None),
    });

    if let Some(w) = window {
        report.findings.push(check_regularity(model, w));
    }
    report
}

fn check_regularity(model: &SystemModel, w: &RegularityWindow) -> Finding {
    const CHECK: &str = "dynamics.regularity";
    if w.anchors.is_empty() || w.window_len == 0 {
        return Finding::fail(CHECK, Severity::Soft, "no anchors or empty window", None, None);
    }
    if w.anchors.windows(2).any(|p| p[1] <= p[0]) {
        return Finding::fail(CHECK, Severity::Soft, "anchors must be strictly increasing", None, None);
    }
    let max_gap = w
        .anchors
        .windows(2)
        .map(|p| p[1] - p[0])
        .chain(std::iter::once(w.anchors[0] + 1))
        .max()
        .unwrap_or(0);
    let last = *w.anchors.last().unwrap();
    if model.horizon().saturating_sub(last) > max_gap {
        return Finding::fail(CHECK, Severity::Soft, format!("anchors stop at {last}, leaving a gap larger than {max_gap}"), Some(last), None);
    }
    for &anchor in &w.anchors {
        for s in 0..w.window_len {
            let k = anchor + s;
            if k >= model.horizon().max(1) {
                break;
            }
            let Ok(a) = model.a(k) else { break };
            let low = linalg::min_eigenvalue(&(a.as_ref() * a.transpose()));
            if low < w.lower_bound {
                return Finding::fail(
                    CHECK,
                    Severity::Soft,
                    format!("lambda_min(A_k A_k^T) = {low:.3e} below beta2 inside the window at anchor {anchor}"),
                    Some(k),
                    Some(low),
                );
            }
        }
    }
    Finding::pass(
        CHECK,
        format!("{} anchors, window {}, max gap {max_gap}, beta2 = {:e}", w.anchors.len(), w.window_len, w.lower_bound),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn constant_model(a: Mat, q: Mat, horizon: usize) -> SystemModel {
        let n = a.nrows();
        SystemModel::new(n, MatrixSeq::Constant(a), MatrixSeq::Constant(q), horizon).unwrap()
    }

    #[test]
    fn identity_zero_noise_step() {
        let m = constant_model(Mat::identity(2, 2), Mat::zeros(2, 2), 10);
        let mut rng = stream_rng(1, 0, 0);
        let x = Vector::from_vec(vec![1.0, 2.0]);
        assert_eq!(step_state(&m, 0, &x, &mut rng).unwrap(), x);
    }

    #[test]
    fn example_one_dynamics_at_k3() {
        let (model, _) = presets::paper_example_1(10);
        let a = model.a(3).unwrap();
        let x = Vector::from_vec(vec![1.0, 0.0]);
        let y = a.as_ref() * &x;
        assert!((y[0] - 1.1).abs() < 1e-15);
        assert!((y[1] - 1.1).abs() < 1e-15);
        assert!((a[(1, 1)] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn step_beyond_horizon_rejected() {
        let m = constant_model(Mat::identity(1, 1), Mat::identity(1, 1), 2);
        let mut rng = stream_rng(1, 0, 0);
        assert!(matches!(step_state(&m, 2, &Vector::zeros(1), &mut rng), Err(Error::TimeIndex { .. })));
        assert!(matches!(step_state(&m, 0, &Vector::zeros(3), &mut rng), Err(Error::Dimension { .. })));
    }

    #[test]
    fn indefinite_q_is_model_error() {
        let q = Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let m = constant_model(Mat::identity(2, 2), q, 5);
        let mut rng = stream_rng(1, 0, 0);
        let err = step_state(&m, 0, &Vector::zeros(2), &mut rng).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }));
    }

    #[test]
    fn zero_observation_row_gives_zero_without_noise() {
        let s = SensorModel::new(2, 2, MatrixSeq::Constant(Mat::zeros(1, 2)), MatrixSeq::Constant(Mat::zeros(1, 1))).unwrap();
        let mut rng = stream_rng(3, 1, 0);
        let y = observe(&s, 0, &Vector::from_vec(vec![5.0, -3.0]), &mut rng).unwrap();
        assert_eq!(y[0], 0.0);
    }

    #[test]
    fn sensor_one_gain_at_k6() {
        let (_, sensors) = presets::paper_example_1(10);
        let h = sensors[0].h(6).unwrap();
        assert!((h[(0, 0)] - 2.0).abs() < 1e-15);
        assert_eq!(h[(0, 1)], 0.0);
    }

    #[test]
    fn empty_horizon_record() {
        let (model, sensors) = presets::paper_example_1(0);
        let rec = simulate(&model, &sensors, &Mat::identity(2, 2), 0, NoiseStreams::new(9, 0)).unwrap();
        assert_eq!(rec.states.len(), 1);
        assert_eq!(rec.measurements.len(), 1);
        assert_eq!(rec.measurements[0].len(), 4);
    }

    #[test]
    fn simulate_is_deterministic_and_trials_differ() {
        let (model, sensors) = presets::paper_example_1(20);
        let p0 = Mat::identity(2, 2);
        let a = simulate(&model, &sensors, &p0, 20, NoiseStreams::new(42, 3)).unwrap();
        let b = simulate(&model, &sensors, &p0, 20, NoiseStreams::new(42, 3)).unwrap();
        let c = simulate(&model, &sensors, &p0, 20, NoiseStreams::new(42, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.states, c.states);
    }

    #[test]
    fn example_one_validation_notes_singular_steps() {
        let (model, sensors) = presets::paper_example_1(48);
        let report = validate_assumptions(&model, &sensors, None, &AssumptionBounds::default());
        assert!(report.failures().next().is_none(), "{report:?}");
        assert_eq!(report.singular_steps, vec![1, 5, 13, 17, 25, 29, 37, 41]);
        assert!((report.q_min_eig - 0.5).abs() < 1e-15);
        assert!((report.q_max_eig - 0.7).abs() < 1e-15);
    }

    #[test]
    fn unbounded_dynamics_fail_with_witness() {
        let a = MatrixSeq::analytic(2, 2, |k| Mat::identity(2, 2) * k as f64);
        let m = SystemModel::new(2, a, MatrixSeq::Constant(Mat::identity(2, 2)), 50).unwrap();
        let bounds = AssumptionBounds {
            beta1: Some(100.0),
            ..Default::default()
        };
        let report = validate_assumptions(&m, &[], None, &bounds);
        let f = report.find("dynamics.bounded").unwrap();
        assert_eq!(f.status, Status::Fail);
        assert_eq!(f.witness_k, Some(11));
    }

    #[test]
    fn zero_r_is_hard_failure() {
        let m = constant_model(Mat::identity(1, 1), Mat::identity(1, 1), 3);
        let s = SensorModel::new(1, 1, MatrixSeq::Constant(Mat::identity(1, 1)), MatrixSeq::Constant(Mat::zeros(1, 1))).unwrap();
        let report = validate_assumptions(&m, &[s], None, &AssumptionBounds::default());
        assert!(report.has_hard_failure());
    }

    #[test]
    fn table_shorter_than_horizon_is_reported() {
        let a = MatrixSeq::table(vec![Mat::identity(1, 1); 3]);
        let m = SystemModel::new(1, a, MatrixSeq::Constant(Mat::identity(1, 1)), 10).unwrap();
        assert!(m.a(2).is_ok());
        assert!(matches!(m.a(3), Err(Error::TimeIndex { .. })));
    }

    #[test]
    fn regularity_window_for_example_one() {
        let (model, sensors) = presets::paper_example_1(120);
        let w = presets::paper_example_1_window(120);
        let report = validate_assumptions(&model, &sensors, Some(&w), &AssumptionBounds::default());
        assert_eq!(report.find("dynamics.regularity").unwrap().status, Status::Pass);
        // A window reaching a singular step must fail.
        let bad = RegularityWindow::periodic(6, 12, 120, 8, 1e-3);
        let report = validate_assumptions(&model, &sensors, Some(&bad), &AssumptionBounds::default());
        let f = report.find("dynamics.regularity").unwrap();
        assert_eq!(f.status, Status::Fail);
        assert_eq!(f.witness_k, Some(13));
    }
}
