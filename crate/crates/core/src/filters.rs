//! Kalman predict/update kernels and the three network filters: the
//! centralized filter, the networked filter with optimal local gains and full
//! cross-covariance bookkeeping, and the consistent distributed filter with
//! covariance-intersection fusion.
//!
//! Every network filter starts from `x̂_{0,i} = 0`, `P_{0,i} = P_0` and then,
//! at each `k ≥ 1`, consumes `A_{k-1}`, `Q_{k-1}` and the measurements `y_{k,i}`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ci_weights::{WeightDecision, WeightMemo, WeightSource, WeightStrategy};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::model::{SensorModel, SystemModel};
use crate::topology::NetworkTopology;

/// One sensor's estimate and the matrix bounding its error covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeEstimate {
    pub x_hat: Vector,
    pub p: Mat,
    pub k: usize,
    /// Zero-based node index.
    pub sensor: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictedEstimate {
    pub x_bar: Vector,
    pub p_bar: Mat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UpdatedEstimate {
    pub phi: Vector,
    pub p_tilde: Mat,
    pub gain: Mat,
}

/// `x̄ = A x̂`, `P̄ = A P Aᵀ + Q`.
pub fn predict(est: &NodeEstimate, a: &Mat, q: &Mat) -> Result<PredictedEstimate> {
    let n = est.x_hat.len();
    if a.shape() != (n, n) || q.shape() != (n, n) || est.p.shape() != (n, n) {
        return Err(Error::dims("predict", format!("{n}x{n}"), format!("A {:?}, Q {:?}", a.shape(), q.shape())));
    }
    let x_bar = a * &est.x_hat;
    let p_bar = linalg::symmetrize(a * &est.p * a.transpose() + q);
    Ok(PredictedEstimate { x_bar, p_bar })
}

/// Kalman measurement update. The gain solves against the innovation
/// covariance `S = H P̄ Hᵀ + R` by Cholesky; `P̃ = (I − K H) P̄`.
pub fn update(pred: &PredictedEstimate, y: &Vector, h: &Mat, r: &Mat) -> Result<UpdatedEstimate> {
    let n = pred.x_bar.len();
    let m = h.nrows();
    if h.ncols() != n || r.shape() != (m, m) || y.len() != m {
        return Err(Error::dims("update", format!("H {m}x{n}, R {m}x{m}, y {m}"), format!("H {:?}, R {:?}, y {}", h.shape(), r.shape(), y.len())));
    }
    let hp = h * &pred.p_bar;
    let s = linalg::symmetrize(&hp * h.transpose() + r);
    let chol = linalg::cholesky_jittered(&s).ok_or_else(|| Error::Numerical(format!("innovation covariance is not positive definite: {s}")))?;
    // K = P̄ Hᵀ S⁻¹ = (S⁻¹ H P̄)ᵀ
    let gain = chol.solve(&hp).transpose();
    let innovation = y - h * &pred.x_bar;
    let phi = &pred.x_bar + &gain * innovation;
    let p_tilde = linalg::symmetrize(&pred.p_bar - &gain * hp);
    Ok(UpdatedEstimate { phi, p_tilde, gain })
}

/// Matrices shared by every trial at step `k`: `A_{k-1}`, `Q_{k-1}` and each
/// sensor's `H_{k,i}`, `R_{k,i}`, plus the stacked pair for the centralized filter.
#[derive(Clone, Debug)]
pub struct StepMatrices {
    pub k: usize,
    pub a_prev: Mat,
    pub q_prev: Mat,
    pub h: Vec<Mat>,
    pub r: Vec<Mat>,
    pub h_stacked: Mat,
    pub r_stacked: Mat,
}

impl StepMatrices {
    /// Requires `k ≥ 1`.
    pub fn at(model: &SystemModel, sensors: &[SensorModel], k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("filters start updating at k = 1".into()));
        }
        let n = model.state_dim();
        let h = sensors.iter().map(|s| s.h(k).map(|m| m.into_owned())).collect::<Result<Vec<_>>>()?;
        let r = sensors.iter().map(|s| s.r(k).map(|m| m.into_owned())).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            k,
            a_prev: model.a(k - 1)?.into_owned(),
            q_prev: model.q(k - 1)?.into_owned(),
            h_stacked: linalg::vstack(&h, n),
            r_stacked: linalg::block_diag(&r),
            h,
            r,
        })
    }

    /// Matrices for `k = 1..=horizon`.
    pub fn schedule(model: &SystemModel, sensors: &[SensorModel], horizon: usize) -> Result<Vec<Self>> {
        (1..=horizon).map(|k| Self::at(model, sensors, k)).collect()
    }
}

/// One fusion decision, kept for the weight log.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightRecord {
    pub k: usize,
    pub sensor: usize,
    pub neighbors: Vec<usize>,
    pub decision: WeightDecision,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FilterKind {
    #[serde(rename = "ckf")]
    Centralized,
    #[serde(rename = "table1")]
    NetworkedOptimal,
    #[serde(rename = "cdkf-adaptive")]
    CdkfAdaptive,
    #[serde(rename = "cdkf-constant")]
    CdkfConstant,
}

impl FilterKind {
    /// Expected MSE order, best first.
    pub const ALL: [FilterKind; 4] = [
        FilterKind::Centralized,
        FilterKind::NetworkedOptimal,
        FilterKind::CdkfAdaptive,
        FilterKind::CdkfConstant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Centralized => "ckf",
            FilterKind::NetworkedOptimal => "table1",
            FilterKind::CdkfAdaptive => "cdkf-adaptive",
            FilterKind::CdkfConstant => "cdkf-constant",
        }
    }

    pub fn is_cdkf(self) -> bool {
        matches!(self, FilterKind::CdkfAdaptive | FilterKind::CdkfConstant)
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FilterKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown filter '{s}' (expected ckf, table1, cdkf-constant or cdkf-adaptive)")))
    }
}

/// A filter driven one time step at a time.
pub trait NetworkFilter: Send {
    fn kind(&self) -> FilterKind;

    /// Advances from `k - 1` to `k` with `y[i] = y_{k,i}`.
    fn step(&mut self, mats: &StepMatrices, y: &[Vector]) -> Result<()>;

    /// Current estimates; a single entry for the centralized filter.
    fn estimates(&self) -> &[NodeEstimate];

    /// Fusion decisions made during the last step.
    fn last_weights(&self) -> &[WeightRecord] {
        &[]
    }
}

fn initial_estimates(count: usize, p0: &Mat) -> Vec<NodeEstimate> {
    (0..count)
        .map(|i| NodeEstimate {
            x_hat: Vector::zeros(p0.nrows()),
            p: p0.clone(),
            k: 0,
            sensor: i,
        })
        .collect()
}

/// Standard Kalman filter on the stacked measurement.
#[derive(Clone, Debug)]
pub struct CentralizedKf {
    est: [NodeEstimate; 1],
}

impl CentralizedKf {
    pub fn new(p0: &Mat) -> Self {
        let mut e = initial_estimates(1, p0);
        Self { est: [e.remove(0)] }
    }

    pub fn estimate(&self) -> &NodeEstimate {
        &self.est[0]
    }
}

/// One centralized step: predict, then update with the stacked `(y, H, R)`.
pub fn ckf_step(est: &NodeEstimate, mats: &StepMatrices, y: &[Vector]) -> Result<NodeEstimate> {
    let pred = predict(est, &mats.a_prev, &mats.q_prev)?;
    let y = linalg::vstack_vectors(y);
    let upd = update(&pred, &y, &mats.h_stacked, &mats.r_stacked)?;
    Ok(NodeEstimate {
        x_hat: upd.phi,
        p: upd.p_tilde,
        k: mats.k,
        sensor: 0,
    })
}

impl NetworkFilter for CentralizedKf {
    fn kind(&self) -> FilterKind {
        FilterKind::Centralized
    }

    fn step(&mut self, mats: &StepMatrices, y: &[Vector]) -> Result<()> {
        self.est[0] = ckf_step(&self.est[0], mats, y)?;
        Ok(())
    }

    fn estimates(&self) -> &[NodeEstimate] {
        &self.est
    }
}

/// Networked filter with locally optimal gains, fusion matrices
/// `W_{k,i,j} = a_{i,j} I` and the full table of cross-covariances
/// `P_{k,i,j}`. Memory is `O(N² n²)`; every node needs global information.
#[derive(Clone, Debug)]
pub struct NetworkedOptimalKf {
    topology: NetworkTopology,
    est: Vec<NodeEstimate>,
    /// Row-major `N × N` table of blocks; block `(i, i)` mirrors `est[i].p`.
    cross: Vec<Mat>,
}

impl NetworkedOptimalKf {
    pub fn new(topology: NetworkTopology, p0: &Mat) -> Self {
        let count = topology.len();
        Self {
            est: initial_estimates(count, p0),
            cross: vec![p0.clone(); count * count],
            topology,
        }
    }

    /// `P_{k,i,j}`.
    pub fn cross(&self, i: usize, j: usize) -> &Mat {
        &self.cross[i * self.topology.len() + j]
    }
}

/// One step of the networked optimal-gain filter over the full state table.
pub fn networked_optimal_step(net: &mut NetworkedOptimalKf, mats: &StepMatrices, y: &[Vector]) -> Result<()> {
    let count = net.topology.len();
    if y.len() != count || mats.h.len() != count {
        return Err(Error::dims("networked_optimal_step", count, y.len()));
    }
    let n = mats.a_prev.nrows();
    let a = &mats.a_prev;
    let at = a.transpose();
    let eye = Mat::identity(n, n);

    // Prediction of every block, then the local updates.
    let mut p_bar = vec![Mat::zeros(n, n); count * count];
    for i in 0..count {
        for j in i..count {
            let mut b = a * &net.cross[i * count + j] * &at + &mats.q_prev;
            if i == j {
                linalg::symmetrize_mut(&mut b);
            } else {
                p_bar[j * count + i] = b.transpose();
            }
            p_bar[i * count + j] = b;
        }
    }
    let mut phi = Vec::with_capacity(count);
    let mut complement = Vec::with_capacity(count);
    for i in 0..count {
        let pred = PredictedEstimate {
            x_bar: a * &net.est[i].x_hat,
            p_bar: p_bar[i * count + i].clone(),
        };
        let upd = update(&pred, &y[i], &mats.h[i], &mats.r[i])?;
        complement.push(&eye - &upd.gain * &mats.h[i]);
        phi.push(upd.phi);
    }
    let mut p_tilde = vec![Mat::zeros(n, n); count * count];
    for j in 0..count {
        for s in j..count {
            if j == s {
                p_tilde[j * count + j] = linalg::symmetrize(&complement[j] * &p_bar[j * count + j]);
            } else {
                let b = &complement[j] * &p_bar[j * count + s] * complement[s].transpose();
                p_tilde[s * count + j] = b.transpose();
                p_tilde[j * count + s] = b;
            }
        }
    }

    // T_{i,s} = Σ_{j∈𝒩_i} a_{i,j} P̃_{j,s}, then P_{i,l} = Σ_{s∈𝒩_l} a_{l,s} T_{i,s}.
    let mut t = vec![Mat::zeros(n, n); count * count];
    for i in 0..count {
        for &j in net.topology.neighbors(i) {
            let w = net.topology.weight(i, j);
            for s in 0..count {
                linalg::add_scaled(&mut t[i * count + s], w, &p_tilde[j * count + s]);
            }
        }
    }
    for i in 0..count {
        for l in i..count {
            let mut block = Mat::zeros(n, n);
            for &s in net.topology.neighbors(l) {
                linalg::add_scaled(&mut block, net.topology.weight(l, s), &t[i * count + s]);
            }
            if i == l {
                linalg::symmetrize_mut(&mut block);
            } else {
                net.cross[l * count + i] = block.transpose();
            }
            net.cross[i * count + l] = block;
        }
    }
    for i in 0..count {
        let mut x = Vector::zeros(n);
        for &j in net.topology.neighbors(i) {
            x.axpy(net.topology.weight(i, j), &phi[j], 1.0);
        }
        net.est[i] = NodeEstimate {
            x_hat: x,
            p: net.cross[i * count + i].clone(),
            k: mats.k,
            sensor: i,
        };
    }
    Ok(())
}

impl NetworkFilter for NetworkedOptimalKf {
    fn kind(&self) -> FilterKind {
        FilterKind::NetworkedOptimal
    }

    fn step(&mut self, mats: &StepMatrices, y: &[Vector]) -> Result<()> {
        networked_optimal_step(self, mats, y)
    }

    fn estimates(&self) -> &[NodeEstimate] {
        &self.est
    }
}

/// What a node publishes after its local update: `φ_{k,j}` and `P̃_{k,j}⁻¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborMessage {
    pub phi: Vector,
    pub info: Mat,
}

/// Simplex check with a `1e-10` tolerance on the sum.
pub fn check_simplex(w: &[f64]) -> Result<()> {
    if w.is_empty() {
        return Err(Error::WeightContract("empty weight vector".into()));
    }
    if let Some(v) = w.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::WeightContract(format!("negative weight {v}")));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > 1e-10 {
        return Err(Error::WeightContract(format!("weights sum to {sum}")));
    }
    Ok(())
}

/// Covariance-intersection fusion of the neighbor messages:
/// `P = (Σ w_j P̃_j⁻¹)⁻¹`, `x̂ = P Σ w_j P̃_j⁻¹ φ_j`. Returns `(x̂, P)`.
pub fn ci_fuse(messages: &[NeighborMessage], weights: &[f64]) -> Result<(Vector, Mat)> {
    check_simplex(weights)?;
    if messages.len() != weights.len() {
        return Err(Error::dims("ci_fuse", messages.len(), weights.len()));
    }
    let n = messages[0].phi.len();
    let mut info = Mat::zeros(n, n);
    let mut info_state = Vector::zeros(n);
    for (msg, &w) in messages.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        linalg::add_scaled(&mut info, w, &msg.info);
        info_state.axpy(w, &(&msg.info * &msg.phi), 1.0);
    }
    linalg::symmetrize_mut(&mut info);
    let chol = linalg::cholesky_jittered(&info).ok_or_else(|| Error::Numerical("fused information matrix is not positive definite".into()))?;
    let x = chol.solve(&info_state);
    let p = linalg::symmetrize(chol.inverse());
    Ok((x, p))
}

/// Consistent distributed Kalman filter.
pub struct Cdkf {
    topology: NetworkTopology,
    strategy: WeightStrategy,
    memo: Option<Arc<WeightMemo>>,
    est: Vec<NodeEstimate>,
    weights: Vec<WeightRecord>,
}

impl fmt::Debug for Cdkf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Cdkf").field("strategy", &self.strategy).field("est", &self.est).finish()
    }
}

impl Cdkf {
    pub fn new(topology: NetworkTopology, p0: &Mat, strategy: WeightStrategy) -> Self {
        Self {
            est: initial_estimates(topology.len(), p0),
            topology,
            strategy,
            memo: None,
            weights: Vec::new(),
        }
    }

    /// Shares adaptive-weight solutions across filters built from the same scenario.
    pub fn with_memo(mut self, memo: Arc<WeightMemo>) -> Self {
        self.memo = Some(memo);
        self
    }

    pub fn strategy(&self) -> &WeightStrategy {
        &self.strategy
    }
}

/// One CDKF step. Every node predicts and updates; only after all nodes have
/// published `(φ, P̃⁻¹)` does any node fuse, reading just its neighbor slice.
pub fn cdkf_step(net: &mut Cdkf, mats: &StepMatrices, y: &[Vector]) -> Result<()> {
    let count = net.topology.len();
    if y.len() != count || mats.h.len() != count {
        return Err(Error::dims("cdkf_step", count, y.len()));
    }
    let published = net
        .est
        .iter()
        .enumerate()
        .map(|(i, est)| {
            let pred = predict(est, &mats.a_prev, &mats.q_prev)?;
            let upd = update(&pred, &y[i], &mats.h[i], &mats.r[i])?;
            let info = linalg::spd_inverse(&upd.p_tilde).ok_or_else(|| Error::Numerical(format!("P_tilde of node {i} is not invertible")))?;
            Ok(NeighborMessage { phi: upd.phi, info })
        })
        .collect::<Result<Vec<_>>>()?;

    net.weights.clear();
    for i in 0..count {
        let neighbors = net.topology.neighbors(i);
        let slice: Vec<NeighborMessage> = neighbors.iter().map(|&j| published[j].clone()).collect();
        let infos: Vec<Mat> = slice.iter().map(|m| m.info.clone()).collect();
        let a = net.topology.neighbor_weights(i);
        let decision = net.strategy.decide(&a, &infos, net.memo.as_deref());
        let (x_hat, p) = ci_fuse(&slice, &decision.weights)?;
        net.est[i] = NodeEstimate {
            x_hat,
            p,
            k: mats.k,
            sensor: i,
        };
        net.weights.push(WeightRecord {
            k: mats.k,
            sensor: i,
            neighbors: neighbors.to_vec(),
            decision,
        });
    }
    Ok(())
}

impl NetworkFilter for Cdkf {
    fn kind(&self) -> FilterKind {
        match self.strategy {
            WeightStrategy::Constant => FilterKind::CdkfConstant,
            WeightStrategy::Adaptive(_) => FilterKind::CdkfAdaptive,
        }
    }

    fn step(&mut self, mats: &StepMatrices, y: &[Vector]) -> Result<()> {
        cdkf_step(self, mats, y)
    }

    fn estimates(&self) -> &[NodeEstimate] {
        &self.est
    }

    fn last_weights(&self) -> &[WeightRecord] {
        &self.weights
    }
}

impl WeightRecord {
    pub fn is_fallback(&self) -> bool {
        self.decision.source == WeightSource::Fallback
    }
}
