//! Covariance-intersection weights for the local fusion stage.
//!
//! The adaptive strategy looks for simplex weights `w` on the neighbor set
//! that make
//!
//! ```text
//! Δ(w) = Σ_j (w_j − a_j) P̃_j⁻¹ ≻ 0
//! ```
//!
//! and, among those, minimizes `tr(Δ(w)⁻¹)`. Any such `w` fuses to an
//! information matrix at least as large as the constant-weight one, so the
//! fused bound can only shrink. When no feasible `w` is found the constant
//! weights `a` are used unchanged.
//!
//! `tr(Δ⁻¹)` is smooth and convex on `{Δ ≻ 0}`, so the solver runs projected
//! gradient descent on the simplex from the best feasible probe point, treating
//! a failed Cholesky of `Δ` as a rejected step. The equivalent linear matrix
//! inequality `[[Δ, I], [I, M]] ≻ 0` with a diagonal slack `M` is assembled
//! afterwards as a certificate.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, Mat};

/// Knobs for the adaptive weight solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptiveSettings {
    /// Relative objective change that stops the descent.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Random Dirichlet probes tried after the simplex vertices.
    pub probe_count: usize,
    pub probe_seed: u64,
    /// Supergradient steps spent searching for a feasible point when no probe is feasible.
    pub feasibility_iterations: usize,
}

impl Default for AdaptiveSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 200,
            probe_count: 32,
            probe_seed: 0x00C1_5EED,
            feasibility_iterations: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightStrategy {
    /// `w_{k,i,j} = a_{i,j}`.
    Constant,
    Adaptive(AdaptiveSettings),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeltaMatrix {
    pub delta: Mat,
    pub feasible: bool,
}

/// Scale used for the strict-positivity test of `Δ`.
pub fn feasibility_tolerance(infos: &[Mat]) -> f64 {
    let n = infos.first().map_or(1, |m| m.nrows()).max(1) as f64;
    let scale = infos.iter().map(|m| m.trace() / n).fold(0.0, f64::max);
    1e-10 * scale.max(f64::MIN_POSITIVE)
}

fn delta_matrix(w: &[f64], a: &[f64], infos: &[Mat]) -> Mat {
    let n = infos[0].nrows();
    let mut d = Mat::zeros(n, n);
    for ((wj, aj), info) in w.iter().zip(a).zip(infos) {
        linalg::add_scaled(&mut d, wj - aj, info);
    }
    linalg::symmetrize(d)
}

/// `Δ = Σ_j (w_j − a_j) P̃_j⁻¹` together with its feasibility flag.
pub fn delta(w: &[f64], a: &[f64], infos: &[Mat]) -> DeltaMatrix {
    assert_eq!(w.len(), a.len(), "weight and adjacency rows differ in length");
    assert_eq!(w.len(), infos.len(), "one information matrix per neighbor");
    let d = delta_matrix(w, a, infos);
    let feasible = linalg::is_positive_definite(&d, feasibility_tolerance(infos));
    DeltaMatrix { delta: d, feasible }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveSolution {
    pub weights: Vec<f64>,
    /// `tr(Δ(w)⁻¹)` at the returned weights.
    pub objective: f64,
    /// Objective at the feasible starting point.
    pub start_objective: f64,
    pub iterations: usize,
    /// Diagonal of the slack matrix `M` used in the certificate.
    pub slack: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightOutcome {
    Adaptive(AdaptiveSolution),
    /// No feasible weights: keep `w = a`.
    Fallback,
}

impl WeightOutcome {
    pub fn is_fallback(&self) -> bool {
        matches!(self, WeightOutcome::Fallback)
    }
}

/// Objective and gradient at a feasible point.
struct Eval {
    f: f64,
    grad: Vec<f64>,
}

struct Problem<'a> {
    a: &'a [f64],
    infos: &'a [Mat],
    tol: f64,
}

impl Problem<'_> {
    fn eval(&self, w: &[f64]) -> Option<Eval> {
        let d = delta_matrix(w, self.a, self.infos);
        if !linalg::is_positive_definite(&d, self.tol) {
            return None;
        }
        let inv = linalg::symmetrize(linalg::cholesky(&d)?.inverse());
        let f = inv.trace();
        let inv2 = &inv * &inv;
        let grad = self.infos.iter().map(|info| -inv2.component_mul(info).sum()).collect();
        Some(Eval { f, grad })
    }

    fn min_eig(&self, w: &[f64]) -> f64 {
        linalg::min_eigenvalue(&delta_matrix(w, self.a, self.infos))
    }
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    let mut w: Vec<f64> = v.iter().map(|x| (x - theta).max(0.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

fn vertex(m: usize, j: usize) -> Vec<f64> {
    let mut w = vec![0.0; m];
    w[j] = 1.0;
    w
}

/// Uniform draw from the simplex.
pub fn dirichlet_point<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Vertices followed by `probe_count` Dirichlet points, deterministic in the settings.
pub fn probe_points(m: usize, settings: &AdaptiveSettings) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(settings.probe_seed);
    (0..m).map(|j| vertex(m, j)).chain((0..settings.probe_count).map(|_| dirichlet_point(m, &mut rng))).collect()
}

/// Maximizes `λ_min(Δ(w))` by projected supergradient ascent until it turns positive.
fn feasibility_search(problem: &Problem, probes: &[Vec<f64>], iterations: usize) -> Option<Vec<f64>> {
    let mut best = probes
        .iter()
        .map(|w| (problem.min_eig(w), w.clone()))
        .max_by(|a, b| a.0.total_cmp(&b.0))?;
    let mut w = best.1.clone();
    for t in 1..=iterations {
        let d = delta_matrix(&w, problem.a, problem.infos);
        let (lambda, v) = linalg::min_eigenpair(&d);
        if lambda > best.0 {
            best = (lambda, w.clone());
        }
        if linalg::is_positive_definite(&d, problem.tol) {
            return Some(w);
        }
        let s: Vec<f64> = problem.infos.iter().map(|info| (v.transpose() * info * &v)[(0, 0)]).collect();
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let centered: Vec<f64> = s.iter().map(|x| x - mean).collect();
        let norm = centered.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        let eta = 0.5 / (t as f64).sqrt();
        let step: Vec<f64> = w.iter().zip(&centered).map(|(wi, si)| wi + eta * si / norm).collect();
        w = project_simplex(&step);
    }
    let d = delta_matrix(&best.1, problem.a, problem.infos);
    linalg::is_positive_definite(&d, problem.tol).then_some(best.1)
}

/// Diagonal slack `m_l = Σ_j |(Δ⁻¹)_{lj}| + ε`, which makes `M − Δ⁻¹` strictly
/// diagonally dominant, and the Cholesky test of `[[Δ, I], [I, M]]`.
pub fn lmi_certificate(delta: &Mat) -> Option<Vec<f64>> {
    let n = delta.nrows();
    let inv = linalg::symmetrize(linalg::cholesky(delta)?.inverse());
    let mut slack: Vec<f64> = (0..n).map(|l| inv.row(l).iter().map(|v| v.abs()).sum()).collect();
    let eps = 1e-9 * slack.iter().copied().fold(1.0, f64::max);
    slack.iter_mut().for_each(|m| *m += eps);
    let mut block = Mat::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(delta);
    for l in 0..n {
        block[(l, n + l)] = 1.0;
        block[(n + l, l)] = 1.0;
        block[(n + l, n + l)] = slack[l];
    }
    linalg::cholesky(&block).map(|_| slack)
}

/// Adaptive CI weights for one node. `a` holds `a_{i,j}` and `infos` holds
/// `P̃_j⁻¹` for `j ∈ 𝒩_i`, in the same order.
pub fn solve_adaptive(a: &[f64], infos: &[Mat], settings: &AdaptiveSettings) -> WeightOutcome {
    let m = a.len();
    if m <= 1 || infos.len() != m {
        return WeightOutcome::Fallback;
    }
    let problem = Problem {
        a,
        infos,
        tol: feasibility_tolerance(infos),
    };

    let probes = probe_points(m, settings);
    let start = probes
        .iter()
        .filter_map(|w| problem.eval(w).map(|e| (w.clone(), e)))
        .min_by(|x, y| x.1.f.total_cmp(&y.1.f));
    let (mut w, mut cur) = match start {
        Some(s) => s,
        None => match feasibility_search(&problem, &probes, settings.feasibility_iterations) {
            Some(w) => match problem.eval(&w) {
                Some(e) => (w, e),
                None => return WeightOutcome::Fallback,
            },
            None => return WeightOutcome::Fallback,
        },
    };
    let start_objective = cur.f;

    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut step = 1.0 / norm(&cur.grad).max(f64::MIN_POSITIVE);
    let mut iterations = 0;
    while iterations < settings.max_iterations {
        iterations += 1;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = w.iter().zip(&cur.grad).map(|(wi, gi)| wi - step * gi).collect();
            let cand = project_simplex(&trial);
            let d: Vec<f64> = cand.iter().zip(&w).map(|(c, x)| c - x).collect();
            if norm(&d) < 1e-15 {
                break;
            }
            let slope: f64 = cur.grad.iter().zip(&d).map(|(g, di)| g * di).sum();
            if let Some(e) = problem.eval(&cand) {
                if e.f <= cur.f + 1e-4 * slope {
                    accepted = Some((cand, e, d));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((next, e, s)) = accepted else { break };
        let rel = (cur.f - e.f) / cur.f.abs().max(f64::MIN_POSITIVE);
        // Barzilai-Borwein step for the next iteration.
        let y: Vec<f64> = e.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|a| a * a).sum();
        step = if sy > 0.0 { ss / sy } else { step * 2.0 };
        w = next;
        cur = e;
        if rel < settings.tolerance {
            break;
        }
    }

    let d = delta_matrix(&w, a, infos);
    match lmi_certificate(&d) {
        Some(slack) => WeightOutcome::Adaptive(AdaptiveSolution {
            weights: w,
            objective: cur.f,
            start_objective,
            iterations,
            slack,
        }),
        None => {
            log::warn!("adaptive weights failed the LMI certificate; keeping constant weights");
            WeightOutcome::Fallback
        }
    }
}

/// `λ_min(P_a − P_w)` of the symmetrized difference.
pub fn fused_p_order_check(p_w: &Mat, p_a: &Mat) -> f64 {
    linalg::min_eigenvalue(&(p_a - p_w))
}

/// Where a node's fusion weights came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightSource {
    Constant,
    Adaptive,
    Fallback,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightDecision {
    pub weights: Vec<f64>,
    pub source: WeightSource,
    pub iterations: usize,
}

/// Memo of adaptive solves keyed on the exact bits of the inputs.
///
/// The covariance recursions do not depend on measurements, so every Monte
/// Carlo trial asks the same questions at the same `(k, i)`.
#[derive(Debug, Default)]
pub struct WeightMemo {
    map: Mutex<HashMap<Vec<u64>, WeightOutcome>>,
}

impl WeightMemo {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.lock().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn key(a: &[f64], infos: &[Mat]) -> Vec<u64> {
        a.iter().chain(infos.iter().flat_map(|m| m.iter())).map(|v| v.to_bits()).collect()
    }

    pub fn solve(&self, a: &[f64], infos: &[Mat], settings: &AdaptiveSettings) -> WeightOutcome {
        let key = Self::key(a, infos);
        if let Some(hit) = self.map.lock().ok().and_then(|m| m.get(&key).cloned()) {
            return hit;
        }
        let out = solve_adaptive(a, infos, settings);
        if let Ok(mut m) = self.map.lock() {
            m.insert(key, out.clone());
        }
        out
    }
}

impl WeightStrategy {
    pub fn decide(&self, a: &[f64], infos: &[Mat], memo: Option<&WeightMemo>) -> WeightDecision {
        match self {
            WeightStrategy::Constant => WeightDecision {
                weights: a.to_vec(),
                source: WeightSource::Constant,
                iterations: 0,
            },
            WeightStrategy::Adaptive(settings) => {
                let outcome = match memo {
                    Some(memo) => memo.solve(a, infos, settings),
                    None => solve_adaptive(a, infos, settings),
                };
                match outcome {
                    WeightOutcome::Adaptive(s) => WeightDecision {
                        weights: s.weights,
                        source: WeightSource::Adaptive,
                        iterations: s.iterations,
                    },
                    WeightOutcome::Fallback => WeightDecision {
                        weights: a.to_vec(),
                        source: WeightSource::Fallback,
                        iterations: 0,
                    },
                }
            }
        }
    }
}
