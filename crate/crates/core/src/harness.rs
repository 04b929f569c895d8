//! Monte Carlo engine. Every filter in a run consumes the same trajectory and
//! measurement streams per trial, so per-trial differences are paired.
//!
//! Covariances, gains and fusion weights never depend on measurements, so the
//! covariance-side quantities are recorded from trial 0 only; errors are kept
//! for every trial.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::ci_weights::{fused_p_order_check, AdaptiveSettings, WeightMemo, WeightStrategy};
use crate::error::{Error, Result};
use crate::filters::{CentralizedKf, Cdkf, FilterKind, NetworkFilter, NetworkedOptimalKf, StepMatrices, WeightRecord};
use crate::linalg::{self, Mat, Vector};
use crate::model::{simulate, validate_assumptions, AssumptionBounds, NoiseStreams, RegularityWindow, SensorModel, SystemModel, ValidationReport};
use crate::presets::{self, RowDraw};
use crate::stats::{self, BoundednessReport, ConsistencyCell, GaussianityReport, PairedGap};
use crate::topology::{self, NetworkTopology};

/// Everything a run needs besides the Monte Carlo knobs.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub model: SystemModel,
    pub sensors: Vec<SensorModel>,
    pub topology: NetworkTopology,
    /// `E{x_0 x_0ᵀ}`.
    pub p0: Mat,
    /// Every filter starts from `P_{0,i} = p0_inflation · P_0`.
    pub p0_inflation: f64,
    pub window: Option<RegularityWindow>,
    pub bounds: AssumptionBounds,
    pub row_draw: Option<RowDraw>,
}

impl Scenario {
    /// The four-sensor time-varying system on the directed ring.
    pub fn paper_example_1(horizon: usize) -> Self {
        let (model, sensors) = presets::paper_example_1(horizon);
        Self {
            name: "paper_example_1".into(),
            model,
            sensors,
            topology: topology::fig2_ring(),
            p0: Mat::identity(2, 2),
            p0_inflation: 1.0,
            window: Some(presets::paper_example_1_window(horizon)),
            bounds: AssumptionBounds {
                beta1: Some(4.0),
                q_lower: Some(0.5),
                q_upper: Some(0.7),
            },
            row_draw: None,
        }
    }

    /// The twenty-sensor time-invariant system on the undirected mesh.
    pub fn paper_example_2(horizon: usize, seed: u64) -> Self {
        let (model, sensors, draw) = presets::paper_example_2(horizon, seed);
        Self {
            name: "paper_example_2".into(),
            model,
            sensors,
            topology: topology::fig7_twenty_node(),
            p0: Mat::identity(2, 2),
            p0_inflation: 1.0,
            window: None,
            bounds: AssumptionBounds::default(),
            row_draw: Some(draw),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.model.state_dim()
    }

    pub fn horizon(&self) -> usize {
        self.model.horizon()
    }

    pub fn filter_p0(&self) -> Mat {
        &self.p0 * self.p0_inflation
    }

    /// Structural checks that must hold before anything runs.
    pub fn check_structure(&self) -> Result<()> {
        let n = self.state_dim();
        if self.sensors.len() != self.topology.len() {
            return Err(Error::Scenario(format!("{} sensors but {} network nodes", self.sensors.len(), self.topology.len())));
        }
        if self.p0.shape() != (n, n) {
            return Err(Error::dims("P0", format!("{n}x{n}"), format!("{}x{}", self.p0.nrows(), self.p0.ncols())));
        }
        if !(self.p0_inflation >= 1.0 && self.p0_inflation.is_finite()) {
            return Err(Error::Scenario(format!("P0 inflation must be a finite value >= 1, got {}", self.p0_inflation)));
        }
        if !linalg::is_positive_definite(&self.p0, 0.0) {
            return Err(Error::NotPositiveDefinite { what: "P0".into(), k: 0 });
        }
        Ok(())
    }

    pub fn validate(&self) -> ValidationReport {
        validate_assumptions(&self.model, &self.sensors, self.window.as_ref(), &self.bounds)
    }
}

/// Monte Carlo knobs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
    pub filters: Vec<FilterKind>,
    pub adaptive: AdaptiveSettings,
}

/// Per-trial estimation errors stored flat as `[trial][k][node][component]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorCube {
    pub trials: usize,
    pub steps: usize,
    pub nodes: usize,
    pub dim: usize,
    data: Vec<f64>,
}

impl ErrorCube {
    fn offset(&self, trial: usize, k: usize, node: usize) -> usize {
        ((trial * self.steps + k) * self.nodes + node) * self.dim
    }

    /// `x̂_{k,i} − x_k` in trial `trial`.
    pub fn get(&self, trial: usize, k: usize, node: usize) -> &[f64] {
        let o = self.offset(trial, k, node);
        &self.data[o..o + self.dim]
    }

    /// The error of `(k, node)` in every trial.
    pub fn across_trials(&self, k: usize, node: usize) -> Vec<&[f64]> {
        (0..self.trials).map(|t| self.get(t, k, node)).collect()
    }

    /// `(1/N) Σ_i ‖e_{k,i}‖²` for one trial.
    pub fn network_sq_error(&self, trial: usize, k: usize) -> f64 {
        (0..self.nodes).map(|i| self.get(trial, k, i).iter().map(|v| v * v).sum::<f64>()).sum::<f64>() / self.nodes as f64
    }
}

/// Aggregated results for one filter over all trials.
#[derive(Clone, Debug)]
pub struct TrialMetrics {
    pub kind: FilterKind,
    pub nodes: usize,
    /// Network MSE per step, `k = 0..=K`.
    pub mse: Vec<f64>,
    pub mse_se: Vec<f64>,
    /// Trial-averaged `‖x̂_{k,i} − x_k‖²`, indexed `[k][node]`.
    pub node_mse: Vec<Vec<f64>>,
    /// `tr(Σ_i P_{k,i})`.
    pub trace_sum: Vec<f64>,
    /// `P_{k,i}`, indexed `[k][node]`. Identical in every trial.
    pub covariances: Vec<Vec<Mat>>,
    /// Trial 0's estimates, indexed `[k][node]`.
    pub trial0_estimates: Vec<Vec<Vector>>,
    pub errors: ErrorCube,
    /// Per-trial mean network squared error over the steady-state window.
    pub steady_state: Vec<f64>,
    /// Fallback decisions per step (zero for filters without adaptive weights).
    pub fallbacks: Vec<usize>,
    /// Fusion decisions of trial 0; empty for non-CI filters.
    pub weight_log: Vec<WeightRecord>,
}

impl TrialMetrics {
    pub fn steady_state_mean(&self) -> (f64, f64) {
        stats::mean_se(&self.steady_state)
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub scenario: String,
    pub config: ExperimentConfig,
    /// First step of the steady-state window (last quarter of the horizon).
    pub steady_start: usize,
    pub filters: Vec<TrialMetrics>,
    /// `λ_min(P_{k,i|a} − P_{k,i|w})`, `[k][node]`, when both CDKF variants ran.
    pub dominance: Option<Vec<Vec<f64>>>,
    /// Distinct adaptive-weight problems solved.
    pub weight_solves: usize,
    pub row_draw: Option<RowDraw>,
    pub true_states_trial0: Vec<Vector>,
}

impl ExperimentResult {
    pub fn filter(&self, kind: FilterKind) -> Option<&TrialMetrics> {
        self.filters.iter().find(|f| f.kind == kind)
    }
}

/// `[K − K/4, K]`.
pub fn steady_state_start(horizon: usize) -> usize {
    horizon - horizon / 4
}

pub fn build_filter(kind: FilterKind, scenario: &Scenario, settings: &AdaptiveSettings, memo: &Arc<WeightMemo>) -> Box<dyn NetworkFilter> {
    let p0 = scenario.filter_p0();
    match kind {
        FilterKind::Centralized => Box::new(CentralizedKf::new(&p0)),
        FilterKind::NetworkedOptimal => Box::new(NetworkedOptimalKf::new(scenario.topology.clone(), &p0)),
        FilterKind::CdkfConstant => Box::new(Cdkf::new(scenario.topology.clone(), &p0, WeightStrategy::Constant)),
        FilterKind::CdkfAdaptive => Box::new(Cdkf::new(scenario.topology.clone(), &p0, WeightStrategy::Adaptive(settings.clone())).with_memo(Arc::clone(memo))),
    }
}

struct Trial0 {
    covariances: Vec<Vec<Mat>>,
    estimates: Vec<Vec<Vector>>,
    weights: Vec<WeightRecord>,
    fallbacks: Vec<usize>,
}

struct TrialOutput {
    /// Per filter, `[k][node][component]` flat.
    errors: Vec<Vec<f64>>,
    trial0: Option<(Vec<Trial0>, Vec<Vector>)>,
}

fn run_trial(scenario: &Scenario, config: &ExperimentConfig, schedule: &[StepMatrices], memo: &Arc<WeightMemo>, trial: usize) -> Result<TrialOutput> {
    let wrap = |k: usize| move |e: Error| Error::Trial { trial, k, source: Box::new(e) };
    let traj = simulate(&scenario.model, &scenario.sensors, &scenario.p0, config.horizon, NoiseStreams::new(config.seed, trial as u64)).map_err(wrap(0))?;
    let keep = trial == 0;
    let mut errors = Vec::with_capacity(config.filters.len());
    let mut records = Vec::new();
    for &kind in &config.filters {
        let mut filter = build_filter(kind, scenario, &config.adaptive, memo);
        let nodes = filter.estimates().len();
        let mut errs = Vec::with_capacity((config.horizon + 1) * nodes * scenario.state_dim());
        let mut rec = Trial0 {
            covariances: Vec::new(),
            estimates: Vec::new(),
            weights: Vec::new(),
            fallbacks: Vec::new(),
        };
        for k in 0..=config.horizon {
            if k > 0 {
                filter.step(&schedule[k - 1], &traj.measurements[k]).map_err(wrap(k))?;
            }
            for est in filter.estimates() {
                errs.extend((&est.x_hat - &traj.states[k]).iter());
            }
            if keep {
                rec.covariances.push(filter.estimates().iter().map(|e| e.p.clone()).collect());
                rec.estimates.push(filter.estimates().iter().map(|e| e.x_hat.clone()).collect());
                rec.fallbacks.push(filter.last_weights().iter().filter(|w| w.is_fallback()).count());
                rec.weights.extend(filter.last_weights().iter().cloned());
            }
        }
        errors.push(errs);
        records.push(rec);
    }
    Ok(TrialOutput {
        errors,
        trial0: keep.then(|| (records, traj.states)),
    })
}

/// Runs `config.trials` paired trials of every requested filter.
pub fn run_experiment(scenario: &Scenario, config: &ExperimentConfig) -> Result<ExperimentResult> {
    scenario.check_structure()?;
    if config.trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    if config.filters.is_empty() {
        return Err(Error::InvalidArgument("no filters selected".into()));
    }
    if config.horizon > scenario.horizon() {
        return Err(Error::TimeIndex {
            context: "scenario horizon",
            k: config.horizon,
            limit: scenario.horizon(),
        });
    }
    let mut kinds = config.filters.clone();
    kinds.sort();
    kinds.dedup();
    if kinds.len() != config.filters.len() {
        return Err(Error::InvalidArgument("duplicate filter selection".into()));
    }

    let schedule = StepMatrices::schedule(&scenario.model, &scenario.sensors, config.horizon)?;
    let memo = Arc::new(WeightMemo::new());
    // Trial 0 first, sequentially, so the weight memo is warm for the rest.
    let first = run_trial(scenario, config, &schedule, &memo, 0)?;
    let rest = (1..config.trials)
        .into_par_iter()
        .map(|t| run_trial(scenario, config, &schedule, &memo, t))
        .collect::<Result<Vec<_>>>()?;

    let steps = config.horizon + 1;
    let n = scenario.state_dim();
    let steady_start = steady_state_start(config.horizon);
    let (records, true_states) = first.trial0.expect("trial 0 keeps its record");
    let mut outputs = std::iter::once(first.errors).chain(rest.into_iter().map(|o| o.errors)).collect::<Vec<_>>();

    let mut filters = Vec::with_capacity(config.filters.len());
    for (fi, (kind, rec)) in config.filters.iter().zip(records).enumerate() {
        let nodes = rec.covariances[0].len();
        let mut data = Vec::with_capacity(config.trials * steps * nodes * n);
        for out in outputs.iter_mut() {
            data.append(&mut out[fi]);
        }
        let errors = ErrorCube {
            trials: config.trials,
            steps,
            nodes,
            dim: n,
            data,
        };
        let mut mse = Vec::with_capacity(steps);
        let mut mse_se = Vec::with_capacity(steps);
        let mut per_trial = vec![vec![0.0; steps]; config.trials];
        for (t, row) in per_trial.iter_mut().enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                *v = errors.network_sq_error(t, k);
            }
        }
        for k in 0..steps {
            let col: Vec<f64> = per_trial.iter().map(|r| r[k]).collect();
            let (m, se) = stats::mean_se(&col);
            mse.push(m);
            mse_se.push(se);
        }
        let node_mse = (0..steps)
            .map(|k| {
                (0..nodes)
                    .map(|i| errors.across_trials(k, i).iter().map(|e| e.iter().map(|v| v * v).sum::<f64>()).sum::<f64>() / config.trials as f64)
                    .collect()
            })
            .collect();
        let steady_state = per_trial.iter().map(|r| r[steady_start..].iter().sum::<f64>() / (steps - steady_start) as f64).collect();
        let trace_sum = rec.covariances.iter().map(|ps| ps.iter().map(|p| p.trace()).sum()).collect();
        filters.push(TrialMetrics {
            kind: *kind,
            nodes,
            mse,
            mse_se,
            node_mse,
            trace_sum,
            covariances: rec.covariances,
            trial0_estimates: rec.estimates,
            errors,
            steady_state,
            fallbacks: rec.fallbacks,
            weight_log: rec.weights,
        });
    }

    let find = |k: FilterKind| filters.iter().find(|f| f.kind == k);
    let dominance = match (find(FilterKind::CdkfAdaptive), find(FilterKind::CdkfConstant)) {
        (Some(w), Some(a)) => Some(
            w.covariances
                .iter()
                .zip(&a.covariances)
                .map(|(pw, pa)| pw.iter().zip(pa).map(|(pw, pa)| fused_p_order_check(pw, pa)).collect())
                .collect(),
        ),
        _ => None,
    };

    Ok(ExperimentResult {
        scenario: scenario.name.clone(),
        config: config.clone(),
        steady_start,
        filters,
        dominance,
        weight_solves: memo.len(),
        row_draw: scenario.row_draw.clone(),
        true_states_trial0: true_states,
    })
}

/// Outcome of one acceptance check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl CheckOutcome {
    fn judged(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: if passed { CheckStatus::Pass } else { CheckStatus::Fail },
            detail: detail.into(),
        }
    }

    fn skipped(name: impl Into<String>, why: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: CheckStatus::Skipped,
            detail: why.into(),
        }
    }
}

/// Tolerances used by [`assess`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckSettings {
    pub consistency_sigmas: f64,
    pub ordering_sigmas: f64,
    pub moment_sigmas: f64,
    pub dominance_floor: f64,
    pub plateau_ratio: f64,
    /// Step at which errors are tested for zero mean and Gaussian shape.
    pub moment_step: usize,
    pub bootstrap_seed: u64,
}

impl Default for CheckSettings {
    fn default() -> Self {
        Self {
            consistency_sigmas: 3.0,
            ordering_sigmas: 2.0,
            moment_sigmas: 3.0,
            dominance_floor: -1e-9,
            plateau_ratio: 1.05,
            moment_step: 50,
            bootstrap_seed: 0xB007,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FilterConsistency {
    pub kind: FilterKind,
    pub cells: Vec<ConsistencyCell>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentCell {
    pub filter: FilterKind,
    pub sensor: usize,
    pub component: usize,
    pub report: GaussianityReport,
}

#[derive(Clone, Debug)]
pub struct Assessment {
    pub checks: Vec<CheckOutcome>,
    pub consistency: Vec<FilterConsistency>,
    pub moments: Vec<MomentCell>,
    pub ordering: Vec<(FilterKind, FilterKind, PairedGap)>,
    pub boundedness: Vec<(FilterKind, usize, BoundednessReport)>,
}

impl Assessment {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Minimum trials for the consistency check.
pub const MIN_CONSISTENCY_TRIALS: usize = 100;
/// Minimum trials for the moment checks.
pub const MIN_MOMENT_TRIALS: usize = 200;
/// Horizons shorter than this are still transient; the plateau check is skipped.
pub const MIN_PLATEAU_HORIZON: usize = 40;

/// Consistency cells for every `(k, node)` of one filter.
pub fn consistency_report(metrics: &TrialMetrics, resamples: &[Vec<usize>], sigmas: f64) -> FilterConsistency {
    let steps = metrics.covariances.len();
    let cells = (0..steps)
        .into_par_iter()
        .flat_map_iter(|k| (0..metrics.nodes).map(move |i| (k, i)))
        .map(|(k, i)| stats::consistency_cell(k, i, &metrics.covariances[k][i], &metrics.errors.across_trials(k, i), resamples, sigmas))
        .collect();
    FilterConsistency { kind: metrics.kind, cells }
}

/// Runs every applicable check on a finished experiment.
pub fn assess(result: &ExperimentResult, settings: &CheckSettings) -> Result<Assessment> {
    let trials = result.config.trials;
    let horizon = result.config.horizon;
    let mut checks = Vec::new();
    let mut consistency = Vec::new();
    let mut moments = Vec::new();
    let mut ordering = Vec::new();
    let mut bounded = Vec::new();

    let resamples = stats::bootstrap_indices(trials, stats::BOOTSTRAP_RESAMPLES, settings.bootstrap_seed);
    for m in &result.filters {
        let fc = consistency_report(m, &resamples, settings.consistency_sigmas);
        // Only the CI filters claim a conservative bound; the others carry their
        // exact covariance, where sampling noise alone breaches a one-sided band.
        if m.kind.is_cdkf() {
            let name = format!("consistency.{}", m.kind);
            if trials < MIN_CONSISTENCY_TRIALS {
                checks.push(CheckOutcome::skipped(name, format!("needs at least {MIN_CONSISTENCY_TRIALS} trials")));
            } else {
                let worst = fc.cells.iter().min_by(|a, b| (a.min_eig + a.band).total_cmp(&(b.min_eig + b.band))).expect("at least one cell");
                let failed = fc.cells.iter().filter(|c| !c.passed).count();
                checks.push(CheckOutcome::judged(
                    name,
                    failed == 0,
                    format!(
                        "{failed} of {} cells below the band; tightest at k = {}, sensor {}: min_eig {:.3e}, band {:.3e}",
                        fc.cells.len(),
                        worst.k,
                        worst.sensor + 1,
                        worst.min_eig,
                        worst.band
                    ),
                ));
            }
            let name = format!("aggregate_trace.{}", m.kind);
            if trials < MIN_CONSISTENCY_TRIALS {
                checks.push(CheckOutcome::skipped(name, format!("needs at least {MIN_CONSISTENCY_TRIALS} trials")));
            } else {
                let bad = (0..=horizon).filter(|&k| m.trace_sum[k] < m.mse[k] - settings.consistency_sigmas * m.mse_se[k]).collect::<Vec<_>>();
                checks.push(CheckOutcome::judged(name, bad.is_empty(), format!("tr(sum P) below MSE - band at {} steps", bad.len())));
            }
        }
        consistency.push(fc);
    }

    match &result.dominance {
        Some(d) => {
            let (k, i, v) = d
                .iter()
                .enumerate()
                .flat_map(|(k, row)| row.iter().enumerate().map(move |(i, v)| (k, i, *v)))
                .min_by(|a, b| a.2.total_cmp(&b.2))
                .expect("non-empty dominance table");
            checks.push(CheckOutcome::judged(
                "dominance",
                v >= settings.dominance_floor,
                format!("min eig(P_a - P_w) = {v:.3e} at k = {k}, sensor {}", i + 1),
            ));
        }
        None => checks.push(CheckOutcome::skipped("dominance", "needs both cdkf-adaptive and cdkf-constant")),
    }

    let mut present: Vec<&TrialMetrics> = result.filters.iter().collect();
    present.sort_by_key(|m| m.kind);
    for pair in present.windows(2) {
        let (better, worse) = (pair[0], pair[1]);
        let name = format!("ordering.{}<={}", better.kind, worse.kind);
        if trials < 2 {
            checks.push(CheckOutcome::skipped(name, "needs at least 2 trials"));
            continue;
        }
        let gap = stats::paired_gap(&worse.steady_state, &better.steady_state, settings.ordering_sigmas)?;
        checks.push(CheckOutcome::judged(
            name,
            gap.passed,
            format!("steady-state paired gap {:.4e} ± {:.2e} (SE)", gap.mean, gap.se),
        ));
        ordering.push((better.kind, worse.kind, gap));
    }

    let k_moment = settings.moment_step.min(horizon);
    for m in result.filters.iter().filter(|m| m.kind.is_cdkf()) {
        let name = format!("gaussianity.{}", m.kind);
        if trials < MIN_MOMENT_TRIALS {
            checks.push(CheckOutcome::skipped(name, format!("needs at least {MIN_MOMENT_TRIALS} trials")));
            continue;
        }
        let mut failures = Vec::new();
        for i in 0..m.nodes {
            let errs = m.errors.across_trials(k_moment, i);
            for c in 0..m.errors.dim {
                let xs: Vec<f64> = errs.iter().map(|e| e[c]).collect();
                let report = stats::gaussianity_check(&xs, settings.moment_sigmas)?;
                if !report.passed() {
                    failures.push(format!("sensor {} component {}", i + 1, c + 1));
                }
                moments.push(MomentCell {
                    filter: m.kind,
                    sensor: i,
                    component: c,
                    report,
                });
            }
        }
        let detail = if failures.is_empty() { format!("all components pass at k = {k_moment}") } else { format!("at k = {k_moment}: {}", failures.join(", ")) };
        checks.push(CheckOutcome::judged(name, failures.is_empty(), detail));
    }

    for m in &result.filters {
        let name = format!("boundedness.{}", m.kind);
        if horizon < MIN_PLATEAU_HORIZON {
            checks.push(CheckOutcome::skipped(name, format!("needs a horizon of at least {MIN_PLATEAU_HORIZON}")));
            continue;
        }
        let reports: Vec<(usize, BoundednessReport)> = (0..m.nodes)
            .map(|i| {
                let series: Vec<f64> = m.covariances.iter().map(|ps| ps[i].trace()).collect();
                (i, stats::boundedness(&series, settings.plateau_ratio))
            })
            .collect();
        let passed = reports.iter().all(|(_, r)| r.passed);
        let (i, w) = reports
            .iter()
            .find(|(_, r)| !r.passed)
            .or_else(|| reports.iter().max_by(|a, b| a.1.ratio.total_cmp(&b.1.ratio)))
            .expect("at least one node");
        checks.push(CheckOutcome::judged(
            name,
            passed,
            format!("worst sensor {}: last-quarter max {:.4e}, mid-quarter max {:.4e}", i + 1, w.last_max, w.mid_max),
        ));
        bounded.extend(reports.into_iter().map(|(i, r)| (m.kind, i, r)));
    }

    Ok(Assessment {
        checks,
        consistency,
        moments,
        ordering,
        boundedness: bounded,
    })
}
