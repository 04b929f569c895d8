//! Plot-ready CSV tables and the JSON run summary. Output bytes depend only on
//! the scenario, seed and trial count. Sensor ids are one-based.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::filters::FilterKind;
use crate::harness::{Assessment, CheckOutcome, ExperimentResult};
use crate::linalg;
use crate::presets::RowDraw;

pub fn write_mse<W: Write>(result: &ExperimentResult, mut w: W) -> io::Result<()> {
    writeln!(w, "k,filter,mse,se,trace_sum")?;
    for m in &result.filters {
        for k in 0..m.mse.len() {
            writeln!(w, "{k},{},{},{},{}", m.kind, m.mse[k], m.mse_se[k], m.trace_sum[k])?;
        }
    }
    Ok(())
}

pub fn write_consistency<W: Write>(assessment: &Assessment, mut w: W) -> io::Result<()> {
    writeln!(w, "k,filter,sensor,min_eig,band,passed")?;
    for fc in &assessment.consistency {
        for c in &fc.cells {
            writeln!(w, "{},{},{},{},{},{}", c.k, fc.kind, c.sensor + 1, c.min_eig, c.band, c.passed)?;
        }
    }
    Ok(())
}

/// Empty table (header only) when the run lacks one of the CDKF variants.
pub fn write_dominance<W: Write>(result: &ExperimentResult, mut w: W) -> io::Result<()> {
    writeln!(w, "k,sensor,min_eig")?;
    for (k, row) in result.dominance.iter().flatten().enumerate() {
        for (i, v) in row.iter().enumerate() {
            writeln!(w, "{k},{},{v}", i + 1)?;
        }
    }
    Ok(())
}

fn joined<T: ToString>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

/// Trial 0's fusion decisions. Neighbor ids and weights are `;`-separated.
pub fn write_weights<W: Write>(result: &ExperimentResult, mut w: W) -> io::Result<()> {
    writeln!(w, "k,filter,sensor,neighbors,weights,source,iterations")?;
    for m in result.filters.iter().filter(|m| m.kind.is_cdkf()) {
        for r in &m.weight_log {
            let source = match r.decision.source {
                crate::ci_weights::WeightSource::Constant => "constant",
                crate::ci_weights::WeightSource::Adaptive => "adaptive",
                crate::ci_weights::WeightSource::Fallback => "fallback",
            };
            writeln!(
                w,
                "{},{},{},{},{},{source},{}",
                r.k,
                m.kind,
                r.sensor + 1,
                joined(r.neighbors.iter().map(|j| j + 1)),
                joined(&r.decision.weights),
                r.decision.iterations
            )?;
        }
    }
    Ok(())
}

/// Trial 0's per-step estimates: `k, filter, sensor, x1..xn, trace_p, min_eig_p`.
pub fn write_states<W: Write>(result: &ExperimentResult, mut w: W) -> io::Result<()> {
    let n = result.true_states_trial0.first().map_or(0, |x| x.len());
    let xs = (1..=n).map(|c| format!("x{c}")).collect::<Vec<_>>().join(",");
    writeln!(w, "k,filter,sensor,{xs},trace_p,min_eig_p")?;
    for (k, x) in result.true_states_trial0.iter().enumerate() {
        writeln!(w, "{k},truth,0,{},,", x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))?;
    }
    for m in &result.filters {
        for (k, (est, ps)) in m.trial0_estimates.iter().zip(&m.covariances).enumerate() {
            for (i, (x, p)) in est.iter().zip(ps).enumerate() {
                let comps = x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
                writeln!(w, "{k},{},{},{comps},{},{}", m.kind, i + 1, p.trace(), linalg::min_eigenvalue(p))?;
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct FilterSummary {
    pub filter: FilterKind,
    pub steady_state_mse: f64,
    pub steady_state_se: f64,
    /// Fraction of trial-0 fusion decisions that fell back to constant weights.
    pub fallback_fraction: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub seed: u64,
    pub trials: usize,
    pub horizon: usize,
    pub steady_state_start: usize,
    pub filters: Vec<FilterSummary>,
    /// Observation rows drawn for the twenty-sensor preset.
    pub row_draw: Option<RowDraw>,
    pub weight_solves: usize,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

pub fn summary(result: &ExperimentResult, assessment: &Assessment) -> Summary {
    let filters = result
        .filters
        .iter()
        .map(|m| {
            let (mean, se) = m.steady_state_mean();
            let decisions = m.weight_log.len();
            let fallbacks: usize = m.fallbacks.iter().sum();
            FilterSummary {
                filter: m.kind,
                steady_state_mse: mean,
                steady_state_se: se,
                fallback_fraction: if decisions == 0 { 0.0 } else { fallbacks as f64 / decisions as f64 },
            }
        })
        .collect();
    Summary {
        scenario: result.scenario.clone(),
        seed: result.config.seed,
        trials: result.config.trials,
        horizon: result.config.horizon,
        steady_state_start: result.steady_start,
        filters,
        row_draw: result.row_draw.clone(),
        weight_solves: result.weight_solves,
        checks: assessment.checks.clone(),
        passed: assessment.all_passed(),
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct OutputOptions {
    pub weights: bool,
    pub states: bool,
}

fn write_file(path: &Path, f: impl FnOnce(&mut io::BufWriter<fs::File>) -> io::Result<()>) -> io::Result<()> {
    let mut w = io::BufWriter::new(fs::File::create(path)?);
    f(&mut w)?;
    w.flush()
}

/// Writes every table plus `summary.json` into `dir`, creating it if needed.
pub fn write_run(dir: &Path, result: &ExperimentResult, assessment: &Assessment, options: OutputOptions) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, f: &dyn Fn(&mut io::BufWriter<fs::File>) -> io::Result<()>| -> io::Result<()> {
        let path = dir.join(name);
        write_file(&path, |w| f(w))?;
        written.push(path);
        Ok(())
    };
    emit("mse.csv", &|w| write_mse(result, w))?;
    emit("consistency.csv", &|w| write_consistency(assessment, w))?;
    emit("dominance.csv", &|w| write_dominance(result, w))?;
    if options.weights {
        emit("weights.csv", &|w| write_weights(result, w))?;
    }
    if options.states {
        emit("states.csv", &|w| write_states(result, w))?;
    }
    let s = summary(result, assessment);
    emit("summary.json", &|w| {
        serde_json::to_writer_pretty(&mut *w, &s).map_err(io::Error::other)?;
        writeln!(w)
    })?;
    Ok(written)
}
