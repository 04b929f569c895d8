//! Joins the `mse.csv` and `dominance.csv` tables of several run directories.
//!
//! Columns: `k`, one MSE column per (run, filter), gap columns, and one
//! `dominance_min` column per run that has a dominance table. Every later run
//! is paired with the first: a filter present in both yields
//! `gap:<filter>:<run>-<first>`; two single-filter runs yield one gap between
//! their only series.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

struct Run {
    label: String,
    horizon: usize,
    /// filter → MSE per step, in file order of first appearance.
    series: Vec<(String, Vec<f64>)>,
    dominance: Option<Vec<f64>>,
}

fn read_horizon(dir: &Path) -> Result<usize> {
    let path = dir.join("summary.json");
    let text = std::fs::read_to_string(&path).with_context(|| format!("missing or unreadable {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    value
        .get("horizon")
        .and_then(serde_json::Value::as_u64)
        .map(|h| h as usize)
        .with_context(|| format!("{} has no horizon", path.display()))
}

fn read_mse(dir: &Path, horizon: usize) -> Result<Vec<(String, Vec<f64>)>> {
    let path = dir.join("mse.csv");
    let mut reader = csv::Reader::from_path(&path).with_context(|| format!("missing or unreadable {}", path.display()))?;
    let mut order: Vec<String> = Vec::new();
    let mut values: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.with_context(|| format!("{} row {}", path.display(), line + 2))?;
        let k: usize = row.get(0).unwrap_or("").parse().with_context(|| format!("{} row {}: bad k", path.display(), line + 2))?;
        let filter = row.get(1).unwrap_or("").to_string();
        let mse: f64 = row.get(2).unwrap_or("").parse().with_context(|| format!("{} row {}: bad mse", path.display(), line + 2))?;
        if k > horizon {
            bail!("{} has k = {k} beyond the run horizon {horizon}", path.display());
        }
        let slot = values.entry(filter.clone()).or_insert_with(|| {
            order.push(filter.clone());
            vec![None; horizon + 1]
        });
        slot[k] = Some(mse);
    }
    order
        .into_iter()
        .map(|f| {
            let col = values.remove(&f).expect("registered filter");
            let full = col.into_iter().collect::<Option<Vec<f64>>>().with_context(|| format!("{} is missing steps for {f}", path.display()))?;
            Ok((f, full))
        })
        .collect()
}

fn read_dominance(dir: &Path, horizon: usize) -> Result<Option<Vec<f64>>> {
    let path = dir.join("dominance.csv");
    let mut reader = csv::Reader::from_path(&path).with_context(|| format!("missing or unreadable {}", path.display()))?;
    let mut mins = vec![f64::INFINITY; horizon + 1];
    let mut any = false;
    for row in reader.records() {
        let row = row.with_context(|| format!("reading {}", path.display()))?;
        let k: usize = row.get(0).unwrap_or("").parse().with_context(|| format!("{}: bad k", path.display()))?;
        let v: f64 = row.get(2).unwrap_or("").parse().with_context(|| format!("{}: bad min_eig", path.display()))?;
        if k > horizon {
            bail!("{} has k = {k} beyond the run horizon {horizon}", path.display());
        }
        mins[k] = mins[k].min(v);
        any = true;
    }
    Ok(any.then_some(mins))
}

fn load(dir: &Path, label: String) -> Result<Run> {
    if !dir.is_dir() {
        bail!("run directory {} does not exist", dir.display());
    }
    let horizon = read_horizon(dir)?;
    Ok(Run {
        label,
        horizon,
        series: read_mse(dir, horizon)?,
        dominance: read_dominance(dir, horizon)?,
    })
}

fn labels(dirs: &[PathBuf]) -> Vec<String> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    dirs.iter()
        .map(|d| {
            let base = d.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| d.display().to_string());
            let n = seen.entry(base.clone()).or_insert(0);
            *n += 1;
            if *n == 1 {
                base
            } else {
                format!("{base}#{n}")
            }
        })
        .collect()
}

/// Mean of `v[start..]`.
fn tail_mean(v: &[f64], start: usize) -> f64 {
    let tail = &v[start..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

pub fn compare(dirs: &[PathBuf], out: Option<&Path>) -> Result<()> {
    let runs = dirs.iter().zip(labels(dirs)).map(|(d, l)| load(d, l)).collect::<Result<Vec<_>>>()?;
    let horizon = runs[0].horizon;
    if let Some(r) = runs.iter().find(|r| r.horizon != horizon) {
        bail!("horizon mismatch: {} has {horizon}, {} has {}", runs[0].label, r.label, r.horizon);
    }
    let series: Vec<(String, &Vec<f64>)> = runs.iter().flat_map(|r| r.series.iter().map(move |(f, v)| (format!("{}:{f}", r.label), v))).collect();
    if series.is_empty() {
        bail!("no MSE series found");
    }
    let first = &runs[0];
    let mut gaps: Vec<(String, Vec<f64>)> = Vec::new();
    for run in &runs[1..] {
        let single = first.series.len() == 1 && run.series.len() == 1 && first.series[0].0 != run.series[0].0;
        for (f, v) in &run.series {
            let base = match first.series.iter().find(|(g, _)| g == f) {
                Some((_, b)) => b,
                None if single => &first.series[0].1,
                None => continue,
            };
            let name = if single { format!("gap:{}:{}-{}:{}", run.label, f, first.label, first.series[0].0) } else { format!("gap:{f}:{}-{}", run.label, first.label) };
            gaps.push((name, v.iter().zip(base).map(|(a, b)| a - b).collect()));
        }
    }
    let dominance: Vec<(String, &Vec<f64>)> = runs.iter().filter_map(|r| r.dominance.as_ref().map(|d| (format!("{}:dominance_min", r.label), d))).collect();

    let mut header = vec!["k".to_string()];
    header.extend(series.iter().map(|s| s.0.clone()));
    header.extend(gaps.iter().map(|g| g.0.clone()));
    header.extend(dominance.iter().map(|d| d.0.clone()));
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(&header)?;
    for k in 0..=horizon {
        let mut row = vec![k.to_string()];
        row.extend(series.iter().map(|s| s.1[k].to_string()));
        row.extend(gaps.iter().map(|g| g.1[k].to_string()));
        row.extend(dominance.iter().map(|d| d.1[k].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;

    let start = horizon - horizon / 4;
    for (name, g) in &gaps {
        eprintln!("{name}: steady-state mean {:.6e} over k >= {start}", tail_mean(g, start));
    }
    Ok(())
}
