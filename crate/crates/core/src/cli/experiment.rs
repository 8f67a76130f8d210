//! Demand sweeps in each mode, written as tab-separated tables plus a JSON
//! summary. Wall-clock times go to `timing.log` only, so the tables and the
//! summary are byte-identical across runs with the same configuration.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ingest::thermal_for_demand;
use crate::centralized::{blend_percentages, saa_binary_search, SearchOptions};
use crate::decentralized::{gap_record, saa_heuristic_search};
use crate::error::{BlendError, Result};
use crate::model::ProblemInstance;
use crate::sampling::{sample_scenarios, sample_scenarios_tagged, StreamTag};
use crate::validation::{hard_objective, posterior_feasibility, replication_seed, saa_lower_bound, LowerBoundConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Centralized,
    Decentralized,
    Gap,
    Validate,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Centralized => "centralized",
            Mode::Decentralized => "decentralized",
            Mode::Gap => "gap",
            Mode::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    /// Demand levels in MDT/year; τ follows from each level. Empty means a
    /// single run at the instance's own τ.
    pub demands: Vec<f64>,
    pub samples: usize,
    pub check_samples: usize,
    pub replications: usize,
    pub delta: f64,
    pub seed: u64,
    pub patience: usize,
    /// Initial upper bounds of the penalty search; `None` uses the
    /// instance-derived default.
    pub lambda_upper: Option<f64>,
    pub mu_upper: Option<f64>,
    pub dump_scenarios: bool,
    pub output: PathBuf,
}

impl RunConfig {
    fn search(&self) -> SearchOptions {
        SearchOptions { lambda_upper: self.lambda_upper, mu_upper: self.mu_upper, ..SearchOptions::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(BlendError::Argument("N must be at least 1".into()));
        }
        if let Some(d) = self.demands.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(BlendError::Argument(format!("demand level {d} must be positive")));
        }
        if matches!(self.mode, Mode::Gap | Mode::Validate) && self.replications == 0 {
            return Err(BlendError::Argument("replication count must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(BlendError::Argument(format!("delta {} outside (0, 1)", self.delta)));
        }
        Ok(())
    }
}

/// One table row per demand level (or per level and replication in gap
/// mode), as written to the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub demand: Option<f64>,
    pub replication: Option<usize>,
    pub seed: Option<u64>,
    pub values: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub biomass: Vec<String>,
    pub rows: Vec<SweepRow>,
    pub table: PathBuf,
}

struct Timed<T> {
    value: T,
    label: String,
    seconds: f64,
}

fn levels(config: &RunConfig) -> Vec<Option<f64>> {
    if config.demands.is_empty() {
        vec![None]
    } else {
        config.demands.iter().map(|d| Some(*d)).collect()
    }
}

fn at_demand(instance: &ProblemInstance, demand: Option<f64>) -> Result<ProblemInstance> {
    match demand {
        None => Ok(instance.clone()),
        Some(d) => {
            let mut r = instance.refinery().clone();
            r.thermal_requirement = thermal_for_demand(d);
            instance.with_refinery(r)
        }
    }
}

fn stats(values: &[f64]) -> (f64, f64, f64, f64) {
    let n = values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (min, mean, max, var.sqrt())
}

fn label(demand: Option<f64>) -> String {
    demand.map(|d| format!("{d}")).unwrap_or_else(|| "tau".into())
}

fn dump(instance: &ProblemInstance, dir: &Path, name: &str, n: usize, seed: u64, tag: StreamTag) -> Result<()> {
    let scen = sample_scenarios_tagged(instance, n, seed, tag)?;
    fs::create_dir_all(dir)?;
    scen.write_csv(instance, File::create(dir.join(name))?)
}

fn centralized_row(instance: &ProblemInstance, config: &RunConfig, demand: Option<f64>) -> Result<SweepRow> {
    let inst = at_demand(instance, demand)?;
    let r = inst.refinery();
    let scen = sample_scenarios(&inst, config.samples, config.seed)?;
    if config.dump_scenarios {
        scen.write_csv(&inst, {
            let dir = config.output.join("scenarios");
            fs::create_dir_all(&dir)?;
            File::create(dir.join(format!("{}_opt.csv", label(demand))))?
        })?;
    }
    let out = saa_binary_search(&inst, &scen, r.inner_risk_ash, r.inner_risk_thermal, &config.search())
        .map_err(|e| context(e, demand))?;
    let res = &out.result;
    let q = res.quantities();
    let mass: f64 = q.iter().sum();
    let cost = res.deterministic_cost();
    let mut values = vec![
        ("cost_k".to_string(), cost / 1000.0),
        ("cost_per_dt".to_string(), if mass > 0.0 { cost / mass } else { 0.0 }),
    ];
    for (b, pct) in inst.biomass().iter().zip(blend_percentages(&inst, &q)) {
        values.push((b.id.clone(), pct));
    }
    values.extend([
        ("error_gap_pct".to_string(), 100.0 * res.error_gap),
        ("ash_violations".to_string(), res.violations.0 as f64),
        ("thermal_violations".to_string(), res.violations.1 as f64),
        ("lambda".to_string(), out.penalties.lambda),
        ("mu".to_string(), out.penalties.mu),
    ]);
    Ok(SweepRow { demand, replication: None, seed: None, values })
}

fn decentralized_row(instance: &ProblemInstance, config: &RunConfig, demand: Option<f64>) -> Result<SweepRow> {
    let inst = at_demand(instance, demand)?;
    let r = inst.refinery();
    let scen = sample_scenarios(&inst, config.samples, config.seed)?;
    let out = saa_heuristic_search(
        &inst,
        &scen,
        r.inner_risk_ash,
        r.inner_risk_thermal,
        config.patience,
        &config.search(),
    )
    .map_err(|e| context(e, demand))?;
    let res = &out.result;
    let q = res.quantities();
    let mass: f64 = q.iter().sum();
    let cost = res.deterministic_cost();
    let mut values = vec![
        ("cost_k".to_string(), cost / 1000.0),
        ("cost_per_dt".to_string(), if mass > 0.0 { cost / mass } else { 0.0 }),
    ];
    for (b, pct) in inst.biomass().iter().zip(blend_percentages(&inst, &q)) {
        values.push((b.id.clone(), pct));
    }
    for (b, price) in inst.biomass().iter().zip(res.prices.as_slice()) {
        values.push((format!("price_{}", b.id), *price));
    }
    values.extend([
        ("supplier_profit_k".to_string(), res.supplier_profits.iter().sum::<f64>() / 1000.0),
        ("ash_violations".to_string(), res.violations.0 as f64),
        ("thermal_violations".to_string(), res.violations.1 as f64),
        ("lambda".to_string(), out.penalties.lambda),
        ("mu".to_string(), out.penalties.mu),
    ]);
    Ok(SweepRow { demand, replication: None, seed: None, values })
}

fn gap_row(instance: &ProblemInstance, config: &RunConfig, demand: Option<f64>, rep: usize) -> Result<SweepRow> {
    let inst = at_demand(instance, demand)?;
    let r = inst.refinery();
    let seed = replication_seed(config.seed, rep);
    let scen = sample_scenarios(&inst, config.samples, seed)?;
    let opts = config.search();
    let central = saa_binary_search(&inst, &scen, r.inner_risk_ash, r.inner_risk_thermal, &opts)
        .map_err(|e| context(e, demand))?;
    let dec = saa_heuristic_search(&inst, &scen, r.inner_risk_ash, r.inner_risk_thermal, config.patience, &opts)
        .map_err(|e| context(e, demand))?;
    let g = gap_record(&inst, &central.result, &dec.result);
    let values = vec![
        ("centralized_ub".to_string(), g.centralized_upper),
        ("centralized_lb".to_string(), g.centralized_lower),
        ("decentralized".to_string(), g.decentralized),
        ("delta_max".to_string(), g.delta_max),
        ("gap_pct".to_string(), g.percent_gap),
        ("corrected_gap_pct".to_string(), g.corrected_percent_gap),
        ("ordered".to_string(), if g.ordered { 1.0 } else { 0.0 }),
    ];
    Ok(SweepRow { demand, replication: Some(rep), seed: Some(seed), values })
}

fn validate_row(instance: &ProblemInstance, config: &RunConfig, demand: Option<f64>) -> Result<SweepRow> {
    let inst = at_demand(instance, demand)?;
    let r = inst.refinery().clone();
    let reps = (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            let seed = replication_seed(config.seed, rep);
            let scen = sample_scenarios(&inst, config.samples, seed)?;
            let out = saa_binary_search(&inst, &scen, r.inner_risk_ash, r.inner_risk_thermal, &config.search())?;
            let cert = posterior_feasibility(&inst, &out.result.quantities(), config.check_samples, config.delta, seed)?;
            if config.dump_scenarios {
                let dir = config.output.join("scenarios");
                let stem = format!("{}_{rep}", label(demand));
                scen.write_csv(&inst, {
                    fs::create_dir_all(&dir)?;
                    File::create(dir.join(format!("{stem}_opt.csv")))?
                })?;
                dump(&inst, &dir, &format!("{stem}_check.csv"), config.check_samples, seed, StreamTag::Validation)?;
            }
            Ok((cert, out.result.deterministic_cost()))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| context(e, demand))?;
    let ash: Vec<f64> = reps.iter().map(|c| c.0.rate_ash).collect();
    let thermal: Vec<f64> = reps.iter().map(|c| c.0.rate_thermal).collect();
    let costs: Vec<f64> = reps.iter().map(|c| c.1).collect();
    let feasible = reps.iter().filter(|c| c.0.feasible).count();
    let lb = saa_lower_bound(
        &inst,
        &LowerBoundConfig {
            samples: config.samples,
            replications: config.replications,
            inner_risk_ash: 0.0,
            risk_ash: r.risk_ash,
            inner_risk_thermal: 0.0,
            risk_thermal: r.risk_thermal,
            delta: config.delta,
            seed: config.seed,
        },
        |s| hard_objective(&inst, s),
    )
    .map_err(|e| context(e, demand))?;
    let (a0, a1, a2, a3) = stats(&ash);
    let (t0, t1, t2, t3) = stats(&thermal);
    let (c0, c1, c2, _) = stats(&costs);
    let values = vec![
        ("n".to_string(), config.samples as f64),
        ("ash_risk_min".to_string(), a0),
        ("ash_risk_avg".to_string(), a1),
        ("ash_risk_max".to_string(), a2),
        ("ash_risk_sd".to_string(), a3),
        ("thermal_risk_min".to_string(), t0),
        ("thermal_risk_avg".to_string(), t1),
        ("thermal_risk_max".to_string(), t2),
        ("thermal_risk_sd".to_string(), t3),
        ("feasible".to_string(), feasible as f64),
        ("cost_min_k".to_string(), c0 / 1000.0),
        ("cost_avg_k".to_string(), c1 / 1000.0),
        ("cost_max_k".to_string(), c2 / 1000.0),
        ("lb_index".to_string(), lb.index.map(|t| t as f64).unwrap_or(f64::NAN)),
        ("lower_bound_k".to_string(), lb.bound.map(|b| b / 1000.0).unwrap_or(f64::NAN)),
    ];
    Ok(SweepRow { demand, replication: None, seed: None, values })
}

fn context(e: BlendError, demand: Option<f64>) -> BlendError {
    let at = demand.map(|d| format!("demand {d} MDT")).unwrap_or_else(|| "instance tau".into());
    match e {
        BlendError::Solver(m) => BlendError::Solver(format!("{at}: {m}")),
        BlendError::SearchFailure(m) => BlendError::SearchFailure(format!("{at}: {m}")),
        BlendError::Verification(m) => BlendError::Verification(format!("{at}: {m}")),
        BlendError::Resource(m) => BlendError::Resource(format!("{at}: {m}")),
        other => other,
    }
}

fn cell(v: f64) -> String {
    if v.is_nan() {
        "NA".into()
    } else if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v:.4}")
    }
}

fn render_table(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let Some(first) = rows.first() else { return out };
    out.push_str("demand");
    if first.replication.is_some() {
        out.push_str("\treplication\tseed");
    }
    for (k, _) in &first.values {
        let _ = write!(out, "\t{k}");
    }
    out.push('\n');
    for row in rows {
        out.push_str(&row.demand.map(|d| format!("{d}")).unwrap_or_else(|| "NA".into()));
        if let Some(r) = row.replication {
            let _ = write!(out, "\t{r}\t{}", row.seed.unwrap_or_default());
        }
        for (_, v) in &row.values {
            let _ = write!(out, "\t{}", cell(*v));
        }
        out.push('\n');
    }
    out
}

/// Runs the sweep and writes `<mode>.tsv`, `summary.json` and `timing.log`
/// into the output directory.
pub fn run_experiment(instance: &ProblemInstance, config: &RunConfig) -> Result<RunSummary> {
    config.validate()?;
    fs::create_dir_all(&config.output)?;
    let jobs: Vec<(Option<f64>, Option<usize>)> = match config.mode {
        Mode::Gap => levels(config)
            .into_iter()
            .flat_map(|d| (0..config.replications).map(move |r| (d, Some(r))))
            .collect(),
        _ => levels(config).into_iter().map(|d| (d, None)).collect(),
    };
    let results = jobs
        .par_iter()
        .map(|&(demand, rep)| {
            let start = Instant::now();
            let value = match config.mode {
                Mode::Centralized => centralized_row(instance, config, demand),
                Mode::Decentralized => decentralized_row(instance, config, demand),
                Mode::Gap => gap_row(instance, config, demand, rep.unwrap_or(0)),
                Mode::Validate => validate_row(instance, config, demand),
            }?;
            let label = match rep {
                Some(r) => format!("{}\t{r}", label(demand)),
                None => label(demand),
            };
            Ok(Timed { value, label, seconds: start.elapsed().as_secs_f64() })
        })
        .collect::<Result<Vec<_>>>()?;

    let rows: Vec<SweepRow> = results.iter().map(|t| t.value.clone()).collect();
    let table = config.output.join(format!("{}.tsv", config.mode.name()));
    fs::write(&table, render_table(&rows))?;
    let summary = RunSummary {
        config: config.clone(),
        biomass: instance.biomass().iter().map(|b| b.id.clone()).collect(),
        rows,
        table,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| BlendError::Io(std::io::Error::other(e)))?;
    fs::write(config.output.join("summary.json"), json + "\n")?;
    let mut log = File::create(config.output.join("timing.log"))?;
    for t in &results {
        writeln!(log, "{}\t{:.6}", t.label, t.seconds)?;
    }
    Ok(summary)
}
