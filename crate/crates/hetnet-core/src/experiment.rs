//! Scenario-grid studies: repeated seeded solver runs with interval summaries.
//!
//! A plan crosses a base instance with a list of scenarios and a list of
//! uniform demands, runs the genetic solver a fixed number of times per
//! cell on deterministically derived seeds, and condenses each cell into a
//! mean and a 95% Student-t confidence interval over its feasible runs.
//! Cells that never reach feasibility stay in the table with their run
//! count at zero and no statistics — absence of a number is itself the
//! result there.
//!
//! The whole grid is reproducible: run seeds are a pure hash of the master
//! seed and the cell/run indices, records are collected in canonical order
//! (scenario, then demand, then run), and timing capture is off by default
//! so that two executions of one plan produce byte-identical tables.

use std::io;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::brkga::{self, GaParams};
use crate::error::{Error, Result};
use crate::problem::{NetworkInstance, Scenario};

/// Demands are specified in Mbps at the planning level and converted at
/// the instance boundary.
pub const BPS_PER_MBPS: f64 = 1e6;

/// Reference demand grid in Mbps.
pub const DEFAULT_DEMAND_GRID_MBPS: [f64; 5] = [3.0, 6.0, 9.0, 12.0, 15.0];

/// Reference repeat count per (scenario, demand) cell.
pub const DEFAULT_RUNS_PER_CELL: usize = 6;

/// A full grid study: every scenario crossed with every demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    /// Unmasked base instance; each cell applies its scenario and demand
    /// to a copy.
    pub instance: NetworkInstance,
    pub scenarios: Vec<Scenario>,
    pub demands_mbps: Vec<f64>,
    #[serde(default = "default_runs_per_cell")]
    pub runs_per_cell: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub ga: GaParams,
    /// When true, `wall_time_s` carries measured run durations; when false
    /// (the default) the column is written as 0 so that identical plans
    /// yield byte-identical outputs.
    #[serde(default)]
    pub record_timing: bool,
}

fn default_runs_per_cell() -> usize {
    DEFAULT_RUNS_PER_CELL
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::InvalidArgument("plan needs at least one scenario".into()));
        }
        if self.demands_mbps.is_empty() {
            return Err(Error::InvalidArgument("plan needs at least one demand".into()));
        }
        for &d in &self.demands_mbps {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "demands must be finite and strictly positive, got {d} Mbps"
                )));
            }
        }
        if self.runs_per_cell < 2 {
            return Err(Error::InvalidArgument(
                "at least two runs per cell are needed for interval statistics".into(),
            ));
        }
        Ok(())
    }
}

/// One solver run within a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: Scenario,
    pub d_k_mbps: f64,
    /// Run index within the cell, 0-based.
    pub run: usize,
    /// The derived seed the solver actually ran on.
    pub seed: u64,
    /// Whether any feasible individual was found at any generation.
    pub feasible: bool,
    /// Raw (never penalized) power of the best feasible solution.
    pub best_p_w: Option<f64>,
    pub first_feasible_gen: Option<usize>,
    /// Measured duration, or 0 when the plan leaves timing off.
    pub wall_time_s: f64,
}

/// Summary of one (scenario, demand) cell over its feasible runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub scenario: Scenario,
    pub d_k_mbps: f64,
    pub n_feasible_runs: usize,
    /// Present iff at least one run was feasible.
    pub mean_p_w: Option<f64>,
    /// Present iff at least two runs were feasible.
    pub ci95_halfwidth_p_w: Option<f64>,
    pub mean_first_feasible_gen: Option<f64>,
    pub ci95_halfwidth_gen: Option<f64>,
}

/// Everything a grid produces: per-run records and per-cell summaries,
/// both in canonical (scenario, demand) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTable {
    pub runs: Vec<RunRecord>,
    pub cells: Vec<CellStats>,
}

/// SplitMix64 finalizer: a bijective scramble with full avalanche.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one run, as a hash chain over the master seed and the cell
/// coordinates. Scrambling (rather than adding offsets) keeps the solver's
/// internal `seed + population` streams of different runs from colliding.
pub fn derive_run_seed(master_seed: u64, scenario_idx: usize, demand_idx: usize, run_idx: usize) -> u64 {
    let mut h = splitmix64(master_seed);
    h = splitmix64(h ^ scenario_idx as u64);
    h = splitmix64(h ^ demand_idx as u64);
    h = splitmix64(h ^ run_idx as u64);
    h
}

/// Sample mean, plus the halfwidth `t · s/√n` of the two-sided Student-t
/// interval at the given confidence when two or more values are present.
/// Empty input has no mean and yields `None`.
pub fn aggregate(values: &[f64], confidence: f64) -> Option<(f64, Option<f64>)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return Some((mean, None));
    }
    let sample_var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let t = StudentsT::new(0.0, 1.0, n - 1.0)
        .expect("n ≥ 2 gives positive degrees of freedom")
        .inverse_cdf(0.5 + confidence / 2.0);
    Some((mean, Some(t * sample_var.sqrt() / n.sqrt())))
}

/// Runs one (scenario, demand) cell: `runs_per_cell` solver runs in
/// parallel, records in run-index order.
pub fn run_cell(plan: &ExperimentPlan, scenario_idx: usize, demand_idx: usize) -> Result<Vec<RunRecord>> {
    let scenario = *plan.scenarios.get(scenario_idx).ok_or_else(|| {
        Error::InvalidArgument(format!("scenario index {scenario_idx} out of range"))
    })?;
    let d_k_mbps = *plan.demands_mbps.get(demand_idx).ok_or_else(|| {
        Error::InvalidArgument(format!("demand index {demand_idx} out of range"))
    })?;
    let mut instance = plan.instance.apply_scenario(scenario)?;
    instance.set_uniform_demand(d_k_mbps * BPS_PER_MBPS)?;
    (0..plan.runs_per_cell)
        .into_par_iter()
        .map(|run| -> Result<RunRecord> {
            let seed = derive_run_seed(plan.master_seed, scenario_idx, demand_idx, run);
            let started = Instant::now();
            let result = brkga::run(&instance, &GaParams { seed, ..plan.ga })?;
            Ok(RunRecord {
                scenario,
                d_k_mbps,
                run,
                seed,
                feasible: result.best_feasible_p_raw_w.is_some(),
                best_p_w: result.best_feasible_p_raw_w,
                first_feasible_gen: result.first_feasible_generation,
                wall_time_s: if plan.record_timing { started.elapsed().as_secs_f64() } else { 0.0 },
            })
        })
        .collect()
}

/// Summarizes one cell's records (which must be non-empty and from a
/// single cell).
pub fn cell_stats(records: &[RunRecord]) -> CellStats {
    assert!(!records.is_empty(), "a cell always holds at least one record");
    let powers: Vec<f64> = records.iter().filter_map(|r| r.best_p_w).collect();
    let gens: Vec<f64> = records
        .iter()
        .filter(|r| r.feasible)
        .filter_map(|r| r.first_feasible_gen)
        .map(|g| g as f64)
        .collect();
    let (mean_p_w, ci95_halfwidth_p_w) = split(aggregate(&powers, 0.95));
    let (mean_first_feasible_gen, ci95_halfwidth_gen) = split(aggregate(&gens, 0.95));
    CellStats {
        scenario: records[0].scenario,
        d_k_mbps: records[0].d_k_mbps,
        n_feasible_runs: powers.len(),
        mean_p_w,
        ci95_halfwidth_p_w,
        mean_first_feasible_gen,
        ci95_halfwidth_gen,
    }
}

/// Runs the full grid, cell by cell in canonical (scenario, demand) order;
/// the runs inside a cell execute in parallel. Two invocations of one plan
/// are bit-identical (timing aside, and timing is off unless asked for).
pub fn run_plan(plan: &ExperimentPlan) -> Result<ExperimentTable> {
    plan.validate()?;
    let mut runs = Vec::with_capacity(
        plan.scenarios.len() * plan.demands_mbps.len() * plan.runs_per_cell,
    );
    let mut cells = Vec::with_capacity(plan.scenarios.len() * plan.demands_mbps.len());
    for si in 0..plan.scenarios.len() {
        for di in 0..plan.demands_mbps.len() {
            let records = run_cell(plan, si, di)?;
            cells.push(cell_stats(&records));
            runs.extend(records);
        }
    }
    Ok(ExperimentTable { runs, cells })
}

fn split(agg: Option<(f64, Option<f64>)>) -> (Option<f64>, Option<f64>) {
    match agg {
        None => (None, None),
        Some((mean, half)) => (Some(mean), half),
    }
}

/// Incremental writer for the per-run CSV
/// (`scenario,d_k_mbps,run,seed,feasible,best_P_W,first_feasible_gen,wall_time_s`);
/// option columns are empty when absent. `flush` after each completed cell
/// keeps partial results on disk during long grids.
pub struct RunsCsvWriter<W: io::Write> {
    inner: csv::Writer<W>,
}

impl<W: io::Write> RunsCsvWriter<W> {
    pub fn new(out: W) -> io::Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record([
            "scenario",
            "d_k_mbps",
            "run",
            "seed",
            "feasible",
            "best_P_W",
            "first_feasible_gen",
            "wall_time_s",
        ])?;
        Ok(RunsCsvWriter { inner })
    }

    pub fn append(&mut self, r: &RunRecord) -> io::Result<()> {
        self.inner.write_record([
            r.scenario.label().to_string(),
            r.d_k_mbps.to_string(),
            r.run.to_string(),
            r.seed.to_string(),
            r.feasible.to_string(),
            r.best_p_w.map(|p| p.to_string()).unwrap_or_default(),
            r.first_feasible_gen.map(|g| g.to_string()).unwrap_or_default(),
            r.wall_time_s.to_string(),
        ])?;
        Ok(())
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// Incremental writer for the per-cell CSV
/// (`scenario,d_k_mbps,n_feasible_runs,mean_P_W,ci95_halfwidth_P_W,mean_first_feasible_gen,ci95_halfwidth_gen`).
pub struct CellsCsvWriter<W: io::Write> {
    inner: csv::Writer<W>,
}

impl<W: io::Write> CellsCsvWriter<W> {
    pub fn new(out: W) -> io::Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record([
            "scenario",
            "d_k_mbps",
            "n_feasible_runs",
            "mean_P_W",
            "ci95_halfwidth_P_W",
            "mean_first_feasible_gen",
            "ci95_halfwidth_gen",
        ])?;
        Ok(CellsCsvWriter { inner })
    }

    pub fn append(&mut self, c: &CellStats) -> io::Result<()> {
        self.inner.write_record([
            c.scenario.label().to_string(),
            c.d_k_mbps.to_string(),
            c.n_feasible_runs.to_string(),
            c.mean_p_w.map(|v| v.to_string()).unwrap_or_default(),
            c.ci95_halfwidth_p_w.map(|v| v.to_string()).unwrap_or_default(),
            c.mean_first_feasible_gen.map(|v| v.to_string()).unwrap_or_default(),
            c.ci95_halfwidth_gen.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
        Ok(())
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// Whole per-run table in one call.
pub fn write_runs_csv<W: io::Write>(runs: &[RunRecord], out: W) -> io::Result<()> {
    let mut w = RunsCsvWriter::new(out)?;
    for r in runs {
        w.append(r)?;
    }
    w.flush()
}

/// Whole per-cell table in one call.
pub fn write_cells_csv<W: io::Write>(cells: &[CellStats], out: W) -> io::Result<()> {
    let mut w = CellsCsvWriter::new(out)?;
    for c in cells {
        w.append(c)?;
    }
    w.flush()
}
