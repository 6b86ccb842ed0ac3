//! Command-line workbench for downlink association studies.
//!
//! One binary ties the pieces together: `place` emits network geometry,
//! `solve` runs the genetic solver on a configured instance, `experiment`
//! sweeps a scenario × demand grid with repeats and interval statistics,
//! `check` re-scores an assignment file against an instance file, and
//! `oracle` computes the exhaustive optimum of desk-size instances.
//!
//! Configuration comes from an optional JSON file in which every omitted
//! field falls back to the built-in reference parameter set, so a bare
//! invocation reproduces the reference setup; a handful of flags override
//! the common fields on top. Exit codes: 0 on success (for `check`:
//! feasible), 1 when `check` ran but the assignment is infeasible, 2 on
//! usage, parse, or schema errors.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use hetnet_core::brkga::{self, GaParams};
use hetnet_core::experiment::{
    cell_stats, run_cell, CellsCsvWriter, ExperimentPlan, RunsCsvWriter, BPS_PER_MBPS,
    DEFAULT_DEMAND_GRID_MBPS, DEFAULT_RUNS_PER_CELL,
};
use hetnet_core::geometry::{build_layout, PlacementSpec};
use hetnet_core::oracle::{self, OracleStatus};
use hetnet_core::problem::{Assignment, NetworkInstance, Scenario, DEFAULT_ETA};
use hetnet_core::radio::{BaseStationParams, DecodingParams};

/// Instance and solver configuration with the reference parameter set as
/// the default for every omitted field; round-trips through JSON
/// losslessly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Config {
    placement: PlacementSpec,
    macro_params: BaseStationParams,
    pico_params: BaseStationParams,
    decoding: DecodingParams,
    eta: f64,
    ga: GaParams,
    scenario: Scenario,
    demand_mbps: f64,
    seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            placement: PlacementSpec::default(),
            macro_params: BaseStationParams::macro_cell(),
            pico_params: BaseStationParams::pico_cell(),
            decoding: DecodingParams::default(),
            eta: DEFAULT_ETA,
            ga: GaParams::default(),
            scenario: Scenario::FullNetwork,
            demand_mbps: 12.0,
            seed: 0,
        }
    }
}

/// Grid-study document for `experiment`; same defaulting discipline as
/// [`Config`], plus the grid axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct PlanDoc {
    placement: PlacementSpec,
    macro_params: BaseStationParams,
    pico_params: BaseStationParams,
    decoding: DecodingParams,
    eta: f64,
    ga: GaParams,
    scenarios: Vec<Scenario>,
    demands_mbps: Vec<f64>,
    runs_per_cell: usize,
    master_seed: u64,
    record_timing: bool,
}

impl Default for PlanDoc {
    fn default() -> Self {
        PlanDoc {
            placement: PlacementSpec::default(),
            macro_params: BaseStationParams::macro_cell(),
            pico_params: BaseStationParams::pico_cell(),
            decoding: DecodingParams::default(),
            eta: DEFAULT_ETA,
            ga: GaParams::default(),
            scenarios: Scenario::ALL.to_vec(),
            demands_mbps: DEFAULT_DEMAND_GRID_MBPS.to_vec(),
            runs_per_cell: DEFAULT_RUNS_PER_CELL,
            master_seed: 0,
            record_timing: false,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "hetnet",
    version,
    about = "Downlink association workbench: placement, solving, grids, checking, exhaustive optima"
)]
struct Cli {
    /// Cap the worker-thread count (default: one per core). Results do not
    /// depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate station/receiver geometry (layout.json + layout.csv).
    Place(PlaceArgs),
    /// One solver run; writes instance, result, assignment, and trace files.
    Solve(SolveArgs),
    /// Scenario × demand grid with repeated seeded runs (runs.csv + cells.csv).
    Experiment(ExperimentArgs),
    /// Re-score an assignment file against an instance file.
    Check(CheckArgs),
    /// Exhaustive optimum of a desk-size configured instance.
    Oracle(OracleArgs),
}

/// Configuration source plus the common field overrides.
#[derive(Args)]
struct ConfigArgs {
    /// JSON configuration file; omitted fields take the reference defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Picocell count (a multiple of 3).
    #[arg(long)]
    n_pico: Option<usize>,
    /// Receiver count (a multiple of 3).
    #[arg(long)]
    n_receivers: Option<usize>,
    /// Placement disc radius in km.
    #[arg(long)]
    region_radius_km: Option<f64>,
    /// Station-activity scenario: 0m12p, 1m12p, 2m12p, 3m12p, or 3m0p.
    #[arg(long)]
    scenario: Option<Scenario>,
    /// Uniform receiver demand in Mbps.
    #[arg(long)]
    demand_mbps: Option<f64>,
    /// Solver master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Solver generation count.
    #[arg(long)]
    generations: Option<usize>,
}

impl ConfigArgs {
    fn load(&self) -> anyhow::Result<Config> {
        let mut config: Config = match &self.config {
            None => Config::default(),
            Some(path) => read_json(path)?,
        };
        if let Some(n) = self.n_pico {
            config.placement.n_pico = n;
        }
        if let Some(n) = self.n_receivers {
            config.placement.n_receivers = n;
        }
        if let Some(r) = self.region_radius_km {
            config.placement.region_radius_km = r;
        }
        if let Some(s) = self.scenario {
            config.scenario = s;
        }
        if let Some(d) = self.demand_mbps {
            config.demand_mbps = d;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(g) = self.generations {
            config.ga.n_gen = g;
        }
        Ok(config)
    }
}

#[derive(Args)]
struct PlaceArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Directory the geometry files go to.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Directory the run artifacts go to.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Trace-sampling stride in generations (default 100 when the
    /// configuration leaves it unset).
    #[arg(long)]
    trace_every: Option<usize>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Grid-study JSON document; omitted for the built-in reference grid.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Directory the CSV tables go to.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Record measured wall times (off by default so identical plans yield
    /// byte-identical tables).
    #[arg(long)]
    timing: bool,
    /// Override the plan's master seed.
    #[arg(long)]
    master_seed: Option<u64>,
    /// Override the plan's repeats per cell.
    #[arg(long)]
    runs_per_cell: Option<usize>,
    /// Override the plan's solver generation count.
    #[arg(long)]
    generations: Option<usize>,
}

#[derive(Args)]
struct CheckArgs {
    /// Instance JSON, as written by `solve` or `oracle`.
    #[arg(long)]
    instance: PathBuf,
    /// Assignment JSON to score against it.
    #[arg(long)]
    assignment: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Directory the oracle artifacts go to.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("setting up the worker pool")?;
    }
    match cli.command {
        Command::Place(args) => place(args),
        Command::Solve(args) => solve(args),
        Command::Experiment(args) => experiment(args),
        Command::Check(args) => check(args),
        Command::Oracle(args) => oracle_run(args),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serialization is infallible");
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// The configured network with its uniform demand, before any scenario
/// masking.
fn build_instance(config: &Config) -> anyhow::Result<NetworkInstance> {
    let layout = build_layout(&config.placement)?;
    let mut params = vec![config.macro_params; hetnet_core::geometry::N_MACRO];
    params.extend(std::iter::repeat(config.pico_params).take(config.placement.n_pico));
    let demands = vec![config.demand_mbps * BPS_PER_MBPS; config.placement.n_receivers];
    Ok(NetworkInstance::build(layout, params, demands, config.decoding, config.eta)?)
}

fn place(args: PlaceArgs) -> anyhow::Result<u8> {
    let config = args.config.load()?;
    let layout = build_layout(&config.placement)?;
    fs::create_dir_all(&args.out_dir)?;

    let json_path = args.out_dir.join("layout.json");
    write_json(&layout, &json_path)?;
    let csv_path = args.out_dir.join("layout.csv");
    let file = File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    layout.write_csv(file)?;

    println!(
        "layout: 3 macrocells + {} picocells, {} receivers in a {} km disc -> {}",
        layout.pico_positions.len(),
        layout.receiver_positions.len(),
        layout.region_radius_km,
        args.out_dir.display()
    );
    Ok(0)
}

fn solve(args: SolveArgs) -> anyhow::Result<u8> {
    let config = args.config.load()?;
    let instance = build_instance(&config)?.apply_scenario(config.scenario)?;
    let mut ga = GaParams { seed: config.seed, ..config.ga };
    if let Some(stride) = args.trace_every {
        ga.trace_every = stride;
    } else if ga.trace_every == 0 {
        ga.trace_every = 100;
    }

    let result = brkga::run(&instance, &ga)?;
    fs::create_dir_all(&args.out_dir)?;
    write_json(&instance, &args.out_dir.join("instance.json"))?;
    write_json(&result, &args.out_dir.join("result.json"))?;
    // The assignment file carries the feasible solution when there is one,
    // otherwise the best penalized individual (useful for diagnosing why).
    let assignment =
        result.best_feasible_assignment.as_ref().unwrap_or(&result.best_assignment);
    write_json(assignment, &args.out_dir.join("assignment.json"))?;
    let trace_path = args.out_dir.join("trace.csv");
    let file =
        File::create(&trace_path).with_context(|| format!("creating {}", trace_path.display()))?;
    brkga::write_trace_csv(result.trace.as_deref().unwrap_or(&[]), file)?;

    match result.best_feasible_p_raw_w {
        Some(p) => println!(
            "feasible: P = {p:.6} W (first feasible at generation {}) -> {}",
            result.first_feasible_generation.expect("feasible runs record a first generation"),
            args.out_dir.display()
        ),
        None => println!(
            "no feasible solution in {} generations; best penalized objective {:.6} W -> {}",
            result.generations_run,
            result.best_penalized_w,
            args.out_dir.display()
        ),
    }
    Ok(0)
}

fn experiment(args: ExperimentArgs) -> anyhow::Result<u8> {
    let mut doc: PlanDoc = match &args.plan {
        None => PlanDoc::default(),
        Some(path) => read_json(path)?,
    };
    if args.timing {
        doc.record_timing = true;
    }
    if let Some(seed) = args.master_seed {
        doc.master_seed = seed;
    }
    if let Some(runs) = args.runs_per_cell {
        doc.runs_per_cell = runs;
    }
    if let Some(generations) = args.generations {
        doc.ga.n_gen = generations;
    }

    let config = Config {
        placement: doc.placement.clone(),
        macro_params: doc.macro_params,
        pico_params: doc.pico_params,
        decoding: doc.decoding,
        eta: doc.eta,
        ga: doc.ga,
        // Per-cell scenario and demand replace these.
        scenario: Scenario::FullNetwork,
        demand_mbps: 1.0,
        seed: 0,
    };
    let plan = ExperimentPlan {
        instance: build_instance(&config)?,
        scenarios: doc.scenarios,
        demands_mbps: doc.demands_mbps,
        runs_per_cell: doc.runs_per_cell,
        master_seed: doc.master_seed,
        ga: doc.ga,
        record_timing: doc.record_timing,
    };
    plan.validate()?;

    fs::create_dir_all(&args.out_dir)?;
    let runs_path = args.out_dir.join("runs.csv");
    let mut runs_csv = RunsCsvWriter::new(
        File::create(&runs_path).with_context(|| format!("creating {}", runs_path.display()))?,
    )?;
    let cells_path = args.out_dir.join("cells.csv");
    let mut cells_csv = CellsCsvWriter::new(
        File::create(&cells_path).with_context(|| format!("creating {}", cells_path.display()))?,
    )?;

    // Cell by cell in canonical order, flushing after each so that partial
    // tables survive an interrupted sweep.
    for si in 0..plan.scenarios.len() {
        for di in 0..plan.demands_mbps.len() {
            let records = run_cell(&plan, si, di)?;
            let stats = cell_stats(&records);
            for record in &records {
                runs_csv.append(record)?;
            }
            cells_csv.append(&stats)?;
            runs_csv.flush()?;
            cells_csv.flush()?;
            eprintln!(
                "cell {} @ {} Mbps: {}/{} feasible{}",
                stats.scenario.label(),
                stats.d_k_mbps,
                stats.n_feasible_runs,
                plan.runs_per_cell,
                stats
                    .mean_p_w
                    .map(|p| format!(", mean P = {p:.3} W"))
                    .unwrap_or_default()
            );
        }
    }
    println!(
        "grid complete: {} cells x {} runs -> {}",
        plan.scenarios.len() * plan.demands_mbps.len(),
        plan.runs_per_cell,
        args.out_dir.display()
    );
    Ok(0)
}

fn check(args: CheckArgs) -> anyhow::Result<u8> {
    let instance: NetworkInstance = read_json(&args.instance)?;
    let assignment: Assignment = read_json(&args.assignment)?;
    if assignment.n_stations() != instance.n_stations()
        || assignment.n_receivers() != instance.n_receivers()
    {
        anyhow::bail!(
            "assignment shape {}x{} does not match instance shape {}x{}",
            assignment.n_stations(),
            assignment.n_receivers(),
            instance.n_stations(),
            instance.n_receivers()
        );
    }
    let report = instance.evaluate(&assignment);
    println!("{}", serde_json::to_string_pretty(&report).expect("serialization is infallible"));
    Ok(if report.feasible { 0 } else { 1 })
}

fn oracle_run(args: OracleArgs) -> anyhow::Result<u8> {
    let config = args.config.load()?;
    let instance = build_instance(&config)?.apply_scenario(config.scenario)?;
    let result = oracle::solve(&instance)?;

    fs::create_dir_all(&args.out_dir)?;
    write_json(&instance, &args.out_dir.join("oracle_instance.json"))?;
    write_json(&result, &args.out_dir.join("oracle.json"))?;
    if let Some(assignment) = &result.optimal_assignment {
        write_json(assignment, &args.out_dir.join("oracle_assignment.json"))?;
    }

    match result.status {
        OracleStatus::Optimal => println!(
            "optimal: P = {:.6} W over {} patterns -> {}",
            result.optimal_p_raw_w.expect("optimal results carry a value"),
            result.enumerated_patterns,
            args.out_dir.display()
        ),
        OracleStatus::Infeasible => println!(
            "infeasible: no pattern satisfies the demands ({} enumerated) -> {}",
            result.enumerated_patterns,
            args.out_dir.display()
        ),
    }
    Ok(0)
}
