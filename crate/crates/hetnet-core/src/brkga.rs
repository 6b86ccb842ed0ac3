//! Biased random-key genetic solver for the association problem.
//!
//! Every candidate is a chromosome of `2·|B|·|K|` keys in `(0, 1]`. The
//! first half are proxies for the binary associations — a key strictly
//! above 0.5 switches the link on — and the second half are the time
//! shares, taken verbatim. Decoding therefore never repairs: infeasible
//! candidates survive and are ranked by the penalized objective, one
//! penalty unit per violated constraint, which gives the search a gradient
//! toward feasibility.
//!
//! Evolution is the classic biased scheme: the elite block is copied
//! unchanged, a mutant block is resampled fresh, and the remainder are
//! offspring that inherit each gene from a uniformly chosen elite parent
//! with probability `rho_e`, else from a uniformly chosen non-elite parent.
//! `n_pop` populations evolve in isolation on seeds derived from the master
//! seed. Runs are bit-reproducible and independent of worker-thread count:
//! all randomness flows through one sequential stream per population, and
//! parallelism only touches the pure fitness evaluations.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Assignment, NetworkInstance};

/// A chromosome is its key vector; validity (length, range) is enforced at
/// decode and sampling time.
pub type Chromosome = Vec<f64>;

/// Solver configuration. `Default` is the reference configuration:
/// population ten times the variable count, 20% elites, 10% mutants,
/// elite-gene probability 0.4, three populations, ten thousand generations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaParams {
    /// Population size as a multiple of the variable count:
    /// `p = ⌈p_factor · n_var⌉`.
    pub p_factor: f64,
    /// Elite share of the population, in (0, 1).
    pub p_e: f64,
    /// Mutant share of the population, in (0, 1).
    pub p_m: f64,
    /// Probability that an offspring gene comes from the elite parent.
    /// Values above 0.5 bias toward elites, but any value in (0, 1] is
    /// accepted.
    pub rho_e: f64,
    /// Number of independent populations (no migration between them).
    pub n_pop: usize,
    /// Generations to evolve each population.
    pub n_gen: usize,
    /// Master seed; population `i` runs on `seed + i` (wrapping).
    pub seed: u64,
    /// Record a trace point every this many generations (0 disables the
    /// trace; the initial and final generations are always included when
    /// enabled).
    pub trace_every: usize,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            p_factor: 10.0,
            p_e: 0.2,
            p_m: 0.1,
            rho_e: 0.4,
            n_pop: 3,
            n_gen: 10_000,
            seed: 0,
            trace_every: 0,
        }
    }
}

impl GaParams {
    /// Concrete block sizes for an instance with `n_var` variables; the
    /// single validation gate for population arithmetic.
    pub fn sizes(&self, n_var: usize) -> Result<PopulationSizes> {
        if n_var == 0 {
            return Err(Error::InvalidArgument("the instance has no variables".into()));
        }
        if !(self.p_factor > 0.0 && self.p_factor.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "population factor must be positive, got {}",
                self.p_factor
            )));
        }
        for (name, x) in [("elite share", self.p_e), ("mutant share", self.p_m)] {
            if !(x > 0.0 && x < 1.0) {
                return Err(Error::InvalidArgument(format!("{name} must lie in (0, 1), got {x}")));
            }
        }
        if self.p_e + self.p_m >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "elite and mutant shares must leave room for offspring, got {} + {}",
                self.p_e, self.p_m
            )));
        }
        if !(self.rho_e > 0.0 && self.rho_e <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "elite-gene probability must lie in (0, 1], got {}",
                self.rho_e
            )));
        }
        if self.n_pop == 0 || self.n_gen == 0 {
            return Err(Error::InvalidArgument(
                "at least one population and one generation are required".into(),
            ));
        }
        let p = (self.p_factor * n_var as f64).ceil() as usize;
        let n_elite = (self.p_e * p as f64).ceil() as usize;
        let n_mutant = (self.p_m * p as f64).ceil() as usize;
        if n_elite == 0 || n_elite + 1 > p {
            return Err(Error::InvalidArgument(format!(
                "population of {p} cannot hold at least one elite and one non-elite"
            )));
        }
        if n_elite + n_mutant > p {
            return Err(Error::InvalidArgument(format!(
                "elite block {n_elite} plus mutant block {n_mutant} exceeds the population {p}"
            )));
        }
        Ok(PopulationSizes { n_var, p, n_elite, n_mutant })
    }
}

/// Derived population arithmetic; see [`GaParams::sizes`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PopulationSizes {
    pub n_var: usize,
    /// Population size `p`.
    pub p: usize,
    /// Elites copied unchanged each generation, `⌈p_e·p⌉`.
    pub n_elite: usize,
    /// Fresh random mutants per generation, `⌈p_m·p⌉`.
    pub n_mutant: usize,
}

impl PopulationSizes {
    /// Offspring generated per generation.
    pub fn n_offspring(&self) -> usize {
        self.p - self.n_elite - self.n_mutant
    }
}

/// Number of solver variables for an instance: one association proxy and
/// one time share per station-receiver pair.
pub fn n_var(instance: &NetworkInstance) -> usize {
    2 * instance.n_stations() * instance.n_receivers()
}

/// Maps keys to an assignment: the first `|B||K|` keys (row-major by
/// station) switch associations on where strictly above 0.5; the rest are
/// the time shares verbatim.
pub fn decode(keys: &[f64], instance: &NetworkInstance) -> Result<Assignment> {
    let nb = instance.n_stations();
    let nk = instance.n_receivers();
    let half = nb * nk;
    if keys.len() != 2 * half {
        return Err(Error::InvalidArgument(format!(
            "chromosome holds {} keys, the instance needs {}",
            keys.len(),
            2 * half
        )));
    }
    let a = keys[..half].iter().map(|&key| key > 0.5).collect();
    let alpha = keys[half..].to_vec();
    Assignment::new(nb, nk, a, alpha)
}

/// Penalized power of the decoded assignment; the quantity the solver
/// minimizes.
pub fn fitness(keys: &[f64], instance: &NetworkInstance) -> Result<f64> {
    Ok(instance.evaluate(&decode(keys, instance)?).p_penalized_w)
}

/// One scored population member.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub keys: Chromosome,
    /// Penalized power; the ranking criterion.
    pub fitness: f64,
    pub p_raw_w: f64,
    pub feasible: bool,
}

impl Individual {
    fn score(keys: Chromosome, instance: &NetworkInstance) -> Individual {
        let report = instance
            .evaluate(&decode(&keys, instance).expect("sampled keys always decode"));
        Individual {
            keys,
            fitness: report.p_penalized_w,
            p_raw_w: report.p_raw_w,
            feasible: report.feasible,
        }
    }
}

/// Ranking order: penalized fitness ascending, ties broken by
/// lexicographic key comparison so that sorting is deterministic.
pub fn rank_cmp(a: &Individual, b: &Individual) -> std::cmp::Ordering {
    a.fitness.total_cmp(&b.fitness).then_with(|| cmp_keys(&a.keys, &b.keys))
}

fn cmp_keys(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

/// A fresh key, uniform on `(0, 1]`: one minus a uniform draw from `[0, 1)`.
#[inline]
fn sample_key<R: Rng>(rng: &mut R) -> f64 {
    1.0 - rng.gen::<f64>()
}

fn sample_chromosome<R: Rng>(n_var: usize, rng: &mut R) -> Chromosome {
    (0..n_var).map(|_| sample_key(rng)).collect()
}

/// Produces the next generation's key vectors from a population sorted by
/// [`rank_cmp`]. Slots `[0, n_elite)` are bit-identical copies of the
/// elites, the middle block are offspring, and the last `n_mutant` slots
/// are fresh random chromosomes. The RNG is consumed in a fixed order —
/// offspring first (elite index, non-elite index, then one coin per gene),
/// mutants last — which the determinism contract relies on.
pub fn evolve_generation<R: Rng>(
    sorted: &[Individual],
    sizes: &PopulationSizes,
    rho_e: f64,
    rng: &mut R,
) -> Vec<Chromosome> {
    assert_eq!(sorted.len(), sizes.p, "population size mismatch");
    let mut next: Vec<Chromosome> = Vec::with_capacity(sizes.p);
    for elite in &sorted[..sizes.n_elite] {
        next.push(elite.keys.clone());
    }
    for _ in 0..sizes.n_offspring() {
        let elite = &sorted[rng.gen_range(0..sizes.n_elite)].keys;
        let other = &sorted[rng.gen_range(sizes.n_elite..sizes.p)].keys;
        let child = (0..sizes.n_var)
            .map(|g| if rng.gen::<f64>() < rho_e { elite[g] } else { other[g] })
            .collect();
        next.push(child);
    }
    for _ in 0..sizes.n_mutant {
        next.push(sample_chromosome(sizes.n_var, rng));
    }
    next
}

/// One sampled point of the convergence trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub generation: usize,
    /// Best penalized power across populations at this generation.
    pub best_penalized_w: f64,
    /// Raw power of the best feasible individual seen so far, if any.
    pub best_feasible_p_raw_w: Option<f64>,
}

/// Trace rows as CSV (`generation,best_penalized_W,best_feasible_P_W`);
/// the feasible column is empty before first feasibility.
pub fn write_trace_csv<W: std::io::Write>(trace: &[TracePoint], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["generation", "best_penalized_W", "best_feasible_P_W"])?;
    for point in trace {
        w.write_record([
            point.generation.to_string(),
            point.best_penalized_w.to_string(),
            point.best_feasible_p_raw_w.map(|p| p.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()
}

/// Everything a solver run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    /// Raw power of the reported feasible solution: the best (by raw power)
    /// feasible individual of the final generation across populations, or,
    /// when the final generation holds none, the best feasible incumbent
    /// seen earlier.
    pub best_feasible_p_raw_w: Option<f64>,
    /// True when the feasible solution had to be taken from an earlier
    /// generation rather than the final one.
    pub feasible_from_earlier_generation: bool,
    /// The assignment behind `best_feasible_p_raw_w`.
    pub best_feasible_assignment: Option<Assignment>,
    /// Best penalized power over the final generation of every population.
    pub best_penalized_w: f64,
    /// The assignment behind `best_penalized_w`.
    pub best_assignment: Assignment,
    /// Earliest generation (0 = initial population) at which any population
    /// held a feasible individual.
    pub first_feasible_generation: Option<usize>,
    pub generations_run: usize,
    pub trace: Option<Vec<TracePoint>>,
    /// Identity of the random stream, for reproducibility records.
    pub rng_note: String,
}

/// Per-population bookkeeping gathered during evolution.
struct PopulationOutcome {
    final_population: Vec<Individual>,
    first_feasible_generation: Option<usize>,
    /// All-time best feasible individual by (raw power, keys).
    incumbent: Option<Individual>,
    trace: Vec<TracePoint>,
}

/// Evolves `n_pop` independent populations and merges their outcomes.
///
/// Generation 0 is the freshly sampled population; each of the `n_gen`
/// evolution steps increments the index. The merge is deterministic:
/// populations are compared in index order and individuals by
/// [`rank_cmp`] (or raw power for the feasible report).
pub fn run(instance: &NetworkInstance, params: &GaParams) -> Result<SolverResult> {
    let sizes = params.sizes(n_var(instance))?;
    let outcomes: Vec<PopulationOutcome> = (0..params.n_pop)
        .into_par_iter()
        .map(|pop_idx| run_population(instance, &sizes, params, pop_idx))
        .collect();

    let first_feasible_generation =
        outcomes.iter().filter_map(|o| o.first_feasible_generation).min();
    let mut incumbent: Option<&Individual> = None;
    for o in &outcomes {
        if let Some(cand) = &o.incumbent {
            if incumbent.is_none_or(|best| raw_cmp(cand, best) == std::cmp::Ordering::Less) {
                incumbent = Some(cand);
            }
        }
    }

    let final_union = outcomes.iter().flat_map(|o| &o.final_population);
    let overall_best = final_union
        .clone()
        .min_by(|a, b| rank_cmp(a, b))
        .expect("populations are never empty");
    let final_best_feasible =
        final_union.filter(|ind| ind.feasible).min_by(|a, b| raw_cmp(a, b));
    let (reported_feasible, from_earlier) = match (final_best_feasible, incumbent) {
        (Some(ind), _) => (Some(ind), false),
        (None, Some(ind)) => (Some(ind), true),
        (None, None) => (None, false),
    };

    let trace = if params.trace_every > 0 {
        Some(merge_traces(&outcomes))
    } else {
        None
    };

    Ok(SolverResult {
        best_feasible_p_raw_w: reported_feasible.map(|ind| ind.p_raw_w),
        feasible_from_earlier_generation: from_earlier,
        best_feasible_assignment: reported_feasible
            .map(|ind| decode(&ind.keys, instance).expect("stored keys always decode")),
        best_penalized_w: overall_best.fitness,
        best_assignment: decode(&overall_best.keys, instance).expect("stored keys always decode"),
        first_feasible_generation,
        generations_run: params.n_gen,
        trace,
        rng_note: format!(
            "chacha8; population i seeded with master_seed + i = {} + i",
            params.seed
        ),
    })
}

/// Raw-power order with the same deterministic tie-break as [`rank_cmp`].
fn raw_cmp(a: &Individual, b: &Individual) -> std::cmp::Ordering {
    a.p_raw_w.total_cmp(&b.p_raw_w).then_with(|| cmp_keys(&a.keys, &b.keys))
}

fn run_population(
    instance: &NetworkInstance,
    sizes: &PopulationSizes,
    params: &GaParams,
    pop_idx: usize,
) -> PopulationOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(pop_idx as u64));
    let fresh: Vec<Chromosome> =
        (0..sizes.p).map(|_| sample_chromosome(sizes.n_var, &mut rng)).collect();
    let mut population: Vec<Individual> =
        fresh.into_par_iter().map(|keys| Individual::score(keys, instance)).collect();
    population.sort_unstable_by(rank_cmp);

    let mut outcome = PopulationOutcome {
        final_population: Vec::new(),
        first_feasible_generation: None,
        incumbent: None,
        trace: Vec::new(),
    };
    track_generation(&population, 0, params, &mut outcome);
    for gen in 1..=params.n_gen {
        let next_keys = evolve_generation(&population, sizes, params.rho_e, &mut rng);
        population = next_keys
            .into_par_iter()
            .enumerate()
            .map(|(slot, keys)| {
                if slot < sizes.n_elite {
                    // Elite copies carry their scores over; evaluation is
                    // pure, so this is only an optimization.
                    Individual { keys, ..population[slot].clone() }
                } else {
                    Individual::score(keys, instance)
                }
            })
            .collect();
        population.sort_unstable_by(rank_cmp);
        track_generation(&population, gen, params, &mut outcome);
    }
    outcome.final_population = population;
    outcome
}

fn track_generation(
    sorted: &[Individual],
    gen: usize,
    params: &GaParams,
    outcome: &mut PopulationOutcome,
) {
    let best_feasible_here = sorted.iter().filter(|ind| ind.feasible).min_by(|a, b| raw_cmp(a, b));
    if let Some(cand) = best_feasible_here {
        if outcome.first_feasible_generation.is_none() {
            outcome.first_feasible_generation = Some(gen);
        }
        if outcome
            .incumbent
            .as_ref()
            .is_none_or(|best| raw_cmp(cand, best) == std::cmp::Ordering::Less)
        {
            outcome.incumbent = Some(cand.clone());
        }
    }
    if params.trace_every > 0 && (gen % params.trace_every == 0 || gen == params.n_gen) {
        outcome.trace.push(TracePoint {
            generation: gen,
            best_penalized_w: sorted[0].fitness,
            best_feasible_p_raw_w: outcome.incumbent.as_ref().map(|ind| ind.p_raw_w),
        });
    }
}

/// Merges per-population traces generation-wise: the minimum penalized
/// power and the minimum feasible raw power across populations.
fn merge_traces(outcomes: &[PopulationOutcome]) -> Vec<TracePoint> {
    let mut merged: Vec<TracePoint> = Vec::new();
    for o in outcomes {
        for (i, point) in o.trace.iter().enumerate() {
            match merged.get_mut(i) {
                None => merged.push(*point),
                Some(agg) => {
                    debug_assert_eq!(agg.generation, point.generation);
                    agg.best_penalized_w = agg.best_penalized_w.min(point.best_penalized_w);
                    agg.best_feasible_p_raw_w = match (agg.best_feasible_p_raw_w, point.best_feasible_p_raw_w)
                    {
                        (Some(a), Some(b)) => Some(a.min(b)),
                        (a, b) => a.or(b),
                    };
                }
            }
        }
    }
    merged
}
