//! Steady-state MEP evolution.
//!
//! One mating event selects two parents by binary tournament, recombines
//! them (or clones them when crossover is skipped), mutates both offspring
//! and lets the better one replace the current worst individual if it is
//! strictly better. A generation is `population_size / 2` mating events.
//!
//! All randomness comes from a ChaCha8 generator seeded with
//! `EvolutionParams::seed`, so a run is reproducible bit for bit on every
//! platform.

pub mod operators;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{extract_circuit, shortest_perfect_circuit};
use crate::error::{Error, Result};
use crate::eval::{fitness_regression, Evaluator, FitnessReport, RegressionCase};
use crate::genome::{random_chromosome, Chromosome};
use crate::knapsack::{KnapsackInstance, TruthTable};
use crate::primitives::PrimitiveSet;

pub use operators::{
    apply_mutation, mutate, tournament_select, uniform_crossover, uniform_crossover_with_mask, MutationEvent,
    MutationMode, Parent,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionParams {
    pub population_size: usize,
    pub chromosome_length: usize,
    pub generations: usize,
    pub crossover_probability: f64,
    pub mutations_per_chromosome: usize,
    pub mutation_mode: MutationMode,
    pub p_function: f64,
    pub stop_on_success: bool,
    pub seed: u64,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        EvolutionParams {
            population_size: 20,
            chromosome_length: 10,
            generations: 51,
            crossover_probability: 0.9,
            mutations_per_chromosome: 5,
            mutation_mode: MutationMode::Exact,
            p_function: 0.5,
            stop_on_success: true,
            seed: 0,
        }
    }
}

impl EvolutionParams {
    pub fn check(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::Params("population size must be at least 2".into()));
        }
        if self.generations < 1 {
            return Err(Error::Params("at least one generation is required".into()));
        }
        if self.chromosome_length < 1 {
            return Err(Error::Params("chromosome length must be at least 1".into()));
        }
        for (name, p) in [("crossover probability", self.crossover_probability), ("p_function", self.p_function)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Params(format!("{name} {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn mating_events_per_generation(&self) -> usize {
        self.population_size / 2
    }
}

/// The four benchmark instances: (n, k, population, genes, generations).
pub const BENCHMARK_INSTANCES: [(usize, u64, usize, usize, usize); 4] =
    [(4, 5, 20, 10, 51), (5, 7, 100, 30, 101), (6, 10, 500, 50, 101), (7, 14, 1000, 100, 201)];

/// Instance and parameters of benchmark row `row` (1..=4), with the shared
/// settings: crossover 0.9, 5 mutations per chromosome.
pub fn benchmark_instance(row: usize) -> Result<(KnapsackInstance, EvolutionParams)> {
    let &(n, k, pop, genes, generations) = row
        .checked_sub(1)
        .and_then(|i| BENCHMARK_INSTANCES.get(i))
        .ok_or_else(|| Error::Params(format!("benchmark instance {row} not in 1..=4")))?;
    let params =
        EvolutionParams { population_size: pop, chromosome_length: genes, generations, ..EvolutionParams::default() };
    Ok((KnapsackInstance::new(n, k)?, params))
}

/// What the population is scored against.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Boolean(TruthTable),
    Regression(Vec<RegressionCase>),
}

impl Target {
    fn check(&self, pset: &PrimitiveSet) -> Result<()> {
        match self {
            Target::Boolean(t) => {
                if !pset.is_boolean() {
                    return Err(Error::Params("truth-table target needs a gate function set".into()));
                }
                if pset.terminal_count() != t.inputs() {
                    return Err(Error::Params(format!(
                        "{} terminals but the table has {} inputs",
                        pset.terminal_count(),
                        t.inputs()
                    )));
                }
            }
            Target::Regression(cases) => {
                if cases.is_empty() {
                    return Err(Error::NoCases);
                }
                if pset.functions().iter().any(|f| f.as_gate().is_some()) {
                    return Err(Error::Params("regression target needs an arithmetic function set".into()));
                }
                if cases.iter().any(|c| c.inputs.len() != pset.terminal_count()) {
                    return Err(Error::Params("regression case width differs from terminal count".into()));
                }
            }
        }
        Ok(())
    }
}

/// Scores chromosomes against a target, reusing scratch storage.
#[derive(Debug, Clone)]
pub struct Scorer<'t> {
    target: &'t Target,
    evaluator: Option<Evaluator>,
}

impl<'t> Scorer<'t> {
    pub fn new(target: &'t Target) -> Result<Self> {
        let evaluator = match target {
            Target::Boolean(t) => Some(Evaluator::new(t.inputs())?),
            Target::Regression(_) => None,
        };
        Ok(Scorer { target, evaluator })
    }

    pub fn score(&mut self, c: &Chromosome) -> Result<FitnessReport> {
        match (self.target, self.evaluator.as_mut()) {
            (Target::Boolean(t), Some(e)) => e.fitness(c, &t.outputs),
            (Target::Regression(cases), _) => fitness_regression(c, cases),
            (Target::Boolean(_), None) => unreachable!("boolean scorer always has an evaluator"),
        }
    }

    /// Gate applications performed so far (boolean targets only).
    pub fn gate_applications(&self) -> u64 {
        self.evaluator.as_ref().map_or(0, Evaluator::applications)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    chromosome: Chromosome,
    report: FitnessReport,
}

impl Individual {
    pub fn new(chromosome: Chromosome, report: FitnessReport) -> Self {
        Individual { chromosome, report }
    }

    pub fn chromosome(&self) -> &Chromosome {
        &self.chromosome
    }

    pub fn report(&self) -> &FitnessReport {
        &self.report
    }

    pub fn fitness(&self) -> f64 {
        self.report.best_fitness
    }
}

/// Outcome of one mating event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    /// Population slot overwritten by the better offspring, if any.
    pub replaced: Option<usize>,
}

/// Population plus generator state for one run.
pub struct SteadyState<'a> {
    params: &'a EvolutionParams,
    pset: &'a PrimitiveSet,
    scorer: Scorer<'a>,
    rng: ChaCha8Rng,
    population: Vec<Individual>,
    best: Individual,
    evaluations: u64,
    generation: usize,
    first_hit: Option<usize>,
}

impl<'a> SteadyState<'a> {
    /// Random initial population drawn from a generator seeded with
    /// `params.seed`.
    pub fn new(params: &'a EvolutionParams, pset: &'a PrimitiveSet, target: &'a Target) -> Result<Self> {
        params.check()?;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let initial = (0..params.population_size)
            .map(|_| random_chromosome(params.chromosome_length, pset, &mut rng, params.p_function))
            .collect();
        Self::with_population(params, pset, target, initial, rng)
    }

    /// Starts from a given population; its size must match the parameters.
    pub fn with_population(
        params: &'a EvolutionParams,
        pset: &'a PrimitiveSet,
        target: &'a Target,
        initial: Vec<Chromosome>,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        params.check()?;
        target.check(pset)?;
        if initial.len() != params.population_size {
            return Err(Error::Params(format!(
                "initial population has {} individuals, expected {}",
                initial.len(),
                params.population_size
            )));
        }
        let mut scorer = Scorer::new(target)?;
        let mut population = Vec::with_capacity(initial.len());
        for c in initial {
            if c.len() != params.chromosome_length {
                return Err(Error::ChromosomeLength { left: c.len(), right: params.chromosome_length });
            }
            crate::genome::validate(&c, pset)
                .map_err(|v| Error::InvalidChromosome(format!("{} violations", v.len())))?;
            let report = scorer.score(&c)?;
            population.push(Individual::new(c, report));
        }
        let evaluations = population.len() as u64;
        let best = population[best_index(&population)].clone();
        let first_hit = best.report.is_perfect().then_some(0);
        Ok(SteadyState { params, pset, scorer, rng, population, best, evaluations, generation: 0, first_hit })
    }

    pub fn population(&self) -> &[Individual] {
        &self.population
    }

    /// Best individual seen so far.
    pub fn best(&self) -> &Individual {
        &self.best
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// Completed generations.
    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn first_hit_generation(&self) -> Option<usize> {
        self.first_hit
    }

    pub fn gate_applications(&self) -> u64 {
        self.scorer.gate_applications()
    }

    /// One mating event.
    pub fn step(&mut self) -> Result<StepOutcome> {
        let p = self.params;
        let i1 = tournament_select(&self.population, &mut self.rng);
        let i2 = tournament_select(&self.population, &mut self.rng);
        let (c1, c2) = (&self.population[i1].chromosome, &self.population[i2].chromosome);
        let (o1, o2) = if self.rng.gen_bool(p.crossover_probability) {
            uniform_crossover(c1, c2, &mut self.rng)?
        } else {
            (c1.clone(), c2.clone())
        };
        let o1 = mutate(&o1, p.mutations_per_chromosome, p.mutation_mode, self.pset, &mut self.rng, p.p_function);
        let o2 = mutate(&o2, p.mutations_per_chromosome, p.mutation_mode, self.pset, &mut self.rng, p.p_function);
        let r1 = self.scorer.score(&o1)?;
        let r2 = self.scorer.score(&o2)?;
        self.evaluations += 2;
        let child = if r2.best_fitness < r1.best_fitness { Individual::new(o2, r2) } else { Individual::new(o1, r1) };

        let worst = worst_index(&self.population);
        if child.fitness() < self.population[worst].fitness() {
            if child.fitness() < self.best.fitness() {
                self.best = child.clone();
                if self.best.report.is_perfect() && self.first_hit.is_none() {
                    self.first_hit = Some(self.generation + 1);
                }
            }
            self.population[worst] = child;
            Ok(StepOutcome { replaced: Some(worst) })
        } else {
            Ok(StepOutcome { replaced: None })
        }
    }

    fn done(&self) -> bool {
        self.params.stop_on_success && self.first_hit.is_some()
    }

    /// Runs one generation of mating events, stopping early on success when
    /// `stop_on_success` is set.
    pub fn run_generation(&mut self) -> Result<()> {
        for _ in 0..self.params.mating_events_per_generation() {
            if self.done() {
                break;
            }
            self.step()?;
        }
        self.generation += 1;
        Ok(())
    }

    pub fn run(mut self) -> Result<RunResult> {
        while self.generation < self.params.generations && !self.done() {
            self.run_generation()?;
        }
        Ok(RunResult {
            success: self.best.report.is_perfect(),
            best_fitness: self.best.fitness(),
            best_gene: self.best.report.best_gene,
            first_hit_generation: self.first_hit,
            evaluations: self.evaluations,
            generations_run: self.generation,
            seed: self.params.seed,
            best_individual: self.best,
        })
    }
}

fn best_index(pop: &[Individual]) -> usize {
    let mut best = 0;
    for (i, ind) in pop.iter().enumerate() {
        if ind.fitness() < pop[best].fitness() {
            best = i;
        }
    }
    best
}

/// Highest fitness, ties to the lowest index.
fn worst_index(pop: &[Individual]) -> usize {
    let mut worst = 0;
    for (i, ind) in pop.iter().enumerate() {
        if ind.fitness() > pop[worst].fitness() {
            worst = i;
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub success: bool,
    pub best_fitness: f64,
    pub best_individual: Individual,
    pub best_gene: usize,
    pub first_hit_generation: Option<usize>,
    pub evaluations: u64,
    pub generations_run: usize,
    pub seed: u64,
}

pub fn steady_state_run(params: &EvolutionParams, pset: &PrimitiveSet, target: &Target) -> Result<RunResult> {
    SteadyState::new(params, pset, target)?.run()
}

/// One row of batch output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub success: bool,
    pub best_fitness: f64,
    pub first_hit_generation: Option<usize>,
    pub best_gene: usize,
    /// Gates of the smallest perfect gene's circuit.
    pub gate_count: Option<usize>,
    /// Gates of the circuit at the reported best gene.
    pub best_gene_gate_count: Option<usize>,
    /// Netlist text of the smallest perfect circuit.
    pub netlist: Option<String>,
    pub evaluations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchStats {
    pub runs: usize,
    pub successes: usize,
    pub min_gates: Option<usize>,
    pub median_gates: Option<f64>,
    pub max_gates: Option<usize>,
    pub mean_first_hit_generation: Option<f64>,
    pub records: Vec<RunRecord>,
}

impl BatchStats {
    pub fn from_records(mut records: Vec<RunRecord>) -> Self {
        records.sort_by_key(|r| r.run);
        let mut gates: Vec<usize> = records.iter().filter(|r| r.success).filter_map(|r| r.gate_count).collect();
        gates.sort_unstable();
        let median_gates = match gates.len() {
            0 => None,
            n if n % 2 == 1 => Some(gates[n / 2] as f64),
            n => Some((gates[n / 2 - 1] + gates[n / 2]) as f64 / 2.0),
        };
        let hits: Vec<usize> = records.iter().filter_map(|r| r.first_hit_generation).collect();
        let mean_first_hit_generation =
            (!hits.is_empty()).then(|| hits.iter().sum::<usize>() as f64 / hits.len() as f64);
        BatchStats {
            runs: records.len(),
            successes: records.iter().filter(|r| r.success).count(),
            min_gates: gates.first().copied(),
            median_gates,
            max_gates: gates.last().copied(),
            mean_first_hit_generation,
            records,
        }
    }
}

fn record_for(run: usize, result: &RunResult, target: &Target) -> Result<RunRecord> {
    let mut rec = RunRecord {
        run,
        seed: result.seed,
        success: result.success,
        best_fitness: result.best_fitness,
        first_hit_generation: result.first_hit_generation,
        best_gene: result.best_gene,
        gate_count: None,
        best_gene_gate_count: None,
        netlist: None,
        evaluations: result.evaluations,
    };
    if let Target::Boolean(table) = target {
        let c = result.best_individual.chromosome();
        rec.best_gene_gate_count = Some(extract_circuit(c, result.best_gene, table.inputs())?.gate_count());
        if let Some(pc) = shortest_perfect_circuit(c, table)? {
            rec.gate_count = Some(pc.netlist.gate_count());
            rec.netlist = Some(pc.netlist.to_text());
        }
    }
    Ok(rec)
}

/// Runs `runs` independent runs with seeds `base_seed, base_seed + 1, ...`.
/// `workers = 0` uses all available cores. Records are ordered by run id
/// regardless of completion order.
pub fn run_batch(
    params: &EvolutionParams,
    pset: &PrimitiveSet,
    target: &Target,
    runs: usize,
    base_seed: u64,
    workers: usize,
) -> Result<BatchStats> {
    if runs == 0 {
        return Err(Error::Params("at least one run is required".into()));
    }
    params.check()?;
    target.check(pset)?;
    let one = |run: usize| -> Result<RunRecord> {
        let p = EvolutionParams { seed: base_seed.wrapping_add(run as u64), ..params.clone() };
        let result = steady_state_run(&p, pset, target)?;
        record_for(run, &result, target)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Params(format!("worker pool: {e}")))?;
    let records = pool.install(|| (0..runs).into_par_iter().map(one).collect::<Result<Vec<_>>>())?;
    Ok(BatchStats::from_records(records))
}
