//! Experiment harness behind the `mep` binary.
//!
//! Subcommands: `gen-table`, `evolve`, `verify`, `export`. Settings are
//! layered: built-in defaults, then an optional TOML config file, then a
//! `--benchmark` preset, then individual flags.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::circuit::{export_dot, mismatches, Netlist};
use crate::engine::{benchmark_instance, run_batch, BatchStats, EvolutionParams, MutationMode, Target};
use crate::knapsack::{generate_truth_table, KnapsackInstance, TruthTable};
use crate::primitives::PrimitiveSet;

/// Exit status of `evolve` when no run succeeded.
pub const EXIT_NO_SUCCESS: i32 = 2;
/// Exit status of `verify` when the circuit disagrees with the table.
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "mep",
    version,
    about = "Evolve gate-level circuits for truth tables with Multi Expression Programming"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the subset-sum truth table for base set 1..=n and a target sum.
    GenTable {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        sum: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seeded batch of evolutionary runs and write per-run CSV.
    Evolve(Box<EvolveArgs>),
    /// Check a netlist against a truth table.
    Verify {
        #[arg(long)]
        netlist: PathBuf,
        #[arg(long)]
        table: PathBuf,
    },
    /// Print a netlist as DOT or as its text listing.
    Export {
        #[arg(long)]
        netlist: PathBuf,
        #[arg(long, value_enum, default_value_t = ExportFormat::Dot)]
        format: ExportFormat,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Dot,
    Text,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EvolveArgs {
    /// TOML file with an `ExperimentConfig`; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Load a benchmark row (instance and population, genes, generations).
    #[arg(long = "benchmark", value_name = "ROW", value_parser = clap::value_parser!(u8).range(1..=4))]
    pub benchmark_instance: Option<u8>,
    /// Number of inputs; the base set is 1..=n.
    #[arg(long)]
    pub n: Option<usize>,
    /// Target sum.
    #[arg(long)]
    pub sum: Option<u64>,
    /// Truth-table file to evolve against instead of a knapsack instance.
    #[arg(long, conflicts_with_all = ["n", "sum"])]
    pub table: Option<PathBuf>,
    /// Population size.
    #[arg(long)]
    pub pop: Option<usize>,
    /// Genes per chromosome.
    #[arg(long)]
    pub genes: Option<usize>,
    /// Generations per run; one generation is pop/2 mating events.
    #[arg(long)]
    pub generations: Option<usize>,
    /// Independent runs in the batch.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Seed of run 0; run r uses seed + r.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Probability of recombining instead of cloning the parents.
    #[arg(long)]
    pub crossover_prob: Option<f64>,
    /// Mutation events per offspring.
    #[arg(long)]
    pub mutations: Option<usize>,
    #[arg(long, value_enum)]
    pub mutation_mode: Option<MutationModeArg>,
    /// Probability that a random gene is a gate rather than an input.
    #[arg(long)]
    pub p_function: Option<f64>,
    /// Stop a run at its first perfect circuit (default).
    #[arg(long, overrides_with = "run_full")]
    pub stop_on_success: bool,
    /// Keep evolving after a perfect circuit is found.
    #[arg(long, overrides_with = "stop_on_success")]
    pub run_full: bool,
    /// Worker threads; 0 means one per core.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Per-run CSV destination; the summary goes next to it as
    /// `<stem>.summary.json`. Without it the CSV is printed.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Omit the timestamp comment line from the CSV.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MutationModeArg {
    Exact,
    Expected,
}

/// Everything that determines a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub instance: Option<KnapsackInstance>,
    pub table: Option<PathBuf>,
    pub params: EvolutionParams,
    pub runs: usize,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub timestamp: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            instance: None,
            table: None,
            params: EvolutionParams::default(),
            runs: 100,
            workers: 0,
            out: None,
            timestamp: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_args(args: &EvolveArgs) -> anyhow::Result<Self> {
        let mut cfg = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(row) = args.benchmark_instance {
            let (inst, p) = benchmark_instance(row as usize)?;
            cfg.instance = Some(inst);
            cfg.table = None;
            cfg.params.population_size = p.population_size;
            cfg.params.chromosome_length = p.chromosome_length;
            cfg.params.generations = p.generations;
        }
        match (args.n, args.sum) {
            (Some(n), Some(k)) => {
                cfg.instance = Some(KnapsackInstance { n, k });
                cfg.table = None;
            }
            (None, None) => {}
            _ => bail!("--n and --sum must be given together"),
        }
        if let Some(t) = &args.table {
            cfg.table = Some(t.clone());
            cfg.instance = None;
        }
        let p = &mut cfg.params;
        macro_rules! set {
            ($field:expr, $flag:expr) => {
                if let Some(v) = $flag {
                    $field = v;
                }
            };
        }
        set!(p.population_size, args.pop);
        set!(p.chromosome_length, args.genes);
        set!(p.generations, args.generations);
        set!(p.seed, args.seed);
        set!(p.crossover_probability, args.crossover_prob);
        set!(p.mutations_per_chromosome, args.mutations);
        set!(p.p_function, args.p_function);
        if let Some(m) = args.mutation_mode {
            p.mutation_mode = match m {
                MutationModeArg::Exact => MutationMode::Exact,
                MutationModeArg::Expected => MutationMode::Expected,
            };
        }
        if args.run_full {
            p.stop_on_success = false;
        } else if args.stop_on_success {
            p.stop_on_success = true;
        }
        set!(cfg.runs, args.runs);
        set!(cfg.workers, args.workers);
        if args.out.is_some() {
            cfg.out = args.out.clone();
        }
        if args.no_timestamp {
            cfg.timestamp = false;
        }
        Ok(cfg)
    }

    /// The table this config evolves against.
    pub fn target_table(&self) -> anyhow::Result<TruthTable> {
        match (&self.instance, &self.table) {
            (_, Some(path)) => load_table(path),
            (Some(inst), None) => Ok(generate_truth_table(inst)?),
            (None, None) => bail!("no problem given: use --n/--sum, --table or --benchmark"),
        }
    }
}

pub fn load_table(path: &Path) -> anyhow::Result<TruthTable> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    TruthTable::parse(&text).with_context(|| format!("{}", path.display()))
}

pub fn load_netlist(path: &Path) -> anyhow::Result<Netlist> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Netlist::parse(&text).with_context(|| format!("{}", path.display()))
}

pub fn cmd_gen_table(inst: &KnapsackInstance, out: Option<&Path>) -> anyhow::Result<TruthTable> {
    inst.check()?;
    let table = generate_truth_table(inst)?;
    match out {
        Some(path) => fs::write(path, table.to_text()).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{}", table.to_text()),
    }
    Ok(table)
}

pub struct EvolveOutcome {
    pub stats: BatchStats,
    pub csv: String,
    pub summary: String,
}

/// Runs the batch and renders its CSV and JSON summary. Files are written
/// when `config.out` is set.
pub fn cmd_evolve(config: &ExperimentConfig) -> anyhow::Result<EvolveOutcome> {
    let table = config.target_table()?;
    if table.outputs.is_constant() {
        log::warn!("target table is constant");
    }
    let pset = PrimitiveSet::gates(table.inputs())?;
    let target = Target::Boolean(table);
    let stats = run_batch(&config.params, &pset, &target, config.runs, config.params.seed, config.workers)?;
    let header = config.timestamp.then(|| {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        format!("# mep evolve, generated at unix time {secs}")
    });
    let csv = render_csv(&stats, header.as_deref())?;
    let summary = render_summary(config, &stats)?;
    if let Some(out) = &config.out {
        fs::write(out, &csv).with_context(|| format!("writing {}", out.display()))?;
        let sp = summary_path(out);
        fs::write(&sp, &summary).with_context(|| format!("writing {}", sp.display()))?;
    }
    Ok(EvolveOutcome { stats, csv, summary })
}

pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

/// One row per run, ordered by run id. Netlists are flattened to one line
/// with `; ` separators.
pub fn render_csv(stats: &BatchStats, header: Option<&str>) -> anyhow::Result<String> {
    let mut buf = Vec::new();
    if let Some(h) = header {
        writeln!(buf, "{h}")?;
    }
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record([
            "run",
            "seed",
            "success",
            "best_fitness",
            "first_hit_generation",
            "best_gene",
            "gate_count",
            "best_gene_gate_count",
            "evaluations",
            "netlist",
        ])?;
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &stats.records {
            let netlist = r.netlist.as_deref().map(|t| t.lines().collect::<Vec<_>>().join("; ")).unwrap_or_default();
            w.write_record([
                r.run.to_string(),
                r.seed.to_string(),
                r.success.to_string(),
                r.best_fitness.to_string(),
                opt(r.first_hit_generation),
                r.best_gene.to_string(),
                opt(r.gate_count),
                opt(r.best_gene_gate_count),
                r.evaluations.to_string(),
                netlist,
            ])?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(buf)?)
}

#[derive(Serialize)]
struct Summary<'a> {
    instance: Option<&'a KnapsackInstance>,
    table: Option<&'a Path>,
    params: &'a EvolutionParams,
    runs: usize,
    successes: usize,
    min_gates: Option<usize>,
    median_gates: Option<f64>,
    max_gates: Option<usize>,
    mean_first_hit_generation: Option<f64>,
}

pub fn render_summary(config: &ExperimentConfig, stats: &BatchStats) -> anyhow::Result<String> {
    let s = Summary {
        instance: config.instance.as_ref(),
        table: config.table.as_deref(),
        params: &config.params,
        runs: stats.runs,
        successes: stats.successes,
        min_gates: stats.min_gates,
        median_gates: stats.median_gates,
        max_gates: stats.max_gates,
        mean_first_hit_generation: stats.mean_first_hit_generation,
    };
    Ok(serde_json::to_string_pretty(&s)? + "\n")
}

pub fn console_summary(stats: &BatchStats) -> String {
    let gates = match (stats.min_gates, stats.median_gates, stats.max_gates) {
        (Some(lo), Some(med), Some(hi)) => format!("gates min {lo} / median {med} / max {hi}"),
        _ => "no perfect circuit".to_string(),
    };
    format!("successful runs: {} out of {}; {gates}", stats.successes, stats.runs)
}

pub struct VerifyReport {
    pub mismatches: Vec<usize>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn render(&self) -> String {
        if self.passed() {
            "PASS\n".to_string()
        } else {
            let cases: Vec<String> = self.mismatches.iter().map(ToString::to_string).collect();
            format!("FAIL: {} mismatching cases: {}\n", cases.len(), cases.join(" "))
        }
    }
}

pub fn cmd_verify(netlist: &Netlist, table: &TruthTable) -> anyhow::Result<VerifyReport> {
    if netlist.inputs() != table.inputs() {
        bail!("netlist has {} inputs but the table has {}", netlist.inputs(), table.inputs());
    }
    Ok(VerifyReport { mismatches: mismatches(netlist, table)? })
}

pub fn cmd_export(netlist: &Netlist, format: ExportFormat) -> String {
    match format {
        ExportFormat::Dot => export_dot(netlist),
        ExportFormat::Text => netlist.to_text(),
    }
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::GenTable { n, sum, out } => {
            cmd_gen_table(&KnapsackInstance::new(n, sum)?, out.as_deref())?;
            Ok(0)
        }
        Command::Evolve(args) => {
            let cfg = ExperimentConfig::from_args(&args)?;
            let outcome = cmd_evolve(&cfg)?;
            let line = console_summary(&outcome.stats);
            if cfg.out.is_some() {
                println!("{line}");
            } else {
                print!("{}", outcome.csv);
                eprintln!("{line}");
            }
            Ok(if outcome.stats.successes > 0 { 0 } else { EXIT_NO_SUCCESS })
        }
        Command::Verify { netlist, table } => {
            let report = cmd_verify(&load_netlist(&netlist)?, &load_table(&table)?)?;
            print!("{}", report.render());
            Ok(if report.passed() { 0 } else { EXIT_VERIFY_FAILED })
        }
        Command::Export { netlist, format } => {
            print!("{}", cmd_export(&load_netlist(&netlist)?, format));
            Ok(0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> EvolveArgs {
        let mut full = vec!["mep", "evolve"];
        full.extend_from_slice(args);
        match Cli::try_parse_from(full).unwrap().command {
            Command::Evolve(a) => *a,
            _ => unreachable!(),
        }
    }

    #[test]
    fn defaults_follow_the_general_settings() {
        let cfg = ExperimentConfig::from_args(&parse(&["--n", "4", "--sum", "5"])).unwrap();
        assert_eq!(cfg.params.crossover_probability, 0.9);
        assert_eq!(cfg.params.mutations_per_chromosome, 5);
        assert_eq!(cfg.params.p_function, 0.5);
        assert!(cfg.params.stop_on_success);
        assert_eq!(cfg.instance, Some(KnapsackInstance { n: 4, k: 5 }));
    }

    #[test]
    fn preset_rows_and_overrides() {
        let cfg = ExperimentConfig::from_args(&parse(&["--benchmark", "2"])).unwrap();
        assert_eq!(cfg.instance, Some(KnapsackInstance { n: 5, k: 7 }));
        assert_eq!((cfg.params.population_size, cfg.params.chromosome_length, cfg.params.generations), (100, 30, 101));
        let cfg = ExperimentConfig::from_args(&parse(&["--benchmark", "3", "--pop", "7", "--run-full"])).unwrap();
        assert_eq!(cfg.params.population_size, 7);
        assert_eq!(cfg.params.generations, 101);
        assert!(!cfg.params.stop_on_success);
        assert!(Cli::try_parse_from(["mep", "evolve", "--benchmark", "5"]).is_err());
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        fs::write(&path, "runs = 7\n[instance]\nn = 5\nk = 7\n[params]\npopulation_size = 30\nseed = 9\n").unwrap();
        let p = path.to_str().unwrap();
        let cfg = ExperimentConfig::from_args(&parse(&["--config", p, "--seed", "4"])).unwrap();
        assert_eq!(cfg.runs, 7);
        assert_eq!(cfg.params.population_size, 30);
        assert_eq!(cfg.params.seed, 4);
        assert_eq!(cfg.params.chromosome_length, 10);
        assert_eq!(cfg.instance, Some(KnapsackInstance { n: 5, k: 7 }));
    }

    #[test]
    fn half_an_instance_is_rejected() {
        assert!(ExperimentConfig::from_args(&parse(&["--n", "4"])).is_err());
        assert!(ExperimentConfig::default().target_table().is_err());
    }
}
