use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mima::eval::evaluate;
use mima::mapper::{mapper_graph, CoverSpec, FilterSpec};
use mima::pipeline::{
    export_graph, ingest, parse_list, parse_predictions, run, sweep, sweep_table, write_two_view, ExperimentConfig,
    GraphFormat, SweepConfig, DEFAULT_SWEEP_CAP,
};
use mima::synth::{gen_two_view, TwoViewSpec};
use mima::{Error, Result};

#[derive(Parser)]
#[command(name = "mima", version, about = "MAPPER-induced manifold alignment for multi-source fusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-view dataset and a matching experiment config.
    Gen(GenArgs),
    /// Run one experiment.
    Run(RunArgs),
    /// Run every combination of the listed parameter values.
    Sweep(SweepArgs),
    /// Build a MAPPER graph for one data file and export it.
    Mapper(MapperArgs),
    /// Re-score saved predictions against labeled data.
    Eval(EvalArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.3)]
    noise: f64,
    #[arg(long, default_value_t = 25)]
    train_per_class: usize,
    #[arg(long, default_value_t = 100)]
    test_per_class: usize,
    #[arg(long, default_value_t = 1.0)]
    labeled_fraction: f64,
}

/// Experiment settings; each one overrides the config file.
#[derive(Args)]
struct ExperimentArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    /// pol-only, opt-only, concat, lpp, lpp-se, ssma or mima.
    #[arg(long)]
    algorithm: Option<String>,
    /// Comma-separated training files, one per source.
    #[arg(long)]
    train: Option<String>,
    /// Comma-separated test files, one per source.
    #[arg(long)]
    test: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    dn: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    bins: Option<String>,
    #[arg(long)]
    overlap: Option<String>,
    #[arg(long)]
    k_max: Option<String>,
    /// pc:<i>, coord:<j> or custom:<name>.
    #[arg(long)]
    filter: Option<String>,
    /// one-nn or linear.
    #[arg(long)]
    classifier: Option<String>,
    #[arg(long)]
    ridge: Option<String>,
    #[arg(long)]
    unlabeled: Option<String>,
    /// Artifact root directory.
    #[arg(long)]
    output: Option<String>,
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let overrides = [
            ("algorithm", &self.algorithm),
            ("train", &self.train),
            ("test", &self.test),
            ("mu", &self.mu),
            ("dn", &self.dn),
            ("k", &self.k),
            ("bins", &self.bins),
            ("overlap", &self.overlap),
            ("k_max", &self.k_max),
            ("filter", &self.filter),
            ("classifier", &self.classifier),
            ("ridge", &self.ridge),
            ("unlabeled", &self.unlabeled),
            ("output", &self.output),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, v, None)?;
            }
        }
        cfg.seed = Some(self.seed);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Print the report as JSON instead of TSV.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Values as `a,b,c` or `start:step:end`.
    #[arg(long)]
    mu_list: Option<String>,
    #[arg(long)]
    dn_list: Option<String>,
    #[arg(long)]
    bins_list: Option<String>,
    #[arg(long)]
    overlap_list: Option<String>,
    #[arg(long)]
    k_list: Option<String>,
    /// Maximum number of combinations.
    #[arg(long, default_value_t = DEFAULT_SWEEP_CAP)]
    cap: usize,
}

#[derive(Args)]
struct MapperArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "pc:1")]
    filter: String,
    #[arg(long, default_value_t = 5)]
    bins: usize,
    #[arg(long, default_value_t = 0.5)]
    overlap: f64,
    #[arg(long, default_value_t = mima::mapper::DEFAULT_K_MAX)]
    k_max: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// dot or json.
    #[arg(long, default_value = "dot")]
    format: String,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// File with one predicted class id per line.
    #[arg(long)]
    predictions: PathBuf,
    /// Labeled data file holding the true classes.
    #[arg(long)]
    truth: PathBuf,
    /// Number of classes; defaults to the largest id seen.
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    json: bool,
}

fn opt_list<T: mima::pipeline::SweepValue>(s: &Option<String>) -> Result<Vec<T>> {
    s.as_deref().map_or(Ok(vec![]), parse_list)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => {
            let mut spec = TwoViewSpec::collapsing(a.noise, a.train_per_class, a.test_per_class, a.seed);
            spec.labeled_fraction = a.labeled_fraction;
            let data = gen_two_view(&spec)?;
            write_two_view(&data, &a.out, a.seed)?;
            eprintln!("wrote {}", a.out.join("experiment.cfg").display());
        }
        Command::Run(a) => {
            let out = run(&a.exp.config()?)?;
            print!("{}", if a.json { out.report.to_json() + "\n" } else { out.report.to_tsv() });
            if let Some(dir) = out.artifacts {
                eprintln!("artifacts in {}", dir.display());
            }
        }
        Command::Sweep(a) => {
            let mut s = SweepConfig::new(a.exp.config()?);
            s.mu = opt_list(&a.mu_list)?;
            s.dn = opt_list(&a.dn_list)?;
            s.bins = opt_list(&a.bins_list)?;
            s.overlap = opt_list(&a.overlap_list)?;
            s.k = opt_list(&a.k_list)?;
            s.cap = a.cap;
            print!("{}", sweep_table(&sweep(&s)?));
        }
        Command::Mapper(a) => {
            let src = ingest(&a.input)?;
            let filter: FilterSpec = a.filter.parse()?;
            let format: GraphFormat = a.format.parse()?;
            let graph = mapper_graph(&src.features, &filter, &CoverSpec::new(a.bins, a.overlap)?, a.k_max, a.seed)?;
            match &a.out {
                Some(path) => export_graph(&graph, format, path)?,
                None => match format {
                    GraphFormat::Dot => print!("{}", graph.to_dot()),
                    GraphFormat::Json => println!("{}", graph.to_json()),
                },
            }
            eprintln!(
                "{} nodes, {} edges, {} independent cycles",
                graph.node_count(),
                graph.edges.len(),
                graph.cycle_rank()
            );
        }
        Command::Eval(a) => {
            let text = std::fs::read_to_string(&a.predictions).map_err(|e| Error::io(&a.predictions, e))?;
            let pred = parse_predictions(&text, &a.predictions.display().to_string())?;
            let truth = ingest(&a.truth)?
                .labels
                .ok_or_else(|| Error::Validation(format!("{} carries no labels", a.truth.display())))?;
            let classes = a
                .classes
                .unwrap_or_else(|| truth.iter().chain(&pred).copied().max().unwrap_or(1) as usize);
            let report = evaluate(&truth, &pred, classes)?;
            print!("{}", if a.json { report.to_json() + "\n" } else { report.to_tsv() });
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
