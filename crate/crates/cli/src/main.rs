mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dll_core::cones::{membership_slack, project_euclidean, radial_projection, ConeSpec};
use dll_core::problems::{gen_knapsack, gen_prodplan, Dataset, Family, Record, Split, SplitSizes};
use dll_core::refsolve::attach_oracles;
use dll_core::training::{evaluate, history_csv, train_with, Predictor, TrainConfig, TrainedModel};

use config::TrainOverrides;

/// Exit status when a certified bound exceeds its reference optimum.
const EXIT_WEAK_DUALITY: u8 = 3;

#[derive(Parser)]
#[command(name = "dll", version, about = "Dual-feasible optimization proxies")]
struct Cli {
    /// Base directory for dataset paths given as relative paths
    #[arg(long, global = true, env = "DLL_DATA_DIR")]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset with reference optima
    Gen(GenArgs),
    /// Train a model on a dataset
    Train(TrainArgs),
    /// Evaluate certified bounds against the reference optima
    Eval(EvalArgs),
    /// Project a point onto a cone
    Project(ProjectArgs),
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long)]
    family: Family,
    /// Number of knapsack constraints (prodplan has one)
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: usize,
    /// Total instances, split 4:1:1 into train/validation/test
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), conflicts_with_all = ["train", "validation", "test"])]
    count: Option<u64>,
    #[arg(long)]
    train: Option<usize>,
    #[arg(long)]
    validation: Option<usize>,
    #[arg(long)]
    test: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for generation and reference solves
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output JSONL path (`.gz` compresses); defaults to a name derived from the arguments
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// JSON file with training settings; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: TrainOverrides,
    /// Checkpoint path
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch history CSV; defaults to the checkpoint path with `.history.csv`
    #[arg(long)]
    history: Option<PathBuf>,
    /// Print every epoch to stderr
    #[arg(short, long)]
    verbose: bool,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, required_unless_present = "oracle")]
    model: Option<PathBuf>,
    /// Evaluate the cached optimal multipliers instead of a model
    #[arg(long, conflicts_with = "model")]
    oracle: bool,
    #[arg(long, default_value = "test", value_parser = parse_split)]
    split: Split,
    /// Summary CSV path; printed to stdout regardless
    #[arg(long)]
    out: Option<PathBuf>,
    /// Full report as JSON
    #[arg(long)]
    json: Option<PathBuf>,
    /// Per-instance rows as CSV
    #[arg(long)]
    rows: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Euclidean,
    Radial,
}

#[derive(clap::Args)]
struct ProjectArgs {
    /// soc3, rsoc4, psd2, nonneg5, exp, dexp, pow0.5, ...
    #[arg(long)]
    cone: ConeSpec,
    #[arg(long, value_enum, default_value = "euclidean")]
    mode: Mode,
    #[arg(last = true, required = true, allow_negative_numbers = true)]
    point: Vec<f64>,
}

fn parse_split(s: &str) -> Result<Split, String> {
    match s {
        "train" => Ok(Split::Train),
        "validation" | "val" => Ok(Split::Validation),
        "test" => Ok(Split::Test),
        other => Err(format!("unknown split '{other}'")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let dir = cli.data_dir.as_deref();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a, dir),
        Command::Train(a) => cmd_train(a, dir),
        Command::Eval(a) => cmd_eval(a, dir),
        Command::Project(a) => cmd_project(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn data_path(dir: Option<&Path>, p: &Path) -> PathBuf {
    match dir {
        Some(d) if p.is_relative() => d.join(p),
        _ => p.to_path_buf(),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_gen(a: GenArgs, dir: Option<&Path>) -> Result<ExitCode> {
    let sizes = match a.count {
        Some(c) => SplitSizes::from_count(c as usize),
        None => SplitSizes::new(
            a.train.unwrap_or(SplitSizes::DESK.train),
            a.validation.unwrap_or(SplitSizes::DESK.validation),
            a.test.unwrap_or(SplitSizes::DESK.test),
        ),
    };
    let mut ds = match a.family {
        Family::Knapsack => {
            let m = a.m.context("knapsack needs --m")?;
            gen_knapsack(m, a.n, sizes, a.seed, a.jobs)?
        }
        Family::Prodplan => {
            if a.m.is_some_and(|m| m != 1) {
                bail!("prodplan has a single resource; --m must be 1 or omitted");
            }
            gen_prodplan(a.n, sizes, a.seed, a.jobs)?
        }
    };
    attach_oracles(&mut ds, a.jobs)?;
    let (m, n) = ds.dims();
    let out = a
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}-m{m}-n{n}-s{}.jsonl", a.family, a.seed)));
    let out = data_path(dir, &out);
    ds.save(&out)?;

    let mean = ds
        .records
        .iter()
        .filter_map(|r| r.oracle.as_ref().map(|o| o.value))
        .sum::<f64>()
        / ds.records.len() as f64;
    println!(
        "wrote {} {} instances (m={m}, n={n}; train {}, validation {}, test {}) to {}",
        ds.records.len(),
        a.family,
        sizes.train,
        sizes.validation,
        sizes.test,
        out.display()
    );
    println!("mean optimal value {mean:.6}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_train(a: TrainArgs, dir: Option<&Path>) -> Result<ExitCode> {
    let data = data_path(dir, &a.data);
    let ds = Dataset::load(&data)?;
    let file = match &a.config {
        Some(p) => TrainOverrides::load(p)?,
        None => TrainOverrides::default(),
    };
    let merged = a.overrides.or(file);
    let (m, n) = ds.dims();
    let mut cfg = TrainConfig::for_family(ds.family, merged.method_or_default(), m, n);
    merged.apply(&mut cfg);

    let start = Instant::now();
    let verbose = a.verbose;
    let outcome = train_with(&ds, &cfg, |r| {
        if verbose {
            eprintln!(
                "epoch {:>5}  train {:>14.6}  val {:>14.6}  lr {:.3e}",
                r.epoch, r.train_loss, r.val_loss, r.lr
            );
        }
    })?;
    outcome.model.save(&a.out)?;
    let history = a.history.unwrap_or_else(|| a.out.with_extension("history.csv"));
    write(&history, &history_csv(&outcome.history))?;
    println!(
        "trained {} on {} (m={m}, n={n}) for {} epochs in {:.1}s; best epoch {} with validation loss {:.6}",
        cfg.method,
        ds.family,
        outcome.history.len(),
        start.elapsed().as_secs_f64(),
        outcome.best_epoch,
        outcome.best_val_loss
    );
    println!("checkpoint {}, history {}", a.out.display(), history.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(a: EvalArgs, dir: Option<&Path>) -> Result<ExitCode> {
    let ds = Dataset::load(&data_path(dir, &a.data))?;
    let records: Vec<&Record> = ds.require_split(a.split)?;
    let model = a.model.as_deref().map(TrainedModel::load).transpose()?;
    let predictor = match &model {
        Some(m) => Predictor::Model(m),
        None => Predictor::Oracle,
    };
    let report = evaluate(predictor, &records)?;

    print!("{}", report.summary_csv());
    if let Some(p) = &a.out {
        write(p, &report.summary_csv())?;
    }
    if let Some(p) = &a.json {
        write(p, &serde_json::to_string_pretty(&report)?)?;
    }
    if let Some(p) = &a.rows {
        write(p, &report.rows_csv())?;
    }
    if report.passes_weak_duality() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "weak duality violated on {} instance(s): {:?}",
            report.weak_duality_violations.len(),
            report.weak_duality_violations
        );
        Ok(ExitCode::from(EXIT_WEAK_DUALITY))
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn cmd_project(a: ProjectArgs) -> Result<ExitCode> {
    let point = match a.mode {
        Mode::Euclidean => project_euclidean(&a.cone, &a.point)?,
        Mode::Radial => {
            let r = radial_projection(&a.cone, &a.point)?;
            println!("{}", join(&r.point));
            println!("slack {}", membership_slack(&a.cone, &r.point)?);
            println!("lambda {}", r.step);
            return Ok(ExitCode::SUCCESS);
        }
    };
    println!("{}", join(&point));
    println!("slack {}", membership_slack(&a.cone, &point)?);
    Ok(ExitCode::SUCCESS)
}
