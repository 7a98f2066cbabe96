//! `zotnet` command-line interface.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on runtime errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use zotnet::allocator::PolicyName;
use zotnet::config::Config;
use zotnet::pipeline::{
    compare, generate_dev_dataset, read_results_csv, read_summary, run_production, train_on, write_hourly_csv,
    write_results_csv, write_summary,
};
use zotnet::predictor::{read_model, write_model};
use zotnet::synth::{read_dataset_csv, write_dataset_csv};

const RESULTS_FILE: &str = "results.csv";
const SUMMARY_FILE: &str = "summary.json";
const MODEL_AFTER_FILE: &str = "model_after.txt";
const COMPARISON_FILE: &str = "comparison.json";
const HOURLY_FILE: &str = "hourly.csv";

#[derive(Debug, Parser)]
#[command(name = "zotnet", version, about = "Personalized single-cell resource allocation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labelled development dataset (CSV).
    GenData {
        /// TOML configuration; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the two-phase model on a dataset and write the model file.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Ignore persona labels and train on k-means clusters.
        #[arg(long)]
        unlabeled: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the production loop and write results.csv and summary.json.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Trained model; required by the personalized policy.
        #[arg(long)]
        model: Option<PathBuf>,
        /// personalized | baseline; defaults to the configured policy.
        #[arg(long)]
        policy: Option<PolicyName>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Pair a personalized and a baseline run directory.
    Compare {
        personalized: PathBuf,
        baseline: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(Config::default()),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn gen_data(config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<()> {
    let config = load_config(config)?;
    let seed = seed.unwrap_or(config.seed);
    let samples = generate_dev_dataset(&config, seed)?;
    write_dataset_csv(out, &samples)?;
    print_json(&serde_json::json!({
        "rows": samples.len(),
        "personas": config.personas.len(),
        "users_per_persona": config.development.users_per_persona,
        "seed": seed,
        "out": out,
    }))
}

fn train(data: &Path, out: &Path, config: Option<&Path>, unlabeled: bool, seed: Option<u64>) -> Result<()> {
    let config = load_config(config)?;
    let samples = read_dataset_csv(data)?;
    let withhold = unlabeled || config.development.withhold_personas;
    let (model, report, clustering) = train_on(&samples, &config, withhold, seed.unwrap_or(config.seed))?;
    write_model(out, &model)?;
    print_json(&serde_json::json!({
        "report": report,
        "clusters": clustering.map(|c| c.centroids.len()),
        "out": out,
    }))
}

fn simulate(config: Option<&Path>, model: Option<&Path>, policy: Option<PolicyName>, out: &Path, seed: Option<u64>) -> Result<()> {
    let config = load_config(config)?;
    let policy = policy
        .unwrap_or(config.simulation.policy)
        .with_s_min(config.simulation.s_min);
    let model = match (policy.is_personalized(), model) {
        (true, None) => bail!("the personalized policy needs --model"),
        (true, Some(p)) => Some(read_model(p)?),
        (false, _) => None,
    };
    let run = run_production(&config, policy, model.as_ref(), seed.unwrap_or(config.seed))?;
    create_dir(out)?;
    write_results_csv(&out.join(RESULTS_FILE), &run.rows())?;
    write_summary(&out.join(SUMMARY_FILE), &run.summary)?;
    if let Some(m) = &run.model {
        write_model(&out.join(MODEL_AFTER_FILE), m)?;
    }
    print_json(&run.summary)
}

fn compare_dirs(personalized: &Path, baseline: &Path, out: &Path) -> Result<()> {
    let ps = read_summary(&personalized.join(SUMMARY_FILE))?;
    let bs = read_summary(&baseline.join(SUMMARY_FILE))?;
    if ps.ts_len_s != bs.ts_len_s {
        bail!("runs use different slot lengths ({} s and {} s)", ps.ts_len_s, bs.ts_len_s);
    }
    let pr = read_results_csv(&personalized.join(RESULTS_FILE))?;
    let br = read_results_csv(&baseline.join(RESULTS_FILE))?;
    let report = compare(&pr, &br, ps.ts_len_s, ps.warmup_s)?;
    create_dir(out)?;
    let path = out.join(COMPARISON_FILE);
    fs::write(&path, serde_json::to_string_pretty(&report)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    write_hourly_csv(&out.join(HOURLY_FILE), &report.hourly)?;
    print_json(&report)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData { config, seed, out } => gen_data(config.as_deref(), seed, &out),
        Command::Train {
            data,
            out,
            config,
            unlabeled,
            seed,
        } => train(&data, &out, config.as_deref(), unlabeled, seed),
        Command::Simulate {
            config,
            model,
            policy,
            out,
            seed,
        } => simulate(config.as_deref(), model.as_deref(), policy, &out, seed),
        Command::Compare {
            personalized,
            baseline,
            out,
        } => compare_dirs(&personalized, &baseline, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
