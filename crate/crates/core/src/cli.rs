//! Command-line entry point. `main` forwards to [`run`].

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::attacks::{AttackKind, AttackModel};
use crate::bayes_oracle::verification_suite;
use crate::config::ExperimentConfig;
use crate::dp_bound::{mi_upper_bound, randomized_world_check, DpParams};
use crate::error::{Error, Result};
use crate::harness::{
    extract_records, fit_attacks, run_experiment, split_of, sweep_k, train_target, write_manifest, write_outputs,
    Confusion,
};
use crate::records::{read_records, write_records, Split};
use crate::target::TargetModel;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_STAGE: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

const CONFIG_KEYS: &str = "\
Config keys (TOML, `section.key = value`; override with --set key=value):
  seed                     master seed (u64)
  k                        transform-set size for training and attack; 0 = no augmentation
  q                        membership prior in (0, 1)
  dataset.kind             \"shapes\" | \"blobs\" | \"file\"
  dataset.n                number of candidate samples
  dataset.classes          number of classes
  dataset.side             grid side for shapes
  dataset.noise            pixel noise std for shapes
  dataset.label_noise      probability of a random label
  dataset.dim              feature dimension for blobs
  dataset.spread           cluster std for blobs
  dataset.path             JSON-lines sample file for kind = \"file\"
  pool.flip                flip probability (unset pool = default pool for the shape)
  pool.translate           max shift in pixels
  pool.rotate              max rotation in degrees
  pool.crop                max crop-pad offset in pixels
  pool.shear               max shear factor
  pool.cutout              max cutout side in pixels
  pool.noise               additive noise std
  model.arch               \"softmax\" | \"mlp\" | \"convnet\"
  model.hidden             MLP hidden sizes, e.g. [64]
  model.activation         \"tanh\" | \"relu\"
  model.channels           convnet channels
  train.epochs             epochs (0 leaves the model at its initialization)
  train.step_budget_k      rescale epochs to epochs * step_budget_k / max(k, 1); 0 = off
  train.lr                 learning rate
  train.decay_every        step-decay period in epochs (0 = off)
  train.decay_factor       step-decay factor
  train.batch              batch size
  train.momentum           momentum in [0, 1)
  train.schedule           \"fixed\" | \"per-epoch\" transform sets
  attack.m                 moment order for M_moments
  attack.epochs            MI-network epochs
  attack.lr                MI-network learning rate
  attack.standardize       standardize MI-network features
  attack.transforms        \"resample\" | \"reuse\" attacker transform sets
  attack.k_when_unaugmented  loss-set size when k = 0
  attack.train_per_class   attack-train records per class
  attack.bins              histogram bins

Exit codes: 0 ok, 2 config error, 3 stage failure, 4 invariant violation.";

#[derive(Debug, Parser)]
#[command(name = "augmi", version, about = "Membership inference against models trained with data augmentation", after_long_help = CONFIG_KEYS)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment config file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides one config key, e.g. `--set train.epochs=20`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Progress on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the target model; writes model.ckpt and train_report.json.
    Train,
    /// Query loss sets from a trained target; writes records.jsonl.
    Extract {
        /// Target checkpoint (default: <out>/model.ckpt).
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Fit or apply attack models.
    #[command(subcommand)]
    Attack(AttackCommand),
    /// Full pipeline for the configured k; writes results.csv, summary.json, histograms.
    Evaluate,
    /// Full pipeline for several k values.
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
        k: Vec<usize>,
    },
    /// Exact-enumeration check of the optimal-attack formulas.
    Oracle {
        #[arg(long, default_value_t = 100)]
        worlds: usize,
        #[arg(long, default_value_t = 100)]
        entropy_trials: usize,
    },
    /// Upper bound on membership inference under ε group privacy.
    Bound {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Also enumerate this many ε-constrained worlds against the bound.
        #[arg(long)]
        check: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum AttackCommand {
    /// Fit one attack on the attack-train records; writes attack_<name>.txt (e.g. attack_M_mean.txt).
    Train {
        #[arg(long)]
        records: PathBuf,
        /// loss | mean | nn-loss | moments
        #[arg(long)]
        kind: AttackKind,
    },
    /// Apply a fitted attack to the attack-eval records; writes decisions.csv.
    Apply {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::InvalidConfig(_) => EXIT_CONFIG,
        Error::Invariant(_) => EXIT_INVARIANT,
        _ => EXIT_STAGE,
    }
}

/// Parses `args` (program name first), runs the command, returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut overrides = common.overrides.clone();
    if let Some(seed) = common.seed {
        overrides.push(format!("seed={seed}"));
    }
    match &common.config {
        Some(path) => ExperimentConfig::load(path, &overrides),
        None => ExperimentConfig::parse_with_overrides("", &overrides),
    }
}

fn out_dir(common: &Common) -> Result<PathBuf> {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("augmi-out"));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value).expect("serializable") + "\n")?;
    Ok(())
}

fn note(common: &Common, msg: impl AsRef<str>) {
    if common.verbose > 0 {
        eprintln!("{}", msg.as_ref());
    }
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    let common = &cli.common;
    match &cli.command {
        Command::Train => {
            let config = load_config(common)?;
            let dir = out_dir(common)?;
            write_manifest(&config, &dir)?;
            note(common, format!("training {} with k = {}", config.model.architecture().name(), config.k));
            let (_, _, model, report) = train_target(&config)?;
            model.write_checkpoint(&dir.join("model.ckpt"))?;
            write_json(&dir.join("train_report.json"), &report)?;
            println!("{}", serde_json::to_string(&report).expect("serializable"));
        }
        Command::Extract { model } => {
            let config = load_config(common)?;
            let dir = out_dir(common)?;
            write_manifest(&config, &dir)?;
            let ckpt = model.clone().unwrap_or_else(|| dir.join("model.ckpt"));
            let target = TargetModel::read_checkpoint(&ckpt)?;
            let dataset = config.build_dataset()?;
            let members = crate::harness::draw_membership(config.seed, dataset.samples.len(), config.q)?;
            let records = extract_records(&config, &dataset, &members, &target)?;
            write_records(&records, &dir.join("records.jsonl"))?;
            note(common, format!("wrote {} records", records.len()));
        }
        Command::Attack(AttackCommand::Train { records, kind }) => {
            let config = load_config(common)?;
            let dir = out_dir(common)?;
            write_manifest(&config, &dir)?;
            let train = split_of(&read_records(records)?, Split::AttackTrain);
            let fitted = fit_attacks(&config, &train)?;
            let attack = fitted.into_iter().find(|a| a.kind == *kind).expect("all kinds fitted");
            let path = dir.join(format!("attack_{}.txt", kind.name()));
            attack.model.write(&path)?;
            note(common, format!("wrote {}", path.display()));
        }
        Command::Attack(AttackCommand::Apply { records, model }) => {
            let dir = out_dir(common)?;
            if common.config.is_some() || !common.overrides.is_empty() || common.seed.is_some() {
                write_manifest(&load_config(common)?, &dir)?;
            }
            let attack = AttackModel::read(model)?;
            let eval = split_of(&read_records(records)?, Split::AttackEval);
            let mut w = csv::Writer::from_path(dir.join("decisions.csv")).map_err(|e| Error::invalid(e.to_string()))?;
            w.write_record(["id", "member", "decision"]).map_err(|e| Error::invalid(e.to_string()))?;
            let counts = Confusion::tally(&eval, |r| {
                let d = attack.decide(r)?;
                w.write_record([r.id.to_string(), r.member.to_string(), d.to_string()])
                    .map_err(|e| Error::invalid(e.to_string()))?;
                Ok(d)
            })?;
            w.flush()?;
            println!("success_rate {} (tp {} tn {} fp {} fn {})", counts.success_rate(), counts.tp, counts.tn, counts.fp, counts.fn_);
        }
        Command::Evaluate => {
            let config = load_config(common)?;
            let dir = out_dir(common)?;
            note(common, format!("evaluating k = {}", config.k));
            let outcome = run_experiment(&config)?;
            write_outputs(&config, std::slice::from_ref(&outcome), &dir)?;
            for r in &outcome.results {
                println!("{:<10} k={:<3} success {:.4} ({})", r.attack, r.k, r.success_rate, r.detail);
            }
        }
        Command::Sweep { k } => {
            let config = load_config(common)?;
            let dir = out_dir(common)?;
            note(common, format!("sweeping k over {k:?}"));
            let outcomes = sweep_k(&config, k)?;
            write_outputs(&config, &outcomes, &dir)?;
            for r in outcomes.iter().flat_map(|o| &o.results) {
                println!("{:<10} k={:<3} success {:.4}", r.attack, r.k, r.success_rate);
            }
        }
        Command::Oracle { worlds, entropy_trials } => {
            let config = load_config(common)?;
            let report = verification_suite(config.seed, *worlds, &[0.1, 1.0, 10.0], *entropy_trials)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
            if let Some(dir) = &common.out {
                write_manifest(&config, dir)?;
                write_json(&dir.join("oracle.json"), &report)?;
            }
            if !report.passed {
                return Err(Error::Invariant("oracle routes disagree beyond tolerance".into()));
            }
            println!("oracle: pass");
        }
        Command::Bound { epsilon, q, k, check } => {
            let params = DpParams::new(*epsilon, *k, *q).map_err(|e| Error::config(e.to_string()))?;
            println!("{}", mi_upper_bound(&params));
            if let Some(trials) = check {
                let seed = common.seed.unwrap_or(0);
                let report = randomized_world_check(&params, *trials, seed)?;
                println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
                if let Some(dir) = &common.out {
                    fs::create_dir_all(dir)?;
                    write_json(&dir.join("bound.json"), &report)?;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_root_cause() {
        let staged = Error::Stage { stage: "train", source: Box::new(Error::InvalidConfig("x".into())) };
        assert_eq!(exit_code(&staged), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Invariant("x".into())), EXIT_INVARIANT);
        assert_eq!(exit_code(&Error::TrainingFailure { epoch: 1 }), EXIT_STAGE);
    }

    #[test]
    fn unknown_flags_are_config_errors() {
        assert_eq!(run(["augmi", "bound", "--epsilon", "0", "--q", "0.5", "--bogus"]), EXIT_CONFIG);
        assert_eq!(run(["augmi", "evaluate", "--config", "/nonexistent/augmi.toml"]), EXIT_CONFIG);
        assert_eq!(run(["augmi", "bound", "--epsilon", "0", "--q", "1.5"]), EXIT_CONFIG);
    }

    #[test]
    fn bound_runs() {
        assert_eq!(run(["augmi", "bound", "--epsilon", "0", "--q", "0.5"]), EXIT_OK);
    }
}
