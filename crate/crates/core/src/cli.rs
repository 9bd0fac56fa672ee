//! Command-line front end: `dataset`, `train`, `eval` and `experiment`.
//!
//! Exit codes: 0 success, 1 domain failure (training did not converge),
//! 2 usage or I/O error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::datasets::{self, Dataset, WordlessCase};
use crate::error::Error;
use crate::experiments::{self, Study, Verdict, DEFAULT_BINS};
use crate::model;
use crate::network::{ApartmentTopology, Network, WordId};
use crate::training::{self, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Seed used when neither `--seed` nor a config file sets one.
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(name = "langbp", version, about = "Word-gated apartment perceptron")]
pub struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Base random seed (runs use seed, seed+1, ...).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// TOML file with training parameters.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output path for the primary artifact.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for multi-run experiments.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: Option<u32>,

    /// Suppress progress lines on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a generated dataset.
    Dataset {
        #[arg(value_enum)]
        kind: DatasetKind,
    },
    /// Train a network on a dataset file.
    Train(TrainArgs),
    /// Evaluate a trained model on one input.
    Eval(EvalArgs),
    /// Run a study.
    Experiment {
        #[command(subcommand)]
        kind: ExperimentKind,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DatasetKind {
    Xor,
    XorComplete,
    Rgb,
}

impl DatasetKind {
    fn generate(self) -> Dataset {
        match self {
            DatasetKind::Xor => datasets::xor_dataset(),
            DatasetKind::XorComplete => datasets::xor_complete_dataset(),
            DatasetKind::Rgb => datasets::rgb_dataset(),
        }
    }

    fn study(self) -> Study {
        match self {
            DatasetKind::Xor => Study::xor(),
            DatasetKind::XorComplete => Study::xor_complete(),
            DatasetKind::Rgb => Study::rgb(),
        }
    }
}

#[derive(Debug, Args, Default)]
struct ConfigOverrides {
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    decay_period: Option<u64>,
    #[arg(long)]
    target_error: Option<f64>,
    #[arg(long)]
    max_iterations: Option<u64>,
    #[arg(long)]
    shake_patience: Option<u64>,
    #[arg(long)]
    shake_amplitude: Option<f64>,
}

impl ConfigOverrides {
    fn apply(&self, config: &mut TrainConfig) {
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    config.$field = v;
                }
            )*};
        }
        set!(
            c0,
            decay_period,
            target_error,
            max_iterations,
            shake_patience,
            shake_amplitude
        );
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Dataset file to train on.
    #[arg(long)]
    dataset: PathBuf,

    /// Hidden neurons per apartment.
    #[arg(long, default_value_t = experiments::XOR_HIDDEN_PER_APARTMENT)]
    hidden: usize,

    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,

    /// Comma-separated input components.
    #[arg(long, allow_hyphen_values = true)]
    x: String,

    /// Word presented with the input (0 = none).
    #[arg(long, default_value_t = 0)]
    word: u32,

    /// Zero-output verdict threshold.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
}

#[derive(Debug, Subcommand)]
enum ExperimentKind {
    /// Success rate over repeated seeded runs.
    SuccessRate {
        #[arg(long, value_enum)]
        study: DatasetKind,

        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        runs: u64,

        /// Hidden neurons per apartment (defaults to the study's).
        #[arg(long)]
        hidden: Option<usize>,

        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,

        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Word-less classification of a study's probe inputs by a trained model.
    Generalization {
        #[arg(long)]
        model: PathBuf,

        #[arg(long, value_enum)]
        study: DatasetKind,
    },
    /// Outputs of neurons with unspecified desired values.
    NullStats {
        #[arg(long)]
        model: PathBuf,

        #[arg(long)]
        dataset: PathBuf,

        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Domain(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

/// Provenance of one command invocation.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub config: Option<TrainConfig>,
    pub seed: u64,
    pub dataset_fingerprint: Option<String>,
    pub artifacts: Vec<PathBuf>,
    pub duration_seconds: f64,
}

/// Path of the manifest that accompanies `artifact`.
pub fn manifest_path(artifact: &Path) -> PathBuf {
    sibling(artifact, "manifest.json")
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

struct Session {
    args: Vec<String>,
    global: GlobalArgs,
    started: Instant,
}

impl Session {
    fn progress(&self, line: impl AsRef<str>) {
        if !self.global.quiet {
            eprintln!("{}", line.as_ref());
        }
    }

    fn config(&self, overrides: &ConfigOverrides, base: TrainConfig) -> CliResult<TrainConfig> {
        let mut config = match &self.global.config {
            Some(path) => base.overlay_file(path)?,
            None => base,
        };
        overrides.apply(&mut config);
        if let Some(seed) = self.global.seed {
            config.seed = seed;
        }
        config.validate()?;
        Ok(config)
    }

    fn out(&self, default: &str) -> PathBuf {
        self.global
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(default))
    }

    fn write_manifest(
        &self,
        primary: &Path,
        config: Option<TrainConfig>,
        seed: u64,
        dataset_fingerprint: Option<String>,
        artifacts: Vec<PathBuf>,
    ) -> CliResult<()> {
        let manifest = RunManifest {
            command_line: self.args.clone(),
            config,
            seed,
            dataset_fingerprint,
            artifacts,
            duration_seconds: self.started.elapsed().as_secs_f64(),
        };
        write_json(&manifest_path(primary), &manifest)
    }
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e).into())
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    write_text(path, &text)
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let session = Session {
        args: args
            .iter()
            .map(|a| a.to_string_lossy().into_owned())
            .collect(),
        global: cli.global,
        started: Instant::now(),
    };
    let result = match cli.command {
        Command::Dataset { kind } => cmd_dataset(&session, kind),
        Command::Train(args) => cmd_train(&session, &args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Experiment { kind } => cmd_experiment(&session, &kind),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Domain(msg)) => {
            eprintln!("{msg}");
            EXIT_DOMAIN
        }
    }
}

fn cmd_dataset(session: &Session, kind: DatasetKind) -> CliResult<()> {
    let ds = kind.generate();
    let text = ds.to_csv_string()?;
    match &session.global.out {
        Some(path) => {
            write_text(path, &text)?;
            session.progress(format!("wrote {} examples to {}", ds.len(), path.display()));
        }
        None => print!("{text}"),
    }
    Ok(())
}

/// One apartment per word, sharing the output slots evenly.
fn topology_for(ds: &Dataset, hidden: usize) -> CliResult<ApartmentTopology> {
    if ds.word_count == 0 || !ds.output_dim.is_multiple_of(ds.word_count as usize) {
        return Err(CliError::Usage(format!(
            "{} output slots cannot be split across {} words",
            ds.output_dim, ds.word_count
        )));
    }
    let outputs = ds.output_dim / ds.word_count as usize;
    Ok(ApartmentTopology::uniform(
        ds.input_dim,
        ds.word_count,
        hidden,
        outputs,
    )?)
}

#[derive(Serialize)]
struct TrainOutput<'a> {
    manifest: PathBuf,
    model: &'a Path,
    #[serde(flatten)]
    report: &'a training::TrainReport,
}

fn cmd_train(session: &Session, args: &TrainArgs) -> CliResult<()> {
    let ds = Dataset::load(&args.dataset)?;
    let topology = topology_for(&ds, args.hidden)?;
    let base = TrainConfig {
        seed: DEFAULT_SEED,
        ..TrainConfig::default()
    };
    let config = session.config(&args.overrides, base)?;

    let net = training::init_network(topology, &mut training::init_rng(config.seed));
    let (net, report) = training::train_observed(net, &ds.examples, &config, |info| {
        if info.epoch % 1000 == 0 {
            session.progress(format!(
                "epoch {} rate {} max error {:.6}",
                info.epoch, info.rate, info.max_error
            ));
        }
    })?;

    let model_path = session.out("model.json");
    let report_path = sibling(&model_path, "report.json");
    model::save_model(&net, &model_path)?;
    write_json(
        &report_path,
        &TrainOutput {
            manifest: manifest_path(&model_path),
            model: &model_path,
            report: &report,
        },
    )?;
    session.write_manifest(
        &model_path,
        Some(config.clone()),
        config.seed,
        Some(ds.fingerprint()?),
        vec![model_path.clone(), report_path.clone()],
    )?;

    if report.success {
        session.progress(format!(
            "converged after {} epochs; model written to {}",
            report.iterations_used,
            model_path.display()
        ));
        Ok(())
    } else {
        Err(CliError::Domain(format!(
            "training did not converge in {} epochs (max error {:.6} > {})",
            report.iterations_used,
            report.max_error(),
            config.target_error
        )))
    }
}

fn parse_components(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("invalid input component {c:?}")))
        })
        .collect()
}

#[derive(Serialize)]
struct ApartmentVerdict {
    word: WordId,
    verdict: Verdict,
}

#[derive(Serialize)]
struct EvalOutput {
    word: WordId,
    outputs: Vec<f64>,
    /// Word of the apartment with the strongest output, when no word was
    /// presented.
    #[serde(skip_serializing_if = "Option::is_none")]
    winner: Option<WordId>,
    verdicts: Vec<ApartmentVerdict>,
}

fn cmd_eval(args: &EvalArgs) -> CliResult<()> {
    let net = model::load_model(&args.model)?;
    let x = parse_components(&args.x)?;
    let word = WordId::new(args.word);
    if !word.is_none() && net.topology().apartment_index(word).is_none() {
        return Err(CliError::Usage(format!("word {word} has no apartment")));
    }
    let outputs = net.forward(&x, word)?;
    let output = EvalOutput {
        word,
        winner: word.is_none().then(|| winner(&net, &outputs)),
        verdicts: apartment_verdicts(&net, &outputs, word, args.threshold)?,
        outputs,
    };
    println!("{}", serde_json::to_string(&output).map_err(Error::from)?);
    Ok(())
}

fn winner(net: &Network, outputs: &[f64]) -> WordId {
    net.spans()
        .iter()
        .map(|s| {
            let peak = outputs[s.output.clone()]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            (s.word, peak)
        })
        .fold((WordId::NONE, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        })
        .0
}

/// Verdict for the presented word's apartment, or for every apartment when
/// no word is given.
fn apartment_verdicts(
    net: &Network,
    outputs: &[f64],
    word: WordId,
    threshold: f64,
) -> CliResult<Vec<ApartmentVerdict>> {
    net.spans()
        .iter()
        .filter(|s| word.is_none() || s.word == word)
        .map(|s| {
            let slots: Vec<usize> = s.output.clone().collect();
            Ok(ApartmentVerdict {
                word: s.word,
                verdict: experiments::zero_output_verdict(outputs, &slots, threshold)?,
            })
        })
        .collect()
}

fn cmd_experiment(session: &Session, kind: &ExperimentKind) -> CliResult<()> {
    match kind {
        ExperimentKind::SuccessRate {
            study,
            runs,
            hidden,
            bins,
            overrides,
        } => {
            let mut study = study.study();
            if let Some(h) = hidden {
                let apartments = study.topology.apartments().len() as u32;
                study.topology =
                    ApartmentTopology::uniform(study.topology.input_dim(), apartments, *h, 1)?;
            }
            let config = session.config(overrides, study.config.clone())?;
            let runs = *runs as usize;
            let go = || {
                experiments::success_rate_with_progress(
                    &study.topology,
                    &study.dataset,
                    &config,
                    runs,
                    &study.cases,
                    *bins,
                    |o| {
                        session.progress(format!(
                            "run seed={} success={} epochs={} shakes={}",
                            o.seed, o.success, o.iterations, o.shake_count
                        ))
                    },
                )
            };
            let report = match session.global.jobs {
                Some(jobs) => rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs as usize)
                    .build()
                    .map_err(|e| CliError::Usage(e.to_string()))?
                    .install(go)?,
                None => go()?,
            };
            let out = session.out("success-rate.json");
            let mut artifacts = vec![out.clone()];
            if let Some(stats) = &report.null_output_stats {
                let hist = sibling(&out, "histogram.csv");
                write_text(&hist, &experiments::histogram_csv(&stats.histogram))?;
                artifacts.push(hist);
            }
            write_json(&out, &WithManifest::new(&out, &report))?;
            session.write_manifest(
                &out,
                Some(config.clone()),
                config.seed,
                Some(study.dataset.fingerprint()?),
                artifacts,
            )?;
            session.progress(format!(
                "{}: {}/{} runs succeeded ({:.1}%)",
                study.name,
                report.successes,
                report.runs,
                100.0 * report.success_rate
            ));
            println!(
                "{}",
                serde_json::json!({
                    "study": study.name,
                    "runs": report.runs,
                    "successes": report.successes,
                    "success_rate": report.success_rate,
                    "generalization_pass_rate": report.generalization_pass_rate,
                })
            );
            Ok(())
        }
        ExperimentKind::Generalization { model, study } => {
            let net = model::load_model(model)?;
            let cases: Vec<WordlessCase> = study.study().cases;
            let result = experiments::wordless_generalization(&net, &cases)?;
            let out = session.out("generalization.json");
            write_json(&out, &WithManifest::new(&out, &result))?;
            session.write_manifest(
                &out,
                None,
                session.global.seed.unwrap_or(DEFAULT_SEED),
                None,
                vec![out.clone()],
            )?;
            println!("{}", serde_json::json!({ "pass": result.pass }));
            Ok(())
        }
        ExperimentKind::NullStats {
            model,
            dataset,
            bins,
        } => {
            let net = model::load_model(model)?;
            let ds = Dataset::load(dataset)?;
            let stats = experiments::null_output_stats(&net, &ds, *bins)?;
            let out = session.out("null-stats.json");
            let hist = sibling(&out, "histogram.csv");
            write_text(&hist, &experiments::histogram_csv(&stats.histogram))?;
            write_json(&out, &WithManifest::new(&out, &stats))?;
            session.write_manifest(
                &out,
                None,
                session.global.seed.unwrap_or(DEFAULT_SEED),
                Some(ds.fingerprint()?),
                vec![out.clone(), hist],
            )?;
            println!(
                "{}",
                serde_json::json!({
                    "fraction_below_half": stats.fraction_below_half,
                    "max_value": stats.max_value,
                })
            );
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct WithManifest<'a, T: Serialize> {
    manifest: PathBuf,
    #[serde(flatten)]
    body: &'a T,
}

impl<'a, T: Serialize> WithManifest<'a, T> {
    fn new(artifact: &Path, body: &'a T) -> Self {
        WithManifest {
            manifest: manifest_path(artifact),
            body,
        }
    }
}
