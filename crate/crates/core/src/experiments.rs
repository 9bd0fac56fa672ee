//! Repeated-run studies over the XOR and RGB datasets: success rates,
//! word-less generalization, the zero-output verdict and statistics of the
//! outputs left unconstrained by null desired values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{self, Dataset, WordlessCase};
use crate::error::{Error, Result};
use crate::network::{ApartmentTopology, Network, WordId};
use crate::training::{self, init_network, init_rng, TrainConfig, TrainReport};

pub const DEFAULT_BINS: usize = 20;

/// Null-slot maxima below this count as "close to zero" for
/// [`ExperimentReport::near_zero_null_rate`].
pub const NEAR_ZERO: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Affirmation,
    Negation,
}

/// Affirmation when the strongest active output is strictly above
/// `threshold`, negation otherwise.
pub fn zero_output_verdict(
    outputs: &[f64],
    active_slots: &[usize],
    threshold: f64,
) -> Result<Verdict> {
    if active_slots.is_empty() {
        return Err(Error::Experiment("no active output slot".into()));
    }
    let mut best = f64::NEG_INFINITY;
    for &slot in active_slots {
        let value = *outputs
            .get(slot)
            .ok_or_else(|| Error::dim("output slots", slot + 1, outputs.len()))?;
        best = best.max(value);
    }
    Ok(if best > threshold {
        Verdict::Affirmation
    } else {
        Verdict::Negation
    })
}

/// Verdict for a (word, input) pair using the output slots of the word's
/// apartment.
pub fn verdict_for_word(net: &Network, x: &[f64], word: WordId, threshold: f64) -> Result<Verdict> {
    let index = net
        .topology()
        .apartment_index(word)
        .ok_or_else(|| Error::Experiment(format!("word {word} has no apartment")))?;
    let outputs = net.forward(x, word)?;
    let slots: Vec<usize> = net.spans()[index].output.clone().collect();
    zero_output_verdict(&outputs, &slots, threshold)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub x: Vec<f64>,
    pub expected_apartment: usize,
    pub outputs: Vec<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationResult {
    pub pass: bool,
    pub cases: Vec<CaseResult>,
}

/// Evaluates each case without a word. A case passes when its expected
/// apartment's strongest output is above 0.5 and every other apartment
/// stays below 0.5.
pub fn wordless_generalization(
    net: &Network,
    cases: &[WordlessCase],
) -> Result<GeneralizationResult> {
    let spans = net.spans();
    let mut results = Vec::with_capacity(cases.len());
    for case in cases {
        if case.expected_apartment >= spans.len() {
            return Err(Error::Experiment(format!(
                "expected apartment {} out of range",
                case.expected_apartment
            )));
        }
        let outputs = net.forward(&case.x, WordId::NONE)?;
        let pass = spans.iter().enumerate().all(|(k, span)| {
            let peak = outputs[span.output.clone()]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            if k == case.expected_apartment {
                peak > 0.5
            } else {
                peak < 0.5
            }
        });
        results.push(CaseResult {
            x: case.x.clone(),
            expected_apartment: case.expected_apartment,
            outputs,
            pass,
        });
    }
    Ok(GeneralizationResult {
        pass: results.iter().all(|c| c.pass),
        cases: results,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_lower: f64,
    pub bin_upper: f64,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullOutputStats {
    /// Fraction of all individual null-slot outputs below 0.5.
    pub fraction_below_half: f64,
    /// Largest null-slot output observed.
    pub max_value: f64,
    /// Distribution of the per-example maximum null-slot output.
    pub histogram: Vec<HistogramBin>,
}

/// Raw null-slot observations for one network.
#[derive(Clone, Debug, Default)]
struct NullSamples {
    per_example_max: Vec<f64>,
    below_half: usize,
    total: usize,
    max_value: f64,
}

impl NullSamples {
    fn collect(net: &Network, dataset: &Dataset) -> Result<Self> {
        let mut samples = NullSamples {
            max_value: f64::NEG_INFINITY,
            ..NullSamples::default()
        };
        for ex in &dataset.examples {
            let outputs = net.forward(&ex.x, ex.word)?;
            if outputs.len() != ex.desired.len() {
                return Err(Error::dim("desired slots", outputs.len(), ex.desired.len()));
            }
            let mut example_max = f64::NEG_INFINITY;
            for (&o, d) in outputs.iter().zip(&ex.desired) {
                if d.is_none() {
                    example_max = example_max.max(o);
                    samples.total += 1;
                    if o < 0.5 {
                        samples.below_half += 1;
                    }
                }
            }
            if example_max.is_finite() {
                samples.max_value = samples.max_value.max(example_max);
                samples.per_example_max.push(example_max);
            }
        }
        if samples.total == 0 {
            return Err(Error::Experiment(
                "dataset has no null desired slots".into(),
            ));
        }
        Ok(samples)
    }

    fn fraction_below_half(&self) -> f64 {
        self.below_half as f64 / self.total as f64
    }
}

/// Equal-width histogram of `values` on `[0, 1]`, normalised to
/// probabilities.
pub fn histogram(values: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::Experiment("bins must be positive".into()));
    }
    if values.is_empty() {
        return Err(Error::Experiment("no values to histogram".into()));
    }
    let mut counts = vec![0usize; bins];
    for &v in values {
        let bin = ((v.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        counts[bin] += 1;
    }
    let total = values.len() as f64;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| HistogramBin {
            bin_lower: i as f64 / bins as f64,
            bin_upper: (i + 1) as f64 / bins as f64,
            probability: c as f64 / total,
        })
        .collect())
}

/// Comma-separated `bin_lower,bin_upper,probability` rows with a header.
pub fn histogram_csv(bins: &[HistogramBin]) -> String {
    let mut out = String::from("bin_lower,bin_upper,probability\n");
    for b in bins {
        out.push_str(&format!(
            "{},{},{}\n",
            b.bin_lower, b.bin_upper, b.probability
        ));
    }
    out
}

pub fn null_output_stats(net: &Network, dataset: &Dataset, bins: usize) -> Result<NullOutputStats> {
    let samples = NullSamples::collect(net, dataset)?;
    Ok(NullOutputStats {
        fraction_below_half: samples.fraction_below_half(),
        max_value: samples.max_value,
        histogram: histogram(&samples.per_example_max, bins)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub seed: u64,
    pub success: bool,
    pub iterations: u64,
    pub shake_count: u64,
    pub max_error: f64,
    /// Word-less generalization verdict; only evaluated on successful runs.
    pub generalization_pass: Option<bool>,
    /// Null-slot fraction below 0.5; only evaluated on successful runs.
    pub null_fraction_below_half: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub per_run: Vec<RunOutcome>,
    /// Share of successful runs passing word-less generalization.
    pub generalization_pass_rate: f64,
    /// Pooled over successful runs: fraction below 0.5 is the mean of the
    /// per-run fractions, the histogram pools every per-example maximum.
    pub null_output_stats: Option<NullOutputStats>,
    /// Share of successful runs whose null-slot outputs all stay below
    /// [`NEAR_ZERO`].
    pub near_zero_null_rate: Option<f64>,
}

/// Topology, data, word-less probes and default hyper-parameters of one
/// study.
#[derive(Clone, Debug)]
pub struct Study {
    pub name: &'static str,
    pub topology: ApartmentTopology,
    pub dataset: Dataset,
    pub cases: Vec<WordlessCase>,
    pub config: TrainConfig,
}

pub const XOR_HIDDEN_PER_APARTMENT: usize = 4;
pub const RGB_HIDDEN_PER_APARTMENT: usize = 12;

impl Study {
    pub fn xor() -> Self {
        Study {
            name: "xor",
            topology: ApartmentTopology::uniform(2, 2, XOR_HIDDEN_PER_APARTMENT, 1)
                .expect("valid topology"),
            dataset: datasets::xor_dataset(),
            cases: datasets::xor_wordless_cases(),
            config: TrainConfig::default(),
        }
    }

    pub fn xor_complete() -> Self {
        Study {
            name: "xor-complete",
            dataset: datasets::xor_complete_dataset(),
            ..Study::xor()
        }
    }

    pub fn rgb() -> Self {
        Study {
            name: "rgb",
            topology: ApartmentTopology::uniform(3, 8, RGB_HIDDEN_PER_APARTMENT, 1)
                .expect("valid topology"),
            dataset: datasets::rgb_dataset(),
            cases: datasets::rgb_vertex_cases(),
            config: TrainConfig {
                c0: 0.005,
                target_error: 0.1,
                ..TrainConfig::default()
            },
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "xor" => Some(Study::xor()),
            "xor-complete" => Some(Study::xor_complete()),
            "rgb" => Some(Study::rgb()),
            _ => None,
        }
    }

    pub fn success_rate(&self, runs: usize) -> Result<ExperimentReport> {
        success_rate(
            &self.topology,
            &self.dataset,
            &self.config,
            runs,
            &self.cases,
        )
    }
}

/// Initialises and trains one network from `seed`.
pub fn train_seeded(
    topology: &ApartmentTopology,
    dataset: &Dataset,
    config: &TrainConfig,
    seed: u64,
) -> Result<(Network, TrainReport)> {
    let net = init_network(topology.clone(), &mut init_rng(seed));
    let config = TrainConfig {
        seed,
        ..config.clone()
    };
    training::train(net, &dataset.examples, &config)
}

struct RunData {
    outcome: RunOutcome,
    nulls: Option<NullSamples>,
}

fn run_once(
    topology: &ApartmentTopology,
    dataset: &Dataset,
    config: &TrainConfig,
    seed: u64,
    cases: &[WordlessCase],
) -> Result<RunData> {
    let (net, report) = train_seeded(topology, dataset, config, seed)?;
    let mut generalization_pass = None;
    let mut nulls = None;
    if report.success {
        if !cases.is_empty() {
            generalization_pass = Some(wordless_generalization(&net, cases)?.pass);
        }
        if dataset.examples.iter().any(|e| e.has_null_slot()) {
            nulls = Some(NullSamples::collect(&net, dataset)?);
        }
    }
    Ok(RunData {
        outcome: RunOutcome {
            seed,
            success: report.success,
            iterations: report.iterations_used,
            shake_count: report.shake_count,
            max_error: report.max_error(),
            generalization_pass,
            null_fraction_below_half: nulls.as_ref().map(NullSamples::fraction_below_half),
        },
        nulls,
    })
}

/// Trains `runs` networks with seeds `config.seed .. config.seed + runs`.
pub fn success_rate(
    topology: &ApartmentTopology,
    dataset: &Dataset,
    config: &TrainConfig,
    runs: usize,
    cases: &[WordlessCase],
) -> Result<ExperimentReport> {
    success_rate_with_progress(topology, dataset, config, runs, cases, DEFAULT_BINS, |_| {})
}

/// Same as [`success_rate`]; `on_run` sees each outcome as it completes,
/// possibly from several threads and out of seed order. The report itself
/// is always in seed order.
pub fn success_rate_with_progress(
    topology: &ApartmentTopology,
    dataset: &Dataset,
    config: &TrainConfig,
    runs: usize,
    cases: &[WordlessCase],
    bins: usize,
    on_run: impl Fn(&RunOutcome) + Sync,
) -> Result<ExperimentReport> {
    if runs == 0 {
        return Err(Error::Experiment("runs must be at least 1".into()));
    }
    if bins == 0 {
        return Err(Error::Experiment("bins must be positive".into()));
    }
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let data: Vec<RunData> = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let run = run_once(
                topology,
                dataset,
                config,
                config.seed.wrapping_add(i),
                cases,
            )?;
            on_run(&run.outcome);
            Ok(run)
        })
        .collect::<Result<_>>()?;
    aggregate(data, bins)
}

fn aggregate(data: Vec<RunData>, bins: usize) -> Result<ExperimentReport> {
    let runs = data.len();
    let successes = data.iter().filter(|d| d.outcome.success).count();

    let verdicts: Vec<bool> = data
        .iter()
        .filter_map(|d| d.outcome.generalization_pass)
        .collect();
    let generalization_pass_rate = if verdicts.is_empty() {
        0.0
    } else {
        verdicts.iter().filter(|&&p| p).count() as f64 / verdicts.len() as f64
    };

    let nulls: Vec<&NullSamples> = data.iter().filter_map(|d| d.nulls.as_ref()).collect();
    let (null_output_stats, near_zero_null_rate) = if nulls.is_empty() {
        (None, None)
    } else {
        let n = nulls.len() as f64;
        let pooled: Vec<f64> = nulls
            .iter()
            .flat_map(|s| s.per_example_max.iter().copied())
            .collect();
        let stats = NullOutputStats {
            fraction_below_half: nulls.iter().map(|s| s.fraction_below_half()).sum::<f64>() / n,
            max_value: nulls
                .iter()
                .map(|s| s.max_value)
                .fold(f64::NEG_INFINITY, f64::max),
            histogram: histogram(&pooled, bins)?,
        };
        let quiet = nulls.iter().filter(|s| s.max_value < NEAR_ZERO).count() as f64 / n;
        (Some(stats), Some(quiet))
    };

    Ok(ExperimentReport {
        runs,
        successes,
        success_rate: successes as f64 / runs as f64,
        per_run: data.into_iter().map(|d| d.outcome).collect(),
        generalization_pass_rate,
        null_output_stats,
        near_zero_null_rate,
    })
}
