//! Backpropagation with nullable targets.
//!
//! Desired outputs are `Option<f64>`; `None` slots contribute nothing to the
//! error and send no error signal back through the network. Together with
//! the word gate this confines each update to the apartment selected by the
//! presented word.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{
    is_inhibited, Activations, ApartmentSpan, ApartmentTopology, Network, WordId,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub x: Vec<f64>,
    pub word: WordId,
    pub desired: Vec<Option<f64>>,
    pub polarity: Polarity,
}

impl TrainingExample {
    pub fn new(
        x: Vec<f64>,
        word: impl Into<WordId>,
        desired: Vec<Option<f64>>,
        polarity: Polarity,
    ) -> Self {
        TrainingExample {
            x,
            word: word.into(),
            desired,
            polarity,
        }
    }

    pub fn specified_slots(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.desired
            .iter()
            .enumerate()
            .filter_map(|(i, d)| d.map(|d| (i, d)))
    }

    pub fn has_null_slot(&self) -> bool {
        self.desired.iter().any(Option::is_none)
    }

    /// Checks the example against a network's input and output sizes.
    pub fn check(&self, net: &Network) -> Result<()> {
        if self.x.len() != net.input_dim() {
            return Err(Error::dim(
                "input components",
                net.input_dim(),
                self.x.len(),
            ));
        }
        if self.desired.len() != net.output_dim() {
            return Err(Error::dim(
                "desired slots",
                net.output_dim(),
                self.desired.len(),
            ));
        }
        if self.desired.iter().all(Option::is_none) {
            return Err(Error::Example("no desired slot is specified".into()));
        }
        Ok(())
    }
}

/// Hyper-parameters of a training run. Every field has a default, so a
/// config file only needs to list overrides:
///
/// ```toml
/// c0 = 0.5               # initial learning rate
/// decay_period = 5000    # epochs between increments of n in c0/n
/// target_error = 0.001   # per-example error bound for success
/// max_iterations = 20000 # epoch cap
/// shake_patience = 500   # stagnant epochs before shaking
/// shake_amplitude = 0.1  # uniform noise half-width for shaking
/// seed = 0
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub c0: f64,
    pub decay_period: u64,
    pub target_error: f64,
    pub max_iterations: u64,
    pub shake_patience: u64,
    pub shake_amplitude: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c0: 0.5,
            decay_period: 5000,
            target_error: 0.001,
            max_iterations: 20_000,
            shake_patience: 500,
            shake_amplitude: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.c0) {
            return Err(Error::Config(format!(
                "c0 must be positive, got {}",
                self.c0
            )));
        }
        if self.decay_period == 0 {
            return Err(Error::Config("decay_period must be positive".into()));
        }
        if !positive(self.target_error) {
            return Err(Error::Config(format!(
                "target_error must be positive, got {}",
                self.target_error
            )));
        }
        if self.shake_patience == 0 {
            return Err(Error::Config("shake_patience must be positive".into()));
        }
        if !(self.shake_amplitude.is_finite() && self.shake_amplitude >= 0.0) {
            return Err(Error::Config(format!(
                "shake_amplitude must be non-negative, got {}",
                self.shake_amplitude
            )));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: TrainConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Copy of `self` with every key present in `text` replaced.
    pub fn overlay_toml_str(&self, text: &str) -> Result<Self> {
        let bad = |e: toml::de::Error| Error::Config(e.message().to_string());
        let mut table = toml::Table::try_from(self).expect("config serializes");
        let overrides: toml::Table = toml::from_str(text).map_err(bad)?;
        table.extend(overrides);
        let config: TrainConfig = table.try_into().map_err(bad)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        TrainConfig::default().overlay_file(path)
    }

    pub fn overlay_file(&self, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.overlay_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// `c0 / n` with `n = 1 + floor(iteration / decay_period)`.
pub fn learning_rate(config: &TrainConfig, iteration: u64) -> f64 {
    let n = 1 + iteration / config.decay_period.max(1);
    config.c0 / n as f64
}

/// Random network with every trainable parameter drawn from
/// `[-2/nd, 2/nd]`.
pub fn init_network<R: Rng + ?Sized>(topology: ApartmentTopology, rng: &mut R) -> Network {
    Network::random(topology, rng)
}

/// Half the squared distance between outputs and desired values over the
/// specified slots.
pub fn example_error(outputs: &[f64], desired: &[Option<f64>]) -> Result<f64> {
    if outputs.len() != desired.len() {
        return Err(Error::dim("desired slots", outputs.len(), desired.len()));
    }
    Ok(masked_error(outputs, desired))
}

fn masked_error(outputs: &[f64], desired: &[Option<f64>]) -> f64 {
    0.5 * outputs
        .iter()
        .zip(desired)
        .filter_map(|(o, d)| d.map(|d| (o - d) * (o - d)))
        .sum::<f64>()
}

/// Adds uniform noise from `[-amplitude, amplitude]` to every trainable
/// parameter.
pub fn shake<R: Rng + ?Sized>(net: &mut Network, amplitude: f64, rng: &mut R) {
    if amplitude == 0.0 {
        return;
    }
    net.for_each_parameter(|p| *p += rng.gen_range(-amplitude..=amplitude));
}

/// Scratch buffers for forward and backward passes.
#[derive(Debug, Default)]
struct Workspace {
    acts: Activations,
    output_delta: Vec<f64>,
    hidden_delta: Vec<f64>,
    spans: Vec<ApartmentSpan>,
}

impl Workspace {
    fn for_net(net: &Network) -> Self {
        Workspace {
            acts: Activations {
                hidden: vec![0.0; net.hidden_neurons().len()],
                outputs: vec![0.0; net.output_dim()],
            },
            output_delta: vec![0.0; net.output_dim()],
            hidden_delta: vec![0.0; net.hidden_neurons().len()],
            spans: net.spans().to_vec(),
        }
    }

    /// Forward pass followed by delta computation for one example.
    fn deltas(&mut self, net: &Network, example: &TrainingExample) {
        net.forward_into(&example.x, example.word, &mut self.acts);
        for ((delta, &o), d) in self
            .output_delta
            .iter_mut()
            .zip(&self.acts.outputs)
            .zip(&example.desired)
        {
            *delta = match d {
                Some(d) => (o - d) * o * (1.0 - o),
                None => 0.0,
            };
        }
        for span in net.spans() {
            let hidden_delta = &mut self.hidden_delta[span.hidden.clone()];
            if is_inhibited(example.word, span.word.value()) {
                hidden_delta.fill(0.0);
                continue;
            }
            let outputs = &net.output_neurons()[span.output.clone()];
            let output_delta = &self.output_delta[span.output.clone()];
            let hidden = &self.acts.hidden[span.hidden.clone()];
            for (j, (delta, &h)) in hidden_delta.iter_mut().zip(hidden).enumerate() {
                let back: f64 = outputs
                    .iter()
                    .zip(output_delta)
                    .map(|(neuron, &d)| d * neuron.weights[j])
                    .sum();
                *delta = back * h * (1.0 - h);
            }
        }
    }

    /// Descends along the deltas from the last `deltas` call.
    fn apply(&self, net: &mut Network, x: &[f64], rate: f64) {
        let hidden_acts = &self.acts.hidden;
        {
            let hidden = net.hidden_mut();
            for (neuron, &delta) in hidden.iter_mut().zip(&self.hidden_delta) {
                if delta == 0.0 {
                    continue;
                }
                neuron.threshold -= rate * delta;
                for (w, xi) in neuron.weights.iter_mut().zip(x) {
                    *w -= rate * delta * xi;
                }
            }
        }
        let outputs = net.output_mut();
        for span in &self.spans {
            let h = &hidden_acts[span.hidden.clone()];
            for (neuron, &delta) in outputs[span.output.clone()]
                .iter_mut()
                .zip(&self.output_delta[span.output.clone()])
            {
                if delta == 0.0 {
                    continue;
                }
                neuron.threshold -= rate * delta;
                for (w, hj) in neuron.weights.iter_mut().zip(h) {
                    *w -= rate * delta * hj;
                }
            }
        }
    }

    fn error(&mut self, net: &Network, example: &TrainingExample) -> f64 {
        net.forward_into(&example.x, example.word, &mut self.acts);
        masked_error(&self.acts.outputs, &example.desired)
    }
}

/// Analytic gradient of the example error with respect to every trainable
/// parameter, flattened in `Network::parameters` order.
pub fn gradient(net: &Network, example: &TrainingExample) -> Result<Vec<f64>> {
    example_shape(net, example)?;
    let mut ws = Workspace::for_net(net);
    ws.deltas(net, example);
    let mut grad = Vec::with_capacity(net.parameter_count());
    for &delta in &ws.hidden_delta {
        grad.push(delta);
        grad.extend(example.x.iter().map(|xi| delta * xi));
    }
    for span in net.spans() {
        let h = &ws.acts.hidden[span.hidden.clone()];
        for &delta in &ws.output_delta[span.output.clone()] {
            grad.push(delta);
            grad.extend(h.iter().map(|hj| delta * hj));
        }
    }
    Ok(grad)
}

fn example_shape(net: &Network, example: &TrainingExample) -> Result<()> {
    if example.x.len() != net.input_dim() {
        return Err(Error::dim(
            "input components",
            net.input_dim(),
            example.x.len(),
        ));
    }
    if example.desired.len() != net.output_dim() {
        return Err(Error::dim(
            "desired slots",
            net.output_dim(),
            example.desired.len(),
        ));
    }
    Ok(())
}

/// One online gradient-descent step on a single example.
pub fn backprop_step(net: &mut Network, example: &TrainingExample, rate: f64) -> Result<()> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::Config(format!(
            "learning rate must be positive, got {rate}"
        )));
    }
    example_shape(net, example)?;
    let mut ws = Workspace::for_net(net);
    ws.deltas(net, example);
    ws.apply(net, &example.x, rate);
    Ok(())
}

/// Per-example errors of `net` over `set`.
pub fn evaluate_errors(net: &Network, set: &[TrainingExample]) -> Result<Vec<f64>> {
    let mut ws = Workspace::for_net(net);
    set.iter()
        .map(|ex| {
            example_shape(net, ex)?;
            Ok(ws.error(net, ex))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub success: bool,
    pub iterations_used: u64,
    pub final_errors: Vec<f64>,
    pub shake_count: u64,
}

impl TrainReport {
    pub fn max_error(&self) -> f64 {
        self.final_errors.iter().copied().fold(0.0, f64::max)
    }
}

/// What the training loop just did in one epoch.
#[derive(Debug)]
pub struct EpochInfo<'a> {
    pub epoch: u64,
    pub rate: f64,
    /// Example indices in the order they were presented.
    pub order: &'a [usize],
    /// Largest per-example error measured before the epoch's updates.
    pub max_error: f64,
    pub shaken: bool,
}

/// RNG driving example permutations and shaking for a run seeded with
/// `seed`. Distinct from the stream used for initialisation.
pub fn loop_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// RNG used by `init_network` for a run seeded with `seed`.
pub fn init_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn train(
    net: Network,
    set: &[TrainingExample],
    config: &TrainConfig,
) -> Result<(Network, TrainReport)> {
    train_observed(net, set, config, |_| {})
}

/// Same as [`train`], reporting every epoch to `observer`.
pub fn train_observed(
    mut net: Network,
    set: &[TrainingExample],
    config: &TrainConfig,
    mut observer: impl FnMut(&EpochInfo<'_>),
) -> Result<(Network, TrainReport)> {
    if set.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    config.validate()?;
    for example in set {
        example.check(&net)?;
    }

    let mut rng = loop_rng(config.seed);
    let mut ws = Workspace::for_net(&net);
    let mut order: Vec<usize> = (0..set.len()).collect();
    let mut errors = vec![0.0; set.len()];
    let mut best = f64::INFINITY;
    let mut stagnant = 0;
    let mut shake_count = 0;

    for epoch in 0..config.max_iterations {
        for (e, ex) in errors.iter_mut().zip(set) {
            *e = ws.error(&net, ex);
        }
        let max_error = errors.iter().copied().fold(0.0, f64::max);
        if max_error <= config.target_error {
            return Ok((
                net,
                TrainReport {
                    success: true,
                    iterations_used: epoch,
                    final_errors: errors,
                    shake_count,
                },
            ));
        }

        let mut shaken = false;
        if max_error < best {
            best = max_error;
            stagnant = 0;
        } else {
            stagnant += 1;
            if stagnant >= config.shake_patience {
                shake(&mut net, config.shake_amplitude, &mut rng);
                shake_count += 1;
                shaken = true;
                stagnant = 0;
                best = f64::INFINITY;
            }
        }

        let rate = learning_rate(config, epoch);
        order.shuffle(&mut rng);
        for &i in &order {
            let ex = &set[i];
            ws.deltas(&net, ex);
            ws.apply(&mut net, &ex.x, rate);
        }
        observer(&EpochInfo {
            epoch,
            rate,
            order: &order,
            max_error,
            shaken,
        });
    }

    let final_errors = evaluate_errors(&net, set)?;
    let success = final_errors.iter().all(|&e| e <= config.target_error);
    Ok((
        net,
        TrainReport {
            success,
            iterations_used: config.max_iterations,
            final_errors,
            shake_count,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::xor_dataset;
    use crate::network::Apartment;

    fn xor_net(seed: u64) -> Network {
        let topology = ApartmentTopology::uniform(2, 2, 4, 1).unwrap();
        init_network(topology, &mut init_rng(seed))
    }

    #[test]
    fn learning_rate_follows_schedule() {
        let config = TrainConfig {
            decay_period: 100,
            ..TrainConfig::default()
        };
        assert_eq!(learning_rate(&config, 0), 0.5);
        assert_eq!(learning_rate(&config, 99), 0.5);
        assert_eq!(learning_rate(&config, 100), 0.25);
        assert_eq!(learning_rate(&config, 250), 0.5 / 3.0);
        let rgb = TrainConfig {
            c0: 0.005,
            ..TrainConfig::default()
        };
        assert_eq!(learning_rate(&rgb, 0), 0.005);
    }

    #[test]
    fn example_error_ignores_nulls() {
        let e = example_error(&[0.96, 0.45], &[Some(1.0), None]).unwrap();
        assert!((e - 0.0008).abs() < 1e-12);
        assert_eq!(example_error(&[0.3, 0.9], &[None, None]).unwrap(), 0.0);
        assert_eq!(
            example_error(&[0.3, 0.9], &[Some(0.3), Some(0.9)]).unwrap(),
            0.0
        );
        assert!(matches!(
            example_error(&[0.3], &[Some(0.3), None]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn init_respects_bound() {
        // Three inputs plus the threshold: nd = 4.
        let topology = ApartmentTopology::new(3, vec![Apartment::new(1, 5, 2)]).unwrap();
        let net = init_network(topology, &mut init_rng(9));
        for neuron in net.hidden_neurons() {
            assert_eq!(neuron.word_weight(), Some(1));
            assert!(neuron.threshold.abs() <= 0.5);
            assert!(neuron.weights.iter().all(|w| w.abs() <= 0.5));
        }
        for neuron in net.output_neurons() {
            let bound = 2.0 / 6.0;
            assert!(neuron.threshold.abs() <= bound);
            assert!(neuron.weights.iter().all(|w| w.abs() <= bound));
        }
    }

    #[test]
    fn init_is_seeded() {
        assert_eq!(xor_net(3), xor_net(3));
        assert_ne!(xor_net(1).parameters(), xor_net(2).parameters());
    }

    #[test]
    fn shake_with_zero_amplitude_is_identity() {
        let mut net = xor_net(4);
        let before = net.clone();
        shake(&mut net, 0.0, &mut loop_rng(4));
        assert_eq!(net, before);
    }

    #[test]
    fn shake_is_bounded_and_deterministic() {
        let before = xor_net(4);
        let mut a = before.clone();
        let mut b = before.clone();
        shake(&mut a, 0.1, &mut loop_rng(8));
        shake(&mut b, 0.1, &mut loop_rng(8));
        assert_eq!(a, b);
        assert_ne!(a, before);
        for (p, q) in a.parameters().iter().zip(before.parameters()) {
            assert!((p - q).abs() <= 0.1);
        }
        for (n, m) in a.hidden_neurons().iter().zip(before.hidden_neurons()) {
            assert_eq!(n.word_weight(), m.word_weight());
        }
    }

    #[test]
    fn step_on_matched_targets_is_a_no_op() {
        let mut net = xor_net(5);
        let x = vec![1.0, 0.0];
        let outputs = net.forward(&x, WordId::NONE).unwrap();
        let desired = outputs.iter().map(|&o| Some(o)).collect();
        let example = TrainingExample::new(x, 0, desired, Polarity::Positive);
        let before = net.clone();
        backprop_step(&mut net, &example, 0.5).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn step_leaves_other_apartment_untouched() {
        let mut net = xor_net(6);
        let before = net.clone();
        let example =
            TrainingExample::new(vec![0.0, 1.0], 1, vec![Some(0.0), None], Polarity::Negative);
        backprop_step(&mut net, &example, 0.5).unwrap();
        let span = &net.spans()[1];
        assert_eq!(
            net.hidden_neurons()[span.hidden.clone()],
            before.hidden_neurons()[span.hidden.clone()]
        );
        assert_eq!(
            net.output_neurons()[span.output.clone()],
            before.output_neurons()[span.output.clone()]
        );
        assert_ne!(net, before);
    }

    #[test]
    fn step_rejects_mismatched_example() {
        let mut net = xor_net(6);
        let example = TrainingExample::new(vec![0.0], 1, vec![Some(0.0), None], Polarity::Negative);
        assert!(matches!(
            backprop_step(&mut net, &example, 0.5),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn xor_trains_to_target() {
        let ds = xor_dataset();
        let config = TrainConfig::default();
        let (net, report) = train(xor_net(0), &ds.examples, &config).unwrap();
        assert!(report.success);
        assert_eq!(report.final_errors.len(), 8);
        assert!(report.final_errors.iter().all(|&e| e <= 0.001));
        assert_eq!(
            report.final_errors,
            evaluate_errors(&net, &ds.examples).unwrap()
        );
    }

    #[test]
    fn zero_iterations_return_the_input_net() {
        let ds = xor_dataset();
        let config = TrainConfig {
            max_iterations: 0,
            ..TrainConfig::default()
        };
        let start = xor_net(2);
        let (net, report) = train(start.clone(), &ds.examples, &config).unwrap();
        assert!(!report.success);
        assert_eq!(report.iterations_used, 0);
        assert_eq!(net, start);
    }

    #[test]
    fn satisfied_set_succeeds_immediately() {
        let start = xor_net(7);
        let set: Vec<TrainingExample> = xor_dataset()
            .examples
            .into_iter()
            .map(|ex| {
                let outputs = start.forward(&ex.x, ex.word).unwrap();
                let desired = outputs.into_iter().map(Some).collect();
                TrainingExample::new(ex.x, ex.word, desired, ex.polarity)
            })
            .collect();
        let (net, report) = train(start.clone(), &set, &TrainConfig::default()).unwrap();
        assert!(report.success);
        assert_eq!(report.iterations_used, 0);
        assert_eq!(net, start);
    }

    #[test]
    fn empty_set_is_an_error() {
        assert!(matches!(
            train(xor_net(0), &[], &TrainConfig::default()),
            Err(Error::EmptyTrainingSet)
        ));
    }

    #[test]
    fn config_parses_and_overlays() {
        let config = TrainConfig::from_toml_str("c0 = 0.25\nseed = 9\n").unwrap();
        assert_eq!(config.c0, 0.25);
        assert_eq!(config.seed, 9);
        assert_eq!(config.decay_period, TrainConfig::default().decay_period);

        let base = TrainConfig {
            c0: 0.005,
            target_error: 0.1,
            ..TrainConfig::default()
        };
        let merged = base.overlay_toml_str("seed = 3").unwrap();
        assert_eq!(merged.c0, 0.005);
        assert_eq!(merged.target_error, 0.1);
        assert_eq!(merged.seed, 3);

        let text = base.to_toml_string();
        assert_eq!(TrainConfig::from_toml_str(&text).unwrap(), base);
    }

    #[test]
    fn config_rejects_bad_values() {
        for text in [
            "c0 = 0.0",
            "decay_period = 0",
            "target_error = -1.0",
            "shake_amplitude = -0.1",
            "momentum = 0.9",
            "c0 = \"fast\"",
        ] {
            assert!(
                matches!(TrainConfig::from_toml_str(text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn config_file_io() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.toml");
        std::fs::write(&path, "max_iterations = 12\n").unwrap();
        assert_eq!(TrainConfig::load(&path).unwrap().max_iterations, 12);
        assert!(matches!(
            TrainConfig::load(dir.path().join("missing.toml")),
            Err(Error::Io { .. })
        ));
    }
}
