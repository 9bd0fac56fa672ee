#![allow(dead_code)]

pub mod dd;
pub mod props;

use dd::Dd;

use langbp::network::{Apartment, ApartmentTopology, Network, WordId};
use langbp::training::{example_error, Polarity, TrainingExample};
use rand::seq::SliceRandom;
use rand::Rng;

pub const FD_STEP: f64 = 1e-5;

/// Random topology with 1-3 apartments and random, distinct words.
pub fn random_topology<R: Rng>(rng: &mut R) -> ApartmentTopology {
    let input_dim = rng.gen_range(1..=4);
    let count = rng.gen_range(1..=3);
    let mut words: Vec<u32> = (1..=6).collect();
    words.shuffle(rng);
    let apartments = words[..count]
        .iter()
        .map(|&w| Apartment::new(w, rng.gen_range(1..=4), rng.gen_range(1..=3)))
        .collect();
    ApartmentTopology::new(input_dim, apartments).unwrap()
}

/// Network with every trainable parameter uniform in `[-scale, scale]`.
pub fn random_network<R: Rng>(topology: ApartmentTopology, scale: f64, rng: &mut R) -> Network {
    let mut net = Network::zeroed(topology);
    let params: Vec<f64> = (0..net.parameter_count())
        .map(|_| rng.gen_range(-scale..=scale))
        .collect();
    net.set_parameters(&params).unwrap();
    net
}

/// Word choice covering "no word", an owned word and an unowned word.
pub fn random_word<R: Rng>(net: &Network, rng: &mut R) -> WordId {
    let apartments = net.topology().apartments();
    match rng.gen_range(0..3) {
        0 => WordId::NONE,
        1 => apartments[rng.gen_range(0..apartments.len())].word,
        _ => WordId::new(7),
    }
}

/// Example with roughly 40% null slots and at least one specified slot.
pub fn random_example<R: Rng>(net: &Network, rng: &mut R) -> TrainingExample {
    let x = (0..net.input_dim())
        .map(|_| rng.gen_range(0.0..=1.0))
        .collect();
    let word = random_word(net, rng);
    let mut desired: Vec<Option<f64>> = (0..net.output_dim())
        .map(|_| rng.gen_bool(0.6).then(|| rng.gen_range(0.0..=1.0)))
        .collect();
    if desired.iter().all(Option::is_none) {
        let slot = rng.gen_range(0..desired.len());
        desired[slot] = Some(rng.gen_range(0.0..=1.0));
    }
    TrainingExample::new(x, word, desired, Polarity::Positive)
}

pub fn loss(net: &Network, example: &TrainingExample) -> f64 {
    let outputs = net.forward(&example.x, example.word).unwrap();
    example_error(&outputs, &example.desired).unwrap()
}

/// Example error evaluated in double-double precision straight from the
/// neuron parameters, independent of `Network::forward`.
pub fn loss_dd(net: &Network, params: &[Dd], example: &TrainingExample) -> Dd {
    let sigmoid = |z: Dd| Dd::ONE / (Dd::ONE + (-z).exp());
    let x: Vec<Dd> = example.x.iter().map(|&v| Dd::from(v)).collect();
    let mut cursor = 0;
    let mut take = |n: usize| {
        let slice = &params[cursor..cursor + n];
        cursor += n;
        slice
    };
    let mut hidden = Vec::new();
    for neuron in net.hidden_neurons() {
        let p = take(neuron.weights.len() + 1);
        let w_word = neuron.word_weight().unwrap();
        let word = example.word.value();
        if word != 0 && word != w_word {
            hidden.push(Dd::ZERO);
            continue;
        }
        let mut z = p[0] + Dd::from(w_word as f64);
        for (w, xi) in p[1..].iter().zip(&x) {
            z = z + *w * *xi;
        }
        hidden.push(sigmoid(z));
    }
    let mut total = Dd::ZERO;
    for span in net.spans() {
        let h = &hidden[span.hidden.clone()];
        for o in span.output.clone() {
            let p = take(h.len() + 1);
            let mut z = p[0];
            for (w, hj) in p[1..].iter().zip(h) {
                z = z + *w * *hj;
            }
            if let Some(d) = example.desired[o] {
                let diff = sigmoid(z) - Dd::from(d);
                total = total + diff * diff;
            }
        }
    }
    total * Dd::from(0.5)
}

/// Central finite differences of the example error over every parameter,
/// with the loss evaluated in double-double precision.
pub fn numeric_gradient(net: &Network, example: &TrainingExample, step: f64) -> Vec<f64> {
    let base: Vec<Dd> = net.parameters().into_iter().map(Dd::from).collect();
    let h = Dd::from(step);
    (0..base.len())
        .map(|i| {
            let mut params = base.clone();
            params[i] = base[i] + h;
            let plus = loss_dd(net, &params, example);
            params[i] = base[i] - h;
            let minus = loss_dd(net, &params, example);
            ((plus - minus) / (h + h)).to_f64()
        })
        .collect()
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Index ranges in `Network::parameters` order covering the hidden and
/// output parameters of apartment `k`.
pub fn apartment_parameter_ranges(net: &Network, k: usize) -> Vec<std::ops::Range<usize>> {
    let mut ranges = Vec::new();
    let mut offset = 0;
    let span = &net.spans()[k];
    for (i, n) in net.hidden_neurons().iter().enumerate() {
        let len = n.weights.len() + 1;
        if span.hidden.contains(&i) {
            ranges.push(offset..offset + len);
        }
        offset += len;
    }
    for (i, n) in net.output_neurons().iter().enumerate() {
        let len = n.weights.len() + 1;
        if span.output.contains(&i) {
            ranges.push(offset..offset + len);
        }
        offset += len;
    }
    ranges
}

/// Outcome of comparing analytic and numeric gradients over many random
/// (network, example) pairs.
#[derive(Debug, Default)]
pub struct OracleSummary {
    pub pairs: usize,
    pub pairs_with_null_slot: usize,
    pub pairs_with_inhibition: usize,
    pub compared: usize,
    pub worst_relative_error: f64,
}

/// Compares gradients wherever the analytic magnitude exceeds `floor`.
pub fn gradient_oracle(pairs: usize, seed: u64, floor: f64) -> OracleSummary {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut summary = OracleSummary {
        pairs,
        ..OracleSummary::default()
    };
    for _ in 0..pairs {
        let net = random_network(random_topology(&mut rng), 1.5, &mut rng);
        let example = random_example(&net, &mut rng);
        if example.has_null_slot() {
            summary.pairs_with_null_slot += 1;
        }
        let apartments = net.topology().apartments();
        if apartments
            .iter()
            .any(|a| langbp::network::is_inhibited(example.word, a.word.value()))
        {
            summary.pairs_with_inhibition += 1;
        }
        let analytic = langbp::training::gradient(&net, &example).unwrap();
        let numeric = numeric_gradient(&net, &example, FD_STEP);
        for (a, n) in analytic.iter().zip(&numeric) {
            if a.abs() > floor {
                summary.worst_relative_error =
                    summary.worst_relative_error.max(relative_error(*a, *n));
                summary.compared += 1;
            }
        }
    }
    summary
}
