//! Invariants of the gated network and its training loop, written as
//! proptest checks so both the property suite and the acceptance suite can
//! drive them.

use langbp::datasets::xor_dataset;
use langbp::network::{ApartmentTopology, Network, WordId};
use langbp::training::{
    backprop_step, gradient, init_network, init_rng, learning_rate, shake, train, train_observed,
    TrainConfig, TrainingExample,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseResult, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{apartment_parameter_ranges, random_example, random_network, random_topology};

fn fixture(seed: u64) -> (Network, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = random_network(random_topology(&mut rng), 2.0, &mut rng);
    (net, rng)
}

/// Example for apartment `k` shaped like the generated datasets: only the
/// slots of that apartment may be specified.
fn example_for(net: &Network, k: usize, rng: &mut ChaCha8Rng) -> TrainingExample {
    let mut example = random_example(net, rng);
    let span = &net.spans()[k];
    example.word = span.word;
    for (slot, d) in example.desired.iter_mut().enumerate() {
        if !span.output.contains(&slot) {
            *d = None;
        }
    }
    let first = span.output.start;
    example.desired[first].get_or_insert(0.5);
    example
}

fn params_of(net: &Network, k: usize) -> Vec<f64> {
    let all = net.parameters();
    apartment_parameter_ranges(net, k)
        .into_iter()
        .flat_map(|r| all[r].to_vec())
        .collect()
}

/// Presenting the word of apartment `k` silences every other apartment's
/// hidden units exactly, and a step on such an example leaves every other
/// apartment's parameters untouched. An unowned word silences them all.
pub fn gating(seed: u64) -> TestCaseResult {
    let (net, mut rng) = fixture(seed);
    let k = rng.gen_range(0..net.spans().len());
    let example = example_for(&net, k, &mut rng);
    let acts = net.activations(&example.x, example.word).unwrap();
    let mut stepped = net.clone();
    backprop_step(&mut stepped, &example, rng.gen_range(0.01..2.0)).unwrap();
    for (j, span) in net.spans().iter().enumerate() {
        if j == k {
            continue;
        }
        prop_assert!(acts.hidden[span.hidden.clone()].iter().all(|&h| h == 0.0));
        prop_assert_eq!(params_of(&stepped, j), params_of(&net, j));
    }

    let unowned = net.activations(&example.x, WordId::new(99)).unwrap();
    prop_assert!(unowned.hidden.iter().all(|&h| h == 0.0));
    Ok(())
}

/// A step on an example whose specified slots already equal the outputs
/// changes nothing, and null slots never feed back into the gradient.
pub fn null_neutrality(seed: u64) -> TestCaseResult {
    let (net, mut rng) = fixture(seed);
    let mut example = random_example(&net, &mut rng);
    // Moving the output neurons of null slots must not change the hidden
    // gradient.
    let outputs = net.forward(&example.x, example.word).unwrap();
    let grad = gradient(&net, &example).unwrap();

    let mut shifted = net.clone();
    let mut flat = shifted.parameters();
    let hidden_len: usize = net
        .hidden_neurons()
        .iter()
        .map(|n| n.weights.len() + 1)
        .sum();
    let mut offset = hidden_len;
    for (slot, neuron) in net.output_neurons().iter().enumerate() {
        let len = neuron.weights.len() + 1;
        if example.desired[slot].is_none() {
            for p in &mut flat[offset..offset + len] {
                *p += rng.gen_range(-3.0..3.0);
            }
        }
        offset += len;
    }
    shifted.set_parameters(&flat).unwrap();
    let shifted_grad = gradient(&shifted, &example).unwrap();
    let mut offset = hidden_len;
    for (slot, neuron) in net.output_neurons().iter().enumerate() {
        let len = neuron.weights.len() + 1;
        if example.desired[slot].is_none() {
            prop_assert!(grad[offset..offset + len].iter().all(|&g| g == 0.0));
        }
        offset += len;
    }
    prop_assert_eq!(&shifted_grad[..hidden_len], &grad[..hidden_len]);

    for (slot, d) in example.desired.iter_mut().enumerate() {
        if d.is_some() {
            *d = Some(outputs[slot]);
        }
    }
    let mut stepped = net.clone();
    backprop_step(&mut stepped, &example, 1.0).unwrap();
    prop_assert_eq!(stepped, net);
    Ok(())
}

/// Word weights survive training steps and shaking unchanged.
pub fn word_weight_constancy(seed: u64) -> TestCaseResult {
    let (mut net, mut rng) = fixture(seed);
    let words = |n: &Network| -> Vec<Option<u32>> {
        n.hidden_neurons().iter().map(|h| h.word_weight()).collect()
    };
    let before = words(&net);
    for _ in 0..20 {
        let example = random_example(&net, &mut rng);
        backprop_step(&mut net, &example, 0.5).unwrap();
    }
    shake(&mut net, 1.0, &mut rng);
    prop_assert_eq!(words(&net), before);
    for span in net.spans() {
        for h in &net.hidden_neurons()[span.hidden.clone()] {
            prop_assert_eq!(h.word_weight(), Some(span.word.value()));
        }
    }
    Ok(())
}

/// Repeated training on apartment `k` moves only apartment `k`.
pub fn privileged_channels(seed: u64) -> TestCaseResult {
    let (mut net, mut rng) = fixture(seed);
    let k = rng.gen_range(0..net.spans().len());
    let start = net.clone();
    for _ in 0..30 {
        let example = example_for(&net, k, &mut rng);
        backprop_step(&mut net, &example, 0.5).unwrap();
    }
    for j in 0..net.spans().len() {
        if j != k {
            prop_assert_eq!(params_of(&net, j), params_of(&start, j));
        }
    }
    Ok(())
}

/// Every epoch presents each example exactly once.
pub fn permutation_multiset(seed: u64) -> TestCaseResult {
    let set = xor_dataset().examples;
    let net = init_network(
        ApartmentTopology::uniform(2, 2, 2, 1).unwrap(),
        &mut init_rng(seed),
    );
    let config = TrainConfig {
        max_iterations: 30,
        seed,
        ..TrainConfig::default()
    };
    let mut orders = Vec::new();
    train_observed(net, &set, &config, |info| orders.push(info.order.to_vec())).unwrap();
    prop_assert!(!orders.is_empty());
    for mut order in orders {
        order.sort_unstable();
        prop_assert_eq!(order, (0..set.len()).collect::<Vec<_>>());
    }
    Ok(())
}

/// The rate is exactly `c0 / n` and never increases.
pub fn learning_rate_law(c0: f64, decay_period: u64, iteration: u64) -> TestCaseResult {
    let config = TrainConfig {
        c0,
        decay_period,
        ..TrainConfig::default()
    };
    let n = 1 + iteration / decay_period;
    prop_assert_eq!(learning_rate(&config, iteration), c0 / n as f64);
    prop_assert!(learning_rate(&config, iteration + 1) <= learning_rate(&config, iteration));
    Ok(())
}

/// Same network, data and seed give the same report and final network.
pub fn run_determinism(seed: u64) -> TestCaseResult {
    let set = xor_dataset().examples;
    let topology = ApartmentTopology::uniform(2, 2, 3, 1).unwrap();
    let config = TrainConfig {
        max_iterations: 200,
        shake_patience: 20,
        seed,
        ..TrainConfig::default()
    };
    let run = || {
        train(
            init_network(topology.clone(), &mut init_rng(seed)),
            &set,
            &config,
        )
        .unwrap()
    };
    let (net_a, report_a) = run();
    let (net_b, report_b) = run();
    prop_assert_eq!(report_a, report_b);
    prop_assert_eq!(net_a, net_b);
    Ok(())
}

pub const CASES: u32 = 64;

fn check<S: Strategy>(strategy: S, test: impl Fn(S::Value) -> TestCaseResult) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let mut runner = TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

/// Runs every invariant and reports each outcome by name.
pub fn run_all() -> Vec<(&'static str, Result<(), String>)> {
    vec![
        ("gating", check(any::<u64>(), gating)),
        ("null neutrality", check(any::<u64>(), null_neutrality)),
        (
            "word-weight constancy",
            check(any::<u64>(), word_weight_constancy),
        ),
        (
            "privileged channels",
            check(any::<u64>(), privileged_channels),
        ),
        (
            "permutation multiset",
            check(any::<u64>(), permutation_multiset),
        ),
        (
            "learning-rate law",
            check(
                (1e-4..10.0f64, 1..10_000u64, 0..1_000_000u64),
                |(c0, d, i)| learning_rate_law(c0, d, i),
            ),
        ),
        ("run determinism", check(0..1_000u64, run_determinism)),
    ]
}
