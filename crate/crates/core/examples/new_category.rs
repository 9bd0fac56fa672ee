//! Adds a third word to a trained XOR net. Only the new apartment learns;
//! the two existing categories keep their exact parameters and answers.
//!
//!     cargo run --example new_category

use langbp::datasets::xor_dataset;
use langbp::experiments::{train_seeded, Study};
use langbp::network::WordId;
use langbp::training::{init_rng, train, Polarity, TrainConfig, TrainingExample};

fn main() -> langbp::Result<()> {
    let study = Study::xor();
    let (net, _) = train_seeded(&study.topology, &xor_dataset(), &study.config, 0)?;

    // Word 3 names "both inputs on".
    let grown = net.allocate_apartment(WordId::new(3), 4, 1, &mut init_rng(42))?;
    let inputs = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
    let lessons: Vec<TrainingExample> = inputs
        .iter()
        .map(|x| {
            let on = x == &[1.0, 1.0];
            TrainingExample::new(
                x.to_vec(),
                3,
                vec![None, None, Some(if on { 1.0 } else { 0.0 })],
                if on {
                    Polarity::Positive
                } else {
                    Polarity::Negative
                },
            )
        })
        .collect();
    let (grown, report) = train(grown, &lessons, &TrainConfig::default())?;
    println!(
        "new category learned: {} ({} epochs)",
        report.success, report.iterations_used
    );

    let untouched = net
        .hidden_neurons()
        .iter()
        .zip(grown.hidden_neurons())
        .all(|(a, b)| a == b)
        && net
            .output_neurons()
            .iter()
            .zip(grown.output_neurons())
            .all(|(a, b)| a == b);
    println!(
        "{} parameters before, {} after; old apartments untouched: {untouched}",
        net.parameter_count(),
        grown.parameter_count()
    );

    for x in inputs {
        let o = grown.forward(&x, WordId::NONE)?;
        println!(
            "({}, {}) -> {:.3} {:.3} {:.3}",
            x[0], x[1], o[0], o[1], o[2]
        );
    }
    Ok(())
}
