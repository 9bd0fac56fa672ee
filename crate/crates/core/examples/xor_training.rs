//! Trains the two-apartment XOR network and prints the training set next to
//! the learned outputs, followed by the same inputs presented without a
//! word.
//!
//!     cargo run --example xor_training -- [seed]

use langbp::datasets::{xor_dataset, xor_wordless_cases};
use langbp::network::{ApartmentTopology, WordId};
use langbp::training::{example_error, init_network, init_rng, train, TrainConfig};

fn show(d: Option<f64>) -> String {
    d.map_or("null".to_string(), |v| format!("{v}"))
}

fn main() -> langbp::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let ds = xor_dataset();
    let topology = ApartmentTopology::uniform(2, 2, 4, 1)?;
    let config = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    let net = init_network(topology, &mut init_rng(seed));
    let (net, report) = train(net, &ds.examples, &config)?;
    println!(
        "seed {seed}: success={} after {} epochs, {} shakes",
        report.success, report.iterations_used, report.shake_count
    );

    println!("\nx1 x2 word   d1    o1     d2    o2     error");
    for ex in &ds.examples {
        let o = net.forward(&ex.x, ex.word)?;
        println!(
            "{:>2} {:>2} {:>4}   {:<5} {:.3}  {:<5} {:.3}  {:.5}",
            ex.x[0],
            ex.x[1],
            ex.word,
            show(ex.desired[0]),
            o[0],
            show(ex.desired[1]),
            o[1],
            example_error(&o, &ex.desired)?
        );
    }

    println!("\nwithout a word:");
    for case in xor_wordless_cases() {
        let o = net.forward(&case.x, WordId::NONE)?;
        println!(
            "{:>2} {:>2}  o1 {:.3}  o2 {:.3}  (expected apartment {})",
            case.x[0],
            case.x[1],
            o[0],
            o[1],
            case.expected_apartment + 1
        );
    }
    Ok(())
}
