//! Asking a trained XOR net questions of the form "is this input in the
//! category named by this word?". A strong output on the word's apartment
//! affirms; the absence of any output signal negates.
//!
//!     cargo run --example zero_output

use langbp::datasets::xor_dataset;
use langbp::experiments::{train_seeded, verdict_for_word, Study};
use langbp::network::WordId;

fn main() -> langbp::Result<()> {
    let study = Study::xor();
    let (net, _) = train_seeded(&study.topology, &xor_dataset(), &study.config, 0)?;
    let names = ["equal", "different"];
    for x in [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]] {
        for word in [1, 2] {
            let verdict = verdict_for_word(&net, &x, WordId::new(word), 0.5)?;
            println!(
                "({}, {}) is {:<9} -> {:?}",
                x[0],
                x[1],
                names[word as usize - 1],
                verdict
            );
        }
    }
    Ok(())
}
