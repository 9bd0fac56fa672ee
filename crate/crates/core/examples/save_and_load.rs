//! Writes a dataset and a trained model to disk, reads them back and checks
//! the reloaded model reproduces the original errors exactly.
//!
//!     cargo run --example save_and_load -- [directory]

use std::path::PathBuf;

use langbp::datasets::{load_dataset, save_dataset, xor_dataset};
use langbp::experiments::{train_seeded, Study};
use langbp::model::{load_model, save_model};
use langbp::training::evaluate_errors;

fn main() -> langbp::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);
    let data_path = dir.join("xor.csv");
    let model_path = dir.join("xor-model.json");

    save_dataset(&xor_dataset(), &data_path)?;
    let ds = load_dataset(&data_path)?;
    println!(
        "dataset {} ({} examples, sha256 {})",
        data_path.display(),
        ds.len(),
        ds.fingerprint()?
    );

    let study = Study::xor();
    let (net, _) = train_seeded(&study.topology, &ds, &study.config, 0)?;
    save_model(&net, &model_path)?;
    let reloaded = load_model(&model_path)?;
    println!("model {}", model_path.display());

    let before = evaluate_errors(&net, &ds.examples)?;
    let after = evaluate_errors(&reloaded, &ds.examples)?;
    println!("errors identical after reload: {}", before == after);
    Ok(())
}
