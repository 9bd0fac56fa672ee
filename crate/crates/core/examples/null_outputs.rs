//! Where do outputs with no desired value end up after training? Prints the
//! share below 0.5 and a text histogram of the per-example maxima.
//!
//!     cargo run --release --example null_outputs -- [xor|rgb] [seed]

use langbp::experiments::{null_output_stats, train_seeded, Study, DEFAULT_BINS};

fn main() -> langbp::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "xor".to_string());
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let Some(study) = Study::by_name(&name) else {
        eprintln!("unknown study {name:?}; use xor or rgb");
        std::process::exit(2);
    };

    let (net, report) = train_seeded(&study.topology, &study.dataset, &study.config, seed)?;
    if !report.success {
        println!("seed {seed} did not converge; statistics describe the partial fit");
    }
    let stats = null_output_stats(&net, &study.dataset, DEFAULT_BINS)?;
    println!(
        "{}: {:.1}% of null-slot outputs below 0.5, largest {:.3}",
        study.name,
        100.0 * stats.fraction_below_half,
        stats.max_value
    );
    for bin in stats.histogram.iter().filter(|b| b.probability > 0.0) {
        let bar = "#".repeat((bin.probability * 60.0).round() as usize);
        println!(
            "[{:.2}, {:.2})  {:>6.3}  {bar}",
            bin.bin_lower, bin.bin_upper, bin.probability
        );
    }
    Ok(())
}
