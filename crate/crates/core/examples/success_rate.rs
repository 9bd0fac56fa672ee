//! Repeats training over consecutive seeds and summarizes how often it
//! converges and how often the trained net generalizes to word-less input.
//!
//!     cargo run --release --example success_rate -- [xor|xor-complete|rgb] [runs]

use langbp::experiments::Study;

fn main() -> langbp::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "xor".to_string());
    let runs = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);
    let Some(study) = Study::by_name(&name) else {
        eprintln!("unknown study {name:?}");
        std::process::exit(2);
    };

    let report = study.success_rate(runs)?;
    let epochs: Vec<u64> = report
        .per_run
        .iter()
        .filter(|r| r.success)
        .map(|r| r.iterations)
        .collect();
    let mean = epochs.iter().sum::<u64>() as f64 / epochs.len().max(1) as f64;
    println!(
        "{}: {}/{} runs converged",
        study.name, report.successes, report.runs
    );
    println!("mean epochs to converge: {mean:.0}");
    println!(
        "word-less generalization among converged runs: {:.1}%",
        100.0 * report.generalization_pass_rate
    );
    if let Some(stats) = &report.null_output_stats {
        println!(
            "null-slot outputs below 0.5: {:.1}%",
            100.0 * stats.fraction_below_half
        );
    }
    Ok(())
}
