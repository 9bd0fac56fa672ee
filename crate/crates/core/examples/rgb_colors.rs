//! Learns the eight RGB cube vertices as eight word-gated apartments, then
//! shows how the net responds to each pure vertex when no word is given.
//!
//!     cargo run --release --example rgb_colors -- [seed]

use langbp::datasets::{rgb_vertex_cases, RGB_VERTICES};
use langbp::experiments::{train_seeded, wordless_generalization, Study};
use langbp::network::WordId;

fn main() -> langbp::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let study = Study::rgb();
    println!(
        "{} examples, {} apartments x {} hidden",
        study.dataset.len(),
        study.topology.apartments().len(),
        study.topology.apartments()[0].hidden_count
    );
    let (net, report) = train_seeded(&study.topology, &study.dataset, &study.config, seed)?;
    println!(
        "success={} after {} epochs, max error {:.4}\n",
        report.success,
        report.iterations_used,
        report.max_error()
    );

    print!("{:>15}", "input");
    for (name, _) in RGB_VERTICES {
        print!(" {:>7}", name);
    }
    println!();
    for case in rgb_vertex_cases() {
        let o = net.forward(&case.x, WordId::NONE)?;
        print!(
            "{:>15}",
            format!("{:?}", case.x.iter().map(|v| *v as u8).collect::<Vec<_>>())
        );
        for v in o {
            print!(" {v:>7.2}");
        }
        println!();
    }

    let generalization = wordless_generalization(&net, &rgb_vertex_cases())?;
    println!("\nevery vertex has its own winner: {}", generalization.pass);
    Ok(())
}
