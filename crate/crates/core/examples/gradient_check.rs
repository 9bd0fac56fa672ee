//! Compares the backpropagated gradient with central finite differences on
//! a small net whose second apartment is silenced by the presented word.
//!
//!     cargo run --example gradient_check

use langbp::network::{Apartment, ApartmentTopology};
use langbp::training::{
    example_error, gradient, init_network, init_rng, Polarity, TrainingExample,
};
use langbp::Network;

fn loss(net: &Network, ex: &TrainingExample) -> f64 {
    let o = net.forward(&ex.x, ex.word).unwrap();
    example_error(&o, &ex.desired).unwrap()
}

fn main() -> langbp::Result<()> {
    let topology =
        ApartmentTopology::new(3, vec![Apartment::new(1, 3, 2), Apartment::new(2, 2, 1)])?;
    let net = init_network(topology, &mut init_rng(5));
    let ex = TrainingExample::new(
        vec![0.2, 0.9, 0.4],
        1,
        vec![Some(1.0), None, None],
        Polarity::Positive,
    );

    let analytic = gradient(&net, &ex)?;
    let h = 1e-6;
    let params = net.parameters();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    println!("  #    analytic     numeric");
    for (i, a) in analytic.iter().enumerate() {
        let mut p = params.clone();
        p[i] += h;
        probe.set_parameters(&p)?;
        let plus = loss(&probe, &ex);
        p[i] -= 2.0 * h;
        probe.set_parameters(&p)?;
        let minus = loss(&probe, &ex);
        let numeric = (plus - minus) / (2.0 * h);
        println!("{i:>3}  {a:>11.3e}  {numeric:>11.3e}");
        worst = worst.max((a - numeric).abs());
    }
    println!("largest absolute difference {worst:.2e}");
    Ok(())
}
