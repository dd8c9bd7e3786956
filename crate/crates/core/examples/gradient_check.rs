//! Verifies backpropagation against central finite differences for both
//! output/loss pairings, then shows what a broken gradient looks like.
//!
//! cargo run --example gradient_check

use s2sl::nnet::{finite_diff_check, finite_diff_check_with, init_network, NetConfig};
use s2sl::numkit::{Matrix, RngStream};

fn main() -> s2sl::Result<()> {
    let mut rng = RngStream::new(5);
    for cfg in [NetConfig::s2s(3, 2, 5), NetConfig::baseline(3, 2, 5)] {
        let label = format!("{}+{}", cfg.output_activation, cfg.loss);
        let (n_in, n_out) = (cfg.input_dim, cfg.output_dim);
        let net = init_network(cfg, &mut rng)?;
        let x = Matrix::from_fn(6, n_in, |_, _| rng.uniform(-1.0, 1.0));
        let t = Matrix::from_fn(6, n_out, |r, c| f64::from(u8::from((r + c) % n_out == 0)));
        let report = finite_diff_check(&net, &x, &t)?;
        println!(
            "{label}: max relative error {:.2e} over {} parameters",
            report.max_relative_error, report.parameters_checked
        );

        let broken = finite_diff_check_with(&net, &x, &t, |n, x, t| {
            let mut g = n.gradient(x, t)?;
            g.b1.iter_mut().for_each(|v| *v *= -1.0);
            Ok(g)
        })?;
        if let Some(at) = broken.worst {
            println!(
                "  with a sign-flipped b1 gradient: {:.2e} at {at}",
                broken.max_relative_error
            );
        }
    }
    Ok(())
}
