//! Trains a paired-input network, saves it in the plain-text model format,
//! loads it back and checks the predictions are unchanged.
//!
//! cargo run --example model_roundtrip

use s2sl::datasets::gen_gaussian_two_class;
use s2sl::evalharness::{fit_method, HarnessConfig, Method};
use s2sl::nnet::{write_model, Network};
use s2sl::numkit::RngStream;

fn main() -> s2sl::Result<()> {
    let mut rng = RngStream::new(3);
    let ds = gen_gaussian_two_class(2, 10, 10, 2.0, &mut rng)?;
    let cfg = HarnessConfig {
        epochs: 50,
        references: 4,
        ..HarnessConfig::default()
    };
    let model = fit_method(&ds, Method::S2sl, 3, &cfg, &mut rng)?;
    let net = model.network();

    let mut text = Vec::new();
    write_model(net, &mut text).map_err(|e| s2sl::Error::Data(e.to_string()))?;
    println!("{}", String::from_utf8_lossy(&text));

    let path = std::env::temp_dir().join("s2sl-example-model.txt");
    net.save(&path)?;
    let loaded = Network::load(&path)?;
    let x: Vec<f64> = ds
        .features
        .row(0)
        .iter()
        .chain(ds.features.row(1))
        .copied()
        .collect();
    assert_eq!(net.forward(&x)?, loaded.forward(&x)?);
    println!("reloaded {} bit-identically", path.display());
    Ok(())
}
