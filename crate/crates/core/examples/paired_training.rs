//! Expands a small two-class dataset into every ordered pair of samples and
//! trains a paired-input network on it.
//!
//! cargo run --example paired_training

use s2sl::datasets::{gen_gaussian_two_class, Normalizer};
use s2sl::nnet::{init_network, train, NetConfig};
use s2sl::numkit::RngStream;
use s2sl::s2s::{build_train_pairs, LabelCodec};

fn main() -> s2sl::Result<()> {
    let mut rng = RngStream::new(7);
    let raw = gen_gaussian_two_class(4, 8, 5, 1.5, &mut rng)?;
    let ds = Normalizer::fit(&raw)?.apply(&raw)?;

    let codec = LabelCodec::new(ds.num_classes())?;
    let pairs = build_train_pairs(&ds, &codec)?;
    println!(
        "{} samples -> {} pairs of width {}",
        ds.len(),
        pairs.len(),
        pairs.inputs.cols()
    );
    for (row, origin) in pairs.targets.iter_rows().zip(&pairs.provenance).take(3) {
        println!("  pair {origin:?} target {row:?}");
    }

    let mut cfg = NetConfig::s2s(ds.dim(), ds.num_classes(), 8);
    cfg.epochs = 100;
    let net = init_network(cfg, &mut rng)?;
    let (net, report) = train(net, &pairs.inputs, &pairs.targets, &mut rng)?;
    println!(
        "loss {:.4} after epoch 1, {:.4} after epoch {}",
        report.loss_history[0], report.final_loss, report.epochs_run
    );
    println!("trained {} parameters", net.params.len());
    Ok(())
}
