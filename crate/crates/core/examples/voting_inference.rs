//! Classifies held-out samples by pairing each with a set of labelled
//! references and letting the pairings vote.
//!
//! cargo run --example voting_inference

use s2sl::datasets::{gen_gaussian_two_class, Normalizer};
use s2sl::evalharness::stratified_holdout;
use s2sl::nnet::{init_network, train, NetConfig};
use s2sl::numkit::RngStream;
use s2sl::s2s::{build_train_pairs, select_references, vote_decide, LabelCodec, ReferencePolicy};

fn main() -> s2sl::Result<()> {
    let mut rng = RngStream::new(21);
    let ds = gen_gaussian_two_class(6, 20, 20, 1.5, &mut rng)?;
    let (train_idx, test_idx) = stratified_holdout(&ds, 0.25, &mut rng)?;
    let norm = Normalizer::fit(&ds.subset(&train_idx))?;
    let train_set = norm.apply(&ds.subset(&train_idx))?;
    let test_set = norm.apply(&ds.subset(&test_idx))?;

    let codec = LabelCodec::new(2)?;
    let pairs = build_train_pairs(&train_set, &codec)?;
    let net = init_network(NetConfig::s2s(train_set.dim(), 2, 12), &mut rng)?;
    let (net, _) = train(net, &pairs.inputs, &pairs.targets, &mut rng)?;

    let refs = select_references(&train_set, ReferencePolicy::StratifiedRandom, 10, &mut rng)?;
    println!("references: training rows {:?}", refs.indices);

    let mut correct = 0;
    for (x, &truth) in test_set.features.iter_rows().zip(&test_set.labels) {
        let (winner, tally) = vote_decide(&net, x, &refs, &codec)?;
        correct += usize::from(winner == truth);
        println!(
            "truth {} predicted {}  votes {:?}  confidence [{:.2}, {:.2}]",
            test_set.class_names[truth],
            test_set.class_names[winner],
            tally.votes,
            tally.confidence[0],
            tally.confidence[1]
        );
    }
    println!("{correct}/{} correct", test_set.len());
    Ok(())
}
