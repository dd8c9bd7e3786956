//! Cross-validated comparison of the paired-sample learner and a plain MLP
//! as the training data shrinks to 3/4, 1/2 and 1/4 of each fold.
//!
//! cargo run --release --example low_resource_bench [seed]

use s2sl::datasets::gen_gaussian_two_class;
use s2sl::evalharness::{run_experiment, HarnessConfig, HiddenSpec};
use s2sl::numkit::RngStream;

fn main() -> s2sl::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let ds = gen_gaussian_two_class(13, 60, 60, 1.0, &mut RngStream::derive(seed, &[1]))?;
    let cfg = HarnessConfig {
        task: "balanced".into(),
        hidden: HiddenSpec::Fixed(16),
        seed,
        ..HarnessConfig::default()
    };
    let report = run_experiment(&ds, &cfg)?;
    print!("{}", report.to_table());
    Ok(())
}
