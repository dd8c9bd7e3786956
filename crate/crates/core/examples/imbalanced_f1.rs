//! Minority-class F1 on an imbalanced two-class problem with a quarter of
//! each training fold, averaged over a few seeds.
//!
//! cargo run --release --example imbalanced_f1 [seeds]

use s2sl::datasets::gen_gaussian_two_class;
use s2sl::evalharness::{run_experiment, HarnessConfig, Method, ProportionSpec};
use s2sl::numkit::RngStream;

fn main() -> s2sl::Result<()> {
    let seeds: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(3);
    let quarter = ProportionSpec::new(1)?;
    let mut totals = [0.0; 2];
    for seed in 0..seeds {
        let ds = gen_gaussian_two_class(13, 127, 71, 1.0, &mut RngStream::derive(seed, &[2]))?;
        let cfg = HarnessConfig {
            task: "imbalanced".into(),
            proportions: vec![quarter],
            seed,
            ..HarnessConfig::default()
        };
        let report = run_experiment(&ds, &cfg)?;
        print!("seed {seed}:");
        for (slot, method) in Method::BOTH.into_iter().enumerate() {
            let s = report.summary(method, quarter).expect("method was run");
            totals[slot] += s.mean_f1;
            print!("  {method} F1 {:.3} (sd {:.3})", s.mean_f1, s.std_f1);
        }
        println!(
            "  [minority class {}]",
            ds.class_names[report.positive_class]
        );
    }
    for (slot, method) in Method::BOTH.into_iter().enumerate() {
        println!(
            "mean {method} F1 over {seeds} seeds: {:.3}",
            totals[slot] / seeds as f64
        );
    }
    Ok(())
}
