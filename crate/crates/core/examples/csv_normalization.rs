//! Round-trips a dataset through CSV and z-scores it with statistics fitted
//! on the training rows only.
//!
//! cargo run --example csv_normalization [features.csv]

use s2sl::datasets::{gen_gaussian_two_class, load_csv, write_csv, CsvOptions, Normalizer};
use s2sl::evalharness::stratified_holdout;
use s2sl::numkit::RngStream;

fn main() -> s2sl::Result<()> {
    let dir = std::env::temp_dir().join("s2sl-csv-example");
    std::fs::create_dir_all(&dir).map_err(|e| s2sl::Error::Data(e.to_string()))?;
    let path = match std::env::args().nth(1) {
        Some(p) => p.into(),
        None => {
            let p = dir.join("features.csv");
            write_csv(
                &gen_gaussian_two_class(3, 6, 4, 2.0, &mut RngStream::new(1))?,
                &p,
            )?;
            p
        }
    };
    let ds = load_csv(&path, &CsvOptions::default())?;
    println!(
        "{}: {} rows, d={}, classes {:?} with counts {:?}",
        path.display(),
        ds.len(),
        ds.dim(),
        ds.class_names,
        ds.class_counts()
    );

    let (train_idx, test_idx) = stratified_holdout(&ds, 0.3, &mut RngStream::new(2))?;
    let norm = Normalizer::fit(&ds.subset(&train_idx))?;
    println!("train mean {:.3?}", norm.mean);
    println!("train sd   {:.3?}", norm.stddev);
    let test = norm.apply(&ds.subset(&test_idx))?;
    for (row, &label) in test.features.iter_rows().zip(&test.labels) {
        println!("  {:>3}: {row:.3?}", test.class_names[label]);
    }
    Ok(())
}
