//! Feature datasets: CSV ingestion, z-score normalization and synthetic
//! two-class Gaussian data.
//!
//! CSV layout: comma-separated, no header unless requested, `d` real-valued
//! feature columns followed by one label token. Labels get ids in order of
//! first appearance. LF and CRLF line endings are accepted; blank lines are
//! skipped.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::numkit::{Matrix, RngStream};

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub name: String,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Matrix,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::shape(
                "Dataset::new",
                format!("{} feature rows", features.rows()),
                format!("{} labels", labels.len()),
            ));
        }
        if features.cols() == 0 {
            return Err(Error::Data(
                "dataset needs at least one feature column".into(),
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::Data(format!(
                "label id {bad} but only {} class names",
                class_names.len()
            )));
        }
        if !features.is_finite() {
            return Err(Error::Data("dataset features must be finite".into()));
        }
        Ok(Dataset {
            features,
            labels,
            class_names,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Row indices belonging to `class`, ascending.
    pub fn indices_of(&self, class: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.labels[i] == class)
            .collect()
    }

    /// Rows at `indices`, in that order. Class names are kept even if a
    /// class ends up with no rows.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            name: self.name.clone(),
        }
    }

    /// Smallest class by sample count; ties resolve to the higher class id.
    pub fn minority_class(&self) -> usize {
        let counts = self.class_counts();
        (0..counts.len())
            .rev()
            .min_by_key(|&c| counts[c])
            .unwrap_or(0)
    }
}

#[derive(Clone, Debug, Default)]
pub struct CsvOptions {
    /// Expected number of feature columns; inferred from the first row when `None`.
    pub dim: Option<usize>,
    /// Skip the first line.
    pub header: bool,
}

pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.file_stem().map_or_else(
        || "dataset".to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    parse_csv(&text, path, &name, opts)
}

pub fn parse_csv(
    text: &str,
    source: impl Into<PathBuf>,
    name: &str,
    opts: &CsvOptions,
) -> Result<Dataset> {
    let source = source.into();
    let err = |line: usize, message: String| Error::Csv {
        path: source.clone(),
        line,
        message,
    };
    let mut dim = opts.dim;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut class_names: Vec<String> = Vec::new();

    let body = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(opts.header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            err(line, e.to_string())
        })?;
        let line_no = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let d = *dim.get_or_insert(record.len().saturating_sub(1));
        if d == 0 {
            return Err(err(
                line_no,
                "row needs at least one feature and a label".into(),
            ));
        }
        if record.len() != d + 1 {
            return Err(err(
                line_no,
                format!(
                    "expected {} fields ({d} features + label), found {}",
                    d + 1,
                    record.len()
                ),
            ));
        }
        for (col, f) in record.iter().take(d).enumerate() {
            let v: f64 = f.parse().map_err(|_| {
                err(
                    line_no,
                    format!("column {}: `{f}` is not a number", col + 1),
                )
            })?;
            if !v.is_finite() {
                return Err(err(
                    line_no,
                    format!("column {}: non-finite value `{f}`", col + 1),
                ));
            }
            data.push(v);
        }
        let label = &record[d];
        if label.is_empty() {
            return Err(err(line_no, "empty label".into()));
        }
        let id = match class_names.iter().position(|c| c == label) {
            Some(id) => id,
            None => {
                class_names.push(label.to_string());
                class_names.len() - 1
            }
        };
        labels.push(id);
    }

    if labels.is_empty() {
        return Err(Error::Data(format!("{}: no rows", source.display())));
    }
    let d = dim.expect("set by the first row");
    let features = Matrix::new(labels.len(), d, data)?;
    Dataset::new(name, features, labels, class_names)
}

/// CSV text in the format read by [`parse_csv`], without a header.
pub fn to_csv_string(ds: &Dataset) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for (row, &label) in ds.features.iter_rows().zip(&ds.labels) {
        let mut fields: Vec<String> = row.iter().map(f64::to_string).collect();
        fields.push(ds.class_names[label].clone());
        writer.write_record(&fields).expect("writing to memory");
    }
    String::from_utf8(writer.into_inner().expect("writing to memory")).expect("fields are UTF-8")
}

pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_csv_string(ds)).map_err(|e| Error::io(path, e))
}

/// Per-feature z-score statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    /// Population standard deviation, floored at [`Normalizer::STD_FLOOR`].
    pub stddev: Vec<f64>,
}

impl Normalizer {
    pub const STD_FLOOR: f64 = 1e-8;

    pub fn fit(train: &Dataset) -> Result<Self> {
        Self::fit_matrix(&train.features)
    }

    pub fn fit_matrix(x: &Matrix) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::Data("cannot fit a normalizer on zero rows".into()));
        }
        let n = x.rows() as f64;
        let mut mean = vec![0.0; x.cols()];
        for r in x.iter_rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; x.cols()];
        for r in x.iter_rows() {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let stddev = var
            .into_iter()
            .map(|s| (s / n).sqrt().max(Self::STD_FLOOR))
            .collect();
        Ok(Normalizer { mean, stddev })
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.stddev))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn apply_matrix(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::shape("Normalizer::apply", self.mean.len(), x.cols()));
        }
        Ok(Matrix::from_fn(x.rows(), x.cols(), |i, j| {
            (x.get(i, j) - self.mean[j]) / self.stddev[j]
        }))
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        Ok(Dataset {
            features: self.apply_matrix(&ds.features)?,
            ..ds.clone()
        })
    }
}

/// Two Gaussian classes with identity covariance, centred at
/// `-(separation/2)·1` (class 0, `n1` rows first) and `+(separation/2)·1`
/// (class 1, `n2` rows after).
pub fn gen_gaussian_two_class(
    d: usize,
    n1: usize,
    n2: usize,
    separation: f64,
    rng: &mut RngStream,
) -> Result<Dataset> {
    if d == 0 || n1 == 0 || n2 == 0 {
        return Err(Error::config(format!(
            "synthetic data needs d, n1, n2 >= 1 (got d={d}, n1={n1}, n2={n2})"
        )));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::config(format!(
            "separation must be finite and >= 0, got {separation}"
        )));
    }
    let half = separation / 2.0;
    let mut data = Vec::with_capacity((n1 + n2) * d);
    let mut labels = Vec::with_capacity(n1 + n2);
    for (class, n, centre) in [(0usize, n1, -half), (1, n2, half)] {
        for _ in 0..n {
            data.extend((0..d).map(|_| centre + rng.standard_normal()));
            labels.push(class);
        }
    }
    Dataset::new(
        "synthetic",
        Matrix::new(n1 + n2, d, data)?,
        labels,
        vec!["c1".to_string(), "c2".to_string()],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str, opts: &CsvOptions) -> Result<Dataset> {
        parse_csv(text, "mem.csv", "mem", opts)
    }

    #[test]
    fn single_row() {
        let ds = parse(
            "0.1,0.2,speech\n",
            &CsvOptions {
                dim: Some(2),
                header: false,
            },
        )
        .unwrap();
        assert_eq!(ds.features.row(0), &[0.1, 0.2]);
        assert_eq!(ds.labels, vec![0]);
        assert_eq!(ds.class_names, vec!["speech"]);
    }

    #[test]
    fn empty_file() {
        let err = parse("", &CsvOptions::default()).unwrap_err();
        assert!(err.to_string().contains("no rows"), "{err}");
        let err = parse(
            "a,b,label\n",
            &CsvOptions {
                dim: None,
                header: true,
            },
        )
        .unwrap_err();
        assert!(err.to_string().contains("no rows"), "{err}");
    }

    #[test]
    fn ragged_and_non_numeric_rows() {
        let err = parse("1,2,a\n1,b\n", &CsvOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 2, .. }), "{err}");
        let err = parse("1,2,a\n1,zz,b\n", &CsvOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 2, .. }), "{err}");
        assert!(err.to_string().contains("column 2"), "{err}");
        let err = parse(
            "1,2,3,a\n",
            &CsvOptions {
                dim: Some(2),
                header: false,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Csv { line: 1, .. }));
    }

    #[test]
    fn header_and_crlf() {
        let ds = parse(
            "f1,f2,label\r\n1,2,x\r\n3,4,y\r\n\r\n5,6,x\r\n",
            &CsvOptions {
                dim: None,
                header: true,
            },
        )
        .unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.labels, vec![0, 1, 0]);
        assert_eq!(ds.class_names, vec!["x", "y"]);
    }

    #[test]
    fn quoted_labels_roundtrip() {
        let ds = parse("1,2,\"rock, classic\"\n3,4,jazz\n", &CsvOptions::default()).unwrap();
        assert_eq!(ds.class_names, vec!["rock, classic", "jazz"]);
        let again = parse(&to_csv_string(&ds), &CsvOptions::default()).unwrap();
        assert_eq!(again.class_names, ds.class_names);
        assert_eq!(again.features, ds.features);
    }

    #[test]
    fn gtzan_shaped_file() {
        let mut rng = RngStream::new(5);
        let ds = gen_gaussian_two_class(13, 60, 60, 1.0, &mut rng).unwrap();
        let text = to_csv_string(&ds)
            .replace(",c1\n", ",speech\n")
            .replace(",c2\n", ",music\n");
        let back = parse(
            &text,
            &CsvOptions {
                dim: Some(13),
                header: false,
            },
        )
        .unwrap();
        assert_eq!((back.len(), back.dim(), back.num_classes()), (120, 13, 2));
        assert_eq!(back.class_names, vec!["speech", "music"]);
    }

    #[test]
    fn constant_column_normalizes_to_zero() {
        let x = Matrix::from_rows(&[[1.0, 4.0], [2.0, 4.0], [3.0, 4.0]]).unwrap();
        let nz = Normalizer::fit_matrix(&x).unwrap();
        let y = nz.apply_matrix(&x).unwrap();
        assert!(y.iter_rows().all(|r| r[1] == 0.0));
    }

    #[test]
    fn normalized_train_is_standard() {
        let mut rng = RngStream::new(2);
        let ds = gen_gaussian_two_class(4, 30, 20, 3.0, &mut rng).unwrap();
        let nz = Normalizer::fit(&ds).unwrap();
        let z = nz.apply(&ds).unwrap();
        let again = Normalizer::fit(&z).unwrap();
        for j in 0..4 {
            assert!(again.mean[j].abs() < 1e-9);
            assert!((again.stddev[j] - 1.0).abs() < 1e-9);
        }
        let twice = again.apply(&z).unwrap();
        assert!(twice.features.max_abs_diff(&z.features).unwrap() < 1e-9);
    }

    #[test]
    fn synthetic_determinism_and_counts() {
        let a = gen_gaussian_two_class(13, 127, 71, 1.0, &mut RngStream::new(8)).unwrap();
        let b = gen_gaussian_two_class(13, 127, 71, 1.0, &mut RngStream::new(8)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.class_counts(), vec![127, 71]);
        assert_eq!(a.minority_class(), 1);
    }

    #[test]
    fn synthetic_class_means() {
        let n = 400;
        let ds = gen_gaussian_two_class(3, n, n, 2.0, &mut RngStream::new(21)).unwrap();
        for (class, centre) in [(0, -1.0), (1, 1.0)] {
            let rows = ds.indices_of(class);
            for j in 0..3 {
                let m = rows.iter().map(|&i| ds.features.get(i, j)).sum::<f64>() / n as f64;
                assert!(
                    (m - centre).abs() < 5.0 / (n as f64).sqrt(),
                    "class {class} col {j}: {m}"
                );
            }
        }
    }

    #[test]
    fn bad_synthetic_parameters() {
        let mut rng = RngStream::new(0);
        assert!(gen_gaussian_two_class(0, 1, 1, 1.0, &mut rng).is_err());
        assert!(gen_gaussian_two_class(2, 1, 0, 1.0, &mut rng).is_err());
        assert!(gen_gaussian_two_class(2, 1, 1, -1.0, &mut rng).is_err());
    }

    proptest! {
        #[test]
        fn csv_roundtrip(seed in any::<u64>(), d in 1usize..6, n1 in 1usize..10, n2 in 1usize..10) {
            let ds = gen_gaussian_two_class(d, n1, n2, 1.5, &mut RngStream::new(seed)).unwrap();
            let back = parse(&to_csv_string(&ds), &CsvOptions::default()).unwrap();
            prop_assert!(back.features.max_abs_diff(&ds.features).unwrap() <= 1e-12);
            prop_assert_eq!(back.labels, ds.labels);
        }

        #[test]
        fn normalizer_ignores_other_rows(seed in any::<u64>()) {
            let ds = gen_gaussian_two_class(3, 12, 9, 1.0, &mut RngStream::new(seed)).unwrap();
            let train: Vec<usize> = (0..ds.len()).filter(|i| i % 3 != 0).collect();
            let mut test: Vec<usize> = (0..ds.len()).filter(|i| i % 3 == 0).collect();
            let a = Normalizer::fit(&ds.subset(&train)).unwrap();
            RngStream::new(seed ^ 1).shuffle(&mut test);
            let mut permuted = ds.clone();
            let orig: Vec<usize> = (0..ds.len()).filter(|i| i % 3 == 0).collect();
            for (&dst, &src) in orig.iter().zip(&test) {
                permuted.features.row_mut(dst).copy_from_slice(ds.features.row(src));
                permuted.labels[dst] = ds.labels[src];
            }
            let b = Normalizer::fit(&permuted.subset(&train)).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
