use std::fmt;
use std::str::FromStr;

use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::numkit::RngStream;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    /// Ascending dataset row indices.
    pub train: Vec<usize>,
    /// Ascending dataset row indices.
    pub test: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub folds: Vec<Fold>,
    pub seed: u64,
}

/// Stratified k-fold split. Each class is shuffled and dealt round-robin
/// across folds; the dealing position carries over from one class to the
/// next so total fold sizes also stay within one of each other.
pub fn stratified_kfold(ds: &Dataset, k: usize, rng: &mut RngStream) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::config(format!("k-fold needs k >= 2, got {k}")));
    }
    let counts = ds.class_counts();
    if let Some(c) = (0..counts.len()).find(|&c| counts[c] < k) {
        return Err(Error::config(format!(
            "class `{}` has {} samples, fewer than k={k} (class counts {counts:?})",
            ds.class_names[c], counts[c]
        )));
    }
    let seed = rng.seed();
    let mut test_sets = vec![Vec::new(); k];
    let mut slot = 0;
    for c in 0..ds.num_classes() {
        let mut idx = ds.indices_of(c);
        rng.shuffle(&mut idx);
        for i in idx {
            test_sets[slot].push(i);
            slot = (slot + 1) % k;
        }
    }
    let folds = test_sets
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let mut in_test = vec![false; ds.len()];
            test.iter().for_each(|&i| in_test[i] = true);
            let train = (0..ds.len()).filter(|&i| !in_test[i]).collect();
            Fold { train, test }
        })
        .collect();
    Ok(FoldPlan { k, folds, seed })
}

/// Per-class holdout split: `round(fraction · n_c)` rows of each class go
/// to the held-out side, clamped so both sides keep at least one row.
/// Returns `(train, heldout)` as ascending indices into `ds`.
pub fn stratified_holdout(
    ds: &Dataset,
    fraction: f64,
    rng: &mut RngStream,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::config(format!(
            "holdout fraction must be in (0, 1), got {fraction}"
        )));
    }
    let mut train = Vec::new();
    let mut held = Vec::new();
    for c in 0..ds.num_classes() {
        let mut idx = ds.indices_of(c);
        if idx.is_empty() {
            continue;
        }
        if idx.len() < 2 {
            return Err(Error::Data(format!(
                "class `{}` has {} sample(s); a stratified split would leave one side without it",
                ds.class_names[c],
                idx.len()
            )));
        }
        let n_held = ((fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        rng.shuffle(&mut idx);
        held.extend_from_slice(&idx[..n_held]);
        train.extend_from_slice(&idx[n_held..]);
    }
    train.sort_unstable();
    held.sort_unstable();
    Ok((train, held))
}

/// Fraction `numerator/4` of the training data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProportionSpec {
    numerator: u8,
}

impl ProportionSpec {
    pub const DENOMINATOR: u8 = 4;
    pub const ALL: [ProportionSpec; 4] = [
        ProportionSpec { numerator: 1 },
        ProportionSpec { numerator: 2 },
        ProportionSpec { numerator: 3 },
        ProportionSpec { numerator: 4 },
    ];

    pub fn new(numerator: u8) -> Result<Self> {
        if !(1..=Self::DENOMINATOR).contains(&numerator) {
            return Err(Error::config(format!(
                "proportion numerator must be 1..=4, got {numerator}"
            )));
        }
        Ok(ProportionSpec { numerator })
    }

    pub fn numerator(self) -> u8 {
        self.numerator
    }

    pub fn fraction(self) -> f64 {
        f64::from(self.numerator) / f64::from(Self::DENOMINATOR)
    }

    pub fn is_full(self) -> bool {
        self.numerator == Self::DENOMINATOR
    }

    /// `round(n · p)` with halves rounded up.
    pub fn keep_count(self, n: usize) -> usize {
        let d = usize::from(Self::DENOMINATOR);
        (usize::from(self.numerator) * n + d / 2) / d
    }
}

impl fmt::Display for ProportionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, Self::DENOMINATOR)
    }
}

impl FromStr for ProportionSpec {
    type Err = Error;

    /// Accepts `"2"` or `"2/4"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = s.strip_suffix("/4").unwrap_or(s);
        let n: u8 = num.parse().map_err(|_| {
            Error::config(format!("bad proportion `{s}`; expected a numerator 1..=4"))
        })?;
        ProportionSpec::new(n)
    }
}

/// Stratified subset of `train` keeping `round(p · n_c)` rows per class
/// (at least one). Each class is fully shuffled whatever `p` is, so for a
/// fixed stream state smaller proportions are subsets of larger ones.
/// The full proportion returns `train` unchanged.
pub fn take_proportion(
    train: &[usize],
    labels: &[usize],
    spec: ProportionSpec,
    rng: &mut RngStream,
) -> Vec<usize> {
    if spec.is_full() {
        return train.to_vec();
    }
    let num_classes = train.iter().map(|&i| labels[i] + 1).max().unwrap_or(0);
    let mut kept = Vec::new();
    for c in 0..num_classes {
        let mut pool: Vec<usize> = train.iter().copied().filter(|&i| labels[i] == c).collect();
        if pool.is_empty() {
            continue;
        }
        rng.shuffle(&mut pool);
        let keep = spec.keep_count(pool.len()).max(1);
        kept.extend_from_slice(&pool[..keep]);
    }
    kept.sort_unstable();
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::gen_gaussian_two_class;
    use proptest::prelude::*;

    fn ds(n1: usize, n2: usize) -> Dataset {
        gen_gaussian_two_class(2, n1, n2, 1.0, &mut RngStream::new(0)).unwrap()
    }

    #[test]
    fn sixty_sixty_five_folds() {
        let d = ds(60, 60);
        let plan = stratified_kfold(&d, 5, &mut RngStream::new(1)).unwrap();
        for f in &plan.folds {
            let c1 = f.test.iter().filter(|&&i| d.labels[i] == 0).count();
            assert_eq!((c1, f.test.len() - c1), (12, 12));
            assert_eq!(f.train.len(), 96);
        }
    }

    #[test]
    fn kfold_rejects_small_classes() {
        let d = ds(4, 10);
        let err = stratified_kfold(&d, 5, &mut RngStream::new(1)).unwrap_err();
        assert!(err.to_string().contains("fewer than k=5"), "{err}");
        assert!(stratified_kfold(&d, d.len(), &mut RngStream::new(1)).is_err());
        assert!(stratified_kfold(&d, 1, &mut RngStream::new(1)).is_err());
    }

    #[test]
    fn proportion_examples() {
        let labels: Vec<usize> = (0..64).map(|i| i % 2).collect();
        let train: Vec<usize> = (0..64).collect();
        let half = take_proportion(
            &train,
            &labels,
            ProportionSpec::new(2).unwrap(),
            &mut RngStream::new(0),
        );
        assert_eq!(half.iter().filter(|&&i| labels[i] == 0).count(), 16);
        assert_eq!(half.len(), 32);
        let full = take_proportion(
            &train,
            &labels,
            ProportionSpec::new(4).unwrap(),
            &mut RngStream::new(0),
        );
        assert_eq!(full, train);

        let labels: Vec<usize> = (0..113).map(|i| usize::from(i >= 63)).collect();
        let train: Vec<usize> = (0..113).collect();
        let q = take_proportion(
            &train,
            &labels,
            ProportionSpec::new(1).unwrap(),
            &mut RngStream::new(5),
        );
        assert_eq!(q.iter().filter(|&&i| labels[i] == 0).count(), 16);
        assert_eq!(q.iter().filter(|&&i| labels[i] == 1).count(), 13);

        let labels = vec![0, 1, 1, 1];
        let q = take_proportion(
            &[0, 1, 2, 3],
            &labels,
            ProportionSpec::new(1).unwrap(),
            &mut RngStream::new(5),
        );
        assert_eq!(q.iter().filter(|&&i| labels[i] == 0).count(), 1);
    }

    #[test]
    fn proportion_parsing() {
        assert_eq!("3".parse::<ProportionSpec>().unwrap().to_string(), "3/4");
        assert_eq!("1/4".parse::<ProportionSpec>().unwrap().fraction(), 0.25);
        assert!("5".parse::<ProportionSpec>().is_err());
        assert!("0".parse::<ProportionSpec>().is_err());
        assert!("x".parse::<ProportionSpec>().is_err());
    }

    #[test]
    fn holdout_split() {
        let d = ds(10, 5);
        let (tr, te) = stratified_holdout(&d, 0.2, &mut RngStream::new(2)).unwrap();
        assert_eq!(te.len(), 3);
        assert_eq!(tr.len() + te.len(), 15);
        assert!(stratified_holdout(&d, 1.5, &mut RngStream::new(2)).is_err());
        assert!(stratified_holdout(&ds(1, 5), 0.2, &mut RngStream::new(2)).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition(seed in any::<u64>(), n1 in 5usize..40, n2 in 5usize..40, k in 2usize..6) {
            let d = ds(n1, n2);
            let plan = stratified_kfold(&d, k, &mut RngStream::new(seed)).unwrap();
            let mut all: Vec<usize> = plan.folds.iter().flat_map(|f| f.test.clone()).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..d.len()).collect::<Vec<_>>());
            for c in 0..2 {
                let per: Vec<usize> = plan.folds.iter().map(|f| f.test.iter().filter(|&&i| d.labels[i] == c).count()).collect();
                prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
            }
            for f in &plan.folds {
                prop_assert_eq!(f.train.len() + f.test.len(), d.len());
            }
        }

        #[test]
        fn proportions_nest(seed in any::<u64>(), n1 in 1usize..30, n2 in 1usize..30) {
            let d = ds(n1, n2);
            let train: Vec<usize> = (0..d.len()).collect();
            let subsets: Vec<Vec<usize>> = ProportionSpec::ALL
                .iter()
                .map(|&p| take_proportion(&train, &d.labels, p, &mut RngStream::new(seed)))
                .collect();
            for w in subsets.windows(2) {
                for c in 0..2 {
                    let a = w[0].iter().filter(|&&i| d.labels[i] == c).count();
                    let b = w[1].iter().filter(|&&i| d.labels[i] == c).count();
                    prop_assert!(a <= b);
                }
                prop_assert!(w[0].iter().all(|i| w[1].contains(i)));
            }
        }
    }
}
