//! Paired-sample (s2s) representation and reference voting.
//!
//! Training rows are concatenations `[x_a, x_b]` of two samples with the
//! multi-hot target `[encode(class_a), encode(class_b)]`. Every sample is
//! paired with every sample, itself included, so `N` samples give `N²`
//! rows. At test time a sample `t` is paired as `[t, r_j]` with each of `R`
//! labelled references; each pairing casts one vote for the class read off
//! the first output block, and the class with most votes wins.

use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::nnet::Network;
use crate::numkit::{Matrix, RngStream};

/// Upper bound on the rows [`build_train_pairs`] will materialise.
pub const DEFAULT_MAX_PAIRS: usize = 1_000_000;

/// Default number of reference samples used for voting.
pub const DEFAULT_REFERENCES: usize = 10;

/// Maps a class to a one-hot block of width `K`.
///
/// Class `c` lights unit `K - 1 - c`, so for two classes `C1 -> [0, 1]` and
/// `C2 -> [1, 0]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LabelCodec {
    num_classes: usize,
}

impl LabelCodec {
    pub fn new(num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::config(format!(
                "label codec needs at least 2 classes, got {num_classes}"
            )));
        }
        Ok(LabelCodec { num_classes })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Width of an encoded pair, `2K`.
    pub fn pair_width(&self) -> usize {
        2 * self.num_classes
    }

    #[inline]
    pub fn unit_of(&self, class: usize) -> usize {
        self.num_classes - 1 - class
    }

    fn check(&self, class: usize) -> Result<()> {
        if class >= self.num_classes {
            return Err(Error::Data(format!(
                "unknown class id {class} (codec has {} classes)",
                self.num_classes
            )));
        }
        Ok(())
    }

    pub fn encode(&self, class: usize) -> Result<Vec<f64>> {
        self.check(class)?;
        let mut block = vec![0.0; self.num_classes];
        block[self.unit_of(class)] = 1.0;
        Ok(block)
    }

    pub fn encode_pair(&self, first: usize, second: usize) -> Result<Vec<f64>> {
        let mut out = self.encode(first)?;
        out.extend(self.encode(second)?);
        Ok(out)
    }

    /// Score of `class` within one output block.
    #[inline]
    pub fn score(&self, block: &[f64], class: usize) -> f64 {
        block[self.unit_of(class)]
    }

    /// Class whose unit scores highest in `block`; ties go to the lower class id.
    pub fn decode(&self, block: &[f64]) -> usize {
        let mut best = 0;
        for c in 1..self.num_classes {
            if self.score(block, c) > self.score(block, best) {
                best = c;
            }
        }
        best
    }
}

pub fn encode_label_pair(codec: &LabelCodec, first: usize, second: usize) -> Result<Vec<f64>> {
    codec.encode_pair(first, second)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairOrigin {
    pub first: usize,
    pub second: usize,
    pub first_class: usize,
    pub second_class: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairedSet {
    pub inputs: Matrix,
    pub targets: Matrix,
    pub provenance: Vec<PairOrigin>,
}

impl PairedSet {
    pub fn len(&self) -> usize {
        self.provenance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.provenance.is_empty()
    }
}

pub fn build_train_pairs(ds: &Dataset, codec: &LabelCodec) -> Result<PairedSet> {
    build_train_pairs_capped(ds, codec, DEFAULT_MAX_PAIRS)
}

/// All ordered pairs `(a, b)` of rows, self-pairs included, with `a` as the
/// outer loop.
pub fn build_train_pairs_capped(
    ds: &Dataset,
    codec: &LabelCodec,
    max_pairs: usize,
) -> Result<PairedSet> {
    if ds.is_empty() {
        return Err(Error::Data(
            "cannot build pairs from an empty dataset".into(),
        ));
    }
    if let Some(&bad) = ds.labels.iter().find(|&&l| l >= codec.num_classes()) {
        return Err(Error::Data(format!(
            "label id {bad} outside the {}-class codec",
            codec.num_classes()
        )));
    }
    let n = ds.len();
    let m = n
        .checked_mul(n)
        .filter(|&m| m <= max_pairs)
        .ok_or_else(|| {
            Error::config(format!(
                "{n} samples would give {n}² pairs, above the cap of {max_pairs}"
            ))
        })?;
    let d = ds.dim();
    let blocks: Vec<Vec<f64>> = (0..codec.num_classes())
        .map(|c| codec.encode(c))
        .collect::<Result<_>>()?;

    let mut inputs = Vec::with_capacity(m * 2 * d);
    let mut targets = Vec::with_capacity(m * codec.pair_width());
    let mut provenance = Vec::with_capacity(m);
    for a in 0..n {
        for b in 0..n {
            inputs.extend_from_slice(ds.features.row(a));
            inputs.extend_from_slice(ds.features.row(b));
            let (ca, cb) = (ds.labels[a], ds.labels[b]);
            targets.extend_from_slice(&blocks[ca]);
            targets.extend_from_slice(&blocks[cb]);
            provenance.push(PairOrigin {
                first: a,
                second: b,
                first_class: ca,
                second_class: cb,
            });
        }
    }
    Ok(PairedSet {
        inputs: Matrix::new(m, 2 * d, inputs)?,
        targets: Matrix::new(m, codec.pair_width(), targets)?,
        provenance,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReferencePolicy {
    /// Near-equal number of randomly drawn references per class.
    StratifiedRandom,
    /// Every training sample.
    AllTrain,
    /// Caller-chosen row indices into the training set.
    Custom(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSet {
    pub features: Matrix,
    pub labels: Vec<usize>,
    /// Row indices into the training set the references were taken from.
    pub indices: Vec<usize>,
    pub policy: ReferencePolicy,
}

impl ReferenceSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }
}

/// Picks reference samples from `train`.
///
/// `count` is only used by [`ReferencePolicy::StratifiedRandom`], which takes
/// `⌊count/K⌋` samples per class plus one extra for each of the first
/// `count mod K` classes, drawn without replacement. References are listed
/// class by class.
pub fn select_references(
    train: &Dataset,
    policy: ReferencePolicy,
    count: usize,
    rng: &mut RngStream,
) -> Result<ReferenceSet> {
    if train.is_empty() {
        return Err(Error::Data(
            "cannot select references from an empty training set".into(),
        ));
    }
    let indices = match &policy {
        ReferencePolicy::AllTrain => (0..train.len()).collect(),
        ReferencePolicy::Custom(idx) => {
            if idx.is_empty() {
                return Err(Error::config("custom reference set is empty"));
            }
            if let Some(&bad) = idx.iter().find(|&&i| i >= train.len()) {
                return Err(Error::config(format!(
                    "reference index {bad} out of range for {} training rows",
                    train.len()
                )));
            }
            idx.clone()
        }
        ReferencePolicy::StratifiedRandom => {
            let k = train.num_classes();
            if count < k || count > train.len() {
                return Err(Error::config(format!(
                    "stratified references need {k} <= R <= {} (training size), got R={count}",
                    train.len()
                )));
            }
            let counts = train.class_counts();
            let quotas: Vec<usize> = (0..k)
                .map(|c| count / k + usize::from(c < count % k))
                .collect();
            if let Some(c) = (0..k).find(|&c| quotas[c] > counts[c]) {
                return Err(Error::config(format!(
                    "R={count} needs {} references of class `{}` but only {} are available (class counts {counts:?})",
                    quotas[c], train.class_names[c], counts[c]
                )));
            }
            let mut chosen = Vec::with_capacity(count);
            for (c, &q) in quotas.iter().enumerate() {
                let mut pool = train.indices_of(c);
                rng.partial_shuffle(&mut pool, q);
                chosen.extend_from_slice(&pool[..q]);
            }
            chosen
        }
    };
    Ok(ReferenceSet {
        features: train.features.select_rows(&indices),
        labels: indices.iter().map(|&i| train.labels[i]).collect(),
        indices,
        policy,
    })
}

/// Test instances `[test_x, r_j]`, one row per reference.
pub fn make_test_instances(test_x: &[f64], refs: &ReferenceSet) -> Result<Matrix> {
    let d = refs.dim();
    if test_x.len() != d {
        return Err(Error::shape(
            "make_test_instances",
            format!("test sample width {}", test_x.len()),
            format!("reference width {d}"),
        ));
    }
    let mut data = Vec::with_capacity(refs.len() * 2 * d);
    for r in refs.features.iter_rows() {
        data.extend_from_slice(test_x);
        data.extend_from_slice(r);
    }
    Matrix::new(refs.len(), 2 * d, data)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VoteTally {
    pub votes: Vec<usize>,
    /// Per class, the sum of its unit's score in the test-sample block.
    pub confidence: Vec<f64>,
    pub winner: usize,
}

impl VoteTally {
    pub fn total_votes(&self) -> usize {
        self.votes.iter().sum()
    }
}

/// Most votes wins; a tie goes to the larger summed confidence, then to the
/// lowest class id.
pub fn decide(votes: &[usize], confidence: &[f64]) -> usize {
    let mut best = 0;
    for c in 1..votes.len() {
        let better =
            votes[c] > votes[best] || (votes[c] == votes[best] && confidence[c] > confidence[best]);
        if better {
            best = c;
        }
    }
    best
}

/// Tallies network outputs (one row per test instance, `2K` columns).
pub fn tally_outputs(outputs: &Matrix, codec: &LabelCodec) -> VoteTally {
    let k = codec.num_classes();
    let mut votes = vec![0; k];
    let mut confidence = vec![0.0; k];
    for row in outputs.iter_rows() {
        let block = &row[..k];
        votes[codec.decode(block)] += 1;
        for (c, conf) in confidence.iter_mut().enumerate() {
            *conf += codec.score(block, c);
        }
    }
    let winner = decide(&votes, &confidence);
    VoteTally {
        votes,
        confidence,
        winner,
    }
}

pub fn vote_decide(
    net: &Network,
    test_x: &[f64],
    refs: &ReferenceSet,
    codec: &LabelCodec,
) -> Result<(usize, VoteTally)> {
    if net.output_dim() != codec.pair_width() || net.input_dim() != 2 * refs.dim() {
        return Err(Error::shape(
            "vote_decide",
            format!("network {}->{}", net.input_dim(), net.output_dim()),
            format!(
                "{} reference features, {} classes",
                refs.dim(),
                codec.num_classes()
            ),
        ));
    }
    if refs.is_empty() {
        return Err(Error::config("voting needs at least one reference"));
    }
    let instances = make_test_instances(test_x, refs)?;
    let tally = tally_outputs(&net.forward_batch(&instances)?, codec);
    Ok((tally.winner, tally))
}

/// A trained paired-input network together with the references and codec
/// it votes with.
#[derive(Clone, Debug)]
pub struct S2sClassifier {
    pub network: Network,
    pub references: ReferenceSet,
    pub codec: LabelCodec,
}

impl S2sClassifier {
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        vote_decide(&self.network, x, &self.references, &self.codec).map(|(c, _)| c)
    }

    pub fn predict_with_tally(&self, x: &[f64]) -> Result<VoteTally> {
        vote_decide(&self.network, x, &self.references, &self.codec).map(|(_, t)| t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::gen_gaussian_two_class;
    use crate::nnet::{NetConfig, Params};
    use proptest::prelude::*;

    const C1: usize = 0;
    const C2: usize = 1;

    fn two() -> LabelCodec {
        LabelCodec::new(2).unwrap()
    }

    fn tiny(n1: usize, n2: usize) -> Dataset {
        gen_gaussian_two_class(2, n1, n2, 1.0, &mut RngStream::new(0)).unwrap()
    }

    #[test]
    fn pair_codes_match_listing() {
        let c = two();
        assert_eq!(encode_label_pair(&c, C1, C1).unwrap(), [0.0, 1.0, 0.0, 1.0]);
        assert_eq!(encode_label_pair(&c, C1, C2).unwrap(), [0.0, 1.0, 1.0, 0.0]);
        assert_eq!(encode_label_pair(&c, C2, C1).unwrap(), [1.0, 0.0, 0.0, 1.0]);
        assert_eq!(encode_label_pair(&c, C2, C2).unwrap(), [1.0, 0.0, 1.0, 0.0]);
        assert!(encode_label_pair(&c, C1, 2).is_err());
    }

    #[test]
    fn codec_roundtrip_any_k() {
        for k in 2..6 {
            let c = LabelCodec::new(k).unwrap();
            for class in 0..k {
                let block = c.encode(class).unwrap();
                assert_eq!(block.iter().filter(|&&v| v == 1.0).count(), 1);
                assert_eq!(c.decode(&block), class);
            }
        }
        assert!(LabelCodec::new(1).is_err());
    }

    #[test]
    fn pair_counts_small() {
        let ds = tiny(1, 1);
        assert_eq!(build_train_pairs(&ds, &two()).unwrap().len(), 4);
        let ds = tiny(60, 60);
        assert_eq!(build_train_pairs(&ds, &two()).unwrap().len(), 14_400);
    }

    #[test]
    fn two_plus_one_composition() {
        let ds = tiny(2, 1);
        let pairs = build_train_pairs(&ds, &two()).unwrap();
        assert_eq!(pairs.len(), 9);
        let count = |pat: [f64; 4]| pairs.targets.iter_rows().filter(|r| *r == pat).count();
        assert_eq!(count([0.0, 1.0, 0.0, 1.0]), 4);
        assert_eq!(count([0.0, 1.0, 1.0, 0.0]), 2);
        assert_eq!(count([1.0, 0.0, 0.0, 1.0]), 2);
        assert_eq!(count([1.0, 0.0, 1.0, 0.0]), 1);
    }

    #[test]
    fn pair_rows_are_concatenations_outer_major() {
        let ds = tiny(2, 2);
        let pairs = build_train_pairs(&ds, &two()).unwrap();
        for (i, (row, origin)) in pairs.inputs.iter_rows().zip(&pairs.provenance).enumerate() {
            assert_eq!((origin.first, origin.second), (i / 4, i % 4));
            assert_eq!(&row[..2], ds.features.row(origin.first));
            assert_eq!(&row[2..], ds.features.row(origin.second));
        }
    }

    #[test]
    fn pair_cap_and_empty() {
        let ds = tiny(5, 5);
        assert!(build_train_pairs_capped(&ds, &two(), 99).is_err());
        assert!(build_train_pairs_capped(&ds, &two(), 100).is_ok());
        assert!(build_train_pairs(&ds.subset(&[]), &two()).is_err());
    }

    #[test]
    fn reference_policies() {
        let ds = tiny(48, 48);
        let all =
            select_references(&ds, ReferencePolicy::AllTrain, 0, &mut RngStream::new(0)).unwrap();
        assert_eq!(all.len(), 96);

        let strat = select_references(
            &ds,
            ReferencePolicy::StratifiedRandom,
            10,
            &mut RngStream::new(3),
        )
        .unwrap();
        assert_eq!(strat.labels.iter().filter(|&&l| l == 0).count(), 5);
        assert_eq!(strat.labels.iter().filter(|&&l| l == 1).count(), 5);
        let again = select_references(
            &ds,
            ReferencePolicy::StratifiedRandom,
            10,
            &mut RngStream::new(3),
        )
        .unwrap();
        assert_eq!(strat.indices, again.indices);

        let odd = select_references(
            &ds,
            ReferencePolicy::StratifiedRandom,
            7,
            &mut RngStream::new(3),
        )
        .unwrap();
        assert_eq!(odd.labels.iter().filter(|&&l| l == 0).count(), 4);

        let mut seen = strat.indices.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 10);
    }

    #[test]
    fn reference_errors() {
        let ds = tiny(3, 8);
        let err = select_references(
            &ds,
            ReferencePolicy::StratifiedRandom,
            10,
            &mut RngStream::new(0),
        )
        .unwrap_err();
        assert!(err.to_string().contains("only 3"), "{err}");
        assert!(select_references(
            &ds,
            ReferencePolicy::StratifiedRandom,
            1,
            &mut RngStream::new(0)
        )
        .is_err());
        assert!(select_references(
            &ds,
            ReferencePolicy::Custom(vec![11]),
            0,
            &mut RngStream::new(0)
        )
        .is_err());
        let custom = select_references(
            &ds,
            ReferencePolicy::Custom(vec![4, 0]),
            0,
            &mut RngStream::new(0),
        )
        .unwrap();
        assert_eq!(custom.labels, vec![1, 0]);
    }

    #[test]
    fn test_instances() {
        let refs = ReferenceSet {
            features: Matrix::from_rows(&[[3.0, 4.0]]).unwrap(),
            labels: vec![0],
            indices: vec![0],
            policy: ReferencePolicy::Custom(vec![0]),
        };
        assert_eq!(
            make_test_instances(&[1.0, 2.0], &refs).unwrap(),
            Matrix::from_rows(&[[1.0, 2.0, 3.0, 4.0]]).unwrap()
        );
        assert!(make_test_instances(&[1.0], &refs).is_err());

        let ds = tiny(5, 5);
        let refs = select_references(
            &ds,
            ReferencePolicy::StratifiedRandom,
            3,
            &mut RngStream::new(1),
        )
        .unwrap();
        let m = make_test_instances(&[9.0, -9.0], &refs).unwrap();
        assert_eq!(m.rows(), 3);
        assert!(m.iter_rows().all(|r| r[..2] == [9.0, -9.0]));
    }

    #[test]
    fn decide_rules() {
        assert_eq!(decide(&[2, 1], &[0.1, 0.9]), 0);
        assert_eq!(decide(&[2, 2], &[1.3, 1.1]), 0);
        assert_eq!(decide(&[2, 2], &[1.1, 1.3]), 1);
        assert_eq!(decide(&[2, 2], &[1.0, 1.0]), 0);
        assert_eq!(decide(&[0, 5], &[0.0, 4.0]), 1);
    }

    /// Network whose test-block output depends only on the first feature of
    /// the reference half, letting a fixture dictate each vote.
    fn steering_net() -> Network {
        // inputs [t0, r0]; hidden h = relu(r0); outputs z = w2 h + b2
        let cfg = NetConfig::s2s(1, 2, 1);
        let params = Params {
            w1: Matrix::from_rows(&[[0.0, 1.0]]).unwrap(),
            b1: vec![0.0],
            w2: Matrix::from_rows(&[[1.0], [-1.0], [0.0], [0.0]]).unwrap(),
            b2: vec![0.0, 0.0, 0.0, 0.0],
        };
        Network::from_params(cfg, params).unwrap()
    }

    fn refs_from(values: &[f64]) -> ReferenceSet {
        ReferenceSet {
            features: Matrix::new(values.len(), 1, values.to_vec()).unwrap(),
            labels: vec![0; values.len()],
            indices: (0..values.len()).collect(),
            policy: ReferencePolicy::Custom((0..values.len()).collect()),
        }
    }

    #[test]
    fn vote_examples() {
        let net = steering_net();
        let codec = two();
        // r0 > 0 lights unit 0, which belongs to C2; r0 = 0 gives [0.5, 0.5] -> C1 by the tie rule.
        let (w, t) = vote_decide(&net, &[0.0], &refs_from(&[0.0, 0.0, 2.0]), &codec).unwrap();
        assert_eq!((w, t.votes.clone()), (C1, vec![2, 1]));
        let (w, t) = vote_decide(&net, &[0.0], &refs_from(&[1.0, 2.0, 3.0]), &codec).unwrap();
        assert_eq!((w, t.votes), (C2, vec![0, 3]));
        assert!(vote_decide(&net, &[0.0, 1.0], &refs_from(&[1.0]), &codec).is_err());
    }

    #[test]
    fn vote_tie_uses_confidence() {
        let codec = two();
        // rows: [unit0, unit1, ..]; unit1 is C1's score, unit0 is C2's.
        let outputs = Matrix::from_rows(&[
            [0.1, 0.9, 0.0, 0.0],
            [0.2, 0.4, 0.0, 0.0],
            [0.6, 0.3, 0.0, 0.0],
            [0.5, 0.1, 0.0, 0.0],
        ])
        .unwrap();
        let t = tally_outputs(&outputs, &codec);
        assert_eq!(t.votes, vec![2, 2]);
        assert!((t.confidence[0] - 1.7).abs() < 1e-12 && (t.confidence[1] - 1.4).abs() < 1e-12);
        assert_eq!(t.winner, C1);
        assert_eq!(t.total_votes(), 4);
    }

    proptest! {
        #[test]
        fn pair_count_law(n1 in 1usize..=30, n2 in 1usize..=30) {
            let ds = tiny(n1, n2);
            let pairs = build_train_pairs(&ds, &two()).unwrap();
            prop_assert_eq!(pairs.len(), (n1 + n2) * (n1 + n2));
            let count = |pat: [f64; 4]| pairs.targets.iter_rows().filter(|r| *r == pat).count();
            prop_assert_eq!(count([0.0, 1.0, 0.0, 1.0]), n1 * n1);
            prop_assert_eq!(count([0.0, 1.0, 1.0, 0.0]), n1 * n2);
            prop_assert_eq!(count([1.0, 0.0, 0.0, 1.0]), n2 * n1);
            prop_assert_eq!(count([1.0, 0.0, 1.0, 0.0]), n2 * n2);
        }

        #[test]
        fn reference_edits_leave_test_half(seed in any::<u64>(), shift in -5.0f64..5.0) {
            let ds = tiny(6, 6);
            let refs = select_references(&ds, ReferencePolicy::StratifiedRandom, 4, &mut RngStream::new(seed)).unwrap();
            let t = [0.25, -1.5];
            let before = make_test_instances(&t, &refs).unwrap();
            let mut moved = refs.clone();
            moved.features = moved.features.map(|v| v + shift);
            let after = make_test_instances(&t, &moved).unwrap();
            for (a, b) in before.iter_rows().zip(after.iter_rows()) {
                prop_assert_eq!(&a[..2], &b[..2]);
            }
        }
    }
}
