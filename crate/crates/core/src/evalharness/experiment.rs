use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::folds::{
    stratified_holdout, stratified_kfold, take_proportion, Fold, FoldPlan, ProportionSpec,
};
use super::metrics::{accuracy, confusion, Confusion};
use super::report::{EvalReport, MetricRow};
use crate::datasets::{Dataset, Normalizer};
use crate::error::{Error, Result};
use crate::nnet::{init_network, train, NetConfig, Network};
use crate::numkit::{Matrix, RngStream};
use crate::s2s::{
    build_train_pairs_capped, select_references, LabelCodec, ReferencePolicy, S2sClassifier,
    DEFAULT_MAX_PAIRS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Conventional MLP on single samples.
    Baseline,
    /// Paired-input network with reference voting.
    S2sl,
}

impl Method {
    pub const BOTH: [Method; 2] = [Method::Baseline, Method::S2sl];

    /// Lower-case identifier used in CSV output and on the command line.
    pub fn id(self) -> &'static str {
        match self {
            Method::Baseline => "mlp",
            Method::S2sl => "s2sl",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Method::Baseline => 1,
            Method::S2sl => 2,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Baseline => "MLP",
            Method::S2sl => "s2sL",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mlp" | "baseline" => Ok(Method::Baseline),
            "s2sl" | "s2s" => Ok(Method::S2sl),
            other => Err(Error::config(format!(
                "unknown method `{other}` (expected s2sl or mlp)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridMode {
    /// 2, 4, 8, ... below the upper bound, then the upper bound itself.
    Geometric,
    /// Every count from 2 to the upper bound.
    Exhaustive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HiddenSpec {
    Fixed(usize),
    Search(GridMode),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefPolicyKind {
    Stratified,
    All,
}

impl fmt::Display for RefPolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RefPolicyKind::Stratified => "stratified",
            RefPolicyKind::All => "all",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HarnessConfig {
    pub task: String,
    pub folds: usize,
    pub proportions: Vec<ProportionSpec>,
    pub methods: Vec<Method>,
    pub hidden: HiddenSpec,
    pub references: usize,
    pub reference_policy: RefPolicyKind,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Validation share of the inner split used by the hidden-unit search.
    pub inner_validation: f64,
    /// Positive class for F1; the dataset's minority class when `None`.
    pub positive_class: Option<usize>,
    pub max_pairs: usize,
    pub seed: u64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            task: "task".into(),
            folds: 5,
            proportions: ProportionSpec::ALL.to_vec(),
            methods: Method::BOTH.to_vec(),
            hidden: HiddenSpec::Search(GridMode::Geometric),
            references: crate::s2s::DEFAULT_REFERENCES,
            reference_policy: RefPolicyKind::Stratified,
            epochs: NetConfig::DEFAULT_EPOCHS,
            learning_rate: NetConfig::DEFAULT_LR,
            batch_size: NetConfig::DEFAULT_BATCH,
            inner_validation: 0.2,
            positive_class: None,
            max_pairs: DEFAULT_MAX_PAIRS,
            seed: 0,
        }
    }
}

impl HarnessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::config(format!(
                "folds must be >= 2, got {}",
                self.folds
            )));
        }
        if self.proportions.is_empty() || self.methods.is_empty() {
            return Err(Error::config(
                "at least one proportion and one method are required",
            ));
        }
        if self.references == 0 {
            return Err(Error::config("references must be >= 1"));
        }
        if let HiddenSpec::Fixed(0) = self.hidden {
            return Err(Error::config("hidden units must be >= 1"));
        }
        if !(self.inner_validation > 0.0 && self.inner_validation < 1.0) {
            return Err(Error::config(format!(
                "inner validation share must be in (0, 1), got {}",
                self.inner_validation
            )));
        }
        // dims are placeholders; this checks the optimiser settings
        let mut probe = NetConfig::baseline(1, 2, 1);
        probe.epochs = self.epochs;
        probe.learning_rate = self.learning_rate;
        probe.batch_size = self.batch_size;
        probe.validate()
    }

    fn net_config(
        &self,
        method: Method,
        dim: usize,
        classes: usize,
        hidden: usize,
        seed: u64,
    ) -> NetConfig {
        let mut cfg = match method {
            Method::S2sl => NetConfig::s2s(dim, classes, hidden),
            Method::Baseline => NetConfig::baseline(dim, classes, hidden),
        };
        cfg.epochs = self.epochs;
        cfg.learning_rate = self.learning_rate;
        cfg.batch_size = self.batch_size;
        cfg.seed = seed;
        cfg
    }
}

/// Candidate hidden-layer sizes for a network with `input_width` inputs:
/// from 2 up to twice the input width.
pub fn hidden_grid(input_width: usize, mode: GridMode) -> Vec<usize> {
    let upper = (2 * input_width).max(2);
    match mode {
        GridMode::Exhaustive => (2..=upper).collect(),
        GridMode::Geometric => {
            let mut grid: Vec<usize> = std::iter::successors(Some(2usize), |&h| Some(h * 2))
                .take_while(|&h| h < upper)
                .collect();
            grid.push(upper);
            grid
        }
    }
}

fn method_input_width(method: Method, dim: usize) -> usize {
    match method {
        Method::S2sl => 2 * dim,
        Method::Baseline => dim,
    }
}

#[derive(Clone, Debug)]
pub enum TrainedModel {
    Baseline(Network),
    S2s(S2sClassifier),
}

impl TrainedModel {
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        match self {
            TrainedModel::Baseline(net) => net.predict_class(x),
            TrainedModel::S2s(clf) => clf.predict(x),
        }
    }

    pub fn predict_all(&self, x: &Matrix) -> Result<Vec<usize>> {
        x.iter_rows().map(|r| self.predict(r)).collect()
    }

    pub fn network(&self) -> &Network {
        match self {
            TrainedModel::Baseline(net) => net,
            TrainedModel::S2s(clf) => &clf.network,
        }
    }
}

/// Trains one model of `method` with `hidden` units on `train`, which is
/// expected to be normalized already.
pub fn fit_method(
    train_set: &Dataset,
    method: Method,
    hidden: usize,
    cfg: &HarnessConfig,
    rng: &mut RngStream,
) -> Result<TrainedModel> {
    let k = train_set.num_classes();
    let net_cfg = cfg.net_config(method, train_set.dim(), k, hidden, rng.seed());
    match method {
        Method::Baseline => {
            let targets = Matrix::from_fn(train_set.len(), k, |i, c| {
                f64::from(u8::from(train_set.labels[i] == c))
            });
            let net = init_network(net_cfg, rng)?;
            let (net, _) = train(net, &train_set.features, &targets, rng)?;
            Ok(TrainedModel::Baseline(net))
        }
        Method::S2sl => {
            let codec = LabelCodec::new(k)?;
            let pairs = build_train_pairs_capped(train_set, &codec, cfg.max_pairs)?;
            let net = init_network(net_cfg, rng)?;
            let (net, _) = train(net, &pairs.inputs, &pairs.targets, rng)?;
            let policy = match cfg.reference_policy {
                RefPolicyKind::Stratified => ReferencePolicy::StratifiedRandom,
                RefPolicyKind::All => ReferencePolicy::AllTrain,
            };
            let references = select_references(train_set, policy, cfg.references, rng)?;
            Ok(TrainedModel::S2s(S2sClassifier {
                network: net,
                references,
                codec,
            }))
        }
    }
}

/// Picks the hidden-unit count with the best inner-validation accuracy.
/// `train_set` is split per class into inner-train/validation; each
/// candidate gets its own stream derived from `rng`'s seed and the
/// candidate value. Ties go to the smaller candidate. Inner fits use at
/// most as many stratified references as the inner split can supply.
pub fn search_hidden_units(
    train_set: &Dataset,
    method: Method,
    grid: &[usize],
    cfg: &HarnessConfig,
    rng: &mut RngStream,
) -> Result<usize> {
    if grid.is_empty() || grid.contains(&0) {
        return Err(Error::config(format!(
            "hidden-unit grid must be nonempty with counts >= 1, got {grid:?}"
        )));
    }
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    let (inner, val) = stratified_holdout(train_set, cfg.inner_validation, rng)?;
    let inner_set = train_set.subset(&inner);
    let val_set = train_set.subset(&val);
    let min_class = inner_set.class_counts().into_iter().min().unwrap_or(0);
    let inner_cfg = HarnessConfig {
        references: cfg.references.min(inner_set.num_classes() * min_class),
        ..cfg.clone()
    };
    let cfg = &inner_cfg;
    let base = rng.next_u64();
    let scores: Vec<f64> = grid
        .par_iter()
        .map(|&h| {
            let mut cand_rng = RngStream::derive(base, &[h as u64]);
            let model = fit_method(&inner_set, method, h, cfg, &mut cand_rng)?;
            accuracy(&model.predict_all(&val_set.features)?, &val_set.labels)
        })
        .collect::<Result<_>>()?;
    Ok(pick_best(grid, &scores))
}

/// Highest score wins; equal scores go to the smaller candidate.
fn pick_best(grid: &[usize], scores: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..grid.len() {
        if scores[i] > scores[best] || (scores[i] == scores[best] && grid[i] < grid[best]) {
            best = i;
        }
    }
    grid[best]
}

/// One unit of work in an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WorkItem {
    pub fold: usize,
    pub proportion: ProportionSpec,
    pub method: Method,
}

const TAG_FOLDS: u64 = 0xF01D;
const TAG_SUBSET: u64 = 0x5AB5;
const TAG_SEARCH: u64 = 0x5EA2;
const TAG_FIT: u64 = 0xF17;

impl WorkItem {
    fn seed(&self, master: u64, stage: u64) -> u64 {
        RngStream::derive_seed(
            master,
            &[
                self.fold as u64,
                u64::from(self.proportion.numerator()),
                self.method.tag(),
                stage,
            ],
        )
    }
}

#[derive(Clone, Debug)]
pub struct FoldOutcome {
    pub row: MetricRow,
    pub normalizer: Normalizer,
    pub model: TrainedModel,
    pub train_indices: Vec<usize>,
}

fn positive_class(ds: &Dataset, cfg: &HarnessConfig) -> Result<usize> {
    match cfg.positive_class {
        Some(c) if c < ds.num_classes() => Ok(c),
        Some(c) => Err(Error::config(format!(
            "positive class {c} out of range for {} classes",
            ds.num_classes()
        ))),
        None => Ok(ds.minority_class()),
    }
}

/// Runs one (fold, proportion, method) item: subset, normalize, size the
/// hidden layer, train, predict the test rows and score them.
///
/// The training subset depends only on the master seed and fold index, so
/// both methods and all proportions of a fold see nested, shared subsets.
pub fn run_fold(
    ds: &Dataset,
    fold: &Fold,
    item: WorkItem,
    cfg: &HarnessConfig,
) -> Result<FoldOutcome> {
    let ctx = || {
        format!(
            "fold {}, proportion {}, method {}",
            item.fold + 1,
            item.proportion,
            item.method
        )
    };
    let inner = || -> Result<FoldOutcome> {
        let mut subset_rng = RngStream::derive(cfg.seed, &[TAG_SUBSET, item.fold as u64]);
        let train_idx = take_proportion(&fold.train, &ds.labels, item.proportion, &mut subset_rng);
        let raw_train = ds.subset(&train_idx);
        let normalizer = Normalizer::fit(&raw_train)?;
        let train_set = normalizer.apply(&raw_train)?;

        let hidden = match cfg.hidden {
            HiddenSpec::Fixed(h) => h,
            HiddenSpec::Search(mode) => {
                let grid = hidden_grid(method_input_width(item.method, ds.dim()), mode);
                let mut rng = RngStream::new(item.seed(cfg.seed, TAG_SEARCH));
                search_hidden_units(&train_set, item.method, &grid, cfg, &mut rng)?
            }
        };

        let fit_seed = item.seed(cfg.seed, TAG_FIT);
        let model = fit_method(
            &train_set,
            item.method,
            hidden,
            cfg,
            &mut RngStream::new(fit_seed),
        )?;

        let test_x = normalizer.apply_matrix(&ds.features.select_rows(&fold.test))?;
        let truths: Vec<usize> = fold.test.iter().map(|&i| ds.labels[i]).collect();
        let preds = model.predict_all(&test_x)?;
        let positive = positive_class(ds, cfg)?;
        let conf: Confusion = confusion(&preds, &truths, positive)?;
        let row = MetricRow {
            method: item.method,
            proportion: item.proportion,
            fold: item.fold,
            accuracy: accuracy(&preds, &truths)?,
            f1: conf.f1(),
            confusion: conf,
            hidden_units: hidden,
            train_size: train_idx.len(),
            seed: fit_seed,
        };
        Ok(FoldOutcome {
            row,
            normalizer,
            model,
            train_indices: train_idx,
        })
    };
    inner().map_err(|e| e.context(ctx()))
}

/// The full protocol: stratified folds × proportions × methods.
pub fn run_experiment(ds: &Dataset, cfg: &HarnessConfig) -> Result<EvalReport> {
    cfg.validate()?;
    positive_class(ds, cfg)?;
    let plan = fold_plan(ds, cfg)?;
    let mut items = Vec::new();
    for &proportion in &cfg.proportions {
        for &method in &cfg.methods {
            for fold in 0..plan.k {
                items.push(WorkItem {
                    fold,
                    proportion,
                    method,
                });
            }
        }
    }
    let rows = items
        .par_iter()
        .map(|&item| run_fold(ds, &plan.folds[item.fold], item, cfg).map(|o| o.row))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::new(
        ds,
        cfg.clone(),
        positive_class(ds, cfg)?,
        rows,
    ))
}

/// Fold plan used by [`run_experiment`] for this dataset and master seed.
pub fn fold_plan(ds: &Dataset, cfg: &HarnessConfig) -> Result<FoldPlan> {
    stratified_kfold(
        ds,
        cfg.folds,
        &mut RngStream::derive(cfg.seed, &[TAG_FOLDS]),
    )
}

#[derive(Clone, Debug)]
pub struct HoldoutResult {
    pub model: TrainedModel,
    pub normalizer: Normalizer,
    pub hidden_units: usize,
    pub accuracy: f64,
    pub f1: f64,
    pub confusion: Confusion,
    pub train_size: usize,
    pub test_size: usize,
}

/// Trains `method` on a single stratified split and scores the held-out part.
pub fn run_holdout(
    ds: &Dataset,
    method: Method,
    holdout: f64,
    cfg: &HarnessConfig,
) -> Result<HoldoutResult> {
    cfg.validate()?;
    let positive = positive_class(ds, cfg)?;
    let (train_idx, test_idx) =
        stratified_holdout(ds, holdout, &mut RngStream::derive(cfg.seed, &[TAG_FOLDS]))?;
    let raw_train = ds.subset(&train_idx);
    let normalizer = Normalizer::fit(&raw_train)?;
    let train_set = normalizer.apply(&raw_train)?;
    let item = WorkItem {
        fold: 0,
        proportion: ProportionSpec::ALL[3],
        method,
    };
    let hidden = match cfg.hidden {
        HiddenSpec::Fixed(h) => h,
        HiddenSpec::Search(mode) => {
            let grid = hidden_grid(method_input_width(method, ds.dim()), mode);
            search_hidden_units(
                &train_set,
                method,
                &grid,
                cfg,
                &mut RngStream::new(item.seed(cfg.seed, TAG_SEARCH)),
            )?
        }
    };
    let model = fit_method(
        &train_set,
        method,
        hidden,
        cfg,
        &mut RngStream::new(item.seed(cfg.seed, TAG_FIT)),
    )?;
    let test_x = normalizer.apply_matrix(&ds.features.select_rows(&test_idx))?;
    let truths: Vec<usize> = test_idx.iter().map(|&i| ds.labels[i]).collect();
    let preds = model.predict_all(&test_x)?;
    let conf = confusion(&preds, &truths, positive)?;
    Ok(HoldoutResult {
        model,
        normalizer,
        hidden_units: hidden,
        accuracy: accuracy(&preds, &truths)?,
        f1: conf.f1(),
        confusion: conf,
        train_size: train_idx.len(),
        test_size: test_idx.len(),
    })
}
