use std::fmt::Write as _;

use super::experiment::{HarnessConfig, HiddenSpec, Method};
use super::folds::ProportionSpec;
use super::metrics::Confusion;
use crate::datasets::Dataset;

pub const CSV_HEADER: &str = "task,method,proportion,fold,accuracy,f1,tp,fp,fn,tn,seed";

#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub method: Method,
    pub proportion: ProportionSpec,
    /// 0-based fold index (printed 1-based).
    pub fold: usize,
    /// Percent.
    pub accuracy: f64,
    pub f1: f64,
    pub confusion: Confusion,
    pub hidden_units: usize,
    pub train_size: usize,
    /// Seed of the stream that initialised and trained this model.
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub method: Method,
    pub proportion: ProportionSpec,
    pub folds: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_f1: f64,
    pub std_f1: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub task: String,
    pub class_names: Vec<String>,
    pub class_counts: Vec<usize>,
    pub positive_class: usize,
    pub config: HarnessConfig,
    /// Ordered by proportion, then method, then fold.
    pub rows: Vec<MetricRow>,
    pub summaries: Vec<Summary>,
}

/// Mean and sample standard deviation.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl EvalReport {
    pub fn new(
        ds: &Dataset,
        config: HarnessConfig,
        positive_class: usize,
        rows: Vec<MetricRow>,
    ) -> Self {
        let mut summaries = Vec::new();
        for &method in &config.methods {
            for &proportion in &config.proportions {
                let sel: Vec<&MetricRow> = rows
                    .iter()
                    .filter(|r| r.method == method && r.proportion == proportion)
                    .collect();
                if sel.is_empty() {
                    continue;
                }
                let acc: Vec<f64> = sel.iter().map(|r| r.accuracy).collect();
                let f1: Vec<f64> = sel.iter().map(|r| r.f1).collect();
                let (mean_accuracy, std_accuracy) = mean_std(&acc);
                let (mean_f1, std_f1) = mean_std(&f1);
                summaries.push(Summary {
                    method,
                    proportion,
                    folds: sel.len(),
                    mean_accuracy,
                    std_accuracy,
                    mean_f1,
                    std_f1,
                });
            }
        }
        EvalReport {
            task: config.task.clone(),
            class_names: ds.class_names.clone(),
            class_counts: ds.class_counts(),
            positive_class,
            config,
            rows,
            summaries,
        }
    }

    pub fn summary(&self, method: Method, proportion: ProportionSpec) -> Option<&Summary> {
        self.summaries
            .iter()
            .find(|s| s.method == method && s.proportion == proportion)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let c = &r.confusion;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                self.task,
                r.method.id(),
                r.proportion,
                r.fold + 1,
                r.accuracy,
                r.f1,
                c.tp,
                c.fp,
                c.fn_,
                c.tn,
                r.seed
            )
            .unwrap();
        }
        out
    }

    /// Fold-mean tables of accuracy and F1, one row per method and one
    /// column per data proportion.
    pub fn to_table(&self) -> String {
        let cfg = &self.config;
        let mut out = String::new();
        let counts: Vec<String> = self
            .class_names
            .iter()
            .zip(&self.class_counts)
            .map(|(n, c)| format!("{n}={c}"))
            .collect();
        writeln!(out, "task: {} ({})", self.task, counts.join(", ")).unwrap();
        let hidden = match cfg.hidden {
            HiddenSpec::Fixed(h) => h.to_string(),
            HiddenSpec::Search(mode) => format!("search ({mode:?})").to_lowercase(),
        };
        writeln!(
            out,
            "{}-fold CV, seed {}, epochs {}, lr {}, batch {}, hidden {}, refs {} ({})",
            cfg.folds,
            cfg.seed,
            cfg.epochs,
            cfg.learning_rate,
            cfg.batch_size,
            hidden,
            cfg.references,
            cfg.reference_policy
        )
        .unwrap();

        let section = |out: &mut String, title: &str, value: &dyn Fn(&Summary) -> String| {
            writeln!(out, "\n{title}").unwrap();
            write!(out, "{:<8}", "method").unwrap();
            for p in &cfg.proportions {
                write!(out, "{:>16}", p.to_string()).unwrap();
            }
            out.push('\n');
            for &m in &cfg.methods {
                write!(out, "{:<8}", m.to_string()).unwrap();
                for &p in &cfg.proportions {
                    let cell = self.summary(m, p).map_or_else(|| "-".to_string(), value);
                    write!(out, "{cell:>16}").unwrap();
                }
                out.push('\n');
            }
        };
        section(&mut out, "Accuracy (%), mean +/- std over folds", &|s| {
            format!("{:.1} +/- {:.1}", s.mean_accuracy, s.std_accuracy)
        });
        let positive = self
            .class_names
            .get(self.positive_class)
            .map_or("?", String::as_str);
        section(
            &mut out,
            &format!("F1 (positive class `{positive}`), mean +/- std over folds"),
            &|s| format!("{:.3} +/- {:.3}", s.mean_f1, s.std_f1),
        );
        out
    }
}
