use crate::error::{Error, Result};

/// Binary confusion counts with respect to one positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// `2PR / (P + R)`, or 0 when `P + R = 0`.
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn check_lengths(predictions: &[usize], truths: &[usize]) -> Result<()> {
    if predictions.is_empty() {
        return Err(Error::Data("metrics need at least one prediction".into()));
    }
    if predictions.len() != truths.len() {
        return Err(Error::shape(
            "metrics",
            format!("{} predictions", predictions.len()),
            format!("{} truths", truths.len()),
        ));
    }
    Ok(())
}

/// Percentage of correct predictions.
pub fn accuracy(predictions: &[usize], truths: &[usize]) -> Result<f64> {
    check_lengths(predictions, truths)?;
    let correct = predictions
        .iter()
        .zip(truths)
        .filter(|(p, t)| p == t)
        .count();
    Ok(100.0 * correct as f64 / predictions.len() as f64)
}

/// One-vs-rest confusion counts for `positive`.
pub fn confusion(predictions: &[usize], truths: &[usize], positive: usize) -> Result<Confusion> {
    check_lengths(predictions, truths)?;
    let mut c = Confusion::default();
    for (&p, &t) in predictions.iter().zip(truths) {
        match (p == positive, t == positive) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// F1 with `positive` treated as the positive class.
pub fn f1_minority(predictions: &[usize], truths: &[usize], positive: usize) -> Result<f64> {
    let c = confusion(predictions, truths, positive)?;
    if c.tp + c.fn_ == 0 {
        return Err(Error::Data(format!(
            "positive class {positive} does not occur in the truths"
        )));
    }
    Ok(c.f1())
}
