//! Central finite-difference check of the analytic gradients.

use std::fmt;

use super::{Gradients, Network};
use crate::error::Result;
use crate::numkit::Matrix;

pub const FD_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamTensor {
    W1,
    B1,
    W2,
    B2,
}

impl ParamTensor {
    const ORDER: [ParamTensor; 4] = [
        ParamTensor::W1,
        ParamTensor::B1,
        ParamTensor::W2,
        ParamTensor::B2,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamCoord {
    pub tensor: ParamTensor,
    pub row: usize,
    pub col: usize,
}

impl fmt::Display for ParamCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.tensor {
            ParamTensor::W1 => "w1",
            ParamTensor::W2 => "w2",
            ParamTensor::B1 => return write!(f, "b1[{}]", self.row),
            ParamTensor::B2 => return write!(f, "b2[{}]", self.row),
        };
        write!(f, "{name}[{}][{}]", self.row, self.col)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    /// max over parameters of |a - n| / max(|a|, |n|, 1e-8)
    pub max_relative_error: f64,
    pub worst: Option<ParamCoord>,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    pub parameters_checked: usize,
}

pub fn finite_diff_check(
    net: &Network,
    inputs: &Matrix,
    targets: &Matrix,
) -> Result<GradCheckReport> {
    finite_diff_check_with(net, inputs, targets, |n, x, t| n.gradient(x, t))
}

/// Same as [`finite_diff_check`] but compares against gradients produced by
/// `analytic`, which lets tests inject a broken backward pass.
pub fn finite_diff_check_with<F>(
    net: &Network,
    inputs: &Matrix,
    targets: &Matrix,
    analytic: F,
) -> Result<GradCheckReport>
where
    F: Fn(&Network, &Matrix, &Matrix) -> Result<Gradients>,
{
    let grads = analytic(net, inputs, targets)?;
    let mut probe = net.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: None,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
        parameters_checked: 0,
    };

    for (t, tensor) in ParamTensor::ORDER.into_iter().enumerate() {
        let cols = match tensor {
            ParamTensor::W1 => net.config.input_dim,
            ParamTensor::W2 => net.config.hidden_units,
            ParamTensor::B1 | ParamTensor::B2 => usize::MAX,
        };
        let len = net.params.slices()[t].len();
        for i in 0..len {
            let original = net.params.slices()[t][i];
            probe.params.slices_mut()[t][i] = original + FD_STEP;
            let plus = probe.batch_loss(inputs, targets)?;
            probe.params.slices_mut()[t][i] = original - FD_STEP;
            let minus = probe.batch_loss(inputs, targets)?;
            probe.params.slices_mut()[t][i] = original;

            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let a = grads.slices()[t][i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            report.parameters_checked += 1;
            if rel > report.max_relative_error || report.worst.is_none() {
                let (row, col) = if cols == usize::MAX {
                    (i, 0)
                } else {
                    (i / cols, i % cols)
                };
                report.max_relative_error = rel;
                report.worst = Some(ParamCoord { tensor, row, col });
                report.worst_analytic = a;
                report.worst_numeric = numeric;
            }
        }
    }
    Ok(report)
}
