//! Mini-batch adam training.

use super::{Gradients, Network, Params, Scratch};
use crate::error::{Error, Result};
use crate::numkit::{Matrix, RngStream};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub final_loss: f64,
    pub epochs_run: usize,
    /// Mean training loss of each epoch, measured on the forward passes
    /// made before each batch update.
    pub loss_history: Vec<f64>,
}

/// First and second moment estimates plus the step counter.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub m: Params,
    pub v: Params,
    pub step: u64,
}

impl AdamState {
    pub fn new(net: &Network) -> Self {
        AdamState {
            m: Params::zeros_like(&net.config),
            v: Params::zeros_like(&net.config),
            step: 0,
        }
    }

    /// One bias-corrected adam step over every parameter.
    pub fn apply(&mut self, net: &mut Network, grads: &Gradients) {
        self.step += 1;
        let cfg = &net.config;
        let (lr, b1, b2, eps) = (cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
        let step = self.step;
        let params = net.params.slices_mut();
        let ms = self.m.slices_mut();
        let vs = self.v.slices_mut();
        for (((p, g), m), v) in params.into_iter().zip(grads.slices()).zip(ms).zip(vs) {
            adam_update(p, g, m, v, step, lr, b1, b2, eps);
        }
    }
}

/// Standard adam update of `param` in place; `step` is 1-based.
#[allow(clippy::too_many_arguments)]
pub fn adam_update(
    param: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    step: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    let bc1 = 1.0 - beta1.powi(step as i32);
    let bc2 = 1.0 - beta2.powi(step as i32);
    for i in 0..param.len() {
        let g = grad[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        param[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// Trains for `config.epochs` epochs of shuffled mini-batches. The result is
/// a pure function of the starting network, the data and the stream state.
pub fn train(
    mut net: Network,
    inputs: &Matrix,
    targets: &Matrix,
    rng: &mut RngStream,
) -> Result<(Network, TrainReport)> {
    net.check_batch("train", inputs, targets)?;
    if inputs.rows() == 0 {
        return Err(Error::Data("cannot train on an empty set".into()));
    }
    let n = inputs.rows();
    let batch_size = net.config.batch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut adam = AdamState::new(&net);
    let mut grads = Params::zeros_like(&net.config);
    let mut scratch = Scratch::new(&net.config);
    let mut history = Vec::with_capacity(net.config.epochs);

    for epoch in 0..net.config.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for (batch, rows) in order.chunks(batch_size).enumerate() {
            grads.fill_zero();
            let loss_sum = net.accumulate(
                inputs,
                targets,
                rows.iter().copied(),
                &mut grads,
                &mut scratch,
            );
            if !loss_sum.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch });
            }
            epoch_loss += loss_sum;
            grads.scale(1.0 / rows.len() as f64);
            adam.apply(&mut net, &grads);
        }
        history.push(epoch_loss / n as f64);
    }

    if !net.params.is_finite() {
        return Err(Error::NonFiniteLoss {
            epoch: net.config.epochs.saturating_sub(1),
            batch: n.div_ceil(batch_size).saturating_sub(1),
        });
    }
    let report = TrainReport {
        final_loss: *history.last().expect("epochs >= 1"),
        epochs_run: history.len(),
        loss_history: history,
    };
    Ok((net, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::{init_network, NetConfig, OutputActivation};

    #[test]
    fn first_adam_step_moves_by_lr() {
        let mut p = [0.5];
        let (mut m, mut v) = ([0.0], [0.0]);
        adam_update(&mut p, &[1.0], &mut m, &mut v, 1, 0.001, 0.9, 0.999, 1e-8);
        assert!((0.5 - p[0] - 0.001).abs() < 1e-6, "{}", p[0]);
    }

    fn toy_set() -> (Matrix, Matrix) {
        let x = Matrix::from_rows(&[[-2.0, -1.0], [-1.5, -2.0], [1.0, 2.0], [2.0, 1.5]]).unwrap();
        let t = Matrix::from_rows(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]).unwrap();
        (x, t)
    }

    #[test]
    fn separable_toy_converges() {
        let (x, t) = toy_set();
        let mut cfg = NetConfig::from_layer_sizes(&[2, 4, 2], OutputActivation::Sigmoid).unwrap();
        cfg.epochs = 500;
        let mut rng = RngStream::new(1);
        let net = init_network(cfg, &mut rng).unwrap();
        let (_, report) = train(net, &x, &t, &mut rng).unwrap();
        assert!(report.final_loss < 0.1, "{}", report.final_loss);
        assert_eq!(report.loss_history.len(), 500);
        assert_eq!(report.epochs_run, 500);
    }

    #[test]
    fn replay_is_bitwise() {
        let (x, t) = toy_set();
        let cfg = NetConfig::baseline(2, 2, 3);
        let run = || {
            let mut rng = RngStream::new(99);
            let net = init_network(cfg.clone(), &mut rng).unwrap();
            train(net, &x, &t, &mut rng).unwrap()
        };
        let (a, ra) = run();
        let (b, rb) = run();
        assert_eq!(
            a.params
                .flatten()
                .iter()
                .map(|v| v.to_bits())
                .collect::<Vec<_>>(),
            b.params
                .flatten()
                .iter()
                .map(|v| v.to_bits())
                .collect::<Vec<_>>()
        );
        assert_eq!(ra, rb);
    }

    #[test]
    fn full_batch_small_lr_loss_non_increasing() {
        // Positive inputs, positive first-layer weights: the hidden ReLUs stay
        // in their linear region, so the model is a linear map into a sigmoid.
        let x = Matrix::from_rows(&[[0.5, 1.0], [1.0, 0.2], [2.0, 1.5], [1.5, 2.5]]).unwrap();
        let t = Matrix::from_rows(&[[0.0], [0.0], [1.0], [1.0]]).unwrap();
        let mut cfg = NetConfig::from_layer_sizes(&[2, 2, 1], OutputActivation::Sigmoid).unwrap();
        cfg.epochs = 300;
        cfg.batch_size = 4;
        cfg.learning_rate = 1e-3;
        let params = Params {
            w1: Matrix::from_rows(&[[0.6, 0.1], [0.2, 0.5]]).unwrap(),
            b1: vec![0.0, 0.0],
            w2: Matrix::from_rows(&[[0.3, -0.4]]).unwrap(),
            b2: vec![0.0],
        };
        let net = Network::from_params(cfg, params).unwrap();
        let (_, report) = train(net, &x, &t, &mut RngStream::new(0)).unwrap();
        for w in report.loss_history.windows(2) {
            assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn non_finite_loss_is_reported() {
        let (mut x, t) = toy_set();
        x.set(2, 0, f64::NAN);
        let cfg = NetConfig::baseline(2, 2, 3);
        let mut rng = RngStream::new(4);
        let net = init_network(cfg, &mut rng).unwrap();
        let err = train(net, &x, &t, &mut rng).unwrap_err();
        assert!(
            matches!(err, Error::NonFiniteLoss { epoch: 0, .. }),
            "{err}"
        );
    }
}
