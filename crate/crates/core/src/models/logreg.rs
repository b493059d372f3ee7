//! L2-regularized logistic regression fit by full-batch gradient descent
//! with Armijo backtracking.

use serde::{Deserialize, Serialize};

use super::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogReg {
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    /// Penalty strength; `None` means `1 / n_samples`.
    pub l2: Option<f64>,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            l2: None,
            max_iter: 1000,
            tol: 1e-6,
        }
    }
}

impl LogReg {
    pub fn proba(&self, x: &[f64]) -> f64 {
        sigmoid(dot(&self.weights, x) + self.bias)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean log-loss plus `l2/2 · ‖w‖²` and its gradient. `theta` holds the
/// weights followed by the (unpenalized) bias.
pub fn loss_and_grad(theta: &[f64], xs: &[Vec<f64>], ys: &[f64], l2: f64) -> (f64, Vec<f64>) {
    let d = theta.len() - 1;
    let (w, b) = (&theta[..d], theta[d]);
    let n = xs.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; d + 1];
    for (x, &y) in xs.iter().zip(ys) {
        let z = dot(w, x) + b;
        // log(1 + e^z) - y z, computed stably.
        loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z;
        let r = sigmoid(z) - y;
        for (g, xi) in grad[..d].iter_mut().zip(x) {
            *g += r * xi;
        }
        grad[d] += r;
    }
    loss /= n;
    grad.iter_mut().for_each(|g| *g /= n);
    loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
    for (g, wi) in grad[..d].iter_mut().zip(w) {
        *g += l2 * wi;
    }
    (loss, grad)
}

pub fn fit(xs: &[Vec<f64>], ys: &[f64], params: &LogRegParams) -> LogReg {
    let d = xs.first().map_or(0, Vec::len);
    let l2 = params.l2.unwrap_or(1.0 / xs.len() as f64);
    let mut theta = vec![0.0; d + 1];
    let (mut loss, mut grad) = loss_and_grad(&theta, xs, ys, l2);
    let mut step = 1.0;
    for iter in 0..params.max_iter {
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if gnorm2.sqrt() < params.tol {
            log::debug!("logreg converged after {iter} iterations");
            break;
        }
        step *= 2.0;
        loop {
            let cand: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - step * g).collect();
            let (cand_loss, cand_grad) = loss_and_grad(&cand, xs, ys, l2);
            if cand_loss <= loss - 1e-4 * step * gnorm2 || step < 1e-12 {
                theta = cand;
                loss = cand_loss;
                grad = cand_grad;
                break;
            }
            step *= 0.5;
        }
    }
    LogReg {
        bias: theta[d],
        weights: theta[..d].to_vec(),
    }
}
