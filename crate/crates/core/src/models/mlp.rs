//! Feed-forward network with ReLU hidden layers and a sigmoid output,
//! trained by seeded mini-batch Adam on log-loss.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::sigmoid;

pub const HIDDEN: [usize; 3] = [12, 8, 6];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// Layer widths from input to output, e.g. `[32, 12, 8, 6, 1]`.
    pub sizes: Vec<usize>,
    /// Per layer: row-major weight matrix (`out × in`) then bias vector.
    pub params: Vec<f64>,
    pub l2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            epochs: 200,
            batch_size: 32,
            learning_rate: 0.01,
            l2: 1e-4,
        }
    }
}

impl Mlp {
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: &[usize], l2: f64, rng: &mut R) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let mut params = Vec::new();
        for w in sizes.windows(2) {
            let he = Normal::new(0.0, (2.0 / w[0] as f64).sqrt()).expect("positive std");
            params.extend((0..w[0] * w[1]).map(|_| he.sample(rng)));
            params.extend(std::iter::repeat_n(0.0, w[1]));
        }
        Mlp { sizes, params, l2 }
    }

    fn layer_offsets(&self) -> Vec<(usize, usize)> {
        let mut off = 0;
        self.sizes
            .windows(2)
            .map(|w| {
                let (wo, bo) = (off, off + w[0] * w[1]);
                off = bo + w[1];
                (wo, bo)
            })
            .collect()
    }

    /// Post-activation values of every layer, input first.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let offsets = self.layer_offsets();
        let last = offsets.len() - 1;
        let mut acts = vec![x.to_vec()];
        for (l, (wo, bo)) in offsets.into_iter().enumerate() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let prev = &acts[l];
            let out: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &self.params[wo + o * n_in..wo + (o + 1) * n_in];
                    let z = self.params[bo + o] + row.iter().zip(prev).map(|(w, a)| w * a).sum::<f64>();
                    if l == last { z } else { z.max(0.0) }
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    pub fn proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.forward(x).last().expect("output layer")[0])
    }

    /// Mean log-loss over the batch plus `l2/2 · Σ W²`, and its gradient
    /// with respect to `params`.
    pub fn loss_and_grad(&self, xs: &[&[f64]], ys: &[f64]) -> (f64, Vec<f64>) {
        let offsets = self.layer_offsets();
        let n = xs.len() as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let acts = self.forward(x);
            let z = acts.last().expect("output layer")[0];
            loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z;
            let mut delta = vec![sigmoid(z) - y];
            for l in (0..offsets.len()).rev() {
                let (wo, bo) = offsets[l];
                let n_in = self.sizes[l];
                let prev = &acts[l];
                for (o, d) in delta.iter().enumerate() {
                    grad[bo + o] += d;
                    for i in 0..n_in {
                        grad[wo + o * n_in + i] += d * prev[i];
                    }
                }
                if l > 0 {
                    delta = (0..n_in)
                        .map(|i| {
                            if prev[i] <= 0.0 {
                                return 0.0;
                            }
                            delta
                                .iter()
                                .enumerate()
                                .map(|(o, d)| d * self.params[wo + o * n_in + i])
                                .sum()
                        })
                        .collect();
                }
            }
        }
        loss /= n;
        grad.iter_mut().for_each(|g| *g /= n);
        for &(wo, bo) in &offsets {
            for (g, &w) in grad[wo..bo].iter_mut().zip(&self.params[wo..bo]) {
                loss += 0.5 * self.l2 * w * w;
                *g += self.l2 * w;
            }
        }
        (loss, grad)
    }
}

pub fn fit<R: Rng + ?Sized>(xs: &[Vec<f64>], ys: &[f64], params: &MlpParams, rng: &mut R) -> Mlp {
    let d = xs[0].len();
    let mut model = Mlp::new(d, &HIDDEN, params.l2, rng);
    let (b1, b2, eps) = (0.9, 0.999, 1e-8);
    let mut m = vec![0.0; model.params.len()];
    let mut v = vec![0.0; model.params.len()];
    let mut t = 0;
    let mut order: Vec<usize> = (0..xs.len()).collect();
    for _ in 0..params.epochs {
        order.shuffle(rng);
        for batch in order.chunks(params.batch_size.max(1)) {
            let bx: Vec<&[f64]> = batch.iter().map(|&i| xs[i].as_slice()).collect();
            let by: Vec<f64> = batch.iter().map(|&i| ys[i]).collect();
            let (_, g) = model.loss_and_grad(&bx, &by);
            t += 1;
            let c1 = 1.0 - f64::powi(b1, t);
            let c2 = 1.0 - f64::powi(b2, t);
            for k in 0..g.len() {
                m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                model.params[k] -= params.learning_rate * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
            }
        }
    }
    model
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn output_in_open_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Mlp::new(4, &HIDDEN, 0.0, &mut rng);
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let p = m.proba(&x);
            assert!(p > 0.0 && p < 1.0);
        }
        assert_eq!(m.sizes, vec![4, 12, 8, 6, 1]);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..5 {
            let m = Mlp::new(4, &HIDDEN, 0.01, &mut rng);
            let xs: Vec<Vec<f64>> = (0..5)
                .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let ys: Vec<f64> = (0..5).map(|i| f64::from(u8::from(i % 2 == 0))).collect();
            let bx: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
            let (_, grad) = m.loss_and_grad(&bx, &ys);
            for (k, &gk) in grad.iter().enumerate() {
                let h = 1e-6;
                let mut plus = m.clone();
                let mut minus = m.clone();
                plus.params[k] += h;
                minus.params[k] -= h;
                let fd = (plus.loss_and_grad(&bx, &ys).0 - minus.loss_and_grad(&bx, &ys).0) / (2.0 * h);
                let scale = fd.abs().max(gk.abs());
                if scale < 1e-7 {
                    continue;
                }
                assert!((fd - gk).abs() / scale < 1e-3, "trial {trial} param {k}: {fd} vs {}", gk);
            }
        }
    }

    #[test]
    fn learns_xor_like_split() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<Vec<f64>> = (0..200)
            .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let ys: Vec<f64> = xs.iter().map(|x| f64::from(u8::from(x[0] * x[1] > 0.0))).collect();
        let m = fit(&xs, &ys, &MlpParams { epochs: 300, ..Default::default() }, &mut rng);
        let acc = xs.iter().zip(&ys).filter(|(x, y)| (m.proba(x) >= 0.5) == (**y == 1.0)).count();
        assert!(acc >= 170, "accuracy {acc}/200");
    }
}
