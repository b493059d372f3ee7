//! Gaussian naive Bayes.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// Class priors for labels 0 and 1.
    pub priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
}

pub const VAR_SMOOTHING: f64 = 1e-9;

pub fn fit(xs: &[Vec<f64>], ys: &[f64]) -> GaussianNb {
    let d = xs[0].len();
    let n = xs.len() as f64;
    // Smoothing is relative to the largest per-feature variance of the data.
    let overall_mean: Vec<f64> = (0..d).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / n).collect();
    let max_var = (0..d)
        .map(|j| xs.iter().map(|x| (x[j] - overall_mean[j]).powi(2)).sum::<f64>() / n)
        .fold(0.0, f64::max);
    let eps = VAR_SMOOTHING * max_var;

    let stats = |label: f64| {
        let rows: Vec<&Vec<f64>> = xs.iter().zip(ys).filter(|(_, y)| **y == label).map(|(x, _)| x).collect();
        let m = rows.len() as f64;
        let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|x| x[j]).sum::<f64>() / m).collect();
        let var: Vec<f64> = (0..d)
            .map(|j| rows.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / m + eps)
            .collect();
        (m / n, mean, var)
    };
    let (p0, m0, v0) = stats(0.0);
    let (p1, m1, v1) = stats(1.0);
    GaussianNb {
        priors: [p0, p1],
        means: [m0, m1],
        variances: [v0, v1],
    }
}

impl GaussianNb {
    fn joint_log_likelihood(&self, x: &[f64], c: usize) -> f64 {
        let ll: f64 = x
            .iter()
            .zip(&self.means[c])
            .zip(&self.variances[c])
            .map(|((xi, mu), var)| {
                if *var <= 0.0 {
                    // Zero variance everywhere: the feature carries no signal.
                    return 0.0;
                }
                -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (xi - mu).powi(2) / (2.0 * var)
            })
            .sum();
        self.priors[c].ln() + ll
    }

    pub fn proba(&self, x: &[f64]) -> f64 {
        let l0 = self.joint_log_likelihood(x, 0);
        let l1 = self.joint_log_likelihood(x, 1);
        let m = l0.max(l1);
        let e0 = (l0 - m).exp();
        let e1 = (l1 - m).exp();
        e1 / (e0 + e1)
    }
}
