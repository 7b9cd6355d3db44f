// SPDX-License-Identifier: Apache-2.0

//! Gauss–Hermite rule for averages over a Gaussian distribution.

use num_complex::Complex;

use crate::model::{Averaging, BetaEnsemble};
use crate::scalar::Real;

/// Nodes and weights for `∫ e^{-x²} f(x) dx ≈ Σ w_i f(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite<S> {
    nodes: Vec<S>,
    weights: Vec<S>,
}

impl<S: Real> GaussHermite<S> {
    /// Builds an `n`-point rule by Newton iteration on the orthonormal
    /// Hermite recurrence, started from the Jacobi-matrix eigenvalues.
    /// Computed in `f64` regardless of `S`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Hermite rule needs at least one node");
        let (nodes, weights) = hermite_rule(n);
        Self {
            nodes: nodes.into_iter().map(S::lit).collect(),
            weights: weights.into_iter().map(S::lit).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[S] {
        &self.nodes
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    /// Sample points and probability weights for a normal distribution
    /// with the given mean and standard deviation. Weights sum to one.
    pub fn normal_points(&self, mean: S, sigma: S) -> Vec<(S, S)> {
        let scale = S::SQRT_2() * sigma;
        let inv_sqrt_pi = S::one() / S::PI().sqrt();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| (mean + scale * x, w * inv_sqrt_pi))
            .collect()
    }
}

/// Fidelity of a quasimomentum ensemble built from per-β echo amplitudes,
/// using `nodes` Gauss–Hermite points. A degenerate ensemble evaluates the
/// amplitude once at its center. Summation follows node order.
pub fn ensemble_fidelity<S, E, F>(ensemble: &BetaEnsemble<S>, nodes: usize, amplitude: F) -> Result<S, E>
where
    S: Real,
    F: Fn(S) -> Result<Complex<S>, E>,
{
    if ensemble.is_degenerate() {
        return Ok(amplitude(ensemble.center())?.norm_sqr());
    }
    let rule = GaussHermite::<S>::new(nodes);
    let points = rule.normal_points(ensemble.center(), ensemble.sigma());
    match ensemble.averaging {
        Averaging::Coherent => {
            let mut total = Complex::new(S::zero(), S::zero());
            for (beta, weight) in points {
                total += amplitude(beta)? * weight;
            }
            Ok(total.norm_sqr())
        }
        Averaging::Incoherent => {
            let mut total = S::zero();
            for (beta, weight) in points {
                total += amplitude(beta)?.norm_sqr() * weight;
            }
            Ok(total)
        }
    }
}

fn hermite_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
    const MAX_ITER: usize = 20;
    let nf = n as f64;
    // Starting points: eigenvalues of the Jacobi matrix.
    let off: Vec<f64> = (1..n).map(|k| (0.5 * k as f64).sqrt()).collect();
    let mut guesses = tridiagonal_eigenvalues(vec![0.0; n], off);
    guesses.sort_by(|a, b| b.total_cmp(a));

    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = guesses[i].max(0.0);
        let mut pp = 0.0;
        // Orthonormal Hermite functions, scaled by e^{-z²/2} to stay in range.
        for _ in 0..MAX_ITER {
            let mut p1 = PIM4 * (-0.5 * z * z).exp();
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 * (-z * z).exp() / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL.
fn tridiagonal_eigenvalues(mut d: Vec<f64>, off: Vec<f64>) -> Vec<f64> {
    let n = d.len();
    let mut e = off;
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 60, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_sqrt_pi() {
        for n in [1, 2, 5, 16, 64, 128, 256, 512] {
            let rule = GaussHermite::<f64>::new(n);
            let total: f64 = rule.weights().iter().sum();
            assert!((total - std::f64::consts::PI.sqrt()).abs() < 1e-12, "n={n}: {total}");
        }
    }

    #[test]
    fn integrates_moments_and_cosine() {
        let rule = GaussHermite::<f64>::new(64);
        let sp = std::f64::consts::PI.sqrt();
        let second: f64 = rule.nodes().iter().zip(rule.weights()).map(|(x, w)| w * x * x).sum();
        assert!((second - sp / 2.0).abs() < 1e-13);
        let cosine: f64 = rule.nodes().iter().zip(rule.weights()).map(|(x, w)| w * x.cos()).sum();
        assert!((cosine - sp * (-0.25_f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn nodes_are_sorted_descending_and_symmetric() {
        let rule = GaussHermite::<f64>::new(33);
        let x = rule.nodes();
        assert!(x.windows(2).all(|p| p[0] > p[1]));
        for i in 0..x.len() {
            assert_eq!(x[i], -x[x.len() - 1 - i]);
        }
    }

    #[test]
    fn large_rules_stay_ordered() {
        for n in [200, 301, 600] {
            let rule = GaussHermite::<f64>::new(n);
            assert!(rule.nodes().windows(2).all(|p| p[0] > p[1]), "n={n}");
            let second: f64 = rule.nodes().iter().zip(rule.weights()).map(|(x, w)| w * x * x).sum();
            assert!((second - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn normal_average_of_quadratic() {
        let rule = GaussHermite::<f64>::new(16);
        let pts = rule.normal_points(0.5, 0.03);
        let mean: f64 = pts.iter().map(|(b, w)| w * b).sum();
        let var: f64 = pts.iter().map(|(b, w)| w * (b - 0.5).powi(2)).sum();
        assert!((mean - 0.5).abs() < 1e-14);
        assert!((var - 0.0009).abs() < 1e-15);
    }
}
