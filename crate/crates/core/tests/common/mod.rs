//! Independent reference computations for the Monte-Carlo estimators.
#![allow(dead_code)]

use std::f64::consts::PI;

use ccsc_core::{CMatrix, JointSymbolTable, C64};
use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss–Hermite nodes and weights for `∫ e^{-t²} f(t) dt` (Golub–Welsch).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], PI.sqrt() * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Noiseless received points `√P G x^k` for every entry of `table`.
pub fn received_points(map: &CMatrix, table: &JointSymbolTable, power: f64) -> Vec<Vec<C64>> {
    (0..table.total())
        .map(|k| {
            let x = table.vector(k).unwrap();
            (map * x).iter().map(|z| z * power.sqrt()).collect()
        })
        .collect()
}

/// `log₂ N − (1/N) Σ_{k1} E_n[log₂ Σ_{k2} exp(‖n‖² − ‖n + r1 − r2‖²)]` for a
/// single receive antenna, with the expectation over `n ~ CN(0, 1)` taken by
/// a tensor Gauss–Hermite rule in the real and imaginary parts.
pub fn quadrature_mi(points: &[Vec<C64>], nodes: usize) -> f64 {
    assert!(points.iter().all(|p| p.len() == 1), "quadrature oracle handles one antenna");
    let (t, w) = gauss_hermite(nodes);
    let n = points.len();
    let mut acc = 0.0;
    for r1 in points {
        for (ta, wa) in t.iter().zip(&w) {
            for (tb, wb) in t.iter().zip(&w) {
                // t has density e^{-t²}/√π, i.e. variance 1/2 per component
                let noise = C64::new(*ta, *tb);
                let expo: Vec<f64> = points
                    .iter()
                    .map(|r2| noise.norm_sqr() - (noise + r1[0] - r2[0]).norm_sqr())
                    .collect();
                let max = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + expo.iter().map(|e| (e - max).exp()).sum::<f64>().ln();
                acc += wa * wb / PI * lse;
            }
        }
    }
    (n as f64).log2() - acc / n as f64 / std::f64::consts::LN_2
}

/// MMSE matrix `E[(x − E[x|y])(x − E[x|y])ᴴ]` for a single receive antenna,
/// with `y = r^k + n` and the same tensor rule over `n`.
pub fn quadrature_mmse(points: &[Vec<C64>], symbols: &[Vec<C64>], nodes: usize) -> DMatrix<C64> {
    assert!(points.iter().all(|p| p.len() == 1), "quadrature oracle handles one antenna");
    let (t, w) = gauss_hermite(nodes);
    let dim = symbols[0].len();
    let n = points.len();
    let mut e = DMatrix::<C64>::zeros(dim, dim);
    for (r1, x1) in points.iter().zip(symbols) {
        for (ta, wa) in t.iter().zip(&w) {
            for (tb, wb) in t.iter().zip(&w) {
                let y = r1[0] + C64::new(*ta, *tb);
                let logs: Vec<f64> = points.iter().map(|r2| -(y - r2[0]).norm_sqr()).collect();
                let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let post: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
                let z: f64 = post.iter().sum();
                let mut err: Vec<C64> = x1.clone();
                for (p, x2) in post.iter().zip(symbols) {
                    for (e, x) in err.iter_mut().zip(x2) {
                        *e -= x * (p / z);
                    }
                }
                let weight = wa * wb / PI / n as f64;
                for a in 0..dim {
                    for b in 0..dim {
                        e[(a, b)] += err[a] * err[b].conj() * weight;
                    }
                }
            }
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_moments() {
        let (t, w) = gauss_hermite(20);
        let m0: f64 = w.iter().sum();
        let m2: f64 = t.iter().zip(&w).map(|(x, v)| x * x * v).sum();
        assert!((m0 - PI.sqrt()).abs() < 1e-12);
        assert!((m2 - PI.sqrt() / 2.0).abs() < 1e-12);
    }
}
