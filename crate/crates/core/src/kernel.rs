//! Shared Monte-Carlo kernel for one receiver.
//!
//! For every transmitted joint vector `x^{k1}` and noise draw `n_s` the
//! kernel evaluates `ln Σ_{k2} exp(−‖n_s + r_{k1} − r_{k2}‖² + ‖n_s‖²)`, where
//! `r_k = √P G x^k` are the noiseless received points. Optionally it also
//! accumulates the outer products of the posterior-mean error.

use rayon::prelude::*;

use crate::{CMatrix, C64};

/// Outer indices handled per task. Fixed so the reduction order never
/// depends on the worker count.
const CHUNK: usize = 16;

pub(crate) struct ReceivedPoints {
    /// Row-major `count × rx_dim` buffer of `√P G x^k`.
    pub points: Vec<C64>,
    /// Row-major `count × sym_dim` buffer of `x^k`.
    pub symbols: Vec<C64>,
    pub count: usize,
    pub rx_dim: usize,
    pub sym_dim: usize,
}

impl ReceivedPoints {
    pub fn new(map: &CMatrix, symbols: Vec<C64>, count: usize, sqrt_p: f64) -> Self {
        let rx_dim = map.nrows();
        let sym_dim = map.ncols();
        let mut points = vec![C64::new(0.0, 0.0); count * rx_dim];
        for k in 0..count {
            let x = &symbols[k * sym_dim..(k + 1) * sym_dim];
            for r in 0..rx_dim {
                let mut acc = C64::new(0.0, 0.0);
                for (c, xc) in x.iter().enumerate() {
                    acc += map[(r, c)] * xc;
                }
                points[k * rx_dim + r] = acc * sqrt_p;
            }
        }
        Self {
            points,
            symbols,
            count,
            rx_dim,
            sym_dim,
        }
    }

    fn point(&self, k: usize) -> &[C64] {
        &self.points[k * self.rx_dim..(k + 1) * self.rx_dim]
    }

    fn symbol(&self, k: usize) -> &[C64] {
        &self.symbols[k * self.sym_dim..(k + 1) * self.sym_dim]
    }
}

pub(crate) struct KernelOutput {
    /// `Σ_{k1}` of the log-sum term for each noise draw, in nats.
    pub per_sample: Vec<f64>,
    /// `Σ_{k1,s} e eᴴ` with `e = x^{k1} − E[x | y]`, row-major `sym_dim²`.
    pub error_cov: Option<Vec<C64>>,
}

pub(crate) fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Stable `ln Σ exp(v)`; `buf` must be non-empty.
pub(crate) fn log_sum_exp(buf: &[f64]) -> f64 {
    let max = buf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + buf.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub(crate) fn run(pts: &ReceivedPoints, noise: &[C64], samples: usize, with_error: bool) -> KernelOutput {
    let n = pts.count;
    let nr = pts.rx_dim;
    let d = pts.sym_dim;
    let chunks: Vec<(Vec<f64>, Option<Vec<C64>>)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut per_sample = vec![0.0; samples];
            let mut cov = with_error.then(|| vec![C64::new(0.0, 0.0); d * d]);
            let mut expo = vec![0.0; n];
            let mut q = vec![C64::new(0.0, 0.0); nr];
            let mut err = vec![C64::new(0.0, 0.0); d];
            for k1 in chunk * CHUNK..((chunk + 1) * CHUNK).min(n) {
                let r1 = pts.point(k1);
                for (s, acc) in per_sample.iter_mut().enumerate() {
                    let ns = &noise[s * nr..(s + 1) * nr];
                    let mut noise_sq = 0.0;
                    for l in 0..nr {
                        q[l] = ns[l] + r1[l];
                        noise_sq += ns[l].norm_sqr();
                    }
                    for (k2, e) in expo.iter_mut().enumerate() {
                        let r2 = pts.point(k2);
                        let mut dist = 0.0;
                        for l in 0..nr {
                            dist += (q[l] - r2[l]).norm_sqr();
                        }
                        *e = noise_sq - dist;
                    }
                    let lse = log_sum_exp(&expo);
                    *acc += lse;
                    if let Some(cov) = cov.as_mut() {
                        err.copy_from_slice(pts.symbol(k1));
                        for (k2, e) in expo.iter().enumerate() {
                            let w = (e - lse).exp();
                            if w > 0.0 {
                                for (slot, x) in err.iter_mut().zip(pts.symbol(k2)) {
                                    *slot -= x * w;
                                }
                            }
                        }
                        for r in 0..d {
                            for c in 0..d {
                                cov[r * d + c] += err[r] * err[c].conj();
                            }
                        }
                    }
                }
            }
            (per_sample, cov)
        })
        .collect();

    let mut per_sample = vec![0.0; samples];
    let mut error_cov = with_error.then(|| vec![C64::new(0.0, 0.0); d * d]);
    for (ps, cov) in chunks {
        for (a, b) in per_sample.iter_mut().zip(ps) {
            *a += b;
        }
        if let (Some(total), Some(part)) = (error_cov.as_mut(), cov) {
            for (a, b) in total.iter_mut().zip(part) {
                *a += b;
            }
        }
    }
    KernelOutput {
        per_sample,
        error_cov,
    }
}

/// Noise-free counterpart: `Σ_{k1} ln Σ_{k2} exp(−‖r_{k1} − r_{k2}‖²)`.
pub(crate) fn run_noiseless(pts: &ReceivedPoints) -> f64 {
    let n = pts.count;
    let nr = pts.rx_dim;
    let parts: Vec<f64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut expo = vec![0.0; n];
            let mut total = 0.0;
            for k1 in chunk * CHUNK..((chunk + 1) * CHUNK).min(n) {
                let r1 = pts.point(k1);
                for (k2, e) in expo.iter_mut().enumerate() {
                    let r2 = pts.point(k2);
                    *e = -(0..nr).map(|l| (r1[l] - r2[l]).norm_sqr()).sum::<f64>();
                }
                total += log_sum_exp(&expo);
            }
            total
        })
        .collect();
    parts.iter().sum()
}
