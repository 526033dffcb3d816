//! Independent reference constructions shared by the integration tests.

#![allow(dead_code)]

use cattomo_core::{DensityMatrix, DetectorModel, C64};
use nalgebra::DMatrix;

fn choose(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Heralding effect on the reflected mode, written out per detector type.
pub fn herald_effect(det: &DetectorModel, n_subtract: usize, k: usize) -> f64 {
    match *det {
        DetectorModel::Tes {
            efficiency,
            max_resolved,
        } => {
            assert!(n_subtract <= max_resolved);
            if k < n_subtract {
                0.0
            } else {
                choose(k, n_subtract) * efficiency.powi(n_subtract as i32) * (1.0 - efficiency).powi((k - n_subtract) as i32)
            }
        }
        DetectorModel::Apd { efficiency } => {
            assert_eq!(n_subtract, 1);
            1.0 - (1.0 - efficiency).powi(k as i32)
        }
        DetectorModel::MultiplexedApd { efficiency, n_apds } => {
            // every one of the n_subtract detectors clicks, the rest stay dark
            assert_eq!(n_subtract, n_apds);
            let per = efficiency / n_apds as f64;
            (0..=n_apds)
                .map(|dark| {
                    let sign = if dark % 2 == 0 { 1.0 } else { -1.0 };
                    sign * choose(n_apds, dark) * (1.0 - per * dark as f64).powi(k as i32)
                })
                .sum()
        }
    }
}

/// exp(θ(a†b − a b†)) restricted to total photon number `n`, basis |j, n−j⟩.
fn beamsplitter_block(n: usize, theta: f64) -> DMatrix<C64> {
    let size = n + 1;
    // H = iG is Hermitian; exp(θG) = exp(−iθH)
    let mut h = DMatrix::<C64>::zeros(size, size);
    for j in 0..n {
        let g = (((j + 1) * (n - j)) as f64).sqrt();
        // G[j+1, j] = g, G[j, j+1] = −g
        h[(j + 1, j)] = C64::new(0.0, g);
        h[(j, j + 1)] = C64::new(0.0, -g);
    }
    let eig = h.symmetric_eigen();
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, -theta * l)));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// Explicit two-mode construction: ρ ⊗ |0⟩⟨0| through a beamsplitter of
/// reflectivity `r`, the effect `effect(k)` on the reflected mode, and the
/// partial trace over it. Returns the normalized transmitted state and the
/// herald probability.
pub fn two_mode_herald(rho: &DensityMatrix, r: f64, effect: impl Fn(usize) -> f64) -> (DMatrix<C64>, f64) {
    let d = rho.dim().get();
    let theta = r.sqrt().asin();
    // columns of U acting on |a⟩|0⟩, indexed by joint state a_out * d + b_out
    let mut u_cols = DMatrix::<C64>::zeros(d * d, d);
    for n in 0..d {
        let block = beamsplitter_block(n, theta);
        // input |n, 0⟩ is block index j = n
        for j in 0..=n {
            u_cols[(j * d + (n - j), n)] = block[(j, n)];
        }
    }
    let joint = &u_cols * rho.matrix() * u_cols.adjoint();
    let mut out = DMatrix::<C64>::zeros(d, d);
    for b in 0..d {
        let w = effect(b);
        if w == 0.0 {
            continue;
        }
        for a in 0..d {
            for a2 in 0..d {
                out[(a, a2)] += joint[(a * d + b, a2 * d + b)] * w;
            }
        }
    }
    let p: f64 = out.diagonal().iter().map(|c| c.re).sum();
    (out / C64::new(p, 0.0), p)
}

/// ½‖a − b‖₁ for Hermitian matrices.
pub fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let diff = a - b;
    0.5 * diff.symmetric_eigen().eigenvalues.iter().map(|l| l.abs()).sum::<f64>()
}
