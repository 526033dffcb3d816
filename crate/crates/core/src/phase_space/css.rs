use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{css_amplitudes, css_state, fidelity, quadratic_form, DensityMatrix, Parity, C64};

const GOLDEN_TOL: f64 = 1e-4;
const SCAN_POINTS: usize = 64;
const FLAT_TOL: f64 = 1e-9;

/// Best-matching ideal cat state for a density matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CssFit {
    pub alpha: C64,
    pub parity: Parity,
    pub fidelity: f64,
    /// The fidelity was flat (within 1e-9) over an interval of |α|; the smallest was kept.
    pub degenerate: bool,
}

/// Golden-section maximization of a unimodal function on [lo, hi].
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    // the bracket ends can beat the midpoint when the optimum sits on the boundary
    [(x, fx), (x1, f1), (x2, f2)]
        .into_iter()
        .fold((x, fx), |best, c| if c.1 > best.1 { c } else { best })
}

struct Scan {
    alphas: Vec<f64>,
    values: Vec<f64>,
}

impl Scan {
    fn run(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Scan {
        let alphas: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let values = alphas.iter().map(|&a| f(a)).collect();
        Scan { alphas, values }
    }

    fn argmax(&self) -> usize {
        (0..self.values.len())
            .max_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
            .unwrap()
    }

    /// Coarse maximum refined by golden section inside the neighbouring cells.
    fn refine(&self, f: &impl Fn(f64) -> f64, tol: f64) -> (f64, f64) {
        let i = self.argmax();
        let lo = self.alphas[i.saturating_sub(1)];
        let hi = self.alphas[(i + 1).min(self.alphas.len() - 1)];
        let best = golden_max(f, lo, hi, tol);
        if best.1 >= self.values[i] {
            best
        } else {
            (self.alphas[i], self.values[i])
        }
    }
}

/// Principal axis of the (q, p) covariance, the direction the cat components separate along.
fn alignment_angle(rho: &DensityMatrix) -> f64 {
    let a = rho.first_moment_a();
    let a2 = rho.second_moment_a2();
    let n = rho.mean_photon();
    // covariance of q = (a + a†)/√2, p = (a − a†)/(i√2), in units where the vacuum gives ½
    let c2 = a2 - a * a;
    let na = n - a.norm_sqr();
    let vqq = c2.re + na + 0.5;
    let vpp = -c2.re + na + 0.5;
    let vqp = c2.im;
    0.5 * (2.0 * vqp).atan2(vqq - vpp)
}

/// Nearest even or odd cat state by fidelity. The cat's phase is fixed by the
/// principal axis of the quadrature covariance (and its orthogonal axis as a
/// fallback); |α| is scanned over (0, √(2⟨n⟩) + 1] and refined by golden section.
pub fn nearest_css(rho: &DensityMatrix) -> Result<CssFit> {
    let dim = rho.dim().get();
    let m = rho.matrix();
    let a_max = (2.0 * rho.mean_photon()).sqrt() + 1.0;
    let phi0 = alignment_angle(rho);

    let mut best: Option<CssFit> = None;
    for phi in [phi0, phi0 + std::f64::consts::FRAC_PI_2] {
        let dir = C64::from_polar(1.0, phi);
        for parity in [Parity::Even, Parity::Odd] {
            let f = |a: f64| match css_amplitudes(dir * a, parity, dim) {
                Ok((amps, _)) => quadratic_form(m, &DVector::from_vec(amps)),
                Err(_) => 0.0,
            };
            let lo = match parity {
                Parity::Even => 0.0,
                Parity::Odd => a_max / SCAN_POINTS as f64,
            };
            let scan = Scan::run(&f, lo, a_max, SCAN_POINTS);
            let (mut a, mut fid) = scan.refine(&f, GOLDEN_TOL);
            // flat plateau: keep the smallest amplitude reaching the optimum
            let plateau: Vec<usize> = (0..scan.values.len())
                .filter(|&i| scan.values[i] >= fid - FLAT_TOL)
                .collect();
            let degenerate = plateau.len() > 1;
            if degenerate {
                a = scan.alphas[plateau[0]];
                fid = scan.values[plateau[0]];
            }
            let candidate = CssFit {
                alpha: dir * a,
                parity,
                fidelity: fid,
                degenerate,
            };
            if best.map_or(true, |b| candidate.fidelity > b.fidelity + FLAT_TOL) {
                best = Some(candidate);
            }
        }
    }
    let mut fit = best.ok_or(Error::ZeroVector)?;
    // report against the normalized truncated cat when it is representable
    if let Ok(psi) = css_state(fit.alpha, fit.parity, rho.dim()) {
        fit.fidelity = fidelity(rho, &psi)?;
    }
    if fit.alpha.norm() == 0.0 {
        fit.alpha = C64::new(0.0, 0.0);
    }
    Ok(fit)
}

/// Largest fidelity any coherent state |β⟩ has with the cat of real amplitude α.
///
/// For real α the overlap ⟨β|α⟩ ± ⟨β|−α⟩ has modulus e^{−(Re β − α)²/2 − (Im β)²/2}
/// times a factor of unit modulus per term; moving β off the real axis only
/// shrinks both Gaussian envelopes and dephases the two terms, so the maximum
/// lies on the real axis and the search is one-dimensional.
pub fn max_coherent_fidelity(alpha: f64, parity: Parity) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::param("alpha", alpha, "cat amplitude must be positive"));
    }
    let s = parity.sign();
    let norm = 2.0 * (1.0 + s * (-2.0 * alpha * alpha).exp());
    let f = |b: f64| {
        let o = (-(b - alpha).powi(2) / 2.0).exp() + s * (-(b + alpha).powi(2) / 2.0).exp();
        o * o / norm
    };
    let scan = Scan::run(&f, 0.0, alpha + 4.0, 241);
    // near-flat top for large α: the bound's excess over ½ is ~e^{−2α²}
    Ok(scan.refine(&f, 1e-9).1.clamp(0.0, 1.0))
}

/// Probability 1 − e^{−2|α|²} that |α⟩ and |−α⟩ are told apart by an ideal measurement.
pub fn distinguishability_p0(alpha: f64) -> f64 {
    -(-2.0 * alpha * alpha).exp_m1()
}
