use std::f64::consts::{FRAC_1_PI, SQRT_2};

use nalgebra::{DMatrix, Matrix6, Vector6};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, C64, ZERO};

/// ⟨m|D(γ)|n⟩ for m, n < dim, the exact (untruncated) displacement matrix elements.
///
/// Evaluated as √(n!/m!) γ^{m−n} e^{−|γ|²/2} L_n^{(m−n)}(|γ|²) for m ≥ n, with the
/// associated Laguerre polynomials generated by their three-term recurrence in
/// degree, and ⟨n|D|m⟩ = (−1)^{m−n} conj⟨m|D|n⟩. The column recurrence
/// D a† = (a† − γ*) D loses about five digits by |γ| ≈ 5 at dim 30; this one stays
/// at roundoff.
pub fn displacement_matrix(gamma: C64, dim: usize) -> DMatrix<C64> {
    let mut out = DMatrix::from_element(dim, dim, ZERO);
    fill_displacement(gamma, dim, &mut out, &mut Vec::new());
    out
}

fn fill_displacement(gamma: C64, dim: usize, out: &mut DMatrix<C64>, lag: &mut Vec<f64>) {
    let x = gamma.norm_sqr();
    let r = gamma.norm();
    let phase = if r > 0.0 { gamma / r } else { C64::new(1.0, 0.0) };
    let half_x = 0.5 * x;
    lag.resize(dim, 0.0);
    // ln n! would be rebuilt per call; the incremental ratio √(n!/(n+α)!) is cheap instead.
    let mut phase_pow = C64::new(1.0, 0.0);
    let mut r_pow = 1.0f64;
    for alpha in 0..dim {
        let len = dim - alpha;
        let a = alpha as f64;
        lag[0] = 1.0;
        if len > 1 {
            lag[1] = 1.0 + a - x;
        }
        for k in 1..len.saturating_sub(1) {
            let kf = k as f64;
            lag[k + 1] = ((2.0 * kf + 1.0 + a - x) * lag[k] - (kf + a) * lag[k - 1]) / (kf + 1.0);
        }
        // prefactor for n = 0: γ^α e^{−x/2} / √α!
        let mut ratio = (-half_x).exp() * r_pow;
        for i in 1..=alpha {
            ratio /= (i as f64).sqrt();
        }
        let sign = if alpha % 2 == 0 { 1.0 } else { -1.0 };
        for n in 0..len {
            if n > 0 {
                // √(n!/(n+α)!) from √((n−1)!/(n−1+α)!)
                ratio *= (n as f64 / (n + alpha) as f64).sqrt();
            }
            let v = phase_pow * (ratio * lag[n]);
            out[(n + alpha, n)] = v;
            if alpha > 0 {
                out[(n, n + alpha)] = v.conj() * sign;
            }
        }
        phase_pow *= phase;
        r_pow *= r;
    }
}

/// W(0,0) from the photon-number populations, (1/π) Σ (−1)ⁿ ρ_nn.
pub fn wigner_origin_parity(rho: &DensityMatrix) -> f64 {
    FRAC_1_PI
        * rho
            .populations()
            .iter()
            .enumerate()
            .map(|(n, p)| if n % 2 == 0 { *p } else { -*p })
            .sum::<f64>()
}

fn validity_radius(dim: usize) -> f64 {
    (dim as f64).sqrt() / 2.0
}

/// Wigner function W(q, p) = (1/π) Tr[ρ D(β) (−1)^n̂ D(β)†], β = (q + ip)/√2,
/// evaluated through D(β)(−1)^n̂D(β)† = D(2β)(−1)^n̂.
pub fn wigner(rho: &DensityMatrix, q: f64, p: f64) -> Result<f64> {
    let radius = validity_radius(rho.dim().get());
    if (q * q + p * p).sqrt() / SQRT_2 > radius {
        return Err(Error::OutsideTruncation { q, p, radius });
    }
    Ok(wigner_unchecked(rho, q, p))
}

pub(crate) fn wigner_unchecked(rho: &DensityMatrix, q: f64, p: f64) -> f64 {
    let dim = rho.dim().get();
    let mut buf = DMatrix::from_element(dim, dim, ZERO);
    let mut lag = Vec::new();
    wigner_with_buffers(rho, q, p, &mut buf, &mut lag)
}

fn wigner_with_buffers(rho: &DensityMatrix, q: f64, p: f64, buf: &mut DMatrix<C64>, lag: &mut Vec<f64>) -> f64 {
    let dim = rho.dim().get();
    let gamma = C64::new(q, p) * SQRT_2; // 2β
    fill_displacement(gamma, dim, buf, lag);
    let m = rho.matrix();
    let mut acc = C64::new(0.0, 0.0);
    for col in 0..dim {
        // Σ_n ρ_{col,n} D_{n,col} (−1)^col
        let mut s = C64::new(0.0, 0.0);
        for n in 0..dim {
            s += m[(col, n)] * buf[(n, col)];
        }
        if col % 2 == 0 {
            acc += s;
        } else {
            acc -= s;
        }
    }
    debug_assert!(acc.im.abs() < 1e-8, "Wigner imaginary residue {}", acc.im);
    FRAC_1_PI * acc.re
}

/// Rectangular evaluation grid in (q, p).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n_q: usize,
    pub n_p: usize,
}

impl Default for PhaseSpaceGrid {
    fn default() -> Self {
        PhaseSpaceGrid::square(5.0, 201)
    }
}

impl PhaseSpaceGrid {
    pub fn square(half_width: f64, n: usize) -> Self {
        PhaseSpaceGrid {
            q_min: -half_width,
            q_max: half_width,
            p_min: -half_width,
            p_max: half_width,
            n_q: n,
            n_p: n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q_max > self.q_min) {
            return Err(Error::param("q_max", self.q_max, "grid range must be increasing"));
        }
        if !(self.p_max > self.p_min) {
            return Err(Error::param("p_max", self.p_max, "grid range must be increasing"));
        }
        if self.n_q < 2 || self.n_p < 2 {
            return Err(Error::param("n_q", self.n_q.min(self.n_p) as f64, "need at least 2 points per axis"));
        }
        Ok(())
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / (self.n_q - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.n_p - 1) as f64
    }

    pub fn q(&self, i: usize) -> f64 {
        self.q_min + i as f64 * self.dq()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }

    pub fn len(&self) -> usize {
        self.n_q * self.n_p
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Wigner values on a grid, q-major: `values[i * n_p + j]` is W(q_i, p_j).
#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    pub grid: PhaseSpaceGrid,
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_p + j]
    }

    /// Riemann sum Σ W Δq Δp.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dq() * self.grid.dp()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates W on every grid point (parallel over q rows). The grid may extend
/// past the single-point validity radius; the displacement elements are exact there.
pub fn wigner_grid(rho: &DensityMatrix, grid: &PhaseSpaceGrid) -> Result<WignerGrid> {
    grid.validate()?;
    let dim = rho.dim().get();
    let rows: Vec<Vec<f64>> = (0..grid.n_q)
        .into_par_iter()
        .map(|i| {
            let mut buf = DMatrix::from_element(dim, dim, ZERO);
            let mut lag = Vec::new();
            let q = grid.q(i);
            (0..grid.n_p)
                .map(|j| wigner_with_buffers(rho, q, grid.p(j), &mut buf, &mut lag))
                .collect()
        })
        .collect();
    Ok(WignerGrid {
        grid: *grid,
        values: rows.concat(),
    })
}

/// Location and value of the Wigner minimum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerMin {
    pub value: f64,
    pub q: f64,
    pub p: f64,
}

/// Grid minimum refined by a bi-quadratic least-squares fit over the 3×3
/// neighbourhood of the minimal cell.
pub fn wigner_min(rho: &DensityMatrix, grid: &PhaseSpaceGrid) -> Result<WignerMin> {
    let w = wigner_grid(rho, grid)?;
    Ok(refine_minimum(rho, &w))
}

pub(crate) fn refine_minimum(rho: &DensityMatrix, w: &WignerGrid) -> WignerMin {
    let g = &w.grid;
    let (k, &value) = w
        .values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is nonempty");
    let (i, j) = (k / g.n_p, k % g.n_p);
    let coarse = WignerMin {
        value,
        q: g.q(i),
        p: g.p(j),
    };
    if i == 0 || j == 0 || i + 1 == g.n_q || j + 1 == g.n_p {
        return coarse;
    }
    // f(u, v) = c0 + c1 u + c2 v + c3 u² + c4 v² + c5 uv in cell units
    let mut ata = Matrix6::<f64>::zeros();
    let mut atb = Vector6::<f64>::zeros();
    for di in -1i32..=1 {
        for dj in -1i32..=1 {
            let (u, v) = (di as f64, dj as f64);
            let basis = Vector6::new(1.0, u, v, u * u, v * v, u * v);
            let f = w.at((i as i32 + di) as usize, (j as i32 + dj) as usize);
            ata += basis * basis.transpose();
            atb += basis * f;
        }
    }
    let Some(c) = ata.lu().solve(&atb) else {
        return coarse;
    };
    let (h11, h22, h12) = (2.0 * c[3], 2.0 * c[4], c[5]);
    let det = h11 * h22 - h12 * h12;
    if !(h11 > 0.0 && det > 0.0) {
        return coarse;
    }
    let u = (-c[1] * h22 + c[2] * h12) / det;
    let v = (-c[2] * h11 + c[1] * h12) / det;
    if u.abs() > 1.0 || v.abs() > 1.0 {
        return coarse;
    }
    let q = coarse.q + u * g.dq();
    let p = coarse.p + v * g.dp();
    let refined = wigner_unchecked(rho, q, p);
    if refined < value {
        WignerMin { value: refined, q, p }
    } else {
        coarse
    }
}
