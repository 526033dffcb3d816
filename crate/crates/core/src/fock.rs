//! Truncated Fock-space states and operators.
//!
//! Every state lives in the span of |0⟩…|dim−1⟩. Constructors for states with
//! infinite Fock support (coherent, squeezed, cat) record the probability
//! weight discarded by the truncation and renormalize what remains.
//!
//! Quadratures follow the vacuum-variance-½ convention: q̂ = (a + a†)/√2,
//! p̂ = (a − a†)/(i√2), [q̂, p̂] = i.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const DEFAULT_DIM: usize = 30;

/// Largest tail weight a constructed state may discard.
pub const MAX_TAIL_WEIGHT: f64 = 1e-6;

const NORM_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-8;
const PSD_TOL: f64 = 1e-8;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Number of retained Fock levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct FockDim(usize);

impl FockDim {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(FockDim(dim))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    pub fn ensure_same(self, other: FockDim) -> Result<()> {
        if self != other {
            return Err(Error::DimensionMismatch {
                expected: self.0,
                found: other.0,
            });
        }
        Ok(())
    }
}

impl Default for FockDim {
    fn default() -> Self {
        FockDim(DEFAULT_DIM)
    }
}

impl TryFrom<usize> for FockDim {
    type Error = Error;
    fn try_from(dim: usize) -> Result<Self> {
        FockDim::new(dim)
    }
}

impl From<FockDim> for usize {
    fn from(d: FockDim) -> usize {
        d.0
    }
}

/// Photon-number parity of a cat state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: usize) -> Parity {
        if n % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

/// Parameters of the lossy squeezed-vacuum source.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParams {
    /// Minimum quadrature variance relative to vacuum, in dB (≤ 0).
    pub v0_db: f64,
    /// Loss suffered by the squeezed state before the subtraction beamsplitter.
    pub gamma_s: f64,
}

impl SqueezeParams {
    pub fn new(v0_db: f64, gamma_s: f64) -> Result<Self> {
        let sp = SqueezeParams { v0_db, gamma_s };
        sp.validate()?;
        Ok(sp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v0_db <= 0.0) {
            return Err(Error::param("v0_db", self.v0_db, "must be ≤ 0 dB"));
        }
        if !(0.0..=1.0).contains(&self.gamma_s) {
            return Err(Error::param("gamma_s", self.gamma_s, "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Squeezing purity, the transmitted fraction 1 − γs.
    pub fn eta_s(&self) -> f64 {
        1.0 - self.gamma_s
    }
}

// ---------------------------------------------------------------------------
// Pure states

/// Normalized state vector in the truncated basis.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: DVector<C64>,
    tail_weight: f64,
}

impl PureState {
    /// Normalizes an arbitrary nonzero amplitude vector.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        FockDim::new(amps.len())?;
        Self::renormalized(DVector::from_vec(amps), 0.0)
    }

    fn renormalized(mut amps: DVector<C64>, tail_weight: f64) -> Result<Self> {
        let norm = amps.norm();
        if !(norm > 1e-300) {
            return Err(Error::ZeroVector);
        }
        amps.unscale_mut(norm);
        debug_assert!((amps.norm() - 1.0).abs() < NORM_TOL);
        Ok(PureState { amps, tail_weight })
    }

    pub fn dim(&self) -> FockDim {
        FockDim(self.amps.len())
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn amplitude(&self, n: usize) -> C64 {
        self.amps[n]
    }

    /// Probability mass the Fock truncation discarded before renormalization.
    pub fn tail_weight(&self) -> f64 {
        self.tail_weight
    }

    pub fn probability(&self, n: usize) -> f64 {
        self.amps[n].norm_sqr()
    }

    pub fn mean_photon(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(n, c)| n as f64 * c.norm_sqr())
            .sum()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        self.dim().ensure_same(other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }
}

/// |n⟩
pub fn fock_state(n: usize, d: FockDim) -> Result<PureState> {
    if n >= d.get() {
        return Err(Error::FockIndexOutOfRange { n, dim: d.get() });
    }
    let mut amps = DVector::from_element(d.get(), ZERO);
    amps[n] = ONE;
    Ok(PureState {
        amps,
        tail_weight: 0.0,
    })
}

/// e^{−|α|²/2} αⁿ/√n!, n < dim, unnormalized after truncation.
pub(crate) fn coherent_amplitudes(alpha: C64, dim: usize) -> Vec<C64> {
    let mut amps = Vec::with_capacity(dim);
    let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    amps.push(c);
    for n in 1..dim {
        c = c * alpha / (n as f64).sqrt();
        amps.push(c);
    }
    amps
}

fn ensure_amplitude_guard(alpha: C64, d: FockDim, what: &'static str) -> Result<()> {
    if alpha.norm_sqr() > d.get() as f64 / 4.0 {
        return Err(Error::Truncation {
            what,
            detail: format!(
                "|α|² = {:.4} exceeds dim/4 = {:.4}",
                alpha.norm_sqr(),
                d.get() as f64 / 4.0
            ),
        });
    }
    Ok(())
}

/// Coherent state |α⟩.
pub fn coherent_state(alpha: C64, d: FockDim) -> Result<PureState> {
    ensure_amplitude_guard(alpha, d, "coherent state")?;
    let amps = coherent_amplitudes(alpha, d.get());
    let kept: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    PureState::renormalized(DVector::from_vec(amps), (1.0 - kept).max(0.0))
}

/// Squeezed vacuum S(r)|0⟩, squeezed along q: Var(q̂) = ½e^{−2r}.
pub fn squeezed_vacuum(r: f64, d: FockDim) -> Result<PureState> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::param("r", r, "squeezing must be finite and ≥ 0"));
    }
    let dim = d.get();
    let t = r.tanh();
    let mut amps = DVector::from_element(dim, ZERO);
    let mut c = 1.0 / r.cosh().sqrt();
    let mut kept = 0.0;
    let mut k = 0usize;
    while 2 * k < dim {
        amps[2 * k] = C64::new(c, 0.0);
        kept += c * c;
        let n = 2 * k as u64;
        c *= -t * (((n + 2) * (n + 1)) as f64).sqrt() / (2.0 * (k + 1) as f64);
        k += 1;
    }
    let tail = (1.0 - kept).max(0.0);
    if tail > MAX_TAIL_WEIGHT {
        return Err(Error::Truncation {
            what: "squeezed vacuum",
            detail: format!("discarded tail weight {tail:.3e} exceeds {MAX_TAIL_WEIGHT:e}"),
        });
    }
    PureState::renormalized(amps, tail)
}

/// Cat amplitudes (|α⟩ ± |−α⟩)/N with the exact infinite-space normalization,
/// truncated but not renormalized. Returns the amplitudes and the squared norm kept.
pub(crate) fn css_amplitudes(alpha: C64, parity: Parity, dim: usize) -> Result<(Vec<C64>, f64)> {
    let x = alpha.norm_sqr();
    let norm_sq = 2.0 * (1.0 + parity.sign() * (-2.0 * x).exp());
    if norm_sq < 1e-300 || (parity == Parity::Odd && x == 0.0) {
        return Err(Error::ZeroVector);
    }
    let scale = 1.0 / norm_sq.sqrt();
    let mut amps = coherent_amplitudes(alpha, dim);
    let mut kept = 0.0;
    for (n, c) in amps.iter_mut().enumerate() {
        if Parity::of(n) == parity {
            *c *= 2.0 * scale;
            kept += c.norm_sqr();
        } else {
            *c = ZERO;
        }
    }
    Ok((amps, kept))
}

/// Even (|−α⟩ + |α⟩) or odd (|α⟩ − |−α⟩) coherent-state superposition, normalized.
pub fn css_state(alpha: C64, parity: Parity, d: FockDim) -> Result<PureState> {
    ensure_amplitude_guard(alpha, d, "cat state")?;
    let (amps, kept) = css_amplitudes(alpha, parity, d.get())?;
    PureState::renormalized(DVector::from_vec(amps), (1.0 - kept).max(0.0))
}

// ---------------------------------------------------------------------------
// Operators

/// Complex matrix acting on the truncated Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    m: DMatrix<C64>,
}

impl FockOperator {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        FockDim::new(m.nrows())?;
        Ok(FockOperator { m })
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        FockOperator { m }
    }

    pub fn identity(d: FockDim) -> Self {
        FockOperator {
            m: DMatrix::identity(d.get(), d.get()),
        }
    }

    pub fn annihilation(d: FockDim) -> Self {
        let n = d.get();
        let mut m = DMatrix::from_element(n, n, ZERO);
        for k in 1..n {
            m[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
        }
        FockOperator { m }
    }

    pub fn number(d: FockDim) -> Self {
        let n = d.get();
        let mut m = DMatrix::from_element(n, n, ZERO);
        for k in 0..n {
            m[(k, k)] = C64::new(k as f64, 0.0);
        }
        FockOperator { m }
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        FockDim::new(n)?;
        let mut m = DMatrix::from_element(n, n, ZERO);
        for (k, v) in values.iter().enumerate() {
            m[(k, k)] = C64::new(*v, 0.0);
        }
        Ok(FockOperator { m })
    }

    pub fn dim(&self) -> FockDim {
        FockDim(self.m.nrows())
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn adjoint(&self) -> FockOperator {
        FockOperator {
            m: self.m.adjoint(),
        }
    }

    /// self · other
    pub fn compose(&self, other: &FockOperator) -> Result<FockOperator> {
        self.dim().ensure_same(other.dim())?;
        Ok(FockOperator { m: &self.m * &other.m })
    }

    /// K ρ K†, unnormalized.
    pub fn sandwich(&self, rho: &DensityMatrix) -> Result<DMatrix<C64>> {
        self.dim().ensure_same(rho.dim())?;
        Ok(&self.m * rho.matrix() * self.m.adjoint())
    }

    pub fn apply(&self, psi: &PureState) -> Result<DVector<C64>> {
        self.dim().ensure_same(psi.dim())?;
        Ok(&self.m * psi.amplitudes())
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&hermitian_part(&self.m))
    }
}

// ---------------------------------------------------------------------------
// Density matrices

/// Hermitian, unit-trace, positive-semidefinite matrix in the truncated basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<C64>,
    tail_weight: f64,
}

pub(crate) fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).unscale(2.0)
}

fn max_hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn min_eigenvalue(h: &DMatrix<C64>) -> f64 {
    SymmetricEigen::new(h.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn trace(m: &DMatrix<C64>) -> C64 {
    m.diagonal().iter().sum()
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        let rho = DensityMatrix {
            m,
            tail_weight: 0.0,
        };
        rho.validate()?;
        Ok(rho)
    }

    /// Hermitizes and rescales to unit trace; positivity is the caller's
    /// responsibility (checked in debug builds).
    pub(crate) fn normalized(m: DMatrix<C64>, tail_weight: f64) -> Result<Self> {
        let mut h = hermitian_part(&m);
        let tr = trace(&h).re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::InvalidTrace(tr));
        }
        h.unscale_mut(tr);
        let rho = DensityMatrix { m: h, tail_weight };
        debug_assert!(
            rho.min_eigenvalue() >= -PSD_TOL,
            "density matrix lost positivity: {}",
            rho.min_eigenvalue()
        );
        Ok(rho)
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let v = psi.amplitudes();
        DensityMatrix {
            m: v * v.adjoint(),
            tail_weight: psi.tail_weight(),
        }
    }

    pub fn maximally_mixed(d: FockDim) -> Self {
        let n = d.get();
        DensityMatrix {
            m: DMatrix::identity(n, n).unscale(n as f64),
            tail_weight: 0.0,
        }
    }

    /// Diagonal state with the given populations (normalized).
    pub fn from_populations(pops: &[f64]) -> Result<Self> {
        let op = FockOperator::diagonal(pops)?;
        if pops.iter().any(|p| *p < 0.0) {
            return Err(Error::NotPositive(pops.iter().copied().fold(0.0, f64::min)));
        }
        DensityMatrix::normalized(op.into_matrix(), 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m.nrows() != self.m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.m.nrows(),
                found: self.m.ncols(),
            });
        }
        FockDim::new(self.m.nrows())?;
        let dev = max_hermitian_deviation(&self.m);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = trace(&self.m);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let lmin = self.min_eigenvalue();
        if lmin < -PSD_TOL {
            return Err(Error::NotPositive(lmin));
        }
        Ok(())
    }

    pub fn dim(&self) -> FockDim {
        FockDim(self.m.nrows())
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn element(&self, m: usize, n: usize) -> C64 {
        self.m[(m, n)]
    }

    pub fn tail_weight(&self) -> f64 {
        self.tail_weight
    }

    pub(crate) fn with_tail_weight(mut self, tail_weight: f64) -> Self {
        self.tail_weight = tail_weight;
        self
    }

    pub fn populations(&self) -> Vec<f64> {
        self.m.diagonal().iter().map(|c| c.re).collect()
    }

    /// Tr(ρ n̂)
    pub fn mean_photon(&self) -> f64 {
        self.populations()
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// Tr ρ²
    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ |ρ_mn|² for Hermitian ρ
        self.m.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.m.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.m)
    }

    /// Tr(ρ A)
    pub fn expect(&self, op: &FockOperator) -> Result<C64> {
        self.dim().ensure_same(op.dim())?;
        Ok((self.m.transpose().component_mul(op.matrix())).sum())
    }

    /// ⟨a²⟩
    pub fn second_moment_a2(&self) -> C64 {
        let n = self.m.nrows();
        // Tr(ρ a²) = Σ_m ρ_{m+2, m} √((m+1)(m+2))
        (0..n.saturating_sub(2))
            .map(|m| self.m[(m + 2, m)] * (((m + 1) * (m + 2)) as f64).sqrt())
            .sum()
    }

    /// ⟨a⟩
    pub fn first_moment_a(&self) -> C64 {
        let n = self.m.nrows();
        (0..n - 1)
            .map(|m| self.m[(m + 1, m)] * ((m + 1) as f64).sqrt())
            .sum()
    }

    /// λ·self + (1−λ)·other
    pub fn mix(&self, other: &DensityMatrix, lambda: f64) -> Result<DensityMatrix> {
        self.dim().ensure_same(other.dim())?;
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::param("lambda", lambda, "mixing weight must lie in [0, 1]"));
        }
        let m = self.m.scale(lambda) + other.m.scale(1.0 - lambda);
        let tail = lambda * self.tail_weight + (1.0 - lambda) * other.tail_weight;
        DensityMatrix::normalized(m, tail)
    }

    /// e^{iφn̂} ρ e^{−iφn̂}; maps a coherent amplitude α to αe^{iφ}.
    pub fn rotated(&self, phi: f64) -> DensityMatrix {
        let n = self.m.nrows();
        let m = DMatrix::from_fn(n, n, |i, j| {
            self.m[(i, j)] * C64::from_polar(1.0, phi * (i as f64 - j as f64))
        });
        DensityMatrix {
            m,
            tail_weight: self.tail_weight,
        }
    }

    /// ½‖ρ − σ‖₁
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        self.dim().ensure_same(other.dim())?;
        let diff = hermitian_part(&(&self.m - &other.m));
        let ev = SymmetricEigen::new(diff).eigenvalues;
        Ok(0.5 * ev.iter().map(|x| x.abs()).sum::<f64>())
    }

    /// Uhlmann fidelity (Tr √(√ρ σ √ρ))².
    pub fn uhlmann_fidelity(&self, other: &DensityMatrix) -> Result<f64> {
        self.dim().ensure_same(other.dim())?;
        let eig = SymmetricEigen::new(self.m.clone());
        let sqrt_vals = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let u = &eig.eigenvectors;
        let sqrt_rho = u * DMatrix::from_diagonal(&sqrt_vals.map(|x| C64::new(x, 0.0))) * u.adjoint();
        let inner = hermitian_part(&(&sqrt_rho * &other.m * &sqrt_rho));
        let s: f64 = SymmetricEigen::new(inner)
            .eigenvalues
            .iter()
            .map(|l| l.max(0.0).sqrt())
            .sum();
        Ok((s * s).clamp(0.0, 1.0))
    }

    /// Short hex digest of the matrix elements; identifies a state in reports.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.m.nrows() as u64).to_le_bytes());
        for i in 0..self.m.nrows() {
            for j in 0..self.m.ncols() {
                let c = self.m[(i, j)];
                h.update(c.re.to_le_bytes());
                h.update(c.im.to_le_bytes());
            }
        }
        hex::encode(&h.finalize()[..8])
    }
}

/// ⟨ψ|ρ|ψ⟩, clamped to [0, 1].
pub fn fidelity(rho: &DensityMatrix, psi: &PureState) -> Result<f64> {
    rho.dim().ensure_same(psi.dim())?;
    Ok(quadratic_form(rho.matrix(), psi.amplitudes()).clamp(0.0, 1.0))
}

/// Re(v† M v)
pub(crate) fn quadratic_form(m: &DMatrix<C64>, v: &DVector<C64>) -> f64 {
    v.dotc(&(m * v)).re
}

pub fn mean_photon(rho: &DensityMatrix) -> f64 {
    rho.mean_photon()
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dim(n: usize) -> FockDim {
        FockDim::new(n).unwrap()
    }

    #[test]
    fn dimension_guard() {
        assert!(FockDim::new(1).is_err());
        assert!(FockDim::new(2).is_ok());
    }

    #[test]
    fn fock_states() {
        assert_eq!(fock_state(0, dim(10)).unwrap().mean_photon(), 0.0);
        assert_eq!(fock_state(1, dim(10)).unwrap().mean_photon(), 1.0);
        assert_eq!(fock_state(9, dim(10)).unwrap().mean_photon(), 9.0);
        assert!(matches!(
            fock_state(10, dim(10)),
            Err(Error::FockIndexOutOfRange { .. })
        ));
    }

    #[test]
    fn coherent_state_moments() {
        let vac = coherent_state(C64::new(0.0, 0.0), dim(20)).unwrap();
        assert!((vac.probability(0) - 1.0).abs() < 1e-15);

        let psi = coherent_state(C64::new(1.0, 0.0), dim(20)).unwrap();
        assert!((psi.mean_photon() - 1.0).abs() < 1e-6);

        // closed-form Poisson weight e^{-|α|²}
        let psi = coherent_state(C64::new(1.32, 0.0), dim(25)).unwrap();
        assert!((psi.probability(0) - (-1.32f64 * 1.32).exp()).abs() < 1e-9);
        assert!((psi.probability(0) - 0.1751).abs() < 1e-4);
    }

    #[test]
    fn coherent_state_guard() {
        assert!(matches!(
            coherent_state(C64::new(3.0, 0.0), dim(20)),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn coherent_truncation_error_halves() {
        let alpha = C64::new(1.5, 0.0);
        let x = alpha.norm_sqr();
        let err = |d: usize| (coherent_state(alpha, dim(d)).unwrap().mean_photon() - x).abs();
        let small = (4.0 * x).ceil() as usize;
        let large = (8.0 * x).ceil() as usize;
        assert!(err(large) <= 0.5 * err(small), "{} vs {}", err(large), err(small));
    }

    #[test]
    fn squeezed_vacuum_parity_and_mean() {
        let vac = squeezed_vacuum(0.0, dim(10)).unwrap();
        assert_eq!(vac.probability(0), 1.0);

        let r = 0.7828;
        let psi = squeezed_vacuum(r, dim(30)).unwrap();
        assert!((psi.mean_photon() - r.sinh().powi(2)).abs() < 1e-4);
        assert!((psi.mean_photon() - 0.7486).abs() < 1e-3);
        for n in (1..30).step_by(2) {
            assert_eq!(psi.amplitude(n), ZERO);
        }
        assert!(psi.tail_weight() < MAX_TAIL_WEIGHT);
    }

    #[test]
    fn squeezed_vacuum_tail_guard() {
        assert!(matches!(
            squeezed_vacuum(1.5, dim(20)),
            Err(Error::Truncation { .. })
        ));
        assert!(squeezed_vacuum(-0.1, dim(20)).is_err());
    }

    #[test]
    fn css_states() {
        let even0 = css_state(C64::new(0.0, 0.0), Parity::Even, dim(10)).unwrap();
        assert!((even0.probability(0) - 1.0).abs() < 1e-15);
        assert!(matches!(
            css_state(C64::new(0.0, 0.0), Parity::Odd, dim(10)),
            Err(Error::ZeroVector)
        ));

        let a = 1.76f64;
        let odd = css_state(C64::new(a, 0.0), Parity::Odd, dim(30)).unwrap();
        let x = a * a;
        let expected = x / x.tanh();
        assert!((odd.mean_photon() - expected).abs() < 1e-6);
        assert!((odd.mean_photon() - 3.110).abs() < 1e-3);

        let odd = css_state(C64::new(1.32, 0.0), Parity::Odd, dim(25)).unwrap();
        for n in (0..25).step_by(2) {
            assert_eq!(odd.probability(n), 0.0);
        }

        let b = 1.1f64;
        let even = css_state(C64::new(0.0, b), Parity::Even, dim(25)).unwrap();
        assert!((even.mean_photon() - b * b * (b * b).tanh()).abs() < 1e-8);
        for n in (1..25).step_by(2) {
            assert_eq!(even.probability(n), 0.0);
        }
    }

    #[test]
    fn fidelity_basics() {
        let d = dim(12);
        let psi = css_state(C64::new(1.0, 0.3), Parity::Even, d).unwrap();
        let rho = psi.to_density();
        assert!((fidelity(&rho, &psi).unwrap() - 1.0).abs() < 1e-12);

        let vac = fock_state(0, d).unwrap().to_density();
        let one = fock_state(1, d).unwrap();
        assert_eq!(fidelity(&vac, &one).unwrap(), 0.0);

        let other = fock_state(0, dim(8)).unwrap();
        assert!(matches!(
            fidelity(&vac, &other),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn purity_examples() {
        let d = dim(6);
        assert!((fock_state(2, d).unwrap().to_density().purity() - 1.0).abs() < 1e-14);
        let mixed = DensityMatrix::from_populations(&[0.5, 0.5, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((mixed.purity() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn density_invariants_rejected() {
        let mut m = DMatrix::from_element(3, 3, ZERO);
        m[(0, 0)] = C64::new(0.5, 0.0);
        assert!(matches!(DensityMatrix::new(m.clone()), Err(Error::InvalidTrace(_))));
        m[(1, 1)] = C64::new(0.5, 0.0);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(m.clone()), Err(Error::NotHermitian(_))));
        m[(1, 0)] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m.clone()).is_ok());
        m[(0, 1)] = C64::new(0.9, 0.0);
        m[(1, 0)] = C64::new(0.9, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotPositive(_))));
    }

    #[test]
    fn moments_of_coherent_state() {
        let alpha = C64::new(0.7, -0.4);
        let rho = coherent_state(alpha, dim(30)).unwrap().to_density();
        assert!((rho.first_moment_a() - alpha).norm() < 1e-9);
        assert!((rho.second_moment_a2() - alpha * alpha).norm() < 1e-9);
    }

    #[test]
    fn rotation_moves_amplitude() {
        let alpha = C64::new(0.8, 0.0);
        let rho = coherent_state(alpha, dim(20)).unwrap().to_density();
        let rot = rho.rotated(0.5);
        assert!((rot.first_moment_a() - alpha * C64::from_polar(1.0, 0.5)).norm() < 1e-9);
    }

    #[test]
    fn uhlmann_reduces_to_overlap_for_pure_states() {
        let d = dim(15);
        let a = coherent_state(C64::new(0.5, 0.0), d).unwrap();
        let b = coherent_state(C64::new(0.0, 0.6), d).unwrap();
        let overlap = a.inner(&b).unwrap().norm_sqr();
        let f = a.to_density().uhlmann_fidelity(&b.to_density()).unwrap();
        assert!((f - overlap).abs() < 1e-7);
    }

    fn random_state(seed: &[f64], d: FockDim) -> DensityMatrix {
        // mixture of two random pure states
        let n = d.get();
        let v1: Vec<C64> = (0..n).map(|k| C64::new(seed[k % seed.len()], seed[(k + 1) % seed.len()])).collect();
        let v2: Vec<C64> = (0..n).map(|k| C64::new(seed[(k + 2) % seed.len()], -seed[(k + 3) % seed.len()])).collect();
        let a = PureState::from_amplitudes(v1).unwrap().to_density();
        let b = PureState::from_amplitudes(v2).unwrap().to_density();
        a.mix(&b, 0.3).unwrap()
    }

    proptest! {
        #[test]
        fn fidelity_is_linear(seed in proptest::collection::vec(-1.0f64..1.0, 4..8), lam in 0.0f64..1.0) {
            let d = dim(6);
            prop_assume!(seed.iter().any(|x| x.abs() > 0.1));
            let r1 = random_state(&seed, d);
            let r2 = fock_state(2, d).unwrap().to_density();
            let psi = css_state(C64::new(0.9, 0.2), Parity::Even, d).unwrap();
            let mixed = r1.mix(&r2, lam).unwrap();
            let lhs = fidelity(&mixed, &psi).unwrap();
            let rhs = lam * fidelity(&r1, &psi).unwrap() + (1.0 - lam) * fidelity(&r2, &psi).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn constructors_satisfy_invariants(re in -1.2f64..1.2, im in -1.2f64..1.2, r in 0.0f64..0.6) {
            let d = dim(24);
            let alpha = C64::new(re, im);
            coherent_state(alpha, d).unwrap().to_density().validate().unwrap();
            squeezed_vacuum(r, d).unwrap().to_density().validate().unwrap();
            css_state(alpha, Parity::Even, d).unwrap().to_density().validate().unwrap();
            if alpha.norm() > 1e-3 {
                let odd = css_state(alpha, Parity::Odd, d).unwrap();
                prop_assert!((odd.amplitudes().norm() - 1.0).abs() < 1e-10);
                for n in (0..24).step_by(2) { prop_assert_eq!(odd.probability(n), 0.0); }
            }
        }
    }
}
