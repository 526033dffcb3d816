//! Loss channels, squeezed-state preparation, and detector-conditioned photon
//! subtraction.
//!
//! A beamsplitter that routes each photon independently with probability `p`
//! acts on the kept mode through the binomial Kraus family
//! A_k|n⟩ = √C(n,k) p^{k/2} (1−p)^{(n−k)/2} |n−k⟩. Loss uses it with p = γ and
//! subtraction with p = R, where A_k then conditions on exactly k reflected photons.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{squeezed_vacuum, DensityMatrix, FockDim, FockOperator, SqueezeParams, C64, ZERO};

/// TES photon-number resolution.
pub const DEFAULT_TES_MAX_RESOLVED: usize = 10;

/// Assumed on/off detector efficiency.
pub const DEFAULT_APD_EFFICIENCY: f64 = 0.5;

const HERALD_FLOOR: f64 = 1e-12;

/// table[n][k] = √C(n,k) p^{k/2} (1−p)^{(n−k)/2} for 0 ≤ k ≤ n < dim.
pub(crate) fn routing_amplitudes(p: f64, dim: usize) -> Vec<Vec<f64>> {
    let q = 1.0 - p;
    let mut ln_fact = vec![0.0f64; dim + 1];
    for n in 1..=dim {
        ln_fact[n] = ln_fact[n - 1] + (n as f64).ln();
    }
    (0..dim)
        .map(|n| {
            (0..=n)
                .map(|k| {
                    if p == 0.0 {
                        return if k == 0 { 1.0 } else { 0.0 };
                    }
                    if q == 0.0 {
                        return if k == n { 1.0 } else { 0.0 };
                    }
                    let ln_c = ln_fact[n] - ln_fact[k] - ln_fact[n - k];
                    (0.5 * (ln_c + k as f64 * p.ln() + (n - k) as f64 * q.ln())).exp()
                })
                .collect()
        })
        .collect()
}

/// Σ_k w_k A_k ρ A_k† with the binomial routing family of parameter `p`.
fn routed_sum(m: &DMatrix<C64>, p: f64, weights: impl Fn(usize) -> f64) -> DMatrix<C64> {
    let dim = m.nrows();
    let amp = routing_amplitudes(p, dim);
    let mut out = DMatrix::from_element(dim, dim, ZERO);
    for k in 0..dim {
        let w = weights(k);
        if w == 0.0 {
            continue;
        }
        for i in 0..dim - k {
            let ai = amp[i + k][k];
            if ai == 0.0 {
                continue;
            }
            for j in 0..dim - k {
                out[(i, j)] += m[(i + k, j + k)] * (w * ai * amp[j + k][k]);
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Loss

/// Pure loss: a beamsplitter of transmissivity 1 − γ with vacuum in the other port.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossChannel {
    gamma: f64,
}

impl LossChannel {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::param("gamma", gamma, "loss must lie in [0, 1]"));
        }
        Ok(LossChannel { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn transmissivity(&self) -> f64 {
        1.0 - self.gamma
    }

    /// Loss γ₁ followed by γ₂ is loss 1 − (1−γ₁)(1−γ₂).
    pub fn then(&self, other: &LossChannel) -> LossChannel {
        LossChannel {
            gamma: 1.0 - self.transmissivity() * other.transmissivity(),
        }
    }

    pub fn kraus(&self, d: FockDim) -> Vec<FockOperator> {
        let dim = d.get();
        let amp = routing_amplitudes(self.gamma, dim);
        (0..dim)
            .map(|k| {
                let mut m = DMatrix::from_element(dim, dim, ZERO);
                for n in k..dim {
                    m[(n - k, n)] = C64::new(amp[n][k], 0.0);
                }
                FockOperator::from_matrix_unchecked(m)
            })
            .collect()
    }

    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        if self.gamma == 0.0 {
            return rho.clone();
        }
        let out = self.apply_matrix(rho.matrix());
        DensityMatrix::normalized(out, 0.0)
            .expect("loss channel preserves trace")
            .with_tail_weight(rho.tail_weight())
    }

    /// Λ(M) for an arbitrary matrix (no normalization).
    pub fn apply_matrix(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        routed_sum(m, self.gamma, |_| 1.0)
    }

    /// Heisenberg-picture map Λ†(X) = Σ_k A_k† X A_k.
    pub fn apply_adjoint(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let dim = x.nrows();
        if self.gamma == 0.0 {
            return x.clone();
        }
        let amp = routing_amplitudes(self.gamma, dim);
        let mut out = DMatrix::from_element(dim, dim, ZERO);
        for k in 0..dim {
            for i in k..dim {
                let ai = amp[i][k];
                if ai == 0.0 {
                    continue;
                }
                for j in k..dim {
                    out[(i, j)] += x[(i - k, j - k)] * (ai * amp[j][k]);
                }
            }
        }
        out
    }
}

pub fn apply_loss(rho: &DensityMatrix, ch: &LossChannel) -> DensityMatrix {
    ch.apply(rho)
}

// ---------------------------------------------------------------------------
// Squeezing

/// Squeezing parameter r for a minimum variance of V0 dB below vacuum, V_min = ½e^{−2r}.
pub fn db_to_r(v0_db: f64) -> Result<f64> {
    if !(v0_db <= 0.0) {
        return Err(Error::param("v0_db", v0_db, "anti-squeezing (positive dB) input"));
    }
    Ok(-v0_db * std::f64::consts::LN_10 / 20.0)
}

/// Pure squeezed vacuum followed by the source loss γs.
pub fn prepare_squeezed(sp: &SqueezeParams, d: FockDim) -> Result<DensityMatrix> {
    sp.validate()?;
    let r = db_to_r(sp.v0_db)?;
    let pure = squeezed_vacuum(r, d)?.to_density();
    Ok(LossChannel::new(sp.gamma_s)?.apply(&pure))
}

// ---------------------------------------------------------------------------
// Subtraction beamsplitter

/// Conditional Kraus operator for exactly `k` photons reflected by a
/// beamsplitter of reflectivity `r`: (R/(1−R))^{k/2} a^k (1−R)^{n̂/2} / √k!.
pub fn subtraction_kraus(r: f64, k: usize, d: FockDim) -> Result<FockOperator> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::param("reflectivity", r, "must lie in (0, 1)"));
    }
    let dim = d.get();
    let mut m = DMatrix::from_element(dim, dim, ZERO);
    if k < dim {
        let amp = routing_amplitudes(r, dim);
        for n in k..dim {
            m[(n - k, n)] = C64::new(amp[n][k], 0.0);
        }
    }
    Ok(FockOperator::from_matrix_unchecked(m))
}

// ---------------------------------------------------------------------------
// Detectors

/// Subtraction-arm detector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectorModel {
    /// Photon-number-resolving transition edge sensor with binomial efficiency.
    Tes {
        efficiency: f64,
        #[serde(default = "default_max_resolved")]
        max_resolved: usize,
    },
    /// Single on/off avalanche photodiode.
    Apd { efficiency: f64 },
    /// `n_apds` on/off detectors behind a balanced splitter tree; counts clicks.
    MultiplexedApd { efficiency: f64, n_apds: usize },
}

fn default_max_resolved() -> usize {
    DEFAULT_TES_MAX_RESOLVED
}

/// A detector reading.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Resolved photon number (TES), click flag 0/1 (APD) or number of clicking detectors.
    Count(usize),
    /// TES reading beyond `max_resolved`.
    Overflow,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Count(n) => write!(f, "{n}"),
            Outcome::Overflow => f.write_str("overflow"),
        }
    }
}

fn binomial_pmf(n: u32, k: u32, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut c = 1.0f64;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

fn binomial_coeff(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |c, i| c * (n - i) as f64 / (i + 1) as f64)
}

impl DetectorModel {
    pub fn tes(efficiency: f64) -> Self {
        DetectorModel::Tes {
            efficiency,
            max_resolved: DEFAULT_TES_MAX_RESOLVED,
        }
    }

    pub fn efficiency(&self) -> f64 {
        match *self {
            DetectorModel::Tes { efficiency, .. }
            | DetectorModel::Apd { efficiency }
            | DetectorModel::MultiplexedApd { efficiency, .. } => efficiency,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let eta = self.efficiency();
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::param("efficiency", eta, "must lie in [0, 1]"));
        }
        match *self {
            DetectorModel::Tes { max_resolved: 0, .. } => Err(Error::param(
                "max_resolved",
                0.0,
                "TES must resolve at least one photon",
            )),
            DetectorModel::MultiplexedApd { n_apds: 0, .. } => {
                Err(Error::param("n_apds", 0.0, "need at least one APD"))
            }
            _ => Ok(()),
        }
    }

    /// Every possible reading; their effects resolve the identity.
    pub fn outcomes(&self) -> Vec<Outcome> {
        match *self {
            DetectorModel::Tes { max_resolved, .. } => (0..=max_resolved)
                .map(Outcome::Count)
                .chain(std::iter::once(Outcome::Overflow))
                .collect(),
            DetectorModel::Apd { .. } => vec![Outcome::Count(0), Outcome::Count(1)],
            DetectorModel::MultiplexedApd { n_apds, .. } => (0..=n_apds).map(Outcome::Count).collect(),
        }
    }

    fn check_outcome(&self, outcome: Outcome) -> Result<()> {
        let bad = |reason: String| Error::InvalidOutcome {
            outcome: outcome.to_string(),
            reason,
        };
        match (*self, outcome) {
            (DetectorModel::Tes { max_resolved, .. }, Outcome::Count(n)) if n > max_resolved => Err(bad(format!(
                "TES resolves at most {max_resolved} photons; larger counts fall into the overflow outcome"
            ))),
            (DetectorModel::Tes { .. }, _) => Ok(()),
            (_, Outcome::Overflow) => Err(bad("only a TES has an overflow outcome".into())),
            (DetectorModel::Apd { .. }, Outcome::Count(n)) if n > 1 => {
                Err(bad("an on/off detector reads 0 or 1".into()))
            }
            (DetectorModel::MultiplexedApd { n_apds, .. }, Outcome::Count(n)) if n > n_apds => {
                Err(bad(format!("only {n_apds} detectors can click")))
            }
            _ => Ok(()),
        }
    }

    /// P(outcome | k photons arrive).
    pub fn outcome_probability(&self, outcome: Outcome, k: usize) -> Result<f64> {
        self.validate()?;
        self.check_outcome(outcome)?;
        Ok(match (*self, outcome) {
            (DetectorModel::Tes { efficiency, .. }, Outcome::Count(n)) => {
                binomial_pmf(k as u32, n as u32, efficiency)
            }
            (DetectorModel::Tes { efficiency, max_resolved }, Outcome::Overflow) => {
                let resolved: f64 = (0..=max_resolved.min(k))
                    .map(|n| binomial_pmf(k as u32, n as u32, efficiency))
                    .sum();
                (1.0 - resolved).max(0.0)
            }
            (DetectorModel::Apd { efficiency }, Outcome::Count(c)) => {
                let none = (1.0 - efficiency).powi(k as i32);
                if c == 0 {
                    none
                } else {
                    1.0 - none
                }
            }
            (DetectorModel::MultiplexedApd { efficiency, n_apds }, Outcome::Count(j)) => {
                multiplexed_click_probability(efficiency, n_apds, j, k)
            }
            _ => unreachable!("outcome checked above"),
        })
    }

    /// Detector reading that signals `n` subtracted photons.
    pub fn herald_outcome(&self, n: usize) -> Result<Outcome> {
        let outcome = match self {
            DetectorModel::Apd { .. } if n != 1 => {
                return Err(Error::InvalidOutcome {
                    outcome: n.to_string(),
                    reason: "a single on/off detector can only herald one photon".into(),
                })
            }
            DetectorModel::Apd { .. } => Outcome::Count(1),
            _ => Outcome::Count(n),
        };
        self.check_outcome(outcome)?;
        Ok(outcome)
    }
}

/// Exactly `j` of `n_apds` balanced on/off detectors click when `k` photons
/// enter, by inclusion–exclusion over the detectors that stay dark.
fn multiplexed_click_probability(eta: f64, n_apds: usize, j: usize, k: usize) -> f64 {
    let n = n_apds as f64;
    let sum: f64 = (0..=j)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let dark = (n_apds - j + i) as f64;
            sign * binomial_coeff(j, i) * (1.0 - eta * dark / n).powi(k as i32)
        })
        .sum();
    (binomial_coeff(n_apds, j) * sum).clamp(0.0, 1.0)
}

/// Diagonal POVM effect Π = Σ_k P(outcome | k) |k⟩⟨k|.
pub fn detector_povm(det: &DetectorModel, outcome: Outcome, d: FockDim) -> Result<FockOperator> {
    let probs = (0..d.get())
        .map(|k| det.outcome_probability(outcome, k))
        .collect::<Result<Vec<_>>>()?;
    FockOperator::diagonal(&probs)
}

// ---------------------------------------------------------------------------
// Heralding

/// Subtraction beamsplitter, detector and target count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeraldConfig {
    pub reflectivity: f64,
    pub detector: DetectorModel,
    pub n_subtract: usize,
    /// Probability that the heralding photons came from the signal mode.
    pub modal_purity: f64,
}

impl HeraldConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.reflectivity > 0.0 && self.reflectivity < 1.0) {
            return Err(Error::param("reflectivity", self.reflectivity, "must lie in (0, 1)"));
        }
        if self.n_subtract == 0 {
            return Err(Error::param("n_subtract", 0.0, "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.modal_purity) {
            return Err(Error::param("modal_purity", self.modal_purity, "must lie in [0, 1]"));
        }
        self.detector.validate()?;
        self.detector.herald_outcome(self.n_subtract)?;
        Ok(())
    }

    pub fn outcome(&self) -> Result<Outcome> {
        self.detector.herald_outcome(self.n_subtract)
    }
}

/// Conditional state and its acceptance probability.
#[derive(Clone, Debug)]
pub struct Heralded {
    pub state: DensityMatrix,
    pub probability: f64,
}

/// Unnormalized Σ_k P(outcome|k) B_k ρ B_k†.
fn conditional_unnormalized(
    rho: &DensityMatrix,
    r: f64,
    det: &DetectorModel,
    outcome: Outcome,
) -> Result<DMatrix<C64>> {
    let dim = rho.dim().get();
    let weights = (0..dim)
        .map(|k| det.outcome_probability(outcome, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(routed_sum(rho.matrix(), r, |k| weights[k]))
}

/// Probability that the subtraction detector reads `outcome`.
pub fn herald_probability(rho: &DensityMatrix, r: f64, det: &DetectorModel, outcome: Outcome) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::param("reflectivity", r, "must lie in (0, 1)"));
    }
    let m = conditional_unnormalized(rho, r, det, outcome)?;
    Ok(crate::fock::trace(&m).re)
}

/// Transmitted state conditioned on the detector reading `hc.n_subtract`
/// (modal purity is not applied here, see [`modal_mixture`]).
pub fn herald_subtract(rho: &DensityMatrix, hc: &HeraldConfig) -> Result<Heralded> {
    hc.validate()?;
    let outcome = hc.outcome()?;
    let m = conditional_unnormalized(rho, hc.reflectivity, &hc.detector, outcome)?;
    let p = crate::fock::trace(&m).re;
    if !(p > HERALD_FLOOR) {
        return Err(Error::VanishingHerald(p));
    }
    let state = DensityMatrix::normalized(m, rho.tail_weight())?;
    Ok(Heralded {
        state,
        probability: p.min(1.0),
    })
}

/// Unconditioned transmitted beam, the state a spurious herald leaves behind.
pub fn transmitted_background(rho: &DensityMatrix, reflectivity: f64) -> Result<DensityMatrix> {
    Ok(LossChannel::new(reflectivity)?.apply(rho))
}

/// ξ·ρ_herald + (1−ξ)·ρ_background.
pub fn modal_mixture(herald: &DensityMatrix, background: &DensityMatrix, xi: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::param("xi", xi, "modal purity must lie in [0, 1]"));
    }
    herald.mix(background, xi)
}
