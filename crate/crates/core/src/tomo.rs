//! Maximum-likelihood reconstruction from homodyne samples with a loss-aware
//! POVM, and parametric-bootstrap uncertainty bands.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FockDim, FockOperator, C64, ZERO};
use crate::homodyne::{sample_at_phases, QuadratureDataset};
use crate::optics::LossChannel;
use crate::phase_space::{hermite_functions_into, nearest_css, wigner_min, CssFit, PhaseSpaceGrid};

/// Probability below which a sample is floored during iteration.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

/// Consecutive small-gain iterations required to stop.
pub const STOP_WINDOW: usize = 10;

const MAX_HALVINGS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleConfig {
    #[serde(default)]
    pub dim: FockDim,
    /// Detection loss assumed by the POVM.
    pub gamma_h: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Per-sample log-likelihood gain below which an iteration counts as stalled.
    #[serde(default = "default_stop_delta")]
    pub stop_delta: f64,
    #[serde(default = "default_dilution")]
    pub dilution: f64,
}

fn default_max_iters() -> usize {
    2000
}
fn default_stop_delta() -> f64 {
    1e-9
}
fn default_dilution() -> f64 {
    1.0
}

impl MleConfig {
    pub fn new(dim: FockDim, gamma_h: f64) -> Self {
        MleConfig {
            dim,
            gamma_h,
            max_iters: default_max_iters(),
            stop_delta: default_stop_delta(),
            dilution: default_dilution(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma_h) {
            return Err(Error::param("gamma_h", self.gamma_h, "detection loss must lie in [0, 1)"));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", 0.0, "need at least one iteration"));
        }
        if !(self.stop_delta > 0.0) {
            return Err(Error::param("stop_delta", self.stop_delta, "must be positive"));
        }
        if !(self.dilution > 0.0 && self.dilution <= 1.0) {
            return Err(Error::param("dilution", self.dilution, "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Ideal quadrature eigenvectors u_j = (e^{inθ_j} ψ_n(x_j))_n, grouped by phase.
///
/// With D = diag(e^{inθ}) and real ψ, u†σu = ψᵀ Re(D†σD) ψ and
/// Σ w u u† = D (Σ w ψψᵀ) D†, so each phase level needs only real products
/// of its N_ℓ×dim block of eigenfunction values.
struct ProjectorBank {
    dim: usize,
    groups: Vec<PhaseGroup>,
    n: usize,
}

struct PhaseGroup {
    theta: f64,
    /// Original sample index of each row.
    index: Vec<usize>,
    psi: DMatrix<f64>,
    psi_t: DMatrix<f64>,
}

impl ProjectorBank {
    fn new(data: &QuadratureDataset, dim: usize) -> Self {
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.sort_by(|&a, &b| data.records[a].theta.total_cmp(&data.records[b].theta).then(a.cmp(&b)));
        let mut groups = Vec::new();
        let mut psi = vec![0.0; dim];
        let mut start = 0;
        while start < order.len() {
            let theta = data.records[order[start]].theta;
            let mut end = start;
            while end < order.len() && data.records[order[end]].theta.to_bits() == theta.to_bits() {
                end += 1;
            }
            let index: Vec<usize> = order[start..end].to_vec();
            let mut block = DMatrix::zeros(index.len(), dim);
            for (row, &j) in index.iter().enumerate() {
                hermite_functions_into(data.records[j].x, &mut psi);
                for (k, v) in psi.iter().enumerate() {
                    block[(row, k)] = *v;
                }
            }
            let psi_t = block.transpose();
            groups.push(PhaseGroup {
                theta,
                index,
                psi: block,
                psi_t,
            });
            start = end;
        }
        ProjectorBank {
            dim,
            groups,
            n: data.len(),
        }
    }

    /// p_j = u_j† σ u_j for every sample, in dataset order.
    fn probabilities(&self, sigma: &DMatrix<C64>) -> Vec<f64> {
        let d = self.dim;
        let mut p = vec![0.0; self.n];
        let mut local = Vec::new();
        for g in &self.groups {
            let rot = rotations(g.theta, d);
            let m = DMatrix::from_fn(d, d, |a, b| (sigma[(a, b)] * rot[b] * rot[a].conj()).re);
            let a = &g.psi * m;
            local.clear();
            local.resize(g.index.len(), 0.0);
            for k in 0..d {
                for ((acc, x), y) in local.iter_mut().zip(g.psi.column(k).iter()).zip(a.column(k).iter()) {
                    *acc += x * y;
                }
            }
            for (&j, v) in g.index.iter().zip(&local) {
                p[j] = *v;
            }
        }
        p
    }

    /// Σ_j w_j u_j u_j†, weights in dataset order.
    fn weighted_sum(&self, w: &[f64]) -> DMatrix<C64> {
        let d = self.dim;
        let mut s = DMatrix::from_element(d, d, ZERO);
        let mut wl = Vec::new();
        let mut scaled = DMatrix::<f64>::zeros(0, 0);
        let mut gram = DMatrix::<f64>::zeros(d, d);
        for g in &self.groups {
            wl.clear();
            wl.extend(g.index.iter().map(|&j| w[j]));
            let (rows, cols) = g.psi_t.shape();
            scaled.resize_mut(rows, cols, 0.0);
            scaled.copy_from(&g.psi_t);
            for (mut col, wj) in scaled.column_iter_mut().zip(&wl) {
                col *= *wj;
            }
            gram.gemm(1.0, &scaled, &g.psi, 0.0);
            let rot = rotations(g.theta, d);
            for b in 0..d {
                for a in 0..d {
                    s[(a, b)] += rot[a] * rot[b].conj() * gram[(a, b)];
                }
            }
        }
        s
    }
}

fn rotations(theta: f64, d: usize) -> Vec<C64> {
    (0..d).map(|k| C64::from_polar(1.0, k as f64 * theta)).collect()
}

/// Π(x, θ) = Λ†_{γh}(|x_θ⟩⟨x_θ|), a probability density in x.
pub fn povm_element(theta: f64, x: f64, cfg: &MleConfig) -> Result<FockOperator> {
    cfg.validate()?;
    let d = cfg.dim.get();
    let psi = crate::phase_space::hermite_functions(x, d);
    let u = nalgebra::DVector::from_fn(d, |n, _| C64::from_polar(psi[n], n as f64 * theta));
    let proj = &u * u.adjoint();
    Ok(FockOperator::from_matrix_unchecked(
        LossChannel::new(cfg.gamma_h)?.apply_adjoint(&proj),
    ))
}

/// Σ_j ln Tr(ρ Π_j), or the first sample with vanishing probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LogLikelihood {
    Finite(f64),
    Impossible { sample: usize },
}

impl LogLikelihood {
    pub fn value(self) -> f64 {
        match self {
            LogLikelihood::Finite(v) => v,
            LogLikelihood::Impossible { .. } => f64::NEG_INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, LogLikelihood::Finite(_))
    }
}

pub fn loglikelihood(rho: &DensityMatrix, data: &QuadratureDataset, cfg: &MleConfig) -> Result<LogLikelihood> {
    cfg.validate()?;
    data.validate()?;
    cfg.dim.ensure_same(rho.dim())?;
    let d = cfg.dim.get();
    let bank = ProjectorBank::new(data, d);
    let sigma = LossChannel::new(cfg.gamma_h)?.apply_matrix(rho.matrix());
    let p = bank.probabilities(&sigma);
    Ok(sum_log(&p))
}

fn sum_log(p: &[f64]) -> LogLikelihood {
    let mut acc = 0.0;
    for (j, &pj) in p.iter().enumerate() {
        if !(pj > 0.0) {
            return LogLikelihood::Impossible { sample: j };
        }
        acc += pj.ln();
    }
    LogLikelihood::Finite(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Gain per sample stayed below `stop_delta` for the full window.
    Converged,
    /// `max_iters` reached first.
    MaxIterations,
    /// No dilution down to 2^-40 increased the likelihood.
    Stalled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleDiagnostics {
    pub iterations: usize,
    pub termination: Termination,
    /// Final log-likelihood per sample.
    pub loglikelihood_per_sample: f64,
    /// Largest number of samples floored at [`PROBABILITY_FLOOR`] in any iterate.
    pub floored_samples: usize,
    pub rejected_steps: usize,
}

#[derive(Clone, Debug)]
pub struct MleResult {
    pub state: DensityMatrix,
    pub diagnostics: MleDiagnostics,
}

fn floored_loglik(p: &mut [f64]) -> (f64, usize) {
    let mut floored = 0;
    let mut acc = 0.0;
    for pj in p.iter_mut() {
        if !(*pj >= PROBABILITY_FLOOR) {
            *pj = PROBABILITY_FLOOR;
            floored += 1;
        }
        acc += pj.ln();
    }
    (acc, floored)
}

/// Diluted RρR iteration from the maximally mixed state. Each accepted step
/// does not decrease the likelihood; the dilution is halved until it does not.
pub fn mle_reconstruct(data: &QuadratureDataset, cfg: &MleConfig) -> Result<MleResult> {
    cfg.validate()?;
    data.validate()?;
    let d = cfg.dim.get();
    let n = data.len();
    let nf = n as f64;
    let bank = ProjectorBank::new(data, d);
    let loss = LossChannel::new(cfg.gamma_h)?;
    let identity = DMatrix::<C64>::identity(d, d);

    let mut rho = DensityMatrix::maximally_mixed(cfg.dim);
    let mut p = bank.probabilities(&loss.apply_matrix(rho.matrix()));
    let (mut ll, mut max_floored) = floored_loglik(&mut p);

    let mut small = 0usize;
    let mut rejected = 0usize;
    let mut iterations = 0usize;
    let mut termination = Termination::MaxIterations;
    while iterations < cfg.max_iters {
        let w: Vec<f64> = p.iter().map(|pj| 1.0 / (nf * pj)).collect();
        let r = loss.apply_adjoint(&bank.weighted_sum(&w));
        let mut eps = cfg.dilution;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let m = &identity * C64::new(1.0 - eps, 0.0) + &r * C64::new(eps, 0.0);
            let trial = DensityMatrix::normalized(&m * rho.matrix() * &m, 0.0)?;
            let mut p_trial = bank.probabilities(&loss.apply_matrix(trial.matrix()));
            let (ll_trial, floored) = floored_loglik(&mut p_trial);
            if ll_trial >= ll {
                accepted = Some((trial, p_trial, ll_trial, floored));
                break;
            }
            rejected += 1;
            eps *= 0.5;
        }
        iterations += 1;
        let Some((trial, p_trial, ll_trial, floored)) = accepted else {
            termination = Termination::Stalled;
            break;
        };
        let gain = (ll_trial - ll) / nf;
        debug_assert!(ll_trial >= ll);
        rho = trial;
        p = p_trial;
        ll = ll_trial;
        max_floored = max_floored.max(floored);
        if gain < cfg.stop_delta {
            small += 1;
            if small >= STOP_WINDOW {
                termination = Termination::Converged;
                break;
            }
        } else {
            small = 0;
        }
    }
    Ok(MleResult {
        state: rho,
        diagnostics: MleDiagnostics {
            iterations,
            termination,
            loglikelihood_per_sample: ll / nf,
            floored_samples: max_floored,
            rejected_steps: rejected,
        },
    })
}

/// Figures of merit of one state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateMetrics {
    pub w_min: f64,
    pub w_min_q: f64,
    pub w_min_p: f64,
    pub mean_photon: f64,
    pub purity: f64,
    pub css: CssFit,
}

impl StateMetrics {
    pub fn of(rho: &DensityMatrix, grid: &PhaseSpaceGrid) -> Result<Self> {
        let wm = wigner_min(rho, grid)?;
        Ok(StateMetrics {
            w_min: wm.value,
            w_min_q: wm.q,
            w_min_p: wm.p,
            mean_photon: rho.mean_photon(),
            purity: rho.purity(),
            css: nearest_css(rho)?,
        })
    }

    pub fn fidelity(&self) -> f64 {
        self.css.fidelity
    }

    pub fn alpha_abs(&self) -> f64 {
        self.css.alpha.norm()
    }
}

/// Linear-interpolation percentile of sorted data, q in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// 16th percentile, point value, 84th percentile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lower: f64,
    pub point: f64,
    pub upper: f64,
}

impl Band {
    fn from_samples(point: f64, values: &[f64]) -> Band {
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        if v.is_empty() {
            return Band {
                lower: f64::NAN,
                point,
                upper: f64::NAN,
            };
        }
        Band {
            lower: percentile(&v, 0.16),
            point,
            upper: percentile(&v, 0.84),
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    /// Offsets in the "point −(point − L) +(U − point)" form.
    pub fn minus(&self) -> f64 {
        self.point - self.lower
    }

    pub fn plus(&self) -> f64 {
        self.upper - self.point
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResampleOutcome {
    pub metrics: StateMetrics,
    pub diagnostics: MleDiagnostics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub point: StateMetrics,
    pub resamples: usize,
    pub seed: u64,
    /// Resamples that hit max_iters; left out of the bands.
    pub non_converged: usize,
    pub fidelity: Band,
    pub alpha: Band,
    pub mean_photon: Band,
    pub w_min: Band,
    pub purity: Band,
    pub mean_purity: f64,
    pub purity_std: f64,
    pub outcomes: Vec<ResampleOutcome>,
}

/// Parametric bootstrap: every resample draws a dataset of the template's size
/// and phase sequence from `point_estimate` through the template's detection
/// loss, and is reconstructed with `cfg`. Resample i uses stream i of `seed`.
pub fn bootstrap(
    point_estimate: &DensityMatrix,
    data_template: &QuadratureDataset,
    n_resamples: usize,
    cfg: &MleConfig,
    seed: u64,
    grid: &PhaseSpaceGrid,
) -> Result<BootstrapReport> {
    if n_resamples < 2 {
        return Err(Error::param("n_resamples", n_resamples as f64, "need at least 2 resamples"));
    }
    cfg.validate()?;
    data_template.validate()?;
    let phases = data_template.phases();
    let point = StateMetrics::of(point_estimate, grid)?;
    let outcomes: Vec<ResampleOutcome> = (0..n_resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let (records, _) = sample_at_phases(point_estimate, data_template.gamma_h, &phases, &mut rng)?;
            let ds = QuadratureDataset::new(records, data_template.gamma_h, seed, data_template.source_label.clone())?;
            let fit = mle_reconstruct(&ds, cfg)?;
            Ok(ResampleOutcome {
                metrics: StateMetrics::of(&fit.state, grid)?,
                diagnostics: fit.diagnostics,
            })
        })
        .collect::<Result<_>>()?;

    let kept: Vec<&StateMetrics> = outcomes
        .iter()
        .filter(|o| o.diagnostics.termination != Termination::MaxIterations)
        .map(|o| &o.metrics)
        .collect();
    let collect = |f: fn(&StateMetrics) -> f64| kept.iter().map(|m| f(m)).collect::<Vec<f64>>();
    let purities = collect(|m| m.purity);
    let mean_purity = purities.iter().sum::<f64>() / purities.len().max(1) as f64;
    let purity_std = if purities.len() > 1 {
        (purities.iter().map(|p| (p - mean_purity).powi(2)).sum::<f64>() / (purities.len() - 1) as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(BootstrapReport {
        point,
        resamples: n_resamples,
        seed,
        non_converged: outcomes.len() - kept.len(),
        fidelity: Band::from_samples(point.fidelity(), &collect(|m| m.css.fidelity)),
        alpha: Band::from_samples(point.alpha_abs(), &collect(|m| m.css.alpha.norm())),
        mean_photon: Band::from_samples(point.mean_photon, &collect(|m| m.mean_photon)),
        w_min: Band::from_samples(point.w_min, &collect(|m| m.w_min)),
        purity: Band::from_samples(point.purity, &purities),
        mean_purity,
        purity_std,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{css_state, fock_state, Parity};
    use crate::homodyne::{sample_quadratures, PhaseSchedule, Quadrature};
    use crate::phase_space::quad_pdf;

    fn dim(n: usize) -> FockDim {
        FockDim::new(n).unwrap()
    }

    #[test]
    fn povm_limits() {
        let mut cfg = MleConfig::new(dim(12), 0.0);
        let pi = povm_element(0.7, 0.4, &cfg).unwrap();
        // rank one: Π² = Π Tr Π
        let m = pi.matrix();
        let tr = m.trace();
        assert!((m * m - m * tr).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);

        cfg.gamma_h = 0.999_999_999;
        let pi = povm_element(0.7, 0.4, &cfg).unwrap();
        let vac_pdf = (-0.16f64).exp() / std::f64::consts::PI.sqrt();
        // total loss leaves vacuum noise; the truncated identity is exact on low Fock states
        for k in 0..4 {
            assert!((pi.matrix()[(k, k)].re - vac_pdf).abs() < 1e-6);
        }
    }

    #[test]
    fn povm_duality_with_lossy_state() {
        let cfg = MleConfig::new(dim(30), 0.15);
        let rho = css_state(C64::new(1.2, 0.0), Parity::Odd, dim(30)).unwrap().to_density();
        let lossy = LossChannel::new(0.15).unwrap().apply(&rho);
        for (theta, x) in [(0.0, 0.3), (1.0, -1.2), (2.5, 2.0)] {
            let pi = povm_element(theta, x, &cfg).unwrap();
            let a = rho.expect(&pi).unwrap().re;
            let b = quad_pdf(&lossy, theta, x);
            assert!((a - b).abs() < 1e-10);
        }
        // vacuum case as quoted
        let vac = fock_state(0, dim(30)).unwrap().to_density();
        let pi = povm_element(0.3, 0.8, &cfg).unwrap();
        let lossy_vac = LossChannel::new(0.15).unwrap().apply(&vac);
        assert!((vac.expect(&pi).unwrap().re - quad_pdf(&lossy_vac, 0.3, 0.8)).abs() < 1e-10);
    }

    #[test]
    fn povm_integrates_to_identity() {
        let cfg = MleConfig::new(dim(16), 0.2);
        let (lo, n) = (-10.0, 4000usize);
        let h = 20.0 / n as f64;
        let mut acc = DMatrix::from_element(16, 16, ZERO);
        for i in 0..=n {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += povm_element(0.9, lo + i as f64 * h, &cfg).unwrap().matrix() * C64::new(w * h, 0.0);
        }
        let err = (acc - DMatrix::identity(16, 16)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn bank_matches_direct_probabilities() {
        let d = 20;
        let rho = css_state(C64::new(1.0, 0.5), Parity::Even, dim(d)).unwrap().to_density();
        let ds = sample_quadratures(&rho, 0.1, &PhaseSchedule::uniform(37), 50, 4, "t").unwrap();
        let bank = ProjectorBank::new(&ds, d);
        let p = bank.probabilities(rho.matrix());
        for (j, r) in ds.records.iter().enumerate() {
            assert!((p[j] - quad_pdf(&rho, r.theta, r.x)).abs() < 1e-12);
        }
        // weighted sum against explicit outer products
        let w: Vec<f64> = (0..50).map(|j| 0.1 + j as f64 * 0.01).collect();
        let s = bank.weighted_sum(&w);
        let mut direct = DMatrix::from_element(d, d, ZERO);
        for (j, r) in ds.records.iter().enumerate() {
            let psi = crate::phase_space::hermite_functions(r.x, d);
            let u = nalgebra::DVector::from_fn(d, |n, _| C64::from_polar(psi[n], n as f64 * r.theta));
            direct += &u * u.adjoint() * C64::new(w[j], 0.0);
        }
        assert!((s - direct).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
    }

    #[test]
    fn vacuum_loglikelihood_entropy() {
        let d = dim(10);
        let vac = fock_state(0, d).unwrap().to_density();
        let cfg = MleConfig::new(d, 0.0);
        let ds = sample_quadratures(&vac, 0.0, &PhaseSchedule::default(), 100_000, 11, "vac").unwrap();
        let ll = loglikelihood(&vac, &ds, &cfg).unwrap().value() / ds.len() as f64;
        let expected = -(0.5 + std::f64::consts::PI.sqrt().ln());
        // sd of ln p per sample is 1/√2
        assert!((ll - expected).abs() < 4.0 * std::f64::consts::FRAC_1_SQRT_2 / (ds.len() as f64).sqrt(), "{ll} vs {expected}");
    }

    #[test]
    fn impossible_sample() {
        let d = dim(4);
        let one = fock_state(1, d).unwrap().to_density();
        // |1⟩ has a node at x = 0
        let ds = QuadratureDataset::new(vec![Quadrature { theta: 0.0, x: 0.0 }], 0.0, 0, "node").unwrap();
        let ll = loglikelihood(&one, &ds, &MleConfig::new(d, 0.0)).unwrap();
        assert_eq!(ll, LogLikelihood::Impossible { sample: 0 });
        assert_eq!(ll.value(), f64::NEG_INFINITY);
    }

    #[test]
    fn vacuum_round_trip() {
        let d = dim(10);
        let vac = fock_state(0, d).unwrap().to_density();
        let ds = sample_quadratures(&vac, 0.0, &PhaseSchedule::default(), 20_000, 3, "vac").unwrap();
        let fit = mle_reconstruct(&ds, &MleConfig::new(d, 0.0)).unwrap();
        assert!(fit.state.element(0, 0).re > 0.995, "{}", fit.state.element(0, 0));
        fit.state.validate().unwrap();
        let ll_true = loglikelihood(&vac, &ds, &MleConfig::new(d, 0.0)).unwrap().value();
        let ll_mixed = loglikelihood(&DensityMatrix::maximally_mixed(d), &ds, &MleConfig::new(d, 0.0))
            .unwrap()
            .value();
        assert!(ll_true > ll_mixed);
    }

    #[test]
    fn lossy_cat_round_trip_small() {
        let d = dim(16);
        let rho = css_state(C64::new(1.0, 0.0), Parity::Odd, d).unwrap().to_density();
        let ds = sample_quadratures(&rho, 0.15, &PhaseSchedule::default(), 20_000, 8, "cat").unwrap();
        let fit = mle_reconstruct(&ds, &MleConfig::new(d, 0.15)).unwrap();
        let f = fit.state.uhlmann_fidelity(&rho).unwrap();
        assert!(f > 0.95, "{f}");
        assert_ne!(fit.diagnostics.termination, Termination::Stalled);
    }

    #[test]
    fn dilution_reaches_same_fixed_point() {
        let d = dim(10);
        let rho = css_state(C64::new(0.9, 0.0), Parity::Even, d).unwrap().to_density();
        let ds = sample_quadratures(&rho, 0.1, &PhaseSchedule::default(), 5_000, 21, "cat").unwrap();
        let mut cfg = MleConfig::new(d, 0.1);
        cfg.max_iters = 20_000;
        cfg.stop_delta = 1e-11;
        let a = mle_reconstruct(&ds, &cfg).unwrap();
        cfg.dilution = 0.5;
        let b = mle_reconstruct(&ds, &cfg).unwrap();
        assert!(a.state.trace_distance(&b.state).unwrap() < 1e-3);
    }

    #[test]
    fn likelihood_is_monotone() {
        let d = dim(8);
        let rho = fock_state(1, d).unwrap().to_density();
        let ds = sample_quadratures(&rho, 0.2, &PhaseSchedule::default(), 3000, 2, "one").unwrap();
        let mut last = f64::NEG_INFINITY;
        for iters in [1, 2, 5, 10, 40] {
            let mut cfg = MleConfig::new(d, 0.2);
            cfg.max_iters = iters;
            let ll = mle_reconstruct(&ds, &cfg).unwrap().diagnostics.loglikelihood_per_sample;
            assert!(ll >= last);
            last = ll;
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = MleConfig::new(dim(5), 0.1);
        cfg.dilution = 0.0;
        assert!(cfg.validate().is_err());
        cfg.dilution = 1.0;
        cfg.stop_delta = 0.0;
        assert!(cfg.validate().is_err());
        let text = "gamma_h = 0.15\n";
        let parsed: MleConfig = toml::from_str(text).unwrap();
        assert_eq!(parsed, MleConfig::new(FockDim::default(), 0.15));
    }

    #[test]
    fn percentiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 0.5), 3.0);
        assert!((percentile(&v, 0.16) - 1.64).abs() < 1e-12);
        assert!((percentile(&v, 0.84) - 4.36).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_is_deterministic_and_ordered() {
        let d = dim(8);
        let rho = css_state(C64::new(0.8, 0.0), Parity::Odd, d).unwrap().to_density();
        let ds = sample_quadratures(&rho, 0.1, &PhaseSchedule::default(), 800, 5, "cat").unwrap();
        let cfg = MleConfig::new(d, 0.1);
        let grid = PhaseSpaceGrid::square(3.0, 31);
        let a = bootstrap(&rho, &ds, 6, &cfg, 99, &grid).unwrap();
        let b = bootstrap(&rho, &ds, 6, &cfg, 99, &grid).unwrap();
        assert_eq!(a, b);
        for band in [a.fidelity, a.alpha, a.mean_photon, a.w_min, a.purity] {
            assert!(band.lower <= band.upper);
        }
        assert!(bootstrap(&rho, &ds, 1, &cfg, 99, &grid).is_err());
    }
}
