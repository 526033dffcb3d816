//! Synthetic homodyne data: phase schedules, inverse-CDF quadrature sampling
//! through the lossy detection chain, and the text dataset format.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, C64, ZERO};
use crate::optics::LossChannel;
use crate::phase_space::hermite_functions_into;

/// Dataset header tag and version.
pub const DATASET_MAGIC: &str = "#cattomo-quadratures";
pub const DATASET_VERSION: u32 = 1;

/// Probability mass beyond the tabulated range above which a sampler is flagged.
pub const TAIL_FLAG: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    /// Independent uniformly random phase per sample over [0, 2π).
    UniformRandom,
    /// Linear ramp over [0, π), repeated `cycles` times across the dataset.
    Sawtooth,
}

/// Local-oscillator phase sequence. Phases are quantized to `n_phases` levels so
/// that each level shares one tabulated distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSchedule {
    pub kind: ScheduleKind,
    pub n_phases: usize,
    #[serde(default = "default_cycles")]
    pub cycles: usize,
}

fn default_cycles() -> usize {
    1
}

impl Default for PhaseSchedule {
    fn default() -> Self {
        PhaseSchedule {
            kind: ScheduleKind::Sawtooth,
            n_phases: 180,
            cycles: 20,
        }
    }
}

impl PhaseSchedule {
    pub fn sawtooth(n_phases: usize, cycles: usize) -> Self {
        PhaseSchedule {
            kind: ScheduleKind::Sawtooth,
            n_phases,
            cycles,
        }
    }

    pub fn uniform(n_phases: usize) -> Self {
        PhaseSchedule {
            kind: ScheduleKind::UniformRandom,
            n_phases,
            cycles: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_phases == 0 {
            return Err(Error::param("n_phases", 0.0, "need at least one phase level"));
        }
        if self.kind == ScheduleKind::Sawtooth && self.cycles == 0 {
            return Err(Error::param("cycles", 0.0, "sawtooth needs at least one cycle"));
        }
        Ok(())
    }

    /// Phase of every sample, in index order. Random schedules draw from `rng`.
    pub fn phases(&self, n_samples: usize, rng: &mut impl Rng) -> Vec<f64> {
        let levels = self.n_phases as f64;
        (0..n_samples)
            .map(|i| match self.kind {
                ScheduleKind::Sawtooth => {
                    let t = (i as f64 * self.cycles as f64 / n_samples as f64).fract();
                    let level = ((t * levels).floor() as usize).min(self.n_phases - 1);
                    canonical(PI * level as f64 / levels)
                }
                ScheduleKind::UniformRandom => {
                    let level = rng.random_range(0..self.n_phases);
                    canonical(2.0 * PI * level as f64 / levels)
                }
            })
            .collect()
    }
}

/// Rounds to the 9 significant digits the dataset file stores.
pub fn canonical(v: f64) -> f64 {
    format!("{v:.8e}").parse().expect("formatted float parses")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub theta: f64,
    pub x: f64,
}

/// Homodyne samples with the detection loss and seed that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureDataset {
    pub records: Vec<Quadrature>,
    pub gamma_h: f64,
    pub seed: u64,
    pub source_label: String,
}

impl QuadratureDataset {
    pub fn new(records: Vec<Quadrature>, gamma_h: f64, seed: u64, source_label: impl Into<String>) -> Result<Self> {
        let ds = QuadratureDataset {
            records,
            gamma_h,
            seed,
            source_label: source_label.into(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !(0.0..1.0).contains(&self.gamma_h) {
            return Err(Error::param("gamma_h", self.gamma_h, "detection loss must lie in [0, 1)"));
        }
        if self.source_label.contains('\n') {
            return Err(Error::Config("source label must be a single line".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn phases(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.theta).collect()
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        writeln!(
            w,
            "{DATASET_MAGIC} v{DATASET_VERSION} gamma_h={} seed={} count={} label={}",
            self.gamma_h,
            self.seed,
            self.records.len(),
            self.source_label
        )?;
        let mut line = String::with_capacity(40);
        for r in &self.records {
            line.clear();
            write!(line, "{:.8e},{:.8e}", r.theta, r.x).expect("writing to a String");
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })??;
        let bad = |msg: &str| Error::Parse {
            line: 1,
            msg: msg.to_string(),
        };
        let rest = header
            .strip_prefix(DATASET_MAGIC)
            .ok_or_else(|| bad("not a quadrature dataset"))?;
        let (fields, label) = rest.split_once(" label=").ok_or_else(|| bad("missing label"))?;
        let mut gamma_h = None;
        let mut seed = None;
        let mut count = None;
        let mut version = None;
        for tok in fields.split_whitespace() {
            if let Some(v) = tok.strip_prefix('v') {
                version = v.parse::<u32>().ok();
            } else if let Some(v) = tok.strip_prefix("gamma_h=") {
                gamma_h = v.parse::<f64>().ok();
            } else if let Some(v) = tok.strip_prefix("seed=") {
                seed = v.parse::<u64>().ok();
            } else if let Some(v) = tok.strip_prefix("count=") {
                count = v.parse::<usize>().ok();
            } else {
                return Err(bad(&format!("unknown header field `{tok}`")));
            }
        }
        if version != Some(DATASET_VERSION) {
            return Err(bad("unsupported version"));
        }
        let (gamma_h, seed, count) = match (gamma_h, seed, count) {
            (Some(g), Some(s), Some(c)) => (g, s, c),
            _ => return Err(bad("header needs gamma_h, seed and count")),
        };
        let mut records = Vec::with_capacity(count);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: i + 2, msg };
            let (t, x) = line
                .split_once(',')
                .ok_or_else(|| parse_err("expected `theta,x`".into()))?;
            let theta = t.trim().parse().map_err(|e| parse_err(format!("theta: {e}")))?;
            let x = x.trim().parse().map_err(|e| parse_err(format!("x: {e}")))?;
            records.push(Quadrature { theta, x });
        }
        if records.len() != count {
            return Err(Error::Parse {
                line: records.len() + 2,
                msg: format!("header announces {count} records, found {}", records.len()),
            });
        }
        QuadratureDataset::new(records, gamma_h, seed, label)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        QuadratureDataset::read_from(std::io::BufReader::new(f))
    }
}

/// Coefficients c_k(x) = Σ_m ψ_m(x) ψ_{m+k}(x) σ_{m,m+k} on a uniform x-grid, so that
/// pr(x|θ) = c_0(x) + 2 Re Σ_{k≥1} e^{ikθ} c_k(x) costs O(dim) per (x, θ).
struct HarmonicTable {
    x0: f64,
    h: f64,
    n: usize,
    dim: usize,
    coeffs: Vec<C64>,
}

impl HarmonicTable {
    fn build(sigma: &DMatrix<C64>, half_width: f64, n_cells: usize) -> Self {
        let dim = sigma.nrows();
        let n = n_cells + 1;
        let h = 2.0 * half_width / n_cells as f64;
        let mut coeffs = vec![ZERO; n * dim];
        let mut psi = vec![0.0; dim];
        for i in 0..n {
            let x = -half_width + i as f64 * h;
            hermite_functions_into(x, &mut psi);
            let row = &mut coeffs[i * dim..(i + 1) * dim];
            for k in 0..dim {
                let mut c = ZERO;
                for m in 0..dim - k {
                    c += sigma[(m, m + k)] * (psi[m] * psi[m + k]);
                }
                row[k] = c;
            }
        }
        HarmonicTable {
            x0: -half_width,
            h,
            n,
            dim,
            coeffs,
        }
    }

    fn pdf_row(&self, theta: f64, out: &mut Vec<f64>) {
        let rot: Vec<C64> = (0..self.dim).map(|k| C64::from_polar(1.0, k as f64 * theta)).collect();
        out.clear();
        for i in 0..self.n {
            let row = &self.coeffs[i * self.dim..(i + 1) * self.dim];
            let mut s = row[0].re;
            for k in 1..self.dim {
                s += 2.0 * (rot[k] * row[k]).re;
            }
            out.push(s.max(0.0));
        }
    }
}

/// Tabulated distribution of one quadrature, sampled by CDF inversion with a
/// piecewise-linear density.
#[derive(Clone, Debug)]
pub struct InverseCdfSampler {
    x0: f64,
    h: f64,
    pdf: Vec<f64>,
    cdf: Vec<f64>,
    tail_mass: f64,
}

impl InverseCdfSampler {
    fn from_pdf(x0: f64, h: f64, pdf: Vec<f64>) -> Self {
        let mut cdf = Vec::with_capacity(pdf.len());
        cdf.push(0.0);
        for w in pdf.windows(2) {
            let last = *cdf.last().unwrap();
            cdf.push(last + 0.5 * h * (w[0] + w[1]));
        }
        let total = *cdf.last().unwrap();
        let tail_mass = (1.0 - total).max(0.0);
        InverseCdfSampler {
            x0,
            h,
            pdf,
            cdf,
            tail_mass,
        }
    }

    /// Unnormalized probability mass outside the table, 1 − ∫ pdf over the range.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// The tabulated range misses more than [`TAIL_FLAG`] of the probability.
    pub fn truncated(&self) -> bool {
        self.tail_mass > TAIL_FLAG
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x0, self.x0 + self.h * (self.pdf.len() - 1) as f64)
    }

    fn total(&self) -> f64 {
        *self.cdf.last().unwrap()
    }

    /// CDF of the (renormalized) tabulated distribution.
    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.range();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let t = (x - lo) / self.h;
        let i = (t.floor() as usize).min(self.pdf.len() - 2);
        let s = x - (lo + i as f64 * self.h);
        let (f0, f1) = (self.pdf[i], self.pdf[i + 1]);
        (self.cdf[i] + f0 * s + (f1 - f0) * s * s / (2.0 * self.h)) / self.total()
    }

    /// Maps u ∈ [0, 1) to x.
    pub fn quantile(&self, u: f64) -> f64 {
        let target = u * self.total();
        // bisection for the cell with cdf[i] ≤ target < cdf[i+1]
        let (mut lo, mut hi) = (0usize, self.cdf.len() - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cdf[mid] <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let i = lo;
        let rem = target - self.cdf[i];
        let (f0, f1) = (self.pdf[i], self.pdf[i + 1]);
        let slope = (f1 - f0) / self.h;
        // f0 s + slope s²/2 = rem, stable root
        let s = if slope.abs() < 1e-300 {
            if f0 > 0.0 {
                rem / f0
            } else {
                0.0
            }
        } else {
            let disc = (f0 * f0 + 2.0 * slope * rem).max(0.0);
            2.0 * rem / (f0 + disc.sqrt())
        };
        let s = if s.is_finite() { s.clamp(0.0, self.h) } else { 0.0 };
        self.x0 + i as f64 * self.h + s
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

/// Finest table spacing tried before giving up on refinement.
const MAX_CELLS: usize = 1 << 14;
const INTERP_TOL: f64 = 1e-7;

fn table_half_width(dim: usize) -> f64 {
    (2.0 * dim as f64).sqrt()
}

/// Picks the coarsest uniform grid on [−√(2 dim), √(2 dim)] whose linear
/// interpolation reproduces the density at cell midpoints to 1e-7.
fn adaptive_table(sigma: &DMatrix<C64>, probe_thetas: &[f64]) -> HarmonicTable {
    let half = table_half_width(sigma.nrows());
    let mut cells = 1024;
    loop {
        let fine = HarmonicTable::build(sigma, half, 2 * cells);
        if cells >= MAX_CELLS {
            return fine;
        }
        let mut worst = 0.0f64;
        let mut row = Vec::new();
        for &theta in probe_thetas {
            fine.pdf_row(theta, &mut row);
            for i in 0..cells {
                let interp = 0.5 * (row[2 * i] + row[2 * i + 2]);
                worst = worst.max((interp - row[2 * i + 1]).abs());
            }
        }
        if worst < INTERP_TOL {
            return HarmonicTable::build(sigma, half, cells);
        }
        cells *= 2;
    }
}

fn lossy(rho: &DensityMatrix, gamma_h: f64) -> Result<DensityMatrix> {
    if !(0.0..1.0).contains(&gamma_h) {
        return Err(Error::param("gamma_h", gamma_h, "detection loss must lie in [0, 1)"));
    }
    Ok(LossChannel::new(gamma_h)?.apply(rho))
}

/// Sampler for x_θ measured through detection loss γh.
pub fn inverse_cdf_sampler(rho: &DensityMatrix, theta: f64, gamma_h: f64) -> Result<InverseCdfSampler> {
    let sigma = lossy(rho, gamma_h)?;
    let table = adaptive_table(sigma.matrix(), &[theta]);
    let mut row = Vec::new();
    table.pdf_row(theta, &mut row);
    Ok(InverseCdfSampler::from_pdf(table.x0, table.h, row))
}

/// Samples from pr(x|θ) of the lossy state along a given phase sequence.
/// One table is built per distinct phase value.
pub fn sample_at_phases(
    rho: &DensityMatrix,
    gamma_h: f64,
    phases: &[f64],
    rng: &mut impl Rng,
) -> Result<(Vec<Quadrature>, f64)> {
    if phases.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let sigma = lossy(rho, gamma_h)?;
    let mut distinct: Vec<f64> = Vec::new();
    let mut index: HashMap<u64, usize> = HashMap::new();
    for &t in phases {
        index.entry(t.to_bits()).or_insert_with(|| {
            distinct.push(t);
            distinct.len() - 1
        });
    }
    let probes: Vec<f64> = distinct.iter().copied().step_by((distinct.len() / 8).max(1)).collect();
    let table = adaptive_table(sigma.matrix(), &probes);
    let mut row = Vec::new();
    let samplers: Vec<InverseCdfSampler> = distinct
        .iter()
        .map(|&t| {
            table.pdf_row(t, &mut row);
            InverseCdfSampler::from_pdf(table.x0, table.h, row.clone())
        })
        .collect();
    let max_tail = samplers.iter().map(|s| s.tail_mass()).fold(0.0, f64::max);
    let records = phases
        .iter()
        .map(|&theta| {
            let s = &samplers[index[&theta.to_bits()]];
            Quadrature {
                theta,
                x: canonical(s.sample(rng)),
            }
        })
        .collect();
    Ok((records, max_tail))
}

/// Synthetic homodyne dataset from ρ through detection loss γh.
pub fn sample_quadratures(
    rho: &DensityMatrix,
    gamma_h: f64,
    sched: &PhaseSchedule,
    n_samples: usize,
    seed: u64,
    label: &str,
) -> Result<QuadratureDataset> {
    sched.validate()?;
    if n_samples == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases = sched.phases(n_samples, &mut rng);
    let (records, _) = sample_at_phases(rho, gamma_h, &phases, &mut rng)?;
    QuadratureDataset::new(records, gamma_h, seed, label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{css_state, fock_state, squeezed_vacuum, FockDim, Parity};
    use crate::phase_space::quad_pdf;

    fn dim(n: usize) -> FockDim {
        FockDim::new(n).unwrap()
    }

    /// KS distance against a CDF obtained by integrating quad_pdf directly (Simpson).
    fn ks_statistic(xs: &mut [f64], rho: &DensityMatrix, theta: f64) -> f64 {
        xs.sort_by(|a, b| a.total_cmp(b));
        let (lo, hi, n) = (-9.0, 9.0, 18000usize);
        let h = (hi - lo) / n as f64;
        let mut cdf = vec![0.0; n + 1];
        for i in 0..n {
            let a = lo + i as f64 * h;
            let s = quad_pdf(rho, theta, a) + 4.0 * quad_pdf(rho, theta, a + h / 2.0) + quad_pdf(rho, theta, a + h);
            cdf[i + 1] = cdf[i] + s * h / 6.0;
        }
        let at = |x: f64| {
            let t = ((x - lo) / h).clamp(0.0, n as f64 - 1e-9);
            let i = t as usize;
            cdf[i] + (t - i as f64) * (cdf[i + 1] - cdf[i])
        };
        let m = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = at(x);
                (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
            })
            .fold(0.0, f64::max)
    }

    fn ks_critical(n: usize) -> f64 {
        1.628 / (n as f64).sqrt()
    }

    #[test]
    fn ks_vacuum_and_single_photon() {
        let n = 20_000;
        let d = dim(20);
        for (rho, theta) in [
            (fock_state(0, d).unwrap().to_density(), 0.3),
            (fock_state(1, d).unwrap().to_density(), 0.0),
        ] {
            let s = inverse_cdf_sampler(&rho, theta, 0.0).unwrap();
            assert!(!s.truncated());
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let mut xs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
            let d_ks = ks_statistic(&mut xs, &rho, theta);
            assert!(d_ks < ks_critical(n), "{d_ks}");
        }
    }

    #[test]
    fn sampler_cdf_matches_integrated_pdf() {
        let d = dim(30);
        let rho = css_state(C64::new(1.3, 0.0), Parity::Odd, d).unwrap().to_density();
        let s = inverse_cdf_sampler(&rho, 0.4, 0.15).unwrap();
        let lossy = LossChannel::new(0.15).unwrap().apply(&rho);
        let mut acc = 0.0;
        let (lo, n) = (-9.0, 9000usize);
        let h = 18.0 / n as f64;
        for i in 0..n {
            let a = lo + i as f64 * h;
            acc += (quad_pdf(&lossy, 0.4, a) + 4.0 * quad_pdf(&lossy, 0.4, a + h / 2.0) + quad_pdf(&lossy, 0.4, a + h)) * h / 6.0;
            if i % 500 == 499 {
                assert!((s.cdf(a + h) - acc).abs() < 1e-6, "{} vs {acc}", s.cdf(a + h));
            }
        }
        // quantile inverts the cdf
        for u in [0.001, 0.2, 0.5, 0.77, 0.999] {
            assert!((s.cdf(s.quantile(u)) - u).abs() < 1e-9);
        }
    }

    #[test]
    fn harmonic_table_matches_direct_pdf() {
        let d = dim(30);
        let rho = squeezed_vacuum(0.5, d).unwrap().to_density().mix(&fock_state(3, d).unwrap().to_density(), 0.4).unwrap();
        let sigma = LossChannel::new(0.2).unwrap().apply(&rho);
        let table = HarmonicTable::build(sigma.matrix(), table_half_width(30), 200);
        let mut row = Vec::new();
        table.pdf_row(1.1, &mut row);
        for (i, v) in row.iter().enumerate() {
            let x = table.x0 + i as f64 * table.h;
            assert!((v - quad_pdf(&sigma, 1.1, x)).abs() < 1e-12);
        }
    }

    #[test]
    fn vacuum_variance() {
        let vac = fock_state(0, dim(10)).unwrap().to_density();
        let ds = sample_quadratures(&vac, 0.0, &PhaseSchedule::uniform(16), 200_000, 1, "vac").unwrap();
        let n = ds.len() as f64;
        let mean = ds.records.iter().map(|r| r.x).sum::<f64>() / n;
        let var = ds.records.iter().map(|r| (r.x - mean).powi(2)).sum::<f64>() / n;
        assert!((var - 0.5).abs() < 0.005, "{var}");
    }

    #[test]
    fn squeezed_variance_at_fixed_phase() {
        let r = 0.7828f64;
        let rho = squeezed_vacuum(r, dim(30)).unwrap().to_density();
        let sched = PhaseSchedule::sawtooth(1, 1);
        let ds = sample_quadratures(&rho, 0.0, &sched, 100_000, 9, "sq").unwrap();
        assert!(ds.records.iter().all(|q| q.theta == 0.0));
        let var = ds.records.iter().map(|q| q.x * q.x).sum::<f64>() / ds.len() as f64;
        let expected = 0.5 * (-2.0 * r).exp();
        assert!((var / expected - 1.0).abs() < 0.02, "{var} vs {expected}");
    }

    #[test]
    fn lossy_variance_mixes_vacuum_noise() {
        let d = dim(30);
        let rho = squeezed_vacuum(0.6, d).unwrap().to_density();
        let gamma = 0.15;
        let sched = PhaseSchedule::sawtooth(4, 1);
        let ds = sample_quadratures(&rho, gamma, &sched, 200_000, 3, "sq").unwrap();
        let a2 = rho.second_moment_a2();
        let nbar = rho.mean_photon();
        for level in 0..4 {
            let theta = canonical(PI * level as f64 / 4.0);
            let xs: Vec<f64> = ds.records.iter().filter(|q| q.theta == theta).map(|q| q.x).collect();
            let m = xs.len() as f64;
            let var = xs.iter().map(|x| x * x).sum::<f64>() / m;
            let v_theta = (a2 * C64::from_polar(1.0, -2.0 * theta)).re + nbar + 0.5;
            let expected = (1.0 - gamma) * v_theta + gamma * 0.5;
            // Gaussian: sd of the sample variance is √(2/m) V
            assert!((var - expected).abs() < 4.0 * (2.0 / m).sqrt() * expected, "θ={theta}: {var} vs {expected}");
        }
    }

    #[test]
    fn sawtooth_coverage_is_flat() {
        let sched = PhaseSchedule::sawtooth(10, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let n = 10_000;
        let phases = sched.phases(n, &mut rng);
        assert!(phases.iter().all(|t| (0.0..PI).contains(t)));
        let mut counts = [0usize; 10];
        for t in &phases {
            counts[((t / PI) * 10.0).round() as usize] += 1;
        }
        let expect = n as f64 / 10.0;
        let sigma = (expect * 0.9).sqrt();
        for c in counts {
            assert!((c as f64 - expect).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn uniform_phases_cover_full_circle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phases = PhaseSchedule::uniform(8).phases(4000, &mut rng);
        assert!(phases.iter().all(|t| (0.0..2.0 * PI).contains(t)));
        assert!(phases.iter().any(|t| *t > PI));
    }

    #[test]
    fn deterministic_bytes_and_round_trip() {
        let rho = css_state(C64::new(1.1, 0.0), Parity::Even, dim(20)).unwrap().to_density();
        let sched = PhaseSchedule::default();
        let a = sample_quadratures(&rho, 0.15, &sched, 5000, 77, "cat, even").unwrap();
        let b = sample_quadratures(&rho, 0.15, &sched, 5000, 77, "cat, even").unwrap();
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        a.write_to(&mut ba).unwrap();
        b.write_to(&mut bb).unwrap();
        assert_eq!(ba, bb);
        let back = QuadratureDataset::read_from(&ba[..]).unwrap();
        assert_eq!(back, a);
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(again, ba);

        let c = sample_quadratures(&rho, 0.15, &sched, 5000, 78, "cat, even").unwrap();
        assert_ne!(c.records, a.records);
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(QuadratureDataset::read_from(&b""[..]).is_err());
        let text = format!("{DATASET_MAGIC} v1 gamma_h=0.1 seed=1 count=2 label=x\n0,1\n");
        assert!(matches!(QuadratureDataset::read_from(text.as_bytes()), Err(Error::Parse { .. })));
        let text = format!("{DATASET_MAGIC} v1 gamma_h=0.1 seed=1 count=1 label=x\n0;1\n");
        assert!(QuadratureDataset::read_from(text.as_bytes()).is_err());
        let text = format!("{DATASET_MAGIC} v1 gamma_h=1.5 seed=1 count=1 label=x\n0,1\n");
        assert!(QuadratureDataset::read_from(text.as_bytes()).is_err());
    }

    #[test]
    fn invalid_inputs() {
        let vac = fock_state(0, dim(4)).unwrap().to_density();
        assert!(sample_quadratures(&vac, 0.0, &PhaseSchedule::default(), 0, 1, "x").is_err());
        assert!(sample_quadratures(&vac, 1.0, &PhaseSchedule::default(), 10, 1, "x").is_err());
        assert!(sample_quadratures(&vac, 0.0, &PhaseSchedule::uniform(0), 10, 1, "x").is_err());
    }
}
