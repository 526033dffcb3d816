use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use cattomo_core::pipeline::{
    self, bootstrap_seed, check_artifacts, load_state, save_state, ForwardState, BOOTSTRAP_FILE, REPORT_FILE,
    STATE_FILE, TRUE_STATE_FILE, WIGNER_FILE,
};
use cattomo_core::{
    bootstrap, export_wigner_grid, forward_model, mle_reconstruct, preset, reproduce_table1, run_pipeline,
    sample_quadratures, DensityMatrix, ExperimentConfig, FockDim, MleConfig, QuadratureDataset, StateMetrics,
};
use clap::{Args, Parser, Subcommand};

/// Heralded cat-state simulation, homodyne tomography and bootstrap analysis.
#[derive(Parser)]
#[command(name = "cattomo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Source {
    /// Experiment configuration (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in experiment: one-photon-apd, two-photon-apd, two-photon-tes,
    /// three-photon-tes or vacuum.
    #[arg(long)]
    preset: Option<String>,
    /// Override the run seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the Fock truncation used everywhere.
    #[arg(long)]
    dim: Option<usize>,
}

impl Source {
    fn given(&self) -> bool {
        self.config.is_some() || self.preset.is_some()
    }

    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => {
                ExperimentConfig::load(path).with_context(|| format!("reading config {}", path.display()))?
            }
            (None, Some(name)) => preset(name)?,
            (None, None) => bail!("one of --config or --preset is required"),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(d) = self.dim {
            cfg.mle.dim = FockDim::new(d)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute the model state entering the homodyne detector.
    Forward {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the homodyne dataset of a configuration.
    Sample {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: PathBuf,
    },
    /// Maximum-likelihood reconstruction of a dataset.
    Reconstruct {
        /// Quadrature dataset file.
        #[arg(long)]
        data: PathBuf,
        /// Optional; without it the dataset's detection loss and default numerics are used.
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: PathBuf,
    },
    /// Figures of merit and the Wigner grid of a stored state.
    Analyze {
        #[arg(long)]
        state: PathBuf,
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parametric bootstrap around a stored estimate.
    Bootstrap {
        #[arg(long)]
        state: PathBuf,
        /// Dataset whose size and phase sequence every resample reuses.
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        resamples: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Forward model, sampling, reconstruction, analysis and bootstrap.
    Pipeline {
        #[command(flatten)]
        source: Source,
        /// Override the bootstrap count (0 disables it).
        #[arg(long)]
        resamples: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every published preset and compare with the published table.
    Table1 {
        #[arg(long)]
        resamples: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
        /// Write the comparison as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in &failures {
                eprintln!("check failed: {f}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn print_metrics(m: &StateMetrics) {
    println!("W_min    {:.4} at (q, p) = ({:.3}, {:.3})", m.w_min, m.w_min_q, m.w_min_p);
    println!("<n>      {:.4}", m.mean_photon);
    println!("purity   {:.4}", m.purity);
    println!(
        "CSS      F = {:.4}, |alpha| = {:.4}, {:?}{}",
        m.css.fidelity,
        m.css.alpha.norm(),
        m.css.parity,
        if m.css.degenerate { " (degenerate)" } else { "" }
    );
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> anyhow::Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

fn state_checks(rho: &DensityMatrix) -> Vec<String> {
    match rho.validate() {
        Ok(()) => Vec::new(),
        Err(e) => vec![format!("state is not a density matrix: {e}")],
    }
}

fn run(cli: Cli) -> anyhow::Result<Vec<String>> {
    match cli.command {
        Command::Forward { source, out } => {
            let cfg = source.resolve()?;
            let ForwardState {
                state,
                herald_probability,
            } = forward_model(&cfg)?;
            println!("{}: herald probability {herald_probability:.4e}", cfg.label);
            println!("<n> {:.4}, purity {:.4}, discarded tail {:.2e}", state.mean_photon(), state.purity(), state.tail_weight());
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                save_state(&state, dir.join(TRUE_STATE_FILE))?;
            }
            Ok(state_checks(&state))
        }
        Command::Sample { source, out } => {
            let cfg = source.resolve()?;
            let forward = forward_model(&cfg)?;
            let data = sample_quadratures(
                &forward.state,
                cfg.gamma_h,
                &cfg.schedule,
                cfg.n_samples,
                cfg.seed,
                &cfg.label,
            )?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join(pipeline::CONFIG_FILE), cfg.to_toml())?;
            data.save(out.join(pipeline::DATASET_FILE))?;
            save_state(&forward.state, out.join(TRUE_STATE_FILE))?;
            println!("{}: {} samples written to {}", cfg.label, data.len(), out.display());
            Ok(Vec::new())
        }
        Command::Reconstruct { data, source, out } => {
            let dataset = QuadratureDataset::load(&data).with_context(|| format!("reading {}", data.display()))?;
            let mle = if source.given() {
                source.resolve()?.mle
            } else {
                let dim = source.dim.map(FockDim::new).transpose()?.unwrap_or_default();
                MleConfig::new(dim, dataset.gamma_h)
            };
            let fit = mle_reconstruct(&dataset, &mle)?;
            let d = &fit.diagnostics;
            println!(
                "{} iterations ({:?}), log-likelihood per sample {:.6}, {} floored samples",
                d.iterations, d.termination, d.loglikelihood_per_sample, d.floored_samples
            );
            std::fs::create_dir_all(&out)?;
            save_state(&fit.state, out.join(STATE_FILE))?;
            write_json(&out.join("diagnostics.json"), d)?;
            Ok(state_checks(&fit.state))
        }
        Command::Analyze { state, source, out } => {
            let rho = load_state(&state).with_context(|| format!("reading {}", state.display()))?;
            let grid = if source.given() { source.resolve()?.grid } else { Default::default() };
            let metrics = StateMetrics::of(&rho, &grid)?;
            print_metrics(&metrics);
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                write_json(&dir.join("metrics.json"), &metrics)?;
                export_wigner_grid(&rho, &grid, dir.join(WIGNER_FILE))?;
            }
            Ok(state_checks(&rho))
        }
        Command::Bootstrap {
            state,
            data,
            source,
            resamples,
            out,
        } => {
            let rho = load_state(&state).with_context(|| format!("reading {}", state.display()))?;
            let dataset = QuadratureDataset::load(&data).with_context(|| format!("reading {}", data.display()))?;
            let (mle, grid, seed, n) = if source.given() {
                let cfg = source.resolve()?;
                (cfg.mle, cfg.grid, cfg.seed, cfg.bootstrap_n)
            } else {
                (
                    MleConfig::new(rho.dim(), dataset.gamma_h),
                    Default::default(),
                    source.seed.unwrap_or(dataset.seed),
                    100,
                )
            };
            let n = resamples.unwrap_or(n).max(2);
            let report = bootstrap(&rho, &dataset, n, &mle, bootstrap_seed(seed), &grid)?;
            println!(
                "{} resamples ({} not converged)\nF       {:.4} [{:.4}, {:.4}]\n|alpha| {:.4} [{:.4}, {:.4}]",
                report.resamples,
                report.non_converged,
                report.fidelity.point,
                report.fidelity.lower,
                report.fidelity.upper,
                report.alpha.point,
                report.alpha.lower,
                report.alpha.upper
            );
            std::fs::create_dir_all(&out)?;
            write_json(&out.join(BOOTSTRAP_FILE), &report)?;
            Ok(Vec::new())
        }
        Command::Pipeline { source, resamples, out } => {
            let mut cfg = source.resolve()?;
            if let Some(n) = resamples {
                cfg.bootstrap_n = n;
            }
            let result = run_pipeline(&cfg, Some(&out))?;
            println!("{}: {} samples, digest {}", cfg.label, result.report.n_samples, result.report.digest);
            print_metrics(&result.report.metrics);
            println!("fidelity to the simulated state {:.4}", result.report.truth_fidelity);
            if let Some(b) = &result.bootstrap {
                println!(
                    "bootstrap ({} resamples): F [{:.4}, {:.4}], |alpha| [{:.4}, {:.4}]",
                    b.resamples, b.fidelity.lower, b.fidelity.upper, b.alpha.lower, b.alpha.upper
                );
            }
            println!("artifacts in {} ({REPORT_FILE}, {STATE_FILE}, ...)", out.display());
            let mut failures = check_artifacts(&out)?;
            failures.extend(state_checks(&result.estimate));
            Ok(failures)
        }
        Command::Table1 { resamples, dim, out } => {
            let dim = dim.map(FockDim::new).transpose()?;
            let rows = reproduce_table1(resamples, dim)?;
            for r in &rows {
                println!("{r}");
            }
            if let Some(path) = out {
                write_json(&path, &rows)?;
            }
            Ok(rows.iter().filter(|r| !r.pass).map(|r| format!("{} {}", r.row, r.column)).collect())
        }
    }
}
