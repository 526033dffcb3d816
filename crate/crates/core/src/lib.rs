//! Simulation and reconstruction of heralded coherent-state superpositions.
//!
//! The crate models photon-number-resolved subtraction from lossy squeezed
//! vacuum in a truncated Fock basis, generates synthetic lossy homodyne data,
//! reconstructs density matrices by maximum likelihood, and quantifies
//! uncertainty with a parametric bootstrap.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fock;
pub mod homodyne;
pub mod optics;
pub mod phase_space;
pub mod pipeline;
pub mod tomo;

pub use error::{Error, Result};
pub use fock::{
    coherent_state, css_state, fidelity, fock_state, mean_photon, purity, squeezed_vacuum, DensityMatrix, FockDim,
    FockOperator, Parity, PureState, SqueezeParams, C64,
};
pub use homodyne::{
    inverse_cdf_sampler, sample_quadratures, InverseCdfSampler, PhaseSchedule, Quadrature, QuadratureDataset, ScheduleKind,
};
pub use optics::{
    apply_loss, db_to_r, detector_povm, herald_subtract, modal_mixture, prepare_squeezed, subtraction_kraus,
    DetectorModel, HeraldConfig, LossChannel, Outcome,
};
pub use phase_space::{
    distinguishability_p0, max_coherent_fidelity, nearest_css, quad_pdf, wigner, wigner_grid, wigner_min, CssFit,
    PhaseSpaceGrid, WignerGrid, WignerMin,
};
pub use tomo::{
    bootstrap, loglikelihood, mle_reconstruct, povm_element, Band, BootstrapReport, LogLikelihood, MleConfig,
    MleDiagnostics, MleResult, StateMetrics, Termination,
};
pub use pipeline::{
    check_artifacts, export_wigner_grid, forward_model, preset, reproduce_table1, run_pipeline, Comparison, ExperimentConfig, ForwardState,
    PipelineOutput, ReconstructionReport,
};
