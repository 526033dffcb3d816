//! Phase-space views of a state: Wigner function, homodyne quadrature
//! distributions, and cat-state analytics.

mod css;
mod quadrature;
mod wigner;

pub use css::{distinguishability_p0, max_coherent_fidelity, nearest_css, CssFit};
pub use quadrature::{gauss_hermite, hermite_functions, hermite_functions_into, quad_pdf};
pub use wigner::{
    displacement_matrix, wigner, wigner_grid, wigner_min, wigner_origin_parity, PhaseSpaceGrid, WignerGrid,
    WignerMin,
};

