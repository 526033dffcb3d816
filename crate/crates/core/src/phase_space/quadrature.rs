use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::Result;
use crate::fock::{DensityMatrix, C64};

/// Oscillator eigenfunctions ψ_n(x) = H_n(x) e^{−x²/2} / √(2ⁿ n! √π), n < out.len().
pub fn hermite_functions_into(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    if out.len() > 1 {
        out[1] = std::f64::consts::SQRT_2 * x * out[0];
    }
    for n in 1..out.len().saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
    }
}

pub fn hermite_functions(x: f64, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    hermite_functions_into(x, &mut v);
    v
}

/// pr(x|θ) = ⟨x_θ|ρ|x_θ⟩ with ⟨n|x_θ⟩ = e^{inθ} ψ_n(x).
pub fn quad_pdf(rho: &DensityMatrix, theta: f64, x: f64) -> f64 {
    let dim = rho.dim().get();
    let psi = hermite_functions(x, dim);
    let u: Vec<C64> = psi
        .iter()
        .enumerate()
        .map(|(n, v)| C64::from_polar(*v, n as f64 * theta))
        .collect();
    pdf_with_vector(rho.matrix(), &u)
}

/// u† M u for a Hermitian M.
pub(crate) fn pdf_with_vector(m: &DMatrix<C64>, u: &[C64]) -> f64 {
    let n = u.len();
    let mut acc = 0.0;
    for i in 0..n {
        acc += m[(i, i)].re * u[i].norm_sqr();
        let mut row = C64::new(0.0, 0.0);
        for j in i + 1..n {
            row += m[(i, j)] * u[j];
        }
        acc += 2.0 * (u[i].conj() * row).re;
    }
    acc.max(0.0)
}

/// Gauss–Hermite nodes and weights for ∫ e^{−x²} f(x) dx (Golub–Welsch).
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(crate::Error::param("n", 0.0, "need at least one node"));
    }
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));
    // Newton polish on ψ_n, then weights from the Christoffel formula: the
    // eigenvector route loses relative accuracy on the outermost weights.
    let mut psi = vec![0.0; n + 1];
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            hermite_functions_into(*x, &mut psi);
            let deriv = (2.0 * n as f64).sqrt() * psi[n - 1] - *x * psi[n];
            *x -= psi[n] / deriv;
        }
        hermite_functions_into(*x, &mut psi);
        weights.push((-*x * *x).exp() / (n as f64 * psi[n - 1] * psi[n - 1]));
    }
    Ok((nodes, weights))
}
