//! Independent checks for the spectral route: the concentric closed form and a
//! finite-difference Steklov solver for the reduced axisymmetric problem.
//!
//! The FD solver discretizes A_ξξ + sin⁻ⁿθ·∂_θ(sinⁿθ·A_θ) − (n²/4)·A = 0 on a
//! uniform (ξ, θ) grid over [ξ₂, ξ₁] × [0, π], with A = 0 at ξ₁ and, at ξ₂,
//! the Steklov condition rewritten for A = u·(cosh ξ − cos θ)^{−n/2}:
//!
//! ```text
//! (cosh ξ₂ − cos θ)·A_ξ + (n/2)·sinh ξ₂·A + σα·A = 0.
//! ```
//!
//! Because the interior operator separates (it is D_ξξ ⊗ I + I ⊗ T_θ), the
//! interior unknowns are eliminated mode by mode after diagonalizing T_θ,
//! leaving a dense (N_θ+1)-sized eigenproblem on the ξ₂ boundary row.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geometry::AnnulusGeometry;

/// First Steklov–Dirichlet eigenvalue of the concentric annulus in ℝⁿ⁺²,
/// from the radial mode u = r^{−n} − r₁^{−n}.
pub fn concentric_sigma(n: usize, r1: f64, r2: f64) -> f64 {
    let nf = n as f64;
    nf / (r2 * ((r2 / r1).powf(nf) - 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdSolution {
    pub sigma_fd: f64,
    /// A₀ on the mesh; row i is ξ = ξ₂ + i·h_xi, column j is θ = j·h_theta.
    pub grid: DMatrix<f64>,
    pub n_xi: usize,
    pub n_theta: usize,
    pub h_xi: f64,
    pub h_theta: f64,
    /// Richardson value (4σ(h/2) − σ(h))/3 when a coarse companion solve ran.
    pub sigma_extrapolated: Option<f64>,
    /// Residual of the reduced boundary eigenproblem.
    pub boundary_residual: f64,
}

impl FdSolution {
    /// Boundary eigenvector (the ξ₂ row).
    pub fn boundary(&self) -> Vec<f64> {
        self.grid.row(0).iter().copied().collect()
    }

    pub fn best_sigma(&self) -> f64 {
        self.sigma_extrapolated.unwrap_or(self.sigma_fd)
    }
}

/// Tridiagonal θ operator (flux form with pole rows) minus n²/4, stored as
/// (sub, diag, sup) with sub[j] = T[j+1][j] and sup[j] = T[j][j+1].
fn theta_operator(n: usize, n_theta: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let nf = n as f64;
    let h = PI / n_theta as f64;
    let h2 = h * h;
    let mut sub = vec![0.0; n_theta];
    let mut sup = vec![0.0; n_theta];
    let mut diag = vec![0.0; n_theta + 1];
    // pole rows: cot θ·A_θ -> A_θθ, so (n+1)·A_θθ with the mirror ghost node
    let pole = 2.0 * (nf + 1.0) / h2;
    diag[0] = -pole;
    sup[0] = pole;
    diag[n_theta] = -pole;
    sub[n_theta - 1] = pole;
    for j in 1..n_theta {
        let th = j as f64 * h;
        let w = th.sin().powf(nf);
        let wp = (th + 0.5 * h).sin().powf(nf);
        let wm = (th - 0.5 * h).sin().powf(nf);
        sub[j - 1] = wm / (w * h2);
        sup[j] = wp / (w * h2);
        diag[j] = -(wp + wm) / (w * h2);
    }
    let shift = nf * nf / 4.0;
    diag.iter_mut().for_each(|d| *d -= shift);
    (sub, diag, sup)
}

/// Discrete ξ-profile g_i (i = 0..=N) of one θ-mode: g₀ = 1, g_N = 0 and
/// (g_{i−1} − 2g_i + g_{i+1})/h² + λ·g_i = 0, solved in closed form.
fn mode_profile(lambda: f64, h: f64, n_xi: usize) -> Result<Vec<f64>> {
    let ch = 1.0 - 0.5 * lambda * h * h;
    if !(ch > 1.0) {
        return Err(Error::SingularSchur);
    }
    let mu = ch.acosh();
    let total = mu * n_xi as f64;
    let denom = -(-2.0 * total).exp_m1();
    if !(denom > 1e-14) {
        return Err(Error::SingularSchur);
    }
    Ok((0..=n_xi)
        .map(|i| {
            let rest = mu * (n_xi - i) as f64;
            (-mu * i as f64).exp() * -(-2.0 * rest).exp_m1() / denom
        })
        .collect())
}

/// FD Steklov eigenvalue on an (n_xi × n_theta)-interval grid.
pub fn fd_sigma(g: &AnnulusGeometry, n_xi: usize, n_theta: usize) -> Result<FdSolution> {
    if n_xi < 32 || n_theta < 32 {
        return Err(Error::InvalidConfig(format!(
            "FD grid {n_xi}x{n_theta} below the 32x32 minimum"
        )));
    }
    let nb = n_theta + 1;
    let h_xi = (g.xi1 - g.xi2) / n_xi as f64;
    let h_theta = PI / n_theta as f64;

    // symmetrize T_θ = D⁻¹·S·D and diagonalize S
    let (sub, diag, sup) = theta_operator(g.n, n_theta);
    let mut scale = vec![1.0; nb];
    for j in 0..n_theta {
        scale[j + 1] = scale[j] * (sup[j] / sub[j]).sqrt();
    }
    let mut s = DMatrix::<f64>::zeros(nb, nb);
    for j in 0..nb {
        s[(j, j)] = diag[j];
        if j < n_theta {
            let off = (sup[j] * sub[j]).sqrt();
            s[(j, j + 1)] = off;
            s[(j + 1, j)] = off;
        }
    }
    let eig = SymmetricEigen::new(s);
    let w = eig.eigenvectors;
    // V = D⁻¹W and V⁻¹ = WᵀD
    let v = DMatrix::from_fn(nb, nb, |r, c| w[(r, c)] / scale[r]);
    let v_inv = DMatrix::from_fn(nb, nb, |r, c| w[(c, r)] * scale[c]);

    let profiles = eig
        .eigenvalues
        .iter()
        .map(|&lam| mode_profile(lam, h_xi, n_xi))
        .collect::<Result<Vec<_>>>()?;

    // −A_ξ at ξ₂ by the one-sided second-order stencil, mode by mode
    let dtn_modes = DVector::from_iterator(
        nb,
        profiles
            .iter()
            .map(|p| -(-3.0 + 4.0 * p[1] - p[2]) / (2.0 * h_xi)),
    );
    let neg_dxi = &v * DMatrix::from_diagonal(&dtn_modes) * &v_inv;
    let half_n_sinh = 0.5 * g.n as f64 * g.xi2.sinh();
    let mut q = DMatrix::<f64>::zeros(nb, nb);
    for r in 0..nb {
        let c = g.xi2.cosh() - (r as f64 * h_theta).cos();
        for col in 0..nb {
            q[(r, col)] = c * neg_dxi[(r, col)];
        }
        q[(r, r)] -= half_n_sinh;
    }

    let (eigval, boundary, residual) = smallest_eigenpair_dense(&q)?;
    let sigma_fd = eigval / g.alpha;
    if !(sigma_fd > 0.0) {
        return Err(Error::NotConverged(format!(
            "FD eigenvalue {sigma_fd} is not positive"
        )));
    }

    // interior reconstruction A_i = V·diag(g_i)·V⁻¹·A_b
    let modal = &v_inv * &boundary;
    let mut grid = DMatrix::<f64>::zeros(n_xi + 1, nb);
    for i in 0..=n_xi {
        let coeffs = DVector::from_iterator(nb, (0..nb).map(|k| profiles[k][i] * modal[k]));
        let row = &v * coeffs;
        for j in 0..nb {
            grid[(i, j)] = if i == n_xi { 0.0 } else { row[j] };
        }
    }

    Ok(FdSolution {
        sigma_fd,
        grid,
        n_xi,
        n_theta,
        h_xi,
        h_theta,
        sigma_extrapolated: None,
        boundary_residual: residual,
    })
}

/// FD solve at (n_xi, n_theta) and (2n_xi, 2n_theta); returns the fine
/// solution carrying the Richardson-extrapolated eigenvalue.
pub fn fd_sigma_extrapolated(
    g: &AnnulusGeometry,
    n_xi: usize,
    n_theta: usize,
) -> Result<FdSolution> {
    let coarse = fd_sigma(g, n_xi, n_theta)?;
    let mut fine = fd_sigma(g, 2 * n_xi, 2 * n_theta)?;
    fine.sigma_extrapolated = Some((4.0 * fine.sigma_fd - coarse.sigma_fd) / 3.0);
    Ok(fine)
}

/// Smallest-magnitude eigenpair of a dense matrix by inverse iteration with a
/// Rayleigh-quotient shift; returns (eigenvalue, vector with positive sum,
/// relative residual).
fn smallest_eigenpair_dense(q: &DMatrix<f64>) -> Result<(f64, DVector<f64>, f64)> {
    let nb = q.nrows();
    let qnorm = q.abs().row_sum().max();
    let target = 1e-12;
    let lu0 = q.clone().lu();
    let mut x = DVector::from_element(nb, 1.0 / (nb as f64).sqrt());
    let mut shift = 0.0;
    let mut residual = f64::INFINITY;
    let rayleigh = |x: &DVector<f64>| (x.dot(&(q * x))) / x.dot(x);
    for _ in 0..500 {
        x = lu0
            .solve(&x)
            .ok_or(Error::NotConverged("boundary operator is singular".into()))?;
        x /= x.norm();
        shift = rayleigh(&x);
        residual = (q * &x - &x * shift).norm() / qnorm;
        if residual < 1e-9 {
            break;
        }
    }
    // Rayleigh-shifted refinement
    for _ in 0..10 {
        if residual <= target {
            break;
        }
        let shifted = q - DMatrix::<f64>::identity(nb, nb) * shift;
        let Some(y) = shifted.lu().solve(&x) else {
            break;
        };
        let ny = y.norm();
        if !ny.is_finite() || ny == 0.0 {
            break;
        }
        x = y / ny;
        shift = rayleigh(&x);
        residual = (q * &x - &x * shift).norm() / qnorm;
    }
    if residual > target {
        return Err(Error::NotConverged(format!(
            "boundary eigenproblem residual {residual:e} above {target:e}"
        )));
    }
    if x.sum() < 0.0 {
        x = -x;
    }
    Ok((shift, x, residual))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub spectral_sigma: f64,
    pub fd_sigma: f64,
    pub fd_extrapolated: Option<f64>,
    pub relative_difference: f64,
    pub n_xi: usize,
    pub n_theta: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Relative spectral/FD discrepancy against the extrapolated FD value when
/// available.
pub fn compare(spectral_sigma: f64, fd: &FdSolution, tolerance: f64) -> ComparisonReport {
    let reference = fd.best_sigma();
    let relative_difference = (spectral_sigma - reference).abs() / reference.abs();
    ComparisonReport {
        spectral_sigma,
        fd_sigma: fd.sigma_fd,
        fd_extrapolated: fd.sigma_extrapolated,
        relative_difference,
        n_xi: fd.n_xi,
        n_theta: fd.n_theta,
        tolerance,
        pass: relative_difference <= tolerance,
    }
}
