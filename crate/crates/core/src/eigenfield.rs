//! Eigenfunction reconstruction from the boundary coefficients.
//!
//! With k = m + n/2 and Δ = ξ₁ − ξ₂ the field is
//!
//! ```text
//! u(ξ, θ) = ν·(cosh ξ − cos θ)^{n/2} Σ C̃_m·E_m(ξ)·G_m^{(n/2)}(cos θ),
//! E_m(ξ)  = e^{−k(ξ−ξ₂)}·(1 − e^{−2k(ξ₁−ξ)}) / (1 − e^{−2kΔ}),
//! ```
//!
//! which equals the raw two-exponential series but never overflows. E_m(ξ₂) = 1
//! and E_m(ξ₁) = 0 exactly.

use std::f64::consts::PI;

use libm::lgamma;

use crate::error::{Error, Result};
use crate::geometry::{AnnulusGeometry, BisphericalPoint};
use crate::quadrature::GaussLegendre;
use crate::spectral::SpectralSolution;

const QUADRATURE_START: usize = 64;
const QUADRATURE_MAX: usize = 1 << 16;
const QUADRATURE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenField {
    pub geometry: AnnulusGeometry,
    pub solution: SpectralSolution,
    pub normalization: f64,
}

/// Surface measure of the unit n-sphere, 2π^{(n+1)/2} / Γ((n+1)/2).
pub fn sphere_measure(n: usize) -> f64 {
    let h = (n as f64 + 1.0) / 2.0;
    2.0 * (h * PI.ln() - lgamma(h)).exp()
}

impl EigenField {
    /// Unnormalized field (ν = 1).
    pub fn new(geometry: AnnulusGeometry, solution: SpectralSolution) -> Self {
        Self {
            geometry,
            solution,
            normalization: 1.0,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.solution.sigma
    }

    fn half_n(&self) -> f64 {
        self.geometry.n as f64 / 2.0
    }

    /// ν·Σ C̃_m E_m(ξ) G_m(cos θ), the reduced field A₀; no range check.
    pub fn reduced(&self, xi: f64, theta: f64) -> f64 {
        let g = &self.geometry;
        let lambda = self.half_n();
        let s = theta.cos();
        let gap = g.xi1 - g.xi2;
        let (mut g_prev, mut g_cur) = (0.0, 1.0);
        let mut acc = 0.0;
        for (m, ct) in self.solution.c_tilde.iter().enumerate() {
            let k = m as f64 + lambda;
            let e = (-k * (xi - g.xi2)).exp() * (-2.0 * k * (g.xi1 - xi)).exp_m1()
                / (-2.0 * k * gap).exp_m1();
            acc += ct * e * g_cur;
            // advance G_m -> G_{m+1}
            let mf = (m + 1) as f64;
            let next = if m == 0 {
                2.0 * lambda * s
            } else {
                (2.0 * (mf + lambda - 1.0) * s * g_cur - (mf + 2.0 * lambda - 2.0) * g_prev) / mf
            };
            g_prev = g_cur;
            g_cur = next;
        }
        self.normalization * acc
    }

    /// u(ξ, θ) for ξ ∈ [ξ₂, ξ₁].
    pub fn value(&self, xi: f64, theta: f64) -> Result<f64> {
        let g = &self.geometry;
        if !(g.xi2..=g.xi1).contains(&xi) {
            return Err(Error::OutsideAnnulus {
                xi,
                xi2: g.xi2,
                xi1: g.xi1,
            });
        }
        Ok(self.modulation(xi, theta) * self.reduced(xi, theta))
    }

    /// u at a bispherical point; the φ angles do not enter.
    pub fn evaluate(&self, p: &BisphericalPoint) -> Result<f64> {
        self.value(p.xi, p.theta)
    }

    fn modulation(&self, xi: f64, theta: f64) -> f64 {
        (xi.cosh() - theta.cos()).powf(self.half_n())
    }

    /// Outward normal derivative on ∂B₂, −(1/h)·∂u/∂ξ at ξ = ξ₂, by
    /// term-by-term differentiation of the series.
    pub fn normal_derivative_outer(&self, theta: f64) -> f64 {
        let g = &self.geometry;
        let lambda = self.half_n();
        let s = theta.cos();
        let c = g.xi2.cosh() - s;
        let sh = g.xi2.sinh();
        let (mut g_prev, mut g_cur) = (0.0, 1.0);
        let mut acc = 0.0;
        for (m, (ct, csq)) in self
            .solution
            .c_tilde
            .iter()
            .zip(&self.solution.c_sq)
            .enumerate()
        {
            let k = m as f64 + lambda;
            acc += (lambda * sh - c * k * csq) * ct * g_cur;
            let mf = (m + 1) as f64;
            let next = if m == 0 {
                2.0 * lambda * s
            } else {
                (2.0 * (mf + lambda - 1.0) * s * g_cur - (mf + 2.0 * lambda - 2.0) * g_prev) / mf
            };
            g_prev = g_cur;
            g_cur = next;
        }
        -self.normalization * c.powf(lambda) / g.alpha * acc
    }

    /// ∫_{∂B₂} u² dS by Gauss–Legendre in θ, doubling the node count until two
    /// successive values agree to 1e−8.
    pub fn surface_integral(&self) -> Result<f64> {
        let g = &self.geometry;
        let n = g.n as i32;
        let prefactor = sphere_measure(g.n) * g.alpha.powi(n + 1);
        let integrand = |theta: f64| {
            let c = g.xi2.cosh() - theta.cos();
            let u = c.powf(self.half_n()) * self.reduced(g.xi2, theta);
            u * u * theta.sin().powi(n) / c.powi(n + 1)
        };
        let mut nodes = QUADRATURE_START;
        let mut prev = prefactor * GaussLegendre::new(nodes).integrate(0.0, PI, integrand);
        while nodes < QUADRATURE_MAX {
            nodes *= 2;
            let cur = prefactor * GaussLegendre::new(nodes).integrate(0.0, PI, integrand);
            if (cur - prev).abs() <= QUADRATURE_TOL * cur.abs() {
                return Ok(cur);
            }
            prev = cur;
        }
        let last = prefactor * GaussLegendre::new(nodes).integrate(0.0, PI, integrand);
        Err(Error::QuadratureFail(prev, last))
    }

    /// Copy scaled so that ∫_{∂B₂} u² dS = 1.
    pub fn normalize(&self) -> Result<EigenField> {
        let integral = self.surface_integral()?;
        let mut out = self.clone();
        out.normalization = self.normalization / integral.sqrt();
        Ok(out)
    }

    /// Max of |u(ξ₁, θ)| on a θ-grid relative to the max interior |u|.
    pub fn dirichlet_residual(&self, n_theta: usize) -> f64 {
        let g = &self.geometry;
        let on_inner = theta_grid(n_theta)
            .map(|th| (self.modulation(g.xi1, th) * self.reduced(g.xi1, th)).abs())
            .fold(0.0, f64::max);
        let (lo, hi) = self.interior_extrema(n_theta, n_theta);
        on_inner / lo.abs().max(hi.abs())
    }

    /// max_θ |∂u/∂n − σu| on ∂B₂ relative to σ·max|u|.
    pub fn steklov_residual(&self, n_theta: usize) -> f64 {
        let g = &self.geometry;
        let sigma = self.sigma();
        let mut worst: f64 = 0.0;
        let mut umax: f64 = 0.0;
        for th in theta_grid(n_theta) {
            let u = self.modulation(g.xi2, th) * self.reduced(g.xi2, th);
            let du = self.normal_derivative_outer(th);
            worst = worst.max((du - sigma * u).abs());
            umax = umax.max(u.abs());
        }
        worst / (sigma * umax)
    }

    /// (min, max) of u on the closed (ξ, θ) grid with the given intervals.
    pub fn interior_extrema(&self, n_xi: usize, n_theta: usize) -> (f64, f64) {
        self.sample_grid(n_xi, n_theta)
            .iter()
            .filter(|(xi, _, _)| *xi < self.geometry.xi1)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.2), hi.max(s.2))
            })
    }

    /// (ξ, θ, u) samples on a uniform grid over [ξ₂, ξ₁] × [0, π].
    pub fn sample_grid(&self, n_xi: usize, n_theta: usize) -> Vec<(f64, f64, f64)> {
        let g = &self.geometry;
        let h_xi = (g.xi1 - g.xi2) / n_xi as f64;
        let mut out = Vec::with_capacity((n_xi + 1) * (n_theta + 1));
        for i in 0..=n_xi {
            let xi = if i == n_xi { g.xi1 } else { g.xi2 + i as f64 * h_xi };
            for th in theta_grid(n_theta) {
                out.push((xi, th, self.modulation(xi, th) * self.reduced(xi, th)));
            }
        }
        out
    }

    /// Max second-order finite-difference residual of
    /// A_ξξ + A_θθ + n·cot θ·A_θ − (n²/4)·A on the strict interior of an
    /// (n_xi × n_theta)-interval grid, relative to max|A|.
    pub fn pde_residual(&self, n_xi: usize, n_theta: usize) -> f64 {
        let g = &self.geometry;
        let nf = g.n as f64;
        let h_xi = (g.xi1 - g.xi2) / n_xi as f64;
        let h_th = PI / n_theta as f64;
        let a = |xi: f64, th: f64| self.reduced(xi, th);
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 1..n_xi {
            let xi = g.xi2 + i as f64 * h_xi;
            for j in 1..n_theta {
                let th = j as f64 * h_th;
                let c = a(xi, th);
                let a_xx = (a(xi + h_xi, th) - 2.0 * c + a(xi - h_xi, th)) / (h_xi * h_xi);
                let (up, dn) = (a(xi, th + h_th), a(xi, th - h_th));
                let a_tt = (up - 2.0 * c + dn) / (h_th * h_th);
                let a_t = (up - dn) / (2.0 * h_th);
                let r = a_xx + a_tt + nf / th.tan() * a_t - nf * nf / 4.0 * c;
                worst = worst.max(r.abs());
                scale = scale.max(c.abs());
            }
        }
        worst / scale
    }
}

fn theta_grid(n_theta: usize) -> impl Iterator<Item = f64> {
    (0..=n_theta).map(move |j| {
        if j == n_theta {
            PI
        } else {
            j as f64 * PI / n_theta as f64
        }
    })
}
