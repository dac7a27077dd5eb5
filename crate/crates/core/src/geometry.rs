//! Eccentric annulus parameters and the generalized bispherical coordinate
//! system on ℝⁿ⁺².
//!
//! The outer sphere ∂B₂ is the level set ξ = ξ₂ and the inner sphere ∂B₁ᵗ
//! is ξ = ξ₁, with 0 < ξ₂ < ξ₁. Poles sit at (±α, 0, …, 0). A level set
//! ξ = c is the sphere of radius α/sinh c centred at (α·coth c, 0, …, 0), so
//! the annulus is placed with the outer centre at t₀·e₁ where
//! t₀ = α·coth ξ₂ = √(r₂² + α²), and the inner centre at (t₀ − t)·e₁.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Problem parameters with the derived bispherical constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusGeometry {
    pub n: usize,
    pub r1: f64,
    pub r2: f64,
    pub t: f64,
    /// Gap width r₂ − r₁ − t.
    pub eps: f64,
    pub alpha: f64,
    pub xi1: f64,
    pub xi2: f64,
    /// √(2 r₁ r₂ / (r₂ − r₁)), leading coefficient of α ~ r₊√ε.
    pub r_star: f64,
}

/// A point in (ξ, θ, φ₁, …, φₙ) coordinates with its scale factor.
#[derive(Debug, Clone, PartialEq)]
pub struct BisphericalPoint {
    pub xi: f64,
    pub theta: f64,
    pub phi: Vec<f64>,
    pub h: f64,
}

impl BisphericalPoint {
    pub fn new(g: &AnnulusGeometry, xi: f64, theta: f64, phi: Vec<f64>) -> Self {
        debug_assert_eq!(phi.len(), g.n);
        let h = scale_factor(g.alpha, xi, theta);
        Self { xi, theta, phi, h }
    }

    /// Point with all φ angles set to zero.
    pub fn axial(g: &AnnulusGeometry, xi: f64, theta: f64) -> Self {
        Self::new(g, xi, theta, vec![0.0; g.n])
    }
}

/// h(ξ, θ) = α / (cosh ξ − cos θ).
pub fn scale_factor(alpha: f64, xi: f64, theta: f64) -> f64 {
    alpha / (xi.cosh() - theta.cos())
}

impl AnnulusGeometry {
    pub fn new(n: usize, r1: f64, r2: f64, t: f64) -> Result<Self> {
        Self::validate(n, r1, r2, t)?;
        Ok(Self::build(n, r1, r2, t, (r2 - r1) - t))
    }

    /// Geometry parameterized by the gap width ε = r₂ − r₁ − t. The given ε
    /// is used as-is in α, so tiny gaps keep full relative precision.
    pub fn from_eps(n: usize, r1: f64, r2: f64, eps: f64) -> Result<Self> {
        let t = (r2 - r1) - eps;
        Self::validate(n, r1, r2, t)?;
        if !(eps > 0.0) {
            return Err(Error::Overlap { t, gap: r2 - r1 });
        }
        Ok(Self::build(n, r1, r2, t, eps))
    }

    fn validate(n: usize, r1: f64, r2: f64, t: f64) -> Result<()> {
        if n < 1 {
            return Err(Error::BadDimension(n as i64));
        }
        if !(r1 > 0.0 && r1 < r2 && r2.is_finite()) {
            return Err(Error::BadRadii { r1, r2 });
        }
        if t == 0.0 {
            return Err(Error::DegenerateConcentric);
        }
        let gap = r2 - r1;
        if !(t > 0.0 && t < gap) {
            return Err(Error::Overlap { t, gap });
        }
        Ok(())
    }

    fn build(n: usize, r1: f64, r2: f64, t: f64, eps: f64) -> Self {
        let gap = r2 - r1;
        // factored product; the small factor eps is never formed by cancellation
        let product = ((r2 + r1) - t) * ((r2 + r1) + t) * eps * (gap + t);
        let alpha = product.sqrt() / (2.0 * t);
        Self {
            n,
            r1,
            r2,
            t,
            eps,
            alpha,
            xi1: (alpha / r1).asinh(),
            xi2: (alpha / r2).asinh(),
            r_star: (2.0 * r1 * r2 / gap).sqrt(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n + 2
    }

    /// Offset t₀ of the outer centre along e₁.
    pub fn outer_center_offset(&self) -> f64 {
        self.r2.hypot(self.alpha)
    }

    /// Centre of ∂B₁ᵗ (j = 1) or ∂B₂ (j = 2) in Cartesian coordinates.
    pub fn center(&self, j: usize) -> Vec<f64> {
        let xi = match j {
            1 => self.xi1,
            2 => self.xi2,
            _ => panic!("sphere index must be 1 or 2"),
        };
        let mut c = vec![0.0; self.dim()];
        c[0] = self.alpha / xi.tanh();
        c
    }

    pub fn radius(&self, j: usize) -> f64 {
        match j {
            1 => self.r1,
            2 => self.r2,
            _ => panic!("sphere index must be 1 or 2"),
        }
    }

    pub fn point(&self, xi: f64, theta: f64, phi: Vec<f64>) -> BisphericalPoint {
        BisphericalPoint::new(self, xi, theta, phi)
    }

    /// Forward map (ξ, θ, φ) ↦ x ∈ ℝⁿ⁺².
    pub fn to_cartesian(&self, p: &BisphericalPoint) -> Vec<f64> {
        let denom = p.xi.cosh() - p.theta.cos();
        let mut x = Vec::with_capacity(self.dim());
        x.push(self.alpha * p.xi.sinh() / denom);
        let rho = self.alpha * p.theta.sin() / denom;
        // hyperspherical decomposition of the transverse vector
        let mut tail = rho;
        for &phi in &p.phi {
            x.push(tail * phi.cos());
            tail *= phi.sin();
        }
        x.push(tail);
        x
    }

    /// Inverse map, closed form via the bipolar inversion of (x₁, |x'|).
    pub fn from_cartesian(&self, x: &[f64]) -> Result<BisphericalPoint> {
        assert_eq!(x.len(), self.dim(), "point dimension mismatch");
        let a = self.alpha;
        let x1 = x[0];
        let transverse = &x[1..];
        let rho = norm(transverse);
        let pole_tol = 1e-13 * a;
        if (x1 - a).hypot(rho) < pole_tol || (x1 + a).hypot(rho) < pole_tol {
            return Err(Error::PoleSingular);
        }
        let dm2 = (x1 - a) * (x1 - a) + rho * rho;
        let xi = 0.5 * (4.0 * a * x1 / dm2).ln_1p();
        let theta = (2.0 * a * rho).atan2(x1 * x1 + rho * rho - a * a);
        let phi = hyperspherical_angles(transverse);
        Ok(BisphericalPoint::new(self, xi, theta, phi))
    }

    /// √|g| = α^{n+2} sinⁿθ · Π sin^{n−k}φ_k / (cosh ξ − cos θ)^{n+2}.
    pub fn volume_weight(&self, p: &BisphericalPoint) -> f64 {
        let n = self.n as i32;
        let denom = p.xi.cosh() - p.theta.cos();
        let mut w = self.alpha.powi(n + 2) * p.theta.sin().powi(n) / denom.powi(n + 2);
        for (k, phi) in p.phi.iter().take(self.n.saturating_sub(1)).enumerate() {
            w *= phi.sin().powi(n - 1 - k as i32);
        }
        w
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, &c| acc.hypot(c))
}

/// Angles (φ₁, …, φₙ) of a vector v ∈ ℝⁿ⁺¹ in standard hyperspherical form.
fn hyperspherical_angles(v: &[f64]) -> Vec<f64> {
    let n = v.len() - 1;
    let mut phi = Vec::with_capacity(n);
    for k in 0..n.saturating_sub(1) {
        phi.push(norm(&v[k + 1..]).atan2(v[k]));
    }
    let mut last = v[n].atan2(v[n - 1]);
    if last < 0.0 {
        last += 2.0 * PI;
    }
    phi.push(last);
    phi
}
