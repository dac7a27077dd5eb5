//! Truncated three-term recurrence for the boundary coefficients C̃_m and
//! its solution as a tridiagonal eigenproblem.
//!
//! Row m of the operator reads
//!
//! ```text
//! a_m·C̃_m − m·c²_{m−1}·C̃_{m−1} − (m+n)·c²_{m+1}·C̃_{m+1} = 2ασ·C̃_m,
//! a_m = −n·sinh ξ₂ + (2m+n)·c²_m·cosh ξ₂,   c²_m = coth((m+n/2)(ξ₁−ξ₂)),
//! ```
//!
//! so σ is the smallest eigenvalue divided by 2α. Row 0 is the same formula at
//! m = 0 (no C̃₋₁ term).

use log::debug;

use crate::error::{Error, Result};
use crate::geometry::AnnulusGeometry;
use crate::tridiag::SymTridiagonal;

/// Smallest truncation accepted by [`assemble`].
pub const MIN_TRUNCATION: usize = 8;
/// Below this ξ₁ − ξ₂ the coth weights lose relative precision.
pub const GAP_FLOOR: f64 = 1e-6;
/// Required |C̃_{M−1}| / max|C̃| at acceptance.
pub const TAIL_TOLERANCE: f64 = 1e-10;
const MAX_TRUNCATION: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq)]
pub struct JacobiOperator {
    pub n: usize,
    pub m_trunc: usize,
    pub diag: Vec<f64>,
    /// sub[i] is the (i+1, i) entry, −(i+1)·c²_i.
    pub sub: Vec<f64>,
    /// sup[i] is the (i, i+1) entry, −(i+n)·c²_{i+1}.
    pub sup: Vec<f64>,
    pub c_sq: Vec<f64>,
}

impl JacobiOperator {
    /// Entry coupling row m to C̃_{m−1} (zero for m = 0).
    pub fn row_sub(&self, m: usize) -> f64 {
        if m == 0 {
            0.0
        } else {
            self.sub[m - 1]
        }
    }

    /// Entry coupling row m to C̃_{m+1} (zero in the last row).
    pub fn row_sup(&self, m: usize) -> f64 {
        self.sup.get(m).copied().unwrap_or(0.0)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.m_trunc)
            .map(|m| {
                let mut y = self.diag[m] * x[m];
                if m > 0 {
                    y += self.sub[m - 1] * x[m - 1];
                }
                if m + 1 < self.m_trunc {
                    y += self.sup[m] * x[m + 1];
                }
                y
            })
            .collect()
    }

    /// Symmetric form under the diagonal similarity D·J·D⁻¹, with the
    /// scaling D (d₀ = 1).
    pub fn symmetrize(&self) -> (SymTridiagonal, Vec<f64>) {
        let mut scale = Vec::with_capacity(self.m_trunc);
        scale.push(1.0);
        let mut off = Vec::with_capacity(self.m_trunc - 1);
        for i in 0..self.m_trunc - 1 {
            let (u, l) = (self.sup[i], self.sub[i]);
            off.push(-(u * l).sqrt());
            scale.push(scale[i] * (u / l).sqrt());
        }
        (SymTridiagonal::new(self.diag.clone(), off), scale)
    }

    pub fn norm(&self) -> f64 {
        (0..self.m_trunc)
            .map(|m| self.diag[m].abs() + self.row_sub(m).abs() + self.row_sup(m).abs())
            .fold(0.0, f64::max)
    }
}

/// c²_m = coth((m + n/2)(ξ₁ − ξ₂)).
pub fn c_sq(n: usize, m: usize, gap: f64) -> f64 {
    1.0 / ((m as f64 + n as f64 / 2.0) * gap).tanh()
}

pub fn assemble(g: &AnnulusGeometry, m_trunc: usize) -> Result<JacobiOperator> {
    if m_trunc < MIN_TRUNCATION {
        return Err(Error::TruncationTooSmall(m_trunc));
    }
    let n = g.n;
    let nf = n as f64;
    let gap = g.xi1 - g.xi2;
    let (sh, ch) = (g.xi2.sinh(), g.xi2.cosh());
    // one extra weight for the sup entry of the last kept row
    let c_sq_ext: Vec<f64> = (0..=m_trunc).map(|m| c_sq(n, m, gap)).collect();
    let diag = (0..m_trunc)
        .map(|m| -nf * sh + (2.0 * m as f64 + nf) * c_sq_ext[m] * ch)
        .collect();
    let sub = (1..m_trunc).map(|m| -(m as f64) * c_sq_ext[m - 1]).collect();
    let sup = (0..m_trunc - 1)
        .map(|m| -(m as f64 + nf) * c_sq_ext[m + 1])
        .collect();
    Ok(JacobiOperator {
        n,
        m_trunc,
        diag,
        sub,
        sup,
        c_sq: c_sq_ext[..m_trunc].to_vec(),
    })
}

/// Smallest eigenvalue of J and its eigenvector in the original (C̃) basis,
/// normalized to unit Euclidean norm with vector[0] > 0.
pub fn smallest_eigenpair(j: &JacobiOperator) -> Result<(f64, Vec<f64>)> {
    let (sym, scale) = j.symmetrize();
    smallest_pair(j, &sym, &scale)
}

fn smallest_pair(
    j: &JacobiOperator,
    sym: &SymTridiagonal,
    scale: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let norm = sym.norm();
    let approx = sym.eigenvalue(0, 1e-13 * norm);
    let (lambda, y) = sym.inverse_iteration(approx, 10, 1e-10 * norm)?;
    let mut v = minimal_solution(j, lambda)
        .unwrap_or_else(|| y.iter().zip(scale).map(|(yi, d)| yi / d).collect());
    let vnorm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    let sign = if v[0] < 0.0 { -1.0 } else { 1.0 };
    v.iter_mut().for_each(|c| *c *= sign / vnorm);
    Ok((lambda, v))
}

/// Rows 1..M of (J − λ)C̃ = 0 solved downward for the ratios C̃_m / C̃_{m−1}
/// (a continued fraction started from C̃_M = 0), then multiplied out from
/// C̃_0 = 1. The decaying solution is dominant in this direction, so even
/// entries far below the roundoff level of the largest one keep their
/// relative accuracy. None if a denominator vanishes.
fn minimal_solution(j: &JacobiOperator, lambda: f64) -> Option<Vec<f64>> {
    let m_trunc = j.m_trunc;
    let mut rho = vec![0.0; m_trunc];
    let mut next = 0.0;
    for m in (1..m_trunc).rev() {
        let denom = (j.diag[m] - lambda) + j.row_sup(m) * next;
        if denom == 0.0 || !denom.is_finite() {
            return None;
        }
        next = -j.sub[m - 1] / denom;
        rho[m] = next;
    }
    let mut v = Vec::with_capacity(m_trunc);
    v.push(1.0);
    for m in 1..m_trunc {
        v.push(v[m - 1] * rho[m]);
    }
    v.iter().all(|c| c.is_finite()).then_some(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSolution {
    pub sigma: f64,
    pub c_tilde: Vec<f64>,
    /// C_m of the full series; underflows to zero once the exponential
    /// normalization exceeds the double range.
    pub c_raw: Vec<f64>,
    pub m_trunc: usize,
    /// max_m |row_m| / max|C̃| for the untruncated-form recurrence.
    pub recursion_residual: f64,
    pub tail_ratio: f64,
    /// Infinity norm of the assembled operator.
    pub matrix_norm: f64,
    /// Distance from the smallest to the second-smallest eigenvalue of J.
    pub eigen_gap: f64,
    /// Fitted slope of ln|C̃_m| against m over the resolved range.
    pub decay_rate: f64,
    pub c_sq: Vec<f64>,
}

/// Eigenpair at a fixed truncation order.
pub fn solve_at(g: &AnnulusGeometry, m_trunc: usize) -> Result<SpectralSolution> {
    let j = assemble(g, m_trunc)?;
    let (sym, scale) = j.symmetrize();
    let (lambda, c_tilde) = smallest_pair(&j, &sym, &scale)?;
    let second = sym.eigenvalue(1, 1e-13 * sym.norm());
    let sigma = lambda / (2.0 * g.alpha);

    let max_abs = c_tilde.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
    let applied = j.apply(&c_tilde);
    let recursion_residual = applied
        .iter()
        .zip(&c_tilde)
        .map(|(a, c)| (a - lambda * c).abs())
        .fold(0.0, f64::max)
        / max_abs;
    let tail_ratio = c_tilde[m_trunc - 1].abs() / max_abs;

    let nf = g.n as f64;
    let gap = g.xi1 - g.xi2;
    let c_raw = c_tilde
        .iter()
        .enumerate()
        .map(|(m, ct)| {
            let k = m as f64 + nf / 2.0;
            ct * (-k * (2.0 * g.xi1 - g.xi2)).exp() / -(-2.0 * k * gap).exp_m1()
        })
        .collect();

    let decay_rate = fit_decay(&c_tilde, max_abs);
    debug!(
        "solve_at M={m_trunc}: sigma={sigma:.15e} tail={tail_ratio:.2e} decay={decay_rate:.4e}"
    );
    Ok(SpectralSolution {
        sigma,
        c_tilde,
        c_raw,
        m_trunc,
        recursion_residual,
        tail_ratio,
        matrix_norm: j.norm(),
        eigen_gap: second - lambda,
        decay_rate,
        c_sq: j.c_sq,
    })
}

fn fit_decay(c: &[f64], max_abs: f64) -> f64 {
    let resolved: Vec<(f64, f64)> = c
        .iter()
        .enumerate()
        .take_while(|(_, v)| v.abs() > 1e-12 * max_abs)
        .map(|(m, v)| (m as f64, v.abs().ln()))
        .collect();
    let pts = &resolved[resolved.len() / 2..];
    if pts.len() < 2 {
        return f64::NAN;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Initial truncation order max(32, ⌈8/(ξ₁ − ξ₂)⌉).
pub fn initial_truncation(g: &AnnulusGeometry) -> usize {
    let by_gap = (8.0 / (g.xi1 - g.xi2)).ceil();
    if by_gap > MAX_TRUNCATION as f64 {
        MAX_TRUNCATION
    } else {
        (by_gap as usize).max(32)
    }
}

/// First eigenvalue σ₁ᵗ with adaptive truncation: M doubles until σ(M) and
/// σ(2M) agree to `tol` relative and the coefficient tail is below 1e−10.
pub fn solve_sigma(g: &AnnulusGeometry, tol: f64) -> Result<SpectralSolution> {
    if !(tol > 0.0 && tol <= 1e-2) {
        return Err(Error::InvalidConfig(format!(
            "tolerance {tol} outside (0, 1e-2]"
        )));
    }
    let gap = g.xi1 - g.xi2;
    if gap < GAP_FLOOR {
        return Err(Error::GapTooSmall(gap));
    }
    let mut m = initial_truncation(g);
    let mut coarse = solve_at(g, m)?;
    while 2 * m <= MAX_TRUNCATION {
        let fine = solve_at(g, 2 * m)?;
        let drift = (coarse.sigma - fine.sigma).abs();
        if drift <= tol * fine.sigma && fine.tail_ratio < TAIL_TOLERANCE {
            debug!(
                "accepted M={} sigma={:.15e} drift={drift:.2e} decay={:.4e}",
                fine.m_trunc, fine.sigma, fine.decay_rate
            );
            return Ok(fine);
        }
        coarse = fine;
        m *= 2;
    }
    Err(Error::NoConvergence(format!(
        "truncation exceeded {MAX_TRUNCATION} without meeting tol {tol:e}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> AnnulusGeometry {
        AnnulusGeometry::new(1, 1.0, 2.0, 0.5).unwrap()
    }

    #[test]
    fn first_weight_of_reference_geometry() {
        let j = assemble(&reference(), 64).unwrap();
        // coth(0.5 * (xi1 - xi2)) evaluated in extended precision
        assert!((j.c_sq[0] - 3.41568).abs() < 5e-5, "{}", j.c_sq[0]);
        let g = reference();
        let direct = 1.0 / (0.5 * (g.xi1 - g.xi2)).tanh();
        assert_eq!(j.c_sq[0], direct);
    }

    #[test]
    fn weights_decrease_to_one() {
        let j = assemble(&reference(), 200).unwrap();
        assert!(j.c_sq.windows(2).all(|w| w[1] <= w[0]));
        assert!(j.c_sq.iter().all(|&c| c > 1.0 || (c - 1.0).abs() < 1e-15));
        assert!((j.c_sq[199] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sub_entry_layout() {
        let j = assemble(&reference(), 8).unwrap();
        assert_eq!(j.row_sub(3), -3.0 * j.c_sq[2]);
        assert_eq!(j.row_sup(0), -1.0 * j.c_sq[1]);
        assert_eq!(j.row_sup(7), 0.0);
        for m in 1..8 {
            assert!(j.row_sub(m) * j.row_sup(m - 1) > 0.0);
        }
    }

    #[test]
    fn truncation_floor() {
        assert_eq!(assemble(&reference(), 7), Err(Error::TruncationTooSmall(7)));
    }

    #[test]
    fn small_truncation_rayleigh_quotient() {
        let j = assemble(&reference(), 8).unwrap();
        let (lambda, v) = smallest_eigenpair(&j).unwrap();
        let (sym, scale) = j.symmetrize();
        let y: Vec<f64> = v.iter().zip(&scale).map(|(a, d)| a * d).collect();
        let sy = sym.matvec(&y);
        let rq = sy.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>()
            / y.iter().map(|c| c * c).sum::<f64>();
        assert!((rq - lambda).abs() < 1e-12 * lambda.abs().max(1.0));
        assert!(v[0] > 0.0);
    }

    #[test]
    fn perron_vector_is_positive() {
        for &(n, r1, r2, t) in &[(1, 1.0, 2.0, 0.5), (2, 1.0, 1.5, 0.45), (3, 1.0, 1.2, 0.1)] {
            let g = AnnulusGeometry::new(n, r1, r2, t).unwrap();
            let j = assemble(&g, 128).unwrap();
            let (_, v) = smallest_eigenpair(&j).unwrap();
            // entries below the roundoff floor carry no sign information
            let resolved: Vec<f64> = v.iter().copied().filter(|c| c.abs() > 1e-12 * v[0]).collect();
            assert!(resolved.len() > 4);
            assert!(resolved.iter().all(|&c| c > 0.0));
        }
    }

    #[test]
    fn solve_rejects_bad_tolerance() {
        assert!(matches!(
            solve_sigma(&reference(), 0.5),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn reference_solve_is_consistent() {
        let sol = solve_sigma(&reference(), 1e-10).unwrap();
        assert!(sol.sigma > 0.0 && sol.sigma < 0.5);
        assert!(sol.recursion_residual < 1e-10);
        assert!(sol.tail_ratio < TAIL_TOLERANCE);
        assert!(sol.eigen_gap > 1e-8 * sol.matrix_norm);
        assert!(sol.decay_rate < 0.0);
    }

    #[test]
    fn gap_floor_is_enforced() {
        let g = AnnulusGeometry::from_eps(1, 1.0, 1.2, 1e-16).unwrap();
        assert!(matches!(solve_sigma(&g, 1e-6), Err(Error::GapTooSmall(_))));
    }
}
