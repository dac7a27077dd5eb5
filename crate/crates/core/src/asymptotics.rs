//! Thin-gap diagnostics of the coefficient recurrence.
//!
//! With k = m + n/2 and Δ = ξ₁ − ξ₂,
//!
//! ```text
//! S_m = (2m+n)/(m+n)·cosh ξ₂ − (2ασ + n sinh ξ₂)/(m+n)·tanh(kΔ),
//! R_m = c²_m C̃_m / (c²_{m−1} C̃_{m−1}),   R_{m+1} = S_m − m/((m+n)·R_m),
//! ```
//!
//! and L_m ≤ U_m are the roots of x² − S_m x + m/(m+n). As m → ∞ they tend
//! to e^{−ξ₂} and e^{ξ₂}, and the ratios of the first eigenvector approach
//! the lower one.

use log::debug;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::AnnulusGeometry;
use crate::spectral::{self, SpectralSolution};

/// Coefficient ratios are trusted while |C̃_m| > VALIDITY_FACTOR·ε_mach·max|C̃|.
pub const VALIDITY_FACTOR: f64 = 1e3;
/// The forward recursion loses accuracy like (U/L)^m; compare it against the
/// ratios only while |C̃_m| / max|C̃| stays above this.
pub const CROSS_CHECK_FLOOR: f64 = 1e-4;
pub const CROSS_CHECK_TOL: f64 = 1e-6;
/// Monotonicity and lower-bound checks on S run over m = 0..=LEMMA_RANGE.
pub const LEMMA_RANGE: usize = 500;
/// Allowed |R_last − e^{−ξ₂}|.
pub const R_LIMIT_TOL: f64 = 1e-2;
const RESIDUAL_TOL: f64 = 1e-9;

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceDiagnostics {
    pub S: Vec<f64>,
    /// R[m] from coefficient ratios; None at m = 0 and past the validity cutoff.
    pub R: Vec<Option<f64>>,
    /// R from the forward recursion started at R₁ = S₀; stops if it hits zero.
    pub R_recursion: Vec<Option<f64>>,
    pub L: Vec<Option<f64>>,
    pub U: Vec<Option<f64>>,
    pub L_inf: f64,
    pub U_inf: f64,
    /// None stands for ∞.
    pub N1: Option<usize>,
    pub N2: Option<usize>,
    /// Number of leading indices with a valid ratio (R[1..valid_len]).
    pub valid_len: usize,
    /// Indices 1..agreement_len where both R routes agree to CROSS_CHECK_TOL.
    pub agreement_len: usize,
    /// Indices the cross-check is required to cover.
    pub cross_check_len: usize,
    pub c_sq: Vec<f64>,
    pub c_tilde: Vec<f64>,
}

/// S_m for m = 0..len.
pub fn s_sequence(g: &AnnulusGeometry, sigma: f64, len: usize) -> Vec<f64> {
    let nf = g.n as f64;
    let gap = g.xi1 - g.xi2;
    let (sh, ch) = (g.xi2.sinh(), g.xi2.cosh());
    let pull = 2.0 * g.alpha * sigma + nf * sh;
    (0..len)
        .map(|m| {
            let mf = m as f64;
            ((2.0 * mf + nf) * ch - pull * ((mf + nf / 2.0) * gap).tanh()) / (mf + nf)
        })
        .collect()
}

/// Fixed points (L_m, U_m) when the discriminant is positive.
pub fn fixed_points(n: usize, m: usize, s: f64) -> Option<(f64, f64)> {
    let q = m as f64 / (m + n) as f64;
    let disc = s * s - 4.0 * q;
    if disc > 0.0 {
        let root = disc.sqrt();
        Some((0.5 * (s - root), 0.5 * (s + root)))
    } else {
        None
    }
}

pub fn diagnostics(
    g: &AnnulusGeometry,
    sol: &SpectralSolution,
    sigma: f64,
) -> Result<RecurrenceDiagnostics> {
    if !(sol.recursion_residual <= RESIDUAL_TOL * sol.matrix_norm) {
        return Err(Error::NotConverged(format!(
            "recursion residual {:e} above {:e}",
            sol.recursion_residual,
            RESIDUAL_TOL * sol.matrix_norm
        )));
    }
    let n = g.n;
    let m_trunc = sol.m_trunc;
    let s = s_sequence(g, sigma, m_trunc.max(LEMMA_RANGE + 2));
    let c = &sol.c_tilde;
    let max_abs = c.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let floor = VALIDITY_FACTOR * f64::EPSILON * max_abs;

    let valid_len = c.iter().position(|v| v.abs() <= floor).unwrap_or(m_trunc);
    let n1 = (valid_len < m_trunc).then_some(valid_len);
    let mut r = vec![None; m_trunc];
    for m in 1..valid_len {
        r[m] = Some(sol.c_sq[m] * c[m] / (sol.c_sq[m - 1] * c[m - 1]));
    }

    let mut r_rec = vec![None; m_trunc];
    if m_trunc > 1 {
        let mut cur = s[0];
        r_rec[1] = Some(cur);
        for m in 1..m_trunc - 1 {
            if cur == 0.0 || !cur.is_finite() {
                break;
            }
            cur = s[m] - m as f64 / ((m + n) as f64 * cur);
            r_rec[m + 1] = Some(cur);
        }
    }
    let agreement_len = (1..valid_len)
        .find(|&m| match (r[m], r_rec[m]) {
            (Some(a), Some(b)) => (a - b).abs() > CROSS_CHECK_TOL * a.abs(),
            _ => true,
        })
        .unwrap_or(valid_len);
    let cross_check_len = c
        .iter()
        .position(|v| v.abs() < CROSS_CHECK_FLOOR * max_abs)
        .unwrap_or(m_trunc)
        .min(valid_len);

    let (mut l, mut u) = (Vec::with_capacity(s.len()), Vec::with_capacity(s.len()));
    let mut n2 = None;
    for (m, &sm) in s.iter().enumerate() {
        match fixed_points(n, m, sm) {
            Some((lo, hi)) => {
                l.push(Some(lo));
                u.push(Some(hi));
            }
            None => {
                n2.get_or_insert(m);
                l.push(None);
                u.push(None);
            }
        }
    }
    debug!(
        "diagnostics M={m_trunc}: valid={valid_len} agree={agreement_len} check={cross_check_len} N2={n2:?}"
    );
    Ok(RecurrenceDiagnostics {
        S: s,
        R: r,
        R_recursion: r_rec,
        L: l,
        U: u,
        L_inf: (-g.xi2).exp(),
        U_inf: g.xi2.exp(),
        N1: n1,
        N2: n2,
        valid_len,
        agreement_len,
        cross_check_len,
        c_sq: sol.c_sq.clone(),
        c_tilde: sol.c_tilde.clone(),
    })
}

/// Truncation that resolves every valid ratio without truncation bias: the
/// validity cutoff estimated from the decay rate plus ⌈10/ξ₂⌉ modes.
pub fn diagnostic_truncation(g: &AnnulusGeometry, sol: &SpectralSolution) -> usize {
    let decay = if sol.decay_rate.is_finite() && sol.decay_rate < 0.0 {
        sol.decay_rate
    } else {
        -g.xi2
    };
    let cutoff = ((VALIDITY_FACTOR * f64::EPSILON).ln() / decay).ceil() as usize;
    (cutoff + (10.0 / g.xi2).ceil() as usize)
        .max(sol.m_trunc)
        .max(LEMMA_RANGE + 2)
}

/// Solve for σ, re-solve at [`diagnostic_truncation`] and diagnose.
pub fn diagnose(g: &AnnulusGeometry, tol: f64) -> Result<(SpectralSolution, RecurrenceDiagnostics)> {
    let first = spectral::solve_sigma(g, tol)?;
    let sol = spectral::solve_at(g, diagnostic_truncation(g, &first))?;
    let d = diagnostics(g, &sol, sol.sigma)?;
    Ok((sol, d))
}

impl RecurrenceDiagnostics {
    /// 0 < S_0 and S_m < S_{m+1} for m = 0..=m_max.
    pub fn s_increasing(&self, m_max: usize) -> bool {
        self.S[0] > 0.0 && self.S[..=m_max + 1].windows(2).all(|w| w[0] < w[1])
    }

    /// max |(L_m + U_m) − S_m| / S_m and max |L_m·U_m − m/(m+n)| / (m/(m+n)).
    pub fn vieta_errors(&self, n: usize) -> (f64, f64) {
        let mut sum_err: f64 = 0.0;
        let mut prod_err: f64 = 0.0;
        for (m, (lo, hi)) in self.L.iter().zip(&self.U).enumerate() {
            if let (Some(lo), Some(hi)) = (lo, hi) {
                sum_err = sum_err.max(((lo + hi) - self.S[m]).abs() / self.S[m].abs());
                if m > 0 {
                    let q = m as f64 / (m + n) as f64;
                    prod_err = prod_err.max((lo * hi - q).abs() / q);
                }
            }
        }
        (sum_err, prod_err)
    }

    /// Last index with a valid ratio.
    pub fn last_valid(&self) -> Option<usize> {
        (self.valid_len > 1).then(|| self.valid_len - 1)
    }

    /// |R_m − e^{−ξ₂}| at the last valid index.
    pub fn r_limit_error(&self) -> f64 {
        self.last_valid()
            .and_then(|m| self.R[m])
            .map_or(f64::INFINITY, |r| (r - self.L_inf).abs())
    }

    /// First index after which every valid R_m stays within `width` of e^{−ξ₂}.
    pub fn r_band_entry(&self, width: f64) -> Option<usize> {
        let last = self.last_valid()?;
        let mut entry = None;
        for m in (1..=last).rev() {
            match self.R[m] {
                Some(r) if (r - self.L_inf).abs() < width => entry = Some(m),
                _ => break,
            }
        }
        entry
    }

    /// Both R routes agree over the required prefix.
    pub fn recursion_consistent(&self) -> bool {
        self.agreement_len >= self.cross_check_len
    }

    /// |L_m − L_∞| and |U_m − U_∞| non-increasing for m ≥ m0, starting past
    /// the last index without real fixed points.
    pub fn fixed_points_converge_from(&self, m0: usize) -> bool {
        let start = self
            .L
            .iter()
            .rposition(Option::is_none)
            .map_or(m0, |m| m0.max(m + 1));
        let err = |v: &[Option<f64>], lim: f64| -> Vec<f64> {
            v[start..].iter().map(|x| x.map_or(f64::INFINITY, |x| (x - lim).abs())).collect()
        };
        let le = err(&self.L, self.L_inf);
        let ue = err(&self.U, self.U_inf);
        le.windows(2).all(|w| w[1] <= w[0]) && ue.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Right-hand side ((n+1)r₁ − n r₂) / (2 r₂ (r₂ − r₁)) of the thin-gap
/// lower bound; nonpositive (vacuous) once r₂ ≥ (n+1)r₁/n.
pub fn theorem_bound(n: usize, r1: f64, r2: f64) -> f64 {
    let nf = n as f64;
    ((nf + 1.0) * r1 - nf * r2) / (2.0 * r2 * (r2 - r1))
}

/// max over m ≤ LEMMA_RANGE of (lower_m − S_m)/α³, where lower_m is the
/// O(α²) lower bound (m+n/2)/(m+n)·[2 − (2ασ + nα/r₂)(α/r₁ − α/r₂) + (α/r₂)²].
pub fn s_lower_bound_excess(g: &AnnulusGeometry, sigma: f64, s: &[f64]) -> f64 {
    let nf = g.n as f64;
    let a = g.alpha;
    let bracket = 2.0 - (2.0 * a * sigma + nf * a / g.r2) * (a / g.r1 - a / g.r2)
        + (a / g.r2).powi(2);
    s.iter()
        .take(LEMMA_RANGE + 1)
        .enumerate()
        .map(|(m, sm)| {
            let mf = m as f64;
            ((mf + nf / 2.0) / (mf + nf) * bracket - sm) / a.powi(3)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub eps: f64,
    pub t: f64,
    pub alpha: f64,
    pub xi_gap: f64,
    pub xi2: f64,
    pub m_trunc: usize,
    pub sigma: f64,
    pub bound: f64,
    pub margin: f64,
    pub s_increasing: bool,
    /// max_m (lower_m − S_m)/α³, see [`s_lower_bound_excess`].
    pub s_bound_excess: f64,
    pub s_bound_ok: bool,
    pub r_limit_error: f64,
    pub r_converged: bool,
    pub recursion_consistent: bool,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub n: usize,
    pub r1: f64,
    pub r2: f64,
    pub bound: f64,
    pub tol: f64,
    /// Constant K in S_m ≥ lower_m − K·α³, calibrated at the largest ε.
    pub k_calibrated: f64,
    /// Minimum σ over the ε list, standing in for the liminf as ε → 0.
    pub liminf_estimate: f64,
    pub rows: Vec<StudyRow>,
    pub margins_ok: bool,
    /// Margin non-increasing along decreasing ε, up to tol.
    pub margin_trend_ok: bool,
}

impl StudyReport {
    pub fn lemma_checks_ok(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.s_increasing && r.s_bound_ok && r.r_converged && r.recursion_consistent)
    }

    /// ε values whose row failed a lemma check.
    pub fn failing_eps(&self) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| !(r.s_increasing && r.s_bound_ok && r.r_converged && r.recursion_consistent))
            .map(|r| r.eps)
            .collect()
    }
}

pub fn limit_study(n: usize, r1: f64, r2: f64, eps_list: &[f64], tol: f64) -> Result<StudyReport> {
    if eps_list.is_empty() {
        return Err(Error::InvalidConfig("empty eps list".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidConfig("eps list must be strictly decreasing".into()));
    }
    let solved: Vec<(AnnulusGeometry, SpectralSolution, RecurrenceDiagnostics)> = eps_list
        .par_iter()
        .map(|&eps| {
            let g = AnnulusGeometry::from_eps(n, r1, r2, eps)?;
            let (sol, d) = diagnose(&g, tol)?;
            Ok((g, sol, d))
        })
        .collect::<Result<_>>()?;

    let bound = theorem_bound(n, r1, r2);
    let excess: Vec<f64> = solved
        .iter()
        .map(|(g, sol, d)| s_lower_bound_excess(g, sol.sigma, &d.S))
        .collect();
    let k_calibrated = excess[0].max(0.0);

    let rows: Vec<StudyRow> = solved
        .iter()
        .zip(&excess)
        .map(|((g, sol, d), &ex)| StudyRow {
            eps: g.eps,
            t: g.t,
            alpha: g.alpha,
            xi_gap: g.xi1 - g.xi2,
            xi2: g.xi2,
            m_trunc: sol.m_trunc,
            sigma: sol.sigma,
            bound,
            margin: sol.sigma - bound,
            s_increasing: d.s_increasing(LEMMA_RANGE),
            s_bound_excess: ex,
            s_bound_ok: ex <= k_calibrated,
            r_limit_error: d.r_limit_error(),
            r_converged: d.r_limit_error() <= R_LIMIT_TOL,
            recursion_consistent: d.recursion_consistent(),
            n1: d.N1,
            n2: d.N2,
        })
        .collect();

    let margins_ok = rows.iter().all(|r| r.margin >= -tol);
    let margin_trend_ok = rows.windows(2).all(|w| w[1].margin <= w[0].margin + tol);
    let liminf_estimate = rows.iter().map(|r| r.sigma).fold(f64::INFINITY, f64::min);
    Ok(StudyReport {
        n,
        r1,
        r2,
        bound,
        tol,
        k_calibrated,
        liminf_estimate,
        rows,
        margins_ok,
        margin_trend_ok,
    })
}
