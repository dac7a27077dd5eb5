//! Gegenbauer (ultraspherical) polynomials G_m^{(λ)}.
//!
//! Evaluation uses the forward three-term recurrence
//! m·G_m = 2(m+λ−1)·s·G_{m−1} − (m+2λ−2)·G_{m−2}, G₀ = 1, G₁ = 2λs,
//! which is stable on [−1, 1]. Derivatives use d/ds G_m^{(λ)} = 2λ·G_{m−1}^{(λ+1)}.

use std::f64::consts::PI;

use libm::lgamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GegenbauerParams {
    pub lambda: f64,
    pub m: usize,
}

impl GegenbauerParams {
    pub fn new(lambda: f64, m: i64) -> Result<Self> {
        if m < 0 {
            return Err(Error::BadDegree(m));
        }
        if !(lambda > 0.0) {
            return Err(Error::BadLambda(lambda));
        }
        Ok(Self {
            lambda,
            m: m as usize,
        })
    }

    /// Parameter λ = n/2 used for zonal harmonics in ℝⁿ⁺².
    pub fn zonal(n: usize, m: usize) -> Self {
        Self {
            lambda: n as f64 / 2.0,
            m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GegenbauerEval {
    pub value: f64,
    pub derivative: f64,
    pub s: f64,
}

/// G_m^{(λ)}(s) by forward recurrence; no range check.
pub fn value(lambda: f64, m: usize, s: f64) -> f64 {
    let mut prev = 1.0;
    if m == 0 {
        return prev;
    }
    let mut cur = 2.0 * lambda * s;
    for k in 2..=m {
        let kf = k as f64;
        let next = (2.0 * (kf + lambda - 1.0) * s * cur - (kf + 2.0 * lambda - 2.0) * prev) / kf;
        prev = cur;
        cur = next;
    }
    cur
}

/// G_0^{(λ)}(s), …, G_{M−1}^{(λ)}(s) written into `out` (length M).
pub fn values_into(lambda: f64, s: f64, out: &mut [f64]) {
    let len = out.len();
    if len == 0 {
        return;
    }
    out[0] = 1.0;
    if len == 1 {
        return;
    }
    out[1] = 2.0 * lambda * s;
    for k in 2..len {
        let kf = k as f64;
        out[k] = (2.0 * (kf + lambda - 1.0) * s * out[k - 1]
            - (kf + 2.0 * lambda - 2.0) * out[k - 2])
            / kf;
    }
}

/// Value and derivative at s ∈ [−1, 1].
pub fn eval(params: GegenbauerParams, s: f64) -> Result<GegenbauerEval> {
    if !(-1.0..=1.0).contains(&s) {
        return Err(Error::OutOfRange(s));
    }
    let GegenbauerParams { lambda, m } = params;
    let derivative = if m == 0 {
        0.0
    } else {
        2.0 * lambda * value(lambda + 1.0, m - 1, s)
    };
    Ok(GegenbauerEval {
        value: value(lambda, m, s),
        derivative,
        s,
    })
}

/// G_m^{(λ)}(1) = Γ(m+2λ) / (Γ(m+1)·Γ(2λ)), the maximum modulus on [−1, 1].
pub fn value_at_one(params: GegenbauerParams) -> f64 {
    let GegenbauerParams { lambda, m } = params;
    let mf = m as f64;
    // all gamma arguments are positive, so only magnitudes matter
    (lgamma(mf + 2.0 * lambda) - lgamma(mf + 1.0) - lgamma(2.0 * lambda)).exp()
}

/// ‖G_m^{(λ)}‖² in L²([−1, 1]; (1−s²)^{λ−1/2} ds).
pub fn norm_sq(params: GegenbauerParams) -> f64 {
    let GegenbauerParams { lambda, m } = params;
    let mf = m as f64;
    let log_ratio = lgamma(mf + 2.0 * lambda) - 2.0 * lgamma(lambda) - lgamma(mf + 1.0);
    2f64.powf(1.0 - 2.0 * lambda) * PI * log_ratio.exp() / (mf + lambda)
}

/// Coefficients (lower, upper) with
/// (m + n/2)·s·G_m = upper·G_{m+1} + lower·G_{m−1}, λ = n/2, G₋₁ ≡ 0.
pub fn cos_coupling(n: usize, m: usize) -> (f64, f64) {
    let mf = m as f64;
    let nf = n as f64;
    ((mf + nf - 1.0) / 2.0, (mf + 1.0) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lambda: f64, m: i64) -> GegenbauerParams {
        GegenbauerParams::new(lambda, m).unwrap()
    }

    #[test]
    fn closed_forms() {
        for &s in &[-1.0, -0.4, 0.0, 0.3, 0.9, 1.0] {
            let v = eval(p(0.5, 2), s).unwrap().value;
            assert!((v - (3.0 * s * s - 1.0) / 2.0).abs() < 1e-15);
            for n in 1..5 {
                let v = eval(GegenbauerParams::zonal(n, 1), s).unwrap().value;
                assert!((v - n as f64 * s).abs() < 1e-15);
            }
        }
        let e = eval(p(1.0, 0), -0.3).unwrap();
        assert_eq!((e.value, e.derivative), (1.0, 0.0));
    }

    #[test]
    fn special_values_at_one() {
        assert!((value_at_one(p(0.5, 2)) - 1.0).abs() < 1e-14);
        assert!((value_at_one(p(0.5, 0)) - 1.0).abs() < 1e-14);
        assert!((value_at_one(p(1.0, 3)) - 4.0).abs() < 1e-13);
    }

    #[test]
    fn special_norms() {
        assert!((norm_sq(p(0.5, 0)) - 2.0).abs() < 1e-14);
        assert!((norm_sq(p(0.5, 1)) - 2.0 / 3.0).abs() < 1e-14);
        assert!((norm_sq(p(1.0, 0)) - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn argument_errors() {
        assert_eq!(GegenbauerParams::new(1.0, -1), Err(Error::BadDegree(-1)));
        assert!(matches!(
            GegenbauerParams::new(0.0, 2),
            Err(Error::BadLambda(_))
        ));
        assert_eq!(eval(p(1.0, 2), 1.5), Err(Error::OutOfRange(1.5)));
    }

    #[test]
    fn coupling_base_and_pointwise() {
        let (lo, up) = cos_coupling(1, 0);
        assert_eq!((lo, up), (0.0, 0.5));
        let s = 0.37;
        assert!((0.5 * s - up * value(0.5, 1, s)).abs() < 1e-16);

        let (lo, up) = cos_coupling(2, 1);
        assert_eq!((lo, up), (1.0, 1.0));
        let s = 0.7;
        let lhs = (1.0 + 1.0) * s * value(1.0, 1, s);
        let rhs = up * value(1.0, 2, s) + lo * value(1.0, 0, s);
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn values_into_matches_scalar() {
        let mut buf = vec![0.0; 40];
        values_into(1.5, -0.61, &mut buf);
        for (m, v) in buf.iter().enumerate() {
            assert_eq!(*v, value(1.5, m, -0.61));
        }
    }
}
