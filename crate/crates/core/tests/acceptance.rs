//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use steklov_core::asymptotics::{self, LEMMA_RANGE, R_LIMIT_TOL};
use steklov_core::eigenfield::EigenField;
use steklov_core::gegenbauer::{self, GegenbauerParams};
use steklov_core::oracle::{self, concentric_sigma};
use steklov_core::quadrature::GaussLegendre;
use steklov_core::spectral::{self, SpectralSolution};
use steklov_core::AnnulusGeometry;

const DIMS: [usize; 3] = [1, 2, 3];
const RADII: [(f64, f64); 2] = [(1.0, 1.5), (1.0, 2.0)];
const T_FRACTIONS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
const THIN_TRIPLES: [(usize, f64, f64); 3] = [(1, 1.0, 1.5), (1, 1.0, 1.2), (2, 1.0, 1.2)];
const SOLVE_TOL: f64 = 1e-10;
const FD_GRID: usize = 64;
const PDE_GRIDS: [usize; 2] = [20, 640];

struct Verdict {
    pass: bool,
    detail: String,
}

fn matrix() -> Vec<(usize, f64, f64)> {
    DIMS.iter()
        .flat_map(|&n| RADII.iter().map(move |&(r1, r2)| (n, r1, r2)))
        .collect()
}

fn criterion(id: usize, name: &str, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = f();
    println!(
        "criterion {id} [{name}]: {} ({}; {:.1} s)",
        if v.pass { "PASS" } else { "FAIL" },
        v.detail,
        start.elapsed().as_secs_f64()
    );
    v.pass
}

fn oracle_agreement(solves: &mut Vec<(AnnulusGeometry, SpectralSolution)>) -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for (n, r1, r2) in matrix() {
        for frac in T_FRACTIONS {
            let g = AnnulusGeometry::new(n, r1, r2, frac * (r2 - r1)).unwrap();
            let sol = spectral::solve_sigma(&g, SOLVE_TOL).unwrap();
            let fd = oracle::fd_sigma_extrapolated(&g, FD_GRID, FD_GRID).unwrap();
            let report = oracle::compare(sol.sigma, &fd, 1e-3);
            worst = worst.max(report.relative_difference);
            if !report.pass {
                failures.push(format!("n={n} r2={r2} t/d={frac}: {:.2e}", report.relative_difference));
            }
            solves.push((g, sol));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Verdict {
        pass: failures.is_empty() && secs <= 60.0,
        detail: format!(
            "{} cases, max rel diff {worst:.2e} vs 1e-3, FD {FD_GRID}->{} Richardson, {secs:.1} s of 60 s{}",
            solves.len(),
            2 * FD_GRID,
            if failures.is_empty() { String::new() } else { format!("; failing {failures:?}") }
        ),
    }
}

fn concentric_limit() -> Verdict {
    let mut worst: f64 = 0.0;
    for (n, r1, r2) in matrix() {
        let g = AnnulusGeometry::new(n, r1, r2, 1e-3 * (r2 - r1)).unwrap();
        let sigma = spectral::solve_sigma(&g, SOLVE_TOL).unwrap().sigma;
        let exact = concentric_sigma(n, r1, r2);
        worst = worst.max((sigma - exact).abs() / exact);
    }
    Verdict {
        pass: worst <= 1e-3,
        detail: format!("max rel diff to closed form {worst:.2e} vs 1e-3"),
    }
}

fn thin_gap_bound() -> Verdict {
    let start = Instant::now();
    let eps = [1e-1, 1e-2, 1e-3, 1e-4];
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, r1, r2) in THIN_TRIPLES {
        let rep = asymptotics::limit_study(n, r1, r2, &eps, 1e-6).unwrap();
        let min_margin = rep.rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
        pass &= rep.margins_ok && rep.margin_trend_ok && min_margin >= -1e-6;
        parts.push(format!(
            "({n},{r1},{r2}) bound {:.4} liminf est {:.4} min margin {min_margin:.3e}{}",
            rep.bound,
            rep.liminf_estimate,
            if rep.margin_trend_ok { "" } else { " margin trend broken" }
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    Verdict {
        pass: pass && secs <= 120.0,
        detail: format!("{}; {secs:.1} s of 120 s", parts.join("; ")),
    }
}

fn monotonicity() -> Verdict {
    let mut failures = Vec::new();
    for (n, r1, r2) in matrix() {
        let mut spec = Vec::new();
        let mut fd = Vec::new();
        for k in 1..=9 {
            let g = AnnulusGeometry::new(n, r1, r2, k as f64 / 10.0 * (r2 - r1)).unwrap();
            spec.push(spectral::solve_sigma(&g, SOLVE_TOL).unwrap().sigma);
            fd.push(oracle::fd_sigma_extrapolated(&g, FD_GRID, FD_GRID).unwrap().best_sigma());
        }
        let dec = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
        if !dec(&spec) {
            failures.push(format!("spectral ({n},{r1},{r2})"));
        }
        if !dec(&fd) {
            failures.push(format!("fd ({n},{r1},{r2})"));
        }
    }
    Verdict {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            "strictly decreasing on 9-point t grids, spectral and FD, 6 cases".into()
        } else {
            format!("not decreasing: {failures:?}")
        },
    }
}

fn lemma_checks() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, r1, r2) in THIN_TRIPLES {
        let rep = asymptotics::limit_study(n, r1, r2, &[1e-2, 1e-3], 1e-8).unwrap();
        for row in &rep.rows {
            let ok = row.s_increasing && row.s_bound_ok && row.r_converged;
            pass &= ok;
            parts.push(format!(
                "({n},{r1},{r2}) eps={:.0e}: S incr to m={LEMMA_RANGE} {}, S bound {} (K={:.3e}), |R_last-e^-xi2|={:.2e}{}",
                row.eps,
                row.s_increasing,
                row.s_bound_ok,
                rep.k_calibrated,
                row.r_limit_error,
                if row.r_converged { String::new() } else { format!(" > {R_LIMIT_TOL:.0e}") }
            ));
        }
    }
    Verdict {
        pass,
        detail: parts.join("; "),
    }
}

fn eigenfunction_residuals(solves: &[(AnnulusGeometry, SpectralSolution)]) -> Verdict {
    let mut worst_d: f64 = 0.0;
    let mut worst_s: f64 = 0.0;
    let (mut ratio_lo, mut ratio_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut finest = 0;
    let mut order_ok = true;
    let mut signed = true;
    for (g, sol) in solves {
        let f = EigenField::new(*g, sol.clone());
        worst_d = worst_d.max(f.dirichlet_residual(256));
        worst_s = worst_s.max(f.steklov_residual(256));
        // refine until the halving ratio settles into the second-order band
        let mut k = PDE_GRIDS[0];
        let mut prev = f.pde_residual(k, k);
        let mut settled = None;
        while k < PDE_GRIDS[1] {
            let next = f.pde_residual(2 * k, 2 * k);
            let ratio = prev / next;
            if (3.5..=4.5).contains(&ratio) {
                settled = Some(ratio);
                break;
            }
            if next >= prev {
                break;
            }
            prev = next;
            k *= 2;
        }
        match settled {
            Some(ratio) => {
                ratio_lo = ratio_lo.min(ratio);
                ratio_hi = ratio_hi.max(ratio);
                finest = finest.max(2 * k);
            }
            None => order_ok = false,
        }
        let (lo, hi) = f.interior_extrema(50, 50);
        signed &= hi > 0.0 && lo >= -1e-12 * hi;
    }
    Verdict {
        pass: worst_d <= 1e-10 && worst_s <= 1e-6 && order_ok && signed,
        detail: format!(
            "{} solves: Dirichlet {worst_d:.1e} (<=1e-10), Steklov {worst_s:.1e} (<=1e-6), PDE residual halving ratio {ratio_lo:.2}..{ratio_hi:.2} in band [3.5, 4.5] for all: {order_ok} (grids {}..{finest}), one-signed on 50x50: {signed}",
            solves.len(),
            PDE_GRIDS[0]
        ),
    }
}

fn special_functions() -> Verdict {
    let start = Instant::now();
    let lambdas = [0.5, 1.0, 1.5, 2.0];
    let gl = GaussLegendre::new(256);
    let (mut ode, mut norm, mut orth, mut coupling): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let mut modulus = true;
    let samples: Vec<f64> = (0..=200).map(|i| -1.0 + i as f64 / 100.0).collect();
    for lambda in lambdas {
        let n = (2.0 * lambda) as usize;
        let g = |m: usize, s: f64| gegenbauer::value(lambda, m, s);
        for m in 0..=50usize {
            let mf = m as f64;
            let top = gegenbauer::value_at_one(GegenbauerParams::new(lambda, m as i64).unwrap());
            for &s in &samples {
                let d1 = if m >= 1 { 2.0 * lambda * gegenbauer::value(lambda + 1.0, m - 1, s) } else { 0.0 };
                let d2 = if m >= 2 {
                    4.0 * lambda * (lambda + 1.0) * gegenbauer::value(lambda + 2.0, m - 2, s)
                } else {
                    0.0
                };
                let terms = [(1.0 - s * s) * d2, -(2.0 * lambda + 1.0) * s * d1, mf * (mf + 2.0 * lambda) * g(m, s)];
                let scale = terms.iter().map(|t| t.abs()).sum::<f64>().max(top);
                ode = ode.max(terms.iter().sum::<f64>().abs() / scale);
                modulus &= g(m, s).abs() <= top * (1.0 + 1e-12);
                let (lower, upper) = gegenbauer::cos_coupling(n, m);
                let lhs = (mf + lambda) * s * g(m, s);
                let rhs = upper * g(m + 1, s) + if m > 0 { lower * g(m - 1, s) } else { 0.0 };
                coupling = coupling.max((lhs - rhs).abs() / (mf + lambda).max(1.0) / top);
            }
            // s = cos θ turns the Jacobi weight into sin^{2λ}θ dθ
            let inner = |a: usize, b: usize| {
                gl.integrate(0.0, PI, |th| g(a, th.cos()) * g(b, th.cos()) * th.sin().powf(2.0 * lambda))
            };
            let exact = gegenbauer::norm_sq(GegenbauerParams::new(lambda, m as i64).unwrap());
            norm = norm.max((inner(m, m) - exact).abs() / exact);
            for k in (0..m).step_by(7) {
                let ek = gegenbauer::norm_sq(GegenbauerParams::new(lambda, k as i64).unwrap());
                orth = orth.max(inner(m, k).abs() / (exact * ek).sqrt());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Verdict {
        pass: ode <= 1e-9 && norm <= 1e-10 && orth <= 1e-10 && coupling <= 1e-12 && modulus && secs <= 10.0,
        detail: format!(
            "lambda in {{1/2,1,3/2,2}}, m<=50: ODE {ode:.1e} (<=1e-9), norm {norm:.1e} (<=1e-10), orthogonality {orth:.1e} (<=1e-10), coupling {coupling:.1e} (<=1e-12), max modulus {modulus}, {secs:.1} s of 10 s"
        ),
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn geometry_suite() -> Verdict {
    let (mut level, mut trip): (f64, f64) = (0.0, 0.0);
    let mut slopes = Vec::new();
    for (n, r1, r2) in matrix() {
        for frac in T_FRACTIONS {
            let g = AnnulusGeometry::new(n, r1, r2, frac * (r2 - r1)).unwrap();
            for i in 0..24 {
                let theta = (i as f64 + 0.5) * PI / 24.0;
                let phi: Vec<f64> = (0..n).map(|k| 0.3 + 0.4 * (i + k) as f64 % 2.8).collect();
                for (j, xi) in [(1, g.xi1), (2, g.xi2)] {
                    let x = g.to_cartesian(&g.point(xi, theta, phi.clone()));
                    level = level.max((dist(&x, &g.center(j)) - g.radius(j)).abs() / g.radius(j));
                }
                for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
                    let xi = g.xi2 + s * (g.xi1 - g.xi2);
                    let back = g.from_cartesian(&g.to_cartesian(&g.point(xi, theta, phi.clone()))).unwrap();
                    trip = trip
                        .max((back.xi - xi).abs() / xi.max(1.0))
                        .max((back.theta - theta).abs())
                        .max(back.phi.iter().zip(&phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
                }
            }
        }
    }
    for (r1, r2) in RADII {
        let pts: Vec<(f64, f64)> = (0..=30)
            .map(|k| {
                let eps = 10f64.powf(-5.0 + 3.0 * k as f64 / 30.0);
                (eps.ln(), AnnulusGeometry::from_eps(1, r1, r2, eps).unwrap().alpha.ln())
            })
            .collect();
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        slopes.push(sxy / sxx);
    }
    let slope_ok = slopes.iter().all(|s| (s - 0.5).abs() <= 0.005);
    Verdict {
        pass: level <= 1e-10 && trip <= 1e-12 && slope_ok,
        detail: format!(
            "level-set {level:.1e} (<=1e-10), round trip {trip:.1e} (<=1e-12), alpha(eps) log-log slopes {:?} (0.5 within 1%)",
            slopes.iter().map(|s| format!("{s:.5}")).collect::<Vec<_>>()
        ),
    }
}

fn main() -> ExitCode {
    let mut solves = Vec::new();
    let results = [
        criterion(1, "oracle agreement", || oracle_agreement(&mut solves)),
        criterion(2, "concentric limit", concentric_limit),
        criterion(3, "thin-gap lower bound", thin_gap_bound),
        criterion(4, "monotonicity in t", monotonicity),
        criterion(5, "recurrence lemmas", lemma_checks),
        criterion(6, "eigenfunction residuals", || eigenfunction_residuals(&solves)),
        criterion(7, "special functions", special_functions),
        criterion(8, "geometry", geometry_suite),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    // report-only by default; set ACCEPTANCE_STRICT=1 to turn a FAIL line into a nonzero exit
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if passed == results.len() || !strict {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
