//! Hyperbolic heat kernel p_{t,N}(rho).
//!
//! Odd N uses the exact derivative recurrence in [`odd_poly`]; even N
//! integrates the odd-type bracket over r > rho after substituting
//! w^2 = cosh r - cosh rho. Near rho = 0 the bracket is computed from a
//! power series in cosh rho - 1, which is free of cancellation.

mod odd_poly;

pub use odd_poly::{Coeff, Monomial, OddKernelPolynomial};

use crate::error::{domain, Result};
use crate::quadrature::gauss_kronrod;
use crate::radial_field::RadialGrid;
use crate::special::ln_sinh;
use std::f64::consts::PI;
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatEvalOptions {
    pub quad_tolerance: f64,
    pub max_subdivisions: usize,
}

impl Default for HeatEvalOptions {
    fn default() -> Self {
        Self { quad_tolerance: 1e-10, max_subdivisions: 200 }
    }
}

impl HeatEvalOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.quad_tolerance > 0.0 && self.quad_tolerance <= 1e-2) {
            return domain(format!("quad_tolerance must lie in (0, 1e-2], got {}", self.quad_tolerance));
        }
        if self.max_subdivisions == 0 {
            return domain("max_subdivisions must be positive");
        }
        Ok(())
    }
}

const MAX_ORDER: usize = 12;
const SERIES_TERMS: usize = 60;
/// Below this radius the bracket comes from the series route.
const SERIES_SWITCH: f64 = 1.0;

fn polynomial(order: usize) -> &'static OddKernelPolynomial {
    static CACHE: [OnceLock<OddKernelPolynomial>; MAX_ORDER + 1] = [const { OnceLock::new() }; MAX_ORDER + 1];
    CACHE[order].get_or_init(|| OddKernelPolynomial::with_order(order, 2 * order + 1))
}

/// Taylor coefficients of acosh(1+x)^2 = sum_{n>=1} a_n x^n.
fn acosh_sq_series() -> &'static [f64; SERIES_TERMS + 1] {
    static A: OnceLock<[f64; SERIES_TERMS + 1]> = OnceLock::new();
    A.get_or_init(|| {
        let mut a = [0.0; SERIES_TERMS + 1];
        let mut b = 1.0;
        for (n, an) in a.iter_mut().enumerate().skip(1) {
            let nf = n as f64;
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            *an = 2.0 * sign * b / (nf * nf);
            b *= (nf + 1.0) / (2.0 * nf + 1.0);
        }
        a
    })
}

/// Bracket coefficients through complete Bell polynomials in the
/// derivatives of -acosh(1+x)^2 / 4t at x = cosh rho - 1.
fn series_coefficients(order: usize, rho: f64) -> Vec<f64> {
    let a = acosh_sq_series();
    let x = 2.0 * (0.5 * rho).sinh().powi(2);
    // phi^{(k)}(x) for k = 1..order
    let mut dphi = vec![0.0; order + 1];
    for (k, dk) in dphi.iter_mut().enumerate().skip(1) {
        let mut s = 0.0;
        let mut xp = 1.0;
        for n in k..=SERIES_TERMS {
            let mut ff = 1.0;
            for i in 0..k {
                ff *= (n - i) as f64;
            }
            s += a[n] * ff * xp;
            xp *= x;
        }
        *dk = s;
    }
    // B_n as polynomials in s = -1/(4t): B_{n+1} = sum_i C(n,i) B_{n-i} s phi^{(i+1)}
    let mut bell: Vec<Vec<f64>> = vec![vec![1.0]];
    for n in 0..order {
        let mut next = vec![0.0; n + 2];
        let mut binom = 1.0;
        for i in 0..=n {
            let prev = &bell[n - i];
            for (j, pj) in prev.iter().enumerate() {
                next[j + 1] += binom * pj * dphi[i + 1];
            }
            binom = binom * (n - i) as f64 / (i + 1) as f64;
        }
        bell.push(next);
    }
    let sign_m = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
    bell[order]
        .iter()
        .enumerate()
        .map(|(j, bj)| sign_m * bj * (-0.25f64).powi(j as i32))
        .collect()
}

/// Coefficients c_j(rho) with (-(1/sinh) d/drho)^m e^{-rho^2/4t}
/// = e^{-rho^2/4t} sum_j c_j t^{-j}.
pub fn bracket_coefficients(order: usize, rho: f64) -> Vec<f64> {
    if rho < SERIES_SWITCH {
        series_coefficients(order, rho)
    } else {
        polynomial(order).t_coefficients(rho)
    }
}

fn check_dim(n: usize) -> Result<()> {
    if !(2..=2 * MAX_ORDER + 1).contains(&n) {
        return domain(format!("dimension must lie in [2, {}], got {n}", 2 * MAX_ORDER + 1));
    }
    Ok(())
}

fn check_args(n: usize, t: f64, rho: f64) -> Result<()> {
    check_dim(n)?;
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("t must be positive and finite, got {t}"));
    }
    if !(rho >= 0.0 && rho.is_finite()) {
        return domain(format!("rho must be nonnegative and finite, got {rho}"));
    }
    Ok(())
}

/// sum_j c_j exp(base - (j + 1/2) ln t), evaluated term by term.
fn combine(c: &[f64], base: f64, t: f64) -> f64 {
    let lt = t.ln();
    c.iter()
        .enumerate()
        .filter(|(_, cj)| **cj != 0.0)
        .map(|(j, cj)| cj * (base - (j as f64 + 0.5) * lt).exp())
        .sum()
}

fn heat_odd(n: usize, t: f64, rho: f64) -> f64 {
    let m = (n - 1) / 2;
    let mf = m as f64;
    let ln_pref = -(mf + 1.0) * std::f64::consts::LN_2 - (mf + 0.5) * PI.ln();
    let nm1 = (n - 1) as f64;
    let base = ln_pref - nm1 * nm1 * t / 4.0 - rho * rho / (4.0 * t);
    combine(&bracket_coefficients(m, rho), base, t)
}

/// Scaled bracket: sum_j c_j(r) t^{-j} e^{-(r^2 - rho^2)/4t}.
fn scaled_bracket(m: usize, r: f64, rho: f64, t: f64) -> f64 {
    let c = bracket_coefficients(m, r);
    let lt = t.ln();
    let g = -(r - rho) * (r + rho) / (4.0 * t);
    c.iter()
        .enumerate()
        .filter(|(_, cj)| **cj != 0.0)
        .map(|(j, cj)| cj * (g - j as f64 * lt).exp())
        .sum()
}

fn heat_even(n: usize, t: f64, rho: f64, opts: &HeatEvalOptions) -> Result<f64> {
    let m = n / 2;
    let mf = m as f64;
    let tol = opts.quad_tolerance;
    // near piece: w in [0, W1] covers r in [rho, rho + 1]
    let ch = rho.cosh();
    let w1 = (2.0 * (rho + 0.5).sinh() * 0.5f64.sinh()).sqrt();
    let near = gauss_kronrod(
        |w| {
            let r = if w == 0.0 { rho } else { (ch + w * w).acosh().max(rho) };
            2.0 * scaled_bracket(m, r, rho, t)
        },
        0.0,
        w1,
        0.0,
        0.1 * tol,
        opts.max_subdivisions,
    )?;
    // far piece in r; cut where the integrand is below e^{-60} of its scale
    let a = 1.0 / (4.0 * t);
    let b = rho / (2.0 * t) + (mf - 0.5);
    let delta = 2.0 * 60.0 / (b + (b * b + 240.0 * a).sqrt());
    let mut total = near.value;
    let mut err = near.error;
    if delta > 1.0 {
        let far = gauss_kronrod(
            |r| {
                let ls = ln_sinh(r) - 0.5 * (std::f64::consts::LN_2 + ln_sinh(0.5 * (r + rho)) + ln_sinh(0.5 * (r - rho)));
                ls.exp() * scaled_bracket(m, r, rho, t)
            },
            rho + 1.0,
            rho + delta,
            0.0,
            0.1 * tol,
            opts.max_subdivisions,
        )?;
        total += far.value;
        err += far.error;
    }
    if !(total > 0.0) || err > tol * total.abs() {
        return Err(crate::Error::Quadrature {
            context: format!("even-dimension heat kernel at t={t}, rho={rho}"),
            achieved: err / total.abs().max(f64::MIN_POSITIVE),
            requested: tol,
        });
    }
    let nm1 = (n - 1) as f64;
    let ln_pref = -(mf + 0.5) * (2.0 * PI).ln() - 0.5 * t.ln() - nm1 * nm1 * t / 4.0 - rho * rho / (4.0 * t);
    Ok(ln_pref.exp() * total)
}

/// Heat kernel p_{t,N}(rho) on B^N.
pub fn heat_eval(n: usize, t: f64, rho: f64, opts: &HeatEvalOptions) -> Result<f64> {
    check_args(n, t, rho)?;
    opts.validate()?;
    if n % 2 == 1 {
        Ok(heat_odd(n, t, rho))
    } else {
        heat_even(n, t, rho, opts)
    }
}

/// Comparison envelope h_N(t, r).
pub fn heat_envelope(n: usize, t: f64, r: f64) -> Result<f64> {
    check_args(n, t, r)?;
    let nf = n as f64;
    let l = -0.5 * nf * (4.0 * PI * t).ln() - (nf - 1.0).powi(2) * t / 4.0 - (nf - 1.0) * r / 2.0 - r * r / (4.0 * t)
        + 0.5 * (nf - 3.0) * (1.0 + r + t).ln()
        + (1.0 + r).ln();
    Ok(l.exp())
}

/// On-diagonal value p_{t,N}(0).
pub fn heat_diag(n: usize, t: f64, opts: &HeatEvalOptions) -> Result<f64> {
    heat_eval(n, t, 0.0, opts)
}

/// Empirical envelope constants: (min, max) of p/h over the sample grid.
pub fn envelope_ratio_range(n: usize, ts: &[f64], rs: &[f64], opts: &HeatEvalOptions) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for &t in ts {
        for &r in rs {
            let q = heat_eval(n, t, r, opts)? / heat_envelope(n, t, r)?;
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    Ok((lo, hi))
}

/// Relative defect of p_{2t}(0) = omega_{N-1} int p_t(s)^2 sinh^{N-1}(s) ds
/// with the right side integrated on `grid`.
pub fn semigroup_defect(n: usize, t: f64, grid: &RadialGrid) -> Result<f64> {
    check_args(n, t, 0.0)?;
    if grid.dim() != n {
        return Err(crate::Error::DimensionMismatch { expected: n, got: grid.dim() });
    }
    let opts = HeatEvalOptions::default();
    let width = t.sqrt();
    let h = grid.max_spacing();
    if h > 0.25 * width {
        return Err(crate::Error::Numeric(format!(
            "grid spacing {h:.3e} does not resolve the heat kernel width {width:.3e}"
        )));
    }
    let mut sum = 0.0;
    let mut peak: f64 = 0.0;
    let mut last = 0.0;
    for (s, w) in grid.nodes().iter().zip(grid.weights()) {
        let p = heat_eval(n, t, *s, &opts)?;
        let v = w * p * p;
        sum += v;
        peak = peak.max(v);
        last = v;
    }
    if last > 1e-14 * peak {
        return Err(crate::Error::Numeric(format!(
            "grid radius {} truncates the heat kernel tail (edge/peak = {:.3e})",
            grid.r_max(),
            last / peak
        )));
    }
    let diag = heat_diag(n, 2.0 * t, &opts)?;
    Ok((diag - sum).abs() / diag)
}
