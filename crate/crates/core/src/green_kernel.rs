//! Fractional Green kernel k_{a,N}(rho) = (1/Gamma(a/2)) int_0^inf p_{t,N}(rho) t^{a/2-1} dt.
//!
//! The time integral is taken in u = ln t with the trapezoid rule, which
//! converges geometrically here because the integrand decays double
//! exponentially at both ends. Contributions from t < 1 and t >= 1 are
//! tracked separately. For even N the order of integration is swapped so
//! that the inner time integral has an explicit integrand.

use crate::error::{domain, Error, Result};
use crate::heat_kernel::{bracket_coefficients, HeatEvalOptions};
use crate::quadrature::{gauss_kronrod, gauss_legendre, tanh_sinh};
use crate::special::{ln_gamma, ln_sinh, riesz_constant, sphere_area};
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    n: usize,
    alpha: f64,
}

impl KernelSpec {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if !(2..=25).contains(&n) {
            return domain(format!("dimension must lie in [2, 25], got {n}"));
        }
        if !(alpha > 0.0 && alpha < n as f64) {
            return domain(format!("alpha must lie in (0, N) = (0, {n}), got {alpha}"));
        }
        Ok(Self { n, alpha })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Leading small-distance constant: k(rho) ~ c rho^{alpha - N}.
    pub fn riesz_constant(&self) -> f64 {
        riesz_constant(self.n, self.alpha)
    }
}

/// Green-kernel value with the short/long time decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenEval {
    pub value: f64,
    pub error: f64,
    /// Contribution of t in (0, 1).
    pub short_time: f64,
    /// Contribution of t in [1, inf).
    pub long_time: f64,
}

/// int sum_j c_j exp(ln_pref - a t - rho^2/4t) t^{nu - j} dt/t over t > 0.
struct TimeIntegral<'a> {
    coeffs: &'a [f64],
    ln_pref: f64,
    a: f64,
    nu: f64,
    rho: f64,
}

impl TimeIntegral<'_> {
    fn integrand(&self, u: f64) -> (f64, f64) {
        let t = u.exp();
        let base = self.ln_pref - self.a * t - self.rho * self.rho / (4.0 * t);
        let mut v = 0.0;
        let mut av = 0.0;
        for (j, c) in self.coeffs.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            let x = c * (base + (self.nu - j as f64) * u).exp();
            v += x;
            av += x.abs();
        }
        (v, av)
    }

    fn evaluate(&self, tol: f64, context: &str) -> Result<GreenEval> {
        // dominant exponent: -a t - rho^2/4t + (nu - m) u
        let m = self.coeffs.len() as f64 - 1.0;
        let e = self.nu - m;
        let d = e * e + self.a * self.rho * self.rho;
        let t_star = if e >= 0.0 {
            (e + d.sqrt()) / (2.0 * self.a)
        } else {
            0.5 * self.rho * self.rho / (-e + d.sqrt())
        };
        let t_star = if t_star > 0.0 { t_star } else { 1.0 };
        let curv = self.a * t_star + self.rho * self.rho / (4.0 * t_star);
        let h0 = (0.5f64).min(0.5 / curv.sqrt().max(1e-12));
        // u = 0 is kept on the lattice so the t < 1 / t >= 1 split is exact
        let k0 = (t_star.ln() / h0).round();
        let u0 = k0 * h0;

        let mut nodes: Vec<(f64, f64, f64)> = Vec::new();
        let (g0, a0) = self.integrand(u0);
        let mut peak = a0;
        nodes.push((u0, g0, a0));
        for dir in [-1.0, 1.0] {
            let mut k = 1;
            let mut quiet = 0;
            loop {
                let u = (k0 + dir * k as f64) * h0;
                let (g, a) = self.integrand(u);
                peak = peak.max(a);
                nodes.push((u, g, a));
                if a <= 1e-22 * peak {
                    quiet += 1;
                    if quiet >= 2 {
                        break;
                    }
                } else {
                    quiet = 0;
                }
                k += 1;
                if k > 20000 {
                    return Err(Error::Quadrature {
                        context: format!("{context}: time integrand does not decay"),
                        achieved: f64::INFINITY,
                        requested: tol,
                    });
                }
            }
        }
        nodes.sort_by(|x, y| x.0.total_cmp(&y.0));
        let u_lo = nodes[0].0;
        let u_hi = nodes[nodes.len() - 1].0;

        let split = |ns: &[(f64, f64, f64)]| -> (f64, f64, f64) {
            let mut p = 0.0;
            let mut q = 0.0;
            let mut a = 0.0;
            for (u, g, ab) in ns {
                if *u == 0.0 {
                    p += 0.5 * g;
                    q += 0.5 * g;
                } else if *u < 0.0 {
                    p += g;
                } else {
                    q += g;
                }
                a += ab;
            }
            (p, q, a)
        };
        let mut h = h0;
        let (mut sp, mut sq, mut sa) = split(&nodes);
        let mut prev = (sp * h, sq * h);
        let mut last_diff = f64::INFINITY;
        for level in 0..12 {
            let count = ((u_hi - u_lo) / h).round() as usize;
            let mut mid = Vec::with_capacity(count);
            for k in 0..count {
                let u = u_lo + (k as f64 + 0.5) * h;
                let (g, a) = self.integrand(u);
                mid.push((u, g, a));
            }
            let (p, q, a) = split(&mid);
            sp += p;
            sq += q;
            sa += a;
            h *= 0.5;
            let cur = (sp * h, sq * h);
            let total = cur.0 + cur.1;
            let diff = (total - prev.0 - prev.1).abs();
            let round = 8.0 * f64::EPSILON * sa * h;
            let err = diff + round;
            prev = cur;
            last_diff = diff;
            if level >= 1 && diff <= tol * total.abs() {
                if !(total > 0.0) {
                    return Err(Error::Numeric(format!("{context}: non-positive result {total:e}")));
                }
                return Ok(GreenEval { value: total, error: err, short_time: cur.0, long_time: cur.1 });
            }
        }
        let total = prev.0 + prev.1;
        Err(Error::Quadrature {
            context: context.to_string(),
            achieved: last_diff / total.abs().max(f64::MIN_POSITIVE),
            requested: tol,
        })
    }
}

fn odd_prefactor(m: usize) -> f64 {
    let mf = m as f64;
    -(mf + 1.0) * LN_2 - (mf + 0.5) * PI.ln()
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return domain(format!("green kernel needs rho > 0, got {rho}"));
    }
    Ok(())
}

fn odd_green(spec: &KernelSpec, rho: f64, tol: f64) -> Result<GreenEval> {
    let m = (spec.n - 1) / 2;
    let c = bracket_coefficients(m, rho);
    let nm1 = (spec.n - 1) as f64;
    TimeIntegral {
        coeffs: &c,
        ln_pref: odd_prefactor(m) - ln_gamma(0.5 * spec.alpha),
        a: nm1 * nm1 / 4.0,
        nu: 0.5 * spec.alpha - 0.5,
        rho,
    }
    .evaluate(tol, "green kernel time integral")
}

/// Inner time integral for even N at radius r; returns (total, short part).
fn even_inner(spec: &KernelSpec, r: f64, tol: f64) -> Result<GreenEval> {
    let m = spec.n / 2;
    let c = bracket_coefficients(m, r);
    let nm1 = (spec.n - 1) as f64;
    TimeIntegral {
        coeffs: &c,
        ln_pref: -(m as f64 + 0.5) * (2.0 * PI).ln() - ln_gamma(0.5 * spec.alpha),
        a: nm1 * nm1 / 4.0,
        nu: 0.5 * spec.alpha - 0.5,
        rho: r,
    }
    .evaluate(tol, "green kernel inner time integral")
}

fn even_green(spec: &KernelSpec, rho: f64, opts: &HeatEvalOptions, want_split: bool) -> Result<GreenEval> {
    let tol = opts.quad_tolerance;
    let inner_tol = 0.01 * tol;
    let ch = rho.cosh();
    let w1 = (2.0 * (rho + 0.5).sinh() * 0.5f64.sinh()).sqrt();
    let delta = 70.0 / (spec.n - 1) as f64;
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let pick = |g: Result<GreenEval>, short: bool| -> f64 {
        match g {
            Ok(v) => {
                if short {
                    v.short_time
                } else {
                    v.value
                }
            }
            Err(e) => {
                failure.lock().unwrap().get_or_insert(e);
                0.0
            }
        }
    };
    let run = |short: bool| -> Result<(f64, f64)> {
        let near = gauss_kronrod(
            |w| {
                let r = if w == 0.0 { rho } else { (ch + w * w).acosh().max(rho) };
                2.0 * pick(even_inner(spec, r, inner_tol), short)
            },
            0.0,
            w1,
            0.0,
            0.1 * tol,
            opts.max_subdivisions,
        )?;
        let far = gauss_kronrod(
            |r| {
                let ls = ln_sinh(r) - 0.5 * (LN_2 + ln_sinh(0.5 * (r + rho)) + ln_sinh(0.5 * (r - rho)));
                ls.exp() * pick(even_inner(spec, r, inner_tol), short)
            },
            rho + 1.0,
            rho + 1.0 + delta,
            0.0,
            0.1 * tol,
            opts.max_subdivisions,
        )?;
        Ok((near.value + far.value, near.error + far.error))
    };
    let (total, err) = run(false)?;
    if let Some(e) = failure.lock().unwrap().take() {
        return Err(e);
    }
    let short = if want_split { run(true)?.0 } else { f64::NAN };
    let err = err + inner_tol * total.abs();
    if !(total > 0.0) || err > tol * total {
        return Err(Error::Quadrature {
            context: format!("even-dimension green kernel at rho={rho}"),
            achieved: err / total.abs().max(f64::MIN_POSITIVE),
            requested: tol,
        });
    }
    Ok(GreenEval { value: total, error: err, short_time: short, long_time: total - short })
}

/// Green kernel value with error estimate and the t < 1 / t >= 1 split.
pub fn green_eval_detailed(spec: &KernelSpec, rho: f64, opts: &HeatEvalOptions) -> Result<GreenEval> {
    check_rho(rho)?;
    opts.validate()?;
    if spec.n % 2 == 1 {
        odd_green(spec, rho, opts.quad_tolerance)
    } else {
        even_green(spec, rho, opts, true)
    }
}

pub fn green_eval(spec: &KernelSpec, rho: f64, opts: &HeatEvalOptions) -> Result<f64> {
    check_rho(rho)?;
    opts.validate()?;
    if spec.n % 2 == 1 {
        Ok(odd_green(spec, rho, opts.quad_tolerance)?.value)
    } else {
        Ok(even_green(spec, rho, opts, false)?.value)
    }
}

/// Radial derivative dk/drho.
///
/// Odd N integrates e^{Nt} p_{t,N+2} against t^{a/2-1}; even N uses a
/// fourth-order central difference.
pub fn green_derivative(spec: &KernelSpec, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let opts = HeatEvalOptions::default();
    if spec.n % 2 == 1 {
        let m = (spec.n - 1) / 2;
        let c = bracket_coefficients(m + 1, rho);
        let nm1 = (spec.n - 1) as f64;
        let g = TimeIntegral {
            coeffs: &c,
            ln_pref: (2.0 * PI).ln() + odd_prefactor(m + 1) - ln_gamma(0.5 * spec.alpha),
            a: nm1 * nm1 / 4.0,
            nu: 0.5 * spec.alpha - 0.5,
            rho,
        }
        .evaluate(opts.quad_tolerance, "green derivative time integral")?;
        Ok(-(g.value.ln() + ln_sinh(rho)).exp())
    } else {
        let h = (1e-3 * rho).max(1e-4).min(0.5 * rho);
        let f = |x: f64| green_eval(spec, x, &opts);
        let d = (-f(rho + 2.0 * h)? + 8.0 * f(rho + h)? - 8.0 * f(rho - h)? + f(rho - 2.0 * h)?) / (12.0 * h);
        Ok(d)
    }
}

/// Upper bound for k on [rho0, inf) of the form C (sinh rho0)^{-(N - alpha)}.
///
/// C is 1.01 times the largest sampled value of k(rho) sinh^{N-alpha}(rho)
/// over rho >= rho0.
pub fn green_tail_bound(spec: &KernelSpec, rho0: f64) -> Result<f64> {
    if spec.alpha < 1.0 {
        return Err(Error::Unsupported(format!(
            "tail bound of the form C sinh^-(N-alpha) needs alpha >= 1, got {}",
            spec.alpha
        )));
    }
    if !(rho0 >= 1.0 && rho0.is_finite()) {
        return domain(format!("tail bound needs rho0 >= 1, got {rho0}"));
    }
    let opts = HeatEvalOptions::default();
    let beta = spec.n as f64 - spec.alpha;
    let mut c: f64 = 0.0;
    let mut samples = vec![rho0];
    // fixed lattice so that the sampled supremum is monotone in rho0
    let start = (rho0 / 0.25).ceil() as usize;
    samples.extend((start..start + 160).map(|k| 0.25 * k as f64));
    for rho in samples {
        let k = green_eval(spec, rho, &opts)?;
        c = c.max((k.ln() + beta * ln_sinh(rho)).exp());
    }
    Ok(1.01 * c * (-beta * ln_sinh(rho0)).exp())
}

/// Uniformly spaced samples of a smooth function with quintic interpolation.
#[derive(Debug, Clone)]
struct Segment {
    x0: f64,
    h: f64,
    vals: Vec<f64>,
}

impl Segment {
    fn eval(&self, x: f64) -> f64 {
        let n = self.vals.len();
        let s = (x - self.x0) / self.h;
        let i = s.floor() as isize;
        let start = (i - 2).clamp(0, n as isize - 6) as usize;
        let t = s - start as f64;
        let mut out = 0.0;
        for j in 0..6 {
            let mut w = 1.0;
            for k in 0..6 {
                if k != j {
                    w *= (t - k as f64) / (j as f64 - k as f64);
                }
            }
            out += w * self.vals[start + j];
        }
        out
    }

    fn nodes(&self) -> Vec<f64> {
        (0..self.vals.len()).map(|i| self.x0 + self.h * i as f64).collect()
    }
}

/// N = 3 shell integrals K(d) = int_d^inf k(tau) sinh(tau) d tau.
#[derive(Debug, Clone)]
struct ShellTable {
    seg_a: Segment,
    seg_b: Segment,
    rho_lo: f64,
    rho_hi: f64,
    /// K(rho_lo), g(rho_lo) = k sinh at rho_lo, for the analytic piece below.
    k_lo: f64,
    g_lo: f64,
    tail_slope: f64,
    alpha: f64,
}

/// Memoized interpolation table of ln k on [rho_lo, rho_hi].
#[derive(Debug, Clone)]
pub struct KernelTable {
    spec: KernelSpec,
    rho_lo: f64,
    rho_hi: f64,
    seg_a: Segment,
    seg_b: Segment,
    interp_error: f64,
    tail_slope: f64,
    shell: Option<ShellTable>,
}

const TABLE_RHO_LO: f64 = 1e-8;

fn eval_ln_k(spec: &KernelSpec, rhos: &[f64]) -> Result<Vec<f64>> {
    let opts = HeatEvalOptions { quad_tolerance: 1e-12, max_subdivisions: 400 };
    rhos.par_iter()
        .map(|&r| green_eval(spec, r, &opts).map(f64::ln))
        .collect()
}

fn refine(spec: &KernelSpec, x0: f64, x1: f64, h0: f64, tol: f64, to_rho: fn(f64) -> f64) -> Result<(Segment, f64)> {
    let mut n = (((x1 - x0) / h0).ceil() as usize).max(6);
    let mut seg = Segment { x0, h: (x1 - x0) / n as f64, vals: Vec::new() };
    let rhos: Vec<f64> = seg.nodes_for(n).into_iter().map(to_rho).collect();
    seg.vals = eval_ln_k(spec, &rhos)?;
    loop {
        let mids: Vec<f64> = (0..n).map(|i| x0 + seg.h * (i as f64 + 0.5)).collect();
        let rhos: Vec<f64> = mids.iter().map(|&x| to_rho(x)).collect();
        let actual = eval_ln_k(spec, &rhos)?;
        let err = mids
            .iter()
            .zip(&actual)
            .map(|(&x, a)| (seg.eval(x) - a).abs())
            .fold(0.0, f64::max);
        let mut vals = Vec::with_capacity(2 * n + 1);
        for i in 0..n {
            vals.push(seg.vals[i]);
            vals.push(actual[i]);
        }
        vals.push(seg.vals[n]);
        n *= 2;
        seg = Segment { x0, h: (x1 - x0) / n as f64, vals };
        if err < tol {
            // the merged table is finer than the one just tested; quintic
            // interpolation error shrinks by about 2^6
            return Ok((seg, err / 64.0));
        }
        if n > 1 << 18 {
            return Err(Error::Quadrature {
                context: "kernel table refinement".into(),
                achieved: err,
                requested: tol,
            });
        }
    }
}

impl Segment {
    fn nodes_for(&self, n: usize) -> Vec<f64> {
        (0..=n).map(|i| self.x0 + self.h * i as f64).collect()
    }
}

fn gl8() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(8))
}

fn gl_composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, pieces: usize) -> f64 {
    let (x, w) = gl8();
    let h = (b - a) / pieces as f64;
    let mut s = 0.0;
    for p in 0..pieces {
        let c = a + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(w) {
            s += wi * f(c + 0.5 * h * xi);
        }
    }
    0.5 * h * s
}

impl KernelTable {
    /// Build a table covering (0, rho_hi] with interpolation error below `tol` in ln k.
    pub fn build(spec: KernelSpec, rho_hi: f64, tol: f64) -> Result<Self> {
        if !(rho_hi > 2.0 && rho_hi.is_finite()) {
            return domain(format!("table range must exceed 2, got {rho_hi}"));
        }
        if !(tol > 0.0) {
            return domain("table tolerance must be positive");
        }
        let (seg_a, ea) = refine(&spec, TABLE_RHO_LO.ln(), 0.0, 0.2, tol, f64::exp)?;
        let (seg_b, eb) = refine(&spec, 1.0, rho_hi, 0.2, tol, |x| x)?;
        let nb = seg_b.vals.len();
        let tail_slope = (seg_b.vals[nb - 1] - seg_b.vals[nb - 2]) / seg_b.h;
        let mut table = Self {
            spec,
            rho_lo: TABLE_RHO_LO,
            rho_hi,
            seg_a,
            seg_b,
            interp_error: ea.max(eb),
            tail_slope,
            shell: None,
        };
        if spec.n == 3 {
            table.shell = Some(table.build_shell());
        }
        Ok(table)
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_hi
    }

    /// Estimated interpolation error in ln k.
    pub fn interpolation_error(&self) -> f64 {
        self.interp_error
    }

    pub fn node_count(&self) -> usize {
        self.seg_a.vals.len() + self.seg_b.vals.len()
    }

    pub fn ln_eval(&self, rho: f64) -> f64 {
        if rho < self.rho_lo {
            self.seg_a.vals[0] + (self.spec.alpha - self.spec.n as f64) * (rho.ln() - self.rho_lo.ln())
        } else if rho < 1.0 {
            self.seg_a.eval(rho.ln())
        } else if rho <= self.rho_hi {
            self.seg_b.eval(rho)
        } else {
            self.seg_b.vals[self.seg_b.vals.len() - 1] + self.tail_slope * (rho - self.rho_hi)
        }
    }

    pub fn eval(&self, rho: f64) -> f64 {
        self.ln_eval(rho).exp()
    }

    fn build_shell(&self) -> ShellTable {
        let g = |tau: f64| (self.ln_eval(tau) + ln_sinh(tau)).exp();
        // segment B, backwards from rho_hi
        let nb = self.seg_b.vals.len();
        let xb = self.seg_b.nodes();
        let gb_end = g(self.rho_hi);
        let gb_prev = g(self.rho_hi - self.seg_b.h);
        let tail_slope = (gb_end.ln() - gb_prev.ln()) / self.seg_b.h;
        let mut kb = vec![0.0; nb];
        kb[nb - 1] = gb_end / (-tail_slope);
        for i in (0..nb - 1).rev() {
            kb[i] = kb[i + 1] + gl_composite(g, xb[i], xb[i + 1], 1);
        }
        // segment A in x = ln tau, backwards from tau = 1
        let na = self.seg_a.vals.len();
        let xa = self.seg_a.nodes();
        let mut ka = vec![0.0; na];
        ka[na - 1] = kb[0];
        for i in (0..na - 1).rev() {
            ka[i] = ka[i + 1] + gl_composite(|x| g(x.exp()) * x.exp(), xa[i], xa[i + 1], 1);
        }
        ShellTable {
            seg_a: Segment { x0: self.seg_a.x0, h: self.seg_a.h, vals: ka.iter().map(|v| v.ln()).collect() },
            seg_b: Segment { x0: self.seg_b.x0, h: self.seg_b.h, vals: kb.iter().map(|v| v.ln()).collect() },
            rho_lo: self.rho_lo,
            rho_hi: self.rho_hi,
            k_lo: ka[0],
            g_lo: g(self.rho_lo),
            tail_slope,
            alpha: self.spec.alpha,
        }
    }

    /// int_lo^hi k(tau) sinh(tau) d tau, accurate also when hi - lo is small.
    fn shell_integral(&self, lo: f64, hi: f64) -> f64 {
        let sh = self.shell.as_ref().expect("shell table exists for N = 3");
        let g = |tau: f64| (self.ln_eval(tau) + ln_sinh(tau)).exp();
        if hi <= 1.0 {
            let mut total = 0.0;
            let mut lo = lo;
            if lo < sh.rho_lo {
                let b = hi.min(sh.rho_lo);
                total += sh.below(lo) - sh.below(b);
                lo = b;
            }
            if hi > lo {
                let (xl, xh) = (lo.ln(), hi.ln());
                let pieces = (((xh - xl) / 0.5).ceil() as usize).max(1);
                total += gl_composite(|x| g(x.exp()) * x.exp(), xl, xh, pieces);
            }
            return total;
        }
        let mn = 0.5 * (hi - lo);
        if lo > 0.0 && mn < 1.0 && hi <= 1.5 * lo {
            let pieces = (((hi - lo) / 0.25).ceil() as usize).max(1);
            return gl_composite(g, lo, hi, pieces);
        }
        sh.eval(lo) - sh.eval(hi)
    }

    /// Spherical average A(r, s) = omega_{N-2} int_0^pi k(d(r,s,theta)) sin^{N-2} theta d theta.
    ///
    /// `diff` is |r - s| supplied separately for accuracy; `diff = 0`
    /// requires alpha > 1 (the average diverges otherwise).
    pub fn sphere_average(&self, r: f64, s: f64, diff: f64) -> Result<f64> {
        if !(r > 0.0 && s > 0.0) {
            return domain("sphere average needs r, s > 0");
        }
        if diff == 0.0 && self.spec.alpha <= 1.0 {
            return domain("sphere average diverges on the diagonal for alpha <= 1");
        }
        let ls = ln_sinh(r) + ln_sinh(s);
        if self.shell.is_some() {
            let v = self.shell_integral(diff, r + s);
            return Ok(2.0 * PI * (v.ln() - ls).exp());
        }
        let n = self.spec.n;
        let f = |theta: f64| {
            let d = crate::geometry::distance_from_radii_diff(r, s, diff, theta);
            self.eval(d) * theta.sin().powi(n as i32 - 2)
        };
        let theta_w = diff / (0.5 * ls).exp();
        let v = if diff == 0.0 {
            tanh_sinh(
                |_, da, db| {
                    let theta = if da < db { da } else { PI - db };
                    let d = crate::geometry::distance_from_radii_diff(r, s, 0.0, theta);
                    self.eval(d) * theta.sin().powi(n as i32 - 2)
                },
                0.0,
                PI,
                1e-11,
            )
            .value
        } else if theta_w < 0.5 {
            let tau_max = (PI / theta_w).asinh();
            gauss_kronrod(
                |tau| {
                    let theta = theta_w * tau.sinh();
                    f(theta) * theta_w * tau.cosh()
                },
                0.0,
                tau_max,
                0.0,
                1e-11,
                400,
            )?
            .value
        } else {
            gauss_kronrod(f, 0.0, PI, 0.0, 1e-11, 400)?.value
        };
        Ok(sphere_area(n - 2) * v)
    }
}

impl ShellTable {
    /// K(d) for d below rho_lo, from the power-law form of k sinh.
    fn below(&self, d: f64) -> f64 {
        let x = d / self.rho_lo;
        let c = self.g_lo * self.rho_lo;
        if (self.alpha - 1.0).abs() < 1e-12 {
            self.k_lo + c * (1.0 / x).ln()
        } else {
            self.k_lo + c * (1.0 - x.powf(self.alpha - 1.0)) / (self.alpha - 1.0)
        }
    }

    fn eval(&self, d: f64) -> f64 {
        if d < self.rho_lo {
            self.below(d)
        } else if d < 1.0 {
            self.seg_a.eval(d.ln()).exp()
        } else if d <= self.rho_hi {
            self.seg_b.eval(d).exp()
        } else {
            (self.seg_b.vals[self.seg_b.vals.len() - 1] + self.tail_slope * (d - self.rho_hi)).exp()
        }
    }
}

/// Shared table for `spec` covering at least [0, rho_hi].
pub fn kernel_table(spec: KernelSpec, rho_hi: f64) -> Result<Arc<KernelTable>> {
    type Key = (usize, u64, u64);
    type Slot = Arc<OnceLock<std::result::Result<Arc<KernelTable>, Error>>>;
    static TABLES: OnceLock<Mutex<HashMap<Key, Slot>>> = OnceLock::new();
    let hi = (rho_hi / 30.0).ceil().max(1.0) * 30.0;
    let key = (spec.n, spec.alpha.to_bits(), hi.to_bits());
    let cell = {
        let mut map = TABLES.get_or_init(|| Mutex::new(HashMap::new())).lock().unwrap();
        map.entry(key).or_default().clone()
    };
    cell.get_or_init(|| KernelTable::build(spec, hi, 1e-10).map(Arc::new)).clone()
}
