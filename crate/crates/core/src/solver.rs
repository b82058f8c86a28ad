//! Ground states by descent on the scale-invariant quotient
//! I(u) = ||u||_lambda^2 / J(u)^{1/p}.
//!
//! Search directions are Sobolev gradients d = K_lambda^{-1} G, where G is
//! the (rescaled) gradient covector. At step length one the update reduces
//! to u <- (Q/J) K_lambda^{-1} N(u), which keeps nonnegative iterates
//! nonnegative because K_lambda is an M-matrix. Every iterate is rescaled
//! onto the Nehari manifold.

use crate::choquard_energy::{parts, quotient_of, ChoquardFunctional, HomogeneousTerm, ProblemSpec};
use crate::error::{domain, Error, Result};
use crate::radial_field::{RadialGrid, RadialProfile, Tridiagonal, DEFAULT_NODES, DEFAULT_R_MAX};
use std::sync::Arc;

const ARMIJO_C1: f64 = 1e-4;
const MIN_STEP: f64 = 1e-12;
const MONOTONE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DescentOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step0: f64,
    pub backtrack: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self { max_iters: 2000, grad_tol: 1e-6, step0: 1.0, backtrack: 0.5 }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct DescentOutcome {
    pub u: Vec<f64>,
    pub quotient: f64,
    pub iterations: usize,
    pub rel_grad: f64,
}

fn normalize(k: &Tridiagonal, term: &dyn HomogeneousTerm, u: &mut [f64]) -> Result<()> {
    let pt = parts(k, term, u)?;
    if !(pt.j > 0.0 && pt.q > 0.0) {
        return domain("iterate lost its mass; cannot rescale");
    }
    let t = (pt.q / pt.j).powf(1.0 / (2.0 * term.degree() - 2.0));
    u.iter_mut().for_each(|x| *x *= t);
    Ok(())
}

/// Minimize Q(u) / J(u)^{1/p} over nonnegative u, starting from `seed`.
pub(crate) fn descend(
    k: &Tridiagonal,
    term: &dyn HomogeneousTerm,
    seed: Vec<f64>,
    opts: &DescentOptions,
) -> Result<DescentOutcome> {
    let n = k.diag.len();
    let p = term.degree();
    let mut u = seed;
    u[n] = 0.0;
    u.iter_mut().for_each(|x| *x = x.max(0.0));
    normalize(k, term, &mut u)?;
    let mut pt = parts(k, term, &u)?;
    let mut value = quotient_of(&pt, p)?;
    let mut rel_grad = f64::INFINITY;
    for it in 0..opts.max_iters {
        let ratio = pt.q / pt.j;
        let g: Vec<f64> = pt.ku.iter().zip(&pt.cov).map(|(a, b)| a - ratio * b).collect();
        let d = k.solve(&g)?;
        let gd: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        rel_grad = 2.0 * (gd.max(0.0) / pt.q).sqrt();
        if rel_grad < opts.grad_tol {
            return Ok(DescentOutcome { u, quotient: value, iterations: it, rel_grad });
        }
        let slope = 2.0 * gd / pt.j.powf(1.0 / p);
        let mut theta = opts.step0;
        let accepted = loop {
            let mut cand: Vec<f64> = u.iter().zip(&d).map(|(a, b)| (a - theta * b).max(0.0)).collect();
            cand.push(0.0);
            let cp = parts(k, term, &cand)?;
            if cp.j > 0.0 {
                let cv = quotient_of(&cp, p)?;
                if cv <= value - ARMIJO_C1 * theta * slope && cv < value {
                    break Some(cand);
                }
            }
            theta *= opts.backtrack;
            if theta < MIN_STEP {
                break None;
            }
        };
        match accepted {
            Some(mut next) => {
                normalize(k, term, &mut next)?;
                pt = parts(k, term, &next)?;
                value = quotient_of(&pt, p)?;
                u = next;
            }
            None => {
                return Err(Error::NoConvergence { iterations: it, grad_norm: rel_grad, last_iterate: u });
            }
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iters, grad_norm: rel_grad, last_iterate: u })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SeedProfile {
    /// e^{-rho^2}
    GaussianBump,
    /// e^{-(N-1) rho}
    Exponential,
    /// Samples (rho_k, v_k), linearly interpolated onto the grid.
    UserSupplied { rhos: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub problem: ProblemSpec,
    pub r_max: f64,
    pub nodes: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step0: f64,
    pub backtrack_factor: f64,
    pub seed_profile: SeedProfile,
}

impl SolverConfig {
    pub fn new(problem: ProblemSpec) -> Self {
        let d = DescentOptions::default();
        Self {
            problem,
            r_max: DEFAULT_R_MAX,
            nodes: DEFAULT_NODES,
            max_iters: d.max_iters,
            grad_tol: d.grad_tol,
            step0: d.step0,
            backtrack_factor: d.backtrack,
            seed_profile: SeedProfile::GaussianBump,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return domain(format!("grad_tol must be positive, got {}", self.grad_tol));
        }
        if self.max_iters < 1 {
            return domain("max_iters must be at least 1");
        }
        if !(self.step0 > 0.0 && self.step0 <= 1.0) {
            return domain(format!("step0 must lie in (0, 1], got {}", self.step0));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return domain(format!("backtrack factor must lie in (0, 1), got {}", self.backtrack_factor));
        }
        if let SeedProfile::UserSupplied { values, .. } = &self.seed_profile {
            if values.iter().any(|v| *v < 0.0) {
                return domain("seed profile must be nonnegative");
            }
        }
        self.problem.require_subcritical()
    }

    fn descent_options(&self) -> DescentOptions {
        DescentOptions {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            step0: self.step0,
            backtrack: self.backtrack_factor,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundStateReport {
    /// Nehari-normalized profile.
    pub profile: RadialProfile,
    pub zeta: f64,
    pub nehari_defect: f64,
    pub el_residual: f64,
    pub rel_grad: f64,
    pub iterations: usize,
    pub monotone: bool,
    /// min u over rho < R_max / 2 is positive
    pub positive: bool,
    /// Share of the L^2 mass in rho > 0.9 R_max.
    pub tail_mass: f64,
    /// Slope of ln u on [R_max/2, 3R_max/4]; informational.
    pub decay_slope: Option<f64>,
    /// Kernel bound for the truncated far field, when available.
    pub tail_bound: Option<f64>,
}

impl GroundStateReport {
    /// Converged run whose invariant flags all hold.
    pub fn passes(&self) -> bool {
        self.monotone && self.positive && self.nehari_defect < 1e-10
    }
}

fn seed_values(grid: &RadialGrid, seed: &SeedProfile) -> Result<Vec<f64>> {
    let nm1 = (grid.dim() - 1) as f64;
    match seed {
        SeedProfile::GaussianBump => Ok(grid.nodes().iter().map(|r| (-r * r).exp()).collect()),
        SeedProfile::Exponential => Ok(grid.nodes().iter().map(|r| (-nm1 * r).exp()).collect()),
        SeedProfile::UserSupplied { rhos, values } => grid.interpolate(rhos, values),
    }
}

/// Strict decrease wherever u is above round-off; increases never exceed it.
pub fn is_strictly_decreasing(u: &[f64]) -> bool {
    let top = u.iter().cloned().fold(0.0, f64::max);
    let floor = MONOTONE_TOL * top;
    u.windows(2).all(|w| {
        if w[0] >= floor {
            w[1] < w[0]
        } else {
            w[1] - w[0] <= floor
        }
    })
}

fn decay_slope(grid: &RadialGrid, u: &[f64]) -> Option<f64> {
    let (a, b) = (0.5 * grid.r_max(), 0.75 * grid.r_max());
    let pts: Vec<(f64, f64)> = grid
        .nodes()
        .iter()
        .zip(u)
        .filter(|(r, v)| **r >= a && **r <= b && **v > 0.0)
        .map(|(r, v)| (*r, v.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let s = sxy / sxx;
    s.is_finite().then_some(s)
}

fn report(f: &ChoquardFunctional, out: DescentOutcome) -> Result<GroundStateReport> {
    let grid = f.grid().clone();
    let u = out.u;
    let w = grid.weights();
    let r_max = grid.r_max();
    let total: f64 = w.iter().zip(&u).map(|(a, b)| a * b * b).sum();
    let tail: f64 = grid
        .nodes()
        .iter()
        .zip(w)
        .zip(&u)
        .filter(|((r, _), _)| **r > 0.9 * r_max)
        .map(|((_, a), b)| a * b * b)
        .sum();
    let positive = grid.nodes().iter().zip(&u).filter(|(r, _)| **r < 0.5 * r_max).all(|(_, v)| *v > 0.0);
    Ok(GroundStateReport {
        zeta: f.quotient(&u)?,
        nehari_defect: f.nehari_defect(&u)?,
        el_residual: f.el_residual(&u)?,
        rel_grad: out.rel_grad,
        iterations: out.iterations,
        monotone: is_strictly_decreasing(&u),
        positive,
        tail_mass: tail / total,
        decay_slope: decay_slope(&grid, &u),
        tail_bound: f.convolution().tail_bound(),
        profile: RadialProfile::new(grid, u)?,
    })
}

/// Ground state for an already assembled functional.
pub fn solve_with(f: &ChoquardFunctional, cfg: &SolverConfig) -> Result<GroundStateReport> {
    cfg.validate()?;
    if f.spec() != &cfg.problem {
        return domain("functional and solver configuration describe different problems");
    }
    let seed = seed_values(f.grid(), &cfg.seed_profile)?;
    let out = descend(f.lambda_matrix(), &f.term(), seed, &cfg.descent_options())?;
    report(f, out)
}

pub fn solve_ground_state(cfg: &SolverConfig) -> Result<GroundStateReport> {
    cfg.validate()?;
    let grid = Arc::new(RadialGrid::new(cfg.problem.dim(), cfg.r_max, cfg.nodes)?);
    let f = ChoquardFunctional::new(grid, cfg.problem)?;
    solve_with(&f, cfg)
}

/// Gradient of I at u in the volume-weighted inner product.
pub fn quotient_gradient(u: &RadialProfile, spec: &ProblemSpec) -> Result<RadialProfile> {
    let f = ChoquardFunctional::new(u.grid().clone(), *spec)?;
    RadialProfile::new(u.grid().clone(), f.gradient(u.values())?)
}
