//! Command-line front end: `kernel`, `solve` and `verify`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 quadrature
//! failure, 4 solver non-convergence, 5 failed check.

use crate::choquard_energy::{
    conformal_hls_ratio, heat_diagonal_constant, hls_constant, sharp_hls_constant, ProblemSpec,
};
use crate::error::{Error, Result};
use crate::geometry::{BallPoint, GeodesicHypersurface};
use crate::green_kernel::{green_derivative, green_eval, KernelSpec};
use crate::heat_kernel::{heat_eval, semigroup_defect, HeatEvalOptions};
use crate::io::{atomic_write, flat_json, json_number, plot_script, profile_csv, table_csv, to_json_text};
use crate::radial_field::{
    discrete_spectral_bottom, lq_norm_slice, rayleigh_quotient, ConvolutionOperator, RadialGrid, RadialProfile,
};
use crate::solver::{solve_ground_state, GroundStateReport, SeedProfile, SolverConfig};
use crate::symmetry::{polarization_gap, SampledField};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_QUADRATURE: i32 = 3;
pub const EXIT_NO_CONVERGENCE: i32 = 4;
pub const EXIT_CHECK_FAILED: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "hyperchoq", version, about = "Kernels and Choquard ground states on hyperbolic space")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the heat or Green kernel as a function of rho.
    Kernel(KernelArgs),
    /// Compute a radial ground state.
    Solve(SolveArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelKind {
    Heat,
    Green,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum)]
    pub kind: KernelKind,
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub rho_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub rho_max: f64,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub quad_tol: f64,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a gnuplot script for the table.
    #[arg(long)]
    pub plot_script: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeedKind {
    Gaussian,
    Exponential,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = crate::radial_field::DEFAULT_R_MAX)]
    pub rmax: f64,
    #[arg(long, default_value_t = crate::radial_field::DEFAULT_NODES)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_iters: usize,
    #[arg(long, value_enum, default_value_t = SeedKind::Gaussian)]
    pub seed_profile: SeedKind,
    /// Initial profile as a `rho,value` table; overrides --seed-profile.
    #[arg(long)]
    pub seed_file: Option<PathBuf>,
    /// Profile CSV; the report goes next to it with extension .json.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub plot_script: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Hls,
    HeatSemigroup,
    Monotone,
    Polarization,
    Spectrum,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of random trials; each suite has its own default.
    #[arg(long)]
    pub trials: Option<usize>,
    /// JSON report; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) | Error::DimensionMismatch { .. } | Error::Unsupported(_) | Error::Parse(_) => EXIT_INVALID,
        Error::Quadrature { .. } | Error::Numeric(_) => EXIT_QUADRATURE,
        Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
        Error::Io(_) => EXIT_IO,
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("HYPERCHOQ_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| Error::Domain(format!("HYPERCHOQ_THREADS must be a positive integer, got {v:?}")))?;
    // a pool that already exists (repeated in-process runs) is kept
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parse `args` (program name first), run the command, return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let invocation = std::iter::once("hyperchoq".to_string())
        .chain(args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()))
        .collect::<Vec<_>>()
        .join(" ");
    let result = configure_threads().and_then(|_| match &cli.command {
        Command::Kernel(a) => cmd_kernel(a, &invocation),
        Command::Solve(a) => cmd_solve(a, &invocation),
        Command::Verify(a) => cmd_verify(a, &invocation),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => atomic_write(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn require<T>(v: Option<T>, msg: &str) -> Result<T> {
    v.ok_or_else(|| Error::Domain(msg.to_string()))
}

pub fn cmd_kernel(a: &KernelArgs, invocation: &str) -> Result<i32> {
    if a.points < 2 {
        return Err(Error::Domain("--points must be at least 2".into()));
    }
    if !(a.rho_min >= 0.0 && a.rho_max > a.rho_min && a.rho_max.is_finite()) {
        return Err(Error::Domain(format!("need 0 <= rho-min < rho-max, got {} and {}", a.rho_min, a.rho_max)));
    }
    let opts = HeatEvalOptions { quad_tolerance: a.quad_tol, ..Default::default() };
    opts.validate()?;
    let rhos: Vec<f64> = (0..a.points)
        .map(|i| a.rho_min + (a.rho_max - a.rho_min) * i as f64 / (a.points - 1) as f64)
        .collect();
    let values: Vec<f64> = match a.kind {
        KernelKind::Heat => {
            if a.alpha.is_some() {
                return Err(Error::Domain("--alpha applies to --kind green only".into()));
            }
            let t = require(a.t, "--kind heat needs --t")?;
            rhos.iter().map(|r| heat_eval(a.dim, t, *r, &opts)).collect::<Result<_>>()?
        }
        KernelKind::Green => {
            if a.t.is_some() {
                return Err(Error::Domain("--t applies to --kind heat only".into()));
            }
            let spec = KernelSpec::new(a.dim, require(a.alpha, "--kind green needs --alpha")?)?;
            if a.rho_min <= 0.0 {
                return Err(Error::Domain("the Green kernel is singular at rho = 0; use --rho-min > 0".into()));
            }
            rhos.iter().map(|r| green_eval(&spec, *r, &opts)).collect::<Result<_>>()?
        }
    };
    emit(a.out.as_deref(), &table_csv(invocation, &rhos, &values))?;
    if let Some(ps) = &a.plot_script {
        let csv = a.out.as_deref().unwrap_or(Path::new("-"));
        let title = match a.kind {
            KernelKind::Heat => "heat kernel",
            KernelKind::Green => "green kernel",
        };
        atomic_write(ps, plot_script(csv, title, true).as_bytes())?;
    }
    Ok(EXIT_OK)
}

fn report_path(out: &Path) -> PathBuf {
    if out.extension().is_some_and(|e| e == "csv") {
        out.with_extension("json")
    } else {
        let mut s = out.as_os_str().to_owned();
        s.push(".json");
        PathBuf::from(s)
    }
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn opt_number(x: Option<f64>) -> Value {
    x.map(json_number).unwrap_or(Value::Null)
}

fn report_json(invocation: &str, spec: &ProblemSpec, r: &GroundStateReport) -> Value {
    Value::Object(flat_json(
        invocation,
        vec![
            ("converged", Value::from(true)),
            ("dim", Value::from(spec.dim())),
            ("alpha", json_number(spec.alpha())),
            ("p", json_number(spec.p())),
            ("lambda", json_number(spec.lambda())),
            ("zeta", json_number(r.zeta)),
            ("nehari_defect", json_number(r.nehari_defect)),
            ("el_residual", json_number(r.el_residual)),
            ("rel_grad", json_number(r.rel_grad)),
            ("iterations", Value::from(r.iterations)),
            ("monotone", Value::from(r.monotone)),
            ("positive", Value::from(r.positive)),
            ("tail_mass", json_number(r.tail_mass)),
            ("decay_slope", opt_number(r.decay_slope)),
            ("tail_bound", opt_number(r.tail_bound)),
        ],
    ))
}

pub fn cmd_solve(a: &SolveArgs, invocation: &str) -> Result<i32> {
    let spec = ProblemSpec::new(a.dim, a.alpha, a.p, a.lambda)?;
    spec.require_subcritical()?;
    let mut cfg = SolverConfig::new(spec);
    cfg.r_max = a.rmax;
    cfg.nodes = a.nodes;
    cfg.grad_tol = a.tol;
    cfg.max_iters = a.max_iters;
    cfg.seed_profile = match (&a.seed_file, a.seed_profile) {
        (Some(path), _) => {
            let (rhos, values) = crate::io::parse_table_csv(&std::fs::read_to_string(path)?)?;
            SeedProfile::UserSupplied { rhos, values }
        }
        (None, SeedKind::Gaussian) => SeedProfile::GaussianBump,
        (None, SeedKind::Exponential) => SeedProfile::Exponential,
    };
    cfg.validate()?;
    let report_file = report_path(&a.out);
    match solve_ground_state(&cfg) {
        Ok(r) => {
            atomic_write(&a.out, profile_csv(invocation, &r.profile).as_bytes())?;
            atomic_write(&report_file, to_json_text(&report_json(invocation, &spec, &r)).as_bytes())?;
            if let Some(ps) = &a.plot_script {
                atomic_write(ps, plot_script(&a.out, "ground state", true).as_bytes())?;
            }
            if r.passes() {
                Ok(EXIT_OK)
            } else {
                eprintln!(
                    "error: invariant check failed (monotone={}, positive={}, nehari_defect={:e})",
                    r.monotone, r.positive, r.nehari_defect
                );
                Ok(EXIT_CHECK_FAILED)
            }
        }
        Err(Error::NoConvergence { iterations, grad_norm, last_iterate }) => {
            let grid = Arc::new(RadialGrid::new(a.dim, a.rmax, a.nodes)?);
            let partial = RadialProfile::new(grid, last_iterate.clone())?;
            atomic_write(&with_suffix(&a.out, ".partial"), profile_csv(invocation, &partial).as_bytes())?;
            let json = Value::Object(flat_json(
                invocation,
                vec![
                    ("converged", Value::from(false)),
                    ("iterations", Value::from(iterations)),
                    ("rel_grad", json_number(grad_norm)),
                ],
            ));
            atomic_write(&with_suffix(&report_file, ".partial"), to_json_text(&json).as_bytes())?;
            Err(Error::NoConvergence { iterations, grad_norm, last_iterate })
        }
        Err(e) => Err(e),
    }
}

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub suite: &'static str,
    pub check: String,
    pub pass: bool,
    pub measured: f64,
    pub threshold: f64,
    pub trials: usize,
}

impl CheckResult {
    fn to_json(&self, invocation: &str, seed: u64) -> Value {
        Value::Object(flat_json(
            invocation,
            vec![
                ("suite", Value::from(self.suite)),
                ("check", Value::from(self.check.clone())),
                ("pass", Value::from(self.pass)),
                ("measured", json_number(self.measured)),
                ("threshold", json_number(self.threshold)),
                ("trials", Value::from(self.trials)),
                ("seed", Value::from(seed)),
            ],
        ))
    }
}

/// Random nonnegative profile: bumps, exponentials and algebraic tails.
pub fn random_profile(grid: &RadialGrid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let kind = rng.gen_range(0..4);
    let mut v: Vec<f64> = match kind {
        0 => {
            let k = rng.gen_range(1..=3);
            let bumps: Vec<(f64, f64, f64)> = (0..k)
                .map(|_| (rng.gen_range(0.0..5.0), rng.gen_range(0.2..2.0), rng.gen_range(0.1..2.0)))
                .collect();
            grid.nodes()
                .iter()
                .map(|r| bumps.iter().map(|(c, w, h)| h * (-((r - c) / w).powi(2)).exp()).sum())
                .collect()
        }
        1 => {
            let a = rng.gen_range(0.5..3.0);
            grid.nodes().iter().map(|r| (-a * r).exp()).collect()
        }
        2 => {
            let b = rng.gen_range(0.5..3.0);
            let a = rng.gen_range(0.8..2.0);
            grid.nodes().iter().map(|r| (1.0 + r * r).powf(-b) * (-a * r).exp()).collect()
        }
        _ => {
            let r0 = rng.gen_range(0.3..4.0);
            let s = rng.gen_range(0.05..0.5);
            grid.nodes().iter().map(|r| 0.5 * (1.0 - ((r - r0) / s).tanh())).collect()
        }
    };
    let n = v.len() - 1;
    v[n] = 0.0;
    v
}

pub fn suite_hls(trials: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let (n, alpha) = (3usize, 2.0);
    let grid = Arc::new(RadialGrid::new(n, 20.0, 1000)?);
    let spec = KernelSpec::new(n, alpha)?;
    let conv = ConvolutionOperator::new(grid.clone(), spec)?;
    let nf = n as f64;
    let s = 2.0 * nf / (nf + alpha);
    let s_out = nf * s / (nf - s * alpha);
    let c_heat = heat_diagonal_constant(n)?;
    let c_tilde = hls_constant(n, alpha, s, c_heat)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = grid.weights();
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for _ in 0..trials {
        let f = random_profile(&grid, &mut rng);
        let kf = conv.apply(&f);
        let ratio = lq_norm_slice(w, &kf, s_out) / (c_tilde * lq_norm_slice(w, &f, s));
        worst = worst.max(ratio);
        if ratio > 1.0 {
            violations += 1;
        }
    }
    let mut out = vec![CheckResult {
        suite: "hls",
        check: format!("||k*f||_{s_out:.4} / (C~ ||f||_{s:.4}), N={n} alpha={alpha}"),
        pass: violations == 0,
        measured: worst,
        threshold: 1.0,
        trials,
    }];
    // the conformal kernel (2 sinh(rho/2))^{-lam} against the sharp constant
    let lam = 1.0;
    let sharp = sharp_hls_constant(n, lam)?;
    let small = RadialGrid::new(n, 12.0, 400)?;
    let mut worst: f64 = 0.0;
    let pairs = trials.clamp(1, 20);
    for _ in 0..pairs {
        let f = random_profile(&small, &mut rng);
        let g = random_profile(&small, &mut rng);
        worst = worst.max(conformal_hls_ratio(&small, lam, &f, &g)? / sharp);
    }
    out.push(CheckResult {
        suite: "hls",
        check: format!("conformal kernel ratio to C_(N,lam), N={n} lam={lam}"),
        pass: worst <= 1.0,
        measured: worst,
        threshold: 1.0,
        trials: pairs,
    });
    Ok(out)
}

pub fn suite_heat_semigroup() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (n, tol) in [(3usize, 1e-6), (4, 1e-4)] {
        let grid = RadialGrid::default_for(n)?;
        for t in [0.1, 1.0, 10.0] {
            let d = semigroup_defect(n, t, &grid)?;
            out.push(CheckResult {
                suite: "heat-semigroup",
                check: format!("p_2t(0) vs int p_t^2, N={n} t={t}"),
                pass: d < tol,
                measured: d,
                threshold: tol,
                trials: 1,
            });
        }
    }
    Ok(out)
}

pub fn suite_monotone(samples: usize) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let opts = HeatEvalOptions::default();
    for (n, alpha) in [(3usize, 1.5), (5, 2.0), (4, 1.0)] {
        let spec = KernelSpec::new(n, alpha)?;
        let rhos: Vec<f64> = (0..samples).map(|i| 0.01 * 2000f64.powf(i as f64 / (samples - 1).max(1) as f64)).collect();
        let mut worst = f64::NEG_INFINITY;
        for &r in &rhos {
            worst = worst.max(green_derivative(&spec, r)?);
        }
        out.push(CheckResult {
            suite: "monotone",
            check: format!("max k' over rho in [0.01, 20], N={n} alpha={alpha}"),
            pass: worst < 0.0,
            measured: worst,
            threshold: 0.0,
            trials: samples,
        });
        if n % 2 == 1 {
            let mut err: f64 = 0.0;
            for &r in rhos.iter().step_by((samples / 10).max(1)) {
                let h = 1e-4 * r.max(0.1);
                let fd = (green_eval(&spec, r + h, &opts)? - green_eval(&spec, r - h, &opts)?) / (2.0 * h);
                let an = green_derivative(&spec, r)?;
                err = err.max((an - fd).abs() / an.abs());
            }
            out.push(CheckResult {
                suite: "monotone",
                check: format!("derivative identity vs central differences, N={n} alpha={alpha}"),
                pass: err < 1e-4,
                measured: err,
                threshold: 1e-4,
                trials: samples.div_ceil((samples / 10).max(1)),
            });
        }
    }
    Ok(out)
}

/// Random unit vector in R^dim.
fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

pub fn suite_polarization(trials: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let (n, alpha, p) = (3usize, 2.0, 2.0);
    let spec = KernelSpec::new(n, alpha)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut below = 0;
    for trial in 0..trials {
        let anchor = BallPoint::from_polar(&random_direction(&mut rng, n), rng.gen_range(0.0..1.0))?;
        let h = GeodesicHypersurface::new(anchor, random_direction(&mut rng, n))?;
        let k = rng.gen_range(1..=3);
        let mut bumps = Vec::with_capacity(k);
        for _ in 0..k {
            let c = BallPoint::from_polar(&random_direction(&mut rng, n), rng.gen_range(0.0..1.2))?;
            bumps.push((c, rng.gen_range(0.3..1.0), rng.gen_range(0.2..1.0)));
        }
        let f = SampledField::sample_pair_closed(&h, 1.5, 600, seed ^ (trial as u64).wrapping_mul(0x9e37_79b9), |x| {
            bumps
                .iter()
                .map(|(c, w, a)| {
                    let d = crate::geometry::geodesic_distance(x, c).unwrap_or(f64::INFINITY);
                    a * (-(d / w).powi(2)).exp()
                })
                .sum()
        })?;
        let g = polarization_gap(&f, &h, &spec, p)?;
        let z = if g.stderr > 0.0 { g.gap / g.stderr } else if g.gap < 0.0 { f64::NEG_INFINITY } else { 0.0 };
        worst = worst.min(z);
        if g.significantly_negative() {
            below += 1;
        }
    }
    Ok(vec![CheckResult {
        suite: "polarization",
        check: format!("min gap / stderr over random fields, N={n} alpha={alpha} p={p}"),
        pass: below == 0,
        measured: worst,
        threshold: -3.0,
        trials,
    }])
}

/// Exponential trial profiles e^{-a rho} cos(pi rho / 2R) with a near (N-1)/2.
pub fn exponential_trial_minimum(grid: &Arc<RadialGrid>) -> Result<f64> {
    let a0 = 0.5 * (grid.dim() - 1) as f64;
    let r = grid.r_max();
    let mut best = f64::INFINITY;
    for delta in [-0.1, -0.05, -0.02, 0.0, 0.02, 0.05, 0.1] {
        let a = a0 * (1.0 + delta);
        let u = RadialProfile::from_fn(grid.clone(), |x| (-a * x).exp() * (0.5 * std::f64::consts::PI * x / r).cos())?;
        best = best.min(rayleigh_quotient(&u)?);
    }
    Ok(best)
}

pub fn suite_spectrum(trials: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let n = 3;
    let bound = 0.25 * ((n - 1) * (n - 1)) as f64;
    let grid = Arc::new(RadialGrid::default_for(n)?);
    let eps_grid = (bound - discrete_spectral_bottom(&grid)?).max(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let u = RadialProfile::new(grid.clone(), random_profile(&grid, &mut rng))?;
        worst = worst.min(rayleigh_quotient(&u)?);
    }
    let near = exponential_trial_minimum(&grid)?;
    Ok(vec![
        CheckResult {
            suite: "spectrum",
            check: format!("min Rayleigh quotient, N={n}, bound (N-1)^2/4 - eps_grid"),
            pass: worst >= bound - eps_grid,
            measured: worst,
            threshold: bound - eps_grid,
            trials,
        },
        CheckResult {
            suite: "spectrum",
            check: "eps_grid relative to (N-1)^2/4".into(),
            pass: eps_grid < 0.01 * bound,
            measured: eps_grid / bound,
            threshold: 0.01,
            trials: 1,
        },
        CheckResult {
            suite: "spectrum",
            check: "exponential trial quotient relative to (N-1)^2/4".into(),
            pass: near <= 1.05 * bound,
            measured: near / bound,
            threshold: 1.05,
            trials: 7,
        },
    ])
}

pub fn cmd_verify(a: &VerifyArgs, invocation: &str) -> Result<i32> {
    if a.trials == Some(0) {
        return Err(Error::Domain("--trials must be positive".into()));
    }
    let run = |s: Suite| -> Result<Vec<CheckResult>> {
        match s {
            Suite::Hls => suite_hls(a.trials.unwrap_or(100), a.seed),
            Suite::HeatSemigroup => suite_heat_semigroup(),
            Suite::Monotone => suite_monotone(a.trials.unwrap_or(200).max(2)),
            Suite::Polarization => suite_polarization(a.trials.unwrap_or(50), a.seed),
            Suite::Spectrum => suite_spectrum(a.trials.unwrap_or(50), a.seed),
            Suite::All => unreachable!(),
        }
    };
    let suites = match a.suite {
        Suite::All => vec![Suite::Hls, Suite::HeatSemigroup, Suite::Monotone, Suite::Polarization, Suite::Spectrum],
        s => vec![s],
    };
    let mut results = Vec::new();
    for s in suites {
        results.extend(run(s)?);
    }
    let json = Value::Array(results.iter().map(|r| r.to_json(invocation, a.seed)).collect());
    emit(a.out.as_deref(), &to_json_text(&json))?;
    Ok(if results.iter().all(|r| r.pass) { EXIT_OK } else { EXIT_CHECK_FAILED })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_are_invalid_input() {
        assert_eq!(run(["hyperchoq", "kernel", "--kind", "nope", "--dim", "3"]), EXIT_INVALID);
        assert_eq!(run(["hyperchoq", "frobnicate"]), EXIT_INVALID);
        assert_eq!(run(["hyperchoq", "--version"]), EXIT_OK);
    }

    #[test]
    fn kernel_argument_validation() {
        assert_eq!(run(["hyperchoq", "kernel", "--kind", "green", "--dim", "3", "--alpha", "5"]), EXIT_INVALID);
        assert_eq!(run(["hyperchoq", "kernel", "--kind", "heat", "--dim", "3"]), EXIT_INVALID);
        assert_eq!(run(["hyperchoq", "kernel", "--kind", "green", "--dim", "3", "--alpha", "1", "--t", "1"]), EXIT_INVALID);
    }

    #[test]
    fn solve_rejections() {
        let base = ["hyperchoq", "solve", "--dim", "3", "--alpha", "2", "--out", "/nonexistent/x.csv"];
        let with = |extra: &[&str]| {
            let mut v: Vec<&str> = base.to_vec();
            v.extend_from_slice(extra);
            run(v)
        };
        assert_eq!(with(&["--p", "5"]), EXIT_INVALID);
        assert_eq!(with(&["--lambda", "1.0"]), EXIT_INVALID);
        assert_eq!(with(&["--p", "1.2"]), EXIT_INVALID);
    }

    #[test]
    fn random_profiles_are_nonnegative() {
        let g = RadialGrid::new(3, 10.0, 200).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..40 {
            let v = random_profile(&g, &mut rng);
            assert!(v.iter().all(|x| *x >= 0.0) && v.iter().any(|x| *x > 0.0));
            assert_eq!(*v.last().unwrap(), 0.0);
        }
    }

    #[test]
    fn report_paths() {
        assert_eq!(report_path(Path::new("a/b.csv")), PathBuf::from("a/b.json"));
        assert_eq!(report_path(Path::new("a/b")), PathBuf::from("a/b.json"));
        assert_eq!(with_suffix(Path::new("b.csv"), ".partial"), PathBuf::from("b.csv.partial"));
    }
}
