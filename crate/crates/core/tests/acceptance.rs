//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero on any failure.

use hyperchoq::choquard_energy::{
    heat_diagonal_constant, hls_constant, ChoquardFunctional, ProblemSpec,
};
use hyperchoq::geometry::{geodesic_distance, BallPoint, GeodesicHypersurface};
use hyperchoq::green_kernel::{green_derivative, green_eval, KernelSpec};
use hyperchoq::heat_kernel::{heat_eval, semigroup_defect, HeatEvalOptions};
use hyperchoq::radial_field::{
    discrete_spectral_bottom, lq_norm, rayleigh_quotient, ConvolutionOperator, RadialGrid, RadialProfile,
};
use hyperchoq::solver::{solve_ground_state, solve_with, SolverConfig};
use hyperchoq::symmetry::{polarization_gap, polarize, radial_symmetry_check, SampledField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

/// p_{t,3} from one application of -(1/sinh) d/drho to e^{-rho^2/4t}.
fn heat3(t: f64, rho: f64) -> f64 {
    let ratio = if rho == 0.0 { 1.0 } else { rho / rho.sinh() };
    (4.0 * PI * t).powf(-1.5) * (-t - rho * rho / (4.0 * t)).exp() * ratio
}

fn green32(rho: f64) -> f64 {
    (-rho).exp() / (4.0 * PI * rho.sinh())
}

/// Composite Simpson rule in u = ln t for int_0^inf f(t) dt.
fn simpson_ln(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let g = |u: f64| {
        let t = u.exp();
        f(t) * t
    };
    let mut s = g(lo) + g(hi);
    for i in 1..n {
        s += g(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn random_profile(grid: &RadialGrid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let k = rng.gen_range(1..=3);
    let bumps: Vec<(f64, f64, f64)> =
        (0..k).map(|_| (rng.gen_range(0.0..6.0), rng.gen_range(0.15..2.5), rng.gen_range(0.05..3.0))).collect();
    let decay = rng.gen_range(0.0..2.0);
    let mut v: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|r| bumps.iter().map(|(c, w, h)| h * (-((r - c) / w).powi(2)).exp()).sum::<f64>() + (-(2.0 + decay) * r).exp() * decay)
        .collect();
    let n = v.len() - 1;
    v[n] = 0.0;
    v
}

fn c1_heat_oracle() -> Outcome {
    let opts = HeatEvalOptions::default();
    let mut worst: f64 = 0.0;
    for t in [0.1, 1.0, 10.0] {
        for i in 0..100 {
            let rho = 10.0 * i as f64 / 99.0;
            let v = heat_eval(3, t, rho, &opts).map_err(e)?;
            worst = worst.max((v / heat3(t, rho) - 1.0).abs());
        }
    }
    Ok((worst < 1e-10, format!("max relative error {worst:.2e} over 300 points")))
}

fn c2_semigroup() -> Outcome {
    let mut worst3: f64 = 0.0;
    let mut worst4: f64 = 0.0;
    let g3 = RadialGrid::default_for(3).map_err(e)?;
    let g4 = RadialGrid::default_for(4).map_err(e)?;
    for t in [0.1, 1.0, 10.0] {
        worst3 = worst3.max(semigroup_defect(3, t, &g3).map_err(e)?);
        worst4 = worst4.max(semigroup_defect(4, t, &g4).map_err(e)?);
    }
    Ok((worst3 < 1e-6 && worst4 < 1e-4, format!("defect N=3 {worst3:.2e}, N=4 {worst4:.2e}")))
}

fn c3_green_oracle() -> Outcome {
    // the closed form itself against brute-force time integration of heat3
    let mut oracle_err: f64 = 0.0;
    for rho in [0.05, 0.5, 2.0, 6.0] {
        let q = simpson_ln(|t| heat3(t, rho), -14.0, 6.0, 20000);
        oracle_err = oracle_err.max((q / green32(rho) - 1.0).abs());
    }
    let spec = KernelSpec::new(3, 2.0).map_err(e)?;
    let opts = HeatEvalOptions::default();
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let rho = 0.01 * 1000f64.powf(i as f64 / 199.0);
        let v = green_eval(&spec, rho, &opts).map_err(e)?;
        worst = worst.max((v / green32(rho) - 1.0).abs());
    }
    Ok((
        worst < 1e-6 && oracle_err < 1e-8,
        format!("max relative error {worst:.2e}; closed form vs brute-force quadrature {oracle_err:.2e}"),
    ))
}

fn c4_riesz_limit() -> Outcome {
    let opts = HeatEvalOptions::default();
    let mut report = Vec::new();
    let mut ok = true;
    for (n, alpha) in [(3usize, 1.0), (3, 2.0), (5, 2.0)] {
        let nf = n as f64;
        let c = gamma((nf - alpha) / 2.0) / (gamma(alpha / 2.0) * PI.powf(nf / 2.0) * 2f64.powf(alpha));
        let rho: f64 = 1e-3;
        let k = green_eval(&KernelSpec::new(n, alpha).map_err(e)?, rho, &opts).map_err(e)?;
        let q = k * rho.powf(nf - alpha) / c;
        ok &= (0.98..=1.02).contains(&q);
        report.push(format!("({n},{alpha}) {q:.5}"));
    }
    Ok((ok, format!("ratios {}", report.join(", "))))
}

fn c5_monotone() -> Outcome {
    let opts = HeatEvalOptions::default();
    let mut max_deriv = f64::NEG_INFINITY;
    let mut fd_err: f64 = 0.0;
    for (n, alpha) in [(3usize, 1.5), (5, 2.0), (4, 1.0)] {
        let spec = KernelSpec::new(n, alpha).map_err(e)?;
        for i in 0..200 {
            let rho = 0.01 * 3000f64.powf(i as f64 / 199.0);
            let d = green_derivative(&spec, rho).map_err(e)?;
            max_deriv = max_deriv.max(d);
            if n % 2 == 1 && i % 10 == 0 {
                let h = 1e-4 * rho.max(0.1);
                let fd = (green_eval(&spec, rho + h, &opts).map_err(e)? - green_eval(&spec, rho - h, &opts).map_err(e)?)
                    / (2.0 * h);
                fd_err = fd_err.max((d - fd).abs() / d.abs());
            }
        }
    }
    Ok((
        max_deriv < 0.0 && fd_err < 1e-4,
        format!("max k' {max_deriv:.2e}; odd-N identity vs differences {fd_err:.2e}"),
    ))
}

fn c6_spectral_gap() -> Outcome {
    let grid = Arc::new(RadialGrid::default_for(3).map_err(e)?);
    let bound = 1.0;
    let eps_grid = (bound - discrete_spectral_bottom(&grid).map_err(e)?).max(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = f64::INFINITY;
    for k in 0..50 {
        // half the suite is signed
        let mut v = random_profile(&grid, &mut rng);
        if k % 2 == 1 {
            let f = rng.gen_range(0.5..3.0);
            v.iter_mut().zip(grid.nodes()).for_each(|(x, r)| *x *= (f * r).cos());
        }
        let u = RadialProfile::new(grid.clone(), v).map_err(e)?;
        worst = worst.min(rayleigh_quotient(&u).map_err(e)?);
    }
    let mut near = f64::INFINITY;
    for delta in [-0.1, -0.05, -0.02, 0.02, 0.05, 0.1] {
        let a = 1.0 + delta;
        let u = RadialProfile::from_fn(grid.clone(), |r| (-a * r).exp() * (0.5 * PI * r / grid.r_max()).cos())
            .map_err(e)?;
        near = near.min(rayleigh_quotient(&u).map_err(e)?);
    }
    Ok((
        worst >= bound - eps_grid && eps_grid < 0.01 * bound && near <= 1.05 * bound,
        format!("min quotient {worst:.4}, eps_grid {eps_grid:.2e}, best exponential trial {near:.4}"),
    ))
}

fn c7_hls() -> Outcome {
    let (n, alpha) = (3usize, 2.0);
    let nf = n as f64;
    let c_heat = heat_diagonal_constant(n).map_err(e)?;
    // t^{3/2} p_t(0) = (4 pi)^{-3/2} e^{-t} is maximal as t -> 0
    if (c_heat / (4.0 * PI).powf(-1.5) - 1.0).abs() > 1e-10 {
        return Ok((false, format!("diagonal constant {c_heat} disagrees with (4 pi)^(-3/2)")));
    }
    let s = 2.0 * nf / (nf + alpha);
    let s_out = nf * s / (nf - s * alpha);
    let c_tilde = hls_constant(n, alpha, s, c_heat).map_err(e)?;
    let grid = Arc::new(RadialGrid::new(n, 30.0, 1500).map_err(e)?);
    let conv = ConvolutionOperator::new(grid.clone(), KernelSpec::new(n, alpha).map_err(e)?).map_err(e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let f = RadialProfile::new(grid.clone(), random_profile(&grid, &mut rng)).map_err(e)?;
        let kf = conv.apply_profile(&f).map_err(e)?;
        let ratio = lq_norm(&kf, s_out).map_err(e)? / (c_tilde * lq_norm(&f, s).map_err(e)?);
        worst = worst.max(ratio);
        if ratio > 1.0 {
            violations += 1;
        }
    }
    Ok((violations == 0, format!("{violations} violations, largest ratio to C~ {worst:.4}")))
}

fn c8_ground_state() -> Outcome {
    let grid = Arc::new(RadialGrid::default_for(3).map_err(e)?);
    let mut zetas = Vec::new();
    let mut notes = Vec::new();
    let mut ok = true;
    for lambda in [0.0, 0.5, 0.9] {
        let spec = ProblemSpec::new(3, 2.0, 2.0, lambda).map_err(e)?;
        let f = ChoquardFunctional::new(grid.clone(), spec).map_err(e)?;
        let r = solve_with(&f, &SolverConfig::new(spec)).map_err(e)?;
        let good = r.nehari_defect < 1e-10 && r.el_residual < 1e-4 && r.monotone && r.positive;
        ok &= good;
        notes.push(format!(
            "lambda={lambda}: zeta {:.8} defect {:.1e} residual {:.1e}",
            r.zeta, r.nehari_defect, r.el_residual
        ));
        zetas.push(r.zeta);
    }
    ok &= zetas.windows(2).all(|w| w[1] < w[0]);
    let mut z = Vec::new();
    for nodes in [501, 1001, 2001] {
        let mut cfg = SolverConfig::new(ProblemSpec::new(3, 2.0, 2.0, 0.0).map_err(e)?);
        cfg.nodes = nodes;
        z.push(solve_ground_state(&cfg).map_err(e)?.zeta);
    }
    let ratio = (z[0] - z[1]).abs() / (z[1] - z[2]).abs();
    ok &= (3.2..=4.8).contains(&ratio);
    notes.push(format!("refinement ratio {ratio:.3}"));
    Ok((ok, notes.join("; ")))
}

fn c9_energy_algebra() -> Outcome {
    let grid = Arc::new(RadialGrid::default_for(3).map_err(e)?);
    let spec = ProblemSpec::new(3, 2.0, 2.0, 0.5).map_err(e)?;
    let f = ChoquardFunctional::new(grid.clone(), spec).map_err(e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let u = random_profile(&grid, &mut rng);
    let i1 = f.quotient(&u).map_err(e)?;
    let u3: Vec<f64> = u.iter().map(|x| -3.0 * x).collect();
    let scale_err = (f.quotient(&u3).map_err(e)? - i1).abs() / i1;
    let t = f.nehari_scale(&u).map_err(e)?;
    let v: Vec<f64> = u.iter().map(|x| t * x).collect();
    let q = f.lambda_form(&v).map_err(e)?;
    let manifold_err = (f.quotient(&v).map_err(e)? / q.powf((spec.p() - 1.0) / spec.p()) - 1.0).abs();
    let grad = f.gradient(&u).map_err(e)?;
    let w = grid.weights();
    let eps = 1e-2;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let c = rng.gen_range(0.0..4.0);
        let width = rng.gen_range(0.3..2.0);
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let phi: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|r| sign * (-((r - c) / width).powi(2)).exp() + rng.gen_range(-0.5..0.5) * (-r).exp())
            .collect();
        let at = |s: f64| -> Result<f64, String> {
            let v: Vec<f64> = u.iter().zip(&phi).map(|(a, b)| a + s * b).collect();
            f.quotient(&v).map_err(e)
        };
        // fourth-order central stencil
        let fd = (8.0 * (at(eps)? - at(-eps)?) - (at(2.0 * eps)? - at(-2.0 * eps)?)) / (12.0 * eps);
        let an: f64 = grad.iter().zip(&phi).zip(w).map(|((g, p), w)| g * p * w).sum();
        worst = worst.max((fd - an).abs() / an.abs());
    }
    Ok((
        scale_err < 1e-12 && manifold_err < 1e-10 && worst < 1e-6,
        format!("scale {scale_err:.1e}, manifold identity {manifold_err:.1e}, gradient vs differences {worst:.1e}"),
    ))
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn c10_polarization() -> Outcome {
    let spec = KernelSpec::new(3, 2.0).map_err(e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut below = 0;
    let mut min_z = f64::INFINITY;
    let mut fixed_ok = true;
    for trial in 0..50u64 {
        let anchor = BallPoint::from_polar(&random_unit(&mut rng), rng.gen_range(0.0..1.0)).map_err(e)?;
        let h = GeodesicHypersurface::new(anchor, random_unit(&mut rng)).map_err(e)?;
        let bumps: Vec<(BallPoint, f64, f64)> = (0..rng.gen_range(1..=3))
            .map(|_| {
                let c = BallPoint::from_polar(&random_unit(&mut rng), rng.gen_range(0.0..1.2)).unwrap();
                (c, rng.gen_range(0.3..1.0), rng.gen_range(0.2..1.0))
            })
            .collect();
        let f = SampledField::sample_pair_closed(&h, 1.5, 600, 1000 + trial, |x| {
            bumps.iter().map(|(c, w, a)| a * (-(geodesic_distance(x, c).unwrap() / w).powi(2)).exp()).sum()
        })
        .map_err(e)?;
        let g = polarization_gap(&f, &h, &spec, 2.0).map_err(e)?;
        if g.gap < -3.0 * g.stderr {
            below += 1;
        }
        if g.stderr > 0.0 {
            min_z = min_z.min(g.gap / g.stderr);
        }
        if trial < 5 {
            let fh = polarize(&f, &h).map_err(e)?;
            fixed_ok &= polarization_gap(&fh, &h, &spec, 2.0).map_err(e)?.gap == 0.0;
        }
    }
    // two bumps of unequal height straddling H, not mirror images of each other
    let h = GeodesicHypersurface::new(BallPoint::origin(3), vec![1.0, 0.0, 0.0]).map_err(e)?;
    let probe = BallPoint::new(vec![0.45, 0.0, 0.0]).map_err(e)?;
    let s = if h.side_value(probe.coords()) < 0.0 { 1.0 } else { -1.0 };
    let big = BallPoint::new(vec![0.45 * s, 0.0, 0.0]).map_err(e)?;
    let small = BallPoint::new(vec![-0.3 * s, 0.35, 0.0]).map_err(e)?;
    let f = SampledField::sample_pair_closed(&h, 1.5, 2000, 77, |x| {
        let a = geodesic_distance(x, &big).unwrap();
        let b = geodesic_distance(x, &small).unwrap();
        (-2.0 * a * a).exp() + 0.4 * (-2.0 * b * b).exp()
    })
    .map_err(e)?;
    let g = polarization_gap(&f, &h, &spec, 2.0).map_err(e)?;
    let asym = g.gap > 3.0 * g.stderr;
    Ok((
        below == 0 && asym && fixed_ok,
        format!(
            "{below} of 50 below -3 sigma (min z {min_z:.2}); asymmetric gap {:.2} sigma; fixed points exact: {fixed_ok}",
            g.gap / g.stderr
        ),
    ))
}

fn c11_symmetry() -> Outcome {
    let cfg = SolverConfig::new(ProblemSpec::new(3, 2.0, 2.0, 0.0).map_err(e)?);
    let r = solve_ground_state(&cfg).map_err(e)?;
    let grid = r.profile.grid().clone();
    let nodes = grid.nodes();
    let vals = r.profile.values();
    let interp = |rho: f64| -> f64 {
        if rho <= nodes[0] {
            return vals[0];
        }
        let k = nodes.partition_point(|x| *x < rho).min(nodes.len() - 1);
        let t = (rho - nodes[k - 1]) / (nodes[k] - nodes[k - 1]);
        vals[k - 1] + t * (vals[k] - vals[k - 1])
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut points = Vec::new();
    let mut values = Vec::new();
    for _ in 0..4000 {
        let rho = rng.gen_range(0.0..4.0);
        let p = BallPoint::from_polar(&random_unit(&mut rng), rho).map_err(e)?;
        values.push(interp(rho));
        points.push(p);
    }
    let field = SampledField::new(points, values, 1.0).map_err(e)?;
    let c = radial_symmetry_check(&field).map_err(e)?;
    let off = geodesic_distance(&c.center, &BallPoint::origin(3)).map_err(e)?;
    let tol = 2.0 * grid.uniform_spacing();
    Ok((
        off < tol && c.deviation < 1e-3 && !c.degenerate,
        format!("center offset {off:.2e} (limit {tol:.2e}), deviation {:.2e}", c.deviation),
    ))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("heat kernel vs N=3 closed form", c1_heat_oracle, Some(Duration::from_secs(1))),
        ("semigroup identity", c2_semigroup, Some(Duration::from_secs(30))),
        ("green kernel vs N=3, alpha=2 closed form", c3_green_oracle, Some(Duration::from_secs(10))),
        ("Riesz small-rho limit", c4_riesz_limit, None),
        ("green kernel monotonicity", c5_monotone, None),
        ("spectral gap", c6_spectral_gap, None),
        ("HLS with the heat diagonal constant", c7_hls, Some(Duration::from_secs(120))),
        ("ground state", c8_ground_state, Some(Duration::from_secs(600))),
        ("Nehari and energy algebra", c9_energy_algebra, None),
        ("polarization gap", c10_polarization, Some(Duration::from_secs(300))),
        ("radial symmetry of the ground state", c11_symmetry, None),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let (pass, detail) = match outcome {
            Ok((p, d)) => (p, d),
            Err(msg) => (false, format!("error: {msg}")),
        };
        let in_time = limit.is_none_or(|l| took <= l);
        let pass = pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = limit.map(|l| format!(" of {}s", l.as_secs())).unwrap_or_default();
        println!(
            "criterion {:>2} {}: {name}: {detail} ({:.2}s{budget})",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
