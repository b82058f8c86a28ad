//! Polarization, rearrangement and symmetry diagnostics for sampled fields.

use crate::error::{domain, Error, Result};
use crate::geometry::{classify, distance_unchecked, BallPoint, GeodesicHypersurface, Side};
use crate::green_kernel::{kernel_table, KernelSpec};
use crate::special::{ball_volume, sphere_area};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const PAIR_MATCH_TOL: f64 = 1e-9;
const EXCLUSION_RADIUS: f64 = 1e-3;
const PAIRS_PER_BLOCK: usize = 64;

/// Values at points of B^N, each carrying the same volume weight.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    points: Vec<BallPoint>,
    values: Vec<f64>,
    mc_weight: f64,
    /// Hypersurface whose reflection maps point 2k to point 2k+1.
    paired_with: Option<GeodesicHypersurface>,
}

impl SampledField {
    pub fn new(points: Vec<BallPoint>, values: Vec<f64>, mc_weight: f64) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: values.len() });
        }
        if points.is_empty() {
            return domain("sampled field needs at least one point");
        }
        let dim = points[0].dim();
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return domain("field values must be finite");
        }
        if !(mc_weight > 0.0 && mc_weight.is_finite()) {
            return domain(format!("Monte-Carlo weight must be positive, got {mc_weight}"));
        }
        Ok(Self { points, values, mc_weight, paired_with: None })
    }

    /// Pair-closed sample for `h`: uniform points of the geodesic ball
    /// B_{r_max}(0) together with their mirror images.
    pub fn sample_pair_closed(
        h: &GeodesicHypersurface,
        r_max: f64,
        pairs: usize,
        seed: u64,
        f: impl Fn(&BallPoint) -> f64 + Sync,
    ) -> Result<Self> {
        if !(r_max > 0.0 && r_max <= 15.0) {
            return domain(format!("sampling radius must lie in (0, 15], got {r_max}"));
        }
        if pairs == 0 {
            return domain("need at least one pair");
        }
        let dim = h.anchor().dim();
        let blocks = pairs.div_ceil(PAIRS_PER_BLOCK);
        let drawn: Vec<(Vec<[Vec<f64>; 2]>, usize, usize)> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(b as u64);
                let want = PAIRS_PER_BLOCK.min(pairs - b * PAIRS_PER_BLOCK);
                let mut out = Vec::with_capacity(want);
                let (mut proposed, mut kept) = (0usize, 0usize);
                while out.len() < want {
                    let x = uniform_in_ball(&mut rng, dim, r_max);
                    let y = h.reflect_raw(&x);
                    let inside = rho_of(&y) < r_max;
                    proposed += 1;
                    // pairs with both members inside would otherwise be drawn twice as often
                    if inside && rng.gen::<f64>() >= 0.5 {
                        continue;
                    }
                    kept += 1;
                    out.push([x, y]);
                }
                (out, proposed, kept)
            })
            .collect();
        let (mut proposed, mut kept) = (0, 0);
        let mut points = Vec::with_capacity(2 * pairs);
        for (block, p, k) in drawn {
            proposed += p;
            kept += k;
            for [x, y] in block {
                points.push(BallPoint::new(x)?);
                points.push(BallPoint::new(y)?);
            }
        }
        let union_volume = 2.0 * ball_volume(dim, r_max) * kept as f64 / proposed as f64;
        let values = points.par_iter().map(&f).collect();
        let mut field = Self::new(points, values, union_volume / (2 * pairs) as f64)?;
        field.paired_with = Some(h.clone());
        Ok(field)
    }

    pub fn points(&self) -> &[BallPoint] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mc_weight(&self) -> f64 {
        self.mc_weight
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same points with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        let mut out = Self::new(self.points.clone(), values, self.mc_weight)?;
        out.paired_with = self.paired_with.clone();
        Ok(out)
    }

    /// Index of the mirror image of every point under `h`.
    fn partners(&self, h: &GeodesicHypersurface) -> Result<Vec<usize>> {
        if self.paired_with.as_ref() == Some(h) {
            return Ok((0..self.len()).map(|i| i ^ 1).collect());
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.points[a].coords()[0].total_cmp(&self.points[b].coords()[0]));
        let keys: Vec<f64> = order.iter().map(|&i| self.points[i].coords()[0]).collect();
        let mut out = vec![usize::MAX; self.len()];
        for i in 0..self.len() {
            let y = h.reflect_raw(self.points[i].coords());
            let start = keys.partition_point(|k| *k < y[0] - PAIR_MATCH_TOL);
            let hit = order[start..]
                .iter()
                .take_while(|&&j| self.points[j].coords()[0] <= y[0] + PAIR_MATCH_TOL)
                .find(|&&j| {
                    self.points[j].coords().iter().zip(&y).all(|(a, b)| (a - b).abs() <= PAIR_MATCH_TOL)
                });
            match hit {
                Some(&j) => out[i] = j,
                None => return domain(format!("sample {i} has no mirror image; the set is not pair-closed")),
            }
        }
        Ok(out)
    }
}

fn rho_of(x: &[f64]) -> f64 {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    2.0 * r.min(1.0 - 1e-16).atanh()
}

/// Uniform point of the geodesic ball B_r(0) by rejection from the
/// Euclidean ball of radius tanh(r/2).
fn uniform_in_ball(rng: &mut ChaCha8Rng, dim: usize, r: f64) -> Vec<f64> {
    let re = (0.5 * r).tanh();
    loop {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-re..re)).collect();
        let n2: f64 = x.iter().map(|v| v * v).sum();
        if n2 >= re * re {
            continue;
        }
        let accept = ((1.0 - re * re) / (1.0 - n2)).powi(dim as i32);
        if rng.gen::<f64>() < accept {
            return x;
        }
    }
}

/// f^H: max of the pair on H⁺, min on H⁻, unchanged on H.
pub fn polarize(f: &SampledField, h: &GeodesicHypersurface) -> Result<SampledField> {
    if h.anchor().dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: h.anchor().dim() });
    }
    let partner = f.partners(h)?;
    let values = (0..f.len())
        .map(|i| {
            let (a, b) = (f.values[i], f.values[partner[i]]);
            match classify(h.side_value(f.points[i].coords())) {
                Side::Plus => a.max(b),
                Side::Minus => a.min(b),
                Side::On => a,
            }
        })
        .collect();
    f.with_values(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqualityCase {
    /// f^H = f
    Unchanged,
    /// f^H = f o sigma_H
    Reflected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapEstimate {
    /// Estimate of J(f^H) - J(f).
    pub gap: f64,
    pub stderr: f64,
    /// Filled when |gap| < 3 stderr and f^H matches f or f o sigma_H.
    pub equality: Option<EqualityCase>,
}

impl GapEstimate {
    pub fn significantly_negative(&self) -> bool {
        self.gap < -3.0 * self.stderr
    }

    pub fn significantly_positive(&self) -> bool {
        self.gap > 3.0 * self.stderr
    }
}

fn neumaier(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

/// Monte-Carlo estimate of J(f^H) - J(f), J(g) = iint k(rho(x,y)) g^p(x) g^p(y).
pub fn polarization_gap(f: &SampledField, h: &GeodesicHypersurface, spec: &KernelSpec, p: f64) -> Result<GapEstimate> {
    if f.values.iter().any(|v| *v < 0.0) {
        return domain("polarization gap needs a nonnegative field");
    }
    if !(p > 0.0 && p.is_finite()) {
        return domain(format!("exponent must be positive, got {p}"));
    }
    if spec.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: spec.dim() });
    }
    let fh = polarize(f, h)?;
    let partner = f.partners(h)?;
    let reflected: Vec<f64> = partner.iter().map(|&j| f.values[j]).collect();
    let equality = if fh.values == f.values {
        Some(EqualityCase::Unchanged)
    } else if fh.values == reflected {
        Some(EqualityCase::Reflected)
    } else {
        None
    };
    if equality == Some(EqualityCase::Unchanged) {
        return Ok(GapEstimate { gap: 0.0, stderr: 0.0, equality });
    }

    // units are mirror pairs {i, partner(i)}; fixed points form their own unit
    let units: Vec<Vec<usize>> = (0..f.len())
        .filter(|&i| partner[i] >= i)
        .map(|i| if partner[i] == i { vec![i] } else { vec![i, partner[i]] })
        .collect();
    let m = units.len();
    if m < 2 {
        return domain("polarization gap needs at least two sample pairs");
    }
    let a: Vec<f64> = f.values.iter().map(|v| v.powf(p)).collect();
    let b: Vec<f64> = fh.values.iter().map(|v| v.powf(p)).collect();
    let r_far = f.points.iter().map(|x| rho_of(x.coords())).fold(0.0, f64::max);
    let table = kernel_table(*spec, 2.0 * r_far + 1.0)?;
    let w = f.mc_weight;
    let pair_term = |i: usize, j: usize| -> f64 {
        let d = distance_unchecked(f.points[i].coords(), f.points[j].coords());
        if d < EXCLUSION_RADIUS {
            return 0.0;
        }
        table.eval(d) * (b[i] * b[j] - a[i] * a[j])
    };
    // int_{d < eps} c d^{alpha-N} dV, flat approximation of the excluded ball
    let local = spec.riesz_constant() * sphere_area(spec.dim() - 1) * EXCLUSION_RADIUS.powf(spec.alpha()) / spec.alpha();
    let rows: Vec<(f64, f64)> = units
        .par_iter()
        .enumerate()
        .map(|(ua, ia)| {
            let mut cross = Vec::with_capacity(m);
            for (ub, ib) in units.iter().enumerate() {
                if ub == ua {
                    continue;
                }
                let mut s = 0.0;
                for &i in ia {
                    for &j in ib {
                        s += pair_term(i, j);
                    }
                }
                cross.push(s);
            }
            let mut own = 0.0;
            for &i in ia {
                for &j in ia {
                    if i != j {
                        own += pair_term(i, j);
                    }
                }
                own += local / w * (b[i] * b[i] - a[i] * a[i]);
            }
            (neumaier(cross), own)
        })
        .collect();
    let mf = m as f64;
    let gap = w * w * (neumaier(rows.iter().map(|r| r.0)) + neumaier(rows.iter().map(|r| r.1)));
    // U-statistic of order two over the units, plus the iid diagonal terms
    let hbar: Vec<f64> = rows.iter().map(|r| r.0 / (mf - 1.0)).collect();
    let own: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let var = |xs: &[f64]| {
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() as f64 - 1.0)
    };
    let se_cross = mf * (mf - 1.0) * 2.0 * (var(&hbar) / mf).sqrt();
    let se_own = (mf * var(&own)).sqrt();
    let stderr = w * w * (se_cross * se_cross + se_own * se_own).sqrt();
    let equality = if gap.abs() < 3.0 * stderr { equality } else { None };
    Ok(GapEstimate { gap, stderr, equality })
}

/// Decreasing rearrangement on a discrete measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Rearrangement {
    /// Values in decreasing order (innermost first).
    pub values: Vec<f64>,
    /// Volume carried by each value after the permutation.
    pub weights: Vec<f64>,
    /// Volume of the ball enclosing the first k+1 values.
    pub cumulative_volume: Vec<f64>,
}

impl Rearrangement {
    /// Outer geodesic radius of each shell in B^N.
    pub fn radii(&self, dim: usize) -> Vec<f64> {
        self.cumulative_volume
            .iter()
            .map(|v| {
                let (mut lo, mut hi) = (0.0, 1.0);
                while ball_volume(dim, hi) < *v {
                    hi *= 2.0;
                }
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if ball_volume(dim, mid) < *v {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect()
    }
}

/// Schwarz rearrangement of values carrying the given volumes.
pub fn schwarz_rearrange(values: &[f64], volume_weights: &[f64]) -> Result<Rearrangement> {
    if values.len() != volume_weights.len() {
        return Err(Error::DimensionMismatch { expected: values.len(), got: volume_weights.len() });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return domain("values must be finite");
    }
    if volume_weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return domain("volume weights must be positive");
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let weights: Vec<f64> = idx.iter().map(|&i| volume_weights[i]).collect();
    let cumulative_volume = weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    Ok(Rearrangement { values: idx.iter().map(|&i| values[i]).collect(), weights, cumulative_volume })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryCheck {
    pub center: BallPoint,
    /// rms deviation from the best shell-wise radial fit, relative to rms value
    pub deviation: f64,
    /// Constant field: any center fits and the center is arbitrary.
    pub degenerate: bool,
}

fn ball_from_free(w: &[f64]) -> Vec<f64> {
    let r = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return vec![0.0; w.len()];
    }
    let s = (0.5 * r).tanh() / r;
    w.iter().map(|v| v * s).collect()
}

fn free_from_ball(x: &[f64]) -> Vec<f64> {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return vec![0.0; x.len()];
    }
    let s = 2.0 * r.atanh() / r;
    x.iter().map(|v| v * s).collect()
}

/// Shell-wise linear fit residual about `center`, relative to rms value.
fn shell_deviation(f: &SampledField, center: &[f64], shell: usize, rms: f64) -> f64 {
    let mut dv: Vec<(f64, f64)> =
        f.points.iter().zip(&f.values).map(|(x, v)| (distance_unchecked(x.coords(), center), *v)).collect();
    dv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ss = 0.0;
    for chunk in dv.chunks(shell) {
        let k = chunk.len() as f64;
        let md = chunk.iter().map(|c| c.0).sum::<f64>() / k;
        let mv = chunk.iter().map(|c| c.1).sum::<f64>() / k;
        let sxx: f64 = chunk.iter().map(|c| (c.0 - md) * (c.0 - md)).sum();
        let sxy: f64 = chunk.iter().map(|c| (c.0 - md) * (c.1 - mv)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        ss += chunk.iter().map(|c| (c.1 - mv - slope * (c.0 - md)).powi(2)).sum::<f64>();
    }
    (ss / f.len() as f64).sqrt() / rms
}

fn nelder_mead(g: impl Fn(&[f64]) -> f64, start: Vec<f64>, step: f64, iters: usize) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(start.clone(), g(&start))];
    for i in 0..n {
        let mut x = start.clone();
        x[i] += step;
        let v = g(&x);
        simplex.push((x, v));
    }
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect() };
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = (simplex[n].1 - simplex[0].1).abs();
        let size = simplex[1..]
            .iter()
            .map(|s| s.0.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= 1e-15 * simplex[0].1.abs().max(1e-300) || size < 1e-9 {
            break;
        }
        let mut centroid = vec![0.0; n];
        for s in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(&s.0) {
                *c += x / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let xr = lerp(&centroid, &worst.0, -1.0);
        let fr = g(&xr);
        if fr < simplex[0].1 {
            let xe = lerp(&centroid, &worst.0, -2.0);
            let fe = g(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let xc = if fr < worst.1 { lerp(&centroid, &xr, 0.5) } else { lerp(&centroid, &worst.0, 0.5) };
            let fc = g(&xc);
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    s.0 = lerp(&best, &s.0, 0.5);
                    s.1 = g(&s.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Best center x0 for a radial fit u(x) = v(rho(x, x0)).
pub fn radial_symmetry_check(f: &SampledField) -> Result<SymmetryCheck> {
    let dim = f.dim();
    let top = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (lo, hi) = f.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if top == 0.0 || hi - lo <= 1e-14 * top {
        return Ok(SymmetryCheck { center: BallPoint::origin(dim), deviation: 0.0, degenerate: true });
    }
    let rms = (f.values.iter().map(|v| v * v).sum::<f64>() / f.len() as f64).sqrt();
    let shell = (f.len() / 100).max(5);
    let start_idx = (0..f.len()).max_by(|&a, &b| f.values[a].total_cmp(&f.values[b])).unwrap_or(0);
    let start = free_from_ball(f.points[start_idx].coords());
    let objective = |w: &[f64]| shell_deviation(f, &ball_from_free(w), shell, rms);
    let (mut best, mut val) = nelder_mead(objective, start, 0.25, 400);
    // restart from the optimum with a finer simplex
    let (b2, v2) = nelder_mead(objective, best.clone(), 0.02, 400);
    if v2 < val {
        best = b2;
        val = v2;
    }
    Ok(SymmetryCheck { center: BallPoint::new(ball_from_free(&best))?, deviation: val, degenerate: false })
}
