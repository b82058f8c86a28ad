//! Energy quotient, Nehari scaling, stationarity residual and the explicit
//! constants of the Choquard problem on B^N.

use crate::error::{domain, Error, Result};
use crate::green_kernel::KernelSpec;
use crate::heat_kernel::{heat_diag, HeatEvalOptions};
use crate::radial_field::{check_lambda, lq_norm_slice, ConvolutionOperator, RadialGrid, RadialProfile, Tridiagonal};
use crate::special::{gamma, ln_gamma};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    n: usize,
    alpha: f64,
    p: f64,
    lambda: f64,
}

impl ProblemSpec {
    /// Checks N, alpha and lambda; the exponent is classified separately by
    /// [`validate_exponents`].
    pub fn new(n: usize, alpha: f64, p: f64, lambda: f64) -> Result<Self> {
        if n < 3 {
            return domain(format!("the Choquard problem needs N >= 3, got {n}"));
        }
        KernelSpec::new(n, alpha)?;
        if !(p > 1.0 && p.is_finite()) {
            return domain(format!("exponent p must be finite and > 1, got {p}"));
        }
        check_lambda(n, lambda)?;
        Ok(Self { n, alpha, p, lambda })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kernel(&self) -> KernelSpec {
        KernelSpec::new(self.n, self.alpha).expect("validated at construction")
    }

    /// (N + alpha) / N
    pub fn lower_exponent(&self) -> f64 {
        (self.n as f64 + self.alpha) / self.n as f64
    }

    /// (N + alpha) / (N - 2)
    pub fn critical_exponent(&self) -> f64 {
        (self.n as f64 + self.alpha) / (self.n as f64 - 2.0)
    }

    /// 2Np / (N + alpha), the Lebesgue exponent paired with the nonlocal term.
    pub fn sobolev_exponent(&self) -> f64 {
        2.0 * self.n as f64 * self.p / (self.n as f64 + self.alpha)
    }

    /// Error unless the exponent is strictly subcritical.
    pub fn require_subcritical(&self) -> Result<()> {
        match validate_exponents(self) {
            ExponentClass::Subcritical => Ok(()),
            ExponentClass::Critical => domain(format!(
                "p = {} is the critical exponent (N+alpha)/(N-2) = {}; only subcritical p is solved",
                self.p,
                self.critical_exponent()
            )),
            ExponentClass::Invalid => domain(format!(
                "p = {} lies outside the subcritical range ({}, {})",
                self.p,
                self.lower_exponent(),
                self.critical_exponent()
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentClass {
    Subcritical,
    Critical,
    Invalid,
}

pub fn validate_exponents(spec: &ProblemSpec) -> ExponentClass {
    let lo = spec.lower_exponent();
    let hi = spec.critical_exponent();
    if (spec.p - hi).abs() <= 1e-12 * hi {
        ExponentClass::Critical
    } else if spec.p > lo && spec.p < hi {
        ExponentClass::Subcritical
    } else {
        ExponentClass::Invalid
    }
}

/// A degree-2p homogeneous denominator term J together with its gradient.
pub(crate) trait HomogeneousTerm: Sync {
    fn degree(&self) -> f64;
    /// J(u) and the covector N with dJ = 2p N.
    fn eval(&self, u: &[f64]) -> Result<(f64, Vec<f64>)>;
}

fn signed_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(e)
    }
}

pub(crate) struct NonlocalTerm<'a> {
    conv: &'a ConvolutionOperator,
    weights: &'a [f64],
    p: f64,
}

impl HomogeneousTerm for NonlocalTerm<'_> {
    fn degree(&self) -> f64 {
        self.p
    }

    fn eval(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        let f: Vec<f64> = u.iter().map(|x| x.abs().powf(self.p)).collect();
        let v = self.conv.apply(&f);
        let j: f64 = self.weights.iter().zip(&v).zip(&f).map(|((w, a), b)| w * a * b).sum();
        if !j.is_finite() {
            return Err(Error::Numeric(format!("nonlocal term overflowed ({j})")));
        }
        let cov = u
            .iter()
            .zip(&v)
            .zip(self.weights)
            .map(|((x, a), w)| w * a * signed_pow(*x, self.p - 1.0))
            .collect();
        Ok((j, cov))
    }
}

/// J(u) = int |u|^q dV, degree q.
pub(crate) struct PowerTerm<'a> {
    pub weights: &'a [f64],
    pub q: f64,
}

impl HomogeneousTerm for PowerTerm<'_> {
    fn degree(&self) -> f64 {
        0.5 * self.q
    }

    fn eval(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        let j: f64 = self.weights.iter().zip(u).map(|(w, x)| w * x.abs().powf(self.q)).sum();
        let cov = u.iter().zip(self.weights).map(|(x, w)| w * signed_pow(*x, self.q - 1.0)).collect();
        Ok((j, cov))
    }
}

/// The quadratic form ||u||_lambda^2 restricted to the free nodes.
pub(crate) fn lambda_operator(grid: &RadialGrid, lambda: f64) -> Tridiagonal {
    let n = grid.len() - 1;
    let mut k = grid.stiffness().truncated(n);
    for (d, w) in k.diag.iter_mut().zip(grid.weights()) {
        *d -= lambda * w;
    }
    k
}

/// Quantities shared by the quotient, its gradient and the residual.
#[derive(Debug, Clone)]
pub(crate) struct Parts {
    pub q: f64,
    pub j: f64,
    /// K_lambda u on the free nodes
    pub ku: Vec<f64>,
    /// dJ / 2p on the free nodes
    pub cov: Vec<f64>,
}

pub(crate) fn parts(k_lambda: &Tridiagonal, term: &dyn HomogeneousTerm, u: &[f64]) -> Result<Parts> {
    let n = k_lambda.diag.len();
    let mut full = u.to_vec();
    full[n] = 0.0;
    let ku = k_lambda.apply(&full[..n]);
    let q = k_lambda.quadratic(&full[..n]);
    let (j, mut cov) = term.eval(&full)?;
    cov.truncate(n);
    Ok(Parts { q, j, ku, cov })
}

/// Scale-invariant quotient for a generic homogeneous term.
pub(crate) fn quotient_of(parts: &Parts, p: f64) -> Result<f64> {
    if !(parts.j > 0.0) {
        return domain("the denominator vanishes; quotient undefined");
    }
    Ok(parts.q / parts.j.powf(1.0 / p))
}

/// Discretized Choquard functional on a fixed grid.
#[derive(Debug, Clone)]
pub struct ChoquardFunctional {
    spec: ProblemSpec,
    conv: ConvolutionOperator,
    k_lambda: Tridiagonal,
}

impl ChoquardFunctional {
    pub fn new(grid: Arc<RadialGrid>, spec: ProblemSpec) -> Result<Self> {
        if grid.dim() != spec.n {
            return Err(Error::DimensionMismatch { expected: grid.dim(), got: spec.n });
        }
        let k_lambda = lambda_operator(&grid, spec.lambda);
        let conv = ConvolutionOperator::new(grid, spec.kernel())?;
        Ok(Self { spec, conv, k_lambda })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.conv.grid()
    }

    pub fn convolution(&self) -> &ConvolutionOperator {
        &self.conv
    }

    pub(crate) fn lambda_matrix(&self) -> &Tridiagonal {
        &self.k_lambda
    }

    pub(crate) fn term(&self) -> NonlocalTerm<'_> {
        NonlocalTerm { conv: &self.conv, weights: self.grid().weights(), p: self.spec.p }
    }

    fn check(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.grid().len() {
            return Err(Error::DimensionMismatch { expected: self.grid().len(), got: u.len() });
        }
        if u.iter().any(|x| !x.is_finite()) {
            return domain("profile values must be finite");
        }
        Ok(())
    }

    pub(crate) fn parts(&self, u: &[f64]) -> Result<Parts> {
        self.check(u)?;
        parts(&self.k_lambda, &self.term(), u)
    }

    /// J(u) = <k * |u|^p, |u|^p>.
    pub fn nonlocal(&self, u: &[f64]) -> Result<f64> {
        self.check(u)?;
        let mut full = u.to_vec();
        let n = full.len() - 1;
        full[n] = 0.0;
        Ok(self.term().eval(&full)?.0)
    }

    /// ||u||_lambda^2
    pub fn lambda_form(&self, u: &[f64]) -> Result<f64> {
        self.check(u)?;
        let n = self.k_lambda.diag.len();
        Ok(self.k_lambda.quadratic(&u[..n]))
    }

    pub fn quotient(&self, u: &[f64]) -> Result<f64> {
        let parts = self.parts(u)?;
        if parts.q == 0.0 {
            return domain("energy quotient of the zero profile");
        }
        quotient_of(&parts, self.spec.p)
    }

    /// t* with ||t* u||_lambda^2 = J(t* u).
    pub fn nehari_scale(&self, u: &[f64]) -> Result<f64> {
        let parts = self.parts(u)?;
        if !(parts.j > 0.0) || !(parts.q > 0.0) {
            return domain("Nehari scaling needs a nonzero profile with J > 0");
        }
        Ok((parts.q / parts.j).powf(1.0 / (2.0 * self.spec.p - 2.0)))
    }

    /// |Q - J| / Q
    pub fn nehari_defect(&self, u: &[f64]) -> Result<f64> {
        let parts = self.parts(u)?;
        if !(parts.q > 0.0) {
            return domain("Nehari defect of the zero profile");
        }
        Ok((parts.q - parts.j).abs() / parts.q)
    }

    /// Gradient covector of I on all nodes; zero at the Dirichlet node.
    pub fn gradient_covector(&self, u: &[f64]) -> Result<Vec<f64>> {
        let parts = self.parts(u)?;
        quotient_of(&parts, self.spec.p)?;
        let c = 2.0 / parts.j.powf(1.0 / self.spec.p);
        let r = parts.q / parts.j;
        let mut g: Vec<f64> = parts.ku.iter().zip(&parts.cov).map(|(a, b)| c * (a - r * b)).collect();
        g.push(0.0);
        Ok(g)
    }

    /// Gradient of I in the weighted inner product sum_i W_i a_i b_i.
    pub fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.gradient_covector(u)?;
        for (gi, w) in g.iter_mut().zip(self.grid().weights()) {
            *gi /= w;
        }
        Ok(g)
    }

    fn residual_vector(&self, u: &[f64]) -> Result<(Parts, Vec<f64>)> {
        let parts = self.parts(u)?;
        let r = parts.ku.iter().zip(&parts.cov).map(|(a, b)| a - b).collect();
        Ok((parts, r))
    }

    /// Residual of -Delta u - lambda u = (k * |u|^p)|u|^{p-2}u in the dual
    /// norm of ||.||_lambda, relative to ||u||_lambda.
    pub fn el_residual(&self, u: &[f64]) -> Result<f64> {
        let (parts, r) = self.residual_vector(u)?;
        if !(parts.q > 0.0) {
            return domain("residual of the zero profile");
        }
        let z = self.k_lambda.solve(&r)?;
        let dual: f64 = z.iter().zip(&r).map(|(a, b)| a * b).sum();
        Ok(dual.max(0.0).sqrt() / parts.q.sqrt())
    }

    /// Residual component along u itself, relative to ||u||_lambda^2.
    pub fn scaling_residual(&self, u: &[f64]) -> Result<f64> {
        let (parts, r) = self.residual_vector(u)?;
        if !(parts.q > 0.0) {
            return domain("residual of the zero profile");
        }
        let c: f64 = r.iter().zip(u).map(|(a, b)| a * b).sum();
        Ok(c.abs() / parts.q)
    }
}

fn functional(u: &RadialProfile, spec: &ProblemSpec) -> Result<ChoquardFunctional> {
    ChoquardFunctional::new(u.grid().clone(), *spec)
}

pub fn nonlocal_term(u: &RadialProfile, spec: &ProblemSpec) -> Result<f64> {
    functional(u, spec)?.nonlocal(u.values())
}

pub fn energy_quotient(u: &RadialProfile, spec: &ProblemSpec) -> Result<f64> {
    functional(u, spec)?.quotient(u.values())
}

pub fn nehari_scale(u: &RadialProfile, spec: &ProblemSpec) -> Result<f64> {
    functional(u, spec)?.nehari_scale(u.values())
}

pub fn el_residual(u: &RadialProfile, spec: &ProblemSpec) -> Result<f64> {
    functional(u, spec)?.el_residual(u.values())
}

/// C~(N, alpha, s) built from the diagonal constant C of the heat kernel.
pub fn hls_constant(n: usize, alpha: f64, s: f64, c_heat: f64) -> Result<f64> {
    let nf = n as f64;
    if !(alpha > 0.0 && alpha < nf) {
        return domain(format!("alpha must lie in (0, {n}), got {alpha}"));
    }
    if !(s > 1.0 && s < nf / alpha) {
        return domain(format!("s must lie in (1, N/alpha) = (1, {}), got {s}", nf / alpha));
    }
    if !(c_heat > 0.0 && c_heat.is_finite()) {
        return domain(format!("heat constant must be positive, got {c_heat}"));
    }
    Ok((s / (s - 1.0)).powf(1.0 - alpha / nf) * 2.0 * nf * c_heat.powf(alpha / nf)
        / (alpha * (nf - s * alpha) * gamma(0.5 * alpha)))
}

/// Sharp Euclidean HLS constant C_{N,lam}.
pub fn sharp_hls_constant(n: usize, lam: f64) -> Result<f64> {
    let nf = n as f64;
    if n < 1 || !(lam > 0.0 && lam < nf) {
        return domain(format!("lam must lie in (0, {n}), got {lam}"));
    }
    let ln = 0.5 * lam * PI.ln() + ln_gamma(0.5 * (nf - lam)) - ln_gamma(nf - 0.5 * lam)
        + (-1.0 + lam / nf) * (ln_gamma(0.5 * nf) - ln_gamma(nf));
    Ok(ln.exp())
}

/// sup_t t^{N/2} p_t(0); the supremum over t -> 0 is (4 pi)^{-N/2}.
pub fn heat_diagonal_constant(n: usize) -> Result<f64> {
    let opts = HeatEvalOptions::default();
    let nf = n as f64;
    let f = |t: f64| -> Result<f64> { Ok(heat_diag(n, t, &opts)? * t.powf(0.5 * nf)) };
    let mut best = (4.0 * PI).powf(-0.5 * nf);
    let mut best_t = 0.0;
    for k in 0..=120 {
        let t = 10f64.powf(-4.0 + 6.0 * k as f64 / 120.0);
        let v = f(t)?;
        if v > best {
            best = v;
            best_t = t;
        }
    }
    if best_t > 0.0 {
        // golden-section refinement in ln t around the best sample
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (best_t.ln() - 0.12, best_t.ln() + 0.12);
        for _ in 0..60 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c.exp())? > f(d.exp())? {
                b = d;
            } else {
                a = c;
            }
        }
        best = best.max(f((0.5 * (a + b)).exp())?);
    }
    Ok(best)
}

/// C(N, alpha) = C~(N, alpha, 2N/(N+alpha)) with the heat diagonal constant.
pub fn nonlocal_hls_constant(n: usize, alpha: f64) -> Result<f64> {
    let s = 2.0 * n as f64 / (n as f64 + alpha);
    hls_constant(n, alpha, s, heat_diagonal_constant(n)?)
}

/// Spherical mean over S^2 of (2 sinh(d/2))^{-lam} between radii r and s (N = 3).
pub fn conformal_sphere_average(lam: f64, r: f64, s: f64) -> Result<f64> {
    if !(lam > 0.0 && lam < 2.0) {
        return domain(format!("closed form needs 0 < lam < 2, got {lam}"));
    }
    // 2(cosh d - 1) = (2 sinh(d/2))^2, antiderivative in c = cosh d
    let e = 1.0 - 0.5 * lam;
    let f = |half: f64| (2.0 * half.sinh()).powf(2.0 * e) / (2.0 * e);
    let v = f(0.5 * (r + s)) - f(0.5 * (r - s).abs());
    Ok(2.0 * PI * v / (r.sinh() * s.sinh()))
}

/// |int int f(x) g(y) (2 sinh(rho/2))^{-lam}| / (||f||_q ||g||_q) with
/// q = 2N/(2N - lam), for radial f, g on a three-dimensional grid.
pub fn conformal_hls_ratio(grid: &RadialGrid, lam: f64, f: &[f64], g: &[f64]) -> Result<f64> {
    if grid.dim() != 3 {
        return Err(Error::Unsupported("the conformal HLS check is implemented for N = 3".into()));
    }
    let m = grid.len();
    if f.len() != m || g.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: f.len().min(g.len()) });
    }
    let nodes = grid.nodes();
    let nu = grid.radial_weights();
    let w = grid.weights();
    let mut total = 0.0;
    for i in 0..m {
        if f[i] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for j in 0..m {
            row += conformal_sphere_average(lam, nodes[i], nodes[j])? * nu[j] * g[j];
        }
        total += w[i] * f[i] * row;
    }
    let q = 6.0 / (6.0 - lam);
    let denom = lq_norm_slice(w, f, q) * lq_norm_slice(w, g, q);
    if denom == 0.0 {
        return domain("conformal HLS ratio of a zero function");
    }
    Ok(total.abs() / denom)
}

/// Numerical estimate of S_{lambda,q} = inf ||u||_lambda^2 / ||u||_q^2 on a grid.
pub fn sobolev_constant_estimate(grid: Arc<RadialGrid>, lambda: f64, q: f64) -> Result<f64> {
    let n = grid.dim() as f64;
    if !(q > 2.0 && q < 2.0 * n / (n - 2.0)) {
        return domain(format!("q must lie in (2, 2N/(N-2)), got {q}"));
    }
    check_lambda(grid.dim(), lambda)?;
    let k = lambda_operator(&grid, lambda);
    let term = PowerTerm { weights: grid.weights(), q };
    let seed: Vec<f64> = grid.nodes().iter().map(|r| (-r * r).exp()).collect();
    let opts = crate::solver::DescentOptions { max_iters: 5000, grad_tol: 1e-7, ..Default::default() };
    let out = crate::solver::descend(&k, &term, seed, &opts)?;
    Ok(out.quotient)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponent_classes() {
        let c = |p| validate_exponents(&ProblemSpec::new(3, 2.0, p, 0.0).unwrap());
        assert_eq!(c(2.0), ExponentClass::Subcritical);
        assert_eq!(c(5.0), ExponentClass::Critical);
        assert_eq!(c(1.2), ExponentClass::Invalid);
        assert_eq!(c(6.0), ExponentClass::Invalid);
        assert!(ProblemSpec::new(3, 2.0, 5.0, 0.0).unwrap().require_subcritical().is_err());
        assert!(ProblemSpec::new(3, 2.0, 2.0, 1.0).is_err());
        assert!(ProblemSpec::new(2, 1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn hls_constant_values() {
        let v = hls_constant(3, 1.0, 1.5, 1.0).unwrap();
        assert_relative_eq!(v, 3f64.powf(2.0 / 3.0) * 4.0 / PI.sqrt(), max_relative = 1e-13);
        assert!(hls_constant(3, 1.0, 1.5, 2.0).unwrap() > v);
        assert!(hls_constant(3, 1.0, 1.0 + 1e-9, 1.0).unwrap() > 1e5);
        assert!(hls_constant(3, 1.0, 3.0, 1.0).is_err());
        assert!(hls_constant(3, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn sharp_constant_at_half_dimension() {
        // N = 4, lam = 2: pi Gamma(1)/Gamma(3) (Gamma(2)/Gamma(4))^{-1/2}
        let v = sharp_hls_constant(4, 2.0).unwrap();
        assert_relative_eq!(v, PI / 2.0 * 6f64.sqrt(), max_relative = 1e-12);
        for k in 1..30 {
            assert!(sharp_hls_constant(5, 5.0 * k as f64 / 30.0).unwrap() > 0.0);
        }
        assert!(sharp_hls_constant(3, 3.0).is_err());
    }

    #[test]
    fn heat_constant_three() {
        let c = heat_diagonal_constant(3).unwrap();
        assert_relative_eq!(c, (4.0 * PI).powf(-1.5), max_relative = 1e-12);
        let big = nonlocal_hls_constant(3, 2.0).unwrap();
        assert!((big - 0.723).abs() < 1e-3, "{big}");
    }

    #[test]
    fn conformal_average_matches_quadrature() {
        let (lam, r, s) = (1.3, 0.7, 1.9);
        let f = |th: f64| {
            let d = crate::geometry::distance_from_radii(r, s, th);
            (2.0 * (0.5 * d).sinh()).powf(-lam) * th.sin()
        };
        let q = crate::quadrature::gauss_kronrod(f, 0.0, PI, 0.0, 1e-13, 100).unwrap().value * 2.0 * PI;
        assert_relative_eq!(conformal_sphere_average(lam, r, s).unwrap(), q, max_relative = 1e-11);
    }

    fn small() -> (Arc<RadialGrid>, ChoquardFunctional) {
        let g = Arc::new(RadialGrid::new(3, 15.0, 301).unwrap());
        let f = ChoquardFunctional::new(g.clone(), ProblemSpec::new(3, 2.0, 2.0, 0.5).unwrap()).unwrap();
        (g, f)
    }

    #[test]
    fn homogeneity_and_scaling() {
        let (g, f) = small();
        let u: Vec<f64> = g.nodes().iter().map(|r| (-0.5 * r * r).exp() * (1.0 + r)).collect();
        let u2: Vec<f64> = u.iter().map(|x| 2.0 * x).collect();
        let u3: Vec<f64> = u.iter().map(|x| -3.0 * x).collect();
        assert_relative_eq!(f.nonlocal(&u2).unwrap(), 16.0 * f.nonlocal(&u).unwrap(), max_relative = 1e-12);
        assert_relative_eq!(f.quotient(&u3).unwrap(), f.quotient(&u).unwrap(), max_relative = 1e-12);
        let t = f.nehari_scale(&u).unwrap();
        let v: Vec<f64> = u.iter().map(|x| t * x).collect();
        assert!(f.nehari_defect(&v).unwrap() < 1e-12);
        assert!(f.scaling_residual(&v).unwrap() < 1e-12);
        let q = f.lambda_form(&v).unwrap();
        assert_relative_eq!(f.quotient(&v).unwrap(), q.powf(0.5), max_relative = 1e-12);
        let z = vec![0.0; g.len()];
        assert_eq!(f.nonlocal(&z).unwrap(), 0.0);
        assert!(f.quotient(&z).is_err());
    }

    #[test]
    fn gradient_is_tangent_and_matches_differences() {
        let (g, f) = small();
        let u: Vec<f64> = g.nodes().iter().map(|r| (-r).exp() / (1.0 + r * r)).collect();
        let grad = f.gradient(&u).unwrap();
        let w = g.weights();
        let dot: f64 = grad.iter().zip(&u).zip(w).map(|((a, b), c)| a * b * c).sum();
        let scale: f64 = grad.iter().zip(w).map(|(a, c)| a * a * c).sum::<f64>().sqrt()
            * u.iter().zip(w).map(|(a, c)| a * a * c).sum::<f64>().sqrt();
        assert!(dot.abs() < 1e-10 * scale);
        let phi: Vec<f64> = g.nodes().iter().map(|r| (0.3 * r).sin() * (-r).exp()).collect();
        let eps = 1e-5;
        let plus: Vec<f64> = u.iter().zip(&phi).map(|(a, b)| a + eps * b).collect();
        let minus: Vec<f64> = u.iter().zip(&phi).map(|(a, b)| a - eps * b).collect();
        let fd = (f.quotient(&plus).unwrap() - f.quotient(&minus).unwrap()) / (2.0 * eps);
        let an: f64 = grad.iter().zip(&phi).zip(w).map(|((a, b), c)| a * b * c).sum();
        assert!((fd - an).abs() < 1e-6 * an.abs().max(1.0), "{fd} {an}");
    }

    #[test]
    fn residual_is_order_one_for_a_bump() {
        let (g, f) = small();
        let u: Vec<f64> = g.nodes().iter().map(|r| if *r < 1.0 { (1.0 - r * r).powi(2) } else { 0.0 }).collect();
        let t = f.nehari_scale(&u).unwrap();
        let v: Vec<f64> = u.iter().map(|x| t * x).collect();
        let r = f.el_residual(&v).unwrap();
        assert!(r > 0.05 && r < 10.0, "{r}");
    }
}
