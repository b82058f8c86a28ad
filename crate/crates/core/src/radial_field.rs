//! Radial functions on geodesic balls of B^N.
//!
//! Nodes follow a softplus map rho = s ln(1 + e^{(L xi - c)/s}) of a uniform
//! parameter xi in [0, 1]: geometric near the origin and uniform beyond
//! rho ~ 1. Volume integrals use the trapezoid rule in xi. The gradient
//! form uses one difference quotient per cell, weighted by the exact cell
//! volume, which gives a tridiagonal stiffness matrix. The last node is a
//! Dirichlet node with value zero.

use crate::error::{domain, Error, Result};
use crate::green_kernel::{green_tail_bound, kernel_table, KernelSpec, KernelTable};
use crate::quadrature::{gauss_legendre, tanh_sinh};
use crate::special::{ln_sinh, sphere_area};
use rayon::prelude::*;
use std::sync::Arc;

pub const DEFAULT_NODES: usize = 2000;
pub const DEFAULT_R_MAX: f64 = 40.0;
const MAP_SOFTNESS: f64 = 0.25;
const MAP_SHIFT: f64 = 2.5;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dim: usize,
    r_max: f64,
    slope: f64,
    nodes: Vec<f64>,
    jac: Vec<f64>,
    weights: Vec<f64>,
    /// omega_{N-1} int_cell sinh^{N-1}, one per cell [rho_i, rho_{i+1}]
    cell_volumes: Vec<f64>,
}

impl RadialGrid {
    /// Grid with `node_count` nodes on (0, r_max]; the last node is r_max.
    pub fn new(dim: usize, r_max: f64, node_count: usize) -> Result<Self> {
        if dim < 3 {
            return domain(format!("radial grids need N >= 3, got {dim}"));
        }
        if !(r_max > 1.0 && r_max <= 200.0) {
            return domain(format!("R_max must lie in (1, 200], got {r_max}"));
        }
        if node_count < 16 {
            return domain(format!("need at least 16 nodes, got {node_count}"));
        }
        let s = MAP_SOFTNESS;
        // L chosen so that the map hits r_max at xi = 1
        let slope = MAP_SHIFT + s * (r_max / s + (-(-r_max / s).exp()).ln_1p());
        let n = node_count - 1;
        let h = 1.0 / n as f64;
        let map = |xi: f64| {
            let z = (slope * xi - MAP_SHIFT) / s;
            let rho = if z > 30.0 { s * (z + (-z).exp().ln_1p()) } else { s * z.exp().ln_1p() };
            let jac = slope / (1.0 + (-z).exp());
            (rho, jac)
        };
        let mut nodes = Vec::with_capacity(node_count);
        let mut jac = Vec::with_capacity(node_count);
        for i in 0..=n {
            let (r, j) = map(i as f64 * h);
            nodes.push(r);
            jac.push(j);
        }
        nodes[n] = r_max;
        let omega = sphere_area(dim - 1);
        let p = dim as i32 - 1;
        let mut weights: Vec<f64> = nodes
            .iter()
            .zip(&jac)
            .map(|(r, j)| omega * (p as f64 * ln_sinh(*r)).exp() * j * h)
            .collect();
        weights[0] *= 0.5;
        weights[n] *= 0.5;
        let (gx, gw) = gauss_legendre(3);
        let cell_volumes = nodes
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let half = 0.5 * (b - a);
                let mid = 0.5 * (a + b);
                let s: f64 = gx.iter().zip(&gw).map(|(x, wt)| wt * (p as f64 * ln_sinh(mid + half * x)).exp()).sum();
                omega * half * s
            })
            .collect();
        Ok(Self { dim, r_max, slope, nodes, jac, weights, cell_volumes })
    }

    /// Default 2000-node grid on B_40.
    pub fn default_for(dim: usize) -> Result<Self> {
        Self::new(dim, DEFAULT_R_MAX, DEFAULT_NODES)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cell_volumes(&self) -> &[f64] {
        &self.cell_volumes
    }

    /// Spacing of the uniform part of the mesh.
    pub fn uniform_spacing(&self) -> f64 {
        self.slope / (self.len() - 1) as f64
    }

    pub fn max_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Node weights with the sphere area divided out: sinh^{N-1} d rho.
    pub fn radial_weights(&self) -> Vec<f64> {
        let omega = sphere_area(self.dim - 1);
        self.weights.iter().map(|w| w / omega).collect()
    }

    fn xi_to_rho(&self, xi: f64) -> f64 {
        let s = MAP_SOFTNESS;
        let z = (self.slope * xi - MAP_SHIFT) / s;
        if z > 30.0 {
            s * (z + (-z).exp().ln_1p())
        } else {
            s * z.exp().ln_1p()
        }
    }

    /// Interval of radii represented by node i.
    pub fn cell_bounds(&self, i: usize) -> (f64, f64) {
        let n = self.len() - 1;
        let h = 1.0 / n as f64;
        let xi = i as f64 * h;
        let lo = if i == 0 { self.nodes[0] } else { self.xi_to_rho(xi - 0.5 * h) };
        let hi = if i == n { self.r_max } else { self.xi_to_rho(xi + 0.5 * h) };
        (lo, hi)
    }

    /// Stiffness matrix of the gradient form as (diagonal, upper) for all nodes.
    pub fn stiffness(&self) -> Tridiagonal {
        let m = self.len();
        let mut diag = vec![0.0; m];
        let mut off = vec![0.0; m - 1];
        for c in 0..m - 1 {
            let dr = self.nodes[c + 1] - self.nodes[c];
            let k = self.cell_volumes[c] / (dr * dr);
            diag[c] += k;
            diag[c + 1] += k;
            off[c] = -k;
        }
        Tridiagonal { diag, off }
    }

    /// Linear interpolation of samples (rho_k, v_k) onto the grid, zero outside.
    pub fn interpolate(&self, rhos: &[f64], values: &[f64]) -> Result<Vec<f64>> {
        if rhos.len() != values.len() || rhos.len() < 2 {
            return domain("interpolation needs at least two matching samples");
        }
        if rhos.windows(2).any(|w| w[1] <= w[0]) {
            return domain("sample radii must be strictly increasing");
        }
        let mut out = Vec::with_capacity(self.len());
        let mut k = 0;
        for &r in &self.nodes {
            if r < rhos[0] {
                out.push(values[0]);
                continue;
            }
            if r > rhos[rhos.len() - 1] {
                out.push(0.0);
                continue;
            }
            while k + 2 < rhos.len() && rhos[k + 1] < r {
                k += 1;
            }
            let t = (r - rhos[k]) / (rhos[k + 1] - rhos[k]);
            out.push(values[k] + t.clamp(0.0, 1.0) * (values[k + 1] - values[k]));
        }
        let last = out.len() - 1;
        out[last] = 0.0;
        Ok(out)
    }
}

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    /// Row sums diag_i + off_{i-1} + off_i.
    fn row_sums(&self) -> Vec<f64> {
        let mut s = self.diag.clone();
        for (i, o) in self.off.iter().enumerate() {
            s[i] += o;
            s[i + 1] += o;
        }
        s
    }

    // Both products are formed from differences of neighbours so that smooth
    // inputs do not lose digits to the h^-2 scale of the entries.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.row_sums().iter().zip(x).map(|(s, v)| s * v).collect();
        for (i, o) in self.off.iter().enumerate() {
            let d = x[i] - x[i + 1];
            y[i] -= o * d;
            y[i + 1] += o * d;
        }
        y
    }

    pub fn quadratic(&self, x: &[f64]) -> f64 {
        let mut s: f64 = self.row_sums().iter().zip(x).map(|(s, v)| s * v * v).sum();
        for (i, o) in self.off.iter().enumerate() {
            let d = x[i] - x[i + 1];
            s -= o * d * d;
        }
        s
    }

    /// Leading principal block of size k.
    pub fn truncated(&self, k: usize) -> Tridiagonal {
        Tridiagonal { diag: self.diag[..k].to_vec(), off: self.off[..k - 1].to_vec() }
    }

    /// Solve with the Thomas algorithm; fails unless all pivots are positive.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut piv = self.diag[0];
        if !(piv > 0.0) {
            return Err(Error::Numeric("tridiagonal system is not positive definite".into()));
        }
        c[0] = if n > 1 { self.off[0] / piv } else { 0.0 };
        d[0] = b[0] / piv;
        for i in 1..n {
            piv = self.diag[i] - self.off[i - 1] * c[i - 1];
            if !(piv > 0.0) {
                return Err(Error::Numeric("tridiagonal system is not positive definite".into()));
            }
            if i < n - 1 {
                c[i] = self.off[i] / piv;
            }
            d[i] = (b[i] - self.off[i - 1] * d[i - 1]) / piv;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }
}

/// Sampled radial function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return domain("profile values must be finite");
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut values: Vec<f64> = grid.nodes().iter().map(|&r| f(r)).collect();
        let n = values.len() - 1;
        values[n] = 0.0;
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| c * v).collect() }
    }

    /// Values with the Dirichlet node forced to zero.
    pub(crate) fn dirichlet_values(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        let n = v.len() - 1;
        v[n] = 0.0;
        v
    }
}

pub fn lq_norm(u: &RadialProfile, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return domain(format!("L^q norm needs q >= 1, got {q}"));
    }
    Ok(lq_norm_slice(u.grid.weights(), &u.values, q))
}

pub(crate) fn lq_norm_slice(w: &[f64], u: &[f64], q: f64) -> f64 {
    let s: f64 = w.iter().zip(u).map(|(w, v)| w * v.abs().powf(q)).sum();
    s.powf(1.0 / q)
}

pub(crate) fn check_lambda(dim: usize, lambda: f64) -> Result<()> {
    let bottom = 0.25 * ((dim - 1) * (dim - 1)) as f64;
    if !(lambda < bottom) || !lambda.is_finite() {
        return domain(format!(
            "lambda = {lambda} must be below the spectral bottom (N-1)^2/4 = {bottom}; \
             at the bottom the form is not coercive on a truncated grid"
        ));
    }
    Ok(())
}

/// Squared norm ||u||_lambda^2 = int |u'|^2 - lambda u^2.
pub fn h1_lambda_form(u: &RadialProfile, lambda: f64) -> Result<f64> {
    check_lambda(u.grid.dim(), lambda)?;
    let v = u.dirichlet_values();
    let k = u.grid.stiffness().quadratic(&v);
    let m: f64 = u.grid.weights().iter().zip(&v).map(|(w, x)| w * x * x).sum();
    Ok(k - lambda * m)
}

pub fn h1_lambda_norm(u: &RadialProfile, lambda: f64) -> Result<f64> {
    let q = h1_lambda_form(u, lambda)?;
    if q < 0.0 {
        return Err(Error::Numeric(format!("lambda form is negative ({q:e}); grid too coarse")));
    }
    Ok(q.sqrt())
}

pub fn rayleigh_quotient(u: &RadialProfile) -> Result<f64> {
    let v = u.dirichlet_values();
    let m: f64 = u.grid.weights().iter().zip(&v).map(|(w, x)| w * x * x).sum();
    if m == 0.0 {
        return domain("Rayleigh quotient of the zero profile");
    }
    Ok(u.grid.stiffness().quadratic(&v) / m)
}

/// Smallest eigenvalue of the discrete Dirichlet Laplacian (stiffness vs mass).
pub fn discrete_spectral_bottom(grid: &RadialGrid) -> Result<f64> {
    let n = grid.len() - 1;
    let k = grid.stiffness().truncated(n);
    let w = &grid.weights()[..n];
    // symmetric form W^{-1/2} K W^{-1/2}, inverse iteration with shift 0
    let s: Vec<f64> = w.iter().map(|x| 1.0 / x.sqrt()).collect();
    let mut m = k.clone();
    for i in 0..n {
        m.diag[i] *= s[i] * s[i];
    }
    for i in 0..n - 1 {
        m.off[i] *= s[i] * s[i + 1];
    }
    let mut x = vec![1.0; n];
    let mut mu = 0.0;
    for _ in 0..200 {
        let y = m.solve(&x)?;
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let new_mu = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / (ny * ny);
        x = y.iter().map(|v| v / ny).collect();
        if (new_mu - mu).abs() < 1e-14 * new_mu.abs() {
            mu = new_mu;
            break;
        }
        mu = new_mu;
    }
    Ok(mu)
}

/// Spherical average of k_{alpha,N} between spheres of radii r and s.
pub fn sphere_average_kernel(spec: &KernelSpec, r: f64, s: f64) -> Result<f64> {
    let table = kernel_table(*spec, r + s + 2.0)?;
    table.sphere_average(r, s, (r - s).abs())
}

/// Discretized radial convolution f -> k_{alpha,N} * f on a fixed grid.
#[derive(Debug, Clone)]
pub struct ConvolutionOperator {
    spec: KernelSpec,
    grid: Arc<RadialGrid>,
    matrix: Vec<f64>,
    radial_weights: Vec<f64>,
    tail_bound: Option<f64>,
}

fn diagonal_entry(table: &KernelTable, grid: &RadialGrid, i: usize, nu: f64) -> Result<f64> {
    let r = grid.nodes()[i];
    if table.spec().alpha() > 1.0 {
        return table.sphere_average(r, r, 0.0);
    }
    // integrable diagonal singularity: average over the node's cell
    let (lo, hi) = grid.cell_bounds(i);
    let p = grid.dim() as i32 - 1;
    let err = std::sync::Mutex::new(None);
    let f = |s: f64, diff: f64| match table.sphere_average(r, s, diff) {
        Ok(a) => a * (p as f64 * ln_sinh(s)).exp(),
        Err(e) => {
            err.lock().unwrap().get_or_insert(e);
            0.0
        }
    };
    let left = tanh_sinh(|s, _, db| f(s, db), lo, r, 1e-10).value;
    let right = tanh_sinh(|s, da, _| f(s, da), r, hi, 1e-10).value;
    if let Some(e) = err.into_inner().unwrap() {
        return Err(e);
    }
    Ok((left + right) / nu)
}

impl ConvolutionOperator {
    pub fn new(grid: Arc<RadialGrid>, spec: KernelSpec) -> Result<Self> {
        if spec.dim() != grid.dim() {
            return Err(Error::DimensionMismatch { expected: grid.dim(), got: spec.dim() });
        }
        let table = kernel_table(spec, 2.0 * grid.r_max() + 10.0)?;
        let nu = grid.radial_weights();
        let m = grid.len();
        let nodes = grid.nodes();
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|i| -> Result<Vec<f64>> {
                let mut row = Vec::with_capacity(m - i);
                row.push(diagonal_entry(&table, &grid, i, nu[i])?);
                for j in i + 1..m {
                    row.push(table.sphere_average(nodes[i], nodes[j], nodes[j] - nodes[i])?);
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        let mut matrix = vec![0.0; m * m];
        for (i, row) in rows.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                let j = i + k;
                matrix[i * m + j] = *v;
                matrix[j * m + i] = *v;
            }
        }
        let tail_bound = green_tail_bound(&spec, (0.5 * grid.r_max()).max(1.0)).ok();
        Ok(Self { spec, grid, matrix, radial_weights: nu, tail_bound })
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// Bound on the kernel between the inner half of the grid and the
    /// region beyond R_max; `None` when no bound of that form is available.
    pub fn tail_bound(&self) -> Option<f64> {
        self.tail_bound
    }

    /// Entry A(r_i, r_j) of the averaged kernel.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.grid.len() + j]
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let m = self.grid.len();
        let g: Vec<f64> = f.iter().zip(&self.radial_weights).map(|(a, b)| a * b).collect();
        self.matrix
            .par_chunks(m)
            .map(|row| row.iter().zip(&g).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn apply_profile(&self, u: &RadialProfile) -> Result<RadialProfile> {
        if u.grid.as_ref() != self.grid.as_ref() {
            return domain("profile lives on a different grid");
        }
        RadialProfile::new(self.grid.clone(), self.apply(&u.values))
    }
}

/// (-Delta)^{-alpha/2} u = k_{alpha,N} * u on the profile's grid.
pub fn inverse_frac_laplacian(u: &RadialProfile, spec: &KernelSpec) -> Result<RadialProfile> {
    ConvolutionOperator::new(u.grid.clone(), *spec)?.apply_profile(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ball_volume;
    use proptest::prelude::*;

    fn grid(n: usize) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(3, 12.0, n).unwrap())
    }

    #[test]
    fn grid_shape() {
        let g = RadialGrid::default_for(3).unwrap();
        assert_eq!(g.len(), DEFAULT_NODES);
        assert!(g.nodes()[0] > 0.0 && g.nodes()[0] < 1e-4);
        assert_eq!(*g.nodes().last().unwrap(), 40.0);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        assert!(g.weights().iter().all(|w| *w > 0.0));
        let vol = ball_volume(3, 40.0);
        let s: f64 = g.weights().iter().sum();
        assert!((s / vol - 1.0).abs() < 5e-4);
        let c: f64 = g.cell_volumes().iter().sum();
        assert!((c / vol - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(RadialGrid::new(2, 10.0, 100).is_err());
        assert!(RadialGrid::new(3, 0.5, 100).is_err());
        assert!(RadialGrid::new(3, 10.0, 4).is_err());
    }

    #[test]
    fn indicator_l1_is_ball_volume() {
        let g = grid(4001);
        let u = RadialProfile::from_fn(g.clone(), |r| if r <= 2.0 { 1.0 } else { 0.0 }).unwrap();
        let v = lq_norm(&u, 1.0).unwrap();
        let exact = ball_volume(3, 2.0);
        assert!((v / exact - 1.0).abs() < 5e-3);
        assert!(lq_norm(&u, 0.5).is_err());
    }

    #[test]
    fn lambda_norm_rules() {
        let g = grid(801);
        let z = RadialProfile::from_fn(g.clone(), |_| 0.0).unwrap();
        assert_eq!(h1_lambda_norm(&z, 0.3).unwrap(), 0.0);
        let u = RadialProfile::from_fn(g.clone(), |r| (-r * r).exp()).unwrap();
        assert!(h1_lambda_norm(&u, 1.0).is_err());
        let q0 = h1_lambda_form(&u, 0.0).unwrap();
        assert_eq!(q0, g.stiffness().quadratic(&u.dirichlet_values()));
        assert!(h1_lambda_norm(&u, 0.99).unwrap() > 0.0);
        assert!(rayleigh_quotient(&z).is_err());
    }

    #[test]
    fn gradient_form_converges() {
        // u = e^{-r^2}: int u'^2 sinh^2 * 4 pi
        let exact = {
            let f = |r: f64| 4.0 * r * r * (-2.0 * r * r).exp() * r.sinh().powi(2);
            4.0 * std::f64::consts::PI * crate::quadrature::gauss_kronrod(f, 0.0, 12.0, 0.0, 1e-14, 100).unwrap().value
        };
        let e1 = (h1_lambda_form(&RadialProfile::from_fn(grid(401), |r| (-r * r).exp()).unwrap(), 0.0).unwrap() - exact).abs();
        let e2 = (h1_lambda_form(&RadialProfile::from_fn(grid(801), |r| (-r * r).exp()).unwrap(), 0.0).unwrap() - exact).abs();
        let ratio = e1 / e2;
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn thomas_solves() {
        let t = Tridiagonal { diag: vec![4.0, 5.0, 6.0], off: vec![1.0, 2.0] };
        let x = t.solve(&[1.0, 2.0, 3.0]).unwrap();
        let y = t.apply(&x);
        for (a, b) in y.iter().zip(&[1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(Tridiagonal { diag: vec![-1.0], off: vec![] }.solve(&[1.0]).is_err());
    }

    #[test]
    fn spectral_bottom_above_hyperbolic_bound() {
        let g = RadialGrid::new(3, 20.0, 1001).unwrap();
        let b = discrete_spectral_bottom(&g).unwrap();
        let exact = 1.0 + (std::f64::consts::PI / 20.0).powi(2);
        assert!((b - exact).abs() < 1e-3, "{b} {exact}");
    }

    #[test]
    fn sphere_average_far_field() {
        let s = KernelSpec::new(3, 1.5).unwrap();
        let a = sphere_average_kernel(&s, 10.0, 0.01).unwrap();
        let k = crate::green_kernel::green_eval(&s, 10.0, &Default::default()).unwrap();
        assert!((a / (4.0 * std::f64::consts::PI * k) - 1.0).abs() < 1e-3);
        let b = sphere_average_kernel(&s, 0.01, 10.0).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn theta_route_matches_shell_route() {
        // the generic route on an N = 3 table must agree with the shell form
        let spec = KernelSpec::new(3, 1.2).unwrap();
        let t = kernel_table(spec, 30.0).unwrap();
        let ls = |r: f64, s: f64| {
            let f = |theta: f64| t.eval(crate::geometry::distance_from_radii(r, s, theta)) * theta.sin();
            let tw = (r - s).abs() / (r.sinh() * s.sinh()).sqrt();
            let tau_max = (std::f64::consts::PI / tw).asinh();
            2.0 * std::f64::consts::PI
                * crate::quadrature::gauss_kronrod(|u| f(tw * u.sinh()) * tw * u.cosh(), 0.0, tau_max, 0.0, 1e-12, 500)
                    .unwrap()
                    .value
        };
        for &(r, s) in &[(0.3, 0.31), (1.0, 2.5), (5.0, 5.01)] {
            let a = t.sphere_average(r, s, (r - s).abs()).unwrap();
            let b = ls(r, s);
            assert!((a / b - 1.0).abs() < 1e-8, "{r} {s} {a} {b}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn norm_homogeneity(c in -5.0f64..5.0, q in 1.0f64..6.0) {
            let g = grid(201);
            let u = RadialProfile::from_fn(g, |r| (1.0 + r).recip() * (-r).exp()).unwrap();
            let a = lq_norm(&u.scaled(c), q).unwrap();
            let b = c.abs() * lq_norm(&u, q).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
        }
    }
}
