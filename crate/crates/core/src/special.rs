//! Small special-function helpers shared across modules.

use std::f64::consts::PI;

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Surface area of the unit sphere S^k in R^{k+1}.
pub fn sphere_area(k: usize) -> f64 {
    let h = 0.5 * (k as f64 + 1.0);
    2.0 * PI.powf(h) / gamma(h)
}

/// ln sinh(x) for x > 0, accurate for large and small arguments.
pub fn ln_sinh(x: f64) -> f64 {
    if x > 1.0 {
        x + (-(-2.0 * x).exp()).ln_1p() - std::f64::consts::LN_2
    } else {
        x.sinh().ln()
    }
}

/// Euclidean Riesz constant Gamma((N-a)/2) / (Gamma(a/2) pi^{N/2} 2^a).
pub fn riesz_constant(n: usize, alpha: f64) -> f64 {
    let nf = n as f64;
    gamma(0.5 * (nf - alpha)) / (gamma(0.5 * alpha) * PI.powf(0.5 * nf) * 2f64.powf(alpha))
}

/// Hyperbolic volume of the geodesic ball of radius r in dimension n.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    let f = |s: f64| s.sinh().powi(n as i32 - 1);
    let q = crate::quadrature::gauss_kronrod(f, 0.0, r, 0.0, 1e-13, 200)
        .map(|q| q.value)
        .unwrap_or(f64::NAN);
    sphere_area(n - 1) * q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn ln_sinh_branches_agree() {
        for &x in &[0.5, 0.999, 1.001, 3.0, 20.0] {
            assert!((ln_sinh(x) - x.sinh().ln()).abs() < 1e-14 * (1.0 + x));
        }
        assert!((ln_sinh(800.0) - (800.0 - std::f64::consts::LN_2)).abs() < 1e-12);
    }

    #[test]
    fn ball_volume_closed_form_n3() {
        let r = 2.0f64;
        let exact = PI * ((2.0 * r).sinh() - 2.0 * r);
        assert!((ball_volume(3, r) - exact).abs() < 1e-11 * exact);
    }
}
