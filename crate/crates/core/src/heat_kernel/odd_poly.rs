//! Exact images of e^{-rho^2/4t} under powers of -(1/sinh rho) d/drho.
//!
//! Terms are monomials rho^a t^{-b} coth^c csch^d with rational coefficients.
//! The Gaussian factor is carried implicitly.

use num_rational::Ratio;
use std::collections::BTreeMap;

pub type Coeff = Ratio<i64>;

/// Exponents (a, b, c, d) of rho^a t^{-b} coth^c(rho) csch^d(rho).
pub type Monomial = (u32, u32, u32, u32);

#[derive(Debug, Clone, PartialEq)]
pub struct OddKernelPolynomial {
    dim: usize,
    order: usize,
    terms: BTreeMap<Monomial, Coeff>,
}

fn add(map: &mut BTreeMap<Monomial, Coeff>, k: Monomial, v: Coeff) {
    let e = map.entry(k).or_insert_with(|| Coeff::from_integer(0));
    *e += v;
    if *e == Coeff::from_integer(0) {
        map.remove(&k);
    }
}

/// One application of P -> -csch (P' - rho/(2t) P).
pub fn recurrence_step(p: &BTreeMap<Monomial, Coeff>) -> BTreeMap<Monomial, Coeff> {
    let mut inner = BTreeMap::new();
    let half = Coeff::new(1, 2);
    for (&(a, b, c, d), &v) in p {
        if a > 0 {
            add(&mut inner, (a - 1, b, c, d), v * a as i64);
        }
        if c > 0 {
            add(&mut inner, (a, b, c - 1, d + 2), -v * c as i64);
        }
        if d > 0 {
            add(&mut inner, (a, b, c + 1, d), -v * d as i64);
        }
        add(&mut inner, (a + 1, b + 1, c, d), -v * half);
    }
    inner
        .into_iter()
        .map(|((a, b, c, d), v)| ((a, b, c, d + 1), -v))
        .collect()
}

impl OddKernelPolynomial {
    /// Polynomial for odd dimension `dim = 2m + 1`.
    pub fn new(dim: usize) -> crate::Result<Self> {
        if dim < 3 || dim.is_multiple_of(2) {
            return crate::error::domain(format!("odd dimension >= 3 required, got {dim}"));
        }
        Ok(Self::with_order((dim - 1) / 2, dim))
    }

    pub(crate) fn with_order(order: usize, dim: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((0, 0, 0, 0), Coeff::from_integer(1));
        for _ in 0..order {
            terms = recurrence_step(&terms);
        }
        Self { dim, order, terms }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, Coeff> {
        &self.terms
    }

    /// Coefficients c_j with bracket = sum_j c_j t^{-j}, for rho > 0.
    pub fn t_coefficients(&self, rho: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.order + 1];
        let coth = 1.0 / rho.tanh();
        let ln_rho = rho.ln();
        let ln_csch = -crate::special::ln_sinh(rho);
        let ln_coth = coth.ln();
        for (&(a, b, c, d), v) in &self.terms {
            let f = *v.numer() as f64 / *v.denom() as f64;
            let l = a as f64 * ln_rho + c as f64 * ln_coth + d as f64 * ln_csch;
            out[b as usize] += f * l.exp();
        }
        out
    }

    /// Evaluate the bracket (without the Gaussian factor) at (rho, t).
    pub fn eval(&self, rho: f64, t: f64) -> f64 {
        let c = self.t_coefficients(rho);
        c.iter().rev().fold(0.0, |acc, cj| acc / t + cj) // Horner in 1/t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one_is_half_rho_over_t_sinh() {
        let p = OddKernelPolynomial::new(3).unwrap();
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.terms()[&(1, 1, 0, 1)], Coeff::new(1, 2));
    }

    #[test]
    fn reapplying_recurrence_reproduces_terms() {
        let p5 = OddKernelPolynomial::new(5).unwrap();
        let p3 = OddKernelPolynomial::new(3).unwrap();
        assert_eq!(recurrence_step(p3.terms()), *p5.terms());
    }

    #[test]
    fn every_term_has_enough_csch() {
        for n in [3usize, 5, 7, 9] {
            let p = OddKernelPolynomial::new(n).unwrap();
            let m = (n - 1) / 2;
            assert!(p.terms().keys().all(|&(_, b, _, d)| d as usize >= m && b as usize <= m));
        }
    }

    #[test]
    fn matches_numerical_derivative_order_two() {
        // F_2 = -(1/sinh) d/drho F_1 with F_1 = (rho/(2t sinh rho)) e^{-rho^2/4t}
        let t = 0.7;
        let f1 = |r: f64| r / (2.0 * t * r.sinh()) * (-r * r / (4.0 * t)).exp();
        let p = OddKernelPolynomial::new(5).unwrap();
        for &r in &[1.0, 1.7, 3.0] {
            let h = 1e-5;
            let d = (f1(r + h) - f1(r - h)) / (2.0 * h);
            let want = -d / r.sinh();
            let got = p.eval(r, t) * (-r * r / (4.0 * t)).exp();
            assert!((got - want).abs() < 1e-8 * want.abs(), "{got} {want}");
        }
    }

    #[test]
    fn rejects_even() {
        assert!(OddKernelPolynomial::new(4).is_err());
    }
}
