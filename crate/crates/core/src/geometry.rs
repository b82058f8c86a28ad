//! Poincare-ball geometry: Mobius translations, geodesic distance and
//! reflections across totally geodesic hypersurfaces.

use crate::error::{domain, Error, Result};

/// Points with Euclidean norm above this are rejected.
pub const BOUNDARY_GUARD: f64 = 1.0 - 1e-12;
/// Side-function magnitude treated as lying on a hypersurface.
pub const ON_SURFACE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint {
    coords: Vec<f64>,
}

impl BallPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return domain(format!("dimension must be at least 2, got {}", coords.len()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return domain("non-finite coordinate");
        }
        let n = norm(&coords);
        if n > BOUNDARY_GUARD {
            return domain(format!("|x| = {n} is outside the open ball"));
        }
        Ok(Self { coords })
    }

    pub fn origin(dim: usize) -> Self {
        Self { coords: vec![0.0; dim.max(2)] }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }

    /// Point on the ray through `direction` at geodesic distance `rho` from 0.
    pub fn from_polar(direction: &[f64], rho: f64) -> Result<Self> {
        let n = norm(direction);
        if n == 0.0 || rho < 0.0 {
            return domain("polar form needs a nonzero direction and rho >= 0");
        }
        let r = (0.5 * rho).tanh();
        Self::new(direction.iter().map(|d| d * r / n).collect())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_dims(a: &BallPoint, b: &BallPoint) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    Ok(())
}

fn translate_raw(a: &[f64], x: &[f64]) -> Vec<f64> {
    let d: Vec<f64> = x.iter().zip(a).map(|(x, a)| x - a).collect();
    let dd = dot(&d, &d);
    let aa = dot(a, a);
    let xx = dot(x, x);
    let den = 1.0 - 2.0 * dot(x, a) + xx * aa;
    a.iter()
        .zip(&d)
        .map(|(ai, di)| (dd * ai - (1.0 - aa) * di) / den)
        .collect()
}

/// The Mobius map T_a, sending a to 0 and 0 to a.
pub fn mobius_translate(a: &BallPoint, x: &BallPoint) -> Result<BallPoint> {
    check_dims(a, x)?;
    let y = translate_raw(&a.coords, &x.coords);
    // |T_a x| < 1 exactly; clip round-off that crosses the guard
    let n = norm(&y);
    if n > BOUNDARY_GUARD {
        let s = BOUNDARY_GUARD / n;
        return Ok(BallPoint { coords: y.into_iter().map(|c| c * s).collect() });
    }
    Ok(BallPoint { coords: y })
}

fn rho_from_euclidean(r: f64) -> f64 {
    // log((1+r)/(1-r)) = 2 atanh r
    2.0 * r.atanh()
}

pub fn geodesic_distance(x: &BallPoint, y: &BallPoint) -> Result<f64> {
    check_dims(x, y)?;
    Ok(distance_unchecked(&x.coords, &y.coords))
}

pub(crate) fn distance_unchecked(x: &[f64], y: &[f64]) -> f64 {
    // |T_y x|^2 = |x-y|^2 / (|x-y|^2 + (1-|x|^2)(1-|y|^2))
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    if d2 == 0.0 {
        return 0.0;
    }
    let q = (1.0 - dot(x, x)) * (1.0 - dot(y, y));
    rho_from_euclidean((d2 / (d2 + q)).sqrt())
}

/// Geodesic distance to the origin.
pub fn rho_origin(x: &BallPoint) -> f64 {
    rho_from_euclidean(x.norm())
}

/// Distance between points at radii r and s separated by angle theta.
pub fn distance_from_radii(r: f64, s: f64, theta: f64) -> f64 {
    let r = if r.is_finite() { r.max(0.0) } else { 0.0 };
    let s = if s.is_finite() { s.max(0.0) } else { 0.0 };
    let theta = theta.clamp(0.0, std::f64::consts::PI);
    distance_from_radii_diff(r, s, (r - s).abs(), theta)
}

/// Same as [`distance_from_radii`] with |r - s| supplied separately, which
/// keeps the result accurate when r and s nearly coincide.
pub(crate) fn distance_from_radii_diff(r: f64, s: f64, diff: f64, theta: f64) -> f64 {
    // cosh d - 1 = 2 sinh^2(diff/2) + 2 sinh r sinh s sin^2(theta/2)
    let a = (0.5 * diff).sinh();
    let b = (0.5 * theta).sin();
    let c = 2.0 * a * a + 2.0 * r.sinh() * s.sinh() * b * b;
    // d = acosh(1 + c) = 2 asinh(sqrt(c/2))
    2.0 * (0.5 * c.max(0.0)).sqrt().asinh()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
    On,
}

/// Totally geodesic hypersurface T_b(P), P the hyperplane normal to `normal`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicHypersurface {
    anchor: BallPoint,
    normal: Vec<f64>,
    orientation: f64,
}

impl GeodesicHypersurface {
    /// H⁺ is the side containing the origin; if 0 lies on H the side the
    /// normal points into (at the anchor) is H⁺.
    pub fn new(anchor: BallPoint, normal: Vec<f64>) -> Result<Self> {
        let origin = BallPoint::origin(anchor.dim());
        Self::with_origin(anchor, normal, &origin)
    }

    pub fn with_origin(anchor: BallPoint, normal: Vec<f64>, origin: &BallPoint) -> Result<Self> {
        if normal.len() != anchor.dim() {
            return Err(Error::DimensionMismatch { expected: anchor.dim(), got: normal.len() });
        }
        check_dims(&anchor, origin)?;
        let n = norm(&normal);
        if !(n.is_finite() && n > 0.0) {
            return domain("hypersurface normal must be nonzero");
        }
        let normal: Vec<f64> = normal.iter().map(|c| c / n).collect();
        let mut h = Self { anchor, normal, orientation: 1.0 };
        let s = h.side_value(origin.coords());
        if s.abs() > ON_SURFACE_TOL && s < 0.0 {
            h.orientation = -1.0;
        }
        Ok(h)
    }

    pub fn anchor(&self) -> &BallPoint {
        &self.anchor
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    /// Signed side function, positive on H⁺ and zero on H.
    pub fn side_value(&self, x: &[f64]) -> f64 {
        let y = translate_raw(&self.anchor.coords, x);
        -self.orientation * dot(&y, &self.normal)
    }

    pub(crate) fn reflect_raw(&self, x: &[f64]) -> Vec<f64> {
        let mut y = translate_raw(&self.anchor.coords, x);
        let c = 2.0 * dot(&y, &self.normal);
        for (yi, ni) in y.iter_mut().zip(&self.normal) {
            *yi -= c * ni;
        }
        translate_raw(&self.anchor.coords, &y)
    }
}

pub fn reflect(h: &GeodesicHypersurface, x: &BallPoint) -> Result<BallPoint> {
    check_dims(&h.anchor, x)?;
    if h.side_value(x.coords()).abs() <= ON_SURFACE_TOL {
        return Ok(x.clone());
    }
    let y = h.reflect_raw(&x.coords);
    BallPoint::new(y)
}

pub fn half_space_side(h: &GeodesicHypersurface, x: &BallPoint) -> Side {
    if x.dim() != h.anchor.dim() {
        return Side::On;
    }
    classify(h.side_value(x.coords()))
}

pub(crate) fn classify(s: f64) -> Side {
    if s.abs() <= ON_SURFACE_TOL {
        Side::On
    } else if s > 0.0 {
        Side::Plus
    } else {
        Side::Minus
    }
}
