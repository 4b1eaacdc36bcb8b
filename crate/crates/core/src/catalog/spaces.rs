//! Kernel and closed-form geometry of each catalog space.

use std::f64::consts::PI;

use super::{DeBrangesFunction, SchurFunction};
use crate::linalg::gauss_legendre_unit;
use crate::space::{ClosedFormGeometry, CoherentProduct, Domain, Point, Tangent};
use crate::C64;

fn real(p: &Point) -> &[f64] {
    match p {
        Point::Real(v) => v,
        _ => unreachable!("checked by the domain"),
    }
}

fn cvec(p: &Point) -> &[C64] {
    match p {
        Point::Complex(v) => v,
        _ => unreachable!("checked by the domain"),
    }
}

fn scalar(p: &Point) -> C64 {
    match p {
        Point::Scalar(c) => *c,
        _ => unreachable!("checked by the domain"),
    }
}

fn positive(p: &Point) -> f64 {
    match p {
        Point::Positive(x) => *x,
        _ => unreachable!("checked by the domain"),
    }
}

/// `a* b` for complex vectors.
pub(crate) fn dotc(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn tangent_scalar(x: &Tangent) -> C64 {
    let c = x.coords();
    C64::new(c[0], c[1])
}

pub struct Euclidean(pub usize);

impl CoherentProduct for Euclidean {
    fn domain(&self) -> Domain {
        Domain::Real(self.0)
    }
    fn eval(&self, z: &Point, w: &Point) -> C64 {
        C64::from(real(z).iter().zip(real(w)).map(|(a, b)| a * b).sum::<f64>())
    }
    fn geometry(&self) -> Option<&dyn ClosedFormGeometry> {
        Some(self)
    }
}

impl ClosedFormGeometry for Euclidean {
    fn theta(&self, z: &Point, x: &Tangent) -> C64 {
        C64::from(real(z).iter().zip(x.coords()).map(|(a, b)| a * b).sum::<f64>())
    }
    fn mixed(&self, _z: &Point, x: &Tangent, y: &Tangent) -> C64 {
        C64::from(x.coords().iter().zip(y.coords()).map(|(a, b)| a * b).sum::<f64>())
    }
}

/// `z* z'` on ℂⁿ, or on its unit sphere.
pub struct Hermitian {
    pub n: usize,
    pub sphere: bool,
}

impl CoherentProduct for Hermitian {
    fn domain(&self) -> Domain {
        if self.sphere {
            Domain::UnitSphere(self.n)
        } else {
            Domain::Complex(self.n)
        }
    }
    fn eval(&self, z: &Point, w: &Point) -> C64 {
        dotc(cvec(z), cvec(w))
    }
    fn geometry(&self) -> Option<&dyn ClosedFormGeometry> {
        Some(self)
    }
}

impl ClosedFormGeometry for Hermitian {
    fn theta(&self, z: &Point, x: &Tangent) -> C64 {
        dotc(cvec(z), &x.complex_parts())
    }
    fn mixed(&self, _z: &Point, x: &Tangent, y: &Tangent) -> C64 {
        dotc(&y.complex_parts(), &x.complex_parts())
    }
}

pub struct Klauder(pub usize);

impl Klauder {
    pub fn exponent(z: &Point, w: &Point) -> C64 {
        let (a, u) = z.as_klauder().expect("checked by the domain");
        let (b, v) = w.as_klauder().expect("checked by the domain");
        a.conj() + b + dotc(u, v)
    }
}

impl CoherentProduct for Klauder {
    fn domain(&self) -> Domain {
        Domain::Klauder(self.0)
    }
    fn eval(&self, z: &Point, w: &Point) -> C64 {
        Klauder::exponent(z, w).exp()
    }
    fn geometry(&self) -> Option<&dyn ClosedFormGeometry> {
        Some(self)
    }
}

impl ClosedFormGeometry for Klauder {
    fn theta(&self, z: &Point, x: &Tangent) -> C64 {
        let (_, u) = z.as_klauder().unwrap();
        let xc = x.complex_parts();
        self.eval(z, z) * (xc[0] + dotc(u, &xc[1..]))
    }
    fn mixed(&self, z: &Point, x: &Tangent, y: &Tangent) -> C64 {
        let (_, u) = z.as_klauder().unwrap();
        let (xc, yc) = (x.complex_parts(), y.complex_parts());
        let cx = xc[0] + dotc(u, &xc[1..]);
        let cy = yc[0] + dotc(u, &yc[1..]);
        self.eval(z, z) * (dotc(&yc[1..], &xc[1..]) + cy.conj() * cx)
    }
}

/// `1/(z + z')` on the positive reals.
pub struct Reciprocal;

impl CoherentProduct for Reciprocal {
    fn domain(&self) -> Domain {
        Domain::PositiveReal
    }
    fn eval(&self, z: &Point, w: &Point) -> C64 {
        C64::from(1.0 / (positive(z) + positive(w)))
    }
    fn geometry(&self) -> Option<&dyn ClosedFormGeometry> {
        Some(self)
    }
}

impl ClosedFormGeometry for Reciprocal {
    fn theta(&self, z: &Point, x: &Tangent) -> C64 {
        let s = 2.0 * positive(z);
        C64::from(-x.coords()[0] / (s * s))
    }
    fn mixed(&self, z: &Point, x: &Tangent, y: &Tangent) -> C64 {
        let s = 2.0 * positive(z);
        C64::from(2.0 * x.coords()[0] * y.coords()[0] / (s * s * s))
    }
}

/// `1/(1 − z̄z')` on the unit disk.
pub struct Szego;

impl CoherentProduct for Szego {
    fn domain(&self) -> Domain {
        Domain::Disk
    }
    fn eval(&self, z: &Point, w: &Point) -> C64 {
        1.0 / (1.0 - scalar(z).conj() * scalar(w))
    }
    fn geometry(&self) -> Option<&dyn ClosedFormGeometry> {
        Some(self)
    }
}

impl ClosedFormGeometry for Szego {
    fn theta(&self, z: &Point, x: &Tangent) -> C64 {
        let z = scalar(z);
        let d = 1.0 - z.norm_sqr();
        z.conj() * tangent_scalar(x) / (d * d)
    }
    fn mixed(&self, z: &Point, x: &Tangent, y: &Tangent) -> C64 {
        let r2 = scalar(z).norm_sqr();
        let d = 1.0 - r2;
        tangent_scalar(y).conj() * tangent_scalar(x) * ((1.0 + r2) / (d * d * d))
    }
}

/// `(1 − conj(s(z)) s(z'))/(1 − z̄z')` for a Schur function `s`.
pub struct Schur(pub SchurFunction);

impl CoherentProduct for Schur {
    fn domain(&self) -> Domain {
        Domain::Disk
    }
    fn eval(&self, z: &Point, w: &Point) -> C64 {
        let (z, w) = (scalar(z), scalar(w));
        (1.0 - self.0.value(z).conj() * self.0.value(w)) / (1.0 - z.conj() * w)
    }
    fn geometry(&self) -> Option<&dyn ClosedFormGeometry> {
        Some(self)
    }
}

impl ClosedFormGeometry for Schur {
    fn theta(&self, z: &Point, x: &Tangent) -> C64 {
        let z = scalar(z);
        let (s, ds) = (self.0.value(z), self.0.derivative(z));
        let d = 1.0 - z.norm_sqr();
        let n = 1.0 - s.norm_sqr();
        tangent_scalar(x) * (-s.conj() * ds / d + z.conj() * (n / (d * d)))
    }
    fn mixed(&self, z: &Point, x: &Tangent, y: &Tangent) -> C64 {
        let z = scalar(z);
        let (s, ds) = (self.0.value(z), self.0.derivative(z));
        let d = 1.0 - z.norm_sqr();
        let n = 1.0 - s.norm_sqr();
        let b = -ds.norm_sqr() / d - 2.0 * (s.conj() * ds * z).re / (d * d)
            + n / (d * d)
            + 2.0 * n * z.norm_sqr() / (d * d * d);
        tangent_scalar(y).conj() * tangent_scalar(x) * b
    }
}

/// Reproducing kernel of the de Branges space of an entire function `E`:
/// `K(z, z') = g(z̄, z')/(2πi)` with `g(u, v) = N(u, v)/(u − v)` and
/// `N(u, v) = E#(u)E(v) − E(u)E#(v)`, `E#(u) = conj(E(conj u))`.
pub struct DeBranges {
    f: DeBrangesFunction,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Below this `|u − v|` the quotient forms are replaced by cancellation-free
/// integral or contour representations.
const NEAR: f64 = 0.5;
const CONTOUR_POINTS: usize = 48;

impl DeBranges {
    pub fn new(f: DeBrangesFunction) -> Self {
        let (nodes, weights) = gauss_legendre_unit(16);
        DeBranges { f, nodes, weights }
    }

    fn e(&self, z: C64) -> C64 {
        self.f.value(z)
    }
    fn de(&self, z: C64) -> C64 {
        self.f.derivative(z)
    }
    fn sharp(&self, u: C64) -> C64 {
        self.e(u.conj()).conj()
    }
    fn dsharp(&self, u: C64) -> C64 {
        self.de(u.conj()).conj()
    }

    fn n(&self, u: C64, v: C64) -> C64 {
        self.sharp(u) * self.e(v) - self.e(u) * self.sharp(v)
    }
    fn n_u(&self, u: C64, v: C64) -> C64 {
        self.dsharp(u) * self.e(v) - self.de(u) * self.sharp(v)
    }
    fn n_v(&self, u: C64, v: C64) -> C64 {
        self.sharp(u) * self.de(v) - self.e(u) * self.dsharp(v)
    }
    fn n_uv(&self, u: C64, v: C64) -> C64 {
        self.dsharp(u) * self.de(v) - self.de(u) * self.dsharp(v)
    }

    /// `g(u, v)`; near `u = v` as `∫₀¹ N_u(v + s(u − v), v) ds`.
    pub(crate) fn g(&self, u: C64, v: C64) -> C64 {
        let d = u - v;
        if d.norm() >= NEAR {
            self.n(u, v) / d
        } else {
            self.nodes.iter().zip(&self.weights).map(|(s, w)| *w * self.n_u(v + d * *s, v)).sum()
        }
    }

    fn g_v(&self, u: C64, v: C64) -> C64 {
        let d = u - v;
        if d.norm() >= NEAR {
            return self.n_v(u, v) / d + self.n(u, v) / (d * d);
        }
        let m = CONTOUR_POINTS;
        (0..m)
            .map(|k| {
                let e = C64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64);
                self.g(u, v + e) / e
            })
            .sum::<C64>()
            / m as f64
    }

    fn g_uv(&self, u: C64, v: C64) -> C64 {
        let d = u - v;
        if d.norm() >= NEAR {
            return self.n_uv(u, v) / d + (self.n_u(u, v) - self.n_v(u, v)) / (d * d)
                - 2.0 * self.n(u, v) / (d * d * d);
        }
        let (ru, rv) = (1.0, 2.5);
        let m = CONTOUR_POINTS;
        let mut acc = C64::from(0.0);
        for a in 0..m {
            let ea = C64::from_polar(ru, 2.0 * PI * a as f64 / m as f64);
            for b in 0..m {
                let eb = C64::from_polar(rv, 2.0 * PI * (b as f64 + 0.5) / m as f64);
                acc += self.g(u + ea, v + eb) / (ea * eb);
            }
        }
        acc / (m * m) as f64
    }
}

fn two_pi_i() -> C64 {
    C64::new(0.0, 2.0 * PI)
}

impl CoherentProduct for DeBranges {
    fn domain(&self) -> Domain {
        Domain::Plane
    }
    fn eval(&self, z: &Point, w: &Point) -> C64 {
        self.g(scalar(z).conj(), scalar(w)) / two_pi_i()
    }
    fn geometry(&self) -> Option<&dyn ClosedFormGeometry> {
        Some(self)
    }
}

impl ClosedFormGeometry for DeBranges {
    fn theta(&self, z: &Point, x: &Tangent) -> C64 {
        let z = scalar(z);
        tangent_scalar(x) * self.g_v(z.conj(), z) / two_pi_i()
    }
    fn mixed(&self, z: &Point, x: &Tangent, y: &Tangent) -> C64 {
        let z = scalar(z);
        tangent_scalar(y).conj() * tangent_scalar(x) * self.g_uv(z.conj(), z) / two_pi_i()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn debranges_exponential_is_the_sinc_kernel() {
        let k = DeBranges::new(DeBrangesFunction::exponential(1.0));
        for (x, y) in [(0.3, -1.1), (2.0, 2.0), (0.1, 0.1 + 1e-9), (-2.5, 1.0)] {
            let got = k.eval(&Point::Scalar(C64::from(x)), &Point::Scalar(C64::from(y)));
            let d: f64 = x - y;
            let want = if d == 0.0 { 1.0 / PI } else { (d.sin() / d) / PI };
            assert!((got - want).norm() < 1e-14, "{x} {y}: {got} vs {want}");
        }
    }

    #[test]
    fn debranges_branches_agree_at_the_switch() {
        let k = DeBranges::new(DeBrangesFunction::exponential(1.3));
        let v = C64::new(0.4, 0.2);
        for d in [C64::new(0.0, NEAR), C64::new(NEAR * 0.6, NEAR * 0.8)] {
            let u = v + d;
            let quotient = k.n(u, v) / d;
            let integral: C64 = k.nodes.iter().zip(&k.weights).map(|(s, w)| *w * k.n_u(v + d * *s, v)).sum();
            assert!((quotient - integral).norm() < 1e-13 * quotient.norm());
        }
    }

    #[test]
    fn szego_kernel_values() {
        let p = Point::Scalar(C64::from(0.5));
        assert!((Szego.eval(&p, &p) - C64::from(4.0 / 3.0)).norm() < 1e-15);
    }
}
