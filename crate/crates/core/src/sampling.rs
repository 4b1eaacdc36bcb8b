//! Seeded random points and tangents for property checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::space::{Domain, Point, Tangent};
use crate::C64;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut SampleRng) -> f64 {
    rng.sample(StandardNormal)
}

/// Complex Gaussian with standard deviation `sigma` per component.
pub fn complex_normal(rng: &mut SampleRng, sigma: f64) -> C64 {
    C64::new(sigma * normal(rng), sigma * normal(rng))
}

pub fn complex_vector(rng: &mut SampleRng, n: usize, sigma: f64) -> Vec<C64> {
    (0..n).map(|_| complex_normal(rng, sigma)).collect()
}

/// A point spread over the region where the catalog kernels are well scaled.
pub fn sample_point(domain: Domain, rng: &mut SampleRng) -> Point {
    match domain {
        Domain::Real(n) => Point::Real((0..n).map(|_| normal(rng)).collect()),
        Domain::Complex(n) => Point::Complex(complex_vector(rng, n, 0.7)),
        Domain::UnitSphere(n) => {
            let v = complex_vector(rng, n, 1.0);
            let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            Point::Complex(v.iter().map(|c| c / norm).collect())
        }
        Domain::Disk => {
            let r = 0.9 * rng.gen::<f64>().sqrt();
            let phi = std::f64::consts::TAU * rng.gen::<f64>();
            Point::Scalar(C64::from_polar(r, phi))
        }
        Domain::Plane => Point::Scalar(C64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-1.5..1.5))),
        Domain::PositiveReal => Point::Positive(10f64.powf(rng.gen_range(-1.0..1.0))),
        Domain::Klauder(n) => Point::Klauder { z0: complex_normal(rng, 0.5), z: complex_vector(rng, n, 0.6) },
    }
}

/// A tangent at `z`; on the sphere the normal component is removed so the
/// vector is tangent at `z`.
pub fn sample_tangent(domain: Domain, z: &Point, rng: &mut SampleRng) -> Tangent {
    let c: Vec<f64> = (0..domain.real_dim()).map(|_| normal(rng)).collect();
    match (domain, z) {
        (Domain::UnitSphere(_), Point::Complex(zv)) => {
            let x = Tangent::from_coords(c).complex_parts();
            let re: f64 = zv.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            let proj: Vec<C64> = x.iter().zip(zv).map(|(b, a)| b - a * re).collect();
            Tangent::complex(&proj)
        }
        _ => Tangent::from_coords(c),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_valid_and_reproducible() {
        let domains = [
            Domain::Real(3),
            Domain::Complex(2),
            Domain::UnitSphere(3),
            Domain::Disk,
            Domain::Plane,
            Domain::PositiveReal,
            Domain::Klauder(2),
        ];
        for d in domains {
            let mut a = rng(7);
            let mut b = rng(7);
            for _ in 0..50 {
                let p = sample_point(d, &mut a);
                d.check(&p).unwrap();
                assert_eq!(p, sample_point(d, &mut b));
            }
        }
    }

    #[test]
    fn sphere_tangents_are_tangent() {
        let mut r = rng(1);
        let d = Domain::UnitSphere(3);
        for _ in 0..20 {
            let z = sample_point(d, &mut r);
            let x = sample_tangent(d, &z, &mut r).complex_parts();
            let Point::Complex(zv) = &z else { unreachable!() };
            let re: f64 = zv.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            assert!(re.abs() < 1e-12);
        }
    }
}
