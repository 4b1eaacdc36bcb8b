//! Finite-difference calculus of the derivations `L_X` and `R_X`.
//!
//! `L_X f(z, w)` differentiates along `z + tX` in the left slot and
//! `R_X f(z, w)` along `w + tX` in the right slot. Central differences are
//! refined by one Richardson level `(h, h/2)`.

use thiserror::Error;

use crate::space::{Point, SpaceError, SpaceHandle, Tangent};
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FdError {
    #[error("finite-difference step {step:e} underflows at coordinate scale {scale:e}")]
    StepUnderflow { step: f64, scale: f64 },
    #[error("finite difference is not finite")]
    NonFinite,
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Relative step sizes; the actual step is `base · max(1, ‖z‖)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdScheme {
    /// Step for first derivatives.
    pub first: f64,
    /// Step for mixed and second derivatives, where cancellation scales as
    /// `ε/h²` and a smaller step would lose most significant digits.
    pub second: f64,
}

impl Default for FdScheme {
    fn default() -> Self {
        FdScheme { first: 1e-5, second: 1e-3 }
    }
}

impl FdScheme {
    fn step(base: f64, z: &Point, x: &Tangent) -> Result<f64, FdError> {
        let scale = z.coord_norm().max(1.0);
        let h = base * scale;
        if !x.is_zero() && h * x.norm() <= 64.0 * f64::EPSILON * scale {
            return Err(FdError::StepUnderflow { step: h, scale });
        }
        Ok(h)
    }
}

pub type BiFn<'a> = dyn Fn(&Point, &Point) -> Result<C64, SpaceError> + 'a;

fn finite(v: C64) -> Result<C64, FdError> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(FdError::NonFinite)
    }
}

fn richardson(coarse: C64, fine: C64) -> C64 {
    (4.0 * fine - coarse) / 3.0
}

fn first_derivative(g: impl Fn(f64) -> Result<C64, FdError>, h: f64) -> Result<C64, FdError> {
    let d = |h: f64| -> Result<C64, FdError> { Ok((g(h)? - g(-h)?) / (2.0 * h)) };
    finite(richardson(d(h)?, d(h / 2.0)?))
}

fn second_derivative(g: impl Fn(f64) -> Result<C64, FdError>, h: f64) -> Result<C64, FdError> {
    let g0 = g(0.0)?;
    let d = |h: f64| -> Result<C64, FdError> { Ok((g(h)? - 2.0 * g0 + g(-h)?) / (h * h)) };
    finite(richardson(d(h)?, d(h / 2.0)?))
}

/// `L_X f(z, w)`.
pub fn fd_left(space: &SpaceHandle, f: &BiFn, z: &Point, w: &Point, x: &Tangent) -> Result<C64, FdError> {
    let h = FdScheme::step(FdScheme::default().first, z, x)?;
    let d = space.domain();
    first_derivative(|t| Ok(f(&d.displace(z, t, x), w)?), h)
}

/// `R_X f(z, w)`.
pub fn fd_right(space: &SpaceHandle, f: &BiFn, z: &Point, w: &Point, x: &Tangent) -> Result<C64, FdError> {
    let h = FdScheme::step(FdScheme::default().first, w, x)?;
    let d = space.domain();
    first_derivative(|t| Ok(f(z, &d.displace(w, t, x))?), h)
}

/// `L_Y R_X f(z, w)` by the four-point mixed stencil.
pub fn fd_mixed(
    space: &SpaceHandle,
    f: &BiFn,
    z: &Point,
    w: &Point,
    x: &Tangent,
    y: &Tangent,
) -> Result<C64, FdError> {
    let base = FdScheme::default().second;
    let h = FdScheme::step(base, z, y)?.max(FdScheme::step(base, w, x)?);
    let d = space.domain();
    let m = |h: f64| -> Result<C64, FdError> {
        let (zp, zm) = (d.displace(z, h, y), d.displace(z, -h, y));
        let (wp, wm) = (d.displace(w, h, x), d.displace(w, -h, x));
        Ok((f(&zp, &wp)? - f(&zp, &wm)? - f(&zm, &wp)? + f(&zm, &wm)?) / (4.0 * h * h))
    };
    finite(richardson(m(h)?, m(h / 2.0)?))
}

/// Second derivative of `f` along the path `t ↦ (z + a t Y, w + b t X)`.
pub fn fd_second_along(
    space: &SpaceHandle,
    f: &BiFn,
    z: &Point,
    w: &Point,
    left: Option<&Tangent>,
    right: Option<&Tangent>,
) -> Result<C64, FdError> {
    let zero = Tangent::zeros(space.domain().real_dim());
    let (y, x) = (left.unwrap_or(&zero), right.unwrap_or(&zero));
    let base = FdScheme::default().second;
    let h = FdScheme::step(base, z, y)?.max(FdScheme::step(base, w, x)?);
    let d = space.domain();
    second_derivative(|t| Ok(f(&d.displace(z, t, y), &d.displace(w, t, x))?), h)
}

fn kernel_fn(space: &SpaceHandle) -> impl Fn(&Point, &Point) -> Result<C64, SpaceError> + '_ {
    move |a: &Point, b: &Point| space.kernel(a, b)
}

/// `L_Y R_X K(z, z)`.
pub fn fd_lr(space: &SpaceHandle, z: &Point, x: &Tangent, y: &Tangent) -> Result<C64, FdError> {
    fd_mixed(space, &kernel_fn(space), z, z, x, y)
}

/// `R_X K(z, z)`.
pub fn fd_theta(space: &SpaceHandle, z: &Point, x: &Tangent) -> Result<C64, FdError> {
    fd_right(space, &kernel_fn(space), z, z, x)
}

/// `L_X K(z, z)`.
pub fn fd_left_kernel(space: &SpaceHandle, z: &Point, x: &Tangent) -> Result<C64, FdError> {
    fd_left(space, &kernel_fn(space), z, z, x)
}

/// `|L_X R_Y K − R_Y L_X K|` at `(z, w)` by nesting one-sided derivatives
/// in both orders.
pub fn nested_commutator(space: &SpaceHandle, z: &Point, w: &Point, x: &Tangent, y: &Tangent) -> Result<f64, FdError> {
    let base = FdScheme::default().second;
    let hx = FdScheme::step(base, z, x)?;
    let hy = FdScheme::step(base, w, y)?;
    let d = space.domain();
    let k = |a: &Point, b: &Point| -> Result<C64, FdError> { Ok(space.kernel(a, b)?) };
    let right_at = |a: &Point| first_derivative(|t| k(a, &d.displace(w, t, y)), hy);
    let left_at = |b: &Point| first_derivative(|t| k(&d.displace(z, t, x), b), hx);
    let lr = first_derivative(|s| right_at(&d.displace(z, s, x)), hx)?;
    let rl = first_derivative(|s| left_at(&d.displace(w, s, y)), hy)?;
    Ok((lr - rl).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_space, SpaceSpec};

    #[test]
    fn constant_kernel_has_zero_derivatives() {
        let s = make_space(&SpaceSpec::Szego).unwrap();
        let one = |_: &Point, _: &Point| -> Result<C64, SpaceError> { Ok(C64::from(1.0)) };
        let z = Point::Scalar(C64::new(0.2, 0.1));
        let x = Tangent::scalar(C64::new(1.0, -2.0));
        assert_eq!(fd_left(&s, &one, &z, &z, &x).unwrap(), C64::from(0.0));
        assert_eq!(fd_mixed(&s, &one, &z, &z, &x, &x).unwrap(), C64::from(0.0));
    }

    #[test]
    fn szego_derivatives_at_origin() {
        let s = make_space(&SpaceSpec::Szego).unwrap();
        let z = Point::Scalar(C64::from(0.0));
        let x = Tangent::scalar(C64::from(1.0));
        assert!(fd_theta(&s, &z, &x).unwrap().norm() < 1e-12);
        assert!((fd_lr(&s, &z, &x, &x).unwrap() - 1.0).norm() < 1e-9);
    }

    #[test]
    fn klauder_derivatives_at_origin() {
        let s = make_space(&SpaceSpec::Klauder(1)).unwrap();
        let z = Point::klauder(C64::from(0.0), &[C64::from(0.0)]);
        let x = Tangent::klauder(C64::from(0.0), &[C64::from(1.0)]);
        assert!(fd_theta(&s, &z, &x).unwrap().norm() < 1e-12);
        assert!((fd_lr(&s, &z, &x, &x).unwrap() - 1.0).norm() < 1e-9);
    }

    #[test]
    fn euclidean_mixed_derivative_is_the_dot_product() {
        let s = make_space(&SpaceSpec::Euclidean(2)).unwrap();
        let z = Point::Real(vec![0.3, -4.0]);
        let e1 = Tangent::real(&[1.0, 0.0]);
        assert!((fd_lr(&s, &z, &e1, &e1).unwrap() - 1.0).norm() < 1e-10);
        let e2 = Tangent::real(&[0.0, 1.0]);
        assert!(nested_commutator(&s, &z, &z, &e1, &e2).unwrap() < 1e-10);
    }

    #[test]
    fn step_underflow_is_reported() {
        let s = make_space(&SpaceSpec::Euclidean(1)).unwrap();
        let z = Point::Real(vec![1.0]);
        let tiny = Tangent::real(&[1e-300]);
        let k = |a: &Point, b: &Point| s.kernel(a, b);
        assert!(matches!(fd_left(&s, &k, &z, &z, &tiny), Err(FdError::StepUnderflow { .. })));
    }
}
