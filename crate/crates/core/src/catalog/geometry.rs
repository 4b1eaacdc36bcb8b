//! Coherent metric, 1-form and 2-form, with their inequalities.

use nalgebra::DMatrix;

use super::fd::{self, FdError};
use crate::space::{Point, Potential, SpaceHandle, Tangent};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    FiniteDifference,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluated {
    pub value: C64,
    pub provenance: Provenance,
}

/// `L_Y R_X K(z, z)`, closed form when the space provides one.
fn mixed(space: &SpaceHandle, z: &Point, x: &Tangent, y: &Tangent) -> Result<Evaluated, FdError> {
    space.check(z)?;
    Ok(match space.geometry() {
        Some(g) => Evaluated { value: g.mixed(z, x, y), provenance: Provenance::ClosedForm },
        None => Evaluated { value: fd::fd_lr(space, z, x, y)?, provenance: Provenance::FiniteDifference },
    })
}

/// `G(X, Y) = ½(L_Y R_X + L_X R_Y) K(z, z)`.
pub fn metric_g(space: &SpaceHandle, z: &Point, x: &Tangent, y: &Tangent) -> Result<Evaluated, FdError> {
    let a = mixed(space, z, x, y)?;
    let b = mixed(space, z, y, x)?;
    Ok(Evaluated { value: 0.5 * (a.value + b.value), provenance: a.provenance })
}

/// `θ(X) = R_X K(z, z)`.
pub fn one_form_theta(space: &SpaceHandle, z: &Point, x: &Tangent) -> Result<Evaluated, FdError> {
    space.check(z)?;
    Ok(match space.geometry() {
        Some(g) => Evaluated { value: g.theta(z, x), provenance: Provenance::ClosedForm },
        None => Evaluated { value: fd::fd_theta(space, z, x)?, provenance: Provenance::FiniteDifference },
    })
}

/// `ω(X, Y) = L_Y R_X K − L_X R_Y K` at `(z, z)` for constant fields.
pub fn two_form_omega(space: &SpaceHandle, z: &Point, x: &Tangent, y: &Tangent) -> Result<Evaluated, FdError> {
    let a = mixed(space, z, x, y)?;
    let b = mixed(space, z, y, x)?;
    Ok(Evaluated { value: a.value - b.value, provenance: a.provenance })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometryReport {
    pub g_closed: C64,
    pub g_fd: C64,
    pub theta_closed: C64,
    pub theta_fd: C64,
    pub omega_closed: C64,
    pub omega_fd: C64,
    /// `|closed − fd| / max(1, |fd|)` for `(G, θ, ω)`.
    pub rel_discrepancies: [f64; 3],
}

fn rel(closed: C64, fd: C64) -> f64 {
    (closed - fd).norm() / fd.norm().max(1.0)
}

/// Compares the closed forms with their definitional finite-difference values.
pub fn geometry_report(space: &SpaceHandle, z: &Point, x: &Tangent, y: &Tangent) -> Result<GeometryReport, FdError> {
    let g_closed = metric_g(space, z, x, y)?.value;
    let theta_closed = one_form_theta(space, z, x)?.value;
    let omega_closed = two_form_omega(space, z, x, y)?.value;
    let lr_xy = fd::fd_lr(space, z, x, y)?;
    let lr_yx = fd::fd_lr(space, z, y, x)?;
    let g_fd = 0.5 * (lr_xy + lr_yx);
    let theta_fd = fd::fd_theta(space, z, x)?;
    let omega_fd = lr_xy - lr_yx;
    Ok(GeometryReport {
        g_closed,
        g_fd,
        theta_closed,
        theta_fd,
        omega_closed,
        omega_fd,
        rel_discrepancies: [rel(g_closed, g_fd), rel(theta_closed, theta_fd), rel(omega_closed, omega_fd)],
    })
}

/// A signed margin with the magnitude it should be judged against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Margin {
    pub value: f64,
    pub scale: f64,
}

/// `K(z,z) L_X R_X K(z,z) − |R_X K(z,z)|²`.
pub fn infinitesimal_cs_margin(space: &SpaceHandle, z: &Point, x: &Tangent) -> Result<Margin, FdError> {
    let k = space.kernel(z, z)?.re;
    let lr = fd::fd_lr(space, z, x, x)?;
    let r = fd::fd_theta(space, z, x)?;
    Ok(Margin { value: k * lr.re - r.norm_sqr(), scale: (k * lr.norm() + r.norm_sqr()).max(f64::MIN_POSITIVE) })
}

/// `[[K, R_X K], [L_X K, L_X R_X K]]` at `(z, z)`.
pub fn wtg_matrix(space: &SpaceHandle, z: &Point, x: &Tangent) -> Result<DMatrix<C64>, FdError> {
    let k = space.kernel(z, z)?;
    let r = fd::fd_theta(space, z, x)?;
    let l = fd::fd_left_kernel(space, z, x)?;
    let lr = fd::fd_lr(space, z, x, x)?;
    Ok(DMatrix::from_row_slice(2, 2, &[k, r, l, lr]))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialMargins {
    /// `|L_X P − conj(R_X P)|`, an equality residual.
    pub conjugacy_residual: f64,
    /// `(L_X + R_X)² P − 2 Re R_X² P`.
    pub right_margin: f64,
    /// `(L_X + R_X)² P − 2 Re L_X² P`.
    pub left_margin: f64,
    /// `L_X R_X P`.
    pub mixed_margin: f64,
    /// Smallest of the three inequality margins.
    pub worst: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PotentialCheck {
    Checked(PotentialMargins),
    /// The kernel vanishes somewhere on the probe stencil.
    Skipped,
}

/// Finite-difference check of the potential inequalities for `P = log K`.
pub fn potential_inequality_check(space: &SpaceHandle, z: &Point, x: &Tangent) -> Result<PotentialCheck, FdError> {
    if space.kernel(z, z)?.re <= 0.0 {
        return Err(FdError::Space(crate::space::SpaceError::Precondition("K(z,z) is not positive".into())));
    }
    let zero_hit = std::cell::Cell::new(false);
    let p = |a: &Point, b: &Point| -> Result<C64, crate::space::SpaceError> {
        match space.potential(a, b)? {
            Potential::Finite(v) => Ok(v),
            Potential::NegInfinity => {
                zero_hit.set(true);
                Ok(C64::from(0.0))
            }
        }
    };
    let lp = fd::fd_left(space, &p, z, z, x)?;
    let rp = fd::fd_right(space, &p, z, z, x)?;
    let both = fd::fd_second_along(space, &p, z, z, Some(x), Some(x))?;
    let rr = fd::fd_second_along(space, &p, z, z, None, Some(x))?;
    let ll = fd::fd_second_along(space, &p, z, z, Some(x), None)?;
    let lr = fd::fd_mixed(space, &p, z, z, x, x)?;
    if zero_hit.get() {
        return Ok(PotentialCheck::Skipped);
    }
    let right_margin = both.re - 2.0 * rr.re;
    let left_margin = both.re - 2.0 * ll.re;
    let mixed_margin = lr.re;
    Ok(PotentialCheck::Checked(PotentialMargins {
        conjugacy_residual: (lp - rp.conj()).norm(),
        right_margin,
        left_margin,
        mixed_margin,
        worst: right_margin.min(left_margin).min(mixed_margin),
    }))
}

/// `|L_X R_Y K − R_Y L_X K|` at `(z, w)` via nested differences.
pub fn commutation_check(space: &SpaceHandle, z: &Point, w: &Point, x: &Tangent, y: &Tangent) -> Result<Margin, FdError> {
    let value = fd::nested_commutator(space, z, w, x, y)?;
    let scale = space.length(z)? * space.length(w)? * (1.0 + x.norm()) * (1.0 + y.norm());
    Ok(Margin { value, scale })
}
