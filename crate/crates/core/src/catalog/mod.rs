//! Catalog of concrete coherent spaces.
//!
//! | variant | points | `K(z, z')` |
//! |------|--------|------------|
//! | `Euclidean(n)` | ℝⁿ | `zᵀz'` |
//! | `HermitianSubset(n)` | ℂⁿ | `z*z'` |
//! | `UnitSphere(n)` | unit vectors in ℂⁿ | `z*z'` |
//! | `Klauder(n)` | `[z0, ẑ]` ∈ ℂ × ℂⁿ | `exp(z̄0 + z0' + ẑ*ẑ')` |
//! | `Reciprocal` | ℝ>0 | `1/(z + z')` |
//! | `Szego` | unit disk | `1/(1 − z̄z')` |
//! | `Schur(s)` | unit disk | `(1 − conj(s(z)) s(z'))/(1 − z̄z')` |
//! | `DeBranges(E)` | ℂ | `(E#(z̄)E(z') − E(z̄)E#(z'))/(2πi(z̄ − z'))` |
//!
//! Every space ships closed-form `R_X K` and `L_Y R_X K` on the diagonal;
//! [`fd`] provides the definitional finite-difference values they are
//! validated against.

pub mod fd;
pub mod geometry;
mod spaces;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use geometry::{
    commutation_check, geometry_report, infinitesimal_cs_margin, metric_g, one_form_theta,
    potential_inequality_check, two_form_omega, wtg_matrix, Evaluated, GeometryReport, Margin,
    PotentialCheck, PotentialMargins, Provenance,
};

use crate::space::SpaceHandle;
use crate::C64;

type ComplexFn = Arc<dyn Fn(C64) -> C64 + Send + Sync>;

/// An analytic self-map bound of the unit disk, with its derivative.
#[derive(Clone)]
pub struct SchurFunction {
    label: String,
    value: ComplexFn,
    derivative: ComplexFn,
}

impl SchurFunction {
    pub fn new(
        label: impl Into<String>,
        value: impl Fn(C64) -> C64 + Send + Sync + 'static,
        derivative: impl Fn(C64) -> C64 + Send + Sync + 'static,
    ) -> Self {
        SchurFunction { label: label.into(), value: Arc::new(value), derivative: Arc::new(derivative) }
    }

    /// `scale·(z − a)/(1 − āz)`.
    pub fn blaschke(a: C64, scale: f64) -> Self {
        SchurFunction::new(
            format!("blaschke({a}, {scale})"),
            move |z| scale * (z - a) / (1.0 - a.conj() * z),
            move |z| {
                let d = 1.0 - a.conj() * z;
                scale * (1.0 - a.norm_sqr()) / (d * d)
            },
        )
    }

    /// Polynomial with coefficients in ascending order.
    pub fn polynomial(coeffs: &[C64]) -> Self {
        let c = coeffs.to_vec();
        let dc: Vec<C64> = coeffs.iter().enumerate().skip(1).map(|(k, a)| a * k as f64).collect();
        let eval = |c: &[C64], z: C64| c.iter().rev().fold(C64::from(0.0), |acc, a| acc * z + a);
        SchurFunction::new(format!("polynomial{coeffs:?}"), move |z| eval(&c, z), move |z| eval(&dc, z))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, z: C64) -> C64 {
        (self.value)(z)
    }

    pub fn derivative(&self, z: C64) -> C64 {
        (self.derivative)(z)
    }
}

impl fmt::Debug for SchurFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SchurFunction({})", self.label)
    }
}

/// An entire function with `|E(z̄)| < |E(z)|` on the upper half plane.
#[derive(Clone)]
pub struct DeBrangesFunction {
    label: String,
    value: ComplexFn,
    derivative: ComplexFn,
}

impl DeBrangesFunction {
    pub fn new(
        label: impl Into<String>,
        value: impl Fn(C64) -> C64 + Send + Sync + 'static,
        derivative: impl Fn(C64) -> C64 + Send + Sync + 'static,
    ) -> Self {
        DeBrangesFunction { label: label.into(), value: Arc::new(value), derivative: Arc::new(derivative) }
    }

    /// `E(z) = e^{−iτz}`, giving the Paley–Wiener (sinc) kernel.
    pub fn exponential(tau: f64) -> Self {
        let mi = C64::new(0.0, -tau);
        DeBrangesFunction::new(format!("exp(-i{tau}z)"), move |z| (mi * z).exp(), move |z| mi * (mi * z).exp())
    }

    /// `E(z) = z + ia`.
    pub fn linear(a: f64) -> Self {
        let ia = C64::new(0.0, a);
        DeBrangesFunction::new(format!("z+{a}i"), move |z| z + ia, |_| C64::from(1.0))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, z: C64) -> C64 {
        (self.value)(z)
    }

    pub fn derivative(&self, z: C64) -> C64 {
        (self.derivative)(z)
    }
}

impl fmt::Debug for DeBrangesFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DeBrangesFunction({})", self.label)
    }
}

#[derive(Clone, Debug)]
pub enum SpaceSpec {
    Euclidean(usize),
    HermitianSubset(usize),
    UnitSphere(usize),
    Klauder(usize),
    Reciprocal,
    Szego,
    Schur(SchurFunction),
    DeBranges(DeBrangesFunction),
}

impl SpaceSpec {
    /// The eight catalog spaces with representative parameters.
    pub fn standard() -> Vec<SpaceSpec> {
        vec![
            SpaceSpec::Euclidean(3),
            SpaceSpec::HermitianSubset(2),
            SpaceSpec::UnitSphere(3),
            SpaceSpec::Klauder(2),
            SpaceSpec::Reciprocal,
            SpaceSpec::Szego,
            SpaceSpec::Schur(SchurFunction::blaschke(C64::new(0.3, -0.2), 0.8)),
            SpaceSpec::DeBranges(DeBrangesFunction::exponential(1.0)),
        ]
    }

    pub fn id(&self) -> String {
        match self {
            SpaceSpec::Euclidean(n) => format!("euclidean({n})"),
            SpaceSpec::HermitianSubset(n) => format!("hermitian({n})"),
            SpaceSpec::UnitSphere(n) => format!("unit-sphere({n})"),
            SpaceSpec::Klauder(n) => format!("klauder({n})"),
            SpaceSpec::Reciprocal => "reciprocal".into(),
            SpaceSpec::Szego => "szego".into(),
            SpaceSpec::Schur(s) => format!("schur[{}]", s.label()),
            SpaceSpec::DeBranges(e) => format!("de-branges[{}]", e.label()),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("Schur function {label} has |s(z)| = {modulus} > 1 at z = {at}")]
    NotSchur { label: String, at: C64, modulus: f64 },
    #[error("de Branges function {label} violates |E(conj z)| < |E(z)| at z = {at}")]
    NotDeBranges { label: String, at: C64 },
    #[error("{label} is not finite at z = {at}")]
    NonFinite { label: String, at: C64 },
}

fn check_schur(s: &SchurFunction) -> Result<(), CatalogError> {
    for i in 0..20 {
        let r = 0.05 * i as f64;
        for j in 0..24 {
            let z = C64::from_polar(r, std::f64::consts::TAU * j as f64 / 24.0);
            let (v, d) = (s.value(z), s.derivative(z));
            if !(v.re.is_finite() && v.im.is_finite() && d.re.is_finite() && d.im.is_finite()) {
                return Err(CatalogError::NonFinite { label: s.label().into(), at: z });
            }
            if v.norm() > 1.0 + 1e-12 {
                return Err(CatalogError::NotSchur { label: s.label().into(), at: z, modulus: v.norm() });
            }
        }
    }
    Ok(())
}

fn check_de_branges(e: &DeBrangesFunction) -> Result<(), CatalogError> {
    for i in 0..21 {
        let x = -5.0 + 0.5 * i as f64;
        for y in [0.1, 0.5, 1.0, 2.0, 3.0] {
            let z = C64::new(x, y);
            let (up, down) = (e.value(z), e.value(z.conj()));
            if !(up.re.is_finite() && up.im.is_finite() && e.derivative(z).re.is_finite()) {
                return Err(CatalogError::NonFinite { label: e.label().into(), at: z });
            }
            if down.norm() >= up.norm() {
                return Err(CatalogError::NotDeBranges { label: e.label().into(), at: z });
            }
        }
    }
    Ok(())
}

/// Builds the handle of a catalog space.
pub fn make_space(spec: &SpaceSpec) -> Result<SpaceHandle, CatalogError> {
    use spaces::*;
    let id = spec.id();
    let (product, nondegenerate): (Arc<dyn crate::space::CoherentProduct>, bool) = match spec {
        SpaceSpec::Euclidean(0) | SpaceSpec::HermitianSubset(0) | SpaceSpec::UnitSphere(0) => {
            return Err(CatalogError::ZeroDimension)
        }
        SpaceSpec::Euclidean(n) => (Arc::new(Euclidean(*n)), true),
        SpaceSpec::HermitianSubset(n) => (Arc::new(Hermitian { n: *n, sphere: false }), true),
        SpaceSpec::UnitSphere(n) => (Arc::new(Hermitian { n: *n, sphere: true }), true),
        SpaceSpec::Klauder(n) => (Arc::new(Klauder(*n)), true),
        SpaceSpec::Reciprocal => (Arc::new(Reciprocal), true),
        SpaceSpec::Szego => (Arc::new(Szego), true),
        SpaceSpec::Schur(s) => {
            check_schur(s)?;
            (Arc::new(Schur(s.clone())), false)
        }
        SpaceSpec::DeBranges(e) => {
            check_de_branges(e)?;
            (Arc::new(DeBranges::new(e.clone())), true)
        }
    };
    Ok(SpaceHandle::new(id, product, nondegenerate))
}
