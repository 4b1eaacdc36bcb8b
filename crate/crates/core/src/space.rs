//! Points, coherent products and the metric structure they induce.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::linalg;
use crate::C64;

/// Coordinates of a point in one of the supported charts.
#[derive(Clone, Debug, PartialEq)]
pub enum Point {
    Real(Vec<f64>),
    Complex(Vec<C64>),
    Scalar(C64),
    Positive(f64),
    /// Klauder coordinates `[z0, ẑ]`.
    Klauder { z0: C64, z: Vec<C64> },
}

impl Point {
    pub fn klauder(z0: C64, z: &[C64]) -> Self {
        Point::Klauder { z0, z: z.to_vec() }
    }

    /// Realified chart coordinates; complex entries contribute `(re, im)`.
    pub fn coords(&self) -> Vec<f64> {
        match self {
            Point::Real(v) => v.clone(),
            Point::Complex(v) => v.iter().flat_map(|c| [c.re, c.im]).collect(),
            Point::Scalar(c) => vec![c.re, c.im],
            Point::Positive(x) => vec![*x],
            Point::Klauder { z0, z } => {
                std::iter::once(z0).chain(z).flat_map(|c| [c.re, c.im]).collect()
            }
        }
    }

    pub fn coord_norm(&self) -> f64 {
        self.coords().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|x| x.is_finite())
    }

    fn variant(&self) -> &'static str {
        match self {
            Point::Real(_) => "real vector",
            Point::Complex(_) => "complex vector",
            Point::Scalar(_) => "complex scalar",
            Point::Positive(_) => "positive real",
            Point::Klauder { .. } => "klauder pair",
        }
    }

    /// Klauder components, if this is a Klauder point.
    pub fn as_klauder(&self) -> Option<(C64, &[C64])> {
        match self {
            Point::Klauder { z0, z } => Some((*z0, z)),
            _ => None,
        }
    }
}

fn pairs(c: &[f64]) -> Vec<C64> {
    c.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect()
}

/// Tangent vector in realified chart coordinates (same layout as
/// [`Point::coords`]).
#[derive(Clone, Debug, PartialEq)]
pub struct Tangent(Vec<f64>);

impl Tangent {
    pub fn from_coords(c: Vec<f64>) -> Self {
        Tangent(c)
    }

    pub fn real(v: &[f64]) -> Self {
        Tangent(v.to_vec())
    }

    pub fn complex(v: &[C64]) -> Self {
        Tangent(v.iter().flat_map(|c| [c.re, c.im]).collect())
    }

    pub fn scalar(c: C64) -> Self {
        Tangent(vec![c.re, c.im])
    }

    pub fn klauder(x0: C64, x: &[C64]) -> Self {
        Tangent(std::iter::once(&x0).chain(x).flat_map(|c| [c.re, c.im]).collect())
    }

    pub fn zeros(real_dim: usize) -> Self {
        Tangent(vec![0.0; real_dim])
    }

    /// Unit vector along real coordinate `j`.
    pub fn basis(real_dim: usize, j: usize) -> Self {
        let mut c = vec![0.0; real_dim];
        c[j] = 1.0;
        Tangent(c)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Complex components, pairing consecutive real coordinates.
    pub fn complex_parts(&self) -> Vec<C64> {
        pairs(&self.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Tangent(self.0.iter().map(|x| x * s).collect())
    }

    pub fn add(&self, other: &Tangent) -> Self {
        Tangent(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }
}

/// Point-variant tag plus dimension, with the constraints of each chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Real(usize),
    Complex(usize),
    UnitSphere(usize),
    /// Open unit disk in ℂ.
    Disk,
    /// The complex plane.
    Plane,
    PositiveReal,
    Klauder(usize),
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Real(n) => write!(f, "R^{n}"),
            Domain::Complex(n) => write!(f, "C^{n}"),
            Domain::UnitSphere(n) => write!(f, "unit sphere in C^{n}"),
            Domain::Disk => write!(f, "unit disk"),
            Domain::Plane => write!(f, "complex plane"),
            Domain::PositiveReal => write!(f, "positive reals"),
            Domain::Klauder(n) => write!(f, "C x C^{n}"),
        }
    }
}

impl Domain {
    /// Number of real chart coordinates.
    pub fn real_dim(&self) -> usize {
        match *self {
            Domain::Real(n) => n,
            Domain::Complex(n) | Domain::UnitSphere(n) => 2 * n,
            Domain::Disk | Domain::Plane => 2,
            Domain::PositiveReal => 1,
            Domain::Klauder(n) => 2 * (n + 1),
        }
    }

    /// Verifies that `z` has the right variant and dimension, is finite and
    /// satisfies the chart constraint.
    pub fn check(&self, z: &Point) -> Result<(), SpaceError> {
        let bad = |reason: String| Err(SpaceError::Domain { domain: *self, reason });
        if !z.is_finite() {
            return bad("non-finite coordinate".into());
        }
        match (*self, z) {
            (Domain::Real(n), Point::Real(v)) if v.len() == n => Ok(()),
            (Domain::Complex(n), Point::Complex(v)) if v.len() == n => Ok(()),
            (Domain::UnitSphere(n), Point::Complex(v)) if v.len() == n => {
                let dev = (v.iter().map(|c| c.norm_sqr()).sum::<f64>() - 1.0).abs();
                if dev <= 1e-12 {
                    Ok(())
                } else {
                    bad(format!("|z*z - 1| = {dev:e}"))
                }
            }
            (Domain::Disk, Point::Scalar(c)) => {
                if c.norm() < 1.0 {
                    Ok(())
                } else {
                    bad(format!("|z| = {} is not below 1", c.norm()))
                }
            }
            (Domain::Plane, Point::Scalar(_)) => Ok(()),
            (Domain::PositiveReal, Point::Positive(x)) => {
                if *x > 0.0 {
                    Ok(())
                } else {
                    bad(format!("{x} is not positive"))
                }
            }
            (Domain::Klauder(n), Point::Klauder { z, .. }) if z.len() == n => Ok(()),
            _ => bad(format!("got a {} with {} real coordinates", z.variant(), z.coords().len())),
        }
    }

    /// Rebuilds a point from realified coordinates, without constraint checks.
    pub fn point_from_coords(&self, c: &[f64]) -> Point {
        match self {
            Domain::Real(_) => Point::Real(c.to_vec()),
            Domain::Complex(_) | Domain::UnitSphere(_) => Point::Complex(pairs(c)),
            Domain::Disk | Domain::Plane => Point::Scalar(C64::new(c[0], c[1])),
            Domain::PositiveReal => Point::Positive(c[0]),
            Domain::Klauder(_) => {
                let p = pairs(c);
                Point::Klauder { z0: p[0], z: p[1..].to_vec() }
            }
        }
    }

    /// Point reached from `z` along the chart line with velocity `x` after
    /// time `t`; sphere points are projected back onto the sphere.
    pub fn displace(&self, z: &Point, t: f64, x: &Tangent) -> Point {
        let c: Vec<f64> = z.coords().iter().zip(x.coords()).map(|(a, b)| a + t * b).collect();
        let p = self.point_from_coords(&c);
        match (self, p) {
            (Domain::UnitSphere(_), Point::Complex(v)) => {
                let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                Point::Complex(v.iter().map(|c| c / n).collect())
            }
            (_, p) => p,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("point outside {domain}: {reason}")]
    Domain { domain: Domain, reason: String },
    #[error("kernel value is not finite ({0})")]
    NonFinite(String),
    #[error("gram entry ({row}, {col}): {source}")]
    GramEntry {
        row: usize,
        col: usize,
        #[source]
        source: Box<SpaceError>,
    },
    #[error("{quantity} = {value:e} violates the coherent-product axioms")]
    AxiomViolation { quantity: &'static str, value: f64 },
    #[error("point has zero length")]
    ZeroLength,
    #[error("hermitian eigensolver did not converge")]
    EigenSolver,
    #[error("{0}")]
    Precondition(String),
}

/// A coherent product on a domain.
pub trait CoherentProduct: Send + Sync {
    fn domain(&self) -> Domain;

    /// `K(z, w)` for points already checked against [`Self::domain`].
    fn eval(&self, z: &Point, w: &Point) -> C64;

    fn geometry(&self) -> Option<&dyn ClosedFormGeometry> {
        None
    }
}

/// Closed-form first and mixed second derivatives of `K` on the diagonal.
pub trait ClosedFormGeometry: Send + Sync {
    /// `R_X K(z, z)`.
    fn theta(&self, z: &Point, x: &Tangent) -> C64;
    /// `L_Y R_X K(z, z)`.
    fn mixed(&self, z: &Point, x: &Tangent, y: &Tangent) -> C64;
}

/// Log of the coherent product, with an explicit sentinel for `log 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Potential {
    Finite(C64),
    NegInfinity,
}

impl Potential {
    pub fn from_kernel(k: C64) -> Self {
        if k.norm() < 1e-300 {
            Potential::NegInfinity
        } else {
            Potential::Finite(k.ln())
        }
    }

    pub fn finite(self) -> Option<C64> {
        match self {
            Potential::Finite(p) => Some(p),
            Potential::NegInfinity => None,
        }
    }
}

/// Tolerances of the PSD verdict.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsdTolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for PsdTolerance {
    fn default() -> Self {
        PsdTolerance { rel: 1e-10, abs: 1e-12 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsdReport {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub hermiticity_defect: f64,
    pub pass: bool,
}

/// Eigenvalue test of the Hermitized matrix `(G + G†)/2`.
pub fn psd_check(g: &DMatrix<C64>, tol: PsdTolerance) -> Result<PsdReport, SpaceError> {
    if g.nrows() != g.ncols() {
        return Err(SpaceError::Precondition(format!("{}x{} matrix is not square", g.nrows(), g.ncols())));
    }
    let defect = (g - g.adjoint()).iter().map(|x| x.norm()).fold(0.0, f64::max);
    let max_entry = g.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let (values, _) = linalg::hermitian_eigen(g).ok_or(SpaceError::EigenSolver)?;
    let min = values.first().copied().unwrap_or(0.0);
    let max = values.last().copied().unwrap_or(0.0);
    let pass = min >= -tol.abs - tol.rel * max.max(1.0) && defect <= 1e-12 * max_entry.max(1.0);
    Ok(PsdReport { min_eigenvalue: min, max_eigenvalue: max, hermiticity_defect: defect, pass })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    pub entries: DMatrix<C64>,
    pub points: Vec<Point>,
}

impl GramMatrix {
    pub fn psd_check(&self, tol: PsdTolerance) -> Result<PsdReport, SpaceError> {
        psd_check(&self.entries, tol)
    }
}

/// Shared handle to a coherent space.
#[derive(Clone)]
pub struct SpaceHandle {
    id: Arc<str>,
    product: Arc<dyn CoherentProduct>,
    nondegenerate: bool,
}

impl fmt::Debug for SpaceHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpaceHandle")
            .field("id", &self.id)
            .field("domain", &self.domain())
            .field("nondegenerate", &self.nondegenerate)
            .finish()
    }
}

impl SpaceHandle {
    pub fn new(id: impl Into<String>, product: Arc<dyn CoherentProduct>, nondegenerate: bool) -> Self {
        SpaceHandle { id: Arc::from(id.into()), product, nondegenerate }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn domain(&self) -> Domain {
        self.product.domain()
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.nondegenerate
    }

    pub fn geometry(&self) -> Option<&dyn ClosedFormGeometry> {
        self.product.geometry()
    }

    pub fn check(&self, z: &Point) -> Result<(), SpaceError> {
        self.domain().check(z)
    }

    /// `K(z, w)`.
    pub fn kernel(&self, z: &Point, w: &Point) -> Result<C64, SpaceError> {
        self.check(z)?;
        self.check(w)?;
        let k = self.product.eval(z, w);
        if k.re.is_finite() && k.im.is_finite() {
            Ok(k)
        } else {
            Err(SpaceError::NonFinite(format!("{} at {:?}, {:?}", self.id, z, w)))
        }
    }

    pub fn gram(&self, points: &[Point]) -> Result<GramMatrix, SpaceError> {
        if points.is_empty() {
            return Err(SpaceError::Precondition("gram needs at least one point".into()));
        }
        let n = points.len();
        let mut entries = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                entries[(j, k)] = self.kernel(&points[j], &points[k]).map_err(|e| SpaceError::GramEntry {
                    row: j,
                    col: k,
                    source: Box::new(e),
                })?;
            }
        }
        Ok(GramMatrix { entries, points: points.to_vec() })
    }

    /// `√K(z, z)`.
    pub fn length(&self, z: &Point) -> Result<f64, SpaceError> {
        let k = self.kernel(z, z)?.re;
        if k < -1e-12 {
            return Err(SpaceError::AxiomViolation { quantity: "K(z,z)", value: k });
        }
        Ok(k.max(0.0).sqrt())
    }

    /// Angle in `[0, π/2]` between the coherent states of two points.
    pub fn angle(&self, z: &Point, w: &Point) -> Result<f64, SpaceError> {
        let (a, b) = (self.length(z)?, self.length(w)?);
        if a == 0.0 || b == 0.0 {
            return Err(SpaceError::ZeroLength);
        }
        let c = self.kernel(z, w)?.norm() / (a * b);
        Ok(c.clamp(0.0, 1.0).acos())
    }

    pub fn distance(&self, z: &Point, w: &Point) -> Result<f64, SpaceError> {
        let r = self.kernel(z, z)?.re + self.kernel(w, w)?.re - 2.0 * self.kernel(z, w)?.re;
        if r < -1e-12 {
            return Err(SpaceError::AxiomViolation { quantity: "squared distance", value: r });
        }
        Ok(r.max(0.0).sqrt())
    }

    pub fn potential(&self, z: &Point, w: &Point) -> Result<Potential, SpaceError> {
        Ok(Potential::from_kernel(self.kernel(z, w)?))
    }

    /// `‖z‖‖w‖ − |K(z, w)|`.
    pub fn cauchy_schwarz_margin(&self, z: &Point, w: &Point) -> Result<f64, SpaceError> {
        Ok(self.length(z)? * self.length(w)? - self.kernel(z, w)?.norm())
    }

    /// Largest `|K(z'', w) − K(z, w)|` over the witnesses.
    pub fn nondegeneracy_probe(&self, z: &Point, z2: &Point, witnesses: &[Point]) -> Result<f64, SpaceError> {
        if witnesses.is_empty() {
            return Err(SpaceError::Precondition("no witnesses".into()));
        }
        let mut worst = 0.0f64;
        for w in witnesses {
            worst = worst.max((self.kernel(z2, w)? - self.kernel(z, w)?).norm());
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Dot(usize);

    impl CoherentProduct for Dot {
        fn domain(&self) -> Domain {
            Domain::Real(self.0)
        }
        fn eval(&self, z: &Point, w: &Point) -> C64 {
            match (z, w) {
                (Point::Real(a), Point::Real(b)) => C64::from(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()),
                _ => unreachable!(),
            }
        }
    }

    fn dot() -> SpaceHandle {
        SpaceHandle::new("dot", Arc::new(Dot(2)), true)
    }

    #[test]
    fn metric_quantities_on_the_plane() {
        let s = dot();
        let a = Point::Real(vec![3.0, 4.0]);
        let o = Point::Real(vec![0.0, 0.0]);
        assert_eq!(s.length(&a).unwrap(), 5.0);
        assert_eq!(s.distance(&o, &a).unwrap(), 5.0);
        assert_eq!(s.distance(&a, &a).unwrap(), 0.0);
        let e1 = Point::Real(vec![1.0, 0.0]);
        let e2 = Point::Real(vec![0.0, 1.0]);
        assert!((s.angle(&e1, &e2).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(s.angle(&a, &a).unwrap(), 0.0);
        assert_eq!(s.potential(&e1, &e2).unwrap(), Potential::NegInfinity);
        assert!(matches!(s.angle(&o, &a), Err(SpaceError::ZeroLength)));
    }

    #[test]
    fn nondegeneracy_needs_enough_witnesses() {
        let s = dot();
        let z = Point::Real(vec![1.0, 0.0]);
        let z2 = Point::Real(vec![2.0, 0.0]);
        assert_eq!(s.nondegeneracy_probe(&z, &z2, &[Point::Real(vec![0.0, 1.0])]).unwrap(), 0.0);
        assert_eq!(s.nondegeneracy_probe(&z, &z2, &[Point::Real(vec![1.0, 0.0])]).unwrap(), 1.0);
    }

    #[test]
    fn domain_mismatch_is_reported() {
        let s = dot();
        let err = s.kernel(&Point::Positive(1.0), &Point::Real(vec![1.0, 0.0])).unwrap_err();
        assert!(matches!(err, SpaceError::Domain { .. }));
        let err = s.gram(&[Point::Real(vec![1.0, 0.0]), Point::Real(vec![1.0])]).unwrap_err();
        assert!(matches!(err, SpaceError::GramEntry { row: 0, col: 1, .. }));
    }

    #[test]
    fn psd_verdicts_on_small_matrices() {
        let id = DMatrix::<C64>::identity(2, 2);
        let r = psd_check(&id, PsdTolerance::default()).unwrap();
        assert!(r.pass && r.min_eigenvalue == 1.0);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0].map(C64::from));
        let r = psd_check(&bad, PsdTolerance::default()).unwrap();
        assert!(!r.pass);
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-14);
        assert!((r.max_eigenvalue - 3.0).abs() < 1e-14);
    }

    #[test]
    fn non_hermitian_matrix_fails() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0].map(C64::from));
        let r = psd_check(&m, PsdTolerance::default()).unwrap();
        assert!(!r.pass);
        assert!((r.hermiticity_defect - 0.1).abs() < 1e-15);
    }

    #[test]
    fn sphere_displacement_stays_on_sphere() {
        let d = Domain::UnitSphere(2);
        let z = Point::Complex(vec![C64::from(1.0), C64::from(0.0)]);
        let x = Tangent::complex(&[C64::new(0.0, 1.0), C64::new(0.3, 0.0)]);
        let p = d.displace(&z, 0.1, &x);
        d.check(&p).unwrap();
    }

    #[test]
    fn coordinates_roundtrip_through_domain() {
        let z = Point::klauder(C64::new(1.0, -2.0), &[C64::new(0.5, 0.25)]);
        assert_eq!(Domain::Klauder(1).point_from_coords(&z.coords()), z);
    }
}
