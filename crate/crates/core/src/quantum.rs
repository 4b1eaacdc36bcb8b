//! Finite spans of coherent states and the quantization of coherent maps.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::linalg;
use crate::space::{Point, SpaceError, SpaceHandle};
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("vectors live in different spaces ({0} and {1})")]
    SpaceMismatch(String, String),
    #[error("squared norm {0:e} is negative beyond tolerance; the Gram matrix is not PSD")]
    NegativeNorm(f64),
    #[error("map sends term {index} outside the domain: {source}")]
    LeavesDomain {
        index: usize,
        #[source]
        source: SpaceError,
    },
    #[error("map has no adjoint")]
    NoAdjoint,
    #[error("all Gram eigenvalues fall below {0:e} times the largest")]
    Degenerate(f64),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// `Σ c_k |z_k⟩`, kept as a raw term list.
#[derive(Clone, Debug)]
pub struct QVec {
    space: SpaceHandle,
    terms: Vec<(C64, Point)>,
}

impl QVec {
    pub fn new(space: &SpaceHandle, terms: Vec<(C64, Point)>) -> Result<Self, QuantumError> {
        for (_, p) in &terms {
            space.check(p)?;
        }
        Ok(QVec { space: space.clone(), terms })
    }

    /// The coherent state `|z⟩`.
    pub fn coherent(space: &SpaceHandle, z: Point) -> Result<Self, QuantumError> {
        QVec::new(space, vec![(C64::from(1.0), z)])
    }

    pub fn space(&self) -> &SpaceHandle {
        &self.space
    }

    pub fn terms(&self) -> &[(C64, Point)] {
        &self.terms
    }

    pub fn scale(&self, c: C64) -> QVec {
        QVec { space: self.space.clone(), terms: self.terms.iter().map(|(a, p)| (a * c, p.clone())).collect() }
    }

    /// Concatenation of term lists.
    pub fn add(&self, other: &QVec) -> Result<QVec, QuantumError> {
        same_space(self, other)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(QVec { space: self.space.clone(), terms })
    }
}

fn same_space(a: &QVec, b: &QVec) -> Result<(), QuantumError> {
    if a.space.id() == b.space.id() {
        Ok(())
    } else {
        Err(QuantumError::SpaceMismatch(a.space.id().into(), b.space.id().into()))
    }
}

/// `⟨φ|ψ⟩ = Σ conj(c_j) d_k K(z_j, w_k)`.
pub fn inner(phi: &QVec, psi: &QVec) -> Result<C64, QuantumError> {
    same_space(phi, psi)?;
    let mut acc = C64::from(0.0);
    for (c, z) in &phi.terms {
        for (d, w) in &psi.terms {
            acc += c.conj() * d * phi.space.kernel(z, w)?;
        }
    }
    Ok(acc)
}

pub fn norm(psi: &QVec) -> Result<f64, QuantumError> {
    let r = inner(psi, psi)?.re;
    let scale: f64 = psi
        .terms
        .iter()
        .map(|(c, z)| Ok(c.norm() * psi.space.length(z)?))
        .sum::<Result<f64, SpaceError>>()?
        .powi(2);
    if r < -1e-10 * scale.max(1.0) {
        return Err(QuantumError::NegativeNorm(r));
    }
    Ok(r.max(0.0).sqrt())
}

type PointMap = Arc<dyn Fn(&Point) -> Point + Send + Sync>;

/// A point map `A` with optional adjoint `A*`, `K(z, Az') = K(A*z, z')`.
#[derive(Clone)]
pub struct CoherentMap {
    forward: PointMap,
    adjoint: Option<PointMap>,
    unitary: bool,
}

impl fmt::Debug for CoherentMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoherentMap")
            .field("has_adjoint", &self.adjoint.is_some())
            .field("unitary", &self.unitary)
            .finish()
    }
}

impl CoherentMap {
    pub fn new(forward: impl Fn(&Point) -> Point + Send + Sync + 'static) -> Self {
        CoherentMap { forward: Arc::new(forward), adjoint: None, unitary: false }
    }

    pub fn with_adjoint(mut self, adjoint: impl Fn(&Point) -> Point + Send + Sync + 'static) -> Self {
        self.adjoint = Some(Arc::new(adjoint));
        self
    }

    /// Marks the map as unitary (its adjoint is its inverse).
    pub fn unitary(mut self) -> Self {
        self.unitary = true;
        self
    }

    pub fn identity() -> Self {
        CoherentMap::new(|z| z.clone()).with_adjoint(|z| z.clone()).unitary()
    }

    /// `z ↦ Mz` on real or complex vector points, with adjoint `M*`.
    pub fn matrix(m: DMatrix<C64>) -> Self {
        let adj = m.adjoint();
        let apply = |m: &DMatrix<C64>, z: &Point| match z {
            Point::Complex(v) => Point::Complex((m * nalgebra::DVector::from_column_slice(v)).iter().cloned().collect()),
            Point::Real(v) => {
                let c: Vec<C64> = v.iter().map(|x| C64::from(*x)).collect();
                Point::Real((m * nalgebra::DVector::from_vec(c)).iter().map(|x| x.re).collect())
            }
            other => other.clone(),
        };
        CoherentMap::new(move |z| apply(&m, z)).with_adjoint(move |z| apply(&adj, z))
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn apply(&self, z: &Point) -> Point {
        (self.forward)(z)
    }

    pub fn apply_adjoint(&self, z: &Point) -> Option<Point> {
        self.adjoint.as_ref().map(|a| a(z))
    }

    /// `self ∘ other`, with adjoint `other* ∘ self*`.
    pub fn compose(&self, other: &CoherentMap) -> CoherentMap {
        let (f, g) = (self.forward.clone(), other.forward.clone());
        let adjoint = match (&self.adjoint, &other.adjoint) {
            (Some(fa), Some(ga)) => {
                let (fa, ga) = (fa.clone(), ga.clone());
                Some(Arc::new(move |z: &Point| ga(&fa(z))) as PointMap)
            }
            _ => None,
        };
        CoherentMap { forward: Arc::new(move |z| f(&g(z))), adjoint, unitary: self.unitary && other.unitary }
    }
}

/// `Γ(A) Σ c_k |z_k⟩ = Σ c_k |A z_k⟩`.
pub fn gamma_apply(a: &CoherentMap, psi: &QVec) -> Result<QVec, QuantumError> {
    let mut terms = Vec::with_capacity(psi.terms.len());
    for (index, (c, z)) in psi.terms.iter().enumerate() {
        let w = a.apply(z);
        psi.space.check(&w).map_err(|source| QuantumError::LeavesDomain { index, source })?;
        terms.push((*c, w));
    }
    Ok(QVec { space: psi.space.clone(), terms })
}

/// `max |K(z, Az') − K(A*z, z')|` over the sample pairs.
pub fn adjoint_residual(space: &SpaceHandle, a: &CoherentMap, samples: &[(Point, Point)]) -> Result<f64, QuantumError> {
    let mut worst = 0.0f64;
    for (z, w) in samples {
        let az = a.apply_adjoint(z).ok_or(QuantumError::NoAdjoint)?;
        worst = worst.max((space.kernel(z, &a.apply(w))? - space.kernel(&az, w)?).norm());
    }
    Ok(worst)
}

/// Orthonormal basis of the span of a point set.
#[derive(Clone, Debug)]
pub struct OrthoBasis {
    /// All Gram eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Retained eigenvalues, matching `vectors`.
    pub retained: Vec<f64>,
    pub vectors: Vec<QVec>,
    pub gram: DMatrix<C64>,
    eigenvectors: DMatrix<C64>,
}

impl OrthoBasis {
    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    /// `Σ_i λ_i u_i u_i†` over the retained directions.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let n = self.gram.nrows();
        let skip = self.eigenvalues.len() - self.retained.len();
        let mut g = DMatrix::zeros(n, n);
        for (i, lambda) in self.retained.iter().enumerate() {
            let u = self.eigenvectors.column(skip + i);
            g += u * u.adjoint() * C64::from(*lambda);
        }
        g
    }
}

/// Eigen-thresholded orthonormalization; directions with
/// `λ ≤ tol·λ_max` are dropped.
pub fn orthonormal_basis(space: &SpaceHandle, points: &[Point], tol: f64) -> Result<OrthoBasis, QuantumError> {
    let gram = space.gram(points)?.entries;
    let (values, vectors) = linalg::hermitian_eigen(&gram).ok_or(SpaceError::EigenSolver)?;
    let max = values.last().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..values.len()).filter(|&i| max > 0.0 && values[i] > tol * max).collect();
    if keep.is_empty() {
        return Err(QuantumError::Degenerate(tol));
    }
    let basis = keep
        .iter()
        .map(|&i| {
            let s = 1.0 / values[i].sqrt();
            let terms = points.iter().enumerate().map(|(k, p)| (vectors[(k, i)] * s, p.clone())).collect();
            QVec { space: space.clone(), terms }
        })
        .collect();
    Ok(OrthoBasis {
        retained: keep.iter().map(|&i| values[i]).collect(),
        eigenvalues: values,
        vectors: basis,
        gram,
        eigenvectors: vectors,
    })
}

type MatrixElement = Arc<dyn Fn(&Point, &Point) -> C64 + Send + Sync>;

/// An operator given by its shadow `⟨z|X|z'⟩`.
#[derive(Clone)]
pub struct KernelOperator {
    element: MatrixElement,
    checked: bool,
}

impl fmt::Debug for KernelOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelOperator").field("checked", &self.checked).finish()
    }
}

impl KernelOperator {
    /// A user-supplied shadow; its admissibility cannot be verified.
    pub fn new(element: impl Fn(&Point, &Point) -> C64 + Send + Sync + 'static) -> Self {
        KernelOperator { element: Arc::new(element), checked: false }
    }

    /// A shadow built by the library from a known admissible operator.
    pub(crate) fn trusted(element: impl Fn(&Point, &Point) -> C64 + Send + Sync + 'static) -> Self {
        KernelOperator { element: Arc::new(element), checked: true }
    }

    /// The coherent product itself (the identity operator).
    pub fn identity(space: &SpaceHandle) -> Self {
        let s = space.clone();
        KernelOperator::trusted(move |z, w| s.kernel(z, w).unwrap_or(C64::new(f64::NAN, f64::NAN)))
    }

    /// Shadow `K(z, Az')` of `Γ(A)`.
    pub fn gamma(space: &SpaceHandle, a: &CoherentMap) -> Self {
        let (s, a) = (space.clone(), a.clone());
        KernelOperator::trusted(move |z, w| s.kernel(z, &a.apply(w)).unwrap_or(C64::new(f64::NAN, f64::NAN)))
    }

    pub fn is_checked(&self) -> bool {
        self.checked
    }

    pub fn element(&self, z: &Point, w: &Point) -> C64 {
        (self.element)(z, w)
    }
}

/// `⟨φ|X|ψ⟩ = Σ conj(c_j) d_k ⟨z_j|X|w_k⟩`.
pub fn sandwich(op: &KernelOperator, phi: &QVec, psi: &QVec) -> Result<C64, QuantumError> {
    same_space(phi, psi)?;
    let mut acc = C64::from(0.0);
    for (c, z) in &phi.terms {
        for (d, w) in &psi.terms {
            acc += c.conj() * d * op.element(z, w);
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_space, SpaceSpec};

    fn klauder() -> SpaceHandle {
        make_space(&SpaceSpec::Klauder(1)).unwrap()
    }

    fn kp(z0: f64, z: f64) -> Point {
        Point::klauder(C64::from(z0), &[C64::from(z)])
    }

    #[test]
    fn inner_products_of_coherent_states() {
        let k = klauder();
        let phi = QVec::coherent(&k, kp(0.0, 1.0)).unwrap();
        let psi = QVec::coherent(&k, kp(0.0, 0.0)).unwrap();
        assert_eq!(inner(&phi, &psi).unwrap(), C64::from(1.0));
        let diff = phi.add(&psi.scale(C64::from(-1.0))).unwrap();
        let d = k.distance(&kp(0.0, 1.0), &kp(0.0, 0.0)).unwrap();
        assert!((norm(&diff).unwrap() - d).abs() < 1e-14);
        assert!((d - (std::f64::consts::E - 1.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn zero_combination_has_zero_norm() {
        let k = klauder();
        let v = QVec::new(&k, vec![(C64::from(0.0), kp(0.3, 0.2))]).unwrap();
        assert_eq!(norm(&v).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        let a = QVec::coherent(&klauder(), kp(0.0, 0.0)).unwrap();
        let s = make_space(&SpaceSpec::Szego).unwrap();
        let b = QVec::coherent(&s, Point::Scalar(C64::from(0.1))).unwrap();
        assert!(matches!(inner(&a, &b), Err(QuantumError::SpaceMismatch(..))));
    }

    #[test]
    fn basis_ranks() {
        let k = klauder();
        let same = orthonormal_basis(&k, &[kp(0.1, 0.2), kp(0.1, 0.2)], 1e-12).unwrap();
        assert_eq!(same.rank(), 1);
        let two = orthonormal_basis(&k, &[kp(-0.5, 0.0), kp(-0.5, 1.0)], 1e-12).unwrap();
        assert_eq!(two.rank(), 2);
        assert!(two.retained[0] > 0.0);
        let sphere = make_space(&SpaceSpec::UnitSphere(2)).unwrap();
        let e1 = Point::Complex(vec![C64::from(1.0), C64::from(0.0)]);
        let e2 = Point::Complex(vec![C64::from(0.0), C64::from(1.0)]);
        let b = orthonormal_basis(&sphere, &[e1, e2], 1e-12).unwrap();
        assert_eq!(b.rank(), 2);
        assert_eq!(b.eigenvalues, vec![1.0, 1.0]);
    }

    #[test]
    fn wrong_adjoint_has_large_residual() {
        let e = make_space(&SpaceSpec::Euclidean(2)).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0].map(C64::from));
        let good = CoherentMap::matrix(m.clone());
        let bad = CoherentMap::new({
            let g = good.clone();
            move |z| g.apply(z)
        })
        .with_adjoint({
            let g = good.clone();
            move |z| g.apply(z)
        });
        let samples = vec![(Point::Real(vec![1.0, 0.5]), Point::Real(vec![-0.3, 2.0]))];
        assert!(adjoint_residual(&e, &good, &samples).unwrap() < 1e-14);
        assert!(adjoint_residual(&e, &bad, &samples).unwrap() > 0.1);
    }

    #[test]
    fn gamma_reports_points_leaving_the_domain() {
        let s = make_space(&SpaceSpec::Szego).unwrap();
        let push = CoherentMap::new(|z| match z {
            Point::Scalar(c) => Point::Scalar(c * 4.0),
            p => p.clone(),
        });
        let v = QVec::coherent(&s, Point::Scalar(C64::from(0.5))).unwrap();
        assert!(matches!(gamma_apply(&push, &v), Err(QuantumError::LeavesDomain { index: 0, .. })));
    }

    #[test]
    fn identity_shadow_reproduces_inner() {
        let k = klauder();
        let phi = QVec::new(&k, vec![(C64::new(1.0, 2.0), kp(0.1, -0.3)), (C64::from(0.5), kp(0.0, 0.4))]).unwrap();
        let psi = QVec::coherent(&k, kp(-0.2, 0.7)).unwrap();
        let op = KernelOperator::identity(&k);
        assert!(op.is_checked());
        assert!((sandwich(&op, &phi, &psi).unwrap() - inner(&phi, &psi).unwrap()).norm() < 1e-15);
        assert!(!KernelOperator::new(|_, _| C64::from(0.0)).is_checked());
    }
}
