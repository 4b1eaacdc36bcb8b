//! Bosonic Fock calculus on the Klauder space.
//!
//! Operators are represented through their coherent matrix elements. The
//! oscillator semigroup element `[ρ, p, q, X]` acts on Klauder points by
//! `[z0, ẑ] ↦ [ρ + z0 + p*ẑ, q + Xẑ]`, and the generator `X_{ρ,p,q,X}` is
//! its infinitesimal version, with `dΓ` matrix element
//! `K(z, z')(ρ + p*ẑ' + ẑ*q + ẑ*Xẑ')`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::catalog::fd::FdError;
use crate::linalg;
use crate::quantum::CoherentMap;
use crate::space::Point;
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("dimension mismatch: expected {expected} modes, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("expected a Klauder point")]
    NotKlauder,
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("matrix exponential is not finite")]
    Overflow,
    #[error("element is not invertible")]
    Singular,
}

impl From<FockError> for FdError {
    fn from(e: FockError) -> Self {
        FdError::Space(crate::space::SpaceError::Precondition(e.to_string()))
    }
}

fn dotc(a: &DVector<C64>, b: &DVector<C64>) -> C64 {
    a.dotc(b)
}

fn klauder_parts(z: &Point) -> Result<(C64, DVector<C64>), FockError> {
    let (z0, v) = z.as_klauder().ok_or(FockError::NotKlauder)?;
    Ok((z0, DVector::from_column_slice(v)))
}

/// `exp(z̄0 + w0 + ẑ*ŵ)`'s exponent.
fn klauder_exponent(z: &Point, w: &Point) -> Result<C64, FockError> {
    let (a, u) = klauder_parts(z)?;
    let (b, v) = klauder_parts(w)?;
    if u.len() != v.len() {
        return Err(FockError::DimensionMismatch { expected: u.len(), found: v.len() });
    }
    Ok(a.conj() + b + dotc(&u, &v))
}

fn klauder_kernel(z: &Point, w: &Point) -> Result<C64, FockError> {
    Ok(klauder_exponent(z, w)?.exp())
}

/// Oscillator semigroup element `[ρ, p, q, X]`.
#[derive(Clone, Debug, PartialEq)]
pub struct OscElement {
    pub rho: C64,
    pub p: DVector<C64>,
    pub q: DVector<C64>,
    pub x: DMatrix<C64>,
}

fn check_dims(p: &DVector<C64>, q: &DVector<C64>, x: &DMatrix<C64>) -> Result<(), FockError> {
    let n = p.len();
    for found in [q.len(), x.nrows(), x.ncols()] {
        if found != n {
            return Err(FockError::DimensionMismatch { expected: n, found });
        }
    }
    Ok(())
}

fn block(rho: C64, p: &DVector<C64>, q: &DVector<C64>, x: &DMatrix<C64>, corner: C64) -> DMatrix<C64> {
    let n = p.len();
    let mut m = DMatrix::zeros(n + 2, n + 2);
    m[(0, 0)] = corner;
    m[(n + 1, n + 1)] = corner;
    m[(0, n + 1)] = rho;
    for i in 0..n {
        m[(0, i + 1)] = p[i].conj();
        m[(i + 1, n + 1)] = q[i];
        for j in 0..n {
            m[(i + 1, j + 1)] = x[(i, j)];
        }
    }
    m
}

fn unblock(m: &DMatrix<C64>) -> (C64, DVector<C64>, DVector<C64>, DMatrix<C64>) {
    let n = m.nrows() - 2;
    let p = DVector::from_fn(n, |i, _| m[(0, i + 1)].conj());
    let q = DVector::from_fn(n, |i, _| m[(i + 1, n + 1)]);
    let x = DMatrix::from_fn(n, n, |i, j| m[(i + 1, j + 1)]);
    (m[(0, n + 1)], p, q, x)
}

impl OscElement {
    pub fn new(rho: C64, p: DVector<C64>, q: DVector<C64>, x: DMatrix<C64>) -> Result<Self, FockError> {
        check_dims(&p, &q, &x)?;
        Ok(OscElement { rho, p, q, x })
    }

    pub fn identity(n: usize) -> Self {
        OscElement { rho: C64::from(0.0), p: DVector::zeros(n), q: DVector::zeros(n), x: DMatrix::identity(n, n) }
    }

    /// `[0, p, q, I]`, the element behind the Weyl operators.
    pub fn shift(p: &[C64], q: &[C64]) -> Result<Self, FockError> {
        OscElement::new(
            C64::from(0.0),
            DVector::from_column_slice(p),
            DVector::from_column_slice(q),
            DMatrix::identity(p.len(), p.len()),
        )
    }

    pub fn modes(&self) -> usize {
        self.p.len()
    }

    /// `[[1, p*, ρ], [0, X, q], [0, 0, 1]]`.
    pub fn to_block(&self) -> DMatrix<C64> {
        block(self.rho, &self.p, &self.q, &self.x, C64::from(1.0))
    }

    pub fn from_block(m: &DMatrix<C64>) -> Self {
        let (rho, p, q, x) = unblock(m);
        OscElement { rho, p, q, x }
    }

    pub fn mul(&self, b: &OscElement) -> Result<OscElement, FockError> {
        if self.modes() != b.modes() {
            return Err(FockError::DimensionMismatch { expected: self.modes(), found: b.modes() });
        }
        Ok(OscElement {
            rho: self.rho + b.rho + dotc(&self.p, &b.q),
            p: &b.p + b.x.adjoint() * &self.p,
            q: &self.q + &self.x * &b.q,
            x: &self.x * &b.x,
        })
    }

    pub fn act(&self, z: &Point) -> Result<Point, FockError> {
        let (z0, v) = klauder_parts(z)?;
        if v.len() != self.modes() {
            return Err(FockError::DimensionMismatch { expected: self.modes(), found: v.len() });
        }
        let w = &self.q + &self.x * &v;
        Ok(Point::Klauder { z0: self.rho + z0 + dotc(&self.p, &v), z: w.iter().cloned().collect() })
    }

    /// `[ρ̄, q, p, X*]`.
    pub fn adjoint(&self) -> OscElement {
        OscElement { rho: self.rho.conj(), p: self.q.clone(), q: self.p.clone(), x: self.x.adjoint() }
    }

    pub fn inverse(&self) -> Result<OscElement, FockError> {
        let inv = self.to_block().try_inverse().ok_or(FockError::Singular)?;
        Ok(OscElement::from_block(&inv))
    }

    /// The coherent map `z ↦ Az` with adjoint `z ↦ A*z`.
    pub fn as_map(&self) -> CoherentMap {
        let (a, adj) = (self.clone(), self.adjoint());
        CoherentMap::new(move |z| a.act(z).unwrap_or_else(|_| z.clone()))
            .with_adjoint(move |z| adj.act(z).unwrap_or_else(|_| z.clone()))
    }
}

pub fn osc_mul(a: &OscElement, b: &OscElement) -> Result<OscElement, FockError> {
    a.mul(b)
}

pub fn osc_act(a: &OscElement, z: &Point) -> Result<Point, FockError> {
    a.act(z)
}

pub fn osc_adjoint(a: &OscElement) -> OscElement {
    a.adjoint()
}

/// Oscillator algebra generator `X_{ρ,p,q,X}`.
#[derive(Clone, Debug, PartialEq)]
pub struct OscGenerator {
    pub rho: C64,
    pub p: DVector<C64>,
    pub q: DVector<C64>,
    pub x: DMatrix<C64>,
}

impl OscGenerator {
    pub fn new(rho: C64, p: DVector<C64>, q: DVector<C64>, x: DMatrix<C64>) -> Result<Self, FockError> {
        check_dims(&p, &q, &x)?;
        Ok(OscGenerator { rho, p, q, x })
    }

    pub fn zero(n: usize) -> Self {
        OscGenerator { rho: C64::from(0.0), p: DVector::zeros(n), q: DVector::zeros(n), x: DMatrix::zeros(n, n) }
    }

    /// `q*a = X_{0,q,0,0}`.
    pub fn annihilation(q: &[C64]) -> Self {
        OscGenerator { p: DVector::from_column_slice(q), ..OscGenerator::zero(q.len()) }
    }

    /// `a*q = X_{0,0,q,0}`.
    pub fn creation(q: &[C64]) -> Self {
        OscGenerator { q: DVector::from_column_slice(q), ..OscGenerator::zero(q.len()) }
    }

    /// `Σ ω_j a_j* a_j = X_{0,0,0,diag ω}`.
    pub fn number(omegas: &[f64]) -> Self {
        let n = omegas.len();
        let x = DMatrix::from_diagonal(&DVector::from_iterator(n, omegas.iter().map(|w| C64::from(*w))));
        OscGenerator { x, ..OscGenerator::zero(n) }
    }

    pub fn modes(&self) -> usize {
        self.p.len()
    }

    pub fn to_block(&self) -> DMatrix<C64> {
        block(self.rho, &self.p, &self.q, &self.x, C64::from(0.0))
    }

    /// `[ρ̄, q, p, X*]`.
    pub fn adjoint(&self) -> OscGenerator {
        OscGenerator { rho: self.rho.conj(), p: self.q.clone(), q: self.p.clone(), x: self.x.adjoint() }
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        let a = self.adjoint();
        (self.rho - a.rho).norm() <= tol
            && (&self.p - &a.p).norm() <= tol
            && (&self.q - &a.q).norm() <= tol
            && (&self.x - &a.x).norm() <= tol
    }

    pub fn scaled(&self, s: C64) -> OscGenerator {
        OscGenerator { rho: self.rho * s, p: &self.p * s.conj(), q: &self.q * s, x: &self.x * s }
    }

    pub fn add(&self, o: &OscGenerator) -> OscGenerator {
        OscGenerator { rho: self.rho + o.rho, p: &self.p + &o.p, q: &self.q + &o.q, x: &self.x + &o.x }
    }

    /// `e^{sG}` as a semigroup element.
    pub fn exp(&self, s: C64) -> Result<OscElement, FockError> {
        let m = linalg::expm(&(self.to_block() * s)).ok_or(FockError::Overflow)?;
        Ok(OscElement::from_block(&m))
    }

    /// `d/ds e^{sG} z` at `s = 0`, in Klauder coordinates.
    pub fn velocity(&self, z: &Point) -> Result<(C64, DVector<C64>), FockError> {
        let (_, v) = klauder_parts(z)?;
        if v.len() != self.modes() {
            return Err(FockError::DimensionMismatch { expected: self.modes(), found: v.len() });
        }
        Ok((self.rho + dotc(&self.p, &v), &self.q + &self.x * &v))
    }
}

/// `⟨z|dΓ(G)|z'⟩ = K(z, z')(ρ + p*ẑ' + ẑ*q + ẑ*Xẑ')`.
pub fn dgamma_element(gen: &OscGenerator, z: &Point, w: &Point) -> Result<C64, FockError> {
    let (_, u) = klauder_parts(z)?;
    let (_, v) = klauder_parts(w)?;
    let k = klauder_kernel(z, w)?;
    Ok(k * (gen.rho + dotc(&gen.p, &v) + dotc(&u, &gen.q) + dotc(&u, &(&gen.x * &v))))
}

/// `⟨z|q*a|z'⟩ = K(z, z') q*ẑ'`.
pub fn annihilation_element(q: &[C64], z: &Point, w: &Point) -> Result<C64, FockError> {
    dgamma_element(&OscGenerator::annihilation(q), z, w)
}

/// `⟨z|a*q|z'⟩ = K(z, z') ẑ*q`.
pub fn creation_element(q: &[C64], z: &Point, w: &Point) -> Result<C64, FockError> {
    dgamma_element(&OscGenerator::creation(q), z, w)
}

/// Segal field `(q*a + a*q)/√2`.
pub fn segal_field_element(q: &[C64], z: &Point, w: &Point) -> Result<C64, FockError> {
    Ok((annihilation_element(q, z, w)? + creation_element(q, z, w)?) / std::f64::consts::SQRT_2)
}

type SymbolFn = Arc<dyn Fn(&[C64], &[C64]) -> C64 + Send + Sync>;

/// Symbol `F(ẑ, ẑ')` of a normally ordered operator; `F` conjugates its
/// first argument itself.
#[derive(Clone)]
pub struct NormalOrderSpec(SymbolFn);

impl NormalOrderSpec {
    pub fn new(f: impl Fn(&[C64], &[C64]) -> C64 + Send + Sync + 'static) -> Self {
        NormalOrderSpec(Arc::new(f))
    }

    pub fn eval(&self, u: &[C64], v: &[C64]) -> C64 {
        (self.0)(u, v)
    }

    /// `exp(ρ + p*ẑ' + ẑ*q + ẑ*(X − I)ẑ')`, the symbol of `Γ([ρ, p, q, X])`.
    pub fn of_element(a: &OscElement) -> Self {
        let a = a.clone();
        let shifted = &a.x - DMatrix::<C64>::identity(a.modes(), a.modes());
        NormalOrderSpec::new(move |u, v| {
            let (u, v) = (DVector::from_column_slice(u), DVector::from_column_slice(v));
            (a.rho + dotc(&a.p, &v) + dotc(&u, &a.q) + dotc(&u, &(&shifted * &v))).exp()
        })
    }
}

/// `⟨z| :F: |z'⟩ = K(z, z') F(ẑ, ẑ')`.
pub fn normal_ordered_element(f: &NormalOrderSpec, z: &Point, w: &Point) -> Result<C64, FockError> {
    let (_, u) = z.as_klauder().ok_or(FockError::NotKlauder)?;
    let (_, v) = w.as_klauder().ok_or(FockError::NotKlauder)?;
    Ok(klauder_kernel(z, w)? * f.eval(u, v))
}

/// Matrix element of `Σ_k :F_k:` for a countable family of symbols,
/// truncated once three consecutive terms fall below `rel_tail` times the
/// partial sum.
pub fn normal_ordered_series(
    term: impl Fn(usize, &[C64], &[C64]) -> C64,
    z: &Point,
    w: &Point,
    rel_tail: f64,
) -> Result<C64, FockError> {
    let (_, u) = z.as_klauder().ok_or(FockError::NotKlauder)?;
    let (_, v) = w.as_klauder().ok_or(FockError::NotKlauder)?;
    let mut sum = C64::from(0.0);
    let mut small = 0;
    for k in 0..100_000 {
        let t = term(k, u, v);
        sum += t;
        small = if t.norm() <= rel_tail * sum.norm() { small + 1 } else { 0 };
        if small == 3 {
            break;
        }
    }
    Ok(klauder_kernel(z, w)? * sum)
}

/// `e^{c} Γ(A)` with the scalar kept in the exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledGamma {
    pub log_scale: C64,
    pub element: OscElement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeylConvention {
    /// `W(p, q) = e^{p*a + a*q} = e^{p*q/2} Γ([0, p, q, I])`.
    Symmetric,
    /// `W(p, q) = e^{p*a} e^{a*q} = e^{p*q} Γ([0, p, q, I])`.
    AntiNormal,
}

impl WeylConvention {
    /// Scalar `c` in `W(p,q) W(p',q') = e^{c} W(p+p', q+q')`.
    pub fn product_phase(self, p: &[C64], q: &[C64], p2: &[C64], q2: &[C64]) -> C64 {
        match self {
            WeylConvention::Symmetric => 0.5 * (cdot(p, q2) - cdot(p2, q)),
            WeylConvention::AntiNormal => -cdot(p2, q),
        }
    }

    /// Scalar `c` in `W(p,q)⁻¹ = e^{c} W(−p, −q)`.
    pub fn inverse_phase(self, p: &[C64], q: &[C64]) -> C64 {
        match self {
            WeylConvention::Symmetric => C64::from(0.0),
            WeylConvention::AntiNormal => -cdot(p, q),
        }
    }
}

fn cdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn neg(v: &[C64]) -> Vec<C64> {
    v.iter().map(|x| -x).collect()
}

fn add(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

impl ScaledGamma {
    pub fn gamma(element: OscElement) -> Self {
        ScaledGamma { log_scale: C64::from(0.0), element }
    }

    pub fn weyl(p: &[C64], q: &[C64], convention: WeylConvention) -> Result<Self, FockError> {
        let log_scale = match convention {
            WeylConvention::Symmetric => 0.5 * cdot(p, q),
            WeylConvention::AntiNormal => cdot(p, q),
        };
        Ok(ScaledGamma { log_scale, element: OscElement::shift(p, q)? })
    }

    pub fn then_scale(mut self, c: C64) -> Self {
        self.log_scale += c;
        self
    }

    /// Operator product `self · other`.
    pub fn compose(&self, other: &ScaledGamma) -> Result<Self, FockError> {
        Ok(ScaledGamma { log_scale: self.log_scale + other.log_scale, element: self.element.mul(&other.element)? })
    }

    pub fn inverse(&self) -> Result<Self, FockError> {
        Ok(ScaledGamma { log_scale: -self.log_scale, element: self.element.inverse()? })
    }

    /// `⟨z| e^{c} Γ(A) |z'⟩ = e^{c} K(z, Az')`.
    pub fn matrix_element(&self, z: &Point, w: &Point) -> Result<C64, FockError> {
        Ok((self.log_scale + klauder_exponent(z, &self.element.act(w)?)?).exp())
    }
}

/// `⟨z|W(p,q)|z'⟩` for the symmetric Weyl operator `e^{p*a + a*q}`.
pub fn weyl_element(p: &[C64], q: &[C64], z: &Point, w: &Point) -> Result<C64, FockError> {
    ScaledGamma::weyl(p, q, WeylConvention::Symmetric)?.matrix_element(z, w)
}

fn rel_gap(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

/// Worst relative residuals of the Weyl relations over a sample of pairs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeylResiduals {
    /// `e^{p*a} e^{a*q} = e^{p*q} e^{a*q} e^{p*a}`.
    pub exchange: f64,
    /// `W W' = e^{c} W(p+p', q+q')`.
    pub product: f64,
    /// `W · e^{c} W(−p, −q) = 1`.
    pub inverse: f64,
    /// `W W' = e^{p*q' − p'*q} W' W`.
    pub commutation: f64,
    /// `W⁻¹ W'⁻¹ W W'`, a pure scalar, as computed from the semigroup.
    pub group_commutator: C64,
}

impl WeylResiduals {
    pub fn worst(&self) -> f64 {
        self.exchange.max(self.product).max(self.inverse).max(self.commutation)
    }
}

pub fn weyl_relation_residuals(
    p: &[C64],
    q: &[C64],
    p2: &[C64],
    q2: &[C64],
    samples: &[(Point, Point)],
    convention: WeylConvention,
) -> Result<WeylResiduals, FockError> {
    let n = p.len();
    let zeros = vec![C64::from(0.0); n];
    let ea = ScaledGamma::gamma(OscElement::shift(p, &zeros)?);
    let eb = ScaledGamma::gamma(OscElement::shift(&zeros, q)?);
    let ab = ea.compose(&eb)?;
    let ba = eb.compose(&ea)?.then_scale(cdot(p, q));

    let w1 = ScaledGamma::weyl(p, q, convention)?;
    let w2 = ScaledGamma::weyl(p2, q2, convention)?;
    let w12 = w1.compose(&w2)?;
    let w21 = w2.compose(&w1)?;
    let sum = ScaledGamma::weyl(&add(p, p2), &add(q, q2), convention)?
        .then_scale(convention.product_phase(p, q, p2, q2));
    let inv = ScaledGamma::weyl(&neg(p), &neg(q), convention)?.then_scale(convention.inverse_phase(p, q));
    let w_inv = w1.compose(&inv)?;
    let swapped = w21.clone().then_scale(cdot(p, q2) - cdot(p2, q));

    let group = w1.inverse()?.compose(&w2.inverse()?)?.compose(&w12)?;
    let mut r = WeylResiduals {
        exchange: 0.0,
        product: 0.0,
        inverse: 0.0,
        commutation: 0.0,
        group_commutator: (group.log_scale + group.element.rho).exp(),
    };
    for (z, w) in samples {
        r.exchange = r.exchange.max(rel_gap(ab.matrix_element(z, w)?, ba.matrix_element(z, w)?));
        r.product = r.product.max(rel_gap(w12.matrix_element(z, w)?, sum.matrix_element(z, w)?));
        r.inverse = r.inverse.max(rel_gap(w_inv.matrix_element(z, w)?, klauder_kernel(z, w)?));
        r.commutation = r.commutation.max(rel_gap(w12.matrix_element(z, w)?, swapped.matrix_element(z, w)?));
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CcrReport {
    /// `(ε, Δ(ε)/ε²)`.
    pub slopes: Vec<(f64, C64)>,
    /// Extrapolated `lim Δ(ε)/ε²`.
    pub limit: C64,
    /// `p*q · K(z, z')`.
    pub commutator_candidate: C64,
    /// `−2 Im(p*q) · K(z, z')`.
    pub imaginary_candidate: C64,
    pub gap_to_commutator: f64,
    pub gap_to_imaginary: f64,
}

/// ε-expansion of `⟨z|[e^{εp*a}, e^{εa*q}]|z'⟩`.
pub fn ccr_epsilon_check(p: &[C64], q: &[C64], z: &Point, w: &Point, eps_list: &[f64]) -> Result<CcrReport, FockError> {
    if eps_list.len() < 2 {
        return Err(FockError::DegenerateFit("need at least two step sizes".into()));
    }
    if eps_list.iter().any(|e| !(*e > 0.0)) || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(FockError::DegenerateFit("steps must be positive and strictly decreasing".into()));
    }
    let zeros = vec![C64::from(0.0); p.len()];
    let mut slopes = Vec::with_capacity(eps_list.len());
    for &e in eps_list {
        let ep: Vec<C64> = p.iter().map(|x| x * e).collect();
        let eq: Vec<C64> = q.iter().map(|x| x * e).collect();
        let a = ScaledGamma::gamma(OscElement::shift(&ep, &zeros)?);
        let b = ScaledGamma::gamma(OscElement::shift(&zeros, &eq)?);
        let delta = a.compose(&b)?.matrix_element(z, w)? - b.compose(&a)?.matrix_element(z, w)?;
        slopes.push((e, delta / (e * e)));
    }
    let xs: Vec<f64> = slopes.iter().map(|s| s.0).collect();
    let ys: Vec<C64> = slopes.iter().map(|s| s.1).collect();
    let limit = linalg::extrapolate_to_zero(&xs, &ys);
    let k = klauder_kernel(z, w)?;
    let pq = cdot(p, q);
    let commutator_candidate = pq * k;
    let imaginary_candidate = -2.0 * pq.im * k;
    Ok(CcrReport {
        gap_to_commutator: (limit - commutator_candidate).norm(),
        gap_to_imaginary: (limit - imaginary_candidate).norm(),
        slopes,
        limit,
        commutator_candidate,
        imaginary_candidate,
    })
}

/// Worst relative gap between `⟨z|:exp(ρ + p*a + a*q + a*(X − I)a):|z'⟩`
/// and `K(z, Az')`.
pub fn gamma_colon_residual(a: &OscElement, samples: &[(Point, Point)]) -> Result<f64, FockError> {
    let f = NormalOrderSpec::of_element(a);
    let mut worst = 0.0f64;
    for (z, w) in samples {
        worst = worst.max(rel_gap(normal_ordered_element(&f, z, w)?, klauder_kernel(z, &a.act(w)?)?));
    }
    Ok(worst)
}
