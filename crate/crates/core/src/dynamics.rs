//! Schrödinger dynamics as motion of coherent-state labels.
//!
//! Quantum evolution uses `ι = i/ℏ`: the oscillator flow is
//! `ψ(t) = e^{−ιtG} z`. Classical Hamiltonians live on the coherent manifold
//! with the real symplectic form `Ω_jk = ∂_k θ_j − ∂_j θ_k`,
//! `θ_j = iℏ R_{e_j} K(z, z)`, assembled in realified coordinates.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::catalog::fd::FdError;
use crate::catalog::{one_form_theta, two_form_omega};
use crate::fock::{FockError, OscGenerator};
use crate::linalg;
use crate::space::{Domain, Point, SpaceError, SpaceHandle, Tangent};
use crate::spectral::AutocorrSeries;
use crate::C64;

#[derive(Debug, Error, Clone)]
pub enum DynamicsError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Fd(#[from] FdError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("symplectic form is degenerate at the current point (condition number {0:e})")]
    Degenerate(f64),
    #[error("trajectory left the domain at t = {t}: {source}")]
    LeftDomain {
        t: f64,
        #[source]
        source: SpaceError,
        last: Box<Trajectory>,
    },
    #[error("{0}")]
    Precondition(String),
}

type FieldFn = Arc<dyn Fn(f64, &Point) -> Tangent + Send + Sync>;
type GeneratorFn = Arc<dyn Fn(f64) -> OscGenerator + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&Point) -> C64 + Send + Sync>;

/// Dynamics driving a coherent-state label.
#[derive(Clone)]
pub enum HamiltonianSpec {
    /// Time-independent oscillator generator.
    Oscillator(OscGenerator),
    /// Time-dependent oscillator generator `G(t)`.
    DrivenOscillator(GeneratorFn),
    /// A user field returning the label velocity `ż` directly, i.e. the
    /// right-hand side of `iℏż = F(t, z)` already divided by `iℏ`.
    GeneralField(FieldFn),
}

impl fmt::Debug for HamiltonianSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HamiltonianSpec::Oscillator(g) => f.debug_tuple("Oscillator").field(g).finish(),
            HamiltonianSpec::DrivenOscillator(_) => f.write_str("DrivenOscillator(..)"),
            HamiltonianSpec::GeneralField(_) => f.write_str("GeneralField(..)"),
        }
    }
}

impl HamiltonianSpec {
    pub fn field(f: impl Fn(f64, &Point) -> Tangent + Send + Sync + 'static) -> Self {
        HamiltonianSpec::GeneralField(Arc::new(f))
    }

    pub fn driven(g: impl Fn(f64) -> OscGenerator + Send + Sync + 'static) -> Self {
        HamiltonianSpec::DrivenOscillator(Arc::new(g))
    }
}

/// A classical function on the coherent manifold.
#[derive(Clone)]
pub struct Classical(ScalarFn);

impl fmt::Debug for Classical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Classical(..)")
    }
}

impl Classical {
    pub fn new(f: impl Fn(&Point) -> C64 + Send + Sync + 'static) -> Self {
        Classical(Arc::new(f))
    }

    /// `⟨z|dΓ(G)|z⟩`, the unnormalized coherent expectation of a generator.
    pub fn expectation(gen: &OscGenerator) -> Self {
        let g = gen.clone();
        Classical::new(move |z| crate::fock::dgamma_element(&g, z, z).unwrap_or(C64::new(f64::NAN, f64::NAN)))
    }

    pub fn eval(&self, z: &Point) -> C64 {
        (self.0)(z)
    }

    pub fn add(&self, o: &Classical) -> Classical {
        let (a, b) = (self.0.clone(), o.0.clone());
        Classical::new(move |z| a(z) + b(z))
    }

    pub fn mul(&self, o: &Classical) -> Classical {
        let (a, b) = (self.0.clone(), o.0.clone());
        Classical::new(move |z| a(z) * b(z))
    }

    pub fn scale(&self, s: C64) -> Classical {
        let a = self.0.clone();
        Classical::new(move |z| s * a(z))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rhs_evals: usize,
}

/// Points on the uniform time grid `t0 + k·dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    pub points: Vec<Point>,
    pub stats: IntegratorStats,
}

impl Trajectory {
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.points.len()).map(|k| self.time(k)).collect()
    }

    pub fn last(&self) -> &Point {
        self.points.last().expect("trajectories are never empty")
    }
}

fn point_from(domain: Domain, c: &[f64]) -> Point {
    domain.point_from_coords(c)
}

/// `e^{−ιtG} z`.
pub fn flow_exact(gen: &OscGenerator, t: f64, z: &Point, hbar: f64) -> Result<Point, DynamicsError> {
    let s = C64::new(0.0, -t / hbar);
    match gen.exp(s) {
        Ok(a) => Ok(a.act(z)?),
        Err(FockError::Overflow) => {
            for k in 1..=20 {
                let parts = 1usize << k;
                if let Ok(a) = gen.exp(s / parts as f64) {
                    let mut p = z.clone();
                    for _ in 0..parts {
                        p = a.act(&p)?;
                    }
                    if p.is_finite() {
                        return Ok(p);
                    }
                }
            }
            Err(FockError::Overflow.into())
        }
        Err(e) => Err(e.into()),
    }
}

/// Exact flow sampled at `t0 + k·dt`, `k < len`.
pub fn exact_trajectory(gen: &OscGenerator, z: &Point, t0: f64, dt: f64, len: usize, hbar: f64) -> Result<Trajectory, DynamicsError> {
    let points = (0..len).map(|k| flow_exact(gen, t0 + k as f64 * dt, z, hbar)).collect::<Result<Vec<_>, _>>()?;
    Ok(Trajectory { t0, dt, points, stats: IntegratorStats { steps: len.saturating_sub(1), rhs_evals: 0 } })
}

fn klauder_velocity(gen: &OscGenerator, z: &Point, hbar: f64) -> Result<Vec<f64>, DynamicsError> {
    let (v0, v) = gen.velocity(z)?;
    let mi = C64::new(0.0, -1.0 / hbar);
    Ok(std::iter::once(v0).chain(v.iter().cloned()).flat_map(|c| {
        let c = mi * c;
        [c.re, c.im]
    })
    .collect())
}

fn rk4(
    domain: Domain,
    z0: &Point,
    t_end: f64,
    dt: f64,
    mut rhs: impl FnMut(f64, &[f64]) -> Result<Vec<f64>, DynamicsError>,
) -> Result<Trajectory, DynamicsError> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(DynamicsError::Precondition(format!("need dt > 0 and t_end >= 0, got {dt}, {t_end}")));
    }
    domain.check(z0)?;
    let steps = (t_end / dt).round() as usize;
    let mut traj = Trajectory { t0: 0.0, dt, points: vec![z0.clone()], stats: IntegratorStats::default() };
    let mut y = z0.coords();
    let axpy = |y: &[f64], a: f64, k: &[f64]| -> Vec<f64> { y.iter().zip(k).map(|(y, k)| y + a * k).collect() };
    for n in 0..steps {
        let t = n as f64 * dt;
        let k1 = rhs(t, &y)?;
        let k2 = rhs(t + dt / 2.0, &axpy(&y, dt / 2.0, &k1))?;
        let k3 = rhs(t + dt / 2.0, &axpy(&y, dt / 2.0, &k2))?;
        let k4 = rhs(t + dt, &axpy(&y, dt, &k3))?;
        for i in 0..y.len() {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        traj.stats.rhs_evals += 4;
        let p = point_from(domain, &y);
        if let Err(source) = domain.check(&p) {
            return Err(DynamicsError::LeftDomain { t: t + dt, source, last: Box::new(traj) });
        }
        traj.points.push(p);
        traj.stats.steps += 1;
    }
    Ok(traj)
}

/// Fixed-step RK4 integration of the label ODE `iℏż = F(t, z)`.
pub fn propagate_ode(
    space: &SpaceHandle,
    h: &HamiltonianSpec,
    hbar: f64,
    z0: &Point,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, DynamicsError> {
    if !(hbar > 0.0) {
        return Err(DynamicsError::Precondition("hbar must be positive".into()));
    }
    let domain = space.domain();
    rk4(domain, z0, t_end, dt, |t, y| {
        let z = point_from(domain, y);
        match h {
            HamiltonianSpec::Oscillator(g) => klauder_velocity(g, &z, hbar),
            HamiltonianSpec::DrivenOscillator(g) => klauder_velocity(&g(t), &z, hbar),
            HamiltonianSpec::GeneralField(f) => Ok(f(t, &z).coords().to_vec()),
        }
    })
}

/// `K(z, ψ(t_k))` along a trajectory.
pub fn autocorrelation(space: &SpaceHandle, z: &Point, traj: &Trajectory) -> Result<AutocorrSeries, DynamicsError> {
    let values = traj.points.iter().map(|p| space.kernel(z, p)).collect::<Result<Vec<_>, _>>()?;
    Ok(AutocorrSeries {
        t0: traj.t0,
        dt: traj.dt,
        values,
        z: z.clone(),
        z_prime: traj.points[0].clone(),
        space_id: space.id().to_string(),
    })
}

/// Real antisymmetric matrix `Ω_jk = iℏ ω(e_j, e_k)` in chart coordinates.
pub fn symplectic_matrix(space: &SpaceHandle, z: &Point, hbar: f64) -> Result<DMatrix<f64>, DynamicsError> {
    let d = space.domain().real_dim();
    let basis: Vec<Tangent> = (0..d).map(|j| Tangent::basis(d, j)).collect();
    let mut m = DMatrix::zeros(d, d);
    for j in 0..d {
        for k in j + 1..d {
            let w = two_form_omega(space, z, &basis[j], &basis[k])?.value;
            m[(j, k)] = -hbar * w.im;
            m[(k, j)] = hbar * w.im;
        }
    }
    Ok(m)
}

/// Central-difference gradient with one Richardson level.
pub fn gradient(domain: Domain, f: &Classical, z: &Point) -> Result<Vec<C64>, DynamicsError> {
    let c = z.coords();
    let h = 1e-5 * z.coord_norm().max(1.0);
    let eval = |j: usize, t: f64| -> Result<C64, DynamicsError> {
        let mut x = c.clone();
        x[j] += t;
        let p = point_from(domain, &x);
        domain.check(&p)?;
        Ok(f.eval(&p))
    };
    (0..c.len())
        .map(|j| {
            let d = |h: f64| -> Result<C64, DynamicsError> { Ok((eval(j, h)? - eval(j, -h)?) / (2.0 * h)) };
            let g = (4.0 * d(h / 2.0)? - d(h)?) / 3.0;
            if g.re.is_finite() && g.im.is_finite() {
                Ok(g)
            } else {
                Err(FdError::NonFinite.into())
            }
        })
        .collect()
}

/// `Ω⁻¹`, antisymmetrized, after a conditioning check.
fn inverse_form(space: &SpaceHandle, z: &Point, hbar: f64) -> Result<DMatrix<f64>, DynamicsError> {
    let omega = symplectic_matrix(space, z, hbar)?;
    let cond = linalg::condition_number(&omega);
    if !(cond < 1e12) {
        return Err(DynamicsError::Degenerate(cond));
    }
    let inv = omega.try_inverse().ok_or(DynamicsError::Degenerate(f64::INFINITY))?;
    Ok((&inv - inv.transpose()) * 0.5)
}

/// `X_f = −Ω⁻¹ ∇f` for the real part of `f`.
pub fn hamiltonian_vector_field(space: &SpaceHandle, f: &Classical, z: &Point, hbar: f64) -> Result<Tangent, DynamicsError> {
    let m = inverse_form(space, z, hbar)?;
    let g = DVector::from_iterator(m.nrows(), gradient(space.domain(), f, z)?.iter().map(|c| c.re));
    Ok(Tangent::from_coords((-(m * g)).iter().cloned().collect()))
}

/// `{f, g} = ∇g · X_f`, summed over `j < k` so antisymmetry holds exactly.
pub fn poisson_bracket(space: &SpaceHandle, f: &Classical, g: &Classical, z: &Point, hbar: f64) -> Result<C64, DynamicsError> {
    let m = inverse_form(space, z, hbar)?;
    let df = gradient(space.domain(), f, z)?;
    let dg = gradient(space.domain(), g, z)?;
    let mut acc = C64::from(0.0);
    for j in 0..df.len() {
        for k in j + 1..df.len() {
            acc -= m[(j, k)] * (dg[j] * df[k] - dg[k] * df[j]);
        }
    }
    Ok(acc)
}

/// The bracket `{f, g}` as a classical function.
pub fn bracket_fn(space: &SpaceHandle, f: &Classical, g: &Classical, hbar: f64) -> Classical {
    let (s, f, g) = (space.clone(), f.clone(), g.clone());
    Classical::new(move |z| poisson_bracket(&s, &f, &g, z, hbar).unwrap_or(C64::new(f64::NAN, f64::NAN)))
}

/// RK4 integration of the coherent Euler–Lagrange equations
/// `ż = −Ω(z)⁻¹ ∇H(z)`.
pub fn el_integrate(
    space: &SpaceHandle,
    h: &Classical,
    z0: &Point,
    t_end: f64,
    dt: f64,
    hbar: f64,
) -> Result<Trajectory, DynamicsError> {
    let domain = space.domain();
    rk4(domain, z0, t_end, dt, |_, y| {
        let z = point_from(domain, y);
        Ok(hamiltonian_vector_field(space, h, &z, hbar)?.coords().to_vec())
    })
}

/// Trapezoidal action `∫ (iℏ R_ż K(z, z) − H(z)) dt` with `ż` from centered
/// differences of the stored points.
pub fn df_action(space: &SpaceHandle, traj: &Trajectory, h: &Classical, hbar: f64) -> Result<C64, DynamicsError> {
    let n = traj.points.len();
    if n < 101 {
        return Err(DynamicsError::Precondition(format!("df_action needs at least 100 steps, got {}", n.saturating_sub(1))));
    }
    let c: Vec<Vec<f64>> = traj.points.iter().map(|p| p.coords()).collect();
    let dt = traj.dt;
    let velocity = |k: usize| -> Vec<f64> {
        let d = c[0].len();
        (0..d)
            .map(|i| {
                if k == 0 {
                    (-3.0 * c[0][i] + 4.0 * c[1][i] - c[2][i]) / (2.0 * dt)
                } else if k == n - 1 {
                    (3.0 * c[n - 1][i] - 4.0 * c[n - 2][i] + c[n - 3][i]) / (2.0 * dt)
                } else {
                    (c[k + 1][i] - c[k - 1][i]) / (2.0 * dt)
                }
            })
            .collect()
    };
    let weights = linalg::trapezoid_weights(n, dt);
    let ih = C64::new(0.0, hbar);
    let mut s = C64::from(0.0);
    for (k, (w, z)) in weights.iter().zip(&traj.points).enumerate() {
        let v = Tangent::from_coords(velocity(k));
        let lagrangian = ih * one_form_theta(space, z, &v)?.value - h.eval(z);
        s += *w * lagrangian;
    }
    Ok(s)
}

/// `z(t) + ε sin²(π(t − t0)/T) V` in chart coordinates; the endpoints stay fixed.
pub fn perturb_trajectory(domain: Domain, traj: &Trajectory, direction: &[f64], eps: f64) -> Trajectory {
    let span = traj.dt * (traj.points.len() - 1) as f64;
    let points = traj
        .points
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let bump = (std::f64::consts::PI * k as f64 * traj.dt / span).sin().powi(2);
            let c: Vec<f64> = p.coords().iter().zip(direction).map(|(x, v)| x + eps * bump * v).collect();
            point_from(domain, &c)
        })
        .collect();
    Trajectory { points, ..traj.clone() }
}

/// `|S(z + εδz) − S(z)|` for each `ε`, with `δz` a bump along `direction`.
pub fn action_response(
    space: &SpaceHandle,
    traj: &Trajectory,
    h: &Classical,
    hbar: f64,
    direction: &[f64],
    eps: &[f64],
) -> Result<Vec<f64>, DynamicsError> {
    let base = df_action(space, traj, h, hbar)?;
    eps.iter()
        .map(|&e| Ok((df_action(space, &perturb_trajectory(space.domain(), traj, direction, e), h, hbar)? - base).norm()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_space, SpaceSpec};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn harmonic_flow_rotates_the_mode() {
        let g = OscGenerator::number(&[2.0]);
        let z = Point::klauder(c(0.3, -0.1), &[c(0.5, 0.8)]);
        let Point::Klauder { z0, z: v } = flow_exact(&g, 1.3, &z, 1.0).unwrap() else { unreachable!() };
        assert!((z0 - c(0.3, -0.1)).norm() < 1e-15);
        assert!((v[0] - c(0.5, 0.8) * c(0.0, -2.6).exp()).norm() < 1e-14);
        assert_eq!(flow_exact(&g, 0.0, &z, 1.0).unwrap(), z);
    }

    #[test]
    fn zero_field_gives_constant_trajectory() {
        let s = make_space(&SpaceSpec::Reciprocal).unwrap();
        let h = HamiltonianSpec::field(|_, _| Tangent::real(&[0.0]));
        let tr = propagate_ode(&s, &h, 1.0, &Point::Positive(2.0), 1.0, 0.1).unwrap();
        assert_eq!(tr.points.len(), 11);
        assert!(tr.points.iter().all(|p| *p == Point::Positive(2.0)));
    }

    #[test]
    fn leaving_the_domain_aborts_with_the_last_state() {
        let s = make_space(&SpaceSpec::Reciprocal).unwrap();
        let h = HamiltonianSpec::field(|_, _| Tangent::real(&[-1.0]));
        let err = propagate_ode(&s, &h, 1.0, &Point::Positive(0.25), 1.0, 0.1).unwrap_err();
        let DynamicsError::LeftDomain { t, last, .. } = err else { panic!("{err}") };
        assert!((t - 0.3).abs() < 1e-12);
        assert_eq!(last.points.len(), 3);
    }

    #[test]
    fn constant_hamiltonian_has_zero_field() {
        let s = make_space(&SpaceSpec::Klauder(1)).unwrap();
        let z = Point::klauder(c(-0.5, 0.0), &[c(1.0, 0.0)]);
        let x = hamiltonian_vector_field(&s, &Classical::new(|_| c(3.0, 0.0)), &z, 1.0).unwrap();
        assert!(x.is_zero());
    }

    #[test]
    fn mode_energy_field_is_tangent_to_circles() {
        let s = make_space(&SpaceSpec::Klauder(1)).unwrap();
        let z = Point::klauder(c(-0.5, 0.0), &[c(1.0, 0.0)]);
        let h = Classical::new(|z| {
            let (_, v) = z.as_klauder().unwrap();
            c(v[0].norm_sqr(), 0.0)
        });
        let x = hamiltonian_vector_field(&s, &h, &z, 1.0).unwrap().complex_parts();
        assert!((c(1.0, 0.0) * x[1]).re.abs() < 1e-6);
        assert!(x[1].norm() > 0.1);
    }

    #[test]
    fn euclidean_form_is_degenerate() {
        let s = make_space(&SpaceSpec::Euclidean(2)).unwrap();
        let f = Classical::new(|_| c(1.0, 0.0));
        let err = hamiltonian_vector_field(&s, &f, &Point::Real(vec![1.0, 2.0]), 1.0).unwrap_err();
        assert!(matches!(err, DynamicsError::Degenerate(_)));
    }

    #[test]
    fn stationary_action_is_minus_energy_times_duration() {
        let s = make_space(&SpaceSpec::Klauder(1)).unwrap();
        let z = Point::klauder(c(0.1, 0.0), &[c(0.3, 0.2)]);
        let traj = Trajectory { t0: 0.0, dt: 0.01, points: vec![z; 201], stats: IntegratorStats::default() };
        let h = Classical::new(|_| c(2.5, 0.0));
        let a = df_action(&s, &traj, &h, 1.0).unwrap();
        assert!((a - c(-5.0, 0.0)).norm() < 1e-12);
        let zero = df_action(&s, &traj, &Classical::new(|_| c(0.0, 0.0)), 1.0).unwrap();
        assert_eq!(zero, c(0.0, 0.0));
    }
}
