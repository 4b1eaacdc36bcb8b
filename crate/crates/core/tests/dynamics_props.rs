use cohk::catalog::{make_space, SpaceSpec};
use cohk::dynamics::{
    el_integrate, flow_exact, hamiltonian_vector_field, poisson_bracket, propagate_ode, Classical, DynamicsError,
    HamiltonianSpec,
};
use cohk::fock::OscGenerator;
use cohk::{Point, Tangent, C64};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn point(n: usize) -> impl Strategy<Value = Point> {
    ((-0.5..0.5f64, -0.5..0.5f64), prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n))
        .prop_map(|((a, b), z)| Point::klauder(C64::new(a, b), &z.iter().map(|&(x, y)| C64::new(x, y)).collect::<Vec<_>>()))
}

fn gap(a: &Point, b: &Point) -> f64 {
    a.coords().iter().zip(b.coords()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `N + f(a + a*)` with a real drive amplitude and two modes coupled through `c`.
fn coupled(omegas: [f64; 2], c: f64, f: f64) -> OscGenerator {
    let x = DMatrix::from_row_slice(2, 2, &[C64::from(omegas[0]), C64::from(c), C64::from(c), C64::from(omegas[1])]);
    let v = DVector::from_element(2, C64::from(f));
    OscGenerator::new(C64::from(0.3), v.clone(), v, x).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exact_flow_is_a_group(z in point(2), s in -2.0..2.0f64, t in -2.0..2.0f64, c in -0.5..0.5f64) {
        let gen = coupled([1.0, 1.7], c, 0.4);
        let two_step = flow_exact(&gen, t, &flow_exact(&gen, s, &z, 1.0).unwrap(), 1.0).unwrap();
        let one_step = flow_exact(&gen, s + t, &z, 1.0).unwrap();
        prop_assert!(gap(&two_step, &one_step) < 1e-11);
    }

    #[test]
    fn reversing_the_generator_retraces_the_path(z in point(2), c in -0.5..0.5f64) {
        let space = make_space(&SpaceSpec::Klauder(2)).unwrap();
        let gen = coupled([1.0, 1.7], c, 0.4);
        let fwd = propagate_ode(&space, &HamiltonianSpec::Oscillator(gen.clone()), 1.0, &z, 3.0, 1e-3).unwrap();
        let back = HamiltonianSpec::Oscillator(gen.scaled(C64::from(-1.0)));
        let bwd = propagate_ode(&space, &back, 1.0, fwd.last(), 3.0, 1e-3).unwrap();
        prop_assert!(gap(bwd.last(), &z) < 1e-10);
    }

    #[test]
    fn bracket_is_antisymmetric_bit_for_bit(z in point(1), a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let space = make_space(&SpaceSpec::Klauder(1)).unwrap();
        let f = Classical::new(move |p: &Point| { let u = p.coords(); C64::from(a * u[2] * u[3] + u[0]) });
        let g = Classical::new(move |p: &Point| { let u = p.coords(); C64::from(b * u[2].powi(2) - u[3]) });
        let fg = poisson_bracket(&space, &f, &g, &z, 1.0).unwrap();
        let gf = poisson_bracket(&space, &g, &f, &z, 1.0).unwrap();
        prop_assert_eq!(fg, -gf);
    }
}

#[test]
fn driven_self_adjoint_evolution_keeps_the_norm() {
    let space = make_space(&SpaceSpec::Klauder(2)).unwrap();
    let h = HamiltonianSpec::driven(|t| coupled([1.0, 2.3], 0.2, (1.3 * t).sin()));
    assert!(coupled([1.0, 2.3], 0.2, 0.7).is_self_adjoint(1e-15));
    let z = Point::klauder(C64::new(0.1, -0.2), &[C64::new(0.5, 0.3), C64::new(-0.4, 0.8)]);
    let traj = propagate_ode(&space, &h, 1.0, &z, 8.0, 2e-3).unwrap();
    let n0 = space.length(&z).unwrap();
    let drift = traj.points.iter().map(|p| (space.length(p).unwrap() - n0).abs() / n0).fold(0.0, f64::max);
    assert!(drift < 1e-9, "norm drift {drift:e}");
    assert!(gap(traj.last(), &z) > 0.1, "the drive should move the state");
}

#[test]
fn non_self_adjoint_generator_changes_the_norm() {
    let space = make_space(&SpaceSpec::Klauder(1)).unwrap();
    let gen = OscGenerator::number(&[1.0]).scaled(C64::new(1.0, -0.2));
    let z = Point::klauder(C64::from(0.0), &[C64::from(1.0)]);
    let traj = propagate_ode(&space, &HamiltonianSpec::Oscillator(gen.clone()), 1.0, &z, 2.0, 1e-3).unwrap();
    let (n0, n1) = (space.length(&z).unwrap(), space.length(traj.last()).unwrap());
    // |ẑ(t)|² = e^{−0.4t}, so ‖z(t)‖² = exp(e^{−0.4t})
    assert!((n1 * n1 - (-0.8f64).exp().exp()).abs() < 1e-10, "{n1}");
    assert!(n1 < n0);
}

#[test]
fn general_field_that_leaves_the_disk_reports_progress() {
    let space = make_space(&SpaceSpec::Szego).unwrap();
    let h = HamiltonianSpec::field(|_, _| Tangent::scalar(C64::from(1.0)));
    let err = propagate_ode(&space, &h, 1.0, &Point::Scalar(C64::from(0.45)), 2.0, 0.1).unwrap_err();
    match err {
        DynamicsError::LeftDomain { t, last, .. } => {
            assert!((t - 0.6).abs() < 1e-12, "left at {t}");
            assert_eq!(last.points.len(), 6);
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn euler_lagrange_follows_a_coupled_quadratic_flow() {
    let space = make_space(&SpaceSpec::Klauder(2)).unwrap();
    let gen = coupled([1.0, 1.5], 0.3, 0.2);
    let z = Point::klauder(C64::new(-0.2, 0.1), &[C64::new(0.6, 0.2), C64::new(-0.3, 0.5)]);
    let traj = el_integrate(&space, &Classical::expectation(&gen), &z, 3.0, 2e-3, 1.0).unwrap();
    let worst = traj
        .points
        .iter()
        .enumerate()
        .map(|(k, p)| space.angle(p, &flow_exact(&gen, traj.time(k), &z, 1.0).unwrap()).unwrap())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "angle {worst:e}");
}

#[test]
fn hamiltonian_field_of_a_mode_energy_rotates_the_mode() {
    let space = make_space(&SpaceSpec::Klauder(1)).unwrap();
    let energy = Classical::new(|p: &Point| C64::from(p.as_klauder().unwrap().1[0].norm_sqr()));
    let z = Point::klauder(C64::from(0.0), &[C64::new(0.6, -0.8)]);
    let x = hamiltonian_vector_field(&space, &energy, &z, 1.0).unwrap();
    let c = x.complex_parts();
    let a = C64::new(0.6, -0.8);
    // parallel to i·a or −i·a and orthogonal to a
    assert!((c[1] * a.conj()).re.abs() < 1e-8, "{c:?}");
    assert!(c[1].norm() > 0.1);
}
