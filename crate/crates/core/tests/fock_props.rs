use cohk::catalog::{make_space, SpaceSpec};
use cohk::fock::{
    annihilation_element, creation_element, dgamma_element, normal_ordered_element, NormalOrderSpec, OscElement, OscGenerator,
};
use cohk::{Point, C64};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn c64() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn cvec(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec(c64(), n)
}

fn element(n: usize) -> impl Strategy<Value = OscElement> {
    (c64(), cvec(n), cvec(n), cvec(n * n)).prop_map(move |(rho, p, q, x)| {
        let x = DMatrix::from_row_slice(n, n, &x) * C64::from(0.5) + DMatrix::identity(n, n);
        OscElement::new(rho, DVector::from_vec(p), DVector::from_vec(q), x).unwrap()
    })
}

fn point(n: usize) -> impl Strategy<Value = Point> {
    (c64(), cvec(n)).prop_map(|(z0, z)| Point::klauder(z0 * 0.5, &z))
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

fn kernel(z: &Point, w: &Point) -> C64 {
    let (z0, u) = z.as_klauder().unwrap();
    let (w0, v) = w.as_klauder().unwrap();
    (z0.conj() + w0 + u.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<C64>()).exp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_matches_block_matrix_product((a, b) in (1usize..4).prop_flat_map(|n| (element(n), element(n)))) {
        let brute = a.to_block() * b.to_block();
        let ab = a.mul(&b).unwrap().to_block();
        prop_assert!((brute - ab).norm() < 1e-13);
    }

    #[test]
    fn action_is_a_left_action(a in element(2), b in element(2), z in point(2)) {
        let lhs = a.mul(&b).unwrap().act(&z).unwrap();
        let rhs = a.act(&b.act(&z).unwrap()).unwrap();
        for (x, y) in lhs.coords().iter().zip(rhs.coords()) {
            prop_assert!((x - y).abs() < 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn adjoint_moves_across_the_kernel(a in element(2), z in point(2), w in point(2)) {
        let lhs = kernel(&z, &a.act(&w).unwrap());
        let rhs = kernel(&a.adjoint().act(&z).unwrap(), &w);
        prop_assert!(close(lhs, rhs, 1e-12));
    }

    #[test]
    fn generator_exponential_is_a_one_parameter_group(g in element(2), s in -1.0..1.0f64, t in -1.0..1.0f64) {
        let gen = OscGenerator::new(g.rho, g.p.clone(), g.q.clone(), g.x.clone() - DMatrix::identity(2, 2)).unwrap();
        let (es, et) = (gen.exp(C64::from(s)).unwrap(), gen.exp(C64::from(t)).unwrap());
        let est = gen.exp(C64::from(s + t)).unwrap();
        prop_assert!((es.mul(&et).unwrap().to_block() - est.to_block()).norm() < 1e-11 * est.to_block().norm());
    }

    #[test]
    fn number_operator_symbol(z in point(2), w in point(2), omegas in prop::collection::vec(0.1..3.0f64, 2)) {
        let (_, u) = z.as_klauder().unwrap();
        let (_, v) = w.as_klauder().unwrap();
        let oracle = kernel(&z, &w) * u.iter().zip(v).zip(&omegas).map(|((a, b), o)| a.conj() * b * o).sum::<C64>();
        let om = omegas.clone();
        let symbol = NormalOrderSpec::new(move |u, v| u.iter().zip(v).zip(&om).map(|((a, b), o)| a.conj() * b * o).sum());
        prop_assert!(close(dgamma_element(&OscGenerator::number(&omegas), &z, &w).unwrap(), oracle, 1e-12));
        prop_assert!(close(normal_ordered_element(&symbol, &z, &w).unwrap(), oracle, 1e-12));
    }

    #[test]
    fn ladder_operators_are_adjoint(q in cvec(2), z in point(2), w in point(2)) {
        let a = annihilation_element(&q, &z, &w).unwrap();
        let ad = creation_element(&q, &w, &z).unwrap();
        prop_assert!(close(a, ad.conj(), 1e-12));
    }
}

#[test]
fn gamma_of_element_matches_kernel_of_action() {
    let space = make_space(&SpaceSpec::Klauder(1)).unwrap();
    let a = OscElement::new(
        C64::new(0.2, -0.1),
        DVector::from_vec(vec![C64::new(0.3, 0.4)]),
        DVector::from_vec(vec![C64::new(-0.5, 0.1)]),
        DMatrix::from_element(1, 1, C64::new(0.8, 0.3)),
    )
    .unwrap();
    let z = Point::klauder(C64::new(0.1, 0.2), &[C64::new(0.7, -0.3)]);
    let w = Point::klauder(C64::new(-0.4, 0.0), &[C64::new(-0.2, 0.9)]);
    let via_symbol = normal_ordered_element(&NormalOrderSpec::of_element(&a), &z, &w).unwrap();
    let via_action = space.kernel(&z, &a.act(&w).unwrap()).unwrap();
    assert!(close(via_symbol, via_action, 1e-13), "{via_symbol} vs {via_action}");
}
