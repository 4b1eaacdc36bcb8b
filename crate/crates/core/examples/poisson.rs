//! Poisson brackets from the coherent symplectic form on the Klauder manifold.

use cohk::catalog::{make_space, SpaceSpec};
use cohk::dynamics::{bracket_fn, hamiltonian_vector_field, poisson_bracket, Classical};
use cohk::{Point, C64};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let space = make_space(&SpaceSpec::Klauder(1))?;
    let z = Point::klauder(C64::new(-0.5, 0.0), &[C64::new(1.0, 0.0)]);
    let mode = |f: fn(C64) -> f64| Classical::new(move |p: &Point| C64::from(f(p.as_klauder().map_or(C64::from(f64::NAN), |(_, v)| v[0]))));
    let energy = mode(|a| a.norm_sqr());
    let x = mode(|a| a.re);
    let y = mode(|a| a.im);

    let field = hamiltonian_vector_field(&space, &energy, &z, 1.0)?;
    println!("X_H at z: {:?}", field.coords());
    println!("{{x, y}} = {:.8}", poisson_bracket(&space, &x, &y, &z, 1.0)?);
    println!("{{y, x}} = {:.8}", poisson_bracket(&space, &y, &x, &z, 1.0)?);

    let xy = bracket_fn(&space, &x, &y, 1.0);
    let jacobi = poisson_bracket(&space, &energy, &xy, &z, 1.0)?
        + poisson_bracket(&space, &x, &bracket_fn(&space, &y, &energy, 1.0), &z, 1.0)?
        + poisson_bracket(&space, &y, &bracket_fn(&space, &energy, &x, 1.0), &z, 1.0)?;
    println!("Jacobi residual {:.2e}", jacobi.norm());
    Ok(())
}
