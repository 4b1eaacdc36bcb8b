//! Euler–Lagrange motion on the Klauder manifold reproduces the exact quantum
//! orbit, and the coherent action is stationary on it.

use cohk::catalog::{make_space, SpaceSpec};
use cohk::experiment::{action_stationarity, el_orbit_angle};
use cohk::fock::OscGenerator;
use cohk::{Point, C64, DEFAULT_SEED};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let space = make_space(&SpaceSpec::Klauder(1))?;
    let gen = OscGenerator::number(&[1.0]);
    let z = Point::klauder(C64::new(-0.5, 0.0), &[C64::new(1.0, 0.0)]);

    let (angle, _) = el_orbit_angle(&space, &gen, &z, 10.0, 1e-3, 1.0)?;
    println!("worst angle to the exact orbit up to t = 10: {angle:.3e} rad");

    let eps = [0.05, 0.025, 0.0125, 0.00625];
    let (resp, slope) = action_stationarity(&space, &gen, &z, std::f64::consts::TAU, 2e-3, 1.0, &eps, DEFAULT_SEED)?;
    for (e, r) in eps.iter().zip(&resp) {
        println!("ε = {e:<8} |ΔS| = {r:.4e}");
    }
    println!("fitted exponent {slope:.3}");
    Ok(())
}
