//! A coherent state of the harmonic oscillator stays coherent: RK4 on the label
//! against the exact block-exponential flow, and its autocorrelation.

use cohk::catalog::{make_space, SpaceSpec};
use cohk::dynamics::{autocorrelation, flow_exact, propagate_ode, HamiltonianSpec};
use cohk::fock::OscGenerator;
use cohk::{Point, C64};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let space = make_space(&SpaceSpec::Klauder(1))?;
    let gen = OscGenerator::number(&[1.0]);
    let z = Point::klauder(C64::new(-0.5, 0.0), &[C64::new(1.0, 0.0)]);

    for dt in [1e-2, 5e-3, 2.5e-3, 1e-3] {
        let traj = propagate_ode(&space, &HamiltonianSpec::Oscillator(gen.clone()), 1.0, &z, 10.0, dt)?;
        let exact = flow_exact(&gen, 10.0, &z, 1.0)?;
        let err = traj.last().coords().iter().zip(exact.coords()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("dt = {dt:<7} error at t = 10: {err:.3e}");
    }

    let traj = propagate_ode(&space, &HamiltonianSpec::Oscillator(gen), 1.0, &z, 6.3, 0.01)?;
    let series = autocorrelation(&space, &z, &traj)?;
    for (k, v) in series.values.iter().enumerate().step_by(70) {
        let t = series.time(k);
        let exact = (C64::new(-1.0, 0.0) + C64::new(0.0, -t).exp()).exp();
        println!("t = {t:4.1}  K_t = {v:.6}  exact {exact:.6}");
    }
    Ok(())
}
