//! Coherent metric, 1-form and 2-form: closed forms against finite differences.

use cohk::catalog::{geometry_report, infinitesimal_cs_margin, make_space, SpaceSpec};
use cohk::sampling::{rng, sample_point, sample_tangent};
use cohk::DEFAULT_SEED;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut r = rng(DEFAULT_SEED);
    println!("{:<28} {:>10} {:>10} {:>10} {:>10}", "space", "G", "θ", "ω", "CS margin");
    for spec in SpaceSpec::standard() {
        let space = make_space(&spec)?;
        let mut worst = [0.0f64; 3];
        let mut cs = f64::INFINITY;
        for _ in 0..20 {
            let z = sample_point(space.domain(), &mut r);
            let x = sample_tangent(space.domain(), &z, &mut r);
            let y = sample_tangent(space.domain(), &z, &mut r);
            let rep = geometry_report(&space, &z, &x, &y)?;
            for (w, d) in worst.iter_mut().zip(rep.rel_discrepancies) {
                *w = w.max(d);
            }
            let m = infinitesimal_cs_margin(&space, &z, &x)?;
            cs = cs.min(m.value / m.scale);
        }
        println!("{:<28} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.3}", space.id(), worst[0], worst[1], worst[2], cs);
    }
    Ok(())
}
