//! Seeded Gram matrices for every catalog space, plus the reciprocal-space
//! Hilbert matrix.

use cohk::catalog::{make_space, SpaceSpec};
use cohk::sampling::{rng, sample_point};
use cohk::space::PsdTolerance;
use cohk::{Point, DEFAULT_SEED};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut r = rng(DEFAULT_SEED);
    for spec in SpaceSpec::standard() {
        let space = make_space(&spec)?;
        let points: Vec<Point> = (0..20).map(|_| sample_point(space.domain(), &mut r)).collect();
        let report = space.gram(&points)?.psd_check(PsdTolerance::default())?;
        println!(
            "{:<28} min eig {:>12.4e}  max eig {:>12.4e}  {}",
            space.id(),
            report.min_eigenvalue,
            report.max_eigenvalue,
            if report.pass { "psd" } else { "NOT psd" }
        );
    }

    let reciprocal = make_space(&SpaceSpec::Reciprocal)?;
    let points = [0.5, 1.5, 2.5].map(Point::Positive);
    let report = reciprocal.gram(&points)?.psd_check(PsdTolerance::default())?;
    println!("1/(x + y) on 0.5, 1.5, 2.5: min eig {:.9e}", report.min_eigenvalue);
    Ok(())
}
