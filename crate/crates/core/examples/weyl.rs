//! Weyl operators on Fock space through the oscillator semigroup.

use cohk::fock::{ccr_epsilon_check, weyl_element, weyl_relation_residuals, WeylConvention};
use cohk::sampling::{complex_vector, rng, sample_point};
use cohk::space::Domain;
use cohk::{Point, C64, DEFAULT_SEED};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let one = [C64::new(1.0, 0.0)];
    let vac = Point::klauder(C64::new(0.0, 0.0), &[C64::new(0.0, 0.0)]);
    let w = weyl_element(&one, &one, &vac, &vac)?;
    println!("⟨0|W(1,1)|0⟩ = {w:.15} (e^(1/2) = {:.15})", 0.5f64.exp());

    let mut r = rng(DEFAULT_SEED);
    let samples: Vec<(Point, Point)> =
        (0..8).map(|_| (sample_point(Domain::Klauder(2), &mut r), sample_point(Domain::Klauder(2), &mut r))).collect();
    let (p, q, p2, q2) = (complex_vector(&mut r, 2, 0.5), complex_vector(&mut r, 2, 0.5), complex_vector(&mut r, 2, 0.5), complex_vector(&mut r, 2, 0.5));
    for convention in [WeylConvention::Symmetric, WeylConvention::AntiNormal] {
        let res = weyl_relation_residuals(&p, &q, &p2, &q2, &samples, convention)?;
        println!("{convention:?}: worst residual {:.2e}, group commutator {:.6}", res.worst(), res.group_commutator);
    }

    let ccr = ccr_epsilon_check(&one, &one, &vac, &vac, &[0.1, 0.05, 0.025, 0.0125, 0.00625])?;
    println!(
        "CCR slope → {:.10} (p*q·K = {:.3}, −2 Im(p*q)·K = {:.3})",
        ccr.limit, ccr.commutator_candidate, ccr.imaginary_candidate
    );
    Ok(())
}
