//! Finite spans of coherent states: inner products, an orthonormal basis and
//! the quantization of a unitary coherent map.

use cohk::catalog::{make_space, SpaceSpec};
use cohk::quantum::{adjoint_residual, gamma_apply, inner, norm, orthonormal_basis, CoherentMap, QVec};
use cohk::{Point, C64};
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let space = make_space(&SpaceSpec::HermitianSubset(2))?;
    let c = C64::new;
    let points = vec![
        Point::Complex(vec![c(1.0, 0.0), c(0.0, 0.0)]),
        Point::Complex(vec![c(0.0, 0.0), c(1.0, 0.0)]),
        Point::Complex(vec![c(1.0, 0.0), c(1.0, 0.0)]),
    ];

    let psi = QVec::new(&space, vec![(c(1.0, 0.0), points[0].clone()), (c(0.0, 1.0), points[1].clone())])?;
    println!("‖ψ‖ = {:.6}", norm(&psi)?);

    let basis = orthonormal_basis(&space, &points, 1e-10)?;
    println!("rank of the span: {} (eigenvalues {:?})", basis.rank(), basis.eigenvalues);

    let theta: f64 = 0.4;
    let rot = DMatrix::from_row_slice(2, 2, &[c(theta.cos(), 0.0), c(-theta.sin(), 0.0), c(theta.sin(), 0.0), c(theta.cos(), 0.0)]);
    let map = CoherentMap::matrix(rot);
    let rotated = gamma_apply(&map, &psi)?;
    println!("‖Γ(U)ψ‖ = {:.6}, ⟨ψ|Γ(U)ψ⟩ = {:.6}", norm(&rotated)?, inner(&psi, &rotated)?);

    let samples: Vec<(Point, Point)> = points.iter().zip(points.iter().rev()).map(|(a, b)| (a.clone(), b.clone())).collect();
    println!("adjoint residual {:.2e}", adjoint_residual(&space, &map, &samples)?);
    Ok(())
}
