//! The free rigid body as a k = 1 theory on so(3).
//!
//! Integrates the Lie-Poisson equations of the induced Hamiltonian and checks
//! that energy and the Casimir |p|² are conserved.

use afields::hamiltonian::integrate_hamilton_k1;
use afields::legendre::{default_guess, induced_hamiltonian, legendre_forward, legendre_invert};
use afields::{models, CoWhitneyPoint, LegendreMap, Result, StructureTensor, WhitneyPoint};
use nalgebra::{DMatrix, DVector};

fn main() -> Result<()> {
    let inertia = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
    let lag =
        models::euler_poincare_lagrangian(StructureTensor::levi_civita(), inertia.clone(), 1)?;
    let map = LegendreMap::new(lag);

    let omega = WhitneyPoint::new(vec![], DMatrix::from_column_slice(3, 1, &[0.1, 1.0, 0.05]));
    let p0 = legendre_forward(&map, &omega)?;
    let back = legendre_invert(&map, &p0, &default_guess(&p0))?;
    println!("angular momentum {:?}", p0.p.as_slice());
    println!(
        "inverse after {} Newton steps, residual {:.1e}",
        back.iterations, back.residual
    );

    let induced = induced_hamiltonian(&map);
    let direct = models::euler_poincare_hamiltonian(StructureTensor::levi_civita(), inertia, 1)?;
    let traj = integrate_hamilton_k1(&direct, &p0, 20.0, 4000)?;
    let casimir = |p: &CoWhitneyPoint| p.p.norm_squared();
    let last = traj.last();
    println!("p(20) = {:?}", last.p.as_slice());
    println!(
        "energy {:.12} -> {:.12}, induced H agrees to {:.1e}",
        direct.value(&p0)?,
        direct.value(last)?,
        (induced.value(last)? - direct.value(last)?).abs()
    );
    println!("casimir drift {:.1e}", (casimir(last) - casimir(&p0)).abs());
    Ok(())
}
