//! Prolonged algebroids, vertical lifts and the SOPDE test.

use afields::algebroid::{sample_box, validate_structure_equations};
use afields::lagrangian::{geometric_equation_residual, solve_sopde_coefficients};
use afields::models;
use afields::prolongation::{
    liouville_section, prolong, sopde_check, sopde_check_vertical, vertical_endomorphism,
    vertical_lift, SopdeSection,
};
use afields::{Result, Side, WhitneyPoint};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let so3 = models::so3();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 1..=3 {
        for side in [Side::Lagrangian, Side::Hamiltonian] {
            let p = prolong(&so3, k, side)?;
            let pts = sample_box(&mut rng, p.algebroid.base_dim(), 20);
            let r = validate_structure_equations(&p.algebroid, &pts, 1e-8)?;
            println!(
                "k={k} {side:?}: base {} rank {} violation {:.1e}",
                p.algebroid.base_dim(),
                p.rank(),
                r.max_violation()
            );
        }
    }

    let b = WhitneyPoint::new(
        vec![],
        DMatrix::from_row_slice(3, 2, &[1.0, 0.5, -0.2, 0.3, 0.8, -1.0]),
    );
    let lift = vertical_lift(&b, &[0.0, 1.0, 0.0], 1)?;
    println!("V_2(e_2) has no X part: {}", lift.z.amax() == 0.0);
    let j = vertical_endomorphism(&liouville_section(&b, 0)?, 1)?;
    println!("J_2(Δ_1) = 0: {}", j.amax() == 0.0);

    // Field equations of an Euler-Poincaré Lagrangian solved pointwise give a SOPDE.
    let inertia = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]));
    let sys =
        models::euler_poincare_lagrangian(afields::StructureTensor::levi_civita(), inertia, 2)?;
    let sys2 = sys.clone();
    let xi = SopdeSection::new(move |b| solve_sopde_coefficients(&sys2, b).unwrap().section);
    let samples: Vec<WhitneyPoint> = (0..10)
        .map(|_| {
            WhitneyPoint::new(
                vec![],
                DMatrix::from_vec(3, 2, sample_box(&mut rng, 6, 1).remove(0)),
            )
        })
        .collect();
    println!(
        "coefficient test {}, vertical test {}",
        sopde_check(&xi, &samples, 1e-12)?,
        sopde_check_vertical(&xi, &samples, 1e-12)?
    );
    let res = geometric_equation_residual(&sys, &xi.eval(&b), &b)?;
    println!("geometric equation residual {:.1e}", res.amax());
    Ok(())
}
