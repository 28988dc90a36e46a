//! Poincaré-Cartan sections and their pullback under the Legendre map.

use afields::hamiltonian::liouville_sections;
use afields::lagrangian::{cartan_sections, energy, hessian};
use afields::legendre::{legendre_forward, pullback_check};
use afields::prolongation::ProlongedElement;
use afields::{models, LegendreMap, Result, Side, StructureTensor, WhitneyPoint};
use nalgebra::{DMatrix, DVector};

fn main() -> Result<()> {
    let inertia = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
    let sys = models::euler_poincare_lagrangian(StructureTensor::levi_civita(), inertia, 2)?;
    let b = WhitneyPoint::new(
        vec![],
        DMatrix::from_row_slice(3, 2, &[0.4, -1.0, 0.2, 0.5, -0.7, 0.1]),
    );

    let cd = cartan_sections(&sys, &b)?;
    println!("E_L = {:.6}", energy(&sys, &b)?);
    for (a, (th, om)) in cd.theta.iter().zip(&cd.omega).enumerate() {
        let skew = (om + om.transpose()).amax();
        println!(
            "Θ^{} = {:?}  Ω^{} is {}×{}, skew defect {skew:.0e}",
            a + 1,
            th.as_slice(),
            a + 1,
            om.nrows(),
            om.ncols()
        );
    }
    let h = hessian(&sys, &b)?;
    println!(
        "regular {} with condition number {:.2}",
        h.regular, h.condition
    );

    let map = LegendreMap::new(sys);
    let p = legendre_forward(&map, &b)?;
    let lv = liouville_sections(map.system().algebroid(), &p)?;
    println!("Θ^1 at Leg(b) = {:?}", lv.theta[0].as_slice());

    let mut z1 = ProlongedElement::zeros(Side::Lagrangian, 3, 2);
    z1.z = DVector::from_vec(vec![1.0, 0.0, -0.5]);
    let z2 = ProlongedElement::v_basis(Side::Lagrangian, 3, 2, 1, 0)
        .plus(&ProlongedElement::x_basis(Side::Lagrangian, 3, 2, 2));
    let r = pullback_check(&map, &b, &z1, &z2, 1e-12)?;
    println!(
        "pullback errors: Θ {:.1e}, Ω {:.1e}",
        r.theta_error, r.omega_error
    );
    Ok(())
}
