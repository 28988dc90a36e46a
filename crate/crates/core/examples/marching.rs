//! Leapfrog marching of the evolutionary models.

use afields::grid::{march_evolutionary, Evolution};
use afields::{Error, Result, StructureTensor};
use nalgebra::{DMatrix, DVector};

fn main() -> Result<()> {
    let inertia = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
    let models = [
        ("wave", Evolution::Wave),
        (
            "lorentzian chiral",
            Evolution::EulerPoincare {
                algebra: StructureTensor::levi_civita(),
                inertia: inertia.clone(),
                signs: [1.0, -1.0],
            },
        ),
        (
            "sigma",
            Evolution::Sigma {
                lambda: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
            },
        ),
    ];
    for (name, evo) in &models {
        let init = evo.sample_initial(64)?;
        let (field, report) = march_evolutionary(evo, &init, 0.5 / 64.0, 64)?;
        let c = &report.constraint_drift;
        println!(
            "{name:>18}: {} levels, growth {:.3}, t² constraint {:.1e} -> {:.1e}",
            field.grid.shape[0],
            report.growth,
            c[0],
            c[c.len() - 1]
        );
    }

    let euclidean = Evolution::EulerPoincare {
        algebra: StructureTensor::levi_civita(),
        inertia,
        signs: [1.0, 1.0],
    };
    match march_evolutionary(&euclidean, &Evolution::Wave.sample_initial(8)?, 0.1, 1) {
        Err(Error::NonEvolutionary(why)) => println!("euclidean chiral: {why}"),
        other => println!("euclidean chiral: unexpected {:?}", other.map(|r| r.1)),
    }
    match march_evolutionary(
        &Evolution::Wave,
        &Evolution::Wave.sample_initial(32)?,
        4.0 / 32.0,
        200,
    ) {
        Err(e) => println!("wave at CFL 4: {e}"),
        Ok(_) => println!("wave at CFL 4: stayed bounded"),
    }
    Ok(())
}
