//! Structure equations of the built-in algebroids, plus one that fails.

use afields::algebroid::{sample_box, validate_structure_equations, StructureTensor};
use afields::models::{self, Bivector};
use afields::{LieAlgebroid, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let zoo: Vec<(&str, LieAlgebroid)> = vec![
        ("standard:3", models::standard_algebroid(3)),
        ("so3", models::so3()),
        (
            "lie-poisson so3*",
            models::poisson_cotangent_algebroid(Bivector::lie_poisson_so3())?,
        ),
        (
            "atiyah so3 over R^2",
            models::atiyah_trivial(
                2,
                StructureTensor::levi_civita(),
                models::sample_connection_so3_r2(),
            )?,
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (name, alg) in &zoo {
        let pts = sample_box(&mut rng, alg.base_dim(), 100);
        let r = validate_structure_equations(alg, &pts, alg.default_tolerance())?;
        println!(
            "{name:>22}: max violation {:.2e} pass={}",
            r.max_violation(),
            r.pass
        );
    }

    // [e1, e2] = e3 + ½e1 no longer satisfies Jacobi.
    let mut c = StructureTensor::levi_civita();
    c.set(0, 0, 1, 0.5);
    c.set(0, 1, 0, -0.5);
    match models::lie_algebra_algebroid(c) {
        Err(e) => println!("{:>22}: rejected, {e}", "corrupted so3"),
        Ok(_) => println!("{:>22}: accepted", "corrupted so3"),
    }
    Ok(())
}
