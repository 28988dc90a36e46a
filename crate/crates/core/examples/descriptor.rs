//! Algebroids from JSON descriptors and the model registry.

use afields::algebroid::{sample_box, validate_structure_equations};
use afields::registry::{load_model, AlgebroidDescriptor};
use afields::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SL2_ACTION: &str = r#"{
    "base_dim": 1,
    "rank": 3,
    "anchor": [[1, [{"coeff": 1.0, "powers": [1]}], [{"coeff": 1.0, "powers": [2]}]]],
    "structure": [
        [[0, 1, 0], [-1, 0, 0], [0, 0, 0]],
        [[0, 0, 2], [0, 0, 0], [-2, 0, 0]],
        [[0, 0, 0], [0, 0, 1], [0, -1, 0]]
    ],
    "chart_label": "sl(2) acting on the line"
}"#;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    let d: AlgebroidDescriptor = serde_json::from_str(SL2_ACTION)?;
    let alg = d.build()?;
    let r =
        validate_structure_equations(&alg, &sample_box(&mut rng, 1, 50), alg.default_tolerance())?;
    println!(
        "{}: violation {:.1e} pass={}",
        alg.chart_label().unwrap_or("?"),
        r.max_violation(),
        r.pass
    );

    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/models");
    for spec in [
        "standard:2".to_string(),
        "wave".into(),
        format!("atiyah:{dir}/atiyah_so3.json"),
        format!("euler-poincare:{dir}/chiral_lorentzian.json"),
        format!("sigma:{dir}/symplectic_plane.json"),
    ] {
        let m = load_model(&spec)?;
        println!(
            "{:>14}: n={} m={} lagrangian={} hamiltonian={} marchable={}",
            spec.rsplit('/').next().unwrap_or(&spec),
            m.algebroid.base_dim(),
            m.algebroid.rank(),
            m.lagrangian.is_some(),
            m.hamiltonian.is_some(),
            m.evolution.is_some()
        );
    }
    Ok(())
}
