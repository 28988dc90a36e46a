//! Brackets and the exterior differential on the Lie-Poisson algebroid.

use afields::ad::{Real, D1, D2};
use afields::algebroid::{
    bracket, exterior_differential, exterior_differential_eval, BaseFunction, Cochain,
    CovectorField,
};
use afields::models::{self, Bivector};
use afields::{Result, SectionField};

fn main() -> Result<()> {
    let alg = models::poisson_cotangent_algebroid(Bivector::lie_poisson_so3())?;
    let q = [0.3, -0.7, 1.1];

    let dq1 = SectionField::constant(vec![1.0, 0.0, 0.0]);
    let dq2 = SectionField::constant(vec![0.0, 1.0, 0.0]);
    println!("[dq1, dq2] = {:?}", bracket(&alg, &dq1, &dq2, &q)?);

    // The Casimir |q|² has zero differential.
    let casimir = BaseFunction::new(|x: &[D2]| x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    println!(
        "d|q|²      = {:?}",
        exterior_differential(&alg, &casimir, &q)?
    );

    // d∘d = 0 on a function, checked through the degree-one formula.
    let f = BaseFunction::new(|x: &[D2]| x[0] * x[1] + x[2].sin());
    let df = CovectorField::differential_of(&alg, &f);
    let sigma = SectionField::new(|x: &[D1]| vec![x[1], D1::one(), x[0] * x[2]]);
    let tau = SectionField::new(|x: &[D1]| vec![x[2] * x[2], x[0], D1::from_f64(-0.5)]);
    let ddf = exterior_differential_eval(&alg, &Cochain::Covector(df), &[sigma, tau], &q)?;
    println!("d(df)(σ,τ) = {ddf:.2e}");
    Ok(())
}
