#![allow(dead_code)]

use afields::ad::{Real, D2};
use afields::algebroid::StructureTensor;
use afields::models::{self, Bivector};
use afields::prolongation::ProlongedElement;
use afields::{AdFunction, CoWhitneyPoint, LagrangianSystem, LieAlgebroid, Side, WhitneyPoint};
use nalgebra::DMatrix;
use rand::Rng;

pub fn uniform(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn random_matrix(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_vec(r, c, uniform(rng, r * c))
}

pub fn random_whitney(rng: &mut impl Rng, n: usize, m: usize, k: usize) -> WhitneyPoint {
    WhitneyPoint::new(uniform(rng, n), random_matrix(rng, m, k))
}

pub fn random_cowhitney(rng: &mut impl Rng, n: usize, m: usize, k: usize) -> CoWhitneyPoint {
    CoWhitneyPoint::new(uniform(rng, n), random_matrix(rng, k, m))
}

pub fn random_element(rng: &mut impl Rng, side: Side, m: usize, k: usize) -> ProlongedElement {
    let mut z = ProlongedElement::zeros(side, m, k);
    z.z = nalgebra::DVector::from_vec(uniform(rng, m));
    let (r, c) = z.w.shape();
    z.w = random_matrix(rng, r, c);
    z
}

pub fn lie_poisson() -> LieAlgebroid {
    models::poisson_cotangent_algebroid(Bivector::lie_poisson_so3()).unwrap()
}

pub fn symplectic(n: usize) -> DMatrix<f64> {
    let h = n / 2;
    DMatrix::from_fn(n, n, |i, j| {
        if j == i + h && i < h {
            1.0
        } else if i == j + h && j < h {
            -1.0
        } else {
            0.0
        }
    })
}

pub fn atiyah() -> LieAlgebroid {
    models::atiyah_trivial(
        2,
        StructureTensor::levi_civita(),
        models::sample_connection_so3_r2(),
    )
    .unwrap()
}

/// `L = ½(1 + ¼|q|²) Σ(y^α_A)² + Σ_A q·y_A` on the Lie–Poisson algebroid,
/// so that every term of the field equations is active.
pub fn coupled_lie_poisson(k: usize) -> LagrangianSystem {
    LagrangianSystem::new(
        lie_poisson(),
        k,
        AdFunction::new(move |x: &[D2]| {
            let q = &x[..3];
            let mut q2 = D2::zero();
            for &v in q {
                q2 += v * v;
            }
            let mut s = D2::zero();
            for al in 0..3 {
                for a in 0..k {
                    let y = x[3 + al * k + a];
                    s += (q2 * 0.25 + 1.0) * y * y * 0.5 + q[al] * y;
                }
            }
            s
        }),
    )
}

/// Regular Lagrangians of the model zoo, with names.
pub fn regular_lagrangians() -> Vec<(&'static str, LagrangianSystem)> {
    let inertia = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]));
    vec![
        ("wave", models::wave_lagrangian()),
        ("harmonic", models::harmonic_map_lagrangian()),
        (
            "euler-poincare",
            models::euler_poincare_lagrangian(StructureTensor::levi_civita(), inertia, 2).unwrap(),
        ),
        (
            "free standard:3 k=3",
            models::free_lagrangian(&models::standard_algebroid(3), 3),
        ),
        ("free atiyah k=2", models::free_lagrangian(&atiyah(), 2)),
        ("coupled lie-poisson k=2", coupled_lie_poisson(2)),
    ]
}
