//! Model zoo: concrete algebroids, Lagrangians and Hamiltonians.
//!
//! Sign conventions for the Poisson cotangent algebroid:
//! `ρ(dq^α) = Λ^{αi} ∂/∂q^i` and `⟦dq^α, dq^β⟧ = ∂Λ^{αβ}/∂q^γ dq^γ`. With these
//! the structure equations hold exactly when `Λ` is Poisson, and the sigma
//! model anchor condition reads `∂q^i/∂t^A + Λ^{ij} p^A_j = 0`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ad::{self, Dual, Real, D1, D2};
use crate::algebroid::{
    sample_box, structure_violations, validate_structure_equations, ConstantStructure,
    LieAlgebroid, StructureFields, StructureTensor,
};
use crate::error::{check_len, Error, Result};
use crate::function::AdFunction;
use crate::grid::{Grid, GridField, Layout};
use crate::hamiltonian::HamiltonianSystem;
use crate::lagrangian::LagrangianSystem;
use crate::poly::Polynomial;
use crate::prolongation::Side;

/// Tolerance and sample count used by the self-validating constructors.
pub const VALIDATION_TOL: f64 = 1e-8;
pub const VALIDATION_SAMPLES: usize = 100;
const VALIDATION_SEED: u64 = 0x5eed;

/// `TQ` over `ℝ^n`: identity anchor, vanishing structure functions.
///
/// # Panics
/// If `n == 0`.
pub fn standard_algebroid(n: usize) -> LieAlgebroid {
    assert!(n >= 1, "standard algebroid needs n >= 1");
    let mut anchor = vec![0.0; n * n];
    for i in 0..n {
        anchor[i * n + i] = 1.0;
    }
    LieAlgebroid::new(ConstantStructure {
        base_dim: n,
        rank: n,
        anchor,
        structure: vec![0.0; n * n * n],
    })
    .with_label(format!("standard:{n}"))
}

/// A Lie algebra as an algebroid over a point.
pub fn lie_algebra_algebroid(c: StructureTensor) -> Result<LieAlgebroid> {
    if c.rank == 0 {
        return Err(Error::Invalid(
            "Lie algebra must have positive dimension".into(),
        ));
    }
    check_len("structure constants", c.rank.pow(3), c.data.len())?;
    let m = c.rank;
    let alg = LieAlgebroid::new(ConstantStructure {
        base_dim: 0,
        rank: m,
        anchor: vec![],
        structure: c.data,
    });
    let (jac, _, anti) = structure_violations(&alg, &[]);
    if anti > VALIDATION_TOL {
        return Err(Error::Invalid(format!(
            "structure constants are not antisymmetric (defect {anti:.3e})"
        )));
    }
    if jac > VALIDATION_TOL {
        return Err(Error::JacobiViolation { violation: jac });
    }
    Ok(alg)
}

/// `so(3)` with `C^γ_{αβ} = ε_{αβγ}`.
pub fn so3() -> LieAlgebroid {
    lie_algebra_algebroid(StructureTensor::levi_civita())
        .expect("so(3) satisfies Jacobi")
        .with_label("so3")
}

/// A bivector field `Λ^{ij}(q)` on `ℝ^n` with polynomial entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bivector(pub Vec<Vec<Polynomial>>);

impl Bivector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn constant(m: &DMatrix<f64>) -> Self {
        Bivector(
            (0..m.nrows())
                .map(|i| {
                    (0..m.ncols())
                        .map(|j| Polynomial::constant(m[(i, j)]))
                        .collect()
                })
                .collect(),
        )
    }

    /// `Λ^{ij} = ε_{ijk} q^k`, the Lie–Poisson structure on `so(3)*`.
    pub fn lie_poisson_so3() -> Self {
        let mut rows = vec![vec![Polynomial::zero(); 3]; 3];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                for k in 0..3 {
                    let e = crate::algebroid::levi_civita(i, j, k);
                    if e != 0.0 {
                        *entry = Polynomial::linear(e, k);
                    }
                }
            }
        }
        Bivector(rows)
    }

    /// Row-major `n × n` values.
    pub fn eval<T: Real>(&self, q: &[T]) -> Vec<T> {
        self.0
            .iter()
            .flat_map(|row| row.iter().map(|p| p.eval(q)))
            .collect()
    }

    pub fn eval_matrix(&self, q: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_row_slice(n, n, &self.eval(q))
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::Invalid("empty bivector".into()));
        }
        for row in &self.0 {
            check_len("bivector row", n, row.len())?;
            for p in row {
                if p.arity() > n {
                    return Err(Error::Invalid(format!(
                        "bivector entry uses variable {} on a {n}-dimensional base",
                        p.arity()
                    )));
                }
            }
        }
        Ok(())
    }

    /// True when every entry is a constant.
    pub fn is_constant(&self) -> bool {
        self.0.iter().flatten().all(|p| p.arity() == 0)
    }
}

struct PoissonStructure {
    lambda: Bivector,
}

impl StructureFields for PoissonStructure {
    fn base_dim(&self) -> usize {
        self.lambda.dim()
    }

    fn rank(&self) -> usize {
        self.lambda.dim()
    }

    fn anchor(&self, q: &[D1]) -> Vec<D1> {
        let n = self.lambda.dim();
        let lam = self.lambda.eval(q);
        let mut out = vec![Dual::constant(0.0); n * n];
        for i in 0..n {
            for a in 0..n {
                out[i * n + a] = lam[a * n + i];
            }
        }
        out
    }

    fn structure(&self, q: &[D1]) -> Vec<D1> {
        let n = self.lambda.dim();
        let mut out = vec![Dual::constant(0.0); n * n * n];
        for g in 0..n {
            let lam: Vec<D2> = self.lambda.eval(&ad::lift_d1(q, Some(g)));
            for a in 0..n {
                for b in 0..n {
                    out[(g * n + a) * n + b] = lam[a * n + b].eps;
                }
            }
        }
        out
    }
}

/// The cotangent algebroid of `(ℝ^n, Λ)` without the structure-equation check.
pub fn poisson_cotangent_unchecked(lambda: Bivector) -> Result<LieAlgebroid> {
    lambda.check_shape()?;
    Ok(LieAlgebroid::new(PoissonStructure { lambda }).with_label("poisson"))
}

/// The cotangent algebroid of `(ℝ^n, Λ)`, validated on `[−1, 1]^n`.
pub fn poisson_cotangent_algebroid(lambda: Bivector) -> Result<LieAlgebroid> {
    let alg = poisson_cotangent_unchecked(lambda)?;
    self_validate(&alg)?;
    Ok(alg)
}

fn self_validate(alg: &LieAlgebroid) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(VALIDATION_SEED);
    let samples = sample_box(&mut rng, alg.base_dim(), VALIDATION_SAMPLES);
    let r = validate_structure_equations(alg, &samples, VALIDATION_TOL)?;
    if r.max_violation_antisymmetry > VALIDATION_TOL {
        return Err(Error::Invalid(format!(
            "structure functions are not antisymmetric (defect {:.3e})",
            r.max_violation_antisymmetry
        )));
    }
    if !r.pass {
        return Err(Error::StructureEquations {
            jacobi: r.max_violation_jacobi,
            anchor: r.max_violation_anchor,
        });
    }
    Ok(())
}

struct AtiyahStructure {
    n: usize,
    group: StructureTensor,
    /// `A^a_i` at `a * n + i`.
    connection: Vec<Polynomial>,
}

impl StructureFields for AtiyahStructure {
    fn base_dim(&self) -> usize {
        self.n
    }

    fn rank(&self) -> usize {
        self.n + self.group.rank
    }

    fn anchor(&self, _q: &[D1]) -> Vec<D1> {
        let (n, m) = (self.n, self.rank());
        let mut out = vec![Dual::constant(0.0); n * m];
        for i in 0..n {
            out[i * m + i] = Dual::constant(1.0);
        }
        out
    }

    fn structure(&self, q: &[D1]) -> Vec<D1> {
        let (n, r) = (self.n, self.group.rank);
        let m = n + r;
        let zero = Dual::constant(0.0);
        let a_val: Vec<D1> = self.connection.iter().map(|p| p.eval(q)).collect();
        // da[j][a * n + i] = ∂A^a_i/∂q^j
        let da: Vec<Vec<D1>> = (0..n)
            .map(|j| {
                let lifted = ad::lift_d1(q, Some(j));
                self.connection
                    .iter()
                    .map(|p| p.eval(&lifted).eps)
                    .collect()
            })
            .collect();
        let cg = &self.group;
        let mut out = vec![zero; m * m * m];
        let idx = |g: usize, a: usize, b: usize| (g * m + a) * m + b;
        for c in 0..r {
            for i in 0..n {
                for j in 0..n {
                    // B^c_{ij} = ∂_i A^c_j − ∂_j A^c_i − C^c_{ab} A^a_i A^b_j
                    let mut bc = da[i][c * n + j] - da[j][c * n + i];
                    for a in 0..r {
                        for b in 0..r {
                            let k = cg.get(c, a, b);
                            if k != 0.0 {
                                bc -= a_val[a * n + i] * a_val[b * n + j] * k;
                            }
                        }
                    }
                    out[idx(n + c, i, j)] = -bc;
                }
                for a in 0..r {
                    let mut s = zero;
                    for b in 0..r {
                        let k = cg.get(c, a, b);
                        if k != 0.0 {
                            s += a_val[b * n + i] * k;
                        }
                    }
                    out[idx(n + c, i, n + a)] = s;
                    out[idx(n + c, n + a, i)] = -s;
                }
            }
            for a in 0..r {
                for b in 0..r {
                    out[idx(n + c, n + a, n + b)] = Dual::constant(cg.get(c, a, b));
                }
            }
        }
        out
    }
}

/// The Atiyah algebroid `T(Q × G)/G → Q` of a trivial bundle with connection
/// coefficients `A^a_i(q)`, given row-major as `connection[a * n + i]`.
///
/// The basis is `{e_i}` (horizontal lifts of `∂/∂q^i`) followed by `{e_a}`.
pub fn atiyah_trivial(
    n: usize,
    group: StructureTensor,
    connection: Vec<Polynomial>,
) -> Result<LieAlgebroid> {
    let r = group.rank;
    check_len("connection coefficients", r * n, connection.len())?;
    lie_algebra_algebroid(group.clone())?;
    for p in &connection {
        if p.arity() > n {
            return Err(Error::Invalid(format!(
                "connection coefficient uses variable {} on an {n}-dimensional base",
                p.arity()
            )));
        }
    }
    Ok(LieAlgebroid::new(AtiyahStructure {
        n,
        group,
        connection,
    })
    .with_label("atiyah"))
}

/// A polynomial SO(3) connection on `ℝ²` used by examples and tests.
pub fn sample_connection_so3_r2() -> Vec<Polynomial> {
    // A^a_i, a in 0..3, i in 0..2
    vec![
        Polynomial::linear(1.0, 1),
        Polynomial::term(0.5, &[2, 0]),
        Polynomial::constant(0.3),
        Polynomial::term(-1.0, &[1, 1]),
        Polynomial::linear(2.0, 0).plus(Polynomial::constant(-0.2)),
        Polynomial::term(0.7, &[0, 2]),
    ]
}

/// `L = ½ Σ (y^α_A)²`.
pub fn free_lagrangian(alg: &LieAlgebroid, k: usize) -> LagrangianSystem {
    let n = alg.base_dim();
    LagrangianSystem::new(
        alg.clone(),
        k,
        AdFunction::new(move |x| {
            let mut s = D2::zero();
            for v in &x[n..] {
                s += *v * *v;
            }
            s * 0.5
        }),
    )
}

/// `L = ½ ((y_1)² − (y_2)²)` on the standard algebroid over `ℝ`, `k = 2`.
pub fn wave_lagrangian() -> LagrangianSystem {
    LagrangianSystem::new(
        standard_algebroid(1),
        2,
        AdFunction::new(|x| (x[1] * x[1] - x[2] * x[2]) * 0.5),
    )
}

/// `φ = sin 2π(t¹+t²) + ½ cos 2π(t¹−t²)` with its first derivatives, as
/// `[φ, ∂₁φ, ∂₂φ]`. Solves the field equations of [`wave_lagrangian`].
pub fn wave_exact(t: &[f64]) -> Vec<f64> {
    let w = std::f64::consts::TAU;
    let (u, v) = (w * (t[0] + t[1]), w * (t[0] - t[1]));
    let (fu, gv) = (w * u.cos(), -0.5 * w * v.sin());
    vec![u.sin() + 0.5 * v.cos(), fu + gv, fu - gv]
}

/// [`wave_exact`] sampled on the periodic unit square with `points` nodes
/// along `t¹` and `2 points` along `t²`.
///
/// On a grid with equal spacings the central-difference residual of any
/// function of `t¹ ± t²` vanishes identically, so the axes differ.
pub fn wave_exact_field(points: usize) -> Result<GridField> {
    let layout = Layout {
        side: Side::Lagrangian,
        n: 1,
        m: 1,
        k: 2,
    };
    let grid = Grid::new(
        vec![points, 2 * points],
        vec![1.0 / points as f64, 0.5 / points as f64],
        vec![0.0, 0.0],
        vec![true, true],
    )?;
    GridField::from_fn(grid, layout, wave_exact)
}

/// `l = Σ_α ((y^α_1)² + (y^α_2)²)` on `⊕² so(3)`.
pub fn harmonic_map_lagrangian() -> LagrangianSystem {
    LagrangianSystem::new(
        so3(),
        2,
        AdFunction::new(|x| {
            let mut s = D2::zero();
            for v in x {
                s += *v * *v;
            }
            s
        }),
    )
}

/// `L = −½ Λ^{ij}(q) p¹_i p²_j` on `⊕² T*Q` with the cotangent algebroid.
pub fn poisson_sigma_lagrangian(lambda: Bivector) -> Result<LagrangianSystem> {
    let alg = poisson_cotangent_algebroid(lambda.clone())?;
    let n = lambda.dim();
    Ok(LagrangianSystem::new(
        alg,
        2,
        AdFunction::new(move |x| {
            let lam = lambda.eval(&x[..n]);
            let mut s = D2::zero();
            for i in 0..n {
                for j in 0..n {
                    s += lam[i * n + j] * x[n + 2 * i] * x[n + 2 * j + 1];
                }
            }
            s * -0.5
        }),
    ))
}

fn check_inertia(m: usize, inertia: &DMatrix<f64>) -> Result<()> {
    check_len("inertia rows", m, inertia.nrows())?;
    check_len("inertia columns", m, inertia.ncols())?;
    if (inertia - inertia.transpose()).amax() > 1e-12 * inertia.amax().max(1.0) {
        return Err(Error::Invalid("inertia must be symmetric".into()));
    }
    Ok(())
}

/// `L = ½ Σ_A s_A y_Aᵀ I y_A` on `⊕^k g`, `k = signs.len()`.
pub fn euler_poincare_signed(
    group: StructureTensor,
    inertia: DMatrix<f64>,
    signs: &[f64],
) -> Result<LagrangianSystem> {
    let k = signs.len();
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    let m = group.rank;
    check_inertia(m, &inertia)?;
    let alg = lie_algebra_algebroid(group)?.with_label("euler-poincare");
    let signs = signs.to_vec();
    Ok(LagrangianSystem::new(
        alg,
        k,
        AdFunction::new(move |x| {
            let mut s = D2::zero();
            for (a, &sa) in signs.iter().enumerate() {
                for al in 0..m {
                    for be in 0..m {
                        let i = inertia[(al, be)];
                        if i != 0.0 {
                            s += x[al * k + a] * x[be * k + a] * (i * sa);
                        }
                    }
                }
            }
            s * 0.5
        }),
    ))
}

/// `L = ½ Σ_A y_Aᵀ I y_A` on `⊕^k g`.
pub fn euler_poincare_lagrangian(
    group: StructureTensor,
    inertia: DMatrix<f64>,
    k: usize,
) -> Result<LagrangianSystem> {
    euler_poincare_signed(group, inertia, &vec![1.0; k])
}

/// `H = ½ Σ_A p_A I⁻¹ p_Aᵀ` on `⊕^k g*`, the Legendre dual of
/// [`euler_poincare_lagrangian`].
pub fn euler_poincare_hamiltonian(
    group: StructureTensor,
    inertia: DMatrix<f64>,
    k: usize,
) -> Result<HamiltonianSystem> {
    let m = group.rank;
    check_inertia(m, &inertia)?;
    let inv = inertia
        .clone()
        .try_inverse()
        .ok_or(Error::SingularHessian {
            condition: f64::INFINITY,
        })?;
    let alg = lie_algebra_algebroid(group)?.with_label("euler-poincare");
    Ok(HamiltonianSystem::new(
        alg,
        k,
        AdFunction::new(move |x| {
            let mut s = D2::zero();
            for a in 0..k {
                for al in 0..m {
                    for be in 0..m {
                        let i = inv[(al, be)];
                        if i != 0.0 {
                            s += x[a * m + al] * x[a * m + be] * i;
                        }
                    }
                }
            }
            s * 0.5
        }),
    ))
}

/// `H = ½ Σ (y^A_α)²`.
pub fn free_hamiltonian(alg: &LieAlgebroid, k: usize) -> HamiltonianSystem {
    let n = alg.base_dim();
    HamiltonianSystem::new(
        alg.clone(),
        k,
        AdFunction::new(move |x| {
            let mut s = D2::zero();
            for v in &x[n..] {
                s += *v * *v;
            }
            s * 0.5
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebroid::anchor_apply;

    #[test]
    fn standard_and_so3_pass() {
        for n in 1..=3 {
            let alg = standard_algebroid(n);
            let r = validate_structure_equations(&alg, &[vec![0.2; n]], 1e-14).unwrap();
            assert_eq!(r.max_violation(), 0.0);
        }
        let r = validate_structure_equations(&so3(), &[vec![]], 1e-14).unwrap();
        assert_eq!(r.max_violation(), 0.0);
    }

    #[test]
    fn abelian_and_broken_lie_algebras() {
        assert!(lie_algebra_algebroid(StructureTensor::zeros(2)).is_ok());
        // [e1,e2] = e1, [e2,e3] = e2, [e3,e1] = e3 breaks Jacobi
        let mut c = StructureTensor::zeros(3);
        for &(a, b, g) in &[(0, 1, 0), (1, 2, 1), (2, 0, 2)] {
            c.set(g, a, b, 1.0);
            c.set(g, b, a, -1.0);
        }
        assert!(matches!(
            lie_algebra_algebroid(c),
            Err(Error::JacobiViolation { .. })
        ));
    }

    #[test]
    fn poisson_anchor_sign() {
        let lam = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let alg = poisson_cotangent_algebroid(Bivector::constant(&lam)).unwrap();
        assert_eq!(
            anchor_apply(&alg, &[0.3, 0.1], &[1.0, 0.0]).unwrap(),
            vec![0.0, 1.0]
        );
        assert_eq!(alg.structure_at(&[0.3, 0.1]).data, vec![0.0; 8]);
    }

    #[test]
    fn lie_poisson_has_constant_structure() {
        let alg = poisson_cotangent_algebroid(Bivector::lie_poisson_so3()).unwrap();
        let c1 = alg.structure_at(&[0.1, 0.2, 0.3]);
        let c2 = alg.structure_at(&[-0.7, 0.5, 0.9]);
        assert_eq!(c1, c2);
        assert_eq!(c1, StructureTensor::levi_civita());
    }

    #[test]
    fn non_poisson_bivector_rejected() {
        let mut rows = vec![vec![Polynomial::zero(); 3]; 3];
        rows[0][1] = Polynomial::term(1.0, &[1, 1]);
        rows[1][0] = Polynomial::term(-1.0, &[1, 1]);
        rows[1][2] = Polynomial::linear(1.0, 0);
        rows[2][1] = Polynomial::linear(-1.0, 0);
        rows[0][2] = Polynomial::constant(1.0);
        rows[2][0] = Polynomial::constant(-1.0);
        assert!(matches!(
            poisson_cotangent_algebroid(Bivector(rows)),
            Err(Error::StructureEquations { .. })
        ));
    }

    #[test]
    fn atiyah_point_base_is_lie_algebra() {
        let a = atiyah_trivial(0, StructureTensor::levi_civita(), vec![]).unwrap();
        assert_eq!(a.structure_at(&[]), so3().structure_at(&[]));
        assert_eq!(a.rank(), 3);
    }

    #[test]
    fn atiyah_flat_connection_splits() {
        let a = atiyah_trivial(
            2,
            StructureTensor::levi_civita(),
            vec![Polynomial::zero(); 6],
        )
        .unwrap();
        let c = a.structure_at(&[0.4, -0.3]);
        for g in 0..5 {
            for x in 0..5 {
                for y in 0..5 {
                    if x < 2 || y < 2 {
                        assert_eq!(c.get(g, x, y), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn atiyah_polynomial_connection_validates() {
        let a = atiyah_trivial(
            2,
            StructureTensor::levi_civita(),
            sample_connection_so3_r2(),
        )
        .unwrap();
        self_validate(&a).unwrap();
    }
}
