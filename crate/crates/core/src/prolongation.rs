//! The prolonged algebroids `T^E(⊕^k E)` and `T^E(⊕^k E*)`.
//!
//! Both are materialized as ordinary [`LieAlgebroid`]s over the base
//! `⊕^k E` (resp. `⊕^k E*`) with coordinates `(q, y)` flattened as in
//! [`WhitneyPoint::flat`] (resp. [`CoWhitneyPoint::flat`]). The basis is
//! `{X_α}` followed by the vertical sections in the same order as the fiber
//! coordinates, so anchor and brackets read
//!
//! * `ρ̃(X_α) = ρ^i_α ∂/∂q^i`, `ρ̃(V) = ∂/∂y` on the matching coordinate;
//! * `⟦X_α, X_β⟧ = C^γ_{αβ} X_γ`, every bracket involving a `V` vanishes.
//!
//! Slot indices `A` are 0-based throughout the API.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ad::{Dual, D1};
use crate::algebroid::{LieAlgebroid, StructureFields};
use crate::error::{check_len, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `⊕^k E`, fiber coordinates `y^α_A`.
    Lagrangian,
    /// `⊕^k E*`, fiber coordinates `y^A_α`.
    Hamiltonian,
}

pub(crate) fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

pub(crate) fn check_slot(a: usize, k: usize) -> Result<()> {
    if a < k {
        Ok(())
    } else {
        Err(Error::SlotOutOfRange { index: a, k })
    }
}

/// A point of `⊕^k E`: base coordinates and the `m × k` matrix `y^α_A`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WhitneyPoint {
    pub q: Vec<f64>,
    pub y: DMatrix<f64>,
}

impl WhitneyPoint {
    pub fn new(q: Vec<f64>, y: DMatrix<f64>) -> Self {
        WhitneyPoint { q, y }
    }

    pub fn zeros(n: usize, m: usize, k: usize) -> Self {
        WhitneyPoint::new(vec![0.0; n], DMatrix::zeros(m, k))
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }
    pub fn m(&self) -> usize {
        self.y.nrows()
    }
    pub fn k(&self) -> usize {
        self.y.ncols()
    }

    /// `[q, y]` with `y^α_A` at `n + α k + A`.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.q.clone();
        v.extend(row_major(&self.y));
        v
    }

    pub fn from_flat(n: usize, m: usize, k: usize, x: &[f64]) -> Result<Self> {
        check_len("flattened Whitney point", n + m * k, x.len())?;
        Ok(WhitneyPoint::new(
            x[..n].to_vec(),
            DMatrix::from_row_slice(m, k, &x[n..]),
        ))
    }

    /// `pr_A(b)`, the `A`-th component `y^α_A`.
    pub fn component(&self, a: usize) -> Result<Vec<f64>> {
        check_slot(a, self.k())?;
        Ok(self.y.column(a).iter().copied().collect())
    }
}

/// A point of `⊕^k E*`: base coordinates and the `k × m` matrix `y^A_α`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoWhitneyPoint {
    pub q: Vec<f64>,
    pub p: DMatrix<f64>,
}

impl CoWhitneyPoint {
    pub fn new(q: Vec<f64>, p: DMatrix<f64>) -> Self {
        CoWhitneyPoint { q, p }
    }

    pub fn zeros(n: usize, m: usize, k: usize) -> Self {
        CoWhitneyPoint::new(vec![0.0; n], DMatrix::zeros(k, m))
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }
    pub fn m(&self) -> usize {
        self.p.ncols()
    }
    pub fn k(&self) -> usize {
        self.p.nrows()
    }

    /// `[q, p]` with `y^A_α` at `n + A m + α`.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.q.clone();
        v.extend(row_major(&self.p));
        v
    }

    pub fn from_flat(n: usize, m: usize, k: usize, x: &[f64]) -> Result<Self> {
        check_len("flattened co-Whitney point", n + m * k, x.len())?;
        Ok(CoWhitneyPoint::new(
            x[..n].to_vec(),
            DMatrix::from_row_slice(k, m, &x[n..]),
        ))
    }
}

/// An element `z^α X_α + w V` of a prolonged algebroid fiber.
///
/// `w` is `m × k` (entry `(α, B)` on `V^B_α`) on the Lagrangian side and
/// `k × m` (entry `(B, α)` on `V_B^α`) on the Hamiltonian side.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProlongedElement {
    pub side: Side,
    pub z: DVector<f64>,
    pub w: DMatrix<f64>,
}

impl ProlongedElement {
    pub fn zeros(side: Side, m: usize, k: usize) -> Self {
        let w = match side {
            Side::Lagrangian => DMatrix::zeros(m, k),
            Side::Hamiltonian => DMatrix::zeros(k, m),
        };
        ProlongedElement {
            side,
            z: DVector::zeros(m),
            w,
        }
    }

    pub fn m(&self) -> usize {
        self.z.len()
    }

    pub fn k(&self) -> usize {
        match self.side {
            Side::Lagrangian => self.w.ncols(),
            Side::Hamiltonian => self.w.nrows(),
        }
    }

    /// Coefficients in the prolonged basis, length `m + mk`.
    pub fn to_vector(&self) -> DVector<f64> {
        let mut v = self.z.as_slice().to_vec();
        v.extend(row_major(&self.w));
        DVector::from_vec(v)
    }

    pub fn from_vector(side: Side, m: usize, k: usize, v: &[f64]) -> Result<Self> {
        check_len("prolonged element", m + m * k, v.len())?;
        let w = match side {
            Side::Lagrangian => DMatrix::from_row_slice(m, k, &v[m..]),
            Side::Hamiltonian => DMatrix::from_row_slice(k, m, &v[m..]),
        };
        Ok(ProlongedElement {
            side,
            z: DVector::from_column_slice(&v[..m]),
            w,
        })
    }

    /// The basis element `X_α`.
    pub fn x_basis(side: Side, m: usize, k: usize, alpha: usize) -> Self {
        let mut e = Self::zeros(side, m, k);
        e.z[alpha] = 1.0;
        e
    }

    /// `V^A_α` (Lagrangian) or `V_A^α` (Hamiltonian).
    pub fn v_basis(side: Side, m: usize, k: usize, alpha: usize, a: usize) -> Self {
        let mut e = Self::zeros(side, m, k);
        match side {
            Side::Lagrangian => e.w[(alpha, a)] = 1.0,
            Side::Hamiltonian => e.w[(a, alpha)] = 1.0,
        }
        e
    }

    pub fn scaled(&self, s: f64) -> Self {
        ProlongedElement {
            side: self.side,
            z: &self.z * s,
            w: &self.w * s,
        }
    }

    pub fn plus(&self, other: &ProlongedElement) -> Self {
        ProlongedElement {
            side: self.side,
            z: &self.z + &other.z,
            w: &self.w + &other.w,
        }
    }

    pub fn amax(&self) -> f64 {
        self.z.amax().max(self.w.amax())
    }
}

struct ProlongedStructure {
    parent: LieAlgebroid,
    k: usize,
}

impl StructureFields for ProlongedStructure {
    fn base_dim(&self) -> usize {
        let m = self.parent.rank();
        self.parent.base_dim() + m * self.k
    }

    fn rank(&self) -> usize {
        let m = self.parent.rank();
        m + m * self.k
    }

    fn anchor(&self, q: &[D1]) -> Vec<D1> {
        let (n, m) = (self.parent.base_dim(), self.parent.rank());
        let (nt, mt) = (self.base_dim(), self.rank());
        let rho = self.parent.fields().anchor(&q[..n]);
        let mut out = vec![Dual::constant(0.0); nt * mt];
        for i in 0..n {
            for a in 0..m {
                out[i * mt + a] = rho[i * m + a];
            }
        }
        for j in 0..m * self.k {
            out[(n + j) * mt + m + j] = Dual::constant(1.0);
        }
        out
    }

    fn structure(&self, q: &[D1]) -> Vec<D1> {
        let (n, m) = (self.parent.base_dim(), self.parent.rank());
        let mt = self.rank();
        let c = self.parent.fields().structure(&q[..n]);
        let mut out = vec![Dual::constant(0.0); mt * mt * mt];
        for g in 0..m {
            for a in 0..m {
                for b in 0..m {
                    out[(g * mt + a) * mt + b] = c[(g * m + a) * m + b];
                }
            }
        }
        out
    }

    fn derivative_source(&self) -> crate::algebroid::DerivativeSource {
        self.parent.derivative_source()
    }

    fn active_coordinates(&self) -> usize {
        self.parent.fields().active_coordinates()
    }
}

/// A prolonged algebroid together with its parent data.
#[derive(Clone, Debug)]
pub struct ProlongedAlgebroid {
    pub parent: LieAlgebroid,
    pub k: usize,
    pub side: Side,
    /// The prolongation as a standalone algebroid of base dimension `n + mk`
    /// and rank `m + mk`.
    pub algebroid: LieAlgebroid,
}

/// Builds `T^E(⊕^k E)` or `T^E(⊕^k E*)`.
pub fn prolong(alg: &LieAlgebroid, k: usize, side: Side) -> Result<ProlongedAlgebroid> {
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    let label = match side {
        Side::Lagrangian => "T^E(sum^k E)",
        Side::Hamiltonian => "T^E(sum^k E*)",
    };
    let algebroid = LieAlgebroid::new(ProlongedStructure {
        parent: alg.clone(),
        k,
    })
    .with_label(label);
    Ok(ProlongedAlgebroid {
        parent: alg.clone(),
        k,
        side,
        algebroid,
    })
}

impl ProlongedAlgebroid {
    pub fn rank(&self) -> usize {
        self.algebroid.rank()
    }

    /// `ρ̃` at a flattened point of `⊕^k E` (or `⊕^k E*`).
    pub fn anchor_at(&self, point: &[f64]) -> DMatrix<f64> {
        self.algebroid.anchor_at(point)
    }

    /// Prolonged differential of a function with gradient `grad` at `point`:
    /// `dF(X_α) = ρ^i_α ∂F/∂q^i`, `dF(V) = ∂F/∂y`.
    pub fn differential(&self, point: &[f64], grad: &DVector<f64>) -> DVector<f64> {
        self.anchor_at(point).transpose() * grad
    }
}

/// `ξ^{V_A}(e, b)`: `z = 0`, `w^α_B = e^α δ_{AB}`.
pub fn vertical_lift(b: &WhitneyPoint, e: &[f64], a: usize) -> Result<ProlongedElement> {
    let (m, k) = (b.m(), b.k());
    check_slot(a, k)?;
    check_len("fiber coordinates", m, e.len())?;
    let mut out = ProlongedElement::zeros(Side::Lagrangian, m, k);
    for (al, &v) in e.iter().enumerate() {
        out.w[(al, a)] = v;
    }
    Ok(out)
}

/// `Δ̃_A(b)`: `z = 0`, `w^α_B = y^α_A δ_{AB}`.
pub fn liouville_section(b: &WhitneyPoint, a: usize) -> Result<ProlongedElement> {
    let e = b.component(a)?;
    vertical_lift(b, &e, a)
}

/// `J̃^A(Z)`: `z = 0`, `w^α_B = Z.z^α δ_{AB}`.
pub fn vertical_endomorphism(z: &ProlongedElement, a: usize) -> Result<ProlongedElement> {
    if z.side != Side::Lagrangian {
        return Err(Error::Invalid(
            "vertical endomorphism acts on the Lagrangian prolongation".into(),
        ));
    }
    let (m, k) = (z.m(), z.k());
    check_slot(a, k)?;
    let mut out = ProlongedElement::zeros(Side::Lagrangian, m, k);
    for al in 0..m {
        out.w[(al, a)] = z.z[al];
    }
    Ok(out)
}

/// Coefficients of a `k`-tuple of prolonged sections at one point.
///
/// `x[(α, A)] = ξ^α_A`; `v[A]` holds the vertical coefficients of `ξ_A`,
/// shaped like [`ProlongedElement::w`] on the matching side.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KSectionValue {
    pub side: Side,
    pub x: DMatrix<f64>,
    pub v: Vec<DMatrix<f64>>,
}

impl KSectionValue {
    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    /// `ξ_A` as a prolonged element.
    pub fn element(&self, a: usize) -> Result<ProlongedElement> {
        check_slot(a, self.k())?;
        Ok(ProlongedElement {
            side: self.side,
            z: self.x.column(a).into_owned(),
            w: self.v[a].clone(),
        })
    }
}

type KSectionFn = dyn Fn(&WhitneyPoint) -> KSectionValue + Send + Sync;

/// A `k`-tuple of sections of `T^E(⊕^k E)` given pointwise.
#[derive(Clone)]
pub struct SopdeSection(Arc<KSectionFn>);

impl SopdeSection {
    pub fn new(f: impl Fn(&WhitneyPoint) -> KSectionValue + Send + Sync + 'static) -> Self {
        SopdeSection(Arc::new(f))
    }

    pub fn eval(&self, b: &WhitneyPoint) -> KSectionValue {
        (self.0)(b)
    }
}

/// `max |ξ^α_A(b) − y^α_A(b)|` over the samples.
pub fn sopde_defect(xi: &SopdeSection, samples: &[WhitneyPoint]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Invalid("no sample points".into()));
    }
    let mut worst = 0.0_f64;
    for b in samples {
        let v = xi.eval(b);
        check_len("section slots", b.k(), v.k())?;
        worst = worst.max((&v.x - &b.y).amax());
    }
    Ok(worst)
}

/// SOPDE test by coefficient comparison.
pub fn sopde_check(xi: &SopdeSection, samples: &[WhitneyPoint], tol: f64) -> Result<bool> {
    Ok(sopde_defect(xi, samples)? <= tol)
}

/// SOPDE test through `J̃^A(ξ_A) = Δ̃_A` for every `A`.
pub fn sopde_check_vertical(xi: &SopdeSection, samples: &[WhitneyPoint], tol: f64) -> Result<bool> {
    if samples.is_empty() {
        return Err(Error::Invalid("no sample points".into()));
    }
    for b in samples {
        let v = xi.eval(b);
        for a in 0..b.k() {
            let lhs = vertical_endomorphism(&v.element(a)?, a)?;
            let rhs = liouville_section(b, a)?;
            if lhs.plus(&rhs.scaled(-1.0)).amax() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Tangent vectors `ρ̃(ξ_A)` on `⊕^k E` (or `⊕^k E*`), each flattened like the
/// point: `(ρ^i_α ξ^α_A, vertical coefficients of ξ_A)`.
pub fn associated_k_vector(
    alg: &LieAlgebroid,
    q: &[f64],
    xi: &KSectionValue,
) -> Result<Vec<DVector<f64>>> {
    check_len("base point", alg.base_dim(), q.len())?;
    check_len("section rank", alg.rank(), xi.x.nrows())?;
    let rho = alg.anchor_at(q);
    (0..xi.k())
        .map(|a| {
            let qdot = &rho * xi.x.column(a);
            let mut v = qdot.as_slice().to_vec();
            v.extend(row_major(&xi.v[a]));
            Ok(DVector::from_vec(v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebroid::validate_structure_equations;
    use crate::models;

    fn b22() -> WhitneyPoint {
        WhitneyPoint::new(vec![], DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]))
    }

    #[test]
    fn standard_prolongation_is_identity_anchor() {
        let p = prolong(&models::standard_algebroid(1), 2, Side::Lagrangian).unwrap();
        assert_eq!(p.rank(), 3);
        assert_eq!(p.algebroid.base_dim(), 3);
        let rho = p.anchor_at(&[0.2, -0.4, 0.9]);
        assert_eq!(rho, DMatrix::identity(3, 3));
    }

    #[test]
    fn brackets_with_vertical_vanish() {
        let p = prolong(&models::so3(), 2, Side::Hamiltonian).unwrap();
        let c = p.algebroid.structure_at(&[0.1; 6]);
        for g in 0..9 {
            for a in 0..9 {
                for b in 0..9 {
                    if a >= 3 || b >= 3 || g >= 3 {
                        assert_eq!(c.get(g, a, b), 0.0);
                    }
                }
            }
        }
        assert_eq!(c.get(2, 0, 1), 1.0);
        let r = validate_structure_equations(&p.algebroid, &[vec![0.3; 6]], 1e-8).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn vertical_lift_basis_image() {
        let b = WhitneyPoint::zeros(0, 3, 2);
        let l = vertical_lift(&b, &[1.0, 0.0, 0.0], 1).unwrap();
        assert_eq!(l.w[(0, 1)], 1.0);
        assert_eq!(l.w.sum(), 1.0);
        assert_eq!(l.z.amax(), 0.0);
        assert!(matches!(
            vertical_lift(&b, &[1.0, 0.0, 0.0], 2),
            Err(Error::SlotOutOfRange { index: 2, k: 2 })
        ));
    }

    #[test]
    fn liouville_reads_column() {
        let l = liouville_section(&b22(), 0).unwrap();
        assert_eq!(l.w.column(0).as_slice(), &[1.0, 3.0]);
        assert_eq!(l.w.column(1).amax(), 0.0);
    }

    #[test]
    fn vertical_endomorphism_on_basis() {
        let x1 = ProlongedElement::x_basis(Side::Lagrangian, 2, 2, 1);
        let j = vertical_endomorphism(&x1, 0).unwrap();
        assert_eq!(j, ProlongedElement::v_basis(Side::Lagrangian, 2, 2, 1, 0));
        let v = ProlongedElement::v_basis(Side::Lagrangian, 2, 2, 0, 1);
        assert_eq!(vertical_endomorphism(&v, 1).unwrap().amax(), 0.0);
    }

    #[test]
    fn sopde_by_both_criteria() {
        let good = SopdeSection::new(|b: &WhitneyPoint| KSectionValue {
            side: Side::Lagrangian,
            x: b.y.clone(),
            v: vec![DMatrix::from_element(2, 2, 7.0); 2],
        });
        let bad = SopdeSection::new(|b: &WhitneyPoint| KSectionValue {
            side: Side::Lagrangian,
            x: DMatrix::zeros(b.m(), b.k()),
            v: vec![DMatrix::zeros(2, 2); 2],
        });
        let s = [b22()];
        assert!(sopde_check(&good, &s, 1e-12).unwrap());
        assert!(sopde_check_vertical(&good, &s, 1e-12).unwrap());
        assert!(!sopde_check(&bad, &s, 1e-12).unwrap());
        assert!(!sopde_check_vertical(&bad, &s, 1e-12).unwrap());
    }

    #[test]
    fn associated_vectors_on_standard_and_lie_algebra() {
        let xi = KSectionValue {
            side: Side::Lagrangian,
            x: DMatrix::from_row_slice(1, 2, &[0.5, -1.0]),
            v: vec![
                DMatrix::from_row_slice(1, 2, &[1.0, 2.0]),
                DMatrix::from_row_slice(1, 2, &[3.0, 4.0]),
            ],
        };
        let v = associated_k_vector(&models::standard_algebroid(1), &[0.0], &xi).unwrap();
        assert_eq!(v[0].as_slice(), &[0.5, 1.0, 2.0]);
        assert_eq!(v[1].as_slice(), &[-1.0, 3.0, 4.0]);
        let xi3 = KSectionValue {
            side: Side::Lagrangian,
            x: DMatrix::zeros(3, 1),
            v: vec![DMatrix::from_element(3, 1, 1.0)],
        };
        let v = associated_k_vector(&models::so3(), &[], &xi3).unwrap();
        assert_eq!(v[0].len(), 3);
    }

    #[test]
    fn flat_layouts() {
        let b = b22();
        assert_eq!(b.flat(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(WhitneyPoint::from_flat(0, 2, 2, &b.flat()).unwrap(), b);
        let p = CoWhitneyPoint::new(
            vec![9.0],
            DMatrix::from_row_slice(2, 3, &[1., 2., 3., 4., 5., 6.]),
        );
        assert_eq!(p.flat(), vec![9.0, 1., 2., 3., 4., 5., 6.]);
        assert_eq!(CoWhitneyPoint::from_flat(1, 3, 2, &p.flat()).unwrap(), p);
    }
}
