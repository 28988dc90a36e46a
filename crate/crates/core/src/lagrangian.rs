//! Lagrangian side: energy, Poincaré–Cartan sections, the SOPDE linear
//! system and Euler–Lagrange residuals of discrete fields.
//!
//! Two-sections on `T^E(⊕^k E)` are stored as antisymmetric matrices in the
//! basis `{X_α, V^B_β}` (ordering of [`crate::prolongation::ProlongedElement::to_vector`]),
//! so `Ω(Z₁, Z₂) = Z₁ᵀ Ω Z₂`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebroid::{morphism_residual_from_jet, LieAlgebroid};
use crate::error::{check_len, Error, Result};
use crate::function::FieldFunction;
use crate::grid::{fd_apply, grid_morphism_jet, GridField, Norms, Stencil};
use crate::prolongation::{KSectionValue, Side, WhitneyPoint};

/// Smallest-to-largest singular value ratio below which a Hessian counts as singular.
pub const REGULARITY_TOL: f64 = 1e-10;

/// A Lagrangian `L: ⊕^k E → ℝ`.
#[derive(Clone)]
pub struct LagrangianSystem {
    alg: LieAlgebroid,
    k: usize,
    l: Arc<dyn FieldFunction>,
}

impl std::fmt::Debug for LagrangianSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LagrangianSystem")
            .field("alg", &self.alg)
            .field("k", &self.k)
            .finish_non_exhaustive()
    }
}

/// First and second derivatives of `L` at one point.
#[derive(Clone, Debug, Serialize)]
pub struct LagrangianJet {
    pub value: f64,
    /// `∂L/∂q^i`.
    pub dq: DVector<f64>,
    /// `dy[(α, A)] = ∂L/∂y^α_A`.
    pub dy: DMatrix<f64>,
    /// `mixed[(i, α k + A)] = ∂²L/∂q^i∂y^α_A`.
    pub mixed: DMatrix<f64>,
    /// `w[(α k + A, β k + B)] = ∂²L/∂y^α_A∂y^β_B`.
    pub w: DMatrix<f64>,
}

impl LagrangianSystem {
    pub fn new(alg: LieAlgebroid, k: usize, l: impl FieldFunction + 'static) -> Self {
        Self::from_arc(alg, k, Arc::new(l))
    }

    pub fn from_arc(alg: LieAlgebroid, k: usize, l: Arc<dyn FieldFunction>) -> Self {
        assert!(k >= 1, "k must be at least 1");
        LagrangianSystem { alg, k, l }
    }

    pub fn algebroid(&self) -> &LieAlgebroid {
        &self.alg
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.alg.base_dim()
    }

    pub fn m(&self) -> usize {
        self.alg.rank()
    }

    pub fn function(&self) -> &Arc<dyn FieldFunction> {
        &self.l
    }

    pub fn check_point(&self, b: &WhitneyPoint) -> Result<()> {
        check_len("base point", self.n(), b.n())?;
        check_len("fiber rank", self.m(), b.m())?;
        check_len("slots", self.k, b.k())
    }

    pub fn value(&self, b: &WhitneyPoint) -> Result<f64> {
        self.check_point(b)?;
        self.l.value(&b.flat())
    }

    /// `∂L/∂y^α_A` as an `m × k` matrix.
    pub fn momentum(&self, b: &WhitneyPoint) -> Result<DMatrix<f64>> {
        self.check_point(b)?;
        let g = self.l.gradient(&b.flat())?;
        Ok(DMatrix::from_row_slice(
            self.m(),
            self.k,
            &g.as_slice()[self.n()..],
        ))
    }

    pub fn jet(&self, b: &WhitneyPoint) -> Result<LagrangianJet> {
        self.check_point(b)?;
        let (n, m, k) = (self.n(), self.m(), self.k);
        let (value, g, h) = self.l.value_gradient_hessian(&b.flat())?;
        let mk = m * k;
        Ok(LagrangianJet {
            value,
            dq: g.rows(0, n).into_owned(),
            dy: DMatrix::from_row_slice(m, k, &g.as_slice()[n..]),
            mixed: h.view((0, n), (n, mk)).into_owned(),
            w: h.view((n, n), (mk, mk)).into_owned(),
        })
    }
}

/// `E_L = Σ y^α_A ∂L/∂y^α_A − L`.
pub fn energy(sys: &LagrangianSystem, b: &WhitneyPoint) -> Result<f64> {
    let l = sys.value(b)?;
    let p = sys.momentum(b)?;
    Ok(p.dot(&b.y) - l)
}

/// Gradient of `E_L` in the flattened coordinates `[q, y]`.
fn energy_gradient(sys: &LagrangianSystem, b: &WhitneyPoint, j: &LagrangianJet) -> DVector<f64> {
    let (n, mk) = (sys.n(), sys.m() * sys.k());
    let yv = DVector::from_row_slice(&b.flat()[n..]);
    let mut g = DVector::zeros(n + mk);
    let dq = &j.mixed * &yv - &j.dq;
    g.rows_mut(0, n).copy_from(&dq);
    g.rows_mut(n, mk).copy_from(&(j.w.transpose() * &yv));
    g
}

/// `dE_L` on the basis `{X_α, V^B_β}`.
pub fn energy_differential(sys: &LagrangianSystem, b: &WhitneyPoint) -> Result<DVector<f64>> {
    let j = sys.jet(b)?;
    Ok(prolonged_differential(sys, b, &energy_gradient(sys, b, &j)))
}

fn prolonged_differential(
    sys: &LagrangianSystem,
    b: &WhitneyPoint,
    grad: &DVector<f64>,
) -> DVector<f64> {
    let (n, m) = (sys.n(), sys.m());
    let mk = m * sys.k();
    let rho = sys.alg.anchor_at(&b.q);
    let mut d = DVector::zeros(m + mk);
    d.rows_mut(0, m)
        .copy_from(&(rho.transpose() * grad.rows(0, n)));
    d.rows_mut(m, mk).copy_from(&grad.rows(n, mk));
    d
}

/// `Θ^A` coefficients and `Ω^A` matrices.
#[derive(Clone, Debug, Serialize)]
pub struct CartanData {
    /// `theta[A][α]`, coefficient on `X^α`.
    pub theta: Vec<DVector<f64>>,
    /// `omega[A]`, antisymmetric `(m + mk) × (m + mk)`.
    pub omega: Vec<DMatrix<f64>>,
}

/// `Θ_L^A = ∂L/∂y^α_A X^α` and
/// `Ω_L^A = ½ M^A_{αβ} X^α∧X^β + ∂²L/∂y^β_B∂y^α_A X^α∧V^B_β` with
/// `M^A_{αβ} = ρ^i_β ∂²L/∂q^i∂y^α_A − ρ^i_α ∂²L/∂q^i∂y^β_A + C^γ_{αβ} ∂L/∂y^γ_A`.
pub fn cartan_sections(sys: &LagrangianSystem, b: &WhitneyPoint) -> Result<CartanData> {
    let j = sys.jet(b)?;
    Ok(cartan_from_jet(sys, b, &j))
}

fn cartan_from_jet(sys: &LagrangianSystem, b: &WhitneyPoint, j: &LagrangianJet) -> CartanData {
    let (n, m, k) = (sys.n(), sys.m(), sys.k());
    let dim = m + m * k;
    let rho = sys.alg.anchor_at(&b.q);
    let c = sys.alg.structure_at(&b.q);
    let mut theta = Vec::with_capacity(k);
    let mut omega = Vec::with_capacity(k);
    for a in 0..k {
        theta.push(j.dy.column(a).into_owned());
        let mut om = DMatrix::zeros(dim, dim);
        for al in 0..m {
            for be in 0..m {
                let mut v = 0.0;
                for i in 0..n {
                    v += rho[(i, be)] * j.mixed[(i, al * k + a)]
                        - rho[(i, al)] * j.mixed[(i, be * k + a)];
                }
                for g in 0..m {
                    v += c.get(g, al, be) * j.dy[(g, a)];
                }
                om[(al, be)] = v;
            }
            for be in 0..m {
                for bb in 0..k {
                    let wv = j.w[(al * k + a, be * k + bb)];
                    om[(al, m + be * k + bb)] = wv;
                    om[(m + be * k + bb, al)] = -wv;
                }
            }
        }
        omega.push(om);
    }
    CartanData { theta, omega }
}

/// The fiber Hessian and its regularity verdict.
#[derive(Clone, Debug, Serialize)]
pub struct HessianInfo {
    pub w: DMatrix<f64>,
    pub regular: bool,
    pub smallest_singular_value: f64,
    pub largest_singular_value: f64,
    /// `largest / smallest` (infinite when singular).
    pub condition: f64,
}

pub fn hessian_info(w: DMatrix<f64>) -> HessianInfo {
    let sv = w.singular_values();
    let largest = sv.max();
    let smallest = sv.min();
    HessianInfo {
        regular: largest > 0.0 && smallest > REGULARITY_TOL * largest,
        condition: if smallest > 0.0 {
            largest / smallest
        } else {
            f64::INFINITY
        },
        smallest_singular_value: smallest,
        largest_singular_value: largest,
        w,
    }
}

/// `W[(α,A),(β,B)] = ∂²L/∂y^α_A∂y^β_B` with index `α k + A`.
pub fn hessian(sys: &LagrangianSystem, b: &WhitneyPoint) -> Result<HessianInfo> {
    Ok(hessian_info(sys.jet(b)?.w))
}

/// Solved SOPDE coefficients at one point.
#[derive(Clone, Debug, Serialize)]
pub struct SopdeSolution {
    pub section: KSectionValue,
    /// Max abs residual of the linear system.
    pub residual: f64,
    /// `1 + max|rhs| + max|K| · max|ξ|`, the scale the residual is measured against.
    pub scale: f64,
    pub condition: f64,
}

/// `ξ^α_A = y^α_A` and the minimum-norm solution `(ξ_A)^β_B` of
/// `y^β_A ρ^i_β ∂²L/∂q^i∂y^α_A + (ξ_A)^β_B ∂²L/∂y^α_A∂y^β_B
///  = ρ^i_α ∂L/∂q^i + y^β_A C^γ_{βα} ∂L/∂y^γ_A`.
pub fn solve_sopde_coefficients(sys: &LagrangianSystem, b: &WhitneyPoint) -> Result<SopdeSolution> {
    let j = sys.jet(b)?;
    let info = hessian_info(j.w.clone());
    if !info.regular {
        return Err(Error::SingularHessian {
            condition: info.condition,
        });
    }
    let (n, m, k) = (sys.n(), sys.m(), sys.k());
    let mk = m * k;
    let rho = sys.alg.anchor_at(&b.q);
    let c = sys.alg.structure_at(&b.q);

    let mut rhs = DVector::zeros(m);
    for al in 0..m {
        let mut r = 0.0;
        for i in 0..n {
            r += rho[(i, al)] * j.dq[i];
        }
        for a in 0..k {
            for be in 0..m {
                let y = b.y[(be, a)];
                if y == 0.0 {
                    continue;
                }
                for g in 0..m {
                    r += y * c.get(g, be, al) * j.dy[(g, a)];
                }
                for i in 0..n {
                    r -= y * rho[(i, be)] * j.mixed[(i, al * k + a)];
                }
            }
        }
        rhs[al] = r;
    }

    // Unknown (ξ_A)^β_B at A·mk + β·k + B.
    let mut kmat = DMatrix::zeros(m, k * mk);
    for al in 0..m {
        for a in 0..k {
            for col in 0..mk {
                kmat[(al, a * mk + col)] = j.w[(al * k + a, col)];
            }
        }
    }
    let svd = kmat.clone().svd(true, true);
    let eps = 1e-14 * svd.singular_values.max();
    let sol = svd
        .solve(&rhs, eps)
        .map_err(|e| Error::Invalid(format!("least-squares solve failed: {e}")))?;
    let residual = (&kmat * &sol - &rhs).amax();
    let scale = 1.0 + rhs.amax() + kmat.amax() * sol.amax();
    let v = (0..k)
        .map(|a| DMatrix::from_row_slice(m, k, &sol.as_slice()[a * mk..(a + 1) * mk]))
        .collect();
    Ok(SopdeSolution {
        section: KSectionValue {
            side: Side::Lagrangian,
            x: b.y.clone(),
            v,
        },
        residual,
        scale,
        condition: info.condition,
    })
}

/// `Σ_A i_{ξ_A} Ω^A − dF` for two-section matrices `omega` and covector `d`.
pub(crate) fn contraction_residual(
    omega: &[DMatrix<f64>],
    xi: &KSectionValue,
    d: &DVector<f64>,
) -> Result<DVector<f64>> {
    let mut acc = -d.clone();
    for (a, om) in omega.iter().enumerate() {
        let e = xi.element(a)?.to_vector();
        check_len("section dimension", om.nrows(), e.len())?;
        acc += om.transpose() * e;
    }
    Ok(acc)
}

/// `Σ_A i_{ξ_A} Ω_L^A − dE_L` on the basis `{X_α, V^B_β}`.
pub fn geometric_equation_residual(
    sys: &LagrangianSystem,
    xi: &KSectionValue,
    b: &WhitneyPoint,
) -> Result<DVector<f64>> {
    if xi.side != Side::Lagrangian {
        return Err(Error::Invalid("expected Lagrangian-side sections".into()));
    }
    check_len("section slots", sys.k(), xi.k())?;
    let j = sys.jet(b)?;
    let cd = cartan_from_jet(sys, b, &j);
    let de = prolonged_differential(sys, b, &energy_gradient(sys, b, &j));
    contraction_residual(&cd.omega, xi, &de)
}

/// Residuals of a discrete field at one interior node.
#[derive(Clone, Debug, Serialize)]
pub struct ElResidual {
    pub node: Vec<usize>,
    pub el_res: Vec<f64>,
    /// `el_res` divided by the largest momentum magnitude on the stencil.
    pub el_res_relative: Vec<f64>,
    /// `n × k`.
    pub anchor_res: DMatrix<f64>,
    /// `morphism_res[α][(A, B)]`.
    pub morphism_res: Vec<DMatrix<f64>>,
    pub norms: ResidualNorms,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResidualNorms {
    pub el: f64,
    pub el_relative: f64,
    pub anchor: f64,
    pub morphism: f64,
}

/// `Σ_A ∂_A(∂L/∂y^α_A ∘ Φ) − ρ^i_α ∂L/∂q^i − φ^β_C C^γ_{βα} ∂L/∂y^γ_C`
/// with central differences, plus the morphism residuals at the node.
pub fn euler_lagrange_residual(
    sys: &LagrangianSystem,
    field: &GridField,
    node: &[usize],
) -> Result<ElResidual> {
    euler_lagrange_residual_with(sys, field, node, Stencil::Central)
}

/// As [`euler_lagrange_residual`] with a chosen difference stencil.
pub fn euler_lagrange_residual_with(
    sys: &LagrangianSystem,
    field: &GridField,
    node: &[usize],
    stencil: Stencil,
) -> Result<ElResidual> {
    let l = field.layout;
    if l.side != Side::Lagrangian {
        return Err(Error::Invalid(
            "field is not valued in the Whitney sum".into(),
        ));
    }
    check_len("field base dimension", sys.n(), l.n)?;
    check_len("field rank", sys.m(), l.m)?;
    check_len("field slots", sys.k(), l.k)?;
    let (n, m, k) = (sys.n(), sys.m(), sys.k());
    let b = field.whitney(node)?;
    let j = sys.jet(&b)?;
    let rho = sys.alg.anchor_at(&b.q);
    let c = sys.alg.structure_at(&b.q);

    let mut scale = j.dy.amax();
    let mut div = DVector::zeros(m);
    for a in 0..k {
        let d = fd_apply(&field.grid, node, a, stencil, |nd| {
            let p = sys.momentum(&field.whitney(nd)?)?;
            scale = scale.max(p.amax());
            Ok(p.column(a).into_owned())
        })?;
        div += d;
    }
    let mut el = vec![0.0; m];
    for al in 0..m {
        let mut r = div[al];
        for i in 0..n {
            r -= rho[(i, al)] * j.dq[i];
        }
        for cc in 0..k {
            for be in 0..m {
                for g in 0..m {
                    r -= b.y[(be, cc)] * c.get(g, be, al) * j.dy[(g, cc)];
                }
            }
        }
        el[al] = r;
    }
    let jet = grid_morphism_jet(field, node, stencil)?;
    let mr = morphism_residual_from_jet(&sys.alg, &jet)?;
    let denom = if scale > 0.0 { scale } else { 1.0 };
    let rel: Vec<f64> = el.iter().map(|v| v / denom).collect();
    let amax = |v: &[f64]| v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    Ok(ElResidual {
        node: node.to_vec(),
        norms: ResidualNorms {
            el: amax(&el),
            el_relative: amax(&rel),
            anchor: mr.anchor_norm(),
            morphism: mr.bracket_norm(),
        },
        el_res: el,
        el_res_relative: rel,
        anchor_res: mr.anchor_res,
        morphism_res: mr.bracket_res,
    })
}

/// Residuals over every interior node.
#[derive(Clone, Debug, Serialize)]
pub struct FieldResidualReport {
    pub interior_nodes: usize,
    pub el: Norms,
    pub anchor: Norms,
    pub morphism: Norms,
    pub nodes: Vec<ElResidual>,
}

pub fn euler_lagrange_report(
    sys: &LagrangianSystem,
    field: &GridField,
    stencil: Stencil,
) -> Result<FieldResidualReport> {
    let nodes = field
        .grid
        .interior_nodes()
        .iter()
        .map(|nd| euler_lagrange_residual_with(sys, field, nd, stencil))
        .collect::<Result<Vec<_>>>()?;
    let vol = field.grid.cell_volume();
    let el = Norms::of(nodes.iter().map(|r| r.el_res.as_slice()), vol);
    let anchor = Norms::of(nodes.iter().map(|r| r.anchor_res.as_slice()), vol);
    let morphism_flat: Vec<Vec<f64>> = nodes
        .iter()
        .map(|r| {
            r.morphism_res
                .iter()
                .flat_map(|x| x.iter().copied())
                .collect()
        })
        .collect();
    let morphism = Norms::of(morphism_flat.iter().map(|v| v.as_slice()), vol);
    Ok(FieldResidualReport {
        interior_nodes: nodes.len(),
        el,
        anchor,
        morphism,
        nodes,
    })
}
