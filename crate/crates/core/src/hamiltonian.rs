//! Hamiltonian side: the sections `Θ^A`, `Ω^A` on `T^E(⊕^k E*)`, the
//! geometric Hamilton equation, Hamilton PDE residuals and a `k = 1`
//! integrator.
//!
//! Two-sections use the basis `{X_α, V_B^β}` with `V_B^β` at `m + B m + β`.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebroid::LieAlgebroid;
use crate::error::{check_len, Error, Result};
use crate::function::FieldFunction;
use crate::grid::{GridField, Norms, Stencil};
use crate::lagrangian::{contraction_residual, CartanData};
use crate::prolongation::{row_major, CoWhitneyPoint, KSectionValue, Side};

/// A Hamiltonian `H: ⊕^k E* → ℝ`.
#[derive(Clone)]
pub struct HamiltonianSystem {
    alg: LieAlgebroid,
    k: usize,
    h: Arc<dyn FieldFunction>,
}

impl std::fmt::Debug for HamiltonianSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HamiltonianSystem")
            .field("alg", &self.alg)
            .field("k", &self.k)
            .finish_non_exhaustive()
    }
}

/// `∂H/∂q^i` and `dp[(A, α)] = ∂H/∂y^A_α`.
#[derive(Clone, Debug, Serialize)]
pub struct HamiltonianGradient {
    pub dq: DVector<f64>,
    pub dp: DMatrix<f64>,
}

impl HamiltonianSystem {
    pub fn new(alg: LieAlgebroid, k: usize, h: impl FieldFunction + 'static) -> Self {
        Self::from_arc(alg, k, Arc::new(h))
    }

    pub fn from_arc(alg: LieAlgebroid, k: usize, h: Arc<dyn FieldFunction>) -> Self {
        assert!(k >= 1, "k must be at least 1");
        HamiltonianSystem { alg, k, h }
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
        &self.h
    }

    pub fn check_point(&self, p: &CoWhitneyPoint) -> Result<()> {
        check_len("base point", self.n(), p.n())?;
        check_len("fiber rank", self.m(), p.m())?;
        check_len("slots", self.k, p.k())
    }

    pub fn value(&self, p: &CoWhitneyPoint) -> Result<f64> {
        self.check_point(p)?;
        self.h.value(&p.flat())
    }

    pub fn gradient(&self, p: &CoWhitneyPoint) -> Result<HamiltonianGradient> {
        self.check_point(p)?;
        let n = self.n();
        let g = self.h.gradient(&p.flat())?;
        Ok(HamiltonianGradient {
            dq: g.rows(0, n).into_owned(),
            dp: DMatrix::from_row_slice(self.k, self.m(), &g.as_slice()[n..]),
        })
    }
}

/// `Θ^A = y^A_β X^β` and `Ω^A = X^β∧V^A_β + ½ C^δ_{βγ} y^A_δ X^β∧X^γ`.
pub fn liouville_sections(alg: &LieAlgebroid, p: &CoWhitneyPoint) -> Result<CartanData> {
    check_len("base point", alg.base_dim(), p.n())?;
    check_len("fiber rank", alg.rank(), p.m())?;
    let (m, k) = (p.m(), p.k());
    let dim = m + m * k;
    let c = alg.structure_at(&p.q);
    let mut theta = Vec::with_capacity(k);
    let mut omega = Vec::with_capacity(k);
    for a in 0..k {
        theta.push(p.p.row(a).transpose());
        let mut om = DMatrix::zeros(dim, dim);
        for be in 0..m {
            for ga in 0..m {
                om[(be, ga)] = (0..m).map(|d| c.get(d, be, ga) * p.p[(a, d)]).sum();
            }
            om[(be, m + a * m + be)] = 1.0;
            om[(m + a * m + be, be)] = -1.0;
        }
        omega.push(om);
    }
    Ok(CartanData { theta, omega })
}

/// `dH` on the basis `{X_α, V_B^β}`.
pub fn hamiltonian_differential(
    sys: &HamiltonianSystem,
    p: &CoWhitneyPoint,
) -> Result<DVector<f64>> {
    let g = sys.gradient(p)?;
    let m = sys.m();
    let rho = sys.alg.anchor_at(&p.q);
    let mut d = DVector::zeros(m + m * sys.k());
    d.rows_mut(0, m).copy_from(&(rho.transpose() * &g.dq));
    d.rows_mut(m, m * sys.k())
        .copy_from_slice(&row_major(&g.dp));
    Ok(d)
}

/// `ξ^α_B = ∂H/∂y^B_α`, and the trace condition
/// `Σ_A (ξ_A)^A_α = −(C^δ_{αβ} y^C_δ ∂H/∂y^C_β + ρ^i_α ∂H/∂q^i)` resolved by the
/// diagonal gauge `(ξ_A)^B_α = δ^B_A · RHS_α / k`.
pub fn solve_hamilton_section(
    sys: &HamiltonianSystem,
    p: &CoWhitneyPoint,
) -> Result<KSectionValue> {
    let g = sys.gradient(p)?;
    let (n, m, k) = (sys.n(), sys.m(), sys.k());
    let rho = sys.alg.anchor_at(&p.q);
    let c = sys.alg.structure_at(&p.q);
    let x = g.dp.transpose();
    let mut v = vec![DMatrix::zeros(k, m); k];
    for al in 0..m {
        let mut r = 0.0;
        for cc in 0..k {
            for be in 0..m {
                for d in 0..m {
                    r += c.get(d, al, be) * p.p[(cc, d)] * g.dp[(cc, be)];
                }
            }
        }
        for i in 0..n {
            r += rho[(i, al)] * g.dq[i];
        }
        for (a, va) in v.iter_mut().enumerate() {
            va[(a, al)] = -r / k as f64;
        }
    }
    Ok(KSectionValue {
        side: Side::Hamiltonian,
        x,
        v,
    })
}

/// `Σ_A i_{ξ_A} Ω^A − dH` on the basis `{X_α, V_B^β}`.
pub fn hamilton_geometric_residual(
    sys: &HamiltonianSystem,
    xi: &KSectionValue,
    p: &CoWhitneyPoint,
) -> Result<DVector<f64>> {
    if xi.side != Side::Hamiltonian {
        return Err(Error::Invalid("expected Hamiltonian-side sections".into()));
    }
    check_len("section slots", sys.k(), xi.k())?;
    let cd = liouville_sections(&sys.alg, p)?;
    let dh = hamiltonian_differential(sys, p)?;
    contraction_residual(&cd.omega, xi, &dh)
}

/// Hamilton residuals of a discrete field at one node.
#[derive(Clone, Debug, Serialize)]
pub struct HamResidual {
    pub node: Vec<usize>,
    /// `n × k`.
    pub q_res: DMatrix<f64>,
    pub p_res: Vec<f64>,
    pub norm: f64,
}

/// `q_res^i_A = ∂ψ^i/∂t^A − ρ^i_α ∂H/∂y^A_α`,
/// `p_res_α = Σ_A ∂ψ^A_α/∂t^A + C^δ_{αβ} ψ^B_δ ∂H/∂y^B_β + ρ^i_α ∂H/∂q^i`.
pub fn hamilton_residual(
    sys: &HamiltonianSystem,
    psi: &GridField,
    node: &[usize],
) -> Result<HamResidual> {
    hamilton_residual_with(sys, psi, node, Stencil::Central)
}

pub fn hamilton_residual_with(
    sys: &HamiltonianSystem,
    psi: &GridField,
    node: &[usize],
    stencil: Stencil,
) -> Result<HamResidual> {
    let l = psi.layout;
    if l.side != Side::Hamiltonian {
        return Err(Error::Invalid(
            "field is not valued in the dual Whitney sum".into(),
        ));
    }
    check_len("field base dimension", sys.n(), l.n)?;
    check_len("field rank", sys.m(), l.m)?;
    check_len("field slots", sys.k(), l.k)?;
    let (n, m, k) = (sys.n(), sys.m(), sys.k());
    let p = psi.cowhitney(node)?;
    let g = sys.gradient(&p)?;
    let rho = sys.alg.anchor_at(&p.q);
    let c = sys.alg.structure_at(&p.q);
    let mut q_res = DMatrix::zeros(n, k);
    let mut p_res = vec![0.0; m];
    for a in 0..k {
        let d = psi.jet(node, a, stencil)?;
        let qdot = &rho * g.dp.row(a).transpose();
        for i in 0..n {
            q_res[(i, a)] = d[i] - qdot[i];
        }
        for al in 0..m {
            p_res[al] += d[n + a * m + al];
        }
    }
    for al in 0..m {
        let mut r = 0.0;
        for b in 0..k {
            for be in 0..m {
                for d in 0..m {
                    r += c.get(d, al, be) * p.p[(b, d)] * g.dp[(b, be)];
                }
            }
        }
        for i in 0..n {
            r += rho[(i, al)] * g.dq[i];
        }
        p_res[al] += r;
    }
    let norm = p_res.iter().fold(q_res.amax(), |a, v| a.max(v.abs()));
    Ok(HamResidual {
        node: node.to_vec(),
        q_res,
        p_res,
        norm,
    })
}

/// Hamilton residuals over every interior node.
#[derive(Clone, Debug, Serialize)]
pub struct HamReport {
    pub interior_nodes: usize,
    pub q: Norms,
    pub p: Norms,
    pub nodes: Vec<HamResidual>,
}

pub fn hamilton_report(
    sys: &HamiltonianSystem,
    psi: &GridField,
    stencil: Stencil,
) -> Result<HamReport> {
    let nodes = psi
        .grid
        .interior_nodes()
        .iter()
        .map(|nd| hamilton_residual_with(sys, psi, nd, stencil))
        .collect::<Result<Vec<_>>>()?;
    let vol = psi.grid.cell_volume();
    Ok(HamReport {
        interior_nodes: nodes.len(),
        q: Norms::of(nodes.iter().map(|r| r.q_res.as_slice()), vol),
        p: Norms::of(nodes.iter().map(|r| r.p_res.as_slice()), vol),
        nodes,
    })
}

/// Right-hand side of the `k = 1` Hamilton equations, flattened as `[q̇, ṗ]`.
pub fn hamilton_vector_field(sys: &HamiltonianSystem, p: &CoWhitneyPoint) -> Result<DVector<f64>> {
    if sys.k() != 1 {
        return Err(Error::WrongK {
            expected: 1,
            got: sys.k(),
        });
    }
    let xi = solve_hamilton_section(sys, p)?;
    let rho = sys.alg.anchor_at(&p.q);
    let qdot = &rho * xi.x.column(0);
    let mut out = qdot.as_slice().to_vec();
    out.extend(xi.v[0].row(0).iter());
    Ok(DVector::from_vec(out))
}

/// A sampled `k = 1` trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<CoWhitneyPoint>,
}

impl Trajectory {
    pub fn last(&self) -> &CoWhitneyPoint {
        self.points.last().expect("trajectories are never empty")
    }

    /// CSV with columns `t, q1.., p1..`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let first = &self.points[0];
        let mut header = vec!["t".to_string()];
        header.extend((1..=first.n()).map(|i| format!("q{i}")));
        header.extend((1..=first.m()).map(|a| format!("p{a}")));
        wr.write_record(&header)?;
        for (t, p) in self.times.iter().zip(&self.points) {
            let mut row = vec![t.to_string()];
            row.extend(p.flat().iter().map(|v| v.to_string()));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Classical fourth-order Runge–Kutta on the `k = 1` Hamilton equations.
pub fn integrate_hamilton_k1(
    sys: &HamiltonianSystem,
    p0: &CoWhitneyPoint,
    t_end: f64,
    steps: usize,
) -> Result<Trajectory> {
    if sys.k() != 1 {
        return Err(Error::WrongK {
            expected: 1,
            got: sys.k(),
        });
    }
    if steps == 0 {
        return Err(Error::Invalid("steps must be positive".into()));
    }
    sys.check_point(p0)?;
    let (n, m) = (sys.n(), sys.m());
    let dt = t_end / steps as f64;
    let f = |x: &DVector<f64>| -> Result<DVector<f64>> {
        hamilton_vector_field(sys, &CoWhitneyPoint::from_flat(n, m, 1, x.as_slice())?)
    };
    let mut x = DVector::from_vec(p0.flat());
    let mut times = vec![0.0];
    let mut points = vec![p0.clone()];
    for s in 0..steps {
        let k1 = f(&x)?;
        let k2 = f(&(&x + &k1 * (dt / 2.0)))?;
        let k3 = f(&(&x + &k2 * (dt / 2.0)))?;
        let k4 = f(&(&x + &k3 * dt))?;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        times.push((s + 1) as f64 * dt);
        points.push(CoWhitneyPoint::from_flat(n, m, 1, x.as_slice())?);
    }
    Ok(Trajectory { times, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ad::D2;
    use crate::function::AdFunction;
    use crate::grid::{Grid, Layout};
    use crate::models;

    fn cw(q: Vec<f64>, k: usize, m: usize, p: &[f64]) -> CoWhitneyPoint {
        CoWhitneyPoint::new(q, DMatrix::from_row_slice(k, m, p))
    }

    #[test]
    fn canonical_forms_on_standard() {
        let alg = models::standard_algebroid(2);
        let cd = liouville_sections(&alg, &cw(vec![0.1, 0.2], 2, 2, &[1., 2., 3., 4.])).unwrap();
        for a in 0..2 {
            let om = &cd.omega[a];
            assert_eq!(om.view((0, 0), (2, 2)).amax(), 0.0);
            assert_eq!(
                om.view((0, 2 + 2 * a), (2, 2)).into_owned(),
                DMatrix::identity(2, 2)
            );
            assert_eq!((om + om.transpose()).amax(), 0.0);
        }
        assert_eq!(cd.theta[1].as_slice(), &[3.0, 4.0]);
    }

    #[test]
    fn so3_xx_block() {
        let cd = liouville_sections(&models::so3(), &cw(vec![], 1, 3, &[0.0, 0.0, 1.0])).unwrap();
        let om = &cd.omega[0];
        assert_eq!(om[(0, 1)], 1.0);
        assert_eq!(om[(1, 0)], -1.0);
        assert_eq!(om[(0, 2)], 0.0);
        let zero = liouville_sections(&models::so3(), &cw(vec![], 1, 3, &[0.0; 3])).unwrap();
        assert_eq!(zero.omega[0].view((0, 0), (3, 3)).amax(), 0.0);
        assert_eq!(zero.theta[0].amax(), 0.0);
    }

    #[test]
    fn free_field_section() {
        let sys = models::free_hamiltonian(&models::standard_algebroid(1), 2);
        let p = cw(vec![0.3], 2, 1, &[0.7, -0.2]);
        let xi = solve_hamilton_section(&sys, &p).unwrap();
        assert_eq!(xi.x.as_slice(), &[0.7, -0.2]);
        assert!(xi.v.iter().all(|v| v.amax() == 0.0));
        assert!(hamilton_geometric_residual(&sys, &xi, &p).unwrap().amax() < 1e-15);
    }

    #[test]
    fn free_particle_residual() {
        let sys = models::free_hamiltonian(&models::standard_algebroid(1), 1);
        let g = Grid::new(vec![5], vec![0.1], vec![0.0], vec![false]).unwrap();
        let layout = Layout {
            side: Side::Hamiltonian,
            n: 1,
            m: 1,
            k: 1,
        };
        let psi = GridField::from_fn(g, layout, |t| vec![0.5 + 2.0 * t[0], 2.0]).unwrap();
        let rep = hamilton_report(&sys, &psi, Stencil::Central).unwrap();
        assert_eq!(rep.interior_nodes, 3);
        assert!(rep.q.linf < 1e-14 && rep.p.linf < 1e-14);
    }

    #[test]
    fn rk4_free_flow_and_zero_hamiltonian() {
        let sys = models::free_hamiltonian(&models::standard_algebroid(1), 1);
        let tr = integrate_hamilton_k1(&sys, &cw(vec![0.0], 1, 1, &[1.0]), 1.0, 100).unwrap();
        assert!((tr.last().q[0] - 1.0).abs() < 1e-8);
        let zero = HamiltonianSystem::new(
            models::so3(),
            1,
            AdFunction::new(|_x: &[D2]| D2::constant(crate::ad::D1::constant(0.0))),
        );
        let p0 = cw(vec![], 1, 3, &[0.3, -0.2, 0.5]);
        let tr = integrate_hamilton_k1(&zero, &p0, 2.0, 10).unwrap();
        assert_eq!(tr.last(), &p0);
        let k2 = models::free_hamiltonian(&models::so3(), 2);
        assert!(matches!(
            integrate_hamilton_k1(&k2, &cw(vec![], 2, 3, &[0.0; 6]), 1.0, 10),
            Err(Error::WrongK {
                expected: 1,
                got: 2
            })
        ));
    }
}
