//! The Legendre map `(q, y) ↦ (q, ∂L/∂y)`, its prolongation, Newton
//! inversion, the induced Hamiltonian and the pullback identities.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::function::FieldFunction;
use crate::grid::{GridField, Layout, Norms, Stencil};
use crate::hamiltonian::{hamilton_residual_with, liouville_sections, HamiltonianSystem};
use crate::lagrangian::{
    cartan_sections, energy, euler_lagrange_residual_with, hessian_info, LagrangianSystem,
};
use crate::prolongation::{CoWhitneyPoint, ProlongedElement, Side, WhitneyPoint};

/// Newton settings for [`legendre_invert`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NewtonSettings {
    pub max_iter: usize,
    /// Absolute tolerance, scaled by `‖p‖ + 1`.
    pub tol: f64,
    /// Halve the step while the residual grows.
    pub damping: bool,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            max_iter: 50,
            tol: 1e-12,
            damping: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LegendreMap {
    sys: LagrangianSystem,
    pub settings: NewtonSettings,
}

impl LegendreMap {
    pub fn new(sys: LagrangianSystem) -> Self {
        LegendreMap {
            sys,
            settings: NewtonSettings::default(),
        }
    }

    pub fn with_settings(mut self, settings: NewtonSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn system(&self) -> &LagrangianSystem {
        &self.sys
    }
}

/// `p^A_α = ∂L/∂y^α_A(b)`.
pub fn legendre_forward(map: &LegendreMap, b: &WhitneyPoint) -> Result<CoWhitneyPoint> {
    Ok(CoWhitneyPoint::new(
        b.q.clone(),
        map.sys.momentum(b)?.transpose(),
    ))
}

/// `T^E Leg`: `z` unchanged and
/// `w'^C_γ = z^α ρ^i_α ∂²L/∂q^i∂y^γ_C + w^β_B ∂²L/∂y^γ_C∂y^β_B`.
pub fn legendre_prolonged(
    map: &LegendreMap,
    b: &WhitneyPoint,
    z: &ProlongedElement,
) -> Result<ProlongedElement> {
    let sys = &map.sys;
    if z.side != Side::Lagrangian {
        return Err(Error::Invalid(
            "expected an element over the Whitney sum".into(),
        ));
    }
    let (m, k) = (sys.m(), sys.k());
    check_len("element rank", m, z.m())?;
    check_len("element slots", k, z.k())?;
    let j = sys.jet(b)?;
    let rho = sys.algebroid().anchor_at(&b.q);
    let rz = &rho * &z.z;
    let wflat = DVector::from_row_slice(&crate::prolongation::row_major(&z.w));
    // Indexed like y: γ k + C.
    let out_y = j.mixed.transpose() * rz + &j.w * wflat;
    let mut w = DMatrix::zeros(k, m);
    for g in 0..m {
        for c in 0..k {
            w[(c, g)] = out_y[g * k + c];
        }
    }
    Ok(ProlongedElement {
        side: Side::Hamiltonian,
        z: z.z.clone(),
        w,
    })
}

/// Result of a Newton inversion.
#[derive(Clone, Debug, Serialize)]
pub struct Inversion {
    pub point: WhitneyPoint,
    pub iterations: usize,
    pub residual: f64,
}

/// Fiber-identity starting point `y^α_A = p^A_α`.
pub fn default_guess(p: &CoWhitneyPoint) -> WhitneyPoint {
    WhitneyPoint::new(p.q.clone(), p.p.transpose())
}

/// Solves `∂L/∂y(q, y) = p` by Newton's method with the fiber Hessian as Jacobian.
pub fn legendre_invert(
    map: &LegendreMap,
    p: &CoWhitneyPoint,
    guess: &WhitneyPoint,
) -> Result<Inversion> {
    let sys = &map.sys;
    check_len("base point", sys.n(), p.n())?;
    check_len("fiber rank", sys.m(), p.m())?;
    check_len("slots", sys.k(), p.k())?;
    if guess.q != p.q {
        return Err(Error::Invalid(
            "guess must lie over the same base point".into(),
        ));
    }
    let target = p.p.transpose();
    let tol = map.settings.tol * (p.p.norm() + 1.0);
    let mut b = guess.clone();
    let mut f = sys.momentum(&b)? - &target;
    let mut res = f.norm();
    let (m, k) = (sys.m(), sys.k());
    for it in 0..=map.settings.max_iter {
        if res <= tol {
            return Ok(Inversion {
                point: b,
                iterations: it,
                residual: res,
            });
        }
        if it == map.settings.max_iter {
            break;
        }
        let info = hessian_info(sys.jet(&b)?.w);
        if !info.regular {
            return Err(Error::SingularHessian {
                condition: info.condition,
            });
        }
        let rhs = DVector::from_row_slice(&crate::prolongation::row_major(&f));
        let step = info.w.lu().solve(&rhs).ok_or(Error::SingularHessian {
            condition: f64::INFINITY,
        })?;
        let step = DMatrix::from_row_slice(m, k, step.as_slice());
        let mut lambda = 1.0;
        loop {
            let trial = WhitneyPoint::new(b.q.clone(), &b.y - &step * lambda);
            let ft = sys.momentum(&trial)? - &target;
            let rt = ft.norm();
            if rt <= res || !map.settings.damping || lambda < 1e-8 {
                b = trial;
                f = ft;
                res = rt;
                break;
            }
            lambda *= 0.5;
        }
    }
    Err(Error::NoConvergence {
        iterations: map.settings.max_iter,
        residual: res,
    })
}

/// `H = E_L ∘ Leg⁻¹`, evaluated by Newton inversion from [`default_guess`].
/// Derivatives come from the implicit-function relation at the converged point.
#[derive(Clone, Debug)]
pub struct InducedHamiltonian {
    map: LegendreMap,
}

impl InducedHamiltonian {
    fn invert_flat(&self, x: &[f64]) -> Result<(CoWhitneyPoint, Inversion)> {
        let sys = &self.map.sys;
        let p = CoWhitneyPoint::from_flat(sys.n(), sys.m(), sys.k(), x)?;
        let inv = legendre_invert(&self.map, &p, &default_guess(&p))?;
        Ok((p, inv))
    }

    /// Position of `y^α_A` (index `α k + A`) in the flattened `p` block.
    fn p_index(&self, y_index: usize) -> usize {
        let (m, k) = (self.map.sys.m(), self.map.sys.k());
        let (al, a) = (y_index / k, y_index % k);
        a * m + al
    }
}

impl FieldFunction for InducedHamiltonian {
    fn value(&self, x: &[f64]) -> Result<f64> {
        let (_, inv) = self.invert_flat(x)?;
        energy(&self.map.sys, &inv.point)
    }

    /// `∂H/∂q = −∂L/∂q`, `∂H/∂y^A_α = y^α_A`.
    fn gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        let (_, inv) = self.invert_flat(x)?;
        let sys = &self.map.sys;
        let n = sys.n();
        let j = sys.jet(&inv.point)?;
        let mut g = DVector::zeros(x.len());
        g.rows_mut(0, n).copy_from(&(-&j.dq));
        let yf = inv.point.flat();
        for yi in 0..sys.m() * sys.k() {
            g[n + self.p_index(yi)] = yf[n + yi];
        }
        Ok(g)
    }

    fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let (_, inv) = self.invert_flat(x)?;
        let sys = &self.map.sys;
        let n = sys.n();
        let mk = sys.m() * sys.k();
        let full = sys.function().hessian(&inv.point.flat())?;
        let lqq = full.view((0, 0), (n, n));
        let lqy = full.view((0, n), (n, mk));
        let winv = full
            .view((n, n), (mk, mk))
            .into_owned()
            .try_inverse()
            .ok_or(Error::SingularHessian {
                condition: f64::INFINITY,
            })?;
        let hqq = -lqq + lqy * &winv * lqy.transpose();
        let hqp = -(lqy * &winv);
        let mut h = DMatrix::zeros(n + mk, n + mk);
        h.view_mut((0, 0), (n, n)).copy_from(&hqq);
        for yi in 0..mk {
            let pi = n + self.p_index(yi);
            for i in 0..n {
                h[(i, pi)] = hqp[(i, yi)];
                h[(pi, i)] = hqp[(i, yi)];
            }
            for yj in 0..mk {
                h[(pi, n + self.p_index(yj))] = winv[(yi, yj)];
            }
        }
        Ok(h)
    }
}

/// The Hamiltonian system `(E*, k, E_L ∘ Leg⁻¹)`.
pub fn induced_hamiltonian(map: &LegendreMap) -> HamiltonianSystem {
    HamiltonianSystem::new(
        map.sys.algebroid().clone(),
        map.sys.k(),
        InducedHamiltonian { map: map.clone() },
    )
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PullbackReport {
    pub theta_ok: bool,
    pub omega_ok: bool,
    pub theta_error: f64,
    pub omega_error: f64,
}

/// Compares `Θ^A`, `Ω^A` at `Leg(b)` on `T^E Leg(Z)` with `Θ_L^A`, `Ω_L^A` at `b`.
pub fn pullback_check(
    map: &LegendreMap,
    b: &WhitneyPoint,
    z1: &ProlongedElement,
    z2: &ProlongedElement,
    tol: f64,
) -> Result<PullbackReport> {
    pullback_check_with(map, b, z1, z2, tol, |b, z| legendre_prolonged(map, b, z))
}

/// [`pullback_check`] with a caller-supplied prolonged map.
pub fn pullback_check_with(
    map: &LegendreMap,
    b: &WhitneyPoint,
    z1: &ProlongedElement,
    z2: &ProlongedElement,
    tol: f64,
    prolonged: impl Fn(&WhitneyPoint, &ProlongedElement) -> Result<ProlongedElement>,
) -> Result<PullbackReport> {
    let sys = &map.sys;
    let lag = cartan_sections(sys, b)?;
    let p = legendre_forward(map, b)?;
    let ham = liouville_sections(sys.algebroid(), &p)?;
    let (v1, v2) = (z1.to_vector(), z2.to_vector());
    let (u1, u2) = (prolonged(b, z1)?.to_vector(), prolonged(b, z2)?.to_vector());
    let m = sys.m();
    let mut theta_error = 0.0_f64;
    let mut omega_error = 0.0_f64;
    for a in 0..sys.k() {
        let tl = lag.theta[a].dot(&v1.rows(0, m));
        let th = ham.theta[a].dot(&u1.rows(0, m));
        theta_error = theta_error.max((tl - th).abs());
        let ol = v1.dot(&(&lag.omega[a] * &v2));
        let oh = u1.dot(&(&ham.omega[a] * &u2));
        omega_error = omega_error.max((ol - oh).abs());
    }
    Ok(PullbackReport {
        theta_ok: theta_error <= tol,
        omega_ok: omega_error <= tol,
        theta_error,
        omega_error,
    })
}

/// Per-node transport diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct TransportNode {
    pub node: Vec<usize>,
    pub el_res_norm: f64,
    pub ham_res_norm: Option<f64>,
    pub invert_iters: Option<usize>,
    pub regular: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransportReport {
    pub interior_nodes: usize,
    pub failed_nodes: usize,
    pub el: Norms,
    pub ham: Norms,
    pub nodes: Vec<TransportNode>,
}

/// `ψ = Leg ∘ η` nodewise, with Euler–Lagrange residuals of `η` and Hamilton
/// residuals of `ψ` under [`induced_hamiltonian`].
pub fn solution_transport(
    map: &LegendreMap,
    eta: &GridField,
) -> Result<(GridField, TransportReport)> {
    let sys = &map.sys;
    let l = eta.layout;
    if l.side != Side::Lagrangian {
        return Err(Error::Invalid(
            "transport expects a field in the Whitney sum".into(),
        ));
    }
    let mut data = Vec::with_capacity(eta.data.len());
    for i in 0..eta.grid.node_count() {
        let b = eta.whitney(&eta.grid.node(i))?;
        data.extend(legendre_forward(map, &b)?.flat());
    }
    let psi = GridField::new(
        eta.grid.clone(),
        Layout {
            side: Side::Hamiltonian,
            ..l
        },
        data,
    )?;
    let hsys = induced_hamiltonian(map);
    let mut nodes = Vec::new();
    let mut el_vals = Vec::new();
    let mut ham_vals = Vec::new();
    for node in eta.grid.interior_nodes() {
        let el = euler_lagrange_residual_with(sys, eta, &node, Stencil::Central)?;
        let el_norm = el.norms.el.max(el.norms.anchor).max(el.norms.morphism);
        let p = psi.cowhitney(&node)?;
        let inv = legendre_invert(map, &p, &default_guess(&p));
        let (ham_norm, iters, regular) = match inv {
            Ok(inv) => {
                let regular = hessian_info(sys.jet(&inv.point)?.w).regular;
                match hamilton_residual_with(&hsys, &psi, &node, Stencil::Central) {
                    Ok(r) => {
                        let mut v: Vec<f64> = r.q_res.iter().copied().collect();
                        v.extend(&r.p_res);
                        ham_vals.push(v);
                        (Some(r.norm), Some(inv.iterations), regular)
                    }
                    Err(_) => (None, Some(inv.iterations), false),
                }
            }
            Err(_) => (None, None, false),
        };
        let mut ev: Vec<f64> = el.el_res.clone();
        ev.extend(el.anchor_res.iter());
        ev.extend(el.morphism_res.iter().flat_map(|x| x.iter().copied()));
        el_vals.push(ev);
        nodes.push(TransportNode {
            node,
            el_res_norm: el_norm,
            ham_res_norm: ham_norm,
            invert_iters: iters,
            regular,
        });
    }
    let vol = eta.grid.cell_volume();
    let report = TransportReport {
        interior_nodes: nodes.len(),
        failed_nodes: nodes.iter().filter(|n| n.ham_res_norm.is_none()).count(),
        el: Norms::of(el_vals.iter().map(|v| v.as_slice()), vol),
        ham: Norms::of(ham_vals.iter().map(|v| v.as_slice()), vol),
        nodes,
    };
    Ok((psi, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ad::{Real, D2};
    use crate::function::AdFunction;
    use crate::models;

    fn quartic() -> LagrangianSystem {
        LagrangianSystem::new(
            models::standard_algebroid(1),
            2,
            AdFunction::new(|x: &[D2]| {
                let mut s = x[0] * x[0] * 0.1;
                for &v in &x[1..] {
                    s += v.powi(4) * 0.25 + v * v * 0.5 + v * x[0] * 0.3;
                }
                s
            }),
        )
    }

    #[test]
    fn free_forward_is_identity() {
        let map = LegendreMap::new(models::free_lagrangian(&models::so3(), 2));
        let b = WhitneyPoint::new(
            vec![],
            DMatrix::from_row_slice(3, 2, &[1., 2., 3., 4., 5., 6.]),
        );
        let p = legendre_forward(&map, &b).unwrap();
        assert_eq!(p.p, b.y.transpose());
        let inv = legendre_invert(&map, &p, &WhitneyPoint::zeros(0, 3, 2)).unwrap();
        assert_eq!(inv.iterations, 1);
        assert!((inv.point.y - b.y).amax() < 1e-14);
    }

    #[test]
    fn harmonic_forward_doubles() {
        let map = LegendreMap::new(models::harmonic_map_lagrangian());
        let b = WhitneyPoint::new(
            vec![],
            DMatrix::from_row_slice(3, 2, &[1., 2., 3., 4., 5., 6.]),
        );
        assert_eq!(legendre_forward(&map, &b).unwrap().p, b.y.transpose() * 2.0);
    }

    #[test]
    fn quartic_round_trip() {
        let map = LegendreMap::new(quartic());
        let b = WhitneyPoint::new(vec![0.4], DMatrix::from_row_slice(1, 2, &[1.7, -2.3]));
        let p = legendre_forward(&map, &b).unwrap();
        let inv = legendre_invert(&map, &p, &default_guess(&p)).unwrap();
        assert!((inv.point.y - b.y).amax() < 1e-10);
    }

    #[test]
    fn degenerate_sigma_is_singular() {
        // Λ = 0 on R^1 gives a vanishing Lagrangian.
        let lam = models::Bivector::constant(&DMatrix::zeros(1, 1));
        let map = LegendreMap::new(models::poisson_sigma_lagrangian(lam).unwrap());
        let p = CoWhitneyPoint::new(vec![0.0], DMatrix::from_element(2, 1, 1.0));
        assert!(matches!(
            legendre_invert(&map, &p, &default_guess(&p)),
            Err(Error::SingularHessian { .. })
        ));
    }

    #[test]
    fn induced_free_hamiltonian() {
        let map = LegendreMap::new(models::free_lagrangian(&models::standard_algebroid(1), 2));
        let h = induced_hamiltonian(&map);
        let p = CoWhitneyPoint::new(vec![0.2], DMatrix::from_row_slice(2, 1, &[0.6, -1.5]));
        assert!((h.value(&p).unwrap() - 0.5 * (0.36 + 2.25)).abs() < 1e-14);
    }

    #[test]
    fn implicit_hessian_matches_fd() {
        let map = LegendreMap::new(quartic());
        let ih = InducedHamiltonian { map: map.clone() };
        let x = [0.3, 0.8, -0.4];
        let exact = ih.hessian(&x).unwrap();
        let h = 1e-5;
        let mut xs = x.to_vec();
        for j in 0..3 {
            xs[j] = x[j] + h;
            let gp = ih.gradient(&xs).unwrap();
            xs[j] = x[j] - h;
            let gm = ih.gradient(&xs).unwrap();
            xs[j] = x[j];
            let col = (gp - gm) / (2.0 * h);
            for i in 0..3 {
                assert!((exact[(i, j)] - col[i]).abs() < 1e-6, "{i},{j}");
            }
        }
    }

    #[test]
    fn zero_elements_pull_back_to_zero() {
        let map = LegendreMap::new(quartic());
        let b = WhitneyPoint::new(vec![0.1], DMatrix::from_row_slice(1, 2, &[0.5, 0.2]));
        let zero = ProlongedElement::zeros(Side::Lagrangian, 1, 2);
        let r = pullback_check(&map, &b, &zero, &zero, 1e-14).unwrap();
        assert!(r.theta_ok && r.omega_ok);
        assert_eq!(legendre_prolonged(&map, &b, &zero).unwrap().amax(), 0.0);
    }
}
