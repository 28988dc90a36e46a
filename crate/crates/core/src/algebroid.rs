//! Lie algebroids in local coordinates.
//!
//! An algebroid of rank `m` over an `n`-dimensional base is given by its
//! anchor `ρ^i_α(q)` and structure functions `C^γ_{αβ}(q)`. Both are supplied
//! through [`StructureFields`], evaluated on first-order duals so that every
//! operation here can read their derivatives along any base direction.
//!
//! Storage conventions used throughout the crate:
//! * anchor: row-major `n × m`, entry `ρ^i_α` at `i * m + α`;
//! * structure: entry `C^γ_{αβ}` at `(γ * m + α) * m + β`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::ad::{self, AdScalarFn, Dual, D1, D2};
use crate::error::{check_len, Error, Result};

/// How derivatives of the structure functions are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DerivativeSource {
    Automatic,
    FiniteDifference,
}

impl DerivativeSource {
    /// Default pass tolerance matching the attainable derivative accuracy.
    pub fn default_tolerance(self) -> f64 {
        match self {
            DerivativeSource::Automatic => 1e-8,
            DerivativeSource::FiniteDifference => 1e-4,
        }
    }
}

/// Local structure functions of a Lie algebroid.
pub trait StructureFields: Send + Sync {
    fn base_dim(&self) -> usize;
    fn rank(&self) -> usize;
    /// `ρ^i_α(q)`, row-major `n × m`.
    fn anchor(&self, q: &[D1]) -> Vec<D1>;
    /// `C^γ_{αβ}(q)`, flattened as `(γ * m + α) * m + β`.
    fn structure(&self, q: &[D1]) -> Vec<D1>;
    fn derivative_source(&self) -> DerivativeSource {
        DerivativeSource::Automatic
    }
    /// Anchor and structure functions depend only on the first this-many
    /// coordinates.
    fn active_coordinates(&self) -> usize {
        self.base_dim()
    }
}

/// Dense `m × m × m` table of structure functions at one base point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureTensor {
    pub rank: usize,
    pub data: Vec<f64>,
}

impl StructureTensor {
    pub fn zeros(rank: usize) -> Self {
        StructureTensor {
            rank,
            data: vec![0.0; rank * rank * rank],
        }
    }

    pub fn from_fn(rank: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(rank);
        for g in 0..rank {
            for a in 0..rank {
                for b in 0..rank {
                    t.set(g, a, b, f(g, a, b));
                }
            }
        }
        t
    }

    #[inline]
    pub fn index(rank: usize, gamma: usize, alpha: usize, beta: usize) -> usize {
        (gamma * rank + alpha) * rank + beta
    }

    /// `C^γ_{αβ}`.
    #[inline]
    pub fn get(&self, gamma: usize, alpha: usize, beta: usize) -> f64 {
        self.data[Self::index(self.rank, gamma, alpha, beta)]
    }

    #[inline]
    pub fn set(&mut self, gamma: usize, alpha: usize, beta: usize, v: f64) {
        let i = Self::index(self.rank, gamma, alpha, beta);
        self.data[i] = v;
    }

    /// `[u, v]^γ = C^γ_{αβ} u^α v^β`.
    pub fn apply(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let m = self.rank;
        (0..m)
            .map(|g| {
                let mut s = 0.0;
                for a in 0..m {
                    if u[a] == 0.0 {
                        continue;
                    }
                    for b in 0..m {
                        s += self.get(g, a, b) * u[a] * v[b];
                    }
                }
                s
            })
            .collect()
    }

    /// so(3)-type table `C^γ_{αβ} = ε_{αβγ}`.
    pub fn levi_civita() -> Self {
        Self::from_fn(3, |g, a, b| levi_civita(a, b, g))
    }
}

pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// A Lie algebroid chart. Cheap to clone; immutable.
#[derive(Clone)]
pub struct LieAlgebroid {
    fields: Arc<dyn StructureFields>,
    chart_label: Option<String>,
}

impl std::fmt::Debug for LieAlgebroid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LieAlgebroid")
            .field("base_dim", &self.base_dim())
            .field("rank", &self.rank())
            .field("chart_label", &self.chart_label)
            .finish()
    }
}

impl LieAlgebroid {
    pub fn new(fields: impl StructureFields + 'static) -> Self {
        LieAlgebroid {
            fields: Arc::new(fields),
            chart_label: None,
        }
    }

    pub fn from_arc(fields: Arc<dyn StructureFields>) -> Self {
        LieAlgebroid {
            fields,
            chart_label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.chart_label = Some(label.into());
        self
    }

    pub fn chart_label(&self) -> Option<&str> {
        self.chart_label.as_deref()
    }

    pub fn base_dim(&self) -> usize {
        self.fields.base_dim()
    }

    pub fn rank(&self) -> usize {
        self.fields.rank()
    }

    pub fn fields(&self) -> &Arc<dyn StructureFields> {
        &self.fields
    }

    pub fn derivative_source(&self) -> DerivativeSource {
        self.fields.derivative_source()
    }

    pub fn default_tolerance(&self) -> f64 {
        self.derivative_source().default_tolerance()
    }

    /// `ρ(q)` as an `n × m` matrix.
    pub fn anchor_at(&self, q: &[f64]) -> DMatrix<f64> {
        let (n, m) = (self.base_dim(), self.rank());
        let raw = self.fields.anchor(&ad::constant_d1(q));
        DMatrix::from_fn(n, m, |i, a| raw[i * m + a].re)
    }

    pub fn structure_at(&self, q: &[f64]) -> StructureTensor {
        let raw = self.fields.structure(&ad::constant_d1(q));
        StructureTensor {
            rank: self.rank(),
            data: ad::values(&raw),
        }
    }

    /// Anchor and its derivative along `dir`.
    pub fn anchor_directional(&self, q: &[f64], dir: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let (n, m) = (self.base_dim(), self.rank());
        let raw = self.fields.anchor(&ad::seed_d1(q, dir));
        (
            DMatrix::from_fn(n, m, |i, a| raw[i * m + a].re),
            DMatrix::from_fn(n, m, |i, a| raw[i * m + a].eps),
        )
    }

    /// Structure functions and their derivative along `dir`.
    pub fn structure_directional(
        &self,
        q: &[f64],
        dir: &[f64],
    ) -> (StructureTensor, StructureTensor) {
        let raw = self.fields.structure(&ad::seed_d1(q, dir));
        let m = self.rank();
        (
            StructureTensor {
                rank: m,
                data: ad::values(&raw),
            },
            StructureTensor {
                rank: m,
                data: ad::tangents(&raw),
            },
        )
    }

    fn check_point(&self, q: &[f64]) -> Result<()> {
        check_len("base point", self.base_dim(), q.len())
    }
}

/// Structure functions with constant anchor and structure tables.
#[derive(Clone, Debug)]
pub struct ConstantStructure {
    pub base_dim: usize,
    pub rank: usize,
    pub anchor: Vec<f64>,
    pub structure: Vec<f64>,
}

impl StructureFields for ConstantStructure {
    fn base_dim(&self) -> usize {
        self.base_dim
    }
    fn rank(&self) -> usize {
        self.rank
    }
    fn anchor(&self, _q: &[D1]) -> Vec<D1> {
        self.anchor.iter().map(|&v| Dual::constant(v)).collect()
    }
    fn structure(&self, _q: &[D1]) -> Vec<D1> {
        self.structure.iter().map(|&v| Dual::constant(v)).collect()
    }
}

pub type D1VecFn = dyn Fn(&[D1]) -> Vec<D1> + Send + Sync;

/// Structure functions given by AD-evaluable closures.
#[derive(Clone)]
pub struct ClosureStructure {
    pub base_dim: usize,
    pub rank: usize,
    pub anchor: Arc<D1VecFn>,
    pub structure: Arc<D1VecFn>,
}

impl StructureFields for ClosureStructure {
    fn base_dim(&self) -> usize {
        self.base_dim
    }
    fn rank(&self) -> usize {
        self.rank
    }
    fn anchor(&self, q: &[D1]) -> Vec<D1> {
        (self.anchor)(q)
    }
    fn structure(&self, q: &[D1]) -> Vec<D1> {
        (self.structure)(q)
    }
}

type F64VecFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Structure functions behind plain `f64` callbacks; derivatives by central
/// differences with step [`OpaqueStructure::STEP`].
#[derive(Clone)]
pub struct OpaqueStructure {
    pub base_dim: usize,
    pub rank: usize,
    pub anchor: Arc<F64VecFn>,
    pub structure: Arc<F64VecFn>,
}

impl OpaqueStructure {
    pub const STEP: f64 = 1e-6;

    fn lift(f: &F64VecFn, q: &[D1]) -> Vec<D1> {
        let x = ad::values(q);
        let dir = ad::tangents(q);
        let base = f(&x);
        if dir.iter().all(|&d| d == 0.0) {
            return base.into_iter().map(Dual::constant).collect();
        }
        let h = Self::STEP;
        let xp: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + h * d).collect();
        let xm: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a - h * d).collect();
        let (fp, fm) = (f(&xp), f(&xm));
        base.iter()
            .zip(fp.iter().zip(&fm))
            .map(|(&v, (p, m))| Dual::new(v, (p - m) / (2.0 * h)))
            .collect()
    }
}

impl StructureFields for OpaqueStructure {
    fn base_dim(&self) -> usize {
        self.base_dim
    }
    fn rank(&self) -> usize {
        self.rank
    }
    fn anchor(&self, q: &[D1]) -> Vec<D1> {
        Self::lift(&*self.anchor, q)
    }
    fn structure(&self, q: &[D1]) -> Vec<D1> {
        Self::lift(&*self.structure, q)
    }
    fn derivative_source(&self) -> DerivativeSource {
        DerivativeSource::FiniteDifference
    }
}

/// A section `q ↦ σ^α(q)` of the algebroid.
#[derive(Clone)]
pub struct SectionField(Arc<D1VecFn>);

impl SectionField {
    pub fn new(f: impl Fn(&[D1]) -> Vec<D1> + Send + Sync + 'static) -> Self {
        SectionField(Arc::new(f))
    }

    pub fn constant(coeffs: Vec<f64>) -> Self {
        SectionField::new(move |_q| coeffs.iter().map(|&c| Dual::constant(c)).collect())
    }

    pub fn eval(&self, q: &[f64]) -> Vec<f64> {
        ad::values(&(self.0)(&ad::constant_d1(q)))
    }

    pub fn eval_d1(&self, q: &[D1]) -> Vec<D1> {
        (self.0)(q)
    }

    /// Coefficients and their derivative along `dir`.
    pub fn directional(&self, q: &[f64], dir: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let r = (self.0)(&ad::seed_d1(q, dir));
        (ad::values(&r), ad::tangents(&r))
    }

    /// `f · σ` for a scalar base function `f`.
    pub fn scaled(&self, f: BaseFunction) -> SectionField {
        let inner = self.0.clone();
        SectionField::new(move |q| {
            let s = f.eval_d1(q);
            inner(q).into_iter().map(|c| c * s).collect()
        })
    }
}

/// A smooth function on the base, evaluable at second order.
#[derive(Clone)]
pub struct BaseFunction(Arc<AdScalarFn>);

impl BaseFunction {
    pub fn new(f: impl Fn(&[D2]) -> D2 + Send + Sync + 'static) -> Self {
        BaseFunction(Arc::new(f))
    }

    pub fn eval(&self, q: &[f64]) -> f64 {
        (self.0)(&ad::constant_d2(q)).re.re
    }

    pub fn gradient(&self, q: &[f64]) -> DVector<f64> {
        ad::gradient(&*self.0, q)
    }

    /// Value with first-order tangent.
    pub fn eval_d1(&self, q: &[D1]) -> D1 {
        (self.0)(&ad::lift_d1(q, None)).re
    }

    /// `∂f/∂q^i` with first-order tangent.
    pub fn partial_d1(&self, q: &[D1], i: usize) -> D1 {
        (self.0)(&ad::lift_d1(q, Some(i))).eps
    }
}

/// A section `q ↦ μ_α(q)` of the dual bundle.
#[derive(Clone)]
pub struct CovectorField(Arc<D1VecFn>);

impl CovectorField {
    pub fn new(f: impl Fn(&[D1]) -> Vec<D1> + Send + Sync + 'static) -> Self {
        CovectorField(Arc::new(f))
    }

    pub fn eval(&self, q: &[f64]) -> Vec<f64> {
        ad::values(&(self.0)(&ad::constant_d1(q)))
    }

    /// `d^E f` as a covector field, `(d^E f)_α = ρ^i_α ∂f/∂q^i`.
    pub fn differential_of(alg: &LieAlgebroid, f: &BaseFunction) -> CovectorField {
        let alg = alg.clone();
        let f = f.clone();
        CovectorField::new(move |q| {
            let (n, m) = (alg.base_dim(), alg.rank());
            let rho = alg.fields().anchor(q);
            let grad: Vec<D1> = (0..n).map(|i| f.partial_d1(q, i)).collect();
            (0..m)
                .map(|a| {
                    let mut s = D1::constant(0.0);
                    for i in 0..n {
                        s += rho[i * m + a] * grad[i];
                    }
                    s
                })
                .collect()
        })
    }

    fn pair_d1(&self, sigma: &SectionField, q: &[D1]) -> D1 {
        let mu = (self.0)(q);
        let s = sigma.eval_d1(q);
        let mut acc = D1::constant(0.0);
        for (a, b) in mu.iter().zip(&s) {
            acc += *a * *b;
        }
        acc
    }
}

/// `v^i = ρ^i_α(q) e^α`.
pub fn anchor_apply(alg: &LieAlgebroid, q: &[f64], e: &[f64]) -> Result<Vec<f64>> {
    alg.check_point(q)?;
    check_len("fiber coordinates", alg.rank(), e.len())?;
    let rho = alg.anchor_at(q);
    Ok((rho * DVector::from_column_slice(e)).as_slice().to_vec())
}

/// Bracket of two sections at `q`:
/// `σ^α τ^β C^γ_{αβ} + ρ(σ)τ^γ − ρ(τ)σ^γ`.
pub fn bracket(
    alg: &LieAlgebroid,
    sigma: &SectionField,
    tau: &SectionField,
    q: &[f64],
) -> Result<Vec<f64>> {
    alg.check_point(q)?;
    let m = alg.rank();
    let s = sigma.eval(q);
    let t = tau.eval(q);
    check_len("section coefficients", m, s.len())?;
    check_len("section coefficients", m, t.len())?;
    let rho_s = anchor_apply(alg, q, &s)?;
    let rho_t = anchor_apply(alg, q, &t)?;
    let (_, dt) = tau.directional(q, &rho_s);
    let (_, ds) = sigma.directional(q, &rho_t);
    let c = alg.structure_at(q);
    let alg_part = c.apply(&s, &t);
    Ok((0..m).map(|g| alg_part[g] + dt[g] - ds[g]).collect())
}

/// Outcome of checking the structure equations on a sample set.
#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    pub max_violation_jacobi: f64,
    pub max_violation_anchor: f64,
    pub max_violation_antisymmetry: f64,
    pub tolerance: f64,
    pub samples: usize,
    /// Base point where the largest violation occurred.
    pub worst_point: Vec<f64>,
    pub pass: bool,
}

impl StructureReport {
    pub fn max_violation(&self) -> f64 {
        self.max_violation_jacobi
            .max(self.max_violation_anchor)
            .max(self.max_violation_antisymmetry)
    }
}

/// Residuals of both structure equations at one base point.
/// Returns `(jacobi, anchor, antisymmetry)` maxima.
pub fn structure_violations(alg: &LieAlgebroid, q: &[f64]) -> (f64, f64, f64) {
    let (n, m) = (alg.base_dim(), alg.rank());
    let rho = alg.anchor_at(q);
    let c = alg.structure_at(q);
    let active = alg.fields().active_coordinates().min(n);

    // Derivatives along each anchor column ρ_α = ρ^i_α ∂/∂q^i.
    let mut d_rho = Vec::with_capacity(m);
    let mut d_c = Vec::with_capacity(m);
    for a in 0..m {
        let dir: Vec<f64> = (0..n).map(|i| rho[(i, a)]).collect();
        if dir[..active].iter().all(|&v| v == 0.0) {
            d_rho.push(DMatrix::zeros(n, m));
            d_c.push(StructureTensor::zeros(m));
        } else {
            d_rho.push(alg.anchor_directional(q, &dir).1);
            d_c.push(alg.structure_directional(q, &dir).1);
        }
    }

    let mut anti = 0.0_f64;
    for g in 0..m {
        for a in 0..m {
            for b in 0..m {
                anti = anti.max((c.get(g, a, b) + c.get(g, b, a)).abs());
            }
        }
    }

    // cyclic(α,β,γ) ( ρ_α(C^ν_{βγ}) + C^ν_{αμ} C^μ_{βγ} ), over α < β < γ: the
    // cyclic sum is alternating once C is antisymmetric, which is checked above.
    let nonzero: Vec<Vec<(usize, f64)>> = (0..m * m)
        .map(|yz| {
            (0..m)
                .filter_map(|mu| {
                    let v = c.get(mu, yz / m, yz % m);
                    (v != 0.0).then_some((mu, v))
                })
                .collect()
        })
        .collect();
    let mut jac = 0.0_f64;
    for a in 0..m {
        for b in a + 1..m {
            for g in b + 1..m {
                for nu in 0..m {
                    let mut s = 0.0;
                    for &(x, y, z) in &[(a, b, g), (b, g, a), (g, a, b)] {
                        s += d_c[x].get(nu, y, z);
                        for &(mu, v) in &nonzero[y * m + z] {
                            s += c.get(nu, x, mu) * v;
                        }
                    }
                    jac = jac.max(s.abs());
                }
            }
        }
    }

    // ρ_α(ρ^i_β) − ρ_β(ρ^i_α) − ρ^i_γ C^γ_{αβ}
    let mut anc = 0.0_f64;
    for a in 0..m {
        for b in 0..m {
            for i in 0..n {
                let mut s = d_rho[a][(i, b)] - d_rho[b][(i, a)];
                for g in 0..m {
                    s -= rho[(i, g)] * c.get(g, a, b);
                }
                anc = anc.max(s.abs());
            }
        }
    }
    (jac, anc, anti)
}

/// Checks antisymmetry and both structure equations at every sample.
pub fn validate_structure_equations(
    alg: &LieAlgebroid,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<StructureReport> {
    if samples.is_empty() {
        return Err(Error::Invalid("no sample points".into()));
    }
    let mut report = StructureReport {
        max_violation_jacobi: 0.0,
        max_violation_anchor: 0.0,
        max_violation_antisymmetry: 0.0,
        tolerance: tol,
        samples: samples.len(),
        worst_point: samples[0].clone(),
        pass: false,
    };
    let mut worst = -1.0;
    for q in samples {
        alg.check_point(q)?;
        let (j, a, s) = structure_violations(alg, q);
        report.max_violation_jacobi = report.max_violation_jacobi.max(j);
        report.max_violation_anchor = report.max_violation_anchor.max(a);
        report.max_violation_antisymmetry = report.max_violation_antisymmetry.max(s);
        let here = j.max(a).max(s);
        if here > worst {
            worst = here;
            report.worst_point = q.clone();
        }
    }
    report.pass = report.max_violation() <= tol;
    Ok(report)
}

/// Uniform random points in the box `[-1, 1]^dim`.
pub fn sample_box(rng: &mut impl Rng, dim: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect()
}

/// `(d^E f)_α = ρ^i_α ∂f/∂q^i`.
pub fn exterior_differential(alg: &LieAlgebroid, f: &BaseFunction, q: &[f64]) -> Result<Vec<f64>> {
    alg.check_point(q)?;
    let rho = alg.anchor_at(q);
    let grad = f.gradient(q);
    Ok((rho.transpose() * grad).as_slice().to_vec())
}

/// `d^E μ(σ, τ) = ρ(σ)(μ(τ)) − ρ(τ)(μ(σ)) − μ([σ, τ])`.
pub fn exterior_differential_1(
    alg: &LieAlgebroid,
    mu: &CovectorField,
    sigma: &SectionField,
    tau: &SectionField,
    q: &[f64],
) -> Result<f64> {
    alg.check_point(q)?;
    let s = sigma.eval(q);
    let t = tau.eval(q);
    let rho_s = anchor_apply(alg, q, &s)?;
    let rho_t = anchor_apply(alg, q, &t)?;
    let d_mu_tau = mu.pair_d1(tau, &ad::seed_d1(q, &rho_s)).eps;
    let d_mu_sigma = mu.pair_d1(sigma, &ad::seed_d1(q, &rho_t)).eps;
    let br = bracket(alg, sigma, tau, q)?;
    let mu_q = mu.eval(q);
    let mu_br: f64 = mu_q.iter().zip(&br).map(|(a, b)| a * b).sum();
    Ok(d_mu_tau - d_mu_sigma - mu_br)
}

/// An `l`-section of `Λ^l E*`.
#[derive(Clone)]
pub enum Cochain {
    Function(BaseFunction),
    Covector(CovectorField),
    /// A form of degree ≥ 2, evaluable but not differentiable here.
    Higher {
        degree: usize,
    },
}

impl Cochain {
    pub fn degree(&self) -> usize {
        match self {
            Cochain::Function(_) => 0,
            Cochain::Covector(_) => 1,
            Cochain::Higher { degree } => *degree,
        }
    }
}

/// `d^E` of a cochain evaluated on `degree + 1` sections. Degrees 0 and 1 only.
pub fn exterior_differential_eval(
    alg: &LieAlgebroid,
    form: &Cochain,
    sections: &[SectionField],
    q: &[f64],
) -> Result<f64> {
    let expected = form.degree() + 1;
    match form {
        Cochain::Function(f) => {
            check_len("sections", expected, sections.len())?;
            let df = exterior_differential(alg, f, q)?;
            let s = sections[0].eval(q);
            Ok(df.iter().zip(&s).map(|(a, b)| a * b).sum())
        }
        Cochain::Covector(mu) => {
            check_len("sections", expected, sections.len())?;
            exterior_differential_1(alg, mu, &sections[0], &sections[1], q)
        }
        Cochain::Higher { degree } => Err(Error::UnsupportedDegree(*degree)),
    }
}

/// Coordinates and first derivatives of `Φ̃ : ℝ^k → ⊕^k E` at one parameter point.
#[derive(Clone, Debug)]
pub struct MorphismJet {
    /// `φ^i(t)`.
    pub base: Vec<f64>,
    /// `∂φ^i/∂t^A`, `n × k`.
    pub base_derivative: DMatrix<f64>,
    /// `φ^α_A(t)`, `m × k`.
    pub fiber: DMatrix<f64>,
    /// `fiber_derivative[B][(α, A)] = ∂φ^α_A/∂t^B`.
    pub fiber_derivative: Vec<DMatrix<f64>>,
}

/// Residuals of the two morphism conditions.
#[derive(Clone, Debug, Serialize)]
pub struct MorphismResidual {
    /// `∂φ^i/∂t^A − ρ^i_α φ^α_A`, `n × k`.
    pub anchor_res: DMatrix<f64>,
    /// `bracket_res[α][(A, B)] = ∂φ^α_A/∂t^B − ∂φ^α_B/∂t^A + C^α_{βγ} φ^β_B φ^γ_A`.
    pub bracket_res: Vec<DMatrix<f64>>,
}

impl MorphismResidual {
    pub fn anchor_norm(&self) -> f64 {
        self.anchor_res.amax()
    }

    pub fn bracket_norm(&self) -> f64 {
        self.bracket_res
            .iter()
            .map(|b| b.amax())
            .fold(0.0, f64::max)
    }
}

/// Morphism residuals from a jet.
pub fn morphism_residual_from_jet(
    alg: &LieAlgebroid,
    jet: &MorphismJet,
) -> Result<MorphismResidual> {
    let (n, m) = (alg.base_dim(), alg.rank());
    let k = jet.fiber.ncols();
    check_len("morphism base", n, jet.base.len())?;
    check_len("morphism fiber rows", m, jet.fiber.nrows())?;
    check_len("morphism fiber derivative", k, jet.fiber_derivative.len())?;
    let rho = alg.anchor_at(&jet.base);
    let c = alg.structure_at(&jet.base);
    let anchor_res = &jet.base_derivative - &rho * &jet.fiber;
    let bracket_res = (0..m)
        .map(|al| {
            DMatrix::from_fn(k, k, |a, b| {
                let mut s = jet.fiber_derivative[b][(al, a)] - jet.fiber_derivative[a][(al, b)];
                for be in 0..m {
                    for ga in 0..m {
                        s += c.get(al, be, ga) * jet.fiber[(be, b)] * jet.fiber[(ga, a)];
                    }
                }
                s
            })
        })
        .collect();
    Ok(MorphismResidual {
        anchor_res,
        bracket_res,
    })
}

/// A candidate morphism `TR^k → E` given by AD-evaluable maps of `t`.
#[derive(Clone)]
pub struct MorphismData {
    pub k: usize,
    /// `t ↦ φ^i(t)`.
    pub base_map: Arc<D1VecFn>,
    /// `t ↦ φ^α_A(t)`, row-major `m × k`.
    pub fiber_map: Arc<D1VecFn>,
}

impl MorphismData {
    pub fn new(
        k: usize,
        base_map: impl Fn(&[D1]) -> Vec<D1> + Send + Sync + 'static,
        fiber_map: impl Fn(&[D1]) -> Vec<D1> + Send + Sync + 'static,
    ) -> Self {
        MorphismData {
            k,
            base_map: Arc::new(base_map),
            fiber_map: Arc::new(fiber_map),
        }
    }

    pub fn jet(&self, m: usize, t: &[f64]) -> Result<MorphismJet> {
        let k = self.k;
        check_len("parameter point", k, t.len())?;
        let base = ad::values(&(self.base_map)(&ad::constant_d1(t)));
        let n = base.len();
        let fiber_raw = ad::values(&(self.fiber_map)(&ad::constant_d1(t)));
        check_len("fiber map", m * k, fiber_raw.len())?;
        let mut base_derivative = DMatrix::zeros(n, k);
        let mut fiber_derivative = Vec::with_capacity(k);
        for b in 0..k {
            let seeded = ad::seed_axis_d1(t, b);
            let db = (self.base_map)(&seeded);
            for i in 0..n {
                base_derivative[(i, b)] = db[i].eps;
            }
            let df = (self.fiber_map)(&seeded);
            fiber_derivative.push(DMatrix::from_fn(m, k, |a, c| df[a * k + c].eps));
        }
        Ok(MorphismJet {
            base,
            base_derivative,
            fiber: DMatrix::from_row_slice(m, k, &fiber_raw),
            fiber_derivative,
        })
    }
}

/// Morphism residuals of `Φ` at parameter point `t`, with exact derivatives.
pub fn morphism_residual(
    alg: &LieAlgebroid,
    phi: &MorphismData,
    t: &[f64],
) -> Result<MorphismResidual> {
    let jet = phi.jet(alg.rank(), t)?;
    morphism_residual_from_jet(alg, &jet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn x_section() -> SectionField {
        SectionField::new(|q| vec![q[0]])
    }

    #[test]
    fn anchor_apply_identity_and_point_base() {
        let std2 = models::standard_algebroid(2);
        assert_eq!(
            anchor_apply(&std2, &[0.3, -0.1], &[1.0, 2.0]).unwrap(),
            vec![1.0, 2.0]
        );
        let so3 = models::so3();
        assert!(anchor_apply(&so3, &[], &[1.0, 2.0, 3.0])
            .unwrap()
            .is_empty());
        assert!(matches!(
            anchor_apply(&std2, &[0.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn so3_basis_bracket() {
        let so3 = models::so3();
        let e1 = SectionField::constant(vec![1.0, 0.0, 0.0]);
        let e2 = SectionField::constant(vec![0.0, 1.0, 0.0]);
        assert_eq!(bracket(&so3, &e1, &e2, &[]).unwrap(), vec![0.0, 0.0, 1.0]);
        assert_eq!(bracket(&so3, &e1, &e1, &[]).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn standard_line_bracket_by_leibniz() {
        // [q ∂, ∂] = −∂ on the line.
        let alg = models::standard_algebroid(1);
        let one = SectionField::constant(vec![1.0]);
        let b = bracket(&alg, &x_section(), &one, &[0.4]).unwrap();
        assert!((b[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn standard_line_bracket_matches_flow_commutator() {
        // Vector fields X = q ∂, Y = ∂; flows: X: q e^s, Y: q + s.
        // φ^Y_{-h} φ^X_{-h} φ^Y_h φ^X_h (q) − q ≈ h² [X, Y](q).
        let alg = models::standard_algebroid(1);
        let one = SectionField::constant(vec![1.0]);
        let q = 0.7;
        let exact = bracket(&alg, &x_section(), &one, &[q]).unwrap()[0];
        let mut prev_err = f64::INFINITY;
        for &h in &[1e-2, 5e-3, 2.5e-3] {
            let a = q * f64::exp(h);
            let b = a + h;
            let c = b * f64::exp(-h);
            let d = c - h;
            let est = (d - q) / (h * h);
            let err = (est - exact).abs();
            assert!(err < prev_err);
            prev_err = err;
        }
        assert!(prev_err < 1e-2);
    }

    #[test]
    fn corrupted_so3_fails_validation() {
        let mut c = StructureTensor::levi_civita();
        let v = c.get(2, 0, 1);
        c.set(2, 0, 1, -v);
        let alg = LieAlgebroid::new(ConstantStructure {
            base_dim: 0,
            rank: 3,
            anchor: vec![],
            structure: c.data,
        });
        let report = validate_structure_equations(&alg, &[vec![]], 1e-8).unwrap();
        assert!(!report.pass);
        assert!(report.max_violation() > 1e-2);
    }

    #[test]
    fn empty_samples_rejected() {
        assert!(validate_structure_equations(&models::so3(), &[], 1e-8).is_err());
    }

    #[test]
    fn exterior_differential_of_coordinate_and_on_lie_algebra() {
        let alg = models::standard_algebroid(3);
        let f = BaseFunction::new(|q| q[0]);
        assert_eq!(
            exterior_differential(&alg, &f, &[0.1, 0.2, 0.3]).unwrap(),
            vec![1.0, 0.0, 0.0]
        );
        let so3 = models::so3();
        let g = BaseFunction::new(|_q| D2::constant(D1::constant(2.0)));
        assert_eq!(exterior_differential(&so3, &g, &[]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn degree_two_rejected() {
        let alg = models::so3();
        let r = exterior_differential_eval(&alg, &Cochain::Higher { degree: 2 }, &[], &[]);
        assert!(matches!(r, Err(Error::UnsupportedDegree(2))));
    }

    #[test]
    fn d_squared_vanishes_on_lie_poisson() {
        let alg = models::poisson_cotangent_algebroid(models::Bivector::lie_poisson_so3()).unwrap();
        let f = BaseFunction::new(|q| q[0] * q[1] * q[1] + q[2] * q[0] * 3.0 + q[1]);
        let mu = CovectorField::differential_of(&alg, &f);
        let s = SectionField::new(|q| vec![q[1], q[0] * q[2], D1::constant(1.0)]);
        let t = SectionField::new(|q| vec![q[2] * q[2], D1::constant(-0.5), q[0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for q in sample_box(&mut rng, 3, 20) {
            let v = exterior_differential_1(&alg, &mu, &s, &t, &q).unwrap();
            assert!(v.abs() < 1e-8, "{v}");
        }
    }

    #[test]
    fn morphism_residual_standard_prolongation_is_zero() {
        let alg = models::standard_algebroid(1);
        let phi = MorphismData::new(
            2,
            |t| vec![t[0] + t[1]],
            |_t| vec![D1::constant(1.0), D1::constant(1.0)],
        );
        let r = morphism_residual(&alg, &phi, &[0.3, 0.9]).unwrap();
        assert_eq!(r.anchor_norm(), 0.0);
        assert_eq!(r.bracket_norm(), 0.0);
    }

    #[test]
    fn morphism_bracket_residual_on_so3_is_cross_product() {
        let so3 = models::so3();
        let c1 = [1.0, 2.0, 0.5];
        let c2 = [0.3, -1.0, 2.0];
        let phi = MorphismData::new(
            2,
            |_t| vec![],
            move |_t| {
                (0..3)
                    .flat_map(|a| vec![D1::constant(c1[a]), D1::constant(c2[a])])
                    .collect()
            },
        );
        let r = morphism_residual(&so3, &phi, &[0.0, 0.0]).unwrap();
        // C^α_{βγ} φ^β_2 φ^γ_1 = (c2 × c1)^α for (A, B) = (1, 2).
        let cross = [
            c2[1] * c1[2] - c2[2] * c1[1],
            c2[2] * c1[0] - c2[0] * c1[2],
            c2[0] * c1[1] - c2[1] * c1[0],
        ];
        for a in 0..3 {
            assert!((r.bracket_res[a][(0, 1)] - cross[a]).abs() < 1e-14);
            assert!((r.bracket_res[a][(1, 0)] + cross[a]).abs() < 1e-14);
            assert_eq!(r.bracket_res[a][(0, 0)], 0.0);
        }
    }

    #[test]
    fn k_one_morphism_bracket_residual_is_trivial() {
        let so3 = models::so3();
        let phi = MorphismData::new(
            1,
            |_t| vec![],
            |t| vec![t[0], t[0] * t[0], D1::constant(2.0)],
        );
        let r = morphism_residual(&so3, &phi, &[0.4]).unwrap();
        assert_eq!(r.bracket_norm(), 0.0);
    }
}
