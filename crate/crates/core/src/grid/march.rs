//! Explicit marching in `t¹` for the models whose field equations are
//! evolutionary in that direction. The second axis is periodic and
//! differentiated with central differences; time stepping is leapfrog
//! started by one midpoint step.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{Grid, GridField, Layout};
use crate::algebroid::StructureTensor;
use crate::error::{check_len, Error, Result};
use crate::prolongation::Side;

/// Growth of `max |u|` over its initial value that aborts a march.
pub const GROWTH_LIMIT: f64 = 1e6;

/// Model-specific first-order system in `t¹`.
#[derive(Clone, Debug)]
pub enum Evolution {
    /// `L = ½(y₁² − y₂²)` on the standard algebroid over `ℝ`.
    Wave,
    /// `L = ½ Σ_A s_A y_Aᵀ I y_A` on `⊕² g`; evolutionary when `s₁ s₂ < 0`.
    EulerPoincare {
        algebra: StructureTensor,
        inertia: DMatrix<f64>,
        signs: [f64; 2],
    },
    /// Sigma model with constant bivector, marched in the gauge `∂₁p¹ = 0`.
    Sigma { lambda: DMatrix<f64> },
    /// Euclidean harmonic maps: elliptic, never marched.
    HarmonicMap,
}

impl Evolution {
    fn layout(&self) -> Result<Layout> {
        let (n, m) = match self {
            Evolution::Wave => (1, 1),
            Evolution::EulerPoincare {
                algebra,
                inertia,
                signs,
            } => {
                if signs[0] * signs[1] >= 0.0 {
                    return Err(Error::NonEvolutionary(
                        "Euler-Poincaré system needs slot signs of opposite sign".into(),
                    ));
                }
                check_len("inertia rows", algebra.rank, inertia.nrows())?;
                check_len("inertia columns", algebra.rank, inertia.ncols())?;
                (0, algebra.rank)
            }
            Evolution::Sigma { lambda } => {
                let n = lambda.nrows();
                check_len("bivector columns", n, lambda.ncols())?;
                if (lambda + lambda.transpose()).amax() > 1e-12 {
                    return Err(Error::Invalid("bivector must be antisymmetric".into()));
                }
                (n, n)
            }
            Evolution::HarmonicMap => {
                return Err(Error::NonEvolutionary(
                    "harmonic maps give an elliptic system".into(),
                ))
            }
        };
        Ok(Layout {
            side: Side::Lagrangian,
            n,
            m,
            k: 2,
        })
    }
}

impl Evolution {
    /// Smooth periodic data on one `t¹` slice of `points` nodes with
    /// `h₂ = 1/points`, satisfying the unenforced `t²` constraint.
    pub fn sample_initial(&self, points: usize) -> Result<GridField> {
        let layout = self.layout()?;
        let h = 1.0 / points as f64;
        let grid = Grid::new(
            vec![1, points],
            vec![h, h],
            vec![0.0, 0.0],
            vec![false, true],
        )?;
        let w = std::f64::consts::TAU;
        GridField::from_fn(grid, layout, |t| {
            let s = w * t[1];
            match self {
                // φ = sin(2π t²) + ½ cos(2π t²), at rest in t¹.
                Evolution::Wave => {
                    vec![s.sin() + 0.5 * s.cos(), 0.0, w * (s.cos() - 0.5 * s.sin())]
                }
                Evolution::EulerPoincare { algebra, .. } => {
                    let mut u = vec![0.0; 2 * algebra.rank];
                    for al in 0..algebra.rank {
                        let a = al as f64;
                        u[2 * al] = 0.3 * (s + a).sin();
                        u[2 * al + 1] = 0.2 * (s + 2.0 * a).cos();
                    }
                    u
                }
                // q = 0, p² = 0, p¹ periodic.
                Evolution::Sigma { lambda } => {
                    let n = lambda.nrows();
                    let mut u = vec![0.0; 3 * n];
                    for a in 0..n {
                        u[n + 2 * a] = (s + a as f64).cos();
                    }
                    u
                }
                Evolution::HarmonicMap => unreachable!(),
            }
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MarchReport {
    pub steps: usize,
    pub h1: f64,
    pub h2: f64,
    pub cfl: f64,
    /// `max |u|` over the run divided by `max(max |u⁰|, 1)`.
    pub growth: f64,
    /// L∞ of the unenforced `t²` constraint per level.
    pub constraint_drift: Vec<f64>,
}

type Slice = Vec<Vec<f64>>;

struct Stepper<'a> {
    evo: &'a Evolution,
    layout: Layout,
    h2: f64,
    inertia_inv: Option<DMatrix<f64>>,
}

impl Stepper<'_> {
    fn d2(&self, u: &Slice, i: usize, c: usize) -> f64 {
        let len = u.len();
        (u[(i + 1) % len][c] - u[(i + len - 1) % len][c]) / (2.0 * self.h2)
    }

    // y^α_A sits at n + 2α + A.
    fn yi(&self, al: usize, a: usize) -> usize {
        self.layout.n + 2 * al + a
    }

    fn rhs(&self, u: &Slice) -> Slice {
        let (n, m) = (self.layout.n, self.layout.m);
        let mut out = vec![vec![0.0; self.layout.width()]; u.len()];
        for (i, du) in out.iter_mut().enumerate() {
            let p = &u[i];
            match self.evo {
                Evolution::Wave => {
                    du[0] = p[self.yi(0, 0)];
                    du[self.yi(0, 0)] = self.d2(u, i, self.yi(0, 1));
                    du[self.yi(0, 1)] = self.d2(u, i, self.yi(0, 0));
                }
                Evolution::EulerPoincare {
                    algebra,
                    inertia,
                    signs,
                } => {
                    let y = |al: usize, a: usize| p[self.yi(al, a)];
                    let mut rhs = vec![0.0; m];
                    for (al, r) in rhs.iter_mut().enumerate() {
                        for c in 0..2 {
                            for b in 0..m {
                                for g in 0..m {
                                    let cc = algebra.get(g, b, al);
                                    if cc != 0.0 {
                                        let mu: f64 =
                                            (0..m).map(|d| inertia[(g, d)] * y(d, c)).sum();
                                        *r += y(b, c) * cc * signs[c] * mu;
                                    }
                                }
                            }
                        }
                        let idy2: f64 = (0..m)
                            .map(|d| inertia[(al, d)] * self.d2(u, i, self.yi(d, 1)))
                            .sum();
                        *r -= signs[1] * idy2;
                    }
                    let inv = self.inertia_inv.as_ref().expect("inertia inverse");
                    for al in 0..m {
                        du[self.yi(al, 0)] =
                            (0..m).map(|d| inv[(al, d)] * rhs[d]).sum::<f64>() / signs[0];
                        let mut v = self.d2(u, i, self.yi(al, 0));
                        for b in 0..m {
                            for g in 0..m {
                                v += algebra.get(al, b, g) * y(b, 1) * y(g, 0);
                            }
                        }
                        du[self.yi(al, 1)] = v;
                    }
                }
                Evolution::Sigma { lambda } => {
                    for j in 0..n {
                        du[j] = (0..m).map(|a| lambda[(a, j)] * p[self.yi(a, 0)]).sum();
                    }
                    for a in 0..m {
                        du[self.yi(a, 1)] = self.d2(u, i, self.yi(a, 0));
                    }
                }
                Evolution::HarmonicMap => unreachable!(),
            }
        }
        out
    }

    /// L∞ of `y₂ − ∂₂q` (wave) or `∂₂q − Λᵀp²` (sigma).
    fn constraint(&self, u: &Slice) -> f64 {
        let mut worst = 0.0_f64;
        for (i, p) in u.iter().enumerate() {
            match self.evo {
                Evolution::Wave => {
                    worst = worst.max((p[self.yi(0, 1)] - self.d2(u, i, 0)).abs());
                }
                Evolution::Sigma { lambda } => {
                    let (n, m) = (self.layout.n, self.layout.m);
                    for j in 0..n {
                        let rho: f64 = (0..m).map(|a| lambda[(a, j)] * p[self.yi(a, 1)]).sum();
                        worst = worst.max((self.d2(u, i, j) - rho).abs());
                    }
                }
                _ => {}
            }
        }
        worst
    }
}

fn axpy(u: &Slice, s: f64, v: &Slice) -> Slice {
    u.iter()
        .zip(v)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + s * y).collect())
        .collect()
}

fn amax(u: &Slice) -> f64 {
    u.iter().flatten().fold(0.0_f64, |acc, x| {
        if x.is_nan() {
            f64::NAN
        } else {
            acc.max(x.abs())
        }
    })
}

/// Marches `steps` levels of size `h1` from a single `t¹` slice.
///
/// `initial` must have shape `[1, N]` with `N ≥ 3`; its second axis is
/// treated as periodic with period `N h₂`.
pub fn march_evolutionary(
    evo: &Evolution,
    initial: &GridField,
    h1: f64,
    steps: usize,
) -> Result<(GridField, MarchReport)> {
    let layout = evo.layout()?;
    if initial.layout != layout {
        return Err(Error::Invalid(format!(
            "initial data layout {:?} does not match the model ({:?})",
            initial.layout, layout
        )));
    }
    let g = &initial.grid;
    if g.shape[0] != 1 || g.shape[1] < 3 {
        return Err(Error::Invalid(
            "initial data must be one t1 slice with at least 3 nodes".into(),
        ));
    }
    if !(h1 > 0.0 && h1.is_finite()) {
        return Err(Error::Invalid("time step must be positive".into()));
    }
    let inertia_inv = match evo {
        Evolution::EulerPoincare { inertia, .. } => Some(
            inertia
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::Invalid("inertia must be invertible".into()))?,
        ),
        _ => None,
    };
    let width = layout.width();
    let st = Stepper {
        evo,
        layout,
        h2: g.spacing[1],
        inertia_inv,
    };
    let u0: Slice = initial.data.chunks(width).map(|c| c.to_vec()).collect();
    let scale = amax(&u0).max(1.0);
    let mut levels = vec![u0];
    let mut drift = vec![st.constraint(&levels[0])];
    let mut peak = 1.0_f64;
    for level in 1..=steps {
        let cur = &levels[level - 1];
        let next = if level == 1 {
            let mid = axpy(cur, 0.5 * h1, &st.rhs(cur));
            axpy(cur, h1, &st.rhs(&mid))
        } else {
            axpy(&levels[level - 2], 2.0 * h1, &st.rhs(cur))
        };
        let growth = amax(&next) / scale;
        if growth.is_nan() || growth > GROWTH_LIMIT {
            return Err(Error::Unstable { level, growth });
        }
        peak = peak.max(growth);
        drift.push(st.constraint(&next));
        levels.push(next);
    }
    let grid = Grid::new(
        vec![steps + 1, g.shape[1]],
        vec![h1, g.spacing[1]],
        g.origin.clone(),
        vec![false, true],
    )?;
    let data: Vec<f64> = levels.into_iter().flatten().flatten().collect();
    let field = GridField::new(grid, layout, data)?;
    Ok((
        field,
        MarchReport {
            steps,
            h1,
            h2: st.h2,
            cfl: h1 / st.h2,
            growth: peak,
            constraint_drift: drift,
        },
    ))
}
