//! Poisson sigma model with a constant symplectic bivector.
//!
//! `p^A = ∂_A F`, `q = q₀ − Λ F` solves the field equations for any
//! quadratic `F`, so the central-difference residual vanishes.

use afields::grid::{Layout, Stencil};
use afields::lagrangian::euler_lagrange_report;
use afields::models::{self, Bivector};
use afields::{Grid, GridField, Result, Side};
use nalgebra::DMatrix;

fn main() -> Result<()> {
    let lam = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    let sys = models::poisson_sigma_lagrangian(Bivector::constant(&lam))?;
    let f = |t: &[f64]| [t[0] * t[1] + 0.5 * t[0] * t[0], t[1] * t[1] - t[0]];
    let df = |t: &[f64]| [[t[1] + t[0], t[0]], [-1.0, 2.0 * t[1]]];

    let grid = Grid::new(
        vec![9, 9],
        vec![0.125, 0.125],
        vec![0.0, 0.0],
        vec![false, false],
    )?;
    let layout = Layout {
        side: Side::Lagrangian,
        n: 2,
        m: 2,
        k: 2,
    };
    let field = GridField::from_fn(grid, layout, |t| {
        let (fv, d) = (f(t), df(t));
        let mut out = vec![0.3 - (lam[(0, 1)] * fv[1]), -0.2 - (lam[(1, 0)] * fv[0])];
        for row in d {
            out.extend(row);
        }
        out
    })?;
    let r = euler_lagrange_report(&sys, &field, Stencil::Central)?;
    println!("interior nodes {}", r.interior_nodes);
    println!(
        "el L∞ {:.1e}  anchor L∞ {:.1e}  bracket L∞ {:.1e}",
        r.el.linf, r.anchor.linf, r.morphism.linf
    );

    // Breaking the anchor condition shows up in the anchor residual only.
    let mut broken = field.clone();
    let w = broken.layout.width();
    for (i, v) in broken.data.iter_mut().enumerate() {
        if i % w == 0 {
            *v += 0.01 * (i / w) as f64;
        }
    }
    let r = euler_lagrange_report(&sys, &broken, Stencil::Central)?;
    println!(
        "perturbed: el L∞ {:.1e}  anchor L∞ {:.1e}",
        r.el.linf, r.anchor.linf
    );
    Ok(())
}
