//! Harmonic maps into SO(3) in the left trivialisation, `y_A = g⁻¹∂_A g`.
//!
//! Fields `y_A = ∂_A u e₃` are flat for any `u`. They solve the field
//! equations exactly when `u` is harmonic.

use afields::grid::{Layout, Stencil};
use afields::lagrangian::euler_lagrange_report;
use afields::{models, Grid, GridField, Result, Side};

fn main() -> Result<()> {
    let sys = models::harmonic_map_lagrangian();
    let grid = Grid::new(
        vec![17, 17],
        vec![1.0 / 16.0; 2],
        vec![0.0, 0.0],
        vec![false, false],
    )?;
    let layout = Layout {
        side: Side::Lagrangian,
        n: 0,
        m: 3,
        k: 2,
    };
    let along_e3 = |du: [f64; 2]| vec![0.0, 0.0, 0.0, 0.0, du[0], du[1]];

    // Re z³ is harmonic, x² + y² is not.
    let harmonic = GridField::from_fn(grid.clone(), layout, |t| {
        let (x, y) = (t[0], t[1]);
        along_e3([3.0 * x * x - 3.0 * y * y, -6.0 * x * y])
    })?;
    let bowl = GridField::from_fn(grid.clone(), layout, |t| along_e3([2.0 * t[0], 2.0 * t[1]]))?;
    // Two directions at once: no longer flat.
    let twisted = GridField::from_fn(grid, layout, |t| vec![1.0, 0.0, 0.0, t[0], 0.0, 0.0])?;
    for (name, field) in [
        ("Re z³", &harmonic),
        ("x²+y²", &bowl),
        ("twisted", &twisted),
    ] {
        let r = euler_lagrange_report(&sys, field, Stencil::Central)?;
        println!(
            "{name:>8}: el L∞ {:.3e}  flatness L∞ {:.3e}",
            r.el.linf, r.morphism.linf
        );
    }
    Ok(())
}
