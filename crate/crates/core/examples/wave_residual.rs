//! Euler-Lagrange residual of an exact wave solution and its convergence.

use afields::grid::{convergence_study, Stencil};
use afields::lagrangian::euler_lagrange_report;
use afields::{models, Result};

fn main() -> Result<()> {
    let sys = models::wave_lagrangian();
    let spacings = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
    let report = convergence_study(&spacings, |h| {
        let field = models::wave_exact_field((1.0 / h).round() as usize)?;
        let r = euler_lagrange_report(&sys, &field, Stencil::Central)?;
        println!(
            "h = {h:<9} el L∞ {:.3e}  anchor L∞ {:.1e}",
            r.el.linf, r.anchor.linf
        );
        Ok(r.el)
    })?;
    println!(
        "fitted order {:.3}, certified {}",
        report.order.unwrap_or(f64::NAN),
        report.certified
    );
    Ok(())
}
