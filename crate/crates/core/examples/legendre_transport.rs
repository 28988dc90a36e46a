//! Moves an exact wave solution to the Hamiltonian side and checks
//! that it solves Hamilton's equations of the induced Hamiltonian.

use afields::legendre::solution_transport;
use afields::{models, LegendreMap, Result};

fn main() -> Result<()> {
    let map = LegendreMap::new(models::wave_lagrangian());
    for points in [16, 32, 64] {
        let eta = models::wave_exact_field(points)?;
        let (psi, report) = solution_transport(&map, &eta)?;
        println!(
            "{points:>3} points: el L∞ {:.3e}  ham L∞ {:.3e}  failed {}  psi width {}",
            report.el.linf,
            report.ham.linf,
            report.failed_nodes,
            psi.layout.width()
        );
    }
    Ok(())
}
