//! Common quadratic Lyapunov certificates for the switched converter.
//!
//! The certificate is built at the boundary equilibrium on the switching
//! surface; its scalar index mu is the certified exponential decay rate.
//! The baseline group is infeasible (it sustains a limit cycle), while
//! the optimized group certifies a large decay rate, which the audit
//! then verifies by simulation.
//!
//! Run with: cargo run --example stability_certificate

use switchstab::stability::{audit_certificate, stability_index};
use switchstab::wtgsc::{calibrate_grid_voltage, WtGscParams};

fn optimized_group() -> switchstab::Result<WtGscParams> {
    let mut p = WtGscParams::default();
    p.k_pd = 0.20;
    p.k_pq = 0.10;
    p.k_1 = 1.68;
    p.r = 1.20e-3;
    p.l = 8.66e-4;
    p.v_g_remote = calibrate_grid_voltage(&p, 0.79)?;
    Ok(p)
}

fn main() -> switchstab::Result<()> {
    for (label, params) in [
        ("baseline", WtGscParams::default()),
        ("optimized", optimized_group()?),
    ] {
        let cert = stability_index(&params)?;
        println!("{label}:");
        println!(
            "  boundary equilibrium x_e = ({:.4}, {:.4}) at lambda1 = {:.4}",
            cert.x_e[0], cert.x_e[1], cert.lambda1
        );
        println!("  feasible = {}, mu = {:.4}", cert.feasible, cert.mu);
        if cert.feasible {
            let system = params.build_system(0.0, 0.0)?;
            let audit = audit_certificate(&cert, &system, &params, 7)?;
            println!(
                "  audit: combination residual {:.1e}, P eigenvalues ({:.2e}, {:.2e})",
                audit.residual_combination, audit.p_eigenvalues.0, audit.p_eigenvalues.1
            );
            println!(
                "  audit: argmin-law convergence {}/{}, threshold-law {}/{}",
                audit.argmin_converged,
                audit.argmin_total,
                audit.threshold_converged,
                audit.threshold_total
            );
        } else {
            println!("  (negative mu is the signed infeasibility relaxation)");
        }
        println!("  certificate JSON: {}", cert.to_json());
        println!();
    }
    Ok(())
}
