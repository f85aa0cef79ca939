//! Integrator cross-check: fixed-step RK4 against exact matrix-exponential
//! propagation of the affine subsystems, plus the measured RK4
//! convergence order on a switch-free run.
//!
//! Run with: cargo run --example exact_vs_rk4

use switchstab::linalg::v_norm;
use switchstab::linalg::v_sub;
use switchstab::switched::{simulate, SimOptions, SwitchingLaw};
use switchstab::wtgsc::WtGscParams;

fn main() -> switchstab::Result<()> {
    let params = WtGscParams::default();
    let mut system = params.build_system(0.0, 0.0)?;
    system.law = SwitchingLaw::FixedMode(2);
    let x0 = [0.3, 0.4];

    // RK4 vs exact at the default step
    let rk4 = simulate(&system, x0, 2, &SimOptions::default())?;
    let exact = simulate(
        &system,
        x0,
        2,
        &SimOptions {
            exact_propagation: true,
            ..SimOptions::default()
        },
    )?;
    let err = v_norm(v_sub(rk4.final_sample().x, exact.final_sample().x));
    println!("dt = 1e-4: |x_rk4(T) - x_exact(T)| = {err:.3e}");

    // convergence order from step halving
    println!("\n  dt        error        order");
    let mut prev: Option<f64> = None;
    for k in 0..5 {
        let dt = 1e-3 / 2f64.powi(k);
        let opts = SimOptions {
            dt,
            t_end: 0.1,
            ..SimOptions::default()
        };
        let approx = simulate(&system, x0, 2, &opts)?;
        let reference = simulate(
            &system,
            x0,
            2,
            &SimOptions {
                exact_propagation: true,
                ..opts
            },
        )?;
        let e = v_norm(v_sub(approx.final_sample().x, reference.final_sample().x));
        let order = prev.map(|p: f64| (p / e).log2());
        match order {
            Some(o) => println!("  {dt:.1e}   {e:.3e}    {o:.2}"),
            None => println!("  {dt:.1e}   {e:.3e}    -"),
        }
        prev = Some(e);
    }
    println!("\n(RK4 should show order ~4 until rounding error dominates)");
    Ok(())
}
