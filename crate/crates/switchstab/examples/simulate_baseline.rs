//! Repeated low-voltage ride-through under the baseline parameter set.
//!
//! The normal-operation equilibrium sits just below the LVRT threshold,
//! so the converter keeps re-entering LVRT: the grid-connected voltage
//! oscillates across the threshold in a sustained limit cycle.
//!
//! Run with: cargo run --example simulate_baseline

use switchstab::switched::{oscillation_metrics, simulate, SimOptions};
use switchstab::wtgsc::WtGscParams;

fn main() -> switchstab::Result<()> {
    let params = WtGscParams::default();
    // hysteresis on the LVRT exit threshold; without it the trajectory
    // slides along the switching surface instead of cycling
    let system = params.build_system(0.044, 0.0)?;

    let x0 = [params.i_d1, 0.0]; // start at the normal equilibrium
    let traj = simulate(&system, x0, 1, &SimOptions::default())?;

    println!("samples: {}", traj.samples.len());
    println!("switching events: {}", traj.events.len());
    for ev in traj.events.iter().take(6) {
        println!(
            "  t = {:.4} s: mode {} -> {}",
            ev.t_switch, ev.from_mode, ev.to_mode
        );
    }
    if traj.events.len() > 6 {
        println!("  ...");
    }

    let m = oscillation_metrics(&traj);
    println!("converged: {}", m.converged);
    if let Some(p) = m.mean_period {
        println!("mean switching period: {p:.4} s");
    }
    if let Some((lo, hi)) = m.v_g_range {
        println!("v_g range: [{lo:.4}, {hi:.4}] p.u. (threshold {})", params.v_lvrt);
    }

    // coarse voltage timeline
    let derived = traj.derived.as_ref().expect("output map present");
    println!("\n  t (s)    v_g     mode");
    for (s, &(vg, _, _)) in traj.samples.iter().zip(derived).step_by(2000) {
        println!("  {:5.2}  {vg:.4}   {}", s.t, s.sigma);
    }
    Ok(())
}
