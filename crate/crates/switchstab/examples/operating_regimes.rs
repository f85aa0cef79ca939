//! The three operating regimes of the converter, decided by the gains
//! and the switching law:
//!
//! * repeated LVRT — both equilibria virtual, sustained oscillation;
//! * blocked LVRT — guard disabled, mode 1 settles on its equilibrium;
//! * continuous LVRT — larger proportional gains damp the transient so
//!   the trajectory stays inside the (hysteretic) LVRT region, whose
//!   equilibrium is then regular.
//!
//! Run with: cargo run --example operating_regimes

use switchstab::switched::{
    classify_equilibrium, oscillation_metrics, simulate, SimOptions, SwitchingLaw,
};
use switchstab::wtgsc::{calibrate_grid_voltage, grid_voltage, WtGscParams};

const BAND: f64 = 0.044;

fn main() -> switchstab::Result<()> {
    let opts = SimOptions::default();

    // 1. repeated LVRT (baseline gains)
    let p = WtGscParams::default();
    let sys = p.build_system(BAND, 0.0)?;
    let traj = simulate(&sys, [p.i_d1, 0.0], 1, &opts)?;
    let m = oscillation_metrics(&traj);
    println!("repeated LVRT:   {} events, converged = {}", m.switch_count, m.converged);
    for mode in 1..=2 {
        let r = classify_equilibrium(&sys, mode)?;
        println!(
            "  mode {mode} equilibrium ({:.3}, {:.3}), v_g = {:.4}: {:?}",
            r.x_star[0],
            r.x_star[1],
            grid_voltage(&p, r.x_star),
            r.kind
        );
    }

    // 2. blocked LVRT (switching disabled)
    let mut blocked = sys.clone();
    blocked.law = SwitchingLaw::FixedMode(1);
    let traj = simulate(&blocked, [0.6, 0.3], 1, &opts)?;
    let xf = traj.final_sample().x;
    println!(
        "blocked LVRT:    settles at ({:.3}, {:.3}), v_g = {:.4}",
        xf[0],
        xf[1],
        grid_voltage(&p, xf)
    );

    // 3. continuous LVRT (larger proportional gains)
    let mut pc = p;
    pc.k_pd = 0.15;
    pc.k_pq = 0.15;
    pc.v_g_remote = calibrate_grid_voltage(&pc, 0.79)?;
    let sys_c = pc.build_system(BAND, 0.0)?;
    let traj = simulate(&sys_c, [pc.i_d1, 0.0], 1, &opts)?;
    let m = oscillation_metrics(&traj);
    let r = classify_equilibrium(&sys_c, 2)?;
    println!(
        "continuous LVRT: converged = {}, final mode = {}, LVRT equilibrium {:?}",
        m.converged, m.final_mode, r.kind
    );
    Ok(())
}
