//! Particle swarm maximization of the stability index, full space versus
//! the dominant four-parameter subset identified by sensitivity analysis.
//!
//! Run with: cargo run --release --example optimize_parameters

use switchstab::pso::{pso_optimize, PsoConfig};
use switchstab::sensitivity::{wtgsc_mu_model, ParameterSpace};
use switchstab::stability::INVALID_FITNESS;
use switchstab::wtgsc::WtGscParams;

fn main() -> switchstab::Result<()> {
    let space = ParameterSpace::wtgsc_table2();
    let base = WtGscParams::default();
    let model = wtgsc_mu_model(&space, base);
    let fitness = |x: &[f64]| model(x).unwrap_or(INVALID_FITNESS);

    let full_cfg = PsoConfig::with_seed(11);
    let full = pso_optimize(&space, &fitness, &full_cfg)?;
    println!(
        "full space:      best mu = {:.3} ({} evaluations, {} iterations)",
        full.best_fitness, full.evaluations, full.iterations
    );

    let mut sub_cfg = PsoConfig::with_seed(11);
    sub_cfg.subset_mask = Some(vec![
        "K_pd".into(),
        "K_id".into(),
        "K_iq".into(),
        "L_g".into(),
    ]);
    sub_cfg.baseline = Some(vec![
        base.k_pd, base.k_pq, base.k_id, base.k_iq, base.k_1, base.l_g, base.r, base.l,
    ]);
    let sub = pso_optimize(&space, &fitness, &sub_cfg)?;
    println!(
        "dominant subset: best mu = {:.3} ({} evaluations, {} iterations)",
        sub.best_fitness, sub.evaluations, sub.iterations
    );

    println!("\nbest full-space parameters:");
    for (name, value) in space.names.iter().zip(&full.best_position) {
        println!("  {name:<5} = {value:.6}");
    }
    println!("\nconvergence history (global best per iteration):");
    for (i, v) in full.history.iter().enumerate().step_by(4) {
        println!("  iter {i:>3}: {v:.3}");
    }
    Ok(())
}
