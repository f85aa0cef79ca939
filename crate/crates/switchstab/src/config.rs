//! Run configuration (flat INI-style key-value sections) and the
//! pipeline runner behind the `switchstab` binary.
//!
//! Sections: `[params]` (model parameters), `[space]` (sampling bounds,
//! `name = low, high`), `[sim]`, `[stability]`, `[sobol]`, `[pso]`,
//! `[output]`. Unknown sections or keys are errors that name the key.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::linalg::Vec2;
use crate::pso::{pso_optimize, PsoConfig};
use crate::sensitivity::{estimate_indices, InvalidPolicy, ParameterSpace, SobolResult};
use crate::stability::{stability_index, StabilityCertificate};
use crate::switched::{
    classify_equilibrium, oscillation_metrics, simulate, subsystem_equilibrium, SimOptions,
    SwitchingLaw, Trajectory,
};
use crate::wtgsc::{apply_param, calibrate_grid_voltage, WtGscParams};
use crate::{Error, Result};

/// Simulation switching law selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LawChoice {
    Threshold,
    Fixed(usize),
}

#[derive(Clone, Debug)]
pub struct SimSection {
    /// Initial state; `None` means the mode-1 equilibrium.
    pub x0: Option<Vec2>,
    pub sigma0: usize,
    pub t_end: f64,
    pub dt: f64,
    pub hysteresis: f64,
    pub dwell: f64,
    pub law: LawChoice,
    pub exact: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        let o = SimOptions::default();
        Self {
            x0: None,
            sigma0: 1,
            t_end: o.t_end,
            dt: o.dt,
            hysteresis: 0.0,
            dwell: 0.0,
            law: LawChoice::Threshold,
            exact: false,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct StabilitySection {
    /// Report the signed infeasibility margin for infeasible groups.
    pub report_negative: bool,
}

#[derive(Clone, Debug)]
pub struct SobolSection {
    pub m: usize,
    pub policy: InvalidPolicy,
    pub skip: usize,
}

impl Default for SobolSection {
    fn default() -> Self {
        Self {
            m: 1 << 10,
            policy: InvalidPolicy::default(),
            skip: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PsoSection {
    pub swarm_size: usize,
    pub max_iters: usize,
    pub w_start: f64,
    pub w_end: f64,
    pub c1: f64,
    pub c2: f64,
    pub v_max_fraction: f64,
    /// Required for the `pso` subcommand; no wall-clock seeding.
    pub seed: Option<u64>,
    pub subset: Option<Vec<String>>,
}

impl Default for PsoSection {
    fn default() -> Self {
        let c = PsoConfig::with_seed(0);
        Self {
            swarm_size: c.swarm_size,
            max_iters: c.max_iters,
            w_start: c.w_start,
            w_end: c.w_end,
            c1: c.c1,
            c2: c.c2,
            v_max_fraction: c.v_max_fraction,
            seed: None,
            subset: None,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct OutputSection {
    pub directory: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub params: WtGscParams,
    pub space: Option<ParameterSpace>,
    pub sim: SimSection,
    pub stability: StabilitySection,
    pub sobol: SobolSection,
    pub pso: PsoSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: WtGscParams::default(),
            space: None,
            sim: SimSection::default(),
            stability: StabilitySection::default(),
            sobol: SobolSection::default(),
            pso: PsoSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut section = String::from("params");
        let mut target: Option<f64> = Some(0.79);
        let mut space_names: Vec<String> = Vec::new();
        let mut space_bounds: Vec<(f64, f64)> = Vec::new();
        let mut frozen: Vec<(String, f64)> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err_at = |msg: String| Error::Config(format!("line {}: {msg}", lineno + 1));
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                match name {
                    "params" | "space" | "sim" | "stability" | "sobol" | "pso" | "output" => {
                        section = name.to_string();
                    }
                    other => return Err(err_at(format!("unknown section `[{other}]`"))),
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err_at("expected `key = value`".into()))?;
            let key = key.trim();
            let value = value.trim();
            let num = |v: &str| -> Result<f64> {
                v.trim()
                    .parse()
                    .map_err(|_| err_at(format!("bad number `{v}` for `{key}`")))
            };
            match section.as_str() {
                "params" => apply_param(&mut cfg.params, &mut target, key, num(value)?)?,
                "space" => {
                    let parts: Vec<&str> = value.split(',').collect();
                    if parts.len() == 1 {
                        frozen.push((key.to_string(), num(parts[0])?));
                    } else if parts.len() == 2 {
                        space_names.push(key.to_string());
                        space_bounds.push((num(parts[0])?, num(parts[1])?));
                    } else {
                        return Err(err_at(format!(
                            "space entry `{key}` needs `low, high` or a single frozen value"
                        )));
                    }
                }
                "sim" => match key {
                    "x0_d" => {
                        let x = cfg.sim.x0.get_or_insert([0.0, 0.0]);
                        x[0] = num(value)?;
                    }
                    "x0_q" => {
                        let x = cfg.sim.x0.get_or_insert([0.0, 0.0]);
                        x[1] = num(value)?;
                    }
                    "sigma0" => cfg.sim.sigma0 = num(value)? as usize,
                    "t_end" => cfg.sim.t_end = num(value)?,
                    "dt" => cfg.sim.dt = num(value)?,
                    "hysteresis" => cfg.sim.hysteresis = num(value)?,
                    "dwell" => cfg.sim.dwell = num(value)?,
                    "exact" => cfg.sim.exact = value == "true" || value == "1",
                    "law" => {
                        cfg.sim.law = match value {
                            "threshold" => LawChoice::Threshold,
                            "fixed1" => LawChoice::Fixed(1),
                            "fixed2" => LawChoice::Fixed(2),
                            other => {
                                return Err(err_at(format!(
                                    "unknown law `{other}` (threshold|fixed1|fixed2)"
                                )))
                            }
                        }
                    }
                    other => return Err(err_at(format!("unknown sim key `{other}`"))),
                },
                "stability" => match key {
                    "report_negative" => {
                        cfg.stability.report_negative = value == "true" || value == "1"
                    }
                    other => return Err(err_at(format!("unknown stability key `{other}`"))),
                },
                "sobol" => match key {
                    "M" => cfg.sobol.m = num(value)? as usize,
                    "skip" => cfg.sobol.skip = num(value)? as usize,
                    "policy" => {
                        cfg.sobol.policy = if value == "exclude" {
                            InvalidPolicy::ExcludeRow
                        } else if value == "penalize" {
                            InvalidPolicy::default()
                        } else if let Some(v) = value.strip_prefix("penalize:") {
                            InvalidPolicy::Penalize(num(v)?)
                        } else {
                            return Err(err_at(format!(
                                "unknown policy `{value}` (penalize|penalize:<v>|exclude)"
                            )));
                        }
                    }
                    other => return Err(err_at(format!("unknown sobol key `{other}`"))),
                },
                "pso" => match key {
                    "swarm_size" => cfg.pso.swarm_size = num(value)? as usize,
                    "max_iters" => cfg.pso.max_iters = num(value)? as usize,
                    "w_start" => cfg.pso.w_start = num(value)?,
                    "w_end" => cfg.pso.w_end = num(value)?,
                    "c1" => cfg.pso.c1 = num(value)?,
                    "c2" => cfg.pso.c2 = num(value)?,
                    "v_max_fraction" => cfg.pso.v_max_fraction = num(value)?,
                    "seed" => cfg.pso.seed = Some(num(value)? as u64),
                    "subset" => {
                        cfg.pso.subset = Some(
                            value
                                .split(',')
                                .map(|s| s.trim().to_string())
                                .filter(|s| !s.is_empty())
                                .collect(),
                        )
                    }
                    other => return Err(err_at(format!("unknown pso key `{other}`"))),
                },
                "output" => match key {
                    "directory" => cfg.output.directory = Some(PathBuf::from(value)),
                    other => return Err(err_at(format!("unknown output key `{other}`"))),
                },
                _ => unreachable!("section validated above"),
            }
        }

        if let Some(t) = target {
            cfg.params.v_g_remote = calibrate_grid_voltage(&cfg.params, t)?;
        }
        cfg.params.validate()?;
        if !space_names.is_empty() {
            let mut space = ParameterSpace::new(space_names, space_bounds)?;
            for (name, value) in frozen {
                space.frozen.insert(name, value);
            }
            cfg.space = Some(space);
        } else if !frozen.is_empty() {
            return Err(Error::Config(
                "[space] has frozen values but no sampled bounds".into(),
            ));
        }
        Ok(cfg)
    }

    fn space_or_default(&self) -> ParameterSpace {
        self.space
            .clone()
            .unwrap_or_else(ParameterSpace::wtgsc_table2)
    }
}

/// Decimal formatting with 9 significant digits (CSV payloads).
pub fn format_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.9}");
    }
    let digits_before = v.abs().log10().floor() as i32 + 1;
    let decimals = (9 - digits_before).clamp(0, 17) as usize;
    format!("{v:.decimals$}")
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn trajectory_csvs(traj: &Trajectory) -> (String, String) {
    let mut t_csv = String::from("t,i_d,i_q,sigma,v_g,P_g,Q_g\n");
    let derived = traj.derived.as_ref();
    for (i, s) in traj.samples.iter().enumerate() {
        let (vg, pg, qg) = derived
            .map(|d| d[i])
            .unwrap_or((f64::NAN, f64::NAN, f64::NAN));
        t_csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            format_sig(s.t),
            format_sig(s.x[0]),
            format_sig(s.x[1]),
            s.sigma,
            format_sig(vg),
            format_sig(pg),
            format_sig(qg)
        ));
    }
    let mut e_csv = String::from("t_switch,from_mode,to_mode\n");
    for e in &traj.events {
        e_csv.push_str(&format!(
            "{},{},{}\n",
            format_sig(e.t_switch),
            e.from_mode,
            e.to_mode
        ));
    }
    (t_csv, e_csv)
}

fn json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn build_trajectory(cfg: &RunConfig) -> Result<Trajectory> {
    let system = cfg.params.build_system(cfg.sim.hysteresis, cfg.sim.dwell)?;
    let system = match cfg.sim.law {
        LawChoice::Threshold => system,
        LawChoice::Fixed(mode) => {
            let mut s = system;
            s.law = SwitchingLaw::FixedMode(mode);
            s.law.validate(s.subsystems.len())?;
            s
        }
    };
    let x0 = match cfg.sim.x0 {
        Some(x) => x,
        None => subsystem_equilibrium(system.subsystem(1))?,
    };
    let opts = SimOptions {
        dt: cfg.sim.dt,
        t_end: cfg.sim.t_end,
        exact_propagation: cfg.sim.exact,
        ..SimOptions::default()
    };
    simulate(&system, x0, cfg.sim.sigma0, &opts)
}

/// `simulate` subcommand: trajectory.csv, events.csv, metrics.json.
pub fn run_simulate(cfg: &RunConfig, out: &Path) -> Result<()> {
    let traj = build_trajectory(cfg)?;
    let (t_csv, e_csv) = trajectory_csvs(&traj);
    write_atomic(&out.join("trajectory.csv"), &t_csv)?;
    write_atomic(&out.join("events.csv"), &e_csv)?;
    let metrics = oscillation_metrics(&traj);
    write_atomic(&out.join("metrics.json"), &json_pretty(&metrics)?)?;
    Ok(())
}

/// `equilibria` subcommand: equilibria.json with one report per mode.
pub fn run_equilibria(cfg: &RunConfig, out: &Path) -> Result<()> {
    let system = cfg.params.build_system(cfg.sim.hysteresis, cfg.sim.dwell)?;
    let reports: Vec<_> = (1..=system.subsystems.len())
        .map(|mode| classify_equilibrium(&system, mode))
        .collect::<Result<_>>()?;
    write_atomic(&out.join("equilibria.json"), &json_pretty(&reports)?)?;
    Ok(())
}

/// `stability` subcommand: certificate.json.
pub fn run_stability(cfg: &RunConfig, out: &Path) -> Result<StabilityCertificate> {
    let cert = stability_index(&cfg.params)?;
    let mut doc = cert.to_json();
    if !cert.feasible && !cfg.stability.report_negative {
        // suppress the signed relaxation value, report plain infeasibility
        doc["mu"] = serde_json::json!(null);
    }
    write_atomic(
        &out.join("certificate.json"),
        &format!("{}\n", serde_json::to_string_pretty(&doc)?),
    )?;
    Ok(cert)
}

fn sobol_csv(res: &SobolResult) -> String {
    let mut csv = String::from("parameter,S,S_T,S_stderr,ST_stderr\n");
    for i in 0..res.names.len() {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            res.names[i],
            format_sig(res.s[i]),
            format_sig(res.s_t[i]),
            format_sig(res.s_stderr[i]),
            format_sig(res.st_stderr[i])
        ));
    }
    csv
}

/// `sobol` subcommand: sobol.csv and sobol_summary.json.
pub fn run_sobol(cfg: &RunConfig, out: &Path) -> Result<SobolResult> {
    let space = cfg.space_or_default();
    let model = crate::sensitivity::wtgsc_mu_model(&space, cfg.params);
    let res = estimate_indices(&space, model, cfg.sobol.m, cfg.sobol.skip, cfg.sobol.policy)?;
    write_atomic(&out.join("sobol.csv"), &sobol_csv(&res))?;
    let summary = serde_json::json!({
        "M": res.m,
        "evaluations": res.evaluations,
        "invalid_count": res.invalid_count,
        "variance": res.variance,
    });
    write_atomic(
        &out.join("sobol_summary.json"),
        &format!("{}\n", serde_json::to_string_pretty(&summary)?),
    )?;
    Ok(res)
}

/// `pso` subcommand: pso.json and pso_history.csv.
pub fn run_pso(cfg: &RunConfig, out: &Path) -> Result<crate::pso::PsoResult> {
    let seed = cfg.pso.seed.ok_or_else(|| {
        Error::Config("pso requires an explicit seed ([pso] seed = N or --seed)".into())
    })?;
    let space = cfg.space_or_default();
    let baseline: Vec<f64> = space
        .names
        .iter()
        .map(|name| baseline_value(&cfg.params, name))
        .collect::<Result<_>>()?;
    let pso_cfg = PsoConfig {
        swarm_size: cfg.pso.swarm_size,
        max_iters: cfg.pso.max_iters,
        w_start: cfg.pso.w_start,
        w_end: cfg.pso.w_end,
        c1: cfg.pso.c1,
        c2: cfg.pso.c2,
        v_max_fraction: cfg.pso.v_max_fraction,
        seed,
        subset_mask: cfg.pso.subset.clone(),
        baseline: Some(baseline),
    };
    let model = crate::sensitivity::wtgsc_mu_model(&space, cfg.params);
    let fitness =
        |x: &[f64]| model(x).unwrap_or(crate::stability::INVALID_FITNESS);
    let res = pso_optimize(&space, fitness, &pso_cfg)?;

    let best_map: serde_json::Map<String, serde_json::Value> = space
        .names
        .iter()
        .zip(&res.best_position)
        .map(|(n, &v)| (n.clone(), serde_json::json!(v)))
        .collect();
    let doc = serde_json::json!({
        "best_position": best_map,
        "best_fitness": res.best_fitness,
        "iterations": res.iterations,
        "evaluations": res.evaluations,
    });
    write_atomic(
        &out.join("pso.json"),
        &format!("{}\n", serde_json::to_string_pretty(&doc)?),
    )?;
    let mut hist = String::from("iter,best_fitness\n");
    for (i, v) in res.history.iter().enumerate() {
        hist.push_str(&format!("{i},{}\n", format_sig(*v)));
    }
    write_atomic(&out.join("pso_history.csv"), &hist)?;
    Ok(res)
}

fn baseline_value(p: &WtGscParams, name: &str) -> Result<f64> {
    Ok(match name {
        "K_pd" => p.k_pd,
        "K_pq" => p.k_pq,
        "K_id" => p.k_id,
        "K_iq" => p.k_iq,
        "K_1" => p.k_1,
        "L_g" => p.l_g,
        "R" => p.r,
        "L" => p.l,
        "omega" => p.omega,
        "v_G" => p.v_g_remote,
        "v_LVRT" => p.v_lvrt,
        "I_d1" => p.i_d1,
        "I_d2" => p.i_d2,
        "I_max" => p.i_max,
        "q_sign" => p.q_sign,
        other => return Err(Error::Config(format!("unknown parameter key `{other}`"))),
    })
}

/// Bundled fixture configs for the `reproduce` subcommand.
pub mod fixtures {
    /// Baseline group: sustained oscillation across the LVRT threshold.
    pub const BASELINE: &str = "\
[params]
K_pd = 0.10
K_pq = 0.10
K_id = 5.00
K_iq = 5.00
K_1 = 2.00
L_g = 3.25e-4
R = 7.58e-4
L = 1.00e-3
target_normal_voltage = 0.79
[sim]
hysteresis = 0.044
";

    /// Blocked-LVRT regime: the guard is disabled, mode 1 is held.
    pub const BLOCKED_LVRT: &str = "\
[params]
K_pd = 0.10
K_pq = 0.10
K_id = 5.00
K_iq = 5.00
K_1 = 2.00
L_g = 3.25e-4
R = 7.58e-4
L = 1.00e-3
target_normal_voltage = 0.79
[sim]
law = fixed1
x0_d = 0.60
x0_q = 0.30
";

    /// Continuous-LVRT regime: larger proportional gains settle in mode 2.
    pub const CONTINUOUS_LVRT: &str = "\
[params]
K_pd = 0.15
K_pq = 0.15
K_id = 5.00
K_iq = 5.00
K_1 = 2.00
L_g = 3.25e-4
R = 7.58e-4
L = 1.00e-3
target_normal_voltage = 0.79
[sim]
hysteresis = 0.044
";

    /// Optimized group with the largest certified stability index.
    pub const OPTIMUM: &str = "\
[params]
K_pd = 0.20
K_pq = 0.10
K_id = 5.00
K_iq = 5.00
K_1 = 1.68
L_g = 3.25e-4
R = 1.20e-3
L = 8.66e-4
target_normal_voltage = 0.79
";
}

#[derive(Clone, Debug, Serialize)]
pub struct ReproduceCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// `reproduce` subcommand: run the bundled fixtures and write a pass/fail
/// summary. Returns true iff all checks pass.
pub fn run_reproduce(out: &Path) -> Result<bool> {
    let mut checks = Vec::new();
    let mut check = |name: &str, pass: bool, detail: String| {
        checks.push(ReproduceCheck {
            name: name.to_string(),
            pass,
            detail,
        });
    };

    // 1. baseline: sustained oscillation crossing the threshold both ways
    let cfg = RunConfig::parse(fixtures::BASELINE)?;
    let dir = out.join("baseline");
    run_simulate(&cfg, &dir)?;
    run_equilibria(&cfg, &dir)?;
    let traj = build_trajectory(&cfg)?;
    let m = oscillation_metrics(&traj);
    check(
        "baseline_oscillates",
        !m.converged && m.switch_count >= 10,
        format!("converged = {}, events = {}", m.converged, m.switch_count),
    );
    let period_ok = m.mean_period.map_or(false, |p| (0.05..=0.4).contains(&p));
    check(
        "baseline_period_in_band",
        period_ok,
        format!("mean period = {:?} s, band [0.05, 0.4]", m.mean_period),
    );
    let range_ok = m
        .v_g_range
        .map_or(false, |(lo, hi)| lo < cfg.params.v_lvrt && hi > cfg.params.v_lvrt);
    check(
        "baseline_crosses_threshold",
        range_ok,
        format!("v_g range = {:?}, threshold = {}", m.v_g_range, cfg.params.v_lvrt),
    );

    // 2. blocked LVRT: held mode 1 converges to the normal equilibrium
    let cfg = RunConfig::parse(fixtures::BLOCKED_LVRT)?;
    let dir = out.join("blocked_lvrt");
    run_simulate(&cfg, &dir)?;
    let traj = build_trajectory(&cfg)?;
    let m = oscillation_metrics(&traj);
    let xf = traj.final_sample().x;
    let near = (xf[0] - cfg.params.i_d1).abs() < 1e-3 && xf[1].abs() < 1e-3;
    check(
        "blocked_converges_to_normal",
        m.converged && near,
        format!("final state = ({:.4}, {:.4})", xf[0], xf[1]),
    );

    // 3. continuous LVRT: settles in mode 2 with no further events
    let cfg = RunConfig::parse(fixtures::CONTINUOUS_LVRT)?;
    let dir = out.join("continuous_lvrt");
    run_simulate(&cfg, &dir)?;
    run_equilibria(&cfg, &dir)?;
    let traj = build_trajectory(&cfg)?;
    let m = oscillation_metrics(&traj);
    let system = cfg.params.build_system(cfg.sim.hysteresis, cfg.sim.dwell)?;
    let eq2 = classify_equilibrium(&system, 2)?;
    check(
        "continuous_settles_in_lvrt_mode",
        m.converged && m.final_mode == 2 && eq2.kind == crate::switched::EquilibriumKind::Regular,
        format!(
            "converged = {}, final mode = {}, LVRT equilibrium {:?}",
            m.converged, m.final_mode, eq2.kind
        ),
    );

    // 4. optimized group: feasible certificate with a large decay rate
    let cfg = RunConfig::parse(fixtures::OPTIMUM)?;
    let dir = out.join("optimum");
    let cert = run_stability(&cfg, &dir)?;
    let mu_ok = cert.feasible && (36.4..=60.7).contains(&cert.mu);
    check(
        "optimum_certificate_feasible",
        mu_ok,
        format!("feasible = {}, mu = {:.3}", cert.feasible, cert.mu),
    );

    let all_pass = checks.iter().all(|c| c.pass);
    let summary = serde_json::json!({
        "all_pass": all_pass,
        "checks": checks,
    });
    write_atomic(
        &out.join("reproduce_summary.json"),
        &format!("{}\n", serde_json::to_string_pretty(&summary)?),
    )?;
    Ok(all_pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_sig_nine_digits() {
        assert_eq!(format_sig(0.0), "0.000000000");
        assert_eq!(format_sig(1.0), "1.00000000");
        assert_eq!(format_sig(-0.123456789123), "-0.123456789");
        assert_eq!(format_sig(123456.789123), "123456.789");
        assert_eq!(format_sig(1.23e-4), "0.000123000000");
    }

    #[test]
    fn parse_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg.params, WtGscParams::default());
        assert!(cfg.space.is_none());
        assert_eq!(cfg.sim.law, LawChoice::Threshold);
    }

    #[test]
    fn parse_sections() {
        let cfg = RunConfig::parse(
            "\
# comment
[params]
K_pd = 0.15   # inline comment
[space]
K_pd = 0.10, 0.20
K_1 = 1.68
[sim]
law = fixed2
t_end = 0.5
[sobol]
M = 256
policy = exclude
[pso]
seed = 9
subset = K_pd
",
        )
        .unwrap();
        assert_eq!(cfg.params.k_pd, 0.15);
        let space = cfg.space.unwrap();
        assert_eq!(space.names, vec!["K_pd"]);
        assert_eq!(space.frozen.get("K_1"), Some(&1.68));
        assert_eq!(cfg.sim.law, LawChoice::Fixed(2));
        assert_eq!(cfg.sim.t_end, 0.5);
        assert_eq!(cfg.sobol.m, 256);
        assert_eq!(cfg.sobol.policy, InvalidPolicy::ExcludeRow);
        assert_eq!(cfg.pso.seed, Some(9));
        assert_eq!(cfg.pso.subset, Some(vec!["K_pd".to_string()]));
    }

    #[test]
    fn unknown_key_names_it() {
        let err = RunConfig::parse("[params]\nK_px = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("K_px"), "message: {err}");
    }

    #[test]
    fn fixtures_round_trip() {
        for text in [
            fixtures::BASELINE,
            fixtures::BLOCKED_LVRT,
            fixtures::CONTINUOUS_LVRT,
            fixtures::OPTIMUM,
        ] {
            RunConfig::parse(text).unwrap();
        }
    }

    #[test]
    fn pso_without_seed_rejected() {
        let cfg = RunConfig::parse("").unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let err = run_pso(&cfg, tmp.path()).unwrap_err();
        assert!(err.to_string().contains("seed"));
    }

    #[test]
    fn simulate_writes_artifacts() {
        let mut cfg = RunConfig::parse(fixtures::BASELINE).unwrap();
        cfg.sim.t_end = 0.2;
        let tmp = tempfile::tempdir().unwrap();
        run_simulate(&cfg, tmp.path()).unwrap();
        for f in ["trajectory.csv", "events.csv", "metrics.json"] {
            assert!(tmp.path().join(f).exists(), "{f} missing");
        }
        let csv = std::fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
        assert!(csv.starts_with("t,i_d,i_q,sigma,v_g,P_g,Q_g\n"));
    }
}
