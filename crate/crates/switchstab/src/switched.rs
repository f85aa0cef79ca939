//! Generic switched affine systems: representation, simulation with
//! switching-event localization, and equilibrium classification.

use serde::{Deserialize, Serialize};

use crate::linalg::{v_is_finite, v_norm, v_sub, Mat2, Vec2};
use crate::{Error, Result};

/// State norm beyond which a run is labeled "voltage collapse".
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// One affine subsystem dx/dt = A x + b.
///
/// `b` stores the constant drive (B_i u_i for the converter model).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AffineSubsystem {
    pub a: Mat2,
    pub b: Vec2,
    /// Mode index, 1-based. Label 0 is reserved for convex combinations.
    pub label: usize,
}

impl AffineSubsystem {
    pub fn new(a: Mat2, b: Vec2, label: usize) -> Self {
        Self { a, b, label }
    }

    /// dx/dt at state x.
    pub fn flow(&self, x: Vec2) -> Vec2 {
        let ax = self.a.mul_vec(x);
        [ax[0] + self.b[0], ax[1] + self.b[1]]
    }
}

/// Affine output map v_g = v_const + coef_d * i_d + coef_q * i_q,
/// with P_g = 1.5 v_g i_d and Q_g = -1.5 v_g i_q.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OutputMap {
    pub v_const: f64,
    pub coef_d: f64,
    pub coef_q: f64,
}

impl OutputMap {
    pub fn voltage(&self, x: Vec2) -> f64 {
        self.v_const + self.coef_d * x[0] + self.coef_q * x[1]
    }

    pub fn power(&self, x: Vec2) -> (f64, f64) {
        let vg = self.voltage(x);
        (1.5 * vg * x[0], -1.5 * vg * x[1])
    }
}

/// Rule selecting the active subsystem.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum SwitchingLaw {
    /// Physical LVRT guard: mode 1 -> 2 when v_g < v_lvrt,
    /// mode 2 -> 1 when v_g >= v_lvrt + hysteresis_band.
    ThresholdOnVoltage {
        v_lvrt: f64,
        hysteresis_band: f64,
        min_dwell: f64,
    },
    /// Stabilizing law: sigma = argmin_i (x - x_e)^T P b_i, ties broken
    /// toward the lowest index. b_list holds b_i = A_i x_e + B_i u_i.
    ArgminLyapunov {
        p: Mat2,
        x_e: Vec2,
        b_list: Vec<Vec2>,
    },
    /// Never switch.
    FixedMode(usize),
}

impl SwitchingLaw {
    pub fn validate(&self, n_subsystems: usize) -> Result<()> {
        match self {
            SwitchingLaw::ThresholdOnVoltage {
                v_lvrt,
                hysteresis_band,
                min_dwell,
            } => {
                if !(*v_lvrt > 0.0 && *v_lvrt < 1.0) {
                    return Err(Error::ParamDomain(format!(
                        "v_LVRT must lie in (0, 1), got {v_lvrt}"
                    )));
                }
                if *hysteresis_band < 0.0 || *min_dwell < 0.0 {
                    return Err(Error::ParamDomain(
                        "hysteresis_band and min_dwell must be nonnegative".into(),
                    ));
                }
                Ok(())
            }
            SwitchingLaw::ArgminLyapunov { p, b_list, .. } => {
                let (lo, _) = p.sym_eigenvalues();
                if lo <= 0.0 {
                    return Err(Error::ParamDomain(
                        "argmin law requires symmetric positive definite P".into(),
                    ));
                }
                if b_list.len() != n_subsystems {
                    return Err(Error::ParamDomain(format!(
                        "b_list length {} != subsystem count {}",
                        b_list.len(),
                        n_subsystems
                    )));
                }
                Ok(())
            }
            SwitchingLaw::FixedMode(i) => {
                if *i == 0 || *i > n_subsystems {
                    return Err(Error::ParamDomain(format!("fixed mode {i} out of range")));
                }
                Ok(())
            }
        }
    }
}

/// Indexed family of affine subsystems plus a switching law.
#[derive(Clone, Debug)]
pub struct SwitchedAffineSystem {
    pub subsystems: Vec<AffineSubsystem>,
    pub law: SwitchingLaw,
    pub output_map: Option<OutputMap>,
}

impl SwitchedAffineSystem {
    pub fn new(
        subsystems: Vec<AffineSubsystem>,
        law: SwitchingLaw,
        output_map: Option<OutputMap>,
    ) -> Result<Self> {
        if subsystems.is_empty() {
            return Err(Error::ParamDomain("need at least one subsystem".into()));
        }
        for (i, sub) in subsystems.iter().enumerate() {
            if sub.label != i + 1 {
                return Err(Error::ParamDomain(format!(
                    "subsystem labels must be 1..n consecutively; index {} has label {}",
                    i, sub.label
                )));
            }
            if !sub.a.is_finite() || !v_is_finite(sub.b) {
                return Err(Error::ParamDomain(format!(
                    "subsystem {} has non-finite entries",
                    sub.label
                )));
            }
        }
        law.validate(subsystems.len())?;
        Ok(Self {
            subsystems,
            law,
            output_map,
        })
    }

    pub fn subsystem(&self, mode: usize) -> &AffineSubsystem {
        &self.subsystems[mode - 1]
    }
}

/// One trajectory sample.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vec2,
    pub sigma: usize,
}

/// One mode transition.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub t_switch: f64,
    pub from_mode: usize,
    pub to_mode: usize,
    /// True when the crossing time was localized by bisection to the
    /// event tolerance; false for sampled (sliding-chatter) switches
    /// fired at a step boundary.
    pub localized: bool,
}

/// Time-stamped state/mode history with derived electrical signals.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<SwitchEvent>,
    /// Per-sample (v_g, P_g, Q_g) when the system has an output map.
    pub derived: Option<Vec<(f64, f64, f64)>>,
}

impl Trajectory {
    pub fn final_sample(&self) -> &Sample {
        self.samples.last().expect("trajectory is non-empty")
    }

    /// State at time t by linear interpolation between samples.
    pub fn state_at(&self, t: f64) -> Vec2 {
        let samples = &self.samples;
        match samples.binary_search_by(|s| s.t.partial_cmp(&t).unwrap()) {
            Ok(i) => samples[i].x,
            Err(0) => samples[0].x,
            Err(i) if i >= samples.len() => samples[samples.len() - 1].x,
            Err(i) => {
                let (a, b) = (&samples[i - 1], &samples[i]);
                let w = (t - a.t) / (b.t - a.t);
                [
                    a.x[0] + w * (b.x[0] - a.x[0]),
                    a.x[1] + w * (b.x[1] - a.x[1]),
                ]
            }
        }
    }
}

/// Integration and event-handling options for [`simulate`].
#[derive(Clone, Copy, Debug)]
pub struct SimOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Bisection tolerance on the switching time, seconds.
    pub event_tol: f64,
    /// Abort with [`Error::EventOverflow`] past this many events.
    pub max_events: usize,
    /// Propagate each step with the exact affine matrix exponential
    /// instead of RK4. Used as the integration oracle in tests.
    pub exact_propagation: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            t_end: 2.0,
            event_tol: 1e-9,
            max_events: 1_000_000,
            exact_propagation: false,
        }
    }
}

fn rk4_step(sub: &AffineSubsystem, x: Vec2, h: f64) -> Vec2 {
    let k1 = sub.flow(x);
    let k2 = sub.flow([x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1]]);
    let k3 = sub.flow([x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1]]);
    let k4 = sub.flow([x[0] + h * k3[0], x[1] + h * k3[1]]);
    [
        x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

fn propagate(sub: &AffineSubsystem, x: Vec2, h: f64, exact: bool) -> Vec2 {
    if exact {
        sub.a.affine_step_exact(sub.b, x, h)
    } else {
        rk4_step(sub, x, h)
    }
}

/// Equilibrium x* = -A^{-1} b of one subsystem.
pub fn subsystem_equilibrium(sub: &AffineSubsystem) -> Result<Vec2> {
    let scale = sub.a.max_abs();
    let tol = 1e-12 * scale * scale;
    let x = sub
        .a
        .solve([-sub.b[0], -sub.b[1]], tol)
        .ok_or(Error::SingularMatrix {
            label: sub.label,
            det: sub.a.det(),
        })?;
    debug_assert!(v_norm(crate::linalg::v_add(sub.a.mul_vec(x), sub.b)) <= 1e-9);
    Ok(x)
}

/// Regular / virtual / boundary classification of a mode's equilibrium
/// against the voltage-threshold switching surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    Regular,
    Virtual,
    Boundary,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub mode: usize,
    pub x_star: Vec2,
    pub kind: EquilibriumKind,
    /// Signed distance to the switching surface; positive means the
    /// equilibrium lies inside its own mode's active region.
    pub region_margin: f64,
}

/// Classify the equilibrium of `mode` for a threshold-switched system.
pub fn classify_equilibrium(system: &SwitchedAffineSystem, mode: usize) -> Result<EquilibriumReport> {
    let (v_lvrt, band) = match &system.law {
        SwitchingLaw::ThresholdOnVoltage {
            v_lvrt,
            hysteresis_band,
            ..
        } => (*v_lvrt, *hysteresis_band),
        _ => {
            return Err(Error::ParamDomain(
                "equilibrium classification requires a ThresholdOnVoltage law".into(),
            ))
        }
    };
    let map = system.output_map.as_ref().ok_or(Error::MissingOutputMap)?;
    let x_star = subsystem_equilibrium(system.subsystem(mode))?;
    let vg = map.voltage(x_star);
    // Sticky regions: mode 1 holds while v_g >= v_LVRT, mode 2 holds
    // while v_g < v_LVRT + band (hysteretic exit threshold).
    let region_margin = match mode {
        1 => vg - v_lvrt,
        2 => v_lvrt + band - vg,
        _ => {
            return Err(Error::ParamDomain(format!(
                "threshold law defines regions for modes 1 and 2 only, got {mode}"
            )))
        }
    };
    let kind = if region_margin.abs() <= 1e-9 {
        EquilibriumKind::Boundary
    } else if region_margin > 0.0 {
        EquilibriumKind::Regular
    } else {
        EquilibriumKind::Virtual
    };
    Ok(EquilibriumReport {
        mode,
        x_star,
        kind,
        region_margin,
    })
}

/// Convex combination (sum lambda_i A_i, sum lambda_i b_i).
pub fn convex_combination(
    subsystems: &[AffineSubsystem],
    weights: &[f64],
) -> Result<AffineSubsystem> {
    if subsystems.len() != weights.len() {
        return Err(Error::WeightDomain(format!(
            "{} weights for {} subsystems",
            weights.len(),
            subsystems.len()
        )));
    }
    if weights.iter().any(|&w| w < 0.0) {
        return Err(Error::WeightDomain("negative weight".into()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::WeightDomain(format!("weights sum to {sum}")));
    }
    let mut a = Mat2::ZERO;
    let mut b = [0.0, 0.0];
    for (sub, &w) in subsystems.iter().zip(weights) {
        a = a.add(&sub.a.scale(w));
        b[0] += w * sub.b[0];
        b[1] += w * sub.b[1];
    }
    Ok(AffineSubsystem::new(a, b, 0))
}

/// Which transition, if any, the threshold law demands at state x in `mode`.
fn threshold_demand(map: &OutputMap, v_lvrt: f64, band: f64, mode: usize, x: Vec2) -> Option<usize> {
    let vg = map.voltage(x);
    match mode {
        1 if vg < v_lvrt => Some(2),
        2 if vg >= v_lvrt + band => Some(1),
        _ => None,
    }
}

fn argmin_mode(p: &Mat2, x_e: Vec2, b_list: &[Vec2], x: Vec2) -> usize {
    let xi = v_sub(x, x_e);
    let pxi = p.transpose().mul_vec(xi); // P symmetric; transpose for clarity
    let mut best = 0usize;
    let mut best_val = f64::INFINITY;
    for (i, b) in b_list.iter().enumerate() {
        let val = pxi[0] * b[0] + pxi[1] * b[1];
        if val < best_val {
            best_val = val;
            best = i;
        }
    }
    best + 1
}

/// Simulate the switched system from (x0, sigma0).
///
/// Fixed-step integration (RK4 by default, exact matrix exponential when
/// `opts.exact_propagation` is set). Under the threshold law the guard is
/// evaluated at each step end; a sign change within the step is localized
/// by bisection to `opts.event_tol`. A switch demanded already at a step
/// start (sliding chatter right after an event) fires at the step end.
/// Under the argmin law the active mode is recomputed at every step
/// boundary with ties broken toward the lowest index.
pub fn simulate(
    system: &SwitchedAffineSystem,
    x0: Vec2,
    sigma0: usize,
    opts: &SimOptions,
) -> Result<Trajectory> {
    if opts.dt <= 0.0 || opts.t_end <= 0.0 {
        return Err(Error::ParamDomain("dt and t_end must be positive".into()));
    }
    if !v_is_finite(x0) {
        return Err(Error::ParamDomain("x0 must be finite".into()));
    }
    if sigma0 == 0 || sigma0 > system.subsystems.len() {
        return Err(Error::ParamDomain(format!("sigma0 = {sigma0} out of range")));
    }

    let mut t = 0.0_f64;
    let mut x = x0;
    let mut mode = sigma0;
    let mut traj = Trajectory {
        samples: Vec::with_capacity((opts.t_end / opts.dt) as usize + 2),
        events: Vec::new(),
        derived: system.output_map.map(|_| Vec::new()),
    };

    // Initial-level check: the starting state may already violate its
    // mode's region (e.g. starting at a virtual equilibrium).
    match &system.law {
        SwitchingLaw::ThresholdOnVoltage {
            v_lvrt,
            hysteresis_band,
            ..
        } => {
            let map = system.output_map.as_ref().ok_or(Error::MissingOutputMap)?;
            if let Some(to) = threshold_demand(map, *v_lvrt, *hysteresis_band, mode, x) {
                traj.events.push(SwitchEvent {
                    t_switch: 0.0,
                    from_mode: mode,
                    to_mode: to,
                    localized: false,
                });
                mode = to;
            }
        }
        SwitchingLaw::ArgminLyapunov { p, x_e, b_list } => {
            let want = argmin_mode(p, *x_e, b_list, x);
            if want != mode {
                traj.events.push(SwitchEvent {
                    t_switch: 0.0,
                    from_mode: mode,
                    to_mode: want,
                    localized: false,
                });
                mode = want;
            }
        }
        SwitchingLaw::FixedMode(i) => mode = *i,
    }

    push_sample(&mut traj, system, t, x, mode);
    let mut last_event_t = f64::NEG_INFINITY;
    if let Some(ev) = traj.events.last() {
        last_event_t = ev.t_switch;
    }

    let end = opts.t_end;
    while t < end - 1e-15 * end.max(1.0) {
        let h = opts.dt.min(end - t);
        let sub = system.subsystem(mode);
        let x_new = propagate(sub, x, h, opts.exact_propagation);
        let t_new = t + h;
        if !v_is_finite(x_new) || v_norm(x_new) > DIVERGENCE_LIMIT {
            return Err(Error::NonFiniteState {
                t: t_new,
                limit: DIVERGENCE_LIMIT,
            });
        }

        match &system.law {
            SwitchingLaw::ThresholdOnVoltage {
                v_lvrt,
                hysteresis_band,
                min_dwell,
            } => {
                let map = system.output_map.as_ref().ok_or(Error::MissingOutputMap)?;
                let dwell_ok = t_new - last_event_t >= *min_dwell;
                let demand = if dwell_ok {
                    threshold_demand(map, *v_lvrt, *hysteresis_band, mode, x_new)
                } else {
                    None
                };
                if let Some(to) = demand {
                    // Threshold value whose crossing defines this event.
                    let thr = if mode == 1 {
                        *v_lvrt
                    } else {
                        *v_lvrt + *hysteresis_band
                    };
                    let g0 = map.voltage(x) - thr;
                    // Treat a step start within the localization residual of
                    // the surface as "already crossed"; otherwise sliding
                    // motion would re-bisect with a near-zero time advance.
                    let eps = 1e-6;
                    let already = if mode == 1 { g0 < eps } else { g0 >= -eps };
                    let (tau, localized) = if already {
                        // Condition held at step start (only possible right
                        // after a switch); fire at the step end.
                        (h, false)
                    } else {
                        (
                            bisect_crossing(sub, x, h, opts, |xs| map.voltage(xs) - thr),
                            true,
                        )
                    };
                    let t_ev = t + tau;
                    let x_ev = propagate(sub, x, tau, opts.exact_propagation);
                    if traj.events.len() >= opts.max_events {
                        return Err(Error::EventOverflow {
                            max_events: opts.max_events,
                            t: t_ev,
                        });
                    }
                    traj.events.push(SwitchEvent {
                        t_switch: t_ev,
                        from_mode: mode,
                        to_mode: to,
                        localized,
                    });
                    mode = to;
                    last_event_t = t_ev;
                    t = t_ev;
                    x = x_ev;
                    push_sample(&mut traj, system, t, x, mode);
                    continue;
                }
            }
            SwitchingLaw::ArgminLyapunov { p, x_e, b_list } => {
                let want = argmin_mode(p, *x_e, b_list, x_new);
                if want != mode {
                    if traj.events.len() >= opts.max_events {
                        return Err(Error::EventOverflow {
                            max_events: opts.max_events,
                            t: t_new,
                        });
                    }
                    traj.events.push(SwitchEvent {
                        t_switch: t_new,
                        from_mode: mode,
                        to_mode: want,
                        localized: false,
                    });
                    mode = want;
                    last_event_t = t_new;
                }
            }
            SwitchingLaw::FixedMode(_) => {}
        }

        t = t_new;
        x = x_new;
        push_sample(&mut traj, system, t, x, mode);
    }

    Ok(traj)
}

fn push_sample(traj: &mut Trajectory, system: &SwitchedAffineSystem, t: f64, x: Vec2, sigma: usize) {
    traj.samples.push(Sample { t, x, sigma });
    if let (Some(derived), Some(map)) = (traj.derived.as_mut(), system.output_map.as_ref()) {
        let vg = map.voltage(x);
        let (pg, qg) = map.power(x);
        derived.push((vg, pg, qg));
    }
}

/// Bisect the guard zero-crossing within (0, h]. `g` changes sign between
/// the step start and end; returns the crossing offset to `opts.event_tol`.
fn bisect_crossing(
    sub: &AffineSubsystem,
    x: Vec2,
    h: f64,
    opts: &SimOptions,
    g: impl Fn(Vec2) -> f64,
) -> f64 {
    let g0 = g(x);
    let mut lo = 0.0_f64;
    let mut hi = h;
    while hi - lo > opts.event_tol {
        let mid = 0.5 * (lo + hi);
        let xm = propagate(sub, x, mid, opts.exact_propagation);
        if (g(xm) > 0.0) == (g0 > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Summary statistics of an oscillating (or converging) trajectory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OscillationMetrics {
    pub switch_count: usize,
    /// Mean time between same-direction switch pairs; absent without
    /// at least two events in one direction.
    pub mean_period: Option<f64>,
    /// (min, max) of v_g over the samples, when derived signals exist.
    pub v_g_range: Option<(f64, f64)>,
    pub converged: bool,
    pub final_mode: usize,
}

/// Quantify switching activity and terminal convergence of a trajectory.
///
/// `converged` requires no events in the final 20% of the span and the
/// state moving less than 1e-4 over the last 5% of the span.
pub fn oscillation_metrics(traj: &Trajectory) -> OscillationMetrics {
    assert!(!traj.samples.is_empty(), "trajectory must be non-empty");
    let t0 = traj.samples[0].t;
    let t_end = traj.final_sample().t;
    let span = t_end - t0;

    let mut period_sum = 0.0;
    let mut period_count = 0usize;
    for dir in [(1usize, 2usize), (2usize, 1usize)] {
        let times: Vec<f64> = traj
            .events
            .iter()
            .filter(|e| (e.from_mode, e.to_mode) == dir)
            .map(|e| e.t_switch)
            .collect();
        for w in times.windows(2) {
            period_sum += w[1] - w[0];
            period_count += 1;
        }
    }
    let mean_period = (period_count > 0).then(|| period_sum / period_count as f64);

    let v_g_range = traj.derived.as_ref().map(|d| {
        d.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, s| {
            (acc.0.min(s.0), acc.1.max(s.0))
        })
    });

    let tail_start = t_end - 0.2 * span;
    let no_tail_events = traj.events.iter().all(|e| e.t_switch < tail_start);
    let x_end = traj.final_sample().x;
    let x_before = traj.state_at(t_end - 0.05 * span);
    let settled = v_norm(v_sub(x_end, x_before)) <= 1e-4;

    OscillationMetrics {
        switch_count: traj.events.len(),
        mean_period,
        v_g_range,
        converged: no_tail_events && settled,
        final_mode: traj.final_sample().sigma,
    }
}
