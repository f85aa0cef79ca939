//! Wind-turbine grid-side converter model: subsystem construction from
//! physical and control parameters, voltage/power reconstruction, current
//! limits, and grid-voltage calibration.

use serde::{Deserialize, Serialize};

use crate::linalg::{v_norm, Mat2, Vec2};
use crate::switched::{AffineSubsystem, OutputMap, SwitchedAffineSystem, SwitchingLaw};
use crate::{Error, Result};

/// All physical and control parameters of the WT-GSC switched model.
///
/// Quantities are per-unit except `omega` (rad/s). `q_sign` maps the
/// reactive current reference onto the q-axis; -1 reproduces the
/// published equilibria (reactive injection with i_q < 0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WtGscParams {
    pub k_pd: f64,
    pub k_pq: f64,
    pub k_id: f64,
    pub k_iq: f64,
    /// Dynamic reactive current proportional coefficient, 1.5..=3.
    pub k_1: f64,
    /// Filter inductance.
    pub l_g: f64,
    /// Line resistance.
    pub r: f64,
    /// Line inductance.
    pub l: f64,
    /// Synchronous electrical angular speed, rad/s.
    pub omega: f64,
    /// Remote grid voltage.
    pub v_g_remote: f64,
    /// LVRT threshold.
    pub v_lvrt: f64,
    /// Normal-mode active current reference.
    pub i_d1: f64,
    /// LVRT-mode active current reference.
    pub i_d2: f64,
    /// Converter current limit.
    pub i_max: f64,
    /// +1 or -1; see struct docs.
    pub q_sign: f64,
}

impl Default for WtGscParams {
    /// Baseline parameter set: tabulated control/impedance values with
    /// omega = 100*pi, the remote grid voltage calibrated so the normal
    /// equilibrium sits at v_g = 0.79, and unit current references.
    fn default() -> Self {
        let mut p = Self {
            k_pd: 0.10,
            k_pq: 0.10,
            k_id: 5.00,
            k_iq: 5.00,
            k_1: 2.00,
            l_g: 3.25e-4,
            r: 7.58e-4,
            l: 1.00e-3,
            omega: 100.0 * std::f64::consts::PI,
            v_g_remote: 0.0,
            v_lvrt: 0.80,
            i_d1: 1.0,
            i_d2: 1.0,
            i_max: 1.2,
            q_sign: -1.0,
        };
        p.v_g_remote = calibrate_grid_voltage(&p, 0.79).expect("baseline target in range");
        p
    }
}

impl WtGscParams {
    /// Denominator omega^2 Lg^2 + K_pd K_pq shared by both subsystems.
    pub fn denominator(&self) -> f64 {
        let wlg = self.omega * self.l_g;
        wlg * wlg + self.k_pd * self.k_pq
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("K_pd", self.k_pd),
            ("K_pq", self.k_pq),
            ("K_id", self.k_id),
            ("K_iq", self.k_iq),
            ("L_g", self.l_g),
            ("L", self.l),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::ParamDomain(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.r < 0.0 {
            return Err(Error::ParamDomain(format!("R must be >= 0, got {}", self.r)));
        }
        if !(1.5..=3.0).contains(&self.k_1) {
            return Err(Error::ParamDomain(format!(
                "K_1 must lie in [1.5, 3], got {}",
                self.k_1
            )));
        }
        if !(0.2..=0.9).contains(&self.v_lvrt) {
            return Err(Error::ParamDomain(format!(
                "v_LVRT must lie in [0.2, 0.9], got {}",
                self.v_lvrt
            )));
        }
        if self.denominator() <= 0.0 {
            return Err(Error::DegenerateDenominator(self.denominator()));
        }
        if self.i_max < self.i_d1.max(self.i_d2) {
            return Err(Error::ParamDomain(format!(
                "I_max = {} below current references",
                self.i_max
            )));
        }
        if self.q_sign != 1.0 && self.q_sign != -1.0 {
            return Err(Error::ParamDomain(format!(
                "q_sign must be +1 or -1, got {}",
                self.q_sign
            )));
        }
        Ok(())
    }

    /// Output map for the switched system: v_g = v_G + 1.5 R i_d - 1.5 w L i_q.
    pub fn output_map(&self) -> OutputMap {
        OutputMap {
            v_const: self.v_g_remote,
            coef_d: 1.5 * self.r,
            coef_q: -1.5 * self.omega * self.l,
        }
    }

    /// Assemble the two-mode switched system under the physical
    /// voltage-threshold law.
    pub fn build_system(&self, hysteresis_band: f64, min_dwell: f64) -> Result<SwitchedAffineSystem> {
        let s1 = build_normal_subsystem(self)?;
        let s2 = build_lvrt_subsystem(self)?;
        SwitchedAffineSystem::new(
            vec![s1, s2],
            SwitchingLaw::ThresholdOnVoltage {
                v_lvrt: self.v_lvrt,
                hysteresis_band,
                min_dwell,
            },
            Some(self.output_map()),
        )
    }
}

/// Normal-operation subsystem (mode 1).
///
/// A1 has the structural identity B1 = -A1, so the drive is
/// b1 = -A1 (I_d1, 0) and the equilibrium is exactly (I_d1, 0).
pub fn build_normal_subsystem(p: &WtGscParams) -> Result<AffineSubsystem> {
    let d = p.denominator();
    if d <= 1e-15 {
        return Err(Error::DegenerateDenominator(d));
    }
    let wlg = p.omega * p.l_g;
    let a1 = Mat2::new(
        -p.k_pq * p.k_id / d,
        -wlg * p.k_iq / d,
        wlg * p.k_id / d,
        -p.k_pd * p.k_iq / d,
    );
    let u1 = [p.i_d1, 0.0];
    let minus_a1_u1 = a1.scale(-1.0).mul_vec(u1);
    Ok(AffineSubsystem::new(a1, minus_a1_u1, 1))
}

/// Reactive current reference magnitude under LVRT, K_1 (0.9 - v).
fn lvrt_reactive_reference(p: &WtGscParams, v: f64) -> f64 {
    p.k_1 * (0.9 - v)
}

/// LVRT subsystem (mode 2), closing the loop through the grid impedance:
/// A2 = (I - E F)^{-1} (A1 + B1 F), B2 = (I - E F)^{-1} B1,
/// u2 = (I_d2, q_sign K_1 (0.9 - v_G)).
pub fn build_lvrt_subsystem(p: &WtGscParams) -> Result<AffineSubsystem> {
    let d = p.denominator();
    if d <= 1e-15 {
        return Err(Error::DegenerateDenominator(d));
    }
    // Assumption: min{I_d2, i_dmax} resolves to I_d2 at the linearization
    // point v = v_G. A binding current limit would add a third mode, which
    // the two-mode model rejects.
    let i_qref = lvrt_reactive_reference(p, p.v_g_remote).abs().min(p.i_max);
    let i_dmax = (p.i_max * p.i_max - i_qref * i_qref).max(0.0).sqrt();
    if i_dmax < p.i_d2 {
        return Err(Error::CurrentLimitBinds {
            i_dmax,
            i_d2: p.i_d2,
        });
    }

    let wlg = p.omega * p.l_g;
    let e = Mat2::new(
        p.k_pd * p.k_pq / d,
        wlg * p.k_pq / d,
        -wlg * p.k_pd / d,
        p.k_pd * p.k_pq / d,
    );
    let f = Mat2::new(0.0, 0.0, -p.r, p.omega * p.l).scale(1.5 * p.k_1 * p.q_sign);
    let closure = Mat2::IDENTITY.sub(&e.mul(&f));
    let det = closure.det();
    let inv = closure
        .try_inverse(1e-12)
        .ok_or(Error::SingularClosure(det))?;

    let a1_sub = build_normal_subsystem(p)?;
    let a1 = a1_sub.a;
    let b1 = a1.scale(-1.0); // B1 = -A1
    let a2 = inv.mul(&a1.add(&b1.mul(&f)));
    let b2 = inv.mul(&b1);
    let u2 = [p.i_d2, p.q_sign * lvrt_reactive_reference(p, p.v_g_remote)];
    Ok(AffineSubsystem::new(a2, b2.mul_vec(u2), 2))
}

/// Grid-connected point voltage v_g = v_G + 1.5 R i_d - 1.5 w L i_q.
pub fn grid_voltage(p: &WtGscParams, x: Vec2) -> f64 {
    p.output_map().voltage(x)
}

/// Active/reactive power at the grid-connected point.
///
/// The 1.5 factor is kept as written; `normalized` divides it back out.
pub fn power_output(p: &WtGscParams, x: Vec2, normalized: bool) -> (f64, f64) {
    let (pg, qg) = p.output_map().power(x);
    if normalized {
        (pg / 1.5, qg / 1.5)
    } else {
        (pg, qg)
    }
}

/// Remote grid voltage such that the normal equilibrium (I_d1, 0) sits at
/// the target grid-connected voltage.
pub fn calibrate_grid_voltage(p: &WtGscParams, target_normal_voltage: f64) -> Result<f64> {
    if !(0.0 < target_normal_voltage && target_normal_voltage < 1.2) {
        return Err(Error::ParamDomain(format!(
            "target normal voltage must lie in (0, 1.2), got {target_normal_voltage}"
        )));
    }
    Ok(target_normal_voltage - 1.5 * p.r * p.i_d1)
}

/// Current-limit check for a state or reference pair.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CurrentLimitCheck {
    pub within: bool,
    pub margin: f64,
}

pub fn check_current_limit(p: &WtGscParams, x_or_ref: Vec2) -> CurrentLimitCheck {
    let norm = v_norm(x_or_ref);
    CurrentLimitCheck {
        within: norm <= p.i_max,
        margin: p.i_max - norm,
    }
}

/// Parse the flat key-value parameter document.
///
/// Lines are `key = value`; `#` starts a comment. `target_normal_voltage`
/// may replace `v_G` and triggers calibration. Unknown keys are errors.
pub fn parse_params(text: &str) -> Result<WtGscParams> {
    let mut p = WtGscParams::default();
    let mut target: Option<f64> = Some(0.79);
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim();
        let value: f64 = value.trim().parse().map_err(|_| {
            Error::Config(format!("line {}: bad number for `{key}`", lineno + 1))
        })?;
        apply_param(&mut p, &mut target, key, value)?;
    }
    if let Some(t) = target {
        p.v_g_remote = calibrate_grid_voltage(&p, t)?;
    }
    p.validate()?;
    Ok(p)
}

/// Set one named parameter; shared by the file parser and CLI overrides.
pub fn apply_param(
    p: &mut WtGscParams,
    target: &mut Option<f64>,
    key: &str,
    value: f64,
) -> Result<()> {
    match key {
        "K_pd" => p.k_pd = value,
        "K_pq" => p.k_pq = value,
        "K_id" => p.k_id = value,
        "K_iq" => p.k_iq = value,
        "K_1" => p.k_1 = value,
        "L_g" => p.l_g = value,
        "R" => p.r = value,
        "L" => p.l = value,
        "omega" => p.omega = value,
        "v_G" => {
            p.v_g_remote = value;
            *target = None;
        }
        "target_normal_voltage" => *target = Some(value),
        "v_LVRT" => p.v_lvrt = value,
        "I_d1" => p.i_d1 = value,
        "I_d2" => p.i_d2 = value,
        "I_max" => p.i_max = value,
        "q_sign" => p.q_sign = value,
        other => return Err(Error::Config(format!("unknown parameter key `{other}`"))),
    }
    Ok(())
}

/// Names accepted by [`apply_param`], in canonical order.
pub const PARAM_KEYS: [&str; 15] = [
    "K_pd", "K_pq", "K_id", "K_iq", "K_1", "L_g", "R", "L", "omega", "v_G", "v_LVRT", "I_d1",
    "I_d2", "I_max", "q_sign",
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::switched::subsystem_equilibrium;
    use approx::assert_relative_eq;

    #[test]
    fn normal_matrix_matches_direct_substitution() {
        let p = WtGscParams::default();
        let d = p.denominator();
        assert_relative_eq!(d, 0.0204248, epsilon = 1e-6);
        let s1 = build_normal_subsystem(&p).unwrap();
        assert_relative_eq!(s1.a.m[0][0], -24.48, epsilon = 0.01);
        assert_relative_eq!(s1.a.m[0][1], -24.99, epsilon = 0.01);
        assert_relative_eq!(s1.a.m[1][0], 24.99, epsilon = 0.01);
        assert_relative_eq!(s1.a.m[1][1], -24.48, epsilon = 0.01);
    }

    #[test]
    fn normal_equilibrium_is_reference() {
        let p = WtGscParams::default();
        let s1 = build_normal_subsystem(&p).unwrap();
        let x = subsystem_equilibrium(&s1).unwrap();
        assert_relative_eq!(x[0], p.i_d1, epsilon = 1e-9);
        assert_relative_eq!(x[1], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn structural_identity_b1_is_minus_a1() {
        // b1 = -A1 u1 is exact entrywise for any parameters
        let mut p = WtGscParams::default();
        p.k_pd = 0.17;
        p.k_iq = 2.3;
        p.i_d1 = 0.8;
        let s1 = build_normal_subsystem(&p).unwrap();
        let expect = s1.a.scale(-1.0).mul_vec([p.i_d1, 0.0]);
        assert!((s1.b[0] - expect[0]).abs() <= 1e-14);
        assert!((s1.b[1] - expect[1]).abs() <= 1e-14);
    }

    #[test]
    fn lvrt_equilibrium_matches_published_point() {
        let p = WtGscParams::default();
        let s2 = build_lvrt_subsystem(&p).unwrap();
        let x = subsystem_equilibrium(&s2).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-6);
        assert!((x[1] + 0.11).abs() <= 0.02, "i_q = {}", x[1]);
        let vg = grid_voltage(&p, x);
        assert!((vg - 0.84).abs() <= 0.02, "v_g = {vg}");
    }

    #[test]
    fn lvrt_matrix_against_linear_solve_oracle() {
        // Solve (I - E F) A2 = A1 + B1 F column-by-column with Gaussian
        // elimination, independently of the closed-form 2x2 inverse.
        let p = WtGscParams::default();
        let d = p.denominator();
        let wlg = p.omega * p.l_g;
        let e = Mat2::new(
            p.k_pd * p.k_pq / d,
            wlg * p.k_pq / d,
            -wlg * p.k_pd / d,
            p.k_pd * p.k_pq / d,
        );
        let f = Mat2::new(0.0, 0.0, -p.r, p.omega * p.l).scale(1.5 * p.k_1 * p.q_sign);
        let lhs = Mat2::IDENTITY.sub(&e.mul(&f));
        let s1 = build_normal_subsystem(&p).unwrap();
        let rhs = s1.a.add(&s1.a.scale(-1.0).mul(&f));

        let gauss_solve = |m: &Mat2, r: [f64; 2]| -> [f64; 2] {
            let mut a = m.m;
            let mut b = r;
            if a[0][0].abs() < a[1][0].abs() {
                a.swap(0, 1);
                b.swap(0, 1);
            }
            let fac = a[1][0] / a[0][0];
            a[1][1] -= fac * a[0][1];
            b[1] -= fac * b[0];
            let x1 = b[1] / a[1][1];
            let x0 = (b[0] - a[0][1] * x1) / a[0][0];
            [x0, x1]
        };
        let col0 = gauss_solve(&lhs, [rhs.m[0][0], rhs.m[1][0]]);
        let col1 = gauss_solve(&lhs, [rhs.m[0][1], rhs.m[1][1]]);

        let s2 = build_lvrt_subsystem(&p).unwrap();
        assert_relative_eq!(s2.a.m[0][0], col0[0], max_relative = 1e-12);
        assert_relative_eq!(s2.a.m[1][0], col0[1], max_relative = 1e-12);
        assert_relative_eq!(s2.a.m[0][1], col1[0], max_relative = 1e-12);
        assert_relative_eq!(s2.a.m[1][1], col1[1], max_relative = 1e-12);
    }

    #[test]
    fn lvrt_continuity_in_k1() {
        // A2 -> A1 and b2 -> b1 entrywise as K_1 -> 0 (constraint relaxed)
        let base = WtGscParams::default();
        let s1 = build_normal_subsystem(&base).unwrap();
        let b1 = s1.a.scale(-1.0).mul_vec([base.i_d1, 0.0]);
        let mut prev_gap = f64::INFINITY;
        for k1 in [1e-3, 1e-4, 1e-5] {
            let mut p = base;
            p.k_1 = k1;
            let s2 = build_lvrt_subsystem(&p).unwrap();
            let a_gap = s2.a.sub(&s1.a).max_abs();
            // compare drives at matching u2 -> (I_d1, ~0.9 K_1 ...) -> b1 limit
            let b_gap = v_norm(crate::linalg::v_sub(s2.b, b1));
            let gap = a_gap.max(b_gap);
            assert!(gap < prev_gap);
            prev_gap = gap;
        }
        assert!(prev_gap < 1e-4);
    }

    #[test]
    fn grid_voltage_affine_and_calibration() {
        let p = WtGscParams::default();
        // zero injection -> remote voltage
        assert_relative_eq!(grid_voltage(&p, [0.0, 0.0]), p.v_g_remote, epsilon = 1e-15);
        // affinity
        let (x, y, alpha) = ([0.8, -0.2], [1.1, 0.3], 0.37);
        let mix = [
            alpha * x[0] + (1.0 - alpha) * y[0],
            alpha * x[1] + (1.0 - alpha) * y[1],
        ];
        assert_relative_eq!(
            grid_voltage(&p, mix),
            alpha * grid_voltage(&p, x) + (1.0 - alpha) * grid_voltage(&p, y),
            epsilon = 1e-14
        );
        // published normal-equilibrium voltage
        assert_relative_eq!(grid_voltage(&p, [1.0, 0.0]), 0.79, epsilon = 0.005);
        assert_relative_eq!(p.v_g_remote, 0.7889, epsilon = 1e-4);
        // second calibration target
        assert_relative_eq!(
            calibrate_grid_voltage(&p, 0.90).unwrap(),
            0.8989,
            epsilon = 1e-4
        );
        // no resistive drop
        let mut p0 = p;
        p0.r = 0.0;
        assert_relative_eq!(calibrate_grid_voltage(&p0, 0.83).unwrap(), 0.83, epsilon = 0.0);
    }

    #[test]
    fn power_output_arithmetic() {
        let p = WtGscParams::default();
        assert_eq!(power_output(&p, [0.0, 0.0], false), (0.0, 0.0));
        let x = [1.0, 0.0];
        let (pg, qg) = power_output(&p, x, false);
        assert_relative_eq!(pg, 1.5 * 0.79, epsilon = 0.01);
        assert_relative_eq!(qg, 0.0, epsilon = 1e-12);
        // reactive injection positive at the LVRT equilibrium
        let s2 = build_lvrt_subsystem(&p).unwrap();
        let xe = subsystem_equilibrium(&s2).unwrap();
        let (_, qg) = power_output(&p, xe, false);
        assert!(qg > 0.10 && qg < 0.18, "Q_g = {qg}");
    }

    #[test]
    fn current_limit_check() {
        let p = WtGscParams::default();
        let c = check_current_limit(&p, [0.0, 0.0]);
        assert!(c.within);
        assert_relative_eq!(c.margin, 1.2, epsilon = 0.0);
        let mut p2 = p;
        p2.i_max = 1.15;
        let c2 = check_current_limit(&p2, [1.0, -0.575]);
        assert!(!c2.within);
    }

    #[test]
    fn normal_subsystem_stable_for_baseline() {
        let p = WtGscParams::default();
        let s1 = build_normal_subsystem(&p).unwrap();
        let (lo, hi) = s1.a.eigen_real_parts();
        assert!(lo < 0.0 && hi < 0.0);
        let s2 = build_lvrt_subsystem(&p).unwrap();
        let (lo, hi) = s2.a.eigen_real_parts();
        assert!(lo < 0.0 && hi < 0.0);
    }

    #[test]
    fn param_file_roundtrip_and_unknown_key() {
        let p = parse_params("K_pd = 0.15\nK_pq = 0.15\n# comment\nv_LVRT = 0.8\n").unwrap();
        assert_eq!(p.k_pd, 0.15);
        assert_eq!(p.k_pq, 0.15);
        let err = parse_params("K_px = 0.15\n").unwrap_err();
        assert!(err.to_string().contains("K_px"));
    }

    #[test]
    fn k1_domain_enforced() {
        let mut p = WtGscParams::default();
        p.k_1 = 0.5;
        assert!(p.validate().is_err());
    }
}
