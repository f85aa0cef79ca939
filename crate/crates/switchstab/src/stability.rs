//! Common quadratic Lyapunov certificates for the two-mode switched
//! system: boundary equilibrium on the switching surface, the
//! one-parameter Lyapunov matrix family, analytic feasibility in the free
//! parameter, and the max-decay stability index.

use serde::{Deserialize, Serialize};

use crate::linalg::{v_add, v_norm, v_sub, Mat2, Vec2};
use crate::switched::{convex_combination, AffineSubsystem, SwitchedAffineSystem, SwitchingLaw};
use crate::wtgsc::WtGscParams;
use crate::{Error, Result};

/// Penalty fitness substituted for criterion-inapplicable or collapsed
/// evaluations; shared with the sensitivity and PSO modules so both see
/// the same landscape.
pub const INVALID_FITNESS: f64 = -50.0;

/// Lower cap on the negative-decay relaxation used to report "how
/// unstable" an infeasible parameter group is.
pub const MU_FLOOR: f64 = -1e3;

/// Upper cap on the certified decay rate.
pub const MU_CAP: f64 = 1e6;

/// Equilibrium of the convex combination lying on the switching surface.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BoundaryEquilibrium {
    pub x_e: Vec2,
    pub lambda1: f64,
    /// Number of surface roots found in [0, 1]; the one nearest 0.5 is
    /// returned when several exist.
    pub multiplicity: usize,
}

/// Signed residual of the switching-surface equation at the convex
/// combination equilibrium x_e(lambda1):
/// -1.5 R x1e + 1.5 w L x2e + v_LVRT - v_G.
fn surface_residual(
    sub1: &AffineSubsystem,
    sub2: &AffineSubsystem,
    p: &WtGscParams,
    lambda1: f64,
) -> Option<(f64, Vec2)> {
    let comb = convex_combination(&[*sub1, *sub2], &[lambda1, 1.0 - lambda1]).ok()?;
    let scale = comb.a.max_abs();
    let x_e = comb.a.solve([-comb.b[0], -comb.b[1]], 1e-12 * scale * scale)?;
    let g = -1.5 * p.r * x_e[0] + 1.5 * p.omega * p.l * x_e[1] + p.v_lvrt - p.v_g_remote;
    Some((g, x_e))
}

/// Find lambda1 in [0, 1] placing the convex-combination equilibrium on
/// the switching surface (sign-bracketed bisection on the residual).
pub fn boundary_equilibrium(
    sub1: &AffineSubsystem,
    sub2: &AffineSubsystem,
    p: &WtGscParams,
) -> Result<BoundaryEquilibrium> {
    const GRID: usize = 256;
    let mut vals: Vec<Option<f64>> = Vec::with_capacity(GRID + 1);
    for i in 0..=GRID {
        let lam = i as f64 / GRID as f64;
        vals.push(surface_residual(sub1, sub2, p, lam).map(|(g, _)| g));
    }

    let mut roots: Vec<f64> = Vec::new();
    for i in 0..GRID {
        let (Some(g0), Some(g1)) = (vals[i], vals[i + 1]) else {
            continue;
        };
        if g0 == 0.0 {
            roots.push(i as f64 / GRID as f64);
            continue;
        }
        if g0 * g1 < 0.0 {
            let mut lo = i as f64 / GRID as f64;
            let mut hi = (i + 1) as f64 / GRID as f64;
            let mut glo = g0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                match surface_residual(sub1, sub2, p, mid) {
                    Some((gm, _)) => {
                        if gm.abs() <= 1e-12 || hi - lo < 1e-16 {
                            lo = mid;
                            break;
                        }
                        if (gm > 0.0) == (glo > 0.0) {
                            lo = mid;
                            glo = gm;
                        } else {
                            hi = mid;
                        }
                    }
                    None => return Err(Error::SingularCombination(mid)),
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    if let Some(Some(g_end)) = vals.last() {
        if *g_end == 0.0 {
            roots.push(1.0);
        }
    }
    if roots.is_empty() {
        return Err(Error::NoBracket);
    }
    let lambda1 = roots
        .iter()
        .copied()
        .min_by(|a, b| {
            (a - 0.5)
                .abs()
                .partial_cmp(&(b - 0.5).abs())
                .unwrap()
        })
        .unwrap();
    let (_, x_e) = surface_residual(sub1, sub2, p, lambda1)
        .ok_or(Error::SingularCombination(lambda1))?;
    Ok(BoundaryEquilibrium {
        x_e,
        lambda1,
        multiplicity: roots.len(),
    })
}

/// One-parameter family P(p) = base + p * slope from the undetermined
/// coefficient construction. `d` is b1 - b2 evaluated at x_e with
/// b_i = A_i x_e + (B_i u_i).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LyapunovFamily {
    pub d: Vec2,
    pub base: Mat2,
    pub slope: Mat2,
}

impl LyapunovFamily {
    pub fn eval(&self, p: f64) -> Mat2 {
        self.base.add(&self.slope.scale(p))
    }
}

/// Drive vectors b_i = A_i x_e + B_i u_i of both modes at x_e.
pub fn drive_vectors(sub1: &AffineSubsystem, sub2: &AffineSubsystem, x_e: Vec2) -> (Vec2, Vec2) {
    (
        v_add(sub1.a.mul_vec(x_e), sub1.b),
        v_add(sub2.a.mul_vec(x_e), sub2.b),
    )
}

/// Construct the closed-form Lyapunov family for the given boundary
/// equilibrium.
pub fn lyapunov_family(
    sub1: &AffineSubsystem,
    sub2: &AffineSubsystem,
    x_e: Vec2,
    p: &WtGscParams,
) -> Result<LyapunovFamily> {
    let (b1, b2) = drive_vectors(sub1, sub2, x_e);
    let d = v_sub(b1, b2);
    if v_norm(d) <= 1e-12 {
        return Err(Error::DegenerateDifference);
    }
    if d[1].abs() <= 1e-12 {
        return Err(Error::ZeroD2);
    }
    let (d1, d2) = (d[0], d[1]);
    let r15 = 1.5 * p.r;
    let wl15 = 1.5 * p.omega * p.l;
    let base = Mat2::new(
        0.0,
        -r15 / d2,
        -r15 / d2,
        wl15 / d2 + d1 * r15 / (d2 * d2),
    );
    let slope = Mat2::new(1.0, -d1 / d2, -d1 / d2, d1 * d1 / (d2 * d2));
    Ok(LyapunovFamily { d, base, slope })
}

/// Half-open union of intervals over the free parameter p.
pub type IntervalSet = Vec<(f64, f64)>;

fn intersect(a: &IntervalSet, b: &IntervalSet) -> IntervalSet {
    let mut out = Vec::new();
    for &(alo, ahi) in a {
        for &(blo, bhi) in b {
            let lo = alo.max(blo);
            let hi = ahi.min(bhi);
            if lo < hi {
                out.push((lo, hi));
            }
        }
    }
    out
}

/// p such that a*p + b > eps.
fn solve_linear_gt(a: f64, b: f64, eps: f64) -> IntervalSet {
    if a == 0.0 {
        return if b > eps {
            vec![(f64::NEG_INFINITY, f64::INFINITY)]
        } else {
            vec![]
        };
    }
    let root = (eps - b) / a;
    if a > 0.0 {
        vec![(root, f64::INFINITY)]
    } else {
        vec![(f64::NEG_INFINITY, root)]
    }
}

/// p such that a*p^2 + b*p + c > eps.
fn solve_quadratic_gt(a: f64, b: f64, c: f64, eps: f64) -> IntervalSet {
    let c = c - eps;
    if a.abs() <= 1e-14 * (b.abs() + c.abs()) {
        return solve_linear_gt(b, c, 0.0);
    }
    let disc = b * b - 4.0 * a * c;
    if disc <= 0.0 {
        return if a > 0.0 {
            vec![(f64::NEG_INFINITY, f64::INFINITY)]
        } else {
            vec![]
        };
    }
    let sq = disc.sqrt();
    // numerically stable root pair
    let q = -0.5 * (b + b.signum() * sq);
    let (mut r1, mut r2) = (q / a, c / q);
    if r1 > r2 {
        std::mem::swap(&mut r1, &mut r2);
    }
    if a > 0.0 {
        vec![(f64::NEG_INFINITY, r1), (r2, f64::INFINITY)]
    } else {
        vec![(r1, r2)]
    }
}

/// Leading-minor inequalities for sign-definiteness of the affine family
/// S(p) = s0 + p * s1. `sign` = +1 for positive definite, -1 for negative
/// definite. Returns (intervals, |quadratic coefficient| of the
/// determinant minor).
fn definite_intervals(s0: &Mat2, s1: &Mat2, sign: f64) -> (IntervalSet, f64) {
    // (1,1) minor, linear in p
    let lin_a = sign * s1.m[0][0];
    let lin_b = sign * s0.m[0][0];
    let eps_l = 1e-10 * (lin_a.abs() + lin_b.abs());
    let minor1 = solve_linear_gt(lin_a, lin_b, eps_l);

    // determinant minor, quadratic in p (positive for either definiteness)
    let c2 = s1.det();
    let c1 = s0.m[0][0] * s1.m[1][1] + s1.m[0][0] * s0.m[1][1]
        - s0.m[0][1] * s1.m[1][0]
        - s1.m[0][1] * s0.m[1][0];
    let c0 = s0.det();
    let eps_q = 1e-10 * (c2.abs() + c1.abs() + c0.abs());
    let minor2 = solve_quadratic_gt(c2, c1, c0, eps_q);

    (intersect(&minor1, &minor2), c2.abs())
}

/// Outcome of the analytic feasibility test at a fixed decay rate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FeasibilityOutcome {
    pub feasible: bool,
    pub p_intervals: IntervalSet,
    /// Midpoint of the widest feasible interval, when one exists.
    pub witness_p: Option<f64>,
    /// True when every determinant minor was effectively linear in p
    /// (the regime the closed-form construction assumes).
    pub linear_regime: bool,
}

/// Test P(p) > 0 and A_i^T P + P A_i + mu P < 0 for both modes, solving
/// the six minor inequalities analytically in p and intersecting.
pub fn feasibility_at_mu(
    a1: &Mat2,
    a2: &Mat2,
    family: &LyapunovFamily,
    mu: f64,
) -> FeasibilityOutcome {
    let mut quad_scale: f64 = 0.0;
    let (pd, q0) = definite_intervals(&family.base, &family.slope, 1.0);
    quad_scale = quad_scale.max(q0);

    let mut set = pd;
    for a in [a1, a2] {
        let m0 = a
            .transpose()
            .mul(&family.base)
            .add(&family.base.mul(a))
            .add(&family.base.scale(mu));
        let m1 = a
            .transpose()
            .mul(&family.slope)
            .add(&family.slope.mul(a))
            .add(&family.slope.scale(mu));
        let (nd, q) = definite_intervals(&m0, &m1, -1.0);
        quad_scale = quad_scale.max(q);
        set = intersect(&set, &nd);
    }

    // widest interval's midpoint; unbounded sides are windowed to a
    // moderate span so the witness stays well scaled
    let witness_p = set
        .iter()
        .map(|&(lo, hi)| (lo.max(-1e9), hi.min(1e9)))
        .filter(|&(lo, hi)| lo < hi)
        .max_by(|a, b| (a.1 - a.0).partial_cmp(&(b.1 - b.0)).unwrap())
        .map(|(lo, hi)| {
            let hi_w = hi.min(lo + 2.0 * lo.abs().max(1.0));
            let lo_w = lo.max(hi - 2.0 * hi.abs().max(1.0)).min(hi_w);
            0.5 * (lo_w + hi_w)
        });

    FeasibilityOutcome {
        feasible: witness_p.is_some(),
        p_intervals: set,
        witness_p,
        linear_regime: quad_scale <= 1e-12,
    }
}

/// Stability certificate: boundary equilibrium, Lyapunov parameter, and
/// the certified (or relaxed negative) decay rate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub x_e: Vec2,
    pub lambda1: f64,
    pub p: f64,
    #[serde(rename = "P")]
    pub p_matrix: Mat2,
    pub mu: f64,
    pub feasible: bool,
    pub d: Vec2,
    pub diagnostics: Vec<String>,
}

impl StabilityCertificate {
    /// JSON export: x_e, lambda1, p, P (row-major 4 values), mu,
    /// feasible, diagnostics[].
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "x_e": self.x_e,
            "lambda1": self.lambda1,
            "p": self.p,
            "P": [self.p_matrix.m[0][0], self.p_matrix.m[0][1],
                  self.p_matrix.m[1][0], self.p_matrix.m[1][1]],
            "mu": self.mu,
            "feasible": self.feasible,
            "diagnostics": self.diagnostics,
        })
    }
}

/// Largest feasible decay rate by bisection.
///
/// Feasibility is monotone in mu (shrinking mu keeps M_i negative
/// definite while P stays fixed), so a bracket-and-bisect search is
/// exact up to the relative tolerance. When the criterion is infeasible
/// for every mu > 0 the same bisection runs on [MU_FLOOR, 0) and the
/// certificate reports the signed infeasibility margin with
/// `feasible = false`.
pub fn max_stability_index(
    sub1: &AffineSubsystem,
    sub2: &AffineSubsystem,
    params: &WtGscParams,
) -> Result<StabilityCertificate> {
    let be = boundary_equilibrium(sub1, sub2, params)?;
    let family = lyapunov_family(sub1, sub2, be.x_e, params)?;
    let mut diagnostics = Vec::new();
    if be.multiplicity > 1 {
        diagnostics.push(format!(
            "surface equation has {} roots in lambda1; picked {}",
            be.multiplicity, be.lambda1
        ));
    }

    let feas = |mu: f64| feasibility_at_mu(&sub1.a, &sub2.a, &family, mu);

    let at_zero = feas(0.0);
    if !at_zero.linear_regime {
        diagnostics.push("determinant minors are genuinely quadratic in p".into());
    }

    let (feasible, mu, witness) = if at_zero.feasible {
        // bracket upward from a known-feasible lower end
        let mut lo = 0.0;
        let mut hi = 1.0;
        while hi < MU_CAP && feas(hi).feasible {
            lo = hi;
            hi *= 2.0;
        }
        if hi >= MU_CAP && feas(hi).feasible {
            diagnostics.push(format!("decay rate capped at {MU_CAP:e}"));
            let w = feas(hi);
            (true, hi, w.witness_p)
        } else {
            while (hi - lo) > 1e-6 * hi.abs().max(1e-12) {
                let mid = 0.5 * (lo + hi);
                if feas(mid).feasible {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let w = feas(lo);
            (true, lo, w.witness_p)
        }
    } else {
        // negative relaxation for "how unstable" reporting
        if !feas(MU_FLOOR).feasible {
            diagnostics.push(format!("infeasible even at mu = {MU_FLOOR}"));
            (false, MU_FLOOR, None)
        } else {
            let mut lo = MU_FLOOR;
            let mut hi = 0.0;
            while (hi - lo) > 1e-6 * lo.abs().max(1e-12) {
                let mid = 0.5 * (lo + hi);
                if feas(mid).feasible {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let w = feas(lo);
            (false, lo, w.witness_p)
        }
    };

    let p = witness.unwrap_or(1.0);
    Ok(StabilityCertificate {
        x_e: be.x_e,
        lambda1: be.lambda1,
        p,
        p_matrix: family.eval(p),
        mu,
        feasible,
        d: family.d,
        diagnostics,
    })
}

/// Build both subsystems from the parameter set and run the full index
/// computation.
pub fn stability_index(params: &WtGscParams) -> Result<StabilityCertificate> {
    let s1 = crate::wtgsc::build_normal_subsystem(params)?;
    let s2 = crate::wtgsc::build_lvrt_subsystem(params)?;
    max_stability_index(&s1, &s2, params)
}

/// Total fitness evaluator mu(params) with the shared invalid penalty.
pub fn fitness_mu(params: &WtGscParams) -> f64 {
    match stability_index(params) {
        Ok(cert) => cert.mu,
        Err(_) => INVALID_FITNESS,
    }
}

/// Multi-start audit of a feasible certificate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditReport {
    /// Residual of the convex-combination equilibrium condition.
    pub residual_combination: f64,
    pub p_eigenvalues: (f64, f64),
    pub m1_eigenvalues: (f64, f64),
    pub m2_eigenvalues: (f64, f64),
    pub argmin_converged: usize,
    pub argmin_total: usize,
    /// Worst sampled violation of dV/dt <= -0.5 mu V + slack along the
    /// argmin-law trajectories (negative means satisfied).
    pub lyapunov_violation: f64,
    /// Threshold-law convergence statistics; reported, never a failure.
    pub threshold_converged: usize,
    pub threshold_total: usize,
}

/// Worst violation of the sampled decrease bound
/// dV/dt <= -factor * mu * V + slack over a trajectory, with
/// slack = 1e-6 + 10 * dt * |dV/dt| + lambda_max(P) * |dx|^2 / dt.
///
/// The last term covers the sampled-switching floor: the discrete argmin
/// law cannot hold the state closer to x_e than one step's travel, so V
/// hovers in an O(dt^2) chattering ball there. The term is O(dt) at
/// macroscopic amplitudes and vanishes with the step size.
pub fn lyapunov_decrease_violation(
    traj: &crate::switched::Trajectory,
    p_matrix: &Mat2,
    x_e: Vec2,
    mu: f64,
    factor: f64,
) -> f64 {
    let v_of = |x: Vec2| {
        let xi = v_sub(x, x_e);
        let pxi = p_matrix.mul_vec(xi);
        xi[0] * pxi[0] + xi[1] * pxi[1]
    };
    let (_, p_max) = p_matrix.sym_eigenvalues();
    let mut worst = f64::NEG_INFINITY;
    for w in traj.samples.windows(2) {
        let dt = w[1].t - w[0].t;
        if dt <= 0.0 {
            continue;
        }
        let v0 = v_of(w[0].x);
        let v1 = v_of(w[1].x);
        let rate = (v1 - v0) / dt;
        let step = v_sub(w[1].x, w[0].x);
        let dx2 = step[0] * step[0] + step[1] * step[1];
        let slack = 1e-6 + 10.0 * dt * rate.abs() + p_max * dx2 / dt;
        worst = worst.max(rate - (-factor * mu * v0 + slack));
    }
    worst
}

/// Verify a feasible certificate: algebraic conditions, Lyapunov decrease
/// under the argmin law from random starts, and threshold-law agreement
/// statistics.
pub fn audit_certificate(
    cert: &StabilityCertificate,
    system: &SwitchedAffineSystem,
    params: &WtGscParams,
    seed: u64,
) -> Result<AuditReport> {
    use rand::{Rng, SeedableRng};

    if !cert.feasible {
        return Err(Error::AuditFailure {
            step: 'a',
            detail: "certificate is not feasible".into(),
        });
    }
    let sub1 = system.subsystem(1);
    let sub2 = system.subsystem(2);

    // (a) convex-combination equilibrium residual
    let comb = convex_combination(
        &[*sub1, *sub2],
        &[cert.lambda1, 1.0 - cert.lambda1],
    )?;
    let residual = v_norm(v_add(comb.a.mul_vec(cert.x_e), comb.b));
    if residual > 1e-8 {
        return Err(Error::AuditFailure {
            step: 'a',
            detail: format!("combination residual {residual:e} > 1e-8"),
        });
    }

    // (b) definiteness by eigenvalues
    let p_eigs = cert.p_matrix.sym_eigenvalues();
    if p_eigs.0 <= 0.0 {
        return Err(Error::AuditFailure {
            step: 'b',
            detail: format!("P eigenvalues {:?} not positive", p_eigs),
        });
    }
    let m_of = |a: &Mat2| {
        a.transpose()
            .mul(&cert.p_matrix)
            .add(&cert.p_matrix.mul(a))
            .add(&cert.p_matrix.scale(cert.mu))
    };
    let m1_eigs = m_of(&sub1.a).sym_eigenvalues();
    let m2_eigs = m_of(&sub2.a).sym_eigenvalues();
    if m1_eigs.1 >= 0.0 || m2_eigs.1 >= 0.0 {
        return Err(Error::AuditFailure {
            step: 'b',
            detail: format!("M eigenvalues not negative: {:?}, {:?}", m1_eigs, m2_eigs),
        });
    }

    // (c) argmin-law simulation from random starts in the current limit
    let (b1, b2) = drive_vectors(sub1, sub2, cert.x_e);
    let argmin_system = SwitchedAffineSystem::new(
        vec![*sub1, *sub2],
        SwitchingLaw::ArgminLyapunov {
            p: cert.p_matrix,
            x_e: cert.x_e,
            b_list: vec![b1, b2],
        },
        system.output_map,
    )?;
    let t_end = (10.0 / cert.mu.max(0.1)).clamp(2.0, 30.0);
    let opts = crate::switched::SimOptions {
        t_end,
        ..Default::default()
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut starts = Vec::with_capacity(20);
    while starts.len() < 20 {
        let x = [
            rng.gen_range(-params.i_max..params.i_max),
            rng.gen_range(-params.i_max..params.i_max),
        ];
        if v_norm(x) <= params.i_max {
            starts.push(x);
        }
    }
    let mut argmin_converged = 0usize;
    let mut worst_violation = f64::NEG_INFINITY;
    for &x0 in &starts {
        let traj = simulate_quiet(&argmin_system, x0, 1, &opts)?;
        let violation =
            lyapunov_decrease_violation(&traj, &cert.p_matrix, cert.x_e, cert.mu, 0.5);
        worst_violation = worst_violation.max(violation);
        if violation > 0.0 {
            return Err(Error::AuditFailure {
                step: 'c',
                detail: format!("Lyapunov decrease violated by {violation:e}"),
            });
        }
        if v_norm(v_sub(traj.final_sample().x, cert.x_e)) <= 1e-3 {
            argmin_converged += 1;
        }
    }
    if argmin_converged < starts.len() {
        return Err(Error::AuditFailure {
            step: 'c',
            detail: format!(
                "argmin-law convergence on {argmin_converged}/{} starts",
                starts.len()
            ),
        });
    }

    // (d) threshold-law statistics, reported only
    let mut threshold_converged = 0usize;
    for &x0 in &starts {
        if let Ok(traj) = simulate_quiet(system, x0, 1, &opts) {
            if v_norm(v_sub(traj.final_sample().x, cert.x_e)) <= 1e-2 {
                threshold_converged += 1;
            }
        }
    }

    Ok(AuditReport {
        residual_combination: residual,
        p_eigenvalues: p_eigs,
        m1_eigenvalues: m1_eigs,
        m2_eigenvalues: m2_eigs,
        argmin_converged,
        argmin_total: starts.len(),
        lyapunov_violation: worst_violation,
        threshold_converged,
        threshold_total: starts.len(),
    })
}

fn simulate_quiet(
    system: &SwitchedAffineSystem,
    x0: Vec2,
    sigma0: usize,
    opts: &crate::switched::SimOptions,
) -> Result<crate::switched::Trajectory> {
    crate::switched::simulate(system, x0, sigma0, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wtgsc::{build_lvrt_subsystem, build_normal_subsystem};
    use approx::assert_relative_eq;

    fn table1() -> WtGscParams {
        WtGscParams::default()
    }

    fn table1_subsystems() -> (AffineSubsystem, AffineSubsystem) {
        let p = table1();
        (
            build_normal_subsystem(&p).unwrap(),
            build_lvrt_subsystem(&p).unwrap(),
        )
    }

    /// Synthetic fixture: identical decay subsystems A = -I with drives
    /// of magnitude `m` placing the boundary equilibrium at lambda1 = 0.5
    /// (x_e = (0, -m/2)).
    fn identity_fixture_scaled(m: f64) -> (AffineSubsystem, AffineSubsystem, WtGscParams) {
        let a = Mat2::IDENTITY.scale(-1.0);
        let s1 = AffineSubsystem::new(a, [0.0, 0.0], 1);
        let s2 = AffineSubsystem::new(a, [0.0, -m], 2);
        let mut p = WtGscParams::default();
        p.r = 0.0;
        p.omega = 1.0;
        p.l = 1.0 / 15.0; // 1.5 w L = 0.1
        p.v_lvrt = 0.80;
        p.v_g_remote = p.v_lvrt - 0.05 * m;
        (s1, s2, p)
    }

    fn identity_fixture() -> (AffineSubsystem, AffineSubsystem, WtGscParams) {
        identity_fixture_scaled(1.0)
    }

    #[test]
    fn surface_residual_signs_at_endpoints() {
        let (s1, s2) = table1_subsystems();
        let p = table1();
        let (g1, x1) = surface_residual(&s1, &s2, &p, 1.0).unwrap();
        // lambda = 1: normal equilibrium (I_d1, 0), residual = v_LVRT - 0.79 > 0
        assert_relative_eq!(x1[0], 1.0, epsilon = 1e-9);
        assert!(g1 > 0.0);
        let (g0, _) = surface_residual(&s1, &s2, &p, 0.0).unwrap();
        assert!(g0 < 0.0);
    }

    #[test]
    fn boundary_equilibrium_residuals() {
        let (s1, s2) = table1_subsystems();
        let p = table1();
        let be = boundary_equilibrium(&s1, &s2, &p).unwrap();
        assert!(be.lambda1 > 0.0 && be.lambda1 < 1.0);
        // both lines of the equilibrium conditions by direct substitution
        let surf =
            -1.5 * p.r * be.x_e[0] + 1.5 * p.omega * p.l * be.x_e[1] + p.v_lvrt - p.v_g_remote;
        assert!(surf.abs() <= 1e-8, "surface residual {surf:e}");
        let comb = convex_combination(&[s1, s2], &[be.lambda1, 1.0 - be.lambda1]).unwrap();
        let res = v_norm(v_add(comb.a.mul_vec(be.x_e), comb.b));
        assert!(res <= 1e-8, "combination residual {res:e}");
    }

    #[test]
    fn degenerate_threshold_returns_mode1_equilibrium() {
        let (s1, s2) = table1_subsystems();
        let mut p = table1();
        // put the surface exactly through the normal equilibrium (I_d1, 0)
        p.v_lvrt = p.v_g_remote + 1.5 * p.r * p.i_d1;
        let be = boundary_equilibrium(&s1, &s2, &p).unwrap();
        assert_relative_eq!(be.lambda1, 1.0, epsilon = 1e-6);
        assert_relative_eq!(be.x_e[0], p.i_d1, epsilon = 1e-6);
        assert_relative_eq!(be.x_e[1], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn no_bracket_when_threshold_out_of_reach() {
        let (s1, s2) = table1_subsystems();
        let mut p = table1();
        p.v_lvrt = 0.2; // far below both equilibrium voltages
        assert!(matches!(
            boundary_equilibrium(&s1, &s2, &p),
            Err(Error::NoBracket)
        ));
    }

    #[test]
    fn family_pd_identity_and_symmetry() {
        let (s1, s2) = table1_subsystems();
        let p = table1();
        let be = boundary_equilibrium(&s1, &s2, &p).unwrap();
        let fam = lyapunov_family(&s1, &s2, be.x_e, &p).unwrap();
        for pv in [-1.0, 0.0, 1.0, 10.0] {
            let pm = fam.eval(pv);
            assert_eq!(pm.m[0][1], pm.m[1][0]);
            // rows 1-2 of the construction: P d = (-1.5 R, 1.5 w L)
            let pd = pm.mul_vec(fam.d);
            assert_relative_eq!(pd[0], -1.5 * p.r, max_relative = 1e-12);
            assert_relative_eq!(pd[1], 1.5 * p.omega * p.l, max_relative = 1e-12);
        }
        // fourth row: x_e . (P d) = v_G - v_LVRT
        let pd = fam.eval(2.5).mul_vec(fam.d);
        assert_relative_eq!(
            be.x_e[0] * pd[0] + be.x_e[1] * pd[1],
            p.v_g_remote - p.v_lvrt,
            max_relative = 1e-6
        );
    }

    #[test]
    fn identity_fixture_feasible_iff_mu_below_two() {
        let (s1, s2, p) = identity_fixture();
        let be = boundary_equilibrium(&s1, &s2, &p).unwrap();
        assert_relative_eq!(be.lambda1, 0.5, epsilon = 1e-9);
        let fam = lyapunov_family(&s1, &s2, be.x_e, &p).unwrap();
        assert!(feasibility_at_mu(&s1.a, &s2.a, &fam, 1.9).feasible);
        assert!(!feasibility_at_mu(&s1.a, &s2.a, &fam, 2.01).feasible);
    }

    #[test]
    fn identity_fixture_max_index_is_two() {
        let (s1, s2, p) = identity_fixture();
        let cert = max_stability_index(&s1, &s2, &p).unwrap();
        assert!(cert.feasible);
        assert_relative_eq!(cert.mu, 2.0, epsilon = 1e-4);
    }

    #[test]
    fn feasibility_monotone_in_mu() {
        let (s1, s2) = table1_subsystems();
        let p = table1();
        let be = boundary_equilibrium(&s1, &s2, &p).unwrap();
        let fam = lyapunov_family(&s1, &s2, be.x_e, &p).unwrap();
        let mut last = true;
        for exp in -3..=6 {
            let mu = 10f64.powi(exp);
            let now = feasibility_at_mu(&s1.a, &s2.a, &fam, mu).feasible;
            // once infeasible, stays infeasible as mu grows
            if !last {
                assert!(!now, "feasibility regained at mu = {mu}");
            }
            last = now;
        }
        assert!(!feasibility_at_mu(&s1.a, &s2.a, &fam, 1e6).feasible);
    }

    #[test]
    fn tampered_certificate_fails_audit() {
        let (s1, s2, p) = identity_fixture();
        let mut cert = max_stability_index(&s1, &s2, &p).unwrap();
        cert.p_matrix = cert.p_matrix.scale(-1.0);
        let system = SwitchedAffineSystem::new(
            vec![s1, s2],
            SwitchingLaw::ThresholdOnVoltage {
                v_lvrt: p.v_lvrt,
                hysteresis_band: 0.0,
                min_dwell: 0.0,
            },
            Some(p.output_map()),
        )
        .unwrap();
        let err = audit_certificate(&cert, &system, &p, 7).unwrap_err();
        assert!(matches!(err, Error::AuditFailure { step: 'b', .. }));
    }

    #[test]
    fn scalar_decay_matches_certificate() {
        // identical-subsystem fixture with a small drive difference:
        // the argmin term is negligible and V(t) = V(0) e^{-2t} within 1%
        let (s1, s2, p) = identity_fixture_scaled(1e-3);
        let cert = max_stability_index(&s1, &s2, &p).unwrap();
        let (b1, b2) = drive_vectors(&s1, &s2, cert.x_e);
        let sys = SwitchedAffineSystem::new(
            vec![s1, s2],
            SwitchingLaw::ArgminLyapunov {
                p: cert.p_matrix,
                x_e: cert.x_e,
                b_list: vec![b1, b2],
            },
            None,
        )
        .unwrap();
        let opts = crate::switched::SimOptions {
            t_end: 1.0,
            ..Default::default()
        };
        let x0 = [cert.x_e[0], cert.x_e[1] + 0.3];
        let traj = crate::switched::simulate(&sys, x0, 1, &opts).unwrap();
        let v_of = |x: Vec2| {
            let xi = v_sub(x, cert.x_e);
            let pxi = cert.p_matrix.mul_vec(xi);
            xi[0] * pxi[0] + xi[1] * pxi[1]
        };
        let ratio = v_of(traj.final_sample().x) / v_of(x0);
        assert_relative_eq!(ratio, (-2.0_f64).exp(), max_relative = 0.01);
    }
}
