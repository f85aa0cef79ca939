//! Variance-based global sensitivity analysis: base-2 digital Sobol'
//! sequences (Joe-Kuo direction numbers, up to 16 dimensions), Saltelli
//! design matrices, and main/total effect estimators with bootstrap
//! error bars.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAX_DIMENSION: usize = 16;

/// Joe-Kuo primitive-polynomial data (degree s, coefficient word a,
/// initial direction numbers m) for dimensions 2..=16. Dimension 1 is
/// the van der Corput sequence.
const JOE_KUO: [(u32, u32, &[u32]); 15] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
];

const BITS: usize = 32;

/// 32-bit direction integers for one dimension.
fn direction_integers(dim_index: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim_index == 0 {
        for (j, slot) in v.iter_mut().enumerate() {
            *slot = 1u32 << (31 - j);
        }
        return v;
    }
    let (s, a, m) = JOE_KUO[dim_index - 1];
    let s = s as usize;
    for j in 0..s.min(BITS) {
        v[j] = m[j] << (31 - j);
    }
    for j in s..BITS {
        v[j] = v[j - s] ^ (v[j - s] >> s);
        for k in 1..s {
            if (a >> (s - 1 - k)) & 1 == 1 {
                v[j] ^= v[j - k];
            }
        }
    }
    v
}

/// `count` points of the `dim`-dimensional Sobol' sequence in [0, 1)^dim,
/// skipping the first `skip` points. Gray-code construction; the first
/// point of the unskipped sequence is the origin.
pub fn sobol_sequence(dim: usize, count: usize, skip: usize) -> Result<Vec<Vec<f64>>> {
    if dim == 0 || dim > MAX_DIMENSION {
        return Err(Error::DimensionUnsupported(dim));
    }
    let dirs: Vec<[u32; BITS]> = (0..dim).map(direction_integers).collect();
    let scale = (2f64).powi(-32);
    let mut out = Vec::with_capacity(count);
    for i in skip..skip + count {
        let gray = (i as u64) ^ ((i as u64) >> 1);
        let mut row = Vec::with_capacity(dim);
        for d in dirs.iter() {
            let mut acc = 0u32;
            let mut g = gray;
            let mut j = 0usize;
            while g != 0 && j < BITS {
                if g & 1 == 1 {
                    acc ^= d[j];
                }
                g >>= 1;
                j += 1;
            }
            row.push(acc as f64 * scale);
        }
        out.push(row);
    }
    Ok(out)
}

/// Varied-parameter hypercube: names, bounds, and frozen companions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParameterSpace {
    pub names: Vec<String>,
    pub bounds: Vec<(f64, f64)>,
    pub frozen: BTreeMap<String, f64>,
}

impl ParameterSpace {
    pub fn new(names: Vec<String>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if names.is_empty() || names.len() != bounds.len() {
            return Err(Error::ParamDomain(
                "parameter space needs matching, non-empty names and bounds".into(),
            ));
        }
        for (name, &(lo, hi)) in names.iter().zip(&bounds) {
            if !(lo < hi) {
                return Err(Error::ParamDomain(format!(
                    "bound for {name} must satisfy low < high, got ({lo}, {hi})"
                )));
            }
        }
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != names.len() {
            return Err(Error::ParamDomain("duplicate parameter names".into()));
        }
        Ok(Self {
            names,
            bounds,
            frozen: BTreeMap::new(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.names.len()
    }

    pub fn scale(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(&self.bounds)
            .map(|(&u, &(lo, hi))| lo + u * (hi - lo))
            .collect()
    }

    /// The published sampling ranges over the eight converter parameters.
    pub fn wtgsc_table2() -> Self {
        Self::new(
            ["K_pd", "K_pq", "K_id", "K_iq", "K_1", "L_g", "R", "L"]
                .map(String::from)
                .to_vec(),
            vec![
                (0.10, 0.20),
                (0.10, 0.20),
                (1.00, 5.00),
                (1.00, 5.00),
                (1.50, 3.00),
                (3.25e-4, 5.41e-4),
                (2.17e-4, 4.50e-3),
                (8.66e-4, 1.10e-3),
            ],
        )
        .expect("static bounds are valid")
    }
}

/// Saltelli design: base matrices A, B and column-swapped hybrids A_B^i.
#[derive(Clone, Debug)]
pub struct SaltelliMatrices {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub ab: Vec<Vec<Vec<f64>>>,
}

/// Draw a 2k-dimensional Sobol' block of M rows and split it into the
/// paired sampling matrices. M must be a power of two to preserve the
/// digital-net balance.
pub fn saltelli_matrices(space: &ParameterSpace, m: usize, skip: usize) -> Result<SaltelliMatrices> {
    if m == 0 || !m.is_power_of_two() {
        return Err(Error::BadSampleCount(m));
    }
    let k = space.dimension();
    let block = sobol_sequence(2 * k, m, skip)?;
    let mut a = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    for row in &block {
        a.push(space.scale(&row[..k]));
        b.push(space.scale(&row[k..]));
    }
    let mut ab = Vec::with_capacity(k);
    for i in 0..k {
        let mut m_i = a.clone();
        for (row, b_row) in m_i.iter_mut().zip(&b) {
            row[i] = b_row[i];
        }
        ab.push(m_i);
    }
    Ok(SaltelliMatrices { a, b, ab })
}

/// Handling of invalid model evaluations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum InvalidPolicy {
    /// Substitute a fixed fitness, keeping the design matrices paired.
    Penalize(f64),
    /// Drop the row from all matrices.
    ExcludeRow,
}

impl Default for InvalidPolicy {
    fn default() -> Self {
        InvalidPolicy::Penalize(crate::stability::INVALID_FITNESS)
    }
}

/// Main/total effect indices with bootstrap standard errors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SobolResult {
    pub names: Vec<String>,
    #[serde(rename = "S")]
    pub s: Vec<f64>,
    #[serde(rename = "S_T")]
    pub s_t: Vec<f64>,
    pub s_stderr: Vec<f64>,
    pub st_stderr: Vec<f64>,
    pub variance: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub evaluations: usize,
    pub invalid_count: usize,
}

fn indices_from_rows(
    g_a: &[f64],
    g_b: &[f64],
    g_ab: &[Vec<f64>],
    rows: &[usize],
) -> (Vec<f64>, Vec<f64>, f64) {
    let k = g_ab.len();
    let n = rows.len() as f64;
    let mut pooled_sum = 0.0;
    let mut pooled_sq = 0.0;
    for &j in rows {
        pooled_sum += g_a[j] + g_b[j];
        pooled_sq += g_a[j] * g_a[j] + g_b[j] * g_b[j];
    }
    let pooled_n = 2.0 * n;
    let mean = pooled_sum / pooled_n;
    let second_moment = pooled_sq / pooled_n;
    let mut variance = (second_moment - mean * mean).max(0.0);
    // constant models: round cancellation noise down to an exact zero
    if variance <= 1e-12 * second_moment.max(1e-300) {
        variance = 0.0;
    }

    let mut s = vec![0.0; k];
    let mut s_t = vec![0.0; k];
    if variance > 0.0 {
        for i in 0..k {
            let mut v_main = 0.0;
            let mut v_total = 0.0;
            for &j in rows {
                v_main += g_b[j] * (g_ab[i][j] - g_a[j]);
                let diff = g_a[j] - g_ab[i][j];
                v_total += diff * diff;
            }
            s[i] = (v_main / n) / variance;
            s_t[i] = (v_total / (2.0 * n)) / variance;
        }
    }
    (s, s_t, variance)
}

/// Saltelli Monte Carlo estimation of the main and total effect indices.
///
/// `model` returns `None` for invalid evaluations (criterion-inapplicable
/// or collapsed parameter groups), handled according to `policy`.
/// Evaluations run in parallel; the reduction is a fixed-order sum over
/// row index, so results are independent of scheduling.
pub fn estimate_indices<F>(
    space: &ParameterSpace,
    model: F,
    m: usize,
    skip: usize,
    policy: InvalidPolicy,
) -> Result<SobolResult>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    if m < 8 {
        return Err(Error::BadSampleCount(m));
    }
    let k = space.dimension();
    let design = saltelli_matrices(space, m, skip)?;

    let eval_matrix = |rows: &[Vec<f64>]| -> Vec<Option<f64>> {
        rows.par_iter().map(|row| model(row)).collect()
    };
    let raw_a = eval_matrix(&design.a);
    let raw_b = eval_matrix(&design.b);
    let raw_ab: Vec<Vec<Option<f64>>> = design.ab.iter().map(|mtx| eval_matrix(mtx)).collect();

    let mut invalid_count = 0usize;
    for v in raw_a.iter().chain(&raw_b).chain(raw_ab.iter().flatten()) {
        if v.is_none() {
            invalid_count += 1;
        }
    }

    let (g_a, g_b, g_ab, rows): (Vec<f64>, Vec<f64>, Vec<Vec<f64>>, Vec<usize>) = match policy {
        InvalidPolicy::Penalize(value) => {
            let fill = |v: &[Option<f64>]| v.iter().map(|x| x.unwrap_or(value)).collect::<Vec<_>>();
            (
                fill(&raw_a),
                fill(&raw_b),
                raw_ab.iter().map(|v| fill(v)).collect(),
                (0..m).collect(),
            )
        }
        InvalidPolicy::ExcludeRow => {
            let rows: Vec<usize> = (0..m)
                .filter(|&j| {
                    raw_a[j].is_some()
                        && raw_b[j].is_some()
                        && raw_ab.iter().all(|col| col[j].is_some())
                })
                .collect();
            if rows.is_empty() {
                return Err(Error::AllInvalid);
            }
            let fill = |v: &[Option<f64>]| v.iter().map(|x| x.unwrap_or(0.0)).collect::<Vec<_>>();
            (
                fill(&raw_a),
                fill(&raw_b),
                raw_ab.iter().map(|v| fill(v)).collect(),
                rows,
            )
        }
    };

    let (s, s_t, variance) = indices_from_rows(&g_a, &g_b, &g_ab, &rows);

    // bootstrap error bars over 100 row resamples, fixed seed
    const RESAMPLES: usize = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(0x50b0_1u64);
    let mut s_acc = vec![Vec::with_capacity(RESAMPLES); k];
    let mut st_acc = vec![Vec::with_capacity(RESAMPLES); k];
    for _ in 0..RESAMPLES {
        let resample: Vec<usize> = (0..rows.len())
            .map(|_| rows[rng.gen_range(0..rows.len())])
            .collect();
        let (rs, rst, _) = indices_from_rows(&g_a, &g_b, &g_ab, &resample);
        for i in 0..k {
            s_acc[i].push(rs[i]);
            st_acc[i].push(rst[i]);
        }
    }
    let stderr = |vals: &[f64]| {
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (vals.len() - 1) as f64).sqrt()
    };
    let s_stderr: Vec<f64> = s_acc.iter().map(|v| stderr(v)).collect();
    let st_stderr: Vec<f64> = st_acc.iter().map(|v| stderr(v)).collect();

    Ok(SobolResult {
        names: space.names.clone(),
        s,
        s_t,
        s_stderr,
        st_stderr,
        variance,
        m,
        evaluations: m * (k + 2),
        invalid_count,
    })
}

/// Model evaluator mapping a sampled parameter vector onto the stability
/// index, with frozen parameters applied on top of the baseline.
pub fn wtgsc_mu_model(
    space: &ParameterSpace,
    baseline: crate::wtgsc::WtGscParams,
) -> impl Fn(&[f64]) -> Option<f64> + Sync + '_ {
    move |values: &[f64]| {
        let mut p = baseline;
        let mut target = None;
        for (name, &value) in space.frozen.iter() {
            crate::wtgsc::apply_param(&mut p, &mut target, name, value).ok()?;
        }
        for (name, &value) in space.names.iter().zip(values) {
            crate::wtgsc::apply_param(&mut p, &mut target, name, value).ok()?;
        }
        if let Some(t) = target {
            p.v_g_remote = crate::wtgsc::calibrate_grid_voltage(&p, t).ok()?;
        }
        match crate::stability::stability_index(&p) {
            Ok(cert) => Some(cert.mu),
            Err(e) if e.is_criterion_inapplicable() => None,
            Err(_) => None,
        }
    }
}
