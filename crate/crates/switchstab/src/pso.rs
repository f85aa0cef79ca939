//! Bounded particle swarm optimization over a parameter hypercube.
//!
//! Deterministic for a fixed seed: the swarm is initialized from a Sobol'
//! block, velocities start at zero, and all random coefficients come from
//! a counter-based ChaCha stream consumed in a fixed order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sensitivity::{sobol_sequence, ParameterSpace};
use crate::{Error, Result};

/// Improvement below this over [`STALL_ITERS`] iterations terminates early.
const STALL_TOL: f64 = 1e-6;
const STALL_ITERS: usize = 15;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub max_iters: usize,
    /// Inertia weight, interpolated linearly from start to end.
    pub w_start: f64,
    pub w_end: f64,
    /// Cognitive acceleration coefficient.
    pub c1: f64,
    /// Social acceleration coefficient.
    pub c2: f64,
    /// Velocity clamp per coordinate, as a fraction of the bound width.
    pub v_max_fraction: f64,
    /// RNG seed; runs are reproducible per seed.
    pub seed: u64,
    /// Names of the parameters allowed to vary; the rest stay at
    /// `baseline` (or the bound midpoint when no baseline is given).
    pub subset_mask: Option<Vec<String>>,
    /// Values for masked-out coordinates, in space order.
    pub baseline: Option<Vec<f64>>,
}

impl PsoConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            swarm_size: 30,
            max_iters: 100,
            w_start: 0.9,
            w_end: 0.4,
            c1: 2.0,
            c2: 2.0,
            v_max_fraction: 0.2,
            seed,
            subset_mask: None,
            baseline: None,
        }
    }

    fn validate(&self, space: &ParameterSpace) -> Result<Vec<bool>> {
        if self.swarm_size == 0 || self.max_iters == 0 {
            return Err(Error::Config(
                "swarm size and iteration count must be positive".into(),
            ));
        }
        if !(self.v_max_fraction > 0.0 && self.v_max_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "v_max_fraction must lie in (0, 1], got {}",
                self.v_max_fraction
            )));
        }
        if let Some(b) = &self.baseline {
            if b.len() != space.dimension() {
                return Err(Error::Config(format!(
                    "baseline has {} values for a {}-dimensional space",
                    b.len(),
                    space.dimension()
                )));
            }
        }
        let varied = match &self.subset_mask {
            None => vec![true; space.dimension()],
            Some(names) => {
                for n in names {
                    if !space.names.iter().any(|s| s == n) {
                        return Err(Error::Config(format!(
                            "subset parameter `{n}` is not in the space"
                        )));
                    }
                }
                space.names.iter().map(|s| names.contains(s)).collect()
            }
        };
        if varied.iter().all(|&v| !v) {
            return Err(Error::Config("subset mask freezes every parameter".into()));
        }
        Ok(varied)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PsoResult {
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    /// Global best after initialization and after each iteration;
    /// non-decreasing.
    pub history: Vec<f64>,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged_early: bool,
}

/// Maximize `fitness` over the space. Positions are clamped to the
/// bounds with the violating velocity component zeroed.
pub fn pso_optimize<F>(space: &ParameterSpace, fitness: F, cfg: &PsoConfig) -> Result<PsoResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let varied = cfg.validate(space)?;
    let k = space.dimension();
    let n = cfg.swarm_size;
    let frozen_values: Vec<f64> = match &cfg.baseline {
        Some(b) => b.clone(),
        None => space.bounds.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect(),
    };
    let widths: Vec<f64> = space.bounds.iter().map(|&(lo, hi)| hi - lo).collect();
    let v_max: Vec<f64> = widths.iter().map(|w| cfg.v_max_fraction * w).collect();

    let mut positions: Vec<Vec<f64>> = sobol_sequence(k, n, 0)?
        .iter()
        .map(|u| {
            let mut x = space.scale(u);
            for d in 0..k {
                if !varied[d] {
                    x[d] = frozen_values[d];
                }
            }
            x
        })
        .collect();
    let mut velocities = vec![vec![0.0; k]; n];

    let evaluate = |pos: &[Vec<f64>]| -> Vec<f64> {
        pos.par_iter().map(|p| fitness(p)).collect()
    };

    let mut evaluations = 0usize;
    let mut scores = evaluate(&positions);
    evaluations += n;

    let mut pbest = positions.clone();
    let mut pbest_score = scores.clone();
    let mut gbest_idx = 0usize;
    for i in 1..n {
        if pbest_score[i] > pbest_score[gbest_idx] {
            gbest_idx = i;
        }
    }
    let mut gbest = pbest[gbest_idx].clone();
    let mut gbest_score = pbest_score[gbest_idx];
    let mut history = vec![gbest_score];

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stall = 0usize;
    let mut iterations = 0usize;
    let mut converged_early = false;

    for iter in 0..cfg.max_iters {
        let frac = if cfg.max_iters > 1 {
            iter as f64 / (cfg.max_iters - 1) as f64
        } else {
            0.0
        };
        let w = cfg.w_start + frac * (cfg.w_end - cfg.w_start);

        for i in 0..n {
            for d in 0..k {
                if !varied[d] {
                    velocities[i][d] = 0.0;
                    positions[i][d] = frozen_values[d];
                    continue;
                }
                let r1: f64 = rng.gen();
                let r2: f64 = rng.gen();
                let mut v = w * velocities[i][d]
                    + cfg.c1 * r1 * (pbest[i][d] - positions[i][d])
                    + cfg.c2 * r2 * (gbest[d] - positions[i][d]);
                v = v.clamp(-v_max[d], v_max[d]);
                let mut x = positions[i][d] + v;
                let (lo, hi) = space.bounds[d];
                if x < lo {
                    x = lo;
                    v = 0.0;
                } else if x > hi {
                    x = hi;
                    v = 0.0;
                }
                velocities[i][d] = v;
                positions[i][d] = x;
            }
        }

        scores = evaluate(&positions);
        evaluations += n;
        let prev_best = gbest_score;
        for i in 0..n {
            if scores[i] > pbest_score[i] {
                pbest_score[i] = scores[i];
                pbest[i] = positions[i].clone();
            }
            if scores[i] > gbest_score {
                gbest_score = scores[i];
                gbest = positions[i].clone();
            }
        }
        history.push(gbest_score);
        iterations = iter + 1;

        if gbest_score - prev_best < STALL_TOL {
            stall += 1;
            if stall >= STALL_ITERS {
                converged_early = true;
                break;
            }
        } else {
            stall = 0;
        }
    }

    Ok(PsoResult {
        best_position: gbest,
        best_fitness: gbest_score,
        history,
        evaluations,
        iterations,
        converged_early,
    })
}
