//! Global-best particle swarm optimisation over a bounded box.
//!
//! Positions are clamped to the bounds after every move. Random draws happen
//! on the calling thread in particle order, while objective evaluations run
//! in parallel. The result therefore depends only on the seed.

mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use train::{
    exemplars_from_benchmark, train, DECISION_DIM, training_objective, variable_ranges, TrainingResult,
    VariableRanges,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PsoConfig {
    pub particles: usize,
    pub max_iters: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub seed: u64,
    /// `[lo, hi]` per dimension.
    pub bounds: Vec<(f64, f64)>,
    /// Stop early once the best value improved by less than `stall_tol`
    /// over this many consecutive iterations. Zero disables the check.
    pub stall_iters: usize,
    pub stall_tol: f64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            particles: 30,
            max_iters: 100,
            inertia: 0.5,
            cognitive: 1.5,
            social: 1.5,
            seed: 0,
            bounds: Vec::new(),
            stall_iters: 10,
            stall_tol: 1e-9,
        }
    }
}

impl PsoConfig {
    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(Error::Validation("PSO needs at least 2 particles".into()));
        }
        if self.max_iters < 1 {
            return Err(Error::Validation("PSO needs at least 1 iteration".into()));
        }
        if self.bounds.is_empty() {
            return Err(Error::Validation("PSO bounds are empty".into()));
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Validation(format!(
                    "dimension {i}: invalid bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoOutcome {
    pub best: Vec<f64>,
    pub value: f64,
    /// Best value after initialisation, then after each iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
}

struct Particle {
    x: Vec<f64>,
    v: Vec<f64>,
    best_x: Vec<f64>,
    best_f: f64,
}

fn eval_all<F>(f: &F, positions: Vec<&[f64]>) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    positions
        .into_par_iter()
        .map(|x| {
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        })
        .collect()
}

pub fn pso_minimize<F>(f: F, cfg: &PsoConfig) -> Result<PsoOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let dim = cfg.bounds.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut swarm: Vec<Particle> = (0..cfg.particles)
        .map(|_| {
            let x: Vec<f64> = cfg
                .bounds
                .iter()
                .map(|&(lo, hi)| rng.random_range(lo..=hi))
                .collect();
            let v: Vec<f64> = cfg
                .bounds
                .iter()
                .map(|&(lo, hi)| {
                    let span = hi - lo;
                    rng.random_range(-span..=span)
                })
                .collect();
            Particle {
                best_x: x.clone(),
                x,
                v,
                best_f: f64::INFINITY,
            }
        })
        .collect();

    let values = eval_all(&f, swarm.iter().map(|p| p.x.as_slice()).collect());
    let mut g_idx = 0;
    for (i, (p, &val)) in swarm.iter_mut().zip(&values).enumerate() {
        p.best_f = val;
        if val < values[g_idx] {
            g_idx = i;
        }
    }
    let mut g_x = swarm[g_idx].x.clone();
    let mut g_f = swarm[g_idx].best_f;
    let mut trace = vec![g_f];

    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        for p in swarm.iter_mut() {
            for d in 0..dim {
                let rp: f64 = rng.random();
                let rg: f64 = rng.random();
                p.v[d] = cfg.inertia * p.v[d]
                    + cfg.cognitive * rp * (p.best_x[d] - p.x[d])
                    + cfg.social * rg * (g_x[d] - p.x[d]);
                let (lo, hi) = cfg.bounds[d];
                p.x[d] = (p.x[d] + p.v[d]).clamp(lo, hi);
            }
        }
        let values = eval_all(&f, swarm.iter().map(|p| p.x.as_slice()).collect());
        for (p, &val) in swarm.iter_mut().zip(&values) {
            if val < p.best_f {
                p.best_f = val;
                p.best_x.clone_from(&p.x);
                if val < g_f {
                    g_f = val;
                    g_x.clone_from(&p.x);
                }
            }
        }
        trace.push(g_f);

        let k = cfg.stall_iters;
        if k > 0 && trace.len() > k && trace[trace.len() - 1 - k] - g_f < cfg.stall_tol {
            break;
        }
    }

    Ok(PsoOutcome {
        best: g_x,
        value: g_f,
        trace,
        iterations,
    })
}
