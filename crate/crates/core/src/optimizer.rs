//! Global-best particle swarm over a closed interval.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{par, rng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoConfig {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            particles: 10,
            iterations: 20,
            inertia: 0.7,
            cognitive: 1.5,
            social: 1.5,
            lower: 0.0,
            upper: 1.0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return Err(Error::Config(format!(
                "bounds [{}, {}] are not a proper interval",
                self.lower, self.upper
            )));
        }
        if self.particles < 2 {
            return Err(Error::Config("at least two particles are required".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("at least one iteration is required".into()));
        }
        Ok(())
    }

    pub fn evaluations(&self) -> usize {
        self.particles * (self.iterations + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoResult {
    pub x_best: f64,
    pub f_best: f64,
    pub evaluations: usize,
    /// Global best value after initialization and after every iteration.
    pub history: Vec<f64>,
    /// Initial particle positions, after anchors and clamping.
    pub initial_positions: Vec<f64>,
}

/// Minimizes `objective` over `[cfg.lower, cfg.upper]`.
pub fn minimize_scalar<F>(objective: F, cfg: &PsoConfig, seed: u64) -> Result<PsoResult>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    minimize_scalar_anchored(objective, cfg, seed, &[])
}

/// Like [`minimize_scalar`], but the first particles start at `anchors`
/// (clamped to the bounds) instead of random positions. Extra anchors
/// beyond the swarm size are ignored.
pub fn minimize_scalar_anchored<F>(
    objective: F,
    cfg: &PsoConfig,
    seed: u64,
    anchors: &[f64],
) -> Result<PsoResult>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    cfg.validate()?;
    let (lo, hi) = (cfg.lower, cfg.upper);
    let mut rng = rng::stream(seed, rng::PSO);

    let mut x: Vec<f64> = (0..cfg.particles)
        .map(|_| rng.random_range(lo..=hi))
        .collect();
    for (xi, &a) in x.iter_mut().zip(anchors) {
        *xi = a.clamp(lo, hi);
    }
    let initial_positions = x.clone();
    let mut v = vec![0.0; cfg.particles];

    let mut f = par::map_slice(&x, |&xi| objective(xi));
    let mut best_x = x.clone();
    let mut best_f = f.clone();
    let mut g = 0;
    for i in 1..cfg.particles {
        if f[i] < f[g] {
            g = i;
        }
    }
    let (mut gx, mut gf) = (x[g], f[g]);
    let mut history = Vec::with_capacity(cfg.iterations + 1);
    history.push(gf);

    for _ in 0..cfg.iterations {
        for i in 0..cfg.particles {
            let r1: f64 = rng.random();
            let r2: f64 = rng.random();
            v[i] = cfg.inertia * v[i]
                + cfg.cognitive * r1 * (best_x[i] - x[i])
                + cfg.social * r2 * (gx - x[i]);
            x[i] = (x[i] + v[i]).clamp(lo, hi);
        }
        f = par::map_slice(&x, |&xi| objective(xi));
        for i in 0..cfg.particles {
            if f[i] < best_f[i] {
                best_f[i] = f[i];
                best_x[i] = x[i];
            }
            if f[i] < gf {
                gf = f[i];
                gx = x[i];
            }
        }
        history.push(gf);
    }

    Ok(PsoResult {
        x_best: gx,
        f_best: gf,
        evaluations: cfg.evaluations(),
        history,
        initial_positions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn finds_quadratic_minimum() {
        let r = minimize_scalar(|x| (x - 0.3).powi(2), &PsoConfig::default(), 0).unwrap();
        assert!((r.x_best - 0.3).abs() < 1e-3, "{}", r.x_best);
        assert_eq!(r.evaluations, 210);
        assert_eq!(r.history.len(), 21);
    }

    #[test]
    fn counts_evaluations() {
        let calls = AtomicUsize::new(0);
        let cfg = PsoConfig {
            particles: 4,
            iterations: 3,
            ..PsoConfig::default()
        };
        let r = minimize_scalar(
            |x| {
                calls.fetch_add(1, Ordering::Relaxed);
                x
            },
            &cfg,
            1,
        )
        .unwrap();
        assert_eq!(calls.load(Ordering::Relaxed), 16);
        assert_eq!(r.evaluations, 16);
    }

    #[test]
    fn constant_objective_keeps_first_particle() {
        let r = minimize_scalar(|_| 4.0, &PsoConfig::default(), 7).unwrap();
        assert_eq!(r.f_best, 4.0);
        assert_eq!(r.x_best, r.initial_positions[0]);
    }

    #[test]
    fn step_objective_reaches_zero() {
        for seed in 0..5 {
            let r = minimize_scalar(|x| if x < 0.5 { 0.0 } else { 1.0 }, &PsoConfig::default(), seed).unwrap();
            assert_eq!(r.f_best, 0.0, "seed {seed}");
        }
    }

    #[test]
    fn anchors_replace_initial_positions() {
        let r = minimize_scalar_anchored(|x| x, &PsoConfig::default(), 3, &[0.25, 2.0]).unwrap();
        assert_eq!(&r.initial_positions[..2], &[0.25, 1.0]);
        assert!(r.f_best <= 0.25);
    }

    #[test]
    fn invalid_bounds_rejected() {
        let cfg = PsoConfig {
            lower: 1.0,
            upper: 1.0,
            ..PsoConfig::default()
        };
        assert!(matches!(minimize_scalar(|x| x, &cfg, 0), Err(Error::Config(_))));
    }

    proptest::proptest! {
        #[test]
        fn history_is_monotone_and_in_bounds(seed in 0u64..1000, c in -2.0f64..3.0) {
            let cfg = PsoConfig { particles: 5, iterations: 8, ..PsoConfig::default() };
            let obj = |x: f64| (x - c).abs() + (7.0 * x).sin() * 0.1;
            let r = minimize_scalar(obj, &cfg, seed).unwrap();
            proptest::prop_assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
            proptest::prop_assert!((0.0..=1.0).contains(&r.x_best));
            let initial_min = r.initial_positions.iter().map(|&x| obj(x)).fold(f64::INFINITY, f64::min);
            proptest::prop_assert!(r.f_best <= initial_min);
            let again = minimize_scalar(obj, &cfg, seed).unwrap();
            proptest::prop_assert_eq!(r, again);
        }
    }
}
