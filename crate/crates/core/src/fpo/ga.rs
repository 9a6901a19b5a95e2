//! Real-coded genetic algorithm: tournament selection, BLX-α crossover,
//! Gaussian mutation with a decaying width, and elitism.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Grid, Skeleton, PENALTY_FLOOR, PENALTY_WEIGHT};
use crate::error::{Error, Result};

/// Per-generation factor applied to `mutation_sigma`.
pub const SIGMA_DECAY: f64 = 0.99;
/// Angle genes live in [0, 4π).
pub const ANGLE_RANGE: f64 = 4.0 * PI;
// stand-in for NaN/inf fitness so generation statistics stay finite
const WORST_FITNESS: f64 = -1e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GAConfig {
    pub population: usize,
    pub max_generations: usize,
    pub tournament_k: usize,
    pub crossover_rate: f64,
    pub blx_alpha: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Initial mutation width in radians (or coefficient units).
    pub mutation_sigma: f64,
    pub elitism: usize,
    pub target_fitness: f64,
    pub stagnation_limit: usize,
    pub rng_seed: u64,
}

impl Default for GAConfig {
    fn default() -> Self {
        Self {
            population: 60,
            max_generations: 500,
            tournament_k: 3,
            crossover_rate: 0.9,
            blx_alpha: 0.5,
            mutation_rate: 0.25,
            mutation_sigma: 0.3,
            elitism: 2,
            target_fitness: 0.999999,
            stagnation_limit: 100,
            rng_seed: 20211,
        }
    }
}

impl GAConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: GAConfig = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.population < 2 {
            return bad(format!("population must be >= 2, got {}", self.population));
        }
        if self.elitism >= self.population {
            return bad(format!(
                "elitism ({}) must be below population ({})",
                self.elitism, self.population
            ));
        }
        if self.tournament_k == 0 {
            return bad("tournament_k must be >= 1".into());
        }
        if self.max_generations == 0 {
            return bad("max_generations must be >= 1".into());
        }
        for (name, v) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        for (name, v) in [
            ("blx_alpha", self.blx_alpha),
            ("mutation_sigma", self.mutation_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !self.target_fitness.is_finite() {
            return bad("target_fitness must be finite".into());
        }
        Ok(())
    }
}

/// How genes are initialized and kept in range.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneDomain {
    /// Uniform start in [0, 4π), wrapped back after every change.
    Angle,
    /// Uniform start in `center ± spread`, unbounded afterwards.
    Free { center: Vec<f64>, spread: Vec<f64> },
}

pub trait Objective: Sync {
    fn gene_count(&self) -> usize;
    fn domain(&self) -> GeneDomain;
    fn fitness(&self, genes: &[f64]) -> f64;
}

/// Fixed genes scored over a whole grid.
pub(crate) struct GridObjective<'a> {
    pub skeleton: &'a Skeleton,
    pub grid: &'a Grid,
}

impl Objective for GridObjective<'_> {
    fn gene_count(&self) -> usize {
        self.skeleton.gene_count()
    }

    fn domain(&self) -> GeneDomain {
        GeneDomain::Angle
    }

    fn fitness(&self, genes: &[f64]) -> f64 {
        let (mut min, mut sum) = (f64::INFINITY, 0.0);
        for (g, t) in self.grid.nodes() {
            let f = self.skeleton.fidelity(genes, g, t);
            min = min.min(f);
            sum += f;
        }
        sum / self.grid.len() as f64 - PENALTY_WEIGHT * (PENALTY_FLOOR - min).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub best: Vec<f64>,
    pub best_fitness: f64,
    pub history: Vec<GenStats>,
    pub converged: bool,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for one (seed, stream, generation) triple, so runs
/// never depend on scheduling order.
fn keyed_rng(seed: u64, stream: u64, generation: u64) -> ChaCha8Rng {
    let key = splitmix(splitmix(splitmix(seed) ^ stream) ^ generation);
    ChaCha8Rng::seed_from_u64(key)
}

fn wrap_angle(x: f64) -> f64 {
    let w = x.rem_euclid(ANGLE_RANGE);
    // rem_euclid can round up to the modulus itself
    if w >= ANGLE_RANGE {
        0.0
    } else {
        w
    }
}

/// Evolve fixed genes for `skeleton` against every node of `grid`.
pub fn evolve(skeleton: &Skeleton, grid: &Grid, config: &GAConfig) -> Result<RunResult> {
    evolve_objective(&GridObjective { skeleton, grid }, config, 0, None)
}

/// Core GA loop. `stream` separates the random streams of independent runs
/// sharing one seed; `initial` replaces the random starting population.
pub fn evolve_objective(
    objective: &dyn Objective,
    config: &GAConfig,
    stream: u64,
    initial: Option<&[Vec<f64>]>,
) -> Result<RunResult> {
    config.validate()?;
    let n = objective.gene_count();
    let domain = objective.domain();
    let fix = |x: f64| match domain {
        GeneDomain::Angle => wrap_angle(x),
        GeneDomain::Free { .. } => x,
    };

    let mut pop: Vec<Vec<f64>> = match initial {
        Some(init) => {
            if init.len() != config.population {
                return Err(Error::LengthMismatch(init.len(), config.population));
            }
            if let Some(bad) = init.iter().find(|c| c.len() != n) {
                return Err(Error::LengthMismatch(bad.len(), n));
            }
            init.to_vec()
        }
        None => {
            let mut rng = keyed_rng(config.rng_seed, stream, 0);
            (0..config.population)
                .map(|_| {
                    (0..n)
                        .map(|i| match &domain {
                            GeneDomain::Angle => rng.random::<f64>() * ANGLE_RANGE,
                            GeneDomain::Free { center, spread } => {
                                center[i] + spread[i] * (2.0 * rng.random::<f64>() - 1.0)
                            }
                        })
                        .collect()
                })
                .collect()
        }
    };

    let mut history = Vec::new();
    let mut best_ever = f64::NEG_INFINITY;
    let mut last_improvement = 0;
    let mut sigma = config.mutation_sigma;
    let mut generation = 0;
    loop {
        let fit: Vec<f64> = pop
            .par_iter()
            .map(|c| {
                let f = objective.fitness(c);
                if f.is_finite() {
                    f
                } else {
                    WORST_FITNESS
                }
            })
            .collect();
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| fit[b].total_cmp(&fit[a]).then(a.cmp(&b)));
        let best = fit[order[0]];
        let mean = fit.iter().sum::<f64>() / fit.len() as f64;
        history.push(GenStats {
            generation,
            best,
            mean,
        });
        if best > best_ever {
            best_ever = best;
            last_improvement = generation;
        }
        let done = best >= config.target_fitness
            || generation - last_improvement >= config.stagnation_limit
            || generation + 1 >= config.max_generations;
        if done {
            return Ok(RunResult {
                best: pop[order[0]].clone(),
                best_fitness: best,
                history,
                converged: best >= config.target_fitness,
            });
        }

        generation += 1;
        let mut rng = keyed_rng(config.rng_seed, stream, generation as u64);
        let tournament = |rng: &mut ChaCha8Rng| -> usize {
            let mut winner = rng.random_range(0..pop.len());
            for _ in 1..config.tournament_k {
                let c = rng.random_range(0..pop.len());
                if fit[c] > fit[winner] {
                    winner = c;
                }
            }
            winner
        };
        let mut next: Vec<Vec<f64>> = order[..config.elitism].iter().map(|&i| pop[i].clone()).collect();
        while next.len() < config.population {
            let a = tournament(&mut rng);
            let b = tournament(&mut rng);
            let mut child: Vec<f64> = if rng.random::<f64>() < config.crossover_rate {
                pop[a]
                    .iter()
                    .zip(&pop[b])
                    .map(|(&x, &y)| {
                        let (lo, hi) = (x.min(y), x.max(y));
                        let d = config.blx_alpha * (hi - lo);
                        lo - d + rng.random::<f64>() * (hi - lo + 2.0 * d)
                    })
                    .collect()
            } else {
                pop[a].clone()
            };
            for g in child.iter_mut() {
                if rng.random::<f64>() < config.mutation_rate {
                    let z: f64 = rng.sample(StandardNormal);
                    *g += sigma * z;
                }
                *g = fix(*g);
            }
            next.push(child);
        }
        pop = next;
        sigma *= SIGMA_DECAY;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Sphere;

    impl Objective for Sphere {
        fn gene_count(&self) -> usize {
            3
        }
        fn domain(&self) -> GeneDomain {
            GeneDomain::Free {
                center: vec![0.0; 3],
                spread: vec![5.0; 3],
            }
        }
        fn fitness(&self, g: &[f64]) -> f64 {
            1.0 - g.iter().map(|x| (x - 1.0).powi(2)).sum::<f64>()
        }
    }

    #[test]
    fn config_json_and_validation() {
        let cfg = GAConfig::from_json(r#"{"population": 10, "rng_seed": 3}"#).unwrap();
        assert_eq!(cfg.population, 10);
        assert_eq!(cfg.max_generations, 500);
        assert!(GAConfig::from_json(r#"{"population": 1}"#).is_err());
        assert!(GAConfig::from_json(r#"{"popsize": 10}"#).is_err());
        assert!(GAConfig::from_json(r#"{"mutation_rate": 1.5}"#).is_err());
        assert!(GAConfig::from_json(r#"{"population": 4, "elitism": 4}"#).is_err());
        let d = GAConfig::default();
        assert_eq!(GAConfig::from_json(&d.to_json()).unwrap(), d);
    }

    #[test]
    fn solves_sphere_and_is_monotone() {
        let cfg = GAConfig {
            target_fitness: 1.0 - 1e-8,
            ..Default::default()
        };
        let r = evolve_objective(&Sphere, &cfg, 0, None).unwrap();
        assert!(r.converged, "{}", r.best_fitness);
        assert!(r.history.windows(2).all(|w| w[1].best >= w[0].best));
    }

    #[test]
    fn seeds_determine_runs() {
        let cfg = GAConfig {
            max_generations: 30,
            ..Default::default()
        };
        let a = evolve_objective(&Sphere, &cfg, 5, None).unwrap();
        let b = evolve_objective(&Sphere, &cfg, 5, None).unwrap();
        assert_eq!(a, b);
        let c = evolve_objective(&Sphere, &cfg, 6, None).unwrap();
        assert_ne!(a.history, c.history);
    }

    #[test]
    fn clones_without_mutation_stay_put() {
        let cfg = GAConfig {
            population: 8,
            mutation_rate: 0.0,
            target_fitness: 2.0,
            stagnation_limit: 20,
            ..Default::default()
        };
        let init = vec![vec![1.0, 1.0, 1.0]; 8];
        let r = evolve_objective(&Sphere, &cfg, 0, Some(&init)).unwrap();
        assert_eq!(r.history.len(), 21);
        assert!(r.history.iter().all(|h| h.best == 1.0 && h.mean == 1.0));
        assert!(!r.converged);
    }

    #[test]
    fn wrap_stays_in_range() {
        for x in [-1e-18, -3.0, 0.0, ANGLE_RANGE, 100.0] {
            let w = wrap_angle(x);
            assert!((0.0..ANGLE_RANGE).contains(&w), "{x} -> {w}");
        }
    }
}
