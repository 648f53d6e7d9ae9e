//! Subspace-selective self-adaptive differential evolution.
//!
//! Each generation first decides, with probability `switch_s`, whether
//! breeding is confined to a freshly drawn random `subspace_m`-dimensional
//! coordinate subspace (shared by the whole generation) or runs over the
//! full genome. Every individual then
//!
//! 1. self-adapts its mutation rate `μ` and crossover rate `ξ`,
//! 2. builds a mutant `D_r1 + μ·(D_r2 − D_r3)` from three distinct others,
//! 3. crosses it with itself over the active coordinates,
//! 4. repairs out-of-range coordinates by reflection,
//! 5. replaces itself when the candidate is strictly fitter.
//!
//! # Random streams
//!
//! Draws come from ChaCha8 streams keyed by `(generation, slot)`; slot 0
//! is the generation-level stream (switch draw and subspace), slot `i + 1`
//! belongs to individual `i`. Generation 0 is initialization. An
//! individual's stream is consumed in a fixed order: `r1, r2` (mutation
//! rate), `r3, r4` (crossover rate), the three donor indices by rejection,
//! one uniform per active coordinate, then the forced index when enabled.
//! Because streams are pre-assigned, results do not depend on how many
//! workers evaluate the population.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param_err, Error, Result};
use crate::fmt::fmt_g12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SussadeConfig {
    pub population_size: usize,
    pub mu_lower: f64,
    pub mu_upper: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub switch_s: f64,
    pub subspace_m: usize,
    pub max_generations: usize,
    /// Total objective evaluations, including the initial population.
    pub max_evaluations: Option<u64>,
    pub target_fitness: f64,
    pub seed: u64,
    pub bounds: (f64, f64),
    /// Box for the initial population; the full bounds when unset. Repair
    /// always uses `bounds`.
    pub init_bounds: Option<(f64, f64)>,
    /// Starting mutation rate; drawn from `[μ_l, μ_l + μ_u]` when unset.
    pub initial_mu: Option<f64>,
    /// Starting crossover rate; drawn from `(0, 1]` when unset.
    pub initial_xi: Option<f64>,
    /// Canonical binomial crossover: one active coordinate always inherits
    /// from the mutant.
    pub force_crossover_index: bool,
    /// Half-width of the cloud drawn around a warm-start genome; `None`
    /// keeps the rest of the population uniform over the bounds.
    pub warm_start_spread: Option<f64>,
}

impl Default for SussadeConfig {
    fn default() -> Self {
        Self {
            population_size: 32,
            mu_lower: 0.1,
            mu_upper: 0.1,
            kappa1: 0.1,
            kappa2: 0.9,
            switch_s: 0.5,
            subspace_m: 1,
            max_generations: 10_000,
            max_evaluations: None,
            target_fitness: 1.0,
            seed: 0,
            bounds: (-2.5, 2.5),
            init_bounds: None,
            initial_mu: None,
            initial_xi: None,
            force_crossover_index: false,
            warm_start_spread: None,
        }
    }
}

impl SussadeConfig {
    /// Self-adaptation constants of the common jDE scheme
    /// (`F ∈ [0.1, 1.0]`, `τ₁ = τ₂ = 0.1`), for comparison runs.
    pub fn jde_convention() -> Self {
        Self {
            mu_upper: 0.9,
            kappa2: 0.1,
            ..Self::default()
        }
    }

    pub fn validate(&self, dims: usize) -> Result<()> {
        if self.population_size < 4 {
            return param_err("population needs at least four members");
        }
        if dims == 0 {
            return param_err("genome must have at least one coordinate");
        }
        if !(0.0..=1.0).contains(&self.switch_s) {
            return param_err("switch parameter S must lie in [0, 1]");
        }
        if self.subspace_m == 0 || self.subspace_m > dims {
            return param_err(format!("subspace dimension {} invalid for {dims} coordinates", self.subspace_m));
        }
        if !(self.bounds.0 < self.bounds.1) {
            return param_err("lower bound must be below upper bound");
        }
        if let Some((a, b)) = self.init_bounds {
            if !(self.bounds.0 <= a && a < b && b <= self.bounds.1) {
                return param_err("init_bounds must be a non-empty box inside bounds");
            }
        }
        for (name, p) in [("kappa1", self.kappa1), ("kappa2", self.kappa2)] {
            if !(0.0..=1.0).contains(&p) {
                return param_err(format!("{name} must be a probability"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: Vec<f64>,
    pub mu: f64,
    pub xi: f64,
    pub fitness: Option<f64>,
}

impl Individual {
    fn score(&self) -> f64 {
        self.fitness.unwrap_or(f64::NEG_INFINITY)
    }
}

pub fn stream(seed: u64, generation: u64, slot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((generation << 24) | slot);
    rng
}

/// Uniform on `(0, 1]`.
fn unit_open_closed<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// New `(μ, ξ)` for an individual.
pub fn self_adapt<R: Rng + ?Sized>(ind: &Individual, cfg: &SussadeConfig, rng: &mut R) -> (f64, f64) {
    let (r1, r2) = (unit_open_closed(rng), unit_open_closed(rng));
    let (r3, r4) = (unit_open_closed(rng), unit_open_closed(rng));
    let mu = if r2 < cfg.kappa1 { cfg.mu_lower + r1 * cfg.mu_upper } else { ind.mu };
    let xi = if r4 < cfg.kappa2 { r3 } else { ind.xi };
    (mu, xi)
}

/// Donor indices `r1, r2, r3`: distinct, none equal to `i`.
pub fn pick_donors<R: Rng + ?Sized>(p: usize, i: usize, rng: &mut R) -> [usize; 3] {
    let mut out = [usize::MAX; 3];
    let mut n = 0;
    while n < 3 {
        let r = rng.random_range(0..p);
        if r != i && !out[..n].contains(&r) {
            out[n] = r;
            n += 1;
        }
    }
    out
}

/// Mutant `D_r1 + μ·(D_r2 − D_r3)`.
pub fn mutate<R: Rng + ?Sized>(pop: &[Vec<f64>], i: usize, mu: f64, rng: &mut R) -> Vec<f64> {
    let [a, b, c] = pick_donors(pop.len(), i, rng);
    pop[a]
        .iter()
        .zip(&pop[b])
        .zip(&pop[c])
        .map(|((x, y), z)| x + mu * (y - z))
        .collect()
}

/// Takes the mutant's coordinate where `r < ξ`, restricted to `active`.
pub fn crossover<R: Rng + ?Sized>(
    parent: &[f64],
    mutant: &[f64],
    xi: f64,
    active: &[usize],
    force_index: bool,
    rng: &mut R,
) -> Vec<f64> {
    let mut child = parent.to_vec();
    for &j in active {
        if rng.random::<f64>() < xi {
            child[j] = mutant[j];
        }
    }
    if force_index {
        let j = active[rng.random_range(0..active.len())];
        child[j] = mutant[j];
    }
    child
}

/// Reflects `x` into `[lo, hi]`; values already inside are unchanged.
pub fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    if (lo..=hi).contains(&x) {
        return x;
    }
    let w = hi - lo;
    let y = (x - lo).rem_euclid(2.0 * w);
    let r = if y <= w { lo + y } else { hi - (y - w) };
    r.clamp(lo, hi)
}

/// Strict-improvement replacement.
pub fn select(parent: Individual, child: Individual) -> Individual {
    if child.score() > parent.score() {
        child
    } else {
        parent
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub evaluations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    TargetReached,
    GenerationLimit,
    EvaluationLimit,
    ObjectiveFailed(String),
}

#[derive(Debug, Clone)]
pub struct SussadeOutcome {
    pub best_genome: Vec<f64>,
    pub best_fitness: f64,
    pub history: Vec<GenerationStats>,
    pub evaluations: u64,
    pub termination: Termination,
}

impl SussadeOutcome {
    pub fn history_csv(&self) -> String {
        history_csv(&self.history)
    }
}

pub fn history_csv(history: &[GenerationStats]) -> String {
    let mut out = String::from("generation,best_fitness,mean_fitness\n");
    for h in history {
        let _ = writeln!(out, "{},{},{}", h.generation, fmt_g12(h.best_fitness), fmt_g12(h.mean_fitness));
    }
    out
}

/// Resumable optimizer state.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sussade {
    pub config: SussadeConfig,
    pub dims: usize,
    pub generation: usize,
    pub evaluations: u64,
    pub population: Vec<Individual>,
    pub history: Vec<GenerationStats>,
}

impl Sussade {
    /// Draws and evaluates the initial population.
    pub fn initialize<F>(objective: &F, dims: usize, cfg: SussadeConfig, warm_start: Option<&[f64]>) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        cfg.validate(dims)?;
        if let Some(w) = warm_start {
            if w.len() != dims {
                return param_err("warm-start genome has the wrong length");
            }
        }
        let (lo, hi) = cfg.bounds;
        let (ilo, ihi) = cfg.init_bounds.unwrap_or(cfg.bounds);
        let population: Vec<Individual> = (0..cfg.population_size)
            .map(|i| {
                let mut rng = stream(cfg.seed, 0, i as u64 + 1);
                let genome = match (warm_start, cfg.warm_start_spread) {
                    (Some(w), _) if i == 0 => w.iter().map(|&x| reflect(x, lo, hi)).collect(),
                    (Some(w), Some(spread)) => w
                        .iter()
                        .map(|&x| reflect(x + spread * rng.random_range(-1.0..=1.0), lo, hi))
                        .collect(),
                    _ => (0..dims).map(|_| rng.random_range(ilo..=ihi)).collect(),
                };
                let mu = cfg
                    .initial_mu
                    .unwrap_or_else(|| cfg.mu_lower + unit_open_closed(&mut rng) * cfg.mu_upper);
                let xi = cfg.initial_xi.unwrap_or_else(|| unit_open_closed(&mut rng));
                Individual {
                    genome,
                    mu,
                    xi,
                    fitness: None,
                }
            })
            .collect();
        let mut state = Self {
            config: cfg,
            dims,
            generation: 0,
            evaluations: 0,
            population,
            history: Vec::new(),
        };
        let fits: Vec<Result<f64>> = state.population.par_iter().map(|ind| objective(&ind.genome)).collect();
        for (ind, f) in state.population.iter_mut().zip(fits) {
            ind.fitness = Some(f?);
        }
        state.evaluations = state.population.len() as u64;
        state.record();
        Ok(state)
    }

    fn record(&mut self) {
        let best = self.best().score();
        let mean = self.population.iter().map(Individual::score).sum::<f64>() / self.population.len() as f64;
        self.history.push(GenerationStats {
            generation: self.generation,
            best_fitness: best,
            mean_fitness: mean,
            evaluations: self.evaluations,
        });
    }

    pub fn best(&self) -> &Individual {
        self.population
            .iter()
            .fold(&self.population[0], |b, x| if x.score() > b.score() { x } else { b })
    }

    /// Coordinates bred this generation, and the generation-level stream.
    pub fn active_coordinates(&self, generation: usize) -> Vec<usize> {
        let mut rng = stream(self.config.seed, generation as u64, 0);
        let r_g: f64 = rng.random();
        if r_g < self.config.switch_s {
            let mut idx = sample(&mut rng, self.dims, self.config.subspace_m).into_vec();
            idx.sort_unstable();
            idx
        } else {
            (0..self.dims).collect()
        }
    }

    /// Runs one generation. On objective failure the population is left
    /// untouched and the error is returned.
    pub fn step<F>(&mut self, objective: &F) -> Result<()>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let generation = self.generation + 1;
        let active = self.active_coordinates(generation);
        let genomes: Vec<Vec<f64>> = self.population.iter().map(|p| p.genome.clone()).collect();
        let cfg = &self.config;
        let (lo, hi) = cfg.bounds;
        let children: Vec<Result<(bool, Individual)>> = self
            .population
            .par_iter()
            .enumerate()
            .map(|(i, parent)| {
                let mut rng = stream(cfg.seed, generation as u64, i as u64 + 1);
                let (mu, xi) = self_adapt(parent, cfg, &mut rng);
                let mutant = mutate(&genomes, i, mu, &mut rng);
                let mut genome = crossover(&parent.genome, &mutant, xi, &active, cfg.force_crossover_index, &mut rng);
                for x in &mut genome {
                    *x = reflect(*x, lo, hi);
                }
                // an untouched copy cannot win a strict comparison; skip it
                if genome == parent.genome {
                    return Ok((false, parent.clone()));
                }
                let fitness = objective(&genome)?;
                Ok((
                    true,
                    Individual {
                        genome,
                        mu,
                        xi,
                        fitness: Some(fitness),
                    },
                ))
            })
            .collect();
        let children: Vec<(bool, Individual)> = children.into_iter().collect::<Result<_>>()?;
        self.evaluations += children.iter().filter(|c| c.0).count() as u64;
        let children = children.into_iter().map(|c| c.1);
        let old = std::mem::take(&mut self.population);
        self.population = old.into_iter().zip(children).map(|(p, c)| select(p, c)).collect();
        self.generation = generation;
        self.record();
        Ok(())
    }

    /// Continues until a stopping rule fires.
    pub fn run<F>(&mut self, objective: &F) -> SussadeOutcome
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let termination = loop {
            if self.best().score() >= self.config.target_fitness {
                break Termination::TargetReached;
            }
            if self.generation >= self.config.max_generations {
                break Termination::GenerationLimit;
            }
            if let Some(cap) = self.config.max_evaluations {
                if self.evaluations + self.population.len() as u64 > cap {
                    break Termination::EvaluationLimit;
                }
            }
            if let Err(e) = self.step(objective) {
                break Termination::ObjectiveFailed(e.to_string());
            }
        };
        let best = self.best().clone();
        SussadeOutcome {
            best_fitness: best.score(),
            best_genome: best.genome,
            history: self.history.clone(),
            evaluations: self.evaluations,
            termination,
        }
    }

    pub fn checkpoint_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.config.validate(s.dims)?;
        if s.population.iter().any(|p| p.genome.len() != s.dims || p.fitness.is_none()) {
            return Err(Error::Parameter("checkpoint population is inconsistent".into()));
        }
        Ok(s)
    }
}

/// Maximises `objective` over `dims` bounded coordinates.
pub fn run_sussade<F>(objective: &F, dims: usize, cfg: &SussadeConfig, warm_start: Option<&[f64]>) -> Result<SussadeOutcome>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let mut state = match Sussade::initialize(objective, dims, cfg.clone(), warm_start) {
        Ok(s) => s,
        Err(Error::Parameter(m)) => return Err(Error::Parameter(m)),
        Err(e) => {
            return Ok(SussadeOutcome {
                best_genome: Vec::new(),
                best_fitness: f64::NEG_INFINITY,
                history: Vec::new(),
                evaluations: 0,
                termination: Termination::ObjectiveFailed(e.to_string()),
            })
        }
    };
    Ok(state.run(objective))
}
