use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::pso::uniform_point;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub tournament_size: usize,
    pub crossover_rate: f64,
    /// BLX-alpha extension of the parents' interval.
    pub blend_alpha: f64,
    /// Per-gene mutation probability; `None` means `1 / dims`.
    pub mutation_rate: Option<f64>,
    /// Mutation standard deviation as a fraction of the dimension range.
    pub mutation_sigma: f64,
    pub elitism: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            tournament_size: 3,
            crossover_rate: 0.9,
            blend_alpha: 0.5,
            mutation_rate: None,
            mutation_sigma: 0.1,
            elitism: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsConfig {
    /// Fraction of nests abandoned each generation.
    pub abandon_fraction: f64,
    pub levy_beta: f64,
    /// Lévy step size as a fraction of the dimension range.
    pub step_scale: f64,
}

impl Default for CsConfig {
    fn default() -> Self {
        Self {
            abandon_fraction: 0.25,
            levy_beta: 1.5,
            step_scale: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WoaConfig {
    /// Logarithmic spiral shape constant.
    pub spiral_b: f64,
}

impl Default for WoaConfig {
    fn default() -> Self {
        Self { spiral_b: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatConfig {
    pub f_min: f64,
    pub f_max: f64,
    pub loudness0: f64,
    pub pulse_rate0: f64,
    /// Loudness decay per accepted move.
    pub alpha: f64,
    /// Pulse-rate growth constant.
    pub gamma: f64,
    /// Local walk scale as a fraction of the dimension range.
    pub walk_scale: f64,
    pub vmax_frac: f64,
}

impl Default for BatConfig {
    fn default() -> Self {
        Self {
            f_min: 0.0,
            f_max: 2.0,
            loudness0: 1.0,
            pulse_rate0: 0.5,
            alpha: 0.9,
            gamma: 0.9,
            walk_scale: 0.01,
            vmax_frac: 0.2,
        }
    }
}

/// Candidate points with known fitness plus the incumbent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub fitness: Vec<f64>,
    pub best: Vec<f64>,
    pub best_fitness: f64,
    /// Slot that produced the incumbent.
    pub best_slot: usize,
}

impl Population {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, positions: Vec<Vec<f64>>, fitness: Vec<f64>) -> Self {
        let mut p = Self {
            best: lower.clone(),
            lower,
            upper,
            positions,
            fitness,
            best_fitness: f64::INFINITY,
            best_slot: 0,
        };
        p.refresh_best();
        p
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    fn dims(&self) -> usize {
        self.lower.len()
    }

    fn range(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }

    fn clamp(&self, x: &mut [f64]) {
        for (j, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[j], self.upper[j]);
        }
    }

    /// Index of the fittest member; ties go to the lowest index.
    pub fn argmin(&self) -> usize {
        let mut k = 0;
        for i in 1..self.len() {
            if self.fitness[i] < self.fitness[k] {
                k = i;
            }
        }
        k
    }

    /// Raises the incumbent if a member beats it.
    pub fn refresh_best(&mut self) {
        if self.is_empty() {
            return;
        }
        let k = self.argmin();
        if self.fitness[k] < self.best_fitness {
            self.best_fitness = self.fitness[k];
            self.best = self.positions[k].clone();
            self.best_slot = k;
        }
    }

    /// Indices ordered fittest first; ties by index.
    fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.fitness[a].total_cmp(&self.fitness[b]).then(a.cmp(&b)));
        idx
    }
}

/// Per-run state of a non-PSO variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VariantState {
    Ga(GaConfig),
    Cs(CsConfig),
    Woa {
        config: WoaConfig,
        /// Generations done so far and the planned total.
        iteration: usize,
        max_iterations: usize,
    },
    Bat {
        config: BatConfig,
        velocities: Vec<Vec<f64>>,
        loudness: Vec<f64>,
        pulse_rate: Vec<f64>,
        iteration: usize,
    },
}

impl VariantState {
    pub fn ga(config: GaConfig) -> Self {
        VariantState::Ga(config)
    }

    pub fn cs(config: CsConfig) -> Self {
        VariantState::Cs(config)
    }

    pub fn woa(config: WoaConfig, max_iterations: usize) -> Self {
        VariantState::Woa {
            config,
            iteration: 0,
            max_iterations,
        }
    }

    pub fn bat(config: BatConfig, n: usize, dims: usize) -> Self {
        VariantState::Bat {
            config,
            velocities: vec![vec![0.0; dims]; n],
            loudness: vec![config.loudness0; n],
            pulse_rate: vec![config.pulse_rate0; n],
            iteration: 0,
        }
    }
}

/// Fitness of the points at the given population slots.
pub trait Evaluate {
    fn evaluate(&mut self, slots: &[usize], points: &[Vec<f64>]) -> Vec<f64>;
}

impl<F: FnMut(&[usize], &[Vec<f64>]) -> Vec<f64>> Evaluate for F {
    fn evaluate(&mut self, slots: &[usize], points: &[Vec<f64>]) -> Vec<f64> {
        self(slots, points)
    }
}

/// Advances the population by one generation of the chosen variant.
pub fn variant_step(pop: &mut Population, state: &mut VariantState, eval: &mut impl Evaluate, rng: &mut impl Rng) {
    if pop.is_empty() {
        return;
    }
    match state {
        VariantState::Ga(cfg) => ga_step(pop, cfg, eval, rng),
        VariantState::Cs(cfg) => cs_step(pop, cfg, eval, rng),
        VariantState::Woa {
            config,
            iteration,
            max_iterations,
        } => {
            woa_step(pop, config, *iteration, *max_iterations, eval, rng);
            *iteration += 1;
        }
        VariantState::Bat {
            config,
            velocities,
            loudness,
            pulse_rate,
            iteration,
        } => {
            *iteration += 1;
            bat_step(pop, config, velocities, loudness, pulse_rate, *iteration, eval, rng);
        }
    }
    pop.refresh_best();
}

fn tournament(pop: &Population, size: usize, rng: &mut impl Rng) -> usize {
    let mut best = rng.random_range(0..pop.len());
    for _ in 1..size.max(1) {
        let c = rng.random_range(0..pop.len());
        if pop.fitness[c] < pop.fitness[best] {
            best = c;
        }
    }
    best
}

/// Each non-elite slot breeds with a tournament-chosen mate (BLX-alpha blend
/// with probability `crossover_rate`), mutates, and keeps the child when it
/// is no worse than the slot's current member.
fn ga_step(pop: &mut Population, cfg: &GaConfig, eval: &mut impl Evaluate, rng: &mut impl Rng) {
    let d = pop.dims();
    let n_elite = cfg.elitism.min(pop.len());
    let elite: Vec<usize> = pop.ranking().into_iter().take(n_elite).collect();
    let mutation_rate = cfg.mutation_rate.unwrap_or(1.0 / d as f64);
    let mut slots = Vec::new();
    let mut children = Vec::new();
    for i in 0..pop.len() {
        if elite.contains(&i) {
            continue;
        }
        let mut child = pop.positions[i].clone();
        let mut changed = false;
        if rng.random::<f64>() < cfg.crossover_rate {
            let mate = &pop.positions[tournament(pop, cfg.tournament_size, rng)];
            for j in 0..d {
                let (a, b) = (child[j].min(mate[j]), child[j].max(mate[j]));
                let ext = cfg.blend_alpha * (b - a);
                let (lo, hi) = (a - ext, b + ext);
                child[j] = if hi > lo { rng.random_range(lo..=hi) } else { a };
            }
            changed = true;
        }
        if mutation_rate > 0.0 && cfg.mutation_sigma > 0.0 {
            for j in 0..d {
                if rng.random::<f64>() < mutation_rate {
                    let z: f64 = StandardNormal.sample(rng);
                    child[j] += z * cfg.mutation_sigma * pop.range(j);
                    changed = true;
                }
            }
        }
        if changed {
            pop.clamp(&mut child);
            slots.push(i);
            children.push(child);
        }
    }
    if slots.is_empty() {
        return;
    }
    let fit = eval.evaluate(&slots, &children);
    for ((&i, child), f) in slots.iter().zip(children).zip(fit) {
        if f <= pop.fitness[i] {
            pop.positions[i] = child;
            pop.fitness[i] = f;
        }
    }
}

/// Mantegna's algorithm for a Lévy-stable step with index `beta`.
pub fn levy_step(beta: f64, rng: &mut impl Rng) -> f64 {
    let num = gamma(1.0 + beta) * (PI * beta / 2.0).sin();
    let den = gamma((1.0 + beta) / 2.0) * beta * 2f64.powf((beta - 1.0) / 2.0);
    let sigma_u = (num / den).powf(1.0 / beta);
    let u: f64 = Normal::new(0.0, sigma_u).expect("finite sigma").sample(rng);
    let v: f64 = StandardNormal.sample(rng);
    u / v.abs().powf(1.0 / beta)
}

/// Lévy flight from every nest with greedy replacement, then the worst
/// `abandon_fraction` of the non-best nests are rebuilt uniformly in the box.
fn cs_step(pop: &mut Population, cfg: &CsConfig, eval: &mut impl Evaluate, rng: &mut impl Rng) {
    let d = pop.dims();
    let slots: Vec<usize> = (0..pop.len()).collect();
    let flights: Vec<Vec<f64>> = slots
        .iter()
        .map(|&i| {
            let mut x = pop.positions[i].clone();
            for (j, xj) in x.iter_mut().enumerate().take(d) {
                *xj += cfg.step_scale * pop.range(j) * levy_step(cfg.levy_beta, rng);
            }
            pop.clamp(&mut x);
            x
        })
        .collect();
    let fit = eval.evaluate(&slots, &flights);
    for ((&i, x), f) in slots.iter().zip(flights).zip(fit) {
        if f < pop.fitness[i] {
            pop.positions[i] = x;
            pop.fitness[i] = f;
        }
    }

    let ranking = pop.ranking();
    let n_abandon = ((cfg.abandon_fraction * pop.len() as f64).round() as usize).min(pop.len() - 1);
    if n_abandon == 0 {
        return;
    }
    let worst: Vec<usize> = ranking.iter().rev().take(n_abandon).copied().collect();
    let fresh: Vec<Vec<f64>> = worst
        .iter()
        .map(|_| uniform_point(&pop.lower, &pop.upper, rng))
        .collect();
    pop.refresh_best();
    let fit = eval.evaluate(&worst, &fresh);
    for ((&i, x), f) in worst.iter().zip(fresh).zip(fit) {
        pop.positions[i] = x;
        pop.fitness[i] = f;
    }
}

/// Encircling, random-leader search and spiral moves with `a` falling
/// linearly from 2 to 0 over the run.
fn woa_step(
    pop: &mut Population,
    cfg: &WoaConfig,
    iteration: usize,
    max_iterations: usize,
    eval: &mut impl Evaluate,
    rng: &mut impl Rng,
) {
    let d = pop.dims();
    let a = 2.0 * (1.0 - iteration as f64 / max_iterations.max(1) as f64).max(0.0);
    let leader = pop.best.clone();
    let old = pop.positions.clone();
    let mut next = Vec::with_capacity(pop.len());
    for x in &old {
        let r1: f64 = rng.random();
        let r2: f64 = rng.random();
        let big_a = 2.0 * a * r1 - a;
        let c = 2.0 * r2;
        let p: f64 = rng.random();
        let l: f64 = rng.random_range(-1.0..=1.0);
        let mut y = vec![0.0; d];
        if p < 0.5 {
            let target = if big_a.abs() < 1.0 {
                &leader
            } else {
                &old[rng.random_range(0..old.len())]
            };
            for j in 0..d {
                y[j] = target[j] - big_a * (c * target[j] - x[j]).abs();
            }
        } else {
            for j in 0..d {
                let dist = (leader[j] - x[j]).abs();
                y[j] = dist * (cfg.spiral_b * l).exp() * (2.0 * PI * l).cos() + leader[j];
            }
        }
        pop.clamp(&mut y);
        next.push(y);
    }
    let slots: Vec<usize> = (0..pop.len()).collect();
    pop.fitness = eval.evaluate(&slots, &next);
    pop.positions = next;
}

#[allow(clippy::too_many_arguments)]
fn bat_step(
    pop: &mut Population,
    cfg: &BatConfig,
    velocities: &mut [Vec<f64>],
    loudness: &mut [f64],
    pulse_rate: &mut [f64],
    iteration: usize,
    eval: &mut impl Evaluate,
    rng: &mut impl Rng,
) {
    let d = pop.dims();
    let best = pop.best.clone();
    let mean_loudness = loudness.iter().sum::<f64>() / loudness.len() as f64;
    let mut cands = Vec::with_capacity(pop.len());
    for i in 0..pop.len() {
        let freq = cfg.f_min + (cfg.f_max - cfg.f_min) * rng.random::<f64>();
        let mut y = pop.positions[i].clone();
        for j in 0..d {
            let vmax = cfg.vmax_frac * pop.range(j);
            velocities[i][j] = (velocities[i][j] + (pop.positions[i][j] - best[j]) * freq).clamp(-vmax, vmax);
            y[j] += velocities[i][j];
        }
        if rng.random::<f64>() > pulse_rate[i] {
            for j in 0..d {
                let eps: f64 = StandardNormal.sample(rng);
                y[j] = best[j] + cfg.walk_scale * pop.range(j) * mean_loudness * eps;
            }
        }
        pop.clamp(&mut y);
        cands.push(y);
    }
    let slots: Vec<usize> = (0..pop.len()).collect();
    let fit = eval.evaluate(&slots, &cands);
    for (i, (y, f)) in cands.into_iter().zip(fit).enumerate() {
        if f <= pop.fitness[i] && rng.random::<f64>() < loudness[i] {
            pop.positions[i] = y;
            pop.fitness[i] = f;
            loudness[i] *= cfg.alpha;
            pulse_rate[i] = cfg.pulse_rate0 * (1.0 - (-cfg.gamma * iteration as f64).exp());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sphere_pop(rng: &mut impl Rng, n: usize) -> Population {
        let lower = vec![-5.0; 3];
        let upper = vec![5.0; 3];
        let positions: Vec<Vec<f64>> = (0..n).map(|_| uniform_point(&lower, &upper, rng)).collect();
        let fitness = positions.iter().map(|x| x.iter().map(|v| v * v).sum()).collect();
        Population::new(lower, upper, positions, fitness)
    }

    fn sphere_eval(_: &[usize], pts: &[Vec<f64>]) -> Vec<f64> {
        pts.iter().map(|x| x.iter().map(|v| v * v).sum()).collect()
    }

    #[test]
    fn ga_without_variation_is_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut pop = sphere_pop(&mut rng, 10);
        let before = pop.clone();
        let mut st = VariantState::ga(GaConfig {
            crossover_rate: 0.0,
            mutation_rate: Some(0.0),
            ..Default::default()
        });
        let mut calls = 0;
        let mut eval = |s: &[usize], p: &[Vec<f64>]| {
            calls += 1;
            sphere_eval(s, p)
        };
        variant_step(&mut pop, &mut st, &mut eval, &mut rng);
        assert_eq!(pop, before);
        assert_eq!(calls, 0);
    }

    #[test]
    fn cs_full_abandonment_resamples_all_but_best() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut pop = sphere_pop(&mut rng, 8);
        let mut st = VariantState::cs(CsConfig {
            abandon_fraction: 1.0,
            step_scale: 0.0,
            ..Default::default()
        });
        let best_slot = pop.argmin();
        let before = pop.clone();
        variant_step(&mut pop, &mut st, &mut sphere_eval, &mut rng);
        for i in 0..8 {
            if i == best_slot {
                assert_eq!(pop.positions[i], before.positions[i]);
            } else {
                assert_ne!(pop.positions[i], before.positions[i]);
                assert!(pop.positions[i].iter().all(|v| (-5.0..=5.0).contains(v)));
            }
        }
    }

    #[test]
    fn incumbent_is_monotone_and_in_box() {
        for which in 0..4 {
            let mut rng = ChaCha8Rng::seed_from_u64(which);
            let mut pop = sphere_pop(&mut rng, 12);
            let mut st = match which {
                0 => VariantState::ga(GaConfig::default()),
                1 => VariantState::cs(CsConfig::default()),
                2 => VariantState::woa(WoaConfig::default(), 30),
                _ => VariantState::bat(BatConfig::default(), 12, 3),
            };
            let mut last = pop.best_fitness;
            for _ in 0..30 {
                variant_step(&mut pop, &mut st, &mut sphere_eval, &mut rng);
                assert!(pop.best_fitness <= last);
                last = pop.best_fitness;
                for x in &pop.positions {
                    assert!(x.iter().all(|v| (-5.0..=5.0).contains(v)));
                }
            }
        }
    }

    #[test]
    fn levy_steps_are_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert!(levy_step(1.5, &mut rng).is_finite());
        }
    }
}
