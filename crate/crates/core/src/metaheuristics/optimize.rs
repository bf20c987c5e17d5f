use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util::write_atomic;

use super::pso::{pso_step, Swarm};
use super::variants::{variant_step, Population, VariantState};
use super::{BatConfig, CsConfig, GaConfig, PsoConfig, SearchSpace, WoaConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgoKind {
    Pso,
    Ga,
    Cs,
    Woa,
    Bat,
}

impl AlgoKind {
    pub const ALL: [AlgoKind; 5] = [AlgoKind::Pso, AlgoKind::Ga, AlgoKind::Cs, AlgoKind::Woa, AlgoKind::Bat];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgoKind::Pso => "pso",
            AlgoKind::Ga => "ga",
            AlgoKind::Cs => "cs",
            AlgoKind::Woa => "woa",
            AlgoKind::Bat => "bat",
        }
    }
}

impl std::str::FromStr for AlgoKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgoKind::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown optimizer {s:?}")))
    }
}

/// Optimizer choice with its coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "lowercase")]
pub enum Algorithm {
    Pso(PsoConfig),
    Ga(GaConfig),
    Cs(CsConfig),
    Woa(WoaConfig),
    Bat(BatConfig),
}

impl Algorithm {
    pub fn default_for(kind: AlgoKind) -> Self {
        match kind {
            AlgoKind::Pso => Algorithm::Pso(PsoConfig::default()),
            AlgoKind::Ga => Algorithm::Ga(GaConfig::default()),
            AlgoKind::Cs => Algorithm::Cs(CsConfig::default()),
            AlgoKind::Woa => Algorithm::Woa(WoaConfig::default()),
            AlgoKind::Bat => Algorithm::Bat(BatConfig::default()),
        }
    }

    pub fn kind(&self) -> AlgoKind {
        match self {
            Algorithm::Pso(_) => AlgoKind::Pso,
            Algorithm::Ga(_) => AlgoKind::Ga,
            Algorithm::Cs(_) => AlgoKind::Cs,
            Algorithm::Woa(_) => AlgoKind::Woa,
            Algorithm::Bat(_) => AlgoKind::Bat,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub best_fitness: f64,
    /// Decoded incumbent.
    pub best_point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub algo: AlgoKind,
    pub names: Vec<String>,
    /// Decoded incumbent.
    pub best_point: Vec<f64>,
    pub best_fitness: f64,
    /// Particle whose evaluation produced the incumbent.
    pub best_particle: usize,
    pub history: Vec<IterationRecord>,
    pub evaluations: usize,
    pub failed_evaluations: usize,
}

impl OptimizeResult {
    /// `iteration,best_fitness,<dim names...>`
    pub fn history_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["iteration".to_string(), "best_fitness".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for r in &self.history {
            let mut row = vec![r.iteration.to_string(), format!("{}", r.best_fitness)];
            row.extend(r.best_point.iter().map(|v| format!("{v}")));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::invalid(format!("csv: {e}")))?;
        let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_history_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.history_csv()?.as_bytes())
    }
}

/// Seed for the evaluations of one particle, independent of evaluation order.
pub fn particle_seed(run_seed: u64, particle: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    rng.set_stream(particle as u64 + 1);
    rng.next_u64()
}

struct Evaluator<'a, F> {
    objective: &'a F,
    space: &'a SearchSpace,
    run_seed: u64,
    evaluations: usize,
    failed: usize,
}

impl<F> Evaluator<'_, F>
where
    F: Fn(&[f64], u64) -> Result<f64> + Sync,
{
    fn run(&mut self, slots: &[usize], points: &[Vec<f64>]) -> Vec<f64> {
        let results: Vec<(f64, bool)> = slots
            .par_iter()
            .zip(points.par_iter())
            .map(|(&slot, x)| {
                let decoded = self.space.decode(x);
                match (self.objective)(&decoded, particle_seed(self.run_seed, slot)) {
                    Ok(f) if !f.is_nan() => (f, false),
                    Ok(_) => {
                        log::warn!("particle {slot}: objective returned NaN at {decoded:?}");
                        (f64::INFINITY, true)
                    }
                    Err(e) => {
                        log::warn!("particle {slot}: objective failed at {decoded:?}: {e}");
                        (f64::INFINITY, true)
                    }
                }
            })
            .collect();
        self.evaluations += results.len();
        self.failed += results.iter().filter(|r| r.1).count();
        results.into_iter().map(|r| r.0).collect()
    }
}

/// Minimizes `objective(decoded_point, seed)` over `space`. `iterations`
/// counts generations including the initial population, so a budget of 1
/// evaluates only the initial population. Every evaluation for particle `i`
/// receives `particle_seed(seed, i)`. Failing evaluations score `+inf`.
pub fn optimize<F>(
    objective: &F,
    space: &SearchSpace,
    algorithm: Algorithm,
    swarm_size: usize,
    iterations: usize,
    seed: u64,
) -> Result<OptimizeResult>
where
    F: Fn(&[f64], u64) -> Result<f64> + Sync,
{
    if swarm_size == 0 || iterations == 0 {
        return Err(Error::invalid("optimizer needs at least one particle and one iteration"));
    }
    let (lower, upper) = space.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ev = Evaluator {
        objective,
        space,
        run_seed: seed,
        evaluations: 0,
        failed: 0,
    };
    let slots: Vec<usize> = (0..swarm_size).collect();
    let mut history = Vec::with_capacity(iterations);
    let record = |it: usize, best: &[f64], f: f64, history: &mut Vec<IterationRecord>| {
        history.push(IterationRecord {
            iteration: it,
            best_fitness: f,
            best_point: space.decode(best),
        });
    };

    let (best_internal, best_fitness, best_particle) = match algorithm {
        Algorithm::Pso(cfg) => {
            let mut swarm = Swarm::init(cfg, &lower, &upper, swarm_size, &mut rng);
            let f = ev.run(&slots, &swarm.positions);
            swarm.observe(&f);
            record(0, &swarm.gbest, swarm.gbest_fitness, &mut history);
            for it in 1..iterations {
                pso_step(&mut swarm, &mut rng);
                let f = ev.run(&slots, &swarm.positions);
                swarm.observe(&f);
                record(it, &swarm.gbest, swarm.gbest_fitness, &mut history);
            }
            (swarm.gbest, swarm.gbest_fitness, swarm.gbest_particle)
        }
        other => {
            let positions: Vec<Vec<f64>> = (0..swarm_size)
                .map(|_| super::pso::uniform_point(&lower, &upper, &mut rng))
                .collect();
            let f = ev.run(&slots, &positions);
            let mut pop = Population::new(lower.clone(), upper.clone(), positions, f);
            let mut state = match other {
                Algorithm::Ga(c) => VariantState::ga(c),
                Algorithm::Cs(c) => VariantState::cs(c),
                Algorithm::Woa(c) => VariantState::woa(c, iterations.saturating_sub(1)),
                Algorithm::Bat(c) => VariantState::bat(c, swarm_size, lower.len()),
                Algorithm::Pso(_) => unreachable!(),
            };
            record(0, &pop.best, pop.best_fitness, &mut history);
            let mut eval = |s: &[usize], p: &[Vec<f64>]| ev.run(s, p);
            for it in 1..iterations {
                variant_step(&mut pop, &mut state, &mut eval, &mut rng);
                record(it, &pop.best, pop.best_fitness, &mut history);
            }
            (pop.best, pop.best_fitness, pop.best_slot)
        }
    };

    if !best_fitness.is_finite() {
        return Err(Error::NotConverged {
            evaluations: ev.evaluations,
            best_value: best_fitness,
            best_params: space.decode(&best_internal),
        });
    }
    let best_point = space.decode(&best_internal);
    Ok(OptimizeResult {
        algo: algorithm.kind(),
        names: space.names().into_iter().map(String::from).collect(),
        best_particle,
        best_point,
        best_fitness,
        history,
        evaluations: ev.evaluations,
        failed_evaluations: ev.failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64], _: u64) -> Result<f64> {
        Ok(x.iter().map(|v| v * v).sum())
    }

    #[test]
    fn one_iteration_is_initial_best() {
        let space = SearchSpace::uniform(3, -5.0, 5.0).unwrap();
        let r = optimize(&sphere, &space, Algorithm::default_for(AlgoKind::Pso), 10, 1, 4).unwrap();
        assert_eq!(r.history.len(), 1);
        assert_eq!(r.evaluations, 10);
        // Rebuild the initial population with the same stream.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (lo, hi) = space.bounds();
        let s = Swarm::init(PsoConfig::default(), &lo, &hi, 10, &mut rng);
        let best = s.positions.iter().map(|p| sphere(p, 0).unwrap()).fold(f64::INFINITY, f64::min);
        assert_eq!(r.best_fitness, best);
    }

    #[test]
    fn constant_objective_flat_history() {
        let space = SearchSpace::uniform(2, -1.0, 1.0).unwrap();
        for kind in AlgoKind::ALL {
            let r = optimize(&|_: &[f64], _| Ok(3.0), &space, Algorithm::default_for(kind), 6, 5, 1).unwrap();
            assert!(r.history.iter().all(|h| h.best_fitness == 3.0));
        }
    }

    #[test]
    fn failures_score_infinity() {
        let space = SearchSpace::uniform(1, -1.0, 1.0).unwrap();
        let f = |x: &[f64], _: u64| if x[0] < 0.0 { Err(Error::invalid("neg")) } else { Ok(x[0]) };
        let r = optimize(&f, &space, Algorithm::default_for(AlgoKind::Pso), 10, 5, 2).unwrap();
        assert!(r.failed_evaluations > 0);
        assert!(r.best_fitness >= 0.0);
        let all_fail = |_: &[f64], _: u64| -> Result<f64> { Err(Error::invalid("no")) };
        assert!(matches!(
            optimize(&all_fail, &space, Algorithm::default_for(AlgoKind::Ga), 4, 2, 2),
            Err(Error::NotConverged { .. })
        ));
    }

    #[test]
    fn deterministic_and_csv() {
        let space = SearchSpace::uniform(4, -5.0, 5.0).unwrap();
        for kind in AlgoKind::ALL {
            let a = optimize(&sphere, &space, Algorithm::default_for(kind), 8, 10, 9).unwrap();
            let b = optimize(&sphere, &space, Algorithm::default_for(kind), 8, 10, 9).unwrap();
            assert_eq!(a, b);
            let csv = a.history_csv().unwrap();
            assert!(csv.starts_with("iteration,best_fitness,x0,x1,x2,x3\n"));
            assert_eq!(csv.lines().count(), 11);
        }
    }

    #[test]
    fn particle_seeds_differ() {
        assert_ne!(particle_seed(1, 0), particle_seed(1, 1));
        assert_eq!(particle_seed(1, 3), particle_seed(1, 3));
    }
}
