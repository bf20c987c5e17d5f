use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsoConfig {
    /// Inertia weight.
    pub w: f64,
    /// Cognitive coefficient.
    pub c1: f64,
    /// Social coefficient.
    pub c2: f64,
    /// Velocity limit as a fraction of each dimension's range.
    pub vmax_frac: f64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            w: 0.729,
            c1: 1.49445,
            c2: 1.49445,
            vmax_frac: 0.2,
        }
    }
}

/// One coordinate of the velocity and position update:
/// `V' = w V + c1 r1 (P_best - X) + c2 r2 (P_gbest - X)`, `X' = X + V'`.
#[allow(clippy::too_many_arguments)]
pub fn pso_update(w: f64, c1: f64, c2: f64, r1: f64, r2: f64, x: f64, v: f64, pbest: f64, gbest: f64) -> (f64, f64) {
    let v_next = w * v + c1 * r1 * (pbest - x) + c2 * r2 * (gbest - x);
    (v_next, x + v_next)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Swarm {
    pub config: PsoConfig,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub fitness: Vec<f64>,
    pub pbest: Vec<Vec<f64>>,
    pub pbest_fitness: Vec<f64>,
    pub gbest: Vec<f64>,
    pub gbest_fitness: f64,
    /// Particle whose personal best is the global best.
    pub gbest_particle: usize,
}

impl Swarm {
    /// Particles placed uniformly in the box with velocities uniform in
    /// `±vmax`; no fitness is known yet.
    pub fn init(config: PsoConfig, lower: &[f64], upper: &[f64], n: usize, rng: &mut impl Rng) -> Self {
        let positions: Vec<Vec<f64>> = (0..n).map(|_| uniform_point(lower, upper, rng)).collect();
        let velocities = (0..n)
            .map(|_| {
                lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| {
                        let vmax = config.vmax_frac * (u - l);
                        rng.random_range(-vmax..=vmax)
                    })
                    .collect()
            })
            .collect();
        Self {
            config,
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            pbest: positions.clone(),
            positions,
            velocities,
            fitness: vec![f64::INFINITY; n],
            pbest_fitness: vec![f64::INFINITY; n],
            gbest: lower.to_vec(),
            gbest_fitness: f64::INFINITY,
            gbest_particle: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Records the fitness of the current positions and refreshes personal
    /// and global bests. Ties keep the older best.
    pub fn observe(&mut self, fitness: &[f64]) {
        for (i, &f) in fitness.iter().enumerate() {
            self.fitness[i] = f;
            if f < self.pbest_fitness[i] {
                self.pbest_fitness[i] = f;
                self.pbest[i] = self.positions[i].clone();
            }
        }
        for i in 0..self.len() {
            if self.pbest_fitness[i] < self.gbest_fitness {
                self.gbest_fitness = self.pbest_fitness[i];
                self.gbest = self.pbest[i].clone();
                self.gbest_particle = i;
            }
        }
    }
}

pub(crate) fn uniform_point(lower: &[f64], upper: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    lower.iter().zip(upper).map(|(&l, &u)| rng.random_range(l..=u)).collect()
}

/// Moves every particle once with fresh `r1, r2 ~ U(0, 1)` per particle and
/// dimension.
pub fn pso_step(swarm: &mut Swarm, rng: &mut impl Rng) {
    pso_step_with(swarm, || (rng.random::<f64>(), rng.random::<f64>()));
}

/// As [`pso_step`] with the `(r1, r2)` pairs supplied by `draw`, called once
/// per particle and dimension in order.
pub fn pso_step_with(swarm: &mut Swarm, mut draw: impl FnMut() -> (f64, f64)) {
    let PsoConfig { w, c1, c2, vmax_frac } = swarm.config;
    for i in 0..swarm.len() {
        for j in 0..swarm.lower.len() {
            let (r1, r2) = draw();
            let (lo, hi) = (swarm.lower[j], swarm.upper[j]);
            let vmax = vmax_frac * (hi - lo);
            let (v, _) = pso_update(
                w,
                c1,
                c2,
                r1,
                r2,
                swarm.positions[i][j],
                swarm.velocities[i][j],
                swarm.pbest[i][j],
                swarm.gbest[j],
            );
            let v = v.clamp(-vmax, vmax);
            swarm.velocities[i][j] = v;
            swarm.positions[i][j] = (swarm.positions[i][j] + v).clamp(lo, hi);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_particle(w: f64, c: f64, x: f64, v: f64, p: f64, g: f64) -> Swarm {
        Swarm {
            config: PsoConfig {
                w,
                c1: c,
                c2: c,
                vmax_frac: 0.2,
            },
            lower: vec![-100.0],
            upper: vec![100.0],
            positions: vec![vec![x]],
            velocities: vec![vec![v]],
            fitness: vec![0.0],
            pbest: vec![vec![p]],
            pbest_fitness: vec![0.0],
            gbest: vec![g],
            gbest_fitness: 0.0,
            gbest_particle: 0,
        }
    }

    #[test]
    fn hand_arithmetic() {
        assert_eq!(pso_update(0.5, 1.0, 1.0, 0.5, 0.5, 0.0, 1.0, 2.0, 4.0), (3.5, 3.5));
        let mut s = one_particle(0.5, 1.0, 0.0, 1.0, 2.0, 4.0);
        pso_step_with(&mut s, || (0.5, 0.5));
        assert_eq!(s.velocities[0][0], 3.5);
        assert_eq!(s.positions[0][0], 3.5);
    }

    #[test]
    fn pure_inertia() {
        let mut s = one_particle(1.0, 0.0, 0.0, 0.3, 5.0, 7.0);
        pso_step_with(&mut s, || (0.9, 0.1));
        assert_eq!((s.velocities[0][0], s.positions[0][0]), (0.3, 0.3));
    }

    #[test]
    fn no_displacement_only_inertia() {
        let mut s = one_particle(0.7, 2.0, 1.5, 2.0, 1.5, 1.5);
        pso_step_with(&mut s, || (0.8, 0.3));
        assert_eq!(s.velocities[0][0], 0.7 * 2.0);
    }

    #[test]
    fn clamps() {
        let mut s = one_particle(1.0, 0.0, 99.0, 50.0, 0.0, 0.0);
        pso_step_with(&mut s, || (0.5, 0.5));
        assert_eq!(s.velocities[0][0], 40.0);
        assert_eq!(s.positions[0][0], 100.0);
    }
}
