//! PSO and the GA, cuckoo, whale and bat variants on the sphere and
//! Rastrigin functions, plus a mixed integer/log search space.

use std::f64::consts::PI;

use fxcast::metaheuristics::{optimize, AlgoKind, Algorithm, DimKind, Dimension, SearchSpace};

fn sphere(x: &[f64], _seed: u64) -> fxcast::Result<f64> {
    Ok(x.iter().map(|v| v * v).sum())
}

fn rastrigin(x: &[f64], _seed: u64) -> fxcast::Result<f64> {
    Ok(10.0 * x.len() as f64 + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>())
}

fn main() -> fxcast::Result<()> {
    let space = SearchSpace::uniform(5, -5.12, 5.12)?;
    println!("algo   sphere      rastrigin");
    for kind in AlgoKind::ALL {
        let a = optimize(&sphere, &space, Algorithm::default_for(kind), 20, 200, 1)?;
        let b = optimize(&rastrigin, &space, Algorithm::default_for(kind), 20, 200, 1)?;
        println!("{:<5}  {:<10.3e}  {:.3}", kind.as_str(), a.best_fitness, b.best_fitness);
    }

    // A hyperparameter-shaped space: integer units, log-scaled rate.
    let mixed = SearchSpace::new(vec![
        Dimension::new("hidden_units", DimKind::Integer, 8.0, 128.0),
        Dimension::new("learning_rate", DimKind::LogContinuous, 1e-4, 1e-1),
    ])?;
    let target = |p: &[f64], _seed: u64| Ok((p[0] - 40.0).powi(2) / 100.0 + (p[1].log10() + 2.5).powi(2));
    let r = optimize(&target, &mixed, Algorithm::default_for(AlgoKind::Pso), 12, 40, 9)?;
    println!("\nmixed space best {:?} at fitness {:.4}", r.best_point, r.best_fitness);
    print!("{}", r.history_csv()?.lines().take(6).collect::<Vec<_>>().join("\n"));
    println!("\n...");
    Ok(())
}
