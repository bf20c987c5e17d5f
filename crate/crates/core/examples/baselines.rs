//! Classical baselines on simulated data: VAR lag selection, AR forecasts,
//! GARCH(1,1) estimation, least squares and forest feature elimination.

use fxcast::baselines::{
    fit_ar, fit_garch11, fit_linear, fit_var, forecast_ar, forecast_garch, lag_report_csv, rfe, select_lag, Criterion,
    ForestParams, GarchOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> fxcast::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut z = || -> f64 { StandardNormal.sample(&mut rng) };

    // Bivariate VAR(2).
    let n = 1500;
    let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
    for t in 2..n {
        a[t] = 0.5 * a[t - 1] + 0.1 * b[t - 1] - 0.3 * a[t - 2] + 0.15 * b[t - 2] + z();
        b[t] = 0.2 * a[t - 1] + 0.3 * b[t - 1] + 0.1 * a[t - 2] - 0.25 * b[t - 2] + z();
    }
    for crit in [Criterion::Aic, Criterion::Bic] {
        let sel = select_lag(&a, &b, 6, crit)?;
        println!("{}: chosen lag {}", crit.as_str(), sel.best_lag);
    }
    print!("{}", lag_report_csv(&[("b".to_string(), select_lag(&a, &b, 4, Criterion::Aic)?)])?);
    let var = fit_var(&[&a, &b], 2)?;
    println!("VAR(2) has {} parameters", var.n_params());

    // AR(2) on a level series with a unit root, differenced once.
    let mut level = vec![100.0];
    let mut dprev = 0.0;
    for _ in 0..400 {
        let d = 0.6 * dprev + 0.1 * z();
        level.push(level.last().unwrap() + d);
        dprev = d;
    }
    let ar = fit_ar(&level, 2, 1)?;
    println!("\nAR(2) on differences: phi = {:.3?}", ar.phi);
    println!("next 3 levels: {:.3?}", forecast_ar(&ar, &level, 3)?);

    // GARCH(1,1) returns.
    let (omega, alpha, beta) = (0.05, 0.08, 0.9);
    let mut s2: f64 = omega / (1.0 - alpha - beta);
    let mut e = 0.0;
    let returns: Vec<f64> = (0..5000)
        .map(|_| {
            s2 = omega + alpha * e * e + beta * s2;
            e = s2.sqrt() * z();
            e
        })
        .collect();
    let g = fit_garch11(&returns, GarchOptions::default())?;
    println!(
        "\nGARCH fit: omega {:.3} alpha {:.3} beta {:.3} (truth {omega} {alpha} {beta})",
        g.omega, g.alpha, g.beta
    );
    let (_, var_path) = forecast_garch(&g, 5);
    println!("variance forecasts: {var_path:.3?}");

    // Least squares and forest elimination: only x0 and x2 matter.
    let rows: Vec<Vec<f64>> = (0..300).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let y: Vec<f64> = rows.iter().map(|r| 2.0 * r[0] - r[2]).collect();
    let lin = fit_linear(&rows, &y)?;
    println!("\nlinear coefficients {:.3?}", lin.coef);
    let names: Vec<String> = (0..4).map(|i| format!("x{i}")).collect();
    let kept = rfe(&names, &rows, &y, 2, 1, &ForestParams::default())?;
    println!("forest keeps {:?}, drops {:?}", kept.selected, kept.eliminated);
    Ok(())
}
