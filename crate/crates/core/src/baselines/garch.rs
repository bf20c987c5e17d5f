use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Downhill simplex minimization from `x0` with initial edge lengths `step`.
/// Stops when the simplex's function spread falls below `ftol` (relative) and
/// its largest edge below `xtol`, or after `max_evals` evaluations.
pub fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    step: &[f64],
    max_evals: usize,
    ftol: f64,
    xtol: f64,
) -> NelderMeadResult {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step[i];
        simplex.push(x);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    let mut evals = n + 1;
    let mut converged = false;
    while evals < max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        fv = order.iter().map(|&i| fv[i]).collect();

        let spread = (fv[n] - fv[0]).abs();
        let size = simplex[1..]
            .iter()
            .map(|x| x.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= ftol * (fv[0].abs() + 1e-12) && size <= xtol {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|x| x[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect() };

        let xr = along(-1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < fv[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                simplex[n] = xe;
                fv[n] = fe;
            } else {
                simplex[n] = xr;
                fv[n] = fr;
            }
            continue;
        }
        if fr < fv[n - 1] {
            simplex[n] = xr;
            fv[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < fv[n] {
            let xc = along(-0.5);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = f(&xc);
            (xc, fc)
        };
        evals += 1;
        if fc < fv[n].min(fr) {
            simplex[n] = xc;
            fv[n] = fc;
            continue;
        }
        for i in 1..=n {
            for j in 0..n {
                simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
            }
            fv[i] = f(&simplex[i]);
        }
        evals += n;
    }
    let best = (0..=n).min_by(|&a, &b| fv[a].total_cmp(&fv[b])).expect("non-empty simplex");
    NelderMeadResult {
        x: simplex[best].clone(),
        fx: fv[best],
        evaluations: evals,
        converged,
    }
}

/// AR(1) mean with GARCH(1,1) errors:
/// `r_t = mu + phi r_{t-1} + e_t`, `s2_t = omega + alpha e_{t-1}^2 + beta s2_{t-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Garch11 {
    pub mu: f64,
    pub phi: f64,
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub log_likelihood: f64,
    pub n_obs: usize,
    pub evaluations: usize,
    pub last_return: f64,
    pub last_resid: f64,
    pub last_sigma2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchOptions {
    /// Evaluation budget per simplex run.
    pub max_evals: usize,
    pub restarts: usize,
    pub ftol: f64,
    pub xtol: f64,
}

impl Default for GarchOptions {
    fn default() -> Self {
        Self {
            max_evals: 20_000,
            restarts: 3,
            ftol: 1e-10,
            xtol: 1e-7,
        }
    }
}

const INFEASIBLE: f64 = 1e12;

fn feasible(th: &[f64]) -> bool {
    let (phi, omega, alpha, beta) = (th[1], th[2], th[3], th[4]);
    phi.abs() < 1.0 && omega > 0.0 && alpha >= 0.0 && beta >= 0.0 && alpha + beta < 1.0
}

/// Recursion over the sample; returns `(neg_log_lik, last_resid, last_sigma2)`.
fn filter(th: &[f64], r: &[f64], s2_init: f64) -> (f64, f64, f64) {
    let (mu, phi, omega, alpha, beta) = (th[0], th[1], th[2], th[3], th[4]);
    let mut s2 = s2_init;
    let mut e_prev2 = s2_init;
    let mut nll = 0.0;
    let mut e = 0.0;
    for t in 1..r.len() {
        s2 = omega + alpha * e_prev2 + beta * s2;
        e = r[t] - mu - phi * r[t - 1];
        nll += 0.5 * ((2.0 * PI).ln() + s2.ln() + e * e / s2);
        e_prev2 = e * e;
    }
    (nll, e, s2)
}

fn objective(th: &[f64], r: &[f64], s2_init: f64) -> f64 {
    if !feasible(th) {
        let violation = (th[1].abs() - 1.0).max(0.0)
            + (-th[2]).max(0.0)
            + (-th[3]).max(0.0)
            + (-th[4]).max(0.0)
            + (th[3] + th[4] - 1.0).max(0.0);
        return INFEASIBLE * (1.0 + violation);
    }
    let v = filter(th, r, s2_init).0;
    if v.is_finite() {
        v
    } else {
        INFEASIBLE
    }
}

/// Gaussian maximum likelihood by Nelder–Mead with penalties for
/// `omega <= 0`, negative `alpha`/`beta`, `alpha + beta >= 1` and `|phi| >= 1`.
pub fn fit_garch11(returns: &[f64], opts: GarchOptions) -> Result<Garch11> {
    if returns.len() < 100 {
        return Err(Error::invalid(format!("GARCH needs at least 100 returns, got {}", returns.len())));
    }
    if returns.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("GARCH input".into()));
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if !(var > f64::EPSILON * mean * mean && var > 1e-300) {
        return Err(Error::invalid("returns have zero variance"));
    }
    let f = |th: &[f64]| objective(th, returns, var);
    let mut x = vec![mean, 0.0, 0.1 * var, 0.05, 0.85];
    let mut total_evals = 0;
    let mut best = f64::INFINITY;
    let mut converged = false;
    for _ in 0..=opts.restarts {
        let step = [
            0.1 * var.sqrt(),
            0.1,
            0.5 * x[2].max(1e-3 * var),
            0.05,
            0.05_f64.min(0.5 * (1.0 - x[4]).max(1e-3)),
        ];
        let res = nelder_mead(f, &x, &step, opts.max_evals, opts.ftol, opts.xtol);
        total_evals += res.evaluations;
        let improved = best - res.fx;
        x = res.x;
        best = res.fx;
        converged = res.converged;
        if converged && improved.abs() < 1e-8 * (1.0 + best.abs()) {
            break;
        }
    }
    if !converged || !feasible(&x) {
        return Err(Error::NotConverged {
            evaluations: total_evals,
            best_value: best,
            best_params: x,
        });
    }
    let (nll, last_resid, last_s2) = filter(&x, returns, var);
    Ok(Garch11 {
        mu: x[0],
        phi: x[1],
        omega: x[2],
        alpha: x[3],
        beta: x[4],
        log_likelihood: -nll,
        n_obs: returns.len() - 1,
        evaluations: total_evals,
        last_return: *returns.last().expect("non-empty"),
        last_resid,
        last_sigma2: last_s2,
    })
}

impl Garch11 {
    /// Conditional mean of the next return given the current one.
    pub fn mean_one_step(&self, prev_return: f64) -> f64 {
        self.mu + self.phi * prev_return
    }
}

/// Mean and variance forecasts for the `steps` returns after the sample.
pub fn forecast_garch(model: &Garch11, steps: usize) -> (Vec<f64>, Vec<f64>) {
    let mut means = Vec::with_capacity(steps);
    let mut vars = Vec::with_capacity(steps);
    let mut m = model.last_return;
    let mut s2 = model.omega + model.alpha * model.last_resid.powi(2) + model.beta * model.last_sigma2;
    for h in 0..steps {
        m = model.mean_one_step(m);
        if h > 0 {
            s2 = model.omega + (model.alpha + model.beta) * s2;
        }
        means.push(m);
        vars.push(s2);
    }
    (means, vars)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn nelder_mead_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(f, &[-1.2, 1.0], &[0.1, 0.1], 10_000, 1e-14, 1e-9);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn constant_returns_error() {
        assert!(fit_garch11(&[0.01; 200], GarchOptions::default()).is_err());
        assert!(fit_garch11(&[0.01; 50], GarchOptions::default()).is_err());
    }

    #[test]
    fn iid_noise_has_little_persistence_signal() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let r: Vec<f64> = (0..3000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let m = fit_garch11(&r, GarchOptions::default()).unwrap();
        assert!(m.alpha < 0.05, "{m:?}");
        assert!(m.omega > 0.0 && m.alpha + m.beta < 1.0);
        let (means, vars) = forecast_garch(&m, 3);
        assert_eq!(means.len(), 3);
        assert!(vars.iter().all(|v| *v > 0.0));
    }
}
