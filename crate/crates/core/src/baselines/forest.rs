use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 6,
            min_leaf: 2,
            seed: 0,
        }
    }
}

fn sse(y: &[f64], idx: &[usize]) -> f64 {
    let n = idx.len() as f64;
    let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / n;
    idx.iter().map(|&i| (y[i] - mean).powi(2)).sum()
}

/// Grows one variance-reduction tree on the rows `idx`, adding each split's
/// SSE reduction to `gain[feature]`.
fn grow(x: &[Vec<f64>], y: &[f64], idx: &mut [usize], depth: usize, p: &ForestParams, gain: &mut [f64]) {
    if depth >= p.max_depth || idx.len() < 2 * p.min_leaf.max(1) {
        return;
    }
    let parent = sse(y, idx);
    if parent <= 0.0 {
        return;
    }
    let n = idx.len();
    let mut best: Option<(f64, usize, f64)> = None;
    let mut order = idx.to_vec();
    for f in 0..x[0].len() {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        let total: f64 = order.iter().map(|&i| y[i]).sum();
        let total_sq: f64 = order.iter().map(|&i| y[i] * y[i]).sum();
        let (mut s, mut sq) = (0.0, 0.0);
        for k in 0..n - 1 {
            let yi = y[order[k]];
            s += yi;
            sq += yi * yi;
            let nl = (k + 1) as f64;
            let nr = (n - k - 1) as f64;
            if k + 1 < p.min_leaf.max(1) || n - k - 1 < p.min_leaf.max(1) {
                continue;
            }
            let (a, b) = (x[order[k]][f], x[order[k + 1]][f]);
            if a == b {
                continue;
            }
            let left = sq - s * s / nl;
            let right = (total_sq - sq) - (total - s).powi(2) / nr;
            let reduction = parent - left - right;
            if best.is_none_or(|(g, _, _)| reduction > g) {
                best = Some((reduction, f, 0.5 * (a + b)));
            }
        }
    }
    let Some((reduction, f, thr)) = best else { return };
    if reduction <= 0.0 {
        return;
    }
    gain[f] += reduction;
    idx.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
    let split = idx.partition_point(|&i| x[i][f] <= thr);
    let (l, r) = idx.split_at_mut(split);
    grow(x, y, l, depth + 1, p, gain);
    grow(x, y, r, depth + 1, p, gain);
}

/// Total variance reduction per feature over bagged regression trees,
/// normalized to sum to 1. A constant target gives uniform importances.
pub fn forest_importance(x_rows: &[Vec<f64>], y: &[f64], params: &ForestParams) -> Result<Vec<f64>> {
    if params.n_trees == 0 || params.max_depth == 0 {
        return Err(Error::invalid("forest needs at least one tree of depth >= 1"));
    }
    let k = x_rows.first().map_or(0, Vec::len);
    if x_rows.is_empty() || k == 0 || x_rows.iter().any(|r| r.len() != k) || y.len() != x_rows.len() {
        return Err(Error::Shape("forest input must be a non-empty rectangular matrix matching y".into()));
    }
    if x_rows.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("forest input".into()));
    }
    let n = y.len();
    let gains: Vec<Vec<f64>> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(t as u64);
            let mut idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut gain = vec![0.0; k];
            grow(x_rows, y, &mut idx, 0, params, &mut gain);
            gain
        })
        .collect();
    let mut total = vec![0.0; k];
    for g in &gains {
        for (a, b) in total.iter_mut().zip(g) {
            *a += b;
        }
    }
    let s: f64 = total.iter().sum();
    if s > 0.0 {
        Ok(total.iter().map(|v| v / s).collect())
    } else {
        Ok(vec![1.0 / k as f64; k])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeResult {
    /// Kept feature names in name order.
    pub selected: Vec<String>,
    /// Dropped names, first eliminated first.
    pub eliminated: Vec<String>,
}

/// Recursive feature elimination: refit importances and drop the `step`
/// least important features until `n_keep` remain. Columns are processed in
/// name order and ties drop the later name, so the result does not depend on
/// the input column order.
pub fn rfe(
    names: &[String],
    x_rows: &[Vec<f64>],
    y: &[f64],
    n_keep: usize,
    step: usize,
    params: &ForestParams,
) -> Result<RfeResult> {
    let k = names.len();
    if n_keep == 0 || n_keep > k {
        return Err(Error::invalid(format!("n_keep must be in 1..={k}, got {n_keep}")));
    }
    if step == 0 {
        return Err(Error::invalid("rfe step must be at least 1"));
    }
    if x_rows.iter().any(|r| r.len() != k) {
        return Err(Error::Shape("row length differs from the number of names".into()));
    }
    let mut by_name: Vec<usize> = (0..k).collect();
    by_name.sort_by(|&a, &b| names[a].cmp(&names[b]));
    if by_name.windows(2).any(|w| names[w[0]] == names[w[1]]) {
        return Err(Error::invalid("feature names must be unique"));
    }
    let mut active = by_name;
    let mut eliminated = Vec::new();
    while active.len() > n_keep {
        let sub: Vec<Vec<f64>> = x_rows.iter().map(|r| active.iter().map(|&c| r[c]).collect()).collect();
        let imp = forest_importance(&sub, y, params)?;
        let mut order: Vec<usize> = (0..active.len()).collect();
        // Least important first; among equals the later name goes first.
        order.sort_by(|&a, &b| imp[a].total_cmp(&imp[b]).then(b.cmp(&a)));
        let n_drop = step.min(active.len() - n_keep);
        let mut drop: Vec<usize> = order[..n_drop].to_vec();
        for &d in &drop {
            eliminated.push(names[active[d]].clone());
        }
        drop.sort_unstable();
        for d in drop.into_iter().rev() {
            active.remove(d);
        }
    }
    Ok(RfeResult {
        selected: active.iter().map(|&c| names[c].clone()).collect(),
        eliminated,
    })
}
