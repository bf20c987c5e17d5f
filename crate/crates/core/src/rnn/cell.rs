use crate::error::{Error, Result};

use super::{CellKind, RnnParams};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `out = W z + b` for a row-major `out.len() × z.len()` matrix.
fn affine(w: &[f64], b: &[f64], z: &[f64], out: &mut [f64]) {
    let n = z.len();
    for (r, o) in out.iter_mut().enumerate() {
        let row = &w[r * n..(r + 1) * n];
        *o = b[r] + row.iter().zip(z).map(|(a, x)| a * x).sum::<f64>();
    }
}

/// Accumulates `dW += da ⊗ z`, `db += da` and `dz += Wᵀ da`.
fn affine_backward(w: &[f64], z: &[f64], da: &[f64], dw: &mut [f64], db: &mut [f64], dz: &mut [f64]) {
    let n = z.len();
    for (r, &d) in da.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        db[r] += d;
        let row = &w[r * n..(r + 1) * n];
        let drow = &mut dw[r * n..(r + 1) * n];
        for c in 0..n {
            drow[c] += d * z[c];
            dz[c] += row[c] * d;
        }
    }
}

fn check_step_inputs(params: &RnnParams, x: &[f64], h_prev: &[f64]) -> Result<()> {
    if x.len() != params.input_dim || h_prev.len() != params.hidden {
        return Err(Error::Shape(format!(
            "cell expects input {} / hidden {}, got {} / {}",
            params.input_dim,
            params.hidden,
            x.len(),
            h_prev.len()
        )));
    }
    if x.iter().chain(h_prev).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("cell input".into()));
    }
    Ok(())
}

/// Activations kept from an LSTM step for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCache {
    /// `[h_{t-1}, x_t]`
    pub z: Vec<f64>,
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    /// Candidate cell values.
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

/// One LSTM step:
/// `f = σ(W_f z + b_f)`, `i = σ(W_i z + b_i)`, `C' = tanh(W_C z + b_C)`,
/// `c = f·c_prev + i·C'`, `o = σ(W_o z + b_o)`, `h = o·tanh(c)`.
pub fn lstm_cell_step(
    params: &RnnParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, LstmCache)> {
    if params.cell != CellKind::Lstm {
        return Err(Error::invalid("lstm_cell_step needs LSTM parameters"));
    }
    check_step_inputs(params, x, h_prev)?;
    if c_prev.len() != params.hidden || c_prev.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("cell state has wrong size or non-finite values"));
    }
    let h = params.hidden;
    let mut z = Vec::with_capacity(params.concat_dim());
    z.extend_from_slice(h_prev);
    z.extend_from_slice(x);
    let mut pre = vec![vec![0.0; h]; 4];
    for (gate, out) in pre.iter_mut().enumerate() {
        affine(params.gate_w(gate), params.gate_b(gate), &z, out);
    }
    let f: Vec<f64> = pre[0].iter().map(|&a| sigmoid(a)).collect();
    let i: Vec<f64> = pre[1].iter().map(|&a| sigmoid(a)).collect();
    let g: Vec<f64> = pre[2].iter().map(|&a| a.tanh()).collect();
    let o: Vec<f64> = pre[3].iter().map(|&a| sigmoid(a)).collect();
    let c: Vec<f64> = (0..h).map(|r| f[r] * c_prev[r] + i[r] * g[r]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h_t: Vec<f64> = (0..h).map(|r| o[r] * tanh_c[r]).collect();
    let cache = LstmCache {
        z,
        f,
        i,
        g,
        o,
        c_prev: c_prev.to_vec(),
        tanh_c,
    };
    Ok((h_t, c, cache))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruCache {
    /// `[h_{t-1}, x_t]`
    pub z_in: Vec<f64>,
    /// `[r·h_{t-1}, x_t]`
    pub rh_in: Vec<f64>,
    pub u: Vec<f64>,
    pub r: Vec<f64>,
    pub n: Vec<f64>,
    pub h_prev: Vec<f64>,
}

/// One GRU step:
/// `u = σ(W_z z + b_z)`, `r = σ(W_r z + b_r)`, `n = tanh(W_n [r·h, x] + b_n)`,
/// `h = (1 - u)·n + u·h_prev`.
pub fn gru_cell_step(params: &RnnParams, x: &[f64], h_prev: &[f64]) -> Result<(Vec<f64>, GruCache)> {
    if params.cell != CellKind::Gru {
        return Err(Error::invalid("gru_cell_step needs GRU parameters"));
    }
    check_step_inputs(params, x, h_prev)?;
    let h = params.hidden;
    let mut z_in = Vec::with_capacity(params.concat_dim());
    z_in.extend_from_slice(h_prev);
    z_in.extend_from_slice(x);
    let mut a_u = vec![0.0; h];
    let mut a_r = vec![0.0; h];
    affine(params.gate_w(0), params.gate_b(0), &z_in, &mut a_u);
    affine(params.gate_w(1), params.gate_b(1), &z_in, &mut a_r);
    let u: Vec<f64> = a_u.iter().map(|&a| sigmoid(a)).collect();
    let r: Vec<f64> = a_r.iter().map(|&a| sigmoid(a)).collect();
    let mut rh_in = Vec::with_capacity(params.concat_dim());
    rh_in.extend((0..h).map(|k| r[k] * h_prev[k]));
    rh_in.extend_from_slice(x);
    let mut a_n = vec![0.0; h];
    affine(params.gate_w(2), params.gate_b(2), &rh_in, &mut a_n);
    let n: Vec<f64> = a_n.iter().map(|a| a.tanh()).collect();
    let h_t = (0..h).map(|k| (1.0 - u[k]) * n[k] + u[k] * h_prev[k]).collect();
    Ok((
        h_t,
        GruCache {
            z_in,
            rh_in,
            u,
            r,
            n,
            h_prev: h_prev.to_vec(),
        },
    ))
}

enum StepCache {
    Lstm(LstmCache),
    Gru(GruCache),
}

fn check_window(params: &RnnParams, window: &[f64]) -> Result<usize> {
    if window.is_empty() || window.len() % params.input_dim != 0 {
        return Err(Error::Shape(format!(
            "window of {} values is not a whole number of {}-feature rows",
            window.len(),
            params.input_dim
        )));
    }
    Ok(window.len() / params.input_dim)
}

fn unroll(params: &RnnParams, window: &[f64]) -> Result<(Vec<f64>, Vec<StepCache>)> {
    let steps = check_window(params, window)?;
    let mut h = vec![0.0; params.hidden];
    let mut c = vec![0.0; params.hidden];
    let mut caches = Vec::with_capacity(steps);
    for x in window.chunks(params.input_dim) {
        match params.cell {
            CellKind::Lstm => {
                let (h2, c2, cache) = lstm_cell_step(params, x, &h, &c)?;
                h = h2;
                c = c2;
                caches.push(StepCache::Lstm(cache));
            }
            CellKind::Gru => {
                let (h2, cache) = gru_cell_step(params, x, &h)?;
                h = h2;
                caches.push(StepCache::Gru(cache));
            }
        }
    }
    Ok((h, caches))
}

fn head(params: &RnnParams, h: &[f64]) -> f64 {
    params.head_b() + params.head_w().iter().zip(h).map(|(w, x)| w * x).sum::<f64>()
}

/// Runs the cell over a row-major `steps × input_dim` window from a zero
/// state and applies the linear head to the final hidden state.
pub fn forward(params: &RnnParams, window: &[f64]) -> Result<f64> {
    let (h, _) = unroll(params, window)?;
    Ok(head(params, &h))
}

/// Backpropagates `dy` (d loss / d prediction) through one unrolled window,
/// accumulating into `grad`.
fn backward(params: &RnnParams, h_last: &[f64], caches: &[StepCache], dy: f64, grad: &mut RnnParams) {
    let hid = params.hidden;
    for (g, hv) in grad.head_w_mut().iter_mut().zip(h_last) {
        *g += dy * hv;
    }
    let hb = grad.head_b_index();
    grad.data[hb] += dy;

    let mut dh: Vec<f64> = params.head_w().iter().map(|w| w * dy).collect();
    let mut dc = vec![0.0; hid];
    let mut dz = vec![0.0; params.concat_dim()];
    let n_gates = params.cell.n_gates();
    let mut da = vec![vec![0.0; hid]; n_gates];

    for cache in caches.iter().rev() {
        dz.iter_mut().for_each(|v| *v = 0.0);
        match cache {
            StepCache::Lstm(s) => {
                for r in 0..hid {
                    let d_o = dh[r] * s.tanh_c[r];
                    dc[r] += dh[r] * s.o[r] * (1.0 - s.tanh_c[r] * s.tanh_c[r]);
                    let d_f = dc[r] * s.c_prev[r];
                    let d_i = dc[r] * s.g[r];
                    let d_g = dc[r] * s.i[r];
                    da[0][r] = d_f * s.f[r] * (1.0 - s.f[r]);
                    da[1][r] = d_i * s.i[r] * (1.0 - s.i[r]);
                    da[2][r] = d_g * (1.0 - s.g[r] * s.g[r]);
                    da[3][r] = d_o * s.o[r] * (1.0 - s.o[r]);
                    dc[r] *= s.f[r];
                }
                for (gate, d) in da.iter().enumerate() {
                    let (w_r, b_r) = (grad_w_range(params, gate), grad_b_range(params, gate));
                    let (dw, db) = split_two(&mut grad.data, w_r, b_r);
                    affine_backward(params.gate_w(gate), &s.z, d, dw, db, &mut dz);
                }
                dh.copy_from_slice(&dz[..hid]);
            }
            StepCache::Gru(s) => {
                let mut dh_prev = vec![0.0; hid];
                for r in 0..hid {
                    let dn = dh[r] * (1.0 - s.u[r]);
                    let du = dh[r] * (s.h_prev[r] - s.n[r]);
                    dh_prev[r] = dh[r] * s.u[r];
                    da[2][r] = dn * (1.0 - s.n[r] * s.n[r]);
                    da[0][r] = du * s.u[r] * (1.0 - s.u[r]);
                }
                let mut drh = vec![0.0; params.concat_dim()];
                {
                    let (dw, db) = split_two(&mut grad.data, grad_w_range(params, 2), grad_b_range(params, 2));
                    affine_backward(params.gate_w(2), &s.rh_in, &da[2], dw, db, &mut drh);
                }
                for r in 0..hid {
                    let d_rh = drh[r];
                    dh_prev[r] += d_rh * s.r[r];
                    let dr = d_rh * s.h_prev[r];
                    da[1][r] = dr * s.r[r] * (1.0 - s.r[r]);
                }
                for gate in 0..2 {
                    let (dw, db) = split_two(&mut grad.data, grad_w_range(params, gate), grad_b_range(params, gate));
                    affine_backward(params.gate_w(gate), &s.z_in, &da[gate], dw, db, &mut dz);
                }
                for r in 0..hid {
                    dh[r] = dh_prev[r] + dz[r];
                }
            }
        }
    }
}

fn grad_w_range(p: &RnnParams, gate: usize) -> std::ops::Range<usize> {
    let size = p.hidden * p.concat_dim();
    gate * size..(gate + 1) * size
}

fn grad_b_range(p: &RnnParams, gate: usize) -> std::ops::Range<usize> {
    let base = p.cell.n_gates() * p.hidden * p.concat_dim();
    base + gate * p.hidden..base + (gate + 1) * p.hidden
}

/// Two disjoint mutable sub-slices; `a` must lie entirely before `b`.
fn split_two(
    data: &mut [f64],
    a: std::ops::Range<usize>,
    b: std::ops::Range<usize>,
) -> (&mut [f64], &mut [f64]) {
    debug_assert!(a.end <= b.start);
    let (lo, hi) = data.split_at_mut(b.start);
    (&mut lo[a], &mut hi[..b.end - b.start])
}

/// Mean squared error over the batch and its gradient with respect to every
/// parameter, by full backpropagation through time.
pub fn loss_and_gradients(params: &RnnParams, windows: &[&[f64]], targets: &[f64]) -> Result<(f64, RnnParams)> {
    if windows.is_empty() || windows.len() != targets.len() {
        return Err(Error::Shape(format!(
            "batch has {} windows and {} targets",
            windows.len(),
            targets.len()
        )));
    }
    let n = windows.len() as f64;
    let mut grad = RnnParams::zeros(params.cell, params.input_dim, params.hidden);
    let mut loss = 0.0;
    for (w, &y) in windows.iter().zip(targets) {
        let (h, caches) = unroll(params, w)?;
        let pred = head(params, &h);
        let resid = pred - y;
        loss += resid * resid;
        backward(params, &h, &caches, 2.0 * resid / n, &mut grad);
    }
    let loss = loss / n;
    if !loss.is_finite() {
        return Err(Error::NonFinite("batch loss".into()));
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lstm_zero_params() {
        let p = RnnParams::zeros(CellKind::Lstm, 2, 3);
        let (h, c, cache) = lstm_cell_step(&p, &[0.3, -0.2], &[0.0; 3], &[0.0; 3]).unwrap();
        assert!(cache.f.iter().chain(&cache.i).chain(&cache.o).all(|&v| v == 0.5));
        assert!(cache.g.iter().all(|&v| v == 0.0));
        assert_eq!(c, vec![0.0; 3]);
        assert_eq!(h, vec![0.0; 3]);

        let (h, c, _) = lstm_cell_step(&p, &[0.3, -0.2], &[0.0; 3], &[1.0; 3]).unwrap();
        assert_eq!(c, vec![0.5; 3]);
        for v in h {
            assert!((v - 0.5 * 0.5f64.tanh()).abs() < 1e-15);
            assert!((v - 0.231_058_5).abs() < 1e-6);
        }
    }

    #[test]
    fn lstm_outputs_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p = RnnParams::zeros(CellKind::Lstm, 3, 6);
        p.data.iter_mut().for_each(|v| *v = rng.random_range(-3.0..3.0));
        let (h, _, _) = lstm_cell_step(&p, &[10.0, -4.0, 2.0], &[0.9; 6], &[5.0; 6]).unwrap();
        assert!(h.iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn non_finite_input_is_error() {
        let p = RnnParams::zeros(CellKind::Lstm, 1, 2);
        assert!(lstm_cell_step(&p, &[f64::NAN], &[0.0; 2], &[0.0; 2]).is_err());
        let p = RnnParams::zeros(CellKind::Gru, 1, 2);
        assert!(gru_cell_step(&p, &[f64::INFINITY], &[0.0; 2]).is_err());
    }

    #[test]
    fn gru_zero_params_halves_state() {
        let p = RnnParams::zeros(CellKind::Gru, 2, 3);
        let (h, _) = gru_cell_step(&p, &[1.0, 2.0], &[0.4, -0.6, 0.2]).unwrap();
        assert_eq!(h, vec![0.2, -0.3, 0.1]);
        let (h, _) = gru_cell_step(&p, &[1.0, 2.0], &[0.0; 3]).unwrap();
        assert_eq!(h, vec![0.0; 3]);
    }

    #[test]
    fn gru_outputs_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut p = RnnParams::zeros(CellKind::Gru, 2, 4);
        p.data.iter_mut().for_each(|v| *v = rng.random_range(-3.0..3.0));
        let (h, _) = gru_cell_step(&p, &[7.0, -7.0], &[0.99, -0.99, 0.5, 0.0]).unwrap();
        assert!(h.iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn forward_zero_params_is_output_bias() {
        let mut p = RnnParams::zeros(CellKind::Lstm, 2, 3);
        let hb = p.head_b_index();
        p.data[hb] = 0.7;
        assert_eq!(forward(&p, &[0.1, 0.2, 0.3, 0.4]).unwrap(), 0.7);
        assert!(forward(&p, &[0.1, 0.2, 0.3]).is_err());
    }

    #[test]
    fn single_step_forward_matches_cell_plus_head() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = RnnParams::init(CellKind::Lstm, 2, 3, &mut rng);
        let (h, _, _) = lstm_cell_step(&p, &[0.5, -0.5], &[0.0; 3], &[0.0; 3]).unwrap();
        let expected = p.head_b() + p.head_w().iter().zip(&h).map(|(a, b)| a * b).sum::<f64>();
        assert_eq!(forward(&p, &[0.5, -0.5]).unwrap(), expected);
        assert_eq!(forward(&p, &[0.5, -0.5]).unwrap(), forward(&p, &[0.5, -0.5]).unwrap());
    }

    #[test]
    fn perfect_prediction_has_zero_loss_and_head_grad() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = RnnParams::init(CellKind::Gru, 2, 3, &mut rng);
        let w = [0.1, 0.2, 0.3, 0.4];
        let y = forward(&p, &w).unwrap();
        let (loss, g) = loss_and_gradients(&p, &[&w], &[y]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.head_w().iter().all(|&v| v == 0.0));
        assert_eq!(g.head_b(), 0.0);
    }

    #[test]
    fn doubling_residuals_quadruples_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = RnnParams::init(CellKind::Lstm, 1, 2, &mut rng);
        let ws: Vec<Vec<f64>> = vec![vec![0.1, 0.4], vec![0.3, 0.2]];
        let refs: Vec<&[f64]> = ws.iter().map(Vec::as_slice).collect();
        let preds: Vec<f64> = refs.iter().map(|w| forward(&p, w).unwrap()).collect();
        let t1: Vec<f64> = preds.iter().map(|p| p + 0.3).collect();
        let t2: Vec<f64> = preds.iter().map(|p| p + 0.6).collect();
        let (l1, _) = loss_and_gradients(&p, &refs, &t1).unwrap();
        let (l2, _) = loss_and_gradients(&p, &refs, &t2).unwrap();
        assert!((l2 - 4.0 * l1).abs() < 1e-12);
    }
}
