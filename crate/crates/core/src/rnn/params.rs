use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Lstm,
    Gru,
}

impl CellKind {
    pub fn n_gates(self) -> usize {
        match self {
            CellKind::Lstm => 4,
            CellKind::Gru => 3,
        }
    }

    /// Gate labels in storage order.
    pub fn gate_names(self) -> &'static [&'static str] {
        match self {
            CellKind::Lstm => &["f", "i", "C", "o"],
            CellKind::Gru => &["z", "r", "n"],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CellKind::Lstm => "lstm",
            CellKind::Gru => "gru",
        }
    }
}

/// Every weight in one flat buffer:
/// `[W_g (hidden × (hidden + input)) for each gate] [b_g for each gate] [w_out (hidden)] [b_out]`.
/// Gate weights act on the concatenation `[h_{t-1}, x_t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnnParams {
    pub cell: CellKind,
    pub input_dim: usize,
    pub hidden: usize,
    pub data: Vec<f64>,
}

impl RnnParams {
    pub fn zeros(cell: CellKind, input_dim: usize, hidden: usize) -> Self {
        let n = Self::count(cell, input_dim, hidden);
        Self {
            cell,
            input_dim,
            hidden,
            data: vec![0.0; n],
        }
    }

    fn count(cell: CellKind, input_dim: usize, hidden: usize) -> usize {
        let g = cell.n_gates();
        g * hidden * (hidden + input_dim) + g * hidden + hidden + 1
    }

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases; LSTM
    /// forget-gate biases start at +1.
    pub fn init(cell: CellKind, input_dim: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(cell, input_dim, hidden);
        let gate_bound = 1.0 / ((hidden + input_dim) as f64).sqrt();
        let head_bound = 1.0 / (hidden as f64).sqrt();
        let g = cell.n_gates();
        for gate in 0..g {
            for w in p.gate_w_mut(gate) {
                *w = rng.random_range(-gate_bound..gate_bound);
            }
            for b in p.gate_b_mut(gate) {
                *b = rng.random_range(-gate_bound..gate_bound);
            }
        }
        for w in p.head_w_mut() {
            *w = rng.random_range(-head_bound..head_bound);
        }
        let hb = p.head_b_index();
        p.data[hb] = rng.random_range(-head_bound..head_bound);
        if cell == CellKind::Lstm {
            p.gate_b_mut(0).iter_mut().for_each(|b| *b = 1.0);
        }
        p
    }

    pub fn n_params(&self) -> usize {
        self.data.len()
    }

    pub fn concat_dim(&self) -> usize {
        self.hidden + self.input_dim
    }

    fn w_range(&self, gate: usize) -> Range<usize> {
        let size = self.hidden * self.concat_dim();
        gate * size..(gate + 1) * size
    }

    fn b_range(&self, gate: usize) -> Range<usize> {
        let base = self.cell.n_gates() * self.hidden * self.concat_dim();
        base + gate * self.hidden..base + (gate + 1) * self.hidden
    }

    fn head_range(&self) -> Range<usize> {
        let base = self.cell.n_gates() * self.hidden * (self.concat_dim() + 1);
        base..base + self.hidden
    }

    pub fn head_b_index(&self) -> usize {
        self.data.len() - 1
    }

    pub fn gate_w(&self, gate: usize) -> &[f64] {
        &self.data[self.w_range(gate)]
    }

    pub fn gate_w_mut(&mut self, gate: usize) -> &mut [f64] {
        let r = self.w_range(gate);
        &mut self.data[r]
    }

    pub fn gate_b(&self, gate: usize) -> &[f64] {
        &self.data[self.b_range(gate)]
    }

    pub fn gate_b_mut(&mut self, gate: usize) -> &mut [f64] {
        let r = self.b_range(gate);
        &mut self.data[r]
    }

    pub fn head_w(&self) -> &[f64] {
        &self.data[self.head_range()]
    }

    pub fn head_w_mut(&mut self) -> &mut [f64] {
        let r = self.head_range();
        &mut self.data[r]
    }

    pub fn head_b(&self) -> f64 {
        self.data[self.head_b_index()]
    }

    /// Named parameter tensors, e.g. `W_f`, `b_f`, ..., `w_out`, `b_out`.
    pub fn tensor_ranges(&self) -> Vec<(String, Range<usize>)> {
        let names = self.cell.gate_names();
        let mut out = Vec::new();
        for (g, n) in names.iter().enumerate() {
            out.push((format!("W_{n}"), self.w_range(g)));
        }
        for (g, n) in names.iter().enumerate() {
            out.push((format!("b_{n}"), self.b_range(g)));
        }
        out.push(("w_out".into(), self.head_range()));
        out.push(("b_out".into(), self.head_b_index()..self.data.len()));
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
