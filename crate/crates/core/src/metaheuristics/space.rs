use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimKind {
    /// Searched continuously, rounded to the nearest integer when decoded.
    Integer,
    Continuous,
    /// Searched in `ln` coordinates.
    LogContinuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub kind: DimKind,
    pub lower: f64,
    pub upper: f64,
}

impl Dimension {
    pub fn new(name: impl Into<String>, kind: DimKind, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            kind,
            lower,
            upper,
        }
    }

    fn internal_bounds(&self) -> (f64, f64) {
        match self.kind {
            DimKind::LogContinuous => (self.lower.ln(), self.upper.ln()),
            _ => (self.lower, self.upper),
        }
    }

    fn decode(&self, z: f64) -> f64 {
        match self.kind {
            DimKind::Integer => z.round().clamp(self.lower, self.upper),
            DimKind::Continuous => z.clamp(self.lower, self.upper),
            DimKind::LogContinuous => z.exp().clamp(self.lower, self.upper),
        }
    }

    fn encode(&self, v: f64) -> f64 {
        match self.kind {
            DimKind::LogContinuous => v.ln(),
            _ => v,
        }
    }
}

/// Box of named dimensions. Optimizers move in internal coordinates
/// (`ln` for log dimensions) and only decode when evaluating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dims: Vec<Dimension>,
}

impl SearchSpace {
    pub fn new(dims: Vec<Dimension>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::invalid("search space has no dimensions"));
        }
        for d in &dims {
            if !(d.lower.is_finite() && d.upper.is_finite() && d.lower < d.upper) {
                return Err(Error::invalid(format!(
                    "dimension {}: need finite lower < upper, got [{}, {}]",
                    d.name, d.lower, d.upper
                )));
            }
            if d.kind == DimKind::LogContinuous && d.lower <= 0.0 {
                return Err(Error::invalid(format!("log dimension {} needs a positive lower bound", d.name)));
            }
        }
        Ok(Self { dims })
    }

    /// `n` continuous dimensions on `[lower, upper]`.
    pub fn uniform(n: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|i| Dimension::new(format!("x{i}"), DimKind::Continuous, lower, upper))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.dims.iter().map(|d| d.name.as_str()).collect()
    }

    /// Internal-coordinate bounds.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        self.dims.iter().map(|d| d.internal_bounds()).unzip()
    }

    pub fn decode(&self, internal: &[f64]) -> Vec<f64> {
        self.dims.iter().zip(internal).map(|(d, &z)| d.decode(z)).collect()
    }

    pub fn encode(&self, point: &[f64]) -> Vec<f64> {
        self.dims.iter().zip(point).map(|(d, &v)| d.encode(v)).collect()
    }
}
