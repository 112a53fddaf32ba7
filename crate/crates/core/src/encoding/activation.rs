use serde::{Deserialize, Serialize};

/// Non-negative sparse rate code over `cells` basis units.
///
/// Only strictly positive entries are listed, sorted by cell index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseActivation {
    cells: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseActivation {
    /// Builds from unsorted `(index, value)` pairs; non-positive values are
    /// dropped and duplicate indices are summed.
    pub fn from_pairs(cells: usize, mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut indices = Vec::with_capacity(pairs.len());
        let mut values: Vec<f64> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            assert!(i < cells, "cell {i} out of range for {cells} cells");
            if indices.last() == Some(&i) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(i);
                values.push(v);
            }
        }
        let (indices, values) = indices.into_iter().zip(values).filter(|&(_, v)| v > 0.0).unzip();
        SparseActivation { cells, indices, values }
    }

    pub fn empty(cells: usize) -> Self {
        SparseActivation {
            cells,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Total number of cells in the encoder this came from.
    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Active count `m`.
    pub fn active(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn sum_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `Σ_s B_s · w[s]`.
    pub fn dot(&self, w: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * w[i]).sum()
    }

    pub fn fraction(&self) -> f64 {
        self.active() as f64 / self.cells as f64
    }
}

/// A sparse activation scaled by a signed rate `R`.
///
/// Shares the base activation's index set even where `R = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Modulated {
    cells: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl Modulated {
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * w[i]).sum()
    }
}

/// Multiplies every active value by `r`.
pub fn modulate(base: &SparseActivation, r: f64) -> Modulated {
    Modulated {
        cells: base.cells,
        indices: base.indices.clone(),
        values: base.values.iter().map(|v| v * r).collect(),
    }
}

/// Splits a signed rate onto two non-negative channels, `R⁺ = max(R, 0)` and
/// `R⁻ = max(-R, 0)`; the signed code is `positive - negative`.
pub fn modulate_dual_rail(base: &SparseActivation, r: f64) -> (Modulated, Modulated) {
    (modulate(base, r.max(0.0)), modulate(base, (-r).max(0.0)))
}
