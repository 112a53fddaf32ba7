use log::debug;
use serde::{Deserialize, Serialize};

use super::NetworkError;
use crate::encoding::{BasisLayout, Modulated, SparseActivation};

/// Upper bound on calibration grid points.
const GRID_BUDGET: usize = 200_000;
const CG_ITERATIONS: usize = 500;

/// Reconstructs one joint speed from the speed-modulated position code.
///
/// Only every `stride`-th cell is wired; the weights on those cells are fixed
/// after calibration so that `Σ_s B_s(q) w_s ≈ 1` over the whole joint space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasketCell {
    pub speed: usize,
    pub stride: usize,
    /// Dense over the position code, zero off the sampled set.
    pub weights: Vec<f64>,
    /// RMS of `Σ B w − 1` on the calibration grid.
    pub residual: f64,
}

impl BasketCell {
    /// Fit sampled weights by least squares on a dense grid of the layout.
    pub fn calibrate(layout: &BasisLayout, speed: usize, stride: usize) -> Result<Self, NetworkError> {
        let (weights, residual) = fit_unity(layout, stride)?;
        Ok(BasketCell { speed, stride, weights, residual })
    }

    pub fn from_weights(speed: usize, stride: usize, weights: Vec<f64>) -> Self {
        BasketCell { speed, stride, weights, residual: f64::NAN }
    }

    /// Reconstructed speed `Σ_s B_s q̇ w_s`.
    pub fn eval(&self, modulated: &Modulated) -> Result<f64, NetworkError> {
        if modulated.cells() != self.weights.len() {
            return Err(NetworkError::EncoderMismatch { expected: self.weights.len(), got: modulated.cells() });
        }
        Ok(modulated.dot(&self.weights))
    }

    /// `Σ_s B_s w_s`, the reconstruction gain at a position.
    pub fn gain(&self, code: &SparseActivation) -> f64 {
        code.dot(&self.weights)
    }

    pub fn sampled(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.weights.len()).step_by(self.stride)
    }
}

/// Least-squares weights on cells `0, stride, 2·stride, ...` that make the
/// code sum to one. Returns dense weights and the grid RMS residual.
pub(crate) fn fit_unity(layout: &BasisLayout, stride: usize) -> Result<(Vec<f64>, f64), NetworkError> {
    layout.validate()?;
    if stride == 0 {
        return Err(NetworkError::Config("basket stride must be positive".into()));
    }
    let p = layout.cell_count();
    let rows = grid_rows(layout, stride)?;

    // Whole tilings sampled: every grid point sees the same number of cells.
    let tilings = layout.tilings;
    let init = stride as f64 / tilings as f64;
    let mut w = vec![0.0; p];
    for s in (0..p).step_by(stride) {
        w[s] = init;
    }
    cgls(&rows, &mut w);
    let residual = rms_residual(&rows, &w);
    debug!("basket calibration: stride {stride}, {} grid points, residual {residual:e}", rows.len());
    Ok((w, residual))
}

fn grid_rows(layout: &BasisLayout, stride: usize) -> Result<Vec<Vec<(usize, f64)>>, NetworkError> {
    let d = layout.dims();
    let finest = layout.cells_per_dim * layout.tilings * 2 + 1;
    let per_dim_cap = (GRID_BUDGET as f64).powf(1.0 / d as f64).floor() as usize;
    let per_dim = finest.min(per_dim_cap.max(2));
    let total = per_dim.pow(d as u32);
    let mut rows = Vec::with_capacity(total);
    let mut q = vec![0.0; d];
    for flat in 0..total {
        let mut rest = flat;
        for (k, qk) in q.iter_mut().enumerate() {
            let idx = rest % per_dim;
            rest /= per_dim;
            let (lo, hi) = layout.ranges[k];
            *qk = lo + (hi - lo) * idx as f64 / (per_dim - 1) as f64;
        }
        let code = layout.encode(&q)?;
        rows.push(code.iter().filter(|(s, _)| s % stride == 0).collect());
    }
    Ok(rows)
}

fn residuals(rows: &[Vec<(usize, f64)>], w: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| 1.0 - r.iter().map(|&(s, b)| b * w[s]).sum::<f64>()).collect()
}

fn rms_residual(rows: &[Vec<(usize, f64)>], w: &[f64]) -> f64 {
    let r = residuals(rows, w);
    (r.iter().map(|x| x * x).sum::<f64>() / r.len().max(1) as f64).sqrt()
}

/// Conjugate gradient on the normal equations, starting from `w`.
fn cgls(rows: &[Vec<(usize, f64)>], w: &mut [f64]) {
    let p = w.len();
    let at = |v: &[f64]| {
        let mut out = vec![0.0; p];
        for (row, &vi) in rows.iter().zip(v) {
            for &(s, b) in row {
                out[s] += b * vi;
            }
        }
        out
    };
    let a = |v: &[f64]| -> Vec<f64> { rows.iter().map(|r| r.iter().map(|&(s, b)| b * v[s]).sum()).collect() };

    let mut r = residuals(rows, w);
    let mut s = at(&r);
    let mut d = s.clone();
    let mut gamma: f64 = s.iter().map(|x| x * x).sum();
    let tol = 1e-28 * rows.len() as f64;
    for _ in 0..CG_ITERATIONS {
        if gamma <= tol {
            break;
        }
        let ad = a(&d);
        let denom: f64 = ad.iter().map(|x| x * x).sum();
        if denom == 0.0 {
            break;
        }
        let alpha = gamma / denom;
        for (wi, di) in w.iter_mut().zip(&d) {
            *wi += alpha * di;
        }
        for (ri, adi) in r.iter_mut().zip(&ad) {
            *ri -= alpha * adi;
        }
        s = at(&r);
        let next: f64 = s.iter().map(|x| x * x).sum();
        let beta = next / gamma;
        gamma = next;
        for (di, si) in d.iter_mut().zip(&s) {
            *di = si + beta * *di;
        }
    }
}
