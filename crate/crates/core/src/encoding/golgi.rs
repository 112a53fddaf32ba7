//! Granule-cell layer under Golgi-cell control.
//!
//! Granule cell `i` fires at
//!
//! ```text
//! threshold mode:  Y_i = max(0, (M_i − σ_i − K_th·O) · G_Gr)
//! gain mode:       Y_i = max(0, ((1 − K_g·O)·M_i − σ_i) · G_Gr)
//! ```
//!
//! where `M_i` is the summed mossy drive of the cell and the Golgi rate is
//! `O = max(0, (H_U·ΣY + H_L·ΣR + θ) · H_Go)`. The loop is solved for its
//! fixed point; [`closed_loop_sum`] and [`line_params`] give the equilibrium
//! algebra over a known active set.

use serde::{Deserialize, Serialize};

use super::{EncodingError, SparseActivation};

pub const MAX_ITERATIONS: usize = 10_000;
pub const TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GolgiMode {
    /// Golgi output raises the granule threshold.
    Threshold,
    /// Golgi output scales the mossy drive (automatic gain control).
    Gain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GolgiParams {
    pub mode: GolgiMode,
    pub k_th: f64,
    pub k_g: f64,
    pub g_gr: f64,
    pub h_u: f64,
    pub h_l: f64,
    pub h_go: f64,
    pub theta: f64,
    /// One uniform threshold, or one per cell.
    #[serde(default = "default_sigma")]
    pub sigma: Vec<f64>,
    /// Upper-tree synapse count; must equal the encoder's cell count.
    #[serde(default)]
    pub p_syn: usize,
    /// Lower-tree synapse count (number of rate-coded `R` inputs).
    #[serde(default = "default_q_low")]
    pub q_low: usize,
    #[serde(default = "default_target")]
    pub sparsity_target: f64,
}

fn default_sigma() -> Vec<f64> {
    vec![0.0]
}

fn default_q_low() -> usize {
    1
}

fn default_target() -> f64 {
    0.01
}

impl GolgiParams {
    pub fn new(mode: GolgiMode, p_syn: usize) -> Self {
        GolgiParams {
            mode,
            k_th: 0.1,
            k_g: 0.1,
            g_gr: 1.0,
            h_u: 0.05,
            h_l: 0.1,
            h_go: 1.0,
            theta: 0.1,
            sigma: default_sigma(),
            p_syn,
            q_low: default_q_low(),
            sparsity_target: default_target(),
        }
    }

    pub fn validate(&self, cells: usize) -> Result<(), EncodingError> {
        let bad = |m: String| Err(EncodingError::Params(m));
        for (name, v) in [
            ("k_th", self.k_th),
            ("k_g", self.k_g),
            ("g_gr", self.g_gr),
            ("h_u", self.h_u),
            ("h_l", self.h_l),
            ("h_go", self.h_go),
            ("theta", self.theta),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !(self.sparsity_target > 0.0 && self.sparsity_target < 1.0) {
            return bad(format!("sparsity_target must lie in (0, 1), got {}", self.sparsity_target));
        }
        if self.p_syn != cells {
            return bad(format!("p_syn = {} but the encoder has {cells} cells", self.p_syn));
        }
        if self.sigma.len() != 1 && self.sigma.len() != cells {
            return bad(format!("sigma needs 1 or {cells} entries, got {}", self.sigma.len()));
        }
        if let Some(s) = self.sigma.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return bad(format!("sigma entries must be finite and non-negative, got {s}"));
        }
        Ok(())
    }

    #[inline]
    pub fn sigma(&self, cell: usize) -> f64 {
        if self.sigma.len() == 1 {
            self.sigma[0]
        } else {
            self.sigma[cell]
        }
    }

    /// Lower-tree input `ΣR_j` when each of the `q_low` synapses carries `|r|`.
    pub fn r_sum(&self, r: f64) -> f64 {
        self.q_low as f64 * r.abs()
    }

    /// Loop gain `G_Gr·K_g·H_U·H_Go·m` of the closed-form equilibrium.
    pub fn loop_gain(&self, m: usize) -> f64 {
        self.g_gr * self.k_g * self.h_u * self.h_go * m as f64
    }

    fn pre_activation(&self, drive: f64, sigma: f64, o: f64) -> f64 {
        match self.mode {
            GolgiMode::Threshold => (drive - sigma - self.k_th * o) * self.g_gr,
            GolgiMode::Gain => ((1.0 - self.k_g * o) * drive - sigma) * self.g_gr,
        }
    }

    /// `(ΣY, −dΣY/dO)` at Golgi rate `o`.
    fn layer_sum(&self, mossy: &SparseActivation, o: f64) -> (f64, f64) {
        let mut sum = 0.0;
        let mut slope = 0.0;
        for (i, m) in mossy.iter() {
            let y = self.pre_activation(m, self.sigma(i), o);
            if y > 0.0 {
                sum += y;
                slope += match self.mode {
                    GolgiMode::Threshold => self.g_gr * self.k_th,
                    GolgiMode::Gain => self.g_gr * self.k_g * m,
                };
            }
        }
        (sum, slope)
    }

    /// Granule outputs at a given Golgi rate.
    pub fn granule_outputs(&self, mossy: &SparseActivation, o: f64) -> SparseActivation {
        let pairs = mossy
            .iter()
            .map(|(i, m)| (i, self.pre_activation(m, self.sigma(i), o)))
            .collect();
        SparseActivation::from_pairs(mossy.cells(), pairs)
    }

    /// Golgi rate produced by granule activity `sum_y` and lower-tree input.
    pub fn golgi_rate(&self, sum_y: f64, r_sum: f64) -> f64 {
        ((self.h_u * sum_y + self.h_l * r_sum + self.theta) * self.h_go).max(0.0)
    }
}

/// Equilibrium of the granule/Golgi loop.
#[derive(Debug, Clone, PartialEq)]
pub struct GolgiState {
    pub y: SparseActivation,
    pub o: f64,
    pub iterations: usize,
}

/// Solves `O = golgi_rate(ΣY(O), ΣR)`.
///
/// Relaxed iteration `O ← O + (F(O) − O) / (1 + λ)`, with `λ` the local loop
/// gain `−dF/dO` over the current active set. `F` is piecewise linear and
/// decreasing, so this lands on the fixed point once the active set settles.
/// Stops when `|ΔO| < 1e-12 · max(1, |O|)`.
pub fn solve_golgi(params: &GolgiParams, mossy: &SparseActivation, r_sum: f64) -> Result<GolgiState, EncodingError> {
    params.validate(mossy.cells())?;
    if !(r_sum.is_finite() && r_sum >= 0.0) {
        return Err(EncodingError::Params(format!("R_sum must be a non-negative rate, got {r_sum}")));
    }
    let mut o = params.golgi_rate(0.0, r_sum);
    let mut delta = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let (sum_y, slope) = params.layer_sum(mossy, o);
        let target = params.golgi_rate(sum_y, r_sum);
        let gain = params.h_go * params.h_u * slope;
        let next = o + (target - o) / (1.0 + gain);
        delta = (next - o).abs();
        o = next;
        if !o.is_finite() {
            break;
        }
        if delta < TOLERANCE * o.abs().max(1.0) {
            return Ok(GolgiState {
                y: params.granule_outputs(mossy, o),
                o,
                iterations: it,
            });
        }
    }
    Err(EncodingError::NonConvergence {
        iterations: MAX_ITERATIONS,
        last_delta: delta,
    })
}

/// Fixed point with Golgi control acting on granule gain.
pub fn golgi_output_gain(
    params: &GolgiParams,
    mossy: &SparseActivation,
    r_sum: f64,
) -> Result<GolgiState, EncodingError> {
    require_mode(params, GolgiMode::Gain)?;
    solve_golgi(params, mossy, r_sum)
}

/// Fixed point with Golgi control acting on granule threshold.
pub fn golgi_output_threshold(
    params: &GolgiParams,
    mossy: &SparseActivation,
    r_sum: f64,
) -> Result<GolgiState, EncodingError> {
    require_mode(params, GolgiMode::Threshold)?;
    solve_golgi(params, mossy, r_sum)
}

fn require_mode(params: &GolgiParams, requested: GolgiMode) -> Result<(), EncodingError> {
    if params.mode != requested {
        return Err(EncodingError::Mode {
            requested,
            actual: params.mode,
        });
    }
    Ok(())
}

/// Closed-form `ΣY` over the `m` cells in `active`:
///
/// ```text
///        G_Gr·Σ_i (M_i − σ_i − K_th·H_Go·θ)      G_Gr·K_g·H_U·H_Go·m·(H_L/H_U)·ΣR
/// ΣY  =  ─────────────────────────────────  −  ────────────────────────────────
///           1 + G_Gr·K_g·H_U·H_Go·m                 1 + G_Gr·K_g·H_U·H_Go·m
/// ```
///
/// Both coupling constants appear as written: `K_th` in the input term and
/// `K_g` in the loop. It coincides with the threshold-mode equilibrium when
/// `K_th = K_g`, and with the gain-mode one when additionally every active
/// `M_i = 1`.
pub fn closed_loop_sum(params: &GolgiParams, mossy: &SparseActivation, r_sum: f64, active: &[usize]) -> f64 {
    let m = active.len();
    let loop_gain = params.loop_gain(m);
    let input: f64 = active
        .iter()
        .map(|&i| mossy.get(i) - params.sigma(i) - params.k_th * params.h_go * params.theta)
        .sum();
    // L·(H_L/H_U) written without the division so H_U = 0 stays finite.
    let r_term = params.g_gr * params.k_g * params.h_go * params.h_l * m as f64 * r_sum;
    (params.g_gr * input - r_term) / (1.0 + loop_gain)
}

/// Constants of `ΣY = k1·M − k2 − k3·R`, with `M = Σ_active M_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineParams {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

impl LineParams {
    pub fn eval(&self, mossy_total: f64, r_sum: f64) -> f64 {
        self.k1 * mossy_total - self.k2 - self.k3 * r_sum
    }
}

/// Rearranges [`closed_loop_sum`] into its line form for the given active set.
pub fn line_params(params: &GolgiParams, active: &[usize]) -> Result<LineParams, EncodingError> {
    let m = active.len();
    if m == 0 {
        return Err(EncodingError::Params("line parameters need at least one active cell".into()));
    }
    let denom = 1.0 + params.loop_gain(m);
    let sigma_sum: f64 = active.iter().map(|&i| params.sigma(i)).sum();
    Ok(LineParams {
        k1: params.g_gr / denom,
        k2: params.g_gr * (sigma_sum + m as f64 * params.k_th * params.h_go * params.theta) / denom,
        k3: params.g_gr * params.k_g * params.h_go * params.h_l * m as f64 / denom,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drive(values: &[f64]) -> SparseActivation {
        SparseActivation::from_pairs(values.len() + 2, values.iter().copied().enumerate().collect())
    }

    fn params(mode: GolgiMode, cells: usize) -> GolgiParams {
        GolgiParams {
            mode,
            k_th: 0.3,
            k_g: 0.3,
            g_gr: 1.5,
            h_u: 0.2,
            h_l: 0.4,
            h_go: 1.1,
            theta: 0.5,
            sigma: vec![0.2],
            p_syn: cells,
            q_low: 2,
            sparsity_target: 0.01,
        }
    }

    /// Bisection on the scalar fixed-point equation; independent of the
    /// relaxed iteration.
    fn bisect(p: &GolgiParams, mossy: &SparseActivation, r: f64) -> f64 {
        let f = |o: f64| {
            let sum: f64 = mossy
                .iter()
                .map(|(i, m)| {
                    let pre = match p.mode {
                        GolgiMode::Threshold => (m - p.sigma(i) - p.k_th * o) * p.g_gr,
                        GolgiMode::Gain => ((1.0 - p.k_g * o) * m - p.sigma(i)) * p.g_gr,
                    };
                    pre.max(0.0)
                })
                .sum();
            ((p.h_u * sum + p.h_l * r + p.theta) * p.h_go).max(0.0) - o
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        while f(hi) > 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn silent_layer_leaves_spontaneous_rate() {
        let mossy = drive(&[0.1, 0.05, 0.15]);
        let mut p = params(GolgiMode::Gain, mossy.cells());
        p.sigma = vec![0.5];
        let s = golgi_output_gain(&p, &mossy, 0.0).unwrap();
        assert_eq!(s.y.active(), 0);
        assert_eq!(s.o, p.theta * p.h_go);
    }

    #[test]
    fn zero_coupling_is_open_loop() {
        let mossy = drive(&[0.9, 0.5, 0.1, 0.7]);
        let mut p = params(GolgiMode::Gain, mossy.cells());
        p.k_g = 0.0;
        let s = golgi_output_gain(&p, &mossy, 1.0).unwrap();
        for (i, m) in mossy.iter() {
            assert_eq!(s.y.get(i), ((m - 0.2) * 1.5).max(0.0));
        }
        let mut p = params(GolgiMode::Threshold, mossy.cells());
        p.k_th = 0.0;
        let s = golgi_output_threshold(&p, &mossy, 1.0).unwrap();
        for (i, m) in mossy.iter() {
            assert_eq!(s.y.get(i), ((m - 0.2) * 1.5).max(0.0));
        }
    }

    #[test]
    fn matches_bisection_oracle() {
        let mossy = drive(&[0.9, 0.5, 0.1, 0.7, 1.3, 0.35]);
        for mode in [GolgiMode::Threshold, GolgiMode::Gain] {
            for r in [0.0, 0.5, 3.0] {
                let p = params(mode, mossy.cells());
                let s = solve_golgi(&p, &mossy, r).unwrap();
                let o = bisect(&p, &mossy, r);
                assert!((s.o - o).abs() < 1e-10, "{mode:?} r={r}: {} vs {o}", s.o);
                let y_oracle: f64 = p.granule_outputs(&mossy, o).sum();
                assert!((s.y.sum() - y_oracle).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn stronger_golgi_suppresses_activity() {
        let mossy = drive(&[0.9, 0.5, 0.45, 0.7, 1.3, 0.35, 0.6, 0.55]);
        let mut p = params(GolgiMode::Threshold, mossy.cells());
        p.k_th = 1.0;
        let mut last = usize::MAX;
        for theta in [0.0, 0.1, 0.2, 0.4, 0.8, 1.6] {
            p.theta = theta;
            p.h_go = 1.0 + theta;
            let m = golgi_output_threshold(&p, &mossy, 0.0).unwrap().y.active();
            assert!(m <= last);
            last = m;
        }
        assert_eq!(last, 0);
    }

    #[test]
    fn mode_is_checked() {
        let mossy = drive(&[0.5]);
        let p = params(GolgiMode::Threshold, mossy.cells());
        assert!(matches!(golgi_output_gain(&p, &mossy, 0.0), Err(EncodingError::Mode { .. })));
    }

    #[test]
    fn closed_form_matches_threshold_equilibrium() {
        let mossy = drive(&[0.9, 0.5, 0.45, 0.7, 1.3]);
        let p = params(GolgiMode::Threshold, mossy.cells());
        for r in [0.0, 0.3, 1.0] {
            let s = solve_golgi(&p, &mossy, r).unwrap();
            let cf = closed_loop_sum(&p, &mossy, r, s.y.indices());
            assert!((cf - s.y.sum()).abs() < 1e-10, "{cf} vs {}", s.y.sum());
        }
    }

    #[test]
    fn closed_form_limits() {
        let mossy = drive(&[0.9, 0.5, 0.45]);
        let mut p = params(GolgiMode::Threshold, mossy.cells());
        let active = [0, 1, 2];
        let with_r = closed_loop_sum(&p, &mossy, 1.0, &active);
        p.h_l = 0.0;
        let without = closed_loop_sum(&p, &mossy, 1.0, &active);
        let zero_r = closed_loop_sum(&p, &mossy, 0.0, &active);
        assert_eq!(without, zero_r);
        assert!(with_r < without);
        let mut last = f64::INFINITY;
        for k in [1.0, 10.0, 1e3, 1e6, 1e9] {
            p.k_g = k;
            let v = closed_loop_sum(&p, &mossy, 0.0, &active);
            assert!(v < last);
            last = v;
        }
        assert!(last.abs() < 1e-8);
    }

    #[test]
    fn line_form_reproduces_closed_form() {
        let mossy = drive(&[0.9, 0.5, 0.45, 0.7]);
        let p = params(GolgiMode::Threshold, mossy.cells());
        let active = [0, 2, 3];
        let line = line_params(&p, &active).unwrap();
        let total: f64 = active.iter().map(|&i| mossy.get(i)).sum();
        for r in [0.0, 0.7, 2.0] {
            let cf = closed_loop_sum(&p, &mossy, r, &active);
            assert!((cf - line.eval(total, r)).abs() < 1e-10);
        }
        // k3 = G_Gr·K_g·H_Go·H_L·m / (1 + G_Gr·K_g·H_U·H_Go·m)
        let expect_k3 = 1.5 * 0.3 * 1.1 * 0.4 * 3.0 / (1.0 + 1.5 * 0.3 * 0.2 * 1.1 * 3.0);
        assert!((line.k3 - expect_k3).abs() < 1e-14);
        assert!(line.k1 > 0.0 && line.k3 >= 0.0);
        let mut q = p.clone();
        q.k_g = 0.0;
        assert_eq!(line_params(&q, &active).unwrap().k3, 0.0);
        let mut q = p.clone();
        q.h_l = 0.0;
        assert_eq!(line_params(&q, &active).unwrap().k3, 0.0);
        assert!(line_params(&p, &[]).is_err());
    }

    #[test]
    fn validation() {
        let mossy = drive(&[0.5]);
        let mut p = params(GolgiMode::Threshold, mossy.cells());
        p.sparsity_target = 1.0;
        assert!(solve_golgi(&p, &mossy, 0.0).is_err());
        let mut p = params(GolgiMode::Threshold, 7);
        assert!(p.validate(3).is_err());
        p.p_syn = 3;
        p.h_u = -1.0;
        assert!(p.validate(3).is_err());
        let p = params(GolgiMode::Threshold, mossy.cells());
        assert!(solve_golgi(&p, &mossy, -1.0).is_err());
    }
}
