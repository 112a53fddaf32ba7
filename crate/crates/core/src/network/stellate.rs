use serde::{Deserialize, Serialize};

use super::NetworkError;
use crate::encoding::{Modulated, SparseActivation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StellateKind {
    /// Reads the speed-modulated position code through fixed `w_sc`,
    /// learns the scalar `w_sp`. Approximates `μ_d q̇`.
    Dynamic,
    /// Reads the speed code through trainable `w_sc`, `w_sp` fixed at 1.
    /// Approximates `μ_s sign(q̇)`.
    Static,
}

/// Inhibitory interneuron feeding one friction term straight into the PC
/// output of its microzone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StellateCell {
    pub kind: StellateKind,
    pub joint: usize,
    pub w_sc: Vec<f64>,
    pub w_sp: f64,
}

impl StellateCell {
    pub fn dynamic(joint: usize, w_sc: Vec<f64>) -> Self {
        StellateCell { kind: StellateKind::Dynamic, joint, w_sc, w_sp: 0.0 }
    }

    pub fn stat(joint: usize, cells: usize) -> Self {
        StellateCell { kind: StellateKind::Static, joint, w_sc: vec![0.0; cells], w_sp: 1.0 }
    }

    fn check(&self, cells: usize) -> Result<(), NetworkError> {
        if cells != self.w_sc.len() {
            return Err(NetworkError::EncoderMismatch { expected: self.w_sc.len(), got: cells });
        }
        Ok(())
    }

    /// Dynamic stellate: `(Σ_s B_s q̇_k w_sc,s) w_sp`.
    pub fn eval_dynamic(&self, modulated: &Modulated) -> Result<f64, NetworkError> {
        self.check(modulated.cells())?;
        Ok(modulated.dot(&self.w_sc) * self.w_sp)
    }

    /// Static stellate: `(Σ_s S_s(q̇_k) w_sc,s) w_sp`.
    pub fn eval_static(&self, speed_code: &SparseActivation) -> Result<f64, NetworkError> {
        self.check(speed_code.cells())?;
        Ok(speed_code.dot(&self.w_sc) * self.w_sp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::modulate;

    #[test]
    fn dynamic_is_linear_in_speed() {
        let code = SparseActivation::from_pairs(4, vec![(0, 0.5), (2, 0.5)]);
        let mut sc = StellateCell::dynamic(0, vec![1.0, 0.0, 1.0, 0.0]);
        sc.w_sp = 0.3;
        let a = sc.eval_dynamic(&modulate(&code, 2.0)).unwrap();
        let b = sc.eval_dynamic(&modulate(&code, -4.0)).unwrap();
        assert!((a - 0.6).abs() < 1e-15);
        assert!((b + 1.2).abs() < 1e-15);
    }

    #[test]
    fn static_reads_its_code() {
        let mut sc = StellateCell::stat(1, 3);
        sc.w_sc = vec![-0.2, 0.0, 0.2];
        let code = SparseActivation::from_pairs(3, vec![(2, 1.0)]);
        assert_eq!(sc.eval_static(&code).unwrap(), 0.2);
        assert!(sc.eval_static(&SparseActivation::empty(4)).is_err());
    }
}
