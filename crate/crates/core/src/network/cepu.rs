use serde::{Deserialize, Serialize};

use super::{EncoderId, NetworkError, TermKind};
use crate::encoding::SparseActivation;

/// One Purkinje cell: `P = (Σ_s B_s w_s) * modulation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cepu {
    pub kind: TermKind,
    pub encoder: EncoderId,
    pub weights: Vec<f64>,
}

impl Cepu {
    pub fn new(kind: TermKind, encoder: EncoderId, cells: usize) -> Self {
        Cepu { kind, encoder, weights: vec![0.0; cells] }
    }

    pub(crate) fn check(&self, encoded: &SparseActivation) -> Result<(), NetworkError> {
        if encoded.cells() != self.weights.len() {
            return Err(NetworkError::EncoderMismatch { expected: self.weights.len(), got: encoded.cells() });
        }
        Ok(())
    }

    /// The unmodulated weighted sum of the code.
    pub fn gain(&self, encoded: &SparseActivation) -> Result<f64, NetworkError> {
        self.check(encoded)?;
        Ok(encoded.dot(&self.weights))
    }

    /// Output for a code and its modulation value. Linear in `modulation`.
    pub fn eval(&self, encoded: &SparseActivation, modulation: f64) -> Result<f64, NetworkError> {
        Ok(self.gain(encoded)? * modulation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code() -> SparseActivation {
        SparseActivation::from_pairs(6, vec![(1, 0.25), (4, 0.75)])
    }

    #[test]
    fn eval_scales_with_modulation() {
        let mut pc = Cepu::new(TermKind::Inertial { joint: 0, accel: 0 }, EncoderId::Position, 6);
        pc.weights = vec![0.0, 2.0, 0.0, 0.0, 4.0, 0.0];
        let one = pc.eval(&code(), 1.0).unwrap();
        assert_eq!(one, 3.5);
        assert_eq!(pc.eval(&code(), -2.0).unwrap(), -7.0);
        assert_eq!(pc.eval(&code(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_foreign_encoder() {
        let pc = Cepu::new(TermKind::FricStat { joint: 0 }, EncoderId::Speed(0), 5);
        assert!(matches!(
            pc.eval(&code(), 1.0),
            Err(NetworkError::EncoderMismatch { expected: 5, got: 6 })
        ));
    }
}
