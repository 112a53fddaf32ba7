use std::fmt::Write as _;

use crate::network::{Family, FamilyMetrics, TrainingReport};

/// Band around the 1% sparsity target accepted by evaluation.
pub const SPARSITY_BAND: (f64, f64) = (0.005, 0.02);

/// `epoch,term_family,rms,max_abs_err`, one row per epoch and family.
pub fn training_csv(report: &TrainingReport) -> String {
    let mut out = String::from("epoch,term_family,rms,max_abs_err\n");
    for r in report.rows() {
        let _ = writeln!(out, "{},{},{},{}", r.epoch, r.term_family, r.rms, r.max_abs_err);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityStats {
    pub mean: f64,
    pub max: f64,
    pub target: f64,
    pub samples: usize,
}

impl SparsityStats {
    pub fn in_band(&self) -> bool {
        self.mean >= SPARSITY_BAND.0 && self.mean <= SPARSITY_BAND.1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub train: FamilyMetrics,
    pub holdout: FamilyMetrics,
    pub train_samples: usize,
    pub holdout_samples: usize,
    pub sparsity: SparsityStats,
}

impl EvalReport {
    pub fn rows(&self) -> Vec<(String, String, String)> {
        let mut rows = Vec::new();
        for (section, m, count) in [
            ("train", &self.train, self.train_samples),
            ("holdout", &self.holdout, self.holdout_samples),
        ] {
            rows.push((section.to_string(), "samples".to_string(), count.to_string()));
            for f in Family::ALL {
                let metric = m.get(f);
                let name = f.name();
                rows.push((section.into(), format!("{name}.rel_rms"), metric.rel_rms().to_string()));
                rows.push((section.into(), format!("{name}.rms"), metric.rms().to_string()));
                rows.push((section.into(), format!("{name}.max_abs_err"), metric.max_abs_err.to_string()));
            }
        }
        let s = &self.sparsity;
        for (name, v) in [
            ("mean_active_fraction", s.mean.to_string()),
            ("max_active_fraction", s.max.to_string()),
            ("target", s.target.to_string()),
            ("band_low", SPARSITY_BAND.0.to_string()),
            ("band_high", SPARSITY_BAND.1.to_string()),
            ("in_band", s.in_band().to_string()),
            ("samples", s.samples.to_string()),
        ] {
            rows.push(("sparsity".into(), name.into(), v));
        }
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,name,value\n");
        for (s, n, v) in self.rows() {
            let _ = writeln!(out, "{s},{n},{v}");
        }
        out
    }
}
