use std::fs;
use std::path::Path;

use log::warn;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DatasetSpec, ExperimentError};
use crate::dynamics::{CoriolisTensor, ExternalWrench, JointState, RobotModel, TorqueBreakdown};

pub const DATASET_FORMAT: &str = "cerebellum-dataset";
pub const DATASET_VERSION: u32 = 1;

/// Records re-evaluated against the oracle when a dataset is loaded.
const SPOT_CHECKS: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub state: JointState,
    pub wrench: ExternalWrench,
    pub target: TorqueBreakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub seed: u64,
    pub dof: usize,
    pub robot_hash: String,
    pub layout_hash: String,
    pub records: Vec<Record>,
}

impl Dataset {
    /// Uniform samples over the spec's ranges, targets from the oracle.
    pub fn generate(
        model: &RobotModel,
        spec: &DatasetSpec,
        robot_hash: String,
        layout_hash: String,
    ) -> Result<Self, ExperimentError> {
        spec.validate()?;
        let n = model.dof();
        let ranges = spec.ranges(n)?;
        if spec.samples == 0 {
            warn!("dataset has zero samples");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let sym = |rng: &mut ChaCha8Rng, a: f64| if a > 0.0 { rng.gen_range(-a..=a) } else { 0.0 };
        let mut records = Vec::with_capacity(spec.samples);
        for _ in 0..spec.samples {
            let q: Vec<f64> = ranges.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect();
            let qd = (0..n).map(|_| sym(&mut rng, spec.v_max)).collect();
            let qdd = (0..n).map(|_| sym(&mut rng, spec.a_max)).collect();
            let fx = sym(&mut rng, spec.force_max);
            let fy = sym(&mut rng, spec.force_max);
            let mz = sym(&mut rng, spec.moment_max);
            let state = JointState::new(q, qd, qdd)?;
            let wrench = ExternalWrench::new(fx, fy, mz);
            let target = model.term_breakdown(&state, &wrench)?;
            records.push(Record { state, wrench, target });
        }
        Ok(Dataset { seed: spec.seed, dof: n, robot_hash, layout_hash, records })
    }

    /// Training and held-out parts; the held-out part is the tail.
    pub fn split(&self, holdout: f64) -> (&[Record], &[Record]) {
        let n_train = ((self.records.len() as f64) * (1.0 - holdout)).round() as usize;
        self.records.split_at(n_train.min(self.records.len()))
    }

    fn header(n: usize) -> Vec<String> {
        let mut h = Vec::new();
        for name in ["q", "qd", "qdd"] {
            h.extend((0..n).map(|k| format!("{name}{k}")));
        }
        h.extend(["fx", "fy", "mz"].map(String::from));
        for k in 0..n {
            h.extend((0..n).map(|m| format!("inertial_{k}_{m}")));
        }
        for k in 0..n {
            for i in 0..n {
                h.extend((0..n).map(|j| format!("coriolis_{k}_{i}_{j}")));
            }
        }
        for k in 0..n {
            h.extend((0..2).map(|a| format!("gravity_{k}_{a}")));
        }
        for k in 0..n {
            h.extend((0..3).map(|c| format!("external_{k}_{c}")));
        }
        h.extend((0..n).map(|k| format!("fric_dyn_{k}")));
        h.extend((0..n).map(|k| format!("fric_stat_{k}")));
        h.extend((0..n).map(|k| format!("tau_{k}")));
        h
    }

    fn row(r: &Record) -> Vec<f64> {
        let n = r.state.dof();
        let t = &r.target;
        let mut v = Vec::with_capacity(Self::header(n).len());
        v.extend(&r.state.q);
        v.extend(&r.state.qd);
        v.extend(&r.state.qdd);
        v.extend(r.wrench.components());
        for k in 0..n {
            v.extend(t.inertial.row(k).iter());
        }
        v.extend(t.coriolis.as_slice());
        for k in 0..n {
            v.extend(t.gravity.row(k).iter());
        }
        for k in 0..n {
            v.extend(t.external.row(k).iter());
        }
        v.extend(&t.fric_dyn);
        v.extend(&t.fric_stat);
        v.extend(&t.total);
        v
    }

    fn parse_row(n: usize, v: &[f64]) -> Result<Record, ExperimentError> {
        let mut it = v.iter().copied();
        let mut take = |count: usize| -> Vec<f64> { it.by_ref().take(count).collect() };
        let q = take(n);
        let qd = take(n);
        let qdd = take(n);
        let w = take(3);
        let inertial = DMatrix::from_row_slice(n, n, &take(n * n));
        let mut coriolis = CoriolisTensor::zeros(n);
        let c = take(n * n * n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    coriolis.set(k, i, j, c[(k * n + i) * n + j]);
                }
            }
        }
        let gravity = DMatrix::from_row_slice(n, 2, &take(2 * n));
        let external = DMatrix::from_row_slice(n, 3, &take(3 * n));
        let target = TorqueBreakdown {
            inertial,
            coriolis,
            gravity,
            fric_dyn: take(n),
            fric_stat: take(n),
            external,
            total: take(n),
        };
        Ok(Record {
            state: JointState::new(q, qd, qdd)?,
            wrench: ExternalWrench::new(w[0], w[1], w[2]),
            target,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# format={DATASET_FORMAT}\n# version={DATASET_VERSION}\n# seed={}\n# dof={}\n# robot_hash={}\n# layout_hash={}\n",
            self.seed, self.dof, self.robot_hash, self.layout_hash
        );
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::header(self.dof)).expect("in-memory write");
        for r in &self.records {
            w.write_record(Self::row(r).iter().map(|x| x.to_string())).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv"));
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, ExperimentError> {
        let bad = |m: String| ExperimentError::Input(format!("dataset: {m}"));
        let meta = |key: &str| -> Result<String, ExperimentError> {
            text.lines()
                .take_while(|l| l.starts_with('#'))
                .filter_map(|l| l.trim_start_matches('#').trim().split_once('='))
                .find(|(k, _)| *k == key)
                .map(|(_, v)| v.to_string())
                .ok_or_else(|| bad(format!("missing '# {key}=' line")))
        };
        if meta("format")? != DATASET_FORMAT {
            return Err(bad("not a dataset file".into()));
        }
        let version: u32 = meta("version")?.parse().map_err(|_| bad("bad version".into()))?;
        if version != DATASET_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let seed = meta("seed")?.parse().map_err(|_| bad("bad seed".into()))?;
        let dof: usize = meta("dof")?.parse().map_err(|_| bad("bad dof".into()))?;
        if dof == 0 {
            return Err(bad("dof must be positive".into()));
        }
        let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let header: Vec<String> = rd.headers().map_err(|e| bad(e.to_string()))?.iter().map(String::from).collect();
        if header != Self::header(dof) {
            return Err(bad(format!("header does not match a {dof}-joint dataset")));
        }
        let mut records = Vec::new();
        for (i, row) in rd.records().enumerate() {
            let row = row.map_err(|e| bad(e.to_string()))?;
            let values = row
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| bad(format!("record {}: {e}", i + 1)))?;
            records.push(Self::parse_row(dof, &values)?);
        }
        Ok(Dataset { seed, dof, robot_hash: meta("robot_hash")?, layout_hash: meta("layout_hash")?, records })
    }

    pub fn save(&self, path: &Path) -> Result<(), ExperimentError> {
        fs::write(path, self.to_csv()).map_err(|e| ExperimentError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let s = fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        Self::from_csv(&s)
    }

    /// Reject a dataset made for another robot or layout, and re-evaluate a
    /// spread of records against the oracle.
    pub fn verify(&self, model: &RobotModel, robot_hash: &str, layout_hash: &str) -> Result<(), ExperimentError> {
        if self.robot_hash != robot_hash {
            return Err(ExperimentError::Consistency(format!(
                "dataset robot hash {} does not match config {robot_hash}",
                self.robot_hash
            )));
        }
        if self.layout_hash != layout_hash {
            return Err(ExperimentError::Consistency(format!(
                "dataset layout hash {} does not match config {layout_hash}",
                self.layout_hash
            )));
        }
        if self.records.is_empty() {
            return Ok(());
        }
        let step = (self.records.len() / SPOT_CHECKS).max(1);
        for (i, r) in self.records.iter().enumerate().step_by(step) {
            let fresh = model.term_breakdown(&r.state, &r.wrench)?;
            let stored = Self::row(r);
            let again = Self::row(&Record { target: fresh, ..r.clone() });
            let off = stored
                .iter()
                .zip(&again)
                .map(|(a, b)| match (a.is_finite(), b.is_finite()) {
                    (true, true) => (a - b).abs() / b.abs().max(1.0),
                    _ if a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()) => 0.0,
                    _ => f64::INFINITY,
                })
                .fold(0.0, f64::max);
            if !(off <= 1e-12) {
                return Err(ExperimentError::Consistency(format!(
                    "record {i} does not regenerate from the oracle (relative error {off:e})"
                )));
            }
        }
        Ok(())
    }
}
