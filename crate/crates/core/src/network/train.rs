use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::microzone::Group;
use super::{Family, Network, NetworkError, NetworkInput, TermOutputs};
use crate::dynamics::{ExternalWrench, JointState, RobotModel};

/// Regularizer in the normalized step, scaled by the code energy.
pub const NLMS_EPSILON: f64 = 1e-8;

/// Training aborts when the total RMS grows by this factor in one epoch.
const DIVERGENCE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Supervision {
    /// Each unit group gets the error of its own term.
    #[default]
    PerTerm,
    /// Every unit of a microzone gets the joint torque error.
    PerJoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    #[serde(default = "default_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub supervision: Supervision,
    /// Per-epoch multiplier on the learning rate.
    #[serde(default = "default_decay")]
    pub rate_decay: f64,
}

fn default_rate() -> f64 {
    0.5
}
fn default_epochs() -> usize {
    50
}
fn default_decay() -> f64 {
    1.0
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            learning_rate: default_rate(),
            epochs: default_epochs(),
            seed: 0,
            supervision: Supervision::PerTerm,
            rate_decay: default_decay(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), NetworkError> {
        if !(self.learning_rate > 0.0 && self.learning_rate < 2.0) {
            return Err(NetworkError::Config(format!(
                "learning_rate must lie in (0, 2), got {}",
                self.learning_rate
            )));
        }
        if !(self.rate_decay > 0.0 && self.rate_decay <= 1.0) {
            return Err(NetworkError::Config(format!("rate_decay must lie in (0, 1], got {}", self.rate_decay)));
        }
        Ok(())
    }
}

/// A prepared input with the analytic term rows it should produce.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: NetworkInput,
    pub target: Vec<TermOutputs>,
}

impl Sample {
    pub fn from_state(
        net: &Network,
        model: &RobotModel,
        state: &JointState,
        wrench: &ExternalWrench,
    ) -> Result<Self, NetworkError> {
        let input = net.prepare(state, model.gravity(), wrench)?;
        let b = model.term_breakdown(state, wrench)?;
        let target = (0..model.dof()).map(|k| TermOutputs::from_breakdown(&b, k)).collect();
        Ok(Sample { input, target })
    }
}

/// Teaching signal of one microzone: target minus prediction, per term,
/// taken before the update.
#[derive(Debug, Clone, PartialEq)]
pub struct ClimbingFiberSignal {
    pub joint: usize,
    pub errors: TermOutputs,
}

fn term_targets(t: &TermOutputs) -> Vec<f64> {
    let mut v = t.inertial.clone();
    v.push(t.coriolis);
    v.extend_from_slice(&t.gravity);
    v.extend_from_slice(&t.external);
    v.push(t.fric_dyn);
    v.push(t.fric_stat);
    v
}

fn errors_from(groups: &[Group<'_>], targets: &[f64], n: usize) -> TermOutputs {
    let e: Vec<f64> = groups.iter().zip(targets).map(|(g, t)| t - g.prediction).collect();
    TermOutputs {
        inertial: e[..n].to_vec(),
        coriolis: e[n],
        gravity: [e[n + 1], e[n + 2]],
        external: [e[n + 3], e[n + 4], e[n + 5]],
        fric_dyn: e[n + 6],
        fric_stat: e[n + 7],
    }
}

impl Network {
    /// One normalized LMS step on one sample.
    pub fn train_step(
        &mut self,
        sample: &Sample,
        rate: f64,
        supervision: Supervision,
    ) -> Result<Vec<ClimbingFiberSignal>, NetworkError> {
        let n = self.dof();
        if sample.target.len() != n {
            return Err(NetworkError::Config(format!("sample has {} target rows, network {n}", sample.target.len())));
        }
        let mut signals = Vec::with_capacity(n);
        for k in 0..n {
            let target = &sample.target[k];
            if !target.is_finite() {
                return Err(NetworkError::NonFinite { term: format!("target row of joint {k}") });
            }
            let groups = self.microzones[k].groups(&sample.input, &self.baskets)?;
            let targets = term_targets(target);
            let errors = errors_from(&groups, &targets, n);
            if !errors.is_finite() {
                return Err(NetworkError::NonFinite { term: format!("prediction of joint {k}") });
            }
            let mz = &mut self.microzones[k];
            match supervision {
                Supervision::PerTerm => {
                    for (g, t) in groups.iter().zip(&targets) {
                        let e = t - g.prediction;
                        let (x2, b2) = g.norms();
                        let norm = x2 + NLMS_EPSILON * b2;
                        if e != 0.0 && norm > 0.0 {
                            mz.apply(g, rate * e / norm);
                        }
                    }
                }
                Supervision::PerJoint => {
                    let e = errors.total();
                    let norm: f64 = groups
                        .iter()
                        .map(|g| {
                            let (x2, b2) = g.norms();
                            x2 + NLMS_EPSILON * b2
                        })
                        .sum();
                    if e != 0.0 && norm > 0.0 {
                        for g in &groups {
                            mz.apply(g, rate * e / norm);
                        }
                    }
                }
            }
            signals.push(ClimbingFiberSignal { joint: k, errors });
        }
        Ok(signals)
    }
}

/// Accumulated error statistics of one term family.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metric {
    pub err_ss: f64,
    pub target_ss: f64,
    pub count: usize,
    pub max_abs_err: f64,
}

impl Metric {
    fn add(&mut self, target: f64, predicted: f64) {
        let e = target - predicted;
        self.err_ss += e * e;
        self.target_ss += target * target;
        self.count += 1;
        self.max_abs_err = self.max_abs_err.max(e.abs());
    }

    pub fn rms(&self) -> f64 {
        (self.err_ss / self.count.max(1) as f64).sqrt()
    }

    pub fn target_rms(&self) -> f64 {
        (self.target_ss / self.count.max(1) as f64).sqrt()
    }

    /// RMS error over RMS target. Falls back to the absolute RMS when the
    /// family is identically zero.
    pub fn rel_rms(&self) -> f64 {
        if self.target_ss > 0.0 {
            (self.err_ss / self.target_ss).sqrt()
        } else {
            self.rms()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FamilyMetrics {
    pub families: [Metric; 7],
}

impl FamilyMetrics {
    pub fn get(&self, f: Family) -> &Metric {
        &self.families[f.index()]
    }

    pub fn add_row(&mut self, target: &TermOutputs, predicted: &TermOutputs) {
        let f = &mut self.families;
        for (t, p) in target.inertial.iter().zip(&predicted.inertial) {
            f[Family::Inertial.index()].add(*t, *p);
        }
        f[Family::Coriolis.index()].add(target.coriolis, predicted.coriolis);
        for a in 0..2 {
            f[Family::Gravity.index()].add(target.gravity[a], predicted.gravity[a]);
        }
        for c in 0..3 {
            f[Family::External.index()].add(target.external[c], predicted.external[c]);
        }
        f[Family::FricDyn.index()].add(target.fric_dyn, predicted.fric_dyn);
        f[Family::FricStat.index()].add(target.fric_stat, predicted.fric_stat);
        f[Family::Total.index()].add(target.total(), predicted.total());
    }
}

/// Error statistics of a network over a sample set.
pub fn evaluate(net: &Network, samples: &[Sample]) -> Result<FamilyMetrics, NetworkError> {
    let mut m = FamilyMetrics::default();
    for s in samples {
        for (t, p) in s.target.iter().zip(net.predict(&s.input)?) {
            m.add_row(t, &p);
        }
    }
    Ok(m)
}

/// One line of a training report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub epoch: usize,
    pub term_family: String,
    pub rms: f64,
    pub max_abs_err: f64,
}

/// Training-set metrics after every epoch; entry 0 is the untrained network.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingReport {
    pub epochs: Vec<FamilyMetrics>,
}

impl TrainingReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        let mut rows = Vec::with_capacity(self.epochs.len() * Family::ALL.len());
        for (epoch, m) in self.epochs.iter().enumerate() {
            for f in Family::ALL {
                let metric = m.get(f);
                rows.push(ReportRow {
                    epoch,
                    term_family: f.name().to_string(),
                    rms: metric.rms(),
                    max_abs_err: metric.max_abs_err,
                });
            }
        }
        rows
    }

    pub fn last(&self) -> Option<&FamilyMetrics> {
        self.epochs.last()
    }
}

/// Train for `cfg.epochs` shuffled passes.
pub fn train(net: &mut Network, samples: &[Sample], cfg: &TrainingConfig) -> Result<TrainingReport, NetworkError> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(NetworkError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut report = TrainingReport { epochs: vec![evaluate(net, samples)?] };
    let mut rate = cfg.learning_rate;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            net.train_step(&samples[i], rate, cfg.supervision)?;
        }
        let m = evaluate(net, samples)?;
        let rms = m.get(Family::Total).rms();
        let previous = report.epochs.last().map(|p| p.get(Family::Total).rms()).unwrap_or(0.0);
        if !rms.is_finite() || (previous > 0.0 && rms > DIVERGENCE_FACTOR * previous) {
            return Err(NetworkError::Divergence { epoch, rms, previous });
        }
        debug!("epoch {epoch}: total rms {rms:e}");
        report.epochs.push(m);
        rate *= cfg.rate_decay;
    }
    if let Some(m) = report.last() {
        info!(
            "trained {} epochs, total relative rms {:.4}",
            cfg.epochs,
            m.get(Family::Total).rel_rms()
        );
    }
    Ok(report)
}
