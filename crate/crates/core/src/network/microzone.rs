use serde::{Deserialize, Serialize};

use super::{BasketCell, Census, Cepu, EncoderId, NetworkError, StellateCell, TermKind};
use crate::dynamics::{ExternalWrench, JointState, RobotModel, TorqueBreakdown};
use crate::encoding::{modulate, BasisLayout, Modulated, SparseActivation};

/// The two encoders every network reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderBank {
    /// Joint-space position code, one dimension per joint.
    pub position: BasisLayout,
    /// 1-D speed code shared by every joint's static-friction stellate.
    pub speed: BasisLayout,
    /// Basket sampling stride over the position code.
    pub basket_stride: usize,
}

impl EncoderBank {
    pub fn new(position: BasisLayout, speed: BasisLayout, basket_stride: usize) -> Result<Self, NetworkError> {
        let position = position.normalized()?;
        let speed = speed.normalized()?;
        if speed.dims() != 1 {
            return Err(NetworkError::Config(format!("speed layout must be 1-D, got {} dims", speed.dims())));
        }
        if basket_stride == 0 {
            return Err(NetworkError::Config("basket stride must be positive".into()));
        }
        Ok(EncoderBank { position, speed, basket_stride })
    }

    /// Half the tiling count, which samples whole tilings.
    pub fn default_stride(position: &BasisLayout) -> usize {
        (position.tilings / 2).max(1)
    }

    pub fn canonical_json(&self) -> String {
        format!(
            "{{\"basket_stride\":{},\"position\":{},\"speed\":{}}}",
            self.basket_stride,
            self.position.canonical_json(),
            self.speed.canonical_json()
        )
    }
}

/// Everything the units of a network see for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkInput {
    pub position: SparseActivation,
    /// `modulate(position, q̇_j)` for every joint.
    pub speed_modulated: Vec<Modulated>,
    /// Speed code of every joint.
    pub speed_codes: Vec<SparseActivation>,
    pub qd: Vec<f64>,
    pub qdd: Vec<f64>,
    pub gravity: [f64; 2],
    pub wrench: [f64; 3],
}

/// Predicted (or target) term row of one joint.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TermOutputs {
    pub inertial: Vec<f64>,
    pub coriolis: f64,
    pub gravity: [f64; 2],
    pub external: [f64; 3],
    pub fric_dyn: f64,
    pub fric_stat: f64,
}

impl TermOutputs {
    pub fn total(&self) -> f64 {
        self.inertial.iter().sum::<f64>()
            + self.coriolis
            + self.gravity.iter().sum::<f64>()
            + self.external.iter().sum::<f64>()
            + self.fric_dyn
            + self.fric_stat
    }

    /// Row `k` of an analytic breakdown, in network layout.
    pub fn from_breakdown(b: &TorqueBreakdown, k: usize) -> Self {
        TermOutputs {
            inertial: b.inertial.row(k).iter().copied().collect(),
            coriolis: b.coriolis.row_sum(k),
            gravity: [b.gravity[(k, 0)], b.gravity[(k, 1)]],
            external: [b.external[(k, 0)], b.external[(k, 1)], b.external[(k, 2)]],
            fric_dyn: b.fric_dyn[k],
            fric_stat: b.fric_stat[k],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.inertial.iter().all(|v| v.is_finite())
            && self.coriolis.is_finite()
            && self.gravity.iter().all(|v| v.is_finite())
            && self.external.iter().all(|v| v.is_finite())
            && self.fric_dyn.is_finite()
            && self.fric_stat.is_finite()
    }
}

/// All units that produce one joint's torque.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Microzone {
    pub joint: usize,
    pub inertial: Vec<Cepu>,
    /// One PC per joint speed; PC `i` is modulated by `q̇_i` and by the
    /// basket sum over all speeds, minus the joint's own basket on its own PC.
    pub coriolis: Vec<Cepu>,
    pub gravity: Vec<Cepu>,
    pub external: Vec<Cepu>,
    pub fric_dyn: StellateCell,
    pub fric_stat: StellateCell,
}

/// Weight slot addressed by a training update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Slot {
    Inertial(usize),
    Coriolis(usize),
    Gravity(usize),
    External(usize),
    DynSp,
    StatSc,
}

/// Code a group of features is built on.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Basis<'a> {
    Code(&'a SparseActivation),
    Scalar,
}

/// A linear readout `Σ_u c_u Σ_s B_s w_u,s` with one supervised output.
/// Features are `x_u,s = c_u B_s`.
pub(crate) struct Group<'a> {
    pub prediction: f64,
    pub basis: Basis<'a>,
    pub units: Vec<(Slot, f64)>,
}

impl Group<'_> {
    /// `(Σ x², Σ B²)`.
    pub fn norms(&self) -> (f64, f64) {
        let c2: f64 = self.units.iter().map(|(_, c)| c * c).sum();
        let b2 = match self.basis {
            Basis::Code(code) => code.sum_sq(),
            Basis::Scalar => 1.0,
        };
        (c2 * b2, b2)
    }
}

impl Microzone {
    fn new(joint: usize, n: usize, bank: &EncoderBank, dyn_w_sc: Vec<f64>) -> Self {
        let p = bank.position.cell_count();
        let pos = |kind| Cepu::new(kind, EncoderId::Position, p);
        Microzone {
            joint,
            inertial: (0..n).map(|m| pos(TermKind::Inertial { joint, accel: m })).collect(),
            coriolis: (0..n).map(|i| pos(TermKind::Coriolis { joint, speed: i })).collect(),
            gravity: (0..2).map(|a| pos(TermKind::Gravity { joint, axis: a })).collect(),
            external: (0..3).map(|c| pos(TermKind::External { joint, component: c })).collect(),
            fric_dyn: StellateCell::dynamic(joint, dyn_w_sc),
            fric_stat: StellateCell::stat(joint, bank.speed.cell_count()),
        }
    }

    pub fn dof(&self) -> usize {
        self.inertial.len()
    }

    fn check(&self, input: &NetworkInput, baskets: &[BasketCell]) -> Result<(), NetworkError> {
        let n = self.dof();
        let dims_ok = input.qd.len() == n
            && input.qdd.len() == n
            && input.speed_modulated.len() == n
            && input.speed_codes.len() == n
            && baskets.len() == n;
        if !dims_ok {
            return Err(NetworkError::Config(format!("input does not match a {n}-joint microzone")));
        }
        self.inertial[0].check(&input.position)?;
        if input.speed_codes[self.joint].cells() != self.fric_stat.w_sc.len() {
            return Err(NetworkError::EncoderMismatch {
                expected: self.fric_stat.w_sc.len(),
                got: input.speed_codes[self.joint].cells(),
            });
        }
        Ok(())
    }

    /// Basket sum seen by Coriolis PC `i`: all reconstructed speeds, with
    /// the joint's own basket masked on its own PC.
    pub fn basket_sum(&self, i: usize, recon: &[f64]) -> f64 {
        recon
            .iter()
            .enumerate()
            .filter(|&(j, _)| !(i == self.joint && j == self.joint))
            .map(|(_, r)| r)
            .sum()
    }

    /// Output of the Coriolis row.
    pub fn coriolis_row_eval(&self, input: &NetworkInput, baskets: &[BasketCell]) -> Result<f64, NetworkError> {
        self.check(input, baskets)?;
        let recon = reconstruct(input, baskets)?;
        let mut out = 0.0;
        for (i, pc) in self.coriolis.iter().enumerate() {
            out += pc.gain(&input.position)? * (input.qd[i] * self.basket_sum(i, &recon));
        }
        Ok(out)
    }

    pub fn eval(&self, input: &NetworkInput, baskets: &[BasketCell]) -> Result<TermOutputs, NetworkError> {
        self.check(input, baskets)?;
        let code = &input.position;
        let recon = reconstruct(input, baskets)?;
        let mut out = TermOutputs {
            inertial: Vec::with_capacity(self.dof()),
            ..Default::default()
        };
        for (m, pc) in self.inertial.iter().enumerate() {
            out.inertial.push(pc.eval(code, input.qdd[m])?);
        }
        for (i, pc) in self.coriolis.iter().enumerate() {
            out.coriolis += pc.gain(code)? * (input.qd[i] * self.basket_sum(i, &recon));
        }
        for (a, pc) in self.gravity.iter().enumerate() {
            out.gravity[a] = pc.eval(code, input.gravity[a])?;
        }
        for (c, pc) in self.external.iter().enumerate() {
            out.external[c] = pc.eval(code, input.wrench[c])?;
        }
        out.fric_dyn = self.fric_dyn.eval_dynamic(&input.speed_modulated[self.joint])?;
        out.fric_stat = self.fric_stat.eval_static(&input.speed_codes[self.joint])?;
        Ok(out)
    }

    /// Supervised groups in the order inertial, Coriolis, gravity,
    /// external, dynamic friction, static friction.
    pub(crate) fn groups<'a>(
        &self,
        input: &'a NetworkInput,
        baskets: &[BasketCell],
    ) -> Result<Vec<Group<'a>>, NetworkError> {
        self.check(input, baskets)?;
        let code = &input.position;
        let recon = reconstruct(input, baskets)?;
        let mut groups = Vec::with_capacity(self.dof() + 7);
        for (m, pc) in self.inertial.iter().enumerate() {
            let c = input.qdd[m];
            groups.push(Group { prediction: pc.gain(code)? * c, basis: Basis::Code(code), units: vec![(Slot::Inertial(m), c)] });
        }
        let mut row = Group { prediction: 0.0, basis: Basis::Code(code), units: Vec::with_capacity(self.dof()) };
        for (i, pc) in self.coriolis.iter().enumerate() {
            let c = input.qd[i] * self.basket_sum(i, &recon);
            row.prediction += pc.gain(code)? * c;
            row.units.push((Slot::Coriolis(i), c));
        }
        groups.push(row);
        for (a, pc) in self.gravity.iter().enumerate() {
            let c = input.gravity[a];
            groups.push(Group { prediction: pc.gain(code)? * c, basis: Basis::Code(code), units: vec![(Slot::Gravity(a), c)] });
        }
        for (k, pc) in self.external.iter().enumerate() {
            let c = input.wrench[k];
            groups.push(Group { prediction: pc.gain(code)? * c, basis: Basis::Code(code), units: vec![(Slot::External(k), c)] });
        }
        let r = input.speed_modulated[self.joint].dot(&self.fric_dyn.w_sc);
        groups.push(Group { prediction: r * self.fric_dyn.w_sp, basis: Basis::Scalar, units: vec![(Slot::DynSp, r)] });
        let sc = &input.speed_codes[self.joint];
        groups.push(Group {
            prediction: sc.dot(&self.fric_stat.w_sc) * self.fric_stat.w_sp,
            basis: Basis::Code(sc),
            units: vec![(Slot::StatSc, self.fric_stat.w_sp)],
        });
        Ok(groups)
    }

    /// Add `step · c_u · B_s` to every weight of a group.
    pub(crate) fn apply(&mut self, group: &Group<'_>, step: f64) {
        for &(slot, c) in &group.units {
            let g = step * c;
            if g == 0.0 {
                continue;
            }
            let w = match slot {
                Slot::Inertial(m) => &mut self.inertial[m].weights,
                Slot::Coriolis(i) => &mut self.coriolis[i].weights,
                Slot::Gravity(a) => &mut self.gravity[a].weights,
                Slot::External(k) => &mut self.external[k].weights,
                Slot::StatSc => &mut self.fric_stat.w_sc,
                Slot::DynSp => {
                    self.fric_dyn.w_sp += g;
                    continue;
                }
            };
            if let Basis::Code(code) = group.basis {
                for (s, b) in code.iter() {
                    w[s] += g * b;
                }
            }
        }
    }

    pub(crate) fn trainable_weights(&self) -> usize {
        let pcs: usize = self
            .inertial
            .iter()
            .chain(&self.coriolis)
            .chain(&self.gravity)
            .chain(&self.external)
            .map(|pc| pc.weights.len())
            .sum();
        pcs + 1 + self.fric_stat.w_sc.len()
    }
}

fn reconstruct(input: &NetworkInput, baskets: &[BasketCell]) -> Result<Vec<f64>, NetworkError> {
    baskets.iter().map(|bc| bc.eval(&input.speed_modulated[bc.speed])).collect()
}

/// A complete network: one microzone per joint and the shared baskets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub bank: EncoderBank,
    pub baskets: Vec<BasketCell>,
    pub microzones: Vec<Microzone>,
}

impl Network {
    /// Build an untrained network for `model`. Baskets are calibrated here;
    /// dynamic stellates reuse their joint's basket weights as fixed `w_sc`.
    pub fn build(model: &RobotModel, bank: EncoderBank) -> Result<Self, NetworkError> {
        let n = model.dof();
        if bank.position.dims() != n {
            return Err(NetworkError::Config(format!(
                "position layout has {} dims for a {n}-joint robot",
                bank.position.dims()
            )));
        }
        let template = BasketCell::calibrate(&bank.position, 0, bank.basket_stride)?;
        let baskets: Vec<_> = (0..n)
            .map(|j| BasketCell { speed: j, ..template.clone() })
            .collect();
        let microzones = (0..n)
            .map(|k| Microzone::new(k, n, &bank, template.weights.clone()))
            .collect();
        Ok(Network { bank, baskets, microzones })
    }

    pub fn dof(&self) -> usize {
        self.microzones.len()
    }

    pub fn census(&self) -> Census {
        let n = self.dof();
        Census {
            joints: n,
            inertial: n * n,
            coriolis_pcs: n * n,
            coriolis_pathways: n * (n * n - 1),
            gravity: 2 * n,
            external: 3 * n,
            baskets: self.baskets.len(),
            stellates: 2 * n,
            trainable_weights: self.microzones.iter().map(Microzone::trainable_weights).sum(),
        }
    }

    pub fn prepare(
        &self,
        state: &JointState,
        gravity: [f64; 2],
        wrench: &ExternalWrench,
    ) -> Result<NetworkInput, NetworkError> {
        let n = self.dof();
        if state.dof() != n {
            return Err(NetworkError::Config(format!("state has {} joints, network {n}", state.dof())));
        }
        let position = self.bank.position.encode(&state.q)?;
        let speed_modulated = state.qd.iter().map(|&v| modulate(&position, v)).collect();
        let speed_codes = state
            .qd
            .iter()
            .map(|&v| self.bank.speed.encode(&[v]))
            .collect::<Result<_, _>>()?;
        Ok(NetworkInput {
            position,
            speed_modulated,
            speed_codes,
            qd: state.qd.clone(),
            qdd: state.qdd.clone(),
            gravity,
            wrench: wrench.components(),
        })
    }

    /// Term rows of every joint.
    pub fn predict(&self, input: &NetworkInput) -> Result<Vec<TermOutputs>, NetworkError> {
        self.microzones.iter().map(|mz| mz.eval(input, &self.baskets)).collect()
    }

    /// Predicted joint torques.
    pub fn torques(&self, input: &NetworkInput) -> Result<Vec<f64>, NetworkError> {
        Ok(self.predict(input)?.iter().map(TermOutputs::total).collect())
    }
}
