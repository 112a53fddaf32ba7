//! Cerebellar elementary processing units (CePUs) and their assembly into
//! per-joint microzones.
//!
//! Every term of the joint torque equation gets its own unit: a Purkinje
//! cell summing the shared position code against trainable weights and
//! scaled by one modulation channel (an acceleration, a gravity component,
//! a wrench component). Coriolis rows additionally multiply by basket-cell
//! reconstructions of joint speeds, and the two friction terms run through
//! stellate cells.

mod basket;
mod cepu;
mod microzone;
mod stellate;
mod store;
mod train;

pub use basket::BasketCell;
pub use cepu::Cepu;
pub use microzone::{EncoderBank, Microzone, Network, NetworkInput, TermOutputs};
pub use stellate::{StellateCell, StellateKind};
pub use store::{layout_hash, robot_hash, sha256_hex, WeightStore, STORE_FORMAT, STORE_VERSION};
pub use train::{
    evaluate, train, ClimbingFiberSignal, FamilyMetrics, Metric, ReportRow, Sample, Supervision, TrainingConfig,
    TrainingReport, NLMS_EPSILON,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::encoding::EncodingError;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("activation from an encoder with {got} cells fed to a unit with {expected} weights")]
    EncoderMismatch { expected: usize, got: usize },
    #[error("non-finite error on {term}")]
    NonFinite { term: String },
    #[error("training diverged at epoch {epoch}: total rms {rms:e} (previous {previous:e})")]
    Divergence { epoch: usize, rms: f64, previous: f64 },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("weight store: {0}")]
    Store(String),
    #[error("empty dataset")]
    EmptyDataset,
}

/// Which encoder a unit reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderId {
    /// Shared joint-position code.
    Position,
    /// Space-coded speed of one joint.
    Speed(usize),
}

/// The signed scalar that multiplies a unit's output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    Accel(usize),
    Speed(usize),
    Gravity(usize),
    Wrench(usize),
    None,
}

/// Term of joint `joint`'s torque that a unit approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TermKind {
    /// `d_km(q) q̈_m`.
    Inertial { joint: usize, accel: usize },
    /// Purkinje cell `speed` of joint `joint`'s Coriolis row.
    Coriolis { joint: usize, speed: usize },
    /// `G_k,axis(q) g_axis`.
    Gravity { joint: usize, axis: usize },
    /// `J_ck(q) w_c`.
    External { joint: usize, component: usize },
    FricDyn { joint: usize },
    FricStat { joint: usize },
}

impl TermKind {
    pub fn channel(&self) -> Channel {
        match *self {
            TermKind::Inertial { accel, .. } => Channel::Accel(accel),
            TermKind::Coriolis { speed, .. } => Channel::Speed(speed),
            TermKind::Gravity { axis, .. } => Channel::Gravity(axis),
            TermKind::External { component, .. } => Channel::Wrench(component),
            TermKind::FricDyn { joint } => Channel::Speed(joint),
            TermKind::FricStat { .. } => Channel::None,
        }
    }

    pub fn family(&self) -> Family {
        match self {
            TermKind::Inertial { .. } => Family::Inertial,
            TermKind::Coriolis { .. } => Family::Coriolis,
            TermKind::Gravity { .. } => Family::Gravity,
            TermKind::External { .. } => Family::External,
            TermKind::FricDyn { .. } => Family::FricDyn,
            TermKind::FricStat { .. } => Family::FricStat,
        }
    }

    pub fn joint(&self) -> usize {
        match *self {
            TermKind::Inertial { joint, .. }
            | TermKind::Coriolis { joint, .. }
            | TermKind::Gravity { joint, .. }
            | TermKind::External { joint, .. }
            | TermKind::FricDyn { joint }
            | TermKind::FricStat { joint } => joint,
        }
    }
}

/// Term families reported by training and evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Inertial,
    Coriolis,
    Gravity,
    External,
    FricDyn,
    FricStat,
    Total,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Inertial,
        Family::Coriolis,
        Family::Gravity,
        Family::External,
        Family::FricDyn,
        Family::FricStat,
        Family::Total,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Inertial => "inertial",
            Family::Coriolis => "coriolis",
            Family::Gravity => "gravity",
            Family::External => "external",
            Family::FricDyn => "fric_dyn",
            Family::FricStat => "fric_stat",
            Family::Total => "total",
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }
}

/// Unit counts of a built network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census {
    pub joints: usize,
    pub inertial: usize,
    pub coriolis_pcs: usize,
    /// PC/basket pairings left after masking each joint's own self term.
    pub coriolis_pathways: usize,
    pub gravity: usize,
    pub external: usize,
    pub baskets: usize,
    pub stellates: usize,
    pub trainable_weights: usize,
}

impl Census {
    /// Purkinje cells over all microzones.
    pub fn purkinje_cells(&self) -> usize {
        self.inertial + self.coriolis_pcs + self.gravity + self.external
    }
}
