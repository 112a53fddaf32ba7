//! Exact Lagrange-Euler dynamics of planar serial revolute arms.
//!
//! Joint angles are relative: `q[k]` is measured from link `k - 1`, and
//! `q = 0` lays every link along the base `+x` axis. Everything here is a
//! pure function of its inputs.
//!
//! The inertia matrix is assembled analytically from per-link kinetic
//! energy, and the Coriolis/centripetal coefficients come from the
//! Christoffel symbols of that matrix, so `h_kkk = 0` holds by
//! construction.

mod config;
mod kinematics;
mod terms;

pub use config::{LinkConfig, RobotConfig};
pub use terms::{CoriolisTensor, TorqueBreakdown};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("robot config parse error: {0}")]
    Parse(String),
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("inertia matrix is not positive definite; the model is non-physical")]
    Singular,
}

impl DynamicsError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        DynamicsError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Physical parameters of one rigid link and the revolute joint driving it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    /// kg
    pub mass: f64,
    /// Pivot-to-pivot length, m.
    pub length: f64,
    /// Pivot to center of mass, m.
    pub com_distance: f64,
    /// Moment of inertia about the center of mass (out-of-plane axis), kg·m².
    pub inertia_com: f64,
    /// Viscous coefficient, N·m·s/rad.
    pub fric_dynamic: f64,
    /// Coulomb magnitude, N·m.
    pub fric_static: f64,
}

impl LinkParams {
    pub fn validate(&self, index: usize) -> Result<(), DynamicsError> {
        let field = |name: &str| format!("links[{index}].{name}");
        let all = [
            ("mass", self.mass),
            ("length", self.length),
            ("com_distance", self.com_distance),
            ("inertia_com", self.inertia_com),
            ("fric_dynamic", self.fric_dynamic),
            ("fric_static", self.fric_static),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return Err(DynamicsError::invalid(field(name), format!("{name} must be finite")));
            }
        }
        if self.mass <= 0.0 {
            return Err(DynamicsError::invalid(field("mass"), "mass must be positive"));
        }
        if self.length <= 0.0 {
            return Err(DynamicsError::invalid(field("length"), "length must be positive"));
        }
        if self.com_distance < 0.0 || self.com_distance > self.length {
            return Err(DynamicsError::invalid(
                field("com_distance"),
                "com_distance must lie in [0, length]",
            ));
        }
        for (name, v) in [
            ("inertia_com", self.inertia_com),
            ("fric_dynamic", self.fric_dynamic),
            ("fric_static", self.fric_static),
        ] {
            if v < 0.0 {
                return Err(DynamicsError::invalid(field(name), format!("{name} must be non-negative")));
            }
        }
        Ok(())
    }
}

/// A planar serial chain of revolute joints, links in base-to-tip order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    links: Vec<LinkParams>,
    gravity_mag: f64,
    base_tilt: f64,
}

impl RobotModel {
    /// Gravity points along `-y` of the base frame at `base_tilt = 0`;
    /// a positive tilt rotates the base counter-clockwise relative to it.
    pub fn new(links: Vec<LinkParams>, gravity_mag: f64, base_tilt: f64) -> Result<Self, DynamicsError> {
        if links.is_empty() {
            return Err(DynamicsError::invalid("links", "at least one link is required"));
        }
        for (i, l) in links.iter().enumerate() {
            l.validate(i)?;
        }
        if !gravity_mag.is_finite() || gravity_mag < 0.0 {
            return Err(DynamicsError::invalid("gravity_mag", "gravity_mag must be finite and non-negative"));
        }
        if !base_tilt.is_finite() {
            return Err(DynamicsError::invalid("base_tilt", "base_tilt must be finite"));
        }
        Ok(RobotModel {
            links,
            gravity_mag,
            base_tilt,
        })
    }

    /// Parses the TOML robot description.
    pub fn from_toml_str(text: &str) -> Result<Self, DynamicsError> {
        RobotConfig::from_toml_str(text)?.build()
    }

    pub fn dof(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self) -> &[LinkParams] {
        &self.links
    }

    pub fn gravity_mag(&self) -> f64 {
        self.gravity_mag
    }

    pub fn base_tilt(&self) -> f64 {
        self.base_tilt
    }

    /// Gravity acceleration components `(g_x, g_y)` in the base frame.
    pub fn gravity(&self) -> [f64; 2] {
        let (s, c) = self.base_tilt.sin_cos();
        [self.gravity_mag * s, -self.gravity_mag * c]
    }

    pub fn with_gravity(&self, gravity_mag: f64, base_tilt: f64) -> Result<Self, DynamicsError> {
        RobotModel::new(self.links.clone(), gravity_mag, base_tilt)
    }

    pub fn to_config(&self) -> RobotConfig {
        RobotConfig::from_model(self)
    }

    pub(crate) fn check_len(&self, what: &'static str, v: &[f64]) -> Result<(), DynamicsError> {
        if v.len() != self.dof() {
            return Err(DynamicsError::Dimension {
                what,
                got: v.len(),
                expected: self.dof(),
            });
        }
        Ok(())
    }
}

/// Joint positions, velocities and accelerations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub qdd: Vec<f64>,
}

impl JointState {
    pub fn new(q: Vec<f64>, qd: Vec<f64>, qdd: Vec<f64>) -> Result<Self, DynamicsError> {
        if qd.len() != q.len() {
            return Err(DynamicsError::Dimension {
                what: "qd",
                got: qd.len(),
                expected: q.len(),
            });
        }
        if qdd.len() != q.len() {
            return Err(DynamicsError::Dimension {
                what: "qdd",
                got: qdd.len(),
                expected: q.len(),
            });
        }
        Ok(JointState { q, qd, qdd })
    }

    pub fn zeros(n: usize) -> Self {
        JointState {
            q: vec![0.0; n],
            qd: vec![0.0; n],
            qdd: vec![0.0; n],
        }
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }
}

/// Planar force and moment applied at the end effector, in base-frame
/// coordinates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ExternalWrench {
    pub fx: f64,
    pub fy: f64,
    pub mz: f64,
}

impl ExternalWrench {
    pub const ZERO: ExternalWrench = ExternalWrench {
        fx: 0.0,
        fy: 0.0,
        mz: 0.0,
    };

    pub fn new(fx: f64, fy: f64, mz: f64) -> Self {
        ExternalWrench { fx, fy, mz }
    }

    pub fn components(&self) -> [f64; 3] {
        [self.fx, self.fy, self.mz]
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|v| v.is_finite())
    }
}

/// `sign` with `sign(0) = 0`, used by the Coulomb friction law.
pub fn coulomb_sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}
