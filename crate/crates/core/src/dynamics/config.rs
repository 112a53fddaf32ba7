use serde::{Deserialize, Serialize};

use super::{DynamicsError, LinkParams, RobotModel};

fn default_gravity() -> f64 {
    9.81
}

/// One `[[links]]` record of a robot file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub mass: f64,
    pub length: f64,
    pub com_distance: f64,
    pub inertia_com: f64,
    #[serde(default)]
    pub fric_dynamic: f64,
    #[serde(default)]
    pub fric_static: f64,
}

/// On-disk robot description.
///
/// ```toml
/// gravity_mag = 9.81
/// base_tilt = 0.0
///
/// [[links]]
/// mass = 1.0
/// length = 1.0
/// com_distance = 0.5
/// inertia_com = 0.0833
/// fric_dynamic = 0.1
/// fric_static = 0.05
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotConfig {
    #[serde(default = "default_gravity")]
    pub gravity_mag: f64,
    #[serde(default)]
    pub base_tilt: f64,
    pub links: Vec<LinkConfig>,
}

impl RobotConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, DynamicsError> {
        toml::from_str(text).map_err(|e| DynamicsError::Parse(e.to_string()))
    }

    pub fn build(&self) -> Result<RobotModel, DynamicsError> {
        let links = self
            .links
            .iter()
            .map(|l| LinkParams {
                mass: l.mass,
                length: l.length,
                com_distance: l.com_distance,
                inertia_com: l.inertia_com,
                fric_dynamic: l.fric_dynamic,
                fric_static: l.fric_static,
            })
            .collect();
        RobotModel::new(links, self.gravity_mag, self.base_tilt)
    }

    pub(super) fn from_model(model: &RobotModel) -> Self {
        RobotConfig {
            gravity_mag: model.gravity_mag,
            base_tilt: model.base_tilt,
            links: model
                .links
                .iter()
                .map(|l| LinkConfig {
                    mass: l.mass,
                    length: l.length,
                    com_distance: l.com_distance,
                    inertia_com: l.inertia_com,
                    fric_dynamic: l.fric_dynamic,
                    fric_static: l.fric_static,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_pendulum() {
        let m = RobotModel::from_toml_str(
            "[[links]]\nmass = 1.0\nlength = 1.0\ncom_distance = 1.0\ninertia_com = 0.0\n",
        )
        .unwrap();
        assert_eq!(m.dof(), 1);
        assert_eq!(m.gravity_mag(), 9.81);
        assert_eq!(m.links()[0].fric_static, 0.0);
    }

    #[test]
    fn negative_mass_is_reported() {
        let err = RobotModel::from_toml_str(
            "[[links]]\nmass = -1.0\nlength = 1.0\ncom_distance = 0.5\ninertia_com = 0.0\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("mass must be positive"), "{err}");
        assert!(err.to_string().contains("links[0].mass"), "{err}");
    }

    #[test]
    fn two_link_full_record() {
        let text = r#"
gravity_mag = 9.81
base_tilt = 0.1

[[links]]
mass = 1.0
length = 1.0
com_distance = 0.5
inertia_com = 0.0833
fric_dynamic = 0.1
fric_static = 0.05

[[links]]
mass = 0.8
length = 0.7
com_distance = 0.35
inertia_com = 0.03
fric_dynamic = 0.1
fric_static = 0.05
"#;
        let m = RobotModel::from_toml_str(text).unwrap();
        assert_eq!(m.dof(), 2);
        assert_eq!(m.links()[1].length, 0.7);
        assert_eq!(m.to_config().build().unwrap(), m);
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = RobotModel::from_toml_str("[[links]]\nmass = oops\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        let err = RobotModel::from_toml_str(
            "[[links]]\nmass = 1.0\nlength = 1.0\ncom_distance = 0.5\ninertia_com = 0.0\nspring = 3.0\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("spring"), "{err}");
    }
}
