use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::arch::ArchitectureParams;
use crate::dynamics::{RobotConfig, RobotModel};
use crate::encoding::{BasisLayout, Combine, FieldShape, GolgiMode, GolgiParams};
use crate::network::TrainingConfig;

/// Tiling parameters; ranges come from the dataset spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutSpec {
    pub tilings: usize,
    pub cells_per_dim: usize,
    pub field_shape: FieldShape,
    #[serde(default = "product")]
    pub combine: Combine,
    #[serde(default)]
    pub offsets: Vec<f64>,
}

fn product() -> Combine {
    Combine::Product
}

impl LayoutSpec {
    /// 8 shifted triangular tilings of 16 cells per joint.
    pub fn default_position() -> Self {
        LayoutSpec { tilings: 8, cells_per_dim: 16, field_shape: FieldShape::Triangular, combine: Combine::Product, offsets: vec![] }
    }

    /// 16 rectangular cells, one tiling, centered on zero speed.
    pub fn default_speed() -> Self {
        LayoutSpec {
            tilings: 1,
            cells_per_dim: 16,
            field_shape: FieldShape::Rectangular,
            combine: Combine::Product,
            offsets: vec![0.5],
        }
    }

    pub fn layout(&self, ranges: Vec<(f64, f64)>) -> Result<BasisLayout, ExperimentError> {
        let layout = BasisLayout {
            ranges,
            tilings: self.tilings,
            cells_per_dim: self.cells_per_dim,
            offsets: self.offsets.clone(),
            field_shape: self.field_shape,
            combine: self.combine,
        };
        Ok(layout.normalized()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GolgiSection {
    /// Tune the granule threshold to `params.sparsity_target` before use.
    #[serde(default = "yes")]
    pub calibrate: bool,
    #[serde(default = "thousand")]
    pub calibration_samples: usize,
    #[serde(default = "threshold_params")]
    pub params: GolgiParams,
}

impl Default for GolgiSection {
    fn default() -> Self {
        GolgiSection { calibrate: true, calibration_samples: thousand(), params: threshold_params() }
    }
}

fn threshold_params() -> GolgiParams {
    GolgiParams::new(GolgiMode::Threshold, 0)
}

fn yes() -> bool {
    true
}
fn thousand() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    #[serde(default = "ten_thousand")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Fraction of records held out, taken from the end of the file.
    #[serde(default = "fifth")]
    pub holdout: f64,
    /// Per-joint `[min, max]`; empty means `[-π/2, π/2]` for every joint.
    #[serde(default)]
    pub joint_ranges: Vec<(f64, f64)>,
    #[serde(default = "two")]
    pub v_max: f64,
    #[serde(default = "five")]
    pub a_max: f64,
    #[serde(default = "five")]
    pub force_max: f64,
    #[serde(default = "unit")]
    pub moment_max: f64,
}

fn ten_thousand() -> usize {
    10_000
}
fn fifth() -> f64 {
    0.2
}
fn two() -> f64 {
    2.0
}
fn five() -> f64 {
    5.0
}
fn unit() -> f64 {
    1.0
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            samples: ten_thousand(),
            seed: 0,
            holdout: fifth(),
            joint_ranges: vec![],
            v_max: two(),
            a_max: five(),
            force_max: five(),
            moment_max: unit(),
        }
    }
}

impl DatasetSpec {
    pub fn ranges(&self, dof: usize) -> Result<Vec<(f64, f64)>, ExperimentError> {
        if self.joint_ranges.is_empty() {
            return Ok(vec![(-FRAC_PI_2, FRAC_PI_2); dof]);
        }
        if self.joint_ranges.len() != dof {
            return Err(ExperimentError::Input(format!(
                "dataset.joint_ranges has {} entries for a {dof}-joint robot",
                self.joint_ranges.len()
            )));
        }
        Ok(self.joint_ranges.clone())
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Input(m));
        if !(0.0..1.0).contains(&self.holdout) {
            return bad(format!("dataset.holdout must lie in [0, 1), got {}", self.holdout));
        }
        for (name, v) in [
            ("v_max", self.v_max),
            ("a_max", self.a_max),
            ("force_max", self.force_max),
            ("moment_max", self.moment_max),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("dataset.{name} must be finite and non-negative, got {v}"));
            }
        }
        if self.v_max == 0.0 {
            return bad("dataset.v_max must be positive (it spans the speed code)".into());
        }
        for (k, &(lo, hi)) in self.joint_ranges.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(format!("dataset.joint_ranges[{k}] must be a nonempty finite interval"));
            }
        }
        Ok(())
    }
}

/// Top-level experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Robot file, relative to this config. Exclusive with `[robot]`.
    #[serde(default)]
    pub robot_path: Option<PathBuf>,
    #[serde(default)]
    pub robot: Option<RobotConfig>,
    #[serde(default = "LayoutSpec::default_position")]
    pub position_layout: LayoutSpec,
    #[serde(default = "LayoutSpec::default_speed")]
    pub speed_layout: LayoutSpec,
    /// Defaults to half the tiling count.
    #[serde(default)]
    pub basket_stride: Option<usize>,
    #[serde(default)]
    pub golgi: GolgiSection,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub arch: Option<ArchitectureParams>,
    #[serde(default = "out_dir")]
    pub output_dir: PathBuf,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str, base_dir: &Path) -> Result<Self, ExperimentError> {
        let mut cfg: ExperimentConfig = toml::from_str(s).map_err(|e| ExperimentError::Input(format!("config: {e}")))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let s = fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_str(&s, &base).map_err(|e| match e {
            ExperimentError::Input(m) => ExperimentError::Input(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn robot_model(&self) -> Result<RobotModel, ExperimentError> {
        match (&self.robot_path, &self.robot) {
            (Some(_), Some(_)) => Err(ExperimentError::Input("give either robot_path or [robot], not both".into())),
            (None, None) => Err(ExperimentError::Input("missing robot: set robot_path or a [robot] table".into())),
            (None, Some(r)) => Ok(r.build()?),
            (Some(p), None) => {
                let path = self.resolve(p);
                let s = fs::read_to_string(&path).map_err(|e| ExperimentError::io(&path, e))?;
                RobotModel::from_toml_str(&s).map_err(|e| ExperimentError::Input(format!("{}: {e}", path.display())))
            }
        }
    }

    /// Config of the default two-link experiment, with an inline robot.
    pub fn default_two_link() -> Self {
        let link = crate::dynamics::LinkConfig {
            mass: 1.0,
            length: 1.0,
            com_distance: 0.5,
            inertia_com: 1.0 / 12.0,
            fric_dynamic: 0.5,
            fric_static: 0.3,
        };
        ExperimentConfig {
            robot_path: None,
            robot: Some(RobotConfig { links: vec![link.clone(), link], gravity_mag: 9.81, base_tilt: 0.0 }),
            position_layout: LayoutSpec::default_position(),
            speed_layout: LayoutSpec::default_speed(),
            basket_stride: None,
            golgi: GolgiSection::default(),
            training: TrainingConfig::default(),
            dataset: DatasetSpec::default(),
            arch: None,
            output_dir: out_dir(),
            base_dir: PathBuf::new(),
        }
    }

    /// Override both the dataset and the training seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.dataset.seed = seed;
        self.training.seed = seed;
        self
    }
}
