use std::fmt::Write as _;
use std::path::Path;

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, EvalReport, ExperimentConfig, ExperimentError, Record, SparsityStats};
use crate::dynamics::RobotModel;
use crate::encoding::{
    calibrate_sparsity, line_params, mean_active_fraction, modulate, solve_golgi, Clamp, GolgiParams, GolgiState,
    LineParams, Modulated, SparseActivation,
};
use crate::network::{
    evaluate, layout_hash, robot_hash, train, EncoderBank, Network, NetworkError, Sample, TermOutputs,
    TrainingReport, WeightStore,
};

/// A config resolved into a robot, encoders and calibrated Golgi layer.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub model: RobotModel,
    pub bank: EncoderBank,
    pub golgi: GolgiParams,
    pub robot_hash: String,
    pub layout_hash: String,
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        Self::from_config(ExperimentConfig::load(path)?)
    }

    pub fn from_config(config: ExperimentConfig) -> Result<Self, ExperimentError> {
        config.dataset.validate()?;
        config.training.validate()?;
        let model = config.robot_model()?;
        let ranges = config.dataset.ranges(model.dof())?;
        let position = config.position_layout.layout(ranges)?;
        let v = config.dataset.v_max;
        let speed = config.speed_layout.layout(vec![(-v, v)])?;
        let stride = config.basket_stride.unwrap_or_else(|| EncoderBank::default_stride(&position));
        let bank = EncoderBank::new(position, speed, stride)?;

        let mut golgi = config.golgi.params.clone();
        if golgi.p_syn == 0 {
            golgi.p_syn = bank.position.cell_count();
        }
        golgi.validate(bank.position.cell_count())?;
        let mut exp = Experiment {
            robot_hash: robot_hash(&model),
            layout_hash: layout_hash(&bank),
            config,
            model,
            bank,
            golgi,
        };
        if exp.config.golgi.calibrate {
            let qs = exp.workspace_samples(exp.config.golgi.calibration_samples, 1);
            exp.golgi = calibrate_sparsity(&exp.bank.position, &exp.golgi, &qs)?;
            info!("granule threshold calibrated to {:.6}", exp.golgi.sigma[0]);
        }
        Ok(exp)
    }

    /// Uniform joint positions, seeded from the dataset seed.
    pub fn workspace_samples(&self, count: usize, stream: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.dataset.seed.wrapping_add(stream));
        let ranges = &self.bank.position.ranges;
        (0..count)
            .map(|_| ranges.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect())
            .collect()
    }

    pub fn generate(&self) -> Result<Dataset, ExperimentError> {
        Dataset::generate(&self.model, &self.config.dataset, self.robot_hash.clone(), self.layout_hash.clone())
    }

    pub fn build_network(&self) -> Result<Network, ExperimentError> {
        Ok(Network::build(&self.model, self.bank.clone())?)
    }

    pub fn samples(&self, net: &Network, records: &[Record]) -> Result<Vec<Sample>, ExperimentError> {
        let gravity = self.model.gravity();
        records
            .iter()
            .map(|r| {
                let input = net.prepare(&r.state, gravity, &r.wrench)?;
                let target = (0..self.model.dof()).map(|k| TermOutputs::from_breakdown(&r.target, k)).collect();
                Ok(Sample { input, target })
            })
            .collect::<Result<_, NetworkError>>()
            .map_err(Into::into)
    }

    /// Train on the leading part of `dataset`.
    pub fn train(&self, dataset: &Dataset) -> Result<(WeightStore, TrainingReport), ExperimentError> {
        dataset.verify(&self.model, &self.robot_hash, &self.layout_hash)?;
        let (train_part, _) = dataset.split(self.config.dataset.holdout);
        let mut net = self.build_network()?;
        let samples = self.samples(&net, train_part)?;
        let report = train(&mut net, &samples, &self.config.training)?;
        Ok((WeightStore::new(net, &self.model), report))
    }

    pub fn evaluate(&self, store: &WeightStore, dataset: &Dataset) -> Result<EvalReport, ExperimentError> {
        store.verify(&self.bank, &self.model)?;
        dataset.verify(&self.model, &self.robot_hash, &self.layout_hash)?;
        let net = &store.network;
        let (train_part, holdout) = dataset.split(self.config.dataset.holdout);
        let train_metrics = evaluate(net, &self.samples(net, train_part)?)?;
        let holdout_metrics = evaluate(net, &self.samples(net, holdout)?)?;
        let qs: Vec<Vec<f64>> = dataset.records.iter().take(1000).map(|r| r.state.q.clone()).collect();
        Ok(EvalReport {
            train: train_metrics,
            holdout: holdout_metrics,
            train_samples: train_part.len(),
            holdout_samples: holdout.len(),
            sparsity: self.sparsity(&qs)?,
        })
    }

    pub fn sparsity(&self, qs: &[Vec<f64>]) -> Result<SparsityStats, ExperimentError> {
        let (mean, max) = mean_active_fraction(&self.bank.position, &self.golgi, qs, 0.0)?;
        Ok(SparsityStats { mean, max, target: self.golgi.sparsity_target, samples: qs.len() })
    }

    /// Encoder and granule-layer state at position `q` with rate input `r`.
    pub fn inspect(&self, q: &[f64], r: f64) -> Result<EncodeInspection, ExperimentError> {
        let layout = &self.bank.position;
        let (_, clamps) = layout.clamp(q)?;
        let mossy = layout.encode(q)?;
        let r_sum = self.golgi.r_sum(r);
        let golgi = solve_golgi(&self.golgi, &mossy, r_sum)?;
        let line = if golgi.y.active() > 0 { Some(line_params(&self.golgi, golgi.y.indices())?) } else { None };
        Ok(EncodeInspection {
            modulated: modulate(&mossy, r),
            mossy,
            clamps,
            golgi,
            line,
            r,
            r_sum,
            tilings: layout.tilings,
        })
    }
}

#[derive(Debug, Clone)]
pub struct EncodeInspection {
    pub clamps: Vec<Clamp>,
    pub mossy: SparseActivation,
    pub modulated: Modulated,
    pub golgi: GolgiState,
    pub line: Option<LineParams>,
    pub r: f64,
    pub r_sum: f64,
    tilings: usize,
}

impl EncodeInspection {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.clamps {
            let _ = writeln!(out, "warning: q[{}] = {} clamped to {}", c.dim, c.value, c.clamped);
        }
        let _ = writeln!(out, "cell,tiling,basis,modulated,granule");
        for ((cell, b), (_, m)) in self.mossy.iter().zip(self.modulated.iter()) {
            let _ = writeln!(out, "{cell},{},{b},{m},{}", cell % self.tilings, self.golgi.y.get(cell));
        }
        let _ = writeln!(out, "active_mossy,{}", self.mossy.active());
        let _ = writeln!(out, "active_granule,{}", self.golgi.y.active());
        let _ = writeln!(out, "golgi_rate,{}", self.golgi.o);
        let _ = writeln!(out, "r,{}", self.r);
        let _ = writeln!(out, "r_sum,{}", self.r_sum);
        if let Some(l) = self.line {
            let _ = writeln!(out, "k1,{}\nk2,{}\nk3,{}", l.k1, l.k2, l.k3);
        }
        out
    }
}
