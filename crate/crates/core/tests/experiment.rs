mod common;

use std::path::Path;

use cerebellum::encoding::{GolgiMode, SparseActivation};
use cerebellum::experiment::{Dataset, ErrorClass, Experiment, ExperimentConfig, ExperimentError};
use cerebellum::network::{Family, WeightStore};

fn small_config() -> ExperimentConfig {
    let mut c = ExperimentConfig::default_two_link();
    c.dataset.samples = 400;
    c.training.epochs = 2;
    c
}

fn workspace_file(rel: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

#[test]
fn shipped_config_matches_the_built_in_default() {
    let loaded = ExperimentConfig::load(&workspace_file("configs/default.toml")).unwrap();
    let exp = Experiment::from_config(loaded).unwrap();
    let builtin = Experiment::from_config(ExperimentConfig::default_two_link()).unwrap();
    assert_eq!(exp.robot_hash, builtin.robot_hash);
    assert_eq!(exp.layout_hash, builtin.layout_hash);
    assert_eq!(exp.golgi, builtin.golgi);
    assert_eq!(exp.config.training, builtin.config.training);
    assert_eq!(exp.config.dataset, builtin.config.dataset);
}

#[test]
fn config_errors_are_input_errors() {
    let base = Path::new(".");
    for (text, needle) in [
        ("nonsense = 1", "unknown field"),
        ("robot_path = [", "line 1"),
    ] {
        let err = ExperimentConfig::from_toml_str(text, base).unwrap_err();
        assert_eq!(err.class(), ErrorClass::Input);
        assert!(err.to_string().contains(needle), "{err}");
    }
    let mut c = ExperimentConfig::default_two_link();
    c.robot_path = Some("robot.toml".into());
    assert!(Experiment::from_config(c).unwrap_err().to_string().contains("not both"));
    let mut c = ExperimentConfig::default_two_link();
    c.robot = None;
    c.robot_path = Some("does-not-exist.toml".into());
    assert_eq!(Experiment::from_config(c).unwrap_err().class(), ErrorClass::Input);
    let mut c = ExperimentConfig::default_two_link();
    c.dataset.joint_ranges = vec![(0.0, 1.0)];
    assert!(Experiment::from_config(c).is_err());
}

#[test]
fn datasets_are_deterministic_and_round_trip() {
    let exp = Experiment::from_config(small_config()).unwrap();
    let a = exp.generate().unwrap();
    let b = exp.generate().unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    let other = Experiment::from_config(small_config().with_seed(9)).unwrap().generate().unwrap();
    assert_ne!(a.to_csv(), other.to_csv());

    let back = Dataset::from_csv(&a.to_csv()).unwrap();
    assert_eq!(back, a);
    assert!(a.to_csv().lines().nth(6).unwrap().starts_with("q0,q1,qd0"));

    for r in &a.records {
        let fresh = exp.model.term_breakdown(&r.state, &r.wrench).unwrap();
        for (x, y) in fresh.total.iter().zip(&r.target.total) {
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }
    back.verify(&exp.model, &exp.robot_hash, &exp.layout_hash).unwrap();
}

#[test]
fn empty_dataset() {
    let mut c = small_config();
    c.dataset.samples = 0;
    let exp = Experiment::from_config(c).unwrap();
    let d = exp.generate().unwrap();
    assert!(d.records.is_empty());
    assert_eq!(Dataset::from_csv(&d.to_csv()).unwrap(), d);
}

#[test]
fn foreign_or_corrupted_datasets_are_refused() {
    let exp = Experiment::from_config(small_config()).unwrap();
    let d = exp.generate().unwrap();
    let err = d.verify(&exp.model, "0000", &exp.layout_hash).unwrap_err();
    assert_eq!(err.class(), ErrorClass::Consistency);
    let err = d.verify(&exp.model, &exp.robot_hash, "0000").unwrap_err();
    assert_eq!(err.class(), ErrorClass::Consistency);

    let mut bad = d.clone();
    bad.records[0].target.total[0] += 1e-6;
    bad.records[0].target.inertial[(0, 0)] += 1e-6;
    let err = bad.verify(&exp.model, &exp.robot_hash, &exp.layout_hash).unwrap_err();
    assert!(matches!(err, ExperimentError::Consistency(ref m) if m.contains("record 0")), "{err}");

    for text in ["", "# format=other\n", "# format=cerebellum-dataset\n# version=7\n"] {
        assert_eq!(Dataset::from_csv(text).unwrap_err().class(), ErrorClass::Input);
    }
    let csv = d.to_csv().replacen("q0,", "x0,", 1);
    assert!(Dataset::from_csv(&csv).is_err());
}

#[test]
fn training_and_evaluation_agree() {
    let exp = Experiment::from_config(small_config()).unwrap();
    let d = exp.generate().unwrap();
    let (store, report) = exp.train(&d).unwrap();
    assert_eq!(report.epochs.len(), 3);
    let eval = exp.evaluate(&store, &d).unwrap();
    let last = report.last().unwrap();
    for f in Family::ALL {
        assert!((eval.train.get(f).rms() - last.get(f).rms()).abs() <= 1e-9);
    }
    assert_eq!(eval.train_samples, 320);
    assert_eq!(eval.holdout_samples, 80);
    let csv = eval.to_csv();
    assert!(csv.starts_with("section,name,value\n"));
    assert!(csv.contains("holdout,total.rel_rms,"));
    assert!(csv.contains("sparsity,in_band,true"));
}

#[test]
fn zero_weights_evaluate_to_target_rms() {
    let exp = Experiment::from_config(small_config()).unwrap();
    let d = exp.generate().unwrap();
    let store = WeightStore::new(exp.build_network().unwrap(), &exp.model);
    let eval = exp.evaluate(&store, &d).unwrap();
    for f in Family::ALL {
        let m = eval.holdout.get(f);
        assert_eq!(m.rms(), m.target_rms());
    }
}

#[test]
fn weights_for_another_layout_are_refused() {
    let exp = Experiment::from_config(small_config()).unwrap();
    let d = exp.generate().unwrap();
    let mut c = small_config();
    c.position_layout.cells_per_dim = 12;
    let other = Experiment::from_config(c).unwrap();
    let store = WeightStore::new(other.build_network().unwrap(), &other.model);
    assert_eq!(exp.evaluate(&store, &d).unwrap_err().class(), ErrorClass::Consistency);
}

/// Scalar fixed point of the Golgi loop by bisection.
fn golgi_rate_by_bisection(exp: &Experiment, mossy: &SparseActivation, r_sum: f64) -> f64 {
    let p = &exp.golgi;
    assert_eq!(p.mode, GolgiMode::Threshold);
    let f = |o: f64| {
        let sum: f64 = mossy.iter().map(|(_, m)| ((m - p.sigma[0] - p.k_th * o) * p.g_gr).max(0.0)).sum();
        ((p.h_u * sum + p.h_l * r_sum + p.theta) * p.h_go).max(0.0) - o
    };
    let (mut lo, mut hi) = (0.0, 1e6);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn inspection_matches_the_fixed_point() {
    let exp = Experiment::from_config(small_config()).unwrap();
    let i = exp.inspect(&[0.2, -0.4], 0.7).unwrap();
    assert!(i.clamps.is_empty());
    let o = golgi_rate_by_bisection(&exp, &i.mossy, exp.golgi.r_sum(0.7));
    assert!((i.golgi.o - o).abs() <= 1e-9 * o.max(1.0));
    let line = i.line.unwrap();
    let m_total: f64 = i.golgi.y.indices().iter().map(|&c| i.mossy.get(c)).sum();
    assert!((line.eval(m_total, i.r_sum) - i.golgi.y.sum()).abs() < 1e-9);
    let text = i.to_text();
    assert!(text.starts_with("cell,tiling,basis,modulated,granule\n"));
    assert!(text.contains("golgi_rate,"));

    let zero = exp.inspect(&[0.2, -0.4], 0.0).unwrap();
    assert!(zero.modulated.values().iter().all(|&v| v == 0.0));

    let edge = exp.inspect(&[3.0, 0.0], 0.0).unwrap();
    assert_eq!(edge.clamps.len(), 1);
    assert!(edge.to_text().starts_with("warning: q[0] = 3 clamped to 1.5707963267948966"));
}
