#![allow(dead_code)]

use cerebellum::dynamics::{LinkParams, RobotModel};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_link(rng: &mut impl Rng) -> LinkParams {
    let length = rng.gen_range(0.3..1.5);
    LinkParams {
        mass: rng.gen_range(0.2..3.0),
        length,
        com_distance: rng.gen_range(0.0..=length),
        inertia_com: rng.gen_range(0.0..0.3),
        fric_dynamic: rng.gen_range(0.0..0.5),
        fric_static: rng.gen_range(0.0..0.3),
    }
}

pub fn random_model(rng: &mut impl Rng, n: usize) -> RobotModel {
    let links = (0..n).map(|_| random_link(rng)).collect();
    RobotModel::new(links, rng.gen_range(0.0..12.0), rng.gen_range(-3.0..3.0)).unwrap()
}

pub fn random_vec(rng: &mut impl Rng, n: usize, lim: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-lim..lim)).collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = a.iter().chain(b).fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// Closed-form two-link planar arm, derived by hand from the Lagrangian.
pub struct TwoLink {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub lc1: f64,
    pub lc2: f64,
    pub i1: f64,
    pub i2: f64,
    pub gx: f64,
    pub gy: f64,
}

impl TwoLink {
    pub fn from_model(m: &RobotModel) -> Self {
        let [a, b] = [m.links()[0], m.links()[1]];
        let [gx, gy] = m.gravity();
        TwoLink {
            m1: a.mass,
            m2: b.mass,
            l1: a.length,
            l2: b.length,
            lc1: a.com_distance,
            lc2: b.com_distance,
            i1: a.inertia_com,
            i2: b.inertia_com,
            gx,
            gy,
        }
    }

    pub fn inertia(&self, q: [f64; 2]) -> [[f64; 2]; 2] {
        let c2 = q[1].cos();
        let d11 = self.m1 * self.lc1 * self.lc1
            + self.i1
            + self.m2 * (self.l1 * self.l1 + self.lc2 * self.lc2 + 2.0 * self.l1 * self.lc2 * c2)
            + self.i2;
        let d12 = self.m2 * (self.lc2 * self.lc2 + self.l1 * self.lc2 * c2) + self.i2;
        let d22 = self.m2 * self.lc2 * self.lc2 + self.i2;
        [[d11, d12], [d12, d22]]
    }

    /// `c[k][i][j]` Christoffel coefficients.
    pub fn christoffel(&self, q: [f64; 2]) -> [[[f64; 2]; 2]; 2] {
        let h = -self.m2 * self.l1 * self.lc2 * q[1].sin();
        [[[0.0, h], [h, h]], [[-h, 0.0], [0.0, 0.0]]]
    }

    pub fn coriolis(&self, q: [f64; 2], qd: [f64; 2]) -> [f64; 2] {
        let h = -self.m2 * self.l1 * self.lc2 * q[1].sin();
        [h * (2.0 * qd[0] * qd[1] + qd[1] * qd[1]), -h * qd[0] * qd[0]]
    }

    pub fn gravity(&self, q: [f64; 2]) -> [f64; 2] {
        let (s1, c1) = q[0].sin_cos();
        let (s12, c12) = (q[0] + q[1]).sin_cos();
        // G = -Σ m g·∂p_c/∂q
        let a = self.m1 * self.lc1 + self.m2 * self.l1;
        let g2 = -self.m2 * self.lc2 * (-self.gx * s12 + self.gy * c12);
        let g1 = -a * (-self.gx * s1 + self.gy * c1) + g2;
        [g1, g2]
    }

    pub fn jacobian(&self, q: [f64; 2]) -> [[f64; 2]; 3] {
        let (s1, c1) = q[0].sin_cos();
        let (s12, c12) = (q[0] + q[1]).sin_cos();
        [
            [-self.l1 * s1 - self.l2 * s12, -self.l2 * s12],
            [self.l1 * c1 + self.l2 * c12, self.l2 * c12],
            [1.0, 1.0],
        ]
    }
}

/// Kinetic energy from finite-differenced link poses, independent of any
/// Jacobian assembly.
pub fn kinetic_energy_fd(model: &RobotModel, q: &[f64], qd: &[f64]) -> f64 {
    let h = 1e-6;
    let plus: Vec<f64> = q.iter().zip(qd).map(|(a, b)| a + h * b).collect();
    let minus: Vec<f64> = q.iter().zip(qd).map(|(a, b)| a - h * b).collect();
    let pp = poses(model, &plus);
    let pm = poses(model, &minus);
    let mut t = 0.0;
    for (i, l) in model.links().iter().enumerate() {
        let vx = (pp[i].0 - pm[i].0) / (2.0 * h);
        let vy = (pp[i].1 - pm[i].1) / (2.0 * h);
        let w = (pp[i].2 - pm[i].2) / (2.0 * h);
        t += 0.5 * l.mass * (vx * vx + vy * vy) + 0.5 * l.inertia_com * w * w;
    }
    t
}

/// Center-of-mass position and absolute angle of each link.
pub fn poses(model: &RobotModel, q: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    let (mut x, mut y, mut th) = (0.0, 0.0, 0.0);
    for (l, &qk) in model.links().iter().zip(q) {
        th += qk;
        out.push((x + l.com_distance * th.cos(), y + l.com_distance * th.sin(), th));
        x += l.length * th.cos();
        y += l.length * th.sin();
    }
    out
}

pub fn tip(model: &RobotModel, q: &[f64]) -> (f64, f64, f64) {
    let (mut x, mut y, mut th) = (0.0, 0.0, 0.0);
    for (l, &qk) in model.links().iter().zip(q) {
        th += qk;
        x += l.length * th.cos();
        y += l.length * th.sin();
    }
    (x, y, th)
}

use cerebellum::dynamics::{ExternalWrench, JointState};
use cerebellum::encoding::{BasisLayout, Combine, FieldShape};
use cerebellum::network::{EncoderBank, Network, NetworkInput, Sample, Supervision, NLMS_EPSILON};

pub const V_MAX: f64 = 2.0;

/// Small encoders over `[-1.5, 1.5]` per joint.
pub fn small_bank(n: usize, shape: FieldShape) -> EncoderBank {
    let pos = BasisLayout::new(vec![(-1.5, 1.5); n], 4, 6, shape, Combine::Product).unwrap();
    let speed = BasisLayout::new(vec![(-V_MAX, V_MAX)], 1, 8, FieldShape::Rectangular, Combine::Product)
        .unwrap()
        .with_offsets(vec![0.5])
        .unwrap();
    let stride = EncoderBank::default_stride(&pos);
    EncoderBank::new(pos, speed, stride).unwrap()
}

/// Every trainable weight drawn from `[-1, 1]`.
pub fn randomize(net: &mut Network, rng: &mut impl Rng) {
    for mz in &mut net.microzones {
        for pc in mz.inertial.iter_mut().chain(&mut mz.coriolis).chain(&mut mz.gravity).chain(&mut mz.external) {
            pc.weights.iter_mut().for_each(|w| *w = rng.gen_range(-1.0..1.0));
        }
        mz.fric_dyn.w_sp = rng.gen_range(-1.0..1.0);
        mz.fric_stat.w_sc.iter_mut().for_each(|w| *w = rng.gen_range(-1.0..1.0));
    }
}

pub fn random_state(rng: &mut impl Rng, n: usize) -> (JointState, ExternalWrench) {
    let s = JointState::new(random_vec(rng, n, 1.5), random_vec(rng, n, V_MAX), random_vec(rng, n, 5.0)).unwrap();
    let w = ExternalWrench::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-1.0..1.0));
    (s, w)
}

pub fn random_sample(rng: &mut impl Rng, net: &Network, model: &RobotModel) -> Sample {
    let (s, w) = random_state(rng, model.dof());
    Sample::from_state(net, model, &s, &w).unwrap()
}

/// Unit-mass point pendulum at unit distance: `D = 1`.
pub fn point_pendulum(fric_dynamic: f64, fric_static: f64) -> RobotModel {
    let link = LinkParams { mass: 1.0, length: 1.0, com_distance: 1.0, inertia_com: 0.0, fric_dynamic, fric_static };
    RobotModel::new(vec![link], 9.81, 0.0).unwrap()
}

pub fn two_link() -> RobotModel {
    let link = LinkParams {
        mass: 1.0,
        length: 1.0,
        com_distance: 0.5,
        inertia_com: 1.0 / 12.0,
        fric_dynamic: 0.5,
        fric_static: 0.3,
    };
    RobotModel::new(vec![link.clone(), link], 9.81, 0.0).unwrap()
}

pub fn tilted_two_link() -> RobotModel {
    RobotModel::new(two_link().links().to_vec(), 9.81, 0.3).unwrap()
}

/// Random-weight network; `n = 2` uses the tilted arm so both gravity
/// channels are live.
pub fn random_net(seed: u64, n: usize, shape: FieldShape) -> (RobotModel, Network, ChaCha8Rng) {
    let mut r = rng(seed);
    let model = if n == 2 { tilted_two_link() } else { random_model(&mut r, n) };
    let mut net = Network::build(&model, small_bank(n, shape)).unwrap();
    randomize(&mut net, &mut r);
    (model, net, r)
}

/// Half the summed squared per-term error over all joints.
pub fn sq_error(net: &Network, s: &Sample) -> f64 {
    let pred = net.predict(&s.input).unwrap();
    let mut e = 0.0;
    for (t, p) in s.target.iter().zip(&pred) {
        let mut d: Vec<f64> = t.inertial.iter().zip(&p.inertial).map(|(a, b)| a - b).collect();
        d.push(t.coriolis - p.coriolis);
        d.extend((0..2).map(|a| t.gravity[a] - p.gravity[a]));
        d.extend((0..3).map(|c| t.external[c] - p.external[c]));
        d.push(t.fric_dyn - p.fric_dyn);
        d.push(t.fric_stat - p.fric_stat);
        e += 0.5 * d.iter().map(|x| x * x).sum::<f64>();
    }
    e
}

/// Weight classes reachable through the public network.
#[derive(Debug, Clone, Copy)]
pub enum Class {
    Inertial(usize),
    Coriolis(usize),
    Gravity(usize),
    External(usize),
    DynSp,
    StatSc,
}

pub fn weights_mut(net: &mut Network, k: usize, c: Class) -> &mut [f64] {
    let mz = &mut net.microzones[k];
    match c {
        Class::Inertial(m) => &mut mz.inertial[m].weights,
        Class::Coriolis(i) => &mut mz.coriolis[i].weights,
        Class::Gravity(a) => &mut mz.gravity[a].weights,
        Class::External(e) => &mut mz.external[e].weights,
        Class::DynSp => std::slice::from_mut(&mut mz.fric_dyn.w_sp),
        Class::StatSc => &mut mz.fric_stat.w_sc,
    }
}

/// Normalizer of the group holding `c`, recomputed from the input.
pub fn normalizer(net: &Network, input: &NetworkInput, k: usize, c: Class) -> f64 {
    let b2 = input.position.sum_sq();
    match c {
        Class::Inertial(m) => b2 * (input.qdd[m].powi(2) + NLMS_EPSILON),
        Class::Gravity(a) => b2 * (input.gravity[a].powi(2) + NLMS_EPSILON),
        Class::External(e) => b2 * (input.wrench[e].powi(2) + NLMS_EPSILON),
        Class::Coriolis(_) => {
            let recon: Vec<f64> =
                net.baskets.iter().map(|b| b.eval(&input.speed_modulated[b.speed]).unwrap()).collect();
            let c2: f64 = (0..input.qd.len())
                .map(|i| (input.qd[i] * net.microzones[k].basket_sum(i, &recon)).powi(2))
                .sum();
            b2 * (c2 + NLMS_EPSILON)
        }
        Class::DynSp => input.speed_modulated[k].dot(&net.microzones[k].fric_dyn.w_sc).powi(2) + NLMS_EPSILON,
        Class::StatSc => input.speed_codes[k].sum_sq() * (1.0 + NLMS_EPSILON),
    }
}

/// Largest relative gap between a delta-rule step and `-rate · ∂E/∂w / N`
/// over every active trainable weight, for random two-link networks.
pub fn gradient_mismatch(seeds: std::ops::Range<u64>) -> f64 {
    let classes = [
        Class::Inertial(0),
        Class::Inertial(1),
        Class::Coriolis(0),
        Class::Coriolis(1),
        Class::Gravity(0),
        Class::Gravity(1),
        Class::External(0),
        Class::External(2),
        Class::DynSp,
        Class::StatSc,
    ];
    let rate = 0.3;
    let mut worst = 0.0f64;
    for seed in seeds {
        let (model, net, mut g) = random_net(seed, 2, FieldShape::Triangular);
        let sample = random_sample(&mut g, &net, &model);
        let mut stepped = net.clone();
        stepped.train_step(&sample, rate, Supervision::PerTerm).unwrap();
        for k in 0..2 {
            for c in classes {
                let n = normalizer(&net, &sample.input, k, c);
                let len = weights_mut(&mut net.clone(), k, c).len();
                for s in 0..len {
                    let w0 = weights_mut(&mut net.clone(), k, c)[s];
                    let dw = weights_mut(&mut stepped, k, c)[s] - w0;
                    let h = 1e-3;
                    let mut plus = net.clone();
                    weights_mut(&mut plus, k, c)[s] = w0 + h;
                    let mut minus = net.clone();
                    weights_mut(&mut minus, k, c)[s] = w0 - h;
                    let grad = (sq_error(&plus, &sample) - sq_error(&minus, &sample)) / (2.0 * h);
                    let expected = -rate * grad / n;
                    if grad.abs() < 1e-6 {
                        // Inactive weight: the step must vanish too.
                        if dw.abs() > 1e-12 {
                            return f64::INFINITY;
                        }
                        continue;
                    }
                    worst = worst.max((dw - expected).abs() / expected.abs());
                }
            }
        }
    }
    worst
}

/// Largest deviation of successive error ratios from `1 - rate` when one
/// sample is presented over and over to binary-code units.
pub fn decay_mismatch() -> f64 {
    let model = two_link();
    let net0 = Network::build(&model, small_bank(2, FieldShape::Rectangular)).unwrap();
    let mut g = rng(11);
    let mut worst = 0.0f64;
    for rate in [0.1, 0.5, 1.3] {
        let mut net = net0.clone();
        let sample = random_sample(&mut g, &net, &model);
        let mut prev = net.train_step(&sample, rate, Supervision::PerTerm).unwrap()[0].errors.clone();
        for _ in 0..8 {
            let e = net.train_step(&sample, rate, Supervision::PerTerm).unwrap()[0].errors.clone();
            let mut ratios: Vec<f64> = e.inertial.iter().zip(&prev.inertial).map(|(a, b)| a / b).collect();
            ratios.push(e.fric_stat / prev.fric_stat);
            for q in ratios {
                worst = worst.max((q - (1.0 - rate)).abs());
            }
            prev = e;
        }
    }
    worst
}
