use nalgebra::{DMatrix, DVector};

use super::kinematics::{cross, dot, Arms};
use super::{coulomb_sign, DynamicsError, ExternalWrench, JointState, RobotModel};

/// Dense `n × n × n` array indexed `(k, i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoriolisTensor {
    n: usize,
    data: Vec<f64>,
}

impl CoriolisTensor {
    pub fn zeros(n: usize) -> Self {
        CoriolisTensor {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.data[(k * self.n + i) * self.n + j] = v;
    }

    /// Sum over `(i, j)` for fixed `k`.
    pub fn row_sum(&self, k: usize) -> f64 {
        let nn = self.n * self.n;
        self.data[k * nn..(k + 1) * nn].iter().sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Every separately approximable term of the joint torque equation.
///
/// Row `k` of each field belongs to joint `k`; `total[k]` is the sum of all
/// of them.
#[derive(Debug, Clone, PartialEq)]
pub struct TorqueBreakdown {
    /// `d_km(q) · q̈_m` at `(k, m)`.
    pub inertial: DMatrix<f64>,
    /// `h_kij(q) · q̇_i · q̇_j` at `(k, i, j)`.
    pub coriolis: CoriolisTensor,
    /// `G_k1(q) · g_x` and `G_k2(q) · g_y`.
    pub gravity: DMatrix<f64>,
    /// `F_kd · q̇_k`.
    pub fric_dyn: Vec<f64>,
    /// `F_ks · sign(q̇_k)`.
    pub fric_stat: Vec<f64>,
    /// `J_ck(q) · w_c` for `c` in `(fx, fy, mz)`.
    pub external: DMatrix<f64>,
    pub total: Vec<f64>,
}

impl TorqueBreakdown {
    pub fn dof(&self) -> usize {
        self.total.len()
    }

    /// Row sum of every term entry for joint `k`.
    pub fn row_total(&self, k: usize) -> f64 {
        self.inertial.row(k).sum()
            + self.coriolis.row_sum(k)
            + self.gravity.row(k).sum()
            + self.fric_dyn[k]
            + self.fric_stat[k]
            + self.external.row(k).sum()
    }
}

impl RobotModel {
    /// Joint-space inertia matrix `D(q)`.
    pub fn inertia_matrix(&self, q: &[f64]) -> Result<DMatrix<f64>, DynamicsError> {
        self.check_len("q", q)?;
        let arms = Arms::new(self, q);
        Ok(self.inertia_from_arms(&arms))
    }

    fn inertia_from_arms(&self, arms: &Arms) -> DMatrix<f64> {
        let n = self.dof();
        let links = self.links();
        let mut d = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                // Only links at or beyond both joints move with them.
                let mut acc = 0.0;
                for i in b..n {
                    let r = &arms.com[i];
                    acc += links[i].mass * dot(r[a], r[b]) + links[i].inertia_com;
                }
                d[(a, b)] = acc;
                d[(b, a)] = acc;
            }
        }
        d
    }

    /// `∂D_ab/∂q_c` stored at `(a, b, c)`.
    fn inertia_gradient(&self, arms: &Arms) -> CoriolisTensor {
        let n = self.dof();
        let links = self.links();
        let mut dd = CoriolisTensor::zeros(n);
        for a in 0..n {
            for b in a..n {
                for c in 0..n {
                    let lo = b.max(c);
                    let mut acc = 0.0;
                    for i in lo..n {
                        let r = &arms.com[i];
                        acc += links[i].mass * (cross(r[a.max(c)], r[b]) - cross(r[a], r[b.max(c)]));
                    }
                    dd.set(a, b, c, acc);
                    dd.set(b, a, c, acc);
                }
            }
        }
        dd
    }

    /// Coriolis/centripetal coefficients `h_kij(q)` (Christoffel symbols of
    /// the first kind of `D`) and the assembled vector
    /// `h_k = Σ_ij h_kij q̇_i q̇_j`.
    pub fn coriolis_terms(&self, q: &[f64], qd: &[f64]) -> Result<(Vec<f64>, CoriolisTensor), DynamicsError> {
        self.check_len("q", q)?;
        self.check_len("qd", qd)?;
        let arms = Arms::new(self, q);
        let coeffs = self.christoffel(&arms);
        let n = self.dof();
        let h = (0..n)
            .map(|k| {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += coeffs.get(k, i, j) * qd[i] * qd[j];
                    }
                }
                acc
            })
            .collect();
        Ok((h, coeffs))
    }

    fn christoffel(&self, arms: &Arms) -> CoriolisTensor {
        let n = self.dof();
        let dd = self.inertia_gradient(arms);
        let mut c = CoriolisTensor::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v = 0.5 * (dd.get(k, j, i) + dd.get(k, i, j) - dd.get(i, j, k));
                    c.set(k, i, j, v);
                    c.set(k, j, i, v);
                }
            }
        }
        c
    }

    /// Gravity coefficients `(G_k1, G_k2)` per joint and the assembled
    /// `G_k = G_k1 g_x + G_k2 g_y`.
    pub fn gravity_terms(&self, q: &[f64]) -> Result<(DMatrix<f64>, Vec<f64>), DynamicsError> {
        self.check_len("q", q)?;
        let arms = Arms::new(self, q);
        let coeffs = self.gravity_coefficients(&arms);
        let [gx, gy] = self.gravity();
        let g = (0..self.dof())
            .map(|k| coeffs[(k, 0)] * gx + coeffs[(k, 1)] * gy)
            .collect();
        Ok((coeffs, g))
    }

    fn gravity_coefficients(&self, arms: &Arms) -> DMatrix<f64> {
        let n = self.dof();
        let links = self.links();
        let mut g = DMatrix::zeros(n, 2);
        for k in 0..n {
            let (mut cx, mut cy) = (0.0, 0.0);
            for i in k..n {
                let r = arms.com[i][k];
                // -m · perp(r), perp(r) = (-r_y, r_x)
                cx += links[i].mass * r[1];
                cy -= links[i].mass * r[0];
            }
            g[(k, 0)] = cx;
            g[(k, 1)] = cy;
        }
        g
    }

    /// Potential energy of the chain in the gravity field (zero at the base).
    pub fn potential_energy(&self, q: &[f64]) -> Result<f64, DynamicsError> {
        self.check_len("q", q)?;
        let [gx, gy] = self.gravity();
        let mut theta = 0.0;
        let mut joint = [0.0, 0.0];
        let mut v = 0.0;
        for (l, &qk) in self.links().iter().zip(q) {
            theta += qk;
            let (s, c) = f64::sin_cos(theta);
            let com = [joint[0] + l.com_distance * c, joint[1] + l.com_distance * s];
            v -= l.mass * (gx * com[0] + gy * com[1]);
            joint = [joint[0] + l.length * c, joint[1] + l.length * s];
        }
        Ok(v)
    }

    /// Viscous and Coulomb friction torques, `(F_kd q̇_k, F_ks sign(q̇_k))`.
    pub fn friction_torques(&self, qd: &[f64]) -> Result<(Vec<f64>, Vec<f64>), DynamicsError> {
        self.check_len("qd", qd)?;
        let dynamic = self.links().iter().zip(qd).map(|(l, &v)| l.fric_dynamic * v).collect();
        let stat = self
            .links()
            .iter()
            .zip(qd)
            .map(|(l, &v)| l.fric_static * coulomb_sign(v))
            .collect();
        Ok((dynamic, stat))
    }

    /// End-effector Jacobian, rows `(ẋ, ẏ, ω)`, shape `3 × n`.
    pub fn jacobian(&self, q: &[f64]) -> Result<DMatrix<f64>, DynamicsError> {
        self.check_len("q", q)?;
        Ok(Self::jacobian_from_arms(&Arms::new(self, q)))
    }

    fn jacobian_from_arms(arms: &Arms) -> DMatrix<f64> {
        let n = arms.tip.len();
        let mut j = DMatrix::zeros(3, n);
        for (k, e) in arms.tip.iter().enumerate() {
            j[(0, k)] = -e[1];
            j[(1, k)] = e[0];
            j[(2, k)] = 1.0;
        }
        j
    }

    /// Per-component terms `J_ck(q) · w_c` (shape `n × 3`) and `Jᵀ w`.
    pub fn jacobian_wrench_torques(
        &self,
        q: &[f64],
        w: &ExternalWrench,
    ) -> Result<(DMatrix<f64>, Vec<f64>), DynamicsError> {
        let j = self.jacobian(q)?;
        let terms = Self::wrench_terms(&j, w);
        let total = (0..self.dof()).map(|k| terms.row(k).sum()).collect();
        Ok((terms, total))
    }

    fn wrench_terms(j: &DMatrix<f64>, w: &ExternalWrench) -> DMatrix<f64> {
        let comps = w.components();
        DMatrix::from_fn(j.ncols(), 3, |k, c| j[(c, k)] * comps[c])
    }

    /// `τ = D q̈ + h + G + F_f + Jᵀ f_e`.
    pub fn inverse_dynamics(&self, s: &JointState, w: &ExternalWrench) -> Result<Vec<f64>, DynamicsError> {
        self.check_state(s)?;
        let bias = self.bias_torques(&s.q, &s.qd, w)?;
        let d = self.inertia_matrix(&s.q)?;
        let qdd = DVector::from_column_slice(&s.qdd);
        let tau = d * qdd + bias;
        Ok(tau.iter().copied().collect())
    }

    /// Everything except the inertial term.
    fn bias_torques(&self, q: &[f64], qd: &[f64], w: &ExternalWrench) -> Result<DVector<f64>, DynamicsError> {
        let (h, _) = self.coriolis_terms(q, qd)?;
        let (_, g) = self.gravity_terms(q)?;
        let (fd, fs) = self.friction_torques(qd)?;
        let j = self.jacobian(q)?;
        let ext = j.transpose() * DVector::from_column_slice(&w.components());
        Ok(DVector::from_fn(self.dof(), |k, _| h[k] + g[k] + fd[k] + fs[k] + ext[k]))
    }

    /// `q̈ = D⁻¹ (τ − h − G − F_f − Jᵀ f_e)`.
    pub fn forward_dynamics(
        &self,
        q: &[f64],
        qd: &[f64],
        tau: &[f64],
        w: &ExternalWrench,
    ) -> Result<Vec<f64>, DynamicsError> {
        self.check_len("q", q)?;
        self.check_len("qd", qd)?;
        self.check_len("tau", tau)?;
        let bias = self.bias_torques(q, qd, w)?;
        let rhs = DVector::from_column_slice(tau) - bias;
        let chol = self.inertia_matrix(q)?.cholesky().ok_or(DynamicsError::Singular)?;
        Ok(chol.solve(&rhs).iter().copied().collect())
    }

    /// Separates every term of the joint torque equation.
    pub fn term_breakdown(&self, s: &JointState, w: &ExternalWrench) -> Result<TorqueBreakdown, DynamicsError> {
        self.check_state(s)?;
        let n = self.dof();
        let arms = Arms::new(self, &s.q);

        let d = self.inertia_from_arms(&arms);
        let inertial = DMatrix::from_fn(n, n, |k, m| d[(k, m)] * s.qdd[m]);

        let coeffs = self.christoffel(&arms);
        let mut coriolis = CoriolisTensor::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    coriolis.set(k, i, j, coeffs.get(k, i, j) * s.qd[i] * s.qd[j]);
                }
            }
        }

        let gc = self.gravity_coefficients(&arms);
        let [gx, gy] = self.gravity();
        let gravity = DMatrix::from_fn(n, 2, |k, c| gc[(k, c)] * if c == 0 { gx } else { gy });

        let (fric_dyn, fric_stat) = self.friction_torques(&s.qd)?;
        let external = Self::wrench_terms(&Self::jacobian_from_arms(&arms), w);

        let mut out = TorqueBreakdown {
            inertial,
            coriolis,
            gravity,
            fric_dyn,
            fric_stat,
            external,
            total: vec![0.0; n],
        };
        for k in 0..n {
            out.total[k] = out.row_total(k);
        }
        Ok(out)
    }

    pub(crate) fn check_state(&self, s: &JointState) -> Result<(), DynamicsError> {
        self.check_len("q", &s.q)?;
        self.check_len("qd", &s.qd)?;
        self.check_len("qdd", &s.qdd)
    }
}
