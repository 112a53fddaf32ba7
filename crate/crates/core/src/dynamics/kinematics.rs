//! Planar chain geometry shared by the term assemblers.

use super::RobotModel;

pub(super) type Vec2 = [f64; 2];

#[inline]
pub(super) fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// z-component of `a × b`; exactly zero for `a == b`.
#[inline]
pub(super) fn cross(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Lever arms of a configuration.
///
/// `com[i][k]` (for `k <= i`) is the vector from joint `k` to the center of
/// mass of link `i`; the translational Jacobian column of that center with
/// respect to `q[k]` is its perpendicular. `tip[k]` is the vector from joint
/// `k` to the end effector.
pub(super) struct Arms {
    pub com: Vec<Vec<Vec2>>,
    pub tip: Vec<Vec2>,
}

impl Arms {
    pub fn new(model: &RobotModel, q: &[f64]) -> Self {
        let n = model.dof();
        let mut theta = 0.0;
        let mut dirs = Vec::with_capacity(n);
        for &qk in q {
            theta += qk;
            let (s, c) = f64::sin_cos(theta);
            dirs.push([c, s]);
        }
        let links = model.links();
        let mut com = Vec::with_capacity(n);
        for i in 0..n {
            let mut arms = vec![[0.0; 2]; i + 1];
            let lc = links[i].com_distance;
            arms[i] = [lc * dirs[i][0], lc * dirs[i][1]];
            for k in (0..i).rev() {
                let l = links[k].length;
                arms[k] = [arms[k + 1][0] + l * dirs[k][0], arms[k + 1][1] + l * dirs[k][1]];
            }
            com.push(arms);
        }
        let mut tip = vec![[0.0; 2]; n];
        let mut acc = [0.0; 2];
        for k in (0..n).rev() {
            let l = links[k].length;
            acc = [acc[0] + l * dirs[k][0], acc[1] + l * dirs[k][1]];
            tip[k] = acc;
        }
        Arms { com, tip }
    }
}
