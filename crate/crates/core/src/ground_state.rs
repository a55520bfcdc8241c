//! Radial ground state of `−ΔQ + Q = Q^p` in `d` dimensions by shooting on `Q(0)`.

use crate::error::{Error, Result};

const STEP: f64 = 1e-3;
const R_MAX: f64 = 20.0;

/// Tabulated ground state with an exponential tail beyond the matching radius.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub dim: usize,
    pub p: f64,
    /// `Q(0)`.
    pub q0: f64,
    q: Vec<f64>,
    dq: Vec<f64>,
    /// Tail `A e^{−κr} r^{−(d−1)/2}` matched at the last table point.
    tail: (f64, f64),
}

enum Shot {
    /// `Q` crossed zero.
    Over,
    /// `Q'` turned positive while `Q > 0`.
    Under,
}

fn rhs(d: usize, p: f64, r: f64, y: [f64; 2]) -> [f64; 2] {
    [y[1], -(d as f64 - 1.0) / r * y[1] + y[0] - y[0].abs().powf(p - 1.0) * y[0]]
}

fn rk4(d: usize, p: f64, r: f64, y: [f64; 2], h: f64) -> [f64; 2] {
    let add = |a: [f64; 2], k: [f64; 2], s: f64| [a[0] + s * k[0], a[1] + s * k[1]];
    let k1 = rhs(d, p, r, y);
    let k2 = rhs(d, p, r + 0.5 * h, add(y, k1, 0.5 * h));
    let k3 = rhs(d, p, r + 0.5 * h, add(y, k2, 0.5 * h));
    let k4 = rhs(d, p, r + h, add(y, k3, h));
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Trajectory from `Q(0) = a` until it over- or undershoots (or reaches `R_MAX`).
fn shoot(d: usize, p: f64, a: f64) -> (Vec<[f64; 2]>, Option<Shot>) {
    // Series start: Q ≈ a + c r², c = (a − a^p)/(2d).
    let c = (a - a.powf(p)) / (2.0 * d as f64);
    let mut traj = vec![[a, 0.0], [a + c * STEP * STEP, 2.0 * c * STEP]];
    let steps = (R_MAX / STEP) as usize;
    for k in 1..steps {
        let y = rk4(d, p, k as f64 * STEP, traj[k], STEP);
        if y[0] < 0.0 {
            return (traj, Some(Shot::Over));
        }
        if y[1] > 0.0 {
            return (traj, Some(Shot::Under));
        }
        traj.push(y);
    }
    (traj, None)
}

impl GroundState {
    pub fn solve(dim: usize, p: f64) -> Result<Self> {
        if !(dim >= 1 && p > 1.0 && (dim <= 2 || p < (dim as f64 + 2.0) / (dim as f64 - 2.0))) {
            return Err(Error::InvalidArgument(format!("no ground state for d = {dim}, p = {p}")));
        }
        let (mut lo, mut hi) = (1.0, 2.0);
        while !matches!(shoot(dim, p, hi).1, Some(Shot::Over)) {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::InvalidArgument("ground-state shooting did not bracket".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match shoot(dim, p, mid).1 {
                Some(Shot::Over) => hi = mid,
                _ => lo = mid,
            }
        }
        let (a, _) = shoot(dim, p, lo);
        let (b, _) = shoot(dim, p, hi);
        // Keep the stretch where the bracketing trajectories agree.
        let mut end = a.len().min(b.len());
        if let Some(k) = (1..end).find(|&k| (a[k][0] - b[k][0]).abs() > 1e-6 * a[k][0]) {
            end = k;
        }
        // Back off from the divergence point so the table stays well inside the accurate range.
        end = (end * 4 / 5).max(2);
        let table = &a[..end];
        let r_m = (end - 1) as f64 * STEP;
        let [qm, dqm] = table[end - 1];
        let s = (dim as f64 - 1.0) / 2.0;
        let kappa = -dqm / qm - s / r_m;
        let amp = qm * (kappa * r_m).exp() * r_m.powf(s);
        Ok(Self {
            dim,
            p,
            q0: lo,
            q: table.iter().map(|y| y[0]).collect(),
            dq: table.iter().map(|y| y[1]).collect(),
            tail: (amp, kappa),
        })
    }

    /// Radius beyond which the tail formula is used.
    pub fn matching_radius(&self) -> f64 {
        (self.q.len() - 1) as f64 * STEP
    }

    /// `Q(r)` (cubic Hermite interpolation inside the table).
    pub fn value(&self, r: f64) -> f64 {
        let r = r.abs();
        let k = (r / STEP) as usize;
        if k + 1 >= self.q.len() {
            let s = (self.dim as f64 - 1.0) / 2.0;
            return self.tail.0 * (-self.tail.1 * r).exp() * r.powf(-s);
        }
        let t = r / STEP - k as f64;
        let (y0, y1) = (self.q[k], self.q[k + 1]);
        let (m0, m1) = (self.dq[k] * STEP, self.dq[k + 1] * STEP);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1
    }
}
