use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::hiergroup::{add, sample_sphere, GroupElement, HierParams};

/// Piecewise-constant path of one particle, stored as jump events only.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub birth_time: f64,
    /// `f64::INFINITY` when the particle survives past the horizon.
    pub death_time: f64,
    pub start: GroupElement,
    /// `(time, new position)`, times strictly increasing in `(birth, death)`.
    pub jumps: Vec<(f64, GroupElement)>,
}

impl Trajectory {
    pub fn constant(start: GroupElement, birth_time: f64) -> Self {
        Self { birth_time, death_time: f64::INFINITY, start, jumps: Vec::new() }
    }

    /// Position at time `t` (right-continuous); `None` outside the lifetime.
    pub fn position_at(&self, t: f64) -> Option<&GroupElement> {
        if t < self.birth_time || t >= self.death_time {
            return None;
        }
        let k = self.jumps.partition_point(|(s, _)| *s <= t);
        Some(if k == 0 { &self.start } else { &self.jumps[k - 1].1 })
    }

    pub fn end_position(&self) -> &GroupElement {
        self.jumps.last().map_or(&self.start, |(_, x)| x)
    }

    /// Sojourns `(from, to, position)` clipped to `[t0, t1]`.
    pub fn sojourns(&self, t0: f64, t1: f64) -> impl Iterator<Item = (f64, f64, &GroupElement)> + '_ {
        let lo = t0.max(self.birth_time);
        let hi = t1.min(self.death_time);
        let n = self.jumps.len();
        (0..=n).filter_map(move |k| {
            let from = if k == 0 { self.birth_time } else { self.jumps[k - 1].0 };
            let to = if k == n { f64::INFINITY } else { self.jumps[k].0 };
            let pos = if k == 0 { &self.start } else { &self.jumps[k - 1].1 };
            let (a, b) = (from.max(lo), to.min(hi));
            (b > a).then_some((a, b, pos))
        })
    }
}

/// Jump length `J` with `P(J = j) = r_j = (1-a) a^(j-1)`, by inversion.
pub fn sample_jump_length<R: Rng + ?Sized>(params: &HierParams, rng: &mut R) -> u32 {
    // 1 - U lies in (0, 1], so the logarithm is finite
    let u: f64 = 1.0 - rng.random::<f64>();
    let j = 1.0 + (u.ln() / params.a.ln()).floor();
    j.min(u32::MAX as f64 - 1.0) as u32
}

/// One jump of the walk from `x`.
pub fn step<R: Rng + ?Sized>(x: &GroupElement, params: &HierParams, rng: &mut R) -> GroupElement {
    let j = sample_jump_length(params, rng);
    let w = sample_sphere(j, params.m, rng).expect("jump length is at least 1");
    add(x, &w, params.m).expect("digits are valid for the walk's modulus")
}

/// Path of the unit-rate walk from `x0` on `[t0, t1]`.
pub fn simulate_path<R: Rng + ?Sized>(
    x0: GroupElement,
    t0: f64,
    t1: f64,
    params: &HierParams,
    rng: &mut R,
) -> Trajectory {
    let mut traj = Trajectory::constant(x0, t0);
    let mut t = t0;
    let mut x = traj.start.clone();
    loop {
        let e: f64 = Exp1.sample(rng);
        t += e;
        if t > t1 {
            break;
        }
        x = step(&x, params, rng);
        traj.jumps.push((t, x.clone()));
    }
    traj
}

/// Path of the walk from `x0` on `[0, horizon]`.
pub fn simulate_trajectory<R: Rng + ?Sized>(
    x0: GroupElement,
    horizon: f64,
    params: &HierParams,
    rng: &mut R,
) -> Result<Trajectory> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidParameter(format!("horizon {horizon} must be positive and finite")));
    }
    Ok(simulate_path(x0, 0.0, horizon, params, rng))
}
