//! Reduced simulator: only particles whose family reaches the support ball
//! `B_K` of the test function before the horizon are generated.
//!
//! Outside `B_K` only the distance to the origin matters for when the ball
//! is reached, and the distance of a c-walk is itself a Markov chain. Let
//! `h_d(tau)` be the probability that a particle at distance `d > K` with
//! time `tau` to go has a descendant entering `B_K`. It solves
//!
//! `dh_d/dtau = sum_d' q(d, d') (h_d' - h_d) - (V/2) h_d^2`,
//!
//! with `h = 1` inside `B_K` and `h = 0` beyond the truncation radius. Relevant
//! initial particles are thinned with `h_d`, and relevant particles outside
//! `B_K` follow the `h`-transformed dynamics: move rates `q(d, d') h_d'/h_d`,
//! splits at rate `(V/2)(2 - h_d)` (both children relevant with probability
//! `h_d/(2 - h_d)`, otherwise one) and no deaths. Inside `B_K` particles are
//! simulated exactly; on leaving the ball they are kept with probability
//! `h_d`. Lineages that go beyond the truncation radius are discarded.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1, Poisson};

use super::{SupportFn, SystemConfig, ThetaLaw};
use crate::error::{Error, Result};
use crate::hiergroup::{sphere_size, sphere_size_f64};
use crate::walk::{jump_pmf, sample_jump_length};

/// `h_d(tau)` on a time-to-go grid, `d = 0..=dmax`.
#[derive(Debug, Clone)]
pub struct Relevance {
    k: u32,
    dmax: u32,
    m: u32,
    a: f64,
    v: f64,
    horizon: f64,
    taus: Vec<f64>,
    /// Row-major `taus.len() x (dmax + 1)`.
    h: Vec<f64>,
}

impl Relevance {
    pub fn new(config: &SystemConfig, k: u32) -> Result<Self> {
        let dmax = config.truncation_radius;
        if dmax < k {
            return Err(Error::InvalidParameter(format!(
                "truncation radius {dmax} is smaller than the test function radius {k}"
            )));
        }
        let params = &config.params;
        let v = config.branching_rate();
        let horizon = config.horizon();
        let width = dmax as usize + 1;
        let mut table = Self { k, dmax, m: params.m, a: params.a, v, horizon, taus: vec![0.0], h: Vec::new() };
        let mut h: Vec<f64> = (0..width).map(|d| if d as u32 <= k { 1.0 } else { 0.0 }).collect();
        table.h.extend_from_slice(&h);
        let dt_max = 0.2 / (1.0 + v);
        let mut tau = 0.0;
        let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; width], vec![0.0; width], vec![0.0; width], vec![0.0; width]);
        let mut tmp = vec![0.0; width];
        while tau < horizon {
            let dt = (0.002 + 0.02 * tau).min(dt_max).min(horizon - tau);
            table.rhs(&h, &mut k1);
            let stage = |src: &[f64], c: f64, tmp: &mut [f64]| {
                for (t, (x, d)) in tmp.iter_mut().zip(h.iter().zip(src)) {
                    *t = x + c * d;
                }
            };
            stage(&k1, dt / 2.0, &mut tmp);
            table.rhs(&tmp, &mut k2);
            stage(&k2, dt / 2.0, &mut tmp);
            table.rhs(&tmp, &mut k3);
            stage(&k3, dt, &mut tmp);
            table.rhs(&tmp, &mut k4);
            for d in (k as usize + 1)..width {
                h[d] = (h[d] + dt / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d])).clamp(0.0, 1.0);
            }
            tau += dt;
            table.taus.push(tau);
            table.h.extend_from_slice(&h);
        }
        Ok(table)
    }

    fn jump(&self, j: u32) -> f64 {
        (1.0 - self.a) * self.a.powi(j as i32 - 1)
    }

    fn rhs(&self, h: &[f64], out: &mut [f64]) {
        let (k, dmax) = (self.k as usize, self.dmax as usize);
        let mf = self.m as f64;
        // prefix: sum_{k < i < d} (M-1) M^(i-d) h_i
        let mut prefix = 0.0;
        let mut suffix: f64 = (k + 2..=dmax).map(|j| self.jump(j as u32) * h[j]).sum();
        for d in k + 1..=dmax {
            let rd = self.jump(d as u32);
            let enter = mf.powi(k as i32 - d as i32 + 1);
            let up = suffix - self.a.powi(d as i32) * h[d];
            let down = rd / (mf - 1.0) * (enter + prefix - h[d]);
            out[d] = up + down - 0.5 * self.v * h[d] * h[d];
            prefix = prefix / mf + (mf - 1.0) / mf * h[d];
            if d < dmax {
                suffix -= self.jump(d as u32 + 1) * h[d + 1];
            }
        }
    }

    /// `h_d` with `tau` left before the horizon.
    pub fn at(&self, d: u32, tau: f64) -> f64 {
        if d <= self.k {
            return 1.0;
        }
        if d > self.dmax || tau <= 0.0 {
            return 0.0;
        }
        let width = self.dmax as usize + 1;
        let n = self.taus.len();
        let i = self.taus.partition_point(|&x| x <= tau).clamp(1, n - 1) - 1;
        let (t0, t1) = (self.taus[i], self.taus[i + 1]);
        let w = ((tau - t0) / (t1 - t0)).clamp(0.0, 1.0);
        let (h0, h1) = (self.h[i * width + d as usize], self.h[(i + 1) * width + d as usize]);
        h0 + w * (h1 - h0)
    }

    /// Probability that a particle at distance `d` at time 0 is relevant.
    pub fn initial(&self, d: u32) -> f64 {
        self.at(d, self.horizon)
    }

    /// Total rate at which the distance changes from `d > K`.
    fn move_rate(&self, d: u32) -> f64 {
        self.a.powi(d as i32) + self.jump(d) / (self.m as f64 - 1.0)
    }

    /// Time to go at the next event of a relevant particle at distance `d`
    /// with `tau0` to go: solves `(mu + V)(tau0 - tau) + ln h(tau0) - ln h(tau) = E`.
    fn next_event(&self, d: u32, tau0: f64, e: f64) -> f64 {
        let rate = self.move_rate(d) + self.v;
        let lh0 = self.at(d, tau0).ln();
        let f = |tau: f64| rate * (tau0 - tau) + lh0 - self.at(d, tau).ln();
        // f decreases from +inf at 0 to 0 at tau0; bracket on the grid first
        let top = self.taus.partition_point(|&x| x < tau0);
        let (mut lo, mut hi) = (0usize, top);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if f(self.taus[mid]) >= e {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut a = self.taus[lo];
        let mut b = if hi < top { self.taus[hi] } else { tau0 };
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            if f(mid) >= e {
                a = mid;
            } else {
                b = mid;
            }
            if b - a <= 1e-14 * tau0 {
                break;
            }
        }
        0.5 * (a + b)
    }
}

/// Uniform point of the sphere of radius `j <= K`, added to `x`, as codes.
fn jump_code<R: Rng + ?Sized>(x: u64, j: u32, m: u64, rng: &mut R) -> u64 {
    let low = m.pow(j - 1);
    let high = x - x % (low * m);
    let digit = (x / low) % m;
    let new_digit = (digit + rng.random_range(1..m)) % m;
    high + new_digit * low + rng.random_range(0..low)
}

enum State {
    Inside(u64),
    Outside(u32),
}

struct Particle {
    state: State,
    time: f64,
}

/// Occupation integrals `int_0^(T t_i) <N_r, phi> dr` of one realisation.
pub(crate) fn simulate_occupation<R: Rng + ?Sized>(
    config: &SystemConfig,
    phi: &SupportFn,
    table: &Relevance,
    eval_times: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(simulate_occupation_multi(config, std::slice::from_ref(phi), table, eval_times, rng)?.remove(0))
}

/// As [`simulate_occupation`] for several functions on one ball, sharing the realisation.
///
/// The particles started in `B_K` and those started on each sphere, with all
/// their descendants, draw from separate streams keyed by the sphere radius,
/// so changing the truncation radius leaves the other families' draws intact.
pub(crate) fn simulate_occupation_multi<R: Rng + ?Sized>(
    config: &SystemConfig,
    phis: &[SupportFn],
    table: &Relevance,
    eval_times: &[f64],
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let k = table.k;
    if phis.iter().any(|p| p.radius != k) {
        return Err(Error::InvalidParameter("test functions must share the support ball".into()));
    }
    let base: u64 = rng.random();
    let mut sim = Family {
        config,
        phis,
        table,
        eval_times,
        occ: vec![vec![0.0; eval_times.len()]; phis.len()],
        stack: Vec::new(),
        weights: Vec::with_capacity(table.dmax as usize + 2),
        processed: 0,
    };
    let ball = (config.params.m as u64).pow(k);
    let mut r = crate::rng::stream(base, 0);
    for code in 0..ball {
        let n = config.theta_law.sample_scaled(config.intensity, &mut r);
        for _ in 0..n {
            sim.stack.push(Particle { state: State::Inside(code), time: 0.0 });
        }
    }
    sim.run(&mut r)?;
    for d in k + 1..=table.dmax {
        let p = table.initial(d);
        if p <= 0.0 {
            continue;
        }
        let mut r = crate::rng::stream(base, d as u64);
        let n = relevant_count(&config.theta_law, config.intensity, d, config.params.m, p, &mut r)?;
        for _ in 0..n {
            sim.stack.push(Particle { state: State::Outside(d), time: 0.0 });
        }
        sim.run(&mut r)?;
    }
    Ok(sim.occ)
}

struct Family<'a> {
    config: &'a SystemConfig,
    phis: &'a [SupportFn],
    table: &'a Relevance,
    eval_times: &'a [f64],
    occ: Vec<Vec<f64>>,
    stack: Vec<Particle>,
    weights: Vec<f64>,
    processed: usize,
}

impl Family<'_> {
    /// Runs every particle on the stack, and its descendants, to the horizon.
    fn run<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let (table, params) = (self.table, &self.config.params);
        let m = params.m as u64;
        let k = table.k;
        let ball = m.pow(k);
        let (horizon, v) = (table.horizon, table.v);
        while let Some(mut p) = self.stack.pop() {
            self.processed += 1;
            if self.processed > self.config.population_cap {
                return Err(Error::PopulationCap { cap: self.config.population_cap });
            }
            loop {
                match p.state {
                    State::Inside(x) => {
                        let e: f64 = Exp1.sample(rng);
                        let next = p.time + e / (1.0 + v);
                        let end = next.min(horizon);
                        for (phi, occ) in self.phis.iter().zip(self.occ.iter_mut()) {
                            let value = phi.values[x as usize];
                            if value == 0.0 {
                                continue;
                            }
                            for (o, &te) in occ.iter_mut().zip(self.eval_times) {
                                if te > p.time {
                                    *o += value * (end.min(te) - p.time);
                                }
                            }
                        }
                        if next >= horizon {
                            break;
                        }
                        p.time = next;
                        if rng.random::<f64>() * (1.0 + v) < v {
                            if rng.random::<bool>() {
                                break;
                            }
                            self.stack.push(Particle { state: State::Inside(x), time: next });
                            continue;
                        }
                        let j = sample_jump_length(params, rng);
                        if j <= k {
                            p.state = State::Inside(jump_code(x, j, m, rng));
                        } else if j <= table.dmax && rng.random::<f64>() < table.at(j, horizon - next) {
                            p.state = State::Outside(j);
                        } else {
                            break;
                        }
                    }
                    State::Outside(d) => {
                        let tau0 = horizon - p.time;
                        if table.at(d, tau0) <= 0.0 {
                            break;
                        }
                        let e: f64 = Exp1.sample(rng);
                        let tau = table.next_event(d, tau0, e);
                        p.time = horizon - tau;
                        let hd = table.at(d, tau);
                        if hd <= 0.0 {
                            break;
                        }
                        // tilted rates times h_d: [enter, down to k < i < d, up to d < i <= dmax, split]
                        let w = &mut self.weights;
                        w.clear();
                        let mf = m as f64;
                        let down = table.jump(d) / (mf - 1.0) / mf.powi(d as i32 - 1);
                        w.push(down * mf.powi(k as i32));
                        for i in k + 1..d {
                            w.push(down * sphere_size_f64(i, params.m) * table.at(i, tau));
                        }
                        for i in d + 1..=table.dmax {
                            w.push(jump_pmf(i, params) * table.at(i, tau));
                        }
                        w.push(0.5 * v * (2.0 - hd) * hd);
                        let total: f64 = w.iter().sum();
                        let mut u = rng.random::<f64>() * total;
                        let mut choice = w.len() - 1;
                        for (i, wi) in w.iter().enumerate() {
                            if u < *wi {
                                choice = i;
                                break;
                            }
                            u -= wi;
                        }
                        let n_down = (d - k - 1) as usize;
                        if choice == 0 {
                            p.state = State::Inside(rng.random_range(0..ball));
                        } else if choice <= n_down {
                            p.state = State::Outside(k + choice as u32);
                        } else if choice < w.len() - 1 {
                            p.state = State::Outside(d + (choice - n_down) as u32);
                        } else if rng.random::<f64>() * (2.0 - hd) < hd {
                            self.stack.push(Particle { state: State::Outside(d), time: p.time });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Number of relevant initial particles on the sphere of radius `d`.
fn relevant_count<R: Rng + ?Sized>(law: &ThetaLaw, intensity: f64, d: u32, m: u32, p: f64, rng: &mut R) -> Result<u64> {
    let binomial = |n: u64, rng: &mut R| -> Result<u64> {
        Ok(Binomial::new(n, p).map_err(|e| Error::InvalidParameter(e.to_string()))?.sample(rng))
    };
    match law {
        ThetaLaw::Poisson(lambda) => {
            let mean = lambda * intensity * sphere_size_f64(d, m) * p;
            if mean <= 0.0 {
                return Ok(0);
            }
            Ok(Poisson::new(mean).map_err(|e| Error::InvalidParameter(e.to_string()))?.sample(rng) as u64)
        }
        ThetaLaw::Deterministic(n) => {
            let total = sphere_size(d, m)?
                .checked_mul(*n)
                .ok_or_else(|| Error::Overflow(format!("particle count on the sphere of radius {d}")))?;
            binomial(total, rng)
        }
        ThetaLaw::Categorical(pmf) => {
            // sites per value of theta, then thinning
            let mut sites = sphere_size(d, m)?;
            let mut mass = 1.0;
            let mut count = 0;
            for (value, &q) in pmf.iter().enumerate() {
                if sites == 0 {
                    break;
                }
                let n = if q >= mass { sites } else { Binomial::new(sites, (q / mass).clamp(0.0, 1.0)).unwrap().sample(rng) };
                sites -= n;
                mass -= q;
                if value > 0 && n > 0 {
                    let total = n
                        .checked_mul(value as u64)
                        .ok_or_else(|| Error::Overflow(format!("particle count on the sphere of radius {d}")))?;
                    count += binomial(total, rng)?;
                }
            }
            Ok(count)
        }
    }
}
