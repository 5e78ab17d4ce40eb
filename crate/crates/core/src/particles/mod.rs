//! Particle systems on the hierarchical group: `theta_x` particles at every
//! site moving as independent c-walks, optionally with critical binary
//! branching, and the occupation-time fluctuation
//! `<X_T(t), phi> = F_T^-1 int_0^(Tt) (<N_r, phi> - E<N_r, phi>) dr`.

mod prelimit;
mod relevance;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use prelimit::{
    limit_constant, limit_cov_branching, limit_cov_highgamma, limit_cov_nonbranching, prelimit_branching_parts,
    prelimit_cov_branching, prelimit_cov_highgamma, prelimit_cov_nonbranching,
};
pub use relevance::Relevance;

use crate::error::{Error, Result};
use crate::gp_sampler::{EnsembleMeta, Grid, PathEnsemble};
use crate::hiergroup::{add, enumerate_ball, sample_sphere, GroupElement, HierParams};
use crate::rng;
use crate::walk::{integrated_transition, sample_jump_length, TestFn, Trajectory};

/// Law of the number of particles initially at a site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaLaw {
    Poisson(f64),
    Deterministic(u64),
    /// `pmf[k] = P(theta = k)`; finite support, so all moments are finite.
    Categorical(Vec<f64>),
}

impl ThetaLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            ThetaLaw::Poisson(l) if !(*l >= 0.0 && l.is_finite()) => {
                Err(Error::InvalidParameter(format!("Poisson mean {l} must be finite and >= 0")))
            }
            ThetaLaw::Categorical(p) => {
                if p.is_empty() || p.iter().any(|q| !(*q >= 0.0 && q.is_finite())) {
                    return Err(Error::InvalidParameter("categorical pmf must be finite and nonnegative".into()));
                }
                let total: f64 = p.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameter(format!("categorical pmf sums to {total}, not 1")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ThetaLaw::Poisson(l) => *l,
            ThetaLaw::Deterministic(k) => *k as f64,
            ThetaLaw::Categorical(p) => p.iter().enumerate().map(|(k, q)| k as f64 * q).sum(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            ThetaLaw::Poisson(l) => *l,
            ThetaLaw::Deterministic(_) => 0.0,
            ThetaLaw::Categorical(p) => {
                let m = self.mean();
                p.iter().enumerate().map(|(k, q)| (k as f64 - m).powi(2) * q).sum()
            }
        }
    }

    /// The per-site law at density multiplier `intensity` (Poisson only).
    pub fn scaled(&self, intensity: f64) -> Result<ThetaLaw> {
        match self {
            ThetaLaw::Poisson(l) => Ok(ThetaLaw::Poisson(l * intensity)),
            _ if intensity == 1.0 => Ok(self.clone()),
            _ => Err(Error::Unsupported(format!("density multiplier {intensity} needs a Poisson initial law"))),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            ThetaLaw::Poisson(l) if *l > 0.0 => Poisson::new(*l).expect("validated mean").sample(rng) as u64,
            ThetaLaw::Poisson(_) => 0,
            ThetaLaw::Deterministic(k) => *k,
            ThetaLaw::Categorical(p) => {
                let mut u: f64 = rng.random();
                for (k, q) in p.iter().enumerate() {
                    if u < *q {
                        return k as u64;
                    }
                    u -= q;
                }
                p.iter().rposition(|q| *q > 0.0).unwrap_or(0) as u64
            }
        }
    }

    fn sample_scaled<R: Rng + ?Sized>(&self, intensity: f64, rng: &mut R) -> u64 {
        match self {
            ThetaLaw::Poisson(l) => ThetaLaw::Poisson(l * intensity).sample(rng),
            _ => self.sample(rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branching {
    None,
    /// Exponential lifetimes of rate `V`, then 0 or 2 offspring.
    Critical(f64),
}

/// Normalisation regimes of the limit theorems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `F_T = T^((1-gamma)/2)`, `gamma < 0`.
    NoBranchLowGamma,
    /// `F_T = T^((2-gamma)/2)`, `0 < gamma < 1`.
    BranchMidGamma,
    /// `F_T = T^((2-gamma)/2) H_T^(1/2)`, `gamma < 0`.
    BranchHighDensity,
    /// `F_T = sqrt T`, `gamma > 0`.
    HighGamma,
}

impl Regime {
    pub const ALL: [Regime; 4] =
        [Regime::NoBranchLowGamma, Regime::BranchMidGamma, Regime::BranchHighDensity, Regime::HighGamma];

    pub fn name(self) -> &'static str {
        match self {
            Regime::NoBranchLowGamma => "no-branch-low-gamma",
            Regime::BranchMidGamma => "branch-mid-gamma",
            Regime::BranchHighDensity => "branch-high-density",
            Regime::HighGamma => "high-gamma",
        }
    }

    pub fn branching(self) -> bool {
        matches!(self, Regime::BranchMidGamma | Regime::BranchHighDensity)
    }

    fn check_gamma(self, gamma: f64) -> Result<()> {
        let ok = match self {
            Regime::NoBranchLowGamma | Regime::BranchHighDensity => gamma < 0.0,
            Regime::BranchMidGamma => gamma > 0.0 && gamma < 1.0,
            Regime::HighGamma => gamma > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("regime {self} does not apply at gamma = {gamma}")))
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL
            .into_iter()
            .find(|r| r.name() == s.trim())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown regime '{s}'")))
    }
}

/// Norming `F_T` of the regime.
pub fn norming(regime: Regime, time: f64, params: &HierParams, intensity: f64) -> Result<f64> {
    regime.check_gamma(params.gamma)?;
    if !(time > 0.0 && time.is_finite()) {
        return Err(Error::InvalidParameter(format!("time scale T = {time} must be positive")));
    }
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(Error::InvalidParameter(format!("density multiplier {intensity} must be positive")));
    }
    let g = params.gamma;
    Ok(match regime {
        Regime::NoBranchLowGamma => time.powf((1.0 - g) / 2.0),
        Regime::BranchMidGamma => time.powf((2.0 - g) / 2.0),
        Regime::BranchHighDensity => time.powf((2.0 - g) / 2.0) * intensity.sqrt(),
        Regime::HighGamma => time.sqrt(),
    })
}

pub const DEFAULT_POPULATION_CAP: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub params: HierParams,
    pub theta_law: ThetaLaw,
    pub branching: Branching,
    /// Density multiplier `H_T`.
    pub intensity: f64,
    /// Initial particles are taken from `B_R`; lineages reaching beyond `R`
    /// are not simulated by the reduced simulator.
    pub truncation_radius: u32,
    pub time_scale: f64,
    pub t_max: f64,
    pub regime: Regime,
    pub population_cap: usize,
}

impl SystemConfig {
    pub fn new(params: HierParams, theta_law: ThetaLaw, branching: Branching, regime: Regime) -> Self {
        Self {
            params,
            theta_law,
            branching,
            intensity: 1.0,
            truncation_radius: 0,
            time_scale: 1.0,
            t_max: 1.0,
            regime,
            population_cap: DEFAULT_POPULATION_CAP,
        }
    }

    pub fn with_time(mut self, time_scale: f64, t_max: f64) -> Self {
        self.time_scale = time_scale;
        self.t_max = t_max;
        self
    }

    pub fn with_radius(mut self, r: u32) -> Self {
        self.truncation_radius = r;
        self
    }

    pub fn with_intensity(mut self, intensity: f64) -> Self {
        self.intensity = intensity;
        self
    }

    /// Sets the truncation radius from [`truncation_policy`].
    pub fn with_policy_radius(mut self, phi: &SupportFn) -> Result<Self> {
        self.truncation_radius = truncation_policy(&self, phi)?;
        Ok(self)
    }

    pub fn branching_rate(&self) -> f64 {
        match self.branching {
            Branching::None => 0.0,
            Branching::Critical(v) => v,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.time_scale * self.t_max
    }

    pub fn validate(&self) -> Result<()> {
        self.theta_law.validate()?;
        self.theta_law.scaled(self.intensity)?;
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_max = {} must be positive", self.t_max)));
        }
        if let Branching::Critical(v) = self.branching {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("branching rate V = {v} must be positive")));
            }
        }
        if self.regime.branching() != matches!(self.branching, Branching::Critical(_)) {
            return Err(Error::InvalidParameter(format!(
                "regime {} does not match branching {:?}",
                self.regime, self.branching
            )));
        }
        norming(self.regime, self.time_scale, &self.params, self.intensity)?;
        Ok(())
    }

    pub fn norming(&self) -> Result<f64> {
        norming(self.regime, self.time_scale, &self.params, self.intensity)
    }

    /// Mean and variance of the per-site count, density multiplier included.
    pub fn theta_moments(&self) -> Result<(f64, f64)> {
        let law = self.theta_law.scaled(self.intensity)?;
        Ok((law.mean(), law.variance()))
    }
}

/// Largest ball that is enumerated site by site.
const MAX_BALL_SITES: u64 = 1 << 24;

/// A test function supported in `B_K`, stored densely by site code.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportFn {
    pub m: u32,
    pub radius: u32,
    /// Indexed by `sum_i x_i M^(i-1)`.
    pub values: Vec<f64>,
}

impl SupportFn {
    pub fn delta(m: u32) -> Self {
        Self { m, radius: 0, values: vec![1.0] }
    }

    pub fn ball_indicator(m: u32, r: u32) -> Result<Self> {
        let n = ball_sites(r, m)?;
        Ok(Self { m, radius: r, values: vec![1.0; n as usize] })
    }

    pub fn from_points(m: u32, points: &[(GroupElement, f64)]) -> Result<Self> {
        let radius = points.iter().filter(|(_, v)| *v != 0.0).map(|(x, _)| x.norm()).max().unwrap_or(0);
        let mut values = vec![0.0; ball_sites(radius, m)? as usize];
        for (x, v) in points {
            if !v.is_finite() {
                return Err(Error::Domain("test function value is not finite".into()));
            }
            if *v != 0.0 {
                values[x.to_code(m).expect("inside an enumerable ball") as usize] += v;
            }
        }
        Ok(Self { m, radius, values })
    }

    /// Finite-support view of a semigroup test function; radial functions
    /// must vanish beyond their stored radius.
    pub fn from_test_fn(phi: &TestFn, m: u32) -> Result<Self> {
        match phi {
            TestFn::Finite(points) => Self::from_points(m, points),
            TestFn::Radial(f) => {
                if f.tail_bound != 0.0 || f.tail_mass != 0.0 {
                    return Err(Error::Domain("test function does not have bounded support".into()));
                }
                if f.m != m {
                    return Err(Error::InvalidParameter("test function has a different modulus".into()));
                }
                let radius = f.values.iter().rposition(|v| *v != 0.0).unwrap_or(0) as u32;
                let n = ball_sites(radius, m)?;
                let values = (0..n).map(|code| f.values[code_norm(code, m) as usize]).collect();
                Ok(Self { m, radius, values })
            }
        }
    }

    pub fn points(&self) -> Vec<(GroupElement, f64)> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(code, v)| (GroupElement::from_code(code as u64, self.m), *v))
            .collect()
    }

    pub fn get(&self, x: &GroupElement) -> f64 {
        if x.norm() > self.radius {
            return 0.0;
        }
        self.values[x.to_code(self.m).expect("inside the support ball") as usize]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn abs_sum(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn sq_sum(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

fn ball_sites(r: u32, m: u32) -> Result<u64> {
    match (m as u64).checked_pow(r) {
        Some(n) if n <= MAX_BALL_SITES => Ok(n),
        _ => Err(Error::Overflow(format!("ball of radius {r} is too large to store site by site"))),
    }
}

fn code_norm(mut code: u64, m: u32) -> u32 {
    let mut norm = 0;
    let mut index = 0;
    while code > 0 {
        index += 1;
        if code % m as u64 != 0 {
            norm = index;
        }
        code /= m as u64;
    }
    norm
}

/// Counts `theta_x` at every site of `B_R`.
pub fn sample_initial<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Result<Vec<(GroupElement, u64)>> {
    let law = config.theta_law.scaled(config.intensity)?;
    ball_sites(config.truncation_radius, config.params.m)?;
    Ok(enumerate_ball(config.truncation_radius, config.params.m)?
        .into_iter()
        .map(|x| {
            let n = law.sample(rng);
            (x, n)
        })
        .collect())
}

/// Full simulation of the particles started in `B_R` over `[0, horizon]`.
/// Offspring appear as new trajectories with their birth time; a particle
/// that branches ends at its death time.
pub fn simulate_system<R: Rng + ?Sized>(config: &SystemConfig, horizon: f64, rng: &mut R) -> Result<Vec<Trajectory>> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon {horizon} must be positive and finite")));
    }
    let v = config.branching_rate();
    let m = config.params.m;
    let mut pending: Vec<(GroupElement, f64)> = Vec::new();
    for (x, n) in sample_initial(config, rng)? {
        for _ in 0..n {
            pending.push((x.clone(), 0.0));
        }
    }
    let mut out = Vec::new();
    while let Some((x0, birth)) = pending.pop() {
        if out.len() + pending.len() >= config.population_cap {
            return Err(Error::PopulationCap { cap: config.population_cap });
        }
        let mut traj = Trajectory::constant(x0, birth);
        let death = if v > 0.0 { birth + Distribution::<f64>::sample(&Exp1, rng) / v } else { f64::INFINITY };
        let mut t = birth;
        let mut x = traj.start.clone();
        loop {
            t += Distribution::<f64>::sample(&Exp1, rng);
            if t >= death.min(horizon) {
                break;
            }
            let j = sample_jump_length(&config.params, rng);
            x = add(&x, &sample_sphere(j, m, rng)?, m)?;
            traj.jumps.push((t, x.clone()));
        }
        if death < horizon {
            traj.death_time = death;
            if rng.random::<bool>() {
                pending.push((x.clone(), death));
                pending.push((x, death));
            }
        }
        out.push(traj);
    }
    Ok(out)
}

/// `int_0^(t_i) <N_r, phi> dr` from trajectories, as exact sojourn sums.
pub fn occupation_from_trajectories(trajs: &[Trajectory], phi: &SupportFn, eval_times: &[f64]) -> Vec<f64> {
    let mut occ = vec![0.0; eval_times.len()];
    let end = eval_times.iter().cloned().fold(0.0, f64::max);
    for traj in trajs {
        for (a, b, x) in traj.sojourns(0.0, end) {
            let v = phi.get(x);
            if v == 0.0 {
                continue;
            }
            for (o, &te) in occ.iter_mut().zip(eval_times) {
                if te > a {
                    *o += v * (b.min(te) - a);
                }
            }
        }
    }
    occ
}

/// One fluctuation path `t -> <X_T(t), phi>` on a grid of `[0, t_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub phi: Vec<(GroupElement, f64)>,
}

/// Which simulator produces the occupation integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Simulator {
    /// Relevance-conditioned particles only (see [`Relevance`]).
    Reduced,
    /// Every particle started in `B_R`.
    Full,
}

fn check_grid(config: &SystemConfig, grid: &Grid) -> Result<()> {
    if grid.t_max() > config.t_max * (1.0 + 1e-12) {
        return Err(Error::Grid(format!("grid ends at {} beyond t_max = {}", grid.t_max(), config.t_max)));
    }
    Ok(())
}

/// Fluctuation values from raw occupation integrals, centred with
/// `E<N_r, phi> = E theta H_T sum_x phi(x)`.
fn centre(config: &SystemConfig, phi: &SupportFn, grid: &Grid, occ: &[f64]) -> Result<Vec<f64>> {
    let f = config.norming()?;
    let (mean, _) = config.theta_moments()?;
    let rate = mean * phi.sum();
    Ok(grid.times().iter().zip(occ).map(|(t, o)| (o - rate * config.time_scale * t) / f).collect())
}

/// Simulated `<X_T(t), phi>` on `grid`.
pub fn occupation_path<R: Rng + ?Sized>(
    config: &SystemConfig,
    phi: &TestFn,
    grid: &Grid,
    rng: &mut R,
) -> Result<FluctuationPath> {
    let support = SupportFn::from_test_fn(phi, config.params.m)?;
    let table = prepare(config, &support, grid)?;
    let values = realise(config, &support, grid, &table, Simulator::Reduced, rng)?;
    Ok(FluctuationPath { times: grid.times().to_vec(), values, phi: support.points() })
}

fn prepare(config: &SystemConfig, phi: &SupportFn, grid: &Grid) -> Result<Relevance> {
    config.validate()?;
    check_grid(config, grid)?;
    if phi.m != config.params.m {
        return Err(Error::InvalidParameter("test function has a different modulus".into()));
    }
    Relevance::new(config, phi.radius)
}

fn realise<R: Rng + ?Sized>(
    config: &SystemConfig,
    phi: &SupportFn,
    grid: &Grid,
    table: &Relevance,
    simulator: Simulator,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let eval: Vec<f64> = grid.times().iter().map(|t| t * config.time_scale).collect();
    let occ = match simulator {
        Simulator::Reduced => relevance::simulate_occupation(config, phi, table, &eval, rng)?,
        Simulator::Full => {
            let trajs = simulate_system(config, config.horizon(), rng)?;
            occupation_from_trajectories(&trajs, phi, &eval)
        }
    };
    centre(config, phi, grid, &occ)
}

/// `n` independent fluctuation paths; replica `i` uses stream `i` of `seed`.
pub fn occupation_ensemble(
    config: &SystemConfig,
    phi: &SupportFn,
    grid: &Grid,
    n: usize,
    seed: u64,
    simulator: Simulator,
) -> Result<PathEnsemble> {
    let table = prepare(config, phi, grid)?;
    let paths: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| realise(config, phi, grid, &table, simulator, &mut rng::stream(seed, i as u64)))
        .collect::<Result<_>>()?;
    let label = match simulator {
        Simulator::Reduced => format!("particles-reduced[R={}]", config.truncation_radius),
        Simulator::Full => format!("particles-full[R={}]", config.truncation_radius),
    };
    PathEnsemble::from_paths(grid.clone(), paths, EnsembleMeta::new(seed, &label, None))
}

/// Several test functions on one realisation per replica: entry `k` of the
/// result holds the ensemble of `<X_T(.), phis[k]>`.
pub fn occupation_ensemble_multi(
    config: &SystemConfig,
    phis: &[SupportFn],
    grid: &Grid,
    n: usize,
    seed: u64,
) -> Result<Vec<PathEnsemble>> {
    // all functions share the largest support ball
    let radius = phis.iter().map(|p| p.radius).max().ok_or_else(|| Error::InvalidParameter("no test functions".into()))?;
    let lifted: Vec<SupportFn> = phis.iter().map(|p| lift(p, radius)).collect::<Result<_>>()?;
    let stacked = SupportFn { m: config.params.m, radius, values: vec![1.0; lifted[0].values.len()] };
    let table = prepare(config, &stacked, grid)?;
    let eval: Vec<f64> = grid.times().iter().map(|t| t * config.time_scale).collect();
    let per_rep: Vec<Vec<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let occ = relevance::simulate_occupation_multi(config, &lifted, &table, &eval, &mut rng::stream(seed, i as u64))?;
            lifted.iter().zip(&occ).map(|(p, o)| centre(config, p, grid, o)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    (0..phis.len())
        .map(|k| {
            let paths = per_rep.iter().map(|r| r[k].clone()).collect();
            let label = format!("particles-reduced[R={}]", config.truncation_radius);
            PathEnsemble::from_paths(grid.clone(), paths, EnsembleMeta::new(seed, &label, None))
        })
        .collect()
}

fn lift(phi: &SupportFn, radius: u32) -> Result<SupportFn> {
    let n = ball_sites(radius, phi.m)? as usize;
    let mut values = phi.values.clone();
    values.resize(n, 0.0);
    Ok(SupportFn { m: phi.m, radius, values })
}

/// Smallest `R >= K` at which lineages that reach beyond `R` carry less
/// than `1e-3` of the reference variance and shift the centring by less
/// than `1e-3` of its square root.
///
/// A lineage observed at `B_K` by time `Tt` reached beyond `R` with
/// probability at most `Tt a^R` (the rate of jumps longer than `R`). This
/// bounds the dropped covariance by
/// `2 (sum|phi|)^2 T^2 t^2 a^R G_(Tt) (E theta + |Var theta - E theta| + V T t E theta) / F_T^2`,
/// `G_s = int_0^s p_r(0,0) dr`, and the dropped mean by
/// `E theta sum|phi| (Tt)^2 a^R / (2 F_T)`. The reference is the no-branching
/// variance of `<X_T(t_max), 1_0>` times `sum phi^2`.
pub fn truncation_policy(config: &SystemConfig, phi: &SupportFn) -> Result<u32> {
    config.validate()?;
    let (mean, var) = config.theta_moments()?;
    let f = config.norming()?;
    let (time, t) = (config.time_scale, config.t_max);
    let tt = time * t;
    let g = integrated_transition(tt, 0, &config.params)?;
    let (pa, pb) = prelimit::raw_pair_integrals(t, t, time, &config.params);
    let reference = (phi.sq_sum() * time * time / (f * f) * (mean * pa + (var - mean) * pb)).max(f64::MIN_POSITIVE);
    let weight = mean + (var - mean).abs() + config.branching_rate() * tt * mean;
    let cov_coef = 2.0 * phi.abs_sum().powi(2) * time * time * t * t * g * weight / (f * f);
    let mean_coef = mean * phi.abs_sum() * tt * tt / (2.0 * f);
    let a = config.params.a;
    for r in phi.radius..=400 {
        let ar = a.powi(r as i32);
        if cov_coef * ar <= 1e-3 * reference && (mean_coef * ar).powi(2) <= 1e-6 * reference {
            return Ok(r);
        }
    }
    Err(Error::Truncation("no truncation radius up to 400 meets the policy".into()))
}

#[cfg(test)]
mod tests;
