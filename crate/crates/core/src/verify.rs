//! Verification suites. Each suite runs one group of cross-checks between
//! independent routes (closed forms, series, quadrature, Monte Carlo) and
//! returns one [`Report`] per check, with its tolerance pinned here.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{combined_max_z, discrete_qv, empirical_cov, lrd_exponent, lrd_profile, selfsim_residual, weighted_qv, CovEstimate, Report};
use crate::error::{Error, Result};
use crate::gp_sampler::{required_j_range, sample_exact, sample_series, sample_vartheta, Grid};
use crate::hiergroup::{sphere_size_f64, HierParams};
use crate::kernels::{
    covariance, h_bounds, h_osc, kernel_rep_covariance, rho_integrates_to_onsfbm, spatial_cov, spectral_covariance, vartheta_cov,
    Family, KernelSpec,
};
use crate::particles::{
    limit_cov_branching, limit_cov_nonbranching, occupation_ensemble, occupation_ensemble_multi, prelimit_cov_branching,
    prelimit_cov_nonbranching, Branching, Regime, Simulator, SupportFn, SystemConfig, ThetaLaw,
};
use crate::quad::Quad;
use crate::rng;
use crate::walk::{green_function, radial_convolve, transition_prob, transition_radial, transition_series_oracle};

/// A group of checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Closed-form transition probabilities against the Poissonised n-step series.
    Transition,
    /// Normalisation, Chapman-Kolmogorov, log-periodicity of `h`, the ofBm decomposition.
    Identities,
    /// Spectral, indicator-kernel and rho routes against direct covariances.
    Kernels,
    /// Green function against quadrature.
    Green,
    /// Exact and series samplers against analytic covariances.
    Sampler,
    /// No-branching system: pre-limit convergence and Monte Carlo.
    Nonbranching,
    /// Branching systems: pre-limit convergence and Monte Carlo.
    Branching,
    /// Spatial covariance of the high-gamma limit and the vartheta process.
    Spatial,
    /// Quadratic variation estimators.
    Qv,
    /// Long-range dependence, self-similarity, increment bounds, non-Markov, boundary H.
    Properties,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Transition,
        Suite::Identities,
        Suite::Kernels,
        Suite::Green,
        Suite::Sampler,
        Suite::Nonbranching,
        Suite::Branching,
        Suite::Spatial,
        Suite::Qv,
        Suite::Properties,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Transition => "transition",
            Suite::Identities => "identities",
            Suite::Kernels => "kernels",
            Suite::Green => "green",
            Suite::Sampler => "sampler",
            Suite::Nonbranching => "nonbranching",
            Suite::Branching => "branching",
            Suite::Spatial => "spatial",
            Suite::Qv => "qv",
            Suite::Properties => "properties",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite '{s}'")))
    }
}

/// Runs `suite`; Monte Carlo checks derive their seeds from `seed`.
pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Report>> {
    match suite {
        Suite::Transition => transition(),
        Suite::Identities => identities(),
        Suite::Kernels => kernels(),
        Suite::Green => green(),
        Suite::Sampler => sampler(seed),
        Suite::Nonbranching => nonbranching(seed),
        Suite::Branching => branching(seed),
        Suite::Spatial => spatial(seed),
        Suite::Qv => qv(seed),
        Suite::Properties => properties(),
    }
}

fn sub_seed(seed: u64, k: u64) -> u64 {
    rng::derive_seed(seed, k)
}

fn p(m: u32, c: f64) -> Result<HierParams> {
    HierParams::new(m, c)
}

/// Kernels on the `M = 2, c = 1/2` hierarchy: `a = 1/4`, `b = 7/4`.
fn kspec(family: Family, h: f64) -> Result<KernelSpec> {
    KernelSpec::from_params(family, h, &p(2, 0.5)?)
}

fn rel(x: f64, reference: f64) -> f64 {
    (x - reference).abs() / reference.abs()
}

/// Number of `k` with `xs[k + 1] >= xs[k]`.
fn increases(xs: &[f64]) -> f64 {
    xs.windows(2).filter(|w| !(w[1] < w[0])).count() as f64
}

fn transition() -> Result<Vec<Report>> {
    let hp = p(3, 1.5)?;
    let mut out = Vec::new();
    for t in [0.1f64, 1.0, 10.0] {
        let n_max = (t + 12.0 * t.sqrt() + 40.0) as u32;
        let mut worst: f64 = 0.0;
        for d in 0..=6 {
            let closed = transition_prob(t, d, &hp)?;
            let series = transition_series_oracle(t, d, &hp, n_max)?;
            worst = worst.max((closed - series).abs());
        }
        out.push(Report::at_most(
            "transition closed form vs n-step series, max abs error over d = 0..6",
            &[("M", "3".into()), ("c", "1.5".into()), ("t", t.to_string())],
            worst,
            1e-9,
        ));
    }
    Ok(out)
}

fn identities() -> Result<Vec<Report>> {
    let hp = p(3, 1.5)?;
    let mut out = Vec::new();
    for t in [0.1f64, 1.0, 10.0] {
        // shells beyond J carry at most t a^J
        let big_j = ((1e-14 / t).ln() / hp.a.ln()).ceil() as u32;
        let mut s = transition_prob(t, 0, &hp)?;
        for j in 1..=big_j {
            s += sphere_size_f64(j, 3) * transition_prob(t, j, &hp)?;
        }
        out.push(Report::at_most(
            "normalisation |1 - sum_y p_t(0,y)|",
            &[("M", "3".into()), ("c", "1.5".into()), ("t", t.to_string())],
            (1.0 - s).abs(),
            1e-10,
        ));
    }
    let mut ck: f64 = 0.0;
    for (s, t) in [(0.3, 0.7), (1.0, 2.5), (4.0, 6.0)] {
        let conv = radial_convolve(&transition_radial(s, 50, &hp)?, &transition_radial(t, 50, &hp)?)?;
        for d in 0..8 {
            ck = ck.max((conv.values[d as usize] - transition_prob(s + t, d, &hp)?).abs());
        }
    }
    out.push(Report::at_most(
        "Chapman-Kolmogorov residual max |p_s * p_t - p_(s+t)|",
        &[("M", "3".into()), ("c", "1.5".into())],
        ck,
        1e-8,
    ));
    let o = kspec(Family::OfBm, 0.75)?;
    let mut lp: f64 = 0.0;
    for i in 0..100 {
        let t = 1e-4 * 1e8f64.powf(i as f64 / 99.0);
        lp = lp.max((h_osc(o.a * t, &o)? - h_osc(t, &o)?).abs());
    }
    out.push(Report::at_most("log-periodicity max |h(a t) - h(t)| over 100 points", &[("H", "0.75".into())], lp, 1e-12));
    let grid: Vec<f64> = (1..=10).map(|i| 0.3 * i as f64).collect();
    for h in [0.6, 0.75, 0.9] {
        let (fb, sf, eta) = (kspec(Family::OfBm, h)?, kspec(Family::OsfBm, h)?, kspec(Family::Eta, h)?);
        let mut worst: f64 = 0.0;
        for &s in &grid {
            for &t in &grid {
                let lhs = 2.0 * covariance(&fb, s, t)?;
                let rhs = 2.0 * covariance(&sf, s, t)? + covariance(&eta, s, t)?;
                worst = worst.max((lhs - rhs).abs());
            }
        }
        out.push(Report::at_most("2 cov_ofBm = 2 cov_osfBm + cov_eta on a 10x10 grid", &[("H", h.to_string())], worst, 1e-12));
    }
    Ok(out)
}

fn kernels() -> Result<Vec<Report>> {
    let grid = [0.5, 1.0, 1.5, 2.5, 4.0];
    let mut cases = Vec::new();
    for h in [0.6, 0.75, 0.9] {
        cases.push((Family::OfBm, h));
        cases.push((Family::OsfBm, h));
    }
    for h in [1.1, 1.25, 1.4] {
        cases.push((Family::OnsfBm, h));
    }
    let mut out = Vec::new();
    for (fam, h) in cases {
        let sp = kspec(fam, h)?;
        let (mut spectral, mut indicator): (f64, f64) = (0.0, 0.0);
        for (i, &s) in grid.iter().enumerate() {
            for &t in &grid[i..] {
                let c = covariance(&sp, s, t)?;
                spectral = spectral.max(rel(spectral_covariance(&sp, s, t)?, c));
                indicator = indicator.max(rel(kernel_rep_covariance(&sp, s, t)?, c));
            }
        }
        let params = [("family", fam.name().to_string()), ("H", h.to_string())];
        out.push(Report::at_most("spectral route, max relative error on a 5x5 grid", &params, spectral, 1e-5));
        out.push(Report::at_most("indicator-kernel route, max relative error on a 5x5 grid", &params, indicator, 1e-5));
    }
    for h in [1.1, 1.25, 1.4] {
        let rho = kspec(Family::Rho, h - 1.0)?;
        let onsf = kspec(Family::OnsfBm, h)?;
        let mut worst: f64 = 0.0;
        for (s, t) in [(1.0, 1.0), (0.7, 1.6), (2.5, 0.5)] {
            worst = worst.max(rel(rho_integrates_to_onsfbm(&rho, s, t)?, covariance(&onsf, s, t)?));
        }
        out.push(Report::at_most("rho double integral vs onsfBm covariance, max relative error", &[("H", h.to_string())], worst, 1e-5));
    }
    Ok(out)
}

fn green() -> Result<Vec<Report>> {
    let hp = p(4, 2.0)?;
    // int_0^1 p dt + int_0^(ln T) p(e^u) e^u du + tail, p_t ~ t^-(gamma+1)
    let big_t: f64 = 1e13;
    let q = Quad::new(1e-13, 1e-9);
    let breaks: Vec<f64> = (0..=big_t.ln().ceil() as usize).map(|k| k as f64).collect();
    let end = breaks.last().copied().unwrap_or(0.0).exp();
    let mut worst: f64 = 0.0;
    for d in 0..=5 {
        let head = q.integrate(|t| transition_prob(t, d, &hp).unwrap_or(f64::NAN), 0.0, 1.0)?.value;
        let body = q.integrate_points(|u| transition_prob(u.exp(), d, &hp).unwrap_or(f64::NAN) * u.exp(), &breaks)?.value;
        let tail = transition_prob(end, d, &hp)? * end / hp.gamma;
        worst = worst.max((head + body + tail - green_function(d, &hp)?).abs());
    }
    let params = [("M", "4".to_string()), ("c", "2".to_string())];
    Ok(vec![
        Report::at_most("Green function vs quadrature, max abs error over d = 0..5", &params, worst, 1e-6),
        Report::at_most("D = G(0) = 9/7", &params, rel(green_function(0, &hp)?, 9.0 / 7.0), 1e-14),
        Report::at_most("A = G(1) = 3/7", &params, rel(green_function(1, &hp)?, 3.0 / 7.0), 1e-14),
    ])
}

fn sampler(seed: u64) -> Result<Vec<Report>> {
    let grid = Grid::new((0..8).map(|k| 2.0 * k as f64 / 7.0).collect())?;
    let t = grid.times().to_vec();
    let n = 10_000;
    let mut out = Vec::new();
    for (k, fam) in [Family::OfBm, Family::OsfBm].into_iter().enumerate() {
        let sp = kspec(fam, 0.75)?.with_tol(1e-9)?;
        let reference = |i: usize, j: usize| covariance(&sp, t[i], t[j]).unwrap_or(f64::NAN);
        let exact = empirical_cov(&sample_exact(&sp, &grid, n, sub_seed(seed, 2 * k as u64))?)?;
        let series = empirical_cov(&sample_series(&sp, &grid, n, -40..=40, sub_seed(seed, 2 * k as u64 + 1))?)?;
        let params = [("family", fam.name().to_string()), ("H", "0.75".into()), ("paths", n.to_string())];
        out.push(Report::at_most("exact sampler, max z vs analytic covariance", &params, exact.max_z(reference), 4.0));
        out.push(Report::at_most("series sampler, max z vs analytic covariance", &params, series.max_z(reference), 4.0));
        out.push(Report::at_most("exact vs series, max combined z", &params, combined_max_z(&exact, &series), 4.0));
    }
    Ok(out)
}

const ST: [(f64, f64); 3] = [(0.5, 0.5), (0.5, 1.0), (1.0, 1.0)];

/// Relative errors of `prelimit(T_n)` against `limit` for `n = 1..=n_max`,
/// worst over `ST`, one entry per `n`.
fn convergence(
    n_max: i32,
    scale: f64,
    prelimit: impl Fn(f64, f64, f64) -> Result<f64>,
    limit: impl Fn(f64, f64) -> Result<f64>,
) -> Result<Vec<Vec<f64>>> {
    ST.iter()
        .map(|&(s, t)| {
            let l = limit(s, t)?;
            (1..=n_max).map(|n| Ok(rel(prelimit(s, t, scale.powi(n))?, l))).collect()
        })
        .collect()
}

fn convergence_reports(out: &mut Vec<Report>, label: &str, params: &[(&str, String)], errs: &[Vec<f64>], tol: f64) {
    let n = errs[0].len();
    let last = errs.iter().map(|e| e[n - 1]).fold(0.0, f64::max);
    let bad: f64 = errs.iter().map(|e| increases(e)).sum();
    let mut p = params.to_vec();
    p.push(("n", n.to_string()));
    out.push(Report::at_most(&format!("{label}: relative error to the limit at n"), &p, last, tol));
    out.push(Report::at_most(&format!("{label}: increases of the relative error over n = 1..n"), &p, bad, 0.0));
}

/// Max z of a `[0, 0.5, 1]` Monte Carlo estimate against `reference` at `(s,t) in {0.5, 1}^2`.
fn mc_z(est: &CovEstimate, reference: impl Fn(f64, f64) -> Result<f64>) -> Result<f64> {
    let t = &est.grid;
    let mut worst: f64 = 0.0;
    for i in 1..3 {
        for j in 1..3 {
            worst = worst.max((est.get(i, j) - reference(t[i], t[j])?).abs() / est.se_at(i, j));
        }
    }
    Ok(worst)
}

fn nonbranching(seed: u64) -> Result<Vec<Report>> {
    let hp = p(2, 0.5)?;
    let law = ThetaLaw::Poisson(1.0);
    let errs = convergence(
        6,
        4.0,
        |s, t, time| prelimit_cov_nonbranching(s, t, time, &law, &hp),
        |s, t| limit_cov_nonbranching(s, t, &law, &hp),
    )?;
    let params = [("M", "2".to_string()), ("c", "0.5".into()), ("T_n", "4^n".into())];
    let mut out = Vec::new();
    convergence_reports(&mut out, "no-branching pre-limit", &params, &errs, 1e-4);
    let time = 64.0;
    let phi = SupportFn::delta(2);
    let cfg = SystemConfig::new(hp, law.clone(), Branching::None, Regime::NoBranchLowGamma)
        .with_time(time, 1.0)
        .with_policy_radius(&phi)?;
    let grid = Grid::new(vec![0.0, 0.5, 1.0])?;
    let reps = 2000;
    let est = empirical_cov(&occupation_ensemble(&cfg, &phi, &grid, reps, sub_seed(seed, 0), Simulator::Reduced)?)?;
    let z = mc_z(&est, |s, t| prelimit_cov_nonbranching(s, t, time, &law, &hp))?;
    out.push(Report::at_most(
        "no-branching Monte Carlo vs pre-limit covariance, max z",
        &[("M", "2".into()), ("c", "0.5".into()), ("T", time.to_string()), ("R", cfg.truncation_radius.to_string()), ("replicas", reps.to_string())],
        z,
        3.0,
    ));
    Ok(out)
}

fn branching(seed: u64) -> Result<Vec<Report>> {
    let mut out = Vec::new();
    let hp = p(9, 2.0)?;
    let errs = convergence(5, 4.5, |s, t, time| prelimit_cov_branching(s, t, time, 1.0, &hp), |s, t| limit_cov_branching(s, t, 1.0, &hp))?;
    let params = [("M", "9".to_string()), ("c", "2".into()), ("V", "1".into()), ("T_n", "4.5^n".into())];
    convergence_reports(&mut out, "branching pre-limit, osfBm limit", &params, &errs, 1e-2);
    let time = 4.5f64.powi(3);
    let phi = SupportFn::delta(9);
    let cfg = SystemConfig::new(hp, ThetaLaw::Poisson(1.0), Branching::Critical(1.0), Regime::BranchMidGamma)
        .with_time(time, 1.0)
        .with_policy_radius(&phi)?;
    let grid = Grid::new(vec![0.0, 0.5, 1.0])?;
    let reps = 2000;
    let est = empirical_cov(&occupation_ensemble(&cfg, &phi, &grid, reps, sub_seed(seed, 0), Simulator::Reduced)?)?;
    let z = mc_z(&est, |s, t| prelimit_cov_branching(s, t, time, 1.0, &hp))?;
    out.push(Report::at_most(
        "branching Monte Carlo vs pre-limit covariance, max z",
        &[("M", "9".into()), ("c", "2".into()), ("T", time.to_string()), ("R", cfg.truncation_radius.to_string()), ("replicas", reps.to_string())],
        z,
        3.0,
    ));
    let hp = p(2, 0.5)?;
    let errs = convergence(6, 4.0, |s, t, time| prelimit_cov_branching(s, t, time, 1.0, &hp), |s, t| limit_cov_branching(s, t, 1.0, &hp))?;
    let params = [("M", "2".to_string()), ("c", "0.5".into()), ("V", "1".into()), ("H_T", "T".into()), ("T_n", "4^n".into())];
    convergence_reports(&mut out, "high-density branching pre-limit, onsfBm limit", &params, &errs, 1e-2);
    Ok(out)
}

fn spatial(seed: u64) -> Result<Vec<Report>> {
    let hp = p(4, 2.0)?;
    let mut out = Vec::new();
    let balls: Vec<SupportFn> = (0..=2).map(|r| SupportFn::ball_indicator(4, r)).collect::<Result<_>>()?;
    let time = 1e3;
    let cfg = SystemConfig::new(hp, ThetaLaw::Poisson(1.0), Branching::None, Regime::HighGamma)
        .with_time(time, 1.0)
        .with_policy_radius(&balls[2])?;
    let grid = Grid::new(vec![0.0, 1.0])?;
    let reps = 2000;
    let ens = occupation_ensemble_multi(&cfg, &balls, &grid, reps, sub_seed(seed, 0))?;
    // rows of <X_T(1), 1_(B_s)>, s = 0, 1, 2
    let values: Vec<f64> = (0..reps).flat_map(|i| ens.iter().map(move |e| e.path(i)[1])).collect();
    let est = CovEstimate::from_samples(&[0.0, 1.0, 2.0], &values)?;
    let mut z: f64 = 0.0;
    for s in 0..3 {
        for t in 0..3 {
            z = z.max((est.get(s, t) - spatial_cov(s as u32, t as u32, &hp)?).abs() / est.se_at(s, t));
        }
    }
    out.push(Report::at_most(
        "Monte Carlo cov <X_T(1), 1_(B_s)> vs 2 D M^(s^t) (M/c)^(s v t), max z over s,t in 0..2",
        &[("M", "4".into()), ("c", "2".into()), ("T", time.to_string()), ("R", cfg.truncation_radius.to_string()), ("replicas", reps.to_string())],
        z,
        3.0,
    ));
    let pts = [0.3, 1.0, 2.2, 5.0];
    let mut tri: f64 = 0.0;
    for i in 0..4 {
        for j in i..4 {
            for k in j..4 {
                let (s, t, u) = (pts[i], pts[j], pts[k]);
                let lhs = vartheta_cov(s, u, &hp)? * vartheta_cov(t, t, &hp)?;
                let rhs = vartheta_cov(s, t, &hp)? * vartheta_cov(t, u, &hp)?;
                tri = tri.max(rel(rhs, lhs));
            }
        }
    }
    out.push(Report::at_most("vartheta triangular identity, max relative residual", &[("M", "4".into()), ("c", "2".into())], tri, 1e-12));
    let g = Grid::new(vec![0.0, 0.5, 1.0, 2.0, 3.0])?;
    let n = 10_000;
    let est = empirical_cov(&sample_vartheta(&g, &hp, n, sub_seed(seed, 1))?)?;
    let t = g.times();
    let z = est.max_z(|i, j| vartheta_cov(t[i], t[j], &hp).unwrap_or(f64::NAN));
    out.push(Report::at_most("vartheta sampler, max z vs analytic covariance", &[("M", "4".into()), ("c", "2".into()), ("paths", n.to_string())], z, 4.0));
    Ok(out)
}

fn qv(seed: u64) -> Result<Vec<Report>> {
    let mut out = Vec::new();
    let (h, horizon, paths, chunk) = (0.75, 1.0, 100usize, 10usize);
    for (k, fam) in [Family::OfBm, Family::OsfBm].into_iter().enumerate() {
        let sp = kspec(fam, h)?.with_tol(1e-5)?;
        let a = sp.a;
        let eps: Vec<f64> = (4..=8).map(|n| a.powi(n)).collect();
        let step = a.powi(10);
        let n_steps = ((horizon + eps[0]) / step).round() as usize;
        let grid = Grid::uniform(step, n_steps)?;
        let budget = sp.tol * covariance(&sp, grid.t_max(), grid.t_max())?;
        let range = required_j_range(&sp, 0..=0, grid.t_max(), budget);
        let h_eps: Vec<f64> = eps.iter().map(|&e| h_osc(e, &sp)).collect::<Result<_>>()?;
        // v[n][path], u[path] at the finest eps
        let mut v = vec![Vec::with_capacity(paths); eps.len()];
        let mut u = Vec::with_capacity(paths);
        for c in 0..paths / chunk {
            let ens = sample_series(&sp, &grid, chunk, range.clone(), sub_seed(seed, (k * 1000 + c) as u64))?;
            for x in ens.paths() {
                for (n, &e) in eps.iter().enumerate() {
                    v[n].push(weighted_qv(x, &grid, e, horizon, &sp)?);
                }
                u.push(discrete_qv(x, &grid, eps[4], horizon, h)? / h_eps[4]);
            }
        }
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let mean_v = mean(&v[4]);
        let max_dev: Vec<f64> = v.iter().map(|vs| vs.iter().map(|x| (x - horizon).abs()).fold(0.0, f64::max)).collect();
        let params = [("family", fam.name().to_string()), ("H", h.to_string()), ("paths", paths.to_string()), ("grid step", "a^10".into())];
        out.push(Report::at_most("ensemble mean of V_eps/h_eps at eps = a^8, relative error to T = 1", &params, rel(mean_v, horizon), 0.05));
        out.push(Report::at_most("increases of the per-path max |V_eps/h_eps - T| over eps = a^4..a^8", &params, increases(&max_dev), 0.0));
        out.push(Report::at_most("U vs V estimators at eps = a^8, relative difference of ensemble means", &params, rel(mean(&u), mean_v), 0.02));
    }
    Ok(out)
}

fn properties() -> Result<Vec<Report>> {
    let mut out = Vec::new();
    let taus: Vec<f64> = (0..=16).map(|k| 10f64.powf(2.0 + 0.25 * k as f64)).collect();
    let spread = |xs: &[f64]| {
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo > 0.0 {
            hi / lo
        } else {
            f64::INFINITY
        }
    };
    let uvst = (0.0, 1.0, 1.0, 2.0);
    for (fam, h) in [(Family::OfBm, 0.75), (Family::OsfBm, 0.75), (Family::OnsfBm, 1.25)] {
        let sp = kspec(fam, h)?;
        let e = lrd_exponent(&sp)?;
        let params = [("family", fam.name().to_string()), ("H", h.to_string()), ("exponent", e.to_string())];
        let prof = lrd_profile(&sp, uvst, &taus, None)?;
        out.push(Report::at_most("LRD profile max/min over tau in [1e2, 1e6] (positive, bounded)", &params, spread(&prof), 2.0));
        for d in [-0.2, 0.2] {
            let perturbed = lrd_profile(&sp, uvst, &taus, Some(e + d))?;
            let p = [("family", fam.name().to_string()), ("H", h.to_string()), ("exponent", (e + d).to_string())];
            out.push(Report::at_least("negative control: perturbed LRD profile max/min diverges", &p, spread(&perturbed), 4.0));
        }
    }
    let grid = [0.3, 1.0, 2.2];
    for (fam, h) in [(Family::OfBm, 0.75), (Family::OsfBm, 0.6), (Family::OnsfBm, 1.3)] {
        let sp = kspec(fam, h)?;
        let mut worst: f64 = 0.0;
        for j in [-3, -1, 1, 2] {
            let lambda = sp.a.powi(j);
            worst = worst.max(selfsim_residual(&sp, lambda, &grid)? / lambda.powf(2.0 * h).max(1.0));
        }
        out.push(Report::at_most(
            "self-similarity residual at lambda = a^j, j in {-3,-1,1,2}, relative to max(1, lambda^2H)",
            &[("family", fam.name().to_string()), ("H", h.to_string())],
            worst,
            1e-12,
        ));
    }
    let pts: Vec<f64> = (0..50).map(|i| 0.05 + 0.2 * i as f64).collect();
    for h in [0.6, 0.75, 0.9] {
        let sp = kspec(Family::OfBm, h)?;
        let (c1, c2) = h_bounds(sp.a, h);
        let mut bad = 0.0;
        for w in pts.windows(2) {
            for (s, t) in [(w[0], w[1]), (pts[0], w[1])] {
                let var = covariance(&sp, t, t)? + covariance(&sp, s, s)? - 2.0 * covariance(&sp, s, t)?;
                let r = var / (t - s).powf(2.0 * h);
                if !(c1 * (1.0 - 1e-10) < r && r < c2 * (1.0 + 1e-10)) {
                    bad += 1.0;
                }
            }
        }
        out.push(Report::at_most("increment-ratio bound violations on a 50-point grid", &[("H", h.to_string())], bad, 0.0));
    }
    let sp = kspec(Family::OfBm, 0.75)?;
    let c = |s, t| covariance(&sp, s, t);
    let residual = c(1.0, 3.0)? * c(2.0, 2.0)? - c(1.0, 2.0)? * c(2.0, 3.0)?;
    out.push(Report::at_least("non-Markov triangular residual of ofBm at (1,2,3)", &[("H", "0.75".into())], residual.abs(), 1e-6));
    let mut residuals = Vec::new();
    for h in [0.51, 0.501, 0.5001] {
        let sp = kspec(Family::OfBm, h)?;
        let k = 1.0 - sp.a.powf(2.0 * h - 1.0);
        let mut worst: f64 = 0.0;
        for s in [0.5, 1.0, 2.0] {
            for t in [0.5, 1.0, 2.0] {
                worst = worst.max((k * covariance(&sp, s, t)? - f64::min(s, t)).abs());
            }
        }
        residuals.push(worst);
    }
    out.push(Report::at_most(
        "boundary H: increases of max |(1 - a^(2H-1)) cov - min(s,t)| over H = 0.51, 0.501, 0.5001",
        &[("family", "ofBm".into())],
        increases(&residuals),
        0.0,
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
        assert_eq!(serde_json::to_string(&Suite::Qv).unwrap(), "\"qv\"");
    }

    #[test]
    fn helpers() {
        assert_eq!(increases(&[3.0, 2.0, 1.0]), 0.0);
        assert_eq!(increases(&[3.0, 2.0, 2.0, f64::NAN]), 2.0);
        assert_ne!(sub_seed(1, 0), sub_seed(1, 1));
    }

    #[test]
    fn fast_suites_pass() {
        for s in [Suite::Transition, Suite::Identities, Suite::Green] {
            let reports = run_suite(s, 0).unwrap();
            assert!(!reports.is_empty());
            for r in reports {
                assert!(r.pass, "{s}: {} = {:e}", r.check, r.statistic);
            }
        }
    }
}
