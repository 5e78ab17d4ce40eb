//! Estimators and analytic property checks: empirical covariances with
//! standard errors, quadratic-variation functionals, long-range dependence
//! profiles and self-similarity residuals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp_sampler::{Grid, PathEnsemble};
use crate::kernels::{covariance, h_osc, Family, KernelSpec};

/// Sample covariance matrix with Gaussian standard errors
/// `SE^2 = (C_ss C_tt + C_st^2) / n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovEstimate {
    pub grid: Vec<f64>,
    /// Row-major.
    pub cov: Vec<f64>,
    pub se: Vec<f64>,
    pub n_reps: usize,
}

impl CovEstimate {
    /// From `n_reps` rows of `grid.len()` values (row-major).
    pub fn from_samples(grid: &[f64], values: &[f64]) -> Result<Self> {
        let m = grid.len();
        if m == 0 || values.len() % m != 0 {
            return Err(Error::InvalidParameter("sample matrix does not match grid".into()));
        }
        let n = values.len() / m;
        if n < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 replicas, got {n}")));
        }
        let mut mean = vec![0.0; m];
        for row in values.chunks(m) {
            for (acc, v) in mean.iter_mut().zip(row) {
                *acc += v;
            }
        }
        mean.iter_mut().for_each(|v| *v /= n as f64);
        let mut cov = vec![0.0; m * m];
        for row in values.chunks(m) {
            for i in 0..m {
                let di = row[i] - mean[i];
                for j in 0..=i {
                    cov[i * m + j] += di * (row[j] - mean[j]);
                }
            }
        }
        for i in 0..m {
            for j in 0..=i {
                cov[i * m + j] /= (n - 1) as f64;
                cov[j * m + i] = cov[i * m + j];
            }
        }
        let se = (0..m * m)
            .map(|k| {
                let (i, j) = (k / m, k % m);
                ((cov[i * m + i] * cov[j * m + j] + cov[k] * cov[k]) / n as f64).sqrt()
            })
            .collect();
        Ok(Self { grid: grid.to_vec(), cov, se, n_reps: n })
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.dim() + j]
    }

    pub fn se_at(&self, i: usize, j: usize) -> f64 {
        self.se[i * self.dim() + j]
    }

    /// Largest `|estimate - reference| / SE` over all entries; entries with
    /// zero SE count as 0 when they match exactly and infinity otherwise.
    pub fn max_z(&self, reference: impl Fn(usize, usize) -> f64) -> f64 {
        let m = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let d = (self.get(i, j) - reference(i, j)).abs();
                let se = self.se_at(i, j);
                let z = if se > 0.0 {
                    d / se
                } else if d == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = worst.max(z);
            }
        }
        worst
    }
}

pub fn empirical_cov(ens: &PathEnsemble) -> Result<CovEstimate> {
    CovEstimate::from_samples(ens.grid.times(), &ens.values)
}

/// Largest `|a - b| / sqrt(SE_a^2 + SE_b^2)` between two estimates on the
/// same grid.
pub fn combined_max_z(a: &CovEstimate, b: &CovEstimate) -> f64 {
    a.cov
        .iter()
        .zip(&b.cov)
        .zip(a.se.iter().zip(&b.se))
        .map(|((x, y), (sx, sy))| {
            let s = (sx * sx + sy * sy).sqrt();
            if s > 0.0 {
                (x - y).abs() / s
            } else if x == y {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

/// Number of grid steps in `x` when the grid is uniform with step `step`,
/// or an error if `x` is not a multiple of it.
fn aligned_steps(x: f64, step: f64, what: &str) -> Result<usize> {
    let k = (x / step).round();
    if k < 1.0 || (k * step - x).abs() > 1e-9 * x {
        return Err(Error::Grid(format!("{what} = {x} is not aligned with grid step {step}")));
    }
    Ok(k as usize)
}

fn uniform_step(grid: &Grid) -> Result<f64> {
    let t = grid.times();
    if t.len() < 2 || t[0] != 0.0 {
        return Err(Error::Grid("quadratic variation needs a uniform grid starting at 0".into()));
    }
    let step = t[1] - t[0];
    for (k, &x) in t.iter().enumerate() {
        if (x - k as f64 * step).abs() > 1e-9 * step.max(x) {
            return Err(Error::Grid("quadratic variation needs a uniform grid".into()));
        }
    }
    Ok(step)
}

/// `V_eps / h_eps` with `V_eps = eps^-2H int_0^T (x_(t+eps) - x_t)^2 dt`
/// (trapezoid rule on the grid). The grid must be uniform from 0 with step
/// at most `eps/16`, `eps` and `horizon` multiples of it, and reach
/// `horizon + eps`.
pub fn weighted_qv(path: &[f64], grid: &Grid, eps: f64, horizon: f64, spec: &KernelSpec) -> Result<f64> {
    let step = uniform_step(grid)?;
    if path.len() != grid.len() {
        return Err(Error::Grid("path length does not match grid".into()));
    }
    if step > eps / 16.0 * (1.0 + 1e-9) {
        return Err(Error::Grid(format!("grid step {step} coarser than eps/16 = {}", eps / 16.0)));
    }
    let k = aligned_steps(eps, step, "eps")?;
    let n = aligned_steps(horizon, step, "horizon")?;
    if n + k >= path.len() {
        return Err(Error::Grid("grid does not reach horizon + eps".into()));
    }
    let sq = |i: usize| (path[i + k] - path[i]).powi(2);
    let mut integral = 0.5 * (sq(0) + sq(n));
    for i in 1..n {
        integral += sq(i);
    }
    integral *= step;
    Ok(eps.powf(-2.0 * spec.h) * integral / h_osc(eps, spec)?)
}

/// `U_eps = eps^(1-2H) sum_(k=1)^(floor(T/eps)) (x_(k eps) - x_((k-1) eps))^2`
/// on a uniform grid from 0 whose step divides `eps`.
pub fn discrete_qv(path: &[f64], grid: &Grid, eps: f64, horizon: f64, h: f64) -> Result<f64> {
    let step = uniform_step(grid)?;
    if path.len() != grid.len() {
        return Err(Error::Grid("path length does not match grid".into()));
    }
    let k = aligned_steps(eps, step, "eps")?;
    let terms = (horizon / eps + 1e-9).floor() as usize;
    if terms * k >= path.len() {
        return Err(Error::Grid("grid does not reach horizon".into()));
    }
    let s: f64 = (1..=terms).map(|i| (path[i * k] - path[(i - 1) * k]).powi(2)).sum();
    Ok(eps.powf(1.0 - 2.0 * h) * s)
}

/// Default long-range dependence exponent: `2 - 2H` for ofBm, `3 - 2H`
/// for osfBm and onsfBm.
pub fn lrd_exponent(spec: &KernelSpec) -> Result<f64> {
    match spec.family {
        Family::OfBm => Ok(2.0 - 2.0 * spec.h),
        Family::OsfBm | Family::OnsfBm => Ok(3.0 - 2.0 * spec.h),
        f => Err(Error::Unsupported(format!("no increment profile for {f}"))),
    }
}

/// `E(x_v - x_u)(x_(t+tau) - x_(s+tau))`, summed scale by scale so that no
/// cancellation between large covariances occurs.
pub fn increment_cov(spec: &KernelSpec, u: f64, v: f64, s: f64, t: f64, tau: f64) -> Result<f64> {
    spec.validate()?;
    let fam = spec.family;
    lrd_exponent(spec)?;
    let (a, b, h) = (spec.a, spec.b_eff, spec.h);
    let term = |lambda: f64| {
        let common = 0.5 * lambda.powf(-2.0 * h) * -(-lambda * (v - u)).exp_m1() * -(-lambda * (t - s)).exp_m1();
        if fam == Family::OfBm {
            common * (-lambda * (tau + s - v)).exp()
        } else {
            // e^(-lambda(tau+s-v)) - e^(-lambda(tau+s+u))
            common * (-lambda * (tau + s - v)).exp() * -(-lambda * (u + v)).exp_m1()
        }
    };
    // walk out from the scale where lambda tau ~ 1; small lambda terms
    // decay geometrically with ratio a^(2-2H) or a^(3-2H)
    let j0 = ((1.0 / (b * tau.max(t - s).max(1e-300))).ln() / a.ln()).round() as i32;
    let ratio = a.powf(lrd_exponent(spec)?);
    let mut total = term(b * a.powi(j0));
    for dir in [-1, 1] {
        let mut j = j0;
        loop {
            j += dir;
            let x = term(b * a.powi(j));
            total += x;
            if dir == 1 && x < 1e-17 * total {
                total += x * ratio / (1.0 - ratio);
                break;
            }
            if dir == -1 && (x < 1e-300 || x < 1e-18 * total && b * a.powi(j) * tau > 50.0) {
                break;
            }
            if (j - j0).abs() > 100_000 {
                return Err(Error::Truncation("increment covariance scale sum did not converge".into()));
            }
        }
    }
    Ok(total)
}

/// `tau^e E(x_v - x_u)(x_(t+tau) - x_(s+tau))` along `tau_grid`, with the
/// family's exponent unless `exponent` overrides it.
pub fn lrd_profile(
    spec: &KernelSpec,
    (u, v, s, t): (f64, f64, f64, f64),
    tau_grid: &[f64],
    exponent: Option<f64>,
) -> Result<Vec<f64>> {
    if !(0.0 <= u && u < v && v <= s && s < t) {
        return Err(Error::InvalidParameter(format!("need 0 <= u < v <= s < t, got ({u}, {v}, {s}, {t})")));
    }
    let e = match exponent {
        Some(e) => e,
        None => lrd_exponent(spec)?,
    };
    tau_grid
        .iter()
        .map(|&tau| {
            if !(tau > 0.0) {
                return Err(Error::InvalidParameter("tau must be positive".into()));
            }
            Ok(tau.powf(e) * increment_cov(spec, u, v, s, t, tau)?)
        })
        .collect()
}

/// Writes `lambda = a^j kappa` with `kappa in [1, 1/a)`.
pub fn split_scale(lambda: f64, a: f64) -> (i32, f64) {
    let mut j = (lambda.ln() / a.ln()).ceil() as i32;
    let mut kappa = lambda / a.powi(j);
    while kappa < 1.0 {
        j -= 1;
        kappa = lambda / a.powi(j);
    }
    while kappa >= 1.0 / a {
        j += 1;
        kappa = lambda / a.powi(j);
    }
    (j, kappa)
}

/// `max |cov_b(lambda s, lambda t) - lambda^2H cov_(kappa b)(s, t)|` over grid pairs.
pub fn selfsim_residual(spec: &KernelSpec, lambda: f64, grid: &[f64]) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter("lambda must be positive".into()));
    }
    let (_, kappa) = split_scale(lambda, spec.a);
    let scaled = KernelSpec { b_eff: spec.b_eff * kappa, ..*spec };
    let mut worst: f64 = 0.0;
    for &s in grid {
        for &t in grid {
            let lhs = covariance(spec, lambda * s, lambda * t)?;
            let rhs = lambda.powf(2.0 * spec.h) * covariance(&scaled, s, t)?;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

/// Direction of a report's comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub parameters: BTreeMap<String, String>,
    pub statistic: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub pass: bool,
}

impl Report {
    /// Passes when `statistic <= tolerance`.
    pub fn at_most(check: &str, parameters: &[(&str, String)], statistic: f64, tolerance: f64) -> Self {
        Self::build(check, parameters, statistic, tolerance, Bound::AtMost)
    }

    /// Passes when `statistic >= tolerance`.
    pub fn at_least(check: &str, parameters: &[(&str, String)], statistic: f64, tolerance: f64) -> Self {
        Self::build(check, parameters, statistic, tolerance, Bound::AtLeast)
    }

    fn build(check: &str, parameters: &[(&str, String)], statistic: f64, tolerance: f64, bound: Bound) -> Self {
        let pass = match bound {
            Bound::AtMost => statistic <= tolerance,
            Bound::AtLeast => statistic >= tolerance,
        };
        Self {
            check: check.into(),
            parameters: parameters.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            statistic,
            tolerance,
            bound,
            pass,
        }
    }

    /// `<=` or `>=`.
    pub fn relation(&self) -> &'static str {
        match self.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        }
    }
}

#[cfg(test)]
mod tests;
