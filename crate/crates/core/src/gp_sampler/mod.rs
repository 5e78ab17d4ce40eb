//! Gaussian path samplers: exact sampling from a Gram matrix, the
//! independent-Brownian-motion series for ofBm/osfBm/onsfBm, and the
//! time-inhomogeneous diffusion `vartheta`.

mod io;

use std::ops::RangeInclusive;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use io::{read_binary, write_binary, write_csv, BINARY_MAGIC, BINARY_VERSION};

use crate::error::{Error, Result};
use crate::hiergroup::HierParams;
use crate::kernels::{covariance, gram_matrix, Family, KernelSpec};
use crate::rng;
use crate::walk::green_function;

/// Strictly increasing, finite, non-negative observation times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    times: Vec<f64>,
}

impl Grid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Grid("grid is empty".into()));
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::Grid("grid times must be finite and >= 0".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Grid("grid times must be strictly increasing".into()));
        }
        Ok(Self { times })
    }

    /// `n + 1` equally spaced points `0, step, ..., n step`.
    pub fn uniform(step: f64, n: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) || n == 0 {
            return Err(Error::Grid("uniform grid needs step > 0 and n >= 1".into()));
        }
        Self::new((0..=n).map(|k| k as f64 * step).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMeta {
    pub seed: u64,
    pub generator: String,
    pub spec: Option<KernelSpec>,
    pub config_digest: Option<String>,
    /// Diagonal jitter added before factorising (exact sampler only).
    pub jitter: f64,
}

impl EnsembleMeta {
    pub fn new(seed: u64, generator: &str, spec: Option<KernelSpec>) -> Self {
        Self { seed, generator: generator.into(), spec, config_digest: None, jitter: 0.0 }
    }
}

/// `n_paths` paths on a common grid, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    pub grid: Grid,
    pub n_paths: usize,
    pub values: Vec<f64>,
    pub meta: EnsembleMeta,
}

impl PathEnsemble {
    pub fn from_paths(grid: Grid, paths: Vec<Vec<f64>>, meta: EnsembleMeta) -> Result<Self> {
        let n_times = grid.len();
        if paths.iter().any(|p| p.len() != n_times) {
            return Err(Error::Grid("path length does not match grid".into()));
        }
        let n_paths = paths.len();
        Ok(Self { grid, n_paths, values: paths.concat(), meta })
    }

    pub fn n_times(&self) -> usize {
        self.grid.len()
    }

    pub fn path(&self, i: usize) -> &[f64] {
        let n = self.n_times();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_times())
    }
}

fn normals(rng: &mut rng::Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Lower Cholesky factor of the rows with positive variance.
#[derive(Debug, Clone)]
pub struct Factor {
    /// Indices of the rows with positive variance.
    pub active: Vec<usize>,
    /// Row-major lower triangle over `active`.
    pub lower: Vec<f64>,
    pub jitter: f64,
    pub dim: usize,
}

const JITTERS: [f64; 6] = [0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10];

/// Cholesky factorisation with escalating diagonal jitter (relative to the
/// largest variance). Rows with exactly zero variance must be zero rows and
/// are sampled as the constant 0.
pub fn cholesky(gram: &[f64], dim: usize) -> Result<Factor> {
    assert_eq!(gram.len(), dim * dim);
    let mut active = Vec::new();
    for i in 0..dim {
        let d = gram[i * dim + i];
        if d > 0.0 {
            active.push(i);
        } else if d < 0.0 || (0..dim).any(|j| gram[i * dim + j] != 0.0) {
            return Err(Error::NotPsd { minor: i + 1, jitter: 0.0 });
        }
    }
    let n = active.len();
    let scale = active.iter().map(|&i| gram[i * dim + i]).fold(0.0, f64::max);
    let mut worst = 0;
    for &jit in &JITTERS {
        let mut l = vec![0.0; n * n];
        let mut failed = None;
        'outer: for r in 0..n {
            for c in 0..=r {
                let mut s = gram[active[r] * dim + active[c]];
                if r == c {
                    s += jit * scale;
                }
                for k in 0..c {
                    s -= l[r * n + k] * l[c * n + k];
                }
                if r == c {
                    if !(s > 0.0) {
                        failed = Some(active[r]);
                        break 'outer;
                    }
                    l[r * n + r] = s.sqrt();
                } else {
                    l[r * n + c] = s / l[c * n + c];
                }
            }
        }
        match failed {
            None => return Ok(Factor { active, lower: l, jitter: jit * scale, dim }),
            Some(i) => worst = i,
        }
    }
    Err(Error::NotPsd { minor: worst + 1, jitter: JITTERS[JITTERS.len() - 1] * scale })
}

impl Factor {
    fn draw(&self, rng: &mut rng::Rng) -> Vec<f64> {
        let n = self.active.len();
        let z = normals(rng, n);
        let mut out = vec![0.0; self.dim];
        for r in 0..n {
            let row = &self.lower[r * n..r * n + r + 1];
            out[self.active[r]] = row.iter().zip(&z).map(|(a, b)| a * b).sum();
        }
        out
    }
}

fn par_paths<F: Fn(&mut rng::Rng) -> Result<Vec<f64>> + Sync>(n: usize, seed: u64, f: F) -> Result<Vec<Vec<f64>>> {
    (0..n).into_par_iter().map(|i| f(&mut rng::stream(seed, i as u64))).collect()
}

/// Centered Gaussian paths with the exact covariance of `spec` on `grid`.
pub fn sample_exact(spec: &KernelSpec, grid: &Grid, n: usize, seed: u64) -> Result<PathEnsemble> {
    let gram = gram_matrix(spec, grid.times())?;
    let mut meta = EnsembleMeta::new(seed, "exact", Some(*spec));
    sample_gram(&gram, grid, n, seed, &mut meta)
}

/// Paths with covariance `gram` (row-major, over `grid`).
pub fn sample_gram(gram: &[f64], grid: &Grid, n: usize, seed: u64, meta: &mut EnsembleMeta) -> Result<PathEnsemble> {
    let factor = cholesky(gram, grid.len())?;
    meta.jitter = factor.jitter;
    let paths = par_paths(n, seed, |r| Ok(factor.draw(r)))?;
    PathEnsemble::from_paths(grid.clone(), paths, meta.clone())
}

/// `(xi_t + xi_-t)/sqrt 2` for ofBm extended to the whole line; an osfBm.
pub fn sample_even_part(spec: &KernelSpec, grid: &Grid, n: usize, seed: u64) -> Result<PathEnsemble> {
    if spec.family != Family::OfBm {
        return Err(Error::Unsupported("even part is defined for ofBm".into()));
    }
    let m = grid.len();
    let pts: Vec<f64> = grid.times().iter().copied().chain(grid.times().iter().map(|&t| -t)).collect();
    let w = |x: f64| covariance(spec, x.abs(), x.abs());
    let mut gram = vec![0.0; 4 * m * m];
    for i in 0..2 * m {
        for j in 0..=i {
            let (s, t) = (pts[i], pts[j]);
            let v = 0.5 * (w(s)? + w(t)? - w(s - t)?);
            gram[i * 2 * m + j] = v;
            gram[j * 2 * m + i] = v;
        }
    }
    let factor = cholesky(&gram, 2 * m)?;
    let paths = par_paths(n, seed, |r| {
        let x = factor.draw(r);
        Ok((0..m).map(|k| (x[k] + x[m + k]) / std::f64::consts::SQRT_2).collect())
    })?;
    let mut meta = EnsembleMeta::new(seed, "even-part", Some(*spec));
    meta.jitter = factor.jitter;
    PathEnsemble::from_paths(grid.clone(), paths, meta)
}

/// Omitted-scale covariance bounds `(below, above)` of the series: terms
/// with `j < j_lo` and `j > j_hi`, uniformly over `[0, t_max]^2`.
fn tail_bounds(spec: &KernelSpec, j_lo: i32, j_hi: i32, t_max: f64) -> (f64, f64) {
    let (a, b, h) = (spec.a, spec.b_eff, spec.h);
    let lam_lo = b * a.powi(j_lo - 1);
    let lam_hi = b * a.powi(j_hi + 1);
    // a term's variance is increasing in t and bounded by
    // lambda^(1-2H) t (large lambda) and lambda^(3-2H) t^3/3 (small lambda)
    let below = lam_lo.powf(1.0 - 2.0 * h) * t_max / (1.0 - a.powf(2.0 * h - 1.0));
    let above = lam_hi.powf(3.0 - 2.0 * h) * t_max.powi(3) / (3.0 * (1.0 - a.powf(3.0 - 2.0 * h)));
    if spec.family == Family::OfBm {
        // covariance is half the nu part (lambda^-2H (1-e^-x)^2 <= min(1, x^2))
        // plus the osfBm part
        let nu_below = 0.5 * lam_lo.powf(-2.0 * h) / (1.0 - a.powf(2.0 * h));
        let nu_above = 0.5 * lam_hi.powf(2.0 - 2.0 * h) * t_max * t_max / (1.0 - a.powf(2.0 - 2.0 * h));
        (below + nu_below, above + nu_above)
    } else {
        (below, above)
    }
}

/// Upper bound on `max |cov_series - cov|` over `[0, t_max]^2` from the
/// scales outside `j_range`.
pub fn truncation_bound(spec: &KernelSpec, j_range: RangeInclusive<i32>, t_max: f64) -> f64 {
    let (lo, hi) = tail_bounds(spec, *j_range.start(), *j_range.end(), t_max);
    lo + hi
}

/// Smallest widening of `j_range` whose truncation bound is at most `tol`.
pub fn required_j_range(spec: &KernelSpec, j_range: RangeInclusive<i32>, t_max: f64, tol: f64) -> RangeInclusive<i32> {
    let (mut lo, mut hi) = (*j_range.start(), *j_range.end());
    for _ in 0..10_000 {
        let (below, above) = tail_bounds(spec, lo, hi, t_max);
        if below + above <= tol {
            break;
        }
        if below >= above {
            lo -= 1;
        } else {
            hi += 1;
        }
    }
    lo..=hi
}

/// `((1-e^-2x)/2x - ((1-e^-x)/x)^2)`: the conditional variance factor of
/// the OU endpoint given the Brownian increment.
fn ou_residual(x: f64) -> f64 {
    if x < 0.1 {
        // coefficients of (-x)^n: 2^n/(n+1)! - sum_k 1/((k+1)!(n-k+1)!)
        let mut fact = [1.0f64; 24];
        for i in 1..24 {
            fact[i] = fact[i - 1] * i as f64;
        }
        let mut s = 0.0;
        let mut xn = x * x;
        for n in 2..20 {
            let conv: f64 = (0..=n).map(|k| 1.0 / (fact[k + 1] * fact[n - k + 1])).sum();
            let c = 2f64.powi(n as i32) / fact[n + 1] - conv;
            s += if n % 2 == 0 { c * xn } else { -c * xn };
            xn *= x;
        }
        s
    } else {
        let phi = -(-x).exp_m1() / x;
        -(-2.0 * x).exp_m1() / (2.0 * x) - phi * phi
    }
}

#[derive(Clone, Copy)]
struct OuStep {
    decay: f64,
    l11: f64,
    l21: f64,
    l22: f64,
}

impl OuStep {
    fn new(lambda: f64, dt: f64) -> Self {
        let x = lambda * dt;
        let sq = dt.sqrt();
        let phi = -(-x).exp_m1() / x;
        Self { decay: (-x).exp(), l11: sq, l21: sq * phi, l22: sq * ou_residual(x).max(0.0).sqrt() }
    }
}

/// Paths of `int_0^t (1 - e^(-lambda (t-r))) d beta_r` on the grid, exact in
/// law: the pair `(beta, OU)` is advanced with its joint Gaussian increment.
fn ou_functional(lambda: f64, times: &[f64], rng: &mut rng::Rng, out: &mut [f64], coef: f64) {
    let (mut bm, mut ou, mut prev) = (0.0, 0.0, 0.0);
    let mut step: Option<(f64, OuStep)> = None;
    for (k, &t) in times.iter().enumerate() {
        let dt = t - prev;
        if dt > 0.0 {
            let st = match step {
                Some((d, s)) if (d - dt).abs() <= 1e-13 * dt => s,
                _ => {
                    let s = OuStep::new(lambda, dt);
                    step = Some((dt, s));
                    s
                }
            };
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            bm += st.l11 * z1;
            ou = st.decay * ou + st.l21 * z1 + st.l22 * z2;
        }
        prev = t;
        out[k] += coef * (bm - ou);
    }
}

/// Series sampler over scales `j in j_range`. For ofBm the path is
/// `[sum_j lambda^-H (1 - e^-lambda t) nu_j + sqrt 2 sum_j lambda^(1/2-H) X_j(t)] / sqrt 2`,
/// for osfBm and onsfBm `sum_j lambda^(1/2-H) X_j(t)`, with `lambda = b a^j`.
///
/// Fails if the omitted scales can move the covariance by more than
/// `spec.tol` times the variance at the last grid time.
pub fn sample_series(spec: &KernelSpec, grid: &Grid, n: usize, j_range: RangeInclusive<i32>, seed: u64) -> Result<PathEnsemble> {
    spec.validate()?;
    let fam = spec.family;
    if !matches!(fam, Family::OfBm | Family::OsfBm | Family::OnsfBm) {
        return Err(Error::Unsupported(format!("no series representation for {fam}")));
    }
    if j_range.is_empty() {
        return Err(Error::InvalidParameter("empty j range".into()));
    }
    let t_max = grid.t_max();
    let budget = spec.tol * covariance(spec, t_max, t_max)?.abs();
    if truncation_bound(spec, j_range.clone(), t_max) > budget {
        let need = required_j_range(spec, j_range.clone(), t_max, budget);
        return Err(Error::Truncation(format!(
            "j range {}..={} too small for tolerance {:e}; need {}..={}",
            j_range.start(),
            j_range.end(),
            spec.tol,
            need.start(),
            need.end()
        )));
    }
    let times = grid.times();
    let (a, b, h) = (spec.a, spec.b_eff, spec.h);
    let paths = par_paths(n, seed, |r| {
        let mut path = vec![0.0; times.len()];
        for j in j_range.clone() {
            let lambda = b * a.powi(j);
            let c = lambda.powf(0.5 - h);
            if fam == Family::OfBm {
                let nu: f64 = r.sample(StandardNormal);
                let c_nu = lambda.powf(-h) * nu / std::f64::consts::SQRT_2;
                for (v, &t) in path.iter_mut().zip(times) {
                    *v += c_nu * -(-lambda * t).exp_m1();
                }
            }
            ou_functional(lambda, times, r, &mut path, c);
        }
        Ok(path)
    })?;
    let label = format!("series[{}..={}]", j_range.start(), j_range.end());
    PathEnsemble::from_paths(grid.clone(), paths, EnsembleMeta::new(seed, &label, Some(*spec)))
}

/// `vartheta_t = sqrt(2 D gamma) t int_0^t u^((gamma-1)/2) d beta_u`, from
/// independent increments of the stochastic integral.
pub fn sample_vartheta(grid: &Grid, params: &HierParams, n: usize, seed: u64) -> Result<PathEnsemble> {
    if params.gamma <= 0.0 {
        return Err(Error::Recurrent { c: params.c });
    }
    let g = params.gamma;
    let scale = (2.0 * green_function(0, params)? * g).sqrt();
    let times = grid.times();
    let sd: Vec<f64> = std::iter::once(0.0)
        .chain(times.iter().copied())
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| ((w[1].powf(g) - w[0].powf(g)) / g).sqrt())
        .collect();
    let paths = par_paths(n, seed, |r| {
        let mut integral = 0.0;
        Ok(times
            .iter()
            .zip(&sd)
            .map(|(&t, &s)| {
                if s > 0.0 {
                    integral += s * r.sample::<f64, _>(StandardNormal);
                }
                scale * t * integral
            })
            .collect())
    })?;
    PathEnsemble::from_paths(grid.clone(), paths, EnsembleMeta::new(seed, "vartheta", None))
}
