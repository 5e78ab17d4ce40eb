//! Covariance structures of the oscillatory Gaussian processes: the
//! log-periodic functions `h`, `h~`, `h~~`, closed-form covariances, the
//! spectral and indicator-kernel representations, and the spatial
//! covariances of the high-dimension limit.

mod represent;
mod spatial;
mod spectral;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use represent::{kernel_rep_covariance, rho_integrates_to_onsfbm};
pub use spatial::{spatial_cov, spatial_cov_bruteforce, vartheta_cov};
pub use spectral::{spectral_covariance, spectral_sigma, spectral_variance_w};

use crate::error::{Error, Result};
use crate::hiergroup::HierParams;
use crate::logsum::ExpComb;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Oscillatory fractional Brownian motion.
    OfBm,
    /// Oscillatory sub-fractional Brownian motion.
    OsfBm,
    /// Oscillatory negative sub-fractional Brownian motion.
    OnsfBm,
    Eta,
    /// Derivative process of onsfBm; `h` plays the role of `U`.
    Rho,
    /// Triple-integral form shared by osfBm and onsfBm.
    Unified,
}

impl Family {
    pub const ALL: [Family; 6] = [Family::OfBm, Family::OsfBm, Family::OnsfBm, Family::Eta, Family::Rho, Family::Unified];

    pub fn name(self) -> &'static str {
        match self {
            Family::OfBm => "ofbm",
            Family::OsfBm => "osfbm",
            Family::OnsfBm => "onsfbm",
            Family::Eta => "eta",
            Family::Rho => "rho",
            Family::Unified => "unified",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown kernel family '{s}'")))
    }
}

/// A covariance family with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: Family,
    /// Hurst-type index (`U` for [`Family::Rho`]).
    pub h: f64,
    pub a: f64,
    /// `b`, or `kappa b` for the shifted sequences `kappa a^-n`.
    pub b_eff: f64,
    /// Relative tolerance for truncated scale sums.
    pub tol: f64,
}

pub const DEFAULT_TOL: f64 = 1e-12;

impl KernelSpec {
    pub fn new(family: Family, h: f64, a: f64, b_eff: f64) -> Result<Self> {
        let spec = Self { family, h, a, b_eff, tol: DEFAULT_TOL };
        spec.validate()?;
        Ok(spec)
    }

    /// Kernel with `a` and `b` taken from the walk parameters.
    pub fn from_params(family: Family, h: f64, params: &HierParams) -> Result<Self> {
        Self::new(family, h, params.a, params.b)
    }

    /// Replaces `b` by `kappa b`, `kappa in [1, 1/a)`.
    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        if !(kappa >= 1.0 && kappa < 1.0 / self.a) {
            return Err(Error::InvalidParameter(format!("kappa = {kappa} must lie in [1, 1/a)")));
        }
        self.b_eff *= kappa;
        Ok(self)
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self> {
        self.tol = tol;
        self.validate()?;
        Ok(self)
    }

    /// Admissible range of `h` for the family.
    pub fn h_range(family: Family) -> (f64, f64) {
        match family {
            Family::OfBm | Family::OsfBm | Family::Eta => (0.5, 1.0),
            Family::OnsfBm => (1.0, 1.5),
            Family::Rho => (0.0, 0.5),
            // covers both osfBm and onsfBm ranges; h = 1 is excluded below
            Family::Unified => (0.5, 1.5),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = Self::h_range(self.family);
        if !(self.h > lo && self.h < hi) || (self.family == Family::Unified && self.h == 1.0) {
            return Err(Error::Domain(format!("H = {} outside ({lo}, {hi}) for {}", self.h, self.family)));
        }
        if !(self.a > 0.0 && self.a < 1.0) {
            return Err(Error::InvalidParameter(format!("a = {} must lie in (0, 1)", self.a)));
        }
        if !(self.b_eff > 0.0 && self.b_eff.is_finite()) {
            return Err(Error::InvalidParameter(format!("b = {} must be positive", self.b_eff)));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidParameter(format!("tolerance {} must lie in (0, 1)", self.tol)));
        }
        Ok(())
    }

    fn require_h_in(&self, lo: f64, hi: f64, what: &str) -> Result<()> {
        if self.h > lo && self.h < hi {
            Ok(())
        } else {
            Err(Error::Domain(format!("{what} needs H in ({lo}, {hi}), got {}", self.h)))
        }
    }
}

// Summands x^-2H g(x) with g(x) = e^-x - 1 + x, its third-order analogue, and
// x^-2U (1 - e^-x).
fn h_summand(h: f64) -> ExpComb {
    ExpComb::new(-2.0 * h, &[(0, -1.0), (1, 1.0)], &[(1.0, 1.0)])
}

fn h_neg_summand(h: f64) -> ExpComb {
    ExpComb::new(-2.0 * h, &[(0, -1.0), (1, 1.0), (2, -0.5)], &[(1.0, 1.0)])
}

fn h_small_summand(u: f64) -> ExpComb {
    ExpComb::new(-2.0 * u, &[(0, 1.0)], &[(-1.0, 1.0)])
}

/// `h_t = sum_j (b a^j t)^-2H (e^(-b a^j t) - 1 + b a^j t)`, with `h_0 = 0`.
pub fn h_osc(t: f64, spec: &KernelSpec) -> Result<f64> {
    spec.require_h_in(0.5, 1.0, "h")?;
    check_t(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(h_summand(spec.h).lattice_sum(spec.b_eff * t, spec.a))
}

/// `h~_t`, the third-order analogue of `h` used by onsfBm (negative).
pub fn h_neg(t: f64, spec: &KernelSpec) -> Result<f64> {
    spec.require_h_in(1.0, 1.5, "h~")?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("h~ needs t > 0, got {t}")));
    }
    Ok(h_neg_summand(spec.h).lattice_sum(spec.b_eff * t, spec.a))
}

/// `h~~^U_t = sum_j (b a^j t)^-2U (1 - e^(-b a^j t))`, with `U = spec.h`.
pub fn h_small(t: f64, spec: &KernelSpec) -> Result<f64> {
    spec.require_h_in(0.0, 0.5, "h~~")?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("h~~ needs t > 0, got {t}")));
    }
    Ok(h_small_summand(spec.h).lattice_sum(spec.b_eff * t, spec.a))
}

fn check_t(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time {t} must be finite and >= 0")))
    }
}

/// Bounds `C1 < h_t < C2` for `H in (1/2, 1)`.
pub fn h_bounds(a: f64, h: f64) -> (f64, f64) {
    let c1 = a.powf(2.0 * h - 1.0) * libm::tgamma(2.0 - 2.0 * h) / ((1.0 - a.powf(2.0 * h - 1.0)) * 2.0 * h);
    (c1, a.powf(1.0 - 2.0 * h) * c1)
}

/// Bounds `C1 < |h~_t| < C2` for `H in (1, 3/2)`.
pub fn h_neg_bounds(a: f64, h: f64) -> (f64, f64) {
    let c1 = (libm::tgamma(4.0 - 2.0 * h)
        / (2.0 * h * (2.0 * h - 1.0) * (2.0 * h - 2.0) * (a.powf(2.0 * h - 3.0) - 1.0)))
        .abs();
    (c1, a.powf(2.0 * h - 3.0) * c1)
}

/// Variance-type function `w(t) = t^2H h_t` (or with `h~`); `w(0) = 0`.
fn w_fn(t: f64, h: f64, summand: &ExpComb, spec: &KernelSpec) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.powf(2.0 * h) * summand.lattice_sum(spec.b_eff * t, spec.a)
    }
}

/// Covariance of the family at `(s, t)`.
pub fn covariance(spec: &KernelSpec, s: f64, t: f64) -> Result<f64> {
    spec.validate()?;
    check_t(s)?;
    check_t(t)?;
    let h = spec.h;
    let d = (s - t).abs();
    Ok(match spec.family {
        Family::OfBm => {
            let f = h_summand(h);
            let w = |x| w_fn(x, h, &f, spec);
            0.5 * (w(s) + w(t) - w(d))
        }
        Family::OsfBm | Family::OnsfBm => {
            let f = if spec.family == Family::OsfBm { h_summand(h) } else { h_neg_summand(h) };
            let w = |x| w_fn(x, h, &f, spec);
            w(s) + w(t) - 0.5 * (w(s + t) + w(d))
        }
        Family::Eta => {
            let f = h_summand(h);
            let w = |x| w_fn(x, h, &f, spec);
            w(s + t) - w(s) - w(t)
        }
        Family::Rho => {
            let f = h_small_summand(h);
            let w = |x| w_fn(x, h, &f, spec);
            0.5 * (w(s + t) - w(d))
        }
        Family::Unified => unified_covariance(spec, s, t),
    })
}

/// Scale sum of the triple-integral form, each scale `lambda = b a^j`
/// integrated in closed form:
/// `lambda^-2H / 2 [2g(lambda s) + 2g(lambda t) - g(lambda |t-s|) - g(lambda (s+t))]`.
fn unified_covariance(spec: &KernelSpec, s: f64, t: f64) -> f64 {
    if s == 0.0 || t == 0.0 {
        return 0.0;
    }
    let d = (s - t).abs();
    // g(lambda z) = e^(-lambda z) - 1 + lambda z; constants and linear parts collected
    let f = ExpComb::new(
        -2.0 * spec.h,
        &[(0, -1.0), (1, s.min(t))],
        &[(1.0, s), (1.0, t), (-0.5, d), (-0.5, s + t)],
    );
    f.lattice_sum(spec.b_eff, spec.a)
}

/// Covariance matrix on a grid (row-major).
pub fn gram_matrix(spec: &KernelSpec, grid: &[f64]) -> Result<Vec<f64>> {
    let n = grid.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = covariance(spec, grid[i], grid[j])?;
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
    Ok(out)
}

/// Writes `s,t,value` rows with 17 significant digits.
pub fn write_kernel_table<W: Write>(spec: &KernelSpec, s_grid: &[f64], t_grid: &[f64], mut w: W) -> Result<()> {
    writeln!(w, "s,t,value")?;
    for &s in s_grid {
        for &t in t_grid {
            writeln!(w, "{s:.16e},{t:.16e},{:.16e}", covariance(spec, s, t)?)?;
        }
    }
    Ok(())
}
