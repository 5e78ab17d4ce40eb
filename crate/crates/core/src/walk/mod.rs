//! The c-random walk: geometric jump law, simulation, transition
//! probabilities, semigroup and Green function.
//!
//! Everything is radial: `p_t(x, y)` depends only on `|y - x|`, so
//! computations run shell by shell instead of over the infinite group.

mod radial;
mod trajectory;

pub use radial::{radial_convolve, RadialFn};
pub use trajectory::{sample_jump_length, simulate_path, simulate_trajectory, step, Trajectory};

use crate::error::{Error, Result};
use crate::hiergroup::{dist, sphere_size_f64, GroupElement, HierParams};

/// Default relative tolerance for truncating the transition series.
pub const TRANSITION_TOL: f64 = 1e-14;

/// `r_j = (1 - a) a^(j-1)`, the probability of a jump to distance `j`.
pub fn jump_pmf(j: u32, params: &HierParams) -> f64 {
    if j == 0 {
        return 0.0;
    }
    (1.0 - params.a) * params.a.powi(j as i32 - 1)
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time {t} must be finite and >= 0")))
    }
}

/// Last series index `J` for terms `j >= d` of size `M^-j e^(-b a^j t)` (or
/// their time integrals). Terms peak near `j* = ln(bt)/ln(1/a)`; past
/// `max(d, j*)` they decay like `M^-j`, so `J` adds enough indices for the
/// dropped tail to fall below `tol` relative to the leading term.
fn series_end(d: u32, params: &HierParams, tol: f64, t: f64) -> u32 {
    let mf = params.m as f64;
    let peak = if params.b * t > 1.0 { ((params.b * t).ln() / -params.a.ln()).ceil() as u32 } else { 0 };
    let need = ((1.0 / (tol * (1.0 - 1.0 / mf))).ln() / mf.ln()).ceil();
    d.max(peak) + need.max(0.0) as u32
}

/// `p_t(0, y)` for `|y| = d`:
/// `(1{d=0} - 1) M^-d e^(-b a^(d-1) t) + (M-1)/M sum_{j>=d} M^-j e^(-b a^j t)`.
pub fn transition_prob(t: f64, d: u32, params: &HierParams) -> Result<f64> {
    transition_prob_tol(t, d, params, TRANSITION_TOL)
}

pub fn transition_prob_tol(t: f64, d: u32, params: &HierParams, tol: f64) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(if d == 0 { 1.0 } else { 0.0 });
    }
    let (a, b) = (params.a, params.b);
    let mf = params.m as f64;
    let end = series_end(d, params, tol, t);
    if d == 0 {
        let mut sum = 0.0;
        for j in (0..=end).rev() {
            sum += mf.powi(-(j as i32)) * (-b * a.powi(j as i32) * t).exp();
        }
        return Ok(((mf - 1.0) / mf * sum).clamp(0.0, 1.0));
    }
    let x = b * a.powi(d as i32 - 1) * t;
    if x > 1.0 {
        // the subtracted term is small, no cancellation
        let mut sum = 0.0;
        for j in (d..=end).rev() {
            sum += mf.powi(-(j as i32)) * (-b * a.powi(j as i32) * t).exp();
        }
        let p = (mf - 1.0) / mf * sum - mf.powi(-(d as i32)) * (-x).exp();
        return Ok(p.clamp(0.0, 1.0));
    }
    // Using (M-1)/M sum_{k>=0} M^-k = 1, the two parts are rewritten with
    // expm1 so shells far out keep full relative precision:
    // p = M^-d [ -expm1(-b a^(d-1) t) + (M-1)/M sum_k M^-k expm1(-b a^(d+k) t) ].
    let mut sum = 0.0;
    for k in (0..=end - d).rev() {
        sum += mf.powi(-(k as i32)) * (-b * a.powi((d + k) as i32) * t).exp_m1();
    }
    let bracket = -(-x).exp_m1() + (mf - 1.0) / mf * sum;
    Ok((mf.powi(-(d as i32)) * bracket).clamp(0.0, 1.0))
}

/// `1 - (1 - e^-x)/x`, accurate for small `x`.
fn one_minus_phi1(x: f64) -> f64 {
    if x < 0.5 {
        // sum_{n>=1} (-1)^(n+1) x^n / (n+1)!
        let mut term = 1.0;
        let mut s = 0.0;
        for n in 1..=24 {
            term *= x / (n + 1) as f64;
            s += if n % 2 == 1 { term } else { -term };
        }
        s
    } else {
        1.0 + (-x).exp_m1() / x
    }
}

/// `int_0^t p_s(0, y) ds` for `|y| = d`, termwise in closed form.
pub fn integrated_transition(t: f64, d: u32, params: &HierParams) -> Result<f64> {
    check_time(t)?;
    let (a, b) = (params.a, params.b);
    let mf = params.m as f64;
    let end = series_end(d, params, TRANSITION_TOL, t);
    if d == 0 {
        // int_0^t e^(-k s) ds = t (1 - e^(-kt))/(kt)
        let mut sum = 0.0;
        for j in (0..=end).rev() {
            let x = b * a.powi(j as i32) * t;
            sum += mf.powi(-(j as i32)) * t * (1.0 - one_minus_phi1(x));
        }
        return Ok((mf - 1.0) / mf * sum);
    }
    // int_0^t -expm1(-k s) ds = t (1 - (1 - e^(-kt))/(kt))
    let mut sum = 0.0;
    for k in (0..=end - d).rev() {
        let x = b * a.powi((d + k) as i32) * t;
        sum -= mf.powi(-(k as i32)) * t * one_minus_phi1(x);
    }
    let x = b * a.powi(d as i32 - 1) * t;
    let bracket = t * one_minus_phi1(x) + (mf - 1.0) / mf * sum;
    Ok((mf.powi(-(d as i32)) * bracket).max(0.0))
}

/// `p_t(0, .)` stored up to distance `radius`.
pub fn transition_radial(t: f64, radius: u32, params: &HierParams) -> Result<RadialFn> {
    let values = (0..=radius)
        .map(|d| transition_prob(t, d, params))
        .collect::<Result<Vec<_>>>()?;
    let mut f = RadialFn::new(params.m, values, 0.0, 0.0);
    // p_t(0, y) <= M^-|y|
    f.tail_bound = (params.m as f64).powi(-(radius as i32 + 1));
    f.tail_mass = (1.0 - f.inner_sum()).max(0.0) + 1e-15;
    Ok(f)
}

/// One-step kernel `p^(1)(y) = r_|y| / |S_|y||`, stored up to `radius`.
pub fn one_step_radial(radius: u32, params: &HierParams) -> RadialFn {
    let m = params.m;
    let values = (0..=radius)
        .map(|d| if d == 0 { 0.0 } else { jump_pmf(d, params) / sphere_size_f64(d, m) })
        .collect();
    let next = radius + 1;
    RadialFn::new(
        m,
        values,
        jump_pmf(next, params) / sphere_size_f64(next, m),
        params.a.powi(radius as i32),
    )
}

/// `p_t(0, y)` for `|y| = d` from the Poissonised n-step sum
/// `e^-t sum_{n <= n_max} t^n/n! p^(n)(0, y)`, with `p^(n)` the n-fold radial
/// convolution power of the one-step kernel.
///
/// Fails when the Poisson tail beyond `n_max` exceeds `1e-12`.
pub fn transition_series_oracle(t: f64, d: u32, params: &HierParams, n_max: u32) -> Result<f64> {
    check_time(t)?;
    // log Poisson weights, accumulated to avoid overflow of t^n/n!
    let mut log_w = -t;
    let mut cdf = 0.0;
    let mut weights = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max {
        if n > 0 {
            log_w += t.ln() - (n as f64).ln();
        }
        let w = if t == 0.0 { if n == 0 { 1.0 } else { 0.0 } } else { log_w.exp() };
        weights.push(w);
        cdf += w;
    }
    let tail = (1.0 - cdf).max(0.0);
    if tail > 1e-12 {
        return Err(Error::Truncation(format!(
            "Poisson tail {tail:e} beyond n_max = {n_max} at t = {t} exceeds 1e-12"
        )));
    }
    // radius large enough that p^(n) beyond it is negligible at distance d
    let radius = d + 40;
    let p1 = one_step_radial(radius, params);
    let mut pn = RadialFn::delta(params.m, radius);
    let mut total = weights[0] * pn.values[d as usize];
    for w in weights.iter().skip(1) {
        pn = radial_convolve(&pn, &p1)?;
        total += w * pn.values[d as usize];
    }
    Ok(total)
}

/// Test function for the semigroup.
#[derive(Debug, Clone)]
pub enum TestFn {
    /// Depends on `|y|` only.
    Radial(RadialFn),
    /// Finitely supported: `(site, value)` pairs.
    Finite(Vec<(GroupElement, f64)>),
}

/// `T_t phi(x) = sum_y p_t(x, y) phi(y)`.
pub fn semigroup_apply(t: f64, phi: &TestFn, x: &GroupElement, params: &HierParams) -> Result<f64> {
    check_time(t)?;
    match phi {
        TestFn::Finite(points) => {
            let mut s = 0.0;
            for (y, v) in points {
                if !v.is_finite() {
                    return Err(Error::Domain("test function value is not finite".into()));
                }
                s += transition_prob(t, dist(x, y), params)? * v;
            }
            Ok(s)
        }
        TestFn::Radial(f) => {
            if !f.tail_bound.is_finite() || f.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain("test function is unbounded".into()));
            }
            if f.m != params.m {
                return Err(Error::InvalidParameter("test function has a different modulus".into()));
            }
            let r = f.radius().max(x.norm());
            let mut phi = f.clone();
            if phi.radius() < r {
                if f.tail_bound != 0.0 {
                    return Err(Error::Domain(format!("point at distance {} is outside the stored radius", x.norm())));
                }
                phi.values.resize(r as usize + 1, 0.0);
            }
            if t == 0.0 {
                return Ok(phi.values[x.norm() as usize]);
            }
            // sum_y p_t(|y - x|) phi(|y|) is the radial convolution evaluated at |x|
            let p = transition_radial(t, r, params)?;
            Ok(radial_convolve(&p, &phi)?.values[x.norm() as usize])
        }
    }
}

/// Green function `G(y) = int_0^inf p_t(0, y) dt`: `D` at the origin and
/// `A / c^(d-1)` at distance `d >= 1`, with `D = (M-1)c / (M b (c-1))` and
/// `A = (M-c) / (M b (c-1))`.
pub fn green_function(d: u32, params: &HierParams) -> Result<f64> {
    let (mf, c, b) = (params.m as f64, params.c, params.b);
    if !(params.gamma > 0.0) {
        return Err(Error::Recurrent { c });
    }
    if d == 0 {
        Ok((mf - 1.0) / (mf * b) * c / (c - 1.0))
    } else {
        Ok((mf - c) / (mf * b * (c - 1.0)) / c.powi(d as i32 - 1))
    }
}
