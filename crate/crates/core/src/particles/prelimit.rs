//! Exact finite-`T` covariances of the occupation-time fluctuations and
//! their `T -> infinity` limits.
//!
//! `p_t(0, y)` is a geometric series of exponentials `e^(-b a^j t)`, so every
//! time integral is done scale by scale in closed form. The remaining series
//! is summed until the geometric tail is below `1e-16` of the running sum.

use crate::error::{Error, Result};
use crate::hiergroup::{dist, GroupElement, HierParams};
use crate::kernels::{covariance, Family, KernelSpec};
use crate::walk::green_function;

use super::ThetaLaw;

/// `g(y) = e^-y - 1 + y`.
pub(crate) fn g(y: f64) -> f64 {
    if y < 0.1 {
        // y^2/2 - y^3/6 + ...
        let mut term = y * y / 2.0;
        let mut s = term;
        for n in 3..20 {
            term *= -y / n as f64;
            s += term;
        }
        s
    } else {
        y + (-y).exp_m1()
    }
}

/// `(1 - e^-x)/x`, 1 at 0.
fn phi1(x: f64) -> f64 {
    if x < 1e-8 {
        1.0 - x / 2.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// `int_0^s int_0^t e^(-k|u-v|) du dv`.
pub(crate) fn pair_abs(k: f64, s: f64, t: f64) -> f64 {
    if k == 0.0 {
        return s * t;
    }
    (g(k * s) + g(k * t) - g(k * (t - s).abs())) / (k * k)
}

/// `int_0^s int_0^t e^(-k(u+v)) du dv`.
pub(crate) fn pair_sum(k: f64, s: f64, t: f64) -> f64 {
    s * t * phi1(k * s) * phi1(k * t)
}

/// `int_0^t int_0^s int_0^(u^v) e^(-k(u+v-2r)) dr du dv`.
pub(crate) fn triple(k: f64, s: f64, t: f64) -> f64 {
    let x = k * (s + t);
    if x < 0.5 {
        // termwise: int (u+v-2r)^n = [(s+t)^(n+3) - 2s^(n+3) - 2t^(n+3) + |t-s|^(n+3)] / (2(n+1)(n+2)(n+3))
        let d = (t - s).abs();
        let mut sum = 0.0;
        let mut coef = 1.0;
        for n in 0..30 {
            let p = n + 3;
            let e = ((s + t).powi(p) - 2.0 * s.powi(p) - 2.0 * t.powi(p) + d.powi(p))
                / (2.0 * ((n + 1) * (n + 2) * (n + 3)) as f64);
            sum += coef * e;
            coef *= -k / (n + 1) as f64;
            if coef.abs() * (s + t).powi(p + 1) < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        (pair_abs(k, s, t) - pair_sum(k, s, t)) / (2.0 * k)
    }
}

/// `sum_{j >= j0} M^-j f(b a^j T)` for `f` positive and decreasing with
/// `f(0) = f0`, stopped past the peak once the tail `M^-j f0/(M-1)` is
/// negligible.
fn scale_sum(params: &HierParams, time: f64, j0: u32, span: f64, f0: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mf = params.m as f64;
    let mut sum = 0.0;
    let mut w = mf.powi(-(j0 as i32));
    let mut k = params.b * params.a.powi(j0 as i32) * time;
    for _ in j0..j0 + 4000 {
        sum += w * f(k);
        w /= mf;
        k *= params.a;
        if k * span < 1.0 && w * f0 / (mf - 1.0) <= 1e-16 * sum.abs() {
            break;
        }
    }
    sum
}

fn check_times(s: f64, t: f64, time: f64) -> Result<()> {
    if !(s >= 0.0 && t >= 0.0 && s.is_finite() && t.is_finite()) {
        return Err(Error::Domain(format!("times ({s}, {t}) must be finite and >= 0")));
    }
    if !(time > 0.0 && time.is_finite()) {
        return Err(Error::InvalidParameter(format!("time scale T = {time} must be positive")));
    }
    Ok(())
}

/// `Cov(<X_T(s), 1_0>, <X_T(t), 1_0>)` without branching, with `F_T = T^((1-gamma)/2)`:
/// `T^(1+gamma) [E theta A + (Var theta - E theta) B]`, `A` and `B` the
/// double integrals of `p_(T|u-v|)(0,0)` and `p_(T(u+v))(0,0)`.
pub fn prelimit_cov_nonbranching(s: f64, t: f64, time: f64, law: &ThetaLaw, params: &HierParams) -> Result<f64> {
    check_times(s, t, time)?;
    law.validate()?;
    let (m1, var) = (law.mean(), law.variance());
    let mf = params.m as f64;
    let sum = scale_sum(params, time, 0, s.max(t), s * t * (m1 + (var - m1).abs()), |k| {
        m1 * pair_abs(k, s, t) + (var - m1) * pair_sum(k, s, t)
    });
    Ok(time.powf(1.0 + params.gamma) * (mf - 1.0) / mf * sum)
}

/// `(int int p_(T|u-v|)(0,0), int int p_(T(u+v))(0,0))` over `[0,s] x [0,t]`.
pub(crate) fn raw_pair_integrals(s: f64, t: f64, time: f64, params: &HierParams) -> (f64, f64) {
    let c = (params.m as f64 - 1.0) / params.m as f64;
    let a = scale_sum(params, time, 0, s.max(t), s * t, |k| pair_abs(k, s, t));
    let b = scale_sum(params, time, 0, s.max(t), s * t, |k| pair_sum(k, s, t));
    (c * a, c * b)
}

/// Branching Poisson(1) system with rate `V`, `F_T = T^((2-gamma)/2)` (a
/// density multiplier `H_T` cancels): `I(T) + II(T)`.
pub fn prelimit_cov_branching(s: f64, t: f64, time: f64, v: f64, params: &HierParams) -> Result<f64> {
    let (first, second) = prelimit_branching_parts(s, t, time, v, params)?;
    Ok(first + second)
}

/// `(I(T), II(T))`: the walk term `T^gamma int int p_(T|u-v|)` and the
/// branching term `V T^(1+gamma) int int int p_(T(u+v-2r))`.
pub fn prelimit_branching_parts(s: f64, t: f64, time: f64, v: f64, params: &HierParams) -> Result<(f64, f64)> {
    check_times(s, t, time)?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidParameter(format!("branching rate V = {v} must be positive")));
    }
    if !(params.gamma < 1.0) {
        return Err(Error::Domain(format!("branching limit needs gamma < 1, got {}", params.gamma)));
    }
    let mf = params.m as f64;
    let c = (mf - 1.0) / mf;
    let span = s.max(t);
    let a = scale_sum(params, time, 0, span, s * t, |k| pair_abs(k, s, t));
    let e0 = triple(0.0, s, t);
    let b = scale_sum(params, time, 0, span, e0, |k| triple(k, s, t));
    Ok((time.powf(params.gamma) * c * a, v * time.powf(1.0 + params.gamma) * c * b))
}

/// `int_0^s int_0^t p_(T|u-v|)(0, y) du dv` for `|y| = d`, from
/// `p_t = -[d >= 1] M^-d e^(-b a^(d-1) t) + (M-1)/M sum_{j >= d} M^-j e^(-b a^j t)`.
fn pair_integral_at(d: u32, s: f64, t: f64, time: f64, params: &HierParams) -> f64 {
    let mf = params.m as f64;
    let series = (mf - 1.0) / mf * scale_sum(params, time, d, s.max(t), s * t, |k| pair_abs(k, s, t));
    if d == 0 {
        series
    } else {
        let k = params.b * params.a.powi(d as i32 - 1) * time;
        series - mf.powi(-(d as i32)) * pair_abs(k, s, t)
    }
}

/// No branching, `gamma > 0`, `F_T = sqrt T`:
/// `E theta T sum_(x,y) phi(x) psi(y) int_0^s int_0^t p_(T|u-v|)(x, y) du dv`.
pub fn prelimit_cov_highgamma(
    s: f64,
    t: f64,
    time: f64,
    law: &ThetaLaw,
    params: &HierParams,
    phi: &[(GroupElement, f64)],
    psi: &[(GroupElement, f64)],
) -> Result<f64> {
    check_times(s, t, time)?;
    law.validate()?;
    if !(params.c > 1.0) {
        return Err(Error::Recurrent { c: params.c });
    }
    let max_d = phi.iter().chain(psi).map(|(x, _)| x.norm()).max().unwrap_or(0);
    let by_dist: Vec<f64> = (0..=max_d).map(|d| pair_integral_at(d, s, t, time, params)).collect();
    let mut sum = 0.0;
    for (x, fx) in phi {
        for (y, gy) in psi {
            sum += fx * gy * by_dist[dist(x, y) as usize];
        }
    }
    Ok(law.mean() * time * sum)
}

/// `K^2 = (M-1)/(M b^(1+gamma))`.
pub fn limit_constant(params: &HierParams) -> f64 {
    let mf = params.m as f64;
    (mf - 1.0) / (mf * params.b.powf(1.0 + params.gamma))
}

/// `K^2 (2 E theta cov_osfBm + Var theta cov_eta)` with `H = (1-gamma)/2`; needs `gamma < 0`.
pub fn limit_cov_nonbranching(s: f64, t: f64, law: &ThetaLaw, params: &HierParams) -> Result<f64> {
    law.validate()?;
    let h = (1.0 - params.gamma) / 2.0;
    let osf = covariance(&KernelSpec::from_params(Family::OsfBm, h, params)?, s, t)?;
    let eta = covariance(&KernelSpec::from_params(Family::Eta, h, params)?, s, t)?;
    Ok(limit_constant(params) * (2.0 * law.mean() * osf + law.variance() * eta))
}

/// `V K^2 cov` with `H = (2-gamma)/2`: osfBm for `0 < gamma < 1`, onsfBm for `gamma < 0`.
pub fn limit_cov_branching(s: f64, t: f64, v: f64, params: &HierParams) -> Result<f64> {
    let h = (2.0 - params.gamma) / 2.0;
    let family = if params.gamma < 0.0 { Family::OnsfBm } else { Family::OsfBm };
    let spec = KernelSpec::from_params(family, h, params)?;
    Ok(v * limit_constant(params) * covariance(&spec, s, t)?)
}

/// `2 E theta (s ^ t) <phi, G psi>`.
pub fn limit_cov_highgamma(
    s: f64,
    t: f64,
    law: &ThetaLaw,
    params: &HierParams,
    phi: &[(GroupElement, f64)],
    psi: &[(GroupElement, f64)],
) -> Result<f64> {
    law.validate()?;
    let mut sum = 0.0;
    for (x, fx) in phi {
        for (y, gy) in psi {
            sum += fx * gy * green_function(dist(x, y), params)?;
        }
    }
    Ok(2.0 * law.mean() * s.min(t) * sum)
}
