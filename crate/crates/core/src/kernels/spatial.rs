use crate::error::{Error, Result};
use crate::hiergroup::{enumerate_ball, HierParams};
use crate::walk::green_function;

fn check_transient(params: &HierParams) -> Result<()> {
    if params.gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::Recurrent { c: params.c })
    }
}

/// `2 D M^min(s,t) (M/c)^max(s,t)`: covariance of the limit field integrated
/// over the balls `B_s` and `B_t`.
pub fn spatial_cov(s: u32, t: u32, params: &HierParams) -> Result<f64> {
    check_transient(params)?;
    let d = green_function(0, params)?;
    let mf = params.m as f64;
    Ok(2.0 * d * mf.powi(s.min(t) as i32) * (mf / params.c).powi(s.max(t) as i32))
}

/// `2 sum_{x in B_s} sum_{y in B_t} G(x - y)` by enumerating both balls.
pub fn spatial_cov_bruteforce(s: u32, t: u32, params: &HierParams) -> Result<f64> {
    check_transient(params)?;
    let m = params.m;
    let bs = enumerate_ball(s, m)?;
    let bt = enumerate_ball(t, m)?;
    let g: Vec<f64> = (0..=s.max(t)).map(|d| green_function(d, params)).collect::<Result<_>>()?;
    let mut total = 0.0;
    for x in &bs {
        for y in &bt {
            total += g[crate::hiergroup::dist(x, y) as usize];
        }
    }
    Ok(2.0 * total)
}

/// `2 D min(s,t)^(1+gamma) max(s,t)`, the interpolation of the spatial
/// covariance in the time variable `(1/a)^n`.
pub fn vartheta_cov(s: f64, t: f64, params: &HierParams) -> Result<f64> {
    check_transient(params)?;
    if !(s >= 0.0 && t >= 0.0) {
        return Err(Error::Domain("times must be >= 0".into()));
    }
    let d = green_function(0, params)?;
    Ok(2.0 * d * s.min(t).powf(1.0 + params.gamma) * s.max(t))
}
