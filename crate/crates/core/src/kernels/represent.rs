use super::{covariance, Family, KernelSpec};
use crate::error::{Error, Result};
use crate::logsum::ExpComb;
use crate::quad::Quad;

/// Scale summand `lambda -> lambda^(2-2H) int k(x, y) e^(-lambda |x-y|) dy` for a
/// fixed outer point `x in [0, s]`, where `k` is the indicator of `[0, t]`
/// (ofBm) or its odd extension folded onto `x >= 0` (osfBm, onsfBm).
fn inner_comb(family: Family, h: f64, x: f64, t: f64) -> ExpComb {
    let p = 1.0 - 2.0 * h;
    // int_0^t e^(-lambda|x-y|) dy = (2 - e^(-lambda x) - e^(-lambda (t-x)))/lambda inside,
    // (e^(-lambda (x-t)) - e^(-lambda x))/lambda outside
    let odd = family != Family::OfBm;
    if x <= t {
        let mut exps = vec![(-1.0, x), (-1.0, t - x)];
        if odd {
            // minus int_0^t e^(-lambda (x+y)) dy = -(e^(-lambda x) - e^(-lambda (x+t)))/lambda
            exps.extend([(-1.0, x), (1.0, x + t)]);
        }
        ExpComb::new(p, &[(0, 2.0)], &exps)
    } else {
        let mut exps = vec![(1.0, x - t), (-1.0, x)];
        if odd {
            exps.extend([(-1.0, x), (1.0, x + t)]);
        }
        ExpComb::new(p, &[], &exps)
    }
}

fn breakpoints(s: f64, t: f64) -> Vec<f64> {
    if t < s {
        vec![0.0, t, s]
    } else {
        vec![0.0, s]
    }
}

/// Covariance from the indicator-kernel representation with kernel
/// `sum_j (b a^j)^(2-2H) e^(-|x-y| b a^j)`.
///
/// ofBm integrates `1_[0,s](x) 1_[0,t](y) / 2`; osfBm and onsfBm the odd
/// indicators `(1_[0,s] - 1_[-s,0])(x) (1_[0,t] - 1_[-t,0])(y) / 4`. The inner
/// integral is closed form per scale; the scale sum is taken inside the outer
/// integral except for onsfBm, where it does not commute with the integral
/// and each scale is integrated separately.
pub fn kernel_rep_covariance(spec: &KernelSpec, s: f64, t: f64) -> Result<f64> {
    spec.validate()?;
    if s < 0.0 || t < 0.0 {
        return Err(Error::Domain("times must be >= 0".into()));
    }
    if s == 0.0 || t == 0.0 {
        return Ok(0.0);
    }
    let (a, b, h) = (spec.a, spec.b_eff, spec.h);
    let quad = Quad::new(0.0, 1e-10).with_limit(20_000);
    let pts = breakpoints(s, t);
    match spec.family {
        Family::OfBm | Family::OsfBm => {
            let fam = spec.family;
            let k = |x: f64| inner_comb(fam, h, x, t).lattice_sum(b, a);
            let v = quad.integrate_points(k, &pts)?.value;
            // ofBm: the double integral is 2 cov; odd indicators: 1/4 of twice
            // the half-line integral
            Ok(0.5 * v)
        }
        Family::OnsfBm => {
            let per_scale = |j: i32| -> Result<f64> {
                let lambda = b * a.powi(j);
                let v = quad.integrate_points(|x| inner_comb(Family::OnsfBm, h, x, t).eval(lambda), &pts)?.value;
                Ok(0.5 * v)
            };
            // start at the scale where lambda (s+t) ~ 1 and walk outwards until
            // terms are geometric and negligible, then close each side with
            // the geometric remainder
            let j0 = ((1.0 / (b * (s + t))).ln() / a.ln()).round() as i32;
            let mut total = per_scale(j0)?;
            for dir in [1, -1] {
                let mut j = j0;
                let mut prev = total;
                let mut steps = 0;
                loop {
                    j += dir;
                    steps += 1;
                    let term = per_scale(j)?;
                    total += term;
                    let r = (term / prev).abs();
                    if steps > 3 && r < 1.0 && term.abs() < 1e-14 * total.abs() {
                        total += term * r / (1.0 - r);
                        break;
                    }
                    if steps > 2000 {
                        return Err(Error::Truncation("scale sum did not converge".into()));
                    }
                    prev = term;
                }
            }
            Ok(total)
        }
        f => Err(Error::Unsupported(format!("no indicator-kernel representation for {f}"))),
    }
}

/// `int_0^t int_0^s E rho_u rho_v du dv` for the derivative process with
/// parameter `U = spec_rho.h`; equals the onsfBm covariance with `H = U + 1`.
pub fn rho_integrates_to_onsfbm(spec_rho: &KernelSpec, s: f64, t: f64) -> Result<f64> {
    if spec_rho.family != Family::Rho {
        return Err(Error::InvalidParameter("expected a rho kernel".into()));
    }
    spec_rho.validate()?;
    if s == 0.0 || t == 0.0 {
        return Ok(0.0);
    }
    let inner_q = Quad::new(1e-15, 1e-10).with_limit(5_000);
    let outer_q = Quad::new(1e-14, 1e-9).with_limit(5_000);
    let err: std::cell::RefCell<Option<crate::error::Error>> = std::cell::RefCell::new(None);
    let inner = |v: f64| -> f64 {
        let pts = if v > 0.0 && v < s { vec![0.0, v, s] } else { vec![0.0, s] };
        match inner_q.integrate_points(|u| covariance(spec_rho, u, v).unwrap_or(f64::NAN), &pts) {
            Ok(r) => r.value,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let pts = if s < t { vec![0.0, s, t] } else { vec![0.0, t] };
    let outer = outer_q.integrate_points(inner, &pts)?;
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    if !outer.value.is_finite() {
        return Err(Error::Domain("rho covariance evaluation failed".into()));
    }
    Ok(outer.value)
}
