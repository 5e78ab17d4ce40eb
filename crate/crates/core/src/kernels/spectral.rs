use std::f64::consts::PI;

use super::{Family, KernelSpec};
use crate::error::{Error, Result};
use crate::logsum::LogSum;
use crate::quad::Quad;

const SERIES_TERMS: usize = 14;

/// Spectral density `sigma(u) = (1/pi) sum_j (b a^j)^(3-2H) / ((b a^j)^2 + u^2)`.
pub fn spectral_sigma(u: f64, spec: &KernelSpec) -> Result<f64> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::Domain(format!("spectral density needs u > 0, got {u}")));
    }
    let h = spec.h;
    if !(h > 0.5 && h < 1.5) {
        return Err(Error::Domain(format!("spectral density needs H in (1/2, 3/2), got {h}")));
    }
    Ok(sigma_unchecked(u, h, spec.a, spec.b_eff))
}

fn sigma_unchecked(u: f64, h: f64, a: f64, b: f64) -> f64 {
    Sigma::new(h, a, b).eval(u)
}

struct Sigma {
    h: f64,
    b: f64,
    sum: LogSum<Box<dyn Fn(f64) -> f64>>,
}

impl Sigma {
    fn new(h: f64, a: f64, b: f64) -> Self {
        // in x = lambda/u the summand is u^(1-2H) x^(3-2H) / (1 + x^2)
        let small = (0..SERIES_TERMS)
            .map(|n| (3.0 - 2.0 * h + 2.0 * n as f64, if n % 2 == 0 { 1.0 } else { -1.0 }))
            .collect();
        let large = (0..SERIES_TERMS)
            .map(|n| (1.0 - 2.0 * h - 2.0 * n as f64, if n % 2 == 0 { 1.0 } else { -1.0 }))
            .collect();
        let sum = LogSum {
            ratio: a,
            x_lo: 0.1,
            x_hi: 10.0,
            small,
            large,
            summand: Box::new(move |x: f64| x.powf(3.0 - 2.0 * h) / (1.0 + x * x)) as Box<dyn Fn(f64) -> f64>,
        };
        Self { h, b, sum }
    }

    fn eval(&self, u: f64) -> f64 {
        u.powf(1.0 - 2.0 * self.h) * self.sum.eval(self.b / u) / PI
    }
}

/// Integral `k int_0^inf P(u) sigma(c u) / u^2 du` for a bounded trigonometric
/// polynomial `P` with `P(u) ~ lead u^lead_pow` near 0 and mean `mean`.
struct Spectral<'a, P> {
    spec: &'a KernelSpec,
    p: P,
    lead: f64,
    lead_pow: f64,
    mean: f64,
    /// Sum of absolute amplitudes of the oscillating part.
    amp: f64,
    omega_min: f64,
    omega_max: f64,
    c: f64,
    k: f64,
}

impl<P: Fn(f64) -> f64> Spectral<'_, P> {
    fn eval(&self) -> Result<f64> {
        let (a, h) = (self.spec.a, self.spec.h);
        let density = Sigma::new(h, a, self.spec.b_eff);
        let sigma = |u: f64| density.eval(self.c * u);
        let quad = Quad::new(0.0, 1e-7).with_limit(400_000);
        let u0 = 1.0 / self.omega_max;
        let u1 = 1e-5 * u0;

        // [0, u1]: P/u^2 is its leading monomial to relative 1e-10, and
        // u^q sigma(c u) gains a^(q + 2 - 2H) per period of the lattice.
        let q = self.lead_pow - 2.0;
        let period = quad
            .integrate(|u| u.powf(q) * sigma(u), a * u1, u1)?
            .value;
        let lower = self.lead * period / (1.0 - a.powf(q + 2.0 - 2.0 * h));

        // tail: the oscillating part integrates to at most amp sigma/u^2 / omega
        // per unit of decay, so pick U where that is negligible
        let scale = (lower.abs() + self.lead.abs() * u1.powf(q + 3.0 - 2.0 * h)).max(f64::MIN_POSITIVE);
        let mut big_u = 10.0 * u0;
        let remainder = |u: f64| 2.0 * self.amp * sigma(u) / (u * u * self.omega_min);
        loop {
            let est = remainder(big_u);
            if est < 1e-9 * scale.max(sigma(u0) / u0) {
                break;
            }
            big_u *= 1.5;
            if (big_u - u0) * self.omega_max / PI > 200_000.0 {
                return Err(Error::Quadrature { estimate: f64::NAN, error: est, tolerance: 1e-9 * scale });
            }
        }
        let tail_period = quad.integrate(|u| sigma(u) / (u * u), big_u, big_u / a)?.value;
        let tail = self.mean * tail_period / (1.0 - a.powf(2.0 * h));

        // [u1, U]: log-spaced breakpoints up to u0, then one per half period
        let mut pts = Vec::new();
        let mut u = u1;
        while u < u0 {
            pts.push(u);
            u *= std::f64::consts::E;
        }
        let step = PI / self.omega_max;
        let mut u = u0;
        while u < big_u {
            pts.push(u);
            u += step;
        }
        pts.push(big_u);
        let middle = quad
            .integrate_points(|u| (self.p)(u) / (u * u) * sigma(u), &pts)?
            .value;
        Ok(self.k * (lower + middle + tail))
    }
}

/// `t^2H h_t` from `int_0^inf sin^2(tu)/u^2 2 sigma(2u) du`.
pub fn spectral_variance_w(t: f64, spec: &KernelSpec) -> Result<f64> {
    if !(spec.h > 0.5 && spec.h < 1.0) {
        return Err(Error::Domain(format!("spectral form of t^2H h_t needs H in (1/2, 1), got {}", spec.h)));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Spectral {
        spec,
        p: |u: f64| (t * u).sin().powi(2),
        lead: t * t,
        lead_pow: 2.0,
        mean: 0.5,
        amp: 0.5,
        omega_min: 2.0 * t,
        omega_max: 2.0 * t,
        c: 2.0,
        k: 2.0,
    }
    .eval()
}

/// Covariance from the spectral representation: for ofBm the integrand is
/// `[(1-cos su)(1-cos tu) + sin su sin tu] sigma(u)/u^2`, for osfBm and
/// onsfBm `2 (1-cos su)(1-cos tu) sigma(u)/u^2`. The factor 2 is what the
/// closed-form covariances require given `t^2H h_t = 2 int (1-cos tu) sigma(u)/u^2 du`.
pub fn spectral_covariance(spec: &KernelSpec, s: f64, t: f64) -> Result<f64> {
    spec.validate()?;
    if s == 0.0 || t == 0.0 {
        return Ok(0.0);
    }
    let d = (s - t).abs();
    let freqs = [s, t, d, s + t];
    let omega_min = freqs.iter().copied().filter(|&w| w > 0.0).fold(f64::INFINITY, f64::min);
    let omega_max = s + t;
    match spec.family {
        Family::OfBm => Spectral {
            spec,
            // 1 - cos su - cos tu + cos (s-t)u
            p: |u: f64| 1.0 - (s * u).cos() - (t * u).cos() + ((s - t) * u).cos(),
            lead: s * t,
            lead_pow: 2.0,
            mean: if d == 0.0 { 2.0 } else { 1.0 },
            amp: if d == 0.0 { 2.0 } else { 3.0 },
            omega_min,
            omega_max: omega_max.max(s.max(t)),
            c: 1.0,
            k: 1.0,
        }
        .eval(),
        Family::OsfBm | Family::OnsfBm | Family::Unified => Spectral {
            spec,
            p: |u: f64| (1.0 - (s * u).cos()) * (1.0 - (t * u).cos()),
            lead: 0.25 * s * s * t * t,
            lead_pow: 4.0,
            mean: if d == 0.0 { 1.5 } else { 1.0 },
            amp: if d == 0.0 { 2.5 } else { 3.0 },
            omega_min,
            omega_max,
            c: 1.0,
            k: 2.0,
        }
        .eval(),
        f => Err(Error::Unsupported(format!("no spectral representation for {f}"))),
    }
}
