//! Two-sided sums over a geometric lattice, `S(x0) = sum_{k in Z} F(x0 a^k)`.
//!
//! The summand is evaluated directly on the window `x_lo < x <= x_hi`. Below
//! the window `F` is replaced by a power series with positive exponents and
//! above it by an expansion with negative exponents; both tails are then
//! geometric series in closed form, so the result is exact up to the accuracy
//! of the two expansions at the window edges.

/// Power-law expansion `sum_i coef_i x^pow_i`.
pub type Expansion = Vec<(f64, f64)>;

pub struct LogSum<F> {
    pub ratio: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    /// Valid for `x <= x_lo`; every exponent must be positive.
    pub small: Expansion,
    /// Valid for `x > x_hi`; every exponent must be negative.
    pub large: Expansion,
    pub summand: F,
}

/// `1 - a^p` without cancellation for small `p`.
pub(crate) fn one_minus_pow(a: f64, p: f64) -> f64 {
    -(p * a.ln()).exp_m1()
}

impl<F: Fn(f64) -> f64> LogSum<F> {
    pub fn eval(&self, x0: f64) -> f64 {
        debug_assert!(x0 > 0.0 && self.x_lo < self.x_hi);
        let a = self.ratio;
        let ln_inv = -a.ln();
        // smallest k with x0 a^k <= x_hi
        let mut k = ((x0 / self.x_hi).ln() / ln_inv).ceil() as i32;
        while x0 * a.powi(k) > self.x_hi {
            k += 1;
        }
        while x0 * a.powi(k - 1) <= self.x_hi {
            k -= 1;
        }
        let x_upper = x0 * a.powi(k - 1);
        let mut upper = 0.0;
        for &(q, coef) in &self.large {
            upper += coef * x_upper.powf(q) / one_minus_pow(a, -q);
        }
        let mut middle = 0.0;
        let mut x = x0 * a.powi(k);
        while x > self.x_lo {
            middle += (self.summand)(x);
            k += 1;
            x = x0 * a.powi(k);
        }
        let mut lower = 0.0;
        for &(p, coef) in &self.small {
            lower += coef * x.powf(p) / one_minus_pow(a, p);
        }
        lower + middle + upper
    }
}

/// Terms kept from Taylor expansions; the series are only used where
/// `x z <= 1`, so the remainder is below `1/41!`.
const TAYLOR_TERMS: usize = 40;

/// Summand `F(x) = x^p (sum_k poly_k x^k + sum_i w_i e^(-x z_i))` with all
/// `z_i > 0`, summed over the lattice `x0 a^k`.
///
/// The caller guarantees that every power `p + n <= 0` cancels exactly in the
/// small-`x` expansion (this is what makes the two-sided sum converge); those
/// coefficients are then dropped instead of being formed by subtraction,
/// which is where direct evaluation would lose all digits.
#[derive(Debug, Clone)]
pub struct ExpComb {
    pub p: f64,
    poly: Vec<(i32, f64)>,
    exps: Vec<(f64, f64)>,
    /// Combined Taylor coefficients `(power, coef)` with positive powers.
    series: Vec<(f64, f64)>,
    z_min: f64,
    z_max: f64,
}

impl ExpComb {
    /// Exponentials with `z = 0` are folded into the constant term.
    pub fn new(p: f64, poly: &[(i32, f64)], exps: &[(f64, f64)]) -> Self {
        let mut poly: Vec<(i32, f64)> = poly.iter().copied().filter(|&(_, c)| c != 0.0).collect();
        let mut kept = Vec::new();
        for &(w, z) in exps {
            if w == 0.0 {
                continue;
            }
            if z == 0.0 {
                poly.push((0, w));
            } else {
                kept.push((w, z));
            }
        }
        let z_min = kept.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
        let z_max = kept.iter().map(|e| e.1).fold(0.0, f64::max);
        assert!(z_max > 0.0, "exponential combination needs at least one decaying term");
        let mut series = Vec::new();
        let mut fact = 1.0;
        for n in 0..=TAYLOR_TERMS {
            if n > 0 {
                fact *= n as f64;
            }
            let power = p + n as f64;
            if power <= 0.0 {
                continue;
            }
            let mut c: f64 = poly.iter().filter(|&&(k, _)| k == n as i32).map(|e| e.1).sum();
            for &(w, z) in &kept {
                c += w * (-z).powi(n as i32) / fact;
            }
            if c != 0.0 {
                series.push((power, c));
            }
        }
        Self { p, poly, exps: kept, series, z_min, z_max }
    }

    /// `F(x)` evaluated without cancellation.
    pub fn eval(&self, x: f64) -> f64 {
        if x * self.z_max <= 1.0 {
            return self.series.iter().map(|&(q, c)| c * x.powf(q)).sum();
        }
        let mut v: f64 = self.poly.iter().map(|&(k, c)| c * x.powi(k)).sum();
        for &(w, z) in &self.exps {
            v += w * (-x * z).exp();
        }
        v * x.powf(self.p)
    }

    /// `sum_{k in Z} F(x0 a^k)`.
    pub fn lattice_sum(&self, x0: f64, a: f64) -> f64 {
        let large: Expansion = self
            .poly
            .iter()
            .map(|&(k, c)| {
                debug_assert!(self.p + (k as f64) < 0.0, "polynomial part must decay at large x");
                (self.p + k as f64, c)
            })
            .collect();
        let sum = LogSum {
            ratio: a,
            x_lo: 0.05 / self.z_max,
            x_hi: 40.0 / self.z_min,
            small: self.series.clone(),
            large,
            summand: |x| self.eval(x),
        };
        sum.eval(x0)
    }
}
