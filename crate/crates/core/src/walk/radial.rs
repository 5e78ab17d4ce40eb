//! Functions on the group that depend only on the distance to the origin.

use std::io::Write;

use crate::error::{Error, Result};
use crate::hiergroup::sphere_size_f64;

/// A radial function `x -> values[|x|]`, stored for `|x| <= R`.
///
/// Beyond `R` only bounds are kept: `tail_bound >= sup_{|x|>R} |f(x)|` and
/// `tail_mass >= sum_{|x|>R} |f(x)|`. `error` bounds the absolute error of each
/// stored value (from earlier truncated operations).
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFn {
    pub m: u32,
    pub values: Vec<f64>,
    pub tail_bound: f64,
    pub tail_mass: f64,
    pub error: f64,
}

impl RadialFn {
    pub fn new(m: u32, values: Vec<f64>, tail_bound: f64, tail_mass: f64) -> Self {
        Self { m, values, tail_bound, tail_mass, error: 0.0 }
    }

    /// Indicator of the origin.
    pub fn delta(m: u32, radius: u32) -> Self {
        let mut values = vec![0.0; radius as usize + 1];
        values[0] = 1.0;
        Self::new(m, values, 0.0, 0.0)
    }

    /// Indicator of the ball `B_r`, stored up to `radius >= r`.
    pub fn ball_indicator(m: u32, r: u32, radius: u32) -> Self {
        let values = (0..=radius).map(|d| if d <= r { 1.0 } else { 0.0 }).collect();
        Self::new(m, values, 0.0, 0.0)
    }

    pub fn radius(&self) -> u32 {
        self.values.len() as u32 - 1
    }

    /// Value at distance `d`, or `None` beyond the stored radius.
    pub fn get(&self, d: u32) -> Option<f64> {
        self.values.get(d as usize).copied()
    }

    /// `sum_{|x| <= R} |f(x)|`.
    pub fn inner_mass(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(d, v)| sphere_size_f64(d as u32, self.m) * v.abs())
            .sum()
    }

    /// `sum_x f(x)` over the stored ball.
    pub fn inner_sum(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(d, v)| sphere_size_f64(d as u32, self.m) * v)
            .sum()
    }

    /// Bound on `sum_x |f(x)|` including the tail and stored-value error.
    pub fn total_mass(&self) -> f64 {
        self.inner_mass() + self.tail_mass + self.error * (self.m as f64).powi(self.radius() as i32)
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(self.tail_bound, |s, v| s.max(v.abs())) + self.error
    }

    /// Writes `distance,value` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "distance,value")?;
        for (d, v) in self.values.iter().enumerate() {
            writeln!(w, "{d},{v:.17e}")?;
        }
        Ok(())
    }
}

/// Convolution `(f*g)(z) = sum_y f(|y|) g(|z-y|)` of two radial functions,
/// evaluated shell by shell on the common radius.
///
/// For `|z| = d` the shell `S_i` of `y` contributes
/// * `i < d`: every `z - y` has norm `d`;
/// * `i > d`: every `z - y` has norm `i`;
/// * `i = d >= 1`: the `(M-2)M^(d-1)` points with `y_d != z_d` are at distance
///   `d`, the other `M^(d-1)` make `z - y` range uniformly over `B_(d-1)`.
pub fn radial_convolve(f: &RadialFn, g: &RadialFn) -> Result<RadialFn> {
    if f.m != g.m {
        return Err(Error::InvalidParameter(format!("convolving radial functions with M = {} and M = {}", f.m, g.m)));
    }
    if f.values.len() != g.values.len() {
        return Err(Error::InvalidParameter("radial functions must share a truncation radius".into()));
    }
    let m = f.m;
    let mf = m as f64;
    let r = f.radius() as usize;
    let size = |i: usize| sphere_size_f64(i as u32, m);
    let (fv, gv) = (&f.values, &g.values);

    // prefix[d] = sum_{i<d} |S_i| f(i), and likewise for g
    let mut fpre = vec![0.0; r + 2];
    let mut gpre = vec![0.0; r + 2];
    for i in 0..=r {
        fpre[i + 1] = fpre[i] + size(i) * fv[i];
        gpre[i + 1] = gpre[i] + size(i) * gv[i];
    }
    // suffix[d] = sum_{i>d, i<=R} |S_i| f(i) g(i)
    let mut suf = vec![0.0; r + 2];
    for i in (0..=r).rev() {
        suf[i] = suf[i + 1] + size(i) * fv[i] * gv[i];
    }

    let mut values = vec![0.0; r + 1];
    values[0] = suf[0];
    for d in 1..=r {
        let inner = mf.powi(d as i32 - 1);
        // y in S_d with y_d = z_d: z - y uniform over B_(d-1), weight f(d) g(|w|)
        let same_top = fv[d] * gpre[d];
        let other_top = (mf - 2.0) * inner * fv[d] * gv[d];
        values[d] = fpre[d] * gv[d] + same_top + other_top + suf[d + 1];
    }

    // Terms with a shell beyond R were dropped.
    let fm_in = f.inner_mass();
    let (fm, gm) = (f.total_mass(), g.total_mass());
    let dropped = (f.tail_mass * g.tail_bound).min(g.tail_mass * f.tail_bound);
    let error = dropped + f.error * gm + g.error * fm;
    let tail_bound = fm_in * g.tail_bound + f.tail_bound * gm + f.error * gm + g.error * fm;
    let tail_mass = f.tail_mass * gm + fm * g.tail_mass;
    Ok(RadialFn { m, values, tail_bound, tail_mass, error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hiergroup::{enumerate_ball, GroupElement};

    fn brute(f: &RadialFn, g: &RadialFn, r: u32) -> Vec<f64> {
        let ball = enumerate_ball(r, f.m).unwrap();
        (0..=r)
            .map(|d| {
                let z = if d == 0 { GroupElement::identity() } else { GroupElement::unit(d, 1, f.m).unwrap() };
                ball.iter()
                    .map(|y| {
                        let w = z.sub(y, f.m).unwrap();
                        f.values[y.norm() as usize] * g.values[w.norm() as usize]
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn delta_is_identity() {
        let g = RadialFn::new(3, vec![0.4, 0.1, 0.02, 0.001], 0.0, 0.0);
        let h = radial_convolve(&RadialFn::delta(3, 3), &g).unwrap();
        for (x, y) in h.values.iter().zip(&g.values) {
            assert!((x - y).abs() < 1e-16);
        }
    }

    #[test]
    fn matches_brute_force_on_ball() {
        // compactly supported inside B_4 so truncation is exact
        for m in [2u32, 3] {
            let f = RadialFn::new(m, vec![0.3, -0.2, 0.05, 0.7, 0.01], 0.0, 0.0);
            let g = RadialFn::new(m, vec![1.1, 0.4, -0.3, 0.2, 0.05], 0.0, 0.0);
            let fast = radial_convolve(&f, &g).unwrap();
            let slow = brute(&f, &g, 4);
            for d in 0..=4 {
                assert!((fast.values[d] - slow[d]).abs() < 1e-13, "M={m} d={d}: {} vs {}", fast.values[d], slow[d]);
            }
            let back = radial_convolve(&g, &f).unwrap();
            for d in 0..=4 {
                assert!((fast.values[d] - back.values[d]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn incompatible_modulus() {
        let f = RadialFn::delta(2, 3);
        let g = RadialFn::delta(3, 3);
        assert!(radial_convolve(&f, &g).is_err());
    }

    #[test]
    fn csv_rows() {
        let mut buf = Vec::new();
        RadialFn::delta(2, 1).write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("distance,value\n0,1.0"));
        assert_eq!(s.lines().count(), 3);
    }
}
