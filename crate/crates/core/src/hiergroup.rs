//! The hierarchical group of order `M`: finitely supported digit sequences
//! with componentwise addition mod `M` and the ultrametric distance
//! `|x - y| = max { i : x_i != y_i }`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model constants of the c-random walk on the group of order `m`.
///
/// `a = c/M`, `b = (M^2 - c)/(M(M-1))` and the degree `gamma = ln c / ln(M/c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HierParams {
    pub m: u32,
    pub c: f64,
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
}

impl HierParams {
    pub fn new(m: u32, c: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter(format!("group order M = {m} must be >= 2")));
        }
        if !(c > 0.0 && c < m as f64) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!("walk parameter c = {c} must lie in (0, M)")));
        }
        let mf = m as f64;
        let a = c / mf;
        let b = (mf * mf - c) / (mf * (mf - 1.0));
        let gamma = c.ln() / (mf / c).ln();
        Ok(Self { m, c, a, b, gamma })
    }

    /// `1/M`, which equals `a^(gamma+1)`.
    pub fn inv_m(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// `a^(j(gamma+1)) = M^-j`, computed without going through `gamma`.
    pub fn weight(&self, j: i32) -> f64 {
        (self.m as f64).powi(-j)
    }
}

/// A point of the group in canonical sparse form: `(index, digit)` pairs with
/// strictly increasing indices (starting at 1) and nonzero digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct GroupElement {
    digits: Vec<(u32, u32)>,
}

impl GroupElement {
    pub fn identity() -> Self {
        Self { digits: Vec::new() }
    }

    /// Builds an element from `(index, digit)` pairs in any order. Zero digits
    /// are dropped; repeated indices are rejected.
    pub fn from_digits(pairs: &[(u32, u32)], m: u32) -> Result<Self> {
        let mut v: Vec<(u32, u32)> = pairs.to_vec();
        v.sort_unstable_by_key(|p| p.0);
        for w in v.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidParameter(format!("repeated digit index {}", w[0].0)));
            }
        }
        for &(index, digit) in &v {
            if index == 0 {
                return Err(Error::InvalidParameter("digit indices start at 1".into()));
            }
            if digit >= m {
                return Err(Error::InvalidElement { index, digit, modulus: m });
            }
        }
        v.retain(|p| p.1 != 0);
        Ok(Self { digits: v })
    }

    /// Element with a single nonzero digit.
    pub fn unit(index: u32, digit: u32, m: u32) -> Result<Self> {
        Self::from_digits(&[(index, digit)], m)
    }

    /// Dense digits `x_1, x_2, ...` (first entry is index 1).
    pub fn from_dense(dense: &[u32], m: u32) -> Result<Self> {
        let pairs: Vec<(u32, u32)> =
            dense.iter().enumerate().map(|(i, &d)| (i as u32 + 1, d)).collect();
        Self::from_digits(&pairs, m)
    }

    /// Decodes `code = sum_i x_i M^(i-1)`.
    pub fn from_code(mut code: u64, m: u32) -> Self {
        let mut digits = Vec::new();
        let mut index = 1;
        while code > 0 {
            let d = (code % m as u64) as u32;
            if d != 0 {
                digits.push((index, d));
            }
            code /= m as u64;
            index += 1;
        }
        Self { digits }
    }

    /// Inverse of [`GroupElement::from_code`]; `None` when the code overflows.
    pub fn to_code(&self, m: u32) -> Option<u64> {
        let mut code: u64 = 0;
        for &(index, d) in &self.digits {
            let p = (m as u64).checked_pow(index - 1)?;
            code = code.checked_add(p.checked_mul(d as u64)?)?;
        }
        Some(code)
    }

    pub fn digits(&self) -> &[(u32, u32)] {
        &self.digits
    }

    pub fn digit(&self, index: u32) -> u32 {
        self.digits
            .binary_search_by_key(&index, |p| p.0)
            .map(|k| self.digits[k].1)
            .unwrap_or(0)
    }

    /// `|x|`: largest index carrying a nonzero digit, 0 for the identity.
    pub fn norm(&self) -> u32 {
        self.digits.last().map_or(0, |p| p.0)
    }

    pub fn is_identity(&self) -> bool {
        self.digits.is_empty()
    }

    fn check(&self, m: u32) -> Result<()> {
        for &(index, digit) in &self.digits {
            if digit >= m {
                return Err(Error::InvalidElement { index, digit, modulus: m });
            }
        }
        Ok(())
    }

    pub fn neg(&self, m: u32) -> Result<Self> {
        self.check(m)?;
        Ok(Self { digits: self.digits.iter().map(|&(i, d)| (i, m - d)).collect() })
    }

    pub fn sub(&self, other: &Self, m: u32) -> Result<Self> {
        add(self, &other.neg(m)?, m)
    }
}

/// Componentwise sum mod `m`, canonicalised.
pub fn add(x: &GroupElement, y: &GroupElement, m: u32) -> Result<GroupElement> {
    x.check(m)?;
    y.check(m)?;
    let (xs, ys) = (&x.digits, &y.digits);
    let mut out = Vec::with_capacity(xs.len() + ys.len());
    let (mut i, mut j) = (0, 0);
    while i < xs.len() || j < ys.len() {
        let take_x = j == ys.len() || (i < xs.len() && xs[i].0 < ys[j].0);
        let take_y = i == xs.len() || (j < ys.len() && ys[j].0 < xs[i].0);
        if take_x {
            out.push(xs[i]);
            i += 1;
        } else if take_y {
            out.push(ys[j]);
            j += 1;
        } else {
            let s = (xs[i].1 + ys[j].1) % m;
            if s != 0 {
                out.push((xs[i].0, s));
            }
            i += 1;
            j += 1;
        }
    }
    Ok(GroupElement { digits: out })
}

/// Hierarchical distance: the largest index where the digits differ.
pub fn dist(x: &GroupElement, y: &GroupElement) -> u32 {
    // Walk both sparse lists from the top index down.
    let (xs, ys) = (&x.digits, &y.digits);
    let (mut i, mut j) = (xs.len(), ys.len());
    while i > 0 || j > 0 {
        match (i.checked_sub(1).map(|k| xs[k]), j.checked_sub(1).map(|k| ys[k])) {
            (Some(p), Some(q)) if p.0 == q.0 => {
                if p.1 != q.1 {
                    return p.0;
                }
                i -= 1;
                j -= 1;
            }
            (Some(p), Some(q)) => return p.0.max(q.0),
            (Some(p), None) => return p.0,
            (None, Some(q)) => return q.0,
            (None, None) => unreachable!(),
        }
    }
    0
}

/// `|S_j|`: 1 for `j = 0`, else `M^(j-1)(M-1)`.
pub fn sphere_size(j: u32, m: u32) -> Result<u64> {
    if j == 0 {
        return Ok(1);
    }
    (m as u64)
        .checked_pow(j - 1)
        .and_then(|p| p.checked_mul(m as u64 - 1))
        .ok_or_else(|| Error::Overflow(format!("|S_{j}| for M = {m}")))
}

/// `|B_r| = M^r`.
pub fn ball_size(r: u32, m: u32) -> Result<u64> {
    (m as u64)
        .checked_pow(r)
        .ok_or_else(|| Error::Overflow(format!("|B_{r}| for M = {m}")))
}

/// `|S_j|` as a float, valid far beyond the integer range.
pub fn sphere_size_f64(j: u32, m: u32) -> f64 {
    if j == 0 {
        1.0
    } else {
        (m as f64).powi(j as i32 - 1) * (m as f64 - 1.0)
    }
}

/// Uniform draw from the sphere of radius `j >= 1`.
pub fn sample_sphere<R: Rng + ?Sized>(j: u32, m: u32, rng: &mut R) -> Result<GroupElement> {
    if j == 0 {
        return Err(Error::InvalidParameter("sphere radius must be >= 1".into()));
    }
    let mut digits = Vec::new();
    for index in 1..j {
        let d = rng.random_range(0..m);
        if d != 0 {
            digits.push((index, d));
        }
    }
    digits.push((j, rng.random_range(1..m)));
    Ok(GroupElement { digits })
}

/// Uniform draw from the ball `B_r`.
pub fn sample_ball<R: Rng + ?Sized>(r: u32, m: u32, rng: &mut R) -> GroupElement {
    let mut digits = Vec::new();
    for index in 1..=r {
        let d = rng.random_range(0..m);
        if d != 0 {
            digits.push((index, d));
        }
    }
    GroupElement { digits }
}

/// All `M^r` elements of `B_r`, ordered by `sum_i x_i M^(i-1)`, i.e.
/// lexicographically on the dense expansion read from the top index down.
pub fn enumerate_ball(r: u32, m: u32) -> Result<Vec<GroupElement>> {
    let n = ball_size(r, m)?;
    if n > (1 << 32) {
        return Err(Error::Overflow(format!("ball of {n} elements is too large to enumerate")));
    }
    Ok((0..n).map(|k| GroupElement::from_code(k, m)).collect())
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (i, d)) in self.digits.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}:{d}")?;
        }
        Ok(())
    }
}

impl FromStr for GroupElement {
    type Err = Error;

    /// Parses `"j1:d1,j2:d2"`. The modulus is not known here, so digits are
    /// only checked to be nonzero-canonical and ordered.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::identity());
        }
        let mut pairs = Vec::new();
        for part in s.split(',') {
            let (i, d) = part
                .split_once(':')
                .ok_or_else(|| Error::InvalidParameter(format!("bad digit pair '{part}'")))?;
            let i: u32 = i.trim().parse().map_err(|_| Error::InvalidParameter(format!("bad index '{i}'")))?;
            let d: u32 = d.trim().parse().map_err(|_| Error::InvalidParameter(format!("bad digit '{d}'")))?;
            pairs.push((i, d));
        }
        Self::from_digits(&pairs, u32::MAX)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn el(p: &[(u32, u32)], m: u32) -> GroupElement {
        GroupElement::from_digits(p, m).unwrap()
    }

    #[test]
    fn params_identity_relation() {
        for &(m, c) in &[(2, 0.5), (3, 1.5), (4, 2.0), (9, 2.0), (5, 0.1)] {
            let p = HierParams::new(m, c).unwrap();
            let lhs = 1.0 / m as f64;
            let rhs = p.a.powf(p.gamma + 1.0);
            assert!((lhs - rhs).abs() < 1e-15 * lhs.max(1.0), "{m} {c}");
            assert!(p.a > 0.0 && p.a < 1.0 && p.b > 0.0);
        }
        assert_eq!(HierParams::new(3, 1.0).unwrap().gamma, 0.0);
        assert!(HierParams::new(1, 0.5).is_err());
        assert!(HierParams::new(3, 3.0).is_err());
    }

    #[test]
    fn add_examples() {
        let x = el(&[(1, 2)], 3);
        assert_eq!(add(&x, &x, 3).unwrap(), el(&[(1, 1)], 3));
        assert_eq!(add(&GroupElement::identity(), &x, 3).unwrap(), x);
        let y = el(&[(1, 1), (4, 1), (7, 1)], 2);
        assert!(add(&y, &y, 2).unwrap().is_identity());
        let bad = GroupElement { digits: vec![(1, 3)] };
        assert!(matches!(add(&bad, &x, 3), Err(Error::InvalidElement { .. })));
    }

    #[test]
    fn dist_examples() {
        let x = el(&[(3, 1)], 2);
        assert_eq!(dist(&x, &GroupElement::identity()), 3);
        assert_eq!(dist(&x, &x), 0);
        let y = el(&[(1, 1), (3, 1)], 2);
        assert_eq!(dist(&x, &y), 1);
    }

    #[test]
    fn sphere_sizes() {
        assert_eq!(sphere_size(0, 5).unwrap(), 1);
        assert_eq!(sphere_size(2, 3).unwrap(), 6);
        let total: u64 = (0..=5).map(|j| sphere_size(j, 4).unwrap()).sum();
        assert_eq!(total, 1024);
        assert!(matches!(sphere_size(80, 3), Err(Error::Overflow(_))));
    }

    #[test]
    fn sphere_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_sphere(0, 3, &mut rng).is_err());
        for _ in 0..100 {
            assert_eq!(sample_sphere(1, 2, &mut rng).unwrap(), el(&[(1, 1)], 2));
            assert_eq!(sample_sphere(5, 3, &mut rng).unwrap().norm(), 5);
        }
        // chi-square over the 6 elements of S_2 for M = 3
        let sphere: Vec<GroupElement> =
            enumerate_ball(2, 3).unwrap().into_iter().filter(|x| x.norm() == 2).collect();
        assert_eq!(sphere.len(), 6);
        let n = 100_000;
        let mut counts = [0usize; 6];
        for _ in 0..n {
            let x = sample_sphere(2, 3, &mut rng).unwrap();
            counts[sphere.iter().position(|s| *s == x).unwrap()] += 1;
        }
        let e = n as f64 / 6.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // 0.999 quantile of chi-square with 5 dof
        assert!(chi2 < 20.515, "chi2 = {chi2}");
    }

    #[test]
    fn ball_enumeration() {
        assert_eq!(enumerate_ball(0, 3).unwrap(), vec![GroupElement::identity()]);
        let b = enumerate_ball(3, 2).unwrap();
        assert_eq!(b.len(), 8);
        let b = enumerate_ball(3, 4).unwrap();
        let mut shells = [0u64; 4];
        for x in &b {
            assert!(x.norm() <= 3);
            shells[x.norm() as usize] += 1;
        }
        for j in 0..=3 {
            assert_eq!(shells[j as usize], sphere_size(j, 4).unwrap());
        }
        let mut sorted = b.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), b.len());
    }

    #[test]
    fn text_form() {
        let x = el(&[(2, 1), (5, 3)], 4);
        assert_eq!(x.to_string(), "2:1,5:3");
        assert_eq!("2:1,5:3".parse::<GroupElement>().unwrap(), x);
        assert_eq!(GroupElement::identity().to_string(), "");
        assert!("".parse::<GroupElement>().unwrap().is_identity());
        assert!("2-1".parse::<GroupElement>().is_err());
    }

    fn arb_el(m: u32) -> impl Strategy<Value = GroupElement> {
        proptest::collection::vec(0..m, 0..12).prop_map(move |d| GroupElement::from_dense(&d, m).unwrap())
    }

    proptest! {
        #[test]
        fn group_axioms(x in arb_el(3), y in arb_el(3), z in arb_el(3)) {
            let m = 3;
            let xy = add(&x, &y, m).unwrap();
            prop_assert_eq!(add(&xy, &z, m).unwrap(), add(&x, &add(&y, &z, m).unwrap(), m).unwrap());
            prop_assert_eq!(xy.clone(), add(&y, &x, m).unwrap());
            prop_assert!(add(&x, &x.neg(m).unwrap(), m).unwrap().is_identity());
            prop_assert_eq!(add(&x, &GroupElement::identity(), m).unwrap(), x.clone());
        }

        #[test]
        fn ultrametric(x in arb_el(4), y in arb_el(4), z in arb_el(4)) {
            let (dxy, dxz, dzy) = (dist(&x, &y), dist(&x, &z), dist(&z, &y));
            prop_assert!(dxy <= dxz.max(dzy));
            if dxz != dzy {
                prop_assert_eq!(dxy, dxz.max(dzy));
            }
            prop_assert_eq!(dxy, x.sub(&y, 4).unwrap().norm());
            prop_assert_eq!(dxy == 0, x == y);
        }

        #[test]
        fn code_roundtrip(x in arb_el(5)) {
            prop_assert_eq!(GroupElement::from_code(x.to_code(5).unwrap(), 5), x);
        }
    }
}
