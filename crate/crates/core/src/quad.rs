//! Globally adaptive Gauss–Kronrod (10/21 point) quadrature.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_980_109_948,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd entries XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// One Kronrod panel: `(estimate, error estimate)`.
pub fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[10];
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[10] * (fc - reskh).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let result = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let round = 50.0 * f64::EPSILON * resabs;
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && err < round {
        err = round;
    }
    (result, err)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Quad {
    pub epsabs: f64,
    pub epsrel: f64,
    /// Hard cap on the number of subintervals.
    pub limit: usize,
}

impl Default for Quad {
    fn default() -> Self {
        Self { epsabs: 0.0, epsrel: 1e-8, limit: 2000 }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

impl Quad {
    pub fn new(epsabs: f64, epsrel: f64) -> Self {
        Self { epsabs, epsrel, ..Default::default() }
    }

    pub fn with_limit(mut self, limit: usize) -> Self {
        self.limit = limit;
        self
    }

    /// Integrates over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<QuadResult> {
        self.integrate_points(f, &[a, b])
    }

    /// Integrates over `[p_0, p_last]` with the listed interior breakpoints
    /// (must be sorted).
    pub fn integrate_points<F: Fn(f64) -> f64>(&self, f: F, points: &[f64]) -> Result<QuadResult> {
        let mut heap = BinaryHeap::new();
        let (mut total, mut total_err) = (0.0, 0.0);
        for w in points.windows(2) {
            if w[1] == w[0] {
                continue;
            }
            let (v, e) = gk21(&f, w[0], w[1]);
            total += v;
            total_err += e;
            heap.push(Panel { a: w[0], b: w[1], value: v, error: e });
        }
        let tol = |v: f64| self.epsabs.max(self.epsrel * v.abs());
        while total_err > tol(total) {
            if heap.len() >= self.limit {
                return Err(Error::Quadrature { estimate: total, error: total_err, tolerance: tol(total) });
            }
            let Some(p) = heap.pop() else { break };
            let mid = 0.5 * (p.a + p.b);
            if mid <= p.a || mid >= p.b {
                // interval can no longer be split in floating point
                return Err(Error::Quadrature { estimate: total, error: total_err, tolerance: tol(total) });
            }
            let (v1, e1) = gk21(&f, p.a, mid);
            let (v2, e2) = gk21(&f, mid, p.b);
            total += v1 + v2 - p.value;
            total_err += e1 + e2 - p.error;
            heap.push(Panel { a: p.a, b: mid, value: v1, error: e1 });
            heap.push(Panel { a: mid, b: p.b, value: v2, error: e2 });
            // Re-sum occasionally to shed accumulated cancellation in the running totals.
            if heap.len() % 64 == 0 {
                total = heap.iter().map(|p| p.value).sum();
                total_err = heap.iter().map(|p| p.error).sum();
            }
        }
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        Ok(QuadResult { value, error, intervals: heap.len() })
    }

    /// Integrates over `[a, inf)` through the map `x = a + u/(1-u)`.
    pub fn integrate_to_infinity<F: Fn(f64) -> f64>(&self, f: F, a: f64) -> Result<QuadResult> {
        let g = |u: f64| {
            if u >= 1.0 {
                return 0.0;
            }
            let x = a + u / (1.0 - u);
            let v = f(x) / ((1.0 - u) * (1.0 - u));
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        self.integrate(g, 0.0, 1.0)
    }
}
