//! Globally adaptive Gauss–Kronrod (10/21-point) quadrature.
//!
//! An integral is described as a list of [`Segment`]s. Finite segments are
//! integrated directly; a semi-infinite [`Segment::Tail`] is mapped onto
//! `[0, 1)` through `y = start + scale * t / (1 - t)`. Any exponentially
//! decaying integrand vanishes smoothly at `t = 1` under this map, whatever
//! its actual decay length; `scale` only positions the bulk of the mass near
//! the middle of `[0, 1)`. All panels of all segments share one priority
//! queue and one global error budget.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::sum::NeumaierSum;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_067_948,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], ...
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// One piece of an integration domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Finite { a: f64, b: f64 },
    /// `[start, inf)` with characteristic decay length `scale`.
    Tail { start: f64, scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-10,
            max_intervals: 4000,
        }
    }
}

impl QuadOptions {
    pub fn relative(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOutcome {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    segment: usize,
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut err = err.abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    err
}

/// Single 21-point Kronrod rule on `[lo, hi]` with the embedded 10-point Gauss
/// rule used for the error estimate. Returns `(value, error)`.
fn gk21<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let abs_half = half.abs();

    let fc = f(center);
    let mut res_k = WGK[10] * fc;
    let mut res_g = 0.0;
    let mut resabs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let err = rescale_error((res_k - res_g) * half, resabs * abs_half, resasc * abs_half);
    (res_k * half, err)
}

struct Mapped<'a, F> {
    f: &'a F,
    segments: &'a [Segment],
}

impl<F: Fn(f64) -> f64> Mapped<'_, F> {
    fn bounds(&self, i: usize) -> (f64, f64) {
        match self.segments[i] {
            Segment::Finite { a, b } => (a, b),
            Segment::Tail { .. } => (0.0, 1.0),
        }
    }

    fn rule(&self, i: usize, lo: f64, hi: f64) -> (f64, f64) {
        match self.segments[i] {
            Segment::Finite { .. } => gk21(self.f, lo, hi),
            Segment::Tail { start, scale } => {
                let g = |t: f64| {
                    let s = 1.0 - t;
                    if s <= 0.0 {
                        return 0.0;
                    }
                    let v = (self.f)(start + scale * t / s);
                    if v == 0.0 {
                        0.0
                    } else {
                        v * scale / (s * s)
                    }
                };
                gk21(&g, lo, hi)
            }
        }
    }
}

/// Integrate `f` over the union of `segments`.
///
/// Stops when the summed error estimate is below
/// `max(abs_tol, rel_tol * |value|)` or when `max_intervals` panels are in
/// use; in the latter case `converged` is `false`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, segments: &[Segment], opts: &QuadOptions) -> QuadOutcome {
    let mapped = Mapped {
        f: &f,
        segments,
    };
    let mut heap = BinaryHeap::new();
    // Panels too narrow to split further still count towards the totals.
    let mut frozen: Vec<Panel> = Vec::new();
    for i in 0..segments.len() {
        let (lo, hi) = mapped.bounds(i);
        if hi == lo {
            continue;
        }
        let (value, error) = mapped.rule(i, lo, hi);
        heap.push(Panel {
            segment: i,
            lo,
            hi,
            value,
            error,
        });
    }

    let totals = |heap: &BinaryHeap<Panel>, frozen: &[Panel]| {
        let mut v = NeumaierSum::new();
        let mut e = NeumaierSum::new();
        for p in heap.iter().chain(frozen) {
            v.add(p.value);
            e.add(p.error);
        }
        (v.value(), e.value())
    };

    let (mut value, mut error) = totals(&heap, &frozen);
    loop {
        if !value.is_finite() || !error.is_finite() {
            break;
        }
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target {
            // Recompute from scratch so drift in the running sums cannot fake convergence.
            let (v, e) = totals(&heap, &frozen);
            value = v;
            error = e;
            if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
                break;
            }
        }
        if heap.len() + frozen.len() >= opts.max_intervals {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.lo + worst.hi);
        let width = (worst.hi - worst.lo).abs();
        if width <= 64.0 * f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE) || mid == worst.lo || mid == worst.hi {
            frozen.push(worst);
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let (v1, e1) = mapped.rule(worst.segment, worst.lo, mid);
        let (v2, e2) = mapped.rule(worst.segment, mid, worst.hi);
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Panel {
            segment: worst.segment,
            lo: worst.lo,
            hi: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            segment: worst.segment,
            lo: mid,
            hi: worst.hi,
            value: v2,
            error: e2,
        });
    }

    let (value, abs_error) = totals(&heap, &frozen);
    let converged = value.is_finite()
        && abs_error.is_finite()
        && abs_error <= opts.abs_tol.max(opts.rel_tol * value.abs());
    QuadOutcome {
        value,
        abs_error,
        intervals: heap.len() + frozen.len(),
        converged,
    }
}

/// Integrate over `[a, b]`.
pub fn integrate_finite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> QuadOutcome {
    integrate(f, &[Segment::Finite { a, b }], opts)
}

/// Finite segments joining consecutive `points`, followed by a tail from the
/// last point with the given decay `scale`.
pub fn segments_with_tail(points: &[f64], scale: f64) -> Vec<Segment> {
    let mut segs: Vec<Segment> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| Segment::Finite { a: w[0], b: w[1] })
        .collect();
    if let Some(&last) = points.last() {
        segs.push(Segment::Tail { start: last, scale });
    }
    segs
}
