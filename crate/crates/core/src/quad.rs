//! Globally adaptive Gauss–Kronrod (10/21-point) quadrature.
//!
//! Intervals are kept in a max-heap keyed on their error estimate and the
//! worst one is bisected until the summed error meets the tolerance. Half
//! infinite pieces are mapped onto `(0, 1]` with `x = a + L (1 − t) / t`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
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

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rel: 1e-8, abs: 0.0, max_intervals: 20_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
    pub evaluations: usize,
}

/// Integration domain piece.
#[derive(Debug, Clone, Copy)]
enum Piece {
    Finite(f64, f64),
    /// `[a, ∞)` with length scale `L`.
    Upper(f64, f64),
    /// `(−∞, b]` with length scale `L`.
    Lower(f64, f64),
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    piece: usize,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 21-point Kronrod evaluation with the QUADPACK error heuristic.
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_g = 0.0;
    let mut res_k = WGK[10] * fc;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let round = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && round > err {
        err = round;
    }
    (result, err)
}

fn eval_piece<F: Fn(f64) -> f64>(f: &F, piece: Piece, a: f64, b: f64) -> (f64, f64) {
    match piece {
        Piece::Finite(..) => gk21(f, a, b),
        Piece::Upper(x0, scale) => {
            let g = |t: f64| {
                let x = x0 + scale * (1.0 - t) / t;
                f(x) * scale / (t * t)
            };
            gk21(&g, a, b)
        }
        Piece::Lower(x0, scale) => {
            let g = |t: f64| {
                let x = x0 - scale * (1.0 - t) / t;
                f(x) * scale / (t * t)
            };
            gk21(&g, a, b)
        }
    }
}

fn run<F: Fn(f64) -> f64>(f: &F, pieces: &[Piece], tol: Tolerance) -> Result<Estimate> {
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0usize;
    for (i, &piece) in pieces.iter().enumerate() {
        let (a, b) = match piece {
            Piece::Finite(a, b) => (a, b),
            Piece::Upper(..) | Piece::Lower(..) => (0.0, 1.0),
        };
        if a == b {
            continue;
        }
        let (value, error) = eval_piece(f, piece, a, b);
        evaluations += 21;
        heap.push(Segment { piece: i, a, b, value, error });
    }

    let sums =
        |heap: &BinaryHeap<Segment>| heap.iter().fold((0.0, 0.0), |(v, e), s: &Segment| (v + s.value, e + s.error));
    let (mut total, mut err) = sums(&heap);
    loop {
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::numerical(format!("quadrature produced a non-finite value ({total}, error {err})")));
        }
        let target = tol.abs.max(tol.rel * total.abs());
        if err <= target {
            // running sums drift; report exact ones
            let (value, abs_error) = sums(&heap);
            if abs_error <= tol.abs.max(tol.rel * value.abs()) {
                return Ok(Estimate { value, abs_error, intervals: heap.len(), evaluations });
            }
            (total, err) = (value, abs_error);
            continue;
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::numerical(format!(
                "quadrature did not converge in {} intervals: value {total:.6e}, \
                 error {err:.3e}, achieved relative tolerance {:.3e}",
                tol.max_intervals,
                err / total.abs()
            )));
        }
        let worst = heap.pop().expect("heap is never empty here");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::numerical(format!(
                "quadrature interval [{:e}, {:e}] cannot be bisected further; \
                 achieved relative tolerance {:.3e}",
                worst.a,
                worst.b,
                err / total.abs()
            )));
        }
        total -= worst.value;
        err -= worst.error;
        let piece = pieces[worst.piece];
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = eval_piece(f, piece, a, b);
            evaluations += 21;
            total += value;
            err += error;
            heap.push(Segment { piece: worst.piece, a, b, value, error });
        }
    }
}

/// Integrate `f` over `[points[0], points[last]]`, splitting at every
/// interior point.
pub fn integrate<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: Tolerance) -> Result<Estimate> {
    if points.len() < 2 {
        return Err(Error::domain("need at least two integration points"));
    }
    let pieces: Vec<Piece> = points.windows(2).map(|w| Piece::Finite(w[0], w[1])).collect();
    run(&f, &pieces, tol)
}

/// Integrate `f` over the whole real line. `breakpoints` must be sorted;
/// they split the finite core, and the two tails beyond the outermost
/// points are mapped onto finite intervals with length scale `tail_scale`.
pub fn integrate_real_line<F: Fn(f64) -> f64>(
    f: F,
    breakpoints: &[f64],
    tail_scale: f64,
    tol: Tolerance,
) -> Result<Estimate> {
    if breakpoints.is_empty() || !(tail_scale > 0.0) {
        return Err(Error::domain("real-line quadrature needs at least one breakpoint and a positive tail scale"));
    }
    if breakpoints.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::domain("breakpoints must be sorted"));
    }
    let mut pieces = Vec::with_capacity(breakpoints.len() + 1);
    pieces.push(Piece::Lower(breakpoints[0], tail_scale));
    pieces.extend(breakpoints.windows(2).map(|w| Piece::Finite(w[0], w[1])));
    pieces.push(Piece::Upper(*breakpoints.last().unwrap(), tail_scale));
    run(&f, &pieces, tol)
}
