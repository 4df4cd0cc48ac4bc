//! Adaptive Gauss–Kronrod quadrature.

use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sum::ComplexNeumaier;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
}

// returns (kronrod estimate, |kronrod - gauss|, ∫|f| estimate)
fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs = fc.norm() * WGK[7];
    for j in 0..7 {
        let x = h * XGK[j];
        let (lo, hi) = (f(c - x), f(c + x));
        let s = lo + hi;
        kronrod += s * WGK[j];
        abs += (lo.norm() + hi.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let k = kronrod * h;
    let g = gauss * h;
    (k, (k - g).norm(), abs * h.abs())
}

struct Panel {
    lo: f64,
    hi: f64,
    value: Complex64,
    error: f64,
    abs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error).is_eq()
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrate a complex-valued `f` over `[a, b]` to absolute tolerance `tol`
/// with 15-point Kronrod panels, always bisecting the panel with the largest
/// error estimate. Stops early once the total error estimate is at the
/// rounding level of `∫|f|`.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    const MAX_PANELS: usize = 200_000;
    let make = |lo: f64, hi: f64| {
        let (value, error, abs) = gk15(&f, lo, hi);
        Panel { lo, hi, value, error, abs }
    };
    let mut heap = BinaryHeap::new();
    let first = make(a, b);
    let mut err = first.error;
    let mut abs = first.abs;
    heap.push(first);
    let min_width = 1e-12 * (b - a).abs().max(1.0);
    while err > tol && err > 50.0 * f64::EPSILON * abs {
        if heap.len() >= MAX_PANELS {
            return Err(Error::Iteration {
                what: "adaptive quadrature",
                iterations: heap.len(),
                last: err,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        if (worst.hi - worst.lo).abs() < min_width {
            heap.push(worst);
            break;
        }
        let mid = 0.5 * (worst.lo + worst.hi);
        let (left, right) = (make(worst.lo, mid), make(mid, worst.hi));
        err += left.error + right.error - worst.error;
        abs += left.abs + right.abs - worst.abs;
        heap.push(left);
        heap.push(right);
    }
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.lo.total_cmp(&q.lo));
    let mut total = ComplexNeumaier::new();
    let mut error = 0.0;
    for p in &panels {
        total.add(p.value);
        error += p.error;
    }
    Ok(QuadResult {
        value: total.value(),
        error,
    })
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    let r = integrate(|x| Complex64::new(f(x), 0.0), a, b, tol)?;
    Ok((r.value.re, r.error))
}
