//! Compensated accumulation and fixed-order parallel reduction.
//!
//! Every quadratic form and quadrature in the crate accumulates through
//! [`Neumaier`] or [`ComplexNeumaier`]. Parallel work is split into chunks
//! whose boundaries depend only on the problem size, never on the number of
//! worker threads, and chunk results are reduced left to right. That makes
//! results bit-identical for any thread count.

use std::ops::AddAssign;

use num_complex::Complex64;
use rayon::prelude::*;

/// Kahan–Babuška–Neumaier running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Fold another partial sum into this one.
    pub fn merge(&mut self, other: &Neumaier) {
        self.add(other.sum);
        self.add(other.comp);
    }
}

impl AddAssign<f64> for Neumaier {
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of complex values, real and imaginary parts kept separately.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ComplexNeumaier {
    re: Neumaier,
    im: Neumaier,
}

impl ComplexNeumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }

    pub fn merge(&mut self, other: &ComplexNeumaier) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }
}

impl AddAssign<Complex64> for ComplexNeumaier {
    fn add_assign(&mut self, rhs: Complex64) {
        self.add(rhs);
    }
}

/// Chunk length used by the fixed-partition reductions below.
pub const CHUNK: usize = 4096;

/// Sum `f(i)` for `i in 0..n`, in parallel, with a thread-count independent result.
pub fn par_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let parts: Vec<Neumaier> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            (lo..hi).map(&f).collect()
        })
        .collect();
    let mut total = Neumaier::new();
    for p in &parts {
        total.merge(p);
    }
    total.value()
}

/// Complex counterpart of [`par_sum`].
pub fn par_sum_complex<F>(n: usize, f: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync,
{
    let parts: Vec<ComplexNeumaier> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            let mut acc = ComplexNeumaier::new();
            for i in lo..hi {
                acc.add(f(i));
            }
            acc
        })
        .collect();
    let mut total = ComplexNeumaier::new();
    for p in &parts {
        total.merge(p);
    }
    total.value()
}
