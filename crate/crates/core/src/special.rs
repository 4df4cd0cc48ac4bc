//! Log-gamma on the complex plane and Chebyshev interpolation.

use std::f64::consts::PI;

use num_complex::Complex64;

// B_{2j} / (2j (2j-1)) for j = 1..8
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

/// `ln Γ(z)` for `Re z > 0` (any branch; callers only exponentiate or take real parts).
///
/// Shifts the argument to `|z| >= 15` with the recurrence and applies the
/// Stirling series through the `z^-15` term.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    assert!(z.re > 0.0, "ln_gamma requires Re z > 0");
    let mut z = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while z.norm() < 15.0 {
        shift += z.ln();
        z += 1.0;
    }
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv;
    for c in STIRLING {
        series += pow * c;
        pow *= inv2;
    }
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series - shift
}

pub fn ln_gamma_real(x: f64) -> f64 {
    ln_gamma(Complex64::new(x, 0.0)).re
}

/// `ln n!` for small `n` via the gamma function.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma_real(n as f64 + 1.0)
    }
}

/// Chebyshev expansion of a function on `[a, b]`.
#[derive(Debug, Clone)]
pub struct Chebyshev {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Interpolate `f` at `n` Chebyshev points of the first kind.
    pub fn fit<F: Fn(f64) -> f64>(a: f64, b: f64, n: usize, f: F) -> Self {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let values: Vec<f64> = (0..n)
            .map(|k| {
                let theta = PI * (k as f64 + 0.5) / n as f64;
                f(mid + half * theta.cos())
            })
            .collect();
        let coeffs = (0..n)
            .map(|j| {
                let s: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * (PI * j as f64 * (k as f64 + 0.5) / n as f64).cos())
                    .sum();
                2.0 * s / n as f64
            })
            .collect();
        Chebyshev { a, b, coeffs }
    }

    /// Clenshaw evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let u = (2.0 * x - self.a - self.b) / (self.b - self.a);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * u * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        u * b1 - b2 + 0.5 * self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

/// Four-point Lagrange interpolation on a uniform grid `x0 + i*h`.
pub(crate) fn lagrange4(values: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = values.len();
    debug_assert!(n >= 4);
    let pos = (x - x0) / h;
    let i = (pos.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let u = pos - i as f64;
    let (y0, y1, y2, y3) = (values[i], values[i + 1], values[i + 2], values[i + 3]);
    let l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    let l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
    let l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
    let l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
    y0 * l0 + y1 * l1 + y2 * l2 + y3 * l3
}
