//! Kloosterman sums, Bessel functions and the averaged identities for
//! holomorphic cusp forms of weight `k` on the full modular group.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{self, gcd, mod_inverse};
use crate::error::{domain, Error, Result};
use crate::resonator::CoefficientTable;
use crate::special::{ln_factorial, ln_gamma, ln_gamma_real};
use crate::sum::{par_sum, Neumaier};

/// Largest modulus accepted by [`kloosterman`].
pub const KLOOSTERMAN_CAP: u64 = 1_000_000;

/// `S(m, n; c) = Σ*_{a mod c} e((am + ā n)/c)`, which is real.
pub fn kloosterman(m: u64, n: u64, c: u64) -> Result<f64> {
    if c == 0 {
        return domain("Kloosterman modulus must be >= 1");
    }
    if c > KLOOSTERMAN_CAP {
        return Err(Error::Resource {
            what: "Kloosterman modulus",
            requested: c,
            cap: KLOOSTERMAN_CAP,
        });
    }
    let (m, n) = ((m % c) as u128, (n % c) as u128);
    let cc = c as u128;
    let mut re = Neumaier::new();
    let mut im = Neumaier::new();
    for a in 0..c {
        if gcd(a, c) != 1 {
            continue;
        }
        let inv = mod_inverse(a, c).expect("a is a unit") as u128;
        let r = ((a as u128 * m + inv * n) % cc) as f64;
        let (s, co) = (2.0 * PI * r / c as f64).sin_cos();
        re.add(co);
        im.add(s);
    }
    debug_assert!(im.value().abs() <= 1e-12 * (c as f64).max(1.0));
    Ok(re.value())
}

/// `J_ν(x)` from the ascending series, with the bound
/// `|J_ν(x)| ≤ e^{x/2} (x/2)^ν / ν!`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BesselValue {
    pub value: f64,
    pub paper_bound: f64,
    /// Rounding estimate: a few ulps of the sum of absolute terms.
    pub est_error: f64,
}

/// Series terms are summed until they fall below this fraction of the largest.
const SERIES_EPS: f64 = 1e-18;

pub fn bessel_j(order: u32, x: f64) -> Result<BesselValue> {
    let nu = order as f64;
    if !(x >= 0.0) || x > 2.0 * (nu + 1.0) {
        return domain(format!(
            "Bessel argument x = {x} outside the series regime 0 <= x <= 2(order + 1) = {}",
            2.0 * (nu + 1.0)
        ));
    }
    let ln_bound = |x: f64| x / 2.0 + nu * (x / 2.0).ln() - ln_factorial(order as u64);
    if x == 0.0 {
        let v = if order == 0 { 1.0 } else { 0.0 };
        return Ok(BesselValue {
            value: v,
            paper_bound: v,
            est_error: 0.0,
        });
    }
    let lh = (x / 2.0).ln();
    let mut sum = Neumaier::new();
    let mut abs_sum = 0.0;
    let mut max_term: f64 = 0.0;
    let mut j = 0u64;
    loop {
        let lt = (2 * j) as f64 * lh + nu * lh - ln_factorial(j) - ln_factorial(j + order as u64);
        let t = lt.exp();
        sum.add(if j % 2 == 0 { t } else { -t });
        abs_sum += t;
        max_term = max_term.max(t);
        // terms decrease once j(j+ν) > (x/2)²
        if (j * (j + order as u64)) as f64 > x * x / 4.0 && t <= SERIES_EPS * max_term {
            break;
        }
        j += 1;
    }
    let mut value = sum.value();
    let mut est_error = 4.0 * f64::EPSILON * abs_sum;
    if est_error > MILLER_SWITCH {
        // heavy cancellation: the backward recurrence is stable here
        value = bessel_j_miller(order, x);
        est_error = MILLER_ERROR;
    }
    Ok(BesselValue {
        value,
        paper_bound: ln_bound(x).exp(),
        est_error,
    })
}

/// Series rounding error above which [`bessel_j`] switches to Miller's algorithm.
const MILLER_SWITCH: f64 = 1e-14;
/// Absolute accuracy claimed for the backward recurrence (`|J_ν| ≤ 1`).
const MILLER_ERROR: f64 = 1e-14;

/// Miller's backward recurrence normalised by `J_0 + 2 Σ J_{2j} = 1`.
fn bessel_j_miller(order: u32, x: f64) -> f64 {
    let top = order as f64 + x;
    let mut start = (top + 40.0 + 10.0 * top.sqrt()) as usize;
    start += start % 2;
    let (mut next, mut cur) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    let mut want = 0.0;
    for n in (1..=start).rev() {
        let prev = 2.0 * n as f64 / x * cur - next;
        next = cur;
        cur = prev;
        // cur is now J_{n-1}
        if n - 1 == order as usize {
            want = cur;
        }
        if (n - 1) % 2 == 0 && n > 1 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            want *= 1e-250;
        }
    }
    norm += cur;
    want / norm
}

/// Inputs to the Petersson formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeterssonParams {
    pub k: u32,
    pub m: u64,
    pub n: u64,
    /// `None` picks the smallest `c_max` with tail bound below [`PETERSSON_TAIL`].
    pub c_max: Option<u64>,
}

pub const PETERSSON_TAIL: f64 = 1e-12;
pub const PETERSSON_C_CAP: u64 = 10_000;

impl PeterssonParams {
    pub fn new(k: u32, m: u64, n: u64) -> Self {
        PeterssonParams { k, m, n, c_max: None }
    }

    pub fn with_c_max(mut self, c_max: u64) -> Self {
        self.c_max = Some(c_max);
        self
    }

    /// `4π√(mn)`, the Bessel argument at `c = 1`.
    pub fn x(&self) -> f64 {
        4.0 * PI * ((self.m as f64) * (self.n as f64)).sqrt()
    }

    /// Whether `4π√(mn) ≤ k/10`, where the off-diagonal is `O(e^{-k})`.
    pub fn in_regime(&self) -> bool {
        self.x() <= self.k as f64 / 10.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 12 || self.k % 2 == 1 {
            return domain(format!("weight k must be even and >= 12, got {}", self.k));
        }
        if self.m == 0 || self.n == 0 {
            return domain("m and n must be positive");
        }
        if self.x() > 2.0 * self.k as f64 {
            return domain(format!(
                "4π√(mn) = {} exceeds 2k = {}; Bessel series regime violated",
                self.x(),
                2 * self.k
            ));
        }
        match self.c_max {
            Some(0) => domain("c_max must be >= 1"),
            Some(c) if c > KLOOSTERMAN_CAP => Err(Error::Resource {
                what: "Petersson c_max",
                requested: c,
                cap: KLOOSTERMAN_CAP,
            }),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PeterssonResult {
    pub value: f64,
    pub delta: u8,
    pub c_max: u64,
    pub tail_bound: f64,
    /// `i^k`, which is ±1 for even `k`.
    pub sign: i8,
    pub in_regime: bool,
}

/// `2π Σ_{c > C} e^{x/2c} (x/2c)^{k-1}/(k-1)!`, using `|S(m,n;c)| ≤ c`.
pub fn petersson_tail(k: u32, x: f64, c_max: u64) -> f64 {
    let s = (k - 1) as f64;
    let c1 = (c_max + 1) as f64;
    let ln_first = x / (2.0 * c1) + s * (x / (2.0 * c1)).ln() - ln_factorial((k - 1) as u64);
    // Σ_{c ≥ C+1} c^{-s} ≤ (C+1)^{-s} (1 + (C+1)/(s-1))
    2.0 * PI * ln_first.exp() * (1.0 + c1 / (s - 1.0))
}

pub fn petersson_rhs(params: &PeterssonParams) -> Result<PeterssonResult> {
    params.validate()?;
    let k = params.k;
    let x = params.x();
    let c_max = match params.c_max {
        Some(c) => c,
        None => {
            let mut c = 1;
            while c < PETERSSON_C_CAP && petersson_tail(k, x, c) > PETERSSON_TAIL {
                c += 1;
            }
            c
        }
    };
    let sign: i8 = if k % 4 == 0 { 1 } else { -1 };
    let terms = (1..=c_max)
        .into_par_iter()
        .map(|c| -> Result<f64> {
            let s = kloosterman(params.m, params.n, c)?;
            if s == 0.0 {
                return Ok(0.0);
            }
            Ok(s / c as f64 * bessel_j(k - 1, x / c as f64)?.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut acc = Neumaier::new();
    for t in terms {
        acc.add(t);
    }
    let delta = u8::from(params.m == params.n);
    Ok(PeterssonResult {
        value: delta as f64 + 2.0 * PI * sign as f64 * acc.value(),
        delta,
        c_max,
        tail_bound: petersson_tail(k, x, c_max),
        sign,
        in_regime: params.in_regime(),
    })
}

/// Largest weight accepted by [`weight_v`].
pub const V_K_CAP: u32 = 400;
pub const V_HEIGHT: f64 = 80.0;
pub const V_STEP: f64 = 0.01;

/// Contour actually used for `V(x)` at weight `k`: line `Re s = σ`, height `H`.
///
/// `σ` minimises `|integrand|` on the real axis, so the quadrature never has to
/// cancel terms much larger than the result.
pub fn v_contour(x: f64, k: u32) -> (f64, f64) {
    let half_k = k as f64 / 2.0;
    let l2px = (2.0 * PI * x).ln();
    let g = |s: f64| -s * l2px + ln_gamma_real(s + half_k) - s.ln();
    let (mut lo, mut hi) = (1e-3f64.ln(), (2.0 * PI * x + 10.0).ln());
    for _ in 0..100 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if g(a.exp()) < g(b.exp()) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let sigma = (0.5 * (lo + hi)).exp();
    let height = V_HEIGHT.max(12.0 * (sigma + half_k).sqrt());
    (sigma, height)
}

fn check_v(x: f64, k: u32) -> Result<()> {
    if !(x > 0.0) {
        return domain(format!("V needs x > 0, got {x}"));
    }
    if k < 12 || k % 2 == 1 {
        return domain(format!("weight k must be even and >= 12, got {k}"));
    }
    if k > V_K_CAP {
        return domain(format!("weight k = {k} above the contour cap {V_K_CAP}"));
    }
    Ok(())
}

/// `V(x) = (1/2πi) ∫_{(σ)} (2π)^{-s} Γ(s + k/2)/Γ(k/2) x^{-s} ds/s`.
pub fn weight_v(x: f64, k: u32) -> Result<f64> {
    check_v(x, k)?;
    let (sigma, height) = v_contour(x, k);
    weight_v_contour(x, k, sigma, height, V_STEP)
}

/// [`weight_v`] on an explicit contour (`σ > 0`), by the trapezoid rule.
pub fn weight_v_contour(x: f64, k: u32, sigma: f64, height: f64, step: f64) -> Result<f64> {
    check_v(x, k)?;
    if !(sigma > 0.0 && height > 0.0 && step > 0.0) {
        return domain("contour needs sigma, height and step > 0");
    }
    let half_k = k as f64 / 2.0;
    let lg = ln_gamma_real(half_k);
    let l2px = (2.0 * PI * x).ln();
    let n = (height / step).round() as usize;
    let sum = par_sum(n + 1, |j| {
        let y = j as f64 * step;
        let s = Complex64::new(sigma, y);
        let w = if j == 0 || j == n { 0.5 } else { 1.0 };
        let v = (ln_gamma(s + half_k) - lg - s * l2px).exp() / s;
        w * v.re
    });
    Ok(sum * step / PI)
}

/// `mn/d²` over `d | (m, n)`, ascending.
pub fn hecke_expand(m: u64, n: u64) -> Result<Vec<u64>> {
    if m == 0 || n == 0 {
        return domain("m and n must be positive");
    }
    let mn = m.checked_mul(n).ok_or(Error::Overflow("mn"))?;
    let mut out: Vec<u64> = arith::divisors(gcd(m, n)).into_iter().map(|d| mn / (d * d)).collect();
    out.sort_unstable();
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModformDiagonal {
    /// `Σ_{m,n} r(m) r(n) σ((m,n)) / √(mn)`.
    pub sum_exact: f64,
    /// `Π (1 + r(p)²(1 + 1/p) + 2 r(p)/√p)`.
    pub euler_approx: f64,
    pub ratio: f64,
    /// Whether `N ≤ √k / 100`.
    pub admissible: bool,
}

pub const MODFORM_PAIR_CAP: u64 = 100_000_000;

pub fn m2_modform_diagonal(table: &CoefficientTable, k: u32) -> Result<ModformDiagonal> {
    if k < 12 || k % 2 == 1 {
        return domain(format!("weight k must be even and >= 12, got {k}"));
    }
    let len = table.len() as u64;
    if len * len > MODFORM_PAIR_CAP {
        return Err(Error::Resource {
            what: "modular-form diagonal pairs",
            requested: len * len,
            cap: MODFORM_PAIR_CAP,
        });
    }
    let e = table.entries();
    let sum_exact = par_sum(e.len(), |i| {
        let (m, rm) = e[i];
        let mut acc = Neumaier::new();
        for &(n, rn) in e {
            let g = gcd(m, n);
            let sg = arith::sigma(g).expect("gcd is within the table") as f64;
            acc.add(rm * rn * sg / ((m as f64) * (n as f64)).sqrt());
        }
        acc.value()
    });
    let euler_approx = crate::resonator::euler_product_by(table, |p, r| {
        let pf = p as f64;
        1.0 + r * r * (1.0 + 1.0 / pf) + 2.0 * r / pf.sqrt()
    })?;
    Ok(ModformDiagonal {
        sum_exact,
        euler_approx,
        ratio: sum_exact / euler_approx,
        admissible: (table.n_max() as f64) <= (k as f64).sqrt() / 100.0,
    })
}
