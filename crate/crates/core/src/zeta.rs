//! Zeta on the critical line, Dirichlet polynomials, the smooth window and
//! the first two resonance moments.

use std::f64::consts::PI;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quad::{integrate, integrate_real};
use crate::resonator::{denominator_exact, numerator_exact, CoefficientTable};
use crate::special::{lagrange4, Chebyshev};
use crate::sum::{par_sum, par_sum_complex, ComplexNeumaier};

/// Smallest `t` accepted by [`zeta_half_rs`].
pub const RS_FLOOR: f64 = 30.0;
/// Largest `|t|` accepted by either evaluator.
pub const T_MAX: f64 = 1e9;

// ---------------------------------------------------------------------------
// smooth window

/// `exp(-1/x)·[x > 0]`.
fn s(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth step rising from 0 at `x ≤ 0` to 1 at `x ≥ 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = s(x);
        a / (a + s(1.0 - x))
    }
}

/// Grid spacing of the cached transform.
pub const PHIHAT_STEP: f64 = 0.01;
/// Cached range `0 ≤ y ≤ PHIHAT_YMAX`; larger `|y|` are integrated directly.
pub const PHIHAT_YMAX: f64 = 400.0;
const PHIHAT_VERSION: u32 = 1;
const PHIHAT_FILE: &str = "phihat.cache";

static PHIHAT_GRID: OnceLock<Vec<f64>> = OnceLock::new();

/// The fixed bump `Φ`: supported on `[1, 2]`, equal to 1 on `[5/4, 7/4]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SmoothWindow;

impl SmoothWindow {
    pub fn phi(t: f64) -> f64 {
        if t <= 1.0 || t >= 2.0 {
            0.0
        } else if t < 1.25 {
            smooth_step(4.0 * (t - 1.0))
        } else if t <= 1.75 {
            1.0
        } else {
            smooth_step(4.0 * (2.0 - t))
        }
    }

    /// `G(y) = ∫ Φ(3/2 + u) cos(uy) du`, so that `Φ̂(y) = e^{-3iy/2} G(y)`.
    fn centered(y: f64) -> f64 {
        // the plateau contributes sin(y/4)/y in closed form
        let plateau = if y == 0.0 { 0.25 } else { (0.25 * y).sin() / y };
        let (edge, _) = integrate_real(
            |u| Self::phi(1.5 + u) * (u * y).cos(),
            0.25,
            0.5,
            1e-16,
        )
        .expect("edge integral of a smooth bump converges");
        2.0 * (plateau + edge)
    }

    /// `Φ̂(y)` by adaptive quadrature of `∫ Φ(t) e^{-ity} dt` over `[1, 2]`.
    pub fn phi_hat_direct(y: f64) -> Result<Complex64> {
        let r = integrate(
            |t| Self::phi(t) * Complex64::new(0.0, -t * y).exp(),
            1.0,
            2.0,
            1e-15,
        )?;
        Ok(r.value)
    }

    fn grid() -> &'static Vec<f64> {
        PHIHAT_GRID.get_or_init(build_phihat_grid)
    }

    /// `Φ̂(y)`, interpolated from the cache for `|y| ≤ PHIHAT_YMAX`.
    pub fn phi_hat(y: f64) -> Complex64 {
        let ay = y.abs();
        let g = if ay <= PHIHAT_YMAX {
            let grid = Self::grid();
            let i = (ay / PHIHAT_STEP).round();
            if (ay - i * PHIHAT_STEP).abs() < 1e-15 * ay.max(1.0) {
                grid[i as usize]
            } else {
                lagrange4(grid, 0.0, PHIHAT_STEP, ay)
            }
        } else {
            Self::centered(ay)
        };
        Complex64::from_polar(g, -1.5 * y)
    }

    /// Load the transform cache from `dir`, or build it and write it there.
    pub fn init_cache(dir: &Path) -> Result<()> {
        let path = dir.join(PHIHAT_FILE);
        if PHIHAT_GRID.get().is_none() {
            if let Some(values) = read_phihat_cache(&path) {
                let _ = PHIHAT_GRID.set(values);
            }
        }
        if !path.exists() {
            fs::create_dir_all(dir)?;
            let grid = Self::grid();
            let mut out = std::io::BufWriter::new(fs::File::create(&path)?);
            writeln!(
                out,
                "# phihat.cache v{PHIHAT_VERSION} step={PHIHAT_STEP} ymax={PHIHAT_YMAX}"
            )?;
            for (i, &g) in grid.iter().enumerate() {
                let y = i as f64 * PHIHAT_STEP;
                let v = Complex64::from_polar(g, -1.5 * y);
                writeln!(out, "{y} {} {}", v.re, v.im)?;
            }
        }
        Ok(())
    }
}

fn build_phihat_grid() -> Vec<f64> {
    let n = (PHIHAT_YMAX / PHIHAT_STEP).round() as usize;
    (0..=n)
        .into_par_iter()
        .map(|i| SmoothWindow::centered(i as f64 * PHIHAT_STEP))
        .collect()
}

fn read_phihat_cache(path: &Path) -> Option<Vec<f64>> {
    let file = fs::File::open(path).ok()?;
    let mut lines = BufReader::new(file).lines();
    let header = lines.next()?.ok()?;
    if header != format!("# phihat.cache v{PHIHAT_VERSION} step={PHIHAT_STEP} ymax={PHIHAT_YMAX}") {
        return None;
    }
    let n = (PHIHAT_YMAX / PHIHAT_STEP).round() as usize;
    let mut values = Vec::with_capacity(n + 1);
    for line in lines {
        let line = line.ok()?;
        let mut it = line.split_whitespace().map(|x| x.parse::<f64>());
        let (y, re, im) = (it.next()?.ok()?, it.next()?.ok()?, it.next()?.ok()?);
        values.push((Complex64::new(re, im) * Complex64::from_polar(1.0, 1.5 * y)).re);
    }
    (values.len() == n + 1).then_some(values)
}

// ---------------------------------------------------------------------------
// zeta evaluation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZetaMethod {
    EulerMaclaurin,
    RiemannSiegel,
}

/// `ζ(1/2 + it)` with its method and error estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ZetaPoint {
    pub t: f64,
    pub value: Complex64,
    pub method: ZetaMethod,
    pub est_error: f64,
}

// B_{2j}/(2j)! for j = 1..5
const EM_BERNOULLI: [f64; 5] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
];

fn check_t(t: f64) -> Result<()> {
    if !t.is_finite() || t.abs() > T_MAX {
        return domain(format!(
            "|t| = {t} exceeds the double-precision budget {T_MAX:e}"
        ));
    }
    Ok(())
}

/// Euler–Maclaurin with `terms` summed terms and Bernoulli corrections
/// through `B_8`. The estimate is the size of the `B_10` correction.
pub fn zeta_half_em(t: f64, terms: usize) -> Result<ZetaPoint> {
    check_t(t)?;
    if terms < 10 {
        return domain(format!("Euler-Maclaurin needs at least 10 terms, got {terms}"));
    }
    let ta = t.abs();
    let s = Complex64::new(0.5, ta);
    let n = terms as f64;
    let mut acc = ComplexNeumaier::new();
    for k in 1..terms {
        let kf = k as f64;
        acc.add(Complex64::from_polar(kf.powf(-0.5), -ta * kf.ln()));
    }
    let n_s = Complex64::from_polar(n.powf(-0.5), -ta * n.ln());
    acc.add(n_s * n / (s - 1.0));
    acc.add(n_s * 0.5);
    let mut poch = s;
    let mut npow = n_s / n;
    let mut next = 0.0;
    for (j, &b) in EM_BERNOULLI.iter().enumerate() {
        let term = poch * npow * b;
        if j < 4 {
            acc.add(term);
        } else {
            next = term.norm();
        }
        let jf = 2.0 * j as f64;
        poch *= (s + jf + 1.0) * (s + jf + 2.0);
        npow /= n * n;
    }
    let value = acc.value();
    // each term carries a phase error of about t·log n ulps
    let rounding = f64::EPSILON * 2.0 * n.sqrt() * (4.0 + ta * n.ln());
    Ok(ZetaPoint {
        t,
        value: if t < 0.0 { value.conj() } else { value },
        method: ZetaMethod::EulerMaclaurin,
        est_error: next + rounding,
    })
}

/// Number of Euler–Maclaurin terms that comfortably resolves height `t`.
pub fn em_auto_terms(t: f64) -> usize {
    (t.abs() + 10.0).ceil().max(10.0) as usize
}

/// The Riemann–Siegel theta function.
pub fn theta(t: f64) -> f64 {
    let t2 = t * t;
    0.5 * t * (t / (2.0 * PI)).ln() - 0.5 * t - PI / 8.0
        + 1.0 / (48.0 * t)
        + 7.0 / (5760.0 * t * t2)
        + 31.0 / (80640.0 * t * t2 * t2)
        + 127.0 / (430080.0 * t * t2 * t2 * t2)
}

fn psi(z: Complex64) -> Complex64 {
    let two_pi = 2.0 * PI;
    (two_pi * (z * z - z - 1.0 / 16.0)).cos() / (two_pi * z).cos()
}

/// Derivatives `Ψ^(k)(p)` for `k = 0..=12` by a Cauchy integral on `|z - p| = 1/2`.
fn psi_derivatives(p: f64) -> [f64; 13] {
    const M: usize = 64;
    const R: f64 = 0.5;
    let samples: Vec<(f64, Complex64)> = (0..M)
        .map(|j| {
            let phi = 2.0 * PI * (j as f64 + 0.5) / M as f64;
            (phi, psi(Complex64::new(p, 0.0) + Complex64::from_polar(R, phi)))
        })
        .collect();
    let mut out = [0.0; 13];
    let mut fact = 1.0;
    for (k, slot) in out.iter_mut().enumerate() {
        if k > 0 {
            fact *= k as f64;
        }
        let mut acc = ComplexNeumaier::new();
        for &(phi, v) in &samples {
            acc.add(v * Complex64::from_polar(1.0, -(k as f64) * phi));
        }
        *slot = (acc.value().re / M as f64) * fact / R.powi(k as i32);
    }
    out
}

fn rs_coefficients() -> &'static [Chebyshev; 5] {
    static COEFFS: OnceLock<[Chebyshev; 5]> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let p2 = PI * PI;
        let p4 = p2 * p2;
        let p6 = p4 * p2;
        let p8 = p4 * p4;
        let c: [fn(&[f64; 13], f64, f64, f64, f64) -> f64; 5] = [
            |d, _, _, _, _| d[0],
            |d, p2, _, _, _| -d[3] / (96.0 * p2),
            |d, p2, p4, _, _| d[2] / (64.0 * p2) + d[6] / (18432.0 * p4),
            |d, p2, p4, p6, _| {
                -d[1] / (64.0 * p2) - d[5] / (3840.0 * p4) - d[9] / (5308416.0 * p6)
            },
            |d, p2, p4, p6, p8| {
                d[0] / (128.0 * p2)
                    + 19.0 * d[4] / (24576.0 * p4)
                    + 11.0 * d[8] / (5898240.0 * p6)
                    + d[12] / (2038431744.0 * p8)
            },
        ];
        c.map(|f| Chebyshev::fit(0.0, 1.0, 40, |p| f(&psi_derivatives(p), p2, p4, p6, p8)))
    })
}

/// Riemann–Siegel `Z(t)` with remainder corrections `C_0..C_4`.
pub fn hardy_z(t: f64) -> Result<(f64, f64)> {
    check_t(t)?;
    if t < RS_FLOOR {
        return domain(format!(
            "Riemann-Siegel needs t >= {RS_FLOOR}, got {t}; use zeta_half_em below the floor"
        ));
    }
    let th = theta(t);
    let tau = (t / (2.0 * PI)).sqrt();
    let m = tau.floor() as usize;
    let p = tau - m as f64;
    let main = 2.0 * par_sum(m, |i| {
        let n = (i + 1) as f64;
        (th - t * n.ln()).cos() / n.sqrt()
    });
    let coeffs = rs_coefficients();
    let mut rem = 0.0;
    let mut tpow = 1.0;
    for c in coeffs {
        rem += c.eval(p) * tpow;
        tpow /= tau;
    }
    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
    let z = main + sign * rem / tau.sqrt();
    let est = 0.05 * t.powf(-2.75) + 8.0 * f64::EPSILON * t * tau.sqrt();
    Ok((z, est))
}

/// `ζ(1/2 + it) = Z(t) e^{-iθ(t)}` for `t ≥ 30`.
pub fn zeta_half_rs(t: f64) -> Result<ZetaPoint> {
    let (z, est) = hardy_z(t)?;
    Ok(ZetaPoint {
        t,
        value: Complex64::from_polar(1.0, -theta(t)) * z,
        method: ZetaMethod::RiemannSiegel,
        est_error: est,
    })
}

/// Riemann–Siegel above the floor, Euler–Maclaurin below (negative `t` by reflection).
pub fn zeta_half(t: f64) -> Result<ZetaPoint> {
    if t.abs() >= RS_FLOOR {
        let p = zeta_half_rs(t.abs())?;
        Ok(ZetaPoint {
            t,
            value: if t < 0.0 { p.value.conj() } else { p.value },
            ..p
        })
    } else {
        zeta_half_em(t, em_auto_terms(t))
    }
}

// ---------------------------------------------------------------------------
// Dirichlet polynomials

/// `R(t) = Σ r(n) n^{-it}` with precomputed logarithms.
#[derive(Debug, Clone)]
pub struct DirichletPoly {
    logs: Vec<f64>,
    coeffs: Vec<f64>,
}

impl DirichletPoly {
    pub fn new(table: &CoefficientTable) -> Self {
        DirichletPoly {
            logs: table.entries().iter().map(|&(n, _)| (n as f64).ln()).collect(),
            coeffs: table.entries().iter().map(|&(_, r)| r).collect(),
        }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let mut acc = ComplexNeumaier::new();
        for (&l, &r) in self.logs.iter().zip(&self.coeffs) {
            acc.add(Complex64::from_polar(r, -t * l));
        }
        acc.value()
    }

    pub fn abs2(&self, t: f64) -> f64 {
        self.eval(t).norm_sqr()
    }

    /// Largest frequency `log n` present.
    pub fn max_log(&self) -> f64 {
        self.logs.last().copied().unwrap_or(0.0)
    }

    pub fn logs(&self) -> &[f64] {
        &self.logs
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

pub fn dirichlet_poly_eval(table: &CoefficientTable, t: f64) -> Complex64 {
    DirichletPoly::new(table).eval(t)
}

// ---------------------------------------------------------------------------
// moments

/// Direct and diagonal values of the two resonance moments over `[T, 2T]`.
#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub m1_direct: f64,
    pub m1_diag: f64,
    pub m2_direct: Complex64,
    pub m2_diag: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub quadrature_error: f64,
    pub step: f64,
}

/// Uniform grid step actually used for a moment quadrature.
pub fn moment_step(table: &CoefficientTable, grid_step: f64) -> f64 {
    let ln_n = (table.n_max() as f64).ln();
    if ln_n > 0.0 {
        grid_step.min(PI / (10.0 * ln_n))
    } else {
        grid_step
    }
}

pub fn moments(table: &CoefficientTable, t_big: f64, grid_step: f64) -> Result<MomentReport> {
    if !(t_big >= RS_FLOOR) || !t_big.is_finite() || 2.0 * t_big > T_MAX {
        return domain(format!("T must lie in [{RS_FLOOR}, {}], got {t_big}", T_MAX / 2.0));
    }
    if (table.n_max() as f64) > t_big.powf(0.9) {
        return domain(format!(
            "support bound N = {} exceeds T^0.9 = {:.3}",
            table.n_max(),
            t_big.powf(0.9)
        ));
    }
    if !(grid_step > 0.0 && grid_step <= 0.05) {
        return domain(format!("grid_step must lie in (0, 0.05], got {grid_step}"));
    }
    let poly = DirichletPoly::new(table);
    let h0 = moment_step(table, grid_step);
    // an even number of panels so the 2h rule shares the grid
    let mut panels = (t_big / h0).ceil() as usize;
    panels += panels % 2;
    let h = t_big / panels as f64;

    // Φ(t/T) vanishes with all derivatives at both ends, so endpoints carry no weight
    let samples: Vec<(f64, Complex64)> = (0..panels + 1)
        .into_par_iter()
        .with_min_len(256)
        .map(|i| {
            let t = t_big + i as f64 * h;
            let w = SmoothWindow::phi(t / t_big);
            if w == 0.0 {
                return (0.0, Complex64::new(0.0, 0.0));
            }
            let r2 = poly.abs2(t) * w;
            let z = zeta_half(t).map(|p| p.value).unwrap_or(Complex64::new(f64::NAN, 0.0));
            (r2, z * r2)
        })
        .collect();
    if samples.iter().any(|(_, z)| z.re.is_nan()) {
        return Err(Error::Iteration {
            what: "moment quadrature",
            iterations: panels,
            last: f64::NAN,
        });
    }
    let m1 = h * par_sum(samples.len(), |i| samples[i].0);
    let m1_2h = 2.0 * h * par_sum(samples.len().div_ceil(2), |i| samples[2 * i].0);
    let m2 = par_sum_complex(samples.len(), |i| samples[i].1) * h;
    let m2_2h = par_sum_complex(samples.len().div_ceil(2), |i| samples[2 * i].1) * (2.0 * h);
    let phi0 = SmoothWindow::phi_hat(0.0).re;
    Ok(MomentReport {
        m1_direct: m1,
        m1_diag: t_big * phi0 * denominator_exact(table),
        m2_direct: m2,
        m2_diag: t_big * phi0 * numerator_exact(table),
        t: t_big,
        n: table.n_max(),
        quadrature_error: (m1 - m1_2h).abs().max((m2 - m2_2h).norm()),
        step: h,
    })
}

/// `(1/T) ∫_T^{2T} |ζ(1/2+it)|² dt` by the trapezoid rule with step at most `step`.
pub fn mean_square_zeta(t_big: f64, step: f64) -> Result<f64> {
    if !(t_big >= RS_FLOOR) || 2.0 * t_big > T_MAX {
        return domain(format!("T must lie in [{RS_FLOOR}, {}], got {t_big}", T_MAX / 2.0));
    }
    if !(step > 0.0) {
        return domain("step must be positive");
    }
    let panels = (t_big / step).ceil() as usize;
    let h = t_big / panels as f64;
    let total = par_sum(panels + 1, |i| {
        let t = t_big + i as f64 * h;
        let w = if i == 0 || i == panels { 0.5 } else { 1.0 };
        let (z, _) = hardy_z(t).expect("t above the Riemann-Siegel floor");
        w * z * z
    });
    Ok(total * h / t_big)
}
