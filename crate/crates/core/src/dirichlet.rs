//! Central values `L(1/2, χ_{8d})` of quadratic characters and the resonance
//! sums that locate extreme ones.

use std::f64::consts::PI;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{self, kronecker};
use crate::error::{domain, Error, Result};
use crate::resonator::{build_table, CoefficientTable, ResonatorSpec, Scheme};
use crate::special::{lagrange4, ln_gamma, ln_gamma_real};
use crate::sum::{par_sum, Neumaier};

/// Contour height for `W`.
pub const W_HEIGHT: f64 = 60.0;
/// Trapezoid step along the contour.
pub const W_STEP: f64 = 0.01;
/// `W(ξ)` is taken to be 0 from here on.
pub const W_CUTOFF: f64 = 50.0;
/// Grid spacing of the `W` cache in `u = √ξ`.
pub const W_USTEP: f64 = 2e-3;
/// Where `l_half` truncates: `n √π / √(8d) ≥ L_CUTOFF`.
pub const L_CUTOFF: f64 = 45.0;
/// Interpolation error allowance per unit weight in [`l_half`] estimates.
const W_INTERP_ERROR: f64 = 1e-10;
const W_VERSION: u32 = 1;
const W_FILE: &str = "wweight.cache";

/// `ζ(2)`.
const ZETA2: f64 = PI * PI / 6.0;

/// `W(ξ) = (1/2πi) ∫_{(1)} Γ(s/2 + 1/4)/Γ(1/4) ξ^{-s} ds/s` by the trapezoid
/// rule on `Re s = 1`, `|Im s| ≤ height`.
pub fn weight_w_contour(xi: f64, height: f64, step: f64) -> Result<f64> {
    if !(xi > 0.0) {
        return domain(format!("W needs xi > 0, got {xi}"));
    }
    let nodes = w_nodes(height, step);
    Ok(eval_nodes(&nodes, xi))
}

// (y_j, weight_j · Γ(s/2+1/4) / (π Γ(1/4) s)) on the upper half of the line
fn w_nodes(height: f64, step: f64) -> Vec<(f64, Complex64)> {
    let n = (height / step).round() as usize;
    let lg14 = ln_gamma_real(0.25);
    (0..=n)
        .map(|j| {
            let y = j as f64 * step;
            let s = Complex64::new(1.0, y);
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            let g = (ln_gamma(s * 0.5 + 0.25) - lg14).exp() / s;
            (y, g * (w * step / PI))
        })
        .collect()
}

fn eval_nodes(nodes: &[(f64, Complex64)], xi: f64) -> f64 {
    let l = xi.ln();
    let mut acc = Neumaier::new();
    for &(y, g) in nodes {
        acc.add((g * Complex64::from_polar(1.0, -y * l)).re);
    }
    acc.value() / xi
}

static W_GRID: OnceLock<Vec<f64>> = OnceLock::new();

fn w_grid_len() -> usize {
    (W_CUTOFF.sqrt() / W_USTEP).ceil() as usize + 4
}

fn build_w_grid() -> Vec<f64> {
    let nodes = w_nodes(W_HEIGHT, W_STEP);
    (0..w_grid_len())
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                1.0
            } else {
                let u = i as f64 * W_USTEP;
                eval_nodes(&nodes, u * u)
            }
        })
        .collect()
}

fn w_grid() -> &'static Vec<f64> {
    W_GRID.get_or_init(build_w_grid)
}

/// `W(ξ)` from the cached grid (analytic in `√ξ`, so interpolated there).
pub fn weight_w(xi: f64) -> Result<f64> {
    if !(xi > 0.0) {
        return domain(format!("W needs xi > 0, got {xi}"));
    }
    if xi >= W_CUTOFF {
        return Ok(0.0);
    }
    Ok(lagrange4(w_grid(), 0.0, W_USTEP, xi.sqrt()))
}

/// Truncation error of [`weight_w`] beyond the cutoff.
pub fn weight_w_cutoff_error() -> f64 {
    (-W_CUTOFF).exp()
}

/// Load the `W` grid from `dir` or build it and write it there.
pub fn init_w_cache(dir: &Path) -> Result<()> {
    let path = dir.join(W_FILE);
    let header = format!("# wweight.cache v{W_VERSION} ustep={W_USTEP} height={W_HEIGHT} step={W_STEP}");
    if W_GRID.get().is_none() {
        if let Some(v) = read_w_cache(&path, &header) {
            let _ = W_GRID.set(v);
        }
    }
    if !path.exists() {
        fs::create_dir_all(dir)?;
        let mut out = std::io::BufWriter::new(fs::File::create(&path)?);
        writeln!(out, "{header}")?;
        for (i, w) in w_grid().iter().enumerate() {
            let u = i as f64 * W_USTEP;
            writeln!(out, "{} {w}", u * u)?;
        }
    }
    Ok(())
}

fn read_w_cache(path: &Path, header: &str) -> Option<Vec<f64>> {
    let mut lines = BufReader::new(fs::File::open(path).ok()?).lines();
    if lines.next()?.ok()? != header {
        return None;
    }
    let mut v = Vec::new();
    for line in lines {
        let line = line.ok()?;
        let (_, w) = line.split_once(' ')?;
        v.push(w.trim().parse().ok()?);
    }
    (v.len() == w_grid_len()).then_some(v)
}

/// The real character `n ↦ (8d/n)`.
pub fn chi_8d(d: u64, n: u64) -> i8 {
    kronecker(8 * d as i64, n)
}

fn check_d(d: u64) -> Result<()> {
    if d == 0 || d % 2 == 0 || !arith::mu_and_squarefree(d).1 {
        return domain(format!("d must be odd, squarefree and positive, got {d}"));
    }
    if d > (i64::MAX / 8) as u64 {
        return Err(Error::Overflow("8d"));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DiscriminantRecord {
    pub d: u64,
    pub disc: u64,
    #[serde(rename = "L_value")]
    pub l_value: f64,
    pub resonator_value: f64,
    pub truncation: u64,
    pub est_error: f64,
}

/// Number of terms kept by [`l_half`]: the least `n` with `n√π/√(8d) ≥ 45`.
pub fn l_truncation(d: u64) -> u64 {
    truncation_at(d, L_CUTOFF)
}

fn truncation_at(d: u64, cutoff: f64) -> u64 {
    let scale = (8.0 * d as f64).sqrt() / PI.sqrt();
    let mut n = (cutoff * scale).ceil().max(1.0) as u64;
    while n > 1 && (n - 1) as f64 / scale >= cutoff {
        n -= 1;
    }
    n
}

/// `L(1/2, χ_{8d}) = 2 Σ χ_{8d}(n) n^{-1/2} W(n√π/√(8d))`.
pub fn l_half(d: u64) -> Result<DiscriminantRecord> {
    l_half_with_cutoff(d, L_CUTOFF)
}

/// [`l_half`] with the sum cut where `n√π/√(8d)` reaches `cutoff` instead of 45.
pub fn l_half_with_cutoff(d: u64, cutoff: f64) -> Result<DiscriminantRecord> {
    check_d(d)?;
    if !(cutoff > 0.0 && cutoff <= W_CUTOFF) {
        return domain(format!("cutoff must lie in (0, {W_CUTOFF}], got {cutoff}"));
    }
    let n_max = truncation_at(d, cutoff);
    let c = PI.sqrt() / (8.0 * d as f64).sqrt();
    let grid = w_grid();
    let sum = par_sum(n_max.saturating_sub(1) as usize, |i| {
        let n = (i + 1) as u64;
        let chi = chi_8d(d, n);
        if chi == 0 {
            return 0.0;
        }
        let xi = n as f64 * c;
        let w = lagrange4(grid, 0.0, W_USTEP, xi.sqrt());
        chi as f64 * w / (n as f64).sqrt()
    });
    let nf = n_max as f64;
    let tail = 2.0 * nf.powf(-0.5) * (-nf * c).exp() / (1.0 - (-c).exp());
    let mass = 2.0 * 2.0 * nf.sqrt();
    Ok(DiscriminantRecord {
        d,
        disc: 8 * d,
        l_value: 2.0 * sum,
        resonator_value: 0.0,
        truncation: n_max,
        est_error: tail + mass * (W_INTERP_ERROR + 8.0 * f64::EPSILON),
    })
}

/// Outcome of a character-sum check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CharSumCheck {
    pub n: u64,
    pub z: u64,
    pub observed: f64,
    pub predicted: f64,
    pub bound: f64,
}

impl CharSumCheck {
    pub fn holds(&self) -> bool {
        (self.observed - self.predicted).abs() <= self.bound
    }
}

/// Calibrated constant in both character-sum envelopes.
pub const CHARSUM_CONSTANT: f64 = 10.0;

/// `Σ_{d ≤ z} μ(2d)² (8d/n)` against its square/non-square prediction.
pub fn char_sum_check(n: u64, z: u64) -> Result<CharSumCheck> {
    if n == 0 || n % 2 == 0 {
        return domain(format!("n must be odd and positive, got {n}"));
    }
    if z < 3 {
        return domain(format!("z must be >= 3, got {z}"));
    }
    let ds = arith::odd_squarefree_in_range(1, z)?;
    let observed = par_sum(ds.len(), |i| chi_8d(ds[i], n) as f64);
    let zf = z as f64;
    let (predicted, bound) = if arith::is_perfect_square(n) {
        let mut main = zf / ZETA2 * (2.0 / 3.0);
        for p in arith::factorize(n).primes() {
            main *= p as f64 / (p as f64 + 1.0);
        }
        (main, CHARSUM_CONSTANT * zf.sqrt())
    } else {
        let nf = n as f64;
        (0.0, CHARSUM_CONSTANT * zf.sqrt() * nf.powf(0.25) * (2.0 * nf).ln())
    };
    Ok(CharSumCheck {
        n,
        z,
        observed,
        predicted,
        bound,
    })
}

fn check_odd_support(table: &CoefficientTable) -> Result<()> {
    if let Some(&(n, _)) = table.entries().iter().find(|&&(n, _)| n % 2 == 0) {
        return domain(format!("support must be odd, found n = {n}"));
    }
    Ok(())
}

/// First-moment main terms.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct M1Quadratic {
    /// `Σ_{n1 n2 = odd □} r(n1) r(n2) Π_{p | 2 n1 n2} p/(p+1)`.
    pub sum_main: f64,
    /// `(2/3) Π (1 + f(p)² p/(p+1))`.
    pub euler_main: f64,
    /// `X / (16 ζ(2))`, the factor turning the sums into moments.
    pub scale: f64,
}

pub fn m1_quadratic(table: &CoefficientTable, x: f64) -> Result<M1Quadratic> {
    check_odd_support(table)?;
    if !(x > 0.0) {
        return domain(format!("X must be positive, got {x}"));
    }
    // n1 n2 is a square exactly when the squarefree kernels agree
    let mut keyed: Vec<(u64, usize)> = (0..table.len())
        .map(|i| {
            let f = table.factorization(i);
            let kernel: u64 = f.factors.iter().filter(|&&(_, e)| e % 2 == 1).map(|&(p, _)| p).product();
            (kernel, i)
        })
        .collect();
    keyed.sort();
    let local = |i: usize, j: usize| -> f64 {
        let mut primes: Vec<u64> = table
            .factorization(i)
            .primes()
            .chain(table.factorization(j).primes())
            .collect();
        primes.sort_unstable();
        primes.dedup();
        primes.iter().fold(2.0 / 3.0, |acc, &p| acc * p as f64 / (p as f64 + 1.0))
    };
    let e = table.entries();
    let mut sum = Neumaier::new();
    let mut g = 0;
    while g < keyed.len() {
        let mut h = g;
        while h < keyed.len() && keyed[h].0 == keyed[g].0 {
            h += 1;
        }
        for a in g..h {
            for b in g..h {
                let (i, j) = (keyed[a].1, keyed[b].1);
                sum.add(e[i].1 * e[j].1 * local(i, j));
            }
        }
        g = h;
    }
    let mut log = Neumaier::new();
    for &(p, r) in table.prime_values() {
        let pf = p as f64;
        log.add((1.0 + r * r * pf / (pf + 1.0)).ln());
    }
    Ok(M1Quadratic {
        sum_main: sum.value(),
        euler_main: 2.0 / 3.0 * log.value().exp(),
        scale: x / (16.0 * ZETA2),
    })
}

/// Second-moment main terms.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct M2Main {
    /// The truncated triple sum over `(a, r, s)` with `ar, as ≤ N`.
    pub triple_sum: f64,
    /// The same sum extended over all `a, r, s`, in closed multiplicative form.
    pub euler_exact: f64,
    /// `(log X) Π (1 + f(p)² ± 2 f(p)/√p)`.
    pub euler_approx: f64,
    pub log_x: f64,
    /// The unspecified additive constant in the log factor; always 0 here.
    pub constant_c: f64,
}

/// Triple budget for [`m2_main`].
pub const M2_TRIPLE_CAP: u64 = 1_000_000;

fn h_local(p: u64) -> f64 {
    let pf = p as f64;
    pf * pf / (pf * pf + pf - 1.0)
}

pub fn m2_main(table: &CoefficientTable, x: f64) -> Result<M2Main> {
    match table.spec() {
        Some(s) if s.scheme.is_dirichlet() => {}
        _ => return domain("m2_main needs a dirichlet-f or dirichlet-signed table"),
    }
    check_odd_support(table)?;
    if !(x > 1.0) {
        return domain(format!("X must exceed 1, got {x}"));
    }
    let len = table.len() as u64;
    if len * len > M2_TRIPLE_CAP {
        return Err(Error::Resource {
            what: "m2 triple enumeration",
            requested: len * len,
            cap: M2_TRIPLE_CAP,
        });
    }
    let log_x = x.ln();
    let e = table.entries();
    let triple_sum = par_sum(e.len(), |i| {
        let (n1, r1) = e[i];
        let mut acc = Neumaier::new();
        for (j, &(n2, r2)) in e.iter().enumerate() {
            let a = arith::gcd(n1, n2);
            let (r, s) = (n1 / a, n2 / a);
            let mut weight = r1 * r2 / ((r * s) as f64).sqrt();
            let mut log_term = log_x - ((r * s) as f64).ln();
            let fi = table.factorization(i);
            let fj = table.factorization(j);
            let mut primes: Vec<u64> = fi.primes().chain(fj.primes()).collect();
            primes.sort_unstable();
            primes.dedup();
            for &p in &primes {
                // a is squarefree, so h(a) h(r) h(s) has one factor per prime of ars
                weight *= h_local(p);
                let pf = p as f64;
                log_term -= pf.ln() / (pf * (pf + 1.0));
            }
            acc.add(weight * log_term);
        }
        acc.value()
    });
    let mut log_prod = Neumaier::new();
    let mut correction = Neumaier::new();
    let mut log_approx = Neumaier::new();
    for &(p, r) in table.prime_values() {
        let pf = p as f64;
        let sp = pf.sqrt();
        let h = h_local(p);
        let q = pf * (pf + 1.0);
        let factor = 1.0 + r * r * h + 2.0 * r * h / sp;
        if !(factor > 0.0) {
            return domain(format!("non-positive Euler factor at p = {p}"));
        }
        log_prod.add(factor.ln());
        correction.add(-pf.ln() * (r * r * h / q + 2.0 * r * h * (1.0 + 1.0 / q) / sp) / factor);
        log_approx.add((1.0 + r * r + 2.0 * r / sp).ln());
    }
    Ok(M2Main {
        triple_sum,
        euler_exact: log_prod.value().exp() * (log_x + correction.value()),
        euler_approx: log_x * log_approx.value().exp(),
        log_x,
        constant_c: 0.0,
    })
}

/// Which end of the distribution a discriminant hunt targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HuntMode {
    Large,
    Small,
}

impl std::str::FromStr for HuntMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "large" => Ok(HuntMode::Large),
            "small" => Ok(HuntMode::Small),
            other => domain(format!("mode must be 'large' or 'small', got '{other}'")),
        }
    }
}

/// Largest `X` accepted by [`hunt_discriminants`].
pub const HUNT_X_CAP: f64 = 1e8;

/// Odd squarefree `d` with `X/16 ≤ d ≤ X/8`.
pub fn discriminant_range(x: f64) -> Result<Vec<u64>> {
    if !(x >= 16.0) || x > HUNT_X_CAP {
        return domain(format!("X must lie in [16, {HUNT_X_CAP:e}], got {x}"));
    }
    let lo = (x / 16.0).ceil() as u64;
    let hi = (x / 8.0).floor() as u64;
    arith::odd_squarefree_in_range(lo.max(1), hi)
}

/// The hunt's resonator: the given scheme, signed for small values and unsigned for large.
pub fn hunt_table(spec: &ResonatorSpec, mode: HuntMode) -> Result<CoefficientTable> {
    let mut s = *spec;
    s.scheme = s.scheme.with_sign(mode == HuntMode::Small);
    if s.scheme == Scheme::FrequencyA {
        return domain("discriminant hunts use the theorem21 or dirichlet schemes");
    }
    build_table(&s)
}

/// `R(8d) = Σ r(n) (8d/n)`.
pub fn resonator_at(table: &CoefficientTable, d: u64) -> f64 {
    let mut acc = Neumaier::new();
    for &(n, r) in table.entries() {
        acc.add(r * chi_8d(d, n) as f64);
    }
    acc.value()
}

/// Rank the range by `R(8d)²`, evaluate `L` at the top `budget` and sort
/// (descending `L` for large, ascending for small).
pub fn hunt_discriminants(spec: &ResonatorSpec, x: f64, mode: HuntMode, budget: usize) -> Result<Vec<DiscriminantRecord>> {
    if budget == 0 {
        return domain("budget must be at least 1");
    }
    let table = hunt_table(spec, mode)?;
    let ds = discriminant_range(x)?;
    let mut scored: Vec<(u64, f64)> = ds
        .par_iter()
        .map(|&d| {
            let r = resonator_at(&table, d);
            (d, r * r)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(budget);
    let mut records = scored
        .par_iter()
        .map(|&(d, r2)| {
            l_half(d).map(|mut rec| {
                rec.resonator_value = r2;
                rec
            })
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| {
        let ord = a.l_value.total_cmp(&b.l_value);
        let ord = if mode == HuntMode::Large { ord.reverse() } else { ord };
        ord.then(a.d.cmp(&b.d))
    });
    Ok(records)
}

/// `L`-values at `count` seeded uniform draws (with replacement) from the range.
pub fn random_discriminants(x: f64, count: usize, seed: u64) -> Result<Vec<DiscriminantRecord>> {
    let ds = discriminant_range(x)?;
    if ds.is_empty() {
        return domain(format!("no odd squarefree d in [X/16, X/8] for X = {x}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<u64> = (0..count).map(|_| ds[rng.random_range(0..ds.len())]).collect();
    picks.par_iter().map(|&d| l_half(d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w_limits() {
        let w = weight_w(1e-6).unwrap();
        assert!((w - 1.0).abs() < 1e-2);
        assert!(weight_w(20.0).unwrap().abs() * 20f64.exp() <= 100.0);
        assert_eq!(weight_w(60.0).unwrap(), 0.0);
        assert!(weight_w(0.0).is_err());
    }

    #[test]
    fn w_cache_tracks_contour() {
        for &xi in &[1e-4, 0.003, 0.1, 0.5, 1.0, 1.7, 3.0, 6.5] {
            let a = weight_w(xi).unwrap();
            let b = weight_w_contour(xi, W_HEIGHT, W_STEP).unwrap();
            assert!((a - b).abs() < 1e-8, "xi={xi}: {a} vs {b}");
        }
    }

    #[test]
    fn truncation_is_least_n() {
        for d in [1u64, 3, 5, 101, 99_999] {
            let n = l_truncation(d);
            let scale = (8.0 * d as f64).sqrt() / PI.sqrt();
            assert!(n as f64 / scale >= L_CUTOFF);
            assert!(((n - 1) as f64) / scale < L_CUTOFF);
        }
    }

    #[test]
    fn l_half_rejects_bad_d() {
        assert!(l_half(2).is_err());
        assert!(l_half(9).is_err());
        assert!(l_half(0).is_err());
    }

    #[test]
    fn char_sums_small() {
        let c = char_sum_check(1, 1000).unwrap();
        assert!(c.holds());
        assert!((c.predicted - 4000.0 / (PI * PI)).abs() < 1e-9);
        let c9 = char_sum_check(9, 1000).unwrap();
        assert!((c9.predicted - 1000.0 / ZETA2 * (2.0 / 3.0) * 0.75).abs() < 1e-9);
        assert!(char_sum_check(4, 100).is_err());
        assert!(char_sum_check(3, 2).is_err());
    }

    #[test]
    fn m1_small_tables() {
        let t = CoefficientTable::from_entries(1, vec![(1, 1.0)]).unwrap();
        let m = m1_quadratic(&t, 100.0).unwrap();
        assert!((m.sum_main - 2.0 / 3.0).abs() < 1e-15);
        let x = 0.4;
        let t = CoefficientTable::from_entries(3, vec![(1, 1.0), (3, x)]).unwrap();
        let m = m1_quadratic(&t, 100.0).unwrap();
        assert!((m.sum_main - (2.0 / 3.0 + x * x * 0.5)).abs() < 1e-15);
        let even = CoefficientTable::from_entries(2, vec![(1, 1.0), (2, x)]).unwrap();
        assert!(m1_quadratic(&even, 100.0).is_err());
    }

    #[test]
    fn m2_trivial_and_single_prime() {
        let spec = ResonatorSpec::new(Scheme::DirichletSigned, 10).with_window(14.0, 16.0);
        let t = build_table(&spec).unwrap();
        assert_eq!(t.len(), 1);
        let m = m2_main(&t, 1e6).unwrap();
        assert!((m.triple_sum - 1e6f64.ln()).abs() < 1e-12);

        let spec = ResonatorSpec::new(Scheme::DirichletSigned, 10).with_window(6.0, 8.0);
        let t = build_table(&spec).unwrap();
        let f = -t.get(7).unwrap();
        let (p, h, lx) = (7.0f64, 49.0 / 55.0, 1e6f64.ln());
        let q = p * (p + 1.0);
        let want = lx
            + f * f * h * (lx - p.ln() / q)
            - 2.0 * f * h / p.sqrt() * (lx - p.ln() - p.ln() / q);
        let m = m2_main(&t, 1e6).unwrap();
        assert!((m.triple_sum - want).abs() < 1e-12 * want.abs());
        assert!((m.euler_exact - want).abs() < 1e-12 * want.abs());
    }
}
