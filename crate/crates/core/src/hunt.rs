//! Hunting large values of `|ζ(1/2+it)|` with a resonator.
//!
//! [`scan`] evaluates `|R(t)|²` on a grid over `[T, 2T]`, keeps the highest
//! local maxima, polishes them by golden-section search and evaluates zeta
//! there. The other functions are the measure and frequency diagnostics
//! around that search.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::resonator::{denominator_exact, euler_product, numerator_exact, CoefficientTable, EulerForm};
use crate::sum::Neumaier;
use crate::zeta::{zeta_half, DirichletPoly};

/// Default safety margin constant `c` in `ratio − c/√T`.
pub const DEFAULT_MARGIN: f64 = 10.0;
/// Largest grid a scan will evaluate.
pub const GRID_CAP: u64 = 1 << 31;
/// Pair budget for the exact fourth-power diagonal.
pub const R4_PAIR_CAP: u64 = 10_000_000;

const SHARD: usize = 1 << 14;
const RESYNC: usize = 256;

fn check_guard(table: &CoefficientTable, t_big: f64) -> Result<()> {
    if !(t_big > 0.0) || !t_big.is_finite() {
        return domain(format!("T must be positive, got {t_big}"));
    }
    if table.n_max() as f64 > t_big.powf(0.9) {
        return domain(format!(
            "support bound N = {} exceeds T^0.9 = {:.3}",
            table.n_max(),
            t_big.powf(0.9)
        ));
    }
    Ok(())
}

/// `numerator/denominator − c/√T`, the resonance floor for `max |ζ|` on `[T, 2T]`.
///
/// The margin `c` stands in for unquantified `O`-constants, so the value is
/// heuristic rather than rigorous.
pub fn guaranteed_lower_bound(table: &CoefficientTable, t_big: f64, c: f64) -> Result<f64> {
    check_guard(table, t_big)?;
    Ok(numerator_exact(table) / denominator_exact(table) - c / t_big.sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct HuntConfig {
    #[serde(rename = "T")]
    pub t: f64,
    pub grid_step: f64,
    pub top_fraction: f64,
    /// Optional hard cap on the number of refined peaks.
    pub max_peaks: Option<usize>,
    pub refine_iters: usize,
    pub seed: u64,
}

impl HuntConfig {
    pub fn new(t: f64) -> Self {
        HuntConfig {
            t,
            grid_step: 0.05,
            top_fraction: 0.01,
            max_peaks: None,
            refine_iters: 40,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return domain(format!("T must be positive, got {}", self.t));
        }
        if !(self.grid_step > 0.0) {
            return domain(format!("grid_step must be positive, got {}", self.grid_step));
        }
        if !(self.top_fraction > 0.0 && self.top_fraction <= 1.0) {
            return domain(format!("top_fraction must lie in (0, 1], got {}", self.top_fraction));
        }
        if self.max_peaks == Some(0) {
            return domain("max_peaks must be at least 1");
        }
        Ok(())
    }
}

/// A located large value.
#[derive(Debug, Clone, Serialize)]
pub struct ExtremeRecord {
    pub location: f64,
    pub resonator_value: f64,
    pub target_value: f64,
    pub rank: usize,
    pub scheme: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    pub records: Vec<ExtremeRecord>,
    /// Set when `|R|²` is constant on the grid and records were sampled uniformly.
    pub degenerate: bool,
    pub grid_points: u64,
    pub peaks_found: usize,
}

fn scheme_label(table: &CoefficientTable) -> String {
    table.spec().map_or_else(|| "explicit".to_string(), |s| s.summary())
}

/// `|R|²` at `t0 + i h` for `i in 0..count`, by rotating each term and
/// resynchronising every `RESYNC` steps.
fn grid_values(poly: &DirichletPoly, t0: f64, h: f64, start: i64, count: usize) -> Vec<f64> {
    let logs = poly.logs();
    let coeffs = poly.coeffs();
    let steps: Vec<Complex64> = logs.iter().map(|&l| Complex64::from_polar(1.0, -h * l)).collect();
    let mut terms: Vec<Complex64> = Vec::with_capacity(logs.len());
    let mut out = Vec::with_capacity(count);
    for j in 0..count {
        if j % RESYNC == 0 {
            let t = t0 + (start + j as i64) as f64 * h;
            terms.clear();
            terms.extend(logs.iter().zip(coeffs).map(|(&l, &r)| Complex64::from_polar(r, -t * l)));
        } else {
            for (z, s) in terms.iter_mut().zip(&steps) {
                *z *= s;
            }
        }
        let mut re = Neumaier::new();
        let mut im = Neumaier::new();
        for z in &terms {
            re.add(z.re);
            im.add(z.im);
        }
        let (a, b) = (re.value(), im.value());
        out.push(a * a + b * b);
    }
    out
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize, start: (f64, f64)) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = start;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        for (x, v) in [(c, fc), (d, fd)] {
            if v > best.1 {
                best = (x, v);
            }
        }
    }
    best
}

/// Resonator-guided search for large `|ζ|` over `[T, 2T]`.
pub fn scan(table: &CoefficientTable, cfg: &HuntConfig) -> Result<ScanResult> {
    cfg.validate()?;
    let t0 = cfg.t;
    let h_target = cfg.grid_step;
    let intervals = (t0 / h_target).ceil();
    if intervals + 1.0 > GRID_CAP as f64 {
        return Err(Error::Resource {
            what: "hunt grid points",
            requested: intervals as u64 + 1,
            cap: GRID_CAP,
        });
    }
    let intervals = intervals as usize;
    let h = t0 / intervals as f64;
    let n = intervals + 1;
    let poly = DirichletPoly::new(table);
    let label = scheme_label(table);

    // shards overlap their neighbours by one point so peak tests stay local
    let shards = n.div_ceil(SHARD);
    let per_shard: Vec<(Vec<(usize, f64)>, f64, f64)> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let lo = s * SHARD;
            let hi = (lo + SHARD).min(n);
            let ext_lo = lo.saturating_sub(1);
            let ext_hi = (hi + 1).min(n);
            let v = grid_values(&poly, t0, h, ext_lo as i64, ext_hi - ext_lo);
            let at = |i: usize| -> f64 {
                if i < ext_lo || i >= ext_hi {
                    f64::NEG_INFINITY
                } else {
                    v[i - ext_lo]
                }
            };
            let mut peaks = Vec::new();
            let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
            for i in lo..hi {
                let x = at(i);
                mn = mn.min(x);
                mx = mx.max(x);
                let left = if i == 0 { f64::NEG_INFINITY } else { at(i - 1) };
                let right = if i + 1 == n { f64::NEG_INFINITY } else { at(i + 1) };
                if x > left && x >= right {
                    peaks.push((i, x));
                }
            }
            (peaks, mn, mx)
        })
        .collect();
    let vmin = per_shard.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let vmax = per_shard.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
    let mut peaks: Vec<(usize, f64)> = per_shard.into_iter().flat_map(|p| p.0).collect();
    let peaks_found = peaks.len();

    let degenerate = vmax - vmin <= 1e-12 * vmax.abs().max(1e-300);
    let want = |available: usize| -> usize {
        let k = ((cfg.top_fraction * available as f64).ceil() as usize).max(1);
        cfg.max_peaks.map_or(k, |m| k.min(m)).min(available)
    };

    let located: Vec<(f64, f64)> = if degenerate {
        let k = want(n);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        (0..k)
            .map(|_| {
                let t = t0 + rng.random::<f64>() * t0;
                (t, poly.abs2(t))
            })
            .collect()
    } else {
        peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        peaks.truncate(want(peaks.len()));
        peaks
            .par_iter()
            .map(|&(i, v)| {
                let t = t0 + i as f64 * h;
                let a = (t - h).max(t0);
                let b = (t + h).min(2.0 * t0);
                golden_max(|x| poly.abs2(x), a, b, cfg.refine_iters, (t, v))
            })
            .collect()
    };

    let values: Vec<Result<f64>> = located
        .par_iter()
        .map(|&(t, _)| zeta_half(t).map(|z| z.value.norm()))
        .collect();
    let mut records = Vec::with_capacity(located.len());
    for (&(t, r2), z) in located.iter().zip(values) {
        records.push(ExtremeRecord {
            location: t,
            resonator_value: r2,
            target_value: z?,
            rank: 0,
            scheme: label.clone(),
        });
    }
    records.sort_by(|a, b| {
        b.target_value
            .total_cmp(&a.target_value)
            .then(a.location.total_cmp(&b.location))
    });
    for (i, r) in records.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(ScanResult {
        records,
        degenerate,
        grid_points: n as u64,
        peaks_found,
    })
}

/// `|ζ(1/2+it)|` at `samples` seeded uniform points of `[T, 2T]`, in draw order.
pub fn random_baseline(t_big: f64, samples: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ts: Vec<f64> = (0..samples).map(|_| t_big + rng.random::<f64>() * t_big).collect();
    ts.par_iter()
        .map(|&t| zeta_half(t).map(|z| (t, z.value.norm())))
        .collect()
}

/// Monte Carlo estimate of the proportion of `[T, 2T]` where `|ζ| ≥ e^V`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThresholdEstimate {
    #[serde(rename = "V")]
    pub v: f64,
    pub fraction: f64,
    /// 95% binomial half-width.
    pub ci: f64,
}

/// Threshold fractions for several `V` on one shared sample set.
pub fn threshold_curve(t_big: f64, vs: &[f64], samples: usize, seed: u64) -> Result<Vec<ThresholdEstimate>> {
    if samples < 1000 {
        return domain(format!("threshold estimates need at least 1000 samples, got {samples}"));
    }
    let values = random_baseline(t_big, samples, seed)?;
    Ok(vs
        .iter()
        .map(|&v| {
            let level = v.exp();
            let hits = values.iter().filter(|&&(_, z)| z >= level).count();
            let p = hits as f64 / samples as f64;
            ThresholdEstimate {
                v,
                fraction: p,
                ci: 1.96 * (p * (1.0 - p) / samples as f64).sqrt(),
            }
        })
        .collect())
}

pub fn threshold_measure(t_big: f64, v: f64, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let e = threshold_curve(t_big, &[v], samples, seed)?[0];
    Ok((e.fraction, e.ci))
}

/// Amplitude choice for the frequency-A resonator.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AChoice {
    #[serde(rename = "A")]
    pub a: f64,
    /// `exp(A log(log N / (4A² log A)))`; absent when `A ≤ 1` makes the log undefined.
    pub predicted_gain: Option<f64>,
}

/// `A = V / log(log N / (4V² log V))`, taking `log N` directly so that
/// astronomically large `N` can be described.
pub fn choose_a(v: f64, ln_n: f64) -> Result<AChoice> {
    if !(v >= 3.0) {
        return domain(format!("V must be >= 3, got {v}"));
    }
    let arg = ln_n / (4.0 * v * v * v.ln());
    if !(arg > std::f64::consts::E) {
        return domain(format!(
            "V = {v} is too large for log N = {ln_n}: log N / (4 V^2 log V) = {arg} must exceed e"
        ));
    }
    let a = v / arg.ln();
    let gain_arg = ln_n / (4.0 * a * a * a.ln());
    let predicted_gain = (a > 1.0 && gain_arg > 0.0).then(|| (a * gain_arg.ln()).exp());
    Ok(AChoice { a, predicted_gain })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct R4Result {
    pub exact: Option<f64>,
    pub euler_bound: f64,
}

/// `Σ_{ab=cd} r(a)r(b)r(c)r(d)` grouped by product, and `Π(1 + 4r(p)² + r(p)⁴)`.
pub fn r4_diagonal(table: &CoefficientTable) -> Result<R4Result> {
    let euler_bound = euler_product(table, EulerForm::Fourth)?;
    let len = table.len() as u64;
    if len * len > R4_PAIR_CAP {
        return Ok(R4Result {
            exact: None,
            euler_bound,
        });
    }
    let e = table.entries();
    let mut pairs: Vec<(u64, f64)> = Vec::with_capacity((len * len) as usize);
    for &(a, ra) in e {
        for &(b, rb) in e {
            pairs.push((a * b, ra * rb));
        }
    }
    pairs.sort_by_key(|&(k, _)| k);
    let mut total = Neumaier::new();
    let mut i = 0;
    while i < pairs.len() {
        let key = pairs[i].0;
        let mut group = Neumaier::new();
        while i < pairs.len() && pairs[i].0 == key {
            group.add(pairs[i].1);
            i += 1;
        }
        total.add(group.value() * group.value());
    }
    Ok(R4Result {
        exact: Some(total.value()),
        euler_bound,
    })
}

/// `|M2|⁴ / (T log⁴T · r4²)`, the Cauchy–Schwarz measure diagnostic.
pub fn frequency_diagnostic(m2: f64, t_big: f64, r4: f64) -> f64 {
    let l = t_big.ln();
    m2.powi(4) / (t_big * l.powi(4) * r4 * r4)
}

/// `log √(½ log T)`, the level at which the measure statement is made.
pub fn half_log_level(t_big: f64) -> f64 {
    (0.5 * t_big.ln()).sqrt().ln()
}

/// Order-of-magnitude floor `(log T)^{-2}` for the measure at [`half_log_level`].
pub fn measure_floor(t_big: f64) -> f64 {
    t_big.ln().powi(-2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonator::{build_table, ResonatorSpec, Scheme};

    fn trivial() -> CoefficientTable {
        CoefficientTable::from_entries(1, vec![(1, 1.0)]).unwrap()
    }

    #[test]
    fn lower_bound_of_trivial_table() {
        let lb = guaranteed_lower_bound(&trivial(), 1e4, DEFAULT_MARGIN).unwrap();
        assert!((lb - (1.0 - 0.1)).abs() < 1e-15);
        let big = CoefficientTable::from_entries(10_000, vec![(1, 1.0)]).unwrap();
        assert!(guaranteed_lower_bound(&big, 1e4, 10.0).is_err());
    }

    #[test]
    fn choose_a_example_and_guard() {
        let c = choose_a(3.0, 1e6).unwrap();
        assert!((c.a - 3.0 / (1e6 / (36.0 * 3f64.ln())).ln()).abs() < 1e-15);
        assert!((c.a - 0.2959).abs() < 1e-4);
        assert!(c.predicted_gain.is_none());
        let boundary = 4.0 * 9.0 * 3f64.ln() * std::f64::consts::E;
        assert!(choose_a(3.0, boundary).is_err());
        assert!(choose_a(2.0, 1e6).is_err());
        let mut prev = 0.0;
        for i in 0..50 {
            let a = choose_a(3.0 + 0.5 * i as f64, 1e8).unwrap().a;
            assert!(a > prev);
            prev = a;
        }
        let big = choose_a(3.0, 300.0).unwrap();
        assert!(big.a > 1.0 && big.predicted_gain.unwrap() > 1.0);
    }

    #[test]
    fn r4_small_cases() {
        let r = r4_diagonal(&trivial()).unwrap();
        assert_eq!(r.exact, Some(1.0));
        assert_eq!(r.euler_bound, 1.0);
        let x = 0.3;
        let t = CoefficientTable::from_entries(7, vec![(1, 1.0), (7, x)]).unwrap();
        let r = r4_diagonal(&t).unwrap();
        let want = 1.0 + 4.0 * x * x + x.powi(4);
        assert!((r.exact.unwrap() - want).abs() < 1e-15);
        assert!((r.euler_bound - want).abs() < 1e-15);
    }

    #[test]
    fn degenerate_scan_samples_uniformly() {
        let mut cfg = HuntConfig::new(1000.0);
        cfg.max_peaks = Some(5);
        cfg.seed = 3;
        let a = scan(&trivial(), &cfg).unwrap();
        assert!(a.degenerate);
        assert_eq!(a.records.len(), 5);
        let b = scan(&trivial(), &cfg).unwrap();
        let la: Vec<f64> = a.records.iter().map(|r| r.location).collect();
        let lb: Vec<f64> = b.records.iter().map(|r| r.location).collect();
        assert_eq!(la, lb);
        assert!(a.records.iter().all(|r| (r.resonator_value - 1.0).abs() < 1e-15));
    }

    #[test]
    fn scan_records_are_sorted_and_refined() {
        let spec = ResonatorSpec::new(Scheme::Theorem21, 200).with_window(2.0, 12.0);
        let t = build_table(&spec).unwrap();
        let mut cfg = HuntConfig::new(2000.0);
        cfg.top_fraction = 1.0;
        cfg.max_peaks = Some(30);
        let res = scan(&t, &cfg).unwrap();
        assert!(!res.degenerate);
        assert_eq!(res.records.len(), 30);
        for w in res.records.windows(2) {
            assert!(w[0].target_value >= w[1].target_value);
        }
        for r in &res.records {
            assert!(r.location >= 2000.0 && r.location <= 4000.0);
        }
    }

    #[test]
    fn grid_recurrence_matches_direct() {
        let spec = ResonatorSpec::new(Scheme::Theorem21, 500).with_window(2.0, 20.0);
        let table = build_table(&spec).unwrap();
        let poly = DirichletPoly::new(&table);
        // t itself is only known to an ulp of 1e5, which moves each phase by ~1e-10
        let scale = table.l1_norm().powi(2);
        let v = grid_values(&poly, 1e5, 0.05, 7, 1000);
        for (j, &x) in v.iter().enumerate() {
            let t = 1e5 + (7 + j) as f64 * 0.05;
            let d = (x - poly.abs2(t)).abs();
            assert!(d < 1e-10 * scale, "j={j} x={x} diff={d}");
        }
    }

    #[test]
    fn threshold_needs_samples_and_vanishes_at_infinity() {
        assert!(threshold_measure(1e4, 0.0, 10, 1).is_err());
        let (f, ci) = threshold_measure(1e4, 50.0, 1000, 1).unwrap();
        assert_eq!((f, ci), (0.0, 0.0));
    }
}
