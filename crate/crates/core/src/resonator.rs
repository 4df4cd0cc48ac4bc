//! Resonator coefficient schemes and the exact quadratic forms built from them.
//!
//! A resonator is a Dirichlet polynomial `R(t) = Σ_{n ≤ N} r(n) n^{-it}`. Every
//! scheme here uses a multiplicative `r` supported on squarefree products of a
//! window of primes, so a [`CoefficientTable`] is a sparse ascending list of
//! `(n, r(n))` pairs plus the values at the primes themselves.
//!
//! The main quantities are the two quadratic forms whose ratio certifies a
//! large value of zeta:
//!
//! * [`numerator_exact`]: `Σ_{mk ≤ N} r(m) r(mk) / √k`
//! * [`denominator_exact`]: `Σ_{n ≤ N} r(n)²`
//!
//! and the Euler products that approximate them.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arith::{self, Factorization, SpfSieve};
use crate::error::{domain, Error, Result};
use crate::sum::{par_sum, Neumaier};

/// Maximum number of support entries a table may hold.
pub const SUPPORT_CAP: usize = 1 << 22;

/// Largest `N` for which [`amgm_upper_certificate`] will build its `g` table.
pub const AMGM_CAP: u64 = 20_000_000;

/// The five coefficient schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `r(p) = L / (√p log p)` on `[L², exp((log L)²)]`.
    Theorem21,
    /// `r(p) = A / √p` on `[A², N^{1/(2A²)}]`.
    FrequencyA,
    /// `μ(n)` times the theorem21 coefficients.
    SignedTheorem21,
    /// theorem21 coefficients restricted to odd primes.
    DirichletF,
    /// `μ(n)` times the dirichlet-f coefficients.
    DirichletSigned,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Theorem21,
        Scheme::FrequencyA,
        Scheme::SignedTheorem21,
        Scheme::DirichletF,
        Scheme::DirichletSigned,
    ];

    pub fn is_signed(self) -> bool {
        matches!(self, Scheme::SignedTheorem21 | Scheme::DirichletSigned)
    }

    pub fn is_dirichlet(self) -> bool {
        matches!(self, Scheme::DirichletF | Scheme::DirichletSigned)
    }

    /// The same scheme with the Möbius sign switched on or off.
    pub fn with_sign(self, signed: bool) -> Scheme {
        match (self, signed) {
            (Scheme::Theorem21 | Scheme::SignedTheorem21, true) => Scheme::SignedTheorem21,
            (Scheme::Theorem21 | Scheme::SignedTheorem21, false) => Scheme::Theorem21,
            (Scheme::DirichletF | Scheme::DirichletSigned, true) => Scheme::DirichletSigned,
            (Scheme::DirichletF | Scheme::DirichletSigned, false) => Scheme::DirichletF,
            (Scheme::FrequencyA, _) => Scheme::FrequencyA,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Theorem21 => "theorem21",
            Scheme::FrequencyA => "frequency-a",
            Scheme::SignedTheorem21 => "signed-theorem21",
            Scheme::DirichletF => "dirichlet-f",
            Scheme::DirichletSigned => "dirichlet-signed",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem21" => Ok(Scheme::Theorem21),
            "frequency-a" | "frequencyA" | "frequency_a" => Ok(Scheme::FrequencyA),
            "signed-theorem21" => Ok(Scheme::SignedTheorem21),
            "dirichlet-f" => Ok(Scheme::DirichletF),
            "dirichlet-signed" => Ok(Scheme::DirichletSigned),
            other => domain(format!("unknown scheme '{other}'")),
        }
    }
}

/// `√(log N · log log N)`, the default length parameter. Returns 1 for `N < 3`,
/// where `log log N` is not positive.
pub fn default_l(n: u64) -> f64 {
    if n < 3 {
        return 1.0;
    }
    let ln = (n as f64).ln();
    (ln * ln.ln()).sqrt()
}

/// Declarative description of a coefficient scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorSpec {
    pub scheme: Scheme,
    /// Support bound `N`.
    #[serde(rename = "N")]
    pub n_max: u64,
    /// Length parameter `L` for the theorem21 family; `None` means [`default_l`].
    #[serde(rename = "L")]
    pub l: Option<f64>,
    /// Amplitude `A` for the frequency-A scheme.
    #[serde(rename = "A")]
    pub a: Option<f64>,
    /// Override for the prime window `(P0, P1)`.
    pub prime_window: Option<(f64, f64)>,
}

impl ResonatorSpec {
    pub fn new(scheme: Scheme, n_max: u64) -> Self {
        ResonatorSpec {
            scheme,
            n_max,
            l: None,
            a: None,
            prime_window: None,
        }
    }

    pub fn with_window(mut self, p0: f64, p1: f64) -> Self {
        self.prime_window = Some((p0, p1));
        self
    }

    pub fn with_l(mut self, l: f64) -> Self {
        self.l = Some(l);
        self
    }

    pub fn with_a(mut self, a: f64) -> Self {
        self.a = Some(a);
        self
    }

    /// Effective `L`.
    pub fn l_value(&self) -> f64 {
        self.l.unwrap_or_else(|| default_l(self.n_max))
    }

    /// The scheme's own window, ignoring any override.
    pub fn default_window(&self) -> (f64, f64) {
        match self.scheme {
            Scheme::FrequencyA => {
                let a = self.a.unwrap_or(f64::NAN);
                (a * a, (self.n_max as f64).powf(1.0 / (2.0 * a * a)))
            }
            _ => {
                let l = self.l_value();
                let ll = l.ln();
                (l * l, (ll * ll).exp())
            }
        }
    }

    pub fn window(&self) -> (f64, f64) {
        self.prime_window.unwrap_or_else(|| self.default_window())
    }

    /// `10 A² log A ≤ log N` for frequency-A; always true for the other schemes.
    pub fn is_admissible(&self) -> bool {
        match (self.scheme, self.a) {
            (Scheme::FrequencyA, Some(a)) => 10.0 * a * a * a.ln() <= (self.n_max as f64).ln(),
            (Scheme::FrequencyA, None) => false,
            _ => true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 2 {
            return domain(format!("support bound N must be >= 2, got {}", self.n_max));
        }
        match self.scheme {
            Scheme::FrequencyA => match self.a {
                Some(a) if a > 0.0 && a.is_finite() => {}
                _ => return domain("frequency-a scheme needs A > 0"),
            },
            _ => {
                let l = self.l_value();
                if !(l > 0.0 && l.is_finite()) {
                    return domain(format!("L must be positive, got {l}"));
                }
            }
        }
        if let Some((p0, p1)) = self.prime_window {
            if !(p0 < p1) || !p0.is_finite() || !p1.is_finite() {
                return domain(format!("prime window needs P0 < P1, got [{p0}, {p1}]"));
            }
        }
        Ok(())
    }

    /// Unsigned coefficient `f(p)` for a window prime.
    pub fn prime_coefficient(&self, p: u64) -> f64 {
        let pf = p as f64;
        match self.scheme {
            Scheme::FrequencyA => self.a.unwrap_or(0.0) / pf.sqrt(),
            _ => self.l_value() / (pf.sqrt() * pf.ln()),
        }
    }

    /// One-line human summary, used in report records.
    pub fn summary(&self) -> String {
        let (p0, p1) = self.window();
        let mut s = format!("{} N={} window=[{},{}]", self.scheme, self.n_max, p0, p1);
        match self.scheme {
            Scheme::FrequencyA => {
                if let Some(a) = self.a {
                    s.push_str(&format!(" A={a}"));
                }
            }
            _ => s.push_str(&format!(" L={}", self.l_value())),
        }
        s
    }
}

/// Immutable sparse map `n → r(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    spec: Option<ResonatorSpec>,
    n_max: u64,
    entries: Vec<(u64, f64)>,
    factors: Vec<Factorization>,
    prime_values: Vec<(u64, f64)>,
}

impl CoefficientTable {
    /// Build a table from explicit coefficients (not necessarily multiplicative).
    ///
    /// Zero coefficients are dropped; indices must lie in `1..=n_max`.
    pub fn from_entries(n_max: u64, mut entries: Vec<(u64, f64)>) -> Result<Self> {
        if n_max < 1 {
            return domain("support bound must be >= 1");
        }
        entries.retain(|&(_, r)| r != 0.0);
        entries.sort_by_key(|&(n, _)| n);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return domain(format!("duplicate index {}", w[0].0));
            }
        }
        if let Some(&(n, _)) = entries.iter().find(|&&(n, r)| n == 0 || n > n_max || !r.is_finite()) {
            return domain(format!("index {n} outside 1..={n_max} or non-finite coefficient"));
        }
        if entries.len() > SUPPORT_CAP {
            return Err(Error::Resource {
                what: "resonator support",
                requested: entries.len() as u64,
                cap: SUPPORT_CAP as u64,
            });
        }
        let factors: Vec<Factorization> = if n_max <= 10_000_000 && entries.len() > 1000 {
            let spf = SpfSieve::new(n_max)?;
            entries.iter().map(|&(n, _)| spf.factorize(n)).collect()
        } else {
            entries.iter().map(|&(n, _)| arith::factorize(n)).collect()
        };
        let prime_values = entries
            .iter()
            .zip(&factors)
            .filter(|(_, f)| f.factors.len() == 1 && f.factors[0].1 == 1)
            .map(|(&e, _)| e)
            .collect();
        Ok(CoefficientTable {
            spec: None,
            n_max,
            entries,
            factors,
            prime_values,
        })
    }

    pub fn spec(&self) -> Option<&ResonatorSpec> {
        self.spec.as_ref()
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    pub fn entries(&self) -> &[(u64, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(p, r(p))` for every prime in the support.
    pub fn prime_values(&self) -> &[(u64, f64)] {
        &self.prime_values
    }

    pub fn factorization(&self, index: usize) -> &Factorization {
        &self.factors[index]
    }

    pub fn get(&self, n: u64) -> Option<f64> {
        self.position(n).map(|i| self.entries[i].1)
    }

    pub fn position(&self, n: u64) -> Option<usize> {
        self.entries.binary_search_by_key(&n, |&(m, _)| m).ok()
    }

    /// `Σ |r(n)|`.
    pub fn l1_norm(&self) -> f64 {
        self.entries.iter().map(|&(_, r)| r.abs()).collect::<Neumaier>().value()
    }

    /// Whether every support element is odd.
    pub fn is_odd_supported(&self) -> bool {
        self.entries.iter().all(|&(n, _)| n % 2 == 1)
    }

    /// The same support with every coefficient replaced by its absolute value.
    pub fn abs(&self) -> CoefficientTable {
        let mut t = self.clone();
        for e in &mut t.entries {
            e.1 = e.1.abs();
        }
        for e in &mut t.prime_values {
            e.1 = e.1.abs();
        }
        t.spec = t.spec.map(|mut s| {
            s.scheme = s.scheme.with_sign(false);
            s
        });
        t
    }
}

/// Enumerate the scheme's squarefree support below `N`.
pub fn build_table(spec: &ResonatorSpec) -> Result<CoefficientTable> {
    spec.validate()?;
    let (p0, p1) = spec.window();
    let sieve_top = p1.min(spec.n_max as f64).floor();
    let mut primes: Vec<u64> = if sieve_top >= 2.0 {
        arith::sieve_primes(sieve_top as u64)?
            .in_window(p0, p1)
            .collect()
    } else {
        Vec::new()
    };
    if spec.scheme.is_dirichlet() {
        primes.retain(|&p| p != 2);
    }
    if primes.is_empty() && spec.prime_window.is_none() {
        return Err(Error::EmptyWindow {
            scheme: spec.scheme.to_string(),
            p0,
            p1,
        });
    }
    let coeffs: Vec<f64> = primes
        .iter()
        .map(|&p| {
            let f = spec.prime_coefficient(p);
            if spec.scheme.is_signed() {
                -f
            } else {
                f
            }
        })
        .collect();

    // depth-first product over ascending primes, pruned at N
    let mut entries: Vec<(u64, f64)> = Vec::new();
    let mut factors: Vec<Factorization> = Vec::new();
    let mut stack: Vec<(usize, u64, f64, Vec<u64>)> = vec![(0, 1, 1.0, Vec::new())];
    while let Some((start, n, r, ps)) = stack.pop() {
        if entries.len() >= SUPPORT_CAP {
            return Err(Error::Resource {
                what: "resonator support",
                requested: SUPPORT_CAP as u64 + 1,
                cap: SUPPORT_CAP as u64,
            });
        }
        entries.push((n, r));
        factors.push(Factorization {
            n,
            factors: ps.iter().map(|&p| (p, 1)).collect(),
        });
        for i in (start..primes.len()).rev() {
            let p = primes[i];
            match n.checked_mul(p) {
                Some(m) if m <= spec.n_max => {
                    let mut next = ps.clone();
                    next.push(p);
                    stack.push((i + 1, m, r * coeffs[i], next));
                }
                _ => {}
            }
        }
    }
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by_key(|&i| entries[i].0);
    let entries: Vec<(u64, f64)> = order.iter().map(|&i| entries[i]).collect();
    let factors: Vec<Factorization> = order.iter().map(|&i| factors[i].clone()).collect();
    let prime_values = primes
        .iter()
        .zip(&coeffs)
        .filter(|(&p, _)| p <= spec.n_max)
        .map(|(&p, &c)| (p, c))
        .collect();
    Ok(CoefficientTable {
        spec: Some(*spec),
        n_max: spec.n_max,
        entries,
        factors,
        prime_values,
    })
}

/// Divisors of the `index`-th support element that are themselves in the support.
fn support_divisors(table: &CoefficientTable, index: usize) -> Vec<(u64, f64)> {
    table
        .factorization(index)
        .divisors()
        .into_iter()
        .filter_map(|d| table.get(d).map(|r| (d, r)))
        .collect()
}

/// `Σ_{mk ≤ N} r(m) r(mk) / √k`, summed over support pairs `m | n`.
pub fn numerator_exact(table: &CoefficientTable) -> f64 {
    par_sum(table.len(), |i| {
        let (n, rn) = table.entries[i];
        let mut inner = Neumaier::new();
        for (m, rm) in support_divisors(table, i) {
            inner.add(rm / ((n / m) as f64).sqrt());
        }
        rn * inner.value()
    })
}

/// `Σ r(n)²`.
pub fn denominator_exact(table: &CoefficientTable) -> f64 {
    table
        .entries
        .iter()
        .map(|&(_, r)| r * r)
        .collect::<Neumaier>()
        .value()
}

/// Ratio of the two quadratic forms.
pub fn ratio_exact(table: &CoefficientTable) -> f64 {
    numerator_exact(table) / denominator_exact(table)
}

/// Euler-product shapes, in terms of `f = |r(p)|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EulerForm {
    /// `1 + f²`
    Plain,
    /// `1 + f² + f/√p`
    Plus,
    /// `1 + f² − 2f/√p`
    Minus2,
    /// `1 + 4f² + f⁴`
    Fourth,
    /// `1 + f²(1 + 1/p) + 2f/√p`
    Cusp,
}

impl EulerForm {
    pub fn factor(self, p: u64, f: f64) -> f64 {
        let pf = p as f64;
        let sp = pf.sqrt();
        match self {
            EulerForm::Plain => 1.0 + f * f,
            EulerForm::Plus => 1.0 + f * f + f / sp,
            EulerForm::Minus2 => 1.0 + f * f - 2.0 * f / sp,
            EulerForm::Fourth => 1.0 + 4.0 * f * f + f.powi(4),
            EulerForm::Cusp => 1.0 + f * f * (1.0 + 1.0 / pf) + 2.0 * f / sp,
        }
    }
}

/// Product of `factor(p, r(p))` over the table's primes, accumulated in log space.
pub fn euler_product_by<F>(table: &CoefficientTable, factor: F) -> Result<f64>
where
    F: Fn(u64, f64) -> f64,
{
    let mut log = Neumaier::new();
    for &(p, r) in table.prime_values() {
        let v = factor(p, r);
        if !(v > 0.0) {
            return domain(format!("non-positive Euler factor {v} at p = {p}"));
        }
        log.add(v.ln());
    }
    Ok(log.value().exp())
}

pub fn euler_product(table: &CoefficientTable, form: EulerForm) -> Result<f64> {
    euler_product_by(table, |p, r| form.factor(p, r.abs()))
}

/// Rankin's-trick error-to-main ratio
/// `N^{-α} Π(1 + p^α f² + f p^{α-1/2}) / Π(1 + f² + f/√p)`.
pub fn rankin_tail_ratio(table: &CoefficientTable, alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) {
        return domain(format!("alpha must be non-negative, got {alpha}"));
    }
    let mut log = Neumaier::new();
    log.add(-alpha * (table.n_max as f64).ln());
    for &(p, r) in table.prime_values() {
        let f = r.abs();
        let pf = p as f64;
        let pa = pf.powf(alpha);
        log.add((1.0 + pa * f * f + f * pa / pf.sqrt()).ln());
        log.add(-(1.0 + f * f + f / pf.sqrt()).ln());
    }
    Ok(log.value().exp())
}

/// Outcome of the AM-GM upper-bound check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmgmCertificate {
    pub bound: f64,
    pub numerator: f64,
    pub holds: bool,
}

/// The dual bound
/// `B = ½ Σ_n r(n)² (Σ_{k ≤ N/n} g(k)/√k + Σ_{k | n} 1/(√k g(k)))`
/// with `g(p^a) = min(1, L / (p^{a/2} log p))`, compared against the numerator.
///
/// `l` defaults to the table's own `L` (or [`default_l`] for explicit tables).
pub fn amgm_upper_certificate(table: &CoefficientTable, l: Option<f64>) -> Result<AmgmCertificate> {
    let n_max = table.n_max;
    if n_max > AMGM_CAP {
        return Err(Error::Resource {
            what: "AM-GM certificate g-table (reduce N to the cap)",
            requested: n_max,
            cap: AMGM_CAP,
        });
    }
    let l = l
        .or_else(|| table.spec.map(|s| s.l_value()))
        .unwrap_or_else(|| default_l(n_max));
    if !(l > 0.0) {
        return domain("L must be positive");
    }
    let g_prime_power = |p: u64, a: u32| -> f64 {
        let pf = p as f64;
        (l / (pf.powf(a as f64 / 2.0) * pf.ln())).min(1.0)
    };

    // g(k) for k ≤ N by peeling off the smallest prime power
    let size = n_max as usize;
    let mut g = vec![0.0f64; size + 1];
    if size >= 1 {
        g[1] = 1.0;
    }
    if size >= 2 {
        let spf = SpfSieve::new(n_max)?;
        for k in 2..=size {
            let f = spf.factorize(k as u64);
            let (p, a) = f.factors[0];
            let pa = p.pow(a) as usize;
            g[k] = g[k / pa] * g_prime_power(p, a);
        }
    }
    let mut prefix = vec![0.0f64; size + 1];
    let mut run = Neumaier::new();
    for k in 1..=size {
        run.add(g[k] / (k as f64).sqrt());
        prefix[k] = run.value();
    }

    let bound = 0.5
        * par_sum(table.len(), |i| {
            let (n, r) = table.entries[i];
            let mut div_sum = Neumaier::new();
            for k in table.factors[i].divisors() {
                div_sum.add(1.0 / ((k as f64).sqrt() * g[k as usize]));
            }
            r * r * (prefix[(n_max / n) as usize] + div_sum.value())
        });
    let numerator = numerator_exact(table);
    Ok(AmgmCertificate {
        bound,
        numerator,
        holds: numerator.abs() <= bound * (1.0 + 1e-12),
    })
}

/// Write a table in the line-oriented text format.
///
/// ```text
/// # resonance-table v1 scheme=theorem21 N=100 L=2.65 A=- window=2,10
/// 1 1
/// 2 2.1
/// ```
pub fn write_table<W: Write>(table: &CoefficientTable, mut out: W) -> Result<()> {
    let header = match &table.spec {
        Some(s) => {
            let window = match s.prime_window {
                Some((a, b)) => format!("{a},{b}"),
                None => "-".to_string(),
            };
            format!(
                "# resonance-table v1 scheme={} N={} L={} A={} window={}",
                s.scheme,
                s.n_max,
                s.l.map_or("-".to_string(), |v| v.to_string()),
                s.a.map_or("-".to_string(), |v| v.to_string()),
                window
            )
        }
        None => format!("# resonance-table v1 scheme=explicit N={}", table.n_max),
    };
    writeln!(out, "{header}")?;
    for &(n, r) in &table.entries {
        writeln!(out, "{n} {r}")?;
    }
    Ok(())
}

/// Read a table written by [`write_table`]. Scheme tables are rebuilt from the
/// header and checked against the listed coefficients.
pub fn read_table<R: BufRead>(input: R) -> Result<CoefficientTable> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty table file".into(),
    })?;
    let header = header?;
    let perr = |line: usize, msg: String| Error::Parse { line, msg };
    let rest = header
        .strip_prefix("# resonance-table v1")
        .ok_or_else(|| perr(1, "missing '# resonance-table v1' header".into()))?;
    let mut scheme = None;
    let mut n_max = None;
    let mut l = None;
    let mut a = None;
    let mut window = None;
    for field in rest.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| perr(1, format!("bad header field '{field}'")))?;
        let num = |v: &str| -> Result<Option<f64>> {
            if v == "-" {
                Ok(None)
            } else {
                v.parse::<f64>()
                    .map(Some)
                    .map_err(|e| perr(1, format!("{k}: {e}")))
            }
        };
        match k {
            "scheme" => scheme = Some(v.to_string()),
            "N" => n_max = Some(v.parse::<u64>().map_err(|e| perr(1, format!("N: {e}")))?),
            "L" => l = num(v)?,
            "A" => a = num(v)?,
            "window" => {
                if v != "-" {
                    let (p0, p1) = v
                        .split_once(',')
                        .ok_or_else(|| perr(1, "window must be P0,P1".into()))?;
                    let p0 = p0.parse::<f64>().map_err(|e| perr(1, format!("P0: {e}")))?;
                    let p1 = p1.parse::<f64>().map_err(|e| perr(1, format!("P1: {e}")))?;
                    window = Some((p0, p1));
                }
            }
            _ => return Err(perr(1, format!("unknown header field '{k}'"))),
        }
    }
    let n_max = n_max.ok_or_else(|| perr(1, "header lacks N".into()))?;
    let mut entries = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (n, r) = line
            .split_once(' ')
            .ok_or_else(|| perr(i + 1, "expected 'n r(n)'".into()))?;
        let n = n.parse::<u64>().map_err(|e| perr(i + 1, e.to_string()))?;
        let r = r.trim().parse::<f64>().map_err(|e| perr(i + 1, e.to_string()))?;
        if let Some(&(prev, _)) = entries.last() {
            if n <= prev {
                return Err(perr(i + 1, "indices must be strictly ascending".into()));
            }
        }
        entries.push((n, r));
    }
    match scheme.as_deref() {
        None => Err(perr(1, "header lacks scheme".into())),
        Some("explicit") => CoefficientTable::from_entries(n_max, entries),
        Some(name) => {
            let spec = ResonatorSpec {
                scheme: name.parse()?,
                n_max,
                l,
                a,
                prime_window: window,
            };
            let table = build_table(&spec)?;
            if table.entries != entries {
                return Err(perr(0, "listed coefficients disagree with the header's scheme".into()));
            }
            Ok(table)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn explicit(entries: &[(u64, f64)], n: u64) -> CoefficientTable {
        CoefficientTable::from_entries(n, entries.to_vec()).unwrap()
    }

    #[test]
    fn theorem21_small_window_support() {
        let spec = ResonatorSpec::new(Scheme::Theorem21, 100).with_window(2.0, 10.0);
        let t = build_table(&spec).unwrap();
        let want: Vec<u64> = (1..=100u64)
            .filter(|&n| {
                let f = arith::factorize(n);
                f.is_squarefree() && f.primes().all(|p| p <= 7)
            })
            .collect();
        let got: Vec<u64> = t.entries().iter().map(|&(n, _)| n).collect();
        assert_eq!(got, want);
        let l = default_l(100);
        let r2 = t.get(2).unwrap();
        assert!((r2 - l / (2f64.sqrt() * 2f64.ln())).abs() < 1e-15);
        let r30 = t.get(30).unwrap();
        assert!((r30 - t.get(2).unwrap() * t.get(3).unwrap() * t.get(5).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn empty_default_window_is_an_error() {
        let spec = ResonatorSpec::new(Scheme::Theorem21, 1_000_000);
        match build_table(&spec) {
            Err(Error::EmptyWindow { p0, p1, .. }) => {
                assert!(p0 > p1, "window [{p0}, {p1}] should be inverted at desk scale");
            }
            other => panic!("expected EmptyWindow, got {other:?}"),
        }
    }

    #[test]
    fn frequency_a_default_window() {
        let spec = ResonatorSpec::new(Scheme::FrequencyA, 1_000_000).with_a(2.0);
        let (p0, p1) = spec.default_window();
        assert_eq!(p0, 4.0);
        assert!((p1 - 10f64.powf(0.75)).abs() < 1e-12);
        let t = build_table(&spec).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.get(1), Some(1.0));
        assert!((t.get(5).unwrap() - 2.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!(!spec.is_admissible() || 10.0 * 4.0 * 2f64.ln() <= 6.0 * 10f64.ln());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(build_table(&ResonatorSpec::new(Scheme::Theorem21, 1)).is_err());
        assert!(build_table(&ResonatorSpec::new(Scheme::FrequencyA, 100)).is_err());
        assert!(build_table(&ResonatorSpec::new(Scheme::Theorem21, 100).with_window(5.0, 3.0)).is_err());
        assert!(build_table(&ResonatorSpec::new(Scheme::Theorem21, 100).with_l(-1.0)).is_err());
    }

    #[test]
    fn override_window_without_primes_gives_trivial_table() {
        let spec = ResonatorSpec::new(Scheme::Theorem21, 100).with_window(24.0, 28.0);
        let t = build_table(&spec).unwrap();
        assert_eq!(t.entries(), &[(1, 1.0)]);
    }

    #[test]
    fn dirichlet_schemes_skip_two() {
        let spec = ResonatorSpec::new(Scheme::DirichletSigned, 1000).with_window(2.0, 20.0);
        let t = build_table(&spec).unwrap();
        assert!(t.is_odd_supported());
        assert!(t.get(3).unwrap() < 0.0);
        assert!(t.get(15).unwrap() > 0.0);
    }

    #[test]
    fn numerator_small_cases() {
        assert_eq!(numerator_exact(&explicit(&[(1, 1.0)], 1)), 1.0);
        let c = 0.37;
        let got = numerator_exact(&explicit(&[(1, 1.0), (2, c)], 2));
        assert!((got - (1.0 + c * c + c / 2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn denominator_small_cases() {
        assert_eq!(denominator_exact(&explicit(&[(1, 1.0)], 1)), 1.0);
        assert_eq!(denominator_exact(&explicit(&[(1, 1.0), (2, 0.5)], 2)), 1.25);
    }

    #[test]
    fn euler_products() {
        let empty = explicit(&[(1, 1.0)], 10);
        for form in [EulerForm::Plain, EulerForm::Plus, EulerForm::Minus2, EulerForm::Fourth, EulerForm::Cusp] {
            assert_eq!(euler_product(&empty, form).unwrap(), 1.0);
        }
        let single = explicit(&[(1, 1.0), (5, 0.2)], 10);
        assert!((euler_product(&single, EulerForm::Plain).unwrap() - 1.04).abs() < 1e-15);
        // 1 + f² − 2f/√p bottoms out at 1 − 1/p, so minus2 never fails on finite f
        let tuned = explicit(&[(1, 1.0), (3, 1.0 / 3f64.sqrt())], 10);
        assert!((euler_product(&tuned, EulerForm::Minus2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(euler_product_by(&tuned, |_, f| f - 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn rankin_ratio_degenerates_at_zero() {
        let spec = ResonatorSpec::new(Scheme::Theorem21, 10_000).with_window(20.0, 200.0);
        let t = build_table(&spec).unwrap();
        assert!((rankin_tail_ratio(&t, 0.0).unwrap() - 1.0).abs() < 1e-14);
        let l = spec.l_value();
        let alpha = 1.0 / l.ln().powi(3);
        assert!(rankin_tail_ratio(&t, alpha).unwrap() < 1.0);
    }

    #[test]
    fn amgm_trivial_table() {
        let c = amgm_upper_certificate(&explicit(&[(1, 1.0)], 1), None).unwrap();
        assert_eq!(c.bound, 1.0);
        assert!(c.holds);
    }

    #[test]
    fn amgm_holds_for_scheme_table_and_its_abs() {
        let spec = ResonatorSpec::new(Scheme::SignedTheorem21, 1000).with_window(5.0, 40.0);
        let t = build_table(&spec).unwrap();
        assert!(amgm_upper_certificate(&t, None).unwrap().holds);
        assert!(amgm_upper_certificate(&t.abs(), None).unwrap().holds);
    }

    #[test]
    fn text_round_trip_scheme_and_explicit() {
        let spec = ResonatorSpec::new(Scheme::FrequencyA, 5000).with_a(1.3).with_window(2.0, 30.0);
        let t = build_table(&spec).unwrap();
        let mut buf = Vec::new();
        write_table(&t, &mut buf).unwrap();
        let back = read_table(buf.as_slice()).unwrap();
        assert_eq!(back, t);

        let e = explicit(&[(1, 0.1), (6, -1.0 / 3.0), (17, 1e-300)], 20);
        let mut buf = Vec::new();
        write_table(&e, &mut buf).unwrap();
        assert_eq!(read_table(buf.as_slice()).unwrap(), e);
    }

    #[test]
    fn read_rejects_malformed() {
        assert!(read_table("1 1\n".as_bytes()).is_err());
        assert!(read_table("# resonance-table v1 scheme=explicit N=5\n2 1\n1 1\n".as_bytes()).is_err());
        assert!(read_table("# resonance-table v1 scheme=explicit N=5\n9 1\n".as_bytes()).is_err());
    }
}
