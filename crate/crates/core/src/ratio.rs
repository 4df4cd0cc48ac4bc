//! The exact finite-`N` optimum of the resonance ratio.
//!
//! For real coefficients the numerator `Σ_{mk ≤ N} r(m) r(mk)/√k` is the
//! quadratic form `rᵀBr` of the symmetric divisor matrix
//! `B[m][n] = 1/(2√(n/m))` for `m | n`, `m < n`, with unit diagonal.
//! The denominator is `rᵀr`, so the best possible ratio is `λ_max(B)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::resonator::{build_table, denominator_exact, numerator_exact, CoefficientTable, ResonatorSpec};
use crate::sum::{par_sum, Neumaier};

/// Default dimension cap for [`build_matrix`].
pub const MATRIX_CAP: u64 = 20_000;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 100_000;

/// Symmetric divisor matrix in compressed-row form (both triangles stored).
#[derive(Debug, Clone)]
pub struct DivisorFormMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl DivisorFormMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries on and above the diagonal, `Σ_{n ≤ N} d(n)`.
    pub fn nnz_upper(&self) -> usize {
        (self.cols.len() + self.n) / 2
    }

    /// Entry `B[i][j]` with 1-based indices.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.cols[self.row_ptr[i - 1]..self.row_ptr[i]];
        match row.binary_search(&(j - 1)) {
            Ok(k) => self.vals[self.row_ptr[i - 1] + k],
            Err(_) => 0.0,
        }
    }

    /// `y = Bx`. Each row is summed independently, so the result does not
    /// depend on the worker count.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .into_par_iter()
            .with_min_len(1024)
            .map(|i| {
                let mut acc = Neumaier::new();
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc.add(self.vals[k] * x[self.cols[k]]);
                }
                acc.value()
            })
            .collect()
    }

    /// `xᵀBx`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let y = self.matvec(x);
        dot(x, &y)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    par_sum(a.len(), |i| a[i] * b[i])
}

pub fn build_matrix(n_max: u64) -> Result<DivisorFormMatrix> {
    build_matrix_capped(n_max, MATRIX_CAP)
}

pub fn build_matrix_capped(n_max: u64, cap: u64) -> Result<DivisorFormMatrix> {
    if n_max < 1 {
        return domain("matrix dimension N must be >= 1");
    }
    if n_max > cap {
        return Err(Error::Resource {
            what: "divisor matrix dimension",
            requested: n_max,
            cap,
        });
    }
    let n = n_max as usize;
    let mut rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| vec![(i, 1.0)]).collect();
    for m in 1..=n {
        let mut k = 2;
        while m * k <= n {
            let v = 0.5 / (k as f64).sqrt();
            rows[m - 1].push((m * k - 1, v));
            rows[m * k - 1].push((m - 1, v));
            k += 1;
        }
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for mut row in rows {
        row.sort_by_key(|&(j, _)| j);
        for (j, v) in row {
            cols.push(j);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    Ok(DivisorFormMatrix {
        n,
        row_ptr,
        cols,
        vals,
    })
}

/// Largest eigenvalue and unit eigenvector, indexed by `n - 1`.
#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    pub lambda_max: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
}

/// Power iteration from the all-ones vector until successive Rayleigh
/// quotients differ by less than `tol`.
pub fn max_ratio_eigen(n_max: u64, tol: f64) -> Result<EigenResult> {
    if !(tol > 0.0) {
        return domain("tolerance must be positive");
    }
    let b = build_matrix(n_max)?;
    power_iteration(&b, tol, MAX_ITERATIONS)
}

pub fn power_iteration(b: &DivisorFormMatrix, tol: f64, max_iter: usize) -> Result<EigenResult> {
    let n = b.dim();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = f64::NAN;
    for it in 1..=max_iter {
        let y = b.matvec(&x);
        let rq = dot(&x, &y);
        let norm = dot(&y, &y).sqrt();
        x = y.into_iter().map(|v| v / norm).collect();
        if (rq - lambda).abs() < tol {
            return Ok(EigenResult {
                lambda_max: rq,
                vector: x,
                iterations: it,
            });
        }
        lambda = rq;
    }
    Err(Error::Iteration {
        what: "power iteration",
        iterations: max_iter,
        last: lambda,
    })
}

/// Turn a dense vector indexed by `n - 1` into an explicit table.
pub fn table_from_vector(v: &[f64]) -> Result<CoefficientTable> {
    let entries = v.iter().enumerate().map(|(i, &r)| (i as u64 + 1, r)).collect();
    CoefficientTable::from_entries(v.len() as u64, entries)
}

/// Scheme ratio against the exact optimum.
#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    #[serde(rename = "N")]
    pub n: u64,
    pub heuristic: f64,
    pub lambda_max: f64,
    pub gap: f64,
    pub iterations: usize,
    /// `heuristic ≤ λ_max (1 + 1e-9)`.
    pub within_bound: bool,
}

pub fn compare_table(table: &CoefficientTable, tol: f64) -> Result<RatioReport> {
    let eig = max_ratio_eigen(table.n_max(), tol)?;
    let heuristic = numerator_exact(table) / denominator_exact(table);
    Ok(RatioReport {
        n: table.n_max(),
        heuristic,
        lambda_max: eig.lambda_max,
        gap: eig.lambda_max - heuristic,
        iterations: eig.iterations,
        within_bound: heuristic <= eig.lambda_max * (1.0 + 1e-9),
    })
}

pub fn compare_heuristic(spec: &ResonatorSpec, tol: f64) -> Result<RatioReport> {
    compare_table(&build_table(spec)?, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_matrices() {
        let b1 = build_matrix(1).unwrap();
        assert_eq!(b1.get(1, 1), 1.0);
        let b2 = build_matrix(2).unwrap();
        assert_eq!(b2.get(1, 2), 0.5 / 2f64.sqrt());
        assert_eq!(b2.get(2, 1), b2.get(1, 2));
        assert_eq!(b2.get(2, 2), 1.0);
        let b6 = build_matrix(6).unwrap();
        assert_eq!(b6.get(2, 3), 0.0);
        assert_eq!(b6.get(2, 6), 0.5 / 3f64.sqrt());
        assert!(build_matrix(0).is_err());
        assert!(matches!(build_matrix(20_001), Err(Error::Resource { .. })));
    }

    #[test]
    fn nnz_is_divisor_count_sum() {
        let b = build_matrix(1000).unwrap();
        let want: u64 = (1..=1000u64).map(|n| crate::arith::divisors(n).len() as u64).sum();
        assert_eq!(b.nnz_upper() as u64, want);
    }

    #[test]
    fn eigen_small_n() {
        let e1 = max_ratio_eigen(1, 1e-12).unwrap();
        assert_eq!(e1.lambda_max, 1.0);
        assert_eq!(e1.vector, vec![1.0]);
        let e2 = max_ratio_eigen(2, 1e-14).unwrap();
        assert!((e2.lambda_max - (1.0 + 0.5 / 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn eigenvector_attains_optimum_at_n2() {
        let e = max_ratio_eigen(2, 1e-14).unwrap();
        let t = table_from_vector(&e.vector).unwrap();
        let rep = compare_table(&t, 1e-14).unwrap();
        assert!(rep.gap.abs() < 1e-12);
        assert!(rep.within_bound);
    }
}
