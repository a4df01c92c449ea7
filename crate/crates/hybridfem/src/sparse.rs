//! Minimal sparse linear algebra: triplet accumulation, CSR storage,
//! sparse products (for the prolongation reduction P^T A P) and a plain
//! conjugate gradient solver with optional Jacobi preconditioning.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("conjugate gradient did not reach {target:e} within {iters} iterations (relative residual {achieved:e})")]
    NoConvergence {
        iters: usize,
        target: f64,
        achieved: f64,
    },
    #[error("dimension mismatch: matrix is {rows}x{cols}, vector has length {len}")]
    DimensionMismatch { rows: usize, cols: usize, len: usize },
}

/// Triplet (COO) accumulator. Duplicate entries sum on conversion to CSR.
#[derive(Debug, Clone)]
pub struct CooMatrix {
    pub nrows: usize,
    pub ncols: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl CooMatrix {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        CooMatrix {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if value != 0.0 {
            self.entries.push((row as u32, col as u32, value));
        }
    }

    pub fn extend(&mut self, other: CooMatrix) {
        debug_assert_eq!(self.nrows, other.nrows);
        debug_assert_eq!(self.ncols, other.ncols);
        self.entries.extend(other.entries);
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let mut row_counts = vec![0usize; self.nrows + 1];
        for &(r, _, _) in &self.entries {
            row_counts[r as usize + 1] += 1;
        }
        for i in 0..self.nrows {
            row_counts[i + 1] += row_counts[i];
        }
        let mut cols = vec![0u32; self.entries.len()];
        let mut vals = vec![0.0; self.entries.len()];
        let mut next = row_counts.clone();
        for &(r, c, v) in &self.entries {
            let slot = next[r as usize];
            cols[slot] = c;
            vals[slot] = v;
            next[r as usize] += 1;
        }
        // Sort each row by column and collapse duplicates in place.
        let mut out_ptr = vec![0usize; self.nrows + 1];
        let mut write = 0;
        for r in 0..self.nrows {
            let (lo, hi) = (row_counts[r], row_counts[r + 1]);
            let mut row: Vec<(u32, f64)> = cols[lo..hi].iter().copied().zip(vals[lo..hi].iter().copied()).collect();
            row.sort_by_key(|&(c, _)| c);
            let row_start = write;
            for (c, v) in row {
                if write > row_start && cols[write - 1] == c {
                    vals[write - 1] += v;
                } else {
                    cols[write] = c;
                    vals[write] = v;
                    write += 1;
                }
            }
            out_ptr[r + 1] = write;
        }
        cols.truncate(write);
        vals.truncate(write);
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: out_ptr,
            cols,
            vals,
        }
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            cols: (0..n as u32).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&(c as u32)) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let (cols, vals) = (
                &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]],
                &self.vals[self.row_ptr[r]..self.row_ptr[r + 1]],
            );
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c as usize];
            }
            y[r] = acc;
        }
    }

    pub fn mul_vec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec(x, &mut y);
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.cols {
            counts[c as usize + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0u32; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        let mut next = counts.clone();
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k] as usize;
                let slot = next[c];
                cols[slot] = r as u32;
                vals[slot] = self.vals[k];
                next[c] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr: counts,
            cols,
            vals,
        }
    }

    /// Sparse-sparse product using a dense accumulator per row.
    pub fn multiply(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, other.nrows);
        let n = other.ncols;
        let mut acc = vec![0.0f64; n];
        let mut marker = vec![usize::MAX; n];
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut cols: Vec<u32> = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        for r in 0..self.nrows {
            let mut touched: Vec<u32> = Vec::new();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let a = self.vals[k];
                let mid = self.cols[k] as usize;
                for k2 in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    let c = other.cols[k2] as usize;
                    if marker[c] != r {
                        marker[c] = r;
                        acc[c] = 0.0;
                        touched.push(c as u32);
                    }
                    acc[c] += a * other.vals[k2];
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                cols.push(c);
                vals.push(acc[c as usize]);
            }
            row_ptr[r + 1] = cols.len();
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: n,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Largest relative asymmetry |a_ij - a_ji| / max|a|; 0 for symmetric.
    pub fn symmetry_error(&self) -> f64 {
        let t = self.transpose();
        let scale = self
            .vals
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-300);
        let mut worst = 0.0f64;
        for r in 0..self.nrows {
            let (c1, v1) = self.row(r);
            let (c2, v2) = t.row(r);
            let mut i = 0;
            let mut j = 0;
            while i < c1.len() || j < c2.len() {
                let (a, b) = match (c1.get(i), c2.get(j)) {
                    (Some(&x), Some(&y)) if x == y => {
                        i += 1;
                        j += 1;
                        (v1[i - 1], v2[j - 1])
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        i += 1;
                        (v1[i - 1], 0.0)
                    }
                    (Some(_), Some(_)) | (None, Some(_)) => {
                        j += 1;
                        (0.0, v2[j - 1])
                    }
                    (Some(_), None) => {
                        i += 1;
                        (v1[i - 1], 0.0)
                    }
                    (None, None) => break,
                };
                worst = worst.max((a - b).abs() / scale);
            }
        }
        worst
    }

    /// Dump as `row col value` triplet lines for external verification.
    pub fn write_triplets(&self, path: &Path) -> std::io::Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                writeln!(out, "{} {} {}", r, c, v)?;
            }
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    /// Target for ||b - Ax|| / ||b||.
    pub rel_tol: f64,
    pub max_iters: usize,
    /// Use the diagonal (Jacobi) preconditioner.
    pub jacobi: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            rel_tol: 1e-10,
            max_iters: 100_000,
            jacobi: false,
        }
    }
}

/// Conjugate gradients for a symmetric positive definite system.
/// Returns the solution and the iteration count.
pub fn solve_cg(
    a: &CsrMatrix,
    b: &[f64],
    opts: CgOptions,
) -> Result<(Vec<f64>, usize), SolveError> {
    if a.ncols != b.len() || a.nrows != b.len() {
        return Err(SolveError::DimensionMismatch {
            rows: a.nrows,
            cols: a.ncols,
            len: b.len(),
        });
    }
    let n = b.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let inv_diag: Option<Vec<f64>> = opts.jacobi.then(|| {
        (0..n)
            .map(|i| {
                let d = a.get(i, i);
                if d.abs() > 0.0 {
                    1.0 / d
                } else {
                    1.0
                }
            })
            .collect()
    });
    let precond = |r: &[f64]| -> Vec<f64> {
        match &inv_diag {
            Some(d) => r.iter().zip(d).map(|(x, y)| x * y).collect(),
            None => r.to_vec(),
        }
    };

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for iter in 0..opts.max_iters {
        if norm(&r) <= opts.rel_tol * b_norm {
            return Ok((x, iter));
        }
        a.mul_vec(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let achieved = norm(&r) / b_norm;
    if achieved <= opts.rel_tol {
        Ok((x, opts.max_iters))
    } else {
        Err(SolveError::NoConvergence {
            iters: opts.max_iters,
            target: opts.rel_tol,
            achieved,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coo_to_csr_sums_duplicates() {
        let mut coo = CooMatrix::new(2, 2);
        coo.push(0, 0, 1.0);
        coo.push(0, 0, 2.0);
        coo.push(1, 0, -1.0);
        coo.push(0, 1, 4.0);
        let csr = coo.to_csr();
        assert_eq!(csr.get(0, 0), 3.0);
        assert_eq!(csr.get(0, 1), 4.0);
        assert_eq!(csr.get(1, 0), -1.0);
        assert_eq!(csr.get(1, 1), 0.0);
        assert_eq!(csr.nnz(), 3);
    }

    #[test]
    fn transpose_and_multiply() {
        let mut coo = CooMatrix::new(2, 3);
        coo.push(0, 0, 1.0);
        coo.push(0, 2, 2.0);
        coo.push(1, 1, 3.0);
        let a = coo.to_csr();
        let at = a.transpose();
        assert_eq!(at.nrows, 3);
        assert_eq!(at.get(2, 0), 2.0);
        // A^T A is 3x3 symmetric.
        let ata = at.multiply(&a);
        assert_eq!(ata.get(0, 2), 2.0);
        assert_eq!(ata.get(2, 0), 2.0);
        assert_eq!(ata.get(2, 2), 4.0);
        assert!(ata.symmetry_error() < 1e-15);
    }

    #[test]
    fn cg_identity_converges_in_one_iteration() {
        let a = CsrMatrix::identity(4);
        let b = vec![1.0, -2.0, 3.5, 0.25];
        let (x, iters) = solve_cg(&a, &b, CgOptions::default()).unwrap();
        assert!(iters <= 1);
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn cg_two_by_two_closed_form() {
        // [[4,1],[1,3]] x = (1,2)  =>  x = (1/11, 7/11).
        let mut coo = CooMatrix::new(2, 2);
        coo.push(0, 0, 4.0);
        coo.push(0, 1, 1.0);
        coo.push(1, 0, 1.0);
        coo.push(1, 1, 3.0);
        let a = coo.to_csr();
        let (x, _) = solve_cg(&a, &[1.0, 2.0], CgOptions::default()).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-12);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn cg_reports_non_convergence() {
        let mut coo = CooMatrix::new(2, 2);
        coo.push(0, 0, 4.0);
        coo.push(0, 1, 1.0);
        coo.push(1, 0, 1.0);
        coo.push(1, 1, 3.0);
        let a = coo.to_csr();
        let err = solve_cg(
            &a,
            &[1.0, 2.0],
            CgOptions {
                max_iters: 1,
                ..Default::default()
            },
        );
        assert!(matches!(err, Err(SolveError::NoConvergence { .. })));
    }

    #[test]
    fn jacobi_matches_plain_cg() {
        // Small SPD system with uneven diagonal.
        let n = 20;
        let mut coo = CooMatrix::new(n, n);
        for i in 0..n {
            coo.push(i, i, 2.0 + i as f64);
            if i + 1 < n {
                coo.push(i, i + 1, -1.0);
                coo.push(i + 1, i, -1.0);
            }
        }
        let a = coo.to_csr();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let (x0, _) = solve_cg(&a, &b, CgOptions::default()).unwrap();
        let (x1, _) = solve_cg(
            &a,
            &b,
            CgOptions {
                jacobi: true,
                ..Default::default()
            },
        )
        .unwrap();
        for (p, q) in x0.iter().zip(&x1) {
            assert!((p - q).abs() < 1e-8);
        }
    }
}
