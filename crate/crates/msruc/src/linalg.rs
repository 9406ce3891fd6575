//! Small dense linear algebra kernel: column-major LU with partial pivoting.
//!
//! Shared by the constrained least-squares spline fitter (KKT systems) and
//! the simplex basis factorization. Column-major storage keeps the inner
//! loops of the factorization and of both triangular solves contiguous.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (pivot {pivot:.3e} at step {step})")]
    Singular { step: usize, pivot: f64 },
    #[error("dimension mismatch: matrix is {rows}x{cols}, vector has length {len}")]
    Shape { rows: usize, cols: usize, len: usize },
}

/// Dense column-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl DMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DMat { rows, cols, data: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[c * self.rows + r] = v;
    }

    #[inline]
    pub fn add_to(&mut self, r: usize, c: usize, v: f64) {
        self.data[c * self.rows + r] += v;
    }

    #[inline]
    pub fn col(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// Two mutable column views, `a != b`.
    fn two_cols_mut(&mut self, a: usize, b: usize) -> (&mut [f64], &mut [f64]) {
        assert_ne!(a, b);
        let n = self.rows;
        if a < b {
            let (lo, hi) = self.data.split_at_mut(b * n);
            (&mut lo[a * n..(a + 1) * n], &mut hi[..n])
        } else {
            let (lo, hi) = self.data.split_at_mut(a * n);
            (&mut hi[..n], &mut lo[b * n..(b + 1) * n])
        }
    }
}

/// LU factorization with partial pivoting: `P A = L U`.
///
/// `L` (unit diagonal) and `U` are packed into one matrix; `perm[k]` is the
/// original row index that ended up in position `k`.
#[derive(Debug, Clone)]
pub struct Lu {
    pub n: usize,
    lu: DMat,
    perm: Vec<usize>,
    /// Smallest |pivot| encountered; rank-deficiency indicator for callers.
    pub min_pivot: f64,
}

/// Factor a square matrix in place. Fails when a pivot falls below `tol`
/// times the largest absolute entry of its column.
pub fn lu_factor(mut a: DMat, tol: f64) -> Result<Lu, LinalgError> {
    assert_eq!(a.rows, a.cols, "LU needs a square matrix");
    let n = a.rows;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut min_pivot = f64::INFINITY;

    for k in 0..n {
        // Pivot search within column k.
        let colk = a.col(k);
        let mut piv_row = k;
        let mut piv_abs = colk[k].abs();
        for r in k + 1..n {
            let v = colk[r].abs();
            if v > piv_abs {
                piv_abs = v;
                piv_row = r;
            }
        }
        if piv_abs <= tol {
            return Err(LinalgError::Singular { step: k, pivot: piv_abs });
        }
        min_pivot = min_pivot.min(piv_abs);
        if piv_row != k {
            perm.swap(k, piv_row);
            for c in 0..n {
                let col = a.col_mut(c);
                col.swap(k, piv_row);
            }
        }
        // Scale multipliers, then rank-1 update of the trailing block.
        let pivot = a.col(k)[k];
        {
            let colk = a.col_mut(k);
            for r in k + 1..n {
                colk[r] /= pivot;
            }
        }
        for c in k + 1..n {
            let (lcol, ccol) = a.two_cols_mut(k, c);
            let u_kc = ccol[k];
            if u_kc != 0.0 {
                for r in k + 1..n {
                    ccol[r] -= lcol[r] * u_kc;
                }
            }
        }
    }
    Ok(Lu { n, lu: a, perm, min_pivot })
}

impl Lu {
    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::Shape { rows: self.n, cols: self.n, len: b.len() });
        }
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // Forward: L y = P b (unit diagonal).
        for k in 0..n {
            let xk = x[k];
            if xk != 0.0 {
                let col = self.lu.col(k);
                for r in k + 1..n {
                    x[r] -= col[r] * xk;
                }
            }
        }
        // Backward: U x = y.
        for k in (0..n).rev() {
            let col = self.lu.col(k);
            let xk = x[k] / col[k];
            x[k] = xk;
            if xk != 0.0 {
                for r in 0..k {
                    x[r] -= col[r] * xk;
                }
            }
        }
        Ok(x)
    }

    /// Solve `A^T x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::Shape { rows: self.n, cols: self.n, len: b.len() });
        }
        let n = self.n;
        let mut x = b.to_vec();
        // U^T y = b: lower-triangular forward solve over columns of U.
        for k in 0..n {
            let col = self.lu.col(k);
            let mut s = x[k];
            for r in 0..k {
                s -= col[r] * x[r];
            }
            x[k] = s / col[k];
        }
        // L^T z = y: upper-triangular backward solve over columns of L.
        for k in (0..n).rev() {
            let col = self.lu.col(k);
            let mut s = x[k];
            for r in k + 1..n {
                s -= col[r] * x[r];
            }
            x[k] = s;
        }
        // Undo the row permutation: x = P^T z.
        let mut out = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            out[p] = x[k];
        }
        Ok(out)
    }
}

/// Convenience: solve a dense system once, consuming the matrix.
pub fn solve_dense(a: DMat, b: &[f64], tol: f64) -> Result<Vec<f64>, LinalgError> {
    lu_factor(a, tol)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_system(n: usize, seed: u64) -> (DMat, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = DMat::zeros(n, n);
        for c in 0..n {
            for r in 0..n {
                a.set(r, c, rng.gen_range(-1.0..1.0));
            }
            // Diagonal dominance keeps the test matrices comfortably regular.
            a.add_to(c, c, n as f64);
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        (a, b)
    }

    fn residual(a: &DMat, x: &[f64], b: &[f64], transpose: bool) -> f64 {
        let n = a.rows;
        let mut worst = 0.0f64;
        for r in 0..n {
            let mut s = 0.0;
            for c in 0..n {
                s += if transpose { a.get(c, r) } else { a.get(r, c) } * x[c];
            }
            worst = worst.max((s - b[r]).abs());
        }
        worst
    }

    #[test]
    fn solves_random_systems() {
        for seed in 0..20 {
            let n = 3 + (seed as usize % 17);
            let (a, b) = random_system(n, seed);
            let lu = lu_factor(a.clone(), 1e-12).unwrap();
            let x = lu.solve(&b).unwrap();
            assert!(residual(&a, &x, &b, false) < 1e-9);
            let xt = lu.solve_transpose(&b).unwrap();
            assert!(residual(&a, &xt, &b, true) < 1e-9);
        }
    }

    #[test]
    fn rejects_singular() {
        let mut a = DMat::zeros(3, 3);
        // Rank 2: third column is the sum of the first two.
        for r in 0..3 {
            a.set(r, 0, (r + 1) as f64);
            a.set(r, 1, (2 * r + 1) as f64);
            a.set(r, 2, a.get(r, 0) + a.get(r, 1));
        }
        assert!(matches!(lu_factor(a, 1e-10), Err(LinalgError::Singular { .. })));
    }

    #[test]
    fn permutation_handled() {
        // Forces a row swap at the first step.
        let mut a = DMat::zeros(2, 2);
        a.set(0, 0, 0.0);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 1, 0.0);
        let lu = lu_factor(a, 1e-14).unwrap();
        let x = lu.solve(&[3.0, 7.0]).unwrap();
        assert!((x[0] - 7.0).abs() < 1e-14 && (x[1] - 3.0).abs() < 1e-14);
    }
}
