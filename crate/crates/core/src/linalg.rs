//! Small dense linear algebra: one-sided Jacobi SVD, pseudo-inverse least
//! squares and Cholesky solves. Sized for the handful of unknowns the fits in
//! this crate need.

use std::ops::{Index, IndexMut};

use crate::Real;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self[(r, c)] * x[c]).sum())
            .collect()
    }

    /// `Aᵀ x`
    pub fn tr_mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.rows);
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self[(r, c)] * x[r]).sum())
            .collect()
    }

    /// `AᵀA`
    pub fn gram(&self) -> Self {
        Self::from_fn(self.cols, self.cols, |i, j| {
            (0..self.rows).map(|r| self[(r, i)] * self[(r, j)]).sum()
        })
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

/// Thin singular value decomposition `A = U diag(s) Vᵀ` of an `m × n` matrix
/// with `m ≥ n`; singular values in descending order.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    /// Columns of `U` (`n` vectors of length `m`).
    pub u: Vec<Vec<T>>,
    pub s: Vec<T>,
    /// Columns of `V` (`n` vectors of length `n`).
    pub v: Vec<Vec<T>>,
}

pub fn svd<T: Real>(a: &Matrix<T>) -> Svd<T> {
    let (m, n) = (a.rows(), a.cols());
    assert!(m >= n, "svd expects rows >= cols");
    let mut u: Vec<Vec<T>> = (0..n).map(|c| a.column(c)).collect();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|c| (0..n).map(|r| if r == c { T::one() } else { T::zero() }).collect())
        .collect();
    let eps = T::eps();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: T = u[p].iter().map(|x| *x * *x).sum();
                let beta: T = u[q].iter().map(|x| *x * *x).sum();
                let gamma: T = u[p].iter().zip(&u[q]).map(|(x, y)| *x * *y).sum();
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for col in [&mut u, &mut v] {
                    let (lo, hi) = col.split_at_mut(q);
                    for (xp, xq) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                        let (a, b) = (*xp, *xq);
                        *xp = c * a - s * b;
                        *xq = s * a + c * b;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<T> = u.iter().map(|col| col.iter().map(|x| *x * *x).sum::<T>().sqrt()).collect();
    for (col, &sv) in u.iter_mut().zip(&s) {
        if sv > T::zero() {
            col.iter_mut().for_each(|x| *x = *x / sv);
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap_or(std::cmp::Ordering::Equal));
    let u = order.iter().map(|&i| u[i].clone()).collect();
    let v = order.iter().map(|&i| v[i].clone()).collect();
    s = order.iter().map(|&i| s[i]).collect();
    Svd { u, s, v }
}

/// Minimum-norm least-squares solution through the pseudo-inverse.
#[derive(Debug, Clone)]
pub struct PinvSolution<T> {
    pub x: Vec<T>,
    pub singular_values: Vec<T>,
    /// Number of singular values above `rcond · s_max`.
    pub rank: usize,
    pub cutoff: T,
}

impl<T: Real> PinvSolution<T> {
    /// `s_max / s_min` over all singular values.
    pub fn condition_number(&self) -> T {
        match (self.singular_values.first(), self.singular_values.last()) {
            (Some(&hi), Some(&lo)) if lo > T::zero() => hi / lo,
            _ => T::infinity(),
        }
    }
}

pub fn pinv_solve<T: Real>(a: &Matrix<T>, b: &[T], rcond: T) -> PinvSolution<T> {
    assert_eq!(a.rows(), b.len());
    let dec = svd(a);
    let cutoff = rcond * dec.s.first().copied().unwrap_or(T::zero());
    let mut x = vec![T::zero(); a.cols()];
    let mut rank = 0;
    for i in 0..dec.s.len() {
        if dec.s[i] <= cutoff || dec.s[i] == T::zero() {
            continue;
        }
        rank += 1;
        let coef = dec.u[i].iter().zip(b).map(|(u, b)| *u * *b).sum::<T>() / dec.s[i];
        for (xj, vj) in x.iter_mut().zip(&dec.v[i]) {
            *xj = *xj + coef * *vj;
        }
    }
    PinvSolution {
        x,
        singular_values: dec.s,
        rank,
        cutoff,
    }
}

/// Solves `A x = b` for symmetric positive definite `A`; `None` if the
/// factorisation breaks down.
pub fn cholesky_solve<T: Real>(a: &Matrix<T>, b: &[T]) -> Option<Vec<T>> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum = sum - l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if !(sum > T::zero()) {
                    return None;
                }
                l[(i, i)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let s = (0..i).fold(b[i], |acc, k| acc - l[(i, k)] * y[k]);
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let s = (i + 1..n).fold(y[i], |acc, k| acc - l[(k, i)] * x[k]);
        x[i] = s / l[(i, i)];
    }
    Some(x)
}

/// Inverse of a symmetric positive definite matrix, column by column.
pub fn spd_inverse<T: Real>(a: &Matrix<T>) -> Option<Matrix<T>> {
    let n = a.rows();
    let mut inv = Matrix::zeros(n, n);
    for c in 0..n {
        let e: Vec<T> = (0..n).map(|r| if r == c { T::one() } else { T::zero() }).collect();
        let col = cholesky_solve(a, &e)?;
        for r in 0..n {
            inv[(r, c)] = col[r];
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn svd_reconstructs() {
        let a = Matrix::from_fn(5, 3, |r, c| ((r * 3 + c) as f64).sin() + if r == c { 2.0 } else { 0.0 });
        let d = svd(&a);
        for r in 0..5 {
            for c in 0..3 {
                let v: f64 = (0..3).map(|k| d.u[k][r] * d.s[k] * d.v[k][c]).sum();
                assert!((v - a[(r, c)]).abs() < 1e-13);
            }
        }
        assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn pinv_detects_rank() {
        // third column = first + second
        let a = Matrix::from_fn(6, 3, |r, c| {
            let x = r as f64;
            match c {
                0 => 1.0,
                1 => x,
                _ => 1.0 + x,
            }
        });
        let sol = pinv_solve(&a, &[1.0; 6], 1e-10);
        assert_eq!(sol.rank, 2);
        assert!(sol.condition_number() > 1e10);
    }

    #[test]
    fn cholesky_inverse() {
        let a = Matrix::from_fn(3, 3, |r, c| if r == c { 4.0 } else { 1.0 });
        let inv = spd_inverse(&a).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let v: f64 = (0..3).map(|k| a[(r, k)] * inv[(k, c)]).sum();
                assert!((v - if r == c { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        let neg = Matrix::from_fn(2, 2, |r, c| if r == c { -1.0 } else { 0.0 });
        assert!(cholesky_solve(&neg, &[1.0, 1.0]).is_none());
    }

    proptest! {
        #[test]
        fn least_squares_matches_normal_equations(seed in proptest::collection::vec(-1.0f64..1.0, 24)) {
            let a = Matrix::from_fn(8, 3, |r, c| seed[r * 3 + c] + if r == c { 3.0 } else { 0.0 });
            let b: Vec<f64> = (0..8).map(|i| (i as f64 * 0.7).cos()).collect();
            let x = pinv_solve(&a, &b, 1e-12).x;
            let y = cholesky_solve(&a.gram(), &a.tr_mul_vec(&b)).unwrap();
            for (p, q) in x.iter().zip(&y) {
                prop_assert!((p - q).abs() < 1e-9 * (1.0 + q.abs()));
            }
        }
    }
}
