//! Dense matrices and LU factorization, generic over the working precision.

use std::ops::{Index, IndexMut};

use crate::dd::Real;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<R> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: Real> Mat<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![R::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = R::one();
        }
        m
    }

    /// Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<R>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> R) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[R] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<R> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[R]) -> Vec<R> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(R::zero(), |acc, (a, b)| acc + *a * *b)
            })
            .collect()
    }

    /// Euclidean norms of the columns, in f64.
    pub fn column_norms(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| {
                (0..self.rows)
                    .map(|i| self[(i, j)].to_f64().powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    pub fn row_norms(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.to_f64().powi(2)).sum::<f64>().sqrt())
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs().to_f64()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> Mat<f64> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.to_f64()).collect(),
        }
    }

    pub fn convert<S: Real>(&self, f: impl Fn(R) -> S) -> Mat<S> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| f(*x)).collect(),
        }
    }

    pub fn to_rows_f64(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.to_f64()).collect())
            .collect()
    }
}

impl<R> Index<(usize, usize)> for Mat<R> {
    type Output = R;
    fn index(&self, (i, j): (usize, usize)) -> &R {
        &self.data[i * self.cols + j]
    }
}

impl<R> IndexMut<(usize, usize)> for Mat<R> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut R {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, PA = LU.
#[derive(Clone, Debug)]
pub struct Lu<R> {
    lu: Mat<R>,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
    norm1: f64,
}

impl<R: Real> Lu<R> {
    /// Panics on a non-square input.
    pub fn new(a: &Mat<R>) -> Self {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let norm1 = a.norm1();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = false;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == R::zero() {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f == R::zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Self {
            lu,
            perm,
            sign,
            singular,
            norm1,
        }
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    /// True when an exactly zero pivot was met.
    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn det(&self) -> R {
        if self.singular {
            return R::zero();
        }
        let mut d = R::from_f64(self.sign);
        for i in 0..self.dim() {
            d *= self.lu[(i, i)];
        }
        d
    }

    /// Sign and natural log of |det|; the log is -inf for a singular matrix.
    pub fn log_abs_det(&self) -> (f64, f64) {
        if self.singular {
            return (0.0, f64::NEG_INFINITY);
        }
        let mut s = self.sign;
        let mut l = 0.0;
        for i in 0..self.dim() {
            let u = self.lu[(i, i)];
            if u < R::zero() {
                s = -s;
            }
            l += u.abs().ln().to_f64();
        }
        (s, l)
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[R]) -> Option<Vec<R>> {
        let n = self.dim();
        assert_eq!(b.len(), n, "dimension mismatch");
        if self.singular {
            return None;
        }
        let mut x: Vec<R> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        Some(x)
    }

    /// Solves Aᵀ x = b.
    pub fn solve_transpose(&self, b: &[R]) -> Option<Vec<R>> {
        let n = self.dim();
        assert_eq!(b.len(), n, "dimension mismatch");
        if self.singular {
            return None;
        }
        // Aᵀ = Uᵀ Lᵀ P
        let mut y = b.to_vec();
        for i in 0..n {
            for j in 0..i {
                let u = self.lu[(j, i)];
                let yj = y[j];
                y[i] -= u * yj;
            }
            y[i] = y[i] / self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let l = self.lu[(j, i)];
                let yj = y[j];
                y[i] -= l * yj;
            }
        }
        let mut x = vec![R::zero(); n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Mat<R>> {
        let n = self.dim();
        let mut inv = Mat::zeros(n, n);
        let mut e = vec![R::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = R::zero());
            e[j] = R::one();
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Some(inv)
    }

    /// 1-norm condition number, computed from the explicit inverse.
    pub fn condition(&self) -> f64 {
        match self.inverse() {
            Some(inv) => self.norm1 * inv.norm1(),
            None => f64::INFINITY,
        }
    }

    /// Unit lower factor L (with the row permutation applied to A).
    pub fn lower(&self) -> Mat<R> {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => self.lu[(i, j)],
            std::cmp::Ordering::Equal => R::one(),
            std::cmp::Ordering::Less => R::zero(),
        })
    }

    pub fn upper(&self) -> Mat<R> {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| if i <= j { self.lu[(i, j)] } else { R::zero() })
    }

    /// perm[i] is the row of A that ended up in row i of PA.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }
}

/// Determinant of a small matrix by Laplace expansion along the first row.
/// Exponential cost; intended only for oracles with n ≤ 6.
pub fn det_laplace(m: &Mat<f64>) -> f64 {
    let n = m.rows();
    assert_eq!(n, m.cols());
    match n {
        0 => 1.0,
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => {
            let mut s = 0.0;
            for j in 0..n {
                let minor = Mat::from_fn(n - 1, n - 1, |r, c| {
                    m[(r + 1, if c < j { c } else { c + 1 })]
                });
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                s += sign * m[(0, j)] * det_laplace(&minor);
            }
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::DoubleDouble;
    use proptest::prelude::*;

    fn hilbert(n: usize) -> Mat<f64> {
        Mat::from_fn(n, n, |i, j| 1.0 / (i + j + 1) as f64)
    }

    #[test]
    fn small_determinants() {
        let a = Mat::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0 / 3.0]]);
        assert!((Lu::new(&a).det() - 4.0 / 3.0).abs() < 1e-15);
        let b = Mat::from_rows(&[vec![1.0, 1.0], vec![-0.5, 0.5]]);
        assert!((Lu::new(&b).det() - 1.0).abs() < 1e-15);
        let c = Mat::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]);
        assert_eq!(Lu::new(&c).det(), 0.0);
        assert!(Lu::new(&c).is_singular());
    }

    #[test]
    fn transpose_solve_matches_explicit_transpose() {
        let a = Mat::from_rows(&[
            vec![0.0, 2.0, 1.0],
            vec![1.0, -1.0, 3.0],
            vec![4.0, 0.5, 2.0],
        ]);
        let b = [1.0, 2.0, 3.0];
        let x1 = Lu::new(&a).solve_transpose(&b).unwrap();
        let x2 = Lu::new(&a.transpose()).solve(&b).unwrap();
        for (u, v) in x1.iter().zip(&x2) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn double_double_hilbert_solve() {
        let n = 12;
        let h = Mat::from_fn(n, n, |i, j| {
            DoubleDouble::ONE / DoubleDouble::from_f64((i + j + 1) as f64)
        });
        let x_true: Vec<DoubleDouble> = (0..n).map(|i| DoubleDouble::from_f64(i as f64 + 1.0)).collect();
        let b = h.mul_vec(&x_true);
        let lu = Lu::new(&h);
        let x = lu.solve(&b).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((*u - *v).abs().to_f64() < 1e-12);
        }
        assert!(lu.condition() > 1e15);
    }

    #[test]
    fn laplace_matches_lu() {
        let a = hilbert(5);
        let d1 = det_laplace(&a);
        let d2 = Lu::new(&a).det();
        assert!(((d1 - d2) / d2).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn lu_reconstructs_permuted_matrix(vals in prop::collection::vec(-10.0f64..10.0, 16)) {
            let a = Mat::from_fn(4, 4, |i, j| vals[4 * i + j]);
            let lu = Lu::new(&a);
            prop_assume!(!lu.is_singular());
            let prod = lu.lower().mul(&lu.upper());
            for (i, &p) in lu.permutation().iter().enumerate() {
                for j in 0..4 {
                    prop_assert!((prod[(i, j)] - a[(p, j)]).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn log_det_agrees_with_det(vals in prop::collection::vec(-3.0f64..3.0, 9)) {
            let a = Mat::from_fn(3, 3, |i, j| vals[3 * i + j]);
            let lu = Lu::new(&a);
            let d = lu.det();
            prop_assume!(d.abs() > 1e-6);
            let (s, l) = lu.log_abs_det();
            prop_assert!((s * l.exp() - d).abs() < 1e-9 * d.abs().max(1.0));
        }
    }
}
