//! Dense integer matrices with exact determinant, solve and inverse.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

/// Row-major dense matrix of machine integers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<i64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        IntMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[i64]) -> Vec<i64> {
        assert_eq!(self.cols, x.len(), "shape mismatch");
        (0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn row_sums(&self) -> Vec<i64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_lower_triangular(&self) -> bool {
        (0..self.rows).all(|i| ((i + 1)..self.cols).all(|j| self.get(i, j) == 0))
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.rows).all(|i| (0..i.min(self.cols)).all(|j| self.get(i, j) == 0))
    }

    fn big(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.big();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match ((k + 1)..n).find(|&r| !a[r][k].is_zero()) {
                    Some(r) => {
                        a.swap(k, r);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in (k + 1)..n {
                for j in (k + 1)..n {
                    let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                    a[i][j] = v;
                }
            }
            prev = a[k][k].clone();
        }
        sign * &a[n - 1][n - 1]
    }

    /// Exact inverse over ℚ, `None` when singular.
    pub fn inverse(&self) -> Option<Vec<Vec<BigRational>>> {
        assert!(self.is_square(), "inverse of a non-square matrix");
        let n = self.rows;
        let mut a: Vec<Vec<BigRational>> = (0..n)
            .map(|i| {
                let mut r: Vec<BigRational> =
                    self.row(i).iter().map(|&x| BigRational::from_integer(x.into())).collect();
                r.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
                r
            })
            .collect();
        for k in 0..n {
            let p = (k..n).find(|&r| !a[r][k].is_zero())?;
            a.swap(k, p);
            let piv = a[k][k].clone();
            for x in a[k].iter_mut() {
                *x /= &piv;
            }
            let pivot_row = a[k].clone();
            for (i, row) in a.iter_mut().enumerate() {
                if i == k || row[k].is_zero() {
                    continue;
                }
                let f = row[k].clone();
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
        Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
    }

    /// Exact solution of A x = b over ℚ.
    pub fn solve(&self, b: &[i64]) -> Option<Vec<BigRational>> {
        let inv = self.inverse()?;
        Some(
            inv.iter()
                .map(|row| {
                    row.iter()
                        .zip(b)
                        .fold(BigRational::zero(), |acc, (x, &y)| acc + x * BigRational::from_integer(y.into()))
                })
                .collect(),
        )
    }

    /// ‖A⁻¹‖_∞ (maximum absolute row sum), exact.
    pub fn inverse_inf_norm(&self) -> Option<BigRational> {
        let inv = self.inverse()?;
        inv.iter().map(|row| row.iter().map(|x| x.abs()).sum::<BigRational>()).max()
    }
}

/// Integrality test for A x = b through the adjugate: x = adj(A)·b / det(A).
///
/// Built once per matrix so that many right-hand sides are cheap.
#[derive(Clone, Debug)]
pub struct IntegralSolver {
    adj: Vec<Vec<BigInt>>,
    det: BigInt,
}

impl IntegralSolver {
    pub fn new(a: &IntMatrix) -> Option<Self> {
        let det = a.det();
        if det.is_zero() {
            return None;
        }
        let inv = a.inverse()?;
        let dr = BigRational::from_integer(det.clone());
        let adj = inv
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|x| {
                        let y = x * &dr;
                        debug_assert!(y.is_integer());
                        y.to_integer()
                    })
                    .collect()
            })
            .collect();
        Some(IntegralSolver { adj, det })
    }

    pub fn det(&self) -> &BigInt {
        &self.det
    }

    /// The integer solution, or `None` if the rational solution is not integral.
    pub fn solve(&self, b: &[i64]) -> Option<Vec<i64>> {
        let mut out = Vec::with_capacity(b.len());
        for row in &self.adj {
            let s: BigInt = row.iter().zip(b).map(|(a, &y)| a * y).sum();
            let (q, r) = s.div_rem(&self.det);
            if !r.is_zero() {
                return None;
            }
            out.push(q.to_i64()?);
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize, d: i64, o: i64) -> IntMatrix {
        let mut m = IntMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, d);
            if i + 1 < n {
                m.set(i, i + 1, o);
                m.set(i + 1, i, o);
            }
        }
        m
    }

    #[test]
    fn determinants() {
        assert_eq!(tridiag(2, 5, -2).det(), BigInt::from(21));
        // (4^{n+1} - 1)/3 for the tridiagonal (5, -2) family
        assert_eq!(tridiag(3, 5, -2).det(), BigInt::from(85));
        let m = IntMatrix::from_rows(vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(m.det(), BigInt::from(-1));
        let s = IntMatrix::from_rows(vec![vec![1, 2], vec![2, 4]]);
        assert_eq!(s.det(), BigInt::zero());
        assert!(s.inverse().is_none());
    }

    #[test]
    fn inverse_and_solve() {
        let m = tridiag(3, 5, -2);
        let x = m.solve(&[1, 0, 0]).unwrap();
        let back: Vec<BigRational> = (0..3)
            .map(|i| (0..3).map(|j| BigRational::from_integer(m.get(i, j).into()) * &x[j]).sum())
            .collect();
        assert_eq!(back[0], BigRational::one());
        assert!(back[1].is_zero() && back[2].is_zero());
        let solver = IntegralSolver::new(&m).unwrap();
        assert_eq!(solver.solve(&m.mul_vec(&[3, -1, 2])), Some(vec![3, -1, 2]));
        assert_eq!(solver.solve(&[1, 0, 0]), None);
    }

    #[test]
    fn inverse_norm_of_diagonally_dominant() {
        let n = tridiag(4, 5, -2).inverse_inf_norm().unwrap();
        assert!(n <= BigRational::one());
    }

    #[test]
    fn triangularity() {
        let m = IntMatrix::from_rows(vec![vec![2, 0], vec![-1, 2]]);
        assert!(m.is_lower_triangular() && !m.is_upper_triangular());
        assert!(m.transpose().is_upper_triangular());
    }
}
