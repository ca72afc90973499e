//! Dense matrices over the rationals and over series rings.

use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::series::{Ring, Series};
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Vec<Rational>>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix { rows, cols, data: vec![vec![Rational::zero(); cols]; rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i][i] = Rational::one();
        }
        m
    }

    pub fn from_rows(data: Vec<Vec<Rational>>) -> Result<Self> {
        let rows = data.len();
        let cols = data.first().map_or(0, |r| r.len());
        if data.iter().any(|r| r.len() != cols) {
            return Err(Error::Structure("ragged matrix rows".into()));
        }
        Ok(QMatrix { rows, cols, data })
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[i][j] = v;
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i]
    }

    pub fn transpose(&self) -> QMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j][i] = self.data[i][j].clone();
            }
        }
        t
    }

    pub fn mul(&self, o: &QMatrix) -> QMatrix {
        assert_eq!(self.cols, o.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.data[i][k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    out.data[i][j] += a * &o.data[k][j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        (0..self.rows)
            .map(|i| self.data[i].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self.data[i][j] == self.data[j][i]))
    }

    /// Reduced row echelon form, returning the pivot columns.
    fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.data[i][c].is_zero()) else {
                continue;
            };
            self.data.swap(r, p);
            let inv = self.data[r][c].recip();
            for x in self.data[r].iter_mut() {
                *x *= &inv;
            }
            for i in 0..self.rows {
                if i != r && !self.data[i][c].is_zero() {
                    let f = self.data[i][c].clone();
                    for j in 0..self.cols {
                        let v = &f * &self.data[r][j];
                        self.data[i][j] -= v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    pub fn det(&self) -> Rational {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = Rational::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
                return Rational::zero();
            };
            if p != c {
                a.swap(p, c);
                det = -det;
            }
            det *= &a[c][c];
            let inv = a[c][c].recip();
            for i in c + 1..n {
                if a[i][c].is_zero() {
                    continue;
                }
                let f = &a[i][c] * &inv;
                for j in c..n {
                    let v = &f * &a[c][j];
                    a[i][j] -= v;
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<QMatrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.data[i][j] = self.data[i][j].clone();
            }
            aug.data[i][n + i] = Rational::one();
        }
        let piv = aug.rref();
        if piv.len() < n || piv[n - 1] != n - 1 {
            return None;
        }
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv.data[i][j] = aug.data[i][n + j].clone();
            }
        }
        Some(inv)
    }

    /// Some solution `x` of `self * x = b` (free variables set to zero).
    pub fn solve(&self, b: &[Rational]) -> Option<Vec<Rational>> {
        let mut aug = Self::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.data[i][j] = self.data[i][j].clone();
            }
            aug.data[i][self.cols] = b[i].clone();
        }
        let piv = aug.rref();
        if piv.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![Rational::zero(); self.cols];
        for (r, &c) in piv.iter().enumerate() {
            x[c] = aug.data[r][self.cols].clone();
        }
        Some(x)
    }
}

/// Square or rectangular matrix with series entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesMatrix {
    ring: Ring,
    pub rows: usize,
    pub cols: usize,
    data: Vec<Vec<Series>>,
}

impl SeriesMatrix {
    pub fn zeros(ring: &Ring, rows: usize, cols: usize) -> Self {
        SeriesMatrix { ring: ring.clone(), rows, cols, data: vec![vec![Series::zero(ring); cols]; rows] }
    }

    pub fn identity(ring: &Ring, n: usize) -> Self {
        let mut m = Self::zeros(ring, n, n);
        for i in 0..n {
            m.data[i][i] = Series::one(ring);
        }
        m
    }

    pub fn from_qmatrix(ring: &Ring, q: &QMatrix) -> Self {
        let mut m = Self::zeros(ring, q.rows, q.cols);
        for i in 0..q.rows {
            for j in 0..q.cols {
                m.data[i][j] = Series::constant(ring, q.get(i, j).clone());
            }
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Series>(ring: &Ring, rows: usize, cols: usize, mut f: F) -> Self {
        let mut m = Self::zeros(ring, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn get(&self, i: usize, j: usize) -> &Series {
        &self.data[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Series) {
        self.data[i][j] = v;
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut Series {
        &mut self.data[i][j]
    }

    pub fn mul(&self, o: &SeriesMatrix) -> SeriesMatrix {
        assert_eq!(self.cols, o.rows, "dimension mismatch");
        let mut out = Self::zeros(&self.ring, self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.data[i][k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    if !o.data[k][j].is_zero() {
                        out.data[i][j] += &(a * &o.data[k][j]);
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, o: &SeriesMatrix) -> SeriesMatrix {
        Self::from_fn(&self.ring, self.rows, self.cols, |i, j| &self.data[i][j] + &o.data[i][j])
    }

    pub fn sub(&self, o: &SeriesMatrix) -> SeriesMatrix {
        Self::from_fn(&self.ring, self.rows, self.cols, |i, j| &self.data[i][j] - &o.data[i][j])
    }

    pub fn scale(&self, c: &Series) -> SeriesMatrix {
        Self::from_fn(&self.ring, self.rows, self.cols, |i, j| &self.data[i][j] * c)
    }

    pub fn map<F: Fn(&Series) -> Series>(&self, ring: &Ring, f: F) -> SeriesMatrix {
        Self::from_fn(ring, self.rows, self.cols, |i, j| f(&self.data[i][j]))
    }

    pub fn transpose(&self) -> SeriesMatrix {
        Self::from_fn(&self.ring, self.cols, self.rows, |i, j| self.data[j][i].clone())
    }

    pub fn mul_vec(&self, v: &[Series]) -> Vec<Series> {
        (0..self.rows)
            .map(|i| {
                let mut acc = Series::zero(&self.ring);
                for (a, b) in self.data[i].iter().zip(v) {
                    if !a.is_zero() && !b.is_zero() {
                        acc += &(a * b);
                    }
                }
                acc
            })
            .collect()
    }

    pub fn trace(&self) -> Series {
        let mut acc = Series::zero(&self.ring);
        for i in 0..self.rows.min(self.cols) {
            acc += &self.data[i][i];
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|r| r.iter().all(|x| x.is_zero()))
    }

    /// Entries that are nonzero, as `(row, col, value)`.
    pub fn nonzero_entries(&self) -> Vec<(usize, usize, &Series)> {
        let mut out = Vec::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                if !self.data[i][j].is_zero() {
                    out.push((i, j, &self.data[i][j]));
                }
            }
        }
        out
    }
}

impl fmt::Display for SeriesMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.data[i].iter().map(|x| x.to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, ratio};

    fn m(rows: &[&[i64]]) -> QMatrix {
        QMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect())
            .unwrap()
    }

    #[test]
    fn inverse_and_det() {
        let a = m(&[&[2, 1], &[1, 1]]);
        assert_eq!(a.det(), rat(1));
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), QMatrix::identity(2));
        assert!(m(&[&[1, 2], &[2, 4]]).inverse().is_none());
        assert_eq!(m(&[&[0, 1], &[1, 0]]).det(), rat(-1));
    }

    #[test]
    fn solve_underdetermined() {
        let a = m(&[&[1, 1, 0]]);
        let x = a.solve(&[rat(3)]).unwrap();
        assert_eq!(a.mul_vec(&x), vec![rat(3)]);
        assert!(m(&[&[1, 1], &[1, 1]]).solve(&[rat(1), rat(2)]).is_none());
        let b = m(&[&[2, 0], &[0, 4]]);
        assert_eq!(b.solve(&[rat(1), rat(1)]).unwrap(), vec![ratio(1, 2), ratio(1, 4)]);
    }
}
