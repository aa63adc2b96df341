//! Dense matrices over an exact [`Field`], with Gaussian elimination.

use std::fmt;

use thiserror::Error;

use crate::field::{Field, GfElem, Prime};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinAlgError {
    #[error("coefficient matrix is singular (rank {rank} of {dim})")]
    SingularSystem { rank: usize, dim: usize },
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

/// Row-major dense matrix. The stored `zero` fixes the field instance,
/// which matters for GF(p) where the modulus lives in each element.
#[derive(Clone, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
    zero: F,
}

impl<F: Field> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize, zero: F) -> Self {
        Matrix { rows, cols, data: vec![zero.clone(); rows * cols], zero }
    }

    pub fn identity(dim: usize, zero: F) -> Self {
        let mut m = Self::zeros(dim, dim, zero);
        let one = m.zero.one_like();
        for i in 0..dim {
            m[(i, i)] = one.clone();
        }
        m
    }

    /// Builds a matrix from rows. `zero` is needed for the empty case and to
    /// pin the field instance.
    pub fn from_rows(rows: Vec<Vec<F>>, zero: F) -> Result<Self, LinAlgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinAlgError::Shape("ragged rows".into()));
        }
        Ok(Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect(), zero })
    }

    pub fn from_fn(rows: usize, cols: usize, zero: F, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data, zero }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn zero(&self) -> &F {
        &self.zero
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<F>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, self.zero.clone(), |i, j| self[(j, i)].clone())
    }

    pub fn scale(&self, s: &F) -> Self {
        Self::from_fn(self.rows, self.cols, self.zero.clone(), |i, j| s.clone() * self[(i, j)].clone())
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinAlgError> {
        self.same_shape(other)?;
        Ok(Self::from_fn(self.rows, self.cols, self.zero.clone(), |i, j| {
            self[(i, j)].clone() + other[(i, j)].clone()
        }))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinAlgError> {
        self.same_shape(other)?;
        Ok(Self::from_fn(self.rows, self.cols, self.zero.clone(), |i, j| {
            self[(i, j)].clone() - other[(i, j)].clone()
        }))
    }

    pub fn mul(&self, other: &Self) -> Result<Self, LinAlgError> {
        if self.cols != other.rows {
            return Err(LinAlgError::Shape(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols, self.zero.clone());
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out[(i, j)].clone() + a.clone() * other[(k, j)].clone();
                    out[(i, j)] = v;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[F]) -> Result<Vec<F>, LinAlgError> {
        if v.len() != self.cols {
            return Err(LinAlgError::Shape(format!("{}x{} times vector of {}", self.rows, self.cols, v.len())));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(self.zero.clone(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect())
    }

    /// Assembles `[[a, b], [c, d]]`.
    pub fn block2x2(a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Self, LinAlgError> {
        if a.rows != b.rows || c.rows != d.rows || a.cols != c.cols || b.cols != d.cols {
            return Err(LinAlgError::Shape("incompatible blocks".into()));
        }
        let (r, cl) = (a.rows + c.rows, a.cols + b.cols);
        Ok(Self::from_fn(r, cl, a.zero.clone(), |i, j| {
            let (top, left) = (i < a.rows, j < a.cols);
            match (top, left) {
                (true, true) => a[(i, j)].clone(),
                (true, false) => b[(i, j - a.cols)].clone(),
                (false, true) => c[(i - a.rows, j)].clone(),
                (false, false) => d[(i - a.rows, j - a.cols)].clone(),
            }
        }))
    }

    /// Reduced row echelon form and the pivot columns, pivoting on the first
    /// nonzero entry at or below the current row.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(piv) = (row..m.rows).find(|&r| !m[(r, col)].is_zero()) else {
                continue;
            };
            m.swap_rows(row, piv);
            let inv = m[(row, col)].inverse().expect("nonzero pivot");
            for j in col..m.cols {
                let v = inv.clone() * m[(row, j)].clone();
                m[(row, j)] = v;
            }
            for r in 0..m.rows {
                if r == row || m[(r, col)].is_zero() {
                    continue;
                }
                let f = m[(r, col)].clone();
                for j in col..m.cols {
                    let v = m[(r, j)].clone() - f.clone() * m[(row, j)].clone();
                    m[(r, j)] = v;
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Unique solution of `self * x = y`.
    pub fn solve(&self, y: &[F]) -> Result<Vec<F>, LinAlgError> {
        if !self.is_square() || y.len() != self.rows {
            return Err(LinAlgError::Shape(format!(
                "solve needs a square system, got {}x{} with rhs {}",
                self.rows,
                self.cols,
                y.len()
            )));
        }
        let n = self.rows;
        let aug = Self::from_fn(n, n + 1, self.zero.clone(), |i, j| {
            if j < n {
                self[(i, j)].clone()
            } else {
                y[i].clone()
            }
        });
        let (r, pivots) = aug.rref();
        let rank = pivots.iter().filter(|&&c| c < n).count();
        if rank < n {
            return Err(LinAlgError::SingularSystem { rank, dim: n });
        }
        Ok((0..n).map(|i| r[(i, n)].clone()).collect())
    }

    /// Basis of the right null space. One vector per free column `f`, with a
    /// one at `f` and `-R[i][f]` at the pivot of row `i`.
    pub fn nullspace(&self) -> Vec<Vec<F>> {
        let (r, pivots) = self.rref();
        let one = self.zero.one_like();
        (0..self.cols)
            .filter(|c| !pivots.contains(c))
            .map(|free| {
                let mut v = vec![self.zero.clone(); self.cols];
                v[free] = one.clone();
                for (i, &pc) in pivots.iter().enumerate() {
                    v[pc] = -r[(i, free)].clone();
                }
                v
            })
            .collect()
    }

    /// Determinant by elimination.
    pub fn determinant(&self) -> Result<F, LinAlgError> {
        if !self.is_square() {
            return Err(LinAlgError::Shape("determinant of a non-square matrix".into()));
        }
        let mut m = self.clone();
        let mut det = self.zero.one_like();
        for col in 0..m.cols {
            let Some(piv) = (col..m.rows).find(|&r| !m[(r, col)].is_zero()) else {
                return Ok(self.zero.clone());
            };
            if piv != col {
                m.swap_rows(col, piv);
                det = -det;
            }
            let p = m[(col, col)].clone();
            det = det * p.clone();
            let inv = p.inverse().expect("nonzero pivot");
            for r in col + 1..m.rows {
                if m[(r, col)].is_zero() {
                    continue;
                }
                let f = m[(r, col)].clone() * inv.clone();
                for j in col..m.cols {
                    let v = m[(r, j)].clone() - f.clone() * m[(col, j)].clone();
                    m[(r, j)] = v;
                }
            }
        }
        Ok(det)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn same_shape(&self, other: &Self) -> Result<(), LinAlgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinAlgError::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

impl<F> std::ops::Index<(usize, usize)> for Matrix<F> {
    type Output = F;
    fn index(&self, (i, j): (usize, usize)) -> &F {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl<F> std::ops::IndexMut<(usize, usize)> for Matrix<F> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut F {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl<F: fmt::Debug> fmt::Debug for Matrix<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

impl<F: fmt::Display> fmt::Display for Matrix<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> =
                self.data[i * self.cols..(i + 1) * self.cols].iter().map(ToString::to_string).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// `D^k` of size `q x q` over GF(p): entry (i, j) is one iff `i = j + k`.
pub fn shift_matrix(q: usize, k: usize, p: Prime) -> Matrix<GfElem> {
    Matrix::from_fn(q, q, p.zero(), |i, j| if i == j + k { p.one() } else { p.zero() })
}

/// GF(p) matrix from signed integers, reduced mod p.
pub fn gf_matrix(rows: &[Vec<i64>], p: Prime) -> Matrix<GfElem> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    Matrix::from_fn(r, c, p.zero(), |i, j| p.elem(rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn p(v: u32) -> Prime {
        Prime::new(v).unwrap()
    }

    fn ints(m: &Matrix<GfElem>) -> Vec<Vec<u32>> {
        m.to_rows().iter().map(|r| r.iter().map(|e| e.value()).collect()).collect()
    }

    #[test]
    fn shift_examples() {
        assert_eq!(ints(&shift_matrix(3, 1, p(5))), vec![vec![0, 0, 0], vec![1, 0, 0], vec![0, 1, 0]]);
        assert_eq!(shift_matrix(4, 0, p(3)), Matrix::identity(4, p(3).zero()));
        assert_eq!(shift_matrix(3, 3, p(5)), Matrix::zeros(3, 3, p(5).zero()));
        assert_eq!(shift_matrix(3, 7, p(5)), Matrix::zeros(3, 3, p(5).zero()));
    }

    #[test]
    fn shift_composes() {
        let f = p(7);
        for q in 1..7 {
            for a in 0..q {
                for b in 0..q - a {
                    let lhs = shift_matrix(q, a, f).mul(&shift_matrix(q, b, f)).unwrap();
                    assert_eq!(lhs, shift_matrix(q, a + b, f));
                }
            }
        }
    }

    #[test]
    fn rank_examples() {
        assert_eq!(Matrix::identity(4, p(2).zero()).rank(), 4);
        let lam_plus_i = gf_matrix(&[vec![1, -1, 1], vec![1, 1, -1], vec![1, -1, 1]], p(5));
        assert_eq!(lam_plus_i.rank(), 2);
        assert_eq!(gf_matrix(&[vec![1; 3], vec![1; 3], vec![1; 3]], p(3)).rank(), 1);
        assert_eq!(Matrix::zeros(2, 3, p(3).zero()).rank(), 0);
    }

    #[test]
    fn solve_identity_and_singular() {
        let f = p(11);
        let y: Vec<_> = [3, 1, 4].iter().map(|&v| f.elem(v)).collect();
        assert_eq!(Matrix::identity(3, f.zero()).solve(&y).unwrap(), y);
        let sing = gf_matrix(&[vec![1, 2], vec![2, 4]], f);
        assert_eq!(sing.solve(&y[..2]), Err(LinAlgError::SingularSystem { rank: 1, dim: 2 }));
    }

    #[test]
    fn nullspace_examples() {
        let f = p(7);
        assert!(Matrix::identity(3, f.zero()).nullspace().is_empty());
        let m = gf_matrix(&[vec![1, 6]], f);
        assert_eq!(m.nullspace(), vec![vec![f.one(), f.one()]]);
    }

    #[test]
    fn determinant_small() {
        let f = p(13);
        let m = gf_matrix(&[vec![2, 1], vec![5, 3]], f);
        assert_eq!(m.determinant().unwrap(), f.elem(1));
        let swap = gf_matrix(&[vec![0, 1], vec![1, 0]], f);
        assert_eq!(swap.determinant().unwrap(), f.elem(-1));
        let r = Matrix::from_rows(
            vec![
                vec![Ratio::new(1i64, 2), Ratio::from_integer(1)],
                vec![Ratio::from_integer(3), Ratio::from_integer(4)],
            ],
            Ratio::from_integer(0),
        )
        .unwrap();
        assert_eq!(r.determinant().unwrap(), Ratio::from_integer(-1));
    }

    #[test]
    fn block_assembly() {
        let f = p(5);
        let i2 = Matrix::identity(2, f.zero());
        let z = Matrix::zeros(2, 2, f.zero());
        let b = Matrix::block2x2(&i2, &z, &z, &i2).unwrap();
        assert_eq!(b, Matrix::identity(4, f.zero()));
        assert!(Matrix::block2x2(&i2, &Matrix::zeros(3, 2, f.zero()), &z, &i2).is_err());
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Matrix::from_rows(vec![vec![p(3).one()], vec![]], p(3).zero()).is_err());
    }
}
