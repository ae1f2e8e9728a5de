//! Dense row-major matrices and the regularized least-squares solve shared by
//! the model-space representations and the readout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<MatrixRepr> for Matrix {
    type Error = Error;

    fn try_from(r: MatrixRepr) -> Result<Self> {
        Matrix::new(r.rows, r.cols, r.data)
    }
}

impl From<Matrix> for MatrixRepr {
    fn from(m: Matrix) -> Self {
        MatrixRepr {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl std::fmt::Display for Matrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

impl Matrix {
    /// Builds a matrix from row-major entries, rejecting empty shapes and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix shape {rows}x{cols} has an empty dimension"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::shape(
                "Matrix::new",
                format!("{rows}x{cols}"),
                format!("{} entries", data.len()),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix shape {rows}x{cols}");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::shape("Matrix::from_rows", cols, bad.len()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::shape("Matrix::from_columns", rows, bad.len()));
        }
        let n = columns.len();
        let mut data = vec![0.0; rows * n];
        for (c, col) in columns.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                data[r * n + c] = *v;
            }
        }
        Self::new(rows, n, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn scaled(&self, k: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * k).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::shape("mul_vec", self, format!("vector of {}", v.len())));
        }
        Ok((0..self.rows)
            .map(|r| dot(self.row(r), v))
            .collect())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

/// Standard product; every entry is accumulated over the inner index in
/// increasing order.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::shape("matmul", a, b));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let dst = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            let src = &b.data[k * b.cols..(k + 1) * b.cols];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += aik * s;
            }
        }
    }
    Ok(out)
}

/// `a * b^T` without materializing the transpose.
pub fn matmul_transposed(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.cols {
        return Err(Error::shape("matmul_transposed", a, b));
    }
    let mut out = Matrix::zeros(a.rows, b.rows);
    for i in 0..a.rows {
        for j in 0..b.rows {
            out.data[i * b.rows + j] = dot(a.row(i), b.row(j));
        }
    }
    Ok(out)
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors `gram`, reading only its lower triangle. Pivots that are not
    /// clearly positive relative to the largest diagonal entry are reported as
    /// a singular system.
    pub fn factor(gram: &Matrix) -> Result<Self> {
        if gram.rows != gram.cols {
            return Err(Error::shape("Cholesky::factor", gram, "square"));
        }
        let n = gram.rows;
        let max_diag = (0..n).fold(0.0f64, |m, i| m.max(gram.get(i, i).abs()));
        let tol = max_diag * f64::EPSILON * (n as f64) * 4.0;

        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = gram.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(s > tol) {
                        return Err(Error::SingularGram { row: i, pivot: s });
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(Self { n, l })
    }

    /// Solves `L L^T x = rhs` in place.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.n;
        assert_eq!(rhs.len(), n);
        for i in 0..n {
            let mut s = rhs[i];
            for k in 0..i {
                s -= self.l[i * n + k] * rhs[k];
            }
            rhs[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * rhs[k];
            }
            rhs[i] = s / self.l[i * n + i];
        }
    }
}

/// Solves `X (gram + reg I) = cross` for `X`, given a precomputed symmetric
/// `gram` (= B B^T) and `cross` (= A B^T).
pub fn ridge_solve_gram(cross: &Matrix, gram: &Matrix, reg: f64) -> Result<Matrix> {
    if !(reg >= 0.0) || !reg.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "ridge strength must be finite and nonnegative, got {reg}"
        )));
    }
    if gram.rows != gram.cols || cross.cols != gram.rows {
        return Err(Error::shape("ridge_solve", cross, gram));
    }
    let mut g = gram.clone();
    for i in 0..g.rows {
        g.data[i * g.cols + i] += reg;
    }
    let chol = Cholesky::factor(&g)?;
    let mut out = cross.clone();
    for r in 0..out.rows {
        chol.solve_in_place(&mut out.data[r * out.cols..(r + 1) * out.cols]);
    }
    if out.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ridge solution"));
    }
    Ok(out)
}

/// Ridge regression in closed form: `A B^T (B B^T + reg I)^-1`.
///
/// Columns of `a` and `b` are paired samples; the result has shape
/// `a.rows x b.rows`. Solved through a Cholesky factorization.
pub fn ridge_solve(a: &Matrix, b: &Matrix, reg: f64) -> Result<Matrix> {
    if a.cols != b.cols {
        return Err(Error::shape("ridge_solve", a, b));
    }
    let gram = matmul_transposed(b, b)?;
    let cross = matmul_transposed(a, b)?;
    ridge_solve_gram(&cross, &gram, reg)
}

/// Row-major vectorization.
pub fn flatten(m: &Matrix) -> Vec<f64> {
    m.data.clone()
}

/// Inverse of [`flatten`].
pub fn unflatten(v: &[f64], rows: usize, cols: usize) -> Result<Matrix> {
    Matrix::new(rows, cols, v.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
        let scale = a.max_abs().max(b.max_abs()).max(1e-300);
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .fold(0.0, |e, (x, y)| f64::max(e, (x - y).abs() / scale))
    }

    #[test]
    fn identity_times_a() {
        let a = m(&[vec![1.5, -2.0], vec![0.25, 7.0]]);
        assert_eq!(matmul(&Matrix::identity(2), &a).unwrap(), a);
    }

    #[test]
    fn small_product() {
        let a = m(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let b = m(&[vec![1.0], vec![1.0]]);
        assert_eq!(matmul(&a, &b).unwrap(), m(&[vec![3.0], vec![7.0]]));
    }

    #[test]
    fn product_shape_mismatch_names_shapes() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 2);
        let err = matmul(&a, &b).unwrap_err().to_string();
        assert!(err.contains("2x3") && err.contains("2x2"), "{err}");
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(Matrix::new(1, 1, vec![f64::NAN]).is_err());
        assert!(Matrix::new(0, 1, vec![]).is_err());
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn ridge_identity_design_shrinks() {
        let a = m(&[vec![1.0, 2.0, 3.0], vec![-4.0, 5.0, 6.0]]);
        let lambda = 0.5;
        let r = ridge_solve(&a, &Matrix::identity(3), lambda).unwrap();
        assert!(rel_err(&r, &a.scaled(1.0 / (1.0 + lambda))) < 1e-15);
    }

    #[test]
    fn ridge_hand_case() {
        let r = ridge_solve(&m(&[vec![2.0, 4.0]]), &m(&[vec![1.0, 2.0]]), 0.0).unwrap();
        assert!((r.get(0, 0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn ridge_large_strength_goes_to_zero() {
        let a = m(&[vec![1.0, -2.0, 3.0]]);
        let b = m(&[vec![0.5, 0.1, -0.3], vec![1.0, 1.0, 1.0]]);
        let r = ridge_solve(&a, &b, 1e12).unwrap();
        assert!(r.max_abs() < 1e-6);
    }

    #[test]
    fn ridge_singular_without_regularization() {
        let b = m(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]);
        let a = m(&[vec![1.0, 1.0, 1.0]]);
        assert!(matches!(
            ridge_solve(&a, &b, 0.0),
            Err(Error::SingularGram { .. })
        ));
        assert!(ridge_solve(&a, &b, 1e-3).is_ok());
    }

    #[test]
    fn ridge_rejects_negative_strength_and_shape() {
        let a = Matrix::zeros(1, 2);
        let b = Matrix::identity(2);
        assert!(ridge_solve(&a, &b, -1.0).is_err());
        assert!(ridge_solve(&Matrix::zeros(1, 3), &b, 1.0).is_err());
    }

    #[test]
    fn flatten_is_row_major() {
        assert_eq!(flatten(&m(&[vec![1.0, 2.0], vec![3.0, 4.0]])), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(flatten(&m(&[vec![7.0]])), vec![7.0]);
    }

    #[test]
    fn from_columns_transposes_layout() {
        let c = Matrix::from_columns(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(c, m(&[vec![1.0, 3.0, 5.0], vec![2.0, 4.0, 6.0]]));
    }

    fn matrix_strategy(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
        prop::collection::vec(-1.0f64..1.0, rows * cols)
            .prop_map(move |d| Matrix::new(rows, cols, d).unwrap())
    }

    proptest! {
        #[test]
        fn flatten_round_trip(rows in 1usize..8, cols in 1usize..8, seed in any::<u64>()) {
            let v: Vec<f64> = (0..rows * cols)
                .map(|i| ((seed.wrapping_add(i as u64) % 1000) as f64) / 7.0)
                .collect();
            prop_assert_eq!(flatten(&unflatten(&v, rows, cols).unwrap()), v);
        }

        #[test]
        fn matmul_associative(
            (a, b, c) in (1usize..6, 1usize..6, 1usize..6, 1usize..6).prop_flat_map(|(p, q, r, s)| {
                (matrix_strategy(p, q), matrix_strategy(q, r), matrix_strategy(r, s))
            })
        ) {
            let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
            let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
            let scale = 1.0 + left.max_abs();
            for (x, y) in left.as_slice().iter().zip(right.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-10 * scale);
            }
        }

        #[test]
        fn ridge_normal_equation(
            (a, b, reg) in (1usize..50, 1usize..50, 1usize..60).prop_flat_map(|(p, n, extra)| {
                (matrix_strategy(p, n + extra), matrix_strategy(n, n + extra), 1e-3f64..10.0)
            })
        ) {
            let x = ridge_solve(&a, &b, reg).unwrap();
            let mut g = matmul_transposed(&b, &b).unwrap();
            for i in 0..g.rows() {
                let v = g.get(i, i) + reg;
                g.set(i, i, v);
            }
            let lhs = matmul(&x, &g).unwrap();
            let rhs = matmul_transposed(&a, &b).unwrap();
            prop_assert!(rel_err(&lhs, &rhs) < 1e-9, "residual {}", rel_err(&lhs, &rhs));
        }
    }
}
