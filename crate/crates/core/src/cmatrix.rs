//! Dense complex matrices and the small set of factorizations the detectors
//! rely on: Householder QR, the Moore-Penrose pseudoinverse of a tall matrix,
//! and the diagonal of an inverse Gram matrix.
//!
//! Storage is row-major. Problem sizes stay below 64×64, so nothing here is
//! blocked or vectorized beyond what the compiler does on its own.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use thiserror::Error;

/// Relative threshold on `min |r_ii| / max |r_ii|` below which a matrix is
/// treated as column-rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: {lhs:?} vs {rhs:?}")]
    DimensionMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("expected a tall matrix (rows >= cols), got {rows}x{cols}")]
    NotTall { rows: usize, cols: usize },
    #[error("numerically rank deficient: min |r_ii| = {min:e}, max |r_ii| = {max:e}")]
    RankDeficient { min: f64, max: f64 },
    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("matrix must have positive dimensions, got {rows}x{cols}")]
    Empty { rows: usize, cols: usize },
}

/// A dense complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    /// All-zero matrix. Panics if either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_diag(&d)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.data[r * cols + c] = f(r, c);
            }
        }
        m
    }

    /// Builds a matrix from row-major entries, checking shape and finiteness.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Empty { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                op: "from_vec",
                lhs: (rows, cols),
                rhs: (data.len(), 1),
            });
        }
        if let Some(pos) = data.iter().position(|z| !z.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, LinalgError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n_cols) {
            return Err(LinalgError::DimensionMismatch {
                op: "from_rows",
                lhs: (n_rows, n_cols),
                rhs: (1, bad.len()),
            });
        }
        Self::from_vec(n_rows, n_cols, rows.concat())
    }

    /// Real-valued convenience constructor, mostly for tests and examples.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, LinalgError> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self.data[r * self.cols + c]).collect()
    }

    pub fn diag(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.is_finite())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c].conj();
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                lhs: self.shape(),
                rhs: rhs.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
            for (k, &a) in self.row(r).iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.shape() != rhs.shape() {
            return Err(LinalgError::DimensionMismatch {
                op: "add",
                lhs: self.shape(),
                rhs: rhs.shape(),
            });
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.shape() != rhs.shape() {
            return Err(LinalgError::DimensionMismatch {
                op: "sub",
                lhs: self.shape(),
                rhs: rhs.shape(),
            });
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// Multiplies column `c` by `factors[c]`, i.e. right-multiplication by a
    /// diagonal matrix.
    pub fn scale_columns(&mut self, factors: &[Complex64]) {
        assert_eq!(factors.len(), self.cols);
        for row in self.data.chunks_exact_mut(self.cols) {
            for (z, f) in row.iter_mut().zip(factors) {
                *z *= f;
            }
        }
    }

    /// Largest entrywise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        assert_eq!(self.shape(), rhs.shape());
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(r) {
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Householder QR factorization `A = Q R` of a tall matrix, kept in compact
/// form.
///
/// Column phases are normalized so that `diag(R)` is real and non-negative;
/// the normalization is folded into `Q`.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    rows: usize,
    cols: usize,
    /// Reflector `k` acts on indices `k..rows`; `vectors[k][0]` is entry `k`.
    vectors: Vec<Vec<Complex64>>,
    taus: Vec<f64>,
    /// Phase applied to column `k` of the raw reflector product.
    phases: Vec<Complex64>,
    /// Upper-triangular `cols × cols` block of R, row-major, already phase
    /// normalized.
    r: Vec<Complex64>,
}

impl HouseholderQr {
    /// Factorizes `a`, failing on wide or numerically rank-deficient input.
    pub fn factor(a: &CMatrix) -> Result<Self, LinalgError> {
        let (n, m) = a.shape();
        if n < m {
            return Err(LinalgError::NotTall { rows: n, cols: m });
        }
        let mut work: Vec<Vec<Complex64>> = (0..m).map(|c| a.column(c)).collect();
        let mut vectors = Vec::with_capacity(m);
        let mut taus = Vec::with_capacity(m);
        let mut alphas = Vec::with_capacity(m);

        for k in 0..m {
            let x = &work[k][k..];
            let norm = x.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
            let x0 = x[0];
            let (v, tau, alpha) = if norm == 0.0 {
                (vec![ZERO; n - k], 0.0, ZERO)
            } else {
                let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
                let alpha = -phase * norm;
                let mut v = x.to_vec();
                v[0] -= alpha;
                let vnorm2: f64 = v.iter().map(Complex64::norm_sqr).sum();
                (v, 2.0 / vnorm2, alpha)
            };
            if tau != 0.0 {
                for col in work.iter_mut().skip(k + 1) {
                    reflect(&v, tau, &mut col[k..]);
                }
            }
            work[k][k] = alpha;
            vectors.push(v);
            taus.push(tau);
            alphas.push(alpha);
        }

        let phases: Vec<Complex64> = alphas
            .iter()
            .map(|&a| if a.norm() == 0.0 { ONE } else { a / a.norm() })
            .collect();
        let mut r = vec![ZERO; m * m];
        for i in 0..m {
            for j in i..m {
                r[i * m + j] = phases[i].conj() * work[j][i];
            }
            // Exactly real after normalization.
            r[i * m + i] = Complex64::new(alphas[i].norm(), 0.0);
        }

        let qr = Self {
            rows: n,
            cols: m,
            vectors,
            taus,
            phases,
            r,
        };
        qr.check_rank()?;
        Ok(qr)
    }

    fn check_rank(&self) -> Result<(), LinalgError> {
        let d = self.r_diag();
        let max = d.iter().copied().fold(0.0, f64::max);
        let min = d.iter().copied().fold(f64::INFINITY, f64::min);
        if !(max > 0.0) || min < RANK_TOLERANCE * max {
            return Err(LinalgError::RankDeficient { min, max });
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// The real, non-negative diagonal of R.
    pub fn r_diag(&self) -> Vec<f64> {
        (0..self.cols).map(|i| self.r[i * self.cols + i].re).collect()
    }

    /// R as a `rows × cols` upper-triangular matrix.
    pub fn r(&self) -> CMatrix {
        let m = self.cols;
        CMatrix::from_fn(self.rows, m, |i, j| if i < m && j >= i { self.r[i * m + j] } else { ZERO })
    }

    /// The full `rows × rows` unitary factor.
    pub fn q(&self) -> CMatrix {
        let n = self.rows;
        let mut q = CMatrix::identity(n);
        // Q = H_0 H_1 ... H_{m-1} diag(phases, 1...); build column by column.
        let mut col = vec![ZERO; n];
        for c in 0..n {
            col.iter_mut().for_each(|z| *z = ZERO);
            col[c] = if c < self.cols { self.phases[c] } else { ONE };
            for k in (0..self.cols).rev() {
                reflect(&self.vectors[k], self.taus[k], &mut col[k..]);
            }
            for (r, z) in col.iter().enumerate() {
                q[(r, c)] = *z;
            }
        }
        q
    }

    /// Applies `Q^H` to a single vector of length `rows` in place.
    pub fn apply_qh_vec(&self, x: &mut [Complex64]) {
        assert_eq!(x.len(), self.rows);
        for k in 0..self.cols {
            reflect(&self.vectors[k], self.taus[k], &mut x[k..]);
        }
        for (z, p) in x.iter_mut().zip(&self.phases) {
            *z *= p.conj();
        }
    }

    /// `Q^H X` for a matrix with `rows` rows.
    pub fn apply_qh(&self, x: &CMatrix) -> Result<CMatrix, LinalgError> {
        if x.rows() != self.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "apply_qh",
                lhs: (self.rows, self.rows),
                rhs: x.shape(),
            });
        }
        let mut out = CMatrix::zeros(x.rows(), x.cols());
        for c in 0..x.cols() {
            let mut col = x.column(c);
            self.apply_qh_vec(&mut col);
            for (r, z) in col.into_iter().enumerate() {
                out[(r, c)] = z;
            }
        }
        Ok(out)
    }

    /// Diagonal entries `[Q^H X]_{i,i}` for `i < cols`, without forming the
    /// whole product.
    pub fn qh_product_diag(&self, x: &CMatrix) -> Result<Vec<Complex64>, LinalgError> {
        if x.rows() != self.rows || x.cols() < self.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "qh_product_diag",
                lhs: (self.rows, self.cols),
                rhs: x.shape(),
            });
        }
        let mut out = Vec::with_capacity(self.cols);
        let mut col = vec![ZERO; self.rows];
        for i in 0..self.cols {
            for (r, z) in col.iter_mut().enumerate() {
                *z = x[(r, i)];
            }
            // Reflectors after i leave entry i untouched.
            for k in 0..=i {
                reflect(&self.vectors[k], self.taus[k], &mut col[k..]);
            }
            out.push(self.phases[i].conj() * col[i]);
        }
        Ok(out)
    }

    /// Inverse of the square upper-triangular block of R, row-major.
    fn r_inverse(&self) -> Vec<Complex64> {
        let m = self.cols;
        let mut inv = vec![ZERO; m * m];
        for j in 0..m {
            inv[j * m + j] = ONE / self.r[j * m + j];
            for i in (0..j).rev() {
                let mut s = ZERO;
                for k in i + 1..=j {
                    s += self.r[i * m + k] * inv[k * m + j];
                }
                inv[i * m + j] = -s / self.r[i * m + i];
            }
        }
        inv
    }

    /// Diagonal of `(A^H A)^{-1}`, computed as squared row norms of `R^{-1}`.
    pub fn gram_inverse_diag(&self) -> Vec<f64> {
        let m = self.cols;
        let inv = self.r_inverse();
        (0..m)
            .map(|i| inv[i * m + i..(i + 1) * m].iter().map(Complex64::norm_sqr).sum())
            .collect()
    }

    /// `A^† = R^{-1} Q_1^H` where `Q_1` holds the first `cols` columns of Q.
    pub fn pseudoinverse(&self) -> CMatrix {
        let (n, m) = (self.rows, self.cols);
        let inv = self.r_inverse();
        let mut qh = CMatrix::zeros(m, n);
        let mut e = vec![ZERO; n];
        for c in 0..n {
            e.iter_mut().for_each(|z| *z = ZERO);
            e[c] = ONE;
            self.apply_qh_vec(&mut e);
            for r in 0..m {
                qh[(r, c)] = e[r];
            }
        }
        let mut out = CMatrix::zeros(m, n);
        for i in 0..m {
            for k in i..m {
                let a = inv[i * m + k];
                for c in 0..n {
                    out[(i, c)] += a * qh[(k, c)];
                }
            }
        }
        out
    }
}

/// Applies `I - tau v v^H` to `x` in place.
#[inline]
fn reflect(v: &[Complex64], tau: f64, x: &mut [Complex64]) {
    if tau == 0.0 {
        return;
    }
    let mut s = ZERO;
    for (vi, xi) in v.iter().zip(x.iter()) {
        s += vi.conj() * xi;
    }
    let s = s * tau;
    for (vi, xi) in v.iter().zip(x.iter_mut()) {
        *xi -= s * vi;
    }
}

pub fn matmul(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, LinalgError> {
    a.matmul(b)
}

/// Full QR factorization: `Q` is `rows × rows` unitary and `R` is
/// `rows × cols` upper triangular with a real, non-negative diagonal.
pub fn qr_decompose(a: &CMatrix) -> Result<(CMatrix, CMatrix), LinalgError> {
    let qr = HouseholderQr::factor(a)?;
    Ok((qr.q(), qr.r()))
}

pub fn pseudoinverse(a: &CMatrix) -> Result<CMatrix, LinalgError> {
    Ok(HouseholderQr::factor(a)?.pseudoinverse())
}

/// Diagonal entries of `(A^H A)^{-1}` for a tall, full-column-rank `A`.
pub fn gram_inverse_diag(a: &CMatrix) -> Result<Vec<f64>, LinalgError> {
    Ok(HouseholderQr::factor(a)?.gram_inverse_diag())
}
