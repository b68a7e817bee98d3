//! Dense small complex matrices.
//!
//! GHRR hypervector elements are `m x m` unitary matrices with `m` rarely
//! above 16, so everything here is plain row-major storage and naive loops.
//! The slice kernels at the bottom of this module are shared with the
//! hypervector algebra, which keeps all elements of a hypervector in one
//! contiguous buffer.

mod eigh;
mod optimize;
mod sample;

pub use eigh::{eigh, HermitianEigen};
pub use optimize::{optimize_diagonality, DiagonalityOptimizer, OptimizeOutcome};
pub use sample::{ginibre, haar_unitary, hermitian_exp_unitary, sample_unitary, UnitaryMethod};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GhrrError, Result};

/// Tolerance for the unitary tag: `max |M M^† - I| <= UNITARY_TOL`.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance used when checking the Hermitian precondition of [`unitary_exp`].
pub const HERMITIAN_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A dense `m x m` complex matrix in row-major order.
///
/// `unitary` is a tag carried by values produced through unitarity-preserving
/// routes (sampling, exponentials of Hermitian matrices, products of unitary
/// factors). It is never set on arbitrary user data unless checked.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
    unitary: bool,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
            unitary: false,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = Self::zeros(dim);
        for k in 0..dim {
            out.data[k * dim + k] = ONE;
        }
        out.unitary = true;
        out
    }

    /// Builds a matrix from row-major entries. The unitary tag is left unset.
    pub fn from_row_major(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(GhrrError::InvalidDimension("matrix dimension must be >= 1".into()));
        }
        if data.len() != dim * dim {
            return Err(GhrrError::InvalidDimension(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(Self {
            dim,
            data,
            unitary: false,
        })
    }

    /// Convenience constructor from nested rows of `(re, im)` pairs.
    pub fn from_rows(rows: &[Vec<(f64, f64)>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(GhrrError::InvalidDimension("rows must form a square matrix".into()));
            }
            data.extend(row.iter().map(|&(re, im)| Complex64::new(re, im)));
        }
        Self::from_row_major(dim, data)
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let dim = diag.len();
        let mut out = Self::zeros(dim);
        for (k, &v) in diag.iter().enumerate() {
            out.data[k * dim + k] = v;
        }
        out
    }

    /// The cyclic shift matrix sending basis vector `e_k` to `e_{k+1 mod m}`.
    pub fn cyclic_permutation(dim: usize) -> Self {
        let mut out = Self::zeros(dim);
        for k in 0..dim {
            out.data[((k + 1) % dim) * dim + k] = ONE;
        }
        out.unitary = true;
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.dim + col] = value;
        self.unitary = false;
    }

    pub fn is_tagged_unitary(&self) -> bool {
        self.unitary
    }

    /// Sets the unitary tag after checking `max |M M^† - I| <= UNITARY_TOL`.
    pub fn check_unitary(mut self) -> std::result::Result<Self, Self> {
        if self.unitarity_error() <= UNITARY_TOL {
            self.unitary = true;
            Ok(self)
        } else {
            Err(self)
        }
    }

    pub(crate) fn with_unitary_tag(mut self, unitary: bool) -> Self {
        self.unitary = unitary;
        self
    }

    /// `max |M M^† - I|` over all entries.
    pub fn unitarity_error(&self) -> f64 {
        let m = self.dim;
        let mut worst: f64 = 0.0;
        for r in 0..m {
            for c in 0..m {
                let mut acc = ZERO;
                for k in 0..m {
                    acc += self.data[r * m + k] * self.data[c * m + k].conj();
                }
                if r == c {
                    acc -= ONE;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    /// `max |M - M^†|` over all entries.
    pub fn hermitian_error(&self) -> f64 {
        let m = self.dim;
        let mut worst: f64 = 0.0;
        for r in 0..m {
            for c in 0..m {
                worst = worst.max((self.data[r * m + c] - self.data[c * m + r].conj()).norm());
            }
        }
        worst
    }

    /// Largest entry-wise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "max_abs_diff on mismatched dims");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let unitary = self.unitary && (factor.norm() - 1.0).abs() <= 1e-15;
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
            unitary,
        }
    }

    /// Row-major nested `[re, im]` pairs, the JSON layout used for exports.
    pub fn to_nested(&self) -> Vec<Vec<[f64; 2]>> {
        self.data
            .chunks(self.dim)
            .map(|row| row.iter().map(|v| [v.re, v.im]).collect())
            .collect()
    }

    pub fn from_nested(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        let pairs: Vec<Vec<(f64, f64)>> = rows
            .iter()
            .map(|r| r.iter().map(|p| (p[0], p[1])).collect())
            .collect();
        let out = Self::from_rows(&pairs)?;
        Ok(match out.check_unitary() {
            Ok(u) => u,
            Err(plain) => plain,
        })
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_nested().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        Self::from_nested(&rows).map_err(serde::de::Error::custom)
    }
}

/// `diag(e^{i theta_1}, ..., e^{i theta_m})`, stored as its angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalPhases {
    angles: Vec<f64>,
}

impl DiagonalPhases {
    pub fn new(angles: Vec<f64>) -> Self {
        Self { angles }
    }

    pub fn dim(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn phases(&self) -> Vec<Complex64> {
        self.angles.iter().map(|&t| Complex64::from_polar(1.0, t)).collect()
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&self.phases()).with_unitary_tag(true)
    }
}

fn ensure_same_dim(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    if a.dim != b.dim {
        return Err(GhrrError::DimensionMismatch {
            left: a.dim,
            right: b.dim,
        });
    }
    Ok(())
}

pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_same_dim(a, b)?;
    let mut out = ComplexMatrix::zeros(a.dim);
    matmul_into(&a.data, &b.data, &mut out.data, a.dim);
    out.unitary = a.unitary && b.unitary;
    Ok(out)
}

/// Conjugate transpose.
pub fn dagger(a: &ComplexMatrix) -> ComplexMatrix {
    let m = a.dim;
    let mut out = ComplexMatrix::zeros(m);
    dagger_into(&a.data, &mut out.data, m);
    out.unitary = a.unitary;
    out
}

/// Real part of the trace.
pub fn trace_re(a: &ComplexMatrix) -> f64 {
    (0..a.dim).map(|k| a.data[k * a.dim + k].re).sum()
}

/// `(X + X^†) / 2`.
pub fn hermitian_part(x: &ComplexMatrix) -> ComplexMatrix {
    let m = x.dim;
    let mut out = ComplexMatrix::zeros(m);
    for r in 0..m {
        for c in 0..m {
            out.data[r * m + c] = (x.data[r * m + c] + x.data[c * m + r].conj()) * 0.5;
        }
    }
    // (a + conj(a)) / 2 is real on the diagonal up to the sign of a zero
    // imaginary part; pin it so the output is exactly self-adjoint.
    for k in 0..m {
        out.data[k * m + k].im = 0.0;
    }
    out
}

/// `exp(i h)` for Hermitian `h`, via `h = V diag(theta) V^†`.
pub fn unitary_exp(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let err = h.hermitian_error();
    if err > HERMITIAN_TOL {
        return Err(GhrrError::NotHermitian(err));
    }
    Ok(unitary_exp_unchecked(h))
}

pub(crate) fn unitary_exp_unchecked(h: &ComplexMatrix) -> ComplexMatrix {
    let m = h.dim;
    let HermitianEigen { values, vectors } = eigh(h);
    let phases: Vec<Complex64> = values.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
    let v = vectors.as_slice();
    let mut out = ComplexMatrix::zeros(m);
    for r in 0..m {
        for c in 0..m {
            let mut acc = ZERO;
            for k in 0..m {
                acc += v[r * m + k] * phases[k] * v[c * m + k].conj();
            }
            out.data[r * m + c] = acc;
        }
    }
    out.unitary = true;
    out
}

/// `sum_j |Q_jj| / sum_jk |Q_jk|`, in `[0, 1]`.
pub fn diagonality(q: &ComplexMatrix) -> Result<f64> {
    let m = q.dim;
    let mut diag = 0.0;
    let mut total = 0.0;
    for r in 0..m {
        for c in 0..m {
            let a = q.data[r * m + c].norm();
            total += a;
            if r == c {
                diag += a;
            }
        }
    }
    if total == 0.0 {
        return Err(GhrrError::ZeroMatrix);
    }
    Ok(diag / total)
}

// ---------------------------------------------------------------------------
// Slice kernels over row-major m*m blocks.

/// `out = a * b`.
#[inline]
pub(crate) fn matmul_into(a: &[Complex64], b: &[Complex64], out: &mut [Complex64], m: usize) {
    for r in 0..m {
        let row = &a[r * m..(r + 1) * m];
        let dst = &mut out[r * m..(r + 1) * m];
        dst.fill(ZERO);
        for (k, &ark) in row.iter().enumerate() {
            let brow = &b[k * m..(k + 1) * m];
            for (d, &bkc) in dst.iter_mut().zip(brow) {
                *d += ark * bkc;
            }
        }
    }
}

/// `out = a^†`.
#[inline]
pub(crate) fn dagger_into(a: &[Complex64], out: &mut [Complex64], m: usize) {
    for r in 0..m {
        for c in 0..m {
            out[c * m + r] = a[r * m + c].conj();
        }
    }
}

/// `Re tr(a b^†) = Re sum_kl a_kl conj(b_kl)`.
#[inline]
pub(crate) fn re_trace_a_bdag(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}
