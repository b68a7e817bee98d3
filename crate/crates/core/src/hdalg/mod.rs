//! The GHRR hypervector algebra.
//!
//! A hypervector is a length-`D` sequence of `m x m` complex matrices. With
//! `m = 1` every operation here reduces to its FHRR counterpart: bundling is
//! addition, binding is element-wise complex multiplication and similarity is
//! `Re <H1, H2> / D`.
//!
//! Elements are stored back to back in one row-major buffer; element `j`
//! occupies `data[j*m*m .. (j+1)*m*m]`.

mod io;
mod sampler;
mod tensor_view;

pub use io::{HypervectorJson, BINARY_MAGIC, BINARY_VERSION};
pub use sampler::{sample_base, sample_with_q, sample_with_qs, AngleDist, BaseSampler, BaseSamplerSpec, QMode};
pub use tensor_view::{bound_by_expansion, tensor_view, view_bound, TensorView};

use num_complex::Complex64;

use crate::error::{GhrrError, Result};
use crate::matalg::{dagger_into, matmul_into, re_trace_a_bdag, ComplexMatrix, UNITARY_TOL};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(into = "HypervectorJson", try_from = "HypervectorJson")]
pub struct Hypervector {
    dim_d: usize,
    dim_m: usize,
    data: Vec<Complex64>,
    unitary: bool,
}

impl Hypervector {
    /// All-zero hypervector, the bundling unit.
    pub fn zeros(dim_d: usize, dim_m: usize) -> Self {
        Self {
            dim_d,
            dim_m,
            data: vec![Complex64::new(0.0, 0.0); dim_d * dim_m * dim_m],
            unitary: false,
        }
    }

    /// Every element `I_m`, the binding unit.
    pub fn identity(dim_d: usize, dim_m: usize) -> Self {
        let mut out = Self::zeros(dim_d, dim_m);
        let mm = dim_m * dim_m;
        for j in 0..dim_d {
            for k in 0..dim_m {
                out.data[j * mm + k * dim_m + k] = Complex64::new(1.0, 0.0);
            }
        }
        out.unitary = true;
        out
    }

    /// Builds a hypervector from its elements. The unitary flag is set only
    /// when every element checks unitary to `UNITARY_TOL`.
    pub fn from_elements(elements: &[ComplexMatrix]) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| GhrrError::InvalidDimension("a hypervector needs at least one element".into()))?;
        let m = first.dim();
        let mut data = Vec::with_capacity(elements.len() * m * m);
        let mut unitary = true;
        for e in elements {
            if e.dim() != m {
                return Err(GhrrError::DimensionMismatch {
                    left: m,
                    right: e.dim(),
                });
            }
            unitary &= e.is_tagged_unitary() || e.unitarity_error() <= UNITARY_TOL;
            data.extend_from_slice(e.as_slice());
        }
        Ok(Self {
            dim_d: elements.len(),
            dim_m: m,
            data,
            unitary,
        })
    }

    /// Wraps a raw buffer. `unitary` is trusted only if every element checks.
    pub fn from_raw(dim_d: usize, dim_m: usize, data: Vec<Complex64>, unitary: bool) -> Result<Self> {
        if dim_d == 0 || dim_m == 0 {
            return Err(GhrrError::InvalidDimension("D and m must be >= 1".into()));
        }
        if data.len() != dim_d * dim_m * dim_m {
            return Err(GhrrError::InvalidDimension(format!(
                "expected {} entries for D={dim_d}, m={dim_m}; got {}",
                dim_d * dim_m * dim_m,
                data.len()
            )));
        }
        let mut out = Self {
            dim_d,
            dim_m,
            data,
            unitary: false,
        };
        out.unitary = unitary && out.max_unitarity_error() <= UNITARY_TOL;
        Ok(out)
    }

    pub(crate) fn from_parts_unchecked(dim_d: usize, dim_m: usize, data: Vec<Complex64>, unitary: bool) -> Self {
        debug_assert_eq!(data.len(), dim_d * dim_m * dim_m);
        Self {
            dim_d,
            dim_m,
            data,
            unitary,
        }
    }

    pub fn dim_d(&self) -> usize {
        self.dim_d
    }

    pub fn dim_m(&self) -> usize {
        self.dim_m
    }

    /// `D * m`, the number of independent phases in a base hypervector.
    pub fn effective_dim(&self) -> usize {
        self.dim_d * self.dim_m
    }

    /// `D * m^2`, the number of complex entries.
    pub fn total_dim(&self) -> usize {
        self.dim_d * self.dim_m * self.dim_m
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn element_slice(&self, j: usize) -> &[Complex64] {
        let mm = self.dim_m * self.dim_m;
        &self.data[j * mm..(j + 1) * mm]
    }

    pub fn element(&self, j: usize) -> ComplexMatrix {
        ComplexMatrix::from_row_major(self.dim_m, self.element_slice(j).to_vec())
            .expect("element shape is fixed")
            .with_unitary_tag(self.unitary)
    }

    pub fn elements(&self) -> Vec<ComplexMatrix> {
        (0..self.dim_d).map(|j| self.element(j)).collect()
    }

    pub fn max_unitarity_error(&self) -> f64 {
        (0..self.dim_d)
            .map(|j| {
                ComplexMatrix::from_row_major(self.dim_m, self.element_slice(j).to_vec())
                    .expect("element shape is fixed")
                    .unitarity_error()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.data.len(), other.data.len(), "max_abs_diff on mismatched shapes");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Scalar multiple; the unitary flag survives only unit-modulus factors.
    pub fn scale(&self, factor: f64) -> Self {
        Self {
            dim_d: self.dim_d,
            dim_m: self.dim_m,
            data: self.data.iter().map(|v| v * factor).collect(),
            unitary: self.unitary && factor.abs() == 1.0,
        }
    }

    fn ensure_same_shape(&self, other: &Self) -> Result<()> {
        if self.dim_d != other.dim_d || self.dim_m != other.dim_m {
            return Err(GhrrError::ShapeMismatch {
                d1: self.dim_d,
                m1: self.dim_m,
                d2: other.dim_d,
                m2: other.dim_m,
            });
        }
        Ok(())
    }

    /// In-place bundling: `self += other`.
    pub fn accumulate(&mut self, other: &Self) -> Result<()> {
        self.ensure_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        self.unitary = false;
        Ok(())
    }
}

/// Element-wise matrix sum. The result is never flagged unitary.
pub fn bundle(h1: &Hypervector, h2: &Hypervector) -> Result<Hypervector> {
    let mut out = h1.clone();
    out.accumulate(h2)?;
    Ok(out)
}

/// Sum of any number of hypervectors of one shape; `None` for an empty list.
pub fn bundle_all<'a, I>(items: I) -> Result<Option<Hypervector>>
where
    I: IntoIterator<Item = &'a Hypervector>,
{
    let mut iter = items.into_iter();
    let Some(first) = iter.next() else {
        return Ok(None);
    };
    let mut acc = first.clone();
    acc.unitary = false;
    for h in iter {
        acc.accumulate(h)?;
    }
    Ok(Some(acc))
}

/// Element-wise matrix product `a_j b_j`.
pub fn bind(h1: &Hypervector, h2: &Hypervector) -> Result<Hypervector> {
    h1.ensure_same_shape(h2)?;
    let m = h1.dim_m;
    let mm = m * m;
    let mut data = vec![Complex64::new(0.0, 0.0); h1.data.len()];
    if m == 1 {
        for ((o, a), b) in data.iter_mut().zip(&h1.data).zip(&h2.data) {
            *o = a * b;
        }
    } else {
        for ((o, a), b) in data
            .chunks_exact_mut(mm)
            .zip(h1.data.chunks_exact(mm))
            .zip(h2.data.chunks_exact(mm))
        {
            matmul_into(a, b, o, m);
        }
    }
    Ok(Hypervector::from_parts_unchecked(
        h1.dim_d,
        m,
        data,
        h1.unitary && h2.unitary,
    ))
}

/// `(1 / mD) Re tr(sum_j a_j b_j^†)`.
pub fn similarity(h1: &Hypervector, h2: &Hypervector) -> Result<f64> {
    h1.ensure_same_shape(h2)?;
    Ok(re_trace_a_bdag(&h1.data, &h2.data) / (h1.dim_m * h1.dim_d) as f64)
}

/// Element-wise conjugate transpose of a unitary hypervector.
pub fn inverse(h: &Hypervector) -> Result<Hypervector> {
    if !h.unitary {
        return Err(GhrrError::NotUnitary);
    }
    let m = h.dim_m;
    let mm = m * m;
    let mut data = vec![Complex64::new(0.0, 0.0); h.data.len()];
    for (o, a) in data.chunks_exact_mut(mm).zip(h.data.chunks_exact(mm)) {
        dagger_into(a, o, m);
    }
    Ok(Hypervector::from_parts_unchecked(h.dim_d, m, data, true))
}

/// Cyclic shift of the element sequence: element `j` moves to `j + shift`
/// (mod `D`). Negative shifts rotate the other way.
pub fn permute(h: &Hypervector, shift: i64) -> Hypervector {
    let d = h.dim_d;
    let mm = h.dim_m * h.dim_m;
    let s = shift.rem_euclid(d as i64) as usize;
    let mut data = Vec::with_capacity(h.data.len());
    // out[j] = h[(j - s) mod D]
    data.extend_from_slice(&h.data[(d - s) % d * mm..]);
    data.extend_from_slice(&h.data[..(d - s) % d * mm]);
    Hypervector::from_parts_unchecked(d, h.dim_m, data, h.unitary)
}

/// `similarity(h1 * h2, h2 * h1)`.
pub fn degree_of_commutativity(h1: &Hypervector, h2: &Hypervector) -> Result<f64> {
    h1.ensure_same_shape(h2)?;
    if !h1.unitary || !h2.unitary {
        return Err(GhrrError::NotUnitary);
    }
    similarity(&bind(h1, h2)?, &bind(h2, h1)?)
}

impl std::ops::Add for &Hypervector {
    type Output = Hypervector;
    fn add(self, rhs: Self) -> Hypervector {
        bundle(self, rhs).expect("shape mismatch in hypervector addition")
    }
}

impl std::ops::Mul for &Hypervector {
    type Output = Hypervector;
    fn mul(self, rhs: Self) -> Hypervector {
        bind(self, rhs).expect("shape mismatch in hypervector binding")
    }
}
