//! Binding of two elements as a linear view of the phase tensor product.
//!
//! For `A = Q diag(lambda)` and `B = R diag(eta)`, entry `(k, l)` of `A B` is
//! `sum_n q_kn r_nl lambda_n eta_l`, a linear combination of the outer
//! product `lambda eta^T`. Column `l` of `A B` equals `U_l v_l` with
//! `U_l = Q diag(R[:, l])` and `v_l = lambda * eta_l`, so the outer product can
//! be read back whenever every entry of `R` is nonzero.

use num_complex::Complex64;

use crate::error::{GhrrError, Result};
use crate::matalg::{matmul, ComplexMatrix, DiagonalPhases, UNITARY_TOL};

#[derive(Debug, Clone)]
pub struct TensorView {
    /// `Q diag(lambda) R diag(eta)`.
    pub bound: ComplexMatrix,
    /// `lambda eta^T` recovered from `bound` alone.
    pub reconstructed_outer: ComplexMatrix,
}

/// Entry-wise `sum_n q_kn r_nl lambda_n eta_l`.
pub fn bound_by_expansion(q: &ComplexMatrix, r: &ComplexMatrix, lam: &[Complex64], eta: &[Complex64]) -> ComplexMatrix {
    let m = q.dim();
    let mut data = vec![Complex64::new(0.0, 0.0); m * m];
    for k in 0..m {
        for l in 0..m {
            data[k * m + l] = (0..m).map(|n| q.get(k, n) * r.get(n, l) * lam[n] * eta[l]).sum();
        }
    }
    ComplexMatrix::from_row_major(m, data).expect("square")
}

/// `Q diag(lambda) R diag(eta)`, defined for any `R`.
pub fn view_bound(q: &ComplexMatrix, r: &ComplexMatrix, lam: &DiagonalPhases, eta: &DiagonalPhases) -> Result<ComplexMatrix> {
    matmul(&matmul(&matmul(q, &lam.to_matrix())?, r)?, &eta.to_matrix())
}

pub fn tensor_view(
    q: &ComplexMatrix,
    r: &ComplexMatrix,
    lam: &DiagonalPhases,
    eta: &DiagonalPhases,
) -> Result<TensorView> {
    let m = q.dim();
    for d in [r.dim(), lam.dim(), eta.dim()] {
        if d != m {
            return Err(GhrrError::DimensionMismatch { left: m, right: d });
        }
    }
    if !(q.is_tagged_unitary() || q.unitarity_error() <= UNITARY_TOL) {
        return Err(GhrrError::InvalidConfig("left factor Q must be unitary".into()));
    }
    for row in 0..m {
        for col in 0..m {
            if r.get(row, col).norm() < f64::MIN_POSITIVE {
                return Err(GhrrError::SingularColumnMap { row, col });
            }
        }
    }

    let bound = view_bound(q, r, lam, eta)?;

    // v_l = diag(R[:, l])^{-1} Q^† bound[:, l]
    let mut outer = vec![Complex64::new(0.0, 0.0); m * m];
    for l in 0..m {
        for n in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..m {
                acc += q.get(k, n).conj() * bound.get(k, l);
            }
            outer[n * m + l] = acc / r.get(n, l);
        }
    }
    Ok(TensorView {
        bound,
        reconstructed_outer: ComplexMatrix::from_row_major(m, outer).expect("square"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matalg::haar_unitary;
    use crate::rng::seeded;
    use rand::Rng;

    fn phases(m: usize, rng: &mut impl Rng) -> DiagonalPhases {
        DiagonalPhases::new((0..m).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect())
    }

    fn direct_outer(lam: &DiagonalPhases, eta: &DiagonalPhases) -> ComplexMatrix {
        let (a, b) = (lam.phases(), eta.phases());
        let m = a.len();
        let mut data = Vec::with_capacity(m * m);
        for x in &a {
            for y in &b {
                data.push(x * y);
            }
        }
        ComplexMatrix::from_row_major(m, data).unwrap()
    }

    #[test]
    fn random_instance_reconstructs_outer_product() {
        let mut rng = seeded(60);
        for m in [2usize, 3, 5] {
            let q = haar_unitary(m, &mut rng);
            let r = haar_unitary(m, &mut rng);
            let (lam, eta) = (phases(m, &mut rng), phases(m, &mut rng));
            let view = tensor_view(&q, &r, &lam, &eta).unwrap();
            let expanded = bound_by_expansion(&q, &r, &lam.phases(), &eta.phases());
            assert!(view.bound.max_abs_diff(&expanded) < 1e-10);
            assert!(view.reconstructed_outer.max_abs_diff(&direct_outer(&lam, &eta)) < 1e-8);
        }
    }

    #[test]
    fn scalar_case() {
        let mut rng = seeded(61);
        let q = haar_unitary(1, &mut rng);
        let r = haar_unitary(1, &mut rng);
        let (lam, eta) = (phases(1, &mut rng), phases(1, &mut rng));
        let view = tensor_view(&q, &r, &lam, &eta).unwrap();
        let expected = q.get(0, 0) * r.get(0, 0) * lam.phases()[0] * eta.phases()[0];
        assert!((view.bound.get(0, 0) - expected).norm() < 1e-15);
        assert!(view.reconstructed_outer.max_abs_diff(&direct_outer(&lam, &eta)) < 1e-14);
    }

    #[test]
    fn identity_factors_give_the_diagonal_of_the_outer_product() {
        let mut rng = seeded(62);
        let (lam, eta) = (phases(3, &mut rng), phases(3, &mut rng));
        let id = ComplexMatrix::identity(3);
        let bound = view_bound(&id, &id, &lam, &eta).unwrap();
        let outer = direct_outer(&lam, &eta);
        for k in 0..3 {
            assert!((bound.get(k, k) - outer.get(k, k)).norm() < 1e-15);
            for l in 0..3 {
                if k != l {
                    assert_eq!(bound.get(k, l), Complex64::new(0.0, 0.0));
                }
            }
        }
        // the identity right factor has zero entries, so the view is not invertible
        assert!(matches!(
            tensor_view(&id, &id, &lam, &eta),
            Err(GhrrError::SingularColumnMap { row: 0, col: 1 })
        ));
    }
}
