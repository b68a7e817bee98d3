//! Cyclic Jacobi eigensolver for small complex Hermitian matrices.

use num_complex::Complex64;

use super::ComplexMatrix;

const MAX_SWEEPS: usize = 60;

/// `h = vectors * diag(values) * vectors^†`, eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Eigendecomposition of a Hermitian matrix. Only the upper triangle's
/// Hermitian structure is assumed; the input is not checked here.
pub fn eigh(h: &ComplexMatrix) -> HermitianEigen {
    let m = h.dim();
    let mut a: Vec<Complex64> = h.as_slice().to_vec();
    let mut v: Vec<Complex64> = ComplexMatrix::identity(m).into_vec();

    let scale: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if m > 1 && scale > 0.0 {
        let threshold = f64::EPSILON * scale * 1e-2;
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..m)
                .flat_map(|r| ((r + 1)..m).map(move |c| (r, c)))
                .map(|(r, c)| a[r * m + c].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= threshold {
                break;
            }
            for p in 0..m {
                for q in (p + 1)..m {
                    rotate(&mut a, &mut v, m, p, q);
                }
            }
        }
    }

    let values = (0..m).map(|k| a[k * m + k].re).collect();
    HermitianEigen {
        values,
        vectors: ComplexMatrix::from_row_major(m, v)
            .expect("square by construction")
            .with_unitary_tag(true),
    }
}

/// One Jacobi rotation annihilating `a[p][q]`.
///
/// With `a_pq = r e^{i phi}`, the phase matrix `diag(1, e^{-i phi})` makes the
/// 2x2 block real symmetric, and a real rotation then diagonalizes it. The
/// combined transform on columns `p, q` is
/// `J = [[c, s], [-s e^{-i phi}, c e^{-i phi}]]`, applied as `a <- J^† a J`.
fn rotate(a: &mut [Complex64], v: &mut [Complex64], m: usize, p: usize, q: usize) {
    let apq = a[p * m + q];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = a[p * m + p].re;
    let aqq = a[q * m + q].re;
    let phase = apq / r; // e^{i phi}
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    // a <- a J (columns p, q)
    for k in 0..m {
        let akp = a[k * m + p];
        let akq = a[k * m + q];
        a[k * m + p] = akp * jpp + akq * jqp;
        a[k * m + q] = akp * jpq + akq * jqq;
    }
    // a <- J^† a (rows p, q)
    for k in 0..m {
        let apk = a[p * m + k];
        let aqk = a[q * m + k];
        a[p * m + k] = jpp.conj() * apk + jqp.conj() * aqk;
        a[q * m + k] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[p * m + q] = Complex64::new(0.0, 0.0);
    a[q * m + p] = Complex64::new(0.0, 0.0);
    a[p * m + p].im = 0.0;
    a[q * m + q].im = 0.0;

    // v <- v J
    for k in 0..m {
        let vkp = v[k * m + p];
        let vkq = v[k * m + q];
        v[k * m + p] = vkp * jpp + vkq * jqp;
        v[k * m + q] = vkp * jpq + vkq * jqq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matalg::{dagger, hermitian_part, matmul};
    use crate::rng::seeded;
    use rand::Rng;

    #[test]
    fn reconstructs_random_hermitian() {
        let mut rng = seeded(11);
        for m in 1..=8 {
            let data = (0..m * m)
                .map(|_| Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)))
                .collect();
            let h = hermitian_part(&ComplexMatrix::from_row_major(m, data).unwrap());
            let HermitianEigen { values, vectors } = eigh(&h);
            assert!(vectors.unitarity_error() < 1e-13, "m={m}");
            let lam = ComplexMatrix::from_diagonal(
                &values.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>(),
            );
            let back = matmul(&matmul(&vectors, &lam).unwrap(), &dagger(&vectors)).unwrap();
            assert!(back.max_abs_diff(&h) < 1e-12, "m={m}");
        }
    }

    #[test]
    fn diagonal_input_is_untouched() {
        let h = ComplexMatrix::from_diagonal(&[Complex64::new(2.0, 0.0), Complex64::new(-1.0, 0.0)]);
        let e = eigh(&h);
        assert_eq!(e.values, vec![2.0, -1.0]);
        assert_eq!(e.vectors, ComplexMatrix::identity(2).with_unitary_tag(true));
    }
}
