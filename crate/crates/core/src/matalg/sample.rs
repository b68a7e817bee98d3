use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{hermitian_part, unitary_exp_unchecked, ComplexMatrix};
use crate::error::{GhrrError, Result};

/// How a random unitary is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum UnitaryMethod {
    /// Haar measure, via QR of a complex Ginibre matrix.
    #[default]
    Haar,
    /// `exp(i (X + X^†)/2)` with `X` entries `a + bi`, `a, b ~ N(0, 1)`.
    HermitianExp,
}

impl std::str::FromStr for UnitaryMethod {
    type Err = GhrrError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haar" => Ok(Self::Haar),
            "hermitian-exp" => Ok(Self::HermitianExp),
            other => Err(GhrrError::InvalidConfig(format!("unknown unitary method `{other}`"))),
        }
    }
}

impl std::fmt::Display for UnitaryMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Haar => "haar",
            Self::HermitianExp => "hermitian-exp",
        })
    }
}

pub fn sample_unitary<R: Rng + ?Sized>(m: usize, method: UnitaryMethod, rng: &mut R) -> Result<ComplexMatrix> {
    if m < 1 {
        return Err(GhrrError::InvalidDimension("unitary dimension must be >= 1".into()));
    }
    Ok(match method {
        UnitaryMethod::Haar => haar_unitary(m, rng),
        UnitaryMethod::HermitianExp => hermitian_exp_unitary(m, rng),
    })
}

/// Entries `a + bi` with `a, b ~ N(0, 1)`.
pub fn ginibre<R: Rng + ?Sized>(m: usize, rng: &mut R) -> ComplexMatrix {
    let data = (0..m * m)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    ComplexMatrix::from_row_major(m, data).expect("square by construction")
}

pub fn hermitian_exp_unitary<R: Rng + ?Sized>(m: usize, rng: &mut R) -> ComplexMatrix {
    unitary_exp_unchecked(&hermitian_part(&ginibre(m, rng)))
}

/// Haar-distributed unitary: Householder QR of a Ginibre matrix, then each
/// column of `Q` is rotated by the phase of the matching `R` diagonal entry so
/// the factorization is the unique one with positive `R` diagonal.
pub fn haar_unitary<R: Rng + ?Sized>(m: usize, rng: &mut R) -> ComplexMatrix {
    let mut a = ginibre(m, rng).into_vec();
    let mut q = ComplexMatrix::identity(m).into_vec();
    let mut v = vec![Complex64::new(0.0, 0.0); m];

    for k in 0..m {
        let len = m - k;
        let norm = (k..m).map(|r| a[r * m + k].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[k * m + k];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
        let alpha = -phase * norm;
        for i in 0..len {
            v[i] = a[(k + i) * m + k];
        }
        v[0] -= alpha;
        let vnorm = v[..len].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in &mut v[..len] {
            *z /= vnorm;
        }
        // a[k.., j] -= 2 v (v^† a[k.., j])
        for j in k..m {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in 0..len {
                dot += v[i].conj() * a[(k + i) * m + j];
            }
            for i in 0..len {
                a[(k + i) * m + j] -= v[i] * dot * 2.0;
            }
        }
        // q[:, k..] -= 2 (q[:, k..] v) v^†
        for r in 0..m {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in 0..len {
                dot += q[r * m + k + i] * v[i];
            }
            for i in 0..len {
                q[r * m + k + i] -= dot * v[i].conj() * 2.0;
            }
        }
    }

    for k in 0..m {
        let rkk = a[k * m + k];
        let n = rkk.norm();
        if n > 0.0 {
            let ph = rkk / n;
            for r in 0..m {
                q[r * m + k] *= ph;
            }
        }
    }
    ComplexMatrix::from_row_major(m, q)
        .expect("square by construction")
        .with_unitary_tag(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matalg::{dagger, matmul};
    use crate::rng::seeded;

    #[test]
    fn outputs_are_unitary() {
        let mut rng = seeded(21);
        for m in 1..=8 {
            for method in [UnitaryMethod::Haar, UnitaryMethod::HermitianExp] {
                let u = sample_unitary(m, method, &mut rng).unwrap();
                assert!(u.is_tagged_unitary());
                assert!(u.unitarity_error() <= 1e-10, "m={m} {method}");
            }
        }
    }

    #[test]
    fn rejects_zero_dimension() {
        let mut rng = seeded(0);
        assert!(sample_unitary(0, UnitaryMethod::Haar, &mut rng).is_err());
    }

    #[test]
    fn haar_qr_reproduces_the_ginibre_factor() {
        // Q^† G must be upper triangular with a positive real diagonal.
        let mut rng = seeded(22);
        let mut rng_copy = seeded(22);
        let g = ginibre(4, &mut rng_copy);
        let q = haar_unitary(4, &mut rng);
        let r = matmul(&dagger(&q), &g).unwrap();
        for i in 0..4 {
            assert!(r.get(i, i).re > 0.0);
            assert!(r.get(i, i).im.abs() < 1e-12);
            for j in 0..i {
                assert!(r.get(i, j).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn haar_phase_is_uniform_at_m1() {
        // Kolmogorov-Smirnov distance against Unif[0, 2pi) over 1e4 draws.
        let mut rng = seeded(23);
        let n = 10_000;
        let mut phases: Vec<f64> = (0..n)
            .map(|_| {
                let z = haar_unitary(1, &mut rng).get(0, 0);
                z.im.atan2(z.re).rem_euclid(std::f64::consts::TAU) / std::f64::consts::TAU
            })
            .collect();
        phases.sort_by(f64::total_cmp);
        let ks = phases
            .iter()
            .enumerate()
            .map(|(i, &u)| {
                let lo = i as f64 / n as f64;
                let hi = (i + 1) as f64 / n as f64;
                (u - lo).abs().max((hi - u).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.05, "ks={ks}");
    }

    #[test]
    fn haar_entry_mean_vanishes_at_m3() {
        let mut rng = seeded(24);
        let n = 100_000;
        let mut acc = Complex64::new(0.0, 0.0);
        for _ in 0..n {
            acc += haar_unitary(3, &mut rng).get(0, 0);
        }
        let mean = acc / n as f64;
        assert!(mean.norm() < 0.02, "|mean Q11| = {}", mean.norm());
    }
}
