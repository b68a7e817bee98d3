//! Gradient descent on the Hermitian generator of a unitary so that the
//! unitary reaches a requested diagonality.
//!
//! The unitary is parameterized as `Q(X) = exp(i (X + X^†)/2)` with `X` an
//! unconstrained complex matrix. The objective is
//! `(diagonality(Q(X)) - target)^2`; its gradient over the `2 m^2` real
//! parameters of `X` is taken by central finite differences.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{diagonality, ginibre, hermitian_part, unitary_exp_unchecked, ComplexMatrix};
use crate::error::{GhrrError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalityOptimizer {
    pub tol: f64,
    pub max_iters: usize,
    /// Central-difference step on each real parameter.
    pub fd_step: f64,
    pub learning_rate: f64,
    /// Learning-rate multiplier after an accepted step (1.0 disables growth).
    pub growth: f64,
    /// Iterations without a new best before restarting from a fresh draw.
    pub patience: usize,
}

impl Default for DiagonalityOptimizer {
    fn default() -> Self {
        Self {
            tol: 0.02,
            max_iters: 2000,
            fd_step: 1e-5,
            learning_rate: 0.1,
            growth: 1.5,
            patience: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub q: ComplexMatrix,
    pub x: ComplexMatrix,
    pub diagonality: f64,
    pub iterations: usize,
}

fn unitary_of(x: &[Complex64], m: usize) -> ComplexMatrix {
    let x = ComplexMatrix::from_row_major(m, x.to_vec()).expect("square by construction");
    unitary_exp_unchecked(&hermitian_part(&x))
}

fn diag_of(x: &[Complex64], m: usize) -> f64 {
    // exp(iH) is unitary, never zero
    diagonality(&unitary_of(x, m)).unwrap_or(0.0)
}

impl DiagonalityOptimizer {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    /// Runs from a Ginibre starting point drawn from `rng`, restarting from a
    /// fresh draw whenever progress stalls for `patience` iterations. The
    /// iteration budget is shared across restarts.
    pub fn run<R: Rng + ?Sized>(&self, m: usize, target: f64, rng: &mut R) -> Result<OptimizeOutcome> {
        if m < 1 {
            return Err(GhrrError::InvalidDimension("unitary dimension must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&target) {
            return Err(GhrrError::InvalidConfig(format!("diagonality target {target} outside [0, 1]")));
        }
        if target < 1.0 && m == 1 {
            return Err(GhrrError::InvalidConfig(
                "every 1x1 unitary has diagonality 1; targets below 1 need m >= 2".into(),
            ));
        }
        if target == 1.0 {
            // the result is snapped to a diagonal unitary, so descent adds nothing
            return Ok(self.outcome(ginibre(m, rng).into_vec(), m, 0, target));
        }
        let mut used = 0;
        let mut best: Option<(f64, Vec<Complex64>)> = None;
        while used < self.max_iters {
            let start = ginibre(m, rng).into_vec();
            let (f, x, iters, done) = self.descend(start, m, target, self.max_iters - used);
            used += iters;
            if done {
                return Ok(self.outcome(x, m, used, target));
            }
            if best.as_ref().map_or(true, |(bf, _)| f < *bf) {
                best = Some((f, x));
            }
        }
        let x = best.map(|(_, x)| x).unwrap_or_else(|| ginibre(m, rng).into_vec());
        Err(self.failure(x, m, target))
    }

    /// Single descent from `start`, without restarts.
    pub fn run_from(&self, start: ComplexMatrix, target: f64) -> Result<OptimizeOutcome> {
        let m = start.dim();
        let (_, x, iters, done) = self.descend(start.into_vec(), m, target, self.max_iters);
        if done {
            Ok(self.outcome(x, m, iters, target))
        } else {
            Err(self.failure(x, m, target))
        }
    }

    /// Returns `(objective, x, iterations used, converged)`.
    fn descend(
        &self,
        mut x: Vec<Complex64>,
        m: usize,
        target: f64,
        budget: usize,
    ) -> (f64, Vec<Complex64>, usize, bool) {
        let n = x.len();
        let objective = |x: &[Complex64]| {
            let d = diag_of(x, m) - target;
            d * d
        };

        let mut f = objective(&x);
        let mut lr = self.learning_rate;
        let mut grad = vec![Complex64::new(0.0, 0.0); n];
        let mut probe = x.clone();
        let h = self.fd_step;
        let mut since_best = 0;
        let mut best_f = f;

        for iter in 0..budget {
            if f.sqrt() <= self.tol {
                return (f, x, iter, true);
            }
            if since_best >= self.patience {
                return (f, x, iter, false);
            }
            for i in 0..n {
                let orig = x[i];
                probe[i] = orig + Complex64::new(h, 0.0);
                let fp = objective(&probe);
                probe[i] = orig - Complex64::new(h, 0.0);
                let fm = objective(&probe);
                let g_re = (fp - fm) / (2.0 * h);
                probe[i] = orig + Complex64::new(0.0, h);
                let fp = objective(&probe);
                probe[i] = orig - Complex64::new(0.0, h);
                let fm = objective(&probe);
                let g_im = (fp - fm) / (2.0 * h);
                probe[i] = orig;
                grad[i] = Complex64::new(g_re, g_im);
            }
            let candidate: Vec<Complex64> = x.iter().zip(&grad).map(|(xi, gi)| xi - gi * lr).collect();
            let fc = objective(&candidate);
            if fc < f {
                x = candidate;
                probe.copy_from_slice(&x);
                f = fc;
                lr *= self.growth;
            } else {
                lr *= 0.5;
            }
            if f < best_f * 0.99 {
                best_f = f;
                since_best = 0;
            } else {
                since_best += 1;
            }
        }
        let done = f.sqrt() <= self.tol;
        (f, x, budget, done)
    }

    fn failure(&self, x: Vec<Complex64>, m: usize, target: f64) -> GhrrError {
        let q = unitary_of(&x, m);
        let achieved = diagonality(&q).unwrap_or(0.0);
        GhrrError::NonConvergence {
            target,
            achieved,
            iterations: self.max_iters,
            best: Box::new(q),
        }
    }

    /// For target 1 the converged iterate is snapped to the diagonal unitary
    /// `diag(phase(Q_jj))`, whose generator is `diag(arg Q_jj)`.
    fn outcome(&self, mut x: Vec<Complex64>, m: usize, iterations: usize, target: f64) -> OptimizeOutcome {
        if target == 1.0 {
            let q = unitary_of(&x, m);
            x = vec![Complex64::new(0.0, 0.0); m * m];
            for j in 0..m {
                x[j * m + j] = Complex64::new(q.get(j, j).arg(), 0.0);
            }
        }
        let q = unitary_of(&x, m);
        let diagonality = diagonality(&q).unwrap_or(0.0);
        OptimizeOutcome {
            q,
            x: ComplexMatrix::from_row_major(m, x).expect("square by construction"),
            diagonality,
            iterations,
        }
    }
}

/// Unitary `Q` with `|diagonality(Q) - target| <= tol`, by gradient descent
/// on its Hermitian generator.
pub fn optimize_diagonality<R: Rng + ?Sized>(
    m: usize,
    target: f64,
    tol: f64,
    max_iters: usize,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    DiagonalityOptimizer::default()
        .with_tol(tol)
        .with_max_iters(max_iters)
        .run(m, target, rng)
        .map(|o| o.q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn reaches_extreme_targets() {
        let mut rng = seeded(31);
        let q = optimize_diagonality(3, 1.0, 0.02, 2000, &mut rng).unwrap();
        assert!(q.unitarity_error() < 1e-10);
        assert!(diagonality(&q).unwrap() >= 0.98);

        let q = optimize_diagonality(3, 0.0, 0.02, 2000, &mut rng).unwrap();
        assert!(diagonality(&q).unwrap() <= 0.02);
    }

    #[test]
    fn reaches_intermediate_targets() {
        let mut rng = seeded(32);
        for m in [2usize, 3] {
            for target in [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0] {
                let out = DiagonalityOptimizer::default().run(m, target, &mut rng).unwrap();
                assert!((out.diagonality - target).abs() <= 0.02, "m={m} target={target}");
                assert!(out.iterations <= 2000);
            }
        }
    }

    #[test]
    fn target_one_yields_an_exactly_diagonal_unitary() {
        let mut rng = seeded(35);
        let out = DiagonalityOptimizer::default().run(3, 1.0, &mut rng).unwrap();
        assert_eq!(out.diagonality, 1.0);
        assert!(out.q.unitarity_error() < 1e-12);
        for j in 0..3 {
            for k in 0..3 {
                if j != k {
                    assert_eq!(out.q.get(j, k), Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn rejects_bad_targets() {
        let mut rng = seeded(33);
        assert!(optimize_diagonality(1, 0.5, 0.02, 10, &mut rng).is_err());
        assert!(optimize_diagonality(3, 1.5, 0.02, 10, &mut rng).is_err());
    }

    #[test]
    fn non_convergence_reports_best_iterate() {
        let mut rng = seeded(34);
        let err = optimize_diagonality(3, 0.0, 1e-9, 2, &mut rng).unwrap_err();
        match err {
            GhrrError::NonConvergence { achieved, best, .. } => {
                assert!((diagonality(&best).unwrap() - achieved).abs() < 1e-15);
                assert!(best.unitarity_error() < 1e-10);
            }
            other => panic!("unexpected error {other}"),
        }
    }
}
