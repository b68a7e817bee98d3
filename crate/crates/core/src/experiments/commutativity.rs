use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{median, pearson};
use super::ExperimentRecord;
use crate::error::{GhrrError, Result};
use crate::hdalg::{degree_of_commutativity, sample_with_q, AngleDist};
use crate::matalg::{diagonality, sample_unitary, ComplexMatrix, DiagonalityOptimizer, UnitaryMethod};
use crate::rng::{self, GhrrRng};

/// How the two matrices of a pair pick their diagonality targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetPairing {
    /// Both aim at `targets[i]`.
    #[default]
    Same,
    /// Pair `p` of target `i` aims at `targets[i]` and `targets[(i + p) % len]`.
    Cross,
}

impl std::str::FromStr for TargetPairing {
    type Err = GhrrError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "same" => Ok(Self::Same),
            "cross" => Ok(Self::Cross),
            other => Err(GhrrError::InvalidConfig(format!("unknown target pairing `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutativityConfig {
    pub m_values: Vec<usize>,
    pub targets: Vec<f64>,
    pub pairs_per_target: usize,
    pub pairing: TargetPairing,
    /// Positions per hypervector; each hypervector uses one `Q` everywhere.
    pub dim_d: usize,
    pub tol: f64,
    pub max_iters: usize,
    /// Pairs of freely sampled unitaries per `m`; 0 disables the mode.
    pub free_pairs: usize,
    pub free_q_method: UnitaryMethod,
    pub seed: u64,
}

impl Default for CommutativityConfig {
    fn default() -> Self {
        Self {
            m_values: vec![3],
            targets: vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0],
            pairs_per_target: 50,
            pairing: TargetPairing::Same,
            dim_d: 100,
            tol: 0.02,
            max_iters: 2000,
            free_pairs: 0,
            free_q_method: UnitaryMethod::HermitianExp,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutativityRow {
    /// `optimized` or `free`.
    pub mode: String,
    pub m: usize,
    pub target1: Option<f64>,
    pub target2: Option<f64>,
    pub pair: usize,
    pub diag_q1: f64,
    pub diag_q2: f64,
    pub diag_sum: f64,
    pub commutativity: f64,
}

fn commutativity_of(q1: &ComplexMatrix, q2: &ComplexMatrix, dim_d: usize, r: &mut GhrrRng) -> Result<f64> {
    let h1 = sample_with_q(q1, dim_d, &AngleDist::Uniform, r)?;
    let h2 = sample_with_q(q2, dim_d, &AngleDist::Uniform, r)?;
    degree_of_commutativity(&h1, &h2)
}

/// Scatter of `diagonality(Q1) + diagonality(Q2)` against the degree of
/// commutativity of two hypervectors built on `Q1` and `Q2`, with targets
/// chosen by [`TargetPairing`]. Pairs whose optimizer fails are skipped and
/// counted in the summary.
pub fn exp_diagonality_commutativity(cfg: &CommutativityConfig) -> Result<ExperimentRecord<CommutativityRow>> {
    if cfg.targets.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(GhrrError::InvalidConfig("diagonality targets must lie in [0, 1]".into()));
    }
    if cfg.m_values.iter().any(|&m| m == 0) || cfg.dim_d == 0 {
        return Err(GhrrError::InvalidDimension("m and D must be >= 1".into()));
    }
    if cfg.m_values.contains(&1) && cfg.targets.iter().any(|&t| t < 1.0) {
        return Err(GhrrError::InvalidConfig("m = 1 only admits diagonality 1".into()));
    }
    let opt = DiagonalityOptimizer::default().with_tol(cfg.tol).with_max_iters(cfg.max_iters);
    let nt = cfg.targets.len();

    let mut rows = Vec::new();
    let mut per_m = serde_json::Map::new();
    for &m in &cfg.m_values {
        let units: Vec<(usize, usize)> = (0..nt)
            .flat_map(|i| (0..cfg.pairs_per_target).map(move |p| (i, p)))
            .collect();
        let results: Vec<Option<CommutativityRow>> = units
            .par_iter()
            .map(|&(i, p)| -> Result<Option<CommutativityRow>> {
                let t1 = cfg.targets[i];
                let t2 = match cfg.pairing {
                    TargetPairing::Same => t1,
                    TargetPairing::Cross => cfg.targets[(i + p) % nt],
                };
                let mut r = rng::derived(cfg.seed, &format!("diag-comm/{m}/{i}/{p}"));
                let q1 = match opt.run(m, t1, &mut r) {
                    Ok(o) => o.q,
                    Err(GhrrError::NonConvergence { .. }) => return Ok(None),
                    Err(e) => return Err(e),
                };
                let q2 = match opt.run(m, t2, &mut r) {
                    Ok(o) => o.q,
                    Err(GhrrError::NonConvergence { .. }) => return Ok(None),
                    Err(e) => return Err(e),
                };
                let (d1, d2) = (diagonality(&q1)?, diagonality(&q2)?);
                Ok(Some(CommutativityRow {
                    mode: "optimized".into(),
                    m,
                    target1: Some(t1),
                    target2: Some(t2),
                    pair: i * cfg.pairs_per_target + p,
                    diag_q1: d1,
                    diag_q2: d2,
                    diag_sum: d1 + d2,
                    commutativity: commutativity_of(&q1, &q2, cfg.dim_d, &mut r)?,
                }))
            })
            .collect::<Result<_>>()?;
        let failures = results.iter().filter(|r| r.is_none()).count();
        let optimized: Vec<CommutativityRow> = results.into_iter().flatten().collect();

        let free: Vec<CommutativityRow> = (0..cfg.free_pairs)
            .into_par_iter()
            .map(|p| -> Result<CommutativityRow> {
                let mut r = rng::derived(cfg.seed, &format!("diag-comm/free/{m}/{p}"));
                let q1 = sample_unitary(m, cfg.free_q_method, &mut r)?;
                let q2 = sample_unitary(m, cfg.free_q_method, &mut r)?;
                let (d1, d2) = (diagonality(&q1)?, diagonality(&q2)?);
                Ok(CommutativityRow {
                    mode: "free".into(),
                    m,
                    target1: None,
                    target2: None,
                    pair: p,
                    diag_q1: d1,
                    diag_q2: d2,
                    diag_sum: d1 + d2,
                    commutativity: commutativity_of(&q1, &q2, cfg.dim_d, &mut r)?,
                })
            })
            .collect::<Result<_>>()?;

        let xs: Vec<f64> = optimized.iter().map(|r| r.diag_sum).collect();
        let ys: Vec<f64> = optimized.iter().map(|r| r.commutativity).collect();
        let free_diag: Vec<f64> = free.iter().flat_map(|r| [r.diag_q1, r.diag_q2]).collect();
        let fx: Vec<f64> = free.iter().map(|r| r.diag_sum).collect();
        let fy: Vec<f64> = free.iter().map(|r| r.commutativity).collect();
        per_m.insert(
            m.to_string(),
            serde_json::json!({
                "pairs": optimized.len(),
                "optimizer_failures": failures,
                "pearson": if xs.len() > 2 { pearson(&xs, &ys) } else { f64::NAN },
                "free_pairs": free.len(),
                "free_median_diagonality": median(&free_diag),
                "free_pearson": if fx.len() > 2 { pearson(&fx, &fy) } else { f64::NAN },
            }),
        );
        rows.extend(optimized);
        rows.extend(free);
    }
    ExperimentRecord::new(
        "diagonality-commutativity",
        cfg,
        rows,
        serde_json::json!({ "per_m": per_m }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_targets_commute_exactly() {
        let cfg = CommutativityConfig {
            m_values: vec![2, 3],
            targets: vec![1.0],
            pairs_per_target: 3,
            dim_d: 20,
            ..Default::default()
        };
        let rec = exp_diagonality_commutativity(&cfg).unwrap();
        assert_eq!(rec.rows.len(), 6);
        for r in &rec.rows {
            assert!((r.commutativity - 1.0).abs() < 1e-10, "{r:?}");
        }
    }

    #[test]
    fn free_sampling_diagonality_falls_with_m() {
        let cfg = CommutativityConfig {
            m_values: vec![2, 6],
            targets: vec![],
            pairs_per_target: 0,
            dim_d: 10,
            free_pairs: 200,
            seed: 4,
            ..Default::default()
        };
        let rec = exp_diagonality_commutativity(&cfg).unwrap();
        let med = |m: &str| rec.summary["per_m"][m]["free_median_diagonality"].as_f64().unwrap();
        assert!(med("6") < med("2"), "{} vs {}", med("6"), med("2"));
    }

    #[test]
    fn pairing_controls_second_target() {
        let base = CommutativityConfig {
            targets: vec![0.5, 1.0],
            pairs_per_target: 2,
            dim_d: 5,
            ..Default::default()
        };
        let same = exp_diagonality_commutativity(&base).unwrap();
        assert!(same.rows.iter().all(|r| r.target1 == r.target2));
        let cross = exp_diagonality_commutativity(&CommutativityConfig {
            pairing: TargetPairing::Cross,
            ..base
        })
        .unwrap();
        assert_eq!(cross.rows.iter().filter(|r| r.target1 != r.target2).count(), 2);
    }

    #[test]
    fn rejects_bad_targets() {
        let cfg = CommutativityConfig {
            targets: vec![1.5],
            ..Default::default()
        };
        assert!(exp_diagonality_commutativity(&cfg).is_err());
        let cfg = CommutativityConfig {
            m_values: vec![1],
            targets: vec![0.5],
            ..Default::default()
        };
        assert!(exp_diagonality_commutativity(&cfg).is_err());
    }
}
