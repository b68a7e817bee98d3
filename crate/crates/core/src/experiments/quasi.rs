use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::mean_std;
use super::ExperimentRecord;
use crate::error::{GhrrError, Result};
use crate::hdalg::{bind, similarity, AngleDist, BaseSampler, BaseSamplerSpec, QMode};
use crate::matalg::UnitaryMethod;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiConfig {
    pub dim_d: usize,
    pub dim_m: usize,
    pub pairs: usize,
    /// Q mode of the hypervectors in the binding histogram.
    pub q_mode: QMode,
    pub q_method: UnitaryMethod,
    pub angle_dist: AngleDist,
    pub bins: usize,
    pub seed: u64,
}

impl QuasiConfig {
    pub fn new(dim_d: usize, dim_m: usize, pairs: usize) -> Self {
        Self {
            dim_d,
            dim_m,
            pairs,
            q_mode: QMode::Varying,
            q_method: UnitaryMethod::Haar,
            angle_dist: AngleDist::Uniform,
            bins: 40,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_q_mode(mut self, q_mode: QMode) -> Self {
        self.q_mode = q_mode;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiRow {
    /// `shared-q`, `varying-q` or `bound`.
    pub kind: String,
    pub pair: usize,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

/// Equal-width bins over `[lo, hi]`; values outside are clamped into the end
/// bins.
pub fn histogram(values: &[f64], bins: usize, lo: f64, hi: f64) -> Histogram {
    let bins = bins.max(1);
    let mut counts = vec![0; bins];
    let width = (hi - lo) / bins as f64;
    for &v in values {
        let i = ((v - lo) / width).floor();
        let i = if i.is_nan() { 0 } else { (i.max(0.0) as usize).min(bins - 1) };
        counts[i] += 1;
    }
    Histogram { lo, hi, counts }
}

const KINDS: [&str; 3] = ["shared-q", "varying-q", "bound"];

/// Three similarity samples of `pairs` each: independent pairs with a `Q`
/// shared by all positions, independent pairs with a fresh `Q_j` per
/// position, and `(H1, H1 * H2)` pairs.
pub fn exp_quasi_orthogonality(cfg: &QuasiConfig) -> Result<ExperimentRecord<QuasiRow>> {
    if cfg.pairs < 100 {
        return Err(GhrrError::InvalidConfig("quasi-orthogonality needs at least 100 pairs".into()));
    }
    let spec = |mode| {
        BaseSamplerSpec::new(cfg.dim_d, cfg.dim_m)
            .with_q_mode(mode)
            .with_q_method(cfg.q_method)
            .with_angle_dist(cfg.angle_dist)
    };
    let samplers = [
        BaseSampler::new(spec(QMode::Shared), &mut rng::derived(cfg.seed, "quasi/shared-q"))?,
        BaseSampler::new(spec(QMode::Varying), &mut rng::derived(cfg.seed, "quasi/varying-q"))?,
        BaseSampler::new(spec(cfg.q_mode), &mut rng::derived(cfg.seed, "quasi/bound"))?,
    ];

    let mut rows = Vec::with_capacity(3 * cfg.pairs);
    let mut summary = serde_json::Map::new();
    for (kind, sampler) in KINDS.iter().zip(&samplers) {
        let sims = (0..cfg.pairs)
            .into_par_iter()
            .map(|p| {
                let mut r = rng::derived(cfg.seed, &format!("quasi/{kind}/{p}"));
                let h1 = sampler.sample(&mut r);
                let h2 = sampler.sample(&mut r);
                if *kind == "bound" {
                    similarity(&h1, &bind(&h1, &h2)?)
                } else {
                    similarity(&h1, &h2)
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        let (mean, std) = mean_std(&sims);
        summary.insert(
            (*kind).to_string(),
            serde_json::json!({
                "mean": mean,
                "std": std,
                "variance": std * std,
                "histogram": histogram(&sims, cfg.bins, -1.0, 1.0),
            }),
        );
        rows.extend(sims.into_iter().enumerate().map(|(pair, similarity)| QuasiRow {
            kind: (*kind).to_string(),
            pair,
            similarity,
        }));
    }
    ExperimentRecord::new("quasi-orthogonality", cfg, rows, serde_json::Value::Object(summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdalg::sample_base;

    fn stats_of(rec: &ExperimentRecord<QuasiRow>, kind: &str) -> (f64, f64) {
        let v: Vec<f64> = rec.rows.iter().filter(|r| r.kind == kind).map(|r| r.similarity).collect();
        mean_std(&v)
    }

    #[test]
    fn histograms_center_on_zero() {
        let rec = exp_quasi_orthogonality(&QuasiConfig::new(1000, 3, 2000).with_seed(1)).unwrap();
        for kind in KINDS {
            let (mean, std) = stats_of(&rec, kind);
            assert!(mean.abs() < 0.01, "{kind}: mean {mean}");
            assert!(std < 0.03, "{kind}: std {std}");
        }
        let (_, s_shared) = stats_of(&rec, "shared-q");
        let (_, s_varying) = stats_of(&rec, "varying-q");
        assert!(s_varying < s_shared);
    }

    #[test]
    fn spread_scales_with_inverse_root_dimension() {
        let small = exp_quasi_orthogonality(&QuasiConfig::new(10, 1, 2000).with_seed(2)).unwrap();
        let large = exp_quasi_orthogonality(&QuasiConfig::new(1000, 1, 2000).with_seed(2)).unwrap();
        let ratio = stats_of(&small, "varying-q").1 / stats_of(&large, "varying-q").1;
        assert!((8.0..12.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn identical_pairs_give_a_spike_at_one() {
        let mut r = rng::seeded(3);
        let sims: Vec<f64> = (0..100)
            .map(|_| {
                let h = sample_base(&BaseSamplerSpec::new(50, 2), &mut r).unwrap();
                similarity(&h, &h).unwrap()
            })
            .collect();
        let h = histogram(&sims, 20, -1.0, 1.0);
        assert_eq!(h.counts[19], 100);
        assert_eq!(h.counts.iter().sum::<usize>(), 100);
    }

    #[test]
    fn deterministic_csv() {
        let cfg = QuasiConfig::new(20, 2, 100).with_seed(4);
        let a = exp_quasi_orthogonality(&cfg).unwrap().to_csv_string().unwrap();
        let b = exp_quasi_orthogonality(&cfg).unwrap().to_csv_string().unwrap();
        assert_eq!(a, b);
        assert!(exp_quasi_orthogonality(&QuasiConfig::new(20, 2, 99)).is_err());
    }
}
