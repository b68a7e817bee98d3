use serde::{Deserialize, Serialize};

use super::ExperimentRecord;
use crate::encoder::{kernel_profile, EncoderConfig, KernelPairing};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub encoder: EncoderConfig,
    pub pairing: KernelPairing,
    /// Displacements `y - x`, each of length `n_features`.
    pub deltas: Vec<Vec<f64>>,
    pub trials: usize,
    pub seed: u64,
}

impl KernelConfig {
    /// Displacements of the given norms along the first input axis.
    pub fn along_first_axis(encoder: EncoderConfig, norms: &[f64], trials: usize, seed: u64) -> Self {
        let n = encoder.n_features;
        let deltas = norms
            .iter()
            .map(|&r| {
                let mut d = vec![0.0; n];
                d[0] = r;
                d
            })
            .collect();
        Self {
            encoder,
            pairing: KernelPairing::Same,
            deltas,
            trials,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub delta_index: usize,
    pub delta_norm: f64,
    pub trial: usize,
    pub kernel: f64,
    pub analytic: f64,
}

/// Empirical kernel at each displacement over freshly drawn encoders.
pub fn exp_kernel(cfg: &KernelConfig) -> Result<ExperimentRecord<KernelRow>> {
    let table = kernel_profile(&cfg.encoder, cfg.pairing, &cfg.deltas, cfg.trials, cfg.seed)?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for (i, p) in table.iter().enumerate() {
        for (trial, &kernel) in p.samples.iter().enumerate() {
            rows.push(KernelRow {
                delta_index: i,
                delta_norm: p.delta_norm,
                trial,
                kernel,
                analytic: p.analytic,
            });
        }
        points.push(serde_json::json!({
            "delta": p.delta,
            "delta_norm": p.delta_norm,
            "mean": p.mean,
            "std": p.std,
            "analytic": p.analytic,
            "abs_error": (p.mean - p.analytic).abs(),
        }));
    }
    ExperimentRecord::new("kernel", cfg, rows, serde_json::json!({ "points": points }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rbf_profile() {
        let enc = EncoderConfig::new(1, 4000, 2);
        let cfg = KernelConfig::along_first_axis(enc, &[0.0, 0.5, 1.0, 2.0], 2, 5);
        let rec = exp_kernel(&cfg).unwrap();
        assert_eq!(rec.rows.len(), 8);
        for p in rec.summary["points"].as_array().unwrap() {
            assert!(p["abs_error"].as_f64().unwrap() < 0.05, "{p}");
        }
    }
}
