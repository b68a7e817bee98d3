use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::mean_std;
use super::{resolve_d, ExperimentRecord};
use crate::error::{GhrrError, Result};
use crate::hdalg::{sample_with_qs, similarity, AngleDist, BaseSampler, BaseSamplerSpec, Hypervector};
use crate::matalg::{diagonality, ComplexMatrix, DiagonalityOptimizer, UnitaryMethod};
use crate::rng::{self, GhrrRng};
use crate::structures::{classify, decode_leaf, decode_tree_accuracy, encode_tree, Codebook, EntryKind, StructureSpec};

/// How tree keys get their unitary factors.
#[derive(Debug, Clone, Copy)]
struct KeySource {
    /// `None`: keys come from the base sampler. `Some(t)`: every position of
    /// every key gets its own optimized `Q_j` with diagonality `t`.
    target: Option<f64>,
    tol: f64,
    max_iters: usize,
}

/// Optimizer attempts per key position before giving up.
const KEY_ATTEMPTS: usize = 5;

fn optimized_q(opt: &DiagonalityOptimizer, m: usize, target: f64, r: &mut GhrrRng) -> Result<ComplexMatrix> {
    let mut last = None;
    for _ in 0..KEY_ATTEMPTS {
        match opt.run(m, target, r) {
            Ok(o) => return Ok(o.q),
            Err(e @ GhrrError::NonConvergence { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// A codebook drawn from `r`. Returns the codebook and the mean diagonality
/// of the optimized key matrices, if any.
fn draw_codebook(
    spec: &StructureSpec,
    base: &BaseSamplerSpec,
    keys: KeySource,
    r: &mut GhrrRng,
) -> Result<(Codebook, Option<f64>)> {
    let sampler = BaseSampler::new(base.clone(), r)?;
    let opt = DiagonalityOptimizer::default()
        .with_tol(keys.tol)
        .with_max_iters(keys.max_iters);
    let mut achieved = Vec::new();
    let book = Codebook::sample_with(
        spec,
        |kind, r: &mut GhrrRng| match (kind, keys.target) {
            (EntryKind::Key, Some(t)) => {
                let qs = (0..base.dim_d)
                    .map(|_| optimized_q(&opt, base.dim_m, t, r))
                    .collect::<Result<Vec<_>>>()?;
                for q in &qs {
                    achieved.push(diagonality(q)?);
                }
                sample_with_qs(&qs, &AngleDist::Uniform, r)
            }
            _ => Ok(sampler.sample(r)),
        },
        r,
    )?;
    let mean = (!achieved.is_empty()).then(|| achieved.iter().sum::<f64>() / achieved.len() as f64);
    Ok((book, mean))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeAccuracyConfig {
    pub total_dim: usize,
    /// Fixed `D` for every `m`, overriding `total_dim`.
    pub dim_d: Option<usize>,
    pub m_values: Vec<usize>,
    pub depths: Vec<usize>,
    pub permute: bool,
    /// Key diagonality targets, one optimized `Q_j` per key position; `None`
    /// draws keys like values.
    pub diagonality_targets: Option<Vec<f64>>,
    pub trials: usize,
    /// Reject totals not divisible by `m^2` instead of rounding `D`.
    pub strict_dims: bool,
    pub arity: usize,
    pub value_count: Option<usize>,
    pub q_method: UnitaryMethod,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for TreeAccuracyConfig {
    fn default() -> Self {
        Self {
            total_dim: 600,
            dim_d: None,
            m_values: vec![1, 2, 3],
            depths: (1..=8).collect(),
            permute: false,
            diagonality_targets: None,
            trials: 25,
            strict_dims: false,
            arity: 2,
            value_count: None,
            q_method: UnitaryMethod::Haar,
            tol: 0.02,
            max_iters: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeRow {
    pub m: usize,
    pub dim_d: usize,
    pub total_dim: usize,
    pub depth: usize,
    pub permuted: bool,
    pub diagonality_target: Option<f64>,
    /// Mean diagonality of the optimized key matrices.
    pub key_diagonality: Option<f64>,
    pub trial: usize,
    pub accuracy: f64,
}

/// Mean decoding accuracy per `(m, depth, diagonality)`, with one row per
/// trial.
pub fn exp_tree_accuracy(cfg: &TreeAccuracyConfig) -> Result<ExperimentRecord<TreeRow>> {
    if cfg.trials == 0 {
        return Err(GhrrError::InvalidConfig("need at least one trial".into()));
    }
    let targets: Vec<Option<f64>> = match &cfg.diagonality_targets {
        None => vec![None],
        Some(ts) => {
            if ts.iter().any(|t| !(0.0..=1.0).contains(t)) {
                return Err(GhrrError::InvalidConfig("diagonality targets must lie in [0, 1]".into()));
            }
            if cfg.m_values.contains(&1) && ts.iter().any(|&t| t < 1.0) {
                return Err(GhrrError::InvalidConfig("m = 1 only admits diagonality 1".into()));
            }
            ts.iter().copied().map(Some).collect()
        }
    };
    let mut points = Vec::new();
    for &m in &cfg.m_values {
        let d = match cfg.dim_d {
            Some(0) => return Err(GhrrError::InvalidDimension("D must be >= 1".into())),
            Some(d) => d,
            None => resolve_d(cfg.total_dim, m, cfg.strict_dims)?,
        };
        for &depth in &cfg.depths {
            let spec = StructureSpec {
                depth,
                arity: cfg.arity,
                value_count: cfg.value_count,
                permute_subtrees: cfg.permute,
                codebook_seed: cfg.seed,
                fresh_keys_per_level: false,
            };
            spec.validate()?;
            for &target in &targets {
                points.push((m, d, spec.clone(), target));
            }
        }
    }

    let units: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..cfg.trials).map(move |t| (p, t)))
        .collect();
    let rows = units
        .par_iter()
        .map(|&(p, trial)| -> Result<TreeRow> {
            let (m, d, spec, target) = &points[p];
            let label = target.map_or("random".to_string(), |t| format!("{t:.6}"));
            let mut r = rng::derived(
                cfg.seed,
                &format!("tree/{m}/{}/{}/{label}/{trial}", spec.depth, spec.permute_subtrees),
            );
            let base = BaseSamplerSpec::new(*d, *m).with_q_method(cfg.q_method);
            let keys = KeySource {
                target: *target,
                tol: cfg.tol,
                max_iters: cfg.max_iters,
            };
            let (book, key_diagonality) = draw_codebook(spec, &base, keys, &mut r)?;
            let h = encode_tree(spec, &book)?;
            Ok(TreeRow {
                m: *m,
                dim_d: *d,
                total_dim: d * m * m,
                depth: spec.depth,
                permuted: spec.permute_subtrees,
                diagonality_target: *target,
                key_diagonality,
                trial,
                accuracy: decode_tree_accuracy(&h, spec, &book)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let curves: Vec<serde_json::Value> = rows
        .chunks(cfg.trials)
        .map(|chunk| {
            let acc: Vec<f64> = chunk.iter().map(|r| r.accuracy).collect();
            let (mean, std) = mean_std(&acc);
            let r = &chunk[0];
            serde_json::json!({
                "m": r.m,
                "dim_d": r.dim_d,
                "depth": r.depth,
                "permuted": r.permuted,
                "diagonality_target": r.diagonality_target,
                "mean": mean,
                "std": std,
                "trials": chunk.len(),
            })
        })
        .collect();
    ExperimentRecord::new("tree-accuracy", cfg, rows, serde_json::json!({ "curves": curves }))
}

/// Mean accuracy per `(m, depth)` from tree rows, in row order.
pub fn curve_means(rows: &[TreeRow], m: usize, target: Option<f64>) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, Vec<f64>)> = Vec::new();
    for r in rows.iter().filter(|r| r.m == m && r.diagonality_target == target) {
        match out.iter_mut().find(|(d, _)| *d == r.depth) {
            Some((_, v)) => v.push(r.accuracy),
            None => out.push((r.depth, vec![r.accuracy])),
        }
    }
    out.into_iter().map(|(d, v)| (d, mean_std(&v).0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedDemoConfig {
    pub dim_d: usize,
    pub dim_m: usize,
    /// Target diagonality for the key matrices; `None` draws Haar `Q_j`.
    pub key_diagonality: Option<f64>,
    pub permute: bool,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl NestedDemoConfig {
    pub fn new(dim_d: usize, dim_m: usize) -> Self {
        Self {
            dim_d,
            dim_m,
            key_diagonality: None,
            permute: false,
            tol: 0.02,
            max_iters: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedDemoRow {
    /// Leaf index, `0..4`, of the decoded approximation `V'`.
    pub decoded: usize,
    pub path: String,
    /// Value index compared against.
    pub value: usize,
    pub similarity: f64,
    pub is_true_value: bool,
}

/// The depth-2, arity-2 dictionary
/// `K1*(K1*V1 + K2*V2) + K2*(K1*V3 + K2*V4)`: every decoded `V_i'` against
/// every value.
pub fn exp_nested_demo(cfg: &NestedDemoConfig) -> Result<ExperimentRecord<NestedDemoRow>> {
    let spec = StructureSpec::new(2).with_permutation(cfg.permute).with_codebook_seed(cfg.seed);
    if cfg.dim_m == 1 && cfg.key_diagonality.is_some_and(|t| t < 1.0) {
        return Err(GhrrError::InvalidConfig("m = 1 only admits diagonality 1".into()));
    }
    let mut r = rng::derived(cfg.seed, "nested-demo");
    let base = BaseSamplerSpec::new(cfg.dim_d, cfg.dim_m);
    let keys = KeySource {
        target: cfg.key_diagonality,
        tol: cfg.tol,
        max_iters: cfg.max_iters,
    };
    let (book, key_diagonality) = draw_codebook(&spec, &base, keys, &mut r)?;
    let h = encode_tree(&spec, &book)?;

    let mut rows = Vec::new();
    let mut leaves = Vec::new();
    for leaf in 0..4 {
        let decoded: Hypervector = decode_leaf(&h, &spec, &book, leaf)?;
        let path = spec
            .leaf_path(leaf)
            .iter()
            .map(|b| format!("K{}", b + 1))
            .collect::<Vec<_>>()
            .join("/");
        let mut sims = Vec::new();
        for (value, v) in book.values.iter().enumerate() {
            let s = similarity(&decoded, v)?;
            sims.push(s);
            rows.push(NestedDemoRow {
                decoded: leaf,
                path: path.clone(),
                value,
                similarity: s,
                is_true_value: value == leaf,
            });
        }
        let argmax = classify(&decoded, &book.values)?;
        leaves.push(serde_json::json!({
            "decoded": leaf,
            "path": path,
            "similarities": sims,
            "argmax": argmax,
            "correct": argmax == Some(leaf),
        }));
    }
    let v2_gap = rows[4 + 1].similarity - rows[4 + 2].similarity;
    ExperimentRecord::new(
        "demo-nested",
        cfg,
        rows,
        serde_json::json!({
            "leaves": leaves,
            "key_diagonality": key_diagonality,
            "v2_minus_v3": v2_gap,
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_one_decodes_perfectly() {
        let cfg = TreeAccuracyConfig {
            depths: vec![1],
            trials: 3,
            ..Default::default()
        };
        let rec = exp_tree_accuracy(&cfg).unwrap();
        assert_eq!(rec.rows.len(), 9);
        assert!(rec.rows.iter().all(|r| r.accuracy == 1.0));
        assert_eq!(rec.rows[6].dim_d, 67);
    }

    #[test]
    fn strict_dims_reject_indivisible_totals() {
        let cfg = TreeAccuracyConfig {
            depths: vec![1],
            trials: 1,
            strict_dims: true,
            ..Default::default()
        };
        assert!(exp_tree_accuracy(&cfg).is_err());
    }

    #[test]
    fn deterministic_rows() {
        let cfg = TreeAccuracyConfig {
            m_values: vec![2],
            depths: vec![3],
            trials: 4,
            diagonality_targets: Some(vec![0.5]),
            seed: 11,
            ..Default::default()
        };
        let a = exp_tree_accuracy(&cfg).unwrap().to_csv_string().unwrap();
        let b = exp_tree_accuracy(&cfg).unwrap().to_csv_string().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nested_demo_peaks() {
        let mut cfg = NestedDemoConfig::new(200, 3);
        cfg.seed = 7;
        let rec = exp_nested_demo(&cfg).unwrap();
        assert_eq!(rec.rows.len(), 16);
        for leaf in rec.summary["leaves"].as_array().unwrap() {
            assert_eq!(leaf["correct"], true, "{leaf}");
        }
    }
}
