//! Fast invariant suite behind the `selftest` subcommand.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::encoder::{EncoderConfig, FreqDist};
use crate::error::Result;
use crate::experiments::memorized;
use crate::hdalg::{
    bind, bundle, bundle_all, degree_of_commutativity, inverse, permute, sample_base, sample_with_q, similarity,
    tensor_view, AngleDist, BaseSamplerSpec, Hypervector, QMode,
};
use crate::matalg::{diagonality, haar_unitary, sample_unitary, DiagonalPhases, DiagonalityOptimizer, UnitaryMethod};
use crate::rng::{self, GhrrRng};
use crate::structures::{decode_tree_accuracy, encode_tree, Codebook, StructureSpec};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }
}

type Check = fn(&mut GhrrRng) -> Result<(bool, String)>;

const CHECKS: &[(&str, Check)] = &[
    ("unitary-sampling", unitary_sampling),
    ("self-similarity", self_similarity),
    ("binding-preserves-similarity", binding_preserves_similarity),
    ("unbinding-recovers", unbinding_recovers),
    ("fhrr-scalar-reference", fhrr_scalar_reference),
    ("commutativity-m1-and-diagonal", commutativity_m1_and_diagonal),
    ("non-commutativity-m3", non_commutativity_m3),
    ("permutation", permutation),
    ("quasi-orthogonality", quasi_orthogonality),
    ("bundling-keeps-members", bundling_keeps_members),
    ("tensor-view", tensor_view_roundtrip),
    ("serialization", serialization),
    ("kernel", kernel),
    ("diagonality-optimizer", diagonality_optimizer),
    ("tree-depth-1", tree_depth_one),
    ("memorized", memorized_basic),
];

/// Runs every check on its own stream derived from `seed`.
pub fn run_selftest(seed: u64) -> SelftestReport {
    let checks = CHECKS
        .iter()
        .map(|(name, check)| {
            let mut r = rng::derived(seed, &format!("selftest/{name}"));
            let (passed, detail) = match check(&mut r) {
                Ok(v) => v,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckResult {
                name: (*name).to_string(),
                passed,
                detail,
            }
        })
        .collect();
    SelftestReport { seed, checks }
}

fn bases(r: &mut GhrrRng, d: usize, m: usize, n: usize) -> Result<Vec<Hypervector>> {
    let spec = BaseSamplerSpec::new(d, m);
    (0..n).map(|_| sample_base(&spec, r)).collect()
}

fn unitary_sampling(r: &mut GhrrRng) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for m in 1..=6 {
        for method in [UnitaryMethod::Haar, UnitaryMethod::HermitianExp] {
            worst = worst.max(sample_unitary(m, method, r)?.unitarity_error());
        }
    }
    Ok((worst < 1e-10, format!("max |Q^†Q - I| = {worst:.1e}")))
}

fn self_similarity(r: &mut GhrrRng) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for m in 1..=4 {
        let h = &bases(r, 32, m, 1)?[0];
        worst = worst.max((similarity(h, h)? - 1.0).abs());
    }
    Ok((worst < 1e-12, format!("max |delta(H,H) - 1| = {worst:.1e}")))
}

fn binding_preserves_similarity(r: &mut GhrrRng) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for m in 1..=4 {
        let hs = bases(r, 32, m, 3)?;
        let base = similarity(&hs[0], &hs[1])?;
        let left = similarity(&bind(&hs[2], &hs[0])?, &bind(&hs[2], &hs[1])?)?;
        let right = similarity(&bind(&hs[0], &hs[2])?, &bind(&hs[1], &hs[2])?)?;
        worst = worst.max((left - base).abs()).max((right - base).abs());
    }
    Ok((worst < 1e-12, format!("max deviation {worst:.1e}")))
}

fn unbinding_recovers(r: &mut GhrrRng) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for m in 1..=4 {
        let hs = bases(r, 32, m, 2)?;
        let back = bind(&inverse(&hs[0])?, &bind(&hs[0], &hs[1])?)?;
        worst = worst.max(back.max_abs_diff(&hs[1]));
    }
    Ok((worst < 1e-10, format!("max |K^-1 * (K * V) - V| = {worst:.1e}")))
}

fn fhrr_scalar_reference(r: &mut GhrrRng) -> Result<(bool, String)> {
    let d = 64;
    let a: Vec<f64> = (0..d).map(|_| r.gen_range(-PI..PI)).collect();
    let b: Vec<f64> = (0..d).map(|_| r.gen_range(-PI..PI)).collect();
    let ha = Hypervector::from_raw(d, 1, a.iter().map(|&t| Complex64::from_polar(1.0, t)).collect(), true)?;
    let hb = Hypervector::from_raw(d, 1, b.iter().map(|&t| Complex64::from_polar(1.0, t)).collect(), true)?;
    let bound = bind(&ha, &hb)?;
    let mut worst: f64 = 0.0;
    for j in 0..d {
        worst = worst.max((bound.as_slice()[j] - Complex64::from_polar(1.0, a[j] + b[j])).norm());
    }
    let want = a.iter().zip(&b).map(|(x, y)| (x - y).cos()).sum::<f64>() / d as f64;
    worst = worst.max((similarity(&ha, &hb)? - want).abs());
    Ok((worst < 1e-12, format!("max deviation from e^(i(a+b)) and mean cos(a-b): {worst:.1e}")))
}

fn commutativity_m1_and_diagonal(r: &mut GhrrRng) -> Result<(bool, String)> {
    let hs = bases(r, 32, 1, 2)?;
    let mut worst = (degree_of_commutativity(&hs[0], &hs[1])? - 1.0).abs();
    for m in 2..=4 {
        let mut diag = || DiagonalPhases::new((0..m).map(|_| r.gen_range(-PI..PI)).collect()).to_matrix();
        let (q1, q2) = (diag(), diag());
        let h1 = sample_with_q(&q1, 16, &AngleDist::Uniform, r)?;
        let h2 = sample_with_q(&q2, 16, &AngleDist::Uniform, r)?;
        worst = worst.max((degree_of_commutativity(&h1, &h2)? - 1.0).abs());
    }
    Ok((worst < 1e-12, format!("max |1 - commutativity| = {worst:.1e}")))
}

fn non_commutativity_m3(r: &mut GhrrRng) -> Result<(bool, String)> {
    let hs = bases(r, 200, 3, 2)?;
    let c = degree_of_commutativity(&hs[0], &hs[1])?;
    Ok((c.abs() < 0.2, format!("commutativity of Haar m=3 pair = {c:.4}")))
}

fn permutation(r: &mut GhrrRng) -> Result<(bool, String)> {
    let h = &bases(r, 500, 2, 1)?[0];
    let full = permute(h, 500).max_abs_diff(h);
    let back = permute(&permute(h, 7), -7).max_abs_diff(h);
    let s = similarity(&permute(h, 1), h)?;
    let ok = full == 0.0 && back == 0.0 && s.abs() < 0.1;
    Ok((ok, format!("rho^D = id, rho^-k rho^k = id, delta(rho(H), H) = {s:.4}")))
}

fn quasi_orthogonality(r: &mut GhrrRng) -> Result<(bool, String)> {
    let mut sims = Vec::new();
    for _ in 0..50 {
        let hs = bases(r, 500, 2, 2)?;
        sims.push(similarity(&hs[0], &hs[1])?);
    }
    let mean = sims.iter().sum::<f64>() / sims.len() as f64;
    let max = sims.iter().fold(0.0f64, |a, s| a.max(s.abs()));
    Ok((mean.abs() < 0.02 && max < 0.1, format!("mean {mean:+.4}, max |delta| {max:.4}")))
}

fn bundling_keeps_members(r: &mut GhrrRng) -> Result<(bool, String)> {
    let hs = bases(r, 400, 2, 6)?;
    let b = bundle_all(&hs[..5])?.expect("non-empty");
    let pair = bundle(&hs[0], &hs[1])?;
    let member = similarity(&hs[0], &b)?;
    let outsider = similarity(&hs[5], &b)?;
    let pair_sim = similarity(&hs[0], &pair)?;
    let ok = member > 0.8 && outsider.abs() < 0.3 && pair_sim > 0.8;
    Ok((ok, format!("member {member:.3}, outsider {outsider:.3}, pair member {pair_sim:.3}")))
}

fn tensor_view_roundtrip(r: &mut GhrrRng) -> Result<(bool, String)> {
    let m = 3;
    let (q, rr) = (haar_unitary(m, r), haar_unitary(m, r));
    let lam = DiagonalPhases::new((0..m).map(|_| r.gen_range(-PI..PI)).collect());
    let eta = DiagonalPhases::new((0..m).map(|_| r.gen_range(-PI..PI)).collect());
    let view = tensor_view(&q, &rr, &lam, &eta)?;
    let (l, e) = (lam.phases(), eta.phases());
    let mut worst: f64 = 0.0;
    for n in 0..m {
        for k in 0..m {
            worst = worst.max((view.reconstructed_outer.get(n, k) - l[n] * e[k]).norm());
        }
    }
    Ok((worst < 1e-10, format!("max |outer - lambda eta^T| = {worst:.1e}")))
}

fn serialization(r: &mut GhrrRng) -> Result<(bool, String)> {
    let h = &bases(r, 8, 3, 1)?[0];
    let bin = Hypervector::from_binary(&h.to_binary())?;
    let json = Hypervector::from_json(&h.to_json()?)?;
    let ok = bin.max_abs_diff(h) == 0.0 && json.max_abs_diff(h) == 0.0 && bin.is_unitary();
    Ok((ok, "binary and JSON round trips are exact".to_string()))
}

fn kernel(r: &mut GhrrRng) -> Result<(bool, String)> {
    let enc = EncoderConfig::new(1, 2000, 2)
        .with_q_mode(QMode::Varying)
        .with_freq_dist(FreqDist::default())
        .build(r)?;
    let x = enc.encode(&[0.3])?;
    let y = enc.encode(&[1.3])?;
    let k = similarity(&x, &y)?;
    let want = (-0.5f64).exp();
    let self_k = similarity(&x, &x)?;
    let ok = (k - want).abs() < 0.07 && (self_k - 1.0).abs() < 1e-12;
    Ok((ok, format!("K(1) = {k:.4} vs exp(-1/2) = {want:.4}")))
}

fn diagonality_optimizer(r: &mut GhrrRng) -> Result<(bool, String)> {
    let opt = DiagonalityOptimizer::default();
    let mut worst: f64 = 0.0;
    for target in [0.0, 0.5, 1.0] {
        let q = opt.run(3, target, r)?.q;
        worst = worst.max((diagonality(&q)? - target).abs());
        if q.unitarity_error() > 1e-10 {
            return Ok((false, "optimizer returned a non-unitary matrix".to_string()));
        }
    }
    Ok((worst <= opt.tol, format!("max |diagonality - target| = {worst:.4}")))
}

fn tree_depth_one(r: &mut GhrrRng) -> Result<(bool, String)> {
    let spec = StructureSpec::new(1).with_arity(4);
    let book = Codebook::sample(&spec, &BaseSamplerSpec::new(100, 2), r)?;
    let acc = decode_tree_accuracy(&encode_tree(&spec, &book)?, &spec, &book)?;
    Ok((acc == 1.0, format!("depth-1 arity-4 accuracy {acc}")))
}

fn memorized_basic(r: &mut GhrrRng) -> Result<(bool, String)> {
    let hs = bases(r, 100, 3, 12)?;
    let c1 = bundle_all(&hs[..6])?.expect("non-empty");
    let c2 = bundle_all(&hs[6..])?.expect("non-empty");
    let ok = memorized(&hs[..6], &c1, &c2)? && memorized(&hs[..3], &c1, &c2)? && memorized(&[], &c1, &c2)?;
    Ok((ok, "small bundles memorized, subsets and the empty set too".to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_check_passes() {
        let report = run_selftest(0);
        for c in &report.checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
        assert_eq!(report.checks.len(), CHECKS.len());
    }

    #[test]
    fn other_seeds_pass_too() {
        for seed in 1..4 {
            assert!(run_selftest(seed).all_passed());
        }
    }
}
