use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{resolve_d, ExperimentRecord};
use crate::error::{GhrrError, Result};
use crate::hdalg::{bind, bundle_all, similarity, BaseSampler, BaseSamplerSpec, Hypervector};
use crate::matalg::UnitaryMethod;
use crate::rng;

/// True iff every `x` is strictly more similar to `c1` than to `c2`. An empty
/// set is vacuously memorized.
pub fn memorized(x_set: &[Hypervector], c1: &Hypervector, c2: &Hypervector) -> Result<bool> {
    for x in x_set {
        if similarity(x, c1)? <= similarity(x, c2)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityConfig {
    /// Bound components per stored string.
    pub n_components: usize,
    /// Defaults to the smallest `a` with `a^n >= 15000`.
    pub alphabet_size: Option<usize>,
    pub total_dims: Vec<usize>,
    pub m_values: Vec<usize>,
    /// When false, strings equal up to reordering are never both sampled.
    pub permutations_distinct: bool,
    /// Seeds per probed `N`; a probe passes on a strict majority.
    pub trials: usize,
    pub strict_dims: bool,
    pub q_method: UnitaryMethod,
    pub seed: u64,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        Self {
            n_components: 1,
            alphabet_size: None,
            total_dims: vec![150, 300, 600, 900],
            m_values: vec![1, 2, 3],
            permutations_distinct: true,
            trials: 5,
            strict_dims: false,
            q_method: UnitaryMethod::Haar,
            seed: 0,
        }
    }
}

impl CapacityConfig {
    pub fn alphabet(&self) -> usize {
        self.alphabet_size.unwrap_or_else(|| {
            let n = self.n_components.max(1) as u32;
            let mut a = (15000f64.powf(1.0 / f64::from(n))).floor() as usize;
            while (a as u128).pow(n) < 15000 {
                a += 1;
            }
            a
        })
    }

    /// Number of distinct strings under the configured equivalence.
    pub fn string_count(&self) -> u128 {
        let a = self.alphabet() as u128;
        let n = self.n_components as u128;
        if self.permutations_distinct {
            a.pow(n as u32)
        } else {
            // multisets of size n from a symbols: C(a + n - 1, n)
            (0..n).fold(1u128, |acc, i| acc * (a + i) / (i + 1))
        }
    }

    /// Largest `N` with `2N` distinct strings available.
    pub fn max_n(&self) -> usize {
        usize::try_from(self.string_count() / 2).unwrap_or(usize::MAX)
    }

    fn validate(&self) -> Result<()> {
        if self.n_components == 0 {
            return Err(GhrrError::InvalidConfig("need at least one bound component".into()));
        }
        if self.alphabet() < 1 {
            return Err(GhrrError::InvalidConfig("alphabet must be non-empty".into()));
        }
        if self.trials == 0 {
            return Err(GhrrError::InvalidConfig("need at least one trial".into()));
        }
        Ok(())
    }
}

/// One memorization test at a probed bundle size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub n_components: usize,
    pub permutations_distinct: bool,
    pub total_dim: usize,
    pub m: usize,
    pub dim_d: usize,
    pub n: usize,
    pub trial: usize,
    pub memorized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityRow {
    pub n_components: usize,
    pub permutations_distinct: bool,
    pub total_dim: usize,
    pub m: usize,
    pub dim_d: usize,
    pub capacity: usize,
    /// The search hit the number of available strings.
    pub saturated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacityStats {
    /// Per-trial probe rows; the summary holds the capacity table.
    pub record: ExperimentRecord<ProbeRow>,
    pub capacities: Vec<CapacityRow>,
}

/// `2n` distinct strings as alphabet indices.
fn sample_strings<R: Rng + ?Sized>(cfg: &CapacityConfig, count: usize, r: &mut R) -> Vec<Vec<usize>> {
    let a = cfg.alphabet();
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let s: Vec<usize> = (0..cfg.n_components).map(|_| r.gen_range(0..a)).collect();
        let mut canon = s.clone();
        if !cfg.permutations_distinct {
            canon.sort_unstable();
        }
        if seen.insert(canon) {
            out.push(s);
        }
    }
    out
}

/// One trial: `X` is the first half of `2N` bound strings, `X'` the second.
fn probe(cfg: &CapacityConfig, total: usize, m: usize, d: usize, n: usize, trial: usize) -> Result<bool> {
    let key = format!(
        "capacity/{}/{}/{total}/{m}/{n}/{trial}",
        cfg.n_components, cfg.permutations_distinct
    );
    let mut r = rng::derived(cfg.seed, &key);
    let strings = sample_strings(cfg, 2 * n, &mut r);
    let spec = BaseSamplerSpec::new(d, m).with_q_method(cfg.q_method);
    let sampler = BaseSampler::new(spec, &mut r)?;

    // alphabet members are drawn lazily, each from its own stream
    let mut alphabet: BTreeMap<usize, Hypervector> = BTreeMap::new();
    for &i in strings.iter().flatten() {
        alphabet
            .entry(i)
            .or_insert_with(|| sampler.sample(&mut rng::derived(cfg.seed, &format!("{key}/alphabet/{i}"))));
    }
    let bound = strings
        .iter()
        .map(|s| {
            let mut h = alphabet[&s[0]].clone();
            for i in &s[1..] {
                h = bind(&h, &alphabet[i])?;
            }
            Ok(h)
        })
        .collect::<Result<Vec<_>>>()?;
    let (x, x_other) = bound.split_at(n);
    let c1 = bundle_all(x)?.expect("n >= 1");
    let c2 = bundle_all(x_other)?.expect("n >= 1");
    memorized(x, &c1, &c2)
}

/// Largest `N` whose probes pass on a majority of trials, found by doubling
/// then bisection.
fn search(cfg: &CapacityConfig, total: usize, m: usize, rows: &mut Vec<ProbeRow>) -> Result<CapacityRow> {
    let d = resolve_d(total, m, cfg.strict_dims)?;
    let max_n = cfg.max_n();
    let mut pass = |n: usize| -> Result<bool> {
        let results = (0..cfg.trials)
            .into_par_iter()
            .map(|t| probe(cfg, total, m, d, n, t))
            .collect::<Result<Vec<bool>>>()?;
        for (trial, &memorized) in results.iter().enumerate() {
            rows.push(ProbeRow {
                n_components: cfg.n_components,
                permutations_distinct: cfg.permutations_distinct,
                total_dim: total,
                m,
                dim_d: d,
                n,
                trial,
                memorized,
            });
        }
        Ok(2 * results.iter().filter(|&&b| b).count() > cfg.trials)
    };

    if max_n == 0 {
        return Err(GhrrError::InvalidConfig("alphabet too small for a single pair of strings".into()));
    }
    let (mut lo, mut hi) = (0usize, None);
    let mut n = 1usize;
    while n <= max_n {
        if pass(n)? {
            lo = n;
            n = n.saturating_mul(2);
        } else {
            hi = Some(n);
            break;
        }
    }
    let saturated = match hi {
        Some(_) => false,
        None if lo == max_n => true,
        None => {
            // doubling overshot the string budget: probe the budget itself
            if pass(max_n)? {
                lo = max_n;
                true
            } else {
                hi = Some(max_n);
                false
            }
        }
    };
    if let Some(mut hi) = hi {
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if pass(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    Ok(CapacityRow {
        n_components: cfg.n_components,
        permutations_distinct: cfg.permutations_distinct,
        total_dim: total,
        m,
        dim_d: d,
        capacity: lo,
        saturated,
    })
}

/// Memorization capacity for every `(total_dim, m)` pair.
pub fn exp_capacity(cfg: &CapacityConfig) -> Result<CapacityStats> {
    cfg.validate()?;
    let points: Vec<(usize, usize)> = cfg
        .total_dims
        .iter()
        .flat_map(|&t| cfg.m_values.iter().map(move |&m| (t, m)))
        .collect();
    let results = points
        .par_iter()
        .map(|&(t, m)| {
            let mut rows = Vec::new();
            let cap = search(cfg, t, m, &mut rows)?;
            Ok((cap, rows))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut probes = Vec::new();
    let mut capacities = Vec::new();
    for (cap, rows) in results {
        capacities.push(cap);
        probes.extend(rows);
    }
    let summary = serde_json::json!({
        "alphabet_size": cfg.alphabet(),
        "string_count": cfg.string_count().to_string(),
        "capacities": capacities,
    });
    Ok(CapacityStats {
        record: ExperimentRecord::new("capacity", cfg, probes, summary)?,
        capacities,
    })
}
