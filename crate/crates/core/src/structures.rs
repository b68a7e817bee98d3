//! Dictionaries and trees encoded by binding keys to values and bundling.
//!
//! A depth-`L` tree with arity `a` has `a^L` leaves. A node is
//! `sum_b K_b * child_b`; with `permute_subtrees` each child is rotated by one
//! position first, `sum_b K_b * rho(child_b)`. A leaf is reached by unbinding
//! the keys on its path outermost first and, for permuted trees, undoing the
//! rotation after each step.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GhrrError, Result};
use crate::hdalg::{bind, inverse, permute, similarity, BaseSampler, BaseSamplerSpec, Hypervector};

/// Largest supported leaf count.
pub const MAX_LEAVES: usize = 1 << 20;
/// Codebook entries must be pairwise below this `|similarity|`.
pub const ORTHO_THRESHOLD: f64 = 0.1;
/// Rounds of re-drawing offending codebook entries.
pub const MAX_RESAMPLES: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureSpec {
    pub depth: usize,
    pub arity: usize,
    /// Distinct leaf values; `None` gives one value per leaf.
    pub value_count: Option<usize>,
    pub permute_subtrees: bool,
    pub codebook_seed: u64,
    /// Use a separate key set at every level instead of reusing one set.
    pub fresh_keys_per_level: bool,
}

impl StructureSpec {
    pub fn new(depth: usize) -> Self {
        Self {
            depth,
            arity: 2,
            value_count: None,
            permute_subtrees: false,
            codebook_seed: 0,
            fresh_keys_per_level: false,
        }
    }

    pub fn with_arity(mut self, arity: usize) -> Self {
        self.arity = arity;
        self
    }

    pub fn with_value_count(mut self, count: usize) -> Self {
        self.value_count = Some(count);
        self
    }

    pub fn with_permutation(mut self, permute: bool) -> Self {
        self.permute_subtrees = permute;
        self
    }

    pub fn with_codebook_seed(mut self, seed: u64) -> Self {
        self.codebook_seed = seed;
        self
    }

    pub fn with_fresh_keys(mut self, fresh: bool) -> Self {
        self.fresh_keys_per_level = fresh;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth < 1 {
            return Err(GhrrError::InvalidConfig("tree depth must be >= 1".into()));
        }
        if self.arity < 2 {
            return Err(GhrrError::InvalidConfig("tree arity must be >= 2".into()));
        }
        if self.value_count == Some(0) {
            return Err(GhrrError::InvalidConfig("value_count must be >= 1".into()));
        }
        self.leaf_count().map(|_| ())
    }

    /// `arity^depth`, or an error past [`MAX_LEAVES`].
    pub fn leaf_count(&self) -> Result<usize> {
        u32::try_from(self.depth)
            .ok()
            .and_then(|d| self.arity.checked_pow(d))
            .filter(|&n| n <= MAX_LEAVES)
            .ok_or_else(|| {
                GhrrError::InvalidConfig(format!(
                    "arity {} at depth {} exceeds {MAX_LEAVES} leaves",
                    self.arity, self.depth
                ))
            })
    }

    pub fn n_keys(&self) -> usize {
        if self.fresh_keys_per_level {
            self.arity * self.depth
        } else {
            self.arity
        }
    }

    pub fn n_values(&self) -> Result<usize> {
        Ok(self.value_count.unwrap_or(self.leaf_count()?))
    }

    /// Index into `Codebook::keys` for branch `b` at `level` (0 is the root).
    pub fn key_index(&self, level: usize, branch: usize) -> usize {
        if self.fresh_keys_per_level {
            level * self.arity + branch
        } else {
            branch
        }
    }

    /// Branches from root to `leaf`, where leaves are numbered in
    /// depth-first order.
    pub fn leaf_path(&self, leaf: usize) -> Vec<usize> {
        let mut path = vec![0; self.depth];
        let mut rest = leaf;
        for slot in path.iter_mut().rev() {
            *slot = rest % self.arity;
            rest /= self.arity;
        }
        path
    }

    /// Value assigned to `leaf`, cycling through the codebook.
    pub fn value_index(&self, leaf: usize) -> Result<usize> {
        Ok(leaf % self.n_values()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryKind {
    Key,
    Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Codebook {
    pub keys: Vec<Hypervector>,
    pub values: Vec<Hypervector>,
    pub labels: Vec<String>,
    /// Largest pairwise `|similarity|` among all entries.
    pub max_abs_similarity: f64,
    /// Re-draw rounds spent; `MAX_RESAMPLES` with `max_abs_similarity` at or
    /// above the threshold means the target was not reached.
    pub resample_rounds: usize,
}

impl Codebook {
    /// Wraps given keys and values without re-drawing.
    pub fn from_parts(keys: Vec<Hypervector>, values: Vec<Hypervector>) -> Result<Self> {
        let first = keys
            .first()
            .or(values.first())
            .ok_or_else(|| GhrrError::InvalidConfig("empty codebook".into()))?;
        let (d, m) = (first.dim_d(), first.dim_m());
        for h in keys.iter().chain(&values) {
            if (h.dim_d(), h.dim_m()) != (d, m) {
                return Err(GhrrError::ShapeMismatch {
                    d1: d,
                    m1: m,
                    d2: h.dim_d(),
                    m2: h.dim_m(),
                });
            }
        }
        if keys.iter().any(|k| !k.is_unitary()) {
            return Err(GhrrError::NotUnitary);
        }
        let all: Vec<&Hypervector> = keys.iter().chain(&values).collect();
        let max_abs_similarity = max_pairwise(&all);
        let labels = (0..values.len()).map(|i| format!("v{}", i + 1)).collect();
        Ok(Self {
            keys,
            values,
            labels,
            max_abs_similarity,
            resample_rounds: 0,
        })
    }

    /// Keys and values from one base sampler.
    pub fn sample<R: Rng + ?Sized>(spec: &StructureSpec, base: &BaseSamplerSpec, rng: &mut R) -> Result<Self> {
        let sampler = BaseSampler::new(base.clone(), rng)?;
        Self::sample_with(spec, |_, r: &mut R| Ok(sampler.sample(r)), rng)
    }

    /// Draws `n_keys` keys then `n_values` values with `draw`, then re-draws
    /// entries whose similarity to an earlier entry reaches
    /// [`ORTHO_THRESHOLD`], for up to [`MAX_RESAMPLES`] rounds.
    pub fn sample_with<R, F>(spec: &StructureSpec, mut draw: F, rng: &mut R) -> Result<Self>
    where
        R: Rng + ?Sized,
        F: FnMut(EntryKind, &mut R) -> Result<Hypervector>,
    {
        spec.validate()?;
        let n_keys = spec.n_keys();
        let n_values = spec.n_values()?;
        let kind = |i: usize| if i < n_keys { EntryKind::Key } else { EntryKind::Value };
        let mut entries = (0..n_keys + n_values)
            .map(|i| draw(kind(i), rng))
            .collect::<Result<Vec<_>>>()?;

        let mut suspects: Vec<usize> = (0..entries.len()).collect();
        let mut rounds = 0;
        while rounds < MAX_RESAMPLES {
            let offending = offending_entries(&entries, &suspects);
            if offending.is_empty() {
                break;
            }
            rounds += 1;
            for &i in &offending {
                entries[i] = draw(kind(i), rng)?;
            }
            suspects = offending;
        }
        let values = entries.split_off(n_keys);
        let mut book = Self::from_parts(entries, values)?;
        book.resample_rounds = rounds;
        Ok(book)
    }

    pub fn shape(&self) -> (usize, usize) {
        let h = self.keys.first().or(self.values.first()).expect("non-empty by construction");
        (h.dim_d(), h.dim_m())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Indices `j` in `suspects` with `|similarity(e_i, e_j)| >= threshold` for
/// some other entry `i`; when both are suspects only the later one is listed.
fn offending_entries(entries: &[Hypervector], suspects: &[usize]) -> Vec<usize> {
    let is_suspect = {
        let mut v = vec![false; entries.len()];
        for &s in suspects {
            v[s] = true;
        }
        v
    };
    suspects
        .par_iter()
        .copied()
        .filter(|&j| {
            entries.iter().enumerate().any(|(i, e)| {
                i != j
                    && !(is_suspect[i] && i > j)
                    && similarity(e, &entries[j]).map_or(true, |s| s.abs() >= ORTHO_THRESHOLD)
            })
        })
        .collect()
}

fn max_pairwise(all: &[&Hypervector]) -> f64 {
    (0..all.len())
        .into_par_iter()
        .map(|i| {
            (i + 1..all.len())
                .map(|j| similarity(all[i], all[j]).map_or(f64::INFINITY, f64::abs))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// `sum_i k_i * v_i`; the zero hypervector of the given shape when empty.
pub fn encode_dict(dim_d: usize, dim_m: usize, pairs: &[(&Hypervector, &Hypervector)]) -> Result<Hypervector> {
    let mut acc = Hypervector::zeros(dim_d, dim_m);
    for (k, v) in pairs {
        if !k.is_unitary() {
            return Err(GhrrError::NotUnitary);
        }
        acc.accumulate(&bind(k, v)?)?;
    }
    Ok(acc)
}

/// Unbinds each key in turn, outermost first: path `[K_a, K_b]` gives
/// `K_b^-1 * (K_a^-1 * h)`.
pub fn retrieve(h: &Hypervector, key_path: &[&Hypervector]) -> Result<Hypervector> {
    retrieve_with(h, key_path, false)
}

/// [`retrieve`], undoing one rotation after each unbinding when `permuted`.
pub fn retrieve_with(h: &Hypervector, key_path: &[&Hypervector], permuted: bool) -> Result<Hypervector> {
    let mut out = h.clone();
    for k in key_path {
        out = bind(&inverse(k)?, &out)?;
        if permuted {
            out = permute(&out, -1);
        }
    }
    Ok(out)
}

fn check_codebook(spec: &StructureSpec, book: &Codebook) -> Result<()> {
    spec.validate()?;
    if book.keys.len() < spec.n_keys() {
        return Err(GhrrError::InvalidConfig(format!(
            "spec needs {} keys, codebook has {}",
            spec.n_keys(),
            book.keys.len()
        )));
    }
    if book.values.len() < spec.n_values()? {
        return Err(GhrrError::InvalidConfig(format!(
            "spec needs {} values, codebook has {}",
            spec.n_values()?,
            book.values.len()
        )));
    }
    Ok(())
}

pub fn encode_tree(spec: &StructureSpec, book: &Codebook) -> Result<Hypervector> {
    check_codebook(spec, book)?;
    encode_node(spec, book, 0, 0)
}

fn encode_node(spec: &StructureSpec, book: &Codebook, level: usize, prefix: usize) -> Result<Hypervector> {
    if level == spec.depth {
        return Ok(book.values[spec.value_index(prefix)?].clone());
    }
    let (d, m) = book.shape();
    let mut acc = Hypervector::zeros(d, m);
    for b in 0..spec.arity {
        let mut child = encode_node(spec, book, level + 1, prefix * spec.arity + b)?;
        if spec.permute_subtrees {
            child = permute(&child, 1);
        }
        acc.accumulate(&bind(&book.keys[spec.key_index(level, b)], &child)?)?;
    }
    Ok(acc)
}

/// The noisy reconstruction of `leaf`.
pub fn decode_leaf(h: &Hypervector, spec: &StructureSpec, book: &Codebook, leaf: usize) -> Result<Hypervector> {
    let path: Vec<&Hypervector> = spec
        .leaf_path(leaf)
        .iter()
        .enumerate()
        .map(|(level, &b)| &book.keys[spec.key_index(level, b)])
        .collect();
    retrieve_with(h, &path, spec.permute_subtrees)
}

/// Index of the unique most similar candidate; `None` on a tie.
pub fn classify(query: &Hypervector, candidates: &[Hypervector]) -> Result<Option<usize>> {
    let mut best: Option<(usize, f64)> = None;
    let mut tied = false;
    for (i, c) in candidates.iter().enumerate() {
        let s = similarity(query, c)?;
        match best {
            Some((_, b)) if s < b => {}
            Some((_, b)) if s == b => tied = true,
            _ => {
                best = Some((i, s));
                tied = false;
            }
        }
    }
    Ok(if tied { None } else { best.map(|(i, _)| i) })
}

/// Fraction of leaves whose decoding has its unique argmax over all codebook
/// values at the leaf's own value.
pub fn decode_tree_accuracy(h: &Hypervector, spec: &StructureSpec, book: &Codebook) -> Result<f64> {
    check_codebook(spec, book)?;
    let leaves = spec.leaf_count()?;
    let n_values = spec.n_values()?;
    let values = &book.values[..n_values];
    let correct = (0..leaves)
        .into_par_iter()
        .map(|leaf| -> Result<usize> {
            let decoded = decode_leaf(h, spec, book, leaf)?;
            let want = spec.value_index(leaf)?;
            Ok(usize::from(classify(&decoded, values)? == Some(want)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(correct as f64 / leaves as f64)
}
