//! Base hypervector sampling: element `j` is `Q_j diag(e^{i theta_j1}, ...)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Hypervector;
use crate::error::{GhrrError, Result};
use crate::matalg::{sample_unitary, ComplexMatrix, UnitaryMethod};
use crate::rng;

/// Whether the unitary factor is the same for every element position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum QMode {
    /// One `Q` for every position of every hypervector drawn from a sampler.
    Shared,
    /// A fresh `Q_j` for every position of every hypervector.
    #[default]
    Varying,
}

impl std::str::FromStr for QMode {
    type Err = GhrrError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shared" => Ok(Self::Shared),
            "varying" => Ok(Self::Varying),
            other => Err(GhrrError::InvalidConfig(format!("unknown Q mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for QMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Shared => "shared",
            Self::Varying => "varying",
        })
    }
}

/// Distribution of the diagonal phase angles. Valid choices have
/// `E[e^{i theta}] = 0`, which is what makes independent samples
/// quasi-orthogonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AngleDist {
    /// Uniform on `[0, 2 pi)`.
    #[default]
    Uniform,
    /// Uniform on `[lo, hi)`.
    UniformRange { lo: f64, hi: f64 },
    /// Uniform over the `order`-th roots of unity.
    RootsOfUnity { order: u32 },
    /// Normal angles with standard deviation `sigma`; only valid in the
    /// limit, so it is always rejected. Present for completeness of the menu.
    WrappedNormal { sigma: f64 },
}

impl AngleDist {
    /// `|E[e^{i theta}]|`, computed in closed form.
    pub fn first_moment_modulus(&self) -> f64 {
        match *self {
            AngleDist::Uniform => 0.0,
            AngleDist::UniformRange { lo, hi } => {
                let w = hi - lo;
                if w <= 0.0 {
                    return 1.0;
                }
                // |(e^{i hi} - e^{i lo}) / (i w)| = |2 sin(w/2) / w|
                let half = 0.5 * w;
                let k = (w / TAU).round();
                if (w - k * TAU).abs() < 1e-12 && k >= 1.0 {
                    0.0
                } else {
                    (half.sin() / half).abs()
                }
            }
            AngleDist::RootsOfUnity { order } => {
                if order >= 2 {
                    0.0
                } else {
                    1.0
                }
            }
            AngleDist::WrappedNormal { sigma } => (-0.5 * sigma * sigma).exp(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mu = self.first_moment_modulus();
        if mu > 1e-12 {
            return Err(GhrrError::InvalidDistribution(format!(
                "{self:?} has |E[exp(i theta)]| = {mu:.3e}; quasi-orthogonality needs 0"
            )));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            AngleDist::Uniform => rng.gen_range(0.0..TAU),
            AngleDist::UniformRange { lo, hi } => rng.gen_range(lo..hi),
            AngleDist::RootsOfUnity { order } => {
                TAU * f64::from(rng.gen_range(0..order.max(1))) / f64::from(order.max(1))
            }
            AngleDist::WrappedNormal { sigma } => Normal::new(0.0, sigma.max(0.0))
                .map(|n| n.sample(rng))
                .unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseSamplerSpec {
    pub dim_d: usize,
    pub dim_m: usize,
    pub q_mode: QMode,
    pub q_method: UnitaryMethod,
    pub angle_dist: AngleDist,
    pub seed: u64,
}

impl BaseSamplerSpec {
    pub fn new(dim_d: usize, dim_m: usize) -> Self {
        Self {
            dim_d,
            dim_m,
            q_mode: QMode::Varying,
            q_method: UnitaryMethod::Haar,
            angle_dist: AngleDist::Uniform,
            seed: 0,
        }
    }

    pub fn with_q_mode(mut self, q_mode: QMode) -> Self {
        self.q_mode = q_mode;
        self
    }

    pub fn with_q_method(mut self, q_method: UnitaryMethod) -> Self {
        self.q_method = q_method;
        self
    }

    pub fn with_angle_dist(mut self, angle_dist: AngleDist) -> Self {
        self.angle_dist = angle_dist;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim_d == 0 || self.dim_m == 0 {
            return Err(GhrrError::InvalidDimension("D and m must be >= 1".into()));
        }
        self.angle_dist.validate()
    }
}

/// Draws base hypervectors for one space.
///
/// In shared mode the sampler draws its `Q` once, at construction, and every
/// hypervector it produces uses it at every position; hypervectors then differ
/// only in their phases. In varying mode each position of each hypervector
/// gets an independent `Q_j`.
#[derive(Debug, Clone)]
pub struct BaseSampler {
    spec: BaseSamplerSpec,
    shared_q: Option<ComplexMatrix>,
}

impl BaseSampler {
    pub fn new<R: Rng + ?Sized>(spec: BaseSamplerSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let shared_q = match spec.q_mode {
            QMode::Shared => Some(sample_unitary(spec.dim_m, spec.q_method, rng)?),
            QMode::Varying => None,
        };
        Ok(Self { spec, shared_q })
    }

    /// A sampler seeded from `spec.seed`, together with its stream.
    pub fn from_seed(spec: BaseSamplerSpec) -> Result<(Self, rng::GhrrRng)> {
        let mut stream = rng::derived(spec.seed, "base-sampler");
        let sampler = Self::new(spec, &mut stream)?;
        Ok((sampler, stream))
    }

    pub fn spec(&self) -> &BaseSamplerSpec {
        &self.spec
    }

    pub fn shared_q(&self) -> Option<&ComplexMatrix> {
        self.shared_q.as_ref()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Hypervector {
        let BaseSamplerSpec {
            dim_d,
            dim_m,
            q_method,
            angle_dist,
            ..
        } = self.spec;
        let m = dim_m;
        let mm = m * m;
        let mut data = vec![Complex64::new(0.0, 0.0); dim_d * mm];
        for j in 0..dim_d {
            let fresh;
            let q = match &self.shared_q {
                Some(q) => q,
                None => {
                    fresh = sample_unitary(m, q_method, rng).expect("m validated");
                    &fresh
                }
            };
            write_q_lambda(q.as_slice(), &angle_dist, m, &mut data[j * mm..(j + 1) * mm], rng);
        }
        Hypervector::from_parts_unchecked(dim_d, m, data, true)
    }
}

/// `dst = Q diag(e^{i theta_1}, ..., e^{i theta_m})`: column `k` of `Q`
/// scaled by its phase.
fn write_q_lambda<R: Rng + ?Sized>(q: &[Complex64], angles: &AngleDist, m: usize, dst: &mut [Complex64], rng: &mut R) {
    for k in 0..m {
        let phase = Complex64::from_polar(1.0, angles.sample(rng));
        for r in 0..m {
            dst[r * m + k] = q[r * m + k] * phase;
        }
    }
}

/// One base hypervector from `spec`. In shared mode the `Q` is drawn for this
/// hypervector alone; use a [`BaseSampler`] to share it across a codebook.
pub fn sample_base<R: Rng + ?Sized>(spec: &BaseSamplerSpec, rng: &mut R) -> Result<Hypervector> {
    Ok(BaseSampler::new(spec.clone(), rng)?.sample(rng))
}

/// A base hypervector using the given unitary `q` at every position.
pub fn sample_with_q<R: Rng + ?Sized>(
    q: &ComplexMatrix,
    dim_d: usize,
    angles: &AngleDist,
    rng: &mut R,
) -> Result<Hypervector> {
    angles.validate()?;
    if dim_d == 0 {
        return Err(GhrrError::InvalidDimension("D must be >= 1".into()));
    }
    let unitary = q.is_tagged_unitary() || q.unitarity_error() <= crate::matalg::UNITARY_TOL;
    let m = q.dim();
    let mm = m * m;
    let mut data = vec![Complex64::new(0.0, 0.0); dim_d * mm];
    for j in 0..dim_d {
        write_q_lambda(q.as_slice(), angles, m, &mut data[j * mm..(j + 1) * mm], rng);
    }
    Ok(Hypervector::from_parts_unchecked(dim_d, m, data, unitary))
}

/// A base hypervector with `qs[j]` at position `j`.
pub fn sample_with_qs<R: Rng + ?Sized>(qs: &[ComplexMatrix], angles: &AngleDist, rng: &mut R) -> Result<Hypervector> {
    angles.validate()?;
    let Some(first) = qs.first() else {
        return Err(GhrrError::InvalidDimension("D must be >= 1".into()));
    };
    let m = first.dim();
    if let Some(q) = qs.iter().find(|q| q.dim() != m) {
        return Err(GhrrError::DimensionMismatch { left: m, right: q.dim() });
    }
    let unitary = qs
        .iter()
        .all(|q| q.is_tagged_unitary() || q.unitarity_error() <= crate::matalg::UNITARY_TOL);
    let mm = m * m;
    let mut data = vec![Complex64::new(0.0, 0.0); qs.len() * mm];
    for (j, q) in qs.iter().enumerate() {
        write_q_lambda(q.as_slice(), angles, m, &mut data[j * mm..(j + 1) * mm], rng);
    }
    Ok(Hypervector::from_parts_unchecked(qs.len(), m, data, unitary))
}
