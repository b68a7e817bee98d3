//! Random-Fourier-feature encoding of real vectors into GHRR hypervectors.
//!
//! `phi(x)_j = Q^(j) diag(e^{i w_j1 . x}, ..., e^{i w_jm . x})` with frequency
//! vectors `w_jk` drawn from a symmetric distribution `p_k`. Two encoders
//! sharing frequencies give
//! `delta(phi_1(x), phi_2(y)) ~ (1/m) Re sum_k E[(Q_2^† Q_1)_kk] K_k(x - y)`,
//! which for `phi_1 = phi_2` is the average of the kernels `K_k` of the `p_k`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Cauchy, Distribution, Normal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GhrrError, Result};
use crate::experiments::stats::mean_std;
use crate::hdalg::{similarity, Hypervector, QMode};
use crate::matalg::{sample_unitary, ComplexMatrix, UnitaryMethod, UNITARY_TOL};
use crate::rng;

pub const ENCODER_JSON_VERSION: u32 = 1;

/// Distribution of each component of a frequency vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FreqDist {
    /// Normal; RBF kernel `exp(-std^2 |d|^2 / 2)`.
    Gaussian { mean: f64, std: f64 },
    /// Cauchy; Laplacian kernel `exp(-scale |d|_1)`.
    Cauchy { location: f64, scale: f64 },
    /// Uniform on `[lo, hi)`; product-of-sinc kernel.
    Uniform { lo: f64, hi: f64 },
}

impl Default for FreqDist {
    fn default() -> Self {
        Self::Gaussian { mean: 0.0, std: 1.0 }
    }
}

impl std::str::FromStr for FreqDist {
    type Err = GhrrError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" | "normal" => Ok(Self::default()),
            "cauchy" => Ok(Self::Cauchy { location: 0.0, scale: 1.0 }),
            "uniform" => Ok(Self::Uniform { lo: -PI, hi: PI }),
            other => Err(GhrrError::InvalidDistribution(format!("unknown frequency distribution `{other}`"))),
        }
    }
}

impl FreqDist {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian { .. } => "gaussian",
            Self::Cauchy { .. } => "cauchy",
            Self::Uniform { .. } => "uniform",
        }
    }

    /// Rejects distributions that are not symmetric about zero.
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Gaussian { mean, std } => mean == 0.0 && std.is_finite() && std > 0.0,
            Self::Cauchy { location, scale } => location == 0.0 && scale.is_finite() && scale > 0.0,
            Self::Uniform { lo, hi } => hi.is_finite() && hi > 0.0 && lo == -hi,
        };
        if ok {
            Ok(())
        } else {
            Err(GhrrError::InvalidDistribution(format!(
                "{self:?} is not a proper distribution symmetric about zero"
            )))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Gaussian { mean, std } => Normal::new(mean, std).expect("validated").sample(rng),
            Self::Cauchy { location, scale } => Cauchy::new(location, scale).expect("validated").sample(rng),
            Self::Uniform { lo, hi } => Uniform::new(lo, hi).sample(rng),
        }
    }

    /// `E[e^{i w . delta}]` for `w` with i.i.d. components from `self`.
    pub fn kernel(&self, delta: &[f64]) -> f64 {
        match *self {
            Self::Gaussian { std, .. } => {
                let sq: f64 = delta.iter().map(|d| d * d).sum();
                (-0.5 * std * std * sq).exp()
            }
            Self::Cauchy { scale, .. } => (-scale * delta.iter().map(|d| d.abs()).sum::<f64>()).exp(),
            Self::Uniform { hi, .. } => delta
                .iter()
                .map(|d| {
                    let t = hi * d;
                    if t == 0.0 {
                        1.0
                    } else {
                        t.sin() / t
                    }
                })
                .product(),
        }
    }
}

/// Everything needed to draw an encoder; the sampled result is [`EncoderSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub n_features: usize,
    pub dim_d: usize,
    pub dim_m: usize,
    pub q_mode: QMode,
    pub q_method: UnitaryMethod,
    /// One entry for all `k`, or one per `k`.
    pub freq_dists: Vec<FreqDist>,
    pub seed: u64,
}

impl EncoderConfig {
    pub fn new(n_features: usize, dim_d: usize, dim_m: usize) -> Self {
        Self {
            n_features,
            dim_d,
            dim_m,
            q_mode: QMode::Varying,
            q_method: UnitaryMethod::Haar,
            freq_dists: vec![FreqDist::default()],
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

    pub fn with_freq_dist(mut self, dist: FreqDist) -> Self {
        self.freq_dists = vec![dist];
        self
    }

    pub fn with_freq_dists(mut self, dists: Vec<FreqDist>) -> Self {
        self.freq_dists = dists;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_features == 0 || self.dim_d == 0 || self.dim_m == 0 {
            return Err(GhrrError::InvalidDimension("n, D and m must all be >= 1".into()));
        }
        if self.freq_dists.len() != 1 && self.freq_dists.len() != self.dim_m {
            return Err(GhrrError::InvalidConfig(format!(
                "need 1 or m={} frequency distributions, got {}",
                self.dim_m,
                self.freq_dists.len()
            )));
        }
        self.freq_dists.iter().try_for_each(FreqDist::validate)
    }

    pub fn freq_dist(&self, k: usize) -> &FreqDist {
        if self.freq_dists.len() == 1 {
            &self.freq_dists[0]
        } else {
            &self.freq_dists[k]
        }
    }

    /// Draws Q matrices first, then frequencies, from `rng`.
    pub fn build<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<EncoderSpec> {
        self.validate()?;
        let q_matrices = draw_qs(self, rng)?;
        let (d, m, n) = (self.dim_d, self.dim_m, self.n_features);
        let mut frequencies = Vec::with_capacity(d * m * n);
        for _ in 0..d {
            for k in 0..m {
                let dist = self.freq_dist(k);
                for _ in 0..n {
                    frequencies.push(dist.sample(rng));
                }
            }
        }
        Ok(EncoderSpec {
            config: self.clone(),
            q_matrices,
            frequencies,
        })
    }

    /// Builds from the stream derived from `self.seed`.
    pub fn build_seeded(&self) -> Result<EncoderSpec> {
        self.build(&mut rng::derived(self.seed, "encoder"))
    }

    /// `(1/m) sum_k K_k(delta)`, the kernel of two identical encoders.
    pub fn analytic_kernel(&self, delta: &[f64]) -> f64 {
        (0..self.dim_m).map(|k| self.freq_dist(k).kernel(delta)).sum::<f64>() / self.dim_m as f64
    }
}

fn draw_qs<R: Rng + ?Sized>(cfg: &EncoderConfig, rng: &mut R) -> Result<Vec<ComplexMatrix>> {
    let count = match cfg.q_mode {
        QMode::Shared => 1,
        QMode::Varying => cfg.dim_d,
    };
    (0..count).map(|_| sample_unitary(cfg.dim_m, cfg.q_method, rng)).collect()
}

/// A frozen encoder: its config plus all sampled parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "EncoderJson", try_from = "EncoderJson")]
pub struct EncoderSpec {
    config: EncoderConfig,
    q_matrices: Vec<ComplexMatrix>,
    /// `w_jk[i]` at `(j*m + k)*n + i`.
    frequencies: Vec<f64>,
}

/// Per-input unitary factor, for encoders whose `Q` depends on `x`.
pub trait QProvider {
    /// The unitary used at position `j` when encoding `x`.
    fn q_for(&self, x: &[f64], j: usize) -> ComplexMatrix;
}

impl EncoderSpec {
    /// Assembles an encoder from explicit parameters. `frequencies` is indexed
    /// `[j][k][i]`.
    pub fn from_parts(
        config: EncoderConfig,
        q_matrices: Vec<ComplexMatrix>,
        frequencies: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        config.validate()?;
        let (d, m, n) = (config.dim_d, config.dim_m, config.n_features);
        let expected_q = match config.q_mode {
            QMode::Shared => 1,
            QMode::Varying => d,
        };
        if q_matrices.len() != expected_q {
            return Err(GhrrError::InvalidConfig(format!(
                "{} mode needs {expected_q} Q matrices, got {}",
                config.q_mode,
                q_matrices.len()
            )));
        }
        for q in &q_matrices {
            if q.dim() != m {
                return Err(GhrrError::DimensionMismatch { left: m, right: q.dim() });
            }
            if !(q.is_tagged_unitary() || q.unitarity_error() <= UNITARY_TOL) {
                return Err(GhrrError::NotUnitary);
            }
        }
        if frequencies.len() != d || frequencies.iter().any(|row| row.len() != m || row.iter().any(|w| w.len() != n)) {
            return Err(GhrrError::InvalidConfig(format!("frequencies must have shape {d} x {m} x {n}")));
        }
        let frequencies: Vec<f64> = frequencies.into_iter().flatten().flatten().collect();
        if let Some(i) = frequencies.iter().position(|w| !w.is_finite()) {
            return Err(GhrrError::InvalidConfig(format!("frequency {i} is not finite")));
        }
        Ok(Self {
            config,
            q_matrices,
            frequencies,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn n_features(&self) -> usize {
        self.config.n_features
    }

    pub fn dim_d(&self) -> usize {
        self.config.dim_d
    }

    pub fn dim_m(&self) -> usize {
        self.config.dim_m
    }

    pub fn q_mode(&self) -> QMode {
        self.config.q_mode
    }

    pub fn q_matrices(&self) -> &[ComplexMatrix] {
        &self.q_matrices
    }

    pub fn q(&self, j: usize) -> &ComplexMatrix {
        match self.config.q_mode {
            QMode::Shared => &self.q_matrices[0],
            QMode::Varying => &self.q_matrices[j],
        }
    }

    pub fn frequency(&self, j: usize, k: usize) -> &[f64] {
        let n = self.config.n_features;
        let start = (j * self.config.dim_m + k) * n;
        &self.frequencies[start..start + n]
    }

    /// Same frequencies, freshly drawn `Q` matrices. The only sanctioned way to
    /// get a second encoder for cross-`Q` kernel comparisons.
    pub fn resample_q<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Self> {
        Ok(Self {
            config: self.config.clone(),
            q_matrices: draw_qs(&self.config, rng)?,
            frequencies: self.frequencies.clone(),
        })
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.config.n_features {
            return Err(GhrrError::LengthMismatch {
                expected: self.config.n_features,
                got: x.len(),
            });
        }
        match x.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(GhrrError::NonFiniteInput(i)),
            None => Ok(()),
        }
    }

    fn phases(&self, x: &[f64], j: usize, out: &mut [Complex64]) {
        for (k, slot) in out.iter_mut().enumerate() {
            let angle: f64 = self.frequency(j, k).iter().zip(x).map(|(w, v)| w * v).sum();
            *slot = Complex64::from_polar(1.0, angle);
        }
    }

    pub fn encode(&self, x: &[f64]) -> Result<Hypervector> {
        self.check_input(x)?;
        let (d, m) = (self.config.dim_d, self.config.dim_m);
        let mm = m * m;
        let mut data = vec![Complex64::new(0.0, 0.0); d * mm];
        let mut ph = vec![Complex64::new(0.0, 0.0); m];
        for j in 0..d {
            self.phases(x, j, &mut ph);
            q_times_phases(self.q(j).as_slice(), &ph, m, &mut data[j * mm..(j + 1) * mm]);
        }
        Hypervector::from_raw(d, m, data, true)
    }

    /// Encodes each input in parallel; output order follows input order.
    pub fn encode_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<Hypervector>> {
        xs.par_iter().map(|x| self.encode(x)).collect()
    }

    /// Encodes with `Q^(j)` supplied per input by `provider` instead of the
    /// frozen matrices.
    pub fn encode_with<P: QProvider + ?Sized>(&self, x: &[f64], provider: &P) -> Result<Hypervector> {
        self.check_input(x)?;
        let (d, m) = (self.config.dim_d, self.config.dim_m);
        let mm = m * m;
        let mut data = vec![Complex64::new(0.0, 0.0); d * mm];
        let mut ph = vec![Complex64::new(0.0, 0.0); m];
        for j in 0..d {
            let q = provider.q_for(x, j);
            if q.dim() != m {
                return Err(GhrrError::DimensionMismatch { left: m, right: q.dim() });
            }
            self.phases(x, j, &mut ph);
            q_times_phases(q.as_slice(), &ph, m, &mut data[j * mm..(j + 1) * mm]);
        }
        Hypervector::from_raw(d, m, data, true)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn q_times_phases(q: &[Complex64], phases: &[Complex64], m: usize, dst: &mut [Complex64]) {
    for r in 0..m {
        for k in 0..m {
            dst[r * m + k] = q[r * m + k] * phases[k];
        }
    }
}

/// JSON layout of an encoder: config plus full payloads as nested arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncoderJson {
    pub version: u32,
    pub seed: u64,
    pub n_features: usize,
    pub dim_d: usize,
    pub dim_m: usize,
    pub q_mode: QMode,
    pub q_method: UnitaryMethod,
    pub freq_dists: Vec<FreqDist>,
    pub q_matrices: Vec<ComplexMatrix>,
    /// `[j][k][i]`.
    pub frequencies: Vec<Vec<Vec<f64>>>,
}

impl From<EncoderSpec> for EncoderJson {
    fn from(e: EncoderSpec) -> Self {
        let (m, n) = (e.config.dim_m, e.config.n_features);
        let frequencies = e
            .frequencies
            .chunks(m * n)
            .map(|row| row.chunks(n).map(<[f64]>::to_vec).collect())
            .collect();
        Self {
            version: ENCODER_JSON_VERSION,
            seed: e.config.seed,
            n_features: n,
            dim_d: e.config.dim_d,
            dim_m: m,
            q_mode: e.config.q_mode,
            q_method: e.config.q_method,
            freq_dists: e.config.freq_dists,
            q_matrices: e.q_matrices,
            frequencies,
        }
    }
}

impl TryFrom<EncoderJson> for EncoderSpec {
    type Error = GhrrError;
    fn try_from(j: EncoderJson) -> Result<Self> {
        if j.version != ENCODER_JSON_VERSION {
            return Err(GhrrError::Format(format!("unsupported encoder version {}", j.version)));
        }
        let config = EncoderConfig {
            n_features: j.n_features,
            dim_d: j.dim_d,
            dim_m: j.dim_m,
            q_mode: j.q_mode,
            q_method: j.q_method,
            freq_dists: j.freq_dists,
            seed: j.seed,
        };
        Self::from_parts(config, j.q_matrices, j.frequencies)
    }
}

/// Free-function form of [`EncoderConfig::build`].
pub fn make_encoder<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    m: usize,
    q_mode: QMode,
    freq_dist: FreqDist,
    rng: &mut R,
) -> Result<EncoderSpec> {
    EncoderConfig::new(n, d, m)
        .with_q_mode(q_mode)
        .with_freq_dist(freq_dist)
        .build(rng)
}

pub fn encode(enc: &EncoderSpec, x: &[f64]) -> Result<Hypervector> {
    enc.encode(x)
}

/// `similarity(encode(enc1, x), encode(enc2, y))`. The encoders must agree
/// on shape and frequencies; they may differ in `Q`.
pub fn empirical_kernel(enc1: &EncoderSpec, enc2: &EncoderSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    let (a, b) = (&enc1.config, &enc2.config);
    if (a.n_features, a.dim_d, a.dim_m) != (b.n_features, b.dim_d, b.dim_m) {
        return Err(GhrrError::InvalidConfig(format!(
            "encoder shapes differ: (n={}, D={}, m={}) vs (n={}, D={}, m={})",
            a.n_features, a.dim_d, a.dim_m, b.n_features, b.dim_d, b.dim_m
        )));
    }
    if enc1.frequencies != enc2.frequencies {
        return Err(GhrrError::InvalidConfig(
            "encoders must share frequencies; derive the second with resample_q".into(),
        ));
    }
    similarity(&enc1.encode(x)?, &enc2.encode(y)?)
}

/// How the second encoder of each trial relates to the first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KernelPairing {
    /// The same encoder on both sides.
    #[default]
    Same,
    /// The second encoder shares frequencies but has fresh `Q` matrices.
    ResampledQ,
}

impl std::str::FromStr for KernelPairing {
    type Err = GhrrError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "same" => Ok(Self::Same),
            "resampled-q" => Ok(Self::ResampledQ),
            other => Err(GhrrError::InvalidConfig(format!("unknown kernel pairing `{other}`"))),
        }
    }
}

impl std::fmt::Display for KernelPairing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Same => "same",
            Self::ResampledQ => "resampled-q",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelPoint {
    pub delta: Vec<f64>,
    pub delta_norm: f64,
    pub mean: f64,
    pub std: f64,
    /// `(1/m) sum_k K_k(delta)`; the expected value for `Same` pairing.
    pub analytic: f64,
    /// One value per trial, in trial order.
    pub samples: Vec<f64>,
}

/// Kernel statistics per displacement, over `trials` freshly sampled encoder
/// pairs. Trial `t` draws from the stream `(seed, "kernel-profile/t")`, so the
/// table does not depend on thread scheduling. Inputs are `x = 0`,
/// `y = delta`.
pub fn kernel_profile(
    cfg: &EncoderConfig,
    pairing: KernelPairing,
    deltas: &[Vec<f64>],
    trials: usize,
    seed: u64,
) -> Result<Vec<KernelPoint>> {
    if trials < 2 {
        return Err(GhrrError::InvalidConfig("kernel_profile needs at least 2 trials".into()));
    }
    if deltas.is_empty() {
        return Err(GhrrError::InvalidConfig("kernel_profile needs at least one displacement".into()));
    }
    cfg.validate()?;
    let zero = vec![0.0; cfg.n_features];
    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut stream = rng::derived(seed, &format!("kernel-profile/{t}"));
            let enc1 = cfg.build(&mut stream)?;
            let enc2 = match pairing {
                KernelPairing::Same => enc1.clone(),
                KernelPairing::ResampledQ => enc1.resample_q(&mut stream)?,
            };
            let h0 = enc1.encode(&zero)?;
            deltas
                .iter()
                .map(|d| similarity(&h0, &enc2.encode(d)?))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    Ok(deltas
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let samples: Vec<f64> = per_trial.iter().map(|row| row[i]).collect();
            let (mean, std) = mean_std(&samples);
            KernelPoint {
                delta: d.clone(),
                delta_norm: d.iter().map(|v| v * v).sum::<f64>().sqrt(),
                mean,
                std,
                analytic: cfg.analytic_kernel(d),
                samples,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn gaussian() -> FreqDist {
        FreqDist::default()
    }

    #[test]
    fn same_seed_same_encoder() {
        let cfg = EncoderConfig::new(3, 50, 2).with_seed(9);
        assert_eq!(cfg.build_seeded().unwrap(), cfg.build_seeded().unwrap());
        let a = make_encoder(3, 50, 2, QMode::Varying, gaussian(), &mut seeded(1)).unwrap();
        let b = make_encoder(3, 50, 2, QMode::Varying, gaussian(), &mut seeded(1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_asymmetric_distributions() {
        let mut rng = seeded(2);
        for dist in [
            FreqDist::Gaussian { mean: 0.5, std: 1.0 },
            FreqDist::Cauchy { location: 1.0, scale: 1.0 },
            FreqDist::Uniform { lo: 0.0, hi: 1.0 },
            FreqDist::Gaussian { mean: 0.0, std: 0.0 },
        ] {
            assert!(matches!(
                make_encoder(2, 4, 2, QMode::Varying, dist, &mut rng),
                Err(GhrrError::InvalidDistribution(_))
            ));
        }
        assert!(make_encoder(0, 4, 2, QMode::Varying, gaussian(), &mut rng).is_err());
    }

    #[test]
    fn gaussian_frequencies_are_zero_mean() {
        let enc = make_encoder(4, 1500, 2, QMode::Varying, gaussian(), &mut seeded(3)).unwrap();
        for i in 0..4 {
            let mut sum = 0.0;
            for j in 0..1500 {
                for k in 0..2 {
                    sum += enc.frequency(j, k)[i];
                }
            }
            assert!((sum / 3000.0).abs() < 0.05, "component {i}");
        }
    }

    #[test]
    fn zero_input_gives_the_q_matrices() {
        for mode in [QMode::Shared, QMode::Varying] {
            let enc = make_encoder(3, 20, 3, mode, gaussian(), &mut seeded(4)).unwrap();
            let h = enc.encode(&[0.0; 3]).unwrap();
            for j in 0..20 {
                assert_eq!(h.element(j).as_slice(), enc.q(j).as_slice());
            }
            assert!((similarity(&h, &h).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn input_errors() {
        let enc = make_encoder(3, 5, 2, QMode::Varying, gaussian(), &mut seeded(5)).unwrap();
        assert!(matches!(
            enc.encode(&[1.0, 2.0]),
            Err(GhrrError::LengthMismatch { expected: 3, got: 2 })
        ));
        assert!(matches!(enc.encode(&[1.0, f64::NAN, 0.0]), Err(GhrrError::NonFiniteInput(1))));
        assert!(matches!(
            enc.encode(&[f64::INFINITY, 0.0, 0.0]),
            Err(GhrrError::NonFiniteInput(0))
        ));
    }

    #[test]
    fn m1_with_unit_q_is_classic_rff() {
        let cfg = EncoderConfig::new(2, 30, 1).with_q_mode(QMode::Shared);
        let built = cfg.build(&mut seeded(6)).unwrap();
        let freqs: Vec<Vec<Vec<f64>>> = (0..30).map(|j| vec![built.frequency(j, 0).to_vec()]).collect();
        let enc = EncoderSpec::from_parts(cfg, vec![ComplexMatrix::identity(1)], freqs).unwrap();
        let x = [0.3, -1.2];
        let h = enc.encode(&x).unwrap();
        for j in 0..30 {
            let w = enc.frequency(j, 0);
            let angle = w[0] * x[0] + w[1] * x[1];
            let z = h.element(j).get(0, 0);
            assert!((z - Complex64::new(angle.cos(), angle.sin())).norm() < 1e-14);
        }
    }

    #[test]
    fn m1_matches_fractional_power_composition() {
        // encode(x) = Q * prod_i z_i^{x_i}, z_i[j] = e^{i w_ji}, for integer x
        let enc = make_encoder(3, 40, 1, QMode::Varying, gaussian(), &mut seeded(7)).unwrap();
        let x = [2.0, -1.0, 3.0];
        let h = enc.encode(&x).unwrap();
        for j in 0..40 {
            let w = enc.frequency(j, 0);
            let mut prod = enc.q(j).get(0, 0);
            for i in 0..3 {
                let z = Complex64::new(w[i].cos(), w[i].sin());
                prod *= z.powi(x[i] as i32);
            }
            assert!((h.element(j).get(0, 0) - prod).norm() < 1e-10);
        }
    }

    #[test]
    fn identical_inputs_have_unit_kernel() {
        let enc = make_encoder(2, 100, 3, QMode::Varying, gaussian(), &mut seeded(8)).unwrap();
        let x = [0.7, -0.2];
        assert!((empirical_kernel(&enc, &enc, &x, &x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rbf_kernel_recovered() {
        let enc = make_encoder(3, 4000, 2, QMode::Varying, gaussian(), &mut seeded(9)).unwrap();
        let x = [0.1, 0.2, -0.3];
        let y = [0.1 + 0.6, 0.2 + 0.8, -0.3];
        let k = empirical_kernel(&enc, &enc, &x, &y).unwrap();
        assert!((k - (-0.5f64).exp()).abs() < 0.05, "k={k}");
    }

    #[test]
    fn kernel_rejects_mismatched_encoders() {
        let a = make_encoder(2, 10, 2, QMode::Varying, gaussian(), &mut seeded(10)).unwrap();
        let b = make_encoder(2, 10, 2, QMode::Varying, gaussian(), &mut seeded(11)).unwrap();
        let c = make_encoder(2, 11, 2, QMode::Varying, gaussian(), &mut seeded(11)).unwrap();
        assert!(empirical_kernel(&a, &b, &[0.0; 2], &[0.0; 2]).is_err());
        assert!(empirical_kernel(&a, &c, &[0.0; 2], &[0.0; 2]).is_err());
        let r = a.resample_q(&mut seeded(12)).unwrap();
        assert!(empirical_kernel(&a, &r, &[0.0; 2], &[0.0; 2]).is_ok());
    }

    #[test]
    fn cross_q_kernel_matches_weight_oracle() {
        // Monte Carlo estimate of (1/m) Re sum_k E[(Q_2^† Q_1)_kk] over independent Haar pairs
        let m = 3;
        let mut rng = seeded(13);
        let mut acc = 0.0;
        let pairs = 2000;
        for _ in 0..pairs {
            let q1 = sample_unitary(m, UnitaryMethod::Haar, &mut rng).unwrap();
            let q2 = sample_unitary(m, UnitaryMethod::Haar, &mut rng).unwrap();
            for k in 0..m {
                let mut z = Complex64::new(0.0, 0.0);
                for r in 0..m {
                    z += q2.get(r, k).conj() * q1.get(r, k);
                }
                acc += z.re;
            }
        }
        let oracle = acc / (pairs * m) as f64;

        let enc1 = make_encoder(2, 500, m, QMode::Varying, gaussian(), &mut seeded(14)).unwrap();
        let enc2 = enc1.resample_q(&mut seeded(15)).unwrap();
        let k = empirical_kernel(&enc1, &enc2, &[0.0; 2], &[0.0; 2]).unwrap();
        assert!((k - oracle).abs() < 0.05, "k={k} oracle={oracle}");
    }

    #[test]
    fn profile_at_zero_displacement_is_exact() {
        let cfg = EncoderConfig::new(2, 50, 2);
        let table = kernel_profile(&cfg, KernelPairing::Same, &[vec![0.0, 0.0]], 5, 16).unwrap();
        assert!((table[0].mean - 1.0).abs() < 1e-12);
        assert!(table[0].std < 1e-12);
        assert_eq!(table[0].samples.len(), 5);
        assert!(kernel_profile(&cfg, KernelPairing::Same, &[vec![0.0, 0.0]], 1, 16).is_err());
        assert!(kernel_profile(&cfg, KernelPairing::Same, &[], 5, 16).is_err());
    }

    #[test]
    fn varying_q_concentrates_cross_kernel() {
        let deltas = [vec![0.0]];
        let shared = EncoderConfig::new(1, 500, 3).with_q_mode(QMode::Shared);
        let varying = EncoderConfig::new(1, 500, 3).with_q_mode(QMode::Varying);
        let s = kernel_profile(&shared, KernelPairing::ResampledQ, &deltas, 100, 17).unwrap();
        let v = kernel_profile(&varying, KernelPairing::ResampledQ, &deltas, 100, 17).unwrap();
        assert!(v[0].std < s[0].std, "varying {} shared {}", v[0].std, s[0].std);
    }

    #[test]
    fn far_displacement_decays() {
        let cfg = EncoderConfig::new(2, 1000, 2);
        let t = kernel_profile(&cfg, KernelPairing::Same, &[vec![6.0, 8.0]], 10, 18).unwrap();
        assert!(t[0].mean.abs() < 0.05);
        assert!(t[0].analytic < 1e-20);
    }

    #[test]
    fn estimator_std_shrinks_with_dimension() {
        let delta = [vec![1.0, 0.0]];
        let small = kernel_profile(&EncoderConfig::new(2, 500, 2), KernelPairing::Same, &delta, 50, 19).unwrap();
        let large = kernel_profile(&EncoderConfig::new(2, 1000, 2), KernelPairing::Same, &delta, 50, 19).unwrap();
        let ratio = small[0].std / large[0].std;
        assert!((1.2..=1.7).contains(&ratio), "ratio={ratio}");
    }

    #[test]
    fn analytic_kernels() {
        assert!((FreqDist::default().kernel(&[1.0]) - (-0.5f64).exp()).abs() < 1e-15);
        let c = FreqDist::Cauchy { location: 0.0, scale: 2.0 };
        assert!((c.kernel(&[0.5, -0.25]) - (-1.5f64).exp()).abs() < 1e-15);
        let u = FreqDist::Uniform { lo: -PI, hi: PI };
        assert!(u.kernel(&[1.0]).abs() < 1e-15);
        assert_eq!(u.kernel(&[0.0]), 1.0);
    }

    #[test]
    fn json_round_trip() {
        for mode in [QMode::Shared, QMode::Varying] {
            let enc = EncoderConfig::new(2, 7, 3)
                .with_q_mode(mode)
                .with_freq_dists(vec![
                    FreqDist::default(),
                    FreqDist::Cauchy { location: 0.0, scale: 0.5 },
                    FreqDist::Uniform { lo: -1.0, hi: 1.0 },
                ])
                .with_seed(20)
                .build_seeded()
                .unwrap();
            let back = EncoderSpec::from_json(&enc.to_json().unwrap()).unwrap();
            assert_eq!(back, enc);
            let x = [0.4, -0.9];
            assert_eq!(back.encode(&x).unwrap(), enc.encode(&x).unwrap());
        }
    }

    #[test]
    fn shared_and_varying_differ() {
        let a = EncoderConfig::new(2, 30, 2).with_q_mode(QMode::Shared).with_seed(21);
        let b = EncoderConfig::new(2, 30, 2).with_q_mode(QMode::Varying).with_seed(21);
        let x = [0.5, 0.5];
        assert_ne!(
            a.build_seeded().unwrap().encode(&x).unwrap(),
            b.build_seeded().unwrap().encode(&x).unwrap()
        );
    }

    struct FixedQ(ComplexMatrix);

    impl QProvider for FixedQ {
        fn q_for(&self, _x: &[f64], _j: usize) -> ComplexMatrix {
            self.0.clone()
        }
    }

    #[test]
    fn q_provider_overrides_frozen_q() {
        let enc = EncoderConfig::new(2, 8, 2).with_q_mode(QMode::Shared).with_seed(22).build_seeded().unwrap();
        let via_provider = enc.encode_with(&[0.1, 0.2], &FixedQ(enc.q(0).clone())).unwrap();
        assert_eq!(via_provider, enc.encode(&[0.1, 0.2]).unwrap());
        let id = enc.encode_with(&[0.0, 0.0], &FixedQ(ComplexMatrix::identity(2))).unwrap();
        assert_eq!(id, Hypervector::identity(8, 2));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn kernel_is_shift_invariant(
                x in prop::collection::vec(-3.0f64..3.0, 3),
                y in prop::collection::vec(-3.0f64..3.0, 3),
                c in prop::collection::vec(-3.0f64..3.0, 3),
                seed in 0u64..1000,
            ) {
                let enc = make_encoder(3, 64, 2, QMode::Varying, FreqDist::default(), &mut seeded(seed)).unwrap();
                let xs: Vec<f64> = x.iter().zip(&c).map(|(a, b)| a + b).collect();
                let ys: Vec<f64> = y.iter().zip(&c).map(|(a, b)| a + b).collect();
                let k1 = empirical_kernel(&enc, &enc, &x, &y).unwrap();
                let k2 = empirical_kernel(&enc, &enc, &xs, &ys).unwrap();
                prop_assert!((k1 - k2).abs() < 1e-10);
            }
        }
    }
}
