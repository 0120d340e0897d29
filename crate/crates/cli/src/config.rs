//! Declarative experiment configuration: a single TOML file with
//! `key = value` sections, fully expanded before execution so every run is
//! archivable and diffable. The canonical serialized form is hashed and the
//! hash embedded in every output artifact.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use varprof::profiles::{
    make_anti_band, make_band, make_block_sparse, make_remark42, make_sampled, make_separable,
    sample_erdos_renyi, ErdosRenyiConfig, Remark42Variant, StdDevProfile,
};
use varprof::rng::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Clt,
    BoundSweep,
    NormCheck,
    VarianceCheck,
    CycleOracle,
    Embedding,
    ErConcentration,
    StructuralZero,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    /// Where artifacts land. Not part of the experiment identity: it is
    /// excluded from the canonical serialization and the config hash, so
    /// the same experiment produces byte-identical artifacts anywhere.
    #[serde(default, skip_serializing)]
    pub out_dir: Option<String>,
    /// Worker threads; 0 means all available cores. The environment
    /// variable `VARPROF_WORKERS` overrides this.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub profile: ProfileSpec,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
    /// Optional explicit coefficients `c_0..c_k`; monomials of the sweep
    /// degrees are used when absent.
    #[serde(default)]
    pub polynomial: Option<PolynomialSection>,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub norm_check: NormCheckSpec,
    #[serde(default)]
    pub embedding: EmbeddingSpec,
    #[serde(default)]
    pub er: ErSpec,
    #[serde(default)]
    pub structural_zero: StructuralZeroSpec,
}

fn default_seed() -> u64 {
    0
}

fn default_replicas() -> usize {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub family: String,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub band: usize,
    /// When set, sweeps use `band = ceil(n^band_pow)` instead of `band`.
    #[serde(default)]
    pub band_pow: Option<f64>,
    /// When set, `band = ceil(band_frac * n)`; takes precedence over `band`
    /// but not over `band_pow`.
    #[serde(default)]
    pub band_frac: Option<f64>,
    #[serde(default = "default_true")]
    pub periodic: bool,
    #[serde(default = "default_one")]
    pub scale: f64,
    /// Amplitude of the sampled profile `1 + amp sin(2πx) sin(2πy)`.
    #[serde(default = "default_amp")]
    pub amp: f64,
    /// Separable ramp endpoints, components in (0, 1].
    #[serde(default = "default_half")]
    pub v_lo: f64,
    #[serde(default = "default_one")]
    pub v_hi: f64,
    /// Lower bound for the bounded-below family (entries in [lo, 1]).
    #[serde(default = "default_lo")]
    pub lo: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_block_frac")]
    pub block_frac: f64,
    #[serde(default)]
    pub fill: f64,
    #[serde(default)]
    pub path: Option<String>,
}

fn default_n() -> usize {
    200
}
fn default_true() -> bool {
    true
}
fn default_one() -> f64 {
    1.0
}
fn default_amp() -> f64 {
    0.3
}
fn default_half() -> f64 {
    0.5
}
fn default_lo() -> f64 {
    0.3
}
fn default_p() -> f64 {
    0.3
}
fn default_gamma() -> f64 {
    0.25
}
fn default_alpha() -> f64 {
    0.35
}
fn default_block_frac() -> f64 {
    0.25
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec {
            family: "all-ones".into(),
            n: default_n(),
            band: 0,
            band_pow: None,
            band_frac: None,
            periodic: true,
            scale: 1.0,
            amp: default_amp(),
            v_lo: default_half(),
            v_hi: 1.0,
            lo: default_lo(),
            p: default_p(),
            gamma: default_gamma(),
            alpha: default_alpha(),
            block_frac: default_block_frac(),
            fill: 0.0,
            path: None,
        }
    }
}

impl ProfileSpec {
    pub fn effective_band(&self, n: usize) -> usize {
        let clamp = |b: f64| (b.ceil() as usize).clamp(1, n.saturating_sub(1));
        match (self.band_pow, self.band_frac) {
            (Some(pow), _) => clamp((n as f64).powf(pow)),
            (None, Some(frac)) => clamp(frac * n as f64),
            (None, None) => self.band,
        }
    }

    /// Builds the profile at size `n` (ignored by the `file` family).
    pub fn build(&self, n: usize, seed: u64) -> anyhow::Result<StdDevProfile> {
        let profile = match self.family.as_str() {
            "all-ones" => StdDevProfile::all_ones(n),
            "separable" => {
                let ramp: Vec<f64> = (1..=n)
                    .map(|i| self.v_lo + (self.v_hi - self.v_lo) * i as f64 / n as f64)
                    .collect();
                make_separable(&ramp, &ramp)?
            }
            "sampled" => {
                let amp = self.amp;
                make_sampled(
                    |x, y| {
                        // group the sines first so f(x, y) == f(y, x) holds
                        // bit-exactly and the profile is detected symmetric
                        let product =
                            (std::f64::consts::TAU * x).sin() * (std::f64::consts::TAU * y).sin();
                        1.0 + amp * product
                    },
                    n,
                )?
            }
            "bounded-below" => {
                let lo = self.lo;
                if !(0.0 < lo && lo <= 1.0) {
                    bail!("bounded-below needs lo in (0, 1], got {lo}");
                }
                let mut rng = CounterRng::derive(seed, &[n as u64, 0x70]);
                let entries = ndarray::Array2::from_shape_fn((n, n), |_| {
                    lo + (1.0 - lo) * rng.next_open01()
                });
                StdDevProfile::from_dense(entries, varprof::profiles::FamilyTag::Custom)?
            }
            "band-periodic" => make_band(n, self.effective_band(n), true)?,
            "band-nonperiodic" => make_band(n, self.effective_band(n), false)?,
            "anti-band-periodic" => make_anti_band(n, self.effective_band(n), true)?,
            "anti-band-nonperiodic" => make_anti_band(n, self.effective_band(n), false)?,
            "erdos-renyi" => sample_erdos_renyi(&ErdosRenyiConfig {
                n,
                p: self.p,
                gamma: self.gamma,
                alpha: self.alpha,
                seed,
            })?,
            "block-sparse" => {
                let block = ((self.block_frac * n as f64).ceil() as usize).clamp(1, n);
                make_block_sparse(n, block, self.fill)?
            }
            "remark42-i" => make_remark42(Remark42Variant::I, n)?,
            "remark42-ii" => make_remark42(Remark42Variant::II, n)?,
            "remark42-iii" => make_remark42(Remark42Variant::III, n)?,
            "file" => {
                let path = self
                    .path
                    .as_ref()
                    .context("profile family 'file' needs a path")?;
                StdDevProfile::load(path)?
            }
            other => bail!(
                "unknown profile family '{other}' (expected all-ones | separable | sampled | \
                 bounded-below | band-periodic | band-nonperiodic | anti-band-periodic | \
                 anti-band-nonperiodic | erdos-renyi | block-sparse | remark42-i | remark42-ii | \
                 remark42-iii | file)"
            ),
        };
        if self.scale != 1.0 {
            Ok(profile.scale(self.scale)?)
        } else {
            Ok(profile)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub kind: String,
    pub law: String,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            kind: "symmetric".into(),
            law: "gaussian".into(),
        }
    }
}

impl EnsembleSpec {
    pub fn build(&self, seed: u64) -> anyhow::Result<varprof::MatrixEnsemble> {
        let kind = match self.kind.as_str() {
            "iid" => varprof::EnsembleKind::Iid,
            "symmetric" => varprof::EnsembleKind::Symmetric,
            other => bail!("unknown ensemble kind '{other}' (expected iid | symmetric)"),
        };
        let law = varprof::entrylaws::parse_law(&self.law)?;
        Ok(varprof::MatrixEnsemble::new(kind, law, seed))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialSection {
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub k_values: Vec<usize>,
    #[serde(default)]
    pub n_values: Vec<usize>,
}

impl SweepSpec {
    pub fn k_values_or(&self, fallback: usize) -> Vec<usize> {
        if self.k_values.is_empty() {
            vec![fallback]
        } else {
            self.k_values.clone()
        }
    }

    pub fn n_values_or(&self, fallback: usize) -> Vec<usize> {
        if self.n_values.is_empty() {
            vec![fallback]
        } else {
            self.n_values.clone()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormCheckSpec {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_t")]
    pub t: f64,
    /// Empirical budget scale; 1.0 reports the raw constant-free budget.
    #[serde(default = "default_one")]
    pub k_cal: f64,
}

fn default_trials() -> usize {
    100
}
fn default_t() -> f64 {
    2.0
}

impl Default for NormCheckSpec {
    fn default() -> Self {
        NormCheckSpec {
            trials: default_trials(),
            t: default_t(),
            k_cal: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSpec {
    pub kind: String,
    pub dims: Vec<usize>,
}

impl Default for EmbeddingSpec {
    fn default() -> Self {
        EmbeddingSpec {
            kind: "covariance".into(),
            dims: vec![100, 150],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErSpec {
    #[serde(default = "default_er_seeds")]
    pub seeds: usize,
}

fn default_er_seeds() -> usize {
    100
}

impl Default for ErSpec {
    fn default() -> Self {
        ErSpec {
            seeds: default_er_seeds(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructuralZeroSpec {
    #[serde(default = "default_sz_trials")]
    pub trials: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

fn default_sz_trials() -> usize {
    20
}
fn default_k_max() -> usize {
    7
}

impl Default for StructuralZeroSpec {
    fn default() -> Self {
        StructuralZeroSpec {
            trials: default_sz_trials(),
            k_max: default_k_max(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).context("malformed config")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Hash of the canonical serialized config, 16 hex characters.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
