//! Experiment configuration: TOML file, flag overrides, validation, hashing.

use std::path::Path;

use anyhow::{bail, Context};
use cuspdyn::algebra::RootData;
use cuspdyn::height::{make_levels, FlowParams, HeightLevels};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Modular,
    ProfileOnly,
}

/// Rational inputs of the dimension bound, kept as exact decimal or `a/b`
/// strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundConfig {
    pub delta0: String,
    pub eps0: String,
    pub eps: String,
    pub delta: String,
    pub d: f64,
    pub c_of_s: f64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            delta0: "0.24".into(),
            eps0: "0.009".into(),
            eps: "0.01".into(),
            delta: "0.01".into(),
            d: 3.0,
            c_of_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartitionConfig {
    /// Height bound of the region `Q`.
    pub s_q: f64,
    /// Radius as a fraction of the injectivity radius of `Q`.
    pub radius_fraction: f64,
    pub max_j: usize,
    pub n_pairs: usize,
    pub n_max: usize,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self { s_q: 4.0, radius_fraction: 0.5, max_j: 40, n_pairs: 1000, n_max: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: Model,
    pub p1: usize,
    pub p2: usize,
    pub r0: f64,
    pub s1: f64,
    pub margin: f64,
    /// `s / s3`.
    pub s_ratio: f64,
    /// `s' / s3`, at least `s_ratio`.
    pub s_prime_ratio: f64,
    pub seed: u64,
    #[serde(rename = "L")]
    pub len: usize,
    /// First `L` of the sweeps in `patterns` and `cover`.
    pub l_min: usize,
    #[serde(rename = "L0")]
    pub l0: u64,
    #[serde(rename = "K")]
    pub k: u64,
    pub n_traj: usize,
    pub n_samples: usize,
    /// Atoms per cover experiment.
    pub n_atoms: usize,
    /// Haar weight of the mixture measure.
    pub lambda: f64,
    /// Digit `n` of the periodic orbit of the word `[n, 1]`.
    pub digit: u32,
    /// The verification harness uses digits `1..=digit_max`.
    pub digit_max: u32,
    /// Mass fraction allowed to be excluded from the entropy estimate.
    pub mass_fraction: f64,
    /// Tolerance of the inequality checks, in entropy units.
    pub tolerance: f64,
    pub bound: BoundConfig,
    pub partition: PartitionConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: Model::Modular,
            p1: 0,
            p2: 1,
            r0: std::f64::consts::E,
            s1: 1.0,
            margin: 1.1,
            s_ratio: std::f64::consts::E.powi(2),
            s_prime_ratio: std::f64::consts::E.powi(2),
            seed: 1,
            len: 30,
            l_min: 10,
            l0: 10,
            k: 100,
            n_traj: 1000,
            n_samples: 10_000,
            n_atoms: 20,
            lambda: 0.5,
            digit: 10,
            digit_max: 30,
            mass_fraction: 0.05,
            tolerance: 0.05,
            bound: BoundConfig::default(),
            partition: PartitionConfig::default(),
        }
    }
}

/// Validated derived quantities.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub flow: FlowParams,
    pub levels: HeightLevels,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn resolve(&self) -> anyhow::Result<Resolved> {
        let rd = RootData::from_dims(self.p1, self.p2)?;
        let flow = FlowParams::new(self.r0, rd)?;
        let base = make_levels(self.s1, self.r0, self.margin)?;
        if self.s_prime_ratio < self.s_ratio {
            bail!("invariant violated: s_prime >= s (s_prime_ratio {} < s_ratio {})", self.s_prime_ratio, self.s_ratio);
        }
        let levels = base.complete(self.s_ratio * base.s3, self.s_prime_ratio * base.s3)?;
        if self.model == Model::Modular && (self.p1, self.p2) != (0, 1) {
            bail!("the modular model needs p1 = 0, p2 = 1");
        }
        if self.len == 0 || self.len > cuspdyn::modular::MAX_STEPS {
            bail!("invariant violated: 1 <= L <= {}", cuspdyn::modular::MAX_STEPS);
        }
        if self.l_min == 0 || self.l_min > self.len {
            bail!("invariant violated: 1 <= l_min <= L");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            bail!("invariant violated: 0 <= lambda <= 1");
        }
        if !(self.mass_fraction > 0.0 && self.mass_fraction < 1.0) {
            bail!("invariant violated: 0 < mass_fraction < 1");
        }
        if self.digit == 0 || self.digit_max == 0 {
            bail!("invariant violated: digit >= 1 and digit_max >= 1");
        }
        Ok(Resolved { flow, levels })
    }

    pub fn require_modular(&self, what: &str) -> anyhow::Result<()> {
        if self.model != Model::Modular {
            bail!("`{what}` needs model = \"modular\"");
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Accepts `eN` for `e^N` (e.g. `e2`) or a plain number.
pub fn parse_ratio(s: &str) -> Result<f64, String> {
    if let Some(rest) = s.strip_prefix('e') {
        let n: f64 = rest.parse().map_err(|_| format!("bad ratio {s:?}"))?;
        return Ok(n.exp());
    }
    s.parse().map_err(|_| format!("bad ratio {s:?}"))
}
