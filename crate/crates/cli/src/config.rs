//! The TOML experiment description.
//!
//! ```toml
//! seed = 7
//! preset = "skewed-f2"          # fills the potential and target unless given below
//! stages = ["pressure", "gibbs", "audit-spikes", "decompose", "walk", "validate-h2"]
//!
//! [potential]
//! kind = "per-letter"           # or "constant" (value), "table" (depth, values)
//! values = [0.2, 0.5, 0.1, 0.4]
//!
//! [target]                      # or target = "uniform-f2" for a preset density
//! default = 1.0
//! steps = [["a", 1.5], ["b a'", 0.5]]
//!
//! [decomposer]
//! stage_cap = 40
//!
//! [audits]
//! h2_samples = 1000
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use freewalk_core::{Alphabet, CylinderFn, DecomposerConfig, MeasureId, Potential, Setup};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Pressure,
    Gibbs,
    AuditSpikes,
    Decompose,
    Walk,
    ValidateH2,
}

impl Stage {
    pub const ALL: [Stage; 6] = [Stage::Pressure, Stage::Gibbs, Stage::AuditSpikes, Stage::Decompose, Stage::Walk, Stage::ValidateH2];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Pressure => "pressure",
            Stage::Gibbs => "gibbs",
            Stage::AuditSpikes => "audit-spikes",
            Stage::Decompose => "decompose",
            Stage::Walk => "walk",
            Stage::ValidateH2 => "validate-h2",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    Constant { value: f64 },
    PerLetter { values: Vec<f64> },
    /// Values over all reduced windows of length `depth` in indexer order.
    Table { depth: usize, values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    /// The target density of a named preset.
    Preset(String),
    /// `default` everywhere, overridden on the listed cylinders; longer stems win.
    Steps {
        #[serde(default = "one")]
        default: f64,
        #[serde(default)]
        steps: Vec<(String, f64)>,
    },
}

fn one() -> f64 {
    1.0
}

/// Which checks run inside their stages, and at what size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Audits {
    pub shadow: bool,
    pub shadow_radius: usize,
    pub radon_nikodym: bool,
    pub rn_instances: usize,
    pub spike_len: usize,
    pub hitting: bool,
    pub hitting_paths: usize,
    pub hitting_depth: usize,
    pub h2_samples: usize,
    pub h2_tolerance: f64,
}

impl Default for Audits {
    fn default() -> Self {
        Audits {
            shadow: true,
            shadow_radius: 12,
            radon_nikodym: true,
            rn_instances: 1000,
            spike_len: 8,
            hitting: true,
            hitting_paths: 100_000,
            hitting_depth: 3,
            h2_samples: 1000,
            h2_tolerance: 1e-7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Every random draw derives from this; there is no default.
    pub seed: u64,
    #[serde(default = "default_rank")]
    pub rank: usize,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub potential: Option<PotentialSpec>,
    #[serde(default)]
    pub target: Option<TargetSpec>,
    #[serde(default)]
    pub reference: Option<MeasureId>,
    #[serde(default)]
    pub decay_radius: Option<usize>,
    #[serde(default)]
    pub decomposer: Option<DecomposerConfig>,
    #[serde(default)]
    pub audits: Audits,
    /// Stages run by `all`, in pipeline order whatever the listed order.
    #[serde(default = "all_stages")]
    pub stages: Vec<Stage>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_rank() -> usize {
    2
}

fn all_stages() -> Vec<Stage> {
    Stage::ALL.to_vec()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.setup()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
        ExperimentConfig::from_toml(&text)
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        c.stages.sort();
        c.stages.dedup();
        let json = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The potential, target and decomposer knobs this config describes.
    pub fn setup(&self) -> Result<Setup> {
        let bad = |e: freewalk_core::Error| CliError::Config(e.to_string());
        let a = Alphabet::new(self.rank).map_err(bad)?;
        let mut setup = match &self.preset {
            Some(name) => Setup::by_name(name).map_err(bad)?,
            None => {
                let potential = self.potential.as_ref().ok_or_else(|| CliError::Config("either preset or potential is required".into()))?;
                Setup {
                    name: "custom".into(),
                    potential: build_potential(a, potential)?,
                    target: CylinderFn::constant(a, 1.0),
                    reference: MeasureId::Hausdorff,
                    decay_radius: 14,
                    decomposer: DecomposerConfig::default(),
                }
            }
        };
        if self.preset.is_some() {
            if let Some(p) = &self.potential {
                setup.potential = build_potential(*setup.potential.alphabet(), p)?;
            }
        }
        if *setup.potential.alphabet() != a {
            return Err(CliError::Config(format!("rank {} does not match preset of rank {}", self.rank, setup.potential.alphabet().rank())));
        }
        match &self.target {
            Some(TargetSpec::Preset(name)) => setup.target = Setup::by_name(name).map_err(bad)?.target,
            Some(TargetSpec::Steps { default, steps }) => {
                let steps = steps
                    .iter()
                    .map(|(w, v)| a.parse_word(w).map(|w| (w, *v)))
                    .collect::<freewalk_core::Result<Vec<_>>>()
                    .map_err(bad)?;
                setup.target = CylinderFn::from_steps(a, *default, &steps).map_err(bad)?;
            }
            None => {}
        }
        setup.target.check_positive().map_err(bad)?;
        if setup.target.alphabet() != &a {
            return Err(CliError::Config("target preset uses a different rank".into()));
        }
        if let Some(r) = self.reference {
            setup.reference = r;
        }
        if let Some(r) = self.decay_radius {
            setup.decay_radius = r;
        }
        if let Some(d) = &self.decomposer {
            setup.decomposer = d.clone();
        }
        Ok(setup)
    }
}

fn build_potential(a: Alphabet, spec: &PotentialSpec) -> Result<Potential> {
    let p = match spec {
        PotentialSpec::Constant { value } => Ok(Potential::constant(a, *value)),
        PotentialSpec::PerLetter { values } => Potential::per_letter(a, values),
        PotentialSpec::Table { depth, values } => Potential::from_table(a, *depth, values.clone()),
    };
    p.map_err(|e| CliError::Config(e.to_string()))
}
