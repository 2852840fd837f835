//! Run configuration: a TOML file whose fields can be overridden by flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use transim::backend::{DecodingConfig, ToyModelSpec};
use transim::baselines::{BleuConfig, ChrfConfig};
use transim::benchmark::{BenchmarkMetric, MacroComponent, MacroRecipe};
use transim::d2t::{Direction, DEFAULT_ADEQUACY_CRITERIA};
use transim::stats::{BootstrapConfig, ResampleAxes};
use transim::{Error, Result, ScoreDirection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DirectionArg {
    /// sim(A|B)
    A,
    /// sim(B|A)
    B,
    Both,
}

impl From<DirectionArg> for ScoreDirection {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::A => ScoreDirection::AGivenB,
            DirectionArg::B => ScoreDirection::BGivenA,
            DirectionArg::Both => ScoreDirection::Symmetric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    /// `toy` or the base URL of a model server.
    pub endpoint: String,
    /// Model name used in signatures; defaults to the backend's own id.
    pub model: Option<String>,
    /// Software stack serving the model, as it should appear in signatures.
    pub stack_version: String,
    pub decoding: DecodingConfig,
    pub max_batch: usize,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
    pub toy: ToyModelSpec,
    pub embedder_layer: Option<u32>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            endpoint: "toy".into(),
            model: None,
            stack_version: "none".into(),
            decoding: DecodingConfig::default(),
            max_batch: 32,
            max_in_flight: 2,
            timeout_secs: 300,
            toy: ToyModelSpec::default(),
            embedder_layer: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NmtConfig {
    pub normalize: bool,
    pub direction: DirectionArg,
    pub pivot_lang: Option<String>,
    pub target_lang: Option<String>,
}

impl Default for NmtConfig {
    fn default() -> Self {
        NmtConfig {
            normalize: true,
            direction: DirectionArg::Both,
            pivot_lang: None,
            target_lang: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: String,
    pub metric: BenchmarkMetric,
    /// Schema of the split used to tune thresholds.
    #[serde(default)]
    pub validation: Option<PathBuf>,
    pub test: PathBuf,
    /// Row-aligned translation of the same dataset; when given, every split
    /// is turned into cross-lingual pairs against it.
    #[serde(default)]
    pub paired_with: Option<PairedSplits>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairedSplits {
    #[serde(default)]
    pub validation: Option<PathBuf>,
    pub test: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetaevalConfig {
    pub judgments: Option<PathBuf>,
    pub criteria: Vec<String>,
    pub directions: Vec<Direction>,
    pub default_language: String,
}

impl Default for MetaevalConfig {
    fn default() -> Self {
        MetaevalConfig {
            judgments: None,
            criteria: DEFAULT_ADEQUACY_CRITERIA.iter().map(|s| s.to_string()).collect(),
            directions: Direction::ALL.to_vec(),
            default_language: "en".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub measures: Vec<String>,
    pub seed: u64,
    pub repetitions: usize,
    pub alpha: f64,
    pub resample: ResampleAxes,
    /// Extra measure variants: `normalize` adds the opposite normalization of
    /// every translation-based measure.
    pub ablation: Vec<String>,
    /// Language of segments that carry no tag.
    pub default_lang: Option<String>,
    pub backend: BackendConfig,
    pub nmt: NmtConfig,
    pub chrf: ChrfConfig,
    pub bleu: BleuConfig,
    pub datasets: Vec<DatasetEntry>,
    pub macro_average: Vec<MacroComponent>,
    pub metaeval: MetaevalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let boot = BootstrapConfig::default();
        RunConfig {
            measures: vec!["nmt-direct".into()],
            seed: boot.seed,
            repetitions: boot.repetitions,
            alpha: boot.alpha,
            resample: boot.axes,
            ablation: Vec::new(),
            default_lang: None,
            backend: BackendConfig::default(),
            nmt: NmtConfig::default(),
            chrf: ChrfConfig::default(),
            bleu: BleuConfig::default(),
            datasets: Vec::new(),
            macro_average: Vec::new(),
            metaeval: MetaevalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn bootstrap(&self) -> BootstrapConfig {
        BootstrapConfig {
            repetitions: self.repetitions,
            alpha: self.alpha,
            seed: self.seed,
            axes: self.resample,
        }
    }

    pub fn macro_recipe(&self) -> MacroRecipe {
        if self.macro_average.is_empty() {
            let names: Vec<String> = self.datasets.iter().map(|d| d.name.clone()).collect();
            MacroRecipe::flat(&names)
        } else {
            MacroRecipe {
                components: self.macro_average.clone(),
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bootstrap().validate()?;
        if self.measures.is_empty() {
            return Err(Error::Config("no measures selected".into()));
        }
        for a in &self.ablation {
            if a != "normalize" {
                return Err(Error::Config(format!("unknown ablation {a:?}; expected \"normalize\"")));
            }
        }
        for d in &self.datasets {
            if let Some(p) = &d.paired_with {
                if d.validation.is_some() != p.validation.is_some() {
                    return Err(Error::Config(format!(
                        "dataset {}: paired_with must give a validation schema exactly when the dataset has one",
                        d.name
                    )));
                }
            }
        }
        self.backend
            .toy
            .validate()
            .map_err(|e| Error::Config(format!("toy backend: {e}")))?;
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form of the effective configuration.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Resolves `path` against the directory of the config file it came from.
pub fn resolve(base: Option<&Path>, path: &Path) -> PathBuf {
    match base.and_then(Path::parent) {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_hash_stably() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.hash(), RunConfig::default().hash());
        assert_eq!(c.hash().len(), 64);
        let mut other = c.clone();
        other.seed = 1;
        assert_ne!(c.hash(), other.hash());
    }

    #[test]
    fn parses_toml_with_partial_sections() {
        let c: RunConfig = toml::from_str(
            r#"
            measures = ["nmt-pivot", "chrf"]
            seed = 3
            [nmt]
            pivot_lang = "L2"
            direction = "a"
            [chrf]
            word_order = 2
            [[datasets]]
            name = "x"
            metric = "auc"
            test = "x.toml"
            "#,
        )
        .unwrap();
        assert_eq!(c.nmt.pivot_lang.as_deref(), Some("L2"));
        assert_eq!(c.nmt.direction, DirectionArg::A);
        assert!(c.nmt.normalize);
        assert_eq!(c.chrf.word_order, 2);
        assert_eq!(c.chrf.char_order, 6);
        assert_eq!(c.macro_recipe().components.len(), 1);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(toml::from_str::<RunConfig>("sed = 3").is_err());
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let c = RunConfig {
            alpha: 0.0,
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = RunConfig {
            ablation: vec!["x".into()],
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c: RunConfig = toml::from_str(
            r#"
            [[datasets]]
            name = "x"
            metric = "accuracy"
            validation = "v.toml"
            test = "t.toml"
            paired_with = { test = "en_t.toml" }
            "#,
        )
        .unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn relative_paths_follow_the_config() {
        let base = Path::new("/data/bench/benchmark.toml");
        assert_eq!(
            resolve(Some(base), Path::new("a.toml")),
            PathBuf::from("/data/bench/a.toml")
        );
        assert_eq!(resolve(Some(base), Path::new("/abs.toml")), PathBuf::from("/abs.toml"));
        assert_eq!(resolve(None, Path::new("a.toml")), PathBuf::from("a.toml"));
    }
}
