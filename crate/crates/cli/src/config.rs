//! Run configuration: one TOML document with a section per module.

use std::path::{Path, PathBuf};

use churnet::contagion::ContagionConfig;
use churnet::features::FeatureConfig;
use churnet::graphs::FirmWeightScheme;
use churnet::learners::{ModelKind, ModelParams};
use churnet::registry::{Format, MonthIndex};
use churnet::synth::MarketConfig;
use churnet::walkforward::WalkForwardConfig;
use churnet::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Registry file to analyse; without it the `[synth]` market is generated in memory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSection>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub graph: GraphSection,
    #[serde(default)]
    pub features: FeaturesSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub walkforward: WalkSection,
    #[serde(default)]
    pub contagion: ContagionConfig,
    #[serde(default)]
    pub synth: MarketConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Relative paths resolve against the config file's directory.
    pub registry: PathBuf,
    #[serde(default = "default_format")]
    pub format: Format,
}

fn default_format() -> Format {
    Format::Csv
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Defaults to the first month with data (or the first simulated month).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<MonthIndex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<MonthIndex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphSection {
    pub firm_scheme: FirmWeightScheme,
    pub path_samples: usize,
    pub communities: bool,
    pub seed: u64,
}

impl Default for GraphSection {
    fn default() -> Self {
        GraphSection { firm_scheme: FirmWeightScheme::default(), path_samples: 64, communities: true, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeaturesSection {
    /// Firm-graph weighting used for the propagated firm columns.
    pub firm_scheme: FirmWeightScheme,
    /// Catalog variants compared by `train-eval`: `full` or `no_network`.
    pub variants: Vec<String>,
    pub baseline: String,
}

impl Default for FeaturesSection {
    fn default() -> Self {
        FeaturesSection {
            firm_scheme: FeatureConfig::default().firm_scheme,
            variants: vec!["full".into(), "no_network".into()],
            baseline: "no_network".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub kind: ModelKind,
    /// Overrides on top of the defaults for `kind`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<toml::Table>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection { kind: ModelKind::GradientBoosted, params: None }
    }
}

impl ModelSection {
    pub fn resolve(&self) -> Result<ModelParams> {
        let mut base = serde_json::to_value(ModelParams::defaults_for(self.kind))?;
        if let Some(over) = &self.params {
            let over = serde_json::to_value(over).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let (serde_json::Value::Object(b), serde_json::Value::Object(o)) = (&mut base, over) else {
                unreachable!("params serialize as tables")
            };
            b.extend(o);
        }
        let params: ModelParams =
            serde_json::from_value(base).map_err(|e| Error::InvalidArgument(format!("[model.params]: {e}")))?;
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkSection {
    /// Defaults to the earliest month the history allows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_test_month: Option<MonthIndex>,
    /// Defaults to the last grid month.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_test_month: Option<MonthIndex>,
    pub gap_months: usize,
    pub min_train_months: usize,
    pub undersample_ratio: f64,
    pub calibration_slice_months: usize,
    pub top_features: usize,
    pub seed: u64,
}

impl Default for WalkSection {
    fn default() -> Self {
        let d = WalkForwardConfig::new(MonthIndex(0), MonthIndex(0));
        WalkSection {
            first_test_month: None,
            last_test_month: None,
            gap_months: d.gap_months,
            min_train_months: d.min_train_months,
            undersample_ratio: d.undersample_ratio,
            calibration_slice_months: d.calibration_slice_months,
            top_features: d.top_features,
            seed: d.seed,
        }
    }
}

impl FeaturesSection {
    pub fn engine(&self) -> FeatureConfig {
        FeatureConfig { firm_scheme: self.firm_scheme }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(data) = &mut cfg.data {
            if data.registry.is_relative() {
                let dir = path.parent().unwrap_or(Path::new("."));
                data.registry = dir.join(&data.registry);
            }
        }
        Ok(cfg)
    }

    /// Replace every seed in the document.
    pub fn override_seed(&mut self, seed: u64) {
        self.graph.seed = seed;
        self.walkforward.seed = seed;
        self.synth.seed = seed;
    }

    /// Module-level checks that need no data.
    pub fn validate(&self) -> Result<()> {
        if let (Some(s), Some(e)) = (self.grid.start, self.grid.end) {
            if s > e {
                return Err(Error::InvalidArgument(format!("[grid] start {s} is after end {e}")));
            }
        }
        self.graph.firm_scheme.validate()?;
        self.features.firm_scheme.validate()?;
        self.model.resolve()?;
        self.contagion.validate()?;
        if self.data.is_none() {
            self.synth.validate()?;
        }
        if self.features.variants.is_empty() {
            return Err(Error::InvalidArgument("[features] variants is empty".into()));
        }
        for v in &self.features.variants {
            churnet::features::FeatureCatalog::variant(v)?;
        }
        if !self.features.variants.contains(&self.features.baseline) {
            return Err(Error::InvalidArgument(format!(
                "[features] baseline `{}` is not one of the variants",
                self.features.baseline
            )));
        }
        Ok(())
    }

    /// Walk-forward settings for a grid `[start, end]`.
    pub fn walkforward_config(&self, start: MonthIndex, end: MonthIndex) -> Result<WalkForwardConfig> {
        let w = &self.walkforward;
        let first = w.first_test_month.unwrap_or(start.offset((w.min_train_months + w.gap_months) as i32));
        let cfg = WalkForwardConfig {
            first_test_month: first,
            last_test_month: w.last_test_month.unwrap_or(end),
            gap_months: w.gap_months,
            min_train_months: w.min_train_months,
            model_kind: self.model.kind,
            model: self.model.resolve()?,
            undersample_ratio: w.undersample_ratio,
            calibration_slice_months: w.calibration_slice_months,
            seed: w.seed,
            top_features: w.top_features,
        };
        cfg.validate(start, end)?;
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form, so formatting and key order do not matter.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
