//! Run configuration (TOML).
//!
//! Every key is optional; an empty file reproduces the default setup. Unknown
//! keys are rejected. See `config/default.toml` for the complete file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::pipeline::{enumerate_sequences, Families, OperatorSet, PipelineSpec, PreprocSequence};
use crate::preprocess::{ClaheParams, FilterParams, GammaParams, Operator, OperatorKind};
use crate::project::Projection;
use crate::stackio::ChannelPolicy;

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorConfig {
    Clahe {
        clip_limit: f64,
        tile: (usize, usize),
        #[serde(default = "default_levels")]
        gray_levels: usize,
    },
    Gamma {
        gamma: f64,
        #[serde(default = "default_max_intensity")]
        max_intensity: f64,
    },
    Median {
        size: usize,
    },
    Bilateral {
        diameter: usize,
        sigma_color: f64,
        sigma_space: f64,
    },
    NlMeans {
        h: f64,
        template_window: usize,
        search_window: usize,
    },
}

fn default_levels() -> usize {
    256
}

fn default_max_intensity() -> f64 {
    255.0
}

impl OperatorConfig {
    fn into_kind(self) -> Result<OperatorKind> {
        let kind = match self {
            OperatorConfig::Clahe {
                clip_limit,
                tile,
                gray_levels,
            } => {
                let p = ClaheParams {
                    clip_limit,
                    tile,
                    gray_levels,
                };
                p.validate()?;
                OperatorKind::Clahe(p)
            }
            OperatorConfig::Gamma { gamma, max_intensity } => {
                if !(gamma > 0.0 && max_intensity > 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "gamma and max_intensity must be positive, got {gamma}, {max_intensity}"
                    )));
                }
                OperatorKind::Gamma(GammaParams { gamma, max_intensity })
            }
            OperatorConfig::Median { size } => OperatorKind::Filter(FilterParams::Median { size }),
            OperatorConfig::Bilateral {
                diameter,
                sigma_color,
                sigma_space,
            } => OperatorKind::Filter(FilterParams::Bilateral {
                diameter,
                sigma_color,
                sigma_space,
            }),
            OperatorConfig::NlMeans {
                h,
                template_window,
                search_window,
            } => OperatorKind::Filter(FilterParams::NlMeans {
                h,
                template_window,
                search_window,
            }),
        };
        if let OperatorKind::Filter(f) = &kind {
            f.validate()?;
        }
        Ok(kind)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamiliesConfig {
    #[serde(default)]
    pub equalisation: Vec<String>,
    #[serde(default)]
    pub remapping: Vec<String>,
    #[serde(default)]
    pub filtering: Vec<String>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelPaths {
    pub niqe: Option<PathBuf>,
    pub brisque: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ChannelConfig {
    Named(String),
    Index(usize),
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Root holding one sub-directory of frames per video.
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub pattern: Option<String>,
    pub channel: Option<ChannelConfig>,
    pub quantile: Option<f64>,
    pub projections: Option<Vec<String>>,
    pub metrics: Option<Vec<String>>,
    /// Worker threads; 0 or absent means all cores.
    pub jobs: Option<usize>,
    pub max_sequence_len: Option<usize>,
    /// Restrict the grid to these pipeline tokens (e.g. `QP_CH_NF`).
    #[serde(default)]
    pub pipelines: Vec<String>,
    pub families: Option<FamiliesConfig>,
    #[serde(default)]
    pub operators: BTreeMap<String, OperatorConfig>,
    #[serde(default)]
    pub models: ModelPaths,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    fn validate(&self) -> Result<()> {
        let q = self.quantile();
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Config(format!("quantile must lie in (0, 1), got {q}")));
        }
        if !(1..=3).contains(&self.max_sequence_len()) {
            return Err(Error::Config("max_sequence_len must be 1, 2 or 3".into()));
        }
        self.projections()?;
        self.channel()?;
        let ops = self.operator_set()?;
        let fam = self.families();
        fam.check_disjoint()?;
        for op in fam.equalisation.iter().chain(&fam.remapping).chain(&fam.filtering) {
            ops.get(op).map_err(|e| Error::Config(e.to_string()))?;
        }
        for p in &self.pipelines {
            let spec: PipelineSpec = p.parse()?;
            ops.resolve(&spec.seq).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn quantile(&self) -> f64 {
        self.quantile.unwrap_or(0.75)
    }

    pub fn max_sequence_len(&self) -> usize {
        self.max_sequence_len.unwrap_or(3)
    }

    pub fn pattern(&self) -> &str {
        self.pattern.as_deref().unwrap_or("*.png")
    }

    pub fn jobs(&self) -> Option<usize> {
        self.jobs.filter(|&n| n > 0)
    }

    pub fn channel(&self) -> Result<ChannelPolicy> {
        match &self.channel {
            None => Ok(ChannelPolicy::Luma),
            Some(ChannelConfig::Index(i)) => Ok(ChannelPolicy::Channel(*i)),
            Some(ChannelConfig::Named(s)) if s == "luma" => Ok(ChannelPolicy::Luma),
            Some(ChannelConfig::Named(s)) => Err(Error::Config(format!("unknown channel policy `{s}`"))),
        }
    }

    pub fn projections(&self) -> Result<Vec<Projection>> {
        match &self.projections {
            None => Ok(Projection::GRID.to_vec()),
            Some(list) => list.iter().map(|p| p.parse()).collect(),
        }
    }

    pub fn metrics(&self) -> Vec<String> {
        self.metrics
            .clone()
            .unwrap_or_else(|| vec!["piqe".into(), "niqe".into(), "brisque".into()])
    }

    pub fn families(&self) -> Families {
        match &self.families {
            None => Families::default(),
            Some(f) => Families {
                equalisation: f.equalisation.clone(),
                remapping: f.remapping.clone(),
                filtering: f.filtering.clone(),
            },
        }
    }

    /// Default operators with this file's overrides and additions applied.
    pub fn operator_set(&self) -> Result<OperatorSet> {
        let mut set = OperatorSet::default();
        for (name, cfg) in &self.operators {
            set.insert(Operator::new(name.clone(), cfg.clone().into_kind()?));
        }
        Ok(set)
    }

    pub fn sequences(&self) -> Result<Vec<PreprocSequence>> {
        enumerate_sequences(&self.families(), self.max_sequence_len())
    }

    pub fn pipeline_filter(&self) -> Result<Vec<PipelineSpec>> {
        self.pipelines.iter().map(|p| p.parse()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default_setup() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg.sequences().unwrap().len(), 111);
        assert_eq!(cfg.projections().unwrap(), Projection::GRID.to_vec());
        assert_eq!(cfg.quantile(), 0.75);
    }

    #[test]
    fn bundled_default_file_parses() {
        let text = include_str!("../../../config/default.toml");
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.sequences().unwrap().len(), 111);
        let ops = cfg.operator_set().unwrap();
        assert_eq!(
            ops.get("CH").unwrap().kind,
            OperatorKind::Clahe(ClaheParams::new(4.0, (4, 4)))
        );
    }

    #[test]
    fn overrides_and_single_family() {
        let cfg = RunConfig::from_toml(
            r#"
            [families]
            equalisation = ["CX"]

            [operators.CX]
            kind = "clahe"
            clip_limit = 2.0
            tile = [8, 8]
            "#,
        )
        .unwrap();
        let seqs = cfg.sequences().unwrap();
        assert_eq!(seqs.len(), 1);
        assert_eq!(seqs[0].token(), "CX");
    }

    #[test]
    fn malformed_configs_rejected() {
        assert!(RunConfig::from_toml("bogus_key = 1").is_err());
        assert!(RunConfig::from_toml("quantile = 1.5").is_err());
        assert!(RunConfig::from_toml("projections = [\"XYZ\"]").is_err());
        assert!(RunConfig::from_toml("[families]\nequalisation = [\"ZZ\"]").is_err());
        assert!(RunConfig::from_toml("[operators.MB]\nkind = \"median\"\nsize = 4").is_err());
        assert!(RunConfig::from_toml("pipelines = [\"QP_CH_XX\"]").is_err());
        assert!(RunConfig::from_toml("this is not toml").is_err());
    }
}
