//! No-reference quality metrics for normalized 8-bit images. Lower is better
//! for all three.

pub mod brisque;
pub mod niqe;
pub mod nss;
pub mod piqe;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Raster8;

pub use brisque::{brisque, brisque_features, train_linear, BrisqueModel, Regressor};
pub use niqe::{fit_niqe_model, niqe, NiqeModel};
pub use nss::mscn;
pub use piqe::{piqe, piqe_report};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Piqe,
    Niqe,
    Brisque,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Piqe, Metric::Niqe, Metric::Brisque];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Piqe => "piqe",
            Metric::Niqe => "niqe",
            Metric::Brisque => "brisque",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "piqe" => Ok(Metric::Piqe),
            "niqe" => Ok(Metric::Niqe),
            "brisque" => Ok(Metric::Brisque),
            _ => Err(Error::InvalidParams(format!("unknown metric `{s}`"))),
        }
    }
}

/// Models needed by the model-based metrics. Missing entries make the
/// corresponding metric fail with `ModelMissing`.
#[derive(Clone, Debug, Default)]
pub struct Models {
    pub niqe: Option<NiqeModel>,
    pub brisque: Option<BrisqueModel>,
}

impl Models {
    pub fn bundled() -> Self {
        Models {
            niqe: Some(NiqeModel::bundled()),
            brisque: Some(BrisqueModel::bundled()),
        }
    }
}

pub fn score(img: &Raster8, metric: Metric, models: &Models) -> Result<f64> {
    let missing = || Error::ModelMissing(metric.name().into());
    match metric {
        Metric::Piqe => piqe(img),
        Metric::Niqe => niqe(img, models.niqe.as_ref().ok_or_else(missing)?),
        Metric::Brisque => brisque(img, models.brisque.as_ref().ok_or_else(missing)?),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityRecord {
    pub image: String,
    pub metric: Metric,
    pub score: f64,
}
