//! Blind/referenceless image spatial quality evaluator.
//!
//! 36 features (GGD fit of the MSCN map and AGGD fits of its four neighbour
//! products, at full and half scale) are scaled to `[-1, 1]` and fed to a
//! regressor: an RBF support-vector machine loaded from file, or a ridge
//! linear model trainable from `(features, score)` pairs.
//!
//! Model file format (UTF-8 text, whitespace separated):
//!
//! ```text
//! brisque-model v1
//! kind svr_rbf | linear
//! dim 36
//! min <dim values>
//! max <dim values>
//! # svr_rbf:
//! gamma <f64>
//! rho <f64>
//! sv <count>
//! <coef> <dim values>   (repeated count times)
//! # linear:
//! bias <f64>
//! weights <dim values>
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. The SVR prediction is
//! `Σ coef·exp(−gamma·‖x − sv‖²) − rho`; the linear one is `bias + w·x`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::raster::{Raster, Raster8};

use super::nss::{downscale_half, fit_aggd, fit_ggd, mean_factor, mscn, pair_product, scale_factor, SHIFTS};

pub const FEATURES: usize = 36;
const HEADER: &str = "brisque-model v1";

#[derive(Clone, Debug, PartialEq)]
pub enum Regressor {
    SvrRbf {
        gamma: f64,
        rho: f64,
        coefs: Vec<f64>,
        /// Support vectors, each `dim` long.
        vectors: Vec<Vec<f64>>,
    },
    Linear {
        bias: f64,
        weights: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BrisqueModel {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub regressor: Regressor,
}

static BUNDLED: &str = include_str!("../../models/brisque_live.model");

fn scale_features(f: &[f64], min: &[f64], max: &[f64]) -> Vec<f64> {
    f.iter()
        .zip(min.iter().zip(max))
        .map(|(&x, (&lo, &hi))| {
            if hi > lo {
                -1.0 + 2.0 * (x - lo) / (hi - lo)
            } else {
                0.0
            }
        })
        .collect()
}

impl BrisqueModel {
    /// RBF regressor trained on the LIVE database, with matching ranges.
    pub fn bundled() -> Self {
        Self::from_text(BUNDLED).expect("bundled model parses")
    }

    pub fn predict(&self, features: &[f64; FEATURES]) -> f64 {
        let x = scale_features(features, &self.min, &self.max);
        match &self.regressor {
            Regressor::SvrRbf {
                gamma,
                rho,
                coefs,
                vectors,
            } => {
                let sum: f64 = coefs
                    .iter()
                    .zip(vectors)
                    .map(|(c, sv)| {
                        let d2: f64 = sv.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
                        c * (-gamma * d2).exp()
                    })
                    .sum();
                sum - rho
            }
            Regressor::Linear { bias, weights } => bias + weights.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>(),
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::ModelFormat(format!("brisque: {m}"));
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        if lines.next() != Some(HEADER) {
            return Err(bad("missing `brisque-model v1` header"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number `{s}`")));
        let mut field = |name: &str| -> Result<Vec<String>> {
            let line = lines.next().ok_or_else(|| bad(&format!("missing `{name}`")))?;
            let mut parts = line.split_whitespace();
            if name.is_empty() {
                return Ok(line.split_whitespace().map(str::to_string).collect());
            }
            if parts.next() != Some(name) {
                return Err(bad(&format!("expected `{name}`, found `{line}`")));
            }
            Ok(parts.map(str::to_string).collect())
        };
        let scalar = |v: Vec<String>| -> Result<String> {
            match v.as_slice() {
                [x] => Ok(x.clone()),
                _ => Err(bad("expected one value")),
            }
        };
        let vector = |v: Vec<String>, n: usize| -> Result<Vec<f64>> {
            let out = v.iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
            if out.len() != n {
                return Err(bad(&format!("expected {n} values, found {}", out.len())));
            }
            Ok(out)
        };
        let kind = scalar(field("kind")?)?;
        let dim: usize = scalar(field("dim")?)?.parse().map_err(|_| bad("bad dim"))?;
        if dim != FEATURES {
            return Err(bad(&format!("dim must be {FEATURES}")));
        }
        let min = vector(field("min")?, dim)?;
        let max = vector(field("max")?, dim)?;
        let regressor = match kind.as_str() {
            "svr_rbf" => {
                let gamma = num(&scalar(field("gamma")?)?)?;
                let rho = num(&scalar(field("rho")?)?)?;
                let count: usize = scalar(field("sv")?)?.parse().map_err(|_| bad("bad sv count"))?;
                let mut coefs = Vec::with_capacity(count);
                let mut vectors = Vec::with_capacity(count);
                for _ in 0..count {
                    let mut row = vector(field("")?, dim + 1)?;
                    coefs.push(row.remove(0));
                    vectors.push(row);
                }
                Regressor::SvrRbf {
                    gamma,
                    rho,
                    coefs,
                    vectors,
                }
            }
            "linear" => Regressor::Linear {
                bias: num(&scalar(field("bias")?)?)?,
                weights: vector(field("weights")?, dim)?,
            },
            other => return Err(bad(&format!("unknown kind `{other}`"))),
        };
        if lines.next().is_some() {
            return Err(bad("trailing data"));
        }
        Ok(BrisqueModel { min, max, regressor })
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let mut s = String::new();
        writeln!(s, "{HEADER}").unwrap();
        let kind = match self.regressor {
            Regressor::SvrRbf { .. } => "svr_rbf",
            Regressor::Linear { .. } => "linear",
        };
        writeln!(s, "kind {kind}\ndim {FEATURES}").unwrap();
        writeln!(s, "min {}\nmax {}", join(&self.min), join(&self.max)).unwrap();
        match &self.regressor {
            Regressor::SvrRbf {
                gamma,
                rho,
                coefs,
                vectors,
            } => {
                writeln!(s, "gamma {gamma}\nrho {rho}\nsv {}", coefs.len()).unwrap();
                for (c, v) in coefs.iter().zip(vectors) {
                    writeln!(s, "{c} {}", join(v)).unwrap();
                }
            }
            Regressor::Linear { bias, weights } => {
                writeln!(s, "bias {bias}\nweights {}", join(weights)).unwrap();
            }
        }
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::ModelMissing(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn scale_block(img: &Raster, out: &mut [f64]) -> Result<()> {
    let (h, w) = img.dims();
    let m = mscn(img)?;
    let coeffs = m.data();
    let g = fit_ggd(coeffs);
    out[0] = g.shape;
    out[1] = g.sigma * g.sigma;
    for (k, &shift) in SHIFTS.iter().enumerate() {
        let a = fit_aggd(&pair_product(coeffs, h, w, shift));
        let eta = (a.right_std - a.left_std) * mean_factor(a.shape) * scale_factor(a.shape);
        out[2 + 4 * k..6 + 4 * k].copy_from_slice(&[a.shape, eta, a.left_std.powi(2), a.right_std.powi(2)]);
    }
    Ok(())
}

pub fn brisque_features(img: &Raster8) -> Result<[f64; FEATURES]> {
    let full = img.to_raster();
    let mut f = [0.0; FEATURES];
    scale_block(&full, &mut f[..18])?;
    scale_block(&downscale_half(&full), &mut f[18..])?;
    Ok(f)
}

pub fn brisque(img: &Raster8, model: &BrisqueModel) -> Result<f64> {
    Ok(model.predict(&brisque_features(img)?))
}

/// Fits a ridge regressor on features scaled to the training ranges. The bias
/// is not penalized.
pub fn train_linear(features: &[[f64; FEATURES]], scores: &[f64], ridge: f64) -> Result<BrisqueModel> {
    if features.is_empty() || features.len() != scores.len() {
        return Err(Error::InvalidParams(format!(
            "need matching non-empty features and scores, got {} and {}",
            features.len(),
            scores.len()
        )));
    }
    if !(ridge >= 0.0) {
        return Err(Error::InvalidParams(format!("ridge must be non-negative, got {ridge}")));
    }
    let mut min = vec![f64::INFINITY; FEATURES];
    let mut max = vec![f64::NEG_INFINITY; FEATURES];
    for f in features {
        for k in 0..FEATURES {
            min[k] = min[k].min(f[k]);
            max[k] = max[k].max(f[k]);
        }
    }
    let n = features.len();
    let x = DMatrix::from_fn(n, FEATURES + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            scale_features(&features[i], &min, &max)[j - 1]
        }
    });
    let y = DVector::from_column_slice(scores);
    let mut gram = x.transpose() * &x;
    for j in 1..=FEATURES {
        gram[(j, j)] += ridge;
    }
    let rhs = x.transpose() * y;
    let sol = gram
        .clone()
        .cholesky()
        .map(|c| c.solve(&rhs))
        .or_else(|| gram.pseudo_inverse(1e-12).ok().map(|p| p * &rhs))
        .ok_or_else(|| Error::InvalidParams("singular training system".into()))?;
    Ok(BrisqueModel {
        min,
        max,
        regressor: Regressor::Linear {
            bias: sol[0],
            weights: sol.as_slice()[1..].to_vec(),
        },
    })
}
