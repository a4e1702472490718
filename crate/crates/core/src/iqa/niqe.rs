//! Natural image quality evaluator.
//!
//! Images are cut into square patches; each patch yields 18 AGGD features at
//! full and half scale (36 in total). A multivariate Gaussian fitted to the
//! patch features of the test image is compared with one fitted to sharp
//! patches of a pristine corpus.
//!
//! Model file format (UTF-8 text, whitespace separated, one record per line):
//!
//! ```text
//! niqe-model v1
//! patch <usize>
//! sharpness <f64>
//! dim <usize>
//! mean <dim values>
//! cov <dim values>      (repeated dim times, row-major)
//! ```
//!
//! Values are written with Rust's shortest round-trip formatting.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::raster::{Raster, Raster8};

use super::nss::{downscale_half, fit_aggd, mean_factor, mscn_with_sigma, pair_product, SHIFTS};

pub const PATCH: usize = 96;
pub const SHARPNESS_THRESHOLD: f64 = 0.75;
pub const FEATURES: usize = 36;
pub const MIN_CORPUS: usize = 10;
const HEADER: &str = "niqe-model v1";

#[derive(Clone, Debug, PartialEq)]
pub struct NiqeModel {
    pub patch: usize,
    pub sharpness: f64,
    pub mean: Vec<f64>,
    /// Row-major `dim × dim`.
    pub cov: Vec<f64>,
}

static BUNDLED: &str = include_str!("../../models/niqe_small.model");

impl NiqeModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Small model fitted on a dozen public-domain photographs, shipped so
    /// the metric runs without external assets.
    pub fn bundled() -> Self {
        Self::from_text(BUNDLED).expect("bundled model parses")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::ModelFormat(format!("niqe: {m}"));
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some(HEADER) {
            return Err(bad("missing `niqe-model v1` header"));
        }
        let mut field = |name: &str| -> Result<Vec<String>> {
            let line = lines.next().ok_or_else(|| bad(&format!("missing `{name}`")))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(name) {
                return Err(bad(&format!("expected `{name}`, found `{line}`")));
            }
            Ok(parts.map(str::to_string).collect())
        };
        let one = |v: Vec<String>, name: &str| -> Result<String> {
            match v.as_slice() {
                [x] => Ok(x.clone()),
                _ => Err(bad(&format!("`{name}` takes one value"))),
            }
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number `{s}`")));
        let patch = one(field("patch")?, "patch")?
            .parse::<usize>()
            .map_err(|_| bad("bad patch size"))?;
        let sharpness = num(&one(field("sharpness")?, "sharpness")?)?;
        let dim = one(field("dim")?, "dim")?
            .parse::<usize>()
            .map_err(|_| bad("bad dim"))?;
        let mean = field("mean")?.iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
        if mean.len() != dim {
            return Err(bad("mean length differs from dim"));
        }
        let mut cov = Vec::with_capacity(dim * dim);
        for _ in 0..dim {
            let row = field("cov")?.iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
            if row.len() != dim {
                return Err(bad("cov row length differs from dim"));
            }
            cov.extend(row);
        }
        if patch < 2 * super::nss::WINDOW || dim != FEATURES {
            return Err(bad("unsupported patch size or dimension"));
        }
        Ok(NiqeModel {
            patch,
            sharpness,
            mean,
            cov,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        writeln!(s, "{HEADER}").unwrap();
        writeln!(s, "patch {}", self.patch).unwrap();
        writeln!(s, "sharpness {}", self.sharpness).unwrap();
        writeln!(s, "dim {}", self.dim()).unwrap();
        writeln!(s, "mean {}", join(&self.mean)).unwrap();
        for row in self.cov.chunks(self.dim()) {
            writeln!(s, "cov {}", join(row)).unwrap();
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

/// 18 features of one MSCN patch: AGGD shape and mean scale of the
/// coefficients, then shape, mean, left and right scale of each of the four
/// neighbour products.
pub fn patch_features(coeffs: &[f64], h: usize, w: usize) -> [f64; 18] {
    let mut f = [0.0; 18];
    let fit = fit_aggd(coeffs);
    f[0] = fit.shape;
    f[1] = (fit.beta_left() + fit.beta_right()) / 2.0;
    for (k, &shift) in SHIFTS.iter().enumerate() {
        let prod = pair_product(coeffs, h, w, shift);
        let fit = fit_aggd(&prod);
        let (bl, br) = (fit.beta_left(), fit.beta_right());
        f[2 + 4 * k..6 + 4 * k].copy_from_slice(&[fit.shape, (br - bl) * mean_factor(fit.shape), bl, br]);
    }
    f
}

fn block(img: &Raster, r0: usize, c0: usize, size: usize) -> Vec<f64> {
    (r0..r0 + size)
        .flat_map(|r| img.row(r)[c0..c0 + size].iter().copied())
        .collect()
}

/// Per-patch 36-dim features and scale-1 sharpness (mean local deviation).
fn image_patches(img: &Raster8, patch: usize, exec: Execution) -> Result<Vec<([f64; FEATURES], f64)>> {
    let (h, w) = img.dims();
    let (nh, nw) = (h / patch, w / patch);
    if nh == 0 || nw == 0 {
        return Err(Error::TooSmall {
            height: h,
            width: w,
            min: patch,
        });
    }
    let full = img.to_raster();
    let cropped = Raster::from_fn(nh * patch, nw * patch, |r, c| full.get(r, c));
    let s1 = mscn_with_sigma(&cropped)?;
    let half = downscale_half(&cropped);
    let s2 = mscn_with_sigma(&half)?;
    let hp = patch / 2;
    let cells: Vec<(usize, usize)> = (0..nh).flat_map(|i| (0..nw).map(move |j| (i, j))).collect();
    Ok(par::map(exec, &cells, |&(i, j)| {
        let mut f = [0.0; FEATURES];
        let c1 = block(&s1.coeffs, i * patch, j * patch, patch);
        f[..18].copy_from_slice(&patch_features(&c1, patch, patch));
        let c2 = block(&s2.coeffs, i * hp, j * hp, hp);
        f[18..].copy_from_slice(&patch_features(&c2, hp, hp));
        let sharp = block(&s1.sigma, i * patch, j * patch, patch).iter().sum::<f64>() / (patch * patch) as f64;
        (f, sharp)
    }))
}

/// Column means and `n − 1` covariance; zero covariance for a single row.
fn mvg(rows: &[[f64; FEATURES]]) -> (DVector<f64>, DMatrix<f64>) {
    let n = rows.len();
    let mut mean = DVector::zeros(FEATURES);
    for r in rows {
        mean += DVector::from_row_slice(r);
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(FEATURES, FEATURES);
    if n > 1 {
        for r in rows {
            let d = DVector::from_row_slice(r) - &mean;
            cov += &d * d.transpose();
        }
        cov /= (n - 1) as f64;
    }
    (mean, cov)
}

pub fn fit_niqe_model(corpus: &[Raster8]) -> Result<NiqeModel> {
    fit_niqe_model_with(corpus, Execution::default())
}

pub fn fit_niqe_model_with(corpus: &[Raster8], exec: Execution) -> Result<NiqeModel> {
    let usable = corpus
        .iter()
        .filter(|im| im.height() >= PATCH && im.width() >= PATCH)
        .count();
    if usable < MIN_CORPUS || usable < corpus.len() {
        return Err(Error::CorpusTooSmall {
            found: usable,
            needed: MIN_CORPUS.max(corpus.len()),
        });
    }
    let mut rows = Vec::new();
    for img in corpus {
        let patches = image_patches(img, PATCH, exec)?;
        let peak = patches.iter().map(|p| p.1).fold(0.0, f64::max);
        let keep = patches
            .into_iter()
            .filter(|p| peak == 0.0 || p.1 > SHARPNESS_THRESHOLD * peak);
        rows.extend(keep.map(|p| p.0));
    }
    // Accumulate in a canonical order so the model does not depend on the
    // order of the corpus.
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let (mean, cov) = mvg(&rows);
    Ok(NiqeModel {
        patch: PATCH,
        sharpness: SHARPNESS_THRESHOLD,
        mean: mean.as_slice().to_vec(),
        cov: cov.transpose().as_slice().to_vec(),
    })
}

pub fn niqe(img: &Raster8, model: &NiqeModel) -> Result<f64> {
    niqe_with(img, model, Execution::default())
}

pub fn niqe_with(img: &Raster8, model: &NiqeModel, exec: Execution) -> Result<f64> {
    let rows: Vec<[f64; FEATURES]> = image_patches(img, model.patch, exec)?
        .into_iter()
        .map(|p| p.0)
        .collect();
    let (mu, cov) = mvg(&rows);
    let model_mu = DVector::from_column_slice(&model.mean);
    let model_cov = DMatrix::from_row_slice(FEATURES, FEATURES, &model.cov);
    let mut pooled = (model_cov + cov) / 2.0;
    let eps = 1e-6 * pooled.trace() / FEATURES as f64;
    for i in 0..FEATURES {
        pooled[(i, i)] += eps;
    }
    let inv = match pooled.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => pooled
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::InvalidParams(e.to_string()))?,
    };
    let d = model_mu - mu;
    Ok((d.transpose() * inv * &d)[(0, 0)].max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_text_round_trip() {
        let m = NiqeModel::bundled();
        assert_eq!(m.dim(), FEATURES);
        assert_eq!(NiqeModel::from_text(&m.to_text()).unwrap(), m);
        assert!(NiqeModel::from_text("niqe-model v2\n").is_err());
    }

    #[test]
    fn bundled_covariance_symmetric() {
        let m = NiqeModel::bundled();
        for i in 0..FEATURES {
            for j in 0..FEATURES {
                assert_eq!(m.cov[i * FEATURES + j], m.cov[j * FEATURES + i]);
            }
            assert!(m.cov[i * FEATURES + i] >= 0.0);
        }
    }

    #[test]
    fn small_inputs() {
        let m = NiqeModel::bundled();
        assert!(matches!(
            niqe(&Raster8::filled(95, 200, 3), &m),
            Err(Error::TooSmall { .. })
        ));
        assert!(niqe(&Raster8::filled(96, 96, 3), &m).unwrap().is_finite());
        let few = vec![Raster8::filled(96, 96, 1); 9];
        assert!(matches!(fit_niqe_model(&few), Err(Error::CorpusTooSmall { .. })));
    }
}
