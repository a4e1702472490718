//! Contrast-limited adaptive histogram equalisation.
//!
//! The image is split into `tile` sized blocks (reflect-101 padding on the
//! bottom/right so the grid covers it exactly). Each block gets a clipped,
//! redistributed histogram and a cumulative mapping; output pixels blend the
//! four nearest block mappings bilinearly, with block centres as anchors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::raster::Raster;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaheParams {
    pub clip_limit: f64,
    /// Tile size in pixels, `(rows, cols)`.
    pub tile: (usize, usize),
    #[serde(default = "default_levels")]
    pub gray_levels: usize,
}

fn default_levels() -> usize {
    256
}

impl ClaheParams {
    pub fn new(clip_limit: f64, tile: (usize, usize)) -> Self {
        Self {
            clip_limit,
            tile,
            gray_levels: 256,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.clip_limit > 0.0) {
            return Err(Error::InvalidParams(format!(
                "clip limit must be positive, got {}",
                self.clip_limit
            )));
        }
        if self.tile.0 == 0 || self.tile.1 == 0 {
            return Err(Error::InvalidParams("tile size must be positive".into()));
        }
        if !(2..=256).contains(&self.gray_levels) {
            return Err(Error::InvalidParams(format!(
                "gray levels must be in 2..=256, got {}",
                self.gray_levels
            )));
        }
        Ok(())
    }

    /// Per-bin cap: `max(1, round(α · tile_pixels / levels))`.
    pub fn clip_count(&self) -> u32 {
        let pixels = (self.tile.0 * self.tile.1) as f64;
        ((self.clip_limit * pixels / self.gray_levels as f64).round() as u32).max(1)
    }
}

#[inline]
fn bin_of(v: f64, levels: usize) -> usize {
    let v = v.clamp(0.0, 255.0);
    ((v * levels as f64 / 256.0).floor() as usize).min(levels - 1)
}

/// Histogram of `values` after clipping at [`ClaheParams::clip_count`] and
/// one redistribution pass: the excess is split evenly across all bins and
/// the remainder handed out round-robin with a fixed stride.
pub fn clipped_histogram(values: impl IntoIterator<Item = f64>, p: &ClaheParams) -> Vec<u32> {
    let levels = p.gray_levels;
    let mut hist = vec![0u32; levels];
    for v in values {
        hist[bin_of(v, levels)] += 1;
    }
    let clip = p.clip_count();
    let mut excess = 0u32;
    for h in hist.iter_mut() {
        if *h > clip {
            excess += *h - clip;
            *h = clip;
        }
    }
    let share = excess / levels as u32;
    let mut residual = excess % levels as u32;
    for h in hist.iter_mut() {
        *h += share;
    }
    if residual > 0 {
        let step = (levels / residual as usize).max(1);
        let mut i = 0;
        while i < levels && residual > 0 {
            hist[i] += 1;
            residual -= 1;
            i += step;
        }
    }
    hist
}

#[inline]
fn reflect101(i: usize, n: usize) -> usize {
    if i < n {
        i
    } else {
        2 * (n - 1) - i
    }
}

pub fn clahe(img: &Raster, p: &ClaheParams) -> Result<Raster> {
    clahe_with(img, p, Execution::default())
}

pub fn clahe_with(img: &Raster, p: &ClaheParams, exec: Execution) -> Result<Raster> {
    p.validate()?;
    let (h, w) = img.dims();
    let (th, tw) = p.tile;
    if h < th || w < tw {
        return Err(Error::BadGeometry { tile_h: th, tile_w: tw });
    }
    let ny = h.div_ceil(th);
    let nx = w.div_ceil(tw);
    let levels = p.gray_levels;
    let scale = 255.0 / (th * tw) as f64;

    // One mapping per tile, indexed [ty * nx + tx][bin].
    let tiles: Vec<(usize, usize)> = (0..ny).flat_map(|ty| (0..nx).map(move |tx| (ty, tx))).collect();
    let luts: Vec<Vec<f64>> = par::map(exec, &tiles, |&(ty, tx)| {
        let values = (ty * th..(ty + 1) * th).flat_map(|r| {
            let r = reflect101(r, h);
            (tx * tw..(tx + 1) * tw).map(move |c| img.get(r, reflect101(c, w)))
        });
        let hist = clipped_histogram(values, p);
        let mut acc = 0u32;
        hist.iter()
            .map(|&n| {
                acc += n;
                f64::from(acc) * scale
            })
            .collect()
    });

    let inv_th = 1.0 / th as f64;
    let inv_tw = 1.0 / tw as f64;
    let mut out = vec![0.0; h * w];
    par::for_each_row(exec, &mut out, w, |r, row| {
        let tyf = r as f64 * inv_th - 0.5;
        let ty1f = tyf.floor();
        let ya = tyf - ty1f;
        let ty1 = (ty1f.max(0.0) as usize).min(ny - 1);
        let ty2 = ((ty1f + 1.0).max(0.0) as usize).min(ny - 1);
        for (c, o) in row.iter_mut().enumerate() {
            let txf = c as f64 * inv_tw - 0.5;
            let tx1f = txf.floor();
            let xa = txf - tx1f;
            let tx1 = (tx1f.max(0.0) as usize).min(nx - 1);
            let tx2 = ((tx1f + 1.0).max(0.0) as usize).min(nx - 1);
            let b = bin_of(img.get(r, c), levels);
            let top = luts[ty1 * nx + tx1][b] * (1.0 - xa) + luts[ty1 * nx + tx2][b] * xa;
            let bottom = luts[ty2 * nx + tx1][b] * (1.0 - xa) + luts[ty2 * nx + tx2][b] * xa;
            *o = (top * (1.0 - ya) + bottom * ya).clamp(0.0, 255.0);
        }
    });
    Ok(Raster::from_vec_unchecked(h, w, out))
}
