//! Perception-based image quality evaluator.
//!
//! The image is scaled to peak 255, split into 16×16 blocks of MSCN
//! coefficients, and each spatially active block (variance above 0.1) is
//! tested for noticeable artifacts (a near-flat 6-pixel segment on any block
//! edge) and for noise (centre/surround deviation mismatch). The score is the
//! mean distortion over active blocks, in `[0, 100]`.

use crate::error::{Error, Result};
use crate::raster::{Raster, Raster8};

use super::nss::mscn;

const BLOCK: usize = 16;
const ACTIVITY_THRESHOLD: f64 = 0.1;
const IMPAIRED_THRESHOLD: f64 = 0.1;
const SEGMENT: usize = 6;

/// Per-block outcome, exposed for inspection and tests.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BlockVerdict {
    pub variance: f64,
    pub active: bool,
    pub artifact: bool,
    pub noise: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PiqeReport {
    pub score: f64,
    pub active_blocks: usize,
    pub blocks: Vec<BlockVerdict>,
}

fn sample_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    let mean = sum / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n as f64 - 1.0)).sqrt()
}

/// Symmetric (edge-inclusive) reflection of index `i` into `[0, n)`.
fn reflect_symmetric(i: usize, n: usize) -> usize {
    let period = 2 * n;
    let m = i % period;
    if m < n {
        m
    } else {
        period - 1 - m
    }
}

pub fn piqe(img: &Raster8) -> Result<f64> {
    Ok(piqe_report(img)?.score)
}

pub fn piqe_report(img: &Raster8) -> Result<PiqeReport> {
    let (h, w) = img.dims();
    if h < BLOCK || w < BLOCK {
        return Err(Error::TooSmall {
            height: h,
            width: w,
            min: BLOCK,
        });
    }
    let peak = f64::from(*img.data().iter().max().expect("non-empty"));
    if peak == 0.0 {
        return Err(Error::NoActiveBlocks);
    }
    let ph = h.div_ceil(BLOCK) * BLOCK;
    let pw = w.div_ceil(BLOCK) * BLOCK;
    let padded = Raster::from_fn(ph, pw, |r, c| {
        let v = f64::from(img.get(reflect_symmetric(r, h), reflect_symmetric(c, w)));
        (255.0 * v / peak).round_ties_even()
    });
    let norm = mscn(&padded)?;

    let mut blocks = Vec::with_capacity((ph / BLOCK) * (pw / BLOCK));
    let mut distortion = 0.0;
    let mut active = 0usize;
    for br in (0..ph).step_by(BLOCK) {
        for bc in (0..pw).step_by(BLOCK) {
            let at = |r: usize, c: usize| norm.get(br + r, bc + c);
            let all = (0..BLOCK).flat_map(|r| (0..BLOCK).map(move |c| (r, c)));
            let sd = sample_std(all.clone().map(|(r, c)| at(r, c)));
            let variance = sd * sd;
            let mut verdict = BlockVerdict {
                variance,
                ..Default::default()
            };
            if variance > ACTIVITY_THRESHOLD {
                active += 1;
                verdict.active = true;
                verdict.artifact = has_flat_edge_segment(&at);
                verdict.noise = is_noisy(&at, sd);
                if verdict.artifact {
                    distortion += 1.0 - variance;
                }
                if verdict.noise {
                    distortion += variance;
                }
            }
            blocks.push(verdict);
        }
    }
    if active == 0 {
        return Err(Error::NoActiveBlocks);
    }
    let score = ((distortion + 1.0) / (1.0 + active as f64) * 100.0).clamp(0.0, 100.0);
    Ok(PiqeReport {
        score,
        active_blocks: active,
        blocks,
    })
}

fn has_flat_edge_segment(at: &impl Fn(usize, usize) -> f64) -> bool {
    let last = BLOCK - 1;
    let edges: [&dyn Fn(usize) -> f64; 4] = [&|i| at(0, i), &|i| at(i, last), &|i| at(last, i), &|i| at(i, 0)];
    (0..=BLOCK - SEGMENT).any(|start| {
        edges
            .iter()
            .any(|edge| sample_std((start..start + SEGMENT).map(edge)) < IMPAIRED_THRESHOLD)
    })
}

fn is_noisy(at: &impl Fn(usize, usize) -> f64, block_sd: f64) -> bool {
    let (c1, c2) = (BLOCK / 2 - 1, BLOCK / 2);
    let centre = sample_std((0..BLOCK).map(|r| at(r, c1)).chain((0..BLOCK).map(|r| at(r, c2))));
    let surround = sample_std(
        (0..BLOCK)
            .flat_map(|r| (0..BLOCK).map(move |c| (r, c)))
            .filter(|&(_, c)| c != c1 && c != c2)
            .map(|(r, c)| at(r, c)),
    );
    let mut ratio = centre / surround;
    if ratio.is_nan() {
        ratio = 0.0;
    }
    let beta = (block_sd - ratio).abs() / block_sd.max(ratio);
    block_sd > 2.0 * beta
}
