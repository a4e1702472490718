//! Z-projections: per-pixel reductions along the temporal axis.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::raster::{Raster, Raster8};
use crate::stackio::FrameStack;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Projection {
    /// Sum.
    Sp,
    /// Mean.
    Ap,
    /// Maximum intensity.
    Mip,
    /// Index of the first maximum.
    Pdp,
    /// Population standard deviation.
    Sdp,
    /// Upper quantile (0.75 unless configured).
    Qp,
    /// Median.
    Mdp,
    /// Interquartile range.
    Iqr,
}

impl Projection {
    pub const ALL: [Projection; 8] = [
        Projection::Sp,
        Projection::Ap,
        Projection::Mip,
        Projection::Pdp,
        Projection::Sdp,
        Projection::Qp,
        Projection::Mdp,
        Projection::Iqr,
    ];

    /// The six projections of the default grid.
    pub const GRID: [Projection; 6] = [
        Projection::Sp,
        Projection::Ap,
        Projection::Mip,
        Projection::Pdp,
        Projection::Sdp,
        Projection::Qp,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Projection::Sp => "SP",
            Projection::Ap => "AP",
            Projection::Mip => "MIP",
            Projection::Pdp => "PDP",
            Projection::Sdp => "SDP",
            Projection::Qp => "QP",
            Projection::Mdp => "MDP",
            Projection::Iqr => "IQR",
        }
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Projection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "sp" | "sum" => Projection::Sp,
            "ap" | "mean" | "avg" | "average" => Projection::Ap,
            "mip" | "max" | "mp" => Projection::Mip,
            "pdp" | "peak" => Projection::Pdp,
            "sdp" | "stdp" | "stdev" | "std" => Projection::Sdp,
            "qp" | "quantile" => Projection::Qp,
            "mdp" | "median" => Projection::Mdp,
            "iqr" => Projection::Iqr,
            _ => return Err(Error::UnknownProjection(s.to_string())),
        })
    }
}

impl TryFrom<String> for Projection {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Projection> for String {
    fn from(p: Projection) -> Self {
        p.token().to_string()
    }
}

/// Result of fusing one stack.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedImage {
    pub data: Raster,
    pub projection: Projection,
    pub source_depth: usize,
}

/// Min–max range used to normalize a projection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormRecord {
    pub lo: f64,
    pub hi: f64,
    /// `lo == hi`; output was forced to zero.
    pub degenerate: bool,
}

/// Quantile of sorted `v` by linear interpolation at rank `q · (n − 1)`.
pub fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    debug_assert!(!v.is_empty());
    let rank = q * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let frac = rank - lo as f64;
    match v.get(lo + 1) {
        Some(&next) if frac > 0.0 => v[lo] + frac * (next - v[lo]),
        _ => v[lo],
    }
}

/// Reduces one pixel's temporal profile, in frame order.
fn reduce(values: &mut [f64], projection: Projection, q: f64) -> f64 {
    let n = values.len() as f64;
    match projection {
        Projection::Sp => values.iter().sum(),
        Projection::Ap => values.iter().sum::<f64>() / n,
        Projection::Mip => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Projection::Pdp => {
            let mut best = 0;
            for (i, &v) in values.iter().enumerate() {
                if v > values[best] {
                    best = i;
                }
            }
            best as f64
        }
        Projection::Sdp => {
            // Integer-valued input: both sums are exact, so the result does
            // not depend on frame order.
            let (s, s2) = values.iter().fold((0.0, 0.0), |(s, s2), &v| (s + v, s2 + v * v));
            (n * s2 - s * s).max(0.0).sqrt() / n
        }
        Projection::Qp | Projection::Mdp | Projection::Iqr => {
            values.sort_by(f64::total_cmp);
            match projection {
                Projection::Qp => quantile_sorted(values, q),
                Projection::Mdp => quantile_sorted(values, 0.5),
                _ => quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25),
            }
        }
    }
}

pub fn project(stack: &FrameStack, projection: Projection, q: f64) -> Result<ProjectedImage> {
    project_with(stack, projection, q, Execution::default())
}

pub fn project_with(stack: &FrameStack, projection: Projection, q: f64, exec: Execution) -> Result<ProjectedImage> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParams(format!("quantile must lie in (0, 1), got {q}")));
    }
    let (h, w) = stack.dims();
    let frames = stack.frames();
    let mut out = vec![0.0; h * w];
    par::for_each_row(exec, &mut out, w, |r, row| {
        let mut profile = Vec::with_capacity(frames.len());
        for (c, o) in row.iter_mut().enumerate() {
            profile.clear();
            profile.extend(frames.iter().map(|f| f64::from(f.get(r, c))));
            *o = reduce(&mut profile, projection, q);
        }
    });
    Ok(ProjectedImage {
        data: Raster::from_vec_unchecked(h, w, out),
        projection,
        source_depth: frames.len(),
    })
}

/// Tolerance that absorbs floating-point error before half-up rounding, so
/// values that are exactly `k + 0.5` in exact arithmetic round the same way
/// regardless of how they were computed (e.g. SP versus AP).
const ROUND_SLACK: f64 = 1e-7;

/// Min–max normalization to `[0, 255]` with half-up rounding.
pub fn normalize_8bit(img: &Raster) -> (Raster8, NormRecord) {
    let (lo, hi) = img.min_max();
    let (h, w) = img.dims();
    if hi <= lo {
        return (
            Raster8::filled(h, w, 0),
            NormRecord {
                lo,
                hi,
                degenerate: true,
            },
        );
    }
    let range = hi - lo;
    let data = img
        .data()
        .iter()
        .map(|&v| (255.0 * (v - lo) / range + 0.5 + ROUND_SLACK).floor().clamp(0.0, 255.0) as u8)
        .collect();
    (
        Raster8::new(h, w, data).expect("dimensions preserved"),
        NormRecord {
            lo,
            hi,
            degenerate: false,
        },
    )
}
