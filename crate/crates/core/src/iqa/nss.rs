//! Natural-scene-statistics front end shared by NIQE and BRISQUE.

use std::sync::LazyLock;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::raster::Raster;

pub const WINDOW: usize = 7;
pub const WINDOW_SIGMA: f64 = 7.0 / 6.0;
/// Stabilizing constant of the divisive normalization (0–255 scale).
pub const MSCN_C: f64 = 1.0;

/// Normalized 7×7 Gaussian window, row-major.
pub fn gaussian_window() -> [f64; WINDOW * WINDOW] {
    let half = (WINDOW / 2) as f64;
    let mut w = [0.0; WINDOW * WINDOW];
    for r in 0..WINDOW {
        for c in 0..WINDOW {
            let (y, x) = (r as f64 - half, c as f64 - half);
            w[r * WINDOW + c] = (-(x * x + y * y) / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp();
        }
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// MSCN coefficients together with the local deviation map they used.
pub struct Mscn {
    pub coeffs: Raster,
    pub sigma: Raster,
}

/// `(I − μ) / (σ + 1)` with Gaussian-weighted local mean and deviation,
/// replicated borders.
pub fn mscn_with_sigma(img: &Raster) -> Result<Mscn> {
    let (h, w) = img.dims();
    if h < WINDOW || w < WINDOW {
        return Err(Error::TooSmall {
            height: h,
            width: w,
            min: WINDOW,
        });
    }
    let win = gaussian_window();
    let half = (WINDOW / 2) as isize;
    let mut coeffs = Vec::with_capacity(h * w);
    let mut sigmas = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let (mut mu, mut sq) = (0.0, 0.0);
            for dr in -half..=half {
                for dc in -half..=half {
                    let wt = win[((dr + half) as usize) * WINDOW + (dc + half) as usize];
                    let v = img.get_clamped(r as isize + dr, c as isize + dc);
                    mu += wt * v;
                    sq += wt * v * v;
                }
            }
            let sigma = (sq - mu * mu).abs().sqrt();
            coeffs.push((img.get(r, c) - mu) / (sigma + MSCN_C));
            sigmas.push(sigma);
        }
    }
    Ok(Mscn {
        coeffs: Raster::from_vec_unchecked(h, w, coeffs),
        sigma: Raster::from_vec_unchecked(h, w, sigmas),
    })
}

pub fn mscn(img: &Raster) -> Result<Raster> {
    Ok(mscn_with_sigma(img)?.coeffs)
}

/// Neighbour offsets of the four pairwise products: horizontal, vertical,
/// main diagonal, secondary diagonal.
pub const SHIFTS: [(isize, isize); 4] = [(0, 1), (1, 0), (1, 1), (-1, 1)];

/// `x · roll(x, shift)` with circular wrap-around, flattened row-major.
pub fn pair_product(x: &[f64], h: usize, w: usize, shift: (isize, isize)) -> Vec<f64> {
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        let sr = (r as isize - shift.0).rem_euclid(h as isize) as usize;
        for c in 0..w {
            let sc = (c as isize - shift.1).rem_euclid(w as isize) as usize;
            out.push(x[r * w + c] * x[sr * w + sc]);
        }
    }
    out
}

const GRID_LO: f64 = 0.2;
const GRID_STEP: f64 = 0.001;
const GRID_LEN: usize = 9801; // 0.2 ..= 10.0

/// Shape grid and `Γ(2/a)² / (Γ(1/a) Γ(3/a))` on it.
static SHAPE_TABLE: LazyLock<Vec<(f64, f64)>> = LazyLock::new(|| {
    (0..GRID_LEN)
        .map(|i| {
            let a = GRID_LO + i as f64 * GRID_STEP;
            (a, shape_ratio(a))
        })
        .collect()
});

#[inline]
pub(crate) fn shape_ratio(a: f64) -> f64 {
    (2.0 * ln_gamma(2.0 / a) - ln_gamma(1.0 / a) - ln_gamma(3.0 / a)).exp()
}

/// `sqrt(Γ(1/a) / Γ(3/a))`.
#[inline]
pub(crate) fn scale_factor(a: f64) -> f64 {
    (0.5 * (ln_gamma(1.0 / a) - ln_gamma(3.0 / a))).exp()
}

/// `Γ(2/a) / Γ(1/a)`.
#[inline]
pub(crate) fn mean_factor(a: f64) -> f64 {
    (ln_gamma(2.0 / a) - ln_gamma(1.0 / a)).exp()
}

/// Grid shape whose table value is closest to `target` (first on ties).
fn lookup_shape(target: f64, table_value: impl Fn(f64) -> f64) -> f64 {
    let mut best = (f64::INFINITY, GRID_LO);
    for &(a, r) in SHAPE_TABLE.iter() {
        let d = (table_value(r) - target).abs();
        if d < best.0 {
            best = (d, a);
        }
    }
    best.1
}

/// Shape used when the data carry no spread at all.
pub const DEGENERATE_SHAPE: f64 = 2.0;

/// Symmetric generalized Gaussian fit by moment matching.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GgdFit {
    pub shape: f64,
    pub sigma: f64,
}

pub fn fit_ggd(x: &[f64]) -> GgdFit {
    let n = x.len() as f64;
    let sigma_sq = x.iter().map(|v| v * v).sum::<f64>() / n;
    let e = x.iter().map(|v| v.abs()).sum::<f64>() / n;
    if sigma_sq == 0.0 || e == 0.0 {
        return GgdFit {
            shape: DEGENERATE_SHAPE,
            sigma: 0.0,
        };
    }
    let rho = sigma_sq / (e * e);
    GgdFit {
        shape: lookup_shape(rho, |r| 1.0 / r),
        sigma: sigma_sq.sqrt(),
    }
}

/// Asymmetric generalized Gaussian fit by moment matching.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AggdFit {
    pub shape: f64,
    pub left_std: f64,
    pub right_std: f64,
}

impl AggdFit {
    pub fn beta_left(&self) -> f64 {
        self.left_std * scale_factor(self.shape)
    }

    pub fn beta_right(&self) -> f64 {
        self.right_std * scale_factor(self.shape)
    }
}

pub fn fit_aggd(x: &[f64]) -> AggdFit {
    let (mut ls, mut ln, mut rs, mut rn) = (0.0, 0usize, 0.0, 0usize);
    let (mut abs_sum, mut sq_sum) = (0.0, 0.0);
    for &v in x {
        if v < 0.0 {
            ls += v * v;
            ln += 1;
        } else if v > 0.0 {
            rs += v * v;
            rn += 1;
        }
        abs_sum += v.abs();
        sq_sum += v * v;
    }
    if sq_sum == 0.0 {
        return AggdFit {
            shape: DEGENERATE_SHAPE,
            left_std: 0.0,
            right_std: 0.0,
        };
    }
    let left_std = if ln > 0 { (ls / ln as f64).sqrt() } else { 0.0 };
    let right_std = if rn > 0 { (rs / rn as f64).sqrt() } else { 0.0 };
    // The normalized ratio is symmetric in γ ↔ 1/γ, so a one-sided sample
    // may use γ = 0 either way.
    let gamma_hat = if left_std == 0.0 || right_std == 0.0 {
        0.0
    } else {
        left_std / right_std
    };
    let n = x.len() as f64;
    let r_hat = (abs_sum / n).powi(2) / (sq_sum / n);
    let g = gamma_hat;
    let r_norm = r_hat * (g.powi(3) + 1.0) * (g + 1.0) / (g * g + 1.0).powi(2);
    AggdFit {
        shape: lookup_shape(r_norm, |r| r),
        left_std,
        right_std,
    }
}

/// Bicubic kernel (a = −0.5).
#[inline]
fn cubic(x: f64) -> f64 {
    let ax = x.abs();
    let ax2 = ax * ax;
    let ax3 = ax2 * ax;
    if ax <= 1.0 {
        1.5 * ax3 - 2.5 * ax2 + 1.0
    } else if ax <= 2.0 {
        -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0
    } else {
        0.0
    }
}

/// Per-output-sample taps `(source index, weight)` for an antialiased bicubic
/// half-scale along an axis of length `n`, mirrored at the ends.
fn half_scale_taps(n: usize) -> Vec<Vec<(usize, f64)>> {
    let scale: f64 = 0.5;
    let width = 4.0 / scale;
    let taps = width.ceil() as isize + 2;
    let out_len = n.div_ceil(2);
    (1..=out_len)
        .map(|i| {
            let u = i as f64 / scale + 0.5 * (1.0 - 1.0 / scale);
            let left = (u - width / 2.0).floor() as isize;
            let mut row: Vec<(usize, f64)> = (0..taps)
                .map(|k| {
                    let j = left + k;
                    let wgt = scale * cubic(scale * (u - j as f64));
                    // Mirror 1-based index j into [1, n].
                    let period = 2 * n as isize;
                    let m = (j - 1).rem_euclid(period);
                    let idx = if m < n as isize { m } else { period - 1 - m };
                    (idx as usize, wgt)
                })
                .collect();
            let total: f64 = row.iter().map(|t| t.1).sum();
            row.iter_mut().for_each(|t| t.1 /= total);
            row
        })
        .collect()
}

/// Half-size resample with an antialiased bicubic kernel (rows first, then
/// columns), output size `ceil(H/2) × ceil(W/2)`.
pub fn downscale_half(img: &Raster) -> Raster {
    let (h, w) = img.dims();
    let row_taps = half_scale_taps(h);
    let col_taps = half_scale_taps(w);
    let oh = row_taps.len();
    let ow = col_taps.len();
    let mut tmp = vec![0.0; oh * w];
    for (r, taps) in row_taps.iter().enumerate() {
        for c in 0..w {
            tmp[r * w + c] = taps.iter().map(|&(i, wt)| wt * img.get(i, c)).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for (c, taps) in col_taps.iter().enumerate() {
            out[r * ow + c] = taps.iter().map(|&(j, wt)| wt * tmp[r * w + j]).sum();
        }
    }
    Raster::from_vec_unchecked(oh, ow, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_is_normalized_and_symmetric() {
        let w = gaussian_window();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(w[0], w[48]);
        assert_eq!(w[3], w[21]);
    }

    #[test]
    fn constant_image_has_zero_mscn() {
        let out = mscn(&Raster::filled(9, 9, 120.0)).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
        assert!(matches!(mscn(&Raster::filled(6, 9, 1.0)), Err(Error::TooSmall { .. })));
    }

    #[test]
    fn gaussian_shape_recovered() {
        // Deterministic standard-normal sample via Box–Muller on an LCG.
        let mut s = 12345u64;
        let mut uni = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 + 0.5) / (1u64 << 53) as f64
        };
        let x: Vec<f64> = (0..200_000)
            .map(|_| (-2.0 * uni().ln()).sqrt() * (2.0 * std::f64::consts::PI * uni()).cos())
            .collect();
        let g = fit_ggd(&x);
        assert!((g.shape - 2.0).abs() < 0.05, "{}", g.shape);
        assert!((g.sigma - 1.0).abs() < 0.01);
        let a = fit_aggd(&x);
        assert!((a.shape - 2.0).abs() < 0.05);
        assert!((a.left_std - a.right_std).abs() < 0.02);
    }

    #[test]
    fn degenerate_fits_are_finite() {
        let z = vec![0.0; 10];
        assert_eq!(fit_ggd(&z).shape, DEGENERATE_SHAPE);
        let a = fit_aggd(&z);
        assert_eq!((a.left_std, a.right_std), (0.0, 0.0));
        let one_sided = fit_aggd(&[0.0, 1.0, 2.0, 0.5]);
        assert!(one_sided.shape.is_finite() && one_sided.left_std == 0.0);
        let other_side = fit_aggd(&[0.0, -1.0, -2.0, -0.5]);
        assert_eq!(one_sided.shape, other_side.shape);
    }

    #[test]
    fn half_scale_preserves_constants_and_size() {
        let out = downscale_half(&Raster::filled(7, 10, 42.0));
        assert_eq!(out.dims(), (4, 5));
        assert!(out.data().iter().all(|&v| (v - 42.0).abs() < 1e-12));
    }

    #[test]
    fn pair_product_wraps() {
        let x = [1.0, 2.0, 3.0, 4.0];
        // roll by one column: [[2,1],[4,3]]
        assert_eq!(pair_product(&x, 2, 2, (0, 1)), vec![2.0, 2.0, 12.0, 12.0]);
    }
}
