//! Neighbourhood noise filters. All use replicated borders.

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::raster::Raster;

/// Replicate-padded copy of `img` with `pad` pixels on every side.
struct Padded {
    data: Vec<f64>,
    stride: usize,
    pad: usize,
}

impl Padded {
    fn new(img: &Raster, pad: usize) -> Self {
        let (h, w) = img.dims();
        let stride = w + 2 * pad;
        let mut data = Vec::with_capacity(stride * (h + 2 * pad));
        for r in 0..h + 2 * pad {
            for c in 0..stride {
                data.push(img.get_clamped(r as isize - pad as isize, c as isize - pad as isize));
            }
        }
        Self { data, stride, pad }
    }

    /// Value at image coordinates `(r + dr, c + dc)` with `|dr|, |dc| <= pad`.
    #[inline]
    fn at(&self, r: usize, c: usize, dr: isize, dc: isize) -> f64 {
        let rr = (r + self.pad) as isize + dr;
        let cc = (c + self.pad) as isize + dc;
        self.data[rr as usize * self.stride + cc as usize]
    }
}

pub fn median_blur(img: &Raster, size: usize) -> Result<Raster> {
    median_blur_with(img, size, Execution::default())
}

pub fn median_blur_with(img: &Raster, size: usize, exec: Execution) -> Result<Raster> {
    let (h, w) = img.dims();
    if size == 0 || size % 2 == 0 || size > h.min(w) {
        return Err(Error::BadKernel(size));
    }
    let rad = (size / 2) as isize;
    let padded = Padded::new(img, size / 2);
    let mid = size * size / 2;
    let mut out = vec![0.0; h * w];
    par::for_each_row(exec, &mut out, w, |r, row| {
        let mut window = Vec::with_capacity(size * size);
        for (c, o) in row.iter_mut().enumerate() {
            window.clear();
            for dr in -rad..=rad {
                for dc in -rad..=rad {
                    window.push(padded.at(r, c, dr, dc));
                }
            }
            let (_, m, _) = window.select_nth_unstable_by(mid, f64::total_cmp);
            *o = *m;
        }
    });
    Ok(Raster::from_vec_unchecked(h, w, out))
}

pub fn bilateral(img: &Raster, diameter: usize, sigma_color: f64, sigma_space: f64) -> Result<Raster> {
    bilateral_with(img, diameter, sigma_color, sigma_space, Execution::default())
}

/// Weighted mean over the disc of radius `diameter / 2`:
/// `w = exp(-ΔI² / 2σc²) · exp(-|Δx|² / 2σs²)`.
pub fn bilateral_with(
    img: &Raster,
    diameter: usize,
    sigma_color: f64,
    sigma_space: f64,
    exec: Execution,
) -> Result<Raster> {
    if diameter == 0 || !(sigma_color > 0.0) || !(sigma_space > 0.0) {
        return Err(Error::InvalidParams(format!(
            "bilateral needs d >= 1 and positive sigmas, got d={diameter}, σc={sigma_color}, σs={sigma_space}"
        )));
    }
    let (h, w) = img.dims();
    let rad = (diameter / 2) as isize;
    let color_coeff = -0.5 / (sigma_color * sigma_color);
    let space_coeff = -0.5 / (sigma_space * sigma_space);
    let taps: Vec<(isize, isize, f64)> = (-rad..=rad)
        .flat_map(|dr| (-rad..=rad).map(move |dc| (dr, dc)))
        .filter(|&(dr, dc)| dr * dr + dc * dc <= rad * rad)
        .map(|(dr, dc)| (dr, dc, ((dr * dr + dc * dc) as f64 * space_coeff).exp()))
        .collect();
    let padded = Padded::new(img, rad as usize);
    let mut out = vec![0.0; h * w];
    par::for_each_row(exec, &mut out, w, |r, row| {
        for (c, o) in row.iter_mut().enumerate() {
            let centre = img.get(r, c);
            let (mut num, mut den) = (0.0, 0.0);
            for &(dr, dc, ws) in &taps {
                let v = padded.at(r, c, dr, dc);
                let d = v - centre;
                let wt = ws * (d * d * color_coeff).exp();
                num += wt * v;
                den += wt;
            }
            *o = num / den;
        }
    });
    Ok(Raster::from_vec_unchecked(h, w, out))
}

pub(crate) fn check_windows(template: usize, search: usize) -> Result<()> {
    if template == 0 || search == 0 || template % 2 == 0 || search % 2 == 0 || template > search {
        return Err(Error::BadWindow { template, search });
    }
    Ok(())
}

pub fn nl_means(img: &Raster, h: f64, template_window: usize, search_window: usize) -> Result<Raster> {
    nl_means_with(img, h, template_window, search_window, Execution::default())
}

/// Non-local means with `σ = 0`: each candidate `q` in the search window is
/// weighted by `exp(-D(p, q) / h²)`, where `D` is the mean squared difference
/// between the template patches around `p` and `q`.
pub fn nl_means_with(
    img: &Raster,
    h: f64,
    template_window: usize,
    search_window: usize,
    exec: Execution,
) -> Result<Raster> {
    check_windows(template_window, search_window)?;
    if !(h > 0.0) {
        return Err(Error::InvalidParams(format!("NL-means h must be positive, got {h}")));
    }
    let (height, width) = img.dims();
    let tr = (template_window / 2) as isize;
    let sr = (search_window / 2) as isize;
    let padded = Padded::new(img, (tr + sr) as usize);
    let inv_h2 = 1.0 / (h * h);
    let inv_n = 1.0 / (template_window * template_window) as f64;
    let mut out = vec![0.0; height * width];
    par::for_each_row(exec, &mut out, width, |r, row| {
        for (c, o) in row.iter_mut().enumerate() {
            let (mut num, mut den) = (0.0, 0.0);
            for sy in -sr..=sr {
                for sx in -sr..=sr {
                    let mut dist = 0.0;
                    for ty in -tr..=tr {
                        for tx in -tr..=tr {
                            let d = padded.at(r, c, ty, tx) - padded.at(r, c, sy + ty, sx + tx);
                            dist += d * d;
                        }
                    }
                    let wt = (-(dist * inv_n) * inv_h2).exp();
                    num += wt * padded.at(r, c, sy, sx);
                    den += wt;
                }
            }
            *o = num / den;
        }
    });
    Ok(Raster::from_vec_unchecked(height, width, out))
}
