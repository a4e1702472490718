//! Agreement between two segmentation ground truths (old vs new): binary
//! foreground IoU, background mismatch and per-instance counts and areas.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::project::quantile_sorted;

/// Instance mask: 0 is background, any other value an instance label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledMask {
    height: usize,
    width: usize,
    labels: Vec<u32>,
}

impl LabeledMask {
    pub fn new(height: usize, width: usize, labels: Vec<u32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Empty);
        }
        if labels.len() != height * width {
            return Err(Error::InvalidParams(format!(
                "mask buffer holds {} labels, expected {height}x{width}",
                labels.len()
            )));
        }
        Ok(LabeledMask { height, width, labels })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> u32) -> Self {
        let labels = (0..height * width).map(|i| f(i / width, i % width)).collect();
        LabeledMask { height, width, labels }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn foreground(&self) -> usize {
        self.labels.iter().filter(|&&l| l != 0).count()
    }

    /// Reads an 8- or 16-bit single-channel PNG.
    pub fn load(path: &Path) -> Result<Self> {
        let decode = |reason: String| Error::Decode {
            path: path.to_path_buf(),
            reason,
        };
        let img = image::open(path).map_err(|e| decode(e.to_string()))?;
        let (w, h) = (img.width() as usize, img.height() as usize);
        let labels = match img {
            image::DynamicImage::ImageLuma8(b) => b.into_raw().into_iter().map(u32::from).collect(),
            image::DynamicImage::ImageLuma16(b) => b.into_raw().into_iter().map(u32::from).collect(),
            other => {
                return Err(decode(format!(
                    "expected a single-channel mask, found {:?}",
                    other.color()
                )))
            }
        };
        LabeledMask::new(h, w, labels)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

fn check_geometry(a: &LabeledMask, b: &LabeledMask) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::GeometryMismatch {
            expected: a.dims(),
            found: b.dims(),
        });
    }
    Ok(())
}

/// Foreground intersection over union, in percent. Two empty foregrounds
/// agree perfectly (100).
pub fn iou(a: &LabeledMask, b: &LabeledMask) -> Result<f64> {
    check_geometry(a, b)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.labels.iter().zip(&b.labels) {
        inter += usize::from(x != 0 && y != 0);
        union += usize::from(x != 0 || y != 0);
    }
    Ok(if union == 0 {
        100.0
    } else {
        100.0 * inter as f64 / union as f64
    })
}

/// Percent of all pixels that are background in `a` but foreground in `b`,
/// and the converse.
pub fn bg_mismatch(a: &LabeledMask, b: &LabeledMask) -> Result<(f64, f64)> {
    check_geometry(a, b)?;
    let (mut in_a, mut in_b) = (0usize, 0usize);
    for (&x, &y) in a.labels.iter().zip(&b.labels) {
        in_a += usize::from(x == 0 && y != 0);
        in_b += usize::from(y == 0 && x != 0);
    }
    let total = a.labels.len() as f64;
    Ok((100.0 * in_a as f64 / total, 100.0 * in_b as f64 / total))
}

/// Connected components of the binary foreground, labelled 1.. in raster
/// order of their first pixel.
pub fn label_components(m: &LabeledMask, conn: Connectivity) -> LabeledMask {
    let (h, w) = m.dims();
    let mut out = vec![0u32; h * w];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    let offsets: &[(isize, isize)] = match conn {
        Connectivity::Four => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
        Connectivity::Eight => &[(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)],
    };
    for start in 0..h * w {
        if m.labels[start] == 0 || out[start] != 0 {
            continue;
        }
        next += 1;
        out[start] = next;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            let (r, c) = ((p / w) as isize, (p % w) as isize);
            for &(dr, dc) in offsets {
                let (nr, nc) = (r + dr, c + dc);
                if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                    continue;
                }
                let q = nr as usize * w + nc as usize;
                if m.labels[q] != 0 && out[q] == 0 {
                    out[q] = next;
                    queue.push_back(q);
                }
            }
        }
    }
    LabeledMask {
        height: h,
        width: w,
        labels: out,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceStats {
    pub count: usize,
    /// Pixel count per instance, by ascending label.
    pub areas: Vec<usize>,
}

pub fn instance_stats(m: &LabeledMask, relabel: bool) -> InstanceStats {
    instance_stats_with(m, relabel, Connectivity::default())
}

pub fn instance_stats_with(m: &LabeledMask, relabel: bool, conn: Connectivity) -> InstanceStats {
    let relabeled;
    let m = if relabel {
        relabeled = label_components(m, conn);
        &relabeled
    } else {
        m
    };
    let mut areas = BTreeMap::new();
    for &l in m.labels.iter().filter(|&&l| l != 0) {
        *areas.entry(l).or_insert(0usize) += 1;
    }
    InstanceStats {
        count: areas.len(),
        areas: areas.into_values().collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaskComparison {
    pub iou: f64,
    /// Background in the old mask, foreground in the new one (percent).
    pub bg_mismatch_o: f64,
    /// Background in the new mask, foreground in the old one (percent).
    pub bg_mismatch_n: f64,
    pub cell_count_o: usize,
    pub cell_count_n: usize,
    pub areas_o: Vec<usize>,
    pub areas_n: Vec<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CompareOptions {
    /// Replace labels by connected components before counting.
    pub relabel: bool,
    pub connectivity: Connectivity,
}

pub fn compare(old: &LabeledMask, new: &LabeledMask) -> Result<MaskComparison> {
    compare_with(old, new, CompareOptions::default())
}

pub fn compare_with(old: &LabeledMask, new: &LabeledMask, opts: CompareOptions) -> Result<MaskComparison> {
    let iou = iou(old, new)?;
    let (bg_mismatch_o, bg_mismatch_n) = bg_mismatch(old, new)?;
    let so = instance_stats_with(old, opts.relabel, opts.connectivity);
    let sn = instance_stats_with(new, opts.relabel, opts.connectivity);
    Ok(MaskComparison {
        iou,
        bg_mismatch_o,
        bg_mismatch_n,
        cell_count_o: so.count,
        cell_count_n: sn.count,
        areas_o: so.areas,
        areas_n: sn.areas,
    })
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    image: &'a str,
    iou: f64,
    bg_m_o: f64,
    bg_m_n: f64,
    cc_o: usize,
    cc_n: usize,
    ca_o_mean: Option<f64>,
    ca_o_median: Option<f64>,
    ca_n_mean: Option<f64>,
    ca_n_median: Option<f64>,
}

#[derive(Serialize)]
struct AreaRow<'a> {
    image: &'a str,
    mask: &'a str,
    instance: usize,
    area: usize,
}

fn mean_median(areas: &[usize]) -> (Option<f64>, Option<f64>) {
    if areas.is_empty() {
        return (None, None);
    }
    let mut v: Vec<f64> = areas.iter().map(|&a| a as f64).collect();
    v.sort_by(f64::total_cmp);
    (
        Some(v.iter().sum::<f64>() / v.len() as f64),
        Some(quantile_sorted(&v, 0.5)),
    )
}

/// One row per image pair with the agreement columns and area summaries.
pub fn write_summary_csv(rows: &[(String, MaskComparison)], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (image, c) in rows {
        let (ca_o_mean, ca_o_median) = mean_median(&c.areas_o);
        let (ca_n_mean, ca_n_median) = mean_median(&c.areas_n);
        w.serialize(SummaryRow {
            image,
            iou: c.iou,
            bg_m_o: c.bg_mismatch_o,
            bg_m_n: c.bg_mismatch_n,
            cc_o: c.cell_count_o,
            cc_n: c.cell_count_n,
            ca_o_mean,
            ca_o_median,
            ca_n_mean,
            ca_n_median,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format per-instance areas, for density plots.
pub fn write_areas_csv(rows: &[(String, MaskComparison)], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (image, c) in rows {
        for (mask, areas) in [("old", &c.areas_o), ("new", &c.areas_n)] {
            for (instance, &area) in areas.iter().enumerate() {
                w.serialize(AreaRow {
                    image,
                    mask,
                    instance: instance + 1,
                    area,
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(h: usize, w: usize, v: &[u32]) -> LabeledMask {
        LabeledMask::new(h, w, v.to_vec()).unwrap()
    }

    #[test]
    fn two_by_two_example() {
        let a = mask(2, 2, &[1, 1, 0, 0]);
        let b = mask(2, 2, &[0, 1, 0, 1]);
        assert!((iou(&a, &b).unwrap() - 100.0 / 3.0).abs() < 1e-12);
        assert_eq!(bg_mismatch(&a, &b).unwrap(), (25.0, 25.0));
    }

    #[test]
    fn edge_cases() {
        let empty = mask(2, 2, &[0; 4]);
        assert_eq!(iou(&empty, &empty).unwrap(), 100.0);
        let full = LabeledMask::from_fn(4, 4, |_, _| 1);
        let bg = LabeledMask::from_fn(4, 4, |_, _| 0);
        assert_eq!(bg_mismatch(&bg, &full).unwrap(), (100.0, 0.0));
        assert_eq!(
            instance_stats(&empty, true),
            InstanceStats {
                count: 0,
                areas: vec![]
            }
        );
        assert!(matches!(iou(&empty, &full), Err(Error::GeometryMismatch { .. })));
    }

    #[test]
    fn components_and_connectivity() {
        let blocks = LabeledMask::from_fn(2, 5, |_, c| u32::from(c != 2));
        assert_eq!(
            instance_stats(&blocks, true),
            InstanceStats {
                count: 2,
                areas: vec![4, 4]
            }
        );
        let diag = mask(3, 3, &[1, 0, 0, 0, 1, 1, 0, 1, 0]);
        assert_eq!(instance_stats(&diag, true).count, 1);
        assert_eq!(instance_stats_with(&diag, true, Connectivity::Four).count, 2);
        // Without relabelling the stored labels are counted as they are.
        let labelled = mask(1, 4, &[7, 0, 7, 3]);
        assert_eq!(
            instance_stats(&labelled, false),
            InstanceStats {
                count: 2,
                areas: vec![1, 2]
            }
        );
    }
}
