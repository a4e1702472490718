use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stackfuse_core::gtmetrics::{
    bg_mismatch, compare, instance_stats, instance_stats_with, iou, write_summary_csv, Connectivity, LabeledMask,
};

type Pixel = (usize, usize);

fn fg(m: &LabeledMask) -> BTreeSet<Pixel> {
    let (h, w) = m.dims();
    (0..h)
        .flat_map(|r| (0..w).map(move |c| (r, c)))
        .filter(|&(r, c)| m.get(r, c) != 0)
        .collect()
}

/// Recursive depth-first flood fill; component sizes in order of discovery.
fn oracle_components(m: &LabeledMask, eight: bool) -> Vec<usize> {
    fn fill(p: Pixel, fg: &BTreeSet<Pixel>, seen: &mut BTreeSet<Pixel>, eight: bool) -> usize {
        if !fg.contains(&p) || !seen.insert(p) {
            return 0;
        }
        let mut n = 1;
        for dr in -1isize..=1 {
            for dc in -1isize..=1 {
                if (dr, dc) == (0, 0) || (!eight && dr != 0 && dc != 0) {
                    continue;
                }
                let (r, c) = (p.0 as isize + dr, p.1 as isize + dc);
                if r >= 0 && c >= 0 {
                    n += fill((r as usize, c as usize), fg, seen, eight);
                }
            }
        }
        n
    }
    let f = fg(m);
    let mut seen = BTreeSet::new();
    f.iter()
        .map(|&p| fill(p, &f, &mut seen, eight))
        .filter(|&n| n > 0)
        .collect()
}

fn random_mask(rng: &mut ChaCha8Rng, density: f64, labels: u32) -> LabeledMask {
    LabeledMask::from_fn(16, 16, |_, _| {
        if rng.gen_bool(density) {
            rng.gen_range(1..=labels)
        } else {
            0
        }
    })
}

#[test]
fn random_pairs_match_set_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let da = rng.gen_range(0.0..0.7);
        let db = rng.gen_range(0.0..0.7);
        let a = random_mask(&mut rng, da, 5);
        let b = random_mask(&mut rng, db, 5);
        let (fa, fb) = (fg(&a), fg(&b));
        let union = fa.union(&fb).count();
        let want_iou = if union == 0 {
            100.0
        } else {
            100.0 * fa.intersection(&fb).count() as f64 / union as f64
        };
        assert_eq!(iou(&a, &b).unwrap(), want_iou);
        assert_eq!(iou(&b, &a).unwrap(), want_iou);

        let want_bg = (
            100.0 * fb.difference(&fa).count() as f64 / 256.0,
            100.0 * fa.difference(&fb).count() as f64 / 256.0,
        );
        assert_eq!(bg_mismatch(&a, &b).unwrap(), want_bg);
        assert_eq!(bg_mismatch(&b, &a).unwrap(), (want_bg.1, want_bg.0));
        assert_eq!(want_iou == 100.0, want_bg == (0.0, 0.0));

        for m in [&a, &b] {
            let mut by_label: BTreeMap<u32, usize> = BTreeMap::new();
            for &l in m.labels().iter().filter(|&&l| l != 0) {
                *by_label.entry(l).or_default() += 1;
            }
            let s = instance_stats(m, false);
            assert_eq!(s.count, by_label.len());
            assert_eq!(s.areas, by_label.values().copied().collect::<Vec<_>>());

            for (conn, eight) in [(Connectivity::Eight, true), (Connectivity::Four, false)] {
                let s = instance_stats_with(m, true, conn);
                let mut want = oracle_components(m, eight);
                let mut got = s.areas.clone();
                want.sort();
                got.sort();
                assert_eq!(got, want);
                assert_eq!(s.areas.iter().sum::<usize>(), fg(m).len());
            }
        }

        let c = compare(&a, &b).unwrap();
        assert_eq!(
            (c.iou, c.bg_mismatch_o, c.bg_mismatch_n),
            (want_iou, want_bg.0, want_bg.1)
        );
    }
}

#[test]
fn l_shapes_touching_diagonally_merge() {
    // Two L shapes meeting only at a corner.
    let m = LabeledMask::new(4, 4, vec![1, 0, 0, 0, 1, 1, 0, 0, 0, 0, 2, 2, 0, 0, 0, 2]).unwrap();
    assert_eq!(instance_stats(&m, true).count, 1);
    assert_eq!(oracle_components(&m, true).len(), 1);
    assert_eq!(instance_stats_with(&m, true, Connectivity::Four).count, 2);
}

#[test]
fn identical_masks_compare_cleanly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = random_mask(&mut rng, 0.4, 9);
    let c = compare(&m, &m).unwrap();
    assert_eq!(c.iou, 100.0);
    assert_eq!((c.bg_mismatch_o, c.bg_mismatch_n), (0.0, 0.0));
    assert_eq!(c.cell_count_o, c.cell_count_n);
    assert_eq!(c.areas_o, c.areas_n);
}

#[test]
fn masks_load_from_8_and_16_bit_png() {
    let dir = tempfile::tempdir().unwrap();
    let p8 = dir.path().join("m8.png");
    let p16 = dir.path().join("m16.png");
    image::GrayImage::from_raw(3, 2, vec![0, 1, 1, 0, 0, 2])
        .unwrap()
        .save(&p8)
        .unwrap();
    image::ImageBuffer::<image::Luma<u16>, _>::from_raw(3, 2, vec![0u16, 300, 300, 0, 0, 1000])
        .unwrap()
        .save(&p16)
        .unwrap();
    let a = LabeledMask::load(&p8).unwrap();
    let b = LabeledMask::load(&p16).unwrap();
    assert_eq!(b.labels(), &[0, 300, 300, 0, 0, 1000]);
    assert_eq!(iou(&a, &b).unwrap(), 100.0);
    let out = dir.path().join("gt.csv");
    write_summary_csv(&[("pair".into(), compare(&a, &b).unwrap())], &out).unwrap();
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.starts_with("image,iou,bg_m_o,bg_m_n,cc_o,cc_n,"));
    assert!(text.contains("pair,100.0,0.0,0.0,2,2,"));
}

proptest! {
    #[test]
    fn area_sum_equals_foreground(seed in any::<u64>(), density in 0.0f64..1.0, relabel in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_mask(&mut rng, density, 4);
        let s = instance_stats(&m, relabel);
        prop_assert_eq!(s.areas.iter().sum::<usize>(), m.foreground());
        prop_assert_eq!(s.count, s.areas.len());
    }
}
