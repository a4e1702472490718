use std::f64::consts::PI;

use proptest::prelude::*;

use stackfuse_core::iqa::Metric;
use stackfuse_core::project::Projection;
use stackfuse_core::stats::{
    build_report, paired_test, stratify, summarize, two_sided_p, Degeneracy, Observation, ReportOptions,
};

/// `P(|T| > t)` for integer `df` from the closed-form finite series.
fn series_two_sided(t: f64, df: u32) -> f64 {
    let theta = (t.abs() / (df as f64).sqrt()).atan();
    let (s, c) = theta.sin_cos();
    let c2 = c * c;
    let inside = if df % 2 == 1 {
        let mut term = 1.0;
        let mut sum = if df > 1 { 1.0 } else { 0.0 };
        let mut k = 2;
        while k + 1 < df {
            term *= k as f64 / (k + 1) as f64 * c2;
            sum += term;
            k += 2;
        }
        2.0 / PI * (theta + s * c * sum)
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1;
        while k + 1 < df {
            term *= k as f64 / (k + 1) as f64 * c2;
            sum += term;
            k += 2;
        }
        s * sum
    };
    1.0 - inside
}

#[test]
fn student_t_matches_series() {
    for df in 1..=200u32 {
        for &t in &[0.0, 0.1, 0.5, 1.0, 1.96, 2.5, 4.0, 8.0] {
            let want = series_two_sided(t, df);
            let got = two_sided_p(t, df as f64);
            assert!((got - want).abs() < 1e-9, "df {df} t {t}: {got} vs {want}");
        }
    }
}

#[test]
fn paired_example_matches_high_precision() {
    let r = paired_test(&[2.1, 3.4, 1.9, 4.0], &[2.0, 3.0, 2.5, 3.5]).unwrap();
    assert!((r.t_statistic - 0.4026936331284146).abs() < 1e-6);
    assert!((r.p_value - 0.7141517096445046).abs() < 1e-6);
    assert!((r.cohens_d - 0.2013468165642073).abs() < 1e-6);
    assert_eq!((r.n_pairs, r.degenerate), (4, None));
}

#[test]
fn summary_matches_hand_computation() {
    let s = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(
        (s.n, s.min, s.max, s.mean, s.median, s.iqr),
        (4, 1.0, 4.0, 2.5, 2.5, 1.5)
    );
    assert!((s.sd - 1.2909944487358056).abs() < 1e-9);
}

#[test]
fn stratify_groups() {
    let recs = vec![("SP", 1.0), ("AP", 3.0), ("SP", 2.0), ("AP", 5.0), ("SP", 3.0)];
    let m = stratify(recs).unwrap();
    assert_eq!(m.len(), 2);
    assert_eq!(m["SP"].stats.mean, 2.0);
    assert_eq!(m["AP"].stats.n, 2);
    assert_eq!(stratify(vec![("QP", 1.0)]).unwrap().len(), 1);
}

fn obs(video: &str, seq: &str, p: Projection, m: Metric, score: f64) -> Observation {
    Observation {
        video_id: video.into(),
        sequence: seq.into(),
        projection: p,
        metric: m,
        score,
    }
}

#[test]
fn report_tables() {
    let mut all = Vec::new();
    for (v, off) in [("v1", 0.0), ("v2", 1.0), ("v3", 3.0)] {
        for (seq, s) in [("CL", 0.0), ("GH", 10.0)] {
            all.push(obs(v, seq, Projection::Sp, Metric::Piqe, 20.0 + s + off));
            all.push(obs(v, seq, Projection::Ap, Metric::Piqe, 20.0 + s + 2.0 * off));
            all.push(obs(v, seq, Projection::Pdp, Metric::Piqe, 99.0));
            all.push(obs(v, seq, Projection::Mip, Metric::Niqe, 5.0 + s + off));
        }
    }
    let rep = build_report(&all, &ReportOptions::default()).unwrap();
    assert_eq!(rep.descriptive.len(), 2);
    // PDP is excluded by default.
    assert_eq!(rep.descriptive[0].stats.n, 12);
    assert!(rep.boxplots.iter().all(|b| b.projection != Projection::Pdp));
    let overall = rep.tests.iter().find(|t| t.scope == "all").unwrap();
    assert_eq!(overall.n_pairs, 6);
    let want = paired_test(
        &[20.0, 21.0, 23.0, 30.0, 31.0, 33.0],
        &[20.0, 22.0, 26.0, 30.0, 32.0, 36.0],
    )
    .unwrap();
    assert_eq!(overall.t, want.t_statistic);
    assert_eq!(rep.tests.iter().filter(|t| t.scope != "all").count(), 2);
    assert_eq!(rep.ranking[0].rank, 1);
    assert!(rep.ranking.windows(2).all(|w| w[0].score <= w[1].score));
    assert_eq!(rep.ranking[0].pipeline, "SP_CL");

    let dir = tempfile::tempdir().unwrap();
    let files = rep.write_csvs(dir.path()).unwrap();
    assert_eq!(files.len(), 4);
    let tests = std::fs::read_to_string(&files[2]).unwrap();
    assert!(tests.starts_with("metric,scope,n_pairs,mean_sp,mean_ap,t,p,cohens_d,degenerate"));
}

proptest! {
    #[test]
    fn summarize_is_permutation_invariant(mut v in prop::collection::vec(-1e3f64..1e3, 1..40), seed in any::<u64>()) {
        let a = summarize(&v).unwrap();
        let n = v.len();
        v.rotate_left((seed as usize) % n);
        v.reverse();
        let b = summarize(&v).unwrap();
        prop_assert_eq!((a.min, a.max, a.median, a.iqr), (b.min, b.max, b.median, b.iqr));
        prop_assert!((a.mean - b.mean).abs() < 1e-9 && (a.sd - b.sd).abs() < 1e-9);
        prop_assert!(a.min <= a.median && a.median <= a.max && a.iqr >= 0.0 && a.sd >= 0.0);
    }

    #[test]
    fn t_is_antisymmetric(pairs in prop::collection::vec((-50f64..50.0, -50f64..50.0), 2..30)) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let a = paired_test(&x, &y).unwrap();
        let b = paired_test(&y, &x).unwrap();
        prop_assert_eq!(a.t_statistic, -b.t_statistic);
        prop_assert_eq!(a.p_value, b.p_value);
        prop_assert!((0.0..=1.0).contains(&a.p_value));
        let mean: f64 = x.iter().zip(&y).map(|(p, q)| p - q).sum::<f64>();
        if a.degenerate != Some(Degeneracy::ZeroDifferences) && mean != 0.0 {
            prop_assert_eq!(a.cohens_d.signum(), mean.signum());
        }
    }
}
