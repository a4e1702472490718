//! Descriptive statistics, per-projection box-plot data, paired SP/AP tests
//! and the pipeline ranking over quality scores.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::iqa::Metric;
use crate::project::{quantile_sorted, Projection};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SummaryStats {
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample deviation (`n − 1`); 0 for a single value.
    pub sd: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub iqr: f64,
}

pub fn summarize(values: &[f64]) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let (q1, median, q3) = (
        quantile_sorted(&v, 0.25),
        quantile_sorted(&v, 0.5),
        quantile_sorted(&v, 0.75),
    );
    Ok(SummaryStats {
        n,
        min: v[0],
        max: v[n - 1],
        mean,
        sd,
        q1,
        median,
        q3,
        iqr: q3 - q1,
    })
}

/// Box-and-whisker data: whiskers reach the most extreme values within
/// 1.5 IQR of the quartiles; everything beyond is an outlier.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxPlot {
    pub stats: SummaryStats,
    pub lower_whisker: f64,
    pub upper_whisker: f64,
    pub outliers: Vec<f64>,
}

pub fn box_plot(values: &[f64]) -> Result<BoxPlot> {
    let stats = summarize(values)?;
    let lo_fence = stats.q1 - 1.5 * stats.iqr;
    let hi_fence = stats.q3 + 1.5 * stats.iqr;
    let inside = values.iter().copied().filter(|v| (lo_fence..=hi_fence).contains(v));
    let lower_whisker = inside.clone().fold(f64::INFINITY, f64::min);
    let upper_whisker = inside.fold(f64::NEG_INFINITY, f64::max);
    let mut outliers: Vec<f64> = values
        .iter()
        .copied()
        .filter(|v| !(lo_fence..=hi_fence).contains(v))
        .collect();
    outliers.sort_by(f64::total_cmp);
    Ok(BoxPlot {
        stats,
        lower_whisker,
        upper_whisker,
        outliers,
    })
}

/// Groups `(key, value)` pairs and summarizes each group.
pub fn stratify<K: Ord>(records: impl IntoIterator<Item = (K, f64)>) -> Result<BTreeMap<K, BoxPlot>> {
    let mut groups: BTreeMap<K, Vec<f64>> = BTreeMap::new();
    for (k, v) in records {
        groups.entry(k).or_default().push(v);
    }
    if groups.is_empty() {
        return Err(Error::Empty);
    }
    groups.into_iter().map(|(k, v)| Ok((k, box_plot(&v)?))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneracy {
    /// Every difference is zero: t = 0, d = 0, p = 1.
    ZeroDifferences,
    /// Differences are constant and nonzero: t and d are ±∞, p = 0.
    ConstantDifferences,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairedTestResult {
    pub t_statistic: f64,
    pub p_value: f64,
    pub cohens_d: f64,
    pub n_pairs: usize,
    pub degenerate: Option<Degeneracy>,
}

/// Two-sided paired t-test on `x − y` with Cohen's d of the differences.
pub fn paired_test(x: &[f64], y: &[f64]) -> Result<PairedTestResult> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParams(format!(
            "paired test needs two equal samples of at least 2, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let sd = (d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt();
    if sd == 0.0 {
        let zero = d.iter().all(|&v| v == 0.0);
        let inf = if mean > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
        return Ok(PairedTestResult {
            t_statistic: if zero { 0.0 } else { inf },
            p_value: if zero { 1.0 } else { 0.0 },
            cohens_d: if zero { 0.0 } else { inf },
            n_pairs: n,
            degenerate: Some(if zero {
                Degeneracy::ZeroDifferences
            } else {
                Degeneracy::ConstantDifferences
            }),
        });
    }
    let t = mean / (sd / (n as f64).sqrt());
    Ok(PairedTestResult {
        t_statistic: t,
        p_value: two_sided_p(t, (n - 1) as f64),
        cohens_d: mean / sd,
        n_pairs: n,
        degenerate: None,
    })
}

pub fn two_sided_p(t: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// One score of one pipeline output.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub video_id: String,
    pub sequence: String,
    pub projection: Projection,
    pub metric: Metric,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportOptions {
    /// Projections left out of every table.
    pub exclude: Vec<Projection>,
    pub top: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            exclude: vec![Projection::Pdp],
            top: 10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DescriptiveRow {
    pub metric: Metric,
    pub stats: SummaryStats,
}

#[derive(Clone, Debug)]
pub struct BoxRow {
    pub metric: Metric,
    pub projection: Projection,
    pub stats: SummaryStats,
    pub lower_whisker: f64,
    pub upper_whisker: f64,
    pub outliers: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TestRow {
    pub metric: Metric,
    /// `all`, or the preprocessing sequence the pairs were restricted to.
    pub scope: String,
    pub n_pairs: usize,
    pub mean_sp: f64,
    pub mean_ap: f64,
    pub t: f64,
    pub p: f64,
    pub cohens_d: f64,
    pub degenerate: Option<Degeneracy>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RankRow {
    pub rank: usize,
    pub pipeline: String,
    /// Mean over metrics of the per-metric mean normalized score.
    pub score: f64,
    pub n: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub descriptive: Vec<DescriptiveRow>,
    pub boxplots: Vec<BoxRow>,
    pub tests: Vec<TestRow>,
    pub ranking: Vec<RankRow>,
}

fn pipeline_token(o: &Observation) -> String {
    format!("{}_{}", o.projection, o.sequence)
}

fn sp_ap_test(metric: Metric, scope: String, obs: &[&Observation]) -> Option<TestRow> {
    let mut pairs: BTreeMap<(&str, &str), (Option<f64>, Option<f64>)> = BTreeMap::new();
    for o in obs {
        let e = pairs.entry((&o.video_id, &o.sequence)).or_default();
        match o.projection {
            Projection::Sp => e.0 = Some(o.score),
            Projection::Ap => e.1 = Some(o.score),
            _ => {}
        }
    }
    let (sp, ap): (Vec<f64>, Vec<f64>) = pairs.into_values().filter_map(|(s, a)| Some((s?, a?))).unzip();
    let r = paired_test(&sp, &ap).ok()?;
    Some(TestRow {
        metric,
        scope,
        n_pairs: r.n_pairs,
        mean_sp: sp.iter().sum::<f64>() / sp.len() as f64,
        mean_ap: ap.iter().sum::<f64>() / ap.len() as f64,
        t: r.t_statistic,
        p: r.p_value,
        cohens_d: r.cohens_d,
        degenerate: r.degenerate,
    })
}

pub fn build_report(observations: &[Observation], opts: &ReportOptions) -> Result<Report> {
    let obs: Vec<&Observation> = observations
        .iter()
        .filter(|o| !opts.exclude.contains(&o.projection) && o.score.is_finite())
        .collect();
    if obs.is_empty() {
        return Err(Error::Empty);
    }
    let mut by_metric: BTreeMap<Metric, Vec<&Observation>> = BTreeMap::new();
    for o in &obs {
        by_metric.entry(o.metric).or_default().push(o);
    }

    let mut report = Report::default();
    // Per pipeline: sum and count of normalized scores, per metric.
    let mut norm: HashMap<String, BTreeMap<Metric, (f64, usize)>> = HashMap::new();
    for (&metric, rows) in &by_metric {
        let scores: Vec<f64> = rows.iter().map(|o| o.score).collect();
        report.descriptive.push(DescriptiveRow {
            metric,
            stats: summarize(&scores)?,
        });
        for (projection, bp) in stratify(rows.iter().map(|o| (o.projection, o.score)))? {
            report.boxplots.push(BoxRow {
                metric,
                projection,
                stats: bp.stats,
                lower_whisker: bp.lower_whisker,
                upper_whisker: bp.upper_whisker,
                outliers: bp.outliers,
            });
        }

        report.tests.extend(sp_ap_test(metric, "all".into(), rows));
        let mut by_seq: BTreeMap<&str, Vec<&Observation>> = BTreeMap::new();
        for o in rows {
            by_seq.entry(&o.sequence).or_default().push(o);
        }
        for (seq, group) in by_seq {
            report.tests.extend(sp_ap_test(metric, seq.to_string(), &group));
        }

        let (lo, hi) = scores
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        for o in rows {
            let v = if hi > lo { (o.score - lo) / (hi - lo) } else { 0.0 };
            let e = norm.entry(pipeline_token(o)).or_default().entry(metric).or_default();
            e.0 += v;
            e.1 += 1;
        }
    }

    let mut ranking: Vec<(String, f64, usize)> = norm
        .into_iter()
        .map(|(p, per_metric)| {
            let k = per_metric.len() as f64;
            let score = per_metric.values().map(|(s, c)| s / *c as f64).sum::<f64>() / k;
            let n = per_metric.values().map(|(_, c)| c).sum();
            (p, score, n)
        })
        .collect();
    ranking.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    report.ranking = ranking
        .into_iter()
        .take(opts.top)
        .enumerate()
        .map(|(i, (pipeline, score, n))| RankRow {
            rank: i + 1,
            pipeline,
            score,
            n,
        })
        .collect();
    Ok(report)
}

const STAT_COLUMNS: [&str; 9] = ["n", "min", "max", "mean", "sd", "q1", "median", "q3", "iqr"];

fn stat_fields(s: &SummaryStats) -> Vec<String> {
    let mut v = vec![s.n.to_string()];
    v.extend([s.min, s.max, s.mean, s.sd, s.q1, s.median, s.q3, s.iqr].map(|x| x.to_string()));
    v
}

fn write_records(header: &[&str], rows: impl Iterator<Item = Vec<String>>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_rows<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

impl Report {
    /// Writes `descriptive.csv`, `boxplot.csv`, `sp_vs_ap.csv` and
    /// `ranking.csv` into `dir`.
    pub fn write_csvs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let paths: Vec<PathBuf> = ["descriptive.csv", "boxplot.csv", "sp_vs_ap.csv", "ranking.csv"]
            .iter()
            .map(|n| dir.join(n))
            .collect();
        let header: Vec<&str> = ["metric"].into_iter().chain(STAT_COLUMNS).collect();
        let rows = self.descriptive.iter().map(|r| {
            let mut v = vec![r.metric.to_string()];
            v.extend(stat_fields(&r.stats));
            v
        });
        write_records(&header, rows, &paths[0])?;
        let header: Vec<&str> = ["metric", "projection"]
            .into_iter()
            .chain(STAT_COLUMNS)
            .chain(["lower_whisker", "upper_whisker", "outliers"])
            .collect();
        let rows = self.boxplots.iter().map(|r| {
            let mut v = vec![r.metric.to_string(), r.projection.to_string()];
            v.extend(stat_fields(&r.stats));
            v.push(r.lower_whisker.to_string());
            v.push(r.upper_whisker.to_string());
            // Outliers in one cell, `;`-separated.
            v.push(r.outliers.iter().map(f64::to_string).collect::<Vec<_>>().join(";"));
            v
        });
        write_records(&header, rows, &paths[1])?;
        write_rows(&self.tests, &paths[2])?;
        write_rows(&self.ranking, &paths[3])?;
        Ok(paths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_examples() {
        let s = summarize(&[5.0]).unwrap();
        assert_eq!(
            (s.min, s.max, s.mean, s.median, s.sd, s.iqr),
            (5.0, 5.0, 5.0, 5.0, 0.0, 0.0)
        );
        let s = summarize(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.mean, s.median, s.iqr), (2.5, 2.5, 1.5));
        assert!((s.sd - 1.2909944487358056).abs() < 1e-12);
        assert!(matches!(summarize(&[]), Err(Error::Empty)));
    }

    #[test]
    fn whiskers_and_outliers() {
        let bp = box_plot(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!(bp.outliers, vec![100.0]);
        assert_eq!((bp.lower_whisker, bp.upper_whisker), (1.0, 4.0));
    }

    #[test]
    fn degenerate_policies() {
        let r = paired_test(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!((r.t_statistic, r.p_value, r.cohens_d), (0.0, 1.0, 0.0));
        assert_eq!(r.degenerate, Some(Degeneracy::ZeroDifferences));
        let r = paired_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(
            (r.t_statistic, r.p_value, r.cohens_d),
            (f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY)
        );
        assert_eq!(r.degenerate, Some(Degeneracy::ConstantDifferences));
        assert!(paired_test(&[1.0], &[2.0]).is_err());
    }
}
