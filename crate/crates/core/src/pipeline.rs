//! Preprocessing-sequence enumeration and grid execution.
//!
//! A sequence draws at most one operator from each family, in any order.
//! With families of sizes `(e, g, f)` there are
//! `(e + g + f) + 2(eg + ef + gf) + 6efg` sequences; the default families
//! `{CL, CH}`, `{GL, GH}`, `{MB, BF, NF}` give 111.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::preprocess::{apply_chain, default_operators, Operator};
use crate::project::{normalize_8bit, project_with, Projection};
use crate::raster::Raster8;
use crate::stackio::{output_name, write_png, FrameStack};

/// Ordered operator acronyms, e.g. `["CL", "NF", "GL"]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PreprocSequence(pub Vec<String>);

impl PreprocSequence {
    pub fn new<S: Into<String>>(ops: impl IntoIterator<Item = S>) -> Self {
        Self(ops.into_iter().map(Into::into).collect())
    }

    pub fn ops(&self) -> Vec<&str> {
        self.0.iter().map(String::as_str).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Underscore-joined acronyms (`CL_NF_GL`); empty for the identity chain.
    pub fn token(&self) -> String {
        self.0.join("_")
    }
}

impl fmt::Display for PreprocSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

/// Sequence plus projection, written `<PROJ>_<op>...` (e.g. `QP_CH_NF`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PipelineSpec {
    pub seq: PreprocSequence,
    pub projection: Projection,
}

impl PipelineSpec {
    pub fn token(&self) -> String {
        if self.seq.is_empty() {
            self.projection.token().to_string()
        } else {
            format!("{}_{}", self.projection, self.seq.token())
        }
    }
}

impl FromStr for PipelineSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split('_').filter(|p| !p.is_empty());
        let projection = parts
            .next()
            .ok_or_else(|| Error::Config(format!("empty pipeline token `{s}`")))?
            .parse()?;
        Ok(Self {
            seq: PreprocSequence::new(parts),
            projection,
        })
    }
}

/// Operator families in enumeration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Families {
    pub equalisation: Vec<String>,
    pub remapping: Vec<String>,
    pub filtering: Vec<String>,
}

impl Default for Families {
    fn default() -> Self {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self {
            equalisation: v(&["CL", "CH"]),
            remapping: v(&["GL", "GH"]),
            filtering: v(&["MB", "BF", "NF"]),
        }
    }
}

impl Families {
    fn as_slices(&self) -> [&[String]; 3] {
        [&self.equalisation, &self.remapping, &self.filtering]
    }

    pub fn check_disjoint(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for fam in self.as_slices() {
            let mut local = HashSet::new();
            for op in fam {
                if !local.insert(op) {
                    continue;
                }
                if !seen.insert(op) {
                    return Err(Error::OverlappingFamilies(op.clone()));
                }
            }
        }
        Ok(())
    }
}

/// Closed-form sequence count for family sizes `(e, g, f)`.
pub fn sequence_count(e: usize, g: usize, f: usize) -> usize {
    (e + g + f) + 2 * (e * g + e * f + g * f) + 6 * e * g * f
}

const PERMS_2: [[usize; 2]; 2] = [[0, 1], [1, 0]];
const PERMS_3: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// All sequences of length `1..=max_len` in canonical order: singles, then
/// pairs, then triples; within a length by family, then declared operator
/// order, then permutation.
pub fn enumerate_sequences(families: &Families, max_len: usize) -> Result<Vec<PreprocSequence>> {
    families.check_disjoint()?;
    let [e, g, f] = families.as_slices();
    let fams = [e, g, f];
    let mut out = Vec::with_capacity(sequence_count(e.len(), g.len(), f.len()));

    if max_len >= 1 {
        for fam in fams {
            out.extend(fam.iter().map(|op| PreprocSequence::new([op.as_str()])));
        }
    }
    if max_len >= 2 {
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            for a in fams[i] {
                for b in fams[j] {
                    let pick = [a, b];
                    for perm in PERMS_2 {
                        out.push(PreprocSequence::new(perm.map(|k| pick[k].as_str())));
                    }
                }
            }
        }
    }
    if max_len >= 3 {
        for a in e {
            for b in g {
                for c in f {
                    let pick = [a, b, c];
                    for perm in PERMS_3 {
                        out.push(PreprocSequence::new(perm.map(|k| pick[k].as_str())));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Operators addressable by acronym.
#[derive(Clone, Debug)]
pub struct OperatorSet(BTreeMap<String, Operator>);

impl Default for OperatorSet {
    fn default() -> Self {
        Self::new(default_operators())
    }
}

impl OperatorSet {
    pub fn new(ops: impl IntoIterator<Item = Operator>) -> Self {
        Self(ops.into_iter().map(|o| (o.acronym.clone(), o)).collect())
    }

    pub fn get(&self, acronym: &str) -> Result<&Operator> {
        self.0
            .get(acronym)
            .ok_or_else(|| Error::UnknownOperator(acronym.to_string()))
    }

    pub fn insert(&mut self, op: Operator) {
        self.0.insert(op.acronym.clone(), op);
    }

    pub fn resolve(&self, seq: &PreprocSequence) -> Result<Vec<&Operator>> {
        seq.0.iter().map(|a| self.get(a)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CellStatus {
    Ok,
    Failed(String),
}

/// One grid cell: `(video, sequence, projection)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestRow {
    pub video_id: String,
    pub seq: PreprocSequence,
    pub projection: Projection,
    /// File name relative to the output root.
    pub output: PathBuf,
    pub status: CellStatus,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunManifest {
    pub rows: Vec<ManifestRow>,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    video_id: String,
    sequence: String,
    projection: String,
    output: String,
    status: String,
    error: String,
}

impl RunManifest {
    pub fn failed(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| matches!(r.status, CellStatus::Failed(_)))
            .count()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            let (status, error) = match &r.status {
                CellStatus::Ok => ("ok", String::new()),
                CellStatus::Failed(e) => ("failed", e.clone()),
            };
            w.serialize(CsvRow {
                video_id: r.video_id.clone(),
                sequence: r.seq.token(),
                projection: r.projection.token().into(),
                output: r.output.to_string_lossy().into_owned(),
                status: status.into(),
                error,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rd = csv::Reader::from_path(path)?;
        let mut rows = Vec::new();
        for rec in rd.deserialize::<CsvRow>() {
            let rec = rec?;
            rows.push(ManifestRow {
                video_id: rec.video_id,
                seq: PreprocSequence::new(rec.sequence.split('_').filter(|s| !s.is_empty())),
                projection: rec.projection.parse()?,
                output: PathBuf::from(rec.output),
                status: if rec.status == "ok" {
                    CellStatus::Ok
                } else {
                    CellStatus::Failed(rec.error)
                },
            });
        }
        Ok(Self { rows })
    }
}

/// Grid execution settings.
#[derive(Clone, Debug)]
pub struct GridOptions {
    pub quantile: f64,
    pub exec: Execution,
    /// Where PNGs go; `None` runs the grid without writing images.
    pub out_dir: Option<PathBuf>,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            quantile: 0.75,
            exec: Execution::default(),
            out_dir: None,
        }
    }
}

/// Normalized fusion result of one cell.
pub type CellImage = std::result::Result<Raster8, String>;

/// Preprocesses every frame of `video` with `seq` and fuses it with each
/// projection. Work inside a cell is sequential.
pub fn run_cell(
    video: &FrameStack,
    seq: &PreprocSequence,
    projections: &[Projection],
    ops: &OperatorSet,
    quantile: f64,
) -> Vec<CellImage> {
    let processed = ops.resolve(seq).and_then(|chain| {
        let frames = video
            .frames()
            .iter()
            .map(|f| apply_chain(f, &chain, Execution::Sequential))
            .collect::<Result<Vec<_>>>()?;
        FrameStack::new(video.video_id(), frames)
    });
    let processed = match processed {
        Ok(s) => s,
        Err(e) => return projections.iter().map(|_| Err(e.to_string())).collect(),
    };
    projections
        .iter()
        .map(|&p| {
            project_with(&processed, p, quantile, Execution::Sequential)
                .map(|img| normalize_8bit(&img.data).0)
                .map_err(|e| e.to_string())
        })
        .collect()
}

/// Runs every `(video, sequence, projection)` cell. Cell failures are
/// recorded in the manifest; the grid always completes. Rows come back
/// sorted by video, then sequence order, then projection order.
pub fn run_grid(
    videos: &[FrameStack],
    sequences: &[PreprocSequence],
    projections: &[Projection],
    ops: &OperatorSet,
    opts: &GridOptions,
) -> Result<RunManifest> {
    if videos.is_empty() || sequences.is_empty() || projections.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let cells: Vec<(usize, usize)> = (0..videos.len())
        .flat_map(|v| (0..sequences.len()).map(move |s| (v, s)))
        .collect();

    let mut rows: Vec<(usize, usize, usize, ManifestRow)> = par::map(opts.exec, &cells, |&(vi, si)| {
        let video = &videos[vi];
        let seq = &sequences[si];
        let images = run_cell(video, seq, projections, ops, opts.quantile);
        images
            .into_iter()
            .zip(projections)
            .enumerate()
            .map(|(pi, (img, &p))| {
                let name = PathBuf::from(output_name(p.token(), video.video_id(), &seq.ops()));
                let status = match img {
                    Ok(img) => match &opts.out_dir {
                        Some(dir) => match write_png(&img, &dir.join(&name)) {
                            Ok(()) => CellStatus::Ok,
                            Err(e) => CellStatus::Failed(e.to_string()),
                        },
                        None => CellStatus::Ok,
                    },
                    Err(e) => CellStatus::Failed(e),
                };
                if let CellStatus::Failed(e) = &status {
                    log::warn!("cell {} failed: {e}", name.display());
                }
                (
                    vi,
                    si,
                    pi,
                    ManifestRow {
                        video_id: video.video_id().to_string(),
                        seq: seq.clone(),
                        projection: p,
                        output: name,
                        status,
                    },
                )
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    rows.sort_by_key(|&(v, s, p, _)| (v, s, p));
    Ok(RunManifest {
        rows: rows.into_iter().map(|(.., r)| r).collect(),
    })
}
