use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use stackfuse_core::config::RunConfig;
use stackfuse_core::gtmetrics::{self, CompareOptions, Connectivity, LabeledMask};
use stackfuse_core::iqa::{self, fit_niqe_model, BrisqueModel, Metric, Models, NiqeModel};
use stackfuse_core::par::{self, Execution};
use stackfuse_core::pipeline::{run_grid, CellStatus, GridOptions, PipelineSpec, RunManifest};
use stackfuse_core::stackio::{load_stack, read_gray8, ChannelPolicy, FrameStack};
use stackfuse_core::stats::{build_report, Observation, ReportOptions};
use stackfuse_core::Error;

use crate::{Cli, Command};

pub const MANIFEST: &str = "manifest.csv";
/// Exit status when some grid cells failed.
const CELLS_FAILED: u8 = 2;

pub fn dispatch(cli: Cli) -> Result<ExitCode> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let jobs = cli.jobs.filter(|&n| n > 0).or(cfg.jobs());
    par::with_jobs(jobs, move || match cli.command {
        Command::Enumerate => enumerate(&cfg),
        Command::Run {
            input,
            output,
            pipelines,
        } => run(&cfg, input, output, pipelines),
        Command::Score {
            input,
            manifest,
            output,
            metrics,
            model,
        } => score(&cfg, input, manifest, &output, metrics, model),
        Command::CompareGt {
            old,
            new,
            output,
            relabel,
            four_connected,
        } => compare_gt(&old, &new, &output, relabel, four_connected),
        Command::Report {
            scores,
            manifest,
            output,
            include_pdp,
        } => report(&scores, &manifest, &output, include_pdp),
        Command::FitNiqe { input, output } => fit_niqe(&input, &output),
    })
}

fn enumerate(cfg: &RunConfig) -> Result<ExitCode> {
    for (i, seq) in cfg.sequences()?.iter().enumerate() {
        println!("{:>3} {}", i + 1, seq.token());
    }
    Ok(ExitCode::SUCCESS)
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    v.sort();
    Ok(v)
}

/// One stack per sub-directory; a root without sub-directories is itself
/// one video.
fn load_videos(root: &Path, pattern: &str, channel: ChannelPolicy) -> Result<Vec<FrameStack>> {
    let dirs: Vec<PathBuf> = sorted_entries(root)?.into_iter().filter(|p| p.is_dir()).collect();
    if dirs.is_empty() {
        return Ok(vec![load_stack(root, pattern, channel)?]);
    }
    dirs.iter()
        .map(|d| load_stack(d, pattern, channel).with_context(|| format!("loading {}", d.display())))
        .collect()
}

fn run(cfg: &RunConfig, input: Option<PathBuf>, output: Option<PathBuf>, pipelines: Vec<String>) -> Result<ExitCode> {
    let input = input
        .or(cfg.input.clone())
        .context("no input directory (--input or `input`)")?;
    let output = output
        .or(cfg.output.clone())
        .context("no output directory (--output or `output`)")?;
    let videos = load_videos(&input, cfg.pattern(), cfg.channel()?)?;
    let ops = cfg.operator_set()?;
    let opts = GridOptions {
        quantile: cfg.quantile(),
        exec: Execution::default(),
        out_dir: Some(output.clone()),
    };
    let mut filters: Vec<PipelineSpec> = cfg.pipeline_filter()?;
    for p in &pipelines {
        filters.push(p.parse()?);
    }
    let manifest = if filters.is_empty() {
        run_grid(&videos, &cfg.sequences()?, &cfg.projections()?, &ops, &opts)?
    } else {
        let mut rows = Vec::new();
        for f in &filters {
            rows.extend(run_grid(&videos, std::slice::from_ref(&f.seq), &[f.projection], &ops, &opts)?.rows);
        }
        let order: HashMap<&str, usize> = videos.iter().enumerate().map(|(i, v)| (v.video_id(), i)).collect();
        rows.sort_by_key(|r| order[r.video_id.as_str()]);
        RunManifest { rows }
    };
    manifest.write_csv(&output.join(MANIFEST))?;
    let failed = manifest.failed();
    println!(
        "{} outputs, {} failed, manifest {}",
        manifest.rows.len(),
        failed,
        output.join(MANIFEST).display()
    );
    if failed > 0 {
        eprintln!("{failed} grid cells failed; see the manifest error column");
        return Ok(ExitCode::from(CELLS_FAILED));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreRow {
    pub image: String,
    pub metric: String,
    pub score: Option<f64>,
    /// `ok`, or the error that prevented scoring.
    pub status: String,
}

fn load_models(cfg: &RunConfig, metrics: &[Metric], model: Option<PathBuf>) -> Result<Models> {
    let model_based: Vec<Metric> = metrics.iter().copied().filter(|&m| m != Metric::Piqe).collect();
    let (mut niqe_path, mut brisque_path) = (cfg.models.niqe.clone(), cfg.models.brisque.clone());
    if let Some(p) = model {
        match model_based.as_slice() {
            [Metric::Niqe] => niqe_path = Some(p),
            [Metric::Brisque] => brisque_path = Some(p),
            _ => bail!("--model needs exactly one of niqe or brisque among the metrics"),
        }
    }
    let mut models = Models::default();
    if model_based.contains(&Metric::Niqe) {
        models.niqe = Some(match niqe_path {
            Some(p) => NiqeModel::load(&p)?,
            None => NiqeModel::bundled(),
        });
    }
    if model_based.contains(&Metric::Brisque) {
        models.brisque = Some(match brisque_path {
            Some(p) => BrisqueModel::load(&p)?,
            None => BrisqueModel::bundled(),
        });
    }
    Ok(models)
}

fn score(
    cfg: &RunConfig,
    input: Option<PathBuf>,
    manifest: Option<PathBuf>,
    output: &Path,
    metrics: Vec<String>,
    model: Option<PathBuf>,
) -> Result<ExitCode> {
    let names = if metrics.is_empty() { cfg.metrics() } else { metrics };
    let metrics = names.iter().map(|m| m.parse()).collect::<Result<Vec<Metric>, _>>()?;
    let models = load_models(cfg, &metrics, model)?;

    // (name written to the CSV, path on disk)
    let images: Vec<(String, PathBuf)> = match (input, manifest) {
        (_, Some(m)) => {
            let root = m.parent().unwrap_or(Path::new(".")).to_path_buf();
            let man = RunManifest::read_csv(&m).with_context(|| format!("reading manifest {}", m.display()))?;
            man.rows
                .into_iter()
                .filter(|r| r.status == CellStatus::Ok)
                .map(|r| (r.output.to_string_lossy().into_owned(), root.join(&r.output)))
                .collect()
        }
        (Some(dir), None) => sorted_entries(&dir)?
            .into_iter()
            .filter(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), p))
            .collect(),
        (None, None) => bail!("score needs --input or --manifest"),
    };
    if images.is_empty() {
        bail!("no images to score");
    }

    let rows: Vec<Vec<ScoreRow>> = par::map(Execution::default(), &images, |(name, path)| {
        let img = read_gray8(path, ChannelPolicy::Luma);
        metrics
            .iter()
            .map(|&metric| {
                let result = img
                    .as_ref()
                    .map_err(Error::to_string)
                    .and_then(|img| iqa::score(img, metric, &models).map_err(|e| e.to_string()));
                match result {
                    Ok(s) => ScoreRow {
                        image: name.clone(),
                        metric: metric.name().into(),
                        score: Some(s),
                        status: "ok".into(),
                    },
                    Err(e) => ScoreRow {
                        image: name.clone(),
                        metric: metric.name().into(),
                        score: None,
                        status: e,
                    },
                }
            })
            .collect()
    });
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(output)?;
    let mut failed = 0;
    for r in rows.iter().flatten() {
        failed += usize::from(r.status != "ok");
        w.serialize(r)?;
    }
    w.flush()?;
    println!(
        "{} scores written to {} ({failed} failed)",
        rows.len() * metrics.len(),
        output.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn compare_gt(old: &Path, new: &Path, output: &Path, relabel: bool, four: bool) -> Result<ExitCode> {
    let opts = CompareOptions {
        relabel,
        connectivity: if four { Connectivity::Four } else { Connectivity::Eight },
    };
    let mut rows = Vec::new();
    for path in sorted_entries(old)? {
        let Some(name) = path.file_name() else { continue };
        if !path.is_file() || !path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            continue;
        }
        let other = new.join(name);
        if !other.is_file() {
            log::warn!("no new mask for {}", path.display());
            continue;
        }
        let a = LabeledMask::load(&path)?;
        let b = LabeledMask::load(&other)?;
        let cmp =
            gtmetrics::compare_with(&a, &b, opts).with_context(|| format!("comparing {}", name.to_string_lossy()))?;
        rows.push((name.to_string_lossy().into_owned(), cmp));
    }
    if rows.is_empty() {
        bail!("no mask pairs found");
    }
    std::fs::create_dir_all(output)?;
    gtmetrics::write_summary_csv(&rows, &output.join("gt_summary.csv"))?;
    gtmetrics::write_areas_csv(&rows, &output.join("gt_areas.csv"))?;
    println!("{} mask pairs compared", rows.len());
    Ok(ExitCode::SUCCESS)
}

fn report(scores: &Path, manifest: &Path, output: &Path, include_pdp: bool) -> Result<ExitCode> {
    let man = RunManifest::read_csv(manifest).with_context(|| format!("reading manifest {}", manifest.display()))?;
    let cells: HashMap<String, _> = man
        .rows
        .iter()
        .map(|r| (r.output.to_string_lossy().into_owned(), r))
        .collect();
    let mut obs = Vec::new();
    let mut rd = csv::Reader::from_path(scores).with_context(|| format!("reading {}", scores.display()))?;
    for row in rd.deserialize::<ScoreRow>() {
        let row = row?;
        let Some(score) = row.score.filter(|_| row.status == "ok") else {
            continue;
        };
        let Some(cell) = cells.get(&row.image) else {
            log::warn!("{} is not in the manifest", row.image);
            continue;
        };
        obs.push(Observation {
            video_id: cell.video_id.clone(),
            sequence: cell.seq.token(),
            projection: cell.projection,
            metric: row.metric.parse()?,
            score,
        });
    }
    let mut opts = ReportOptions::default();
    if include_pdp {
        opts.exclude.clear();
    }
    let rep = build_report(&obs, &opts)?;
    for p in rep.write_csvs(output)? {
        println!("{}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn fit_niqe(input: &Path, output: &Path) -> Result<ExitCode> {
    let corpus = sorted_entries(input)?
        .into_iter()
        .filter(|p| p.is_file())
        .map(|p| read_gray8(&p, ChannelPolicy::Luma))
        .collect::<Result<Vec<_>, _>>()?;
    let model = fit_niqe_model(&corpus)?;
    model.save(output)?;
    println!(
        "model fitted on {} images written to {}",
        corpus.len(),
        output.display()
    );
    Ok(ExitCode::SUCCESS)
}
