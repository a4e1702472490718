use std::path::Path;
use std::process::{Command, Output};

use stackfuse_core::stackio::write_png;
use stackfuse_core::Raster8;

fn stackfuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stackfuse"))
        .args(args)
        .output()
        .expect("spawn stackfuse")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Textured frames from a small LCG so every run sees the same bytes.
fn write_video(dir: &Path, frames: usize, seed: u64) {
    std::fs::create_dir_all(dir).unwrap();
    let mut state = seed;
    for t in 0..frames {
        let img = Raster8::from_fn(64, 64, |r, c| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let noise = (state >> 58) as usize;
            (((r / 8 + c / 8) % 2) * 120 + (r * 2 + c + t * 3) % 60 + noise) as u8
        });
        write_png(&img, &dir.join(format!("frame_{t:03}.png"))).unwrap();
    }
}

#[test]
fn enumerate_lists_every_sequence() {
    let out = stackfuse(&["enumerate"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 111);
    assert!(lines[0].trim_start().starts_with("1 "));
}

#[test]
fn malformed_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "quantile = \"high\"\n[operators\n").unwrap();
    let out = stackfuse(&["--config", arg(&cfg), "enumerate"]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}

#[test]
fn empty_input_fails() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    std::fs::create_dir_all(&input).unwrap();
    let out = stackfuse(&["run", "--input", arg(&input), "--output", arg(&dir.path().join("out"))]);
    assert!(!out.status.success());
}

#[test]
fn filtered_run_writes_one_output_per_video() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    write_video(&input.join("a"), 4, 1);
    write_video(&input.join("b"), 4, 2);
    let output = dir.path().join("out");
    let out = stackfuse(&[
        "run",
        "--input",
        arg(&input),
        "--output",
        arg(&output),
        "--pipeline",
        "QP_CH_NF",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut pngs: Vec<String> = std::fs::read_dir(&output)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".png"))
        .collect();
    pngs.sort();
    assert_eq!(pngs, ["QP_a_CH_NF.png", "QP_b_CH_NF.png"]);
    let manifest = std::fs::read_to_string(output.join("manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 3);
}

#[test]
fn score_writes_one_row_per_image() {
    let dir = tempfile::tempdir().unwrap();
    let imgs = dir.path().join("imgs");
    write_video(&imgs, 6, 7);
    let csv = dir.path().join("scores.csv");
    let out = stackfuse(&[
        "score",
        "--input",
        arg(&imgs),
        "--metric",
        "piqe",
        "--output",
        arg(&csv),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "image,metric,score,status");
    assert_eq!(lines.len(), 7);
    assert!(lines[1..].iter().all(|l| l.contains(",piqe,") && l.ends_with(",ok")));
}

#[test]
fn model_flag_needs_a_single_model_metric() {
    let dir = tempfile::tempdir().unwrap();
    let imgs = dir.path().join("imgs");
    write_video(&imgs, 1, 3);
    let out = stackfuse(&[
        "score",
        "--input",
        arg(&imgs),
        "--metric",
        "niqe",
        "--metric",
        "brisque",
        "--model",
        "x.model",
        "--output",
        arg(&dir.path().join("s.csv")),
    ]);
    assert!(!out.status.success());
}

#[test]
fn compare_identical_masks() {
    let dir = tempfile::tempdir().unwrap();
    let (old, new) = (dir.path().join("old"), dir.path().join("new"));
    std::fs::create_dir_all(&old).unwrap();
    std::fs::create_dir_all(&new).unwrap();
    let mask = Raster8::from_fn(20, 20, |r, c| {
        if (4..9).contains(&r) && (4..12).contains(&c) {
            1
        } else {
            0
        }
    });
    write_png(&mask, &old.join("m.png")).unwrap();
    write_png(&mask, &new.join("m.png")).unwrap();
    let output = dir.path().join("gt");
    let out = stackfuse(&[
        "compare-gt",
        "--old",
        arg(&old),
        "--new",
        arg(&new),
        "--output",
        arg(&output),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(output.join("gt_summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().starts_with("m.png,100.0,0.0,0.0,1,1,"));
    assert!(output.join("gt_areas.csv").exists());
}

#[test]
fn run_score_report_chain() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    for (i, v) in ["v1", "v2", "v3"].iter().enumerate() {
        write_video(&input.join(v), 4, 10 + i as u64);
    }
    let output = dir.path().join("out");
    let mut args = vec!["run", "--input", arg(&input), "--output", arg(&output)];
    for p in ["SP_CL", "AP_CL", "SP_GH", "AP_GH"] {
        args.extend(["--pipeline", p]);
    }
    assert!(stackfuse(&args).status.success());
    let manifest = output.join("manifest.csv");
    let scores = dir.path().join("scores.csv");
    let out = stackfuse(&[
        "score",
        "--manifest",
        arg(&manifest),
        "--metric",
        "piqe",
        "--output",
        arg(&scores),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = dir.path().join("report");
    let out = stackfuse(&[
        "report",
        "--scores",
        arg(&scores),
        "--manifest",
        arg(&manifest),
        "--output",
        arg(&report),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["descriptive.csv", "boxplot.csv", "sp_vs_ap.csv", "ranking.csv"] {
        assert!(report.join(f).exists(), "{f}");
    }
    let ranking = std::fs::read_to_string(report.join("ranking.csv")).unwrap();
    assert_eq!(ranking.lines().count(), 5);
    let tests = std::fs::read_to_string(report.join("sp_vs_ap.csv")).unwrap();
    assert!(tests.lines().any(|l| l.starts_with("piqe,all,6,")));
}

#[test]
fn shipped_config_matches_defaults() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/default.toml");
    let with = stackfuse(&["--config", arg(&cfg), "enumerate"]);
    let without = stackfuse(&["enumerate"]);
    assert!(with.status.success(), "{}", String::from_utf8_lossy(&with.stderr));
    assert_eq!(with.stdout, without.stdout);
}
