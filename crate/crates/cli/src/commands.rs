use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use geoconsist::imageio::{load_frame_dir, Frame, ImageIoError};
use geoconsist::metrics::{analyze_pair, score_video, stability_curve, MetricsError};
use geoconsist::report::{
    draw_matches, plot_stability, to_csv_string, to_json_string, write_stability_json, ReportError,
    ScoreReport, StabilityReport,
};
use geoconsist::synth::{add_pixel_noise, jitter_warp, render_preset, SceneConfig, SynthError};
use log::info;

use crate::{
    CompareArgs, Failure, Format, ScoreArgs, StabilityArgs, SynthArgs, VizArgs,
    EXIT_ALL_PAIRS_INVALID, EXIT_INSUFFICIENT_FRAMES, EXIT_IO, EXIT_USAGE,
};

type CmdResult = Result<(), Failure>;

fn image_failure(e: ImageIoError) -> Failure {
    let code = match e {
        ImageIoError::InsufficientFrames { .. } => EXIT_INSUFFICIENT_FRAMES,
        ImageIoError::ZeroInterval | ImageIoError::BadPattern(_) => EXIT_USAGE,
        _ => EXIT_IO,
    };
    Failure::new(code, e)
}

fn metrics_failure(e: MetricsError) -> Failure {
    let code = match e {
        MetricsError::InsufficientFrames { .. } => EXIT_INSUFFICIENT_FRAMES,
        MetricsError::AllPairsInvalid { .. } | MetricsError::PairInvalid { .. } => {
            EXIT_ALL_PAIRS_INVALID
        }
        MetricsError::InvalidParams(_) | MetricsError::BadPair(..) => EXIT_USAGE,
        MetricsError::DimensionMismatch(..) | MetricsError::Sift(_) => EXIT_IO,
    };
    Failure::new(code, e)
}

fn report_failure(e: ReportError) -> Failure {
    let code = match e {
        ReportError::EmptyReport => EXIT_ALL_PAIRS_INVALID,
        _ => EXIT_IO,
    };
    Failure::new(code, e)
}

fn synth_failure(e: SynthError) -> Failure {
    let code = match e {
        SynthError::InvalidConfig(_) => EXIT_USAGE,
        _ => EXIT_IO,
    };
    Failure::new(code, e)
}

fn load(dir: &Path, pattern: &str) -> Result<Vec<Frame>, Failure> {
    let frames = load_frame_dir(dir, pattern).map_err(image_failure)?;
    info!("{}: {} frames", dir.display(), frames.len());
    Ok(frames)
}

fn dir_name(dir: &Path) -> String {
    dir.canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| dir.display().to_string())
}

fn labels(dirs: &[PathBuf], given: &[String]) -> Result<Vec<String>, Failure> {
    if given.is_empty() {
        return Ok(dirs.iter().map(|d| dir_name(d)).collect());
    }
    if given.len() != dirs.len() {
        return Err(Failure::usage(format!(
            "{} --label values for {} --frames-dir values",
            given.len(),
            dirs.len()
        )));
    }
    Ok(given.to_vec())
}

fn write_output(text: &str, output: Option<&Path>) -> CmdResult {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| {
            Failure::new(
                EXIT_IO,
                anyhow::anyhow!("cannot write {}: {e}", path.display()),
            )
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::new(EXIT_IO, e)),
    }
}

/// The summary goes to stdout unless the report itself does.
fn summary(line: &str, report_on_stdout: bool) {
    if report_on_stdout {
        eprintln!("{line}");
    } else {
        println!("{line}");
    }
}

fn summary_line(r: &ScoreReport) -> String {
    format!(
        "{}: num_pts={:.2} num_inliers_F={:.2} keep_ratio={:.2} mean_err={:.2} rmse={:.2} ({} pairs, {} invalid)",
        r.video_id, r.num_pts, r.num_inliers_f, r.keep_ratio, r.mean_err, r.rmse, r.pair_count, r.invalid_pairs
    )
}

fn score_dir(
    dir: &Path,
    video: String,
    method: &str,
    interval: usize,
    pipeline: &crate::Pipeline,
) -> Result<ScoreReport, Failure> {
    let params = pipeline.params();
    let frames = load(dir, &pipeline.pattern)?;
    let eval = score_video(&frames, interval, &params).map_err(metrics_failure)?;
    Ok(ScoreReport::from_evaluation(video, method, &params, &eval))
}

fn render(reports: &[ScoreReport], format: Format) -> Result<String, Failure> {
    match format {
        Format::Csv => to_csv_string(reports).map_err(report_failure),
        Format::Json if reports.len() == 1 => to_json_string(&reports[0]).map_err(report_failure),
        Format::Json => {
            let mut s =
                serde_json::to_string_pretty(reports).map_err(|e| Failure::new(EXIT_IO, e))?;
            s.push('\n');
            Ok(s)
        }
    }
}

pub fn score(a: &ScoreArgs) -> CmdResult {
    let video = a.video.clone().unwrap_or_else(|| dir_name(&a.frames_dir));
    let report = score_dir(
        &a.frames_dir,
        video,
        &a.label,
        a.interval as usize,
        &a.pipeline,
    )?;
    write_output(
        &render(std::slice::from_ref(&report), a.format)?,
        a.output.as_deref(),
    )?;
    summary(&summary_line(&report), a.output.is_none());
    Ok(())
}

pub fn compare(a: &CompareArgs) -> CmdResult {
    let methods = labels(&a.frames_dir, &a.label)?;
    let mut reports = Vec::with_capacity(a.frames_dir.len());
    for (dir, method) in a.frames_dir.iter().zip(&methods) {
        let video = a.video.clone().unwrap_or_else(|| dir_name(dir));
        reports.push(score_dir(
            dir,
            video,
            method,
            a.interval as usize,
            &a.pipeline,
        )?);
    }
    write_output(&render(&reports, a.format)?, a.output.as_deref())?;
    for (r, method) in reports.iter().zip(&methods) {
        summary(
            &format!("[{method}] {}", summary_line(r)),
            a.output.is_none(),
        );
    }
    Ok(())
}

fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn stability(a: &StabilityArgs) -> CmdResult {
    let names = labels(&a.frames_dir, &a.label)?;
    let slugs: Vec<String> = names.iter().map(|l| slug(l)).collect();
    if slugs.iter().collect::<BTreeSet<_>>().len() != slugs.len() {
        return Err(Failure::usage("curve labels must be distinct"));
    }
    let params = a.pipeline.params();
    let mut curves = Vec::with_capacity(names.len());
    for (dir, label) in a.frames_dir.iter().zip(&names) {
        let frames = load(dir, &a.pipeline.pattern)?;
        let curve = stability_curve(&frames, &a.intervals, &params).map_err(metrics_failure)?;
        curves.push((label.clone(), curve));
    }
    plot_stability(&curves, &a.output).map_err(report_failure)?;
    let stem = a
        .output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "stability".into());
    for ((label, curve), s) in curves.iter().zip(&slugs) {
        let path = a.output.with_file_name(format!("{stem}-{s}.json"));
        write_stability_json(&StabilityReport::new(label, &params, curve), &path)
            .map_err(report_failure)?;
        let points: Vec<String> = curve
            .points
            .iter()
            .map(|p| format!("{}:{:.2}", p.interval, p.mean_keep_ratio))
            .collect();
        println!("{label}: keep_ratio by interval {}", points.join(" "));
    }
    Ok(())
}

pub fn viz(a: &VizArgs) -> CmdResult {
    let params = a.pipeline.params();
    let frames = load(&a.frames_dir, &a.pipeline.pattern)?;
    let (ia, ib) = a.pair;
    if ib >= frames.len() {
        return Err(Failure::usage(format!(
            "frame index {ib} out of range, {} has {} frames",
            a.frames_dir.display(),
            frames.len()
        )));
    }
    let analysis = analyze_pair(&frames[ia], &frames[ib], &params).map_err(metrics_failure)?;
    match analysis.metrics() {
        Ok(m) => {
            draw_matches(
                &frames[ia],
                &frames[ib],
                &analysis.correspondences,
                analysis.inlier_ids(),
                &a.output,
            )
            .map_err(report_failure)?;
            println!(
                "num_pts={} inliers={} keep_ratio={:.2}",
                m.num_pts, m.num_inliers_f, m.keep_ratio
            );
            Ok(())
        }
        Err(e) => {
            if analysis.num_pts() >= 1 {
                draw_matches(
                    &frames[ia],
                    &frames[ib],
                    &analysis.correspondences,
                    &[],
                    &a.output,
                )
                .map_err(report_failure)?;
            }
            println!("num_pts={} inliers=0 keep_ratio=0.00", analysis.num_pts());
            Err(metrics_failure(e))
        }
    }
}

pub fn synth(a: &SynthArgs) -> CmdResult {
    let mut cfg = match a.preset {
        geoconsist::synth::Preset::Orbit => SceneConfig::orbit(a.frames as usize, a.seed),
        geoconsist::synth::Preset::Dolly => SceneConfig::dolly(a.frames as usize, a.seed),
    };
    cfg.width = a.width as usize;
    cfg.height = a.height as usize;
    let (_, frames, ledger) = render_preset(&cfg).map_err(synth_failure)?;
    let frames = jitter_warp(&frames, a.jitter, a.seed).map_err(synth_failure)?;
    let frames = add_pixel_noise(&frames, a.noise, a.seed).map_err(synth_failure)?;

    fs::create_dir_all(&a.out_dir).map_err(|e| {
        Failure::new(
            EXIT_IO,
            anyhow::anyhow!("cannot create {}: {e}", a.out_dir.display()),
        )
    })?;
    let width = frames.len().saturating_sub(1).to_string().len().max(4);
    for f in &frames {
        let path = a.out_dir.join(format!("frame_{:0width$}.png", f.index));
        f.save_png(&path).map_err(image_failure)?;
    }
    let ledger_path = a.out_dir.join("ledger.json");
    let mut text = serde_json::to_string_pretty(&ledger).map_err(|e| Failure::new(EXIT_IO, e))?;
    text.push('\n');
    fs::write(&ledger_path, text).map_err(|e| {
        Failure::new(
            EXIT_IO,
            anyhow::anyhow!("cannot write {}: {e}", ledger_path.display()),
        )
    })?;
    println!(
        "wrote {} frames ({}x{}, {:?}, jitter {}, noise {}) and ledger.json to {}",
        frames.len(),
        a.width,
        a.height,
        a.preset,
        a.jitter,
        a.noise,
        a.out_dir.display()
    );
    Ok(())
}
