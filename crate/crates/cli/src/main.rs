mod args;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::Parser;
use lifelog_core::bundle::build_bundle;
use lifelog_core::heatmap::{encode_png, render_heatmap, Ribbon};
use lifelog_core::ingest::{Dataset, DatasetSources, IngestReports, ParseReport};
use lifelog_core::moments::episodes_to_csv;
use lifelog_core::pipeline::{self, PipelineParams};
use serde::Serialize;

use args::{pipeline_params, Cli, Command, Inputs, ReportFormat};

/// Exit status split between bad input and everything else.
enum Failure {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

impl From<lifelog_core::Error> for Failure {
    fn from(e: lifelog_core::Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.into())
        } else {
            Failure::Internal(e.into())
        }
    }
}

fn input(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Input(e.into())
}

fn internal(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Internal(e.into())
}

#[derive(Debug, Default, Serialize)]
struct Summary {
    command: &'static str,
    hr: Option<Counts>,
    gps: Option<Counts>,
    images: Option<ImageCounts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    windows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frames_aligned: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    geo_matched: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    episodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spot_cells: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<String>,
}

#[derive(Debug, Serialize)]
struct Counts {
    accepted: usize,
    rejected: usize,
    duplicates: usize,
    out_of_range: usize,
    malformed: usize,
}

impl From<&ParseReport> for Counts {
    fn from(r: &ParseReport) -> Self {
        Self {
            accepted: r.accepted,
            rejected: r.rejected,
            duplicates: r.duplicates,
            out_of_range: r.out_of_range,
            malformed: r.malformed,
        }
    }
}

#[derive(Debug, Serialize)]
struct ImageCounts {
    accepted: usize,
    sharp: usize,
    non_matching: usize,
    unreadable: usize,
    duplicates: usize,
}

impl Summary {
    fn new(command: &'static str, reports: &IngestReports) -> Self {
        Self {
            command,
            hr: reports.hr.as_ref().map(Counts::from),
            gps: reports.gps.as_ref().map(Counts::from),
            images: reports.images.as_ref().map(|r| ImageCounts {
                accepted: r.accepted,
                sharp: r.sharp,
                non_matching: r.non_matching.len(),
                unreadable: r.unreadable.len(),
                duplicates: r.duplicate_ids.len(),
            }),
            ..Self::default()
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(internal)?;
    }
    let report = cli.report;
    let summary = match cli.command {
        Command::Ingest { inputs } => {
            if inputs.hr.is_none() && inputs.gps.is_none() && inputs.images.is_none() {
                return Err(input(anyhow!(
                    "nothing to ingest: pass at least one of --hr, --gps, --images"
                )));
            }
            let params = pipeline_params(&inputs, None, None, None);
            let (_, reports) = load(&inputs, &params)?;
            Summary::new("ingest", &reports)
        }
        Command::Fuse {
            inputs,
            fusion,
            out,
        } => {
            require(&inputs, true, false, false)?;
            check_stdout(report, &out)?;
            let params = pipeline_params(&inputs, Some(&fusion), None, None);
            let (dataset, reports) = load(&inputs, &params)?;
            let fused = pipeline::fuse(&dataset, &params)?;
            emit(
                &out,
                lifelog_core::fusion::windows_to_csv(&fused.windows).as_bytes(),
            )?;
            Summary {
                windows: Some(fused.windows.len()),
                frames_aligned: Some(fused.alignment.frames.len()),
                geo_matched: Some(fused.gps.pairs.len()),
                out: out.map(|p| p.display().to_string()),
                ..Summary::new("fuse", &reports)
            }
        }
        Command::Moments {
            inputs,
            fusion,
            moments,
            out,
        } => {
            require(&inputs, true, false, false)?;
            check_stdout(report, &out)?;
            let params = pipeline_params(&inputs, Some(&fusion), Some(&moments), None);
            let (dataset, reports) = load(&inputs, &params)?;
            let fused = pipeline::fuse(&dataset, &params)?;
            let episodes = pipeline::special_moments(&fused, &params)?;
            emit(&out, episodes_to_csv(&episodes).as_bytes())?;
            Summary {
                windows: Some(fused.windows.len()),
                frames_aligned: Some(fused.alignment.frames.len()),
                episodes: Some(episodes.len()),
                out: out.map(|p| p.display().to_string()),
                ..Summary::new("moments", &reports)
            }
        }
        Command::Heatmap {
            inputs,
            fusion,
            heatmap,
            out,
        } => {
            require(&inputs, false, true, true)?;
            let params = pipeline_params(&inputs, Some(&fusion), None, Some(&heatmap));
            let (dataset, reports) = load(&inputs, &params)?;
            let fused = pipeline::fuse(&dataset, &params)?;
            let map = render_heatmap(&fused.gps.pairs, &params.heatmap, &Ribbon::rainbow())?;
            let png = encode_png(&map.raster)?;
            write_file(&out, &png)?;
            Summary {
                geo_matched: Some(fused.gps.pairs.len()),
                spot_cells: Some(map.spots.cell_count()),
                out: Some(out.display().to_string()),
                ..Summary::new("heatmap", &reports)
            }
        }
        Command::Bundle {
            inputs,
            fusion,
            moments,
            heatmap,
            out,
        } => {
            require(&inputs, true, true, true)?;
            let params = pipeline_params(&inputs, Some(&fusion), Some(&moments), Some(&heatmap));
            let (dataset, reports) = load(&inputs, &params)?;
            let output = pipeline::run(dataset, reports.clone(), &params)?;
            let bundle = build_bundle(&output, &params, &out)?;
            tracing::info!(
                episodes = bundle.manifest.episodes.len(),
                spot_cells = bundle.manifest.spots.cells.len(),
                "bundle written to {}",
                out.display()
            );
            Summary {
                windows: Some(output.fused.windows.len()),
                frames_aligned: Some(output.fused.alignment.frames.len()),
                geo_matched: Some(output.fused.gps.pairs.len()),
                episodes: Some(output.episodes.len()),
                spot_cells: Some(output.heatmap.spots.cell_count()),
                out: Some(out.display().to_string()),
                ..Summary::new("bundle", &reports)
            }
        }
        Command::Serve {
            bundle,
            addr,
            viewer,
        } => {
            let runtime = tokio::runtime::Runtime::new().map_err(internal)?;
            let opts = lifelog_serve::ServeOptions { viewer_dir: viewer };
            runtime
                .block_on(lifelog_serve::serve(&bundle, addr, opts))
                .map_err(|e| match e {
                    lifelog_serve::ServeError::Bundle(e) => Failure::from(e),
                    other => input(other),
                })?;
            return Ok(());
        }
        Command::Synth { out, seed } => {
            let config = lifelog_core::synth::SynthConfig {
                seed,
                ..Default::default()
            };
            lifelog_core::synth::generate(&config).write_to(&out)?;
            Summary {
                command: "synth",
                out: Some(out.display().to_string()),
                ..Summary::default()
            }
        }
    };

    if report == Some(ReportFormat::Json) {
        let mut stdout = std::io::stdout().lock();
        serde_json::to_writer_pretty(&mut stdout, &summary).map_err(internal)?;
        writeln!(stdout).map_err(internal)?;
    }
    Ok(())
}

fn require(inputs: &Inputs, hr: bool, gps: bool, images: bool) -> Result<(), Failure> {
    let missing: Vec<&str> = [
        (hr && inputs.hr.is_none(), "--hr"),
        (gps && inputs.gps.is_none(), "--gps"),
        (images && inputs.images.is_none(), "--images"),
    ]
    .into_iter()
    .filter_map(|(m, flag)| m.then_some(flag))
    .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(input(anyhow!(
            "missing required flag {}",
            missing.join(", ")
        )))
    }
}

fn check_stdout(
    report: Option<ReportFormat>,
    out: &Option<std::path::PathBuf>,
) -> Result<(), Failure> {
    if report.is_some() && out.is_none() {
        return Err(input(anyhow!(
            "--report json writes to stdout; pass --out for the CSV"
        )));
    }
    Ok(())
}

fn load(inputs: &Inputs, params: &PipelineParams) -> Result<(Dataset, IngestReports), Failure> {
    let sources = DatasetSources {
        hr: inputs.hr.clone(),
        gps: inputs.gps.clone(),
        images: inputs.images.clone(),
    };
    let (dataset, reports) = Dataset::load(&sources, inputs.tz_offset, &params.scan_options())?;
    print_reports(&reports);
    Ok((dataset, reports))
}

fn print_reports(reports: &IngestReports) {
    let mut err = std::io::stderr().lock();
    if let Some(r) = &reports.hr {
        let _ = writeln!(err, "hr: {r}");
        for issue in &r.issues {
            tracing::debug!(line = issue.line, "hr row rejected: {:?}", issue.kind);
        }
    }
    if let Some(r) = &reports.gps {
        let _ = writeln!(err, "gps: {r}");
        for issue in &r.issues {
            tracing::debug!(line = issue.line, "gps row rejected: {:?}", issue.kind);
        }
    }
    if let Some(r) = &reports.images {
        let _ = writeln!(err, "images: {r}");
        for (name, reason) in &r.unreadable {
            tracing::warn!("cannot score {name}: {reason}");
        }
    }
}

fn emit(out: &Option<std::path::PathBuf>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => write_file(path, bytes),
        None => std::io::stdout().write_all(bytes).map_err(internal),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(input)
}
