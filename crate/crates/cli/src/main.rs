//! `qualsim`: run qualification experiments from manifests, chart the
//! reports, check fixtures and refresh Elo ratings.
//!
//! Exit codes: 0 success, 2 invalid manifest or arguments, 3 data or report
//! failure, 1 anything else (such as a network error).

mod chart;
mod experiment;
mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand};
use qualsim::analysis::probability_rows_from_csv;
use qualsim::data::clubelo::{fetch_clubelo_snapshot, rating_date, ClubMapping, EloSource, RecordedSource};
use qualsim::data::load_fixtures;
use serde::Serialize;

use crate::chart::{bar_chart, dual_line_chart, order_by_rank, scatter_chart, Bar};
use crate::experiment::{execute, ProbabilityOutput, Report};
use crate::manifest::ExperimentManifest;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("QUALSIM_GIT_DESCRIBE"), ")");
const DEFAULT_DATA: &str = "data/fixtures";
const DEFAULT_OUT: &str = "out";

#[derive(Parser)]
#[command(name = "qualsim", version = VERSION, about = "Monte-Carlo comparison of qualification formats")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a manifest and write its reports.
    ///
    /// Flags override the manifest; `--data` falls back to the manifest's
    /// `data` key and then to `data/fixtures`, `--out` to `out` likewise.
    Simulate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        partitions: Option<u32>,
        #[arg(long)]
        iterations: Option<u64>,
    },
    /// Draw SVG charts from report files (`*.json`, or a probability `*.csv`).
    Chart {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Directory for the SVG files; defaults to each report's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Load and validate a fixtures directory.
    Validate {
        #[arg(long, default_value = DEFAULT_DATA)]
        data: PathBuf,
    },
    /// Fetch Club Elo ratings for a season into a new candidate elo.csv.
    FetchElo {
        /// Season label such as 2019/20.
        #[arg(long)]
        season: String,
        /// CSV with `association,season,club` rows.
        #[arg(long)]
        mapping: PathBuf,
        /// Output file; must not exist yet.
        #[arg(long)]
        out: PathBuf,
        /// Rating date, YYYY-MM-DD; defaults to 1 September of the season.
        #[arg(long)]
        date: Option<String>,
        /// Use a saved API response instead of the network.
        #[arg(long)]
        recorded: Option<PathBuf>,
        #[cfg(feature = "http")]
        #[arg(long, default_value = qualsim::data::clubelo::DEFAULT_BASE_URL)]
        base_url: String,
    },
}

/// An error and the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: error.into() }
}

fn data(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 3, error: error.into() }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 1, error }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { manifest, data, out, seed, partitions, iterations } => {
            simulate(&manifest, Overrides { data, out, seed, partitions, iterations })
        }
        Command::Chart { reports, out } => chart(&reports, out.as_deref()),
        Command::Validate { data } => validate(&data),
        #[cfg(feature = "http")]
        Command::FetchElo { season, mapping, out, date, recorded, base_url } => {
            fetch_elo(&season, &mapping, &out, date, recorded, Some(base_url))
        }
        #[cfg(not(feature = "http"))]
        Command::FetchElo { season, mapping, out, date, recorded } => {
            fetch_elo(&season, &mapping, &out, date, recorded, None)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}

struct Overrides {
    data: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    partitions: Option<u32>,
    iterations: Option<u64>,
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    kind: &'a str,
    version: &'a str,
    seed: u64,
    iterations: u64,
    partitions: u32,
    data: String,
    files: Vec<String>,
    started_unix_seconds: u64,
    wall_time_seconds: f64,
}

fn simulate(manifest_path: &Path, flags: Overrides) -> Result<(), Failure> {
    let mut manifest = ExperimentManifest::load(manifest_path).map_err(usage)?;
    if let Some(seed) = flags.seed {
        manifest.seed = seed;
    }
    if let Some(p) = flags.partitions {
        manifest.partitions = Some(p);
    }
    if let Some(n) = flags.iterations {
        manifest.iterations = n;
    }
    manifest.data = Some(flags.data.or(manifest.data).unwrap_or_else(|| DEFAULT_DATA.into()));
    manifest.out = Some(flags.out.or(manifest.out).unwrap_or_else(|| DEFAULT_OUT.into()));
    manifest.check().map_err(usage)?;
    let config = manifest.run_config().map_err(usage)?;

    let data_dir = manifest.data.clone().expect("set above");
    let out_dir = manifest.out.clone().expect("set above");
    let dataset = load_fixtures(&data_dir).map_err(data)?.dataset;

    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let report = execute(&manifest, &config, &dataset).map_err(data)?;
    let wall = clock.elapsed().as_secs_f64();

    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let stem = manifest.kind.stem();
    let files = [
        (format!("{stem}.csv"), report.to_csv()?),
        (format!("{stem}.json"), report.to_json()),
        ("manifest.toml".to_string(), manifest.canonical()),
    ];
    for (name, body) in &files {
        write(&out_dir.join(name), body)?;
    }
    let metadata = RunMetadata {
        kind: stem,
        version: VERSION,
        seed: config.master_seed,
        iterations: config.iterations,
        partitions: config.partitions,
        data: data_dir.display().to_string(),
        files: files.iter().map(|(n, _)| n.clone()).collect(),
        started_unix_seconds: started,
        wall_time_seconds: wall,
    };
    let mut run_json = serde_json::to_string_pretty(&metadata).context("serializing run metadata")?;
    run_json.push('\n');
    write(&out_dir.join("run.json"), &run_json)?;
    println!("{} iterations in {wall:.1}s; reports in {}", config.iterations, out_dir.display());
    Ok(())
}

fn write(path: &Path, body: &str) -> Result<(), Failure> {
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn chart(reports: &[PathBuf], out: Option<&Path>) -> Result<(), Failure> {
    for path in reports {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(data)?;
        let dir = out.map(Path::to_path_buf).unwrap_or_else(|| path.parent().unwrap_or(Path::new(".")).to_path_buf());
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report").to_string();
        let charts = charts_for(path, &text, &stem).with_context(|| path.display().to_string()).map_err(data)?;
        for (name, svg) in charts {
            let target = dir.join(name);
            write(&target, &svg)?;
            println!("{}", target.display());
        }
    }
    Ok(())
}

fn charts_for(path: &Path, text: &str, stem: &str) -> anyhow::Result<Vec<(String, String)>> {
    if text.trim().is_empty() {
        bail!("report is empty");
    }
    if path.extension().is_some_and(|e| e == "csv") {
        let rows = probability_rows_from_csv(text).context("not a probability report")?;
        let points = rows.iter().map(|r| (r.association.clone(), r.p_old, r.delta)).collect();
        return probability_charts(stem, "", points);
    }
    let report: Report = serde_json::from_str(text).context("not a report file")?;
    match report {
        Report::Baseline(o) | Report::Weighted(o) => probability_output_charts(stem, &o),
        Report::Sensitivity { points, .. } => {
            let mut charts = Vec::new();
            for point in points {
                let rows = point.report.rows.iter().map(|r| (r.association.clone(), r.p_old, r.delta)).collect();
                charts.extend(probability_charts(
                    &format!("{stem}-s{}", point.scaling),
                    &format!(", s = {}", point.scaling),
                    rows,
                )?);
            }
            Ok(charts)
        }
        Report::Seeding { reports, .. } => reports
            .iter()
            .map(|r| {
                let bars: Vec<Bar> = r
                    .rows
                    .iter()
                    .map(|row| Bar { label: row.association.clone(), value: row.contribution_pp })
                    .collect();
                let svg = bar_chart(
                    &format!("Effect of seeding, {} format", r.format),
                    "seeded minus unseeded (pp)",
                    &order_by_rank(bars),
                )?;
                Ok((format!("{stem}-{}.svg", r.format), svg))
            })
            .collect(),
        Report::Convergence { formats, points, .. } => {
            if formats.len() < 2 {
                bail!("convergence report needs two formats");
            }
            let xs: Vec<f64> = points.iter().map(|p| p.iterations as f64).collect();
            let old: Vec<f64> = points.iter().map(|p| p.average_elo[0]).collect();
            let new: Vec<f64> = points.iter().map(|p| p.average_elo[1]).collect();
            let svg = dual_line_chart(
                "Average Elo of qualified teams",
                [&format!("{} format", formats[0]), &format!("{} format", formats[1])],
                &xs,
                [&old, &new],
            )?;
            Ok(vec![(format!("{stem}.svg"), svg)])
        }
    }
}

fn probability_output_charts(stem: &str, o: &ProbabilityOutput) -> anyhow::Result<Vec<(String, String)>> {
    let rows = o.report.rows.iter().map(|r| (r.association.clone(), r.p_old, r.delta)).collect();
    probability_charts(stem, "", rows)
}

/// Delta bars in rank order and delta against the old-format probability,
/// both in percentage points.
fn probability_charts(
    stem: &str,
    suffix: &str,
    rows: Vec<(String, f64, f64)>,
) -> anyhow::Result<Vec<(String, String)>> {
    if rows.is_empty() {
        bail!("report has no rows");
    }
    let bars: Vec<Bar> = rows.iter().map(|(a, _, d)| Bar { label: a.clone(), value: d * 100.0 }).collect();
    let delta =
        bar_chart(&format!("Change in group-stage probability{suffix}"), "new minus old (pp)", &order_by_rank(bars))?;
    let points: Vec<(String, f64, f64)> = rows.into_iter().map(|(a, p, d)| (a, p * 100.0, d * 100.0)).collect();
    let scatter = scatter_chart(
        &format!("Change against old-format probability{suffix}"),
        "old-format probability (%)",
        "new minus old (pp)",
        &points,
    )?;
    Ok(vec![(format!("{stem}-delta.svg"), delta), (format!("{stem}-scatter.svg"), scatter)])
}

fn validate(dir: &Path) -> Result<(), Failure> {
    let bundle = load_fixtures(dir).map_err(data)?;
    let d = &bundle.dataset;
    println!("{}: ok, {} associations over {} seasons", bundle.provenance, d.roster.len(), d.seasons.len());
    Ok(())
}

fn fetch_elo(
    season: &str,
    mapping: &Path,
    out: &Path,
    date: Option<String>,
    recorded: Option<PathBuf>,
    base_url: Option<String>,
) -> Result<(), Failure> {
    let date = match date {
        Some(d) => d,
        None => rating_date(season).ok_or_else(|| usage(anyhow!("cannot derive a date from season `{season}`")))?,
    };
    let mapping_text =
        fs::read_to_string(mapping).with_context(|| format!("reading {}", mapping.display())).map_err(data)?;
    let mapping = ClubMapping::from_csv(&mapping_text).map_err(data)?;
    let source: Box<dyn EloSource> = match (recorded, base_url) {
        (Some(path), _) => {
            let body =
                fs::read_to_string(&path).with_context(|| format!("reading {}", path.display())).map_err(data)?;
            Box::new(RecordedSource(body))
        }
        #[cfg(feature = "http")]
        (None, Some(base_url)) => Box::new(qualsim::data::clubelo::HttpSource { base_url }),
        _ => return Err(usage(anyhow!("built without network support; pass --recorded"))),
    };
    let snapshot = fetch_clubelo_snapshot(source.as_ref(), &date, season, &mapping).map_err(|e| {
        use qualsim::data::clubelo::FetchError;
        match e {
            FetchError::InvalidDate(_) => usage(e),
            FetchError::Http { .. } | FetchError::Io(_) => Failure::from(anyhow::Error::from(e)),
            _ => data(e),
        }
    })?;
    snapshot.write_candidate(out).map_err(data)?;
    println!("{} ratings for {season} ({date}) written to {}", snapshot.records.len(), out.display());
    for association in &snapshot.unmapped {
        eprintln!("unmapped: {association} (club not in the response)");
    }
    Ok(())
}
