//! Runs a manifest's experiment and renders its report files.

use anyhow::{Context, Result};
use qualsim::analysis::{
    expected_fees, money_impact, probabilities, seeding_contribution, sensitivity_sweep, FeeRow, MoneyRow,
    ProbabilityReport, SeedingReport, SensitivityPoint,
};
use qualsim::bracket::SeedingMode;
use qualsim::mc::{convergence_series, run, ConvergencePoint, RunConfig, RunSummary};
use qualsim::model::Dataset;
use serde::{Deserialize, Serialize};

use crate::manifest::{ExperimentKind, ExperimentManifest};

/// Everything a report JSON file holds. The `kind` tag tells readers which
/// variant follows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Report {
    Baseline(ProbabilityOutput),
    Weighted(ProbabilityOutput),
    Sensitivity { summary: RunSummary, points: Vec<SensitivityPoint> },
    Seeding { summary: RunSummary, reports: Vec<SeedingReport> },
    Convergence { summary: RunSummary, formats: Vec<String>, points: Vec<ConvergencePoint> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityOutput {
    pub summary: RunSummary,
    pub report: ProbabilityReport,
    pub money: Vec<MoneyRow>,
    pub fees: Vec<FeeRow>,
}

pub fn execute(manifest: &ExperimentManifest, config: &RunConfig, dataset: &Dataset) -> Result<Report> {
    let schedule = manifest.schedule();
    let summary = config.summary();
    let report = match manifest.kind {
        ExperimentKind::Baseline | ExperimentKind::Weighted => {
            let tally = run(config, dataset)?;
            let report = probabilities(&tally, &schedule)?;
            let output = ProbabilityOutput {
                summary,
                money: money_impact(&report, &schedule)?,
                fees: expected_fees(&tally, &schedule)?,
                report,
            };
            if manifest.kind == ExperimentKind::Baseline {
                Report::Baseline(output)
            } else {
                Report::Weighted(output)
            }
        }
        ExperimentKind::Sensitivity => Report::Sensitivity {
            points: sensitivity_sweep(config, dataset, &manifest.scalings(), &schedule)?,
            summary,
        },
        ExperimentKind::Seeding => {
            let mut seeded = config.clone();
            seeded.seeding = SeedingMode::Seeded;
            let mut unseeded = config.clone();
            unseeded.seeding = SeedingMode::UnseededRandom;
            let (a, b) = (run(&seeded, dataset)?, run(&unseeded, dataset)?);
            let reports =
                config.formats.iter().map(|f| seeding_contribution(&a, &b, &f.name)).collect::<Result<Vec<_>, _>>()?;
            Report::Seeding { summary: seeded.summary(), reports }
        }
        ExperimentKind::Convergence => {
            let points = convergence_series(config, dataset, &manifest.checkpoints())?;
            let mut summary = summary;
            summary.iterations = manifest.iterations;
            Report::Convergence { summary, formats: config.formats.iter().map(|f| f.name.clone()).collect(), points }
        }
    };
    Ok(report)
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports serialize");
        text.push('\n');
        text
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        match self {
            Report::Baseline(o) | Report::Weighted(o) => return Ok(o.report.to_csv()),
            Report::Sensitivity { points, .. } => {
                w.write_record(["scaling", "association", "p_old", "p_new", "delta", "se_delta"])?;
                for point in points {
                    for r in &point.report.rows {
                        w.write_record([
                            point.scaling.to_string(),
                            r.association.clone(),
                            r.p_old.to_string(),
                            r.p_new.to_string(),
                            r.delta.to_string(),
                            r.se_delta.to_string(),
                        ])?;
                    }
                }
            }
            Report::Seeding { reports, .. } => {
                w.write_record(["format", "association", "p_seeded", "p_unseeded", "contribution_pp"])?;
                for report in reports {
                    for r in &report.rows {
                        w.write_record([
                            report.format.clone(),
                            r.association.clone(),
                            r.p_seeded.to_string(),
                            r.p_unseeded.to_string(),
                            r.contribution_pp.to_string(),
                        ])?;
                    }
                }
            }
            Report::Convergence { formats, points, .. } => {
                let mut header = vec!["iterations".to_string()];
                header.extend(formats.iter().map(|f| format!("{f} average_elo")));
                header.extend(formats.iter().map(|f| format!("{f} average_drawn_elo")));
                w.write_record(&header)?;
                for p in points {
                    let mut record = vec![p.iterations.to_string()];
                    record.extend(p.average_elo.iter().map(f64::to_string));
                    record.extend(p.average_drawn_elo.iter().map(f64::to_string));
                    w.write_record(&record)?;
                }
            }
        }
        let bytes = w.into_inner().context("flushing CSV")?;
        Ok(String::from_utf8(bytes)?)
    }
}
