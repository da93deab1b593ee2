//! Post-processing of tallies: probabilities, reform deltas, seeding effects,
//! sensitivity sweeps and expected prize money.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bracket::SeedingMode;
use crate::elo::Scaling;
use crate::mc::{run, McError, QualificationTally, RunConfig, RunSummary};
use crate::model::{Dataset, RoundLabel};

/// Money losses beyond this many Euros are flagged.
pub const FLAG_THRESHOLD_EUR: f64 = -1_000_000.0;

/// Relative losses are only reported above this old-format probability.
pub const RELATIVE_LOSS_FLOOR: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("tally has no runs")]
    NoRuns,
    #[error("tally has {0} format(s), need at least two to compare")]
    NotPaired(usize),
    #[error("format {0} not in tally")]
    MissingFormat(String),
    #[error("tallies are not comparable: {0}")]
    Mismatch(String),
    #[error("invalid prize schedule: {0}")]
    Schedule(String),
    #[error(transparent)]
    Mc(#[from] McError),
}

/// Starting fees per stage in millions of Euros, plus the net value of a
/// group-stage place over a Europa League consolation used for money deltas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrizeSchedule {
    pub preliminary: f64,
    pub first_qualifying: f64,
    pub second_qualifying: f64,
    pub third_qualifying: f64,
    pub play_off: f64,
    pub group_stage: f64,
    pub gs_premium: f64,
}

impl Default for PrizeSchedule {
    fn default() -> Self {
        PrizeSchedule {
            preliminary: 0.23,
            first_qualifying: 0.28,
            second_qualifying: 0.38,
            third_qualifying: 0.48,
            play_off: 5.0,
            group_stage: 15.25,
            gs_premium: 10.0,
        }
    }
}

impl PrizeSchedule {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        let fees = [
            self.preliminary,
            self.first_qualifying,
            self.second_qualifying,
            self.third_qualifying,
            self.play_off,
            self.group_stage,
            self.gs_premium,
        ];
        if fees.iter().all(|f| f.is_finite() && *f >= 0.0) {
            Ok(())
        } else {
            Err(AnalysisError::Schedule(format!("{fees:?} contains a negative or non-finite fee")))
        }
    }

    /// Fee for taking part in `round`, in millions of Euros.
    pub fn round_fee(&self, round: RoundLabel) -> f64 {
        match round {
            RoundLabel::PR => self.preliminary,
            RoundLabel::Q1 => self.first_qualifying,
            RoundLabel::Q2 => self.second_qualifying,
            RoundLabel::Q3 => self.third_qualifying,
            RoundLabel::PO => self.play_off,
        }
    }

    pub fn gs_premium_eur(&self) -> f64 {
        self.gs_premium * 1e6
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityRow {
    pub association: String,
    pub p_old: f64,
    pub se_old: f64,
    pub p_new: f64,
    pub se_new: f64,
    pub delta: f64,
    /// Standard error of the paired difference.
    pub se_delta: f64,
    /// `delta / p_old`, absent when `p_old` is below [`RELATIVE_LOSS_FLOOR`].
    pub relative_loss: Option<f64>,
    pub money_delta_eur: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityReport {
    pub old_format: String,
    pub new_format: String,
    pub runs: u64,
    pub gs_premium_eur: f64,
    pub rows: Vec<ProbabilityRow>,
}

impl ProbabilityReport {
    pub fn row(&self, association: &str) -> Option<&ProbabilityRow> {
        self.rows.iter().find(|r| r.association == association)
    }

    pub fn to_csv(&self) -> String {
        rows_to_csv(&self.rows)
    }
}

fn rows_to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
}

/// Reads rows written by [`ProbabilityReport::to_csv`].
pub fn probability_rows_from_csv(text: &str) -> Result<Vec<ProbabilityRow>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Qualification probabilities of one format with binomial standard errors.
pub fn format_probabilities(tally: &QualificationTally, format: &str) -> Result<Vec<(f64, f64)>, AnalysisError> {
    if tally.runs == 0 {
        return Err(AnalysisError::NoRuns);
    }
    let f = tally.format(format).ok_or_else(|| AnalysisError::MissingFormat(format.to_string()))?;
    Ok(f.counts
        .iter()
        .map(|&c| {
            let p = c as f64 / tally.runs as f64;
            (p, binomial_se(p, tally.runs))
        })
        .collect())
}

/// Compares the first two formats of `tally` (old, then new).
pub fn probabilities(tally: &QualificationTally, schedule: &PrizeSchedule) -> Result<ProbabilityReport, AnalysisError> {
    if tally.runs == 0 {
        return Err(AnalysisError::NoRuns);
    }
    if tally.formats.len() < 2 {
        return Err(AnalysisError::NotPaired(tally.formats.len()));
    }
    schedule.validate()?;
    let (old, new) = (&tally.formats[0], &tally.formats[1]);
    let n = tally.runs as f64;
    let rows = tally
        .associations
        .iter()
        .enumerate()
        .map(|(a, name)| {
            let p_old = old.counts[a] as f64 / n;
            let p_new = new.counts[a] as f64 / n;
            let p_both = tally.joint[a] as f64 / n;
            let delta = p_new - p_old;
            // Var(I_new − I_old) with the joint indicator from the same iterations.
            let var = (p_new + p_old - 2.0 * p_both - delta * delta).max(0.0);
            ProbabilityRow {
                association: name.clone(),
                p_old,
                se_old: binomial_se(p_old, tally.runs),
                p_new,
                se_new: binomial_se(p_new, tally.runs),
                delta,
                se_delta: (var / n).sqrt(),
                relative_loss: (p_old >= RELATIVE_LOSS_FLOOR).then(|| delta / p_old),
                money_delta_eur: delta * schedule.gs_premium_eur(),
            }
        })
        .collect();
    Ok(ProbabilityReport {
        old_format: old.format.clone(),
        new_format: new.format.clone(),
        runs: tally.runs,
        gs_premium_eur: schedule.gs_premium_eur(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedingRow {
    pub association: String,
    pub p_seeded: f64,
    pub p_unseeded: f64,
    /// `p_seeded − p_unseeded` in percentage points.
    pub contribution_pp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedingReport {
    pub format: String,
    pub runs: u64,
    pub rows: Vec<SeedingRow>,
}

impl SeedingReport {
    pub fn row(&self, association: &str) -> Option<&SeedingRow> {
        self.rows.iter().find(|r| r.association == association)
    }

    pub fn to_csv(&self) -> String {
        rows_to_csv(&self.rows)
    }
}

fn comparable(a: &RunSummary, b: &RunSummary) -> Result<(), String> {
    let same = a.iterations == b.iterations
        && a.scaling == b.scaling
        && a.season_weights == b.season_weights
        && a.formats == b.formats;
    if same {
        Ok(())
    } else {
        Err(format!("{a:?} vs {b:?}"))
    }
}

/// Effect of seeded pots on `format`: seeded minus unseeded probability.
pub fn seeding_contribution(
    seeded: &QualificationTally,
    unseeded: &QualificationTally,
    format: &str,
) -> Result<SeedingReport, AnalysisError> {
    if let (Some(s), Some(u)) = (&seeded.summary, &unseeded.summary) {
        comparable(s, u).map_err(AnalysisError::Mismatch)?;
        if s.seeding != SeedingMode::Seeded || u.seeding != SeedingMode::UnseededRandom {
            return Err(AnalysisError::Mismatch(format!(
                "expected seeded and unseeded-random runs, got {:?} and {:?}",
                s.seeding, u.seeding
            )));
        }
    }
    if seeded.associations != unseeded.associations {
        return Err(AnalysisError::Mismatch("association lists differ".into()));
    }
    let ps = format_probabilities(seeded, format)?;
    let pu = format_probabilities(unseeded, format)?;
    let rows = seeded
        .associations
        .iter()
        .zip(ps.iter().zip(&pu))
        .map(|(name, (&(s, _), &(u, _)))| SeedingRow {
            association: name.clone(),
            p_seeded: s,
            p_unseeded: u,
            contribution_pp: (s - u) * 100.0,
        })
        .collect();
    Ok(SeedingReport { format: format.to_string(), runs: seeded.runs, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityPoint {
    pub scaling: f64,
    pub report: ProbabilityReport,
}

/// One paired run per scaling value, all with the configured master seed.
pub fn sensitivity_sweep(
    config: &RunConfig,
    dataset: &Dataset,
    s_values: &[Scaling],
    schedule: &PrizeSchedule,
) -> Result<Vec<SensitivityPoint>, AnalysisError> {
    s_values
        .iter()
        .map(|&s| {
            let mut c = config.clone();
            c.scaling = s;
            let tally = run(&c, dataset)?;
            Ok(SensitivityPoint { scaling: s.value(), report: probabilities(&tally, schedule)? })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoneyRow {
    pub association: String,
    pub delta: f64,
    pub money_delta_eur: f64,
    /// Loss larger than one million Euros.
    pub flagged: bool,
}

/// Expected change in prize money, `delta × gs_premium`.
pub fn money_impact(report: &ProbabilityReport, schedule: &PrizeSchedule) -> Result<Vec<MoneyRow>, AnalysisError> {
    schedule.validate()?;
    Ok(report
        .rows
        .iter()
        .map(|r| {
            let money = r.delta * schedule.gs_premium_eur();
            MoneyRow {
                association: r.association.clone(),
                delta: r.delta,
                money_delta_eur: money,
                flagged: money < FLAG_THRESHOLD_EUR,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeeRow {
    pub association: String,
    pub format: String,
    /// Expected starting fees from every round reached plus the group stage,
    /// in millions of Euros.
    pub expected_fees_meur: f64,
}

/// Expected starting-fee income per association and format.
pub fn expected_fees(tally: &QualificationTally, schedule: &PrizeSchedule) -> Result<Vec<FeeRow>, AnalysisError> {
    if tally.runs == 0 {
        return Err(AnalysisError::NoRuns);
    }
    schedule.validate()?;
    let n = tally.runs as f64;
    let mut rows = Vec::new();
    for f in &tally.formats {
        for (a, name) in tally.associations.iter().enumerate() {
            let rounds: f64 = f
                .round_labels
                .iter()
                .zip(&f.reached)
                .map(|(label, reached)| schedule.round_fee(*label) * reached[a] as f64 / n)
                .sum();
            rows.push(FeeRow {
                association: name.clone(),
                format: f.format.clone(),
                expected_fees_meur: rounds + schedule.group_stage * f.counts[a] as f64 / n,
            });
        }
    }
    Ok(rows)
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
