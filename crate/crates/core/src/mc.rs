//! The Monte-Carlo engine.
//!
//! Each iteration draws, in this order and from a single stream:
//!
//! 1. the season whose access-list ranks apply (weighted by the policy);
//! 2. one profile cell per association, in association order, uniformly
//!    among the seasons where that association has a champion profile;
//! 3. the outcome matrices over the season's competitors (see
//!    [`OutcomeMatrices::fill`]);
//! 4. the draws of every format, in the order the formats are configured.
//!
//! All formats see the same season, profiles and matrices, so differences
//! between them are paired. Iterations are split into contiguous blocks, one
//! per partition; partition `p` uses a Xoshiro256++ generator seeded from the
//! master seed (via `seed_from_u64`) and then advanced by `p` jumps of 2^128
//! steps. Results therefore depend only on `(master_seed, partitions)`, not
//! on thread scheduling.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bracket::{build_entry_lists, run_format, BracketError, EntryLists, Field, OutcomeMatrices, SeedingMode};
use crate::elo::{win_prob_one_leg, win_prob_two_leg, Scaling};
use crate::model::{AssociationId, ChampionProfile, Dataset, FormatError, FormatSpec, RoundLabel, SeasonId};

pub type StreamRng = Xoshiro256PlusPlus;

/// The checkpoints of the convergence diagnostic.
pub const DEFAULT_CHECKPOINTS: [u64; 8] = [5_000, 10_000, 20_000, 50_000, 100_000, 200_000, 500_000, 1_000_000];

/// Season weights tilted toward the most recent seasons.
pub const RECENT_WEIGHTS: [f64; 5] = [0.10, 0.15, 0.20, 0.25, 0.30];

#[derive(Debug, Error)]
pub enum McError {
    #[error("iterations must be at least 1")]
    ZeroIterations,
    #[error("partitions must be at least 1")]
    ZeroPartitions,
    #[error("no formats configured")]
    NoFormats,
    #[error("invalid season weights: {0}")]
    Policy(String),
    #[error("policy has {weights} season weights but the dataset has {seasons} seasons")]
    SeasonMismatch { weights: usize, seasons: usize },
    #[error("{0} has no champion profile in any season")]
    NoProfile(String),
    #[error("checkpoints must be strictly ascending")]
    Checkpoints,
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Bracket(#[from] BracketError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPolicy {
    season_weights: Vec<f64>,
}

impl SamplingPolicy {
    pub fn uniform(seasons: usize) -> Self {
        SamplingPolicy { season_weights: vec![1.0 / seasons as f64; seasons] }
    }

    pub fn recent_weighted() -> Self {
        SamplingPolicy { season_weights: RECENT_WEIGHTS.to_vec() }
    }

    /// Weights must be nonnegative and sum to 1 within 1e-12.
    pub fn weighted(weights: Vec<f64>) -> Result<Self, McError> {
        if weights.is_empty() {
            return Err(McError::Policy("no weights".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(McError::Policy(format!("{weights:?} has a negative or non-finite weight")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(McError::Policy(format!("weights sum to {total}, not 1")));
        }
        Ok(SamplingPolicy { season_weights: weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.season_weights
    }

    fn distribution(&self) -> Result<WeightedIndex<f64>, McError> {
        WeightedIndex::new(&self.season_weights).map_err(|e| McError::Policy(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub iterations: u64,
    pub master_seed: u64,
    pub partitions: u32,
    pub scaling: Scaling,
    pub seeding: SeedingMode,
    pub policy: SamplingPolicy,
    pub formats: Vec<FormatSpec>,
    /// Iteration counts at which to record running averages. Empty for none.
    pub checkpoints: Vec<u64>,
}

impl RunConfig {
    /// Both bundled formats, uniform seasons, seeded draws, `s = 400`.
    pub fn baseline(iterations: u64, master_seed: u64) -> Self {
        RunConfig {
            iterations,
            master_seed,
            partitions: 8,
            scaling: Scaling::CLUB_ELO,
            seeding: SeedingMode::Seeded,
            policy: SamplingPolicy::uniform(5),
            formats: vec![FormatSpec::pre_2018(), FormatSpec::post_2018()],
            checkpoints: Vec::new(),
        }
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            iterations: self.iterations,
            master_seed: self.master_seed,
            partitions: self.partitions,
            scaling: self.scaling.value(),
            seeding: self.seeding,
            season_weights: self.policy.weights().to_vec(),
            formats: self.formats.iter().map(|f| f.name.clone()).collect(),
        }
    }

    fn validate(&self, dataset: &Dataset) -> Result<(), McError> {
        if self.iterations == 0 {
            return Err(McError::ZeroIterations);
        }
        if self.partitions == 0 {
            return Err(McError::ZeroPartitions);
        }
        if self.formats.is_empty() {
            return Err(McError::NoFormats);
        }
        if self.policy.weights().len() != dataset.seasons.len() {
            return Err(McError::SeasonMismatch {
                weights: self.policy.weights().len(),
                seasons: dataset.seasons.len(),
            });
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(McError::Checkpoints);
        }
        for format in &self.formats {
            format.validate()?;
        }
        Ok(())
    }
}

/// The settings a tally was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub iterations: u64,
    pub master_seed: u64,
    pub partitions: u32,
    pub scaling: f64,
    pub seeding: SeedingMode,
    pub season_weights: Vec<f64>,
    pub formats: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormatTally {
    pub format: String,
    pub round_labels: Vec<RoundLabel>,
    /// Group-stage qualifications per association.
    pub counts: Vec<u64>,
    /// Appearances per round per association.
    pub reached: Vec<Vec<u64>>,
    pub elo: EloTotals,
    pub matches: u64,
}

impl FormatTally {
    fn empty(format: &FormatSpec, associations: usize) -> Self {
        FormatTally {
            format: format.name.clone(),
            round_labels: format.rounds.iter().map(|r| r.label).collect(),
            counts: vec![0; associations],
            reached: vec![vec![0; associations]; format.rounds.len()],
            elo: EloTotals::default(),
            matches: 0,
        }
    }

    pub fn average_elo(&self) -> f64 {
        self.elo.average_rating()
    }

    fn merge(&mut self, other: &FormatTally) {
        add_into(&mut self.counts, &other.counts);
        for (mine, theirs) in self.reached.iter_mut().zip(&other.reached) {
            add_into(mine, theirs);
        }
        self.elo.add(&other.elo);
        self.matches += other.matches;
    }
}

/// Ratings of qualified teams, summed exactly in millionths of a point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EloTotals {
    /// Each team valued at its association's mean rating over the sample.
    pub rating_micros: u128,
    /// Each team valued at the rating drawn in that iteration.
    pub drawn_micros: u128,
    pub qualified: u64,
}

impl EloTotals {
    fn add(&mut self, other: &EloTotals) {
        self.rating_micros += other.rating_micros;
        self.drawn_micros += other.drawn_micros;
        self.qualified += other.qualified;
    }

    /// Mean of the qualified associations' sample-average ratings.
    pub fn average_rating(&self) -> f64 {
        self.rating_micros as f64 / 1e6 / self.qualified as f64
    }

    /// Mean of the ratings the qualified teams were drawn with.
    pub fn average_drawn(&self) -> f64 {
        self.drawn_micros as f64 / 1e6 / self.qualified as f64
    }
}

fn micros(elo: f64) -> u128 {
    (elo * 1e6).round() as u128
}

fn add_into(into: &mut [u64], from: &[u64]) {
    for (a, b) in into.iter_mut().zip(from) {
        *a += b;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub iterations: u64,
    /// Per format: qualified teams valued at their association's mean rating.
    pub average_elo: Vec<f64>,
    /// Per format: qualified teams valued at their drawn rating.
    pub average_drawn_elo: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualificationTally {
    pub associations: Vec<String>,
    pub runs: u64,
    pub formats: Vec<FormatTally>,
    /// Iterations in which an association qualified under both the first and
    /// the second format. Empty with fewer than two formats.
    pub joint: Vec<u64>,
    pub convergence: Vec<ConvergencePoint>,
    pub summary: Option<RunSummary>,
}

impl QualificationTally {
    pub fn empty(associations: Vec<String>, formats: &[FormatSpec]) -> Self {
        let n = associations.len();
        QualificationTally {
            runs: 0,
            formats: formats.iter().map(|f| FormatTally::empty(f, n)).collect(),
            joint: if formats.len() >= 2 { vec![0; n] } else { Vec::new() },
            associations,
            convergence: Vec::new(),
            summary: None,
        }
    }

    /// Adds `other`'s counts. Convergence series are not merged.
    pub fn merge(&mut self, other: &QualificationTally) {
        self.runs += other.runs;
        for (mine, theirs) in self.formats.iter_mut().zip(&other.formats) {
            mine.merge(theirs);
        }
        add_into(&mut self.joint, &other.joint);
    }

    pub fn format(&self, name: &str) -> Option<&FormatTally> {
        self.formats.iter().find(|f| f.format == name)
    }

    pub fn association_index(&self, name: &str) -> Option<usize> {
        self.associations.iter().position(|a| a == name)
    }
}

/// The generator for partition `partition` of a run seeded with `master_seed`.
pub fn stream_rng(master_seed: u64, partition: u32) -> StreamRng {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(master_seed);
    for _ in 0..partition {
        rng.jump();
    }
    rng
}

pub fn sample_season<R: Rng + ?Sized>(rng: &mut R, policy: &SamplingPolicy) -> Result<SeasonId, McError> {
    Ok(SeasonId(policy.distribution()?.sample(rng) as u8))
}

/// Draws one profile per association, each from a single season cell chosen
/// uniformly among the seasons where the association has a profile.
pub fn sample_profiles<R: Rng + ?Sized>(rng: &mut R, dataset: &Dataset) -> Result<Vec<ChampionProfile>, McError> {
    let cells = profile_cells(dataset)?;
    Ok(cells
        .iter()
        .enumerate()
        .map(|(a, seasons)| {
            let season = seasons[rng.random_range(0..seasons.len())];
            dataset.season(season).profile(AssociationId(a as u16)).expect("cell has a profile")
        })
        .collect())
}

fn profile_cells(dataset: &Dataset) -> Result<Vec<Vec<SeasonId>>, McError> {
    dataset
        .roster
        .ids()
        .map(|id| {
            let seasons = dataset.profile_seasons(id);
            if seasons.is_empty() {
                Err(McError::NoProfile(dataset.roster.name(id).to_string()))
            } else {
                Ok(seasons)
            }
        })
        .collect()
}

/// Outcome matrices over `profiles` (one per competitor) with two-leg and
/// one-leg advance probabilities from their Elo ratings.
pub fn generate_matrices<R: Rng + ?Sized>(
    rng: &mut R,
    profiles: &[ChampionProfile],
    scaling: Scaling,
) -> OutcomeMatrices {
    let mut m = OutcomeMatrices::new(profiles.len());
    m.fill(rng, |i, j| {
        let (a, b) = (profiles[i].elo, profiles[j].elo);
        (win_prob_two_leg(a, b, scaling), win_prob_one_leg(a, b, scaling))
    });
    m
}

struct SeasonSetup {
    entries: Vec<EntryLists>,
    competitors: Vec<AssociationId>,
    competitor_of: Vec<Option<usize>>,
}

/// Everything that is fixed for a run: entry lists per season and the advance
/// probabilities of every pair of (association, profile season) cells.
struct Engine<'a> {
    config: &'a RunConfig,
    dataset: &'a Dataset,
    seasons: WeightedIndex<f64>,
    setups: Vec<SeasonSetup>,
    cells: Vec<Vec<SeasonId>>,
    n_cells: usize,
    probs: Vec<(f64, f64)>,
    mean_elo: Vec<u128>,
}

struct PartitionResult {
    start: u64,
    end: u64,
    tally: QualificationTally,
    /// Running Elo totals per format at checkpoints strictly inside the block.
    partials: Vec<(u64, Vec<EloTotals>)>,
}

impl<'a> Engine<'a> {
    fn new(config: &'a RunConfig, dataset: &'a Dataset) -> Result<Self, McError> {
        config.validate(dataset)?;
        let associations = dataset.roster.len();
        let mut setups = Vec::with_capacity(dataset.seasons.len());
        for season in &dataset.seasons {
            let entries = config.formats.iter().map(|f| build_entry_lists(f, season)).collect::<Result<Vec<_>, _>>()?;
            let mut competing = vec![false; associations];
            for e in &entries {
                for id in e.competitors() {
                    competing[id.index()] = true;
                }
            }
            let competitors: Vec<AssociationId> =
                (0..associations).filter(|&a| competing[a]).map(|a| AssociationId(a as u16)).collect();
            let mut competitor_of = vec![None; associations];
            for (row, id) in competitors.iter().enumerate() {
                competitor_of[id.index()] = Some(row);
            }
            setups.push(SeasonSetup { entries, competitors, competitor_of });
        }

        let cells = profile_cells(dataset)?;
        let seasons_count = dataset.seasons.len();
        let n_cells = associations * seasons_count;
        let cell_elo: Vec<Option<f64>> = (0..n_cells)
            .map(|c| {
                let (a, s) = (c / seasons_count, c % seasons_count);
                dataset.seasons[s].profile(AssociationId(a as u16)).map(|p| p.elo)
            })
            .collect();
        let mut probs = vec![(f64::NAN, f64::NAN); n_cells * n_cells];
        for (i, ei) in cell_elo.iter().enumerate() {
            let Some(ei) = ei else { continue };
            for (j, ej) in cell_elo.iter().enumerate() {
                let Some(ej) = ej else { continue };
                probs[i * n_cells + j] =
                    (win_prob_two_leg(*ei, *ej, config.scaling), win_prob_one_leg(*ei, *ej, config.scaling));
            }
        }

        let mean_elo = dataset.mean_elo().into_iter().map(micros).collect();
        Ok(Engine { config, dataset, seasons: config.policy.distribution()?, setups, cells, n_cells, probs, mean_elo })
    }

    fn block(&self, partition: u32) -> (u64, u64) {
        let n = u128::from(self.config.iterations);
        let p = u128::from(self.config.partitions);
        let at = |k: u128| (n * k / p) as u64;
        (at(u128::from(partition)), at(u128::from(partition) + 1))
    }

    fn run_partition(&self, partition: u32) -> Result<PartitionResult, McError> {
        let (start, end) = self.block(partition);
        let mut rng = stream_rng(self.config.master_seed, partition);
        let dataset = self.dataset;
        let n_assoc = dataset.roster.len();
        let seasons_count = dataset.seasons.len();
        let formats = &self.config.formats;

        let mut tally = QualificationTally::empty(dataset.roster.names().to_vec(), formats);
        let mut partials = Vec::new();
        let checkpoints: Vec<u64> = self.config.checkpoints.iter().copied().filter(|&c| c > start && c < end).collect();
        let mut next_checkpoint = checkpoints.iter().peekable();

        let mut cell_of = vec![0usize; n_assoc];
        let mut profiles = vec![ChampionProfile { coefficient: Default::default(), elo: 0.0 }; n_assoc];
        let mut matrices = OutcomeMatrices::new(0);
        let mut in_first = vec![false; n_assoc];

        for iteration in start..end {
            let season = self.seasons.sample(&mut rng);
            let setup = &self.setups[season];

            for (a, seasons) in self.cells.iter().enumerate() {
                let s = seasons[rng.random_range(0..seasons.len())];
                cell_of[a] = a * seasons_count + s.index();
                profiles[a] = dataset.season(s).profile(AssociationId(a as u16)).expect("cell has a profile");
            }

            if matrices.size() != setup.competitors.len() {
                matrices = OutcomeMatrices::new(setup.competitors.len());
            }
            let comps = &setup.competitors;
            matrices.fill(&mut rng, |i, j| {
                self.probs[cell_of[comps[i].index()] * self.n_cells + cell_of[comps[j].index()]]
            });

            let field = Field { profiles: &profiles, competitor_of: &setup.competitor_of };
            for (f, (format, entries)) in formats.iter().zip(&setup.entries).enumerate() {
                let outcome = run_format(format, entries, field, &matrices, self.config.seeding, &mut rng)?;
                let ft = &mut tally.formats[f];
                for id in &outcome.qualified {
                    ft.counts[id.index()] += 1;
                    ft.elo.rating_micros += self.mean_elo[id.index()];
                    ft.elo.drawn_micros += micros(profiles[id.index()].elo);
                    if f == 0 && !tally.joint.is_empty() {
                        in_first[id.index()] = true;
                    }
                    if f == 1 && in_first[id.index()] {
                        tally.joint[id.index()] += 1;
                    }
                }
                ft.elo.qualified += outcome.qualified.len() as u64;
                ft.matches += outcome.matches as u64;
                for (round, id) in outcome.reached {
                    ft.reached[round][id.index()] += 1;
                }
            }
            in_first.iter_mut().for_each(|x| *x = false);
            tally.runs += 1;

            if next_checkpoint.peek().is_some_and(|&&c| c == iteration + 1) {
                let c = *next_checkpoint.next().expect("peeked");
                partials.push((c, tally.formats.iter().map(|f| f.elo).collect()));
            }
        }
        Ok(PartitionResult { start, end, tally, partials })
    }

    fn merge(&self, mut parts: Vec<PartitionResult>) -> QualificationTally {
        parts.sort_by_key(|p| p.start);
        let mut total = QualificationTally::empty(self.dataset.roster.names().to_vec(), &self.config.formats);
        for p in &parts {
            total.merge(&p.tally);
        }
        let nf = self.config.formats.len();
        for &c in self.config.checkpoints.iter().filter(|&&c| c <= self.config.iterations) {
            let mut sums = vec![EloTotals::default(); nf];
            for p in &parts {
                let contribution: Vec<EloTotals> = if p.end <= c {
                    p.tally.formats.iter().map(|f| f.elo).collect()
                } else if p.start < c {
                    p.partials.iter().find(|(cp, _)| *cp == c).expect("checkpoint recorded").1.clone()
                } else {
                    continue;
                };
                for (s, e) in sums.iter_mut().zip(&contribution) {
                    s.add(e);
                }
            }
            total.convergence.push(ConvergencePoint {
                iterations: c,
                average_elo: sums.iter().map(EloTotals::average_rating).collect(),
                average_drawn_elo: sums.iter().map(EloTotals::average_drawn).collect(),
            });
        }
        total.summary = Some(self.config.summary());
        total
    }
}

/// Runs every partition on the calling thread.
pub fn run_sequential(config: &RunConfig, dataset: &Dataset) -> Result<QualificationTally, McError> {
    let engine = Engine::new(config, dataset)?;
    let parts = (0..config.partitions).map(|p| engine.run_partition(p)).collect::<Result<Vec<_>, _>>()?;
    Ok(engine.merge(parts))
}

/// Runs partitions on the rayon pool. Same result as [`run_sequential`].
#[cfg(feature = "parallel")]
pub fn run_parallel(config: &RunConfig, dataset: &Dataset) -> Result<QualificationTally, McError> {
    use rayon::prelude::*;
    let engine = Engine::new(config, dataset)?;
    let parts =
        (0..config.partitions).into_par_iter().map(|p| engine.run_partition(p)).collect::<Result<Vec<_>, _>>()?;
    Ok(engine.merge(parts))
}

/// Runs the configured experiment, in parallel when the `parallel` feature is on.
pub fn run(config: &RunConfig, dataset: &Dataset) -> Result<QualificationTally, McError> {
    #[cfg(feature = "parallel")]
    {
        run_parallel(config, dataset)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_sequential(config, dataset)
    }
}

/// Running averages of the qualified teams' ratings at each checkpoint. The run
/// length is the last checkpoint.
pub fn convergence_series(
    config: &RunConfig,
    dataset: &Dataset,
    checkpoints: &[u64],
) -> Result<Vec<ConvergencePoint>, McError> {
    let mut config = config.clone();
    config.iterations = checkpoints.last().copied().unwrap_or(0);
    config.checkpoints = checkpoints.to_vec();
    Ok(run(&config, dataset)?.convergence)
}
