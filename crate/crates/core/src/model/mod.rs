//! Domain types shared by every other module. No I/O, no randomness.

mod coefficient;
mod format;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use coefficient::{Coefficient, ParseCoefficientError};
pub use format::{FormatError, FormatSpec, RankRange, RoundLabel, RoundSpec, RoundStructure, TieKind};

/// Champion-sending associations of the shipped dataset, in the order of the
/// 2019/20 access list. Liechtenstein has no domestic league and is absent.
pub const CANONICAL_ASSOCIATIONS: [&str; 45] = [
    "Turkey",
    "Austria",
    "Switzerland",
    "Czech Republic",
    "Netherlands",
    "Greece",
    "Croatia",
    "Denmark",
    "Israel",
    "Cyprus",
    "Romania",
    "Poland",
    "Sweden",
    "Azerbaijan",
    "Bulgaria",
    "Serbia",
    "Scotland",
    "Belarus",
    "Kazakhstan",
    "Norway",
    "Slovenia",
    "Slovakia",
    "Moldova",
    "Albania",
    "Iceland",
    "Hungary",
    "FYR Macedonia",
    "Finland",
    "Republic of Ireland",
    "Bosnia and Herzegovina",
    "Latvia",
    "Estonia",
    "Lithuania",
    "Montenegro",
    "Georgia",
    "Armenia",
    "Malta",
    "Luxembourg",
    "Northern Ireland",
    "Wales",
    "Faroe Islands",
    "Gibraltar",
    "Andorra",
    "San Marino",
    "Kosovo",
];

pub const CANONICAL_SEASONS: [&str; 5] = ["2015/16", "2016/17", "2017/18", "2018/19", "2019/20"];

/// Holds a rank on the access list but never enters a champion.
pub const NON_PARTICIPANT: &str = "Liechtenstein";

/// Joined in 2017/18; earlier seasons rank it last and carry no profile.
pub const LATE_ENTRANT: &str = "Kosovo";
pub const LATE_ENTRANT_PLACEHOLDER_RANK: u8 = 55;
pub const MAX_RANK: u8 = 55;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AssociationId(pub u16);

impl AssociationId {
    pub fn index(self) -> usize {
        usize::from(self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SeasonId(pub u8);

impl SeasonId {
    pub fn index(self) -> usize {
        usize::from(self.0)
    }
}

/// Ordered association names; the position of a name is its [`AssociationId`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roster {
    names: Vec<String>,
    by_name: HashMap<String, AssociationId>,
}

impl Roster {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut roster = Roster { names: Vec::new(), by_name: HashMap::new() };
        for name in names {
            roster.insert(name.into());
        }
        roster
    }

    pub fn canonical() -> Self {
        Roster::new(CANONICAL_ASSOCIATIONS)
    }

    /// Adds `name` if unseen and returns its id either way.
    pub fn insert(&mut self, name: String) -> AssociationId {
        if let Some(&id) = self.by_name.get(&name) {
            return id;
        }
        let id = AssociationId(self.names.len() as u16);
        self.by_name.insert(name.clone(), id);
        self.names.push(name);
        id
    }

    pub fn id(&self, name: &str) -> Option<AssociationId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: AssociationId) -> &str {
        &self.names[id.index()]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = AssociationId> {
        (0..self.names.len() as u16).map(AssociationId)
    }
}

/// One association-season cell: the champion's club coefficient and its
/// Club Elo rating on 1 September. The two always come from the same cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChampionProfile {
    pub coefficient: Coefficient,
    pub elo: f64,
}

/// Access-list ranks and champion profiles of one season, indexed by
/// [`AssociationId`].
#[derive(Debug, Clone, PartialEq)]
pub struct SeasonTable {
    pub label: String,
    pub ranks: Vec<Option<u8>>,
    pub profiles: Vec<Option<ChampionProfile>>,
    /// Associations that hold a rank but send no champion.
    pub non_participants: Vec<(String, u8)>,
}

impl SeasonTable {
    pub fn empty(label: impl Into<String>, associations: usize) -> Self {
        SeasonTable {
            label: label.into(),
            ranks: vec![None; associations],
            profiles: vec![None; associations],
            non_participants: Vec::new(),
        }
    }

    pub fn rank(&self, id: AssociationId) -> Option<u8> {
        self.ranks.get(id.index()).copied().flatten()
    }

    pub fn profile(&self, id: AssociationId) -> Option<ChampionProfile> {
        self.profiles.get(id.index()).copied().flatten()
    }

    /// Whether the association fielded a champion this season.
    pub fn is_present(&self, id: AssociationId) -> bool {
        self.profile(id).is_some()
    }
}

/// Every season of the sample over a common roster.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub roster: Roster,
    pub seasons: Vec<SeasonTable>,
}

impl Dataset {
    pub fn season_index(&self, label: &str) -> Option<SeasonId> {
        self.seasons.iter().position(|s| s.label == label).map(|i| SeasonId(i as u8))
    }

    pub fn season(&self, id: SeasonId) -> &SeasonTable {
        &self.seasons[id.index()]
    }

    /// Seasons in which the association has a champion profile.
    pub fn profile_seasons(&self, id: AssociationId) -> Vec<SeasonId> {
        self.seasons.iter().enumerate().filter(|(_, s)| s.is_present(id)).map(|(i, _)| SeasonId(i as u8)).collect()
    }

    /// Per-association mean Elo across the seasons with a profile.
    pub fn mean_elo(&self) -> Vec<f64> {
        self.roster
            .ids()
            .map(|id| {
                let elos: Vec<f64> = self.seasons.iter().filter_map(|s| s.profile(id)).map(|p| p.elo).collect();
                if elos.is_empty() {
                    f64::NAN
                } else {
                    elos.iter().sum::<f64>() / elos.len() as f64
                }
            })
            .collect()
    }
}

/// A team's place in one round of a bracket.
///
/// `draw_coefficient` is what the round's pot assignment sees. It equals the
/// team's own coefficient except in the round right after the team knocked
/// out a higher-rated opponent, where it is that opponent's coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slot {
    pub occupant: AssociationId,
    /// Row of the occupant in the iteration's outcome matrices.
    pub competitor: usize,
    pub real_coefficient: Coefficient,
    pub draw_coefficient: Coefficient,
    pub elo: f64,
}

impl Slot {
    pub fn entering(occupant: AssociationId, competitor: usize, profile: ChampionProfile) -> Self {
        Slot {
            occupant,
            competitor,
            real_coefficient: profile.coefficient,
            draw_coefficient: profile.coefficient,
            elo: profile.elo,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    SeasonCount { expected: usize, found: usize },
    UnexpectedSeason { label: String },
    MissingAssociation { association: String, season: String },
    UnknownAssociation { association: String },
    DuplicateRank { season: String, rank: u8, associations: Vec<String> },
    RankOutOfRange { association: String, season: String, rank: u8 },
    MissingProfile { association: String, season: String },
    NonPositiveElo { association: String, season: String, elo: f64 },
    NegativeCoefficient { association: String, season: String },
    KosovoPresence { season: String, present: bool },
    KosovoRank { season: String, rank: u8 },
    NonParticipantMissing { season: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SeasonCount { expected, found } => {
                write!(f, "season count: expected {expected}, found {found}")
            }
            Violation::UnexpectedSeason { label } => write!(f, "unexpected season {label}"),
            Violation::MissingAssociation { association, season } => {
                write!(f, "missing association: {association} in {season}")
            }
            Violation::UnknownAssociation { association } => {
                write!(f, "unknown association: {association}")
            }
            Violation::DuplicateRank { season, rank, associations } => {
                write!(f, "duplicate rank {rank} in {season}: {}", associations.join(", "))
            }
            Violation::RankOutOfRange { association, season, rank } => {
                write!(f, "rank out of range: {association} {season} has rank {rank}")
            }
            Violation::MissingProfile { association, season } => {
                write!(f, "missing profile: {association} in {season}")
            }
            Violation::NonPositiveElo { association, season, elo } => {
                write!(f, "non-positive Elo: {association} {season} has {elo}")
            }
            Violation::NegativeCoefficient { association, season } => {
                write!(f, "negative coefficient: {association} in {season}")
            }
            Violation::KosovoPresence { season, present } => {
                let state = if *present { "present" } else { "absent" };
                write!(f, "Kosovo presence: champion {state} in {season}")
            }
            Violation::KosovoRank { season, rank } => {
                write!(f, "Kosovo rank: expected {LATE_ENTRANT_PLACEHOLDER_RANK} in {season}, found {rank}")
            }
            Violation::NonParticipantMissing { season } => {
                write!(f, "{NON_PARTICIPANT} rank not recorded in {season}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks a dataset against the shape of the shipped five-season sample:
/// the 45 champion-sending associations, distinct ranks per season, Elo
/// ratings above zero, and Kosovo profiles only from 2017/18 on.
pub fn validate_dataset(dataset: &Dataset) -> ValidationReport {
    let mut violations = Vec::new();
    let roster = &dataset.roster;

    if dataset.seasons.len() != CANONICAL_SEASONS.len() {
        violations.push(Violation::SeasonCount { expected: CANONICAL_SEASONS.len(), found: dataset.seasons.len() });
    }
    for season in &dataset.seasons {
        if !CANONICAL_SEASONS.contains(&season.label.as_str()) {
            violations.push(Violation::UnexpectedSeason { label: season.label.clone() });
        }
    }
    for name in roster.names() {
        if !CANONICAL_ASSOCIATIONS.contains(&name.as_str()) {
            violations.push(Violation::UnknownAssociation { association: name.clone() });
        }
    }

    for season in &dataset.seasons {
        let late_entrant_expected = season_index_of(&season.label).is_some_and(|i| i >= 2);
        let mut by_rank: HashMap<u8, Vec<String>> = HashMap::new();

        for expected in CANONICAL_ASSOCIATIONS {
            let id = match roster.id(expected) {
                Some(id) => id,
                None => {
                    violations.push(Violation::MissingAssociation {
                        association: expected.to_string(),
                        season: season.label.clone(),
                    });
                    continue;
                }
            };
            let Some(rank) = season.rank(id) else {
                violations.push(Violation::MissingAssociation {
                    association: expected.to_string(),
                    season: season.label.clone(),
                });
                continue;
            };
            if rank == 0 || rank > MAX_RANK {
                violations.push(Violation::RankOutOfRange {
                    association: expected.to_string(),
                    season: season.label.clone(),
                    rank,
                });
            }
            by_rank.entry(rank).or_default().push(expected.to_string());

            let profile = season.profile(id);
            if expected == LATE_ENTRANT {
                if profile.is_some() != late_entrant_expected {
                    violations
                        .push(Violation::KosovoPresence { season: season.label.clone(), present: profile.is_some() });
                }
                if profile.is_none() && rank != LATE_ENTRANT_PLACEHOLDER_RANK {
                    violations.push(Violation::KosovoRank { season: season.label.clone(), rank });
                }
            } else if profile.is_none() {
                violations.push(Violation::MissingProfile {
                    association: expected.to_string(),
                    season: season.label.clone(),
                });
            }
            if let Some(p) = profile {
                if p.elo.is_nan() || p.elo <= 0.0 {
                    violations.push(Violation::NonPositiveElo {
                        association: expected.to_string(),
                        season: season.label.clone(),
                        elo: p.elo,
                    });
                }
                if p.coefficient.is_negative() {
                    violations.push(Violation::NegativeCoefficient {
                        association: expected.to_string(),
                        season: season.label.clone(),
                    });
                }
            }
        }

        match season.non_participants.iter().find(|(name, _)| name == NON_PARTICIPANT) {
            Some((name, rank)) => by_rank.entry(*rank).or_default().push(name.clone()),
            None => violations.push(Violation::NonParticipantMissing { season: season.label.clone() }),
        }

        let mut duplicates: Vec<_> = by_rank.into_iter().filter(|(_, names)| names.len() > 1).collect();
        duplicates.sort_by_key(|(rank, _)| *rank);
        for (rank, associations) in duplicates {
            violations.push(Violation::DuplicateRank { season: season.label.clone(), rank, associations });
        }
    }

    ValidationReport { violations }
}

fn season_index_of(label: &str) -> Option<usize> {
    CANONICAL_SEASONS.iter().position(|s| *s == label)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roster_is_a_bijection() {
        let roster = Roster::canonical();
        assert_eq!(roster.len(), 45);
        for (i, name) in CANONICAL_ASSOCIATIONS.iter().enumerate() {
            assert_eq!(roster.id(name), Some(AssociationId(i as u16)));
            assert_eq!(roster.name(AssociationId(i as u16)), *name);
        }
        assert_eq!(roster.id(NON_PARTICIPANT), None);
    }

    #[test]
    fn insert_is_idempotent() {
        let mut roster = Roster::new(["A", "B"]);
        assert_eq!(roster.insert("A".into()), AssociationId(0));
        assert_eq!(roster.insert("C".into()), AssociationId(2));
        assert_eq!(roster.len(), 3);
    }

    #[test]
    fn empty_dataset_reports_season_count() {
        let ds = Dataset { roster: Roster::canonical(), seasons: vec![] };
        let report = validate_dataset(&ds);
        assert!(matches!(report.violations[0], Violation::SeasonCount { expected: 5, found: 0 }));
    }
}
