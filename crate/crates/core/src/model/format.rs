//! Declarative qualifying formats.
//!
//! A format is data: the access-list band that enters the group stage
//! directly, followed by the qualifying rounds in playing order. Each round
//! names the band of access-list ranks whose champions enter there, how its
//! ties are played, and how many of the band's ranks are held by
//! non-participating associations (the "except Liechtenstein" clause).

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const PRE_2018: &str = include_str!("../../../../data/formats/pre2018.toml");
const POST_2018: &str = include_str!("../../../../data/formats/post2018.toml");

/// Inclusive band of access-list ranks, written `[first, last]` in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[u8; 2]", into = "[u8; 2]")]
pub struct RankRange {
    first: u8,
    last: u8,
}

impl RankRange {
    pub fn new(first: u8, last: u8) -> Result<Self, FormatError> {
        if first == 0 || first > last {
            return Err(FormatError::BadRange(first, last));
        }
        Ok(RankRange { first, last })
    }

    pub fn first(self) -> u8 {
        self.first
    }

    pub fn last(self) -> u8 {
        self.last
    }

    pub fn len(self) -> usize {
        usize::from(self.last - self.first) + 1
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn contains(self, rank: u8) -> bool {
        (self.first..=self.last).contains(&rank)
    }

    fn overlaps(self, other: RankRange) -> bool {
        self.first <= other.last && other.first <= self.last
    }
}

impl TryFrom<[u8; 2]> for RankRange {
    type Error = FormatError;

    fn try_from(value: [u8; 2]) -> Result<Self, Self::Error> {
        RankRange::new(value[0], value[1])
    }
}

impl From<RankRange> for [u8; 2] {
    fn from(r: RankRange) -> Self {
        [r.first, r.last]
    }
}

impl fmt::Display for RankRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.first, self.last)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RoundLabel {
    PR,
    Q1,
    Q2,
    Q3,
    PO,
}

impl fmt::Display for RoundLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RoundLabel::PR => "PR",
            RoundLabel::Q1 => "Q1",
            RoundLabel::Q2 => "Q2",
            RoundLabel::Q3 => "Q3",
            RoundLabel::PO => "PO",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieKind {
    OneLeg,
    TwoLeg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundStructure {
    /// Seeded-versus-unseeded ties, half the field advances.
    #[default]
    PairwiseTies,
    /// Four teams, two semi-finals and a final; one team advances.
    MiniKnockout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundSpec {
    pub label: RoundLabel,
    /// Access-list band entering at this round; `None` when the round is
    /// fed only by winners of the previous one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry: Option<RankRange>,
    /// Ranks in `entry` that belong to non-participating associations.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub vacancies: u8,
    pub tie: TieKind,
    #[serde(default)]
    pub structure: RoundStructure,
    /// The draw is made after the previous round has been played, so its
    /// winners are seeded on their own coefficients instead of carrying over
    /// the higher coefficient of their tie.
    #[serde(default, skip_serializing_if = "is_false")]
    pub winners_known: bool,
}

fn is_false(v: &bool) -> bool {
    !*v
}

fn is_zero(v: &u8) -> bool {
    *v == 0
}

impl RoundSpec {
    /// Number of champions entering at this round.
    pub fn entrant_count(&self) -> usize {
        self.entry.map(|r| r.len().saturating_sub(usize::from(self.vacancies))).unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormatSpec {
    pub name: String,
    pub direct: RankRange,
    pub rounds: Vec<RoundSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("invalid rank range {0}-{1}")]
    BadRange(u8, u8),
    #[error("format has no qualifying rounds")]
    NoRounds,
    #[error("round {0} has an odd number of teams ({1})")]
    OddRound(RoundLabel, usize),
    #[error("round {0}: a mini-knockout must be the first round, one-leg, with exactly 4 teams")]
    BadMiniKnockout(RoundLabel),
    #[error("round {0}: only a preliminary mini-knockout may be one-leg")]
    OneLegOutsidePreliminary(RoundLabel),
    #[error("round {0} has more vacancies than ranks")]
    TooManyVacancies(RoundLabel),
    #[error("rank bands {0} and {1} overlap")]
    Overlap(RankRange, RankRange),
    #[error("rank bands leave a gap before rank {0}")]
    Gap(u8),
    #[error("rank bands must start at rank 1")]
    DoesNotStartAtOne,
    #[error("round {0} has no teams")]
    EmptyRound(RoundLabel),
    #[error("cannot parse format: {0}")]
    Parse(String),
    #[error("cannot read format file {path}: {message}")]
    Io { path: String, message: String },
}

impl FormatSpec {
    /// The 2015–18 access list (five champions reach the group stage via PO).
    pub fn pre_2018() -> FormatSpec {
        PRE_2018.parse().expect("bundled pre-2018 format is valid")
    }

    /// The 2018–21 access list, with the four-team preliminary round.
    pub fn post_2018() -> FormatSpec {
        POST_2018.parse().expect("bundled post-2018 format is valid")
    }

    /// Resolves a bundled format by name (`pre-2018`, `post-2018`).
    pub fn builtin(name: &str) -> Option<FormatSpec> {
        match name {
            "pre-2018" => Some(Self::pre_2018()),
            "post-2018" => Some(Self::post_2018()),
            _ => None,
        }
    }

    pub fn from_path(path: &Path) -> Result<FormatSpec, FormatError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FormatError::Io { path: path.display().to_string(), message: e.to_string() })?;
        text.parse()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("format specs always serialize")
    }

    /// Team count of every round, in playing order.
    pub fn round_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.rounds.len());
        let mut carried = 0;
        for round in &self.rounds {
            let size = round.entrant_count() + carried;
            sizes.push(size);
            carried = match round.structure {
                RoundStructure::PairwiseTies => size / 2,
                RoundStructure::MiniKnockout => 1,
            };
        }
        sizes
    }

    /// Winners of the final round, i.e. group-stage places earned by playing.
    pub fn qualifying_places(&self) -> usize {
        match (self.rounds.last(), self.round_sizes().last()) {
            (Some(round), Some(&size)) => match round.structure {
                RoundStructure::PairwiseTies => size / 2,
                RoundStructure::MiniKnockout => 1,
            },
            _ => 0,
        }
    }

    pub fn group_stage_size(&self) -> usize {
        self.direct.len() + self.qualifying_places()
    }

    /// Matches decided per bracket: one per two-team tie, three per mini-knockout.
    pub fn ties_per_bracket(&self) -> usize {
        self.rounds
            .iter()
            .zip(self.round_sizes())
            .map(|(round, size)| match round.structure {
                RoundStructure::PairwiseTies => size / 2,
                RoundStructure::MiniKnockout => 3,
            })
            .sum()
    }

    /// All rank bands sorted by first rank: the direct band plus every
    /// round with entrants, with the round index (`None` for direct entry).
    pub fn bands(&self) -> Vec<(Option<usize>, RankRange, u8)> {
        let mut bands: Vec<_> = std::iter::once((None, self.direct, 0))
            .chain(self.rounds.iter().enumerate().filter_map(|(i, r)| r.entry.map(|e| (Some(i), e, r.vacancies))))
            .collect();
        bands.sort_by_key(|(_, range, _)| range.first());
        bands
    }

    pub fn validate(&self) -> Result<(), FormatError> {
        if self.rounds.is_empty() {
            return Err(FormatError::NoRounds);
        }
        for (i, round) in self.rounds.iter().enumerate() {
            if let Some(entry) = round.entry {
                if usize::from(round.vacancies) >= entry.len() {
                    return Err(FormatError::TooManyVacancies(round.label));
                }
            }
            match round.structure {
                RoundStructure::MiniKnockout => {
                    if i != 0 || round.tie != TieKind::OneLeg || round.entrant_count() != 4 {
                        return Err(FormatError::BadMiniKnockout(round.label));
                    }
                }
                RoundStructure::PairwiseTies => {
                    if round.tie == TieKind::OneLeg {
                        return Err(FormatError::OneLegOutsidePreliminary(round.label));
                    }
                }
            }
        }
        for (round, size) in self.rounds.iter().zip(self.round_sizes()) {
            if size == 0 {
                return Err(FormatError::EmptyRound(round.label));
            }
            if round.structure == RoundStructure::PairwiseTies && size % 2 != 0 {
                return Err(FormatError::OddRound(round.label, size));
            }
        }
        let bands = self.bands();
        if bands[0].1.first() != 1 {
            return Err(FormatError::DoesNotStartAtOne);
        }
        for pair in bands.windows(2) {
            let (a, b) = (pair[0].1, pair[1].1);
            if a.overlaps(b) {
                return Err(FormatError::Overlap(a, b));
            }
            if a.last() + 1 != b.first() {
                return Err(FormatError::Gap(b.first()));
            }
        }
        Ok(())
    }
}

impl FromStr for FormatSpec {
    type Err = FormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let spec: FormatSpec = toml::from_str(s).map_err(|e| FormatError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}
