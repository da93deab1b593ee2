//! One simulated qualifying bracket.
//!
//! Entry lists come from a season's access-list ranks. Every round splits its
//! teams into a seeded and an unseeded pot by draw coefficient and pairs them
//! uniformly at random; outcomes are read from pre-drawn [`OutcomeMatrices`].
//! A winner takes the higher of the two real coefficients of its tie into the
//! next draw only, unless that draw is made with the results already known.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    AssociationId, ChampionProfile, FormatSpec, RoundLabel, RoundStructure, SeasonTable, Slot, TieKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedingMode {
    /// Top half by draw coefficient is seeded.
    #[default]
    Seeded,
    /// Pots are a uniformly random bipartition.
    UnseededRandom,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BracketError {
    #[error("{season}: access position {position} (rank {rank}) of association #{association} is not covered by format {format}")]
    Coverage { format: String, season: String, association: u16, rank: u8, position: u8 },
    #[error("{season}: round {label} of {format} expects {expected} entrants, found {found}")]
    RoundSize { format: String, season: String, label: String, expected: usize, found: usize },
    #[error("cannot split {0} slots into two equal pots")]
    OddSlots(usize),
    #[error("pots have different sizes ({0} and {1})")]
    UnequalPots(usize, usize),
    #[error("preliminary round needs 4 entrants, got {0}")]
    PreliminarySize(usize),
    #[error("association #{0} has no champion profile")]
    MissingProfile(u16),
}

/// Who enters where for one format in one season.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryLists {
    pub direct: Vec<AssociationId>,
    /// Parallel to the format's rounds.
    pub rounds: Vec<Vec<AssociationId>>,
}

impl EntryLists {
    /// Associations that play at least one qualifying match.
    pub fn competitors(&self) -> impl Iterator<Item = AssociationId> + '_ {
        self.rounds.iter().flatten().copied()
    }
}

/// Assigns every participating association of `season` to direct entry or
/// to the round where it enters.
///
/// Ranks held by non-participants are skipped: the champions below the direct
/// band fill the qualifying rounds in rank order, each round taking exactly
/// its declared entrant count. When the non-participant sits inside the band
/// that declares the vacancy this is the plain rank-interval rule.
pub fn build_entry_lists(format: &FormatSpec, season: &SeasonTable) -> Result<EntryLists, BracketError> {
    let mut held: Vec<u8> = season.non_participants.iter().map(|(_, r)| *r).collect();
    held.sort_unstable();

    let mut compacted = Vec::new();
    let mut cursor: u16 = 1;
    for (round, range, vacancies) in format.bands() {
        let size = (range.len() - usize::from(vacancies)) as u16;
        compacted.push((round, cursor, cursor + size - 1));
        cursor += size;
    }

    let mut lists = EntryLists { direct: Vec::new(), rounds: vec![Vec::new(); format.rounds.len()] };
    for (index, rank) in season.ranks.iter().enumerate() {
        let Some(rank) = *rank else { continue };
        let id = AssociationId(index as u16);
        let position = u16::from(rank) - held.iter().filter(|&&h| h < rank).count() as u16;
        let band = compacted.iter().find(|(_, lo, hi)| (*lo..=*hi).contains(&position));
        match band {
            Some((None, _, _)) => lists.direct.push(id),
            Some((Some(round), _, _)) => lists.rounds[*round].push(id),
            None => {
                return Err(BracketError::Coverage {
                    format: format.name.clone(),
                    season: season.label.clone(),
                    association: id.0,
                    rank,
                    position: position as u8,
                })
            }
        }
    }

    let size_error = |label: String, expected: usize, found: usize| BracketError::RoundSize {
        format: format.name.clone(),
        season: season.label.clone(),
        label,
        expected,
        found,
    };
    if lists.direct.len() > format.direct.len() {
        return Err(size_error("direct".into(), format.direct.len(), lists.direct.len()));
    }
    for (round, entrants) in format.rounds.iter().zip(&lists.rounds) {
        if entrants.len() != round.entrant_count() {
            return Err(size_error(round.label.to_string(), round.entrant_count(), entrants.len()));
        }
    }
    Ok(lists)
}

/// Binary advance decisions for every ordered pair of competitors, one
/// matrix per tie kind. Entry `[i][j]` is set when `i` beats `j`; only the
/// upper triangle is drawn and the lower one is its complement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeMatrices {
    n: usize,
    two_leg: Vec<bool>,
    one_leg: Vec<bool>,
}

impl OutcomeMatrices {
    pub fn new(n: usize) -> Self {
        OutcomeMatrices { n, two_leg: vec![false; n * n], one_leg: vec![false; n * n] }
    }

    /// Builds matrices from a rule for `i < j`; the rest follows by anti-symmetry.
    pub fn from_upper(n: usize, mut upper: impl FnMut(TieKind, usize, usize) -> bool) -> Self {
        let mut m = OutcomeMatrices::new(n);
        for i in 0..n {
            for j in i + 1..n {
                m.set(TieKind::TwoLeg, i, j, upper(TieKind::TwoLeg, i, j));
                m.set(TieKind::OneLeg, i, j, upper(TieKind::OneLeg, i, j));
            }
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Redraws every pair. For each `i < j` in row-major order, one uniform
    /// is consumed for the two-leg entry and then one for the one-leg entry;
    /// `probs(i, j)` returns `i`'s (two-leg, one-leg) advance probabilities.
    pub fn fill<R: Rng + ?Sized>(&mut self, rng: &mut R, mut probs: impl FnMut(usize, usize) -> (f64, f64)) {
        for i in 0..self.n {
            for j in i + 1..self.n {
                let (p_two, p_one) = probs(i, j);
                let two = rng.random::<f64>() < p_two;
                let one = rng.random::<f64>() < p_one;
                self.set(TieKind::TwoLeg, i, j, two);
                self.set(TieKind::OneLeg, i, j, one);
            }
        }
    }

    fn set(&mut self, kind: TieKind, i: usize, j: usize, i_wins: bool) {
        let n = self.n;
        let m = match kind {
            TieKind::TwoLeg => &mut self.two_leg,
            TieKind::OneLeg => &mut self.one_leg,
        };
        m[i * n + j] = i_wins;
        m[j * n + i] = !i_wins;
    }

    /// Whether competitor `i` advances against `j`. Meaningless for `i == j`.
    pub fn advances(&self, kind: TieKind, i: usize, j: usize) -> bool {
        match kind {
            TieKind::TwoLeg => self.two_leg[i * self.n + j],
            TieKind::OneLeg => self.one_leg[i * self.n + j],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pots {
    pub seeded: Vec<Slot>,
    pub unseeded: Vec<Slot>,
}

/// Stronger claim to a seeded place first: draw coefficient, then Elo, then
/// lower association index.
fn seeding_order(a: &Slot, b: &Slot) -> Ordering {
    b.draw_coefficient
        .cmp(&a.draw_coefficient)
        .then_with(|| b.elo.total_cmp(&a.elo))
        .then_with(|| a.occupant.cmp(&b.occupant))
}

pub fn assign_pots<R: Rng + ?Sized>(
    mut slots: Vec<Slot>,
    mode: SeedingMode,
    rng: &mut R,
) -> Result<Pots, BracketError> {
    if !slots.len().is_multiple_of(2) {
        return Err(BracketError::OddSlots(slots.len()));
    }
    match mode {
        SeedingMode::Seeded => slots.sort_by(seeding_order),
        SeedingMode::UnseededRandom => slots.shuffle(rng),
    }
    let unseeded = slots.split_off(slots.len() / 2);
    Ok(Pots { seeded: slots, unseeded })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tie {
    pub round: RoundLabel,
    /// From the seeded pot.
    pub seeded: Slot,
    pub unseeded: Slot,
}

/// Pairs the pots by a uniformly random perfect matching.
pub fn draw_round<R: Rng + ?Sized>(pots: Pots, round: RoundLabel, rng: &mut R) -> Result<Vec<Tie>, BracketError> {
    let Pots { seeded, mut unseeded } = pots;
    if seeded.len() != unseeded.len() {
        return Err(BracketError::UnequalPots(seeded.len(), unseeded.len()));
    }
    unseeded.shuffle(rng);
    Ok(seeded.into_iter().zip(unseeded).map(|(seeded, unseeded)| Tie { round, seeded, unseeded }).collect())
}

fn carry_over(winner: Slot, loser: &Slot) -> Slot {
    Slot { draw_coefficient: winner.real_coefficient.max(loser.real_coefficient), ..winner }
}

/// Decides a tie from the matrices. The returned winner's draw coefficient is
/// the larger real coefficient of the two participants.
pub fn resolve_tie(tie: &Tie, kind: TieKind, matrices: &OutcomeMatrices) -> Slot {
    let (a, b) = (&tie.seeded, &tie.unseeded);
    if matrices.advances(kind, a.competitor, b.competitor) {
        carry_over(*a, b)
    } else {
        carry_over(*b, a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preliminary {
    pub winner: Slot,
    /// Host of the final, drawn among the four clubs. Has no bearing on the
    /// result since one-leg probabilities carry no home term.
    pub host: AssociationId,
}

/// Four-team mini-knockout: two one-leg semi-finals drawn from pots, then a
/// one-leg final. The winner's Q1 draw coefficient is the largest real
/// coefficient among itself and the two teams it eliminated.
pub fn play_preliminary<R: Rng + ?Sized>(
    entrants: Vec<Slot>,
    mode: SeedingMode,
    matrices: &OutcomeMatrices,
    rng: &mut R,
) -> Result<Preliminary, BracketError> {
    if entrants.len() != 4 {
        return Err(BracketError::PreliminarySize(entrants.len()));
    }
    let host = entrants[rng.random_range(0..4)].occupant;
    let semis = draw_round(assign_pots(entrants, mode, rng)?, RoundLabel::PR, rng)?;
    let decide = |a: &Slot, b: &Slot| -> (Slot, Slot) {
        if matrices.advances(TieKind::OneLeg, a.competitor, b.competitor) {
            (*a, *b)
        } else {
            (*b, *a)
        }
    };
    let (w1, l1) = decide(&semis[0].seeded, &semis[0].unseeded);
    let (w2, l2) = decide(&semis[1].seeded, &semis[1].unseeded);
    let (winner, final_loser) = decide(&w1, &w2);
    let semi_loser = if winner.occupant == w1.occupant { l1 } else { l2 };
    let draw = winner.real_coefficient.max(final_loser.real_coefficient).max(semi_loser.real_coefficient);
    Ok(Preliminary { winner: Slot { draw_coefficient: draw, ..winner }, host })
}

/// Champion attributes of one iteration and their rows in the outcome
/// matrices, both indexed by association.
#[derive(Debug, Clone, Copy)]
pub struct Field<'a> {
    pub profiles: &'a [ChampionProfile],
    pub competitor_of: &'a [Option<usize>],
}

impl Field<'_> {
    fn slot(&self, id: AssociationId) -> Result<Slot, BracketError> {
        let competitor = self.competitor_of[id.index()].ok_or(BracketError::MissingProfile(id.0))?;
        Ok(Slot::entering(id, competitor, self.profiles[id.index()]))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FormatOutcome {
    /// Direct entrants followed by the final round's winners.
    pub qualified: Vec<AssociationId>,
    /// Matches decided (three per mini-knockout).
    pub matches: usize,
    /// `(round index, association)` for every team that played each round.
    pub reached: Vec<(usize, AssociationId)>,
}

/// Plays every round of `format` and returns who reaches the group stage.
pub fn run_format<R: Rng + ?Sized>(
    format: &FormatSpec,
    entries: &EntryLists,
    field: Field<'_>,
    matrices: &OutcomeMatrices,
    mode: SeedingMode,
    rng: &mut R,
) -> Result<FormatOutcome, BracketError> {
    let mut outcome = FormatOutcome { qualified: entries.direct.clone(), matches: 0, reached: Vec::with_capacity(128) };
    let mut carried: Vec<Slot> = Vec::new();
    for (index, (round, entrants)) in format.rounds.iter().zip(&entries.rounds).enumerate() {
        let mut slots = Vec::with_capacity(entrants.len() + carried.len());
        for &id in entrants {
            slots.push(field.slot(id)?);
        }
        if round.winners_known {
            for s in &mut carried {
                s.draw_coefficient = s.real_coefficient;
            }
        }
        slots.append(&mut carried);
        outcome.reached.extend(slots.iter().map(|s| (index, s.occupant)));
        match round.structure {
            RoundStructure::MiniKnockout => {
                let preliminary = play_preliminary(slots, mode, matrices, rng)?;
                outcome.matches += 3;
                carried.push(preliminary.winner);
            }
            RoundStructure::PairwiseTies => {
                let ties = draw_round(assign_pots(slots, mode, rng)?, round.label, rng)?;
                outcome.matches += ties.len();
                carried.extend(ties.iter().map(|t| resolve_tie(t, round.tie, matrices)));
            }
        }
    }
    outcome.qualified.extend(carried.iter().map(|s| s.occupant));
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Coefficient;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn coef(s: &str) -> Coefficient {
        s.parse().unwrap()
    }

    fn slot(id: u16, real: &str, elo: f64) -> Slot {
        Slot::entering(AssociationId(id), id as usize, ChampionProfile { coefficient: coef(real), elo })
    }

    fn rng() -> Xoshiro256PlusPlus {
        Xoshiro256PlusPlus::seed_from_u64(7)
    }

    #[test]
    fn seeded_pot_is_top_half() {
        let slots = vec![slot(0, "5", 1.0), slot(1, "27", 1.0), slot(2, "1", 1.0), slot(3, "6.25", 1.0)];
        let pots = assign_pots(slots, SeedingMode::Seeded, &mut rng()).unwrap();
        let seeded: Vec<_> = pots.seeded.iter().map(|s| s.draw_coefficient).collect();
        assert_eq!(seeded, vec![coef("27"), coef("6.25")]);
    }

    #[test]
    fn equal_coefficients_break_on_elo_then_index() {
        let pots =
            assign_pots(vec![slot(0, "3.5", 1400.0), slot(1, "3.5", 1500.0)], SeedingMode::Seeded, &mut rng()).unwrap();
        assert_eq!(pots.seeded[0].occupant, AssociationId(1));
        let pots =
            assign_pots(vec![slot(5, "3.5", 1500.0), slot(2, "3.5", 1500.0)], SeedingMode::Seeded, &mut rng()).unwrap();
        assert_eq!(pots.seeded[0].occupant, AssociationId(2));
    }

    #[test]
    fn odd_slot_count_is_rejected() {
        let err = assign_pots(vec![slot(0, "1", 1.0)], SeedingMode::Seeded, &mut rng()).unwrap_err();
        assert_eq!(err, BracketError::OddSlots(1));
    }

    #[test]
    fn unequal_pots_are_rejected() {
        let pots = Pots { seeded: vec![slot(0, "1", 1.0)], unseeded: vec![] };
        assert_eq!(draw_round(pots, RoundLabel::Q1, &mut rng()).unwrap_err(), BracketError::UnequalPots(1, 0));
    }

    #[test]
    fn single_pair_is_forced() {
        let pots = Pots { seeded: vec![slot(0, "2", 1.0)], unseeded: vec![slot(1, "1", 1.0)] };
        let ties = draw_round(pots, RoundLabel::Q1, &mut rng()).unwrap();
        assert_eq!(ties.len(), 1);
        assert_eq!((ties[0].seeded.occupant, ties[0].unseeded.occupant), (AssociationId(0), AssociationId(1)));
    }

    // The 2019/20 path of the Hungarian champion through Q1-Q3.
    #[test]
    fn ferencvaros_carry_over() {
        let ferencvaros = slot(0, "3.5", 1468.0);
        let ludogorets = slot(1, "27", 1516.0);
        let valletta = slot(2, "4.25", 1069.0);
        let dudelange = slot(3, "6.25", 1259.0);
        // Lower index always advances.
        let m = OutcomeMatrices::from_upper(4, |_, _, _| true);
        let q1a = Tie { round: RoundLabel::Q1, seeded: ludogorets, unseeded: ferencvaros };
        let into_q2 = resolve_tie(&q1a, TieKind::TwoLeg, &m);
        assert_eq!(into_q2.occupant, AssociationId(0));
        assert_eq!(into_q2.draw_coefficient, coef("27"));
        assert_eq!(into_q2.real_coefficient, coef("3.5"));

        let q1b = Tie { round: RoundLabel::Q1, seeded: dudelange, unseeded: valletta };
        let valletta_q2 = resolve_tie(&q1b, TieKind::TwoLeg, &m);
        assert_eq!(valletta_q2.draw_coefficient, coef("6.25"));

        let q2 = Tie { round: RoundLabel::Q2, seeded: into_q2, unseeded: valletta_q2 };
        let into_q3 = resolve_tie(&q2, TieKind::TwoLeg, &m);
        assert_eq!(into_q3.occupant, AssociationId(0));
        assert_eq!(into_q3.draw_coefficient, coef("4.25"));
    }

    #[test]
    fn preliminary_requires_four() {
        let m = OutcomeMatrices::new(3);
        let entrants = vec![slot(0, "1", 1.0), slot(1, "1", 1.0), slot(2, "1", 1.0)];
        assert_eq!(
            play_preliminary(entrants, SeedingMode::Seeded, &m, &mut rng()).unwrap_err(),
            BracketError::PreliminarySize(3)
        );
    }

    #[test]
    fn preliminary_winner_takes_max_eliminated_coefficient() {
        // Lowest index always wins.
        let m = OutcomeMatrices::from_upper(4, |_, _, _| true);
        let entrants = vec![slot(0, "0.5", 1.0), slot(1, "4.25", 1.0), slot(2, "4", 1.0), slot(3, "0.75", 1.0)];
        let pr = play_preliminary(entrants, SeedingMode::Seeded, &m, &mut rng()).unwrap();
        assert_eq!(pr.winner.occupant, AssociationId(0));
        // Pots are {1, 2} and {0, 3}; 0 knocks out both seeded teams.
        assert_eq!(pr.winner.draw_coefficient, coef("4.25"));
        assert_eq!(pr.winner.real_coefficient, coef("0.5"));
    }

    #[test]
    fn matrices_are_antisymmetric() {
        let mut m = OutcomeMatrices::new(10);
        m.fill(&mut rng(), |_, _| (0.3, 0.6));
        for kind in [TieKind::OneLeg, TieKind::TwoLeg] {
            for i in 0..10 {
                for j in 0..10 {
                    if i != j {
                        assert_ne!(m.advances(kind, i, j), m.advances(kind, j, i));
                    }
                }
            }
        }
    }
}
