#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use qualsim::data::load_fixtures;
use qualsim::model::{AssociationId, ChampionProfile, Coefficient, Dataset, FormatSpec, Roster, SeasonTable};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/fixtures")
}

pub fn shipped() -> Dataset {
    load_fixtures(&fixtures_dir()).expect("shipped fixtures load").dataset
}

/// One rank-1 direct entrant, Q1 for ranks 4-7 and Q2 for ranks 2-3 plus the
/// two Q1 winners. Six teams play, two qualify through Q2.
pub const TOY_FORMAT: &str = r#"
name = "toy"
direct = [1, 1]

[[rounds]]
label = "Q1"
entry = [4, 7]
tie = "two-leg"

[[rounds]]
label = "Q2"
entry = [2, 3]
tie = "two-leg"
"#;

pub fn toy_format() -> FormatSpec {
    TOY_FORMAT.parse().expect("toy format is valid")
}

/// `(name, rank, coefficient, elo)` of the toy season. The coefficient order
/// differs from the Elo order so that carry-over changes some draws.
pub const TOY_TEAMS: [(&str, u8, &str, f64); 7] = [
    ("Top", 1, "90", 1900.0),
    ("B", 2, "30", 1600.0),
    ("C", 3, "12.5", 1650.0),
    ("D", 4, "20", 1450.0),
    ("E", 5, "8", 1580.0),
    ("F", 6, "15", 1500.0),
    ("G", 7, "3", 1400.0),
];

pub fn toy_dataset() -> Dataset {
    let roster = Roster::new(TOY_TEAMS.iter().map(|t| t.0));
    let mut season = SeasonTable::empty("2019/20", roster.len());
    for (i, (_, rank, coefficient, elo)) in TOY_TEAMS.iter().enumerate() {
        season.ranks[i] = Some(*rank);
        season.profiles[i] =
            Some(ChampionProfile { coefficient: coefficient.parse::<Coefficient>().unwrap(), elo: *elo });
    }
    Dataset { roster, seasons: vec![season] }
}

pub fn id(dataset: &Dataset, name: &str) -> AssociationId {
    dataset.roster.id(name).unwrap_or_else(|| panic!("unknown association {name}"))
}
