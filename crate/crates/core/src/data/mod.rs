//! CSV fixtures for the five-season sample.
//!
//! Three files share one directory:
//!
//! * `ranks.csv`: `association,season,rank,participates`
//! * `coefficients.csv`: `association,season,value`
//! * `elo.csv`: `association,season,value`
//!
//! Coefficients keep their exact decimal text; Elo values are plain numbers.
//! Rows with `participates = false` record a rank held by an association that
//! enters no champion.

pub mod clubelo;

use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::model::{
    validate_dataset, AssociationId, ChampionProfile, Coefficient, Dataset, Roster, SeasonTable, ValidationReport,
};

pub const RANKS_FILE: &str = "ranks.csv";
pub const COEFFICIENTS_FILE: &str = "coefficients.csv";
pub const ELO_FILE: &str = "elo.csv";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing file {0}")]
    MissingFile(String),
    #[error("{file} row {row}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse { file: String, row: u64, column: Option<usize>, message: String },
    #[error("dataset failed validation:\n{0}")]
    Validation(ValidationReport),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A validated dataset and where it came from.
#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub dataset: Dataset,
    pub provenance: String,
}

#[derive(Debug, Deserialize)]
struct RankRow {
    association: String,
    season: String,
    rank: u8,
    participates: bool,
}

#[derive(Debug, Deserialize)]
struct ValueRow {
    association: String,
    season: String,
    value: String,
}

/// Loads and validates the fixtures in `directory`.
pub fn load_fixtures(directory: &Path) -> Result<DatasetBundle, DataError> {
    let dataset = load_unvalidated(directory)?;
    let report = validate_dataset(&dataset);
    if !report.is_ok() {
        return Err(DataError::Validation(report));
    }
    Ok(DatasetBundle { dataset, provenance: directory.display().to_string() })
}

/// Reads the fixtures without checking them against the shipped sample's
/// shape. Synthetic datasets go through here.
pub fn load_unvalidated(directory: &Path) -> Result<Dataset, DataError> {
    let ranks_path = require(directory, RANKS_FILE)?;
    let coefficients_path = require(directory, COEFFICIENTS_FILE)?;
    let elo_path = require(directory, ELO_FILE)?;

    let mut roster = Roster::new(Vec::<String>::new());
    let mut season_order: Vec<String> = Vec::new();
    let mut rank_rows = Vec::new();
    for (row, record) in read_rows::<RankRow>(&ranks_path, RANKS_FILE)? {
        if !season_order.contains(&record.season) {
            season_order.push(record.season.clone());
        }
        if record.participates {
            roster.insert(record.association.clone());
        }
        rank_rows.push((row, record));
    }

    let season_of: HashMap<String, usize> = season_order.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    let mut seasons: Vec<SeasonTable> =
        season_order.iter().map(|label| SeasonTable::empty(label.clone(), roster.len())).collect();

    for (row, record) in rank_rows {
        let season = &mut seasons[season_of[&record.season]];
        if record.participates {
            let id = roster.id(&record.association).expect("inserted above");
            if season.ranks[id.index()].replace(record.rank).is_some() {
                return Err(duplicate(RANKS_FILE, row, &record.association, &record.season));
            }
        } else {
            if season.non_participants.iter().any(|(n, _)| *n == record.association) {
                return Err(duplicate(RANKS_FILE, row, &record.association, &record.season));
            }
            season.non_participants.push((record.association, record.rank));
        }
    }

    let coefficients = read_values(&coefficients_path, COEFFICIENTS_FILE, &roster, &season_of, |raw| {
        raw.parse::<Coefficient>().map_err(|e| e.to_string())
    })?;
    let elos = read_values(&elo_path, ELO_FILE, &roster, &season_of, |raw| {
        raw.trim().parse::<f64>().map_err(|e| format!("invalid Elo `{raw}`: {e}"))
    })?;

    for (key, coefficient) in &coefficients {
        if let Some(&elo) = elos.get(key) {
            let (id, season) = *key;
            seasons[season].profiles[id.index()] = Some(ChampionProfile { coefficient: *coefficient, elo });
        }
    }

    Ok(Dataset { roster, seasons })
}

/// Writes `dataset` in the fixture schema. Loading the result yields an
/// equal dataset.
pub fn write_fixtures(dataset: &Dataset, directory: &Path) -> Result<(), DataError> {
    std::fs::create_dir_all(directory).map_err(|e| io_error(directory, e))?;

    let mut ranks = writer(&directory.join(RANKS_FILE))?;
    write_record(&mut ranks, directory, ["association", "season", "rank", "participates"])?;
    let mut coefficients = writer(&directory.join(COEFFICIENTS_FILE))?;
    write_record(&mut coefficients, directory, ["association", "season", "value"])?;
    let mut elo = writer(&directory.join(ELO_FILE))?;
    write_record(&mut elo, directory, ["association", "season", "value"])?;

    for id in dataset.roster.ids() {
        let name = dataset.roster.name(id);
        for season in &dataset.seasons {
            if let Some(rank) = season.rank(id) {
                write_record(&mut ranks, directory, [name, &season.label, &rank.to_string(), "true"])?;
            }
            if let Some(profile) = season.profile(id) {
                let c = profile.coefficient.to_string();
                write_record(&mut coefficients, directory, [name, &season.label, &c])?;
                let e = profile.elo.to_string();
                write_record(&mut elo, directory, [name, &season.label, &e])?;
            }
        }
    }
    for season in &dataset.seasons {
        for (name, rank) in &season.non_participants {
            write_record(&mut ranks, directory, [name.as_str(), &season.label, &rank.to_string(), "false"])?;
        }
    }
    for w in [&mut ranks, &mut coefficients, &mut elo] {
        w.flush().map_err(|e| io_error(directory, e))?;
    }
    Ok(())
}

fn require(directory: &Path, name: &str) -> Result<PathBuf, DataError> {
    let path = directory.join(name);
    if path.is_file() {
        Ok(path)
    } else {
        Err(DataError::MissingFile(name.to_string()))
    }
}

fn io_error(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io { path: path.display().to_string(), source }
}

fn duplicate(file: &str, row: u64, association: &str, season: &str) -> DataError {
    DataError::Parse {
        file: file.to_string(),
        row,
        column: None,
        message: format!("duplicate row for {association} {season}"),
    }
}

fn csv_error(file: &str, err: csv::Error) -> DataError {
    let row = err.position().map(|p| p.line()).unwrap_or(0);
    let column = match err.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.field().map(|f| f as usize + 1),
        _ => None,
    };
    DataError::Parse { file: file.to_string(), row, column, message: err.to_string() }
}

fn read_rows<T: serde::de::DeserializeOwned>(path: &Path, file: &str) -> Result<Vec<(u64, T)>, DataError> {
    let handle = File::open(path).map_err(|e| io_error(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(handle);
    let headers = reader.headers().map_err(|e| csv_error(file, e))?.clone();
    let mut rows = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| csv_error(file, e))?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        let value = record.deserialize(Some(&headers)).map_err(|e| {
            let mut err = csv_error(file, e);
            if let DataError::Parse { row: r, .. } = &mut err {
                *r = row;
            }
            err
        })?;
        rows.push((row, value));
    }
    Ok(rows)
}

fn read_values<T>(
    path: &Path,
    file: &str,
    roster: &Roster,
    season_of: &HashMap<String, usize>,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<HashMap<(AssociationId, usize), T>, DataError> {
    let mut values = HashMap::new();
    for (row, record) in read_rows::<ValueRow>(path, file)? {
        let at = |column: usize, message: String| DataError::Parse {
            file: file.to_string(),
            row,
            column: Some(column),
            message,
        };
        let id = roster
            .id(&record.association)
            .ok_or_else(|| at(1, format!("association `{}` not in {RANKS_FILE}", record.association)))?;
        let season = *season_of
            .get(&record.season)
            .ok_or_else(|| at(2, format!("season `{}` not in {RANKS_FILE}", record.season)))?;
        let value = parse(&record.value).map_err(|m| at(3, m))?;
        if values.insert((id, season), value).is_some() {
            return Err(duplicate(file, row, &record.association, &record.season));
        }
    }
    Ok(values)
}

fn writer(path: &Path) -> Result<csv::Writer<File>, DataError> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn write_record<const N: usize>(
    w: &mut csv::Writer<File>,
    directory: &Path,
    fields: [&str; N],
) -> Result<(), DataError> {
    w.write_record(fields).map_err(|e| DataError::Io {
        path: directory.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_directory_reports_ranks_first() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_fixtures(dir.path()).unwrap_err();
        assert_eq!(err.to_string(), "missing file ranks.csv");
    }

    #[test]
    fn malformed_rank_reports_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join(RANKS_FILE),
            "association,season,rank,participates\nA,2019/20,1,true\nB,2019/20,x,true\n",
        )
        .unwrap();
        std::fs::write(dir.path().join(COEFFICIENTS_FILE), "association,season,value\n").unwrap();
        std::fs::write(dir.path().join(ELO_FILE), "association,season,value\n").unwrap();
        match load_unvalidated(dir.path()).unwrap_err() {
            DataError::Parse { file, row, column, .. } => {
                assert_eq!(file, RANKS_FILE);
                assert_eq!(row, 3);
                assert_eq!(column, Some(3));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn bad_coefficient_reports_column_three() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(RANKS_FILE), "association,season,rank,participates\nA,2019/20,1,true\n")
            .unwrap();
        std::fs::write(dir.path().join(COEFFICIENTS_FILE), "association,season,value\nA,2019/20,1.x\n").unwrap();
        std::fs::write(dir.path().join(ELO_FILE), "association,season,value\nA,2019/20,1500\n").unwrap();
        let err = load_unvalidated(dir.path()).unwrap_err();
        assert!(matches!(err, DataError::Parse { row: 2, column: Some(3), .. }), "{err}");
    }

    #[test]
    fn unknown_association_in_values_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(RANKS_FILE), "association,season,rank,participates\nA,2019/20,1,true\n")
            .unwrap();
        std::fs::write(dir.path().join(COEFFICIENTS_FILE), "association,season,value\nZ,2019/20,1\n").unwrap();
        std::fs::write(dir.path().join(ELO_FILE), "association,season,value\n").unwrap();
        let err = load_unvalidated(dir.path()).unwrap_err();
        assert!(matches!(err, DataError::Parse { column: Some(1), .. }), "{err}");
    }
}
