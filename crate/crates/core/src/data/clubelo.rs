//! Optional refresh of the Elo column from the Club Elo daily snapshot API.
//!
//! `GET http://api.clubelo.com/<YYYY-MM-DD>` returns a CSV ranking with at
//! least `Rank,Club,Country,Elo` columns. The fetched rows are filtered to a
//! user-supplied association → club mapping and emitted in the `elo.csv`
//! schema as a separate candidate file; shipped fixtures are never touched.

use std::fs::OpenOptions;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

pub const DEFAULT_BASE_URL: &str = "http://api.clubelo.com";

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("HTTP request failed ({}): {message}", if *retryable { "retryable" } else { "permanent" })]
    Http { retryable: bool, message: String },
    #[error("no rows")]
    NoRows,
    #[error("malformed Club Elo response: {0}")]
    Parse(String),
    #[error("invalid date `{0}`, expected YYYY-MM-DD")]
    InvalidDate(String),
    #[error("invalid club mapping: {0}")]
    Mapping(String),
    #[error("refusing to overwrite existing file {0}")]
    WouldOverwrite(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl FetchError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, FetchError::Http { retryable: true, .. })
    }
}

/// Anything that can produce the raw snapshot CSV for a date.
pub trait EloSource {
    fn fetch_csv(&self, date: &str) -> Result<String, FetchError>;
}

/// A pre-recorded response body, for offline runs and tests.
pub struct RecordedSource(pub String);

impl EloSource for RecordedSource {
    fn fetch_csv(&self, _date: &str) -> Result<String, FetchError> {
        Ok(self.0.clone())
    }
}

#[cfg(feature = "http")]
pub struct HttpSource {
    pub base_url: String,
}

#[cfg(feature = "http")]
impl Default for HttpSource {
    fn default() -> Self {
        HttpSource { base_url: DEFAULT_BASE_URL.to_string() }
    }
}

#[cfg(feature = "http")]
impl EloSource for HttpSource {
    fn fetch_csv(&self, date: &str) -> Result<String, FetchError> {
        let url = format!("{}/{}", self.base_url.trim_end_matches('/'), date);
        let mut response = ureq::get(&url).call().map_err(|e| {
            let retryable = match &e {
                ureq::Error::StatusCode(code) => *code == 429 || *code >= 500,
                _ => true,
            };
            FetchError::Http { retryable, message: e.to_string() }
        })?;
        response.body_mut().read_to_string().map_err(|e| FetchError::Http { retryable: true, message: e.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ClubEloRow {
    #[serde(rename = "Rank", default, deserialize_with = "csv::invalid_option")]
    pub rank: Option<u32>,
    #[serde(rename = "Club")]
    pub club: String,
    #[serde(rename = "Country")]
    pub country: String,
    #[serde(rename = "Elo")]
    pub elo: f64,
}

pub fn parse_snapshot(body: &str) -> Result<Vec<ClubEloRow>, FetchError> {
    if body.trim().is_empty() {
        return Err(FetchError::NoRows);
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
    let rows: Vec<ClubEloRow> =
        reader.deserialize().collect::<Result<_, _>>().map_err(|e| FetchError::Parse(e.to_string()))?;
    if rows.is_empty() {
        return Err(FetchError::NoRows);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct MappingEntry {
    pub association: String,
    pub season: String,
    pub club: String,
}

/// Which club (by its Club Elo name) was each association's champion.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClubMapping {
    pub entries: Vec<MappingEntry>,
}

impl ClubMapping {
    /// Reads `association,season,club` rows.
    pub fn from_csv(text: &str) -> Result<Self, FetchError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let entries = reader.deserialize().collect::<Result<_, _>>().map_err(|e| FetchError::Mapping(e.to_string()))?;
        Ok(ClubMapping { entries })
    }

    pub fn for_season<'a>(&'a self, season: &'a str) -> impl Iterator<Item = &'a MappingEntry> {
        self.entries.iter().filter(move |e| e.season == season)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EloRecord {
    pub association: String,
    pub season: String,
    /// Rounded to whole points, as in the shipped table.
    pub value: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EloSnapshot {
    pub date: String,
    pub season: String,
    pub records: Vec<EloRecord>,
    /// Associations whose mapped club is missing from the response.
    pub unmapped: Vec<String>,
}

impl EloSnapshot {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("association,season,value\n");
        for r in &self.records {
            let association =
                if r.association.contains(',') { format!("\"{}\"", r.association) } else { r.association.clone() };
            out.push_str(&format!("{},{},{}\n", association, r.season, r.value));
        }
        out
    }

    /// Writes a new candidate file; fails if `path` already exists.
    pub fn write_candidate(&self, path: &Path) -> Result<(), FetchError> {
        use std::io::Write;
        let mut file = OpenOptions::new().write(true).create_new(true).open(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                FetchError::WouldOverwrite(path.display().to_string())
            } else {
                FetchError::Io(e)
            }
        })?;
        file.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// `2019/20` → `2019-09-01`, the rating date used for that season.
pub fn rating_date(season: &str) -> Option<String> {
    let (start, _) = season.split_once('/')?;
    if start.len() != 4 || !start.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some(format!("{start}-09-01"))
}

fn check_date(date: &str) -> Result<(), FetchError> {
    let parts: Vec<&str> = date.split('-').collect();
    let ok = parts.len() == 3
        && [4, 2, 2].iter().zip(&parts).all(|(len, p)| p.len() == *len && p.bytes().all(|b| b.is_ascii_digit()))
        && (1..=12).contains(&parts[1].parse::<u32>().unwrap_or(0))
        && (1..=31).contains(&parts[2].parse::<u32>().unwrap_or(0));
    if ok {
        Ok(())
    } else {
        Err(FetchError::InvalidDate(date.to_string()))
    }
}

/// Fetches the snapshot for `date` and keeps the rows of the clubs mapped
/// for `season`.
pub fn fetch_clubelo_snapshot(
    source: &dyn EloSource,
    date: &str,
    season: &str,
    mapping: &ClubMapping,
) -> Result<EloSnapshot, FetchError> {
    check_date(date)?;
    let rows = parse_snapshot(&source.fetch_csv(date)?)?;
    let mut records = Vec::new();
    let mut unmapped = Vec::new();
    for entry in mapping.for_season(season) {
        match rows.iter().find(|r| r.club == entry.club) {
            Some(row) => records.push(EloRecord {
                association: entry.association.clone(),
                season: season.to_string(),
                value: row.elo.round() as i64,
            }),
            None => unmapped.push(entry.association.clone()),
        }
    }
    Ok(EloSnapshot { date: date.to_string(), season: season.to_string(), records, unmapped })
}
