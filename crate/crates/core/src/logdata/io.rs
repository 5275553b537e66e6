use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::types::{Dataset, InspectionRecord, QueryEvent, RestaurantRecord, VisitEvent};
use super::LogDataError;

pub const QUERY_FILE: &str = "queries.jsonl";
pub const VISIT_FILE: &str = "visits.csv";
pub const REGISTRY_FILE: &str = "restaurants.csv";
pub const INSPECTION_FILE: &str = "inspections.csv";

pub const VISIT_HEADER: [&str; 4] = ["user_id", "restaurant_id", "entry_ts", "exit_ts"];
pub const REGISTRY_HEADER: [&str; 3] = ["restaurant_id", "city", "risk_level"];
pub const INSPECTION_HEADER: [&str; 6] =
    ["restaurant_id", "date", "trigger", "outcome", "critical_count", "major_count"];

/// Per-stream file locations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetPaths {
    pub queries: PathBuf,
    pub visits: PathBuf,
    pub restaurants: PathBuf,
    pub inspections: PathBuf,
}

impl DatasetPaths {
    /// Standard file names inside one directory.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        DatasetPaths {
            queries: dir.join(QUERY_FILE),
            visits: dir.join(VISIT_FILE),
            restaurants: dir.join(REGISTRY_FILE),
            inspections: dir.join(INSPECTION_FILE),
        }
    }

    pub fn all(&self) -> [&Path; 4] {
        [&self.queries, &self.visits, &self.restaurants, &self.inspections]
    }
}

fn open(path: &Path) -> Result<File, LogDataError> {
    File::open(path).map_err(|source| LogDataError::Io { path: path.display().to_string(), source })
}

fn create(path: &Path) -> Result<BufWriter<File>, LogDataError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|source| LogDataError::Io { path: parent.display().to_string(), source })?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| LogDataError::Io { path: path.display().to_string(), source })
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> LogDataError {
    LogDataError::Parse { path: path.display().to_string(), line, message: message.into() }
}

pub fn read_queries(path: &Path) -> Result<Vec<QueryEvent>, LogDataError> {
    let reader = BufReader::new(open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| LogDataError::Io { path: path.display().to_string(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let event: QueryEvent = serde_json::from_str(&line).map_err(|e| parse_err(path, i + 1, e.to_string()))?;
        out.push(event);
    }
    Ok(out)
}

/// Reads a headered CSV, checking the header matches `expected` exactly.
pub fn read_csv<T: DeserializeOwned>(path: &Path, expected: &[&str]) -> Result<Vec<T>, LogDataError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(open(path)?);
    let headers = reader.headers().map_err(|e| parse_err(path, 1, e.to_string()))?.clone();
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(parse_err(
            path,
            1,
            format!("expected header {}, found {}", expected.join(","), headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut out = Vec::new();
    for (i, row) in reader.deserialize().enumerate() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(i + 2);
            parse_err(path, line, e.to_string())
        })?;
        out.push(row);
    }
    Ok(out)
}

/// Loads all four streams (in parallel), sorts them, and checks referential
/// integrity against the registry.
pub fn load_dataset(paths: &DatasetPaths) -> Result<Dataset, LogDataError> {
    let (queries, visits, restaurants, inspections) = std::thread::scope(|s| {
        let q = s.spawn(|| read_queries(&paths.queries));
        let v = s.spawn(|| read_csv::<VisitEvent>(&paths.visits, &VISIT_HEADER));
        let r = s.spawn(|| read_csv::<RestaurantRecord>(&paths.restaurants, &REGISTRY_HEADER));
        let i = s.spawn(|| read_csv::<InspectionRecord>(&paths.inspections, &INSPECTION_HEADER));
        (
            q.join().expect("query loader panicked"),
            v.join().expect("visit loader panicked"),
            r.join().expect("registry loader panicked"),
            i.join().expect("inspection loader panicked"),
        )
    });
    let mut dataset =
        Dataset { queries: queries?, visits: visits?, restaurants: restaurants?, inspections: inspections? };
    dataset.sort_streams();
    check_references(&dataset)?;
    Ok(dataset)
}

/// Every visit and inspection must name a registered restaurant; registry ids
/// must be unique.
pub fn check_references(dataset: &Dataset) -> Result<(), LogDataError> {
    let mut known = HashSet::with_capacity(dataset.restaurants.len());
    for r in &dataset.restaurants {
        if !known.insert(r.restaurant_id.as_str()) {
            return Err(LogDataError::DuplicateRestaurant(r.restaurant_id.clone()));
        }
    }
    let dangling: BTreeSet<String> = dataset
        .visits
        .iter()
        .map(|v| v.restaurant_id.as_str())
        .chain(dataset.inspections.iter().map(|i| i.restaurant_id.as_str()))
        .filter(|id| !known.contains(id))
        .map(str::to_owned)
        .collect();
    if dangling.is_empty() {
        Ok(())
    } else {
        Err(LogDataError::DanglingRestaurants(dangling.into_iter().collect()))
    }
}

pub fn write_queries(path: &Path, queries: &[QueryEvent]) -> Result<(), LogDataError> {
    let mut w = create(path)?;
    let io_err = |source| LogDataError::Io { path: path.display().to_string(), source };
    for q in queries {
        serde_json::to_writer(&mut w, q).map_err(|e| io_err(e.into()))?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Writes a headered CSV. The header is written even when `rows` is empty.
pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<(), LogDataError> {
    let w = create(path)?;
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    let io_err = |e: csv::Error| LogDataError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    };
    writer.write_record(header).map_err(io_err)?;
    for row in rows {
        writer.serialize(row).map_err(io_err)?;
    }
    writer.flush().map_err(|source| LogDataError::Io { path: path.display().to_string(), source })
}

pub fn write_dataset(dataset: &Dataset, paths: &DatasetPaths) -> Result<(), LogDataError> {
    write_queries(&paths.queries, &dataset.queries)?;
    write_csv(&paths.visits, &VISIT_HEADER, &dataset.visits)?;
    write_csv(&paths.restaurants, &REGISTRY_HEADER, &dataset.restaurants)?;
    write_csv(&paths.inspections, &INSPECTION_HEADER, &dataset.inspections)
}
