use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_feedback, FeedbackKind, IdMap, InteractionRecord, InteractionTable};
use crate::error::{Error, Result};

/// Column layout of a feedback CSV.
///
/// Column names are only consulted when the file has a header row (detected
/// by a non-numeric first row); headerless files are read positionally as
/// `user,item,feedback[,...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvSchema {
    pub user_column: String,
    pub item_column: String,
    pub feedback_column: String,
    /// Inclusive rating bounds; ignored for implicit data.
    pub rating_min: f64,
    pub rating_max: f64,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            user_column: "user".into(),
            item_column: "item".into(),
            feedback_column: "feedback".into(),
            rating_min: 1.0,
            rating_max: 5.0,
        }
    }
}

pub fn load_explicit_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<InteractionTable> {
    load_csv(path.as_ref(), schema, FeedbackKind::Explicit)
}

pub fn load_implicit_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<InteractionTable> {
    load_csv(path.as_ref(), schema, FeedbackKind::Implicit)
}

fn load_csv(path: &Path, schema: &CsvSchema, kind: FeedbackKind) -> Result<InteractionTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;

    let range = match kind {
        FeedbackKind::Explicit => {
            if schema.rating_min > schema.rating_max {
                return Err(Error::Config(format!(
                    "rating_min {} exceeds rating_max {}",
                    schema.rating_min, schema.rating_max
                )));
            }
            Some((schema.rating_min, schema.rating_max))
        }
        FeedbackKind::Implicit => None,
    };

    let mut columns = [0usize, 1, 2];
    let mut user_ids = IdRemap::default();
    let mut item_ids = IdRemap::default();
    let mut seen = HashMap::new();
    let mut records = Vec::new();

    for (row_idx, row) in reader.records().enumerate() {
        let row = row?;
        let line = row.position().map_or(row_idx as u64 + 1, |p| p.line());
        if row.iter().all(|f| f.is_empty()) {
            continue;
        }
        if row_idx == 0 && looks_like_header(&row) {
            columns = header_columns(&row, schema, line)?;
            continue;
        }
        let field = |col: usize| {
            row.get(col).ok_or_else(|| Error::Parse {
                line,
                message: format!("expected at least {} columns, found {}", col + 1, row.len()),
            })
        };
        let user: i64 = parse_field(field(columns[0])?, "user id", line)?;
        let item: i64 = parse_field(field(columns[1])?, "item id", line)?;
        let feedback: f64 = parse_field(field(columns[2])?, "feedback", line)?;
        check_feedback(kind, range, feedback)
            .map_err(|message| Error::Validation { line, message })?;
        let u = user_ids.dense(user);
        let i = item_ids.dense(item);
        if let Some(first) = seen.insert((u, i), line) {
            return Err(Error::Validation {
                line,
                message: format!("duplicate (user {user}, item {item}); first seen at line {first}"),
            });
        }
        records.push(InteractionRecord { user: u, item: i, feedback });
    }

    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    let id_map = IdMap { users: user_ids.originals, items: item_ids.originals };
    let table = InteractionTable::new(records, kind, id_map.users.len(), id_map.items.len(), range)?;
    Ok(table.with_id_map(id_map))
}

#[derive(Default)]
struct IdRemap {
    index: HashMap<i64, u32>,
    originals: Vec<i64>,
}

impl IdRemap {
    fn dense(&mut self, original: i64) -> u32 {
        let next = self.originals.len() as u32;
        *self.index.entry(original).or_insert_with(|| {
            self.originals.push(original);
            next
        })
    }
}

fn looks_like_header(row: &csv::StringRecord) -> bool {
    row.iter().take(3).any(|f| f.parse::<f64>().is_err())
}

fn header_columns(row: &csv::StringRecord, schema: &CsvSchema, line: u64) -> Result<[usize; 3]> {
    let find = |name: &str| {
        row.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            line,
            message: format!("header has no column named {name:?}"),
        })
    };
    Ok([
        find(&schema.user_column)?,
        find(&schema.item_column)?,
        find(&schema.feedback_column)?,
    ])
}

fn parse_field<T: std::str::FromStr>(raw: &str, what: &str, line: u64) -> Result<T> {
    raw.parse().map_err(|_| Error::Parse { line, message: format!("cannot parse {what} from {raw:?}") })
}

/// Writes `user,item,feedback` rows using the table's original ids.
pub fn write_table_csv(table: &InteractionTable, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(File::create(path)?);
    writeln!(out, "user,item,feedback")?;
    let ids = table.id_map();
    for r in table.records() {
        writeln!(out, "{},{},{}", ids.users[r.user as usize], ids.items[r.item as usize], r.feedback)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes the dense-to-original id sidecar as `entity,dense_id,original_id`.
pub fn write_id_map(table: &InteractionTable, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(File::create(path)?);
    writeln!(out, "entity,dense_id,original_id")?;
    let ids = table.id_map();
    for (dense, orig) in ids.users.iter().enumerate() {
        writeln!(out, "user,{dense},{orig}")?;
    }
    for (dense, orig) in ids.items.iter().enumerate() {
        writeln!(out, "item,{dense},{orig}")?;
    }
    out.flush()?;
    Ok(())
}
