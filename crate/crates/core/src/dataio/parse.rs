use std::path::Path;

use csv::{ByteRecord, ReaderBuilder};

use super::RawInteractions;
use crate::error::{Error, Result};

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        kind => Error::Parse {
            path: path.to_owned(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

fn field<'r>(path: &Path, line: u64, rec: &'r ByteRecord, idx: usize) -> Result<&'r str> {
    std::str::from_utf8(&rec[idx]).map_err(|_| Error::Parse {
        path: path.to_owned(),
        line,
        message: format!("column {} is not valid UTF-8", idx + 1),
    })
}

fn number(path: &Path, line: u64, text: &str, what: &str) -> Result<f64> {
    match text.trim().parse::<f64>() {
        Ok(v) if !v.is_nan() => Ok(v),
        _ => Err(Error::Parse {
            path: path.to_owned(),
            line,
            message: format!("non-numeric {what} {text:?}"),
        }),
    }
}

fn read_rows(
    path: &Path,
    delimiter: u8,
    has_header: bool,
    columns: usize,
    mut row: impl FnMut(u64, &ByteRecord) -> Result<()>,
) -> Result<()> {
    let mut reader = ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(has_header)
        .flexible(true)
        .quoting(delimiter == b',')
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rec = ByteRecord::new();
    loop {
        match reader.read_byte_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(csv_error(path, e)),
        }
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != columns {
            return Err(Error::Parse {
                path: path.to_owned(),
                line,
                message: format!("expected {columns} columns, found {}", rec.len()),
            });
        }
        row(line, &rec)?;
    }
    Ok(())
}

/// Reads a MovieLens-style `userId,movieId,rating,timestamp` file, keeping
/// rows whose rating is at least `positive_threshold`.
pub fn parse_ratings_csv(
    path: impl AsRef<Path>,
    positive_threshold: f64,
) -> Result<RawInteractions> {
    let path = path.as_ref();
    let mut raw = RawInteractions::new();
    read_rows(path, b',', true, 4, |line, rec| {
        let rating = number(path, line, field(path, line, rec, 2)?, "rating")?;
        if rating >= positive_threshold {
            raw.push(
                field(path, line, rec, 0)?,
                field(path, line, rec, 1)?,
                rating,
            )?;
        }
        Ok(())
    })?;
    Ok(raw)
}

/// Reads tab-separated `user<TAB>song<TAB>count` triplets (no header). Rows
/// with a count below one are skipped.
pub fn parse_triplets_tsv(path: impl AsRef<Path>) -> Result<RawInteractions> {
    let path = path.as_ref();
    let mut raw = RawInteractions::new();
    read_rows(path, b'\t', false, 3, |line, rec| {
        let count = number(path, line, field(path, line, rec, 2)?, "count")?;
        if count >= 1.0 {
            raw.push(
                field(path, line, rec, 0)?,
                field(path, line, rec, 1)?,
                count,
            )?;
        }
        Ok(())
    })?;
    Ok(raw)
}
