//! CSV formats.
//!
//! Landmark files: `frame_id,label,x0,y0,...,x67,y67` (138 columns).
//! Angle files: `frame_id,label,a1,...,a67` (69 columns, radians).
//!
//! Files are UTF-8, comma-separated, with a mandatory header row and `.` as
//! the decimal separator. The label column holds `AS`, `ST` or nothing
//! (unlabeled). Angles are written with 12 significant digits; landmark
//! coordinates with the shortest representation that round-trips.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::features::{AngleVector, ANGLE_COUNT};
use crate::landmark::{
    validate_frame, LabeledDataset, LandmarkFrame, Point2, SentenceClass, LANDMARK_COUNT,
};
use crate::pca::FeatureMatrix;

/// Column count of a landmark file.
pub const LANDMARK_COLUMNS: usize = 2 + 2 * LANDMARK_COUNT;
/// Column count of an angle file.
pub const ANGLE_COLUMNS: usize = 2 + ANGLE_COUNT;

#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    /// 1-based line number in the file.
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("{} rejected row(s): {}", .0.len(), join(.0))]
    RowParse(Vec<RowError>),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn join(errors: &[RowError]) -> String {
    errors
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn landmark_header() -> Vec<String> {
    let mut header = vec!["frame_id".to_string(), "label".to_string()];
    for i in 0..LANDMARK_COUNT {
        header.push(format!("x{i}"));
        header.push(format!("y{i}"));
    }
    header
}

pub fn angle_header() -> Vec<String> {
    let mut header = vec!["frame_id".to_string(), "label".to_string()];
    header.extend((1..=ANGLE_COUNT).map(|i| format!("a{i}")));
    header
}

/// Formats `v` with 12 significant digits in positional notation.
pub fn format_significant(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exponent = v.abs().log10().floor() as i32;
    let decimals = (11 - exponent).max(0) as usize;
    format!("{v:.decimals$}")
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => IngestError::MissingFile(path.to_path_buf()),
        _ => IngestError::Io(e),
    })
}

fn parse_label(field: &str) -> Result<Option<SentenceClass>, String> {
    if field.is_empty() {
        Ok(None)
    } else {
        field
            .parse()
            .map(Some)
            .map_err(|e: crate::landmark::LandmarkError| e.to_string())
    }
}

fn parse_number(field: &str, column: &str) -> Result<f64, String> {
    let value: f64 = field
        .trim()
        .parse()
        .map_err(|_| format!("column {column}: `{field}` is not a number"))?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("column {column}: value is not finite"))
    }
}

/// Reads the header and hands every data record to `row`, collecting
/// rejected rows instead of stopping at the first one.
fn read_rows<T>(
    reader: impl Read,
    expected_header: &[String],
    mut row: impl FnMut(&csv::StringRecord) -> Result<T, String>,
) -> Result<Vec<T>, IngestError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = csv.headers()?.clone();
    if header.is_empty() {
        return Err(IngestError::MalformedHeader("missing header row".into()));
    }
    if header.iter().ne(expected_header.iter().map(String::as_str)) {
        let found = header.len();
        return Err(IngestError::MalformedHeader(format!(
            "expected {} columns `{},{},...`, found {found} columns starting `{}`",
            expected_header.len(),
            expected_header[0],
            expected_header[1],
            header.iter().take(3).collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    for record in csv.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let parsed = if record.len() != expected_header.len() {
            Err(format!(
                "expected {} columns, found {}",
                expected_header.len(),
                record.len()
            ))
        } else if !seen.insert(record[0].to_string()) {
            Err(format!("duplicate frame_id `{}`", &record[0]))
        } else {
            row(&record)
        };
        match parsed {
            Ok(value) => out.push(value),
            Err(message) => errors.push(RowError { line, message }),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(IngestError::RowParse(errors))
    }
}

fn parse_landmark_record(
    record: &csv::StringRecord,
    header: &[String],
) -> Result<LandmarkFrame, String> {
    let label = parse_label(&record[1])?;
    let points = (0..LANDMARK_COUNT)
        .map(|i| {
            let (cx, cy) = (2 + 2 * i, 3 + 2 * i);
            Ok(Point2::new(
                parse_number(&record[cx], &header[cx])?,
                parse_number(&record[cy], &header[cy])?,
            ))
        })
        .collect::<Result<Vec<_>, String>>()?;
    validate_frame(LandmarkFrame {
        frame_id: record[0].to_string(),
        points,
        label,
    })
    .map_err(|e| e.to_string())
}

pub fn parse_landmark_csv(reader: impl Read) -> Result<Vec<LandmarkFrame>, IngestError> {
    let header = landmark_header();
    read_rows(reader, &header, |r| parse_landmark_record(r, &header))
}

/// One frame per data row; labels may be absent.
pub fn read_landmark_csv(path: impl AsRef<Path>) -> Result<Vec<LandmarkFrame>, IngestError> {
    parse_landmark_csv(open(path.as_ref())?)
}

/// Like [`read_landmark_csv`], rejecting unlabeled rows.
pub fn read_labeled_landmark_csv(path: impl AsRef<Path>) -> Result<LabeledDataset, IngestError> {
    let header = landmark_header();
    let frames = read_rows(open(path.as_ref())?, &header, |r| {
        let frame = parse_landmark_record(r, &header)?;
        match frame.label {
            Some(_) => Ok(frame),
            None => Err("missing label".to_string()),
        }
    })?;
    Ok(LabeledDataset::new(frames).expect("rows already validated"))
}

pub fn write_landmark_csv_to<'a>(
    writer: impl Write,
    frames: impl IntoIterator<Item = &'a LandmarkFrame>,
) -> Result<(), IngestError> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(landmark_header())?;
    for frame in frames {
        let mut record = vec![
            frame.frame_id.clone(),
            frame.label.map_or(String::new(), |l| l.to_string()),
        ];
        for p in &frame.points {
            record.push(p.x.to_string());
            record.push(p.y.to_string());
        }
        csv.write_record(&record)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_landmark_csv<'a>(
    path: impl AsRef<Path>,
    frames: impl IntoIterator<Item = &'a LandmarkFrame>,
) -> Result<(), IngestError> {
    write_landmark_csv_to(File::create(path)?, frames)
}

pub fn parse_angle_csv(reader: impl Read) -> Result<FeatureMatrix, IngestError> {
    let header = angle_header();
    let rows = read_rows(reader, &header, |record| {
        let label = parse_label(&record[1])?;
        let angles = (2..ANGLE_COLUMNS)
            .map(|c| parse_number(&record[c], &header[c]))
            .collect::<Result<Vec<_>, _>>()?;
        let vector = AngleVector::new(&record[0], angles).map_err(|e| e.to_string())?;
        Ok((vector, label))
    })?;
    let (rows, labels) = rows.into_iter().unzip();
    Ok(FeatureMatrix { rows, labels })
}

pub fn read_angle_csv(path: impl AsRef<Path>) -> Result<FeatureMatrix, IngestError> {
    parse_angle_csv(open(path.as_ref())?)
}

pub fn write_angle_csv_to<'a>(
    writer: impl Write,
    rows: impl IntoIterator<Item = (&'a AngleVector, Option<SentenceClass>)>,
) -> Result<(), IngestError> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(angle_header())?;
    for (vector, label) in rows {
        let mut record = Vec::with_capacity(ANGLE_COLUMNS);
        record.push(vector.source_frame_id.clone());
        record.push(label.map_or(String::new(), |l| l.to_string()));
        record.extend(vector.angles().iter().map(|&a| format_significant(a)));
        csv.write_record(&record)?;
    }
    csv.flush()?;
    Ok(())
}

/// Writes `(frame_id, label, angles)` rows; the frame id is the vector's source id.
pub fn write_angle_csv<'a>(
    path: impl AsRef<Path>,
    rows: impl IntoIterator<Item = (&'a AngleVector, Option<SentenceClass>)>,
) -> Result<(), IngestError> {
    write_angle_csv_to(File::create(path)?, rows)
}
