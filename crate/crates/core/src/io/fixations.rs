use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::attention::{Fixation, FixationTable};
use crate::error::{Error, Result};

pub const FIXATION_HEADER: [&str; 4] = ["frame_id", "subject_id", "x", "y"];

/// Reads `frame_id,subject_id,x,y` rows. Coordinates must lie in the
/// half-open stimulus rectangle; errors carry 1-based file line numbers.
pub fn load_fixations(path: impl AsRef<Path>, stimulus_height: usize, stimulus_width: usize) -> Result<FixationTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_fixations(file, path, stimulus_height, stimulus_width)
}

pub fn parse_fixations(
    reader: impl Read,
    origin: &Path,
    stimulus_height: usize,
    stimulus_width: usize,
) -> Result<FixationTable> {
    let parse_err = |line: usize, message: String| Error::Parse { path: origin.to_path_buf(), line, message };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let mut cols = [0usize; 4];
    for (k, name) in FIXATION_HEADER.iter().enumerate() {
        cols[k] = headers
            .iter()
            .position(|h| h == *name)
            .ok_or_else(|| parse_err(1, format!("missing column '{name}'")))?;
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |k: usize| record.get(cols[k]).unwrap_or("");
        let int = |k: usize| {
            field(k)
                .parse::<u64>()
                .map_err(|_| parse_err(line, format!("{} '{}' is not a nonnegative integer", FIXATION_HEADER[k], field(k))))
        };
        let real = |k: usize| {
            field(k)
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("{} '{}' is not a number", FIXATION_HEADER[k], field(k))))
        };
        let (frame_id, subject_id, x, y) = (int(0)?, int(1)?, real(2)?, real(3)?);
        if !(0.0..stimulus_width as f64).contains(&x) || !(0.0..stimulus_height as f64).contains(&y) {
            return Err(parse_err(
                line,
                format!("({x}, {y}) outside [0, {stimulus_width}) x [0, {stimulus_height})"),
            ));
        }
        rows.push(Fixation { frame_id, subject_id, x, y });
    }
    FixationTable::new(stimulus_height, stimulus_width, rows)
}

pub fn fixations_to_csv(table: &FixationTable) -> String {
    let mut out = FIXATION_HEADER.join(",");
    out.push('\n');
    for f in table.rows() {
        out.push_str(&format!("{},{},{},{}\n", f.frame_id, f.subject_id, f.x, f.y));
    }
    out
}
