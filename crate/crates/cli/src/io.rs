use std::fs;
use std::io::Write;
use std::path::Path;

use gapbound::BoxRegion;

use crate::exit::{CliError, CliResult};

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Precondition(format!("cannot read {}: {e}", path.display())))
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let fail = |e: std::io::Error| CliError::Precondition(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Precondition(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(fail)
}

pub fn parse_vector(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Parse(format!("'{}' is not a number in '{text}'", t.trim())))
        })
        .collect()
}

/// `lo1,lo2:hi1,hi2`.
pub fn parse_box(text: &str) -> CliResult<BoxRegion> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| CliError::Parse(format!("box '{text}' must look like lo1,lo2:hi1,hi2")))?;
    BoxRegion::new(parse_vector(lo)?, parse_vector(hi)?).map_err(|e| CliError::Precondition(e.to_string()))
}

/// `x1,x2;y1,y2;...`.
pub fn parse_point_list(text: &str) -> CliResult<Vec<Vec<f64>>> {
    text.split(';').filter(|s| !s.trim().is_empty()).map(parse_vector).collect()
}

/// One point per line; a leading header line and blank lines are skipped.
pub fn parse_points_csv(text: &str) -> CliResult<Vec<Vec<f64>>> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if i == 0 && fields.iter().any(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        let mut row = Vec::with_capacity(fields.len());
        let mut column = 1;
        for f in &fields {
            let v = f
                .parse::<f64>()
                .map_err(|_| CliError::Parse(format!("line {}, column {column}: '{f}' is not a number", i + 1)))?;
            row.push(v);
            column += f.len() + 1;
        }
        points.push(row);
    }
    Ok(points)
}

pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}
