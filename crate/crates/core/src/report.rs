//! Plain-text output helpers shared by reports and traces.

/// Shortest decimal text that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn csv_header(n: usize, tail: &[&str]) -> String {
    let mut cols: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    cols.extend(tail.iter().map(|s| s.to_string()));
    cols.join(",") + "\n"
}
