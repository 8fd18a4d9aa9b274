//! CSV emission helpers: header row, `.` decimal point, no locale
//! formatting. Floats print in Rust's shortest round-trip form so reruns
//! are byte-identical.

use ndarray::Array2;

pub fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

/// Column-oriented CSV: `columns` are (name, values) with equal lengths.
pub fn columns_csv(columns: &[(String, Vec<f64>)]) -> String {
    let mut out = String::new();
    out.push_str(
        &columns
            .iter()
            .map(|(n, _)| n.clone())
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push('\n');
    let rows = columns.first().map(|(_, v)| v.len()).unwrap_or(0);
    for r in 0..rows {
        let line = columns
            .iter()
            .map(|(_, v)| fmt(v[r]))
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Matrix CSV with a leading row-label column: header is
/// `row_label,<col values...>`, then one row per row-axis value.
pub fn matrix_csv(row_label: &str, rows: &[f64], cols: &[f64], z: &Array2<f64>) -> String {
    assert_eq!(z.dim(), (rows.len(), cols.len()));
    let mut out = String::new();
    out.push_str(row_label);
    for c in cols {
        out.push(',');
        out.push_str(&fmt(*c));
    }
    out.push('\n');
    for (i, r) in rows.iter().enumerate() {
        out.push_str(&fmt(*r));
        for j in 0..cols.len() {
            out.push(',');
            out.push_str(&fmt(z[[i, j]]));
        }
        out.push('\n');
    }
    out
}

/// Parse a simple CSV with a header row into named numeric columns.
/// Returns the header names and row-major values; errors carry the line.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| "empty file".to_string())?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let vals: Result<Vec<f64>, _> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect();
        let vals = vals.map_err(|e| format!("line {}: {e}", idx + 1))?;
        if vals.len() != names.len() {
            return Err(format!(
                "line {}: expected {} columns, found {}",
                idx + 1,
                names.len(),
                vals.len()
            ));
        }
        rows.push(vals);
    }
    Ok((names, rows))
}
