use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

pub const SCHEMA: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: u32,
    command: &'a str,
    run: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

/// Writes a versioned JSON report. Contains no timestamps, so identical runs
/// give identical bytes.
pub fn write_json<T: Serialize>(path: &Path, command: &str, run: &str, body: &T) -> Result<()> {
    let env = Envelope {
        schema: SCHEMA,
        command,
        run,
        body,
    };
    let mut text = serde_json::to_string_pretty(&env)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes a numeric series with `#` description lines ahead of the header row.
pub fn write_series(
    path: &Path,
    description: &[&str],
    header: &[String],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<()> {
    let mut out = String::new();
    for line in description {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:?}")))?;
    }
    out.push_str(std::str::from_utf8(&w.into_inner()?)?);
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}
