//! Reading and writing the JSON and CSV interchange formats.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use llip_core::{CompactGrid, Config, GridFunction, Metric};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).with_context(|| format!("schema error in {}", path.display()))
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn csv_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("malformed CSV in {}", path.display()))?;
        let row = record
            .iter()
            .map(|field| field.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .with_context(|| {
                format!(
                    "non-numeric field on row {} of {}",
                    line + 1,
                    path.display()
                )
            })?;
        rows.push(row);
    }
    Ok(rows)
}

/// A grid from JSON, or from CSV with one row of coordinates per point.
pub fn read_grid(path: &Path, metric: Metric) -> Result<CompactGrid> {
    if is_csv(path) {
        return Ok(CompactGrid::new(csv_rows(path)?, metric)?);
    }
    read_json(path)
}

/// A function from JSON, or from CSV rows of coordinates followed by the value.
///
/// CSV input carries its own points; they must rebuild `grid` exactly.
pub fn read_function(path: &Path, grid: Option<&CompactGrid>) -> Result<GridFunction> {
    if !is_csv(path) {
        let f: GridFunction = read_json(path)?;
        if let Some(grid) = grid {
            f.check_on(grid)?;
        }
        return Ok(f);
    }
    let rows = csv_rows(path)?;
    let mut points = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (i, mut row) in rows.into_iter().enumerate() {
        let Some(v) = row.pop() else {
            bail!("row {} of {} is empty", i + 1, path.display());
        };
        points.push(row);
        values.push(v);
    }
    let metric = grid.map_or(Metric::Euclidean, CompactGrid::metric);
    let own = CompactGrid::new(points, metric)?;
    if let Some(grid) = grid {
        if own.id() != grid.id() {
            bail!(
                "points in {} do not match grid {}",
                path.display(),
                grid.id()
            );
        }
    }
    Ok(GridFunction::new(&own, values)?)
}

/// An operator file: either the bare payload or `{"grid": …, "operator": …}`.
#[derive(Deserialize)]
#[serde(untagged)]
enum MaybeBundled<T> {
    Bundled { grid: CompactGrid, operator: T },
    Bare(T),
}

/// Reads an operator-like payload and resolves its grid from the file itself
/// or from `grid`.
pub fn read_with_grid<T: DeserializeOwned>(
    path: &Path,
    grid: Option<&CompactGrid>,
) -> Result<(T, Option<CompactGrid>)> {
    match read_json::<MaybeBundled<T>>(path)? {
        MaybeBundled::Bundled {
            grid: embedded,
            operator,
        } => {
            if let Some(g) = grid {
                if g.id() != embedded.id() {
                    bail!("grid embedded in {} differs from --grid", path.display());
                }
            }
            Ok((operator, Some(embedded)))
        }
        MaybeBundled::Bare(op) => Ok((op, grid.cloned())),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn to_stdout<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    println!("{text}");
    Ok(())
}

/// Configuration from an optional JSON file; missing keys keep their defaults.
pub fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => read_json(p),
        None => Ok(Config::default()),
    }
}
