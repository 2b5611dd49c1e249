//! Spatial hierarchy maps as delimited text: a tower id column followed by
//! one zone column per level, finest to coarsest, named in the header.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::model::SpatialHierarchy;

/// Parses and validates a tower-to-zones map. The header names the levels;
/// every data row maps one tower to its zone at each level.
pub fn parse_spatial_map<R: Read>(reader: R) -> Result<SpatialHierarchy> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    if headers.len() < 2 {
        return Err(Error::Parse {
            line: 1,
            message: "header needs a tower column and at least one level".into(),
        });
    }
    let levels: Vec<String> = headers.iter().skip(1).map(|h| h.trim().to_string()).collect();

    let mut rows = Vec::new();
    for row in csv_reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != headers.len() {
            return Err(Error::Parse {
                line,
                message: format!(
                    "expected {} fields, found {}",
                    headers.len(),
                    row.len()
                ),
            });
        }
        let tower = row.get(0).unwrap_or("").trim().to_string();
        let zones: Vec<String> = row.iter().skip(1).map(|z| z.trim().to_string()).collect();
        rows.push((tower, zones));
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("hierarchy map has no rows"));
    }
    SpatialHierarchy::from_rows(levels, &rows)
}

/// Writes the map back out, towers ascending.
pub fn write_spatial_map<W: Write>(writer: W, hierarchy: &SpatialHierarchy) -> Result<()> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    let mut header = vec!["tower_id"];
    header.extend(hierarchy.levels().iter().map(String::as_str));
    csv_writer.write_record(&header)?;
    for tower in hierarchy.towers() {
        let mut row = vec![tower.to_string()];
        for level in hierarchy.levels() {
            row.push(hierarchy.zone(tower, level).expect("total mapping").to_string());
        }
        csv_writer.write_record(&row)?;
    }
    csv_writer.flush()?;
    Ok(())
}
