//! File formats: the record CSV and the JSON-lines augmentation
//! manifest (schema_version 1).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LabelCombination, RecordTable};
use crate::plan::{AugOp, AugmentationPlan, AugmentationRecipe, PlanEntry};

/// Parse a record CSV: header `record_id,<class_1>,...,<class_K>`, body
/// cells in {0,1}. Errors cite the offending line (and column).
pub fn read_records(path: &Path) -> Result<RecordTable> {
    let file = File::open(path)
        .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?;
    read_records_from(BufReader::new(file))
}

pub fn read_records_from<R: Read>(reader: R) -> Result<RecordTable> {
    let mut lines = BufReader::new(reader).lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => return Err(Error::Format("missing header at line 1".into())),
    };
    let mut fields = header.split(',');
    match fields.next() {
        Some("record_id") => {}
        _ => {
            return Err(Error::Format(
                "line 1: header must start with 'record_id'".into(),
            ))
        }
    }
    let class_names: Vec<String> = fields.map(str::to_string).collect();
    if class_names.is_empty() || class_names.iter().any(|n| n.is_empty()) {
        return Err(Error::Format(
            "line 1: header needs at least one non-empty class column".into(),
        ));
    }
    let k = class_names.len();

    let mut rows = Vec::new();
    let mut first_line_of: HashMap<String, usize> = HashMap::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != k + 1 {
            return Err(Error::Format(format!(
                "line {line_no}: expected {} cells, found {}",
                k + 1,
                cells.len()
            )));
        }
        let id = cells[0];
        if let Some(&prev) = first_line_of.get(id) {
            return Err(Error::Format(format!(
                "duplicate record_id '{id}' at lines {prev} and {line_no}"
            )));
        }
        first_line_of.insert(id.to_string(), line_no);
        let mut bits = Vec::with_capacity(k);
        for (col, cell) in cells[1..].iter().enumerate() {
            match *cell {
                "0" => bits.push(0),
                "1" => bits.push(1),
                other => {
                    return Err(Error::Format(format!(
                        "line {line_no}, column '{}': cell must be 0 or 1, got '{other}'",
                        class_names[col]
                    )))
                }
            }
        }
        rows.push((id.to_string(), LabelCombination::new(bits)?));
    }
    if rows.is_empty() {
        return Err(Error::Input("no data rows after the header".into()));
    }
    RecordTable::new(class_names, rows)
}

/// Write a record table in the same CSV layout read_records accepts.
pub fn write_records(table: &RecordTable, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "record_id")?;
    for name in table.class_names() {
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    for (id, labels) in table.rows() {
        write!(w, "{id}")?;
        for bit in labels.bits() {
            write!(w, ",{bit}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
struct ManifestHeader {
    schema_version: u32,
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
struct ManifestLine {
    record_id: String,
    copy_index: u64,
    ops: Vec<String>,
}

/// One JSON object per line: a schema/seed header, then entries sorted
/// by (record_id, copy_index). UTF-8, LF line endings.
pub fn write_manifest(plan: &AugmentationPlan, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_manifest_to(plan, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_manifest_to<W: Write>(plan: &AugmentationPlan, w: &mut W) -> Result<()> {
    let header = ManifestHeader {
        schema_version: 1,
        seed: plan.seed,
    };
    writeln!(w, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    // expand_plan already sorts entries by (record_id, copy_index).
    for entry in &plan.entries {
        let line = ManifestLine {
            record_id: entry.record_id.clone(),
            copy_index: entry.copy_index,
            ops: entry.recipe.ops.iter().map(|op| op.name().to_string()).collect(),
        };
        writeln!(w, "{}", serde_json::to_string(&line).expect("entry serializes"))?;
    }
    Ok(())
}

/// Parse a manifest back into (seed, entries). Recipes come back with
/// variant_index 0; the manifest does not carry it.
pub fn read_manifest(path: &Path) -> Result<(u64, Vec<PlanEntry>)> {
    let file = File::open(path)
        .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?;
    let mut lines = BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Format("manifest is empty".into()))??;
    let header: ManifestHeader = serde_json::from_str(&header_line)
        .map_err(|e| Error::Format(format!("line 1: bad manifest header: {e}")))?;
    if header.schema_version != 1 {
        return Err(Error::Format(format!(
            "unsupported manifest schema_version {}",
            header.schema_version
        )));
    }
    let mut entries = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let parsed: ManifestLine = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("line {}: {e}", idx + 2)))?;
        let ops = parsed
            .ops
            .iter()
            .map(|name| AugOp::from_name(name))
            .collect::<Result<Vec<_>>>()?;
        entries.push(PlanEntry {
            record_id: parsed.record_id,
            copy_index: parsed.copy_index,
            recipe: AugmentationRecipe {
                ops,
                variant_index: 0,
            },
        });
    }
    Ok((header.seed, entries))
}
