use std::path::Path;
use std::sync::Arc;

use crate::feature_space::{Atom, FeatureSpace};

use super::{ErrorTable, TableError};

/// Reals are written with 17 significant digits so they read back exactly.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn format_atom(a: &Atom) -> String {
    match a {
        Atom::Num(v) => format_real(*v),
        Atom::Str(s) => s.clone(),
    }
}

fn header(space: &FeatureSpace) -> Vec<String> {
    let (ordered, unordered) = space.dimensions();
    let mut h = vec!["run_id".to_string(), "score".to_string()];
    h.extend(ordered);
    h.extend(unordered);
    h
}

fn write<W: std::io::Write>(table: &ErrorTable, w: W) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header(&table.space))?;
    for r in &table.rows {
        let mut rec = vec![r.run_id.to_string(), format_real(r.score)];
        rec.extend(r.reals.iter().map(|&v| format_real(v)));
        rec.extend(r.atoms.iter().map(format_atom));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub(super) fn to_string(table: &ErrorTable) -> Result<String, TableError> {
    let mut buf = Vec::new();
    write(table, &mut buf).map_err(|e| TableError::Io {
        path: "<memory>".into(),
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

pub(super) fn export(table: &ErrorTable, path: &Path) -> Result<(), TableError> {
    let io = |e: &dyn std::fmt::Display| TableError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let file = std::fs::File::create(path).map_err(|e| io(&e))?;
    write(table, file).map_err(|e| io(&e))
}

pub(super) fn import(space: Arc<FeatureSpace>, path: &Path) -> Result<ErrorTable, TableError> {
    let io = |e: &dyn std::fmt::Display| TableError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| io(&e))?;
    let expected = header(&space);
    let got: Vec<String> = reader.headers().map_err(|e| io(&e))?.iter().map(String::from).collect();
    if got != expected {
        let missing: Vec<&String> = expected.iter().filter(|c| !got.contains(c)).collect();
        let extra: Vec<&String> = got.iter().filter(|c| !expected.contains(c)).collect();
        let detail = if let Some(m) = missing.first() {
            format!("missing column `{m}`")
        } else if let Some(x) = extra.first() {
            format!("unexpected column `{x}`")
        } else {
            "columns out of order".to_string()
        };
        return Err(TableError::SchemaMismatch(detail));
    }

    let n_ord = space.ordered().len();
    let mut table = ErrorTable::new(space.clone());
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| io(&e))?;
        let bad = |what: &str| TableError::SchemaMismatch(format!("data row {}: {what}", line + 1));
        let real = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("`{s}` is not a number")));
        let run_id: u64 = rec[0].parse().map_err(|_| bad("run_id is not an integer"))?;
        let score = real(&rec[1])?;
        let reals = (0..n_ord).map(|i| real(&rec[2 + i])).collect::<Result<Vec<_>, _>>()?;
        let atoms = space
            .unordered()
            .iter()
            .enumerate()
            .map(|(j, leaf)| {
                let cell = &rec[2 + n_ord + j];
                leaf.values
                    .iter()
                    .find(|a| format_atom(a) == cell)
                    .cloned()
                    .ok_or_else(|| bad(&format!("`{cell}` is not a value of `{}`", leaf.path)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let point = space.unflatten(&reals, &atoms)?;
        table.insert(&point, score, run_id)?;
    }
    Ok(table)
}
