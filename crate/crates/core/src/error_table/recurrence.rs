use std::collections::BTreeMap;

use serde::Serialize;

use crate::feature_space::Atom;

use super::{ErrorTable, TableError};

/// Largest column subset mined for recurrent combinations.
pub const MAX_SUBSET: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnFrequencies {
    pub column: String,
    /// Values present in the column, most frequent first.
    pub values: Vec<(Atom, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Combination {
    /// (column, value) pairs in column order.
    pub items: Vec<(String, Atom)>,
    pub support: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrenceReport {
    pub threshold: f64,
    pub columns: Vec<ColumnFrequencies>,
    /// Every combination over at most three columns whose support reaches
    /// the threshold; highest support first.
    pub combinations: Vec<Combination>,
}

fn subsets(m: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(start: usize, m: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for c in start..m {
            cur.push(c);
            out.push(cur.clone());
            if cur.len() < max {
                rec(c + 1, m, max, cur, out);
            }
            cur.pop();
        }
    }
    rec(0, m, max, &mut Vec::new(), &mut out);
    out
}

pub(super) fn analyze(table: &ErrorTable, threshold: f64) -> Result<RecurrenceReport, TableError> {
    let leaves = table.space.unordered();
    if leaves.is_empty() {
        return Err(TableError::NoUnorderedColumns);
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(TableError::InvalidThreshold(threshold));
    }
    let n = table.rows.len();
    if n == 0 {
        return Err(TableError::EmptyTable);
    }
    let index = |j: usize, a: &Atom| leaves[j].index_of(a).expect("row values belong to their leaf");

    let columns = leaves
        .iter()
        .enumerate()
        .map(|(j, leaf)| {
            let mut counts = vec![0usize; leaf.values.len()];
            for r in &table.rows {
                counts[index(j, &r.atoms[j])] += 1;
            }
            let mut values: Vec<(usize, usize)> = counts.into_iter().enumerate().filter(|c| c.1 > 0).collect();
            values.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            ColumnFrequencies {
                column: leaf.path.clone(),
                values: values
                    .into_iter()
                    .map(|(k, c)| (leaf.values[k].clone(), c as f64 / n as f64))
                    .collect(),
            }
        })
        .collect();

    // (subset rank, value indices) -> count; the rank keeps the output order
    // deterministic.
    let all = subsets(leaves.len(), MAX_SUBSET);
    let mut found: Vec<(usize, Vec<usize>, usize)> = Vec::new();
    for (rank, cols) in all.iter().enumerate() {
        let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for r in &table.rows {
            let key = cols.iter().map(|&j| index(j, &r.atoms[j])).collect();
            *counts.entry(key).or_default() += 1;
        }
        for (key, c) in counts {
            if c as f64 / n as f64 >= threshold {
                found.push((rank, key, c));
            }
        }
    }
    found.sort_by(|a, b| {
        b.2.cmp(&a.2)
            .then(all[a.0].len().cmp(&all[b.0].len()))
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    let combinations = found
        .into_iter()
        .map(|(rank, key, c)| Combination {
            items: all[rank]
                .iter()
                .zip(key)
                .map(|(&j, k)| (leaves[j].path.clone(), leaves[j].values[k].clone()))
                .collect(),
            support: c as f64 / n as f64,
        })
        .collect();
    Ok(RecurrenceReport {
        threshold,
        columns,
        combinations,
    })
}
