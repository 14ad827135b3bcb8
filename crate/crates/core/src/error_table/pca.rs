use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::feature_space::{pick_weighted, Point, SpaceError};

use super::{ErrorTable, TableError};

/// Principal components of the ordered columns after dividing each column
/// by its leaf width.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaReport {
    pub columns: Vec<String>,
    /// Per-column divisor applied before the analysis.
    pub scales: Vec<f64>,
    /// Column means in original units.
    pub mean: Vec<f64>,
    /// One principal direction per row, in standardized coordinates.
    pub components: Vec<Vec<f64>>,
    /// Non-increasing, non-negative.
    pub explained_variance: Vec<f64>,
}

fn scale_of(width: f64) -> f64 {
    if width > 0.0 {
        width
    } else {
        1.0
    }
}

pub(super) fn analyze(table: &ErrorTable) -> Result<PcaReport, TableError> {
    let leaves = table.space.ordered();
    if leaves.is_empty() {
        return Err(TableError::NoOrderedColumns);
    }
    let n = table.rows.len();
    if n < 2 {
        return Err(TableError::InsufficientRows { need: 2, got: n });
    }
    let d = leaves.len();
    let scales: Vec<f64> = leaves.iter().map(|l| scale_of(l.width())).collect();

    // Offsetting by the first row keeps the mean of identical rows exact.
    let first = &table.rows[0].reals;
    let mean: Vec<f64> = (0..d)
        .map(|i| first[i] + table.rows.iter().map(|r| r.reals[i] - first[i]).sum::<f64>() / n as f64)
        .collect();
    let z = DMatrix::from_fn(n, d, |r, i| (table.rows[r].reals[i] - mean[i]) / scales[i]);
    let cov = (z.transpose() * &z) / (n as f64 - 1.0);

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut components = Vec::with_capacity(d);
    let mut explained_variance = Vec::with_capacity(d);
    for &k in &order {
        let mut c: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        // Sign convention: the largest-magnitude entry is positive.
        let pivot = c
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if c[pivot] < 0.0 {
            c.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(c);
        explained_variance.push(eig.eigenvalues[k].max(0.0));
    }
    Ok(PcaReport {
        columns: table.ordered_columns(),
        scales,
        mean,
        components,
        explained_variance,
    })
}

pub(super) fn generate<R: Rng + ?Sized>(
    table: &ErrorTable,
    n: usize,
    scale: f64,
    rng: &mut R,
) -> Result<Vec<Point>, TableError> {
    let report = analyze(table)?;
    let space = &table.space;
    let freq: Vec<Vec<f64>> = space
        .unordered()
        .iter()
        .enumerate()
        .map(|(j, leaf)| {
            let mut w = vec![0.0; leaf.values.len()];
            for r in &table.rows {
                if let Some(k) = leaf.index_of(&r.atoms[j]) {
                    w[k] += 1.0;
                }
            }
            w
        })
        .collect();
    let d = report.mean.len();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut accepted = None;
        for _ in 0..space.max_rejections() {
            let mut offset = vec![0.0; d];
            for (c, &var) in report.components.iter().zip(&report.explained_variance) {
                let g: f64 = rng.sample(StandardNormal);
                let step = g * scale * var.sqrt();
                for i in 0..d {
                    offset[i] += step * c[i];
                }
            }
            let reals: Vec<f64> = (0..d).map(|i| report.mean[i] + report.scales[i] * offset[i]).collect();
            let atoms: Vec<usize> = freq.iter().map(|w| pick_weighted(w, rng.random::<f64>())).collect();
            let p = space.assemble(&reals, &atoms);
            if space.satisfies_constraints(&p) {
                accepted = Some(p);
                break;
            }
        }
        out.push(accepted.ok_or(SpaceError::RejectionBudgetExhausted(space.max_rejections()))?);
    }
    Ok(out)
}
