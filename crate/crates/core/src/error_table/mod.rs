//! Counterexample store with offline analyses: PCA over ordered columns,
//! recurrent values over unordered ones, and row selection for augmentation.

mod csv_io;
mod pca;
mod recurrence;

use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;
use thiserror::Error;

use crate::feature_space::{Atom, FeatureSpace, Point, SpaceError};

pub use csv_io::{format_atom, format_real};
pub use pca::PcaReport;
pub use recurrence::{ColumnFrequencies, Combination, RecurrenceReport};

#[derive(Debug, Error)]
pub enum TableError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("run id {0} is already in the table")]
    DuplicateRunId(u64),
    #[error("score {0} is not finite")]
    NonFiniteScore(f64),
    #[error("need at least {need} rows, table has {got}")]
    InsufficientRows { need: usize, got: usize },
    #[error("the space has no ordered leaves")]
    NoOrderedColumns,
    #[error("the space has no unordered leaves")]
    NoUnorderedColumns,
    #[error("the table is empty")]
    EmptyTable,
    #[error("support threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("table does not match the space: {0}")]
    SchemaMismatch(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub run_id: u64,
    pub score: f64,
    pub reals: Vec<f64>,
    pub atoms: Vec<Atom>,
}

/// Rows are counterexamples, columns are the leaves of the space.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    space: Arc<FeatureSpace>,
    rows: Vec<Row>,
    run_ids: HashSet<u64>,
}

impl ErrorTable {
    pub fn new(space: Arc<FeatureSpace>) -> Self {
        ErrorTable {
            space,
            rows: Vec::new(),
            run_ids: HashSet::new(),
        }
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn ordered_columns(&self) -> Vec<String> {
        self.space.ordered().iter().map(|l| l.path.clone()).collect()
    }

    pub fn unordered_columns(&self) -> Vec<String> {
        self.space.unordered().iter().map(|l| l.path.clone()).collect()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn insert(&mut self, point: &Point, score: f64, run_id: u64) -> Result<(), TableError> {
        if !score.is_finite() {
            return Err(TableError::NonFiniteScore(score));
        }
        if self.run_ids.contains(&run_id) {
            return Err(TableError::DuplicateRunId(run_id));
        }
        let (reals, atoms) = self.space.flatten(point)?;
        self.run_ids.insert(run_id);
        self.rows.push(Row {
            run_id,
            score,
            reals,
            atoms,
        });
        Ok(())
    }

    /// Point stored in `row`.
    pub fn point(&self, row: &Row) -> Point {
        self.space
            .unflatten(&row.reals, &row.atoms)
            .expect("rows are flattened points of this space")
    }

    pub fn pca_analyze(&self) -> Result<PcaReport, TableError> {
        pca::analyze(self)
    }

    pub fn recurrent_values(&self, support_threshold: f64) -> Result<RecurrenceReport, TableError> {
        recurrence::analyze(self, support_threshold)
    }

    /// `k` rows uniformly without replacement, in draw order.
    pub fn select_random<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<Vec<&Row>, TableError> {
        if self.rows.is_empty() {
            return Err(TableError::EmptyTable);
        }
        let k = k.min(self.rows.len());
        Ok(sample(rng, self.rows.len(), k).iter().map(|i| &self.rows[i]).collect())
    }

    /// Distance used by [`ErrorTable::select_k_closest`]: Euclidean over
    /// width-normalized ordered coordinates plus one per differing
    /// unordered value.
    pub fn distance(&self, reals: &[f64], atoms: &[Atom], row: &Row) -> f64 {
        let sq: f64 = self
            .space
            .ordered()
            .iter()
            .zip(reals.iter().zip(&row.reals))
            .map(|(leaf, (a, b))| {
                let w = if leaf.width() > 0.0 { leaf.width() } else { 1.0 };
                ((a - b) / w).powi(2)
            })
            .sum();
        let hamming = atoms.iter().zip(&row.atoms).filter(|(a, b)| a != b).count();
        sq.sqrt() + hamming as f64
    }

    /// The `k` rows nearest `anchor`, nearest first; ties go to the lower
    /// run id.
    pub fn select_k_closest(&self, anchor: &Point, k: usize) -> Result<Vec<(&Row, f64)>, TableError> {
        if self.rows.is_empty() {
            return Err(TableError::EmptyTable);
        }
        let (reals, atoms) = self.space.flatten(anchor)?;
        let mut scored: Vec<(&Row, f64)> = self
            .rows
            .iter()
            .map(|r| (r, self.distance(&reals, &atoms, r)))
            .collect();
        scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.run_id.cmp(&b.0.run_id)));
        scored.truncate(k);
        Ok(scored)
    }

    /// New points around the table mean, jittered along the principal
    /// directions with stddev `scale·√variance`. Ordered values are clipped
    /// to their leaf bounds; unordered values follow the table's empirical
    /// frequencies; declarative constraints are enforced by rejection.
    pub fn generate_pca_samples<R: Rng + ?Sized>(
        &self,
        n: usize,
        scale: f64,
        rng: &mut R,
    ) -> Result<Vec<Point>, TableError> {
        pca::generate(self, n, scale, rng)
    }

    pub fn export_csv(&self, path: &std::path::Path) -> Result<(), TableError> {
        csv_io::export(self, path)
    }

    pub fn to_csv_string(&self) -> Result<String, TableError> {
        csv_io::to_string(self)
    }

    pub fn import_csv(space: Arc<FeatureSpace>, path: &std::path::Path) -> Result<Self, TableError> {
        csv_io::import(space, path)
    }
}
