//! Hierarchical abstract feature spaces.
//!
//! A space is built from boxes and finite sets combined into structs and
//! arrays. Every scalar coordinate of a box and every finite set is a *leaf*
//! addressed by a dot-separated path (`cars.2.heading.0`). Leaves carry a
//! prior distribution; declarative constraints condition that prior by
//! rejection.

mod constraint;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use indexmap::IndexMap;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use constraint::{Constraint, Expr};

/// Consecutive rejections tolerated before a space is declared over-constrained.
pub const DEFAULT_MAX_REJECTIONS: usize = 10_000;
/// Draw budget for truncating a normal to its leaf bounds.
pub const TRUNCATED_NORMAL_BUDGET: usize = 10_000;

/// Path used for a finite set placed directly at the root.
pub const ROOT_PATH: &str = "root";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("path `{0}` does not name a leaf of the space")]
    DanglingPath(String),
    #[error("invalid distribution for `{path}`: {reason}")]
    InvalidDistribution { path: String, reason: String },
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("point does not belong to the space: {0}")]
    PointSpaceMismatch(String),
    #[error("value {value} out of range for `{path}`")]
    OutOfRange { path: String, value: String },
    #[error("expected {expected} {what}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("rejection budget exhausted after {0} consecutive rejections")]
    RejectionBudgetExhausted(usize),
}

/// Element of a finite set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Atom {
    Num(f64),
    Str(String),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Num(v) => write!(f, "{v}"),
            Atom::Str(s) => f.write_str(s),
        }
    }
}

impl From<&str> for Atom {
    fn from(s: &str) -> Self {
        Atom::Str(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    #[serde(rename = "set")]
    FiniteSet(Vec<Atom>),
    Struct(IndexMap<String, Domain>),
    Array {
        element: std::boxed::Box<Domain>,
        length: usize,
    },
}

impl Domain {
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Domain::Box { lo, hi }
    }

    pub fn set<I, A>(values: I) -> Self
    where
        I: IntoIterator<Item = A>,
        A: Into<Atom>,
    {
        Domain::FiniteSet(values.into_iter().map(Into::into).collect())
    }

    pub fn structure<I, S>(fields: I) -> Self
    where
        I: IntoIterator<Item = (S, Domain)>,
        S: Into<String>,
    {
        Domain::Struct(fields.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn array(element: Domain, length: usize) -> Self {
        Domain::Array {
            element: std::boxed::Box::new(element),
            length,
        }
    }

    fn validate(&self, at: &[String]) -> Result<(), SpaceError> {
        let here = || render_path(at);
        match self {
            Domain::Box { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return Err(SpaceError::InvalidDomain(format!(
                        "box at `{}` has {} lower and {} upper bounds",
                        here(),
                        lo.len(),
                        hi.len()
                    )));
                }
                for (i, (l, h)) in lo.iter().zip(hi).enumerate() {
                    if !l.is_finite() || !h.is_finite() || l >= h {
                        return Err(SpaceError::InvalidDomain(format!(
                            "box at `{}` dimension {i}: need finite lo < hi, got [{l}, {h}]",
                            here()
                        )));
                    }
                }
                Ok(())
            }
            Domain::FiniteSet(values) => {
                if values.is_empty() {
                    return Err(SpaceError::InvalidDomain(format!(
                        "empty finite set at `{}`",
                        here()
                    )));
                }
                for (i, v) in values.iter().enumerate() {
                    if let Atom::Num(x) = v {
                        if !x.is_finite() {
                            return Err(SpaceError::InvalidDomain(format!(
                                "non-finite atom in set at `{}`",
                                here()
                            )));
                        }
                    }
                    if values[..i].contains(v) {
                        return Err(SpaceError::InvalidDomain(format!(
                            "duplicate atom `{v}` in set at `{}`",
                            here()
                        )));
                    }
                }
                Ok(())
            }
            Domain::Struct(fields) => {
                if fields.is_empty() {
                    return Err(SpaceError::InvalidDomain(format!(
                        "struct at `{}` has no fields",
                        here()
                    )));
                }
                for (name, dom) in fields {
                    if name.is_empty() || name.contains('.') || name.parse::<usize>().is_ok() {
                        return Err(SpaceError::InvalidDomain(format!(
                            "bad field name `{name}` at `{}`",
                            here()
                        )));
                    }
                    let mut sub = at.to_vec();
                    sub.push(name.clone());
                    dom.validate(&sub)?;
                }
                Ok(())
            }
            Domain::Array { element, length } => {
                if *length == 0 {
                    return Err(SpaceError::InvalidDomain(format!(
                        "array at `{}` has length 0",
                        here()
                    )));
                }
                let mut sub = at.to_vec();
                sub.push("0".into());
                element.validate(&sub)
            }
        }
    }

    fn collect_leaves(
        &self,
        at: &mut Vec<String>,
        ordered: &mut Vec<OrderedLeaf>,
        unordered: &mut Vec<UnorderedLeaf>,
    ) {
        match self {
            Domain::Box { lo, hi } => {
                for (i, (l, h)) in lo.iter().zip(hi).enumerate() {
                    at.push(i.to_string());
                    ordered.push(OrderedLeaf {
                        path: render_path(at),
                        lo: *l,
                        hi: *h,
                        dist: RealDist::Uniform,
                    });
                    at.pop();
                }
            }
            Domain::FiniteSet(values) => unordered.push(UnorderedLeaf {
                path: render_path(at),
                values: values.clone(),
                weights: vec![1.0; values.len()],
            }),
            Domain::Struct(fields) => {
                for (name, dom) in fields {
                    at.push(name.clone());
                    dom.collect_leaves(at, ordered, unordered);
                    at.pop();
                }
            }
            Domain::Array { element, length } => {
                for i in 0..*length {
                    at.push(i.to_string());
                    element.collect_leaves(at, ordered, unordered);
                    at.pop();
                }
            }
        }
    }

    /// Deterministic textual form of the domain tree. Reals use 17
    /// significant digits so distinct bounds never collide.
    pub fn canonical_form(&self) -> String {
        let mut out = String::new();
        self.write_canonical(&mut out);
        out
    }

    fn write_canonical(&self, out: &mut String) {
        use fmt::Write;
        match self {
            Domain::Box { lo, hi } => {
                out.push_str("box(");
                for (i, (l, h)) in lo.iter().zip(hi).enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    let _ = write!(out, "[{l:.16e},{h:.16e}]");
                }
                out.push(')');
            }
            Domain::FiniteSet(values) => {
                out.push_str("set(");
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    match v {
                        Atom::Num(x) => {
                            let _ = write!(out, "{x:.16e}");
                        }
                        Atom::Str(s) => {
                            let _ = write!(out, "{s:?}");
                        }
                    }
                }
                out.push(')');
            }
            Domain::Struct(fields) => {
                out.push_str("struct(");
                for (i, (name, dom)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    let _ = write!(out, "{name:?}:");
                    dom.write_canonical(out);
                }
                out.push(')');
            }
            Domain::Array { element, length } => {
                let _ = write!(out, "array({length},");
                element.write_canonical(out);
                out.push(')');
            }
        }
    }
}

fn render_path(segments: &[String]) -> String {
    if segments.is_empty() {
        ROOT_PATH.to_string()
    } else {
        segments.join(".")
    }
}

/// Per-leaf prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Uniform,
    TruncatedNormal { mean: f64, stddev: f64 },
    Categorical { weights: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RealDist {
    Uniform,
    TruncatedNormal { mean: f64, stddev: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderedLeaf {
    pub path: String,
    pub lo: f64,
    pub hi: f64,
    pub dist: RealDist,
}

impl OrderedLeaf {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn clip(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnorderedLeaf {
    pub path: String,
    pub values: Vec<Atom>,
    /// Unnormalized, non-negative, at least one positive.
    pub weights: Vec<f64>,
}

impl UnorderedLeaf {
    pub fn index_of(&self, atom: &Atom) -> Option<usize> {
        self.values.iter().position(|v| v == atom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafRef {
    Ordered(usize),
    Unordered(usize),
}

/// Serializable description of a space: the domain tree plus priors and
/// constraints. This is the `space` section of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDocument {
    pub domain: Domain,
    #[serde(default)]
    pub distributions: BTreeMap<String, DistributionSpec>,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
    #[serde(default = "default_max_rejections")]
    pub max_rejections: usize,
}

fn default_max_rejections() -> usize {
    DEFAULT_MAX_REJECTIONS
}

impl SpaceDocument {
    pub fn build(&self) -> Result<FeatureSpace, SpaceError> {
        let mut space = FeatureSpace::build(
            self.domain.clone(),
            self.distributions.clone(),
            self.constraints.clone(),
        )?;
        space.max_rejections = self.max_rejections.max(1);
        Ok(space)
    }
}

/// A validated, immutable feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpace {
    root: Domain,
    ordered: Vec<OrderedLeaf>,
    unordered: Vec<UnorderedLeaf>,
    index: HashMap<String, LeafRef>,
    constraints: Vec<Constraint>,
    max_rejections: usize,
}

impl FeatureSpace {
    pub fn build(
        root: Domain,
        distributions: BTreeMap<String, DistributionSpec>,
        constraints: Vec<Constraint>,
    ) -> Result<Self, SpaceError> {
        root.validate(&[])?;
        let mut ordered = Vec::new();
        let mut unordered = Vec::new();
        root.collect_leaves(&mut Vec::new(), &mut ordered, &mut unordered);

        let mut index = HashMap::new();
        for (i, leaf) in ordered.iter().enumerate() {
            index.insert(leaf.path.clone(), LeafRef::Ordered(i));
        }
        for (j, leaf) in unordered.iter().enumerate() {
            index.insert(leaf.path.clone(), LeafRef::Unordered(j));
        }

        let mut space = FeatureSpace {
            root,
            ordered,
            unordered,
            index,
            constraints: Vec::new(),
            max_rejections: DEFAULT_MAX_REJECTIONS,
        };

        for (path, spec) in distributions {
            space.install_distribution(&path, spec)?;
        }
        for c in &constraints {
            c.validate(&space)?;
        }
        space.constraints = constraints;
        Ok(space)
    }

    /// Space with no distributions or constraints.
    pub fn uniform(root: Domain) -> Result<Self, SpaceError> {
        Self::build(root, BTreeMap::new(), Vec::new())
    }

    pub fn with_max_rejections(mut self, n: usize) -> Self {
        self.max_rejections = n.max(1);
        self
    }

    fn install_distribution(&mut self, path: &str, spec: DistributionSpec) -> Result<(), SpaceError> {
        let bad = |reason: &str| SpaceError::InvalidDistribution {
            path: path.to_string(),
            reason: reason.to_string(),
        };
        match (self.leaf(path), spec) {
            (None, _) => Err(SpaceError::DanglingPath(path.to_string())),
            (Some(LeafRef::Ordered(i)), DistributionSpec::Uniform) => {
                self.ordered[i].dist = RealDist::Uniform;
                Ok(())
            }
            (Some(LeafRef::Ordered(i)), DistributionSpec::TruncatedNormal { mean, stddev }) => {
                if !mean.is_finite() || !stddev.is_finite() || stddev <= 0.0 {
                    return Err(bad("truncated normal needs finite mean and stddev > 0"));
                }
                self.ordered[i].dist = RealDist::TruncatedNormal { mean, stddev };
                Ok(())
            }
            (Some(LeafRef::Ordered(_)), DistributionSpec::Categorical { .. }) => {
                Err(bad("categorical distribution on a box dimension"))
            }
            (Some(LeafRef::Unordered(j)), DistributionSpec::Uniform) => {
                let n = self.unordered[j].values.len();
                self.unordered[j].weights = vec![1.0; n];
                Ok(())
            }
            (Some(LeafRef::Unordered(j)), DistributionSpec::Categorical { weights }) => {
                if weights.len() != self.unordered[j].values.len() {
                    return Err(bad("weight count differs from set size"));
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(bad("weights must be finite and non-negative"));
                }
                if !weights.iter().any(|w| *w > 0.0) {
                    return Err(bad("at least one weight must be positive"));
                }
                self.unordered[j].weights = weights;
                Ok(())
            }
            (Some(LeafRef::Unordered(_)), DistributionSpec::TruncatedNormal { .. }) => {
                Err(bad("truncated normal on a finite set"))
            }
        }
    }

    pub fn root(&self) -> &Domain {
        &self.root
    }

    pub fn ordered(&self) -> &[OrderedLeaf] {
        &self.ordered
    }

    pub fn unordered(&self) -> &[UnorderedLeaf] {
        &self.unordered
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn max_rejections(&self) -> usize {
        self.max_rejections
    }

    pub fn leaf(&self, path: &str) -> Option<LeafRef> {
        self.index.get(path).copied()
    }

    /// Leaf paths split into ordered (box dimensions) and unordered (finite
    /// sets), both in depth-first declaration order.
    pub fn dimensions(&self) -> (Vec<String>, Vec<String>) {
        (
            self.ordered.iter().map(|l| l.path.clone()).collect(),
            self.unordered.iter().map(|l| l.path.clone()).collect(),
        )
    }

    pub fn satisfies_constraints(&self, point: &Point) -> bool {
        self.constraints.iter().all(|c| c.holds(point))
    }

    /// Checks that `point` assigns exactly this space's leaves, in range.
    pub fn check_point(&self, point: &Point) -> Result<(), SpaceError> {
        if point.values.len() != self.index.len() {
            return Err(SpaceError::PointSpaceMismatch(format!(
                "point has {} assignments, space has {} leaves",
                point.values.len(),
                self.index.len()
            )));
        }
        for leaf in &self.ordered {
            match point.values.get(&leaf.path) {
                Some(Value::Real(v)) if leaf.contains(*v) => {}
                Some(Value::Real(v)) => {
                    return Err(SpaceError::PointSpaceMismatch(format!(
                        "`{}` = {v} outside [{}, {}]",
                        leaf.path, leaf.lo, leaf.hi
                    )))
                }
                _ => {
                    return Err(SpaceError::PointSpaceMismatch(format!(
                        "missing real value for `{}`",
                        leaf.path
                    )))
                }
            }
        }
        for leaf in &self.unordered {
            match point.values.get(&leaf.path) {
                Some(Value::Atom(a)) if leaf.values.contains(a) => {}
                _ => {
                    return Err(SpaceError::PointSpaceMismatch(format!(
                        "missing or foreign atom for `{}`",
                        leaf.path
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn flatten(&self, point: &Point) -> Result<(Vec<f64>, Vec<Atom>), SpaceError> {
        self.check_point(point)?;
        let reals = self
            .ordered
            .iter()
            .map(|l| point.real(&l.path).expect("checked"))
            .collect();
        let atoms = self
            .unordered
            .iter()
            .map(|l| point.atom(&l.path).expect("checked").clone())
            .collect();
        Ok((reals, atoms))
    }

    pub fn unflatten(&self, reals: &[f64], atoms: &[Atom]) -> Result<Point, SpaceError> {
        if reals.len() != self.ordered.len() {
            return Err(SpaceError::LengthMismatch {
                what: "reals",
                expected: self.ordered.len(),
                got: reals.len(),
            });
        }
        if atoms.len() != self.unordered.len() {
            return Err(SpaceError::LengthMismatch {
                what: "atoms",
                expected: self.unordered.len(),
                got: atoms.len(),
            });
        }
        let mut values = BTreeMap::new();
        for (leaf, &v) in self.ordered.iter().zip(reals) {
            if !leaf.contains(v) {
                return Err(SpaceError::OutOfRange {
                    path: leaf.path.clone(),
                    value: v.to_string(),
                });
            }
            values.insert(leaf.path.clone(), Value::Real(v));
        }
        for (leaf, a) in self.unordered.iter().zip(atoms) {
            if !leaf.values.contains(a) {
                return Err(SpaceError::OutOfRange {
                    path: leaf.path.clone(),
                    value: a.to_string(),
                });
            }
            values.insert(leaf.path.clone(), Value::Atom(a.clone()));
        }
        Ok(Point { values })
    }

    /// Builds a point from reals and per-set value indices. Panics on
    /// out-of-range indices; callers draw them from the leaf itself.
    pub(crate) fn assemble(&self, reals: &[f64], atom_idx: &[usize]) -> Point {
        let mut values = BTreeMap::new();
        for (leaf, &v) in self.ordered.iter().zip(reals) {
            values.insert(leaf.path.clone(), Value::Real(leaf.clip(v)));
        }
        for (leaf, &k) in self.unordered.iter().zip(atom_idx) {
            values.insert(leaf.path.clone(), Value::Atom(leaf.values[k].clone()));
        }
        Point { values }
    }

    /// Reads a point from loosely typed JSON assignments (numbers for box
    /// dimensions, strings or numbers for set members).
    pub fn point_from_json(
        &self,
        map: &serde_json::Map<String, serde_json::Value>,
    ) -> Result<Point, SpaceError> {
        let mut reals = Vec::with_capacity(self.ordered.len());
        for leaf in &self.ordered {
            let v = map
                .get(&leaf.path)
                .and_then(|v| v.as_f64())
                .ok_or_else(|| SpaceError::PointSpaceMismatch(format!("missing `{}`", leaf.path)))?;
            reals.push(v);
        }
        let mut atoms = Vec::with_capacity(self.unordered.len());
        for leaf in &self.unordered {
            let atom = match map.get(&leaf.path) {
                Some(serde_json::Value::String(s)) => Atom::Str(s.clone()),
                Some(serde_json::Value::Number(n)) => Atom::Num(n.as_f64().unwrap_or(f64::NAN)),
                _ => {
                    return Err(SpaceError::PointSpaceMismatch(format!(
                        "missing `{}`",
                        leaf.path
                    )))
                }
            };
            atoms.push(atom);
        }
        if map.len() != self.index.len() {
            return Err(SpaceError::PointSpaceMismatch(
                "assignments name paths outside the space".into(),
            ));
        }
        self.unflatten(&reals, &atoms)
    }

    pub(crate) fn draw_real<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> Result<f64, SpaceError> {
        let leaf = &self.ordered[i];
        match leaf.dist {
            RealDist::Uniform => Ok(leaf.lo + leaf.width() * rng.random::<f64>()),
            RealDist::TruncatedNormal { mean, stddev } => {
                let normal = Normal::new(mean, stddev).expect("validated stddev");
                for _ in 0..TRUNCATED_NORMAL_BUDGET {
                    let v = normal.sample(rng);
                    if leaf.contains(v) {
                        return Ok(v);
                    }
                }
                Err(SpaceError::RejectionBudgetExhausted(TRUNCATED_NORMAL_BUDGET))
            }
        }
    }

    pub(crate) fn draw_atom_index<R: Rng + ?Sized>(&self, j: usize, rng: &mut R) -> usize {
        pick_weighted(&self.unordered[j].weights, rng.random::<f64>())
    }

    /// One unconditioned draw from the product of leaf priors.
    pub(crate) fn draw_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Vec<f64>, Vec<usize>), SpaceError> {
        let reals = (0..self.ordered.len())
            .map(|i| self.draw_real(i, rng))
            .collect::<Result<Vec<_>, _>>()?;
        let atoms = (0..self.unordered.len())
            .map(|j| self.draw_atom_index(j, rng))
            .collect();
        Ok((reals, atoms))
    }

    /// Draws from the prior conditioned on every constraint.
    pub fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point, SpaceError> {
        self.sample_with(rng, |space, rng| {
            let (reals, atoms) = space.draw_raw(rng)?;
            Ok(space.assemble(&reals, &atoms))
        })
    }

    /// Repeats `propose` until the proposal satisfies the constraints or the
    /// rejection budget runs out.
    pub(crate) fn sample_with<R, F>(&self, rng: &mut R, mut propose: F) -> Result<Point, SpaceError>
    where
        R: Rng + ?Sized,
        F: FnMut(&Self, &mut R) -> Result<Point, SpaceError>,
    {
        for _ in 0..self.max_rejections {
            let p = propose(self, rng)?;
            if self.satisfies_constraints(&p) {
                return Ok(p);
            }
        }
        Err(SpaceError::RejectionBudgetExhausted(self.max_rejections))
    }
}

/// Maps `u` in [0, 1) through the CDF of the (unnormalized) weights.
/// Zero-weight entries are never selected.
pub fn pick_weighted(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last_positive = k;
        if target < acc {
            return k;
        }
    }
    last_positive
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Real(f64),
    Atom(Atom),
}

/// Concrete assignment to every leaf of a space.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct Point {
    values: BTreeMap<String, Value>,
}

impl Point {
    pub fn get(&self, path: &str) -> Option<&Value> {
        self.values.get(path)
    }

    pub fn real(&self, path: &str) -> Option<f64> {
        match self.values.get(path) {
            Some(Value::Real(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn atom(&self, path: &str) -> Option<&Atom> {
        match self.values.get(path) {
            Some(Value::Atom(a)) => Some(a),
            _ => None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.values.iter()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Unchecked construction; validate with [`FeatureSpace::check_point`].
    pub fn from_values(values: BTreeMap<String, Value>) -> Self {
        Point { values }
    }

    pub fn without(&self, path: &str) -> Self {
        let mut values = self.values.clone();
        values.remove(path);
        Point { values }
    }
}
