//! Bounded metric temporal logic over sampled traces.
//!
//! Formulas are evaluated pointwise on the trace samples (no interpolation).
//! Quantitative semantics return a robustness value whose sign agrees with
//! the Boolean verdict whenever it is non-zero.

mod monitor;
mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use monitor::{robustness, robustness_signal, satisfies, satisfaction_signal};
pub use parser::{parse_formula, ParseError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("trace has no samples")]
    Empty,
    #[error("signal `{signal}` has {got} samples, expected {expected}")]
    LengthMismatch {
        signal: String,
        expected: usize,
        got: usize,
    },
    #[error("times not strictly increasing at index {0}")]
    NonIncreasingTimes(usize),
    #[error("non-finite value in `{signal}` at index {index}")]
    NonFinite { signal: String, index: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonitorError {
    #[error("formula references unknown signal `{0}`")]
    UnknownSignal(String),
    #[error("trace has no samples")]
    EmptyTrace,
    #[error("index {index} out of range for trace of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
}

/// Time-stamped multi-signal trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    times: Vec<f64>,
    signals: BTreeMap<String, Vec<f64>>,
}

impl Trace {
    pub fn new(times: Vec<f64>, signals: BTreeMap<String, Vec<f64>>) -> Result<Self, TraceError> {
        if times.is_empty() {
            return Err(TraceError::Empty);
        }
        for (i, t) in times.iter().enumerate() {
            if !t.is_finite() {
                return Err(TraceError::NonFinite {
                    signal: "time".into(),
                    index: i,
                });
            }
            if i > 0 && *t <= times[i - 1] {
                return Err(TraceError::NonIncreasingTimes(i));
            }
        }
        for (name, values) in &signals {
            if values.len() != times.len() {
                return Err(TraceError::LengthMismatch {
                    signal: name.clone(),
                    expected: times.len(),
                    got: values.len(),
                });
            }
            if let Some(index) = values.iter().position(|v| !v.is_finite()) {
                return Err(TraceError::NonFinite {
                    signal: name.clone(),
                    index,
                });
            }
        }
        Ok(Trace { times, signals })
    }

    /// Convenience for traces sampled every `dt` seconds from t = 0.
    pub fn uniform<I, S>(dt: f64, signals: I) -> Result<Self, TraceError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let signals: BTreeMap<String, Vec<f64>> =
            signals.into_iter().map(|(k, v)| (k.into(), v)).collect();
        let len = signals.values().map(Vec::len).next().unwrap_or(0);
        let times = (0..len).map(|k| k as f64 * dt).collect();
        Trace::new(times, signals)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn signal(&self, name: &str) -> Option<&[f64]> {
        self.signals.get(name).map(Vec::as_slice)
    }

    pub fn signals(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.signals
    }

    pub fn into_parts(self) -> (Vec<f64>, BTreeMap<String, Vec<f64>>) {
        (self.times, self.signals)
    }
}

/// `constant + Σ coefficient · signal`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Affine {
    pub terms: BTreeMap<String, f64>,
    pub constant: f64,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Affine {
            terms: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn signal(name: &str) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(name.to_string(), 1.0);
        Affine { terms, constant: 0.0 }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(mut self, k: f64) -> Self {
        self.constant *= k;
        for c in self.terms.values_mut() {
            *c *= k;
        }
        self.terms.retain(|_, c| *c != 0.0);
        self
    }

    pub fn add(mut self, other: &Affine, sign: f64) -> Self {
        self.constant += sign * other.constant;
        for (name, c) in &other.terms {
            *self.terms.entry(name.clone()).or_insert(0.0) += sign * c;
        }
        self.terms.retain(|_, c| *c != 0.0);
        self
    }

    /// Evaluates at sample `i`. Terms are accumulated onto the constant in
    /// name order.
    pub(crate) fn eval_at(&self, columns: &[&[f64]], i: usize) -> f64 {
        let mut acc = self.constant;
        for (coef, col) in self.terms.values().zip(columns) {
            acc += coef * col[i];
        }
        acc
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.constant)?;
        for (name, c) in &self.terms {
            write!(f, " + {c:?} * {name}")?;
        }
        Ok(())
    }
}

/// Closed time window `[lo, hi]` in seconds; `hi` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const UNBOUNDED: Interval = Interval {
        lo: 0.0,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Option<Self> {
        (lo >= 0.0 && lo <= hi && !lo.is_nan() && lo.is_finite()).then_some(Interval { lo, hi })
    }

    pub fn contains(&self, dt: f64) -> bool {
        dt >= self.lo && dt <= self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.hi.is_infinite() {
            write!(f, "[{:?},inf]", self.lo)
        } else {
            write!(f, "[{:?},{:?}]", self.lo, self.hi)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    /// `expr > 0` when strict, `expr >= 0` otherwise. Robustness is `expr`
    /// either way; strictness only decides the Boolean verdict at zero.
    Atom { expr: Affine, strict: bool },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Globally(Interval, Box<Formula>),
    Eventually(Interval, Box<Formula>),
    Until(Interval, Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(expr: Affine) -> Self {
        Formula::Atom { expr, strict: true }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn globally(i: Interval, f: Formula) -> Self {
        Formula::Globally(i, Box::new(f))
    }

    pub fn eventually(i: Interval, f: Formula) -> Self {
        Formula::Eventually(i, Box::new(f))
    }

    pub fn until(i: Interval, a: Formula, b: Formula) -> Self {
        Formula::Until(i, Box::new(a), Box::new(b))
    }

    pub fn signals(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_signals(&mut out);
        out
    }

    fn collect_signals(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom { expr, .. } => out.extend(expr.terms.keys().cloned()),
            Formula::Not(a) | Formula::Globally(_, a) | Formula::Eventually(_, a) => {
                a.collect_signals(out)
            }
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Until(_, a, b) => {
                a.collect_signals(out);
                b.collect_signals(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom { .. } => 0,
            Formula::Not(a) | Formula::Globally(_, a) | Formula::Eventually(_, a) => 1 + a.depth(),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Until(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }
}

/// Fully parenthesized form accepted back by [`parse_formula`].
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom { expr, strict } => {
                write!(f, "({expr} {} 0)", if *strict { ">" } else { ">=" })
            }
            Formula::Not(a) => write!(f, "!{a}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::Globally(i, a) => write!(f, "G{i} {a}"),
            Formula::Eventually(i, a) => write!(f, "F{i} {a}"),
            Formula::Until(i, a, b) => write!(f, "({a} U{i} {b})"),
        }
    }
}
