//! Bottom-up evaluation: every subformula becomes a signal over the trace
//! samples. Temporal windows are contiguous index ranges whose ends only move
//! forward, so `G`/`F` use a monotone deque.

use std::collections::VecDeque;

use super::{Affine, Formula, Interval, MonitorError, Trace};

/// Quantitative semantics at sample `t_index`.
pub fn robustness(formula: &Formula, trace: &Trace, t_index: usize) -> Result<f64, MonitorError> {
    check_index(trace, t_index)?;
    Ok(robustness_signal(formula, trace)?[t_index])
}

/// Boolean semantics at sample `t_index`, computed directly.
pub fn satisfies(formula: &Formula, trace: &Trace, t_index: usize) -> Result<bool, MonitorError> {
    check_index(trace, t_index)?;
    Ok(satisfaction_signal(formula, trace)?[t_index])
}

fn check_index(trace: &Trace, t_index: usize) -> Result<(), MonitorError> {
    if trace.is_empty() {
        return Err(MonitorError::EmptyTrace);
    }
    if t_index >= trace.len() {
        return Err(MonitorError::IndexOutOfRange {
            index: t_index,
            len: trace.len(),
        });
    }
    Ok(())
}

fn columns<'t>(expr: &Affine, trace: &'t Trace) -> Result<Vec<&'t [f64]>, MonitorError> {
    expr.terms
        .keys()
        .map(|name| {
            trace
                .signal(name)
                .ok_or_else(|| MonitorError::UnknownSignal(name.clone()))
        })
        .collect()
}

/// Robustness at every sample.
pub fn robustness_signal(formula: &Formula, trace: &Trace) -> Result<Vec<f64>, MonitorError> {
    let n = trace.len();
    Ok(match formula {
        Formula::Atom { expr, .. } => {
            let cols = columns(expr, trace)?;
            (0..n).map(|i| expr.eval_at(&cols, i)).collect()
        }
        Formula::Not(a) => robustness_signal(a, trace)?.into_iter().map(|v| -v).collect(),
        Formula::And(a, b) => zip_with(robustness_signal(a, trace)?, robustness_signal(b, trace)?, f64::min),
        Formula::Or(a, b) => zip_with(robustness_signal(a, trace)?, robustness_signal(b, trace)?, f64::max),
        Formula::Implies(a, b) => zip_with(robustness_signal(a, trace)?, robustness_signal(b, trace)?, |x, y| {
            (-x).max(y)
        }),
        Formula::Globally(iv, a) => {
            let inner = robustness_signal(a, trace)?;
            sliding(&inner, &windows(trace.times(), *iv), true)
        }
        Formula::Eventually(iv, a) => {
            let inner = robustness_signal(a, trace)?;
            sliding(&inner, &windows(trace.times(), *iv), false)
        }
        Formula::Until(iv, a, b) => {
            let lhs = robustness_signal(a, trace)?;
            let rhs = robustness_signal(b, trace)?;
            let win = windows(trace.times(), *iv);
            (0..n)
                .map(|i| {
                    let Some((lo, hi)) = win[i] else {
                        return f64::NEG_INFINITY;
                    };
                    let mut best = f64::NEG_INFINITY;
                    let mut prefix = f64::INFINITY;
                    for j in i..=hi {
                        if j >= lo {
                            best = best.max(rhs[j].min(prefix));
                        }
                        prefix = prefix.min(lhs[j]);
                    }
                    best
                })
                .collect()
        }
    })
}

/// Boolean verdict at every sample.
pub fn satisfaction_signal(formula: &Formula, trace: &Trace) -> Result<Vec<bool>, MonitorError> {
    let n = trace.len();
    Ok(match formula {
        Formula::Atom { expr, strict } => {
            let cols = columns(expr, trace)?;
            (0..n)
                .map(|i| {
                    let v = expr.eval_at(&cols, i);
                    if *strict {
                        v > 0.0
                    } else {
                        v >= 0.0
                    }
                })
                .collect()
        }
        Formula::Not(a) => satisfaction_signal(a, trace)?.into_iter().map(|v| !v).collect(),
        Formula::And(a, b) => zip_with(satisfaction_signal(a, trace)?, satisfaction_signal(b, trace)?, |x, y| x && y),
        Formula::Or(a, b) => zip_with(satisfaction_signal(a, trace)?, satisfaction_signal(b, trace)?, |x, y| x || y),
        Formula::Implies(a, b) => zip_with(satisfaction_signal(a, trace)?, satisfaction_signal(b, trace)?, |x, y| {
            !x || y
        }),
        Formula::Globally(iv, a) => {
            let inner = satisfaction_signal(a, trace)?;
            windows(trace.times(), *iv)
                .iter()
                .map(|w| w.is_none_or(|(lo, hi)| inner[lo..=hi].iter().all(|&v| v)))
                .collect()
        }
        Formula::Eventually(iv, a) => {
            let inner = satisfaction_signal(a, trace)?;
            windows(trace.times(), *iv)
                .iter()
                .map(|w| w.is_some_and(|(lo, hi)| inner[lo..=hi].iter().any(|&v| v)))
                .collect()
        }
        Formula::Until(iv, a, b) => {
            let lhs = satisfaction_signal(a, trace)?;
            let rhs = satisfaction_signal(b, trace)?;
            let win = windows(trace.times(), *iv);
            (0..n)
                .map(|i| {
                    let Some((lo, hi)) = win[i] else {
                        return false;
                    };
                    for j in i..=hi {
                        if j >= lo && rhs[j] {
                            return true;
                        }
                        if !lhs[j] {
                            return false;
                        }
                    }
                    false
                })
                .collect()
        }
    })
}

fn zip_with<T: Copy>(a: Vec<T>, b: Vec<T>, f: impl Fn(T, T) -> T) -> Vec<T> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

/// For each sample i, the inclusive index range of samples j with
/// `times[j] - times[i]` in the interval, or `None` when empty.
fn windows(times: &[f64], iv: Interval) -> Vec<Option<(usize, usize)>> {
    let n = times.len();
    let mut out = Vec::with_capacity(n);
    let mut lo = 0;
    let mut hi = 0;
    for i in 0..n {
        lo = lo.max(i);
        while lo < n && times[lo] - times[i] < iv.lo {
            lo += 1;
        }
        hi = hi.max(i);
        while hi + 1 < n && times[hi + 1] - times[i] <= iv.hi {
            hi += 1;
        }
        let hi_ok = times[hi] - times[i] <= iv.hi;
        out.push((lo < n && hi_ok && lo <= hi).then_some((lo, hi)));
    }
    out
}

/// Sliding min (or max) over forward-moving windows; empty windows give the
/// identity of the operation (+inf for min, -inf for max).
fn sliding(values: &[f64], windows: &[Option<(usize, usize)>], take_min: bool) -> Vec<f64> {
    let better = |a: f64, b: f64| if take_min { a <= b } else { a >= b };
    let empty = if take_min { f64::INFINITY } else { f64::NEG_INFINITY };
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut pushed = 0;
    windows
        .iter()
        .map(|w| {
            let Some((lo, hi)) = *w else {
                return empty;
            };
            while pushed <= hi {
                while deque.back().is_some_and(|&k| better(values[pushed], values[k])) {
                    deque.pop_back();
                }
                deque.push_back(pushed);
                pushed += 1;
            }
            while deque.front().is_some_and(|&k| k < lo) {
                deque.pop_front();
            }
            values[*deque.front().expect("window non-empty")]
        })
        .collect()
}
