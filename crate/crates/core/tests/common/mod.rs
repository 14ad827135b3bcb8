//! Independent reference implementations used by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use falsify_kit::mtl::{Affine, Formula, Interval, Trace};
use rand::Rng;

pub fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

// ---------------------------------------------------------------- MTL

fn atom_value(expr: &Affine, trace: &Trace, i: usize) -> f64 {
    let mut acc = expr.constant;
    for (name, coef) in &expr.terms {
        acc += coef * trace.signal(name).expect("signal present")[i];
    }
    acc
}

fn in_window(trace: &Trace, iv: &Interval, i: usize, j: usize) -> bool {
    let dt = trace.times()[j] - trace.times()[i];
    dt >= iv.lo && dt <= iv.hi
}

/// Robustness by direct recursion on the definition.
pub fn brute_robustness(f: &Formula, trace: &Trace, i: usize) -> f64 {
    let n = trace.len();
    match f {
        Formula::Atom { expr, .. } => atom_value(expr, trace, i),
        Formula::Not(a) => -brute_robustness(a, trace, i),
        Formula::And(a, b) => brute_robustness(a, trace, i).min(brute_robustness(b, trace, i)),
        Formula::Or(a, b) => brute_robustness(a, trace, i).max(brute_robustness(b, trace, i)),
        Formula::Implies(a, b) => (-brute_robustness(a, trace, i)).max(brute_robustness(b, trace, i)),
        Formula::Globally(iv, a) => {
            let mut v = f64::INFINITY;
            for j in i..n {
                if in_window(trace, iv, i, j) {
                    v = v.min(brute_robustness(a, trace, j));
                }
            }
            v
        }
        Formula::Eventually(iv, a) => {
            let mut v = f64::NEG_INFINITY;
            for j in i..n {
                if in_window(trace, iv, i, j) {
                    v = v.max(brute_robustness(a, trace, j));
                }
            }
            v
        }
        Formula::Until(iv, a, b) => {
            let mut v = f64::NEG_INFINITY;
            for j in i..n {
                if !in_window(trace, iv, i, j) {
                    continue;
                }
                let mut hold = brute_robustness(b, trace, j);
                for k in i..j {
                    hold = hold.min(brute_robustness(a, trace, k));
                }
                v = v.max(hold);
            }
            v
        }
    }
}

pub fn brute_satisfies(f: &Formula, trace: &Trace, i: usize) -> bool {
    let n = trace.len();
    match f {
        Formula::Atom { expr, strict } => {
            let v = atom_value(expr, trace, i);
            if *strict {
                v > 0.0
            } else {
                v >= 0.0
            }
        }
        Formula::Not(a) => !brute_satisfies(a, trace, i),
        Formula::And(a, b) => brute_satisfies(a, trace, i) && brute_satisfies(b, trace, i),
        Formula::Or(a, b) => brute_satisfies(a, trace, i) || brute_satisfies(b, trace, i),
        Formula::Implies(a, b) => !brute_satisfies(a, trace, i) || brute_satisfies(b, trace, i),
        Formula::Globally(iv, a) => (i..n)
            .filter(|&j| in_window(trace, iv, i, j))
            .all(|j| brute_satisfies(a, trace, j)),
        Formula::Eventually(iv, a) => (i..n)
            .filter(|&j| in_window(trace, iv, i, j))
            .any(|j| brute_satisfies(a, trace, j)),
        Formula::Until(iv, a, b) => (i..n).filter(|&j| in_window(trace, iv, i, j)).any(|j| {
            brute_satisfies(b, trace, j) && (i..j).all(|k| brute_satisfies(a, trace, k))
        }),
    }
}

pub const SIGNALS: [&str; 3] = ["x", "y", "z"];

fn random_interval<R: Rng>(rng: &mut R) -> Interval {
    let lo = [0.0, 0.0, 0.5, 1.0, 2.0, 3.5][rng.random_range(0..6)];
    let hi = match rng.random_range(0..5) {
        0 => lo,
        1 => lo + 1.0,
        2 => lo + 2.5,
        3 => lo + 6.0,
        _ => f64::INFINITY,
    };
    Interval::new(lo, hi).unwrap()
}

fn random_atom<R: Rng>(rng: &mut R) -> Formula {
    let coefs = [1.0, -1.0, 0.5, 2.0, -0.25];
    let mut expr = Affine::constant([0.0, 1.0, -0.5, 2.25][rng.random_range(0..4)]);
    for _ in 0..rng.random_range(1..=2) {
        let name = SIGNALS[rng.random_range(0..3)];
        let coef = coefs[rng.random_range(0..coefs.len())];
        expr = expr.add(&Affine::signal(name).scale(coef), 1.0);
    }
    Formula::Atom {
        expr,
        strict: rng.random_bool(0.5),
    }
}

/// Random formula of depth at most `depth`.
pub fn random_formula<R: Rng>(rng: &mut R, depth: usize) -> Formula {
    if depth == 0 || rng.random_bool(0.2) {
        return random_atom(rng);
    }
    let d = depth - 1;
    match rng.random_range(0..8) {
        0 => Formula::not(random_formula(rng, d)),
        1 => Formula::and(random_formula(rng, d), random_formula(rng, d)),
        2 => Formula::or(random_formula(rng, d), random_formula(rng, d)),
        3 => Formula::implies(random_formula(rng, d), random_formula(rng, d)),
        4 => Formula::globally(random_interval(rng), random_formula(rng, d)),
        5 => Formula::eventually(random_interval(rng), random_formula(rng, d)),
        _ => Formula::until(random_interval(rng), random_formula(rng, d), random_formula(rng, d)),
    }
}

/// Random trace of 1..=max_len samples over x, y, z. Values sit on a
/// quarter grid so ties and zero robustness come up often; time steps vary.
pub fn random_trace<R: Rng>(rng: &mut R, max_len: usize) -> Trace {
    let n = rng.random_range(1..=max_len);
    let mut t = 0.0;
    let mut times = Vec::with_capacity(n);
    for _ in 0..n {
        times.push(t);
        t += [0.5, 1.0, 1.0, 1.5][rng.random_range(0..4)];
    }
    let signals: BTreeMap<String, Vec<f64>> = SIGNALS
        .iter()
        .map(|s| {
            let v = (0..n).map(|_| rng.random_range(-12..=12) as f64 * 0.25).collect();
            (s.to_string(), v)
        })
        .collect();
    Trace::new(times, signals).unwrap()
}

// ---------------------------------------------------------------- Halton

/// Radical inverse from the explicit digit expansion of `k`.
pub fn radical_inverse_digits(k: u64, b: u64) -> f64 {
    let mut digits = Vec::new();
    let mut m = k;
    while m > 0 {
        digits.push(m % b);
        m /= b;
    }
    // 0.d0 d1 d2 ... in base b equals (d0 b^{n-1} + ... + d_{n-1}) / b^n.
    let mut num = 0u64;
    for &d in &digits {
        num = num * b + d;
    }
    let den = b.pow(digits.len() as u32);
    num as f64 / den as f64
}

// ---------------------------------------------------------------- linear algebra

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns
/// eigenvalues (descending) and unit eigenvectors as rows.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[y][y].total_cmp(&m[x][x]));
    let values = order.iter().map(|&k| m[k][k]).collect();
    let vectors = order.iter().map(|&k| (0..n).map(|i| v[i][k]).collect()).collect();
    (values, vectors)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, pivot);
        for r in col + 1..n {
            let factor = m[r][col] / m[col][col];
            for c in col..=n {
                m[r][c] -= factor * m[col][c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    x
}

fn kernel(a: &[f64], b: &[f64], ls: &[f64]) -> f64 {
    let mut r2 = 0.0;
    for k in 0..a.len() {
        let d = (a[k] - b[k]) / ls[k];
        r2 += d * d;
    }
    (-0.5 * r2).exp()
}

/// Posterior mean and variance of a zero-mean, unit-variance GP on targets
/// divided by their root-mean-square, solved densely.
pub fn dense_gp_predict(inputs: &[Vec<f64>], targets: &[f64], ls: &[f64], jitter: f64, x: &[f64]) -> (f64, f64) {
    let n = inputs.len();
    let rms = (targets.iter().map(|t| t * t).sum::<f64>() / n as f64).sqrt();
    let scale = if rms > 0.0 { rms } else { 1.0 };
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| kernel(&inputs[i], &inputs[j], ls) + if i == j { jitter } else { 0.0 }).collect())
        .collect();
    let y: Vec<f64> = targets.iter().map(|t| t / scale).collect();
    let kx: Vec<f64> = inputs.iter().map(|xi| kernel(xi, x, ls)).collect();
    let alpha = solve_dense(&k, &y);
    let w = solve_dense(&k, &kx);
    let mean: f64 = kx.iter().zip(&alpha).map(|(a, b)| a * b).sum();
    let var = 1.0 - kx.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
    (mean * scale, var.max(0.0) * scale * scale)
}

/// Minimum of `f` over `n` equally spaced points of `[lo, hi]`.
pub fn grid_minimum(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .map(|x| (x, f(x)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
