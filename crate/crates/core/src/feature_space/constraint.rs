use serde::{Deserialize, Serialize};

use super::{Atom, FeatureSpace, LeafRef, Point, SpaceError};

/// Arithmetic over numeric (box-dimension) leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Const(f64),
    Ref(String),
    Add(Vec<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
}

/// Declarative predicate over a [`Point`]. Used to condition the prior by
/// rejection.
///
/// JSON form mirrors the constructors, e.g.
/// `{"lt": [{"ref": "pos.0"}, {"ref": "pos.1"}]}` or `{"is": ["color", "red"]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    Lt(Expr, Expr),
    Le(Expr, Expr),
    Eq(Expr, Expr),
    Is(String, Atom),
    And(Vec<Constraint>),
    Or(Vec<Constraint>),
    Not(Box<Constraint>),
}

impl Expr {
    pub(crate) fn validate(&self, space: &FeatureSpace) -> Result<(), SpaceError> {
        match self {
            Expr::Const(c) if !c.is_finite() => Err(SpaceError::InvalidConstraint(format!(
                "non-finite constant {c}"
            ))),
            Expr::Const(_) => Ok(()),
            Expr::Ref(path) => match space.leaf(path) {
                Some(LeafRef::Ordered(_)) => Ok(()),
                Some(LeafRef::Unordered(_)) => Err(SpaceError::InvalidConstraint(format!(
                    "arithmetic over finite-set leaf `{path}`"
                ))),
                None => Err(SpaceError::DanglingPath(path.clone())),
            },
            Expr::Add(terms) => terms.iter().try_for_each(|t| t.validate(space)),
            Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.validate(space)?;
                b.validate(space)
            }
            Expr::Neg(a) => a.validate(space),
        }
    }

    pub fn eval(&self, point: &Point) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Ref(path) => point.real(path).unwrap_or(f64::NAN),
            Expr::Add(terms) => terms.iter().map(|t| t.eval(point)).sum(),
            Expr::Sub(a, b) => a.eval(point) - b.eval(point),
            Expr::Mul(a, b) => a.eval(point) * b.eval(point),
            Expr::Neg(a) => -a.eval(point),
        }
    }
}

impl Constraint {
    pub(crate) fn validate(&self, space: &FeatureSpace) -> Result<(), SpaceError> {
        match self {
            Constraint::Lt(a, b) | Constraint::Le(a, b) | Constraint::Eq(a, b) => {
                a.validate(space)?;
                b.validate(space)
            }
            Constraint::Is(path, atom) => match space.leaf(path) {
                Some(LeafRef::Unordered(j)) => {
                    if space.unordered()[j].values.contains(atom) {
                        Ok(())
                    } else {
                        Err(SpaceError::InvalidConstraint(format!(
                            "`{atom}` is not a member of `{path}`"
                        )))
                    }
                }
                Some(LeafRef::Ordered(_)) => Err(SpaceError::InvalidConstraint(format!(
                    "membership test on box dimension `{path}`"
                ))),
                None => Err(SpaceError::DanglingPath(path.clone())),
            },
            Constraint::And(cs) | Constraint::Or(cs) => cs.iter().try_for_each(|c| c.validate(space)),
            Constraint::Not(c) => c.validate(space),
        }
    }

    pub fn holds(&self, point: &Point) -> bool {
        match self {
            Constraint::Lt(a, b) => a.eval(point) < b.eval(point),
            Constraint::Le(a, b) => a.eval(point) <= b.eval(point),
            Constraint::Eq(a, b) => a.eval(point) == b.eval(point),
            Constraint::Is(path, atom) => point.atom(path) == Some(atom),
            Constraint::And(cs) => cs.iter().all(|c| c.holds(point)),
            Constraint::Or(cs) => cs.iter().any(|c| c.holds(point)),
            Constraint::Not(c) => !c.holds(point),
        }
    }
}
