use std::fmt::{self, Write as _};

use thiserror::Error;

/// Handle to a variable inside one [`LpProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Handle to a constraint row inside one [`LpProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub(crate) usize);

impl RowId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` violates this row; zero when satisfied.
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("variable `{name}` has inverted bounds [{lower}, {upper}]")]
    InvertedBounds {
        name: String,
        lower: f64,
        upper: f64,
    },
    #[error("variable `{name}` has an invalid bound or cost (NaN or wrong-signed infinity)")]
    InvalidNumber { name: String },
    #[error("constraint `{row}` references unknown variable id {index}")]
    UnknownVariable { row: String, index: usize },
    #[error("constraint `{row}` has a non-finite coefficient or right-hand side")]
    NonFiniteRow { row: String },
}

/// A minimization LP with simple variable bounds and sparse rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpProblem {
    vars: Vec<Variable>,
    rows: Vec<Constraint>,
}

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable with bounds `[lower, upper]` and objective coefficient `cost`.
    ///
    /// `lower` may be `-inf` and `upper` may be `+inf`; a fixed variable
    /// (`lower == upper`) is accepted.
    pub fn add_variable(
        &mut self,
        lower: f64,
        upper: f64,
        cost: f64,
        name: impl Into<String>,
    ) -> Result<VarId, LpError> {
        let name = name.into();
        if lower.is_nan()
            || upper.is_nan()
            || !cost.is_finite()
            || lower == f64::INFINITY
            || upper == f64::NEG_INFINITY
        {
            return Err(LpError::InvalidNumber { name });
        }
        if lower > upper {
            return Err(LpError::InvertedBounds { name, lower, upper });
        }
        self.vars.push(Variable {
            name,
            lower,
            upper,
            cost,
        });
        Ok(VarId(self.vars.len() - 1))
    }

    /// Adds a row `sum(terms) <sense> rhs`. Repeated variables are merged
    /// into one coefficient, keeping first-occurrence order.
    pub fn add_constraint(
        &mut self,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        sense: Sense,
        rhs: f64,
        name: impl Into<String>,
    ) -> Result<RowId, LpError> {
        let name = name.into();
        if !rhs.is_finite() {
            return Err(LpError::NonFiniteRow { row: name });
        }
        let mut merged: Vec<(VarId, f64)> = Vec::new();
        for (id, coef) in terms {
            if id.0 >= self.vars.len() {
                return Err(LpError::UnknownVariable {
                    row: name,
                    index: id.0,
                });
            }
            if !coef.is_finite() {
                return Err(LpError::NonFiniteRow { row: name });
            }
            match merged.iter_mut().find(|(v, _)| *v == id) {
                Some(entry) => entry.1 += coef,
                None => merged.push((id, coef)),
            }
        }
        self.rows.push(Constraint {
            name,
            terms: merged,
            sense,
            rhs,
        });
        Ok(RowId(self.rows.len() - 1))
    }

    pub fn set_cost(&mut self, id: VarId, cost: f64) {
        self.vars[id.0].cost = cost;
    }

    pub fn num_variables(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn constraint(&self, id: RowId) -> &Constraint {
        &self.rows[id.0]
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.rows
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.vars.iter().zip(values).map(|(v, x)| v.cost * x).sum()
    }

    /// Largest bound or row violation of `values`, recomputed from the
    /// stored coefficients.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let bounds = self
            .vars
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0));
        let rows = self.rows.iter().map(|r| r.violation(values));
        bounds.chain(rows).fold(0.0, f64::max)
    }

    /// Renders the problem in CPLEX LP text format for cross-checking with
    /// third-party solvers.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::from("Minimize\n obj:");
        let names: Vec<String> = self.vars.iter().map(|v| sanitize(&v.name)).collect();
        let mut any = false;
        for (v, name) in self.vars.iter().zip(&names) {
            if v.cost != 0.0 {
                push_term(&mut out, v.cost, name);
                any = true;
            }
        }
        if !any {
            out.push_str(" 0");
        }
        out.push_str("\nSubject To\n");
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(out, " c{}_{}:", i, sanitize(&row.name));
            if row.terms.is_empty() {
                out.push_str(" 0");
            }
            for &(id, a) in &row.terms {
                push_term(&mut out, a, &names[id.0]);
            }
            let _ = writeln!(out, " {} {}", row.sense, row.rhs);
        }
        out.push_str("Bounds\n");
        for (v, name) in self.vars.iter().zip(&names) {
            match (v.lower.is_finite(), v.upper.is_finite()) {
                (true, true) if v.lower == v.upper => {
                    let _ = writeln!(out, " {} = {}", name, v.lower);
                }
                (true, true) => {
                    let _ = writeln!(out, " {} <= {} <= {}", v.lower, name, v.upper);
                }
                (true, false) => {
                    let _ = writeln!(out, " {} >= {}", name, v.lower);
                }
                (false, true) => {
                    let _ = writeln!(out, " -inf <= {} <= {}", name, v.upper);
                }
                (false, false) => {
                    let _ = writeln!(out, " {} free", name);
                }
            }
        }
        out.push_str("End\n");
        out
    }
}

fn push_term(out: &mut String, coef: f64, name: &str) {
    if coef < 0.0 {
        let _ = write!(out, " - {} {}", -coef, name);
    } else {
        let _ = write!(out, " + {} {}", coef, name);
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
