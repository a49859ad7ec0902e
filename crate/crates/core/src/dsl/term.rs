//! Schematic term model and rendering.

use std::fmt;

use num_traits::One;

use crate::monomial::WeightMonomial;
use crate::rational::{fmt_q, Q};

/// The global commutation count.
pub const GLOBAL: &str = "i";

/// A derivative count or power: a literal, or a symbolic index plus offset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Idx {
    Lit(u32),
    Var { name: String, off: i32 },
}

impl Idx {
    pub fn var(name: &str, off: i32) -> Idx {
        Idx::Var {
            name: name.to_string(),
            off,
        }
    }

    pub fn zero() -> Idx {
        Idx::Lit(0)
    }

    pub fn is_zero(&self) -> bool {
        *self == Idx::Lit(0)
    }

    pub fn var_name(&self) -> Option<&str> {
        match self {
            Idx::Var { name, .. } => Some(name),
            Idx::Lit(_) => None,
        }
    }

    pub fn shifted(&self, by: i32) -> Idx {
        match self {
            Idx::Lit(n) => Idx::Lit((*n as i32 + by).max(0) as u32),
            Idx::Var { name, off } => Idx::Var {
                name: name.clone(),
                off: off + by,
            },
        }
    }

    /// Value under an assignment of symbolic indices.
    pub fn eval(&self, lookup: &dyn Fn(&str) -> i64) -> i64 {
        match self {
            Idx::Lit(n) => *n as i64,
            Idx::Var { name, off } => lookup(name) + *off as i64,
        }
    }
}

impl fmt::Display for Idx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Idx::Lit(n) => write!(f, "{n}"),
            Idx::Var { name, off } if *off == 0 => write!(f, "{name}"),
            Idx::Var { name, off } if *off > 0 => write!(f, "{name}+{off}"),
            Idx::Var { name, off } => write!(f, "{name}{off}"),
        }
    }
}

/// A factor `∇^{deriv} (class)^{power}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Factor {
    /// One name, or several for an alternative set.
    pub class: Vec<String>,
    pub deriv: Idx,
    pub power: Idx,
}

impl Factor {
    pub fn new(name: &str) -> Factor {
        Factor {
            class: vec![name.to_string()],
            deriv: Idx::zero(),
            power: Idx::Lit(1),
        }
    }

    pub fn alt(names: &[&str]) -> Factor {
        Factor {
            class: names.iter().map(|s| s.to_string()).collect(),
            deriv: Idx::zero(),
            power: Idx::Lit(1),
        }
    }

    pub fn with_deriv(mut self, d: Idx) -> Factor {
        self.deriv = d;
        self
    }

    pub fn with_power(mut self, p: Idx) -> Factor {
        self.power = p;
        self
    }

    pub fn is_alt(&self) -> bool {
        self.class.len() > 1
    }

    pub fn class_label(&self) -> String {
        if self.is_alt() {
            format!("({})", self.class.join(", "))
        } else {
            self.class[0].clone()
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.deriv {
            Idx::Lit(0) => {}
            Idx::Lit(1) => write!(f, "nab ")?,
            d => write!(f, "nab^{{{d}}} ")?,
        }
        write!(f, "{}", self.class_label())?;
        if self.power != Idx::Lit(1) {
            write!(f, "^{{{}}}", self.power)?;
        }
        Ok(())
    }
}

/// Right-hand side of an index constraint: `i + off` or a literal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Total {
    Sym(i32),
    Lit(i64),
}

impl Total {
    pub fn value(&self, i: i64) -> i64 {
        match self {
            Total::Sym(off) => i + *off as i64,
            Total::Lit(n) => *n,
        }
    }
}

impl fmt::Display for Total {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Total::Sym(0) => write!(f, "{GLOBAL}"),
            Total::Sym(o) if *o > 0 => write!(f, "{GLOBAL}+{o}"),
            Total::Sym(o) => write!(f, "{GLOBAL}{o}"),
            Total::Lit(n) => write!(f, "{n}"),
        }
    }
}

/// `Σ vars = total`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub vars: Vec<String>,
    pub total: Total,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.vars.join("+"), self.total)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SchematicTerm {
    /// Numerical constant; dropped by normalization.
    pub scalar: Q,
    pub coeff: WeightMonomial,
    pub factors: Vec<Factor>,
    pub constraint: Option<Constraint>,
}

impl SchematicTerm {
    pub fn product(factors: Vec<Factor>) -> SchematicTerm {
        SchematicTerm {
            scalar: Q::one(),
            coeff: WeightMonomial::one(),
            factors,
            constraint: None,
        }
    }

    pub fn single(name: &str) -> SchematicTerm {
        Self::product(vec![Factor::new(name)])
    }

    pub fn with_constraint(mut self, vars: &[&str], total: Total) -> SchematicTerm {
        self.constraint = Some(Constraint {
            vars: vars.iter().map(|s| s.to_string()).collect(),
            total,
        });
        self
    }

    pub fn with_scalar(mut self, s: Q) -> SchematicTerm {
        self.scalar = s;
        self
    }

    pub fn with_coeff(mut self, c: WeightMonomial) -> SchematicTerm {
        self.coeff = c;
        self
    }

    /// Whether the term depends on the global count `i`.
    pub fn is_symbolic(&self) -> bool {
        matches!(
            self.constraint,
            Some(Constraint {
                total: Total::Sym(_),
                ..
            })
        ) || self
            .factors
            .iter()
            .any(|f| f.deriv.var_name() == Some(GLOBAL) || f.power.var_name() == Some(GLOBAL))
    }

    /// Names of all quantities and classes mentioned.
    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.factors
            .iter()
            .flat_map(|f| f.class.iter().map(String::as_str))
    }
}

impl fmt::Display for SchematicTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.scalar.is_one() {
            parts.push(fmt_q(&self.scalar));
        }
        if !self.coeff.is_one() || self.coeff.class != Default::default() {
            parts.push(self.coeff.to_string());
        }
        for fac in &self.factors {
            parts.push(fac.to_string());
        }
        if parts.is_empty() {
            parts.push("one".to_string());
        }
        write!(f, "{}", parts.join(" "))?;
        if let Some(c) = &self.constraint {
            write!(f, " | {c}")?;
        }
        Ok(())
    }
}

/// Renders a sum of terms one per line.
pub fn render_sum(terms: &[SchematicTerm]) -> String {
    terms
        .iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}
