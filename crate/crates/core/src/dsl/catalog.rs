//! Transport equations and the machine-readable equation catalog.

use std::fmt;

use num_traits::Zero;
use serde::Serialize;

use crate::dsl::normalize::normalize_sum;
use crate::dsl::parse::parse_term_at;
use crate::dsl::term::SchematicTerm;
use crate::error::{Error, Result};
use crate::rational::{fmt_q, parse_q, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Nab3,
    Nab4,
    Elliptic,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Nab3 => "nab3",
            Direction::Nab4 => "nab4",
            Direction::Elliptic => "elliptic",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportEquation {
    pub name: String,
    pub direction: Direction,
    /// The differentiated quantity (a single factor for transport equations).
    pub lhs: SchematicTerm,
    /// Coefficient of `trχ̄·lhs` on the left; zero unless `∇₃`.
    pub lambda0: Q,
    pub rhs: Vec<SchematicTerm>,
    /// Optional schematic right-hand side used by the commutator engine.
    pub schematic: Vec<SchematicTerm>,
    pub variant_of: Option<String>,
}

impl TransportEquation {
    pub fn new(
        name: &str,
        direction: Direction,
        lhs: SchematicTerm,
        lambda0: Q,
        rhs: Vec<SchematicTerm>,
    ) -> Self {
        TransportEquation {
            name: name.to_string(),
            direction,
            lhs,
            lambda0,
            rhs,
            schematic: Vec::new(),
            variant_of: None,
        }
    }

    /// Name of the differentiated quantity, when the left side is a single factor.
    pub fn lhs_quantity(&self) -> Option<&str> {
        match self.lhs.factors.as_slice() {
            [f] if !f.is_alt() => Some(f.class[0].as_str()),
            _ => None,
        }
    }

    /// Left side rendered as `nab3 chibh + 1 trchib chibh`.
    pub fn lhs_display(&self) -> String {
        let mut s = match self.direction {
            Direction::Elliptic => self.lhs.to_string(),
            d => format!("{d} {}", self.lhs),
        };
        if !self.lambda0.is_zero() {
            s.push_str(&format!(" + {} trchib {}", fmt_q(&self.lambda0), self.lhs));
        }
        s
    }
}

impl fmt::Display for TransportEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "name: {}", self.name)?;
        writeln!(f, "dir: {}", self.direction)?;
        if let Some(v) = &self.variant_of {
            writeln!(f, "variant_of: {v}")?;
        }
        if self.direction == Direction::Nab3 {
            writeln!(f, "lambda0: {}", fmt_q(&self.lambda0))?;
        }
        writeln!(f, "lhs: {}", self.lhs)?;
        writeln!(f, "rhs:")?;
        for t in &self.rhs {
            writeln!(f, "  {t}")?;
        }
        if !self.schematic.is_empty() {
            writeln!(f, "schematic:")?;
            for t in &self.schematic {
                writeln!(f, "  {t}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EquationCatalog {
    /// Entries in file order; variants follow their parents.
    pub entries: Vec<TransportEquation>,
}

/// Mandatory entries of the shipped catalog.
pub const MANDATORY: [&str; 26] = [
    "nab3-alpha",
    "nab4-beta",
    "nab3-beta",
    "nab4-sigma",
    "nab3-sigma",
    "nab4-rho",
    "nab3-rho",
    "nab4-betabar",
    "nab3-betabar",
    "nab4-alphabar",
    "nab4-trchi",
    "nab4-chih",
    "nab3-trchib",
    "nab3-chibh",
    "nab4-trchib",
    "nab4-chibh",
    "nab3-trchi",
    "nab3-chih",
    "nab4-eta",
    "nab3-etabar",
    "nab4-omegabar",
    "nab3-omega",
    "codazzi-chih",
    "codazzi-chibh",
    "curl-eta",
    "gauss-K",
];

pub const MANDATORY_VARIANTS: [&str; 2] = ["nab4-trchibt", "nab3-trchibt"];

pub const SHIPPED: &str = include_str!("../../data/catalog.eqn");

impl EquationCatalog {
    pub fn get(&self, name: &str) -> Option<&TransportEquation> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Top-level entries (variants excluded).
    pub fn primary(&self) -> impl Iterator<Item = &TransportEquation> {
        self.entries.iter().filter(|e| e.variant_of.is_none())
    }

    pub fn variants_of<'a>(
        &'a self,
        name: &'a str,
    ) -> impl Iterator<Item = &'a TransportEquation> + 'a {
        self.entries
            .iter()
            .filter(move |e| e.variant_of.as_deref() == Some(name))
    }

    /// Number of top-level entries.
    pub fn len(&self) -> usize {
        self.primary().count()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// The catalog compiled into the binary, checked for completeness.
    pub fn shipped() -> Result<EquationCatalog> {
        let c = load_catalog(SHIPPED)?;
        c.require_mandatory()?;
        Ok(c)
    }

    pub fn require_mandatory(&self) -> Result<()> {
        for n in MANDATORY.iter().chain(MANDATORY_VARIANTS.iter()) {
            if self.get(n).is_none() {
                return Err(Error::MissingEquation(n.to_string()));
            }
        }
        Ok(())
    }
}

#[derive(PartialEq)]
enum Section {
    None,
    Rhs,
    Schematic,
}

struct Block {
    name: Option<String>,
    dir: Option<Direction>,
    lambda0: Q,
    lhs: Option<SchematicTerm>,
    rhs: Vec<SchematicTerm>,
    schematic: Vec<SchematicTerm>,
    variant_of: Option<String>,
    line: usize,
}

impl Block {
    fn new(line: usize) -> Block {
        Block {
            name: None,
            dir: None,
            lambda0: Q::zero(),
            lhs: None,
            rhs: Vec::new(),
            schematic: Vec::new(),
            variant_of: None,
            line,
        }
    }

    fn finish(self) -> Result<TransportEquation> {
        let syn = |msg: &str| Error::Syntax {
            line: self.line,
            col: 1,
            msg: msg.to_string(),
        };
        let name = self
            .name
            .clone()
            .ok_or_else(|| syn("block without `name:`"))?;
        let direction = self.dir.ok_or_else(|| syn("block without `dir:`"))?;
        let lhs = self
            .lhs
            .clone()
            .ok_or_else(|| syn("block without `lhs:`"))?;
        if direction != Direction::Nab3 && !self.lambda0.is_zero() {
            return Err(syn("lambda0 is only allowed for nab3 equations"));
        }
        if direction != Direction::Elliptic && lhs.factors.len() != 1 {
            return Err(syn("transport lhs must be a single quantity"));
        }
        Ok(TransportEquation {
            name,
            direction,
            lhs,
            lambda0: self.lambda0,
            rhs: self.rhs,
            schematic: normalize_sum(&self.schematic),
            variant_of: self.variant_of,
        })
    }
}

/// Parses the block-structured catalog format.
pub fn load_catalog(src: &str) -> Result<EquationCatalog> {
    let mut entries: Vec<TransportEquation> = Vec::new();
    let mut cur: Option<Block> = None;
    let mut section = Section::None;

    let flush = |cur: &mut Option<Block>, entries: &mut Vec<TransportEquation>| -> Result<()> {
        if let Some(b) = cur.take() {
            let e = b.finish()?;
            if entries.iter().any(|x| x.name == e.name) {
                return Err(Error::DuplicateEquation(e.name));
            }
            entries.push(e);
        }
        Ok(())
    };

    for (k, raw) in src.lines().enumerate() {
        let ln = k + 1;
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            flush(&mut cur, &mut entries)?;
            section = Section::None;
            continue;
        }
        let indented = line.starts_with(' ') || line.starts_with('\t');
        if indented {
            let Some(b) = cur.as_mut() else {
                return Err(Error::Syntax {
                    line: ln,
                    col: 1,
                    msg: "term outside a block".into(),
                });
            };
            let col = line.len() - line.trim_start().len();
            let t = parse_term_at(line.trim(), ln).map_err(|e| shift_col(e, col))?;
            match section {
                Section::Rhs => b.rhs.push(t),
                Section::Schematic => b.schematic.push(t),
                Section::None => {
                    return Err(Error::Syntax {
                        line: ln,
                        col: 1,
                        msg: "term outside rhs/schematic".into(),
                    })
                }
            }
            continue;
        }
        let (key, val) = line.split_once(':').ok_or_else(|| Error::Syntax {
            line: ln,
            col: 1,
            msg: format!("expected `key:` in `{}`", line.trim()),
        })?;
        let val = val.trim();
        let b = cur.get_or_insert_with(|| Block::new(ln));
        section = Section::None;
        match key.trim() {
            "name" => {
                if b.name.is_some() {
                    return Err(Error::Syntax {
                        line: ln,
                        col: 1,
                        msg: "second `name:` in block".into(),
                    });
                }
                b.name = Some(val.to_string());
            }
            "dir" => {
                b.dir = Some(match val {
                    "nab3" => Direction::Nab3,
                    "nab4" => Direction::Nab4,
                    "elliptic" => Direction::Elliptic,
                    _ => {
                        return Err(Error::Syntax {
                            line: ln,
                            col: 6,
                            msg: format!("unknown direction `{val}`"),
                        })
                    }
                })
            }
            "lambda0" => {
                b.lambda0 = parse_q(val).map_err(|_| Error::Syntax {
                    line: ln,
                    col: 10,
                    msg: format!("bad lambda0 `{val}`"),
                })?
            }
            "lhs" => b.lhs = Some(parse_term_at(val, ln)?),
            "variant_of" => b.variant_of = Some(val.to_string()),
            "rhs" => section = Section::Rhs,
            "schematic" => section = Section::Schematic,
            other => {
                return Err(Error::Syntax {
                    line: ln,
                    col: 1,
                    msg: format!("unknown key `{other}`"),
                })
            }
        }
        if matches!(key.trim(), "rhs" | "schematic") && !val.is_empty() {
            let t = parse_term_at(val, ln)?;
            if section == Section::Rhs {
                b.rhs.push(t);
            } else {
                b.schematic.push(t);
            }
        }
    }
    flush(&mut cur, &mut entries)?;

    for e in &entries {
        if let Some(p) = &e.variant_of {
            if !entries
                .iter()
                .any(|x| &x.name == p && x.variant_of.is_none())
            {
                return Err(Error::MissingEquation(p.clone()));
            }
        }
    }
    Ok(EquationCatalog { entries })
}

fn shift_col(e: Error, by: usize) -> Error {
    match e {
        Error::Syntax { line, col, msg } => Error::Syntax {
            line,
            col: col + by,
            msg,
        },
        e => e,
    }
}
