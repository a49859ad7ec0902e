//! Commuting transport equations with angular derivatives.
//!
//! Given `∇₄φ = F₀` or `∇₃φ + λ₀ trχ̄ φ = G₀`, produces the schematic right-hand
//! side of the equation satisfied by `∇^i φ`, either for a symbolic count `i`
//! or for a literal one.

pub mod instances;
pub mod oracle;

use std::fmt;

use num_traits::Zero;

use crate::dsl::{
    normalize_sum, Direction, Factor, Idx, SchematicTerm, Total, TransportEquation, GLOBAL,
};
use crate::error::{Error, Result};
use crate::quantity::{QuantityCatalog, PSI_MEMBERS};
use crate::rational::{q, qi, Affine, Q};
use crate::signature::{check_terms, EquationVerdict};

/// Number of commuted angular derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Count {
    Sym,
    Lit(u32),
}

impl Count {
    fn total(self, off: i32) -> Option<Total> {
        match self {
            Count::Sym => Some(Total::Sym(off)),
            Count::Lit(n) => {
                let v = n as i64 + off as i64;
                (v >= 0).then_some(Total::Lit(v))
            }
        }
    }

    fn idx(self) -> Idx {
        match self {
            Count::Sym => Idx::var(GLOBAL, 0),
            Count::Lit(n) => Idx::Lit(n),
        }
    }

    fn is_zero(self) -> bool {
        self == Count::Lit(0)
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Count::Sym => write!(f, "i"),
            Count::Lit(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommutedEquation {
    pub name: String,
    pub direction: Direction,
    pub count: Count,
    /// `∇^i φ`.
    pub lhs: SchematicTerm,
    /// Coefficient of `trχ̄ ∇^i φ` on the left.
    pub lambda: Affine,
    pub rhs: Vec<SchematicTerm>,
}

impl fmt::Display for CommutedEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.direction, self.lhs)?;
        if !(self.lambda.c0.is_zero() && self.lambda.ci.is_zero()) {
            write!(f, " + ({}) trchib {}", self.lambda, self.lhs)?;
        }
        writeln!(f, " =")?;
        for t in &self.rhs {
            writeln!(f, "  {t}")?;
        }
        Ok(())
    }
}

fn map_symbol(name: &str) -> Vec<&'static str> {
    if PSI_MEMBERS.contains(&name) {
        return vec!["psi"];
    }
    match name {
        "chi" => vec!["chih", "psi"],
        "chib" => vec!["chibh", "trchib"],
        "uinv" => vec!["trchib"],
        "gamma" | "one" => vec!["one"],
        _ => Vec::new(),
    }
}

/// Schematic form of a raw term: `ψ` members collapse to `psi`, `χ` splits
/// into `(chih, psi)`, `χ̄` into `(chibh, trchib)`, `1/|u|` is read as `trχ̄`.
pub fn schematize_term(t: &SchematicTerm) -> SchematicTerm {
    let mut out = t.clone();
    out.factors = t
        .factors
        .iter()
        .filter_map(|f| {
            let mut class: Vec<String> = f
                .class
                .iter()
                .flat_map(|n| {
                    let m = map_symbol(n);
                    if m.is_empty() {
                        vec![n.clone()]
                    } else {
                        m.into_iter().map(String::from).collect()
                    }
                })
                .collect();
            class.sort();
            class.dedup();
            if class == ["one"] {
                return None;
            }
            Some(Factor {
                class,
                deriv: f.deriv.clone(),
                power: f.power.clone(),
            })
        })
        .collect();
    out
}

pub fn auto_schematize(e: &TransportEquation) -> Vec<SchematicTerm> {
    normalize_sum(&e.rhs.iter().map(schematize_term).collect::<Vec<_>>())
}

/// The schematic right-hand side used for commutation.
pub fn schematic_rhs(e: &TransportEquation) -> Vec<SchematicTerm> {
    if e.schematic.is_empty() {
        auto_schematize(e)
    } else {
        normalize_sum(&e.schematic)
    }
}

/// Symbol carried by the commuted slot: `psi` for `ψ` members.
pub(crate) fn phi_tilde(phi: &str) -> String {
    if PSI_MEMBERS.contains(&phi) {
        "psi".to_string()
    } else {
        phi.to_string()
    }
}

/// Accumulates factors with fresh Leibniz indices `j1, j2, …`.
struct Builder {
    factors: Vec<Factor>,
    vars: Vec<String>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            factors: Vec::new(),
            vars: Vec::new(),
        }
    }

    fn fresh(&mut self) -> String {
        let v = format!("j{}", self.vars.len() + 1);
        self.vars.push(v.clone());
        v
    }

    /// `∇^{j} (class)^{j' + extra}`.
    fn power(mut self, class: &[&str], extra: i32) -> Self {
        let d = self.fresh();
        let p = self.fresh();
        self.factors.push(
            Factor::alt(class)
                .with_deriv(Idx::var(&d, 0))
                .with_power(Idx::var(&p, extra)),
        );
        self
    }

    /// `∇^{j + extra} (class)`.
    fn slot(mut self, class: &[&str], extra: i32) -> Self {
        let d = self.fresh();
        self.factors
            .push(Factor::alt(class).with_deriv(Idx::var(&d, extra)));
        self
    }

    /// Every factor of `t` receives its own share of derivatives.
    fn distribute(mut self, t: &SchematicTerm) -> Self {
        for f in &t.factors {
            let d = self.fresh();
            let off = match &f.deriv {
                Idx::Lit(n) => *n as i32,
                Idx::Var { off, .. } => *off,
            };
            self.factors.push(Factor {
                class: f.class.clone(),
                deriv: Idx::var(&d, off),
                power: f.power.clone(),
            });
        }
        self
    }

    fn finish(
        self,
        count: Count,
        off: i32,
        coeff: &crate::WeightMonomial,
    ) -> Option<SchematicTerm> {
        let total = count.total(off)?;
        let vars: Vec<&str> = self.vars.iter().map(String::as_str).collect();
        Some(
            SchematicTerm::product(self.factors)
                .with_coeff(coeff.clone())
                .with_constraint(&vars, total),
        )
    }
}

fn unit() -> crate::WeightMonomial {
    crate::WeightMonomial::one()
}

fn require_transport(e: &TransportEquation) -> Result<&str> {
    if e.direction == Direction::Elliptic {
        return Err(Error::WrongDirection {
            expected: "nab3 or nab4".into(),
            got: e.direction.to_string(),
        });
    }
    let phi = e
        .lhs_quantity()
        .ok_or_else(|| Error::UnknownSymbol(e.lhs.to_string()))?;
    QuantityCatalog::builtin().get(phi)?;
    Ok(phi)
}

fn lambda_for(e: &TransportEquation, count: Count) -> Affine {
    if e.direction != Direction::Nab3 {
        return Affine::constant(Q::zero());
    }
    match count {
        Count::Sym => Affine::new(e.lambda0, q(1, 2)),
        Count::Lit(n) => Affine::constant(e.lambda0 + q(n as i64, 2)),
    }
}

fn lhs_term(phi: &str, count: Count) -> SchematicTerm {
    SchematicTerm::product(vec![Factor::new(phi).with_deriv(count.idx())])
}

/// Leibniz expansion of `∇^i` applied to the source terms, with the `ψ`
/// factors generated by commutation. Single-factor sources are split so the
/// top-order term `∇^{i+d} f` appears on its own.
fn source_terms(
    src: &[SchematicTerm],
    count: Count,
    psi: &[&str],
    split: bool,
) -> Vec<SchematicTerm> {
    let mut out = Vec::new();
    for t in src {
        if split && t.factors.len() == 1 {
            // Without ψ factors every derivative falls on f.
            out.extend(Builder::new().distribute(t).finish(count, 0, &t.coeff));
            out.extend(
                Builder::new()
                    .power(psi, 1)
                    .distribute(t)
                    .finish(count, -1, &t.coeff),
            );
        } else {
            out.extend(
                Builder::new()
                    .power(psi, 0)
                    .distribute(t)
                    .finish(count, 0, &t.coeff),
            );
        }
    }
    out
}

/// Canonical commuted equation with schematic right-hand side.
pub fn commute(e: &TransportEquation, count: Count) -> Result<CommutedEquation> {
    let phi = require_transport(e)?;
    let lambda = lambda_for(e, count);
    let lhs = lhs_term(phi, count);
    if count.is_zero() {
        return Ok(CommutedEquation {
            name: e.name.clone(),
            direction: e.direction,
            count,
            lhs,
            lambda,
            rhs: e.rhs.clone(),
        });
    }
    let src = schematic_rhs(e);
    let pt = phi_tilde(phi);
    let pt = pt.as_str();
    let psi = ["psi"];
    let mut rhs = source_terms(&src, count, &psi, true);
    match e.direction {
        Direction::Nab4 => {
            rhs.extend(
                Builder::new()
                    .power(&psi, 0)
                    .slot(&["chih", "psi"], 0)
                    .slot(&[pt], 0)
                    .finish(count, 0, &unit()),
            );
        }
        Direction::Nab3 => {
            rhs.extend(
                Builder::new()
                    .power(&psi, 0)
                    .slot(&["chibh", "psi", "trchibt"], 0)
                    .slot(&[pt], 0)
                    .finish(count, 0, &unit()),
            );
            rhs.extend(
                Builder::new()
                    .power(&psi, 1)
                    .slot(&["trchib"], 0)
                    .slot(&[pt], 0)
                    .finish(count, -1, &unit()),
            );
            if !e.lambda0.is_zero() {
                rhs.extend(
                    Builder::new()
                        .power(&psi, 0)
                        .slot(&["trchib"], 1)
                        .slot(&[pt], 0)
                        .finish(count, -1, &unit()),
                );
            }
        }
        Direction::Elliptic => unreachable!(),
    }
    let rhs = instances::reduce(&normalize_sum(&rhs), instances::MAX_CHECK_I);
    Ok(CommutedEquation {
        name: e.name.clone(),
        direction: e.direction,
        count,
        lhs,
        lambda,
        rhs,
    })
}

/// Intermediate commuted form in concrete quantities: raw right-hand side,
/// `(eta, etabar)` for the generated factors and `β`, `χ` (resp. `β̄`, `χ̄`)
/// from the commutator itself. Used to verify homogeneity.
pub fn commute_concrete(e: &TransportEquation, count: Count) -> Result<CommutedEquation> {
    let phi = require_transport(e)?;
    let lambda = lambda_for(e, count);
    let lhs = lhs_term(phi, count);
    let ee = ["eta", "etabar"];
    let mut rhs = source_terms(&e.rhs, count, &ee, false);
    let with_phi = |b: Builder| b.slot(&[phi], 0);
    match e.direction {
        Direction::Nab4 => {
            rhs.extend(
                with_phi(Builder::new().power(&ee, 0).slot(&["beta"], 0)).finish(
                    count,
                    -1,
                    &unit(),
                ),
            );
            rhs.extend(
                with_phi(Builder::new().power(&ee, 0).slot(&["chi"], 0)).finish(count, 0, &unit()),
            );
        }
        Direction::Nab3 => {
            rhs.extend(
                with_phi(Builder::new().power(&ee, 0).slot(&["betabar"], 0)).finish(
                    count,
                    -1,
                    &unit(),
                ),
            );
            rhs.extend(
                with_phi(Builder::new().power(&ee, 0).slot(&["chibh", "trchibt"], 0)).finish(
                    count,
                    0,
                    &unit(),
                ),
            );
            rhs.extend(
                with_phi(Builder::new().power(&ee, 1).slot(&["trchib"], 0)).finish(
                    count,
                    -1,
                    &unit(),
                ),
            );
            if !e.lambda0.is_zero() {
                rhs.extend(
                    with_phi(Builder::new().power(&ee, 0).slot(&["trchib"], 1)).finish(
                        count,
                        -1,
                        &unit(),
                    ),
                );
            }
        }
        Direction::Elliptic => unreachable!(),
    }
    Ok(CommutedEquation {
        name: e.name.clone(),
        direction: e.direction,
        count,
        lhs,
        lambda,
        rhs,
    })
}

/// Homogeneity of the concrete commuted form.
pub fn check_commuted(e: &TransportEquation, count: Count) -> Result<EquationVerdict> {
    let c = commute_concrete(e, count)?;
    // Any nonzero λ makes the left-hand trχ̄ term part of the check.
    let lam = if e.direction == Direction::Nab3 {
        qi(1)
    } else {
        Q::zero()
    };
    Ok(check_terms(
        &format!("{}[{}]", e.name, count),
        e.direction,
        &c.lhs,
        lam,
        &c.rhs,
    ))
}
