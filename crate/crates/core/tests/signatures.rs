//! Signature table, catalog homogeneity and mutation sensitivity.

use nullcalc::dsl::{load_catalog, parse_raw, EquationCatalog};
use nullcalc::quantity::{signature_of, QuantityCatalog, SignatureValue, SIGNATURE_TABLE};
use nullcalc::rational::{q, qi, Affine};
use nullcalc::signature::{check_catalog, check_homogeneous, mutate_first_factor, term_signature};

// ── Signature table ──

#[test]
fn table_values_match() {
    let cat = QuantityCatalog::builtin();
    for (name, twice) in SIGNATURE_TABLE {
        let qn = cat.get(name).unwrap();
        assert_eq!(qn.s2, Some(SignatureValue::half(twice)), "{name}");
        let (n4, na, n3) = qn.counts.unwrap();
        assert_eq!(
            signature_of(n4, na, n3),
            SignatureValue::half(twice),
            "{name}"
        );
    }
}

#[test]
fn frame_count_examples() {
    assert_eq!(signature_of(1, 1, 1).to_string(), "1/2");
    assert_eq!(signature_of(1, 2, 0).to_string(), "0");
    assert_eq!(signature_of(0, 2, 2).to_string(), "2");
}

// ── Catalog homogeneity ──

#[test]
fn shipped_catalog_all_pass() {
    let c = EquationCatalog::shipped().unwrap();
    assert_eq!(c.len(), 26);
    let r = check_catalog(&c);
    for e in &r.entries {
        assert!(e.pass(), "{} failed: {:?}", e.name, e.term_signatures);
    }
    assert_eq!(r.passed, 26);
}

#[test]
fn every_single_mutation_fails() {
    let c = EquationCatalog::shipped().unwrap();
    let mut n = 0;
    for e in c.primary() {
        let m = mutate_first_factor(e).expect("mutable entry");
        assert!(
            !check_homogeneous(&m).pass(),
            "{} survived mutation",
            e.name
        );
        n += 1;
    }
    assert_eq!(n, 26);
}

#[test]
fn mutated_catalog_fails_exactly_one_entry() {
    let mut c = EquationCatalog::shipped().unwrap();
    let k = c
        .entries
        .iter()
        .position(|e| e.name == "nab3-omega")
        .unwrap();
    c.entries[k].rhs[0] = parse_raw("beta").unwrap();
    let r = check_catalog(&c);
    let failed: Vec<&str> = r
        .entries
        .iter()
        .filter(|e| !e.pass())
        .map(|e| e.name.as_str())
        .collect();
    assert_eq!(failed, vec!["nab3-omega"]);
}

#[test]
fn empty_catalog_vacuous_pass() {
    let r = check_catalog(&load_catalog("").unwrap());
    assert!(r.all_pass());
    assert!(r.entries.is_empty());
}

#[test]
fn nab3_omega_terms_at_signature_one() {
    let c = EquationCatalog::shipped().unwrap();
    let v = check_homogeneous(c.get("nab3-omega").unwrap());
    assert!(v.pass());
    assert!(v.term_signatures.iter().all(|t| t.signature == "1"));
}

// ── Split invariance ──

#[test]
fn split_invariance_by_enumeration() {
    // ∇^{i1}ψ^{i2}∇^{i3}ρ with ψ counted at ½ per factor and ½ per derivative.
    let t = parse_raw("nab^{i1} psi^{i2} nab^{i3} rho | i1+i2+i3=i").unwrap();
    let sym = term_signature(&t).unwrap();
    assert_eq!(sym, Affine::new(qi(1), q(1, 2)));
    for i in 0..=5i64 {
        for i1 in 0..=i {
            for i2 in 0..=(i - i1) {
                let i3 = i - i1 - i2;
                let direct = q(i2, 2) + q(i1, 2) + q(i3, 2) + qi(1);
                assert_eq!(direct, sym.at(i));
            }
        }
    }
}
