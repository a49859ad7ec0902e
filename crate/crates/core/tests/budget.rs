//! Power-counting rules, the product table and the shipped chain corpus.

use std::time::Instant;

use nullcalc::budget::chain::{parse_norm_symbol, render_ledger, Poly};
use nullcalc::budget::{
    cauchy_schwarz_flux, certify_all, dominance_check, energy_pairs, exact_u_integral,
    holder_product, integrate_u, integrate_u_constant, integrate_ubar, norm_weight,
    norm_weight_derived, parse_chains, product_bound, scale_weight, sobolev_embed,
    transport_bound_3, transport_bound_4, ChainCorpus, Hypersurface, Norm, ProductKind, Status,
};
use nullcalc::commute::{commute, Count};
use nullcalc::dsl::EquationCatalog;
use nullcalc::quantity::QuantityCatalog;
use nullcalc::rational::{q, qi, Affine};
use nullcalc::{Base, CoeffClass, Error, RegimeParameters, WeightMonomial};
use proptest::prelude::*;

fn m(s: &str) -> WeightMonomial {
    WeightMonomial::parse(s).unwrap()
}

fn desk() -> RegimeParameters {
    RegimeParameters::desk()
}

// ── Norm weights ──

#[test]
fn norm_weight_examples() {
    let cat = QuantityCatalog::builtin();
    assert_eq!(
        norm_weight(cat.get("rho").unwrap(), Norm::LInf).unwrap(),
        m("a^-1 |u|^3")
    );
    assert_eq!(
        norm_weight(cat.get("alpha").unwrap(), Norm::L2).unwrap(),
        WeightMonomial::one()
    );
    assert_eq!(
        norm_weight(cat.get("betabar").unwrap(), Norm::L1).unwrap(),
        m("a^{-3/2} |u|^2")
    );
    // |u|^i ‖∇^i ω‖_{L²} = ‖(a^{1/2}∇)^i ω‖_{L²_sc}
    for i in 0..6u32 {
        let w = norm_weight_derived("omega", i, Norm::L2).unwrap();
        assert_eq!(w, WeightMonomial::au(q(-(i as i64), 2), qi(i as i64)));
    }
}

#[test]
fn class_symbols_have_no_single_weight() {
    let cat = QuantityCatalog::builtin();
    assert!(matches!(
        norm_weight(cat.get("Psi").unwrap(), Norm::L2),
        Err(Error::AmbiguousSignature(_))
    ));
}

// ── Hölder ──

#[test]
fn holder_pairings() {
    for (a, b, r) in [
        (Norm::LInf, Norm::L2, Norm::L2),
        (Norm::LInf, Norm::L1, Norm::L1),
        (Norm::L2, Norm::L2, Norm::L1),
    ] {
        let h = holder_product(a, b).unwrap();
        assert_eq!(h.norm, r);
        assert_eq!(h.gain, m("|u|^-1"));
        assert_eq!(holder_product(b, a).unwrap(), h);
    }
    assert!(matches!(
        holder_product(Norm::L1, Norm::L1),
        Err(Error::UnsupportedPairing(..))
    ));
    assert!(matches!(
        holder_product(Norm::LInf, Norm::LInf),
        Err(Error::UnsupportedPairing(..))
    ));
    assert!(matches!(
        holder_product(Norm::L2, Norm::L1),
        Err(Error::UnsupportedPairing(..))
    ));
}

#[test]
fn unit_factor_gain_is_offset_by_its_norm() {
    // ‖1‖_{L²_sc} = |u| cancels the Hölder gain.
    let one_l2 = m("|u|");
    let h = holder_product(Norm::LInf, Norm::L2).unwrap();
    assert!(one_l2.mul(&h.gain).is_one());
}

// ── Product table ──

#[test]
fn product_table_is_exact() {
    let expect = [
        (ProductKind::Psi, 0, "|u|"),
        (ProductKind::Psi, 1, "O"),
        (ProductKind::Psi, 2, "|u|^-1 O^2"),
        (ProductKind::Psi, 3, "|u|^-2 O^3"),
        (ProductKind::PsiPsi, 0, "O"),
        (ProductKind::PsiPsi, 1, "a^{1/2} |u|^-1 O^2"),
        (ProductKind::PsiPsi, 2, "a |u|^-2 O^3"),
    ];
    for (k, n, s) in expect {
        assert_eq!(product_bound(k, n).unwrap(), m(s), "{k} {n}");
    }
    assert!(matches!(
        product_bound(ProductKind::Psi, 4),
        Err(Error::OutOfTable { .. })
    ));
    assert!(matches!(
        product_bound(ProductKind::PsiPsi, 3),
        Err(Error::OutOfTable { .. })
    ));
}

// ── Sobolev and transport ──

#[test]
fn sobolev_record() {
    let r = sobolev_embed("chih");
    assert_eq!(r.max_order, 2);
    assert!(r.weight.is_one());
    assert_eq!(r.embed(), r);
    assert_eq!(r.embed().embed(), r.embed());
}

#[test]
fn transport_weights() {
    let c = EquationCatalog::shipped().unwrap();
    let rec =
        |n: &str| transport_bound_3(&commute(c.get(n).unwrap(), Count::Sym).unwrap()).unwrap();
    assert_eq!(rec("nab3-omega").lambda1, Affine::new(qi(-1), qi(1)));
    assert_eq!(rec("nab3-chibh").lambda1, Affine::new(qi(1), qi(1)));
    assert_eq!(rec("nab3-alpha").lambda1, Affine::new(qi(0), qi(1)));
    assert_eq!(rec("nab3-alpha").lambda1.at(0), qi(0));
    assert_eq!(rec("nab3-omega").measure, m("a |u|^-2"));

    let chih = commute(c.get("nab4-chih").unwrap(), Count::Sym).unwrap();
    let r4 = transport_bound_4(&chih).unwrap();
    assert!(r4.measure.is_one());
    assert!(matches!(
        transport_bound_3(&chih),
        Err(Error::WrongDirection { .. })
    ));
    let omega = commute(c.get("nab3-omega").unwrap(), Count::Sym).unwrap();
    assert!(matches!(
        transport_bound_4(&omega),
        Err(Error::WrongDirection { .. })
    ));
}

// ── Integration ──

#[test]
fn integrate_u_examples() {
    assert_eq!(
        integrate_u(&m("a^{3/2} |u|^-4 O^2")).unwrap(),
        m("C a^{3/2} |u|^-3 O^2")
    );
    assert_eq!(integrate_u(&m("a |u|^-2")).unwrap(), m("C a |u|^-1"));
    assert!(matches!(
        integrate_u(&m("|u|^-1")),
        Err(Error::LogDivergence(_))
    ));
    // Non-integrable exponents move to the |u∞| end and then fail dominance.
    let r = integrate_u(&m("|u|^{-1/2}")).unwrap();
    assert_eq!(r.exp(Base::UInf), q(1, 2));
    assert_eq!(dominance_check(&r, &desk()).status, Status::Fails);
    assert_eq!(integrate_ubar(&m("a |u|^-2")), m("a |u|^-2"));
}

#[test]
fn integrate_u_matches_closed_form() {
    let regime = desk();
    let u = -regime.a / 4.0;
    for e in [-2i64, -3, -4] {
        let mono = WeightMonomial::base(Base::U, qi(e));
        let out = integrate_u(&mono).unwrap();
        assert_eq!(out.exp(Base::U), qi(e + 1));
        assert_eq!(out.class, CoeffClass::Bounded);
        let c = integrate_u_constant(qi(e)).unwrap();
        assert_eq!(c, q(1, -(e + 1)));
        let exact = exact_u_integral(e as f64, u, regime.u_inf);
        let predicted = (*c.numer() as f64 / *c.denom() as f64) * u.abs().powf((e + 1) as f64);
        let ratio = exact / predicted;
        assert!((0.5..=1.0).contains(&ratio), "q = {e}: ratio {ratio}");
    }
    assert_eq!(integrate_u_constant(qi(-1)), None);
}

// ── Flux ──

#[test]
fn flux_examples() {
    assert_eq!(
        cauchy_schwarz_flux(&m("a |u|^-2"), Hypersurface::Hb).unwrap(),
        m("C a^{1/2} |u|^{-1/2}")
    );
    assert_eq!(
        cauchy_schwarz_flux(&m("a^{3/2} |u|^-3"), Hypersurface::Hb).unwrap(),
        m("C a |u|^{-3/2}")
    );
    assert_eq!(
        cauchy_schwarz_flux(&m("1"), Hypersurface::H).unwrap(),
        WeightMonomial::one()
    );
    // ∫ |u′|^{-1}‖φ‖ against the H̄ measure diverges logarithmically.
    assert!(cauchy_schwarz_flux(&m("a^{1/2} |u|^-2"), Hypersurface::Hb).is_ok());
    assert!(cauchy_schwarz_flux(&m("a^{1/2} |u|^{-3/2}"), Hypersurface::Hb).is_err());
}

// ── Dominance ──

#[test]
fn dominance_examples() {
    let r = desk();
    let v = dominance_check(&m("a^{1/2} |u|^-1 O^2"), &r);
    assert_eq!(v.slack, q(1, 2) - qi(1) + q(2, 320));
    assert_eq!(v.status, Status::Small);
    let v = dominance_check(&WeightMonomial::one(), &r);
    assert_eq!((v.slack, v.status), (qi(0), Status::Borderline));
    let v = dominance_check(&m("a |u|^-1 O^3"), &r);
    assert_eq!(v.slack, q(3, 320));
    assert_eq!(v.status, Status::Fails);
}

#[test]
fn dominance_u_inf_rules() {
    let r = desk();
    assert_eq!(dominance_check(&m("|uInf|"), &r).status, Status::Fails);
    assert_eq!(dominance_check(&m("|u|"), &r).status, Status::Fails);
    assert_eq!(
        dominance_check(&m("|u| |uInf|^-1"), &r).status,
        Status::Borderline
    );
    assert_eq!(
        dominance_check(&m("a |uInf|^-1"), &r).status,
        Status::Borderline
    );
    assert_eq!(dominance_check(&m("|uInf|^-1"), &r).status, Status::Small);
    assert_eq!(dominance_check(&m("delta^-1"), &r).status, Status::Fails);
    assert_eq!(dominance_check(&m("delta"), &r).status, Status::Borderline);
    assert_eq!(dominance_check(&m("O^-3"), &r).status, Status::Borderline);
}

#[test]
fn or_exponent_is_a_regime_field() {
    let tight = desk().with_or_exponent(q(1, 1000));
    assert_eq!(
        dominance_check(&m("a^{-1/100} O^10"), &desk()).status,
        Status::Fails
    );
    assert_eq!(
        dominance_check(&m("a^{-1/100} O^10"), &tight).status,
        Status::Borderline
    );
    assert_eq!(
        dominance_check(&m("a^{-1/100} O^9"), &tight).status,
        Status::Small
    );
}

// ── Energy pairs ──

#[test]
fn energy_pair_coefficients() {
    let p = energy_pairs();
    assert_eq!(p.len(), 4);
    assert_eq!(p[0].psi1, ["alpha"]);
    assert_eq!(p[0].lambda0, q(1, 2));
    assert_eq!(p[3].psi1, ["betabar"]);
    assert_eq!(p[3].lambda0, qi(2));
    assert_eq!(p[1].lambda, Affine::new(qi(1), q(1, 2)));
    assert_eq!(p[2].bulk_weight, Affine::new(qi(4), qi(2)));
    assert_eq!(p[0].f_shape.len(), 2);
    assert_eq!(p[0].g_shape.len(), 1);
}

#[test]
fn energy_pairs_agree_with_catalog() {
    let c = EquationCatalog::shipped().unwrap();
    for (pair, eq) in
        energy_pairs()
            .iter()
            .zip(["nab3-alpha", "nab3-beta", "nab3-rho", "nab3-betabar"])
    {
        let e = c.get(eq).unwrap();
        assert_eq!(e.lambda0, pair.lambda0, "{eq}");
        let lam = commute(e, Count::Sym).unwrap().lambda;
        assert_eq!(lam, pair.lambda, "{eq}");
    }
}

// ── Chain DSL ──

#[test]
fn norm_symbol_parsing() {
    assert_eq!(
        parse_norm_symbol("R[alpha]").unwrap(),
        ("R[alpha]".to_string(), qi(1))
    );
    assert_eq!(
        parse_norm_symbol("Rb[rho]^{2}").unwrap(),
        ("Rb[rho]".to_string(), qi(2))
    );
    assert_eq!(
        parse_norm_symbol("I0^{1/2}").unwrap(),
        ("I0".to_string(), q(1, 2))
    );
    assert!(parse_norm_symbol("R[nope]").is_err());
    assert!(parse_norm_symbol("X[alpha]").is_err());
}

#[test]
fn poly_round_trip_and_merge() {
    let p = Poly::parse("a^{1/2} |u|^{-1/2} Rb[rho] + a^{1/2} |u|^{-1/2}").unwrap();
    assert_eq!(
        p.to_string(),
        "a^{1/2} |u|^{-1/2} Rb[rho] + a^{1/2} |u|^{-1/2}"
    );
    assert_eq!(Poly::parse(&p.to_string()).unwrap(), p);
    let sq = Poly::parse("R[alpha] + 1").unwrap().pow(2);
    assert_eq!(sq.to_string(), "R[alpha]^{2} + C R[alpha] + 1");
}

const SMALL: &str = "
chain base
  claim R[alpha] + 1
  term a
    start mono 1
    flux H R[alpha]
end
chain uses
  claim R[alpha] + 1
  term a
    start mono a^{1/2} |u|^{-1} O[chih]
    subst O[chih] base
end
";

fn certify_src(src: &str) -> Vec<nullcalc::Result<nullcalc::budget::ChainVerdict>> {
    let corpus = parse_chains(src).unwrap();
    certify_all(&corpus, &EquationCatalog::shipped().unwrap(), &desk())
}

#[test]
fn small_corpus_certifies() {
    let out = certify_src(SMALL);
    let v = out[1].as_ref().unwrap();
    assert_eq!(v.bound, "a^{1/2} |u|^{-1} R[alpha] + a^{1/2} |u|^{-1}");
    assert_eq!(v.status, Status::Small);
}

#[test]
fn chain_errors() {
    let unsupported = "chain x\n claim 1\n term t\n  start mono 1\n  holder 1 1\nend\n";
    assert!(matches!(
        certify_src(unsupported)[0],
        Err(Error::Chain { .. })
    ));
    let log = "chain x\n claim 1\n term t\n  start mono |u|^-1\n  integrate u\nend\n";
    assert!(matches!(certify_src(log)[0], Err(Error::Chain { .. })));
    assert!(parse_chains("chain x\n claim 1\n term t\n  times a\nend\n").is_err());
    assert!(parse_chains("chain x\n term t\n  start mono 1\nend\n").is_err());
    assert!(parse_chains("chain x\n claim 1\n term t\n  start chain y\nend\n").is_err());
    let cycle = "chain x\n claim 1\n term t\n  start chain y\nend\nchain y\n claim 1\n term t\n  start chain x\nend\n";
    assert!(parse_chains(cycle).is_err());
    assert!(parse_chains("chain x\n claim 1\n term t\n  flux H Rb[rho]\nend\n").is_err());
}

#[test]
fn failing_shapes_are_rejected() {
    // Unbalanced O power with a borderline weight.
    let src = "chain x\n claim 1\n term t\n  start mono a |u|^-1 O^2\nend\n";
    let v = certify_src(src).remove(0).unwrap();
    assert_eq!(v.status, Status::Fails);
    // A norm absent from the claim.
    let src = "chain x\n claim 1\n term t\n  start mono R[rho]\nend\n";
    let v = certify_src(src).remove(0).unwrap();
    assert_eq!(v.status, Status::Fails);
    assert!(v.checks[0].claim.is_none());
}

// ── Shipped corpus ──

fn shipped() -> Vec<nullcalc::budget::ChainVerdict> {
    let corpus = ChainCorpus::shipped().unwrap();
    certify_all(&corpus, &EquationCatalog::shipped().unwrap(), &desk())
        .into_iter()
        .map(|r| r.unwrap())
        .collect()
}

#[test]
fn corpus_certifies_with_stated_shapes() {
    let start = Instant::now();
    let out = shipped();
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert!(out.len() >= 12);
    let expect = [
        ("o.bd", "a^{1/2} |u|^{-1/2} Rb[rho] + a^{1/2} |u|^{-1/2}"),
        ("chibh.bd", "1"),
        ("chih.bd", "R[alpha] + 1"),
        ("omb.bd", "R[rho] + 1"),
        ("eta.bd", "R[beta] + 1"),
        ("trchi.bd", "R[alpha]^{2} + R[alpha] + 1"),
        ("trchib.bd", "R[rho] + Rb[rho] + 1"),
        ("etab.bd", "Rb[betabar] + R[beta] + 1"),
        ("a.bd", "Rb[beta] + 1"),
        ("Psi.bd", "R[alpha] + Rb[beta] + 1"),
        ("ee4", "I0 + a^{-1/8}"),
        ("ee5", "I0 + I0^{2} + 1"),
    ];
    for (name, claim) in expect {
        let v = out
            .iter()
            .find(|v| v.name == name)
            .unwrap_or_else(|| panic!("missing {name}"));
        assert_eq!(v.claim, claim, "{name}");
        assert!(
            matches!(v.status, Status::Small | Status::Borderline),
            "{name}: {:#?}",
            v.checks
        );
        for c in &v.checks {
            assert!(c.accepted, "{name}: {c:?}");
            let verdict = c.verdict.as_ref().unwrap();
            let bootstrap =
                verdict.bound.exp(Base::O) > qi(0) || verdict.bound.exp(Base::R) > qi(0);
            if bootstrap {
                assert!(verdict.slack < qi(0), "{name}: {c:?}");
            }
        }
    }
}

#[test]
fn ee4_remainder_slack() {
    let out = shipped();
    let v = out.iter().find(|v| v.name == "ee4").unwrap();
    let s = v.remainder_slack.unwrap();
    assert!(s <= q(-1, 8), "{s}");
    assert_eq!(s, q(-39, 160));
}

#[test]
fn ledgers_are_deterministic() {
    let a: Vec<String> = shipped().iter().map(nullcalc::report::to_json).collect();
    let b: Vec<String> = shipped().iter().map(nullcalc::report::to_json).collect();
    assert_eq!(a, b);
    let md = render_ledger(&shipped()[0]);
    assert!(md.contains("### term rho"));
}

// ── Properties ──

fn exps() -> impl Strategy<Value = (i64, i64, i64, i64)> {
    (-8i64..8, -8i64..4, 0i64..6, 0i64..6)
}

proptest! {
    #[test]
    fn holder_weights_are_additive(s1 in -4i64..6, s2 in -4i64..6) {
        let (s1, s2) = (q(s1, 2), q(s2, 2));
        for (a, b) in [(Norm::LInf, Norm::L2), (Norm::LInf, Norm::L1), (Norm::L2, Norm::L2)] {
            let h = holder_product(a, b).unwrap();
            let lhs = scale_weight(s1, a).mul(&scale_weight(s2, b)).mul(&h.gain);
            prop_assert_eq!(lhs, scale_weight(s1 + s2, h.norm));
        }
    }

    #[test]
    fn dominance_is_monotone((pa, pu, po, pr) in exps(), (da, du, do_, dr) in (0i64..4, 0i64..4, 0i64..4, 0i64..4)) {
        let small = WeightMonomial::au(q(pa, 2), q(pu, 2)).with(Base::O, qi(po)).with(Base::R, qi(pr));
        let big = WeightMonomial::au(q(pa + da, 2), q(pu + du, 2))
            .with(Base::O, qi(po + do_))
            .with(Base::R, qi(pr + dr));
        let (vs, vb) = (dominance_check(&small, &desk()), dominance_check(&big, &desk()));
        prop_assert!(vs.slack <= vb.slack);
        prop_assert!(vs.status <= vb.status);
    }

    #[test]
    fn integrate_u_lowers_exponent_by_minus_one(e in -12i64..-2) {
        let mono = WeightMonomial::au(qi(1), q(e, 2));
        let out = integrate_u(&mono).unwrap();
        prop_assert_eq!(out.exp(Base::U), q(e, 2) + qi(1));
        prop_assert_eq!(out.exp(Base::A), qi(1));
    }

    #[test]
    fn poly_display_round_trips(pa in -4i64..4, pu in -4i64..4, k in 1i64..4) {
        let src = format!("a^{{{}}} |u|^{{{}}} R[alpha]^{{{k}}} + a^{{{}}} + I0", pa, pu, pa + 1);
        let p = Poly::parse(&src).unwrap();
        prop_assert_eq!(Poly::parse(&p.to_string()).unwrap(), p);
    }
}
