//! The `nullcalc` binary: subcommands, exit codes, golden outputs and
//! byte-identical reports.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nullcalc::dsl::catalog::SHIPPED;
use proptest::prelude::*;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_nullcalc"));
    c.env_remove("NULLCALC_CATALOG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("tests/golden")
            .join(name),
    )
    .unwrap()
}

const SMALL: &str = "a = 2^20\nu_inf = -2^30\nn_dirs = 2\ngrid = 33\nh = 1e-3\n";

fn config(dir: &TempDir, body: &str) -> PathBuf {
    let p = dir.path().join("run.cfg");
    std::fs::write(&p, body).unwrap();
    p
}

fn mutated_catalog(dir: &TempDir) -> PathBuf {
    let p = dir.path().join("mutated.eqn");
    let src = SHIPPED.replacen(
        "  3/8 etabar etabar\n  1/2 rho\n",
        "  3/8 etabar etabar\n  1/2 alpha\n",
        1,
    );
    assert_ne!(src, SHIPPED);
    std::fs::write(&p, src).unwrap();
    p
}

// ── Usage ──

#[test]
fn unknown_subcommand_is_usage_error() {
    let o = run(&["bogus"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert!(o.stdout.is_empty());
}

#[test]
fn missing_arguments_are_usage_errors() {
    assert_eq!(code(&run(&["formation"])), 2);
    assert_eq!(code(&run(&["rescale", "a |u|^-1"])), 2);
    assert_eq!(code(&run(&["commute", "nab3-omega", "--i", "-1"])), 2);
    assert_eq!(code(&run(&["certify"])), 2);
}

// ── Signatures ──

#[test]
fn shipped_catalog_passes() {
    let o = run(&["check-signatures"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS ")).count(), 26);
    assert!(out.contains("26 passed, 0 failed"));
}

#[test]
fn mutated_catalog_fails() {
    let dir = TempDir::new().unwrap();
    let p = mutated_catalog(&dir);
    let o = run(&["check-signatures", "--catalog", p.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("FAIL nab3-omega"));
}

#[test]
fn catalog_environment_override() {
    let dir = TempDir::new().unwrap();
    let p = mutated_catalog(&dir);
    let o = bin()
        .arg("check-signatures")
        .env("NULLCALC_CATALOG", &p)
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    let o = bin()
        .arg("dump-catalog")
        .env("NULLCALC_CATALOG", &p)
        .output()
        .unwrap();
    assert!(stdout(&o).contains("1/2 alpha"));
}

#[test]
fn unreadable_catalog_is_input_error() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("bad.eqn");
    std::fs::write(&p, "name: x\ndir: sideways\n").unwrap();
    assert_eq!(
        code(&run(&[
            "check-signatures",
            "--catalog",
            p.to_str().unwrap()
        ])),
        2
    );
    assert_eq!(
        code(&run(&["check-signatures", "--catalog", "/nonexistent.eqn"])),
        2
    );
}

#[test]
fn signature_json_report() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("sig.json");
    assert_eq!(
        code(&run(&["check-signatures", "--json", p.to_str().unwrap()])),
        0
    );
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(v["schemaVersion"], 1);
    assert_eq!(v["passed"], 26);
}

#[test]
fn dump_catalog_is_shipped_text() {
    let o = run(&["dump-catalog"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), SHIPPED);
}

// ── Commute ──

#[test]
fn commute_matches_golden() {
    let o = run(&["commute", "nab3-omega", "--i", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), golden("commute-nab3-omega-i2.txt"));
}

#[test]
fn commute_symbolic_and_unknown() {
    let o = run(&["commute", "nab4-chih"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("nab4 nab^{i} chih"));
    assert_eq!(code(&run(&["commute", "nab5-omega"])), 2);
}

// ── Certify ──

#[test]
fn certify_all_passes_and_writes_ledger() {
    let dir = TempDir::new().unwrap();
    let ledger = dir.path().join("ledger.md");
    let json = dir.path().join("chains.json");
    let o = run(&[
        "certify",
        "--all",
        "--ledger",
        ledger.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).lines().count() >= 12);
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS ")));
    assert!(std::fs::read_to_string(&ledger).unwrap().contains("## ee4"));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["failed"], 0);
}

#[test]
fn certify_single_and_unknown() {
    let o = run(&["certify", "chih.bd"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 1);
    assert_eq!(code(&run(&["certify", "nope.bd"])), 2);
}

#[test]
fn certify_failing_chain_exits_one() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("bad.chain");
    let src = std::fs::read_to_string(data("chains.chain")).unwrap();
    std::fs::write(
        &p,
        src.replacen(
            "claim a^{1/2} |u|^{-1/2} Rb[rho] + a^{1/2} |u|^{-1/2}",
            "claim a^{-1} |u|^{-1} Rb[rho] + a^{-1} |u|^{-1}",
            1,
        ),
    )
    .unwrap();
    let o = run(&["certify", "--all", "--chains", p.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).lines().next().unwrap().starts_with("FAIL "));
}

#[test]
fn certify_json_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(
        code(&run(&["certify", "--all", "--json", a.to_str().unwrap()])),
        0
    );
    assert_eq!(
        code(&run(&["certify", "--all", "--json", b.to_str().unwrap()])),
        0
    );
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

// ── Formation ──

#[test]
fn formation_default_config_trapped() {
    let dir = TempDir::new().unwrap();
    let r1 = dir.path().join("r1.json");
    let r2 = dir.path().join("r2.json");
    let md = dir.path().join("r.md");
    let csv = dir.path().join("t.csv");
    let cfg = data("default.cfg");
    let cfg = cfg.to_str().unwrap();
    let o = run(&[
        "formation",
        "--config",
        cfg,
        "--report",
        r1.to_str().unwrap(),
        "--markdown",
        md.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("64/64 directions trapped"));
    assert_eq!(
        code(&run(&[
            "formation",
            "--config",
            cfg,
            "--report",
            r2.to_str().unwrap()
        ])),
        0
    );
    let j1 = std::fs::read(&r1).unwrap();
    assert_eq!(j1, std::fs::read(&r2).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&j1).unwrap();
    assert_eq!(v["trapped"], true);
    assert_eq!(v["regime"]["uInf"], -1073741824.0);
    let md = std::fs::read_to_string(&md).unwrap();
    assert!(md.contains("| 0 | 3670144/274878955521 | true |"));
    assert!(std::fs::read_to_string(&csv)
        .unwrap()
        .starts_with("direction,ubar,lower,upper\n"));
}

#[test]
fn formation_exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        code(&run(&[
            "formation",
            "--config",
            config(&dir, SMALL).to_str().unwrap()
        ])),
        0
    );
    let half = format!("{SMALL}mass_target = 0.5 a\n");
    assert_eq!(
        code(&run(&[
            "formation",
            "--config",
            config(&dir, &half).to_str().unwrap()
        ])),
        1
    );
    let infeasible = "a = 1024\nu_inf = -2^30\nn_dirs = 2\ngrid = 33\n";
    assert_eq!(
        code(&run(&[
            "formation",
            "--config",
            config(&dir, infeasible).to_str().unwrap()
        ])),
        1
    );
    let unknown = format!("{SMALL}speed = 3\n");
    assert_eq!(
        code(&run(&[
            "formation",
            "--config",
            config(&dir, &unknown).to_str().unwrap()
        ])),
        2
    );
    assert_eq!(
        code(&run(&["formation", "--config", "/nonexistent.cfg"])),
        2
    );
}

// ── Rescale ──

#[test]
fn rescale_matches_golden() {
    let o = run(&[
        "rescale",
        "a |u|^-3",
        "--delta",
        "delta",
        "--quantity",
        "omegabar",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), golden("rescale-omegabar.txt"));
}

#[test]
fn rescale_numeric_and_verdicts() {
    let o = run(&[
        "rescale",
        "a^{1/2} |u|^-2",
        "--delta",
        "1/2",
        "--kind",
        "ricci",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        stdout(&o),
        "rescaled: 1/2 a^{1/2} |u|^{-2}\nverdict: no improvement claimed\n"
    );
    let o = run(&[
        "rescale",
        "a^{3/2} |u|^-4",
        "--delta",
        "delta",
        "--quantity",
        "betabar",
        "--constraint",
        "delta a/4",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("bound <= 4 *"));
    let o = run(&[
        "rescale",
        "a^{3/2} |u|^-4",
        "--delta",
        "delta",
        "--quantity",
        "betabar",
        "--constraint",
        "delta a^{1/2}",
    ]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("FAIL, residual a^{1/2}"));
}

#[test]
fn rescale_input_errors() {
    assert_eq!(
        code(&run(&[
            "rescale", "a |u|^-3", "--delta", "0", "--kind", "ricci"
        ])),
        2
    );
    assert_eq!(
        code(&run(&[
            "rescale", "a |u|^-3", "--delta", "x", "--kind", "ricci"
        ])),
        2
    );
    assert_eq!(
        code(&run(&[
            "rescale", "a |w|^-3", "--delta", "delta", "--kind", "ricci"
        ])),
        2
    );
    assert_eq!(code(&run(&["rescale", "a |u|^-3", "--delta", "delta"])), 2);
    assert_eq!(
        code(&run(&[
            "rescale",
            "a |u|^-3",
            "--delta",
            "delta",
            "--quantity",
            "K"
        ])),
        2
    );
}

// ── Exit-code contract ──

#[derive(Debug, Clone)]
enum Mutation {
    None,
    UnknownKey,
    BadNumber,
    Duplicate,
    MissingEquals,
    LowMass,
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn formation_exit_code_contract(
        m in prop_oneof![
            Just(Mutation::None),
            Just(Mutation::UnknownKey),
            Just(Mutation::BadNumber),
            Just(Mutation::Duplicate),
            Just(Mutation::MissingEquals),
            Just(Mutation::LowMass),
        ],
        dirs in 1usize..4,
    ) {
        let base = SMALL.replace("n_dirs = 2", &format!("n_dirs = {dirs}"));
        let (body, want) = match m {
            Mutation::None => (base, 0),
            Mutation::UnknownKey => (format!("{base}colour = 1\n"), 2),
            Mutation::BadNumber => (format!("{base}c_M = one\n"), 2),
            Mutation::Duplicate => (format!("{base}grid = 65\n"), 2),
            Mutation::MissingEquals => (format!("{base}c_Omega 1\n"), 2),
            Mutation::LowMass => (format!("{base}mass_target = 0.25 a\n"), 1),
        };
        let dir = TempDir::new().unwrap();
        let o = run(&["formation", "--config", config(&dir, &body).to_str().unwrap()]);
        prop_assert_eq!(code(&o), want);
    }
}
