//! Command-line front end: catalog checks, commutation, chain certification,
//! formation runs and rescaling.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use nullcalc::budget::chain::{
    certify_chain, parse_chains, render_ledger, Chain, ChainCorpus, ChainVerdict,
};
use nullcalc::budget::Status;
use nullcalc::commute::{commute, Count};
use nullcalc::dsl::catalog::{load_catalog, SHIPPED};
use nullcalc::dsl::EquationCatalog;
use nullcalc::formation::config::FormationConfig;
use nullcalc::formation::{run_formation, trajectories_csv};
use nullcalc::report::{markdown_report, to_json, SCHEMA_VERSION};
use nullcalc::rescale::{
    dominance_after_rescale, kind_of, rescale_bound, Bound, Constraint, Factor, ImprovementVerdict,
    ObjectKind, INTERIOR_BOUNDS,
};
use nullcalc::{Error, RegimeParameters};
use rayon::prelude::*;

#[derive(Parser)]
#[command(
    name = "nullcalc",
    version,
    about = "Signature, commutation, budget, formation and rescaling checks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check homogeneity of every catalog equation.
    CheckSignatures {
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Write the JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Print the equation commuted with `i` angular derivatives.
    Commute {
        name: String,
        /// Literal derivative count; symbolic `i` when omitted.
        #[arg(long = "i")]
        i: Option<u32>,
    },
    /// Certify one estimate chain, or all of them.
    Certify(CertifyArgs),
    /// Run the trapped-surface formation check.
    Formation {
        #[arg(long)]
        config: PathBuf,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write the Markdown view of the report here.
        #[arg(long)]
        markdown: Option<PathBuf>,
        /// Write expansion trajectories as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 65)]
        csv_points: usize,
    },
    /// Rescale a bound by δ and compare it with a target.
    Rescale(RescaleArgs),
    /// Print the equation catalog in DSL syntax.
    DumpCatalog,
}

#[derive(Args)]
struct CertifyArgs {
    /// Chain name.
    name: Option<String>,
    #[arg(long, conflicts_with = "name")]
    all: bool,
    /// Chain corpus file; the shipped corpus when omitted.
    #[arg(long)]
    chains: Option<PathBuf>,
    /// Write the Markdown ledger here.
    #[arg(long)]
    ledger: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct RescaleArgs {
    /// Bound in monomial syntax, e.g. `a |u|^-3`.
    monomial: String,
    /// `delta` for the symbolic map, or a positive rational such as `1/4`.
    #[arg(long)]
    delta: String,
    /// Quantity the bound belongs to; fixes the homogeneity.
    #[arg(long)]
    quantity: Option<String>,
    /// Homogeneity class when no quantity is given.
    #[arg(long, value_parser = parse_kind, conflicts_with = "quantity")]
    kind: Option<ObjectKind>,
    /// Lower bound on |u'|: `delta a/4`, `delta a` or `delta a^{1/2}`.
    #[arg(long)]
    constraint: Option<String>,
    /// Target bound for the comparison.
    #[arg(long)]
    target: Option<String>,
}

fn parse_kind(s: &str) -> Result<ObjectKind, String> {
    Ok(match s {
        "coordinate" => ObjectKind::Coordinate,
        "metric" => ObjectKind::Metric,
        "inverse-metric" => ObjectKind::InverseMetric,
        "christoffel" => ObjectKind::Christoffel,
        "riemann-lowered" => ObjectKind::RiemannLowered,
        "ricci" => ObjectKind::Ricci,
        "curvature" => ObjectKind::Curvature,
        _ => return Err(format!("unknown kind `{s}`")),
    })
}

fn write(path: &Path, body: &str) -> anyhow::Result<()> {
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn read_catalog(path: Option<&Path>) -> anyhow::Result<(EquationCatalog, String)> {
    let path = path
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os("NULLCALC_CATALOG").map(PathBuf::from));
    match path {
        Some(p) => {
            let src =
                std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
            let cat = load_catalog(&src).with_context(|| format!("parsing {}", p.display()))?;
            Ok((cat, src))
        }
        None => Ok((EquationCatalog::shipped()?, SHIPPED.to_string())),
    }
}

fn check_signatures(catalog: Option<PathBuf>, json: Option<PathBuf>) -> anyhow::Result<bool> {
    let (cat, _) = read_catalog(catalog.as_deref())?;
    let report = nullcalc::signature::check_catalog(&cat);
    for e in &report.entries {
        println!("{} {}", e.verdict, e.name);
        for t in e.term_signatures.iter().filter(|t| !t.pass) {
            println!("  {} : {} (target {})", t.term, t.signature, e.target);
        }
    }
    println!("{} passed, {} failed", report.passed, report.failed);
    if let Some(p) = json {
        write(&p, &to_json(&report))?;
    }
    Ok(report.all_pass())
}

fn commute_cmd(name: &str, i: Option<u32>) -> anyhow::Result<bool> {
    let (cat, _) = read_catalog(None)?;
    let e = cat
        .get(name)
        .ok_or_else(|| Error::MissingEquation(name.to_string()))?;
    let count = match i {
        Some(n) => Count::Lit(n),
        None => Count::Sym,
    };
    print!("{}", commute(e, count)?);
    Ok(true)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CertifyReport<'a> {
    schema_version: u32,
    regime: &'a RegimeParameters,
    chains: Vec<ChainVerdict>,
    errors: Vec<ChainError>,
    failed: usize,
}

#[derive(Serialize)]
struct ChainError {
    chain: String,
    error: String,
}

fn certify(args: CertifyArgs) -> anyhow::Result<bool> {
    let corpus = match &args.chains {
        Some(p) => {
            let src =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_chains(&src).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ChainCorpus::shipped()?,
    };
    let selected: Vec<&Chain> = match (&args.name, args.all) {
        (Some(n), false) => vec![corpus
            .get(n)
            .ok_or_else(|| anyhow!("unknown chain `{n}`"))?],
        (None, true) => corpus.chains.iter().collect(),
        _ => bail!("give a chain name or --all"),
    };
    let (cat, _) = read_catalog(None)?;
    let regime = RegimeParameters::desk();
    let results: Vec<_> = selected
        .par_iter()
        .map(|c| certify_chain(c, &corpus, &cat, &regime))
        .collect();
    let mut chains = Vec::new();
    let mut errors = Vec::new();
    for (c, r) in selected.iter().zip(results) {
        match r {
            Ok(v) => {
                let slack = v
                    .slack
                    .map(|s| nullcalc::rational::fmt_q(&s))
                    .unwrap_or_else(|| "-".into());
                let tag = if v.status == Status::Fails {
                    "FAIL"
                } else {
                    "PASS"
                };
                println!(
                    "{tag} {} {} slack {slack} bound {}",
                    v.name, v.status, v.bound
                );
                chains.push(v);
            }
            Err(e) => {
                println!("FAIL {} error: {e}", c.name);
                errors.push(ChainError {
                    chain: c.name.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    let failed = chains.iter().filter(|v| v.status == Status::Fails).count() + errors.len();
    if let Some(p) = &args.ledger {
        let body: Vec<String> = chains.iter().map(render_ledger).collect();
        write(
            p,
            &format!("# Estimate chain ledger\n\n{}", body.join("\n")),
        )?;
    }
    if let Some(p) = &args.json {
        let report = CertifyReport {
            schema_version: SCHEMA_VERSION,
            regime: &regime,
            chains,
            errors,
            failed,
        };
        write(p, &to_json(&report))?;
    }
    Ok(failed == 0)
}

fn formation(
    config: &Path,
    report: Option<PathBuf>,
    markdown: Option<PathBuf>,
    csv: Option<PathBuf>,
    csv_points: usize,
) -> anyhow::Result<bool> {
    let cfg = FormationConfig::load(config)?;
    let r = run_formation(&cfg)?;
    for d in &r.directions {
        println!(
            "direction {:>3} {} trChi <= {:e} trChiBar <= {:e}",
            d.direction,
            if d.trapped { "trapped" } else { "NOT trapped" },
            d.tr_chi_final.hi,
            d.tr_chi_bar_final.hi
        );
    }
    println!(
        "{}/{} directions trapped",
        r.trapped_count,
        r.directions.len()
    );
    let json = to_json(&r);
    if let Some(p) = report {
        write(&p, &json)?;
    }
    if let Some(p) = markdown {
        let keys = [
            "direction",
            "massLowerExact",
            "trapped",
            "relaxedUpper",
            "heuristicTrChi",
        ];
        write(
            &p,
            &markdown_report("Formation report", &json, "directions", &keys),
        )?;
    }
    if let Some(p) = csv {
        write(&p, &trajectories_csv(&cfg, csv_points)?)?;
    }
    Ok(r.trapped)
}

fn parse_delta(s: &str) -> anyhow::Result<Factor> {
    if s == "delta" || s == "δ" {
        return Ok(Factor::delta());
    }
    let (n, d) = s.split_once('/').unwrap_or((s, "1"));
    let n: BigInt = n.trim().parse().map_err(|_| anyhow!("bad --delta `{s}`"))?;
    let d: BigInt = d.trim().parse().map_err(|_| anyhow!("bad --delta `{s}`"))?;
    if d == BigInt::from(0) {
        bail!("bad --delta `{s}`");
    }
    Ok(Factor::value(BigRational::new(n, d))?)
}

fn rescale_cmd(args: RescaleArgs) -> anyhow::Result<bool> {
    let bound = Bound::parse(&args.monomial)?;
    let factor = parse_delta(&args.delta)?;
    let kind = match (&args.quantity, args.kind) {
        (Some(q), _) => kind_of(q)?,
        (None, Some(k)) => k,
        (None, None) => bail!("give --quantity or --kind"),
    };
    let out = rescale_bound(&bound, kind, &factor)?;
    println!("rescaled: {out}");
    let boxed = args
        .quantity
        .as_deref()
        .and_then(|q| INTERIOR_BOUNDS.iter().find(|r| r.0 == q))
        .and_then(|r| r.2);
    let target = match (&args.target, boxed) {
        (Some(t), _) => Some(Bound::parse(t)?),
        (None, Some((t, _))) => Some(Bound::parse(t)?),
        (None, None) => None,
    };
    let constraint = match (&args.constraint, boxed) {
        (Some(c), _) => Constraint::parse(c)?,
        (None, Some((_, c))) => c,
        (None, None) => Constraint::DeltaA,
    };
    let Some(target) = target else {
        println!("verdict: no improvement claimed");
        return Ok(true);
    };
    if !factor.0.coeff.is_one() && factor.0.coeff > BigRational::one() {
        bail!("comparisons assume delta <= 1");
    }
    // The comparison runs in the symbolic map; numeric δ only changes the printout.
    let symbolic = rescale_bound(&bound, kind, &Factor::delta())?;
    let v = dominance_after_rescale(&symbolic, &target, constraint);
    match &v {
        ImprovementVerdict::Pass { constant } => {
            println!(
                "verdict: PASS, bound <= {} * ({target}) under {constraint}",
                nullcalc::rescale::fmt_big(constant)
            )
        }
        ImprovementVerdict::Fail { residual } => {
            println!("verdict: FAIL, residual {residual} under {constraint}")
        }
        ImprovementVerdict::NoImprovementClaimed => println!("verdict: no improvement claimed"),
    }
    Ok(v.passed())
}

fn dump_catalog() -> anyhow::Result<bool> {
    let (_, src) = read_catalog(None)?;
    print!("{src}");
    Ok(true)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.cmd {
        Cmd::CheckSignatures { catalog, json } => check_signatures(catalog, json),
        Cmd::Commute { name, i } => commute_cmd(&name, i),
        Cmd::Certify(a) => certify(a),
        Cmd::Formation {
            config,
            report,
            markdown,
            csv,
            csv_points,
        } => formation(&config, report, markdown, csv, csv_points),
        Cmd::Rescale(a) => rescale_cmd(a),
        Cmd::DumpCatalog => dump_catalog(),
    }
}

/// Infeasible parameters and rejected steps are failed checks; everything
/// else that errors is bad input.
fn exit_for(err: &anyhow::Error) -> u8 {
    let failed = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<Error>(),
            Some(Error::Infeasible(_) | Error::StepRejected(_))
        )
    });
    if failed {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_for(&e))
        }
    }
}
