//! Validated trapped-surface verification along each angular direction.
//!
//! The mass of `|χ̂|²` is carried from the initial outgoing cone to
//! `u = −a/4` with the error budget `c_M a^{7/4}(1/|u| − 1/|u∞|)` and the lapse
//! band `Ω ∈ 1 ± c_Ω O/|u|`, both in exact rationals. The Riccati equation for
//! `Ω⁻¹trχ` is then integrated along `u̅ ∈ [0, 1]` with interval sources.

pub mod config;
pub mod interval;
pub mod ode;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::quantity::{initial_bound_of, normalized_initial, RegimeParameters, INITIAL_TABLE};
use crate::report::SCHEMA_VERSION;

pub use config::{FormationConfig, ProfileKind};
pub use interval::Interval;
use interval::{exact, f64_below, fmt_exact, max0, quarter_root_bounds, rational};
use ode::{interpolate, rk4_monitored, rk4_step, simpson_weights, step_count};

/// Relative tolerance of the Richardson monitor.
pub const REL_TOL: f64 = 1e-6;

fn serialize_exact<S: Serializer>(x: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_exact(x))
}

// ── Profiles ──

/// Samples of `|χ̂₀|²(u∞, u̅)` on a uniform grid over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DirectionProfile {
    pub direction: usize,
    #[serde(skip)]
    pub chi_hat_sq0: Vec<f64>,
    /// `|u∞|² ∫₀¹ |χ̂₀|²` by composite Simpson on the samples.
    pub mass0: f64,
}

impl DirectionProfile {
    pub fn new(direction: usize, chi_hat_sq0: Vec<f64>, u_inf: f64) -> Result<Self> {
        if chi_hat_sq0.len() < 3 || chi_hat_sq0.len().is_multiple_of(2) {
            return Err(Error::Config(format!(
                "direction {direction}: sample count must be odd and at least 3"
            )));
        }
        if let Some(x) = chi_hat_sq0.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::Config(format!(
                "direction {direction}: sample {x} is not a finite non-negative value"
            )));
        }
        let mass0 = u_inf * u_inf * ode::simpson(&chi_hat_sq0);
        Ok(DirectionProfile {
            direction,
            chi_hat_sq0,
            mass0,
        })
    }

    /// `|χ̂₀|² ≡ mass/|u∞|²`.
    pub fn constant(direction: usize, grid: usize, mass: f64, u_inf: f64) -> Result<Self> {
        DirectionProfile::new(direction, vec![mass / (u_inf * u_inf); grid], u_inf)
    }

    /// Gaussian bump whose centre moves with the direction, scaled to `mass`.
    pub fn bump(
        direction: usize,
        n_dirs: usize,
        grid: usize,
        mass: f64,
        u_inf: f64,
    ) -> Result<Self> {
        let centre = 0.3 + 0.4 * direction as f64 / n_dirs.max(1) as f64;
        let shape: Vec<f64> = (0..grid)
            .map(|k| {
                let t = k as f64 / (grid - 1) as f64;
                (-((t - centre) / 0.2).powi(2)).exp()
            })
            .collect();
        let scale = mass / (u_inf * u_inf * ode::simpson(&shape));
        DirectionProfile::new(
            direction,
            shape.into_iter().map(|x| x * scale).collect(),
            u_inf,
        )
    }

    /// Exact `|u∞|²` times the Simpson sum of the samples.
    pub fn mass0_exact(&self, u_inf: f64) -> BigRational {
        let w = simpson_weights(self.chi_hat_sq0.len());
        let mut grouped: BTreeMap<u64, i64> = BTreeMap::new();
        for (x, w) in self.chi_hat_sq0.iter().zip(&w) {
            *grouped.entry(x.to_bits()).or_default() += *w as i64;
        }
        let sum = grouped
            .into_iter()
            .fold(BigRational::zero(), |acc, (x, w)| {
                acc + exact(f64::from_bits(x)) * rational(w, 1)
            });
        let u = exact(u_inf);
        sum * &u * &u / rational(3 * (self.chi_hat_sq0.len() as i64 - 1), 1)
    }
}

/// One line per direction, whitespace or comma separated. A single line is
/// reused for every direction.
pub fn read_profile_file(path: &Path, n_dirs: usize, u_inf: f64) -> Result<Vec<DirectionProfile>> {
    let src =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (idx, line) in src.lines().enumerate() {
        let text = line.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect();
        rows.push(row.map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), idx + 1)))?);
    }
    match rows.len() {
        1 => (0..n_dirs)
            .map(|d| DirectionProfile::new(d, rows[0].clone(), u_inf))
            .collect(),
        n if n == n_dirs => rows
            .into_iter()
            .enumerate()
            .map(|(d, r)| DirectionProfile::new(d, r, u_inf))
            .collect(),
        n => Err(Error::Config(format!(
            "{}: {n} profile rows for {n_dirs} directions",
            path.display()
        ))),
    }
}

pub fn load_profiles(cfg: &FormationConfig) -> Result<Vec<DirectionProfile>> {
    match &cfg.profile {
        ProfileKind::Constant => (0..cfg.n_dirs)
            .map(|d| DirectionProfile::constant(d, cfg.grid, cfg.mass_target, cfg.u_inf))
            .collect(),
        ProfileKind::Bump => (0..cfg.n_dirs)
            .map(|d| DirectionProfile::bump(d, cfg.n_dirs, cfg.grid, cfg.mass_target, cfg.u_inf))
            .collect(),
        ProfileKind::File(p) => read_profile_file(p, cfg.n_dirs, cfg.u_inf),
    }
}

// ── Mass propagation ──

/// `a^{1/4} ≥ 32 c_M`, i.e. `a − 4 c_M a^{3/4} ≥ 7a/8` at `u = −a/4`.
pub fn check_feasible(regime: &RegimeParameters, c_m: f64) -> Result<()> {
    if c_m < 0.0 {
        return Err(Error::Infeasible(format!("c_M = {c_m} is negative")));
    }
    let need = exact(32.0 * c_m);
    let need4 = {
        let s = &need * &need;
        &s * &s
    };
    if exact(regime.a) < need4 {
        return Err(Error::Infeasible(format!(
            "a - 4 c_M a^(3/4) >= 7a/8 needs a^(1/4) >= 32 c_M = {}, but a = {}",
            32.0 * c_m,
            regime.a
        )));
    }
    Ok(())
}

/// Exact lapse band `1 ± c_Ω O/|u|`.
pub fn omega_band_exact(
    regime: &RegimeParameters,
    c_omega: f64,
    u: f64,
) -> Result<(BigRational, BigRational)> {
    let r = exact(c_omega) * exact(regime.o_bound) / exact(u.abs());
    let lo = BigRational::one() - &r;
    if lo <= BigRational::zero() {
        return Err(Error::Infeasible(format!(
            "lapse band 1 - c_Omega O/|u| = {} is not positive",
            f64_below(&lo)
        )));
    }
    Ok((lo, BigRational::one() + r))
}

pub fn omega_band(regime: &RegimeParameters, c_omega: f64, u: f64) -> Result<Interval> {
    let (lo, hi) = omega_band_exact(regime, c_omega, u)?;
    Ok(Interval::from_exact_bounds(&lo, &hi))
}

/// `c_M a^{7/4} (1/|u| − 1/|u∞|)`, rounded up.
pub fn mass_error_budget(regime: &RegimeParameters, c_m: f64, u: f64) -> BigRational {
    let a = exact(regime.a);
    let (_, r_hi) = quarter_root_bounds(&a);
    let span = BigRational::one() / exact(u.abs()) - BigRational::one() / exact(regime.u_inf.abs());
    exact(c_m) * a * &r_hi * &r_hi * &r_hi * max0(span)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MassEnclosure {
    /// `∫₀¹ |u|²Ω²|χ̂|²` at `u = −a/4`.
    pub weighted: Interval,
    /// `∫₀¹ |χ̂|²` at `u = −a/4`.
    pub mass: Interval,
    #[serde(serialize_with = "serialize_exact")]
    pub mass_lower_exact: BigRational,
    /// Pointwise enclosure of `|χ̂|²(−a/4, u̅)` on the sample grid.
    #[serde(skip)]
    pub profile: Vec<Interval>,
}

/// Carries the profile to `u = −a/4`.
pub fn propagate_chihat_sq(
    p: &DirectionProfile,
    regime: &RegimeParameters,
    c_m: f64,
    c_omega: f64,
) -> Result<MassEnclosure> {
    check_feasible(regime, c_m)?;
    let u = -regime.a / 4.0;
    let e = mass_error_budget(regime, c_m, u);
    let (om_lo, om_hi) = omega_band_exact(regime, c_omega, u)?;
    let u2 = exact(u) * exact(u);
    let div_lo = &u2 * &om_hi * &om_hi;
    let div_hi = &u2 * &om_lo * &om_lo;
    let ui2 = exact(regime.u_inf) * exact(regime.u_inf);

    let mass0 = p.mass0_exact(regime.u_inf);
    let w_lo = max0(&mass0 - &e);
    let w_hi = &mass0 + &e;
    let mass_lower_exact = &w_lo / &div_lo;
    let mass = Interval::from_exact_bounds(&mass_lower_exact, &(&w_hi / &div_hi));

    let mut cache: BTreeMap<u64, Interval> = BTreeMap::new();
    let profile = p
        .chi_hat_sq0
        .iter()
        .map(|x| {
            *cache.entry(x.to_bits()).or_insert_with(|| {
                let w = exact(*x) * &ui2;
                Interval::from_exact_bounds(&(max0(&w - &e) / &div_lo), &((&w + &e) / &div_hi))
            })
        })
        .collect();
    Ok(MassEnclosure {
        weighted: Interval::from_exact_bounds(&w_lo, &w_hi),
        mass,
        mass_lower_exact,
        profile,
    })
}

// ── Raychaudhuri ──

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RaychaudhuriResult {
    /// Enclosure of `Ω⁻¹trχ` at `u̅ = 1`.
    pub value: Interval,
    /// `trχ₀ − ∫₀¹ |χ̂|²` from the lower source samples.
    pub relaxed_upper: f64,
    pub error_estimate: f64,
    pub steps: usize,
}

fn lower_samples(s: &[Interval]) -> Vec<f64> {
    s.iter().map(|i| i.lo).collect()
}

fn upper_samples(s: &[Interval]) -> Vec<f64> {
    s.iter().map(|i| i.hi).collect()
}

/// Upper bound of the Simpson integral of interval samples.
fn simpson_interval(s: &[Interval]) -> Interval {
    let w = simpson_weights(s.len());
    let sum = s.iter().zip(&w).fold(Interval::point(0.0), |acc, (x, w)| {
        acc + *x * Interval::point(*w as f64)
    });
    sum * Interval::point(1.0)
        .checked_div(Interval::point(3.0 * (s.len() - 1) as f64))
        .expect("non-zero")
}

/// Integrates `∂_u̅(Ω⁻¹trχ) = −½Ω²(Ω⁻¹trχ)² − |χ̂|²` over `u̅ ∈ [0, 1]`.
///
/// The right-hand side decreases in both `Ω²` and `|χ̂|²`, so the extremal
/// parameter choices bound the solution from above and below.
pub fn integrate_raychaudhuri(
    tr_chi0: f64,
    chi_hat_sq: &[Interval],
    omega_band: Interval,
    h: f64,
) -> Result<RaychaudhuriResult> {
    if chi_hat_sq.len() < 3 || chi_hat_sq.len().is_multiple_of(2) {
        return Err(Error::Config(
            "source grid must be odd and at least 3".into(),
        ));
    }
    let om2 = omega_band.sqr();
    let (s_lo, s_hi) = (lower_samples(chi_hat_sq), upper_samples(chi_hat_sq));
    let upper_rhs = |t: f64, f: f64| -0.5 * om2.lo * f * f - interpolate(&s_lo, t);
    let lower_rhs = |t: f64, f: f64| -0.5 * om2.hi * f * f - interpolate(&s_hi, t);
    let floor = tr_chi0.abs().max(f64::MIN_POSITIVE);
    let up = rk4_monitored(&upper_rhs, 0.0, 1.0, tr_chi0, h, REL_TOL, floor)?;
    let dn = rk4_monitored(&lower_rhs, 0.0, 1.0, tr_chi0, h, REL_TOL, floor)?;
    let pad = |r: &ode::Integration| {
        2.0 * r.error_estimate
            + r.steps as f64 * 8.0 * f64::EPSILON * r.value.abs().max(tr_chi0.abs())
    };
    let value = Interval::new(
        (dn.value - pad(&dn)).next_down(),
        (up.value + pad(&up)).next_up(),
    );
    let relaxed_upper = (Interval::point(tr_chi0) - simpson_interval(chi_hat_sq)).hi;
    Ok(RaychaudhuriResult {
        value,
        relaxed_upper,
        error_estimate: up.error_estimate.max(dn.error_estimate),
        steps: up.steps,
    })
}

/// Samples of the upper and lower Raychaudhuri runs at `points + 1` nodes.
pub fn raychaudhuri_trajectory(
    tr_chi0: f64,
    chi_hat_sq: &[Interval],
    omega_band: Interval,
    h: f64,
    points: usize,
) -> Result<Vec<(f64, f64, f64)>> {
    let om2 = omega_band.sqr();
    let (s_lo, s_hi) = (lower_samples(chi_hat_sq), upper_samples(chi_hat_sq));
    let upper_rhs = |t: f64, f: f64| -0.5 * om2.lo * f * f - interpolate(&s_lo, t);
    let lower_rhs = |t: f64, f: f64| -0.5 * om2.hi * f * f - interpolate(&s_hi, t);
    let n = step_count(1.0, h)?;
    let dt = 1.0 / n as f64;
    let every = (n / points.max(1)).max(1);
    let (mut lo, mut hi) = (tr_chi0, tr_chi0);
    let mut out = vec![(0.0, lo, hi)];
    for k in 0..n {
        let t = k as f64 * dt;
        lo = rk4_step(&lower_rhs, t, lo, dt);
        hi = rk4_step(&upper_rhs, t, hi, dt);
        if (k + 1) % every == 0 || k + 1 == n {
            out.push(((k + 1) as f64 * dt, lo, hi));
        }
    }
    out.dedup_by(|a, b| a.0 == b.0);
    Ok(out)
}

// ── Incoming expansion ──

/// `trχ̄ ∈ −2/|u| ± 1/|u|²`.
pub fn trchibar_at(u: f64) -> Interval {
    let r = BigRational::one() / exact(u.abs());
    let mid = -rational(2, 1) * &r;
    let rad = &r * &r;
    Interval::from_exact_bounds(&(&mid - &rad), &(&mid + &rad))
}

/// `trχ̄(−a/4, 1)`.
pub fn check_trchibar(regime: &RegimeParameters) -> Interval {
    trchibar_at(regime.a / 4.0)
}

// ── Report ──

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DirectionRecord {
    pub direction: usize,
    pub mass0: f64,
    pub mass_at_inner_cone: Interval,
    #[serde(serialize_with = "serialize_exact")]
    pub mass_lower_exact: BigRational,
    /// `mass_lower_exact ≥ 12/a`.
    pub mass_certified: bool,
    pub tr_chi_final: Interval,
    pub tr_chi_bar_final: Interval,
    pub relaxed_upper: f64,
    /// `8/a − 16 mass0/a²`.
    pub heuristic_tr_chi: f64,
    pub error_estimate: f64,
    pub trapped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunMetadata {
    pub integrator: &'static str,
    pub steps: usize,
    pub rel_tol: f64,
    pub version: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FormationReport {
    pub schema_version: u32,
    pub parameters: FormationConfig,
    pub regime: RegimeParameters,
    pub trapped: bool,
    pub trapped_count: usize,
    pub directions: Vec<DirectionRecord>,
    pub metadata: RunMetadata,
}

pub fn regime_of(cfg: &FormationConfig) -> Result<RegimeParameters> {
    RegimeParameters::new(cfg.a, cfg.u_inf, 1.0, cfg.o_bound, cfg.r_bound)
}

fn run_direction(
    p: &DirectionProfile,
    cfg: &FormationConfig,
    regime: &RegimeParameters,
    tr_chi_bar: Interval,
) -> Result<(DirectionRecord, usize)> {
    let a = regime.a;
    let m = propagate_chihat_sq(p, regime, cfg.c_m, cfg.c_omega)?;
    let band = omega_band(regime, cfg.c_omega, -a / 4.0)?;
    let r = integrate_raychaudhuri(8.0 / a, &m.profile, band, cfg.h)?;
    let tr_chi_final = band * r.value;
    let mass_certified = m.mass_lower_exact >= rational(12, 1) / exact(a);
    let rec = DirectionRecord {
        direction: p.direction,
        mass0: p.mass0,
        mass_at_inner_cone: m.mass,
        mass_lower_exact: m.mass_lower_exact,
        mass_certified,
        tr_chi_final,
        tr_chi_bar_final: tr_chi_bar,
        relaxed_upper: r.relaxed_upper,
        heuristic_tr_chi: 8.0 / a - 16.0 * p.mass0 / (a * a),
        error_estimate: r.error_estimate,
        trapped: tr_chi_final.hi < 0.0 && tr_chi_bar.hi < 0.0,
    };
    Ok((rec, r.steps))
}

/// Propagation, Raychaudhuri integration and the `trχ̄` check per direction.
pub fn run_formation(cfg: &FormationConfig) -> Result<FormationReport> {
    cfg.validate()?;
    let regime = regime_of(cfg)?;
    check_feasible(&regime, cfg.c_m)?;
    let profiles = load_profiles(cfg)?;
    let tr_chi_bar = check_trchibar(&regime);
    let results: Vec<(DirectionRecord, usize)> = profiles
        .par_iter()
        .map(|p| run_direction(p, cfg, &regime, tr_chi_bar))
        .collect::<Result<_>>()?;
    let steps = results.first().map(|r| r.1).unwrap_or(0);
    let directions: Vec<DirectionRecord> = results.into_iter().map(|r| r.0).collect();
    let trapped_count = directions.iter().filter(|d| d.trapped).count();
    Ok(FormationReport {
        schema_version: SCHEMA_VERSION,
        parameters: cfg.clone(),
        regime,
        trapped: trapped_count == directions.len(),
        trapped_count,
        directions,
        metadata: RunMetadata {
            integrator: "rk4-richardson",
            steps,
            rel_tol: REL_TOL,
            version: env!("CARGO_PKG_VERSION"),
        },
    })
}

/// `direction,ubar,lower,upper` rows of `Ω⁻¹trχ` for every direction.
pub fn trajectories_csv(cfg: &FormationConfig, points: usize) -> Result<String> {
    let regime = regime_of(cfg)?;
    let band = omega_band(&regime, cfg.c_omega, -regime.a / 4.0)?;
    let mut out = String::from("direction,ubar,lower,upper\n");
    for p in load_profiles(cfg)? {
        let m = propagate_chihat_sq(&p, &regime, cfg.c_m, cfg.c_omega)?;
        for (t, lo, hi) in raychaudhuri_trajectory(8.0 / regime.a, &m.profile, band, cfg.h, points)?
        {
            writeln!(out, "{},{t},{lo:e},{hi:e}", p.direction).expect("string write");
        }
    }
    Ok(out)
}

// ── Initial hierarchy ──

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct HierarchyRow {
    pub quantity: String,
    pub bound: String,
    pub bound_value: f64,
    pub normalized: String,
    pub normalized_value: f64,
    pub within_unit: bool,
}

/// Initial-cone bounds evaluated at the regime and normalized by the
/// scale-invariant weight and anomaly factor.
pub fn heuristic_hierarchy_table(regime: &RegimeParameters) -> Vec<HierarchyRow> {
    let ev = |m: &crate::WeightMonomial| {
        m.eval(
            regime.a,
            regime.u_inf,
            regime.u_inf,
            regime.o_bound,
            regime.r_bound,
            regime.delta,
        )
    };
    INITIAL_TABLE
        .iter()
        .map(|name| {
            let bound = initial_bound_of(name, regime).expect("listed bound");
            let norm = normalized_initial(name, regime).expect("listed bound");
            let normalized_value = ev(&norm);
            HierarchyRow {
                quantity: name.to_string(),
                bound: bound.to_string(),
                bound_value: ev(&bound),
                normalized: norm.to_string(),
                normalized_value,
                within_unit: normalized_value <= 1.0 + 1e-12,
            }
        })
        .collect()
}
