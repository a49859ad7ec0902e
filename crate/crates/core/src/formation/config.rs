//! Line-oriented `key = value` configuration for formation runs.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase", tag = "kind", content = "path")]
pub enum ProfileKind {
    Constant,
    Bump,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FormationConfig {
    pub a: f64,
    pub u_inf: f64,
    pub n_dirs: usize,
    pub profile: ProfileKind,
    pub mass_target: f64,
    pub c_m: f64,
    pub c_omega: f64,
    pub h: f64,
    pub grid: usize,
    pub o_bound: f64,
    pub r_bound: f64,
}

impl Default for FormationConfig {
    fn default() -> Self {
        let a = 1048576.0;
        FormationConfig {
            a,
            u_inf: -1073741824.0,
            n_dirs: 64,
            profile: ProfileKind::Constant,
            mass_target: a,
            c_m: 1.0,
            c_omega: 1.0,
            h: 1e-4,
            grid: 1025,
            o_bound: 0.5,
            r_bound: 0.5,
        }
    }
}

pub const KEYS: [&str; 11] = [
    "a",
    "u_inf",
    "n_dirs",
    "profile",
    "mass_target",
    "c_M",
    "c_Omega",
    "h",
    "grid",
    "O",
    "R",
];

fn bad(line: usize, msg: impl Into<String>) -> Error {
    Error::Config(format!("line {line}: {}", msg.into()))
}

/// Real number, `b^e` power, or either followed by `a` (a multiple of the
/// `a` value already read).
fn number(s: &str, a: Option<f64>, line: usize) -> Result<f64> {
    let s = s.trim();
    if let Some(rest) = s
        .strip_suffix('a')
        .map(|r| r.trim().trim_end_matches('*').trim())
    {
        let a = a.ok_or_else(|| bad(line, "`a` must be set before it is referenced"))?;
        return Ok(if rest.is_empty() {
            a
        } else {
            number(rest, None, line)? * a
        });
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(b) => (-1.0, b),
        None => (1.0, s),
    };
    let v = match body.split_once('^') {
        Some((b, e)) => {
            let b: f64 = b
                .trim()
                .parse()
                .map_err(|_| bad(line, format!("bad number `{s}`")))?;
            let e: i32 = e
                .trim()
                .parse()
                .map_err(|_| bad(line, format!("bad exponent in `{s}`")))?;
            b.powi(e)
        }
        None => body
            .parse()
            .map_err(|_| bad(line, format!("bad number `{s}`")))?,
    };
    if !v.is_finite() {
        return Err(bad(line, format!("`{s}` is not finite")));
    }
    Ok(sign * v)
}

fn count(s: &str, line: usize) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| bad(line, format!("bad count `{}`", s.trim())))
}

impl FormationConfig {
    /// Parses a config; `file:` profile paths resolve against `base`.
    /// Omitted keys keep their defaults; `mass_target` defaults to `a`.
    pub fn parse(src: &str, base: &Path) -> Result<FormationConfig> {
        let mut c = FormationConfig::default();
        let mut seen = BTreeSet::new();
        let mut mass: Option<f64> = None;
        let mut a_set: Option<f64> = None;
        for (idx, raw) in src.lines().enumerate() {
            let line = idx + 1;
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let (k, v) = text
                .split_once('=')
                .ok_or_else(|| bad(line, "expected `key = value`"))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(bad(line, format!("unknown key `{k}`")));
            }
            if !seen.insert(k.to_string()) {
                return Err(bad(line, format!("duplicate key `{k}`")));
            }
            let a_ref = a_set.or(Some(c.a));
            match k {
                "a" => {
                    c.a = number(v, None, line)?;
                    a_set = Some(c.a);
                }
                "u_inf" => c.u_inf = number(v, a_ref, line)?,
                "n_dirs" => c.n_dirs = count(v, line)?,
                "profile" => {
                    c.profile = match v {
                        "constant" => ProfileKind::Constant,
                        "bump" => ProfileKind::Bump,
                        _ => match v.strip_prefix("file:") {
                            Some(p) if !p.trim().is_empty() => {
                                ProfileKind::File(base.join(p.trim()))
                            }
                            _ => return Err(bad(line, format!("unknown profile `{v}`"))),
                        },
                    }
                }
                "mass_target" => mass = Some(number(v, a_ref, line)?),
                "c_M" => c.c_m = number(v, None, line)?,
                "c_Omega" => c.c_omega = number(v, None, line)?,
                "h" => c.h = number(v, None, line)?,
                "grid" => c.grid = count(v, line)?,
                "O" => c.o_bound = number(v, None, line)?,
                "R" => c.r_bound = number(v, None, line)?,
                _ => unreachable!(),
            }
        }
        c.mass_target = mass.unwrap_or(c.a);
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<FormationConfig> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        FormationConfig::parse(&src, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_dirs == 0 {
            return bad("n_dirs must be positive");
        }
        if self.grid < 3 || self.grid.is_multiple_of(2) {
            return bad("grid must be odd and at least 3");
        }
        if !(self.h > 0.0 && self.h < 1.0) {
            return bad("h must lie in (0, 1)");
        }
        if !(self.c_m >= 0.0 && self.c_omega >= 0.0) {
            return bad("c_M and c_Omega must be non-negative");
        }
        if self.mass_target.is_nan() || self.mass_target < 0.0 {
            return bad("mass_target must be non-negative");
        }
        Ok(())
    }
}
