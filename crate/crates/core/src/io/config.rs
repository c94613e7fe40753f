//! Run configuration: `key = value` lines, `#` starts a comment.
//!
//! ```text
//! extents = 8, 8
//! h = 1.0
//! group = u1
//! k = 1
//! init = hot:0.5
//! seed = 42
//! t_max = 2.0
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::algebra::GroupKind;
use crate::energy::FlowParams;
use crate::error::{Error, Result};
use crate::flow::{default_dt, Integrator};
use crate::lattice::LatticeShape;

#[derive(Debug, Clone, PartialEq)]
pub enum InitMode {
    Cold,
    Hot { amplitude: f64 },
    File(PathBuf),
}

impl FromStr for InitMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "cold" {
            return Ok(InitMode::Cold);
        }
        if let Some(a) = s.strip_prefix("hot:") {
            let amplitude: f64 = a.trim().parse().map_err(|e| format!("amplitude `{a}`: {e}"))?;
            return Ok(InitMode::Hot { amplitude });
        }
        if s == "hot" {
            return Ok(InitMode::Hot { amplitude: 0.5 });
        }
        if let Some(p) = s.strip_prefix("file:") {
            if p.trim().is_empty() {
                return Err("file: needs a path".into());
            }
            return Ok(InitMode::File(PathBuf::from(p.trim())));
        }
        Err(format!("expected cold, hot:<amplitude> or file:<path>, got `{s}`"))
    }
}

impl std::fmt::Display for InitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitMode::Cold => f.write_str("cold"),
            InitMode::Hot { amplitude } => write!(f, "hot:{amplitude}"),
            InitMode::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub extents: Vec<usize>,
    pub spacing: f64,
    pub group: GroupKind,
    pub k: usize,
    pub lambda: f64,
    pub init: InitMode,
    pub seed: u64,
    pub integrator: Integrator,
    pub dt_safety: f64,
    pub t_max: f64,
    /// Step budget; 0 means unlimited.
    pub max_steps: u64,
    pub record_every: u64,
    /// 0 disables periodic snapshots.
    pub snapshot_every: u64,
    pub record_derivatives: bool,
    pub blowup_ceiling: f64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            extents: vec![8, 8],
            spacing: 1.0,
            group: GroupKind::U1,
            k: 1,
            lambda: 0.0,
            init: InitMode::Cold,
            seed: 0,
            integrator: Integrator::Backtracking,
            dt_safety: 0.1,
            t_max: 1.0,
            max_steps: 0,
            record_every: 1,
            snapshot_every: 0,
            record_derivatives: false,
            blowup_ceiling: 1e6,
            out_dir: PathBuf::from("out"),
        }
    }
}

const KEYS: [&str; 17] = [
    "n",
    "extents",
    "h",
    "group",
    "k",
    "lambda",
    "init",
    "seed",
    "integrator",
    "dt_safety",
    "t_max",
    "max_steps",
    "record_every",
    "snapshot_every",
    "record_derivatives",
    "blowup_ceiling",
    "out_dir",
];

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| Error::config(key, format!("`{v}`: {e}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::config(key, format!("expected true or false, got `{v}`"))),
    }
}

fn parse_group(v: &str) -> Result<GroupKind> {
    match v.to_ascii_lowercase().as_str() {
        "u1" | "u(1)" => Ok(GroupKind::U1),
        "su2" | "su(2)" => Ok(GroupKind::Su2),
        _ => Err(Error::config("group", format!("expected u1 or su2, got `{v}`"))),
    }
}

impl RunConfig {
    /// Parses and validates. Unknown or repeated keys are errors; `extents`
    /// and `group` are required, everything else has a default.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<&str> = Vec::new();
        let mut n = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(line, format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, v) = (key.trim(), value.trim());
            let key = *KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| Error::config(key, "unknown key"))?;
            if seen.contains(&key) {
                return Err(Error::config(key, "given more than once"));
            }
            seen.push(key);
            match key {
                "n" => n = Some(parse_value::<usize>(key, v)?),
                "extents" => {
                    let list = v.trim_start_matches('[').trim_end_matches(']');
                    cfg.extents = list
                        .split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|s| !s.is_empty())
                        .map(|s| parse_value(key, s))
                        .collect::<Result<_>>()?;
                }
                "h" => cfg.spacing = parse_value(key, v)?,
                "group" => cfg.group = parse_group(v)?,
                "k" => cfg.k = parse_value(key, v)?,
                "lambda" => cfg.lambda = parse_value(key, v)?,
                "init" => cfg.init = parse_value(key, v)?,
                "seed" => cfg.seed = parse_value(key, v)?,
                "integrator" => {
                    cfg.integrator = v.parse().map_err(|e: Error| Error::config(key, e.to_string()))?
                }
                "dt_safety" => cfg.dt_safety = parse_value(key, v)?,
                "t_max" => cfg.t_max = parse_value(key, v)?,
                "max_steps" => cfg.max_steps = parse_value(key, v)?,
                "record_every" => cfg.record_every = parse_value(key, v)?,
                "snapshot_every" => cfg.snapshot_every = parse_value(key, v)?,
                "record_derivatives" => cfg.record_derivatives = parse_bool(key, v)?,
                "blowup_ceiling" => cfg.blowup_ceiling = parse_value(key, v)?,
                "out_dir" => cfg.out_dir = PathBuf::from(v),
                _ => unreachable!(),
            }
        }
        for required in ["extents", "group"] {
            if !seen.contains(&required) {
                return Err(Error::config(required, "missing required key"));
            }
        }
        if let Some(n) = n {
            if n != cfg.extents.len() {
                return Err(Error::config(
                    "n",
                    format!("n = {n} but {} extents given", cfg.extents.len()),
                ));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let lat = LatticeShape::new(&self.extents, self.spacing).map_err(|e| {
            let key = if self.spacing > 0.0 { "extents" } else { "h" };
            Error::config(key, e.to_string())
        })?;
        let p = self.params()?;
        lat.check_stencil(p.stencil_order())
            .map_err(|e| Error::config("extents", e.to_string()))?;
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(Error::config("dt_safety", format!("must be in (0, 1], got {}", self.dt_safety)));
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(Error::config("t_max", format!("must be finite and >= 0, got {}", self.t_max)));
        }
        if self.record_every == 0 {
            return Err(Error::config("record_every", "must be >= 1"));
        }
        if !(self.blowup_ceiling > 0.0) {
            return Err(Error::config("blowup_ceiling", "must be positive"));
        }
        if let InitMode::Hot { amplitude } = self.init {
            if !(amplitude.is_finite() && amplitude >= 0.0) {
                return Err(Error::config("init", format!("amplitude must be >= 0, got {amplitude}")));
            }
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<LatticeShape> {
        LatticeShape::new(&self.extents, self.spacing)
    }

    pub fn params(&self) -> Result<FlowParams> {
        FlowParams::new(self.k, self.lambda).map_err(|e| {
            let key = if self.k > crate::energy::MAX_K { "k" } else { "lambda" };
            Error::config(key, e.to_string())
        })
    }

    pub fn dt0(&self) -> f64 {
        default_dt(self.spacing, self.k, self.dt_safety)
    }

    /// Canonical `key = value` text; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let ext: Vec<String> = self.extents.iter().map(|e| e.to_string()).collect();
        let group = match self.group {
            GroupKind::U1 => "u1",
            GroupKind::Su2 => "su2",
        };
        let _ = writeln!(s, "n = {}", self.extents.len());
        let _ = writeln!(s, "extents = {}", ext.join(", "));
        let _ = writeln!(s, "h = {:?}", self.spacing);
        let _ = writeln!(s, "group = {group}");
        let _ = writeln!(s, "k = {}", self.k);
        let _ = writeln!(s, "lambda = {:?}", self.lambda);
        let _ = writeln!(s, "init = {}", self.init);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "integrator = {}", self.integrator);
        let _ = writeln!(s, "dt_safety = {:?}", self.dt_safety);
        let _ = writeln!(s, "t_max = {:?}", self.t_max);
        let _ = writeln!(s, "max_steps = {}", self.max_steps);
        let _ = writeln!(s, "record_every = {}", self.record_every);
        let _ = writeln!(s, "snapshot_every = {}", self.snapshot_every);
        let _ = writeln!(s, "record_derivatives = {}", self.record_derivatives);
        let _ = writeln!(s, "blowup_ceiling = {:?}", self.blowup_ceiling);
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(err: Error) -> String {
        match err {
            Error::Config { key, .. } => key,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn parses_full_config() {
        let text = "\
            # reference\n\
            n = 2\n\
            extents = 8, 8\n\
            h = 0.5   # spacing\n\
            group = su2\n\
            k = 2\n\
            lambda = 1\n\
            init = hot:0.25\n\
            seed = 7\n\
            integrator = euler\n\
            dt_safety = 0.5\n\
            t_max = 3\n\
            record_every = 5\n\
            record_derivatives = true\n\
            out_dir = runs/a\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.extents, vec![8, 8]);
        assert_eq!(c.spacing, 0.5);
        assert_eq!(c.group, GroupKind::Su2);
        assert_eq!(c.init, InitMode::Hot { amplitude: 0.25 });
        assert_eq!(c.integrator, Integrator::Euler);
        assert!(c.record_derivatives);
        assert_eq!(c.out_dir, PathBuf::from("runs/a"));
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn diagnostics_name_the_key() {
        let base = "extents = 8, 8\ngroup = u1\n";
        let cases = [
            ("colour = red\n", "colour"),
            ("k = 9\n", "k"),
            ("lambda = -1\n", "lambda"),
            ("dt_safety = 1.5\n", "dt_safety"),
            ("t_max = nan\n", "t_max"),
            ("init = warm\n", "init"),
            ("n = 3\n", "n"),
            ("record_every = 0\n", "record_every"),
            ("record_derivatives = maybe\n", "record_derivatives"),
            ("integrator = rk4\n", "integrator"),
            ("group = su3\n", "group"),
            ("h = 0\n", "h"),
            ("seed = 1\nseed = 2\n", "seed"),
        ];
        for (extra, key) in cases {
            let text = if key == "group" {
                format!("extents = 8, 8\n{extra}")
            } else {
                format!("{base}{extra}")
            };
            assert_eq!(key_of(RunConfig::parse(&text).unwrap_err()), key, "{extra}");
        }
        assert_eq!(key_of(RunConfig::parse("group = u1\n").unwrap_err()), "extents");
        assert_eq!(key_of(RunConfig::parse("extents = 3, 8\ngroup = u1\n").unwrap_err()), "extents");
        assert_eq!(
            key_of(RunConfig::parse("extents = 4, 4\ngroup = u1\nk = 3\n").unwrap_err()),
            "extents"
        );
    }
}
