//! Flat `key = value` experiment configuration, shared by the subcommands
//! and by config files.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::potential::RadialPotential;
use crate::shooting::ShootingConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundsKind {
    WBeta,
    Lower,
    Gamma,
    Energy,
    Fiddgr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Shoot,
    ElsFind,
    Bbup,
    Transform,
    UniqGap,
    Bounds(BoundsKind),
    KoCheck,
    HrhoCheck,
    EllipsoidSweep,
    NoMaximalDemo,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let bounds = |b: &str| match b {
            "wbeta" => Ok(BoundsKind::WBeta),
            "lower" => Ok(BoundsKind::Lower),
            "gamma" => Ok(BoundsKind::Gamma),
            "energy" => Ok(BoundsKind::Energy),
            "fiddgr" => Ok(BoundsKind::Fiddgr),
            other => Err(Error::Parse(format!("unknown bounds check '{other}'"))),
        };
        if let Some(b) = s.strip_prefix("bounds:").or_else(|| s.strip_prefix("bounds-")) {
            return Ok(Self::Bounds(bounds(b)?));
        }
        Ok(match s {
            "shoot" => Self::Shoot,
            "els-find" => Self::ElsFind,
            "bbup" => Self::Bbup,
            "transform" => Self::Transform,
            "uniq-gap" => Self::UniqGap,
            "ko-check" => Self::KoCheck,
            "hrho-check" => Self::HrhoCheck,
            "ellipsoid-sweep" => Self::EllipsoidSweep,
            "no-maximal-demo" => Self::NoMaximalDemo,
            other => return Err(Error::Parse(format!("unknown experiment '{other}'"))),
        })
    }

    /// Experiment-specific keys beyond the common ones.
    fn keys(&self) -> &'static [&'static str] {
        match self {
            Self::Shoot => &["u0", "du0"],
            Self::ElsFind => &["u1"],
            Self::Bbup => &["m", "R", "u0s"],
            Self::Transform => &["in", "alpha"],
            Self::UniqGap => &["a", "b", "alpha", "u1", "u2", "report_radius"],
            Self::Bounds(BoundsKind::WBeta) => &["beta", "r_lo", "r_hi", "per_decade"],
            Self::Bounds(BoundsKind::Lower) => &["in", "u1"],
            Self::Bounds(BoundsKind::Gamma) => &["in", "u1", "alpha", "c"],
            Self::Bounds(BoundsKind::Energy) => &["in", "u1", "R"],
            Self::Bounds(BoundsKind::Fiddgr) => &["M"],
            Self::KoCheck => &["lower"],
            Self::HrhoCheck => &[],
            Self::EllipsoidSweep => &["a", "alpha_min", "alpha_max", "steps", "samples", "level"],
            Self::NoMaximalDemo => &["tk", "u1"],
        }
    }

    /// Shooting defaults before overrides. The shifted oscillating
    /// nonlinearities of the demo force the stepper to resolve every
    /// oscillation of `f`, so that run uses shorter horizons and looser
    /// tolerances.
    pub fn base_shooting(&self) -> ShootingConfig {
        match self {
            Self::NoMaximalDemo => ShootingConfig {
                r_max: 10.0,
                probe_horizon: 30.0,
                separatrix_rel_width: 1e-6,
                ..ShootingConfig::default()
            }
            .scaled(1e3),
            _ => ShootingConfig::default(),
        }
    }

    pub fn default_stem(&self) -> String {
        match self {
            Self::Bounds(b) => format!("bounds-{}", BoundsKind::name(*b)),
            other => other.to_string(),
        }
    }
}

impl BoundsKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::WBeta => "wbeta",
            Self::Lower => "lower",
            Self::Gamma => "gamma",
            Self::Energy => "energy",
            Self::Fiddgr => "fiddgr",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Shoot => "shoot",
            Self::ElsFind => "els-find",
            Self::Bbup => "bbup",
            Self::Transform => "transform",
            Self::UniqGap => "uniq-gap",
            Self::Bounds(b) => return write!(f, "bounds:{}", b.name()),
            Self::KoCheck => "ko-check",
            Self::HrhoCheck => "hrho-check",
            Self::EllipsoidSweep => "ellipsoid-sweep",
            Self::NoMaximalDemo => "no-maximal-demo",
        };
        f.write_str(s)
    }
}

const SHOOTING_KEYS: &[&str] = &[
    "rel_tol",
    "abs_tol",
    "r_max",
    "rmax",
    "blowup_threshold",
    "max_bisect",
    "r0",
    "probe_horizon",
    "separatrix_rel_width",
    "tol_scale",
];

const COMMON_KEYS: &[&str] = &["experiment", "nl", "f", "pot", "D", "out", "out_dir"];

/// Raw `key = value` pairs of a config file.
pub fn read_map(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("{}:{}: expected key = value", path.display(), n + 1)))?;
        if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(Error::Parse(format!("{}:{}: duplicate key '{}'", path.display(), n + 1, k.trim())));
        }
    }
    Ok(map)
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub nl: Option<String>,
    pub pot: Option<String>,
    pub dim: usize,
    pub shooting: ShootingConfig,
    /// Experiment-specific values, keyed as in the config file.
    pub params: BTreeMap<String, String>,
    pub out_dir: PathBuf,
    /// File name of the main CSV; the JSON verdict shares its stem.
    pub out: Option<String>,
}

fn number(key: &str, v: &str) -> Result<f64> {
    let v = v.trim();
    match v {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        _ => v.parse().map_err(|_| Error::Parse(format!("{key}: not a number: '{v}'"))),
    }
}

impl ExperimentConfig {
    /// Builds and validates a configuration from raw key-value pairs.
    pub fn from_map(mut map: BTreeMap<String, String>) -> Result<Self> {
        let kind = ExperimentKind::parse(
            &map.remove("experiment")
                .ok_or_else(|| Error::Parse("missing 'experiment' key".into()))?,
        )?;
        for k in map.keys() {
            let known = COMMON_KEYS.contains(&k.as_str()) || SHOOTING_KEYS.contains(&k.as_str()) || kind.keys().contains(&k.as_str());
            if !known {
                return Err(Error::Parse(format!("unknown key '{k}' for experiment {kind}")));
            }
        }
        let nl = map.remove("nl").or_else(|| map.remove("f"));
        if let Some(k) = &nl {
            Nonlinearity::parse(k)?;
        }
        let pot = map.remove("pot");
        if let Some(k) = &pot {
            RadialPotential::parse(k)?;
        }
        let dim = match map.remove("D") {
            Some(v) => v.trim().parse::<usize>().map_err(|_| Error::Parse(format!("D: not an integer: '{v}'")))?,
            None => 3,
        };
        if dim < 3 {
            return Err(Error::Domain(format!("dimension must be ≥ 3, got {dim}")));
        }
        let mut shooting = kind.base_shooting();
        let mut scale = 1.0;
        for key in SHOOTING_KEYS {
            let Some(v) = map.remove(*key) else { continue };
            let x = number(key, &v)?;
            match *key {
                "rel_tol" => shooting.rel_tol = x,
                "abs_tol" => shooting.abs_tol = x,
                "r_max" | "rmax" => shooting.r_max = x,
                "blowup_threshold" => shooting.blowup_threshold = x,
                "max_bisect" => shooting.max_bisect = x as usize,
                "r0" => shooting.r0 = Some(x),
                "probe_horizon" => shooting.probe_horizon = x,
                "separatrix_rel_width" => shooting.separatrix_rel_width = x,
                _ => scale = x,
            }
        }
        if !(scale > 0.0) {
            return Err(Error::Domain(format!("tol_scale must be positive, got {scale}")));
        }
        shooting = shooting.scaled(scale);
        if !(shooting.r_max > 0.0) || !(shooting.rel_tol > 0.0) || !(shooting.abs_tol > 0.0) {
            return Err(Error::Domain("r_max and tolerances must be positive".into()));
        }
        let out_dir = PathBuf::from(map.remove("out_dir").unwrap_or_else(|| ".".into()));
        let out = map.remove("out");
        let cfg = Self {
            kind,
            nl,
            pot,
            dim,
            shooting,
            params: map,
            out_dir,
            out,
        };
        cfg.validate_requirements()?;
        Ok(cfg)
    }

    /// Parses a config file: one `key = value` per line, `#` comments.
    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_map(read_map(path)?)
    }

    fn validate_requirements(&self) -> Result<()> {
        let need = |what: &str, present: bool| {
            if present {
                Ok(())
            } else {
                Err(Error::Parse(format!("experiment {} needs '{what}'", self.kind)))
            }
        };
        let has = |k: &str| self.params.contains_key(k);
        let from_file = has("in");
        match self.kind {
            ExperimentKind::Shoot => {
                need("nl", self.nl.is_some())?;
                need("pot", self.pot.is_some())?;
                need("u0", has("u0"))?;
                need("du0", has("du0"))
            }
            ExperimentKind::ElsFind => {
                need("nl", self.nl.is_some())?;
                need("pot", self.pot.is_some())?;
                need("u1", has("u1"))
            }
            ExperimentKind::Bbup => need("nl", self.nl.is_some()),
            ExperimentKind::Transform => {
                need("in", from_file)?;
                need("alpha", has("alpha"))
            }
            ExperimentKind::UniqGap => {
                if has("a") || has("b") {
                    need("a", has("a"))?;
                    need("b", has("b"))?;
                    need("alpha", has("alpha"))
                } else {
                    need("nl", self.nl.is_some())?;
                    need("pot", self.pot.is_some())?;
                    need("u1", has("u1"))?;
                    need("u2", has("u2"))
                }
            }
            ExperimentKind::Bounds(BoundsKind::WBeta) => {
                need("nl", self.nl.is_some())?;
                need("pot", self.pot.is_some())?;
                need("beta", has("beta"))
            }
            ExperimentKind::Bounds(BoundsKind::Fiddgr) | ExperimentKind::KoCheck => need("nl", self.nl.is_some()),
            ExperimentKind::Bounds(b) => {
                need("nl", self.nl.is_some())?;
                need("in or u1", from_file || has("u1"))?;
                // the Γ ceiling needs the potential only to compute the solution
                need("pot", self.pot.is_some() || (from_file && b == BoundsKind::Gamma))
            }
            ExperimentKind::HrhoCheck => need("pot", self.pot.is_some()),
            ExperimentKind::EllipsoidSweep => need("a", has("a")),
            ExperimentKind::NoMaximalDemo => Ok(()),
        }
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        Nonlinearity::parse(self.nl.as_deref().ok_or_else(|| Error::Parse("missing 'nl'".into()))?)
    }

    pub fn potential(&self) -> Result<RadialPotential> {
        RadialPotential::parse(self.pot.as_deref().ok_or_else(|| Error::Parse("missing 'pot'".into()))?)
    }

    pub fn num(&self, key: &str) -> Result<Option<f64>> {
        self.params.get(key).map(|v| number(key, v)).transpose()
    }

    pub fn num_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.num(key)?.unwrap_or(default))
    }

    pub fn req(&self, key: &str) -> Result<f64> {
        self.num(key)?
            .ok_or_else(|| Error::Parse(format!("experiment {} needs '{key}'", self.kind)))
    }

    /// Comma-separated list of numbers; `pi` multiples like `3pi` allowed.
    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.params.get(key) else { return Ok(None) };
        v.split(',')
            .map(|s| {
                let s = s.trim();
                match s.strip_suffix("pi") {
                    Some("") => Ok(std::f64::consts::PI),
                    Some(m) => Ok(number(key, m)? * std::f64::consts::PI),
                    None => number(key, s),
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// Resolves a path parameter relative to the output directory when it is
    /// not found as given.
    pub fn path(&self, key: &str) -> Option<PathBuf> {
        let p = PathBuf::from(self.params.get(key)?);
        if p.is_absolute() || p.exists() {
            Some(p)
        } else {
            Some(self.out_dir.join(p))
        }
    }

    pub fn stem(&self) -> String {
        match &self.out {
            Some(o) => Path::new(o)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| self.kind.default_stem()),
            None => self.kind.default_stem(),
        }
    }

    /// `out` under `out_dir`, with `.csv` appended when it has no extension.
    pub fn csv_path(&self) -> PathBuf {
        match &self.out {
            Some(o) => {
                let p = self.out_dir.join(o);
                if p.extension().is_some() {
                    p
                } else {
                    p.with_extension("csv")
                }
            }
            None => self.out_dir.join(format!("{}.csv", self.stem())),
        }
    }

    /// Sits next to the CSV, sharing its stem.
    pub fn json_path(&self) -> PathBuf {
        self.csv_path().with_extension("json")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn parses_a_complete_config() {
        let cfg = ExperimentConfig::from_map(map(&[
            ("experiment", "els-find"),
            ("nl", "power:p=2"),
            ("pot", "model:alpha=4"),
            ("D", "3"),
            ("u1", "6"),
            ("rmax", "100"),
            ("tol_scale", "10"),
        ]))
        .unwrap();
        assert_eq!(cfg.kind, ExperimentKind::ElsFind);
        assert_eq!(cfg.shooting.r_max, 100.0);
        assert_eq!(cfg.shooting.rel_tol, 1e-9);
        assert_eq!(cfg.req("u1").unwrap(), 6.0);
    }

    #[test]
    fn rejects_bad_input() {
        let base = [("experiment", "els-find"), ("nl", "power:p=2"), ("pot", "model:alpha=4"), ("u1", "6")];
        let with = |extra: (&str, &str)| {
            let mut m = map(&base);
            m.insert(extra.0.into(), extra.1.into());
            ExperimentConfig::from_map(m)
        };
        assert!(with(("D", "2")).unwrap_err().is_validation());
        assert!(with(("nl", "cubic")).unwrap_err().is_validation());
        assert!(with(("colour", "red")).unwrap_err().is_validation());
        assert!(ExperimentConfig::from_map(map(&[("experiment", "els-find")])).is_err());
        assert!(ExperimentConfig::from_map(map(&[("experiment", "dance")])).is_err());
    }

    #[test]
    fn kinds_round_trip() {
        for s in ["shoot", "bounds:gamma", "no-maximal-demo", "uniq-gap"] {
            assert_eq!(ExperimentKind::parse(s).unwrap().to_string(), s);
        }
    }

    #[test]
    fn pi_lists() {
        let cfg = ExperimentConfig::from_map(map(&[("experiment", "no-maximal-demo"), ("tk", "3pi, 5pi,7")])).unwrap();
        let v = cfg.list("tk").unwrap().unwrap();
        assert!((v[0] - 3.0 * std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(v[2], 7.0);
    }

    #[test]
    fn output_paths() {
        let at = |out: Option<&str>| {
            let mut m = map(&[("experiment", "ko-check"), ("nl", "power:p=2"), ("out_dir", "res")]);
            if let Some(o) = out {
                m.insert("out".into(), o.into());
            }
            let cfg = ExperimentConfig::from_map(m).unwrap();
            (cfg.csv_path(), cfg.json_path())
        };
        assert_eq!(at(None), (PathBuf::from("res/ko-check.csv"), PathBuf::from("res/ko-check.json")));
        assert_eq!(at(Some("ko")), (PathBuf::from("res/ko.csv"), PathBuf::from("res/ko.json")));
        assert_eq!(at(Some("sub/ko.txt")), (PathBuf::from("res/sub/ko.txt"), PathBuf::from("res/sub/ko.json")));
    }

    #[test]
    fn reads_config_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ko.cfg");
        std::fs::write(&p, "# Keller-Osserman\nexperiment = ko-check\nnl = power:p=2\nlower = 1\n").unwrap();
        let cfg = ExperimentConfig::from_file(&p).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::KoCheck);
        std::fs::write(&p, "experiment = ko-check\nexperiment = shoot\n").unwrap();
        assert!(ExperimentConfig::from_file(&p).is_err());
    }
}
