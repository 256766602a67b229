//! Closed-form catalog nonlinearities and their string keys.

use std::f64::consts::E;
use std::fmt;

use crate::error::{Error, Result};

/// Catalog nonlinearities. All have base point `a = 0` and a closed-form
/// antiderivative.
#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    /// `coef · u^p`.
    Power { p: f64, coef: f64 },
    /// `u²(1 + cos u)`.
    Oscillating,
    /// `u (ln u)⁴` for `u ≥ e`, `e (u/e)⁵` below.
    LogQuartic,
    /// `e^u − 1`.
    Exponential,
    /// `f(t + tk)`.
    Shifted { base: Box<Kind>, tk: f64 },
    /// `factor · f`.
    Scaled { base: Box<Kind>, factor: f64 },
}

impl Kind {
    pub fn power(p: f64) -> Self {
        Kind::Power { p, coef: 1.0 }
    }

    pub fn f(&self, u: f64) -> f64 {
        match self {
            Kind::Power { p, coef } => coef * u.max(0.0).powf(*p),
            Kind::Oscillating => u * u * (1.0 + u.cos()),
            Kind::LogQuartic => {
                if u >= E {
                    u * u.ln().powi(4)
                } else {
                    E * (u.max(0.0) / E).powi(5)
                }
            }
            Kind::Exponential => u.exp_m1(),
            Kind::Shifted { base, tk } => base.f(u + tk),
            Kind::Scaled { base, factor } => factor * base.f(u),
        }
    }

    pub fn fprime(&self, u: f64) -> f64 {
        match self {
            Kind::Power { p, coef } => {
                if u <= 0.0 {
                    if *p == 1.0 {
                        *coef
                    } else {
                        0.0
                    }
                } else {
                    coef * p * u.powf(p - 1.0)
                }
            }
            Kind::Oscillating => 2.0 * u * (1.0 + u.cos()) - u * u * u.sin(),
            Kind::LogQuartic => {
                if u >= E {
                    let l = u.ln();
                    l.powi(4) + 4.0 * l.powi(3)
                } else {
                    5.0 * (u.max(0.0) / E).powi(4)
                }
            }
            Kind::Exponential => u.exp(),
            Kind::Shifted { base, tk } => base.fprime(u + tk),
            Kind::Scaled { base, factor } => factor * base.fprime(u),
        }
    }

    /// Antiderivative vanishing at 0.
    pub fn big_f(&self, u: f64) -> f64 {
        match self {
            Kind::Power { p, coef } => coef * u.max(0.0).powf(p + 1.0) / (p + 1.0),
            Kind::Oscillating => {
                let (s, c) = u.sin_cos();
                u * u * u / 3.0 + u * u * s + 2.0 * u * c - 2.0 * s
            }
            Kind::LogQuartic => {
                if u <= E {
                    u.max(0.0).powi(6) / (6.0 * E.powi(4))
                } else {
                    let l = u.ln();
                    let poly = l.powi(4) - 2.0 * l.powi(3) + 3.0 * l * l - 3.0 * l + 1.5;
                    // F(e) = e²/6, primitive at e equals e²/4
                    E * E / 6.0 + 0.5 * u * u * poly - E * E / 4.0
                }
            }
            Kind::Exponential => u.exp_m1() - u,
            Kind::Shifted { base, tk } => base.big_f(u + tk) - base.big_f(*tk),
            Kind::Scaled { base, factor } => factor * base.big_f(u),
        }
    }

    /// Closed-form inverse of `big_f` where one exists.
    pub fn big_f_inverse(&self, s: f64) -> Option<f64> {
        match self {
            Kind::Power { p, coef } => Some(((p + 1.0) * s / coef).powf(1.0 / (p + 1.0))),
            Kind::Scaled { base, factor } => base.big_f_inverse(s / factor),
            _ => None,
        }
    }

    pub fn nondecreasing(&self) -> bool {
        match self {
            Kind::Power { coef, .. } => *coef > 0.0,
            Kind::Oscillating => false,
            Kind::LogQuartic | Kind::Exponential => true,
            Kind::Shifted { base, .. } => base.nondecreasing(),
            Kind::Scaled { base, factor } => *factor > 0.0 && base.nondecreasing(),
        }
    }

    pub fn positive_on_positive(&self) -> bool {
        match self {
            Kind::Power { coef, .. } => *coef > 0.0,
            Kind::Oscillating => false,
            Kind::LogQuartic | Kind::Exponential => true,
            Kind::Shifted { base, .. } => base.positive_on_positive(),
            Kind::Scaled { base, factor } => *factor > 0.0 && base.positive_on_positive(),
        }
    }

    pub fn f_of_zero_is_zero(&self) -> bool {
        self.f(0.0) == 0.0 || self.f(0.0).abs() < 1e-12 * (1.0 + self.f(1.0).abs())
    }

    /// Threshold `M` beyond which `f(u)/u` is nondecreasing, when the entry has one.
    pub fn m_threshold(&self) -> Option<f64> {
        match self {
            Kind::Power { p, .. } if *p >= 1.0 => Some(0.0),
            Kind::Power { .. } => None,
            Kind::Oscillating => None,
            Kind::LogQuartic | Kind::Exponential => Some(0.0),
            Kind::Shifted { base, tk } => base.m_threshold().map(|m| (m - tk).max(0.0)),
            Kind::Scaled { base, .. } => base.m_threshold(),
        }
    }

    /// Largest argument at which evaluations stay finite in f64.
    pub fn natural_max(&self) -> f64 {
        match self {
            Kind::Exponential => 300.0,
            Kind::Shifted { base, tk } => base.natural_max() - tk,
            Kind::Scaled { base, .. } => base.natural_max(),
            _ => 1e12,
        }
    }

    /// Parses keys such as `power:p=2`, `oscillating`,
    /// `shifted:base=oscillating,tk=9.42477`, `scaled:base=power,p=2,factor=4`.
    pub fn parse(key: &str) -> Result<Self> {
        let key = key.trim();
        let (name, rest) = match key.split_once(':') {
            Some((n, r)) => (n.trim(), r),
            None => (key, ""),
        };
        let params = parse_params(rest)?;
        let get = |k: &str| params.iter().find(|(n, _)| n == k).map(|(_, v)| v.as_str());
        let num = |k: &str| -> Result<Option<f64>> {
            get(k)
                .map(|v| v.parse::<f64>().map_err(|_| Error::Parse(format!("bad number for {k}: {v}"))))
                .transpose()
        };
        let kind = match name {
            "power" => {
                let p = num("p")?.ok_or_else(|| Error::Parse("power needs p=".into()))?;
                if p <= 0.0 {
                    return Err(Error::Domain(format!("power exponent must be positive, got {p}")));
                }
                Kind::Power {
                    p,
                    coef: num("c")?.unwrap_or(1.0),
                }
            }
            "oscillating" => Kind::Oscillating,
            "logquartic" => Kind::LogQuartic,
            "exponential" => Kind::Exponential,
            "shifted" | "scaled" => {
                let base_name = get("base").ok_or_else(|| Error::Parse(format!("{name} needs base=")))?;
                let base_params: Vec<String> = params
                    .iter()
                    .filter(|(n, _)| n != "base" && n != "tk" && n != "factor")
                    .map(|(n, v)| format!("{n}={v}"))
                    .collect();
                let base_key = if base_params.is_empty() {
                    base_name.to_string()
                } else {
                    format!("{base_name}:{}", base_params.join(","))
                };
                let base = Box::new(Kind::parse(&base_key)?);
                if name == "shifted" {
                    let tk = num("tk")?.ok_or_else(|| Error::Parse("shifted needs tk=".into()))?;
                    if tk < 0.0 {
                        return Err(Error::Domain(format!("shift must be nonnegative, got {tk}")));
                    }
                    Kind::Shifted { base, tk }
                } else {
                    let factor = num("factor")?.ok_or_else(|| Error::Parse("scaled needs factor=".into()))?;
                    Kind::Scaled { base, factor }
                }
            }
            other => return Err(Error::Parse(format!("unknown nonlinearity '{other}'"))),
        };
        Ok(kind)
    }
}

pub fn parse_params(rest: &str) -> Result<Vec<(String, String)>> {
    rest.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{kv}'")))
        })
        .collect()
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Power { p, coef } if *coef == 1.0 => write!(f, "power:p={p}"),
            Kind::Power { p, coef } => write!(f, "power:p={p},c={coef}"),
            Kind::Oscillating => write!(f, "oscillating"),
            Kind::LogQuartic => write!(f, "logquartic"),
            Kind::Exponential => write!(f, "exponential"),
            Kind::Shifted { base, tk } => write!(f, "shifted[{base}]:tk={tk}"),
            Kind::Scaled { base, factor } => write!(f, "scaled[{base}]:factor={factor}"),
        }
    }
}
