//! Calculus on nonlinearities `f`: the antiderivative `F`, the
//! Keller-Osserman integral, the decay function `Φ` with its inverse, and the
//! increasing envelope `f̄`.

mod catalog;
mod envelope;

use std::sync::Arc;

pub use catalog::{parse_params, Kind};
pub use envelope::Envelope;

use crate::error::{Error, Result};
use crate::quad::{self, Improper, QuadTol, TailTol};
use crate::roots;

/// Tolerances for the nonlinearity operations.
#[derive(Debug, Clone, Copy)]
pub struct NlTol {
    pub big_f_rel: f64,
    pub ko_rel: f64,
    pub phi_rel: f64,
    pub phi_inverse_rel: f64,
    pub f_inverse_rel: f64,
    /// ε of the envelope as a multiple of `f(1)`.
    pub envelope_eps_rel: f64,
    /// Tabulated range of the envelope for non-monotone `f`.
    pub envelope_table_end: f64,
}

impl Default for NlTol {
    fn default() -> Self {
        Self {
            big_f_rel: 1e-12,
            ko_rel: 1e-10,
            phi_rel: 1e-11,
            phi_inverse_rel: 1e-9,
            f_inverse_rel: 1e-13,
            envelope_eps_rel: 1e-6,
            envelope_table_end: 2000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flags {
    pub positive_on_positive: bool,
    pub nondecreasing: bool,
    pub f_of_zero_is_zero: bool,
}

#[derive(Debug, Clone)]
enum Repr {
    Catalog(Kind),
    Envelope(Arc<Envelope>),
}

/// A nonlinearity with base point `a` for its antiderivative.
#[derive(Debug, Clone)]
pub struct Nonlinearity {
    repr: Repr,
    pub a: f64,
    pub flags: Flags,
    pub use_closed_form: bool,
    pub tol: NlTol,
}

/// Outcome of the Keller-Osserman integral.
pub type KoOutcome = Improper;

impl Nonlinearity {
    pub fn from_kind(kind: Kind) -> Self {
        let flags = Flags {
            positive_on_positive: kind.positive_on_positive(),
            nondecreasing: kind.nondecreasing(),
            f_of_zero_is_zero: kind.f_of_zero_is_zero(),
        };
        Self {
            repr: Repr::Catalog(kind),
            a: 0.0,
            flags,
            use_closed_form: true,
            tol: NlTol::default(),
        }
    }

    pub fn parse(key: &str) -> Result<Self> {
        Kind::parse(key).map(Self::from_kind)
    }

    pub fn power(p: f64) -> Self {
        Self::from_kind(Kind::power(p))
    }

    pub fn oscillating() -> Self {
        Self::from_kind(Kind::Oscillating)
    }

    /// Same nonlinearity, forcing `F` through quadrature.
    pub fn without_closed_form(mut self) -> Self {
        self.use_closed_form = false;
        self
    }

    pub fn kind(&self) -> Option<&Kind> {
        match &self.repr {
            Repr::Catalog(k) => Some(k),
            Repr::Envelope(_) => None,
        }
    }

    pub fn envelope(&self) -> Option<&Envelope> {
        match &self.repr {
            Repr::Envelope(e) => Some(e),
            Repr::Catalog(_) => None,
        }
    }

    pub fn key(&self) -> String {
        match &self.repr {
            Repr::Catalog(k) => k.to_string(),
            Repr::Envelope(e) => format!("envelope[{}]", e.base),
        }
    }

    pub fn f(&self, u: f64) -> f64 {
        match &self.repr {
            Repr::Catalog(k) => k.f(u),
            Repr::Envelope(e) => e.f(u),
        }
    }

    pub fn fprime(&self, u: f64) -> f64 {
        match &self.repr {
            Repr::Catalog(k) => k.fprime(u),
            Repr::Envelope(e) => e.fprime(u),
        }
    }

    /// `M` such that `f(u)/u` is nondecreasing on `[M, ∞)`.
    pub fn m_threshold(&self) -> Option<f64> {
        match &self.repr {
            Repr::Catalog(k) => k.m_threshold(),
            Repr::Envelope(_) => None,
        }
    }

    /// Upper end of the range where `f` is finite in f64.
    pub fn natural_max(&self) -> f64 {
        match &self.repr {
            Repr::Catalog(k) => k.natural_max(),
            Repr::Envelope(e) => e.base.natural_max(),
        }
    }

    /// `F(u) = ∫_a^u f`.
    pub fn eval_big_f(&self, u: f64) -> Result<f64> {
        if u < self.a {
            return Err(Error::Domain(format!("F evaluated at u = {u} below base point a = {}", self.a)));
        }
        if u == self.a {
            return Ok(0.0);
        }
        match (&self.repr, self.use_closed_form) {
            (Repr::Catalog(k), true) => Ok(k.big_f(u) - k.big_f(self.a)),
            _ => Ok(self.big_f_quadrature(u)),
        }
    }

    fn big_f_quadrature(&self, u: f64) -> f64 {
        // split into chunks so oscillating integrands do not exhaust the panel budget
        let chunks = ((u - self.a) / 20.0).ceil().clamp(1.0, 1e5) as usize;
        let h = (u - self.a) / chunks as f64;
        let tol = QuadTol::rel(self.tol.big_f_rel);
        (0..chunks)
            .map(|i| {
                let lo = self.a + i as f64 * h;
                let hi = if i + 1 == chunks { u } else { lo + h };
                quad::integrate(&|t| self.f(t), lo, hi, tol).value
            })
            .sum()
    }

    fn big_f_unchecked(&self, u: f64) -> f64 {
        self.eval_big_f(u.max(self.a)).unwrap_or(0.0)
    }

    /// `u ≥ a` with `F(u) = s`, by bracketing and safeguarded Newton.
    pub fn f_inverse(&self, s: f64) -> Result<f64> {
        if s < 0.0 || s.is_nan() {
            return Err(Error::Domain(format!("F_inverse needs s ≥ 0, got {s}")));
        }
        if s == 0.0 {
            return Ok(self.a);
        }
        if self.use_closed_form {
            if let Repr::Catalog(k) = &self.repr {
                if self.a == 0.0 {
                    if let Some(u) = k.big_f_inverse(s) {
                        return Ok(u);
                    }
                }
            }
        }
        let hi = roots::expand_until(self.a + 1.0, 2.0, 2000, |x| self.big_f_unchecked(x) >= s)
            .ok_or_else(|| Error::OutOfRange(format!("F never reaches {s}")))?;
        let lo = if hi > self.a + 1.0 { 0.5 * hi } else { self.a };
        let ftol = self.tol.f_inverse_rel * s.max(1.0);
        roots::newton_bracketed(|x| (self.big_f_unchecked(x) - s, self.f(x)), lo, hi, ftol, 200)
    }

    /// `∫_lower^∞ ds / √F(s)`.
    pub fn ko_integral(&self, lower: f64) -> Result<KoOutcome> {
        let fl = self.eval_big_f(lower)?;
        if fl <= 0.0 {
            return Err(Error::Domain(format!("F({lower}) = {fl} is not positive")));
        }
        let tol = TailTol {
            rel: self.tol.ko_rel,
            ..TailTol::default()
        };
        Ok(quad::integrate_to_infinity(
            &|s| 1.0 / self.big_f_unchecked(s).sqrt(),
            lower,
            None,
            tol,
        ))
    }

    /// `Φ(u) = ∫_u^∞ dt/√(F(t) − F(u))`, evaluated as
    /// `2 ∫_0^∞ dσ / f(F⁻¹(σ² + F(u)))` to remove both singularities.
    pub fn phi(&self, u: f64) -> Result<f64> {
        let m = self
            .m_threshold()
            .ok_or_else(|| Error::Precondition(format!("{}: f(u)/u is not eventually nondecreasing", self.key())))?;
        if u < m || (m == 0.0 && u <= 0.0) {
            return Err(Error::Domain(format!("Φ needs u above M = {m}, got {u}")));
        }
        let fu = self.eval_big_f(u)?;
        let scale = fu.sqrt().max(1e-8);
        let tol = TailTol {
            rel: self.tol.phi_rel,
            panel_rel: 1e-12,
            ..TailTol::default()
        };
        let integrand = |sigma: f64| {
            let t = self.f_inverse(sigma * sigma + fu).unwrap_or(f64::INFINITY);
            2.0 / self.f(t)
        };
        match quad::integrate_to_infinity(&integrand, 0.0, Some(scale), tol) {
            Improper::Finite(t) => Ok(t.value),
            Improper::Divergent { exponent } => Err(Error::KoViolation(format!(
                "Φ({u}) diverges, tail exponent {exponent:.4}"
            ))),
        }
    }

    /// `u` with `Φ(u) = y`, for `y` in `(0, Φ(M))`.
    pub fn phi_inverse(&self, y: f64) -> Result<f64> {
        if y <= 0.0 || y.is_nan() {
            return Err(Error::OutOfRange(format!("Φ⁻¹ needs y > 0, got {y}")));
        }
        let m = self
            .m_threshold()
            .ok_or_else(|| Error::Precondition(format!("{}: Φ is not invertible", self.key())))?;
        if m > 0.0 {
            let top = self.phi(m)?;
            if y >= top {
                return Err(Error::OutOfRange(format!("y = {y} ≥ Φ(M) = {top}")));
            }
        }
        let g = |lu: f64| -> f64 {
            match self.phi(lu.exp()) {
                Ok(v) => v.ln() - y.ln(),
                Err(_) => f64::NAN,
            }
        };
        let start = m.max(1.0).ln();
        let cap = self.natural_max().ln();
        // Φ decreases: g(lo) > 0 > g(hi)
        let mut lo = start;
        while g(lo) <= 0.0 {
            if m > 0.0 && lo <= m.ln() {
                return Err(Error::OutOfRange(format!("y = {y} is not below Φ on [M, ∞)")));
            }
            lo -= std::f64::consts::LN_10;
            if lo < -700.0 {
                return Err(Error::OutOfRange(format!("y = {y} too large")));
            }
            if m > 0.0 {
                lo = lo.max(m.ln());
            }
        }
        let mut hi = lo + std::f64::consts::LN_10;
        while !(g(hi) < 0.0) {
            hi += std::f64::consts::LN_10;
            if hi > cap {
                return Err(Error::OutOfRange(format!("y = {y} too small for f64 range")));
            }
        }
        let lu = roots::illinois(g, lo, hi, 0.5 * self.tol.phi_inverse_rel, 200)?;
        Ok(lu.exp())
    }

    /// Increasing majorant `f̄`; `eps` defaults to `1e-6·f(1)`.
    pub fn monotone_envelope(&self, eps: Option<f64>) -> Result<Nonlinearity> {
        let kind = self
            .kind()
            .ok_or_else(|| Error::Precondition("envelope of an envelope".into()))?;
        if !self.flags.f_of_zero_is_zero {
            return Err(Error::Precondition(format!("{}: f(0) ≠ 0", self.key())));
        }
        let negative = (0..=2000).map(|i| i as f64 * 0.05).find(|&t| self.f(t) < 0.0);
        if let Some(t) = negative {
            return Err(Error::Precondition(format!("{}: f({t}) < 0", self.key())));
        }
        let eps = eps.unwrap_or(self.tol.envelope_eps_rel * self.f(1.0));
        if !(eps > 0.0) {
            return Err(Error::Precondition(format!("envelope needs ε > 0, got {eps}")));
        }
        let env = Envelope::new(kind.clone(), eps, self.tol.envelope_table_end);
        Ok(Nonlinearity {
            repr: Repr::Envelope(Arc::new(env)),
            a: 0.0,
            flags: Flags {
                positive_on_positive: true,
                nondecreasing: true,
                f_of_zero_is_zero: true,
            },
            use_closed_form: false,
            tol: self.tol,
        })
    }

    /// `∫_w^β ds / f(s)`, with `beta = None` meaning `+∞`.
    pub fn reciprocal_tail(&self, w: f64, beta: Option<f64>) -> Result<f64> {
        match beta {
            Some(b) => {
                if w >= b {
                    return Ok(0.0);
                }
                Ok(quad::integrate(&|s| 1.0 / self.f(s), w, b, QuadTol::rel(1e-13)).value)
            }
            None => match quad::integrate_to_infinity(
                &|s| 1.0 / self.f(s),
                w,
                None,
                TailTol {
                    rel: 1e-13,
                    ..TailTol::default()
                },
            ) {
                Improper::Finite(t) => Ok(t.value),
                Improper::Divergent { .. } => Err(Error::Inapplicable(format!(
                    "∫ ds/f diverges for {}",
                    self.key()
                ))),
            },
        }
    }

    /// Solves `∫_w^β ds/f(s) = target` for `w ∈ (0, β)`; intended for the
    /// increasing envelope but valid for any positive `f` with a divergent
    /// reciprocal integral at 0.
    pub fn envelope_tail_inverse(&self, beta: Option<f64>, target: f64) -> Result<f64> {
        if target < 0.0 || target.is_nan() {
            return Err(Error::OutOfRange(format!("target must be ≥ 0, got {target}")));
        }
        if let Some(b) = beta {
            if b <= 0.0 {
                return Err(Error::OutOfRange(format!("β must be positive, got {b}")));
            }
            if target == 0.0 {
                return Ok(b);
            }
        } else if target == 0.0 {
            return Err(Error::OutOfRange("target 0 with β = ∞ has no finite solution".into()));
        }
        let g = |w: f64| self.reciprocal_tail(w, beta).map(|v| v - target);
        let mut hi = match beta {
            Some(b) => b,
            None => roots::expand_until(1.0, 2.0, 2000, |w| g(w).is_ok_and(|v| v < 0.0))
                .ok_or_else(|| Error::OutOfRange(format!("target {target} not reached")))?,
        };
        let mut lo = 0.5 * hi;
        while g(lo)? <= 0.0 {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(Error::OutOfRange(format!(
                    "target {target} exceeds ∫_0^β ds/f̄"
                )));
            }
        }
        let ftol = 1e-14 * target.max(1e-300);
        roots::newton_bracketed(
            |w| (g(w).unwrap_or(f64::NAN), -1.0 / self.f(w)),
            lo,
            hi,
            ftol,
            200,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn big_f_power_and_base_point() {
        let nl = Nonlinearity::power(2.0);
        assert!((nl.eval_big_f(3.0).unwrap() - 9.0).abs() < 1e-14);
        assert_eq!(nl.eval_big_f(0.0).unwrap(), 0.0);
        assert!(matches!(nl.eval_big_f(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn big_f_oscillating_closed_form_and_quadrature() {
        let exact = PI.powi(3) / 3.0 - 2.0 * PI;
        let nl = Nonlinearity::oscillating();
        assert!((nl.eval_big_f(PI).unwrap() - exact).abs() < 1e-12);
        let q = nl.clone().without_closed_form().eval_big_f(PI).unwrap();
        assert!((q - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn ko_values() {
        let nl = Nonlinearity::power(2.0);
        let v = nl.ko_integral(1.0).unwrap().value().unwrap();
        assert!((v - 2.0 * 3f64.sqrt()).abs() < 1e-8, "{v}");
        assert!(matches!(
            Nonlinearity::power(1.0).ko_integral(1.0).unwrap(),
            Improper::Divergent { .. }
        ));
        assert!(matches!(nl.ko_integral(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn f_inverse_cases() {
        let nl = Nonlinearity::power(2.0);
        assert!((nl.f_inverse(9.0).unwrap() - 3.0).abs() < 1e-13);
        assert_eq!(nl.f_inverse(0.0).unwrap(), 0.0);
        let osc = Nonlinearity::oscillating();
        for u in [1.0, 5.0, 50.0] {
            let s = osc.eval_big_f(u).unwrap();
            assert!((osc.f_inverse(s).unwrap() - u).abs() < 1e-8 * u);
        }
    }

    // √3·B(1/6,1/2)/3, from the closed form of the Beta integral
    const C2: f64 = 4.206_546_315_976_363;

    #[test]
    fn phi_power_two_closed_form() {
        let nl = Nonlinearity::power(2.0);
        for u in [0.5, 10.0, 1e4] {
            let v = nl.phi(u).unwrap();
            assert!((v - C2 / u.sqrt()).abs() < 1e-9 * v, "u={u}: {v}");
        }
        let y = nl.phi(100.0).unwrap();
        let u = nl.phi_inverse(y).unwrap();
        assert!((u - 100.0).abs() < 1e-6 * 100.0, "{u}");
        let u = nl.phi_inverse(0.1).unwrap();
        assert!((u - (C2 / 0.1).powi(2)).abs() < 1e-7 * u);
    }

    #[test]
    fn phi_needs_threshold() {
        assert!(matches!(Nonlinearity::oscillating().phi(10.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn envelope_tail_inverse_cases() {
        let env = Nonlinearity::power(2.0).monotone_envelope(None).unwrap();
        assert_eq!(env.envelope_tail_inverse(Some(3.0), 0.0).unwrap(), 3.0);
        let w = env.envelope_tail_inverse(None, 0.5).unwrap();
        assert!((w - 2.0).abs() < 1e-4, "{w}");
        let ws: Vec<f64> = [0.1, 0.2, 0.4]
            .iter()
            .map(|&t| env.envelope_tail_inverse(None, t).unwrap())
            .collect();
        assert!(ws[0] > ws[1] && ws[1] > ws[2]);
        assert!(env.envelope_tail_inverse(Some(3.0), -1.0).is_err());
    }

    #[test]
    fn envelope_rejects_negative_f() {
        let nl = Nonlinearity::parse("scaled:base=power,p=2,factor=-1").unwrap();
        assert!(matches!(nl.monotone_envelope(None), Err(Error::Precondition(_))));
    }
}
