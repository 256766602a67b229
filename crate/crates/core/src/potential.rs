//! Radial densities `ρ`, the integrability test `∫_0^∞ r ρ(r) dr < ∞`, the
//! decaying Newtonian potential `U` with `−ΔU = ρ`, and the mean-curvature
//! criterion on ellipsoidal level sets.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{self, Improper, QuadTol, TailTol};

/// How the density is continued on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerProfile {
    /// `ρ(r) = ρ(1)` on `[0, 1]`.
    #[default]
    Constant,
    /// Smoothstep blend from `ρ(1)` to the tail law over `[0.9, 1]`.
    C1Blend,
}

/// The density families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `r^{-α}` for `r ≥ 1`.
    Model { alpha: f64 },
    /// `r^{2-2D}(1 + amp·r^{1-D})` for `r ≥ 1`.
    Perturbed { dim: usize, amp: f64 },
    /// `(1 + r²)^{-k}` on all of `[0, ∞)`.
    Rational { k: f64 },
    /// Constant density `m` (bounded domains only).
    Constant { m: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialPotential {
    pub family: Family,
    pub inner: InnerProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum HrhoOutcome {
    Finite(f64),
    Divergent,
}

impl RadialPotential {
    /// Model family `ρ = r^{-α}` for `r ≥ 1` with `α > 2`.
    pub fn model(alpha: f64) -> Result<Self> {
        if !(alpha > 2.0) {
            return Err(Error::Domain(format!("model exponent must exceed 2, got {alpha}")));
        }
        Ok(Self::power_tail(alpha))
    }

    /// Same law without the `α > 2` check, for integrability experiments.
    pub fn power_tail(alpha: f64) -> Self {
        Self {
            family: Family::Model { alpha },
            inner: InnerProfile::Constant,
        }
    }

    pub fn perturbed(dim: usize, amp: f64) -> Result<Self> {
        if dim < 3 {
            return Err(Error::Domain(format!("dimension must be ≥ 3, got {dim}")));
        }
        if amp <= -1.0 {
            return Err(Error::Domain(format!("perturbation amplitude {amp} makes ρ(1) ≤ 0")));
        }
        Ok(Self {
            family: Family::Perturbed { dim, amp },
            inner: InnerProfile::Constant,
        })
    }

    pub fn rational(k: f64) -> Self {
        Self {
            family: Family::Rational { k },
            inner: InnerProfile::Constant,
        }
    }

    pub fn constant(m: f64) -> Self {
        Self {
            family: Family::Constant { m },
            inner: InnerProfile::Constant,
        }
    }

    pub fn with_inner(mut self, inner: InnerProfile) -> Self {
        self.inner = inner;
        self
    }

    /// Parses `model:alpha=4`, `perturbed:D=3,amp=1`, `rational:k=2`,
    /// `constant:m=1`, with an optional `inner=blend`.
    pub fn parse(key: &str) -> Result<Self> {
        let (name, rest) = key.trim().split_once(':').unwrap_or((key.trim(), ""));
        let params = crate::nonlinearity::parse_params(rest)?;
        let num = |k: &str| -> Result<f64> {
            let v = params
                .iter()
                .find(|(n, _)| n == k)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::Parse(format!("{name} needs {k}=")))?;
            v.parse().map_err(|_| Error::Parse(format!("bad number for {k}: {v}")))
        };
        let pot = match name {
            "model" => Self::model(num("alpha")?)?,
            "perturbed" => Self::perturbed(num("D")? as usize, num("amp")?)?,
            "rational" => Self::rational(num("k")?),
            "constant" => Self::constant(num("m")?),
            other => return Err(Error::Parse(format!("unknown potential '{other}'"))),
        };
        let inner = match params.iter().find(|(n, _)| n == "inner").map(|(_, v)| v.as_str()) {
            None | Some("constant") => InnerProfile::Constant,
            Some("blend") => InnerProfile::C1Blend,
            Some(other) => return Err(Error::Parse(format!("unknown inner profile '{other}'"))),
        };
        Ok(pot.with_inner(inner))
    }

    pub fn key(&self) -> String {
        let base = match self.family {
            Family::Model { alpha } => format!("model:alpha={alpha}"),
            Family::Perturbed { dim, amp } => format!("perturbed:D={dim},amp={amp}"),
            Family::Rational { k } => format!("rational:k={k}"),
            Family::Constant { m } => format!("constant:m={m}"),
        };
        match self.inner {
            InnerProfile::Constant => base,
            InnerProfile::C1Blend => format!("{base},inner=blend"),
        }
    }

    /// Tail exponent `α` with `ρ ~ r^{-α}`.
    pub fn alpha(&self) -> Option<f64> {
        match self.family {
            Family::Model { alpha } => Some(alpha),
            Family::Perturbed { dim, .. } => Some(2.0 * dim as f64 - 2.0),
            Family::Rational { k } => Some(2.0 * k),
            Family::Constant { .. } => None,
        }
    }

    fn tail_law(&self, r: f64) -> f64 {
        match self.family {
            Family::Model { alpha } => r.powf(-alpha),
            Family::Perturbed { dim, amp } => {
                let d = dim as f64;
                r.powf(2.0 - 2.0 * d) * (1.0 + amp * r.powf(1.0 - d))
            }
            Family::Rational { k } => (1.0 + r * r).powf(-k),
            Family::Constant { m } => m,
        }
    }

    fn tail_law_derivative(&self, r: f64) -> f64 {
        match self.family {
            Family::Model { alpha } => -alpha * r.powf(-alpha - 1.0),
            Family::Perturbed { dim, amp } => {
                let d = dim as f64;
                (2.0 - 2.0 * d) * r.powf(1.0 - 2.0 * d) + amp * (3.0 - 3.0 * d) * r.powf(2.0 - 3.0 * d)
            }
            Family::Rational { k } => -2.0 * k * r * (1.0 + r * r).powf(-k - 1.0),
            Family::Constant { .. } => 0.0,
        }
    }

    fn has_inner(&self) -> bool {
        self.is_tail_family()
    }

    /// Families specified by their law on `r ≥ 1` and continued inside.
    pub fn is_tail_family(&self) -> bool {
        matches!(self.family, Family::Model { .. } | Family::Perturbed { .. })
    }

    pub fn rho(&self, r: f64) -> f64 {
        if !self.has_inner() || r >= 1.0 {
            return self.tail_law(r);
        }
        let c = self.tail_law(1.0);
        match self.inner {
            InnerProfile::Constant => c,
            InnerProfile::C1Blend => {
                if r <= 0.9 {
                    c
                } else {
                    let x = (r - 0.9) / 0.1;
                    let s = x * x * (3.0 - 2.0 * x);
                    c + (self.tail_law(r) - c) * s
                }
            }
        }
    }

    pub fn drho(&self, r: f64) -> f64 {
        if !self.has_inner() || r >= 1.0 {
            return self.tail_law_derivative(r);
        }
        match self.inner {
            InnerProfile::Constant => 0.0,
            InnerProfile::C1Blend => {
                if r <= 0.9 {
                    0.0
                } else {
                    let c = self.tail_law(1.0);
                    let x = (r - 0.9) / 0.1;
                    let s = x * x * (3.0 - 2.0 * x);
                    let ds = 6.0 * x * (1.0 - x) / 0.1;
                    self.tail_law_derivative(r) * s + (self.tail_law(r) - c) * ds
                }
            }
        }
    }

    /// Perturbation `σ` and its derivative for the perturbed family.
    pub fn sigma(&self, r: f64) -> Option<(f64, f64)> {
        match self.family {
            Family::Perturbed { dim, amp } => {
                let d = dim as f64;
                Some((amp * r.powf(1.0 - d), amp * (1.0 - d) * r.powf(-d)))
            }
            _ => None,
        }
    }

    /// Integrability test `∫_0^∞ r ρ(r) dr`, by quadrature with tail-slope
    /// divergence detection.
    pub fn check_hrho(&self) -> HrhoOutcome {
        if let Family::Constant { m } = self.family {
            return if m == 0.0 { HrhoOutcome::Finite(0.0) } else { HrhoOutcome::Divergent };
        }
        let inner = quad::integrate(&|r| r * self.rho(r), 0.0, 1.0, QuadTol::rel(1e-13)).value;
        match quad::integrate_to_infinity(&|r| r * self.rho(r), 1.0, None, TailTol { rel: 1e-11, ..TailTol::default() }) {
            Improper::Finite(t) => HrhoOutcome::Finite(inner + t.value),
            Improper::Divergent { .. } => HrhoOutcome::Divergent,
        }
    }

    /// `∫_r^∞ t ρ(t) dt` from closed forms (`r ≥ 1` on the tail families).
    pub fn tail_moment(&self, r: f64) -> f64 {
        if self.has_inner() && r < 1.0 {
            let inner = quad::integrate(&|t| t * self.rho(t), r, 1.0, QuadTol::rel(1e-13)).value;
            return inner + self.tail_moment(1.0);
        }
        match self.family {
            Family::Model { alpha } if alpha > 2.0 => r.powf(2.0 - alpha) / (alpha - 2.0),
            Family::Model { .. } | Family::Constant { .. } => f64::INFINITY,
            Family::Perturbed { dim, amp } => {
                let d = dim as f64;
                r.powf(4.0 - 2.0 * d) / (2.0 * d - 4.0) + amp * r.powf(5.0 - 3.0 * d) / (3.0 * d - 5.0)
            }
            Family::Rational { k } if k > 1.0 => (1.0 + r * r).powf(1.0 - k) / (2.0 * (k - 1.0)),
            Family::Rational { .. } => f64::INFINITY,
        }
    }

    /// `m(r) = ∫_0^r t^{D-1} ρ(t) dt`.
    pub fn mass(&self, r: f64, dim: usize) -> f64 {
        let d = dim as f64;
        let g = |t: f64| t.powf(d - 1.0) * self.rho(t);
        let tol = QuadTol::rel(1e-13);
        let mut edges = vec![0.0];
        if self.has_inner() {
            edges.extend([0.9, 1.0]);
        }
        let mut e = if self.has_inner() { 10.0 } else { 1.0 };
        while e < r {
            edges.push(e);
            e *= 10.0;
        }
        edges.retain(|&x| x < r);
        edges.push(r);
        edges.windows(2).map(|w| quad::integrate(&g, w[0], w[1], tol).value).sum()
    }

    /// Newtonian potential `U(r) = r^{2-D} m(r)/(D-2) + ∫_r^∞ tρ(t) dt/(D-2)`,
    /// the integrated-by-parts form of `∫_r^∞ s^{1-D} m(s) ds`.
    pub fn newtonian_potential(&self, r: f64, dim: usize) -> Result<f64> {
        if dim < 3 {
            return Err(Error::Domain(format!("dimension must be ≥ 3, got {dim}")));
        }
        if r < 0.0 {
            return Err(Error::Domain(format!("radius must be ≥ 0, got {r}")));
        }
        if let HrhoOutcome::Divergent = self.check_hrho() {
            return Err(Error::Precondition(format!("{}: ∫ r ρ dr diverges", self.key())));
        }
        let d = dim as f64;
        let near = if r == 0.0 { 0.0 } else { r.powf(2.0 - d) * self.mass(r, dim) };
        Ok((near + self.tail_moment(r)) / (d - 2.0))
    }

    /// `∫_r^∞ s^{1-D} ∫_r^s t^{D-1} ρ(t) dt ds = ∫_r^∞ tρ(t) dt /(D-2)`: the
    /// potential generated by the density outside `B_r`, evaluated at `∂B_r`.
    pub fn outer_potential(&self, r: f64, dim: usize) -> f64 {
        self.tail_moment(r) / (dim as f64 - 2.0)
    }

    /// Whether `r^{2D-2} ρ(r)` is nondecreasing on `[r_from, ∞)`.
    pub fn weighted_nondecreasing(&self, dim: usize, r_from: f64) -> bool {
        let d = dim as f64;
        (0..400).all(|i| {
            let r = r_from.max(1e-6) * 10f64.powf(i as f64 * 0.02);
            (2.0 * d - 2.0) * self.rho(r) + r * self.drho(r) >= -1e-12 * self.rho(r)
        })
    }
}

/// Ellipsoidal density `ρ = v^{-α/2}`, `v = (x₁/a)² + |x′|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipsoidPotential {
    pub a: f64,
    pub alpha: f64,
    pub dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EllipsoidCriterion {
    pub meanc_holds: bool,
    pub monotone_holds: bool,
}

/// Closed-form verdicts: mean-curvature inequality iff `α ≤ a²(2D−2)`,
/// superharmonicity of `√ρ` iff `α + 2 ≤ a²(2D−2)`.
pub fn ellipsoid_criterion(a: f64, alpha: f64, dim: usize) -> Result<EllipsoidCriterion> {
    EllipsoidPotential::new(a, alpha, dim)?;
    let bound = a * a * (2.0 * dim as f64 - 2.0);
    Ok(EllipsoidCriterion {
        meanc_holds: alpha <= bound,
        monotone_holds: alpha + 2.0 <= bound,
    })
}

impl EllipsoidPotential {
    pub fn new(a: f64, alpha: f64, dim: usize) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::Domain(format!("flattening must lie in (0,1], got {a}")));
        }
        if !(alpha > 2.0) {
            return Err(Error::Domain(format!("exponent must exceed 2, got {alpha}")));
        }
        if dim < 3 {
            return Err(Error::Domain(format!("dimension must be ≥ 3, got {dim}")));
        }
        Ok(Self { a, alpha, dim })
    }

    pub fn parse(key: &str) -> Result<Self> {
        let (name, rest) = key.trim().split_once(':').unwrap_or((key.trim(), ""));
        if name != "ellipsoid" {
            return Err(Error::Parse(format!("expected ellipsoid:..., got '{key}'")));
        }
        let params = crate::nonlinearity::parse_params(rest)?;
        let num = |k: &str| -> Result<f64> {
            params
                .iter()
                .find(|(n, _)| n == k)
                .ok_or_else(|| Error::Parse(format!("ellipsoid needs {k}=")))?
                .1
                .parse()
                .map_err(|_| Error::Parse(format!("bad number for {k}")))
        };
        Self::new(num("a")?, num("alpha")?, num("D")? as usize)
    }

    pub fn v(&self, x: &[f64]) -> f64 {
        (x[0] / self.a).powi(2) + x[1..].iter().map(|t| t * t).sum::<f64>()
    }

    pub fn rho(&self, x: &[f64]) -> f64 {
        self.v(x).powf(-0.5 * self.alpha)
    }

    /// `2(D−1)H − |∇ρ|/ρ` at the level-set point with polar angle `theta`
    /// measured from the `x₁` axis, where `v = c`.
    ///
    /// With `n = ∇v/|∇v|` (outward for the convex set `{v < c}`), the sum of
    /// principal curvatures is `(tr∇²v − n·∇²v·n)/|∇v|`, and
    /// `|∇ρ|/ρ = (α/2)|∇v|/v`.
    pub fn margin_at(&self, c: f64, theta: f64) -> f64 {
        let d = self.dim as f64;
        let x1 = self.a * c.sqrt() * theta.cos();
        let xp = c.sqrt() * theta.sin();
        let h1 = 2.0 / (self.a * self.a);
        let g1 = h1 * x1;
        let gp = 2.0 * xp;
        let norm = g1.hypot(gp);
        let (n1, np) = (g1 / norm, gp / norm);
        let trace = h1 + 2.0 * (d - 1.0);
        let normal_part = h1 * n1 * n1 + 2.0 * np * np;
        let curvature_sum = (trace - normal_part) / norm;
        2.0 * curvature_sum - 0.5 * self.alpha * norm / c
    }
}

/// Minimum over `samples` level-set points of `2(D−1)H − |∇ρ|/ρ` on the level
/// set `{ρ = level}`. By the symmetry of the ellipsoid, sampling the polar
/// angle on `[0, π/2]` (poles included) covers every distinct point.
pub fn mean_curvature_margin(pot: &EllipsoidPotential, level: f64, samples: usize) -> Result<f64> {
    if !(level > 0.0) || !level.is_finite() {
        return Err(Error::Domain(format!("level must be positive, got {level}")));
    }
    if samples < 16 {
        return Err(Error::Domain(format!("need at least 16 samples, got {samples}")));
    }
    let c = level.powf(-2.0 / pot.alpha);
    let n = samples - 1;
    Ok((0..=n)
        .map(|j| pot.margin_at(c, std::f64::consts::FRAC_PI_2 * j as f64 / n as f64))
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn capped() -> RadialPotential {
        RadialPotential::model(4.0).unwrap()
    }

    #[test]
    fn hrho_examples() {
        match capped().check_hrho() {
            HrhoOutcome::Finite(v) => assert!((v - 1.0).abs() < 1e-8, "{v}"),
            _ => panic!(),
        }
        assert_eq!(RadialPotential::power_tail(2.0).check_hrho(), HrhoOutcome::Divergent);
        match RadialPotential::rational(2.0).check_hrho() {
            HrhoOutcome::Finite(v) => assert!((v - 0.5).abs() < 1e-8, "{v}"),
            _ => panic!(),
        }
    }

    #[test]
    fn potential_closed_form_d3() {
        let pot = capped();
        let exact = |r: f64| 4.0 / (3.0 * r) - 1.0 / (2.0 * r * r);
        for r in [1.0, 2.0, 10.0, 100.0] {
            let u = pot.newtonian_potential(r, 3).unwrap();
            assert!((u - exact(r)).abs() < 1e-8 * exact(r), "r={r}: {u}");
        }
        assert!((pot.newtonian_potential(1.0, 3).unwrap() - 5.0 / 6.0).abs() < 1e-10);
        assert!(pot.newtonian_potential(100.0, 3).unwrap() < 0.02);
    }

    #[test]
    fn potential_requires_integrability() {
        let pot = RadialPotential::power_tail(2.0);
        assert!(matches!(pot.newtonian_potential(1.0, 3), Err(Error::Precondition(_))));
    }

    #[test]
    fn blend_is_c1() {
        let pot = capped().with_inner(InnerProfile::C1Blend);
        for r in [0.9, 1.0] {
            let h = 1e-7;
            assert!((pot.rho(r - h) - pot.rho(r + h)).abs() < 1e-5);
            assert!((pot.drho(r - h) - pot.drho(r + h)).abs() < 1e-4);
        }
    }

    #[test]
    fn ellipsoid_criterion_examples() {
        let c = ellipsoid_criterion(0.9, 2.5, 4).unwrap();
        assert!(c.meanc_holds && c.monotone_holds);
        let c = ellipsoid_criterion(1.0, 4.0, 3).unwrap();
        assert!(c.meanc_holds && !c.monotone_holds);
        let c = ellipsoid_criterion(0.5, 3.0, 3).unwrap();
        assert!(!c.meanc_holds && !c.monotone_holds);
        assert!(ellipsoid_criterion(1.5, 3.0, 3).is_err());
    }

    #[test]
    fn sphere_margin_closed_form() {
        let pot = EllipsoidPotential::new(1.0, 3.0, 3).unwrap();
        // level set at radius 2: ρ = 2^{-3}
        let m = mean_curvature_margin(&pot, 2f64.powf(-3.0), 64).unwrap();
        assert!((m - 0.5).abs() < 1e-12, "{m}");
        assert!(mean_curvature_margin(&pot, -1.0, 64).is_err());
        assert!(mean_curvature_margin(&pot, 0.1, 8).is_err());
    }
}
