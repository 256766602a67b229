//! The change of variables `t = r^{1−α/2}`, `v(t) = u(r)`, `V = −dv/dt`, the
//! exponent `K = (α−2D+2)/(α−2)`, and the diagnostics built on them: the
//! monotonicity of `t^K V`, the limit of `V²/F`, and the gap between two
//! entire large solutions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::ode::Dopri5;
use crate::potential::RadialPotential;
use crate::roots;
use crate::shooting::RadialSolution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformConfig {
    pub alpha: f64,
    pub dim: usize,
}

impl TransformConfig {
    pub fn new(alpha: f64, dim: usize) -> Result<Self> {
        if !(alpha > 2.0) {
            return Err(Error::Domain(format!("α must exceed 2, got {alpha}")));
        }
        if dim < 3 {
            return Err(Error::Domain(format!("dimension must be ≥ 3, got {dim}")));
        }
        Ok(Self { alpha, dim })
    }

    pub fn k(&self) -> f64 {
        (self.alpha - 2.0 * self.dim as f64 + 2.0) / (self.alpha - 2.0)
    }

    /// Exponent `1 − α/2` of `t = r^{1−α/2}`.
    pub fn gamma(&self) -> f64 {
        1.0 - 0.5 * self.alpha
    }

    pub fn t_of_r(&self, r: f64) -> f64 {
        r.powf(self.gamma())
    }

    pub fn r_of_t(&self, t: f64) -> f64 {
        t.powf(1.0 / self.gamma())
    }

    /// `V = (2/(α−2)) r^{α/2} u'`.
    pub fn big_v(&self, r: f64, du: f64) -> f64 {
        2.0 / (self.alpha - 2.0) * r.powf(0.5 * self.alpha) * du
    }

    /// Bound envelope of the gap evaluated along the upper solution:
    /// `t^{1−K}` for `K ∈ [0, 1)` and `t` for `K < 0`.
    pub fn gap_envelope(&self, r: f64) -> f64 {
        let t = self.t_of_r(r);
        let k = self.k();
        if k >= 0.0 {
            t.powf(1.0 - k)
        } else {
            t
        }
    }
}

/// Transformed profile, indexed by increasing `v`.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileVT {
    pub v: Vec<f64>,
    pub t: Vec<f64>,
    pub big_v: Vec<f64>,
    pub k: f64,
    pub cfg: TransformConfig,
}

/// Maps a radial solution to `(v, t, V)`. Points at `r = 0` are dropped.
pub fn to_transformed(sol: &RadialSolution, cfg: &TransformConfig) -> Result<ProfileVT> {
    let mut p = ProfileVT {
        v: Vec::with_capacity(sol.r.len()),
        t: Vec::with_capacity(sol.r.len()),
        big_v: Vec::with_capacity(sol.r.len()),
        k: cfg.k(),
        cfg: *cfg,
    };
    for ((&r, &u), &du) in sol.r.iter().zip(&sol.u).zip(&sol.du) {
        if r <= 0.0 {
            continue;
        }
        if let Some(&last) = p.v.last() {
            if !(u > last) {
                return Err(Error::CannotInvert(format!("u is not increasing at r = {r} ({u} after {last})")));
            }
        }
        p.v.push(u);
        p.t.push(cfg.t_of_r(r));
        p.big_v.push(cfg.big_v(r, du));
    }
    Ok(p)
}

impl ProfileVT {
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// Back to `(r, u, u')`.
    pub fn to_radial(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let c = &self.cfg;
        let r: Vec<f64> = self.t.iter().map(|&t| c.r_of_t(t)).collect();
        let du = r
            .iter()
            .zip(&self.big_v)
            .map(|(&r, &bv)| bv * (c.alpha - 2.0) / 2.0 * r.powf(-0.5 * c.alpha))
            .collect();
        (r, self.v.clone(), du)
    }

    /// `t^K V` on the grid.
    pub fn tkv(&self) -> Vec<f64> {
        self.t.iter().zip(&self.big_v).map(|(t, v)| t.powf(self.k) * v).collect()
    }
}

/// Smallest difference quotient of `t^K V` with respect to `v` over
/// consecutive grid points.
pub fn check_tkv_monotone(profile: &ProfileVT) -> Result<f64> {
    if profile.len() < 2 {
        return Err(Error::Precondition("profile needs at least two points".into()));
    }
    let w = profile.tkv();
    Ok(w.windows(2)
        .zip(profile.v.windows(2))
        .map(|(a, v)| (a[1] - a[0]) / (v[1] - v[0]))
        .fold(f64::INFINITY, f64::min))
}

/// Tail estimate of `V²/F(v)` for `α = 2D − 2`, extrapolated to `v = ∞` by a
/// least-squares fit `q ≈ L + c/v` over log-spaced samples of the last two
/// decades in `v`.
pub fn hopital_limit(profile: &ProfileVT, nl: &Nonlinearity) -> Result<f64> {
    let c = &profile.cfg;
    if (c.alpha - (2.0 * c.dim as f64 - 2.0)).abs() > 1e-12 {
        return Err(Error::WrongFamily(format!("needs α = 2D − 2 = {}, got α = {}", 2 * c.dim - 2, c.alpha)));
    }
    if profile.len() < 3 {
        return Err(Error::Precondition("profile too short".into()));
    }
    let (v_min, v_max) = (profile.v[0], *profile.v.last().unwrap());
    if !(v_max >= 1e3 * v_min) {
        return Err(Error::Precondition(format!("tail too short: v ranges over [{v_min}, {v_max}]")));
    }
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for j in 0..=8 {
        let target = v_max * 10f64.powf(-2.0 * j as f64 / 8.0);
        let i = profile.v.partition_point(|&v| v < target).min(profile.len() - 1);
        if pts.last().is_some_and(|p| p.0 == 1.0 / profile.v[i]) {
            continue;
        }
        let q = profile.big_v[i].powi(2) / nl.eval_big_f(profile.v[i])?;
        pts.push((1.0 / profile.v[i], q));
    }
    if pts.len() < 2 {
        return Ok(pts[0].1);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Ok(my);
    }
    Ok(my - sxy / sxx * mx)
}

/// Residual of `v_tt + (K/t) v_t − (4/(α−2)²) f(v)` relative to `f(v)` at
/// interior grid points with `r ≥ 1`, for the model density `ρ = r^{-α}`.
///
/// `v_t = −V` is differenced centrally in `t` with steps `h` and `2h`,
/// `h = 1e-4·t`, and Richardson-extrapolated; the values of `V` at the stencil
/// points come from short, tightly controlled integrations of the radial
/// equation started at the grid point.
pub fn vequation_residual(sol: &RadialSolution, nl: &Nonlinearity, cfg: &TransformConfig) -> Result<Vec<(f64, f64)>> {
    let d1 = cfg.dim as f64 - 1.0;
    let alpha = cfg.alpha;
    let rhs = |r: f64, y: &[f64; 2]| [y[1], r.powf(-alpha) * nl.f(y[0]) - d1 * y[1] / r];
    let advance = |r0: f64, y0: [f64; 2], r1: f64| -> Option<[f64; 2]> {
        let mut s = Dopri5::new(&rhs, r0, y0, (r1 - r0) * 0.1, 1e-14, 1e-300);
        while s.t() != r1 {
            s.step(&rhs, r1).ok()?;
        }
        Some(s.y())
    };
    let k = cfg.k();
    let lambda = 4.0 / (alpha - 2.0).powi(2);
    let n = sol.r.len();
    let mut out = Vec::new();
    for i in 1..n.saturating_sub(1) {
        let (r, u, du) = (sol.r[i], sol.u[i], sol.du[i]);
        if r < 1.0 {
            continue;
        }
        let t = cfg.t_of_r(r);
        let central = |h: f64| -> Option<f64> {
            let (rp, rm) = (cfg.r_of_t(t + h), cfg.r_of_t(t - h));
            let yp = advance(r, [u, du], rp)?;
            let ym = advance(r, [u, du], rm)?;
            Some((cfg.big_v(rm, ym[1]) - cfg.big_v(rp, yp[1])) / (2.0 * h))
        };
        let h = 1e-4 * t;
        let (Some(d1h), Some(d2h)) = (central(h), central(2.0 * h)) else {
            continue;
        };
        let vtt = (4.0 * d1h - d2h) / 3.0;
        let vt = -cfg.big_v(r, du);
        let fv = nl.f(u);
        out.push((t, (vtt + k / t * vt - lambda * fv) / fv));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapConfig {
    /// Relative size below which a directly differenced gap is noise.
    pub noise_rel: f64,
    /// Largest radius of the report.
    pub report_radius: f64,
    /// Inward integration starts at `outer_factor · report_radius`.
    pub outer_factor: f64,
    pub points_per_decade: usize,
}

impl Default for GapConfig {
    fn default() -> Self {
        Self {
            noise_rel: 1e-9,
            report_radius: 100.0,
            outer_factor: 10.0,
            points_per_decade: 40,
        }
    }
}

/// Gap between two ordered entire large solutions on a shared grid.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub r: Vec<f64>,
    pub gap: Vec<f64>,
    pub envelope: Vec<f64>,
    pub ratio: Vec<f64>,
    /// Whether the gap at this point stands above the noise floor.
    pub resolved: Vec<bool>,
    pub k: f64,
    pub method: String,
}

impl GapReport {
    fn new(r: Vec<f64>, gap: Vec<f64>, resolved: Vec<bool>, cfg: &TransformConfig, method: &str) -> Result<Self> {
        let mut sign = 0.0;
        for ((&ri, &g), &ok) in r.iter().zip(&gap).zip(&resolved) {
            if !ok || g == 0.0 {
                continue;
            }
            if sign == 0.0 {
                sign = g.signum();
            } else if g.signum() != sign {
                return Err(Error::OrderingViolation(format!("gap changes sign at r = {ri} ({g})")));
            }
        }
        let envelope: Vec<f64> = r.iter().map(|&x| cfg.gap_envelope(x)).collect();
        let ratio = gap.iter().zip(&envelope).map(|(g, e)| g / e).collect();
        Ok(Self {
            r,
            gap,
            envelope,
            ratio,
            resolved,
            k: cfg.k(),
            method: method.to_string(),
        })
    }

    fn at(&self, values: &[f64], r: f64) -> Option<f64> {
        let i = self.r.partition_point(|&x| x < r);
        if i < self.r.len() && (self.r[i] - r).abs() <= 1e-12 * r {
            return Some(values[i]);
        }
        if i == 0 || i >= self.r.len() {
            return None;
        }
        let (r0, r1) = (self.r[i - 1], self.r[i]);
        let s = (r - r0) / (r1 - r0);
        Some(values[i - 1] + s * (values[i] - values[i - 1]))
    }

    pub fn gap_at(&self, r: f64) -> Option<f64> {
        self.at(&self.gap, r)
    }

    pub fn ratio_at(&self, r: f64) -> Option<f64> {
        self.at(&self.ratio, r)
    }

    /// `max ratio / ratio(r_lo)` over `[r_lo, r_hi]`.
    pub fn band(&self, r_lo: f64, r_hi: f64) -> Option<f64> {
        let base = self.ratio_at(r_lo)?;
        let max = self
            .r
            .iter()
            .zip(&self.ratio)
            .filter(|(r, _)| **r >= r_lo && **r <= r_hi)
            .map(|(_, q)| *q)
            .fold(base, f64::max);
        Some(max / base)
    }

    pub fn all_resolved(&self) -> bool {
        self.resolved.iter().all(|b| *b)
    }
}

fn geometric_grid(a: f64, b: f64, per_decade: usize) -> Vec<f64> {
    let n = (((b / a).log10() * per_decade as f64).ceil() as usize).max(1);
    (0..=n).map(|i| a * (b / a).powf(i as f64 / n as f64)).collect()
}

/// Gap `u₂ − u₁` by interpolating both trajectories onto a shared grid; the
/// pair is swapped if needed so that the gap is nonnegative at the start.
/// Points where the gap is below `noise_rel · u` are flagged unresolved and
/// excluded from the ordering check.
pub fn uniqueness_gap(
    a: &RadialSolution,
    b: &RadialSolution,
    cfg: &TransformConfig,
    gap_cfg: &GapConfig,
) -> Result<GapReport> {
    let lo = a.r[0].max(b.r[0]).max(f64::MIN_POSITIVE);
    let hi = a.r.last().unwrap().min(*b.r.last().unwrap()).min(gap_cfg.report_radius);
    if !(hi > lo) {
        return Err(Error::Precondition("trajectories do not overlap".into()));
    }
    let grid = geometric_grid(lo, hi, gap_cfg.points_per_decade);
    let mut gap = Vec::with_capacity(grid.len());
    let mut resolved = Vec::with_capacity(grid.len());
    for &r in &grid {
        let ua = a.interpolate(r).map(|x| x.0);
        let ub = b.interpolate(r).map(|x| x.0);
        let (Some(ua), Some(ub)) = (ua, ub) else {
            return Err(Error::Precondition(format!("no data at r = {r}")));
        };
        gap.push(ub - ua);
        resolved.push((ub - ua).abs() > gap_cfg.noise_rel * ua.abs().max(ub.abs()));
    }
    if gap.first().is_some_and(|g| *g < 0.0) {
        gap.iter_mut().for_each(|g| *g = -*g);
    }
    GapReport::new(grid, gap, resolved, cfg, "direct")
}

/// Gap between the entire large solution `lower` and the one starting `g0`
/// above it at `r0`, computed by integrating the difference equation
///
/// `g'' + (D−1)g'/r = ρ(r)(f(u₁+g) − f(u₁))`
///
/// inward from `outer_factor · report_radius`, started on the decaying mode
/// of its linearization, with the start amplitude fitted so that `g(r0) = g0`.
/// The difference of `f` is evaluated as `g·∫₀¹ f'(u₁ + θg) dθ` (three-point
/// Gauss), which keeps full relative accuracy when `g ≪ u₁`.
pub fn resolve_gap(
    nl: &Nonlinearity,
    pot: &RadialPotential,
    lower: &RadialSolution,
    g0: f64,
    cfg: &TransformConfig,
    gap_cfg: &GapConfig,
) -> Result<GapReport> {
    if !(g0 > 0.0) {
        return Err(Error::Domain(format!("initial gap must be positive, got {g0}")));
    }
    let r0 = lower.r[0];
    let r_out = gap_cfg.report_radius * gap_cfg.outer_factor;
    if !(r0 > 0.0) || *lower.r.last().unwrap() < r_out {
        return Err(Error::Precondition(format!(
            "lower solution must cover [r0 > 0, {r_out}], covers [{r0}, {}]",
            lower.r.last().unwrap()
        )));
    }
    let d1 = cfg.dim as f64 - 1.0;
    let backbone = |r: f64| lower.interpolate(r).map_or(f64::NAN, |x| x.0);
    let (gx, gw) = ([0.112_701_665_379_258_3, 0.5, 0.887_298_334_620_741_7], [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0]);
    let slope = |u: f64, g: f64| -> f64 { gx.iter().zip(&gw).map(|(x, w)| w * nl.fprime(u + x * g)).sum() };
    let rhs = |r: f64, y: &[f64; 2]| {
        let u = backbone(r);
        [y[1], pot.rho(r) * slope(u, y[0]) * y[0] - d1 * y[1] / r]
    };
    let c = r_out * r_out * pot.rho(r_out) * nl.fprime(backbone(r_out));
    let dm2 = d1 - 1.0;
    let m_minus = -0.5 * (dm2 + (dm2 * dm2 + 4.0 * c).sqrt());
    let shoot_in = |amp: f64, keep: bool| -> Result<(f64, Vec<(f64, f64)>)> {
        let y0 = [amp, amp * m_minus / r_out];
        let mut s = Dopri5::new(&rhs, r_out, y0, -1e-3 * r_out, 1e-11, 1e-300);
        let mut pts = vec![(r_out, amp)];
        while s.t() > r0 {
            let (r, y) = s
                .step(&rhs, r0)
                .map_err(|e| Error::TrajectoryInvalid(format!("inward gap integration failed: {e:?}")))?;
            if keep {
                pts.push((r, y[0]));
            }
        }
        Ok((s.y()[0], pts))
    };
    let miss = |la: f64| -> f64 {
        match shoot_in(la.exp(), false) {
            Ok((g, _)) if g > 0.0 => g.ln() - g0.ln(),
            Ok(_) => -1e3,
            Err(_) => 1e3,
        }
    };
    let guess = (g0 * (r_out / r0).powf(m_minus)).max(f64::MIN_POSITIVE).ln();
    let (mut lo, mut hi) = (guess, guess);
    while miss(lo) > 0.0 {
        lo -= 2.0;
        if lo < -745.0 {
            return Err(Error::NoSolutionInBracket("gap amplitude underflows".into()));
        }
    }
    while miss(hi) < 0.0 {
        hi += 2.0;
        if hi > 700.0 {
            return Err(Error::NoSolutionInBracket("gap amplitude overflows".into()));
        }
    }
    let la = roots::illinois(miss, lo, hi, 1e-12, 200)?;
    let (_, mut pts) = shoot_in(la.exp(), true)?;
    pts.reverse();
    let grid = geometric_grid(r0, gap_cfg.report_radius, gap_cfg.points_per_decade);
    let gap: Vec<f64> = grid
        .iter()
        .map(|&r| {
            let i = pts.partition_point(|p| p.0 < r).clamp(1, pts.len() - 1);
            let ((ra, ga), (rb, gb)) = (pts[i - 1], pts[i]);
            // log-linear interpolation between accepted steps
            let s = (r.ln() - ra.ln()) / (rb.ln() - ra.ln());
            (ga.ln() + s * (gb.ln() - ga.ln())).exp()
        })
        .collect();
    let resolved = vec![true; grid.len()];
    GapReport::new(grid, gap, resolved, cfg, "inward")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(a: f64, beta: f64, rs: &[f64]) -> RadialSolution {
        RadialSolution::from_samples(
            rs.to_vec(),
            rs.iter().map(|r| a * r.powf(beta)).collect(),
            rs.iter().map(|r| a * beta * r.powf(beta - 1.0)).collect(),
            3,
        )
        .unwrap()
    }

    fn radii() -> Vec<f64> {
        (0..=200).map(|i| 10f64.powf(i as f64 / 100.0)).collect()
    }

    #[test]
    fn k_values() {
        assert_eq!(TransformConfig::new(10.0, 3).unwrap().k(), 0.75);
        assert_eq!(TransformConfig::new(3.0, 3).unwrap().k(), -1.0);
        for d in 3..8 {
            assert_eq!(TransformConfig::new(2.0 * d as f64 - 2.0, d).unwrap().k(), 0.0);
        }
        assert!(TransformConfig::new(2.0, 3).is_err());
    }

    #[test]
    fn exact_profile_values() {
        let cfg = TransformConfig::new(4.0, 3).unwrap();
        let p = to_transformed(&exact(6.0, 2.0, &[1.0, 2.0]), &cfg).unwrap();
        assert_eq!(p.t, vec![1.0, 0.5]);
        assert!((p.v[1] - 24.0).abs() < 1e-12);
        assert!((p.big_v[1] - 96.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_reconstructs_u() {
        let cfg = TransformConfig::new(4.0, 3).unwrap();
        let sol = exact(6.0, 2.0, &radii());
        let (r, u, du) = to_transformed(&sol, &cfg).unwrap().to_radial();
        for i in 0..r.len() {
            assert!((r[i] / sol.r[i] - 1.0).abs() < 1e-12);
            assert_eq!(u[i], sol.u[i]);
            assert!((du[i] / sol.du[i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn non_monotone_profile_is_rejected() {
        let cfg = TransformConfig::new(4.0, 3).unwrap();
        let sol = RadialSolution::from_samples(vec![1.0, 2.0, 3.0], vec![1.0, 3.0, 2.0], vec![1.0; 3], 3).unwrap();
        assert!(matches!(to_transformed(&sol, &cfg), Err(Error::CannotInvert(_))));
    }

    #[test]
    fn tkv_increasing_on_exact_profile() {
        let cfg = TransformConfig::new(4.0, 3).unwrap();
        let p = to_transformed(&exact(6.0, 2.0, &radii()), &cfg).unwrap();
        assert!(check_tkv_monotone(&p).unwrap() > 0.0);
        let single = to_transformed(&exact(6.0, 2.0, &[2.0]), &cfg).unwrap();
        assert!(check_tkv_monotone(&single).is_err());
    }

    #[test]
    fn hopital_exact_profiles() {
        let cfg = TransformConfig::new(4.0, 3).unwrap();
        let rs: Vec<f64> = (0..=400).map(|i| 10f64.powf(i as f64 / 100.0)).collect();
        let q = hopital_limit(&to_transformed(&exact(6.0, 2.0, &rs), &cfg).unwrap(), &Nonlinearity::power(2.0)).unwrap();
        assert!((q - 2.0).abs() < 1e-12, "{q}");
        let q3 = hopital_limit(
            &to_transformed(&exact(2f64.sqrt(), 1.0, &rs), &cfg).unwrap(),
            &Nonlinearity::power(3.0),
        )
        .unwrap();
        assert!((q3 - 2.0).abs() < 1e-12, "{q3}");
        let wrong = TransformConfig::new(5.0, 3).unwrap();
        assert!(matches!(
            hopital_limit(&to_transformed(&exact(6.0, 2.0, &rs), &wrong).unwrap(), &Nonlinearity::power(2.0)),
            Err(Error::WrongFamily(_))
        ));
    }

    #[test]
    fn vequation_residual_vanishes_on_exact_profile() {
        let cfg = TransformConfig::new(4.0, 3).unwrap();
        let sol = exact(6.0, 2.0, &radii());
        let res = vequation_residual(&sol, &Nonlinearity::power(2.0), &cfg).unwrap();
        assert!(!res.is_empty());
        for (t, e) in res {
            assert!(e.abs() < 1e-6, "t = {t}: {e}");
        }
    }

    #[test]
    fn identical_trajectories_have_zero_gap() {
        let cfg = TransformConfig::new(4.0, 3).unwrap();
        let sol = exact(6.0, 2.0, &radii());
        let rep = uniqueness_gap(&sol, &sol, &cfg, &GapConfig::default()).unwrap();
        assert!(rep.gap.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn crossing_trajectories_are_an_ordering_violation() {
        let cfg = TransformConfig::new(4.0, 3).unwrap();
        let a = exact(6.0, 2.0, &radii());
        let b = exact(3.0, 2.3, &radii());
        assert!(matches!(
            uniqueness_gap(&a, &b, &cfg, &GapConfig::default()),
            Err(Error::OrderingViolation(_))
        ));
    }
}
