//! Explicit bounds along radial solutions: the subsolution `w_β`, the
//! implicit growth lower bound, the `Γ` growth ceiling, the energy
//! functional `P = u'²/ρ − 2F(u)`, and the `f(u)/u ≤ C/Φ²` hypothesis.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::potential::{HrhoOutcome, RadialPotential};
use crate::shooting::RadialSolution;

/// A pointwise comparison on a radial grid.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub grid: Vec<f64>,
    pub primal: Vec<f64>,
    pub bound: Vec<f64>,
    /// `bound − primal` unless stated otherwise by the producer.
    pub margin: Vec<f64>,
    pub verdict: bool,
    /// Allowed negative excursion of the margin (absolute).
    pub tolerance: f64,
    /// First radius from which the comparison applies.
    pub r_min: Option<f64>,
    /// Grid points where the comparison quantity is undefined.
    pub undefined: Vec<f64>,
}

impl BoundReport {
    fn new(grid: Vec<f64>, primal: Vec<f64>, bound: Vec<f64>, margin: Vec<f64>, tolerance: f64) -> Self {
        let verdict = !margin.is_empty() && margin.iter().all(|m| *m >= -tolerance);
        Self {
            grid,
            primal,
            bound,
            margin,
            verdict,
            tolerance,
            r_min: None,
            undefined: Vec::new(),
        }
    }

    pub fn min_margin(&self) -> f64 {
        self.margin.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Geometric grid with `per_decade` points per decade on `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let n = ((hi / lo).log10() * per_decade as f64).ceil().max(1.0) as usize;
    (0..=n).map(|i| lo * (hi / lo).powf(i as f64 / n as f64)).collect()
}

fn require_finite_hrho(pot: &RadialPotential) -> Result<()> {
    match pot.check_hrho() {
        HrhoOutcome::Finite(_) => Ok(()),
        HrhoOutcome::Divergent => Err(Error::Precondition(format!("{}: ∫ r ρ dr diverges", pot.key()))),
    }
}

/// The increasing majorant used for `w_β`: `f` itself when it is already
/// nondecreasing, the monotone envelope otherwise.
fn majorant(nl: &Nonlinearity) -> Result<Nonlinearity> {
    if nl.flags.nondecreasing {
        Ok(nl.clone())
    } else {
        nl.monotone_envelope(None)
    }
}

/// `w_β(r)` on `grid`, `NaN` where the defining equation has no solution.
pub fn w_beta_values(nl: &Nonlinearity, pot: &RadialPotential, dim: usize, beta: Option<f64>, grid: &[f64]) -> Result<Vec<f64>> {
    require_finite_hrho(pot)?;
    let fbar = majorant(nl)?;
    grid.iter()
        .map(|&r| {
            let target = pot.newtonian_potential(r, dim)?;
            match fbar.envelope_tail_inverse(beta, target) {
                Ok(w) => Ok(w),
                Err(Error::OutOfRange(_)) => Ok(f64::NAN),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Three-point `w'' + (D−1)w'/r` on a nonuniform grid at interior point `i`.
fn radial_laplacian(r: &[f64], w: &[f64], i: usize, dim: usize) -> f64 {
    let (h1, h2) = (r[i] - r[i - 1], r[i + 1] - r[i]);
    let den = h1 * h2 * (h1 + h2);
    let d2 = 2.0 * (h1 * w[i + 1] - (h1 + h2) * w[i] + h2 * w[i - 1]) / den;
    let d1 = (h1 * h1 * w[i + 1] - h2 * h2 * w[i - 1] + (h2 * h2 - h1 * h1) * w[i]) / den;
    d2 + (dim as f64 - 1.0) * d1 / r[i]
}

/// Subsolution `w_β` from `∫_{w}^{β} ds/f̄ = U(r)`; the margin is the
/// finite-difference residual `Δw_β − ρ f(w_β)` at interior grid points.
/// The verdict also requires `w_β < β` wherever `w_β` is defined.
pub fn subsolution_w_beta(
    nl: &Nonlinearity,
    pot: &RadialPotential,
    dim: usize,
    beta: Option<f64>,
    r_grid: &[f64],
) -> Result<BoundReport> {
    if r_grid.len() < 3 || r_grid.windows(2).any(|w| !(w[1] > w[0])) || r_grid[0] <= 0.0 {
        return Err(Error::Domain("need at least 3 increasing positive grid radii".into()));
    }
    if let Some(b) = beta {
        if !(b > 0.0) {
            return Err(Error::OutOfRange(format!("β must be positive, got {b}")));
        }
    }
    let w = w_beta_values(nl, pot, dim, beta, r_grid)?;
    let forcing: Vec<f64> = r_grid.iter().zip(&w).map(|(&r, &w)| pot.rho(r) * nl.f(w)).collect();
    let scale = forcing.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let tol = 1e-6 * scale;
    let (mut grid, mut primal, mut bound, mut margin, mut undefined) = (vec![], vec![], vec![], vec![], vec![]);
    for i in 1..r_grid.len() - 1 {
        if w[i - 1..=i + 1].iter().any(|v| v.is_nan()) {
            undefined.push(r_grid[i]);
            continue;
        }
        let lap = radial_laplacian(r_grid, &w, i, dim);
        grid.push(r_grid[i]);
        primal.push(w[i]);
        bound.push(lap);
        margin.push(lap - forcing[i]);
    }
    let mut rep = BoundReport::new(grid, primal, bound, margin, tol);
    if let Some(b) = beta {
        rep.verdict &= w.iter().filter(|v| !v.is_nan()).all(|&v| v < b);
    }
    rep.undefined = undefined;
    Ok(rep)
}

/// `β − w_β` at the last grid point, the tail check `w_β → β`.
pub fn w_beta_tail_gap(report: &BoundReport, beta: f64) -> Option<f64> {
    report.primal.last().map(|w| beta - w)
}

/// Sandwich `w_β ≤ u ≤ β` for a bounded solution with limit `β`; the
/// margin is `min(u − w_β, β − u)`.
pub fn bounded_sandwich(sol: &RadialSolution, nl: &Nonlinearity, pot: &RadialPotential, beta: f64) -> Result<BoundReport> {
    let grid: Vec<f64> = sol.r.iter().copied().filter(|&r| r > 0.0).collect();
    let u: Vec<f64> = sol.r.iter().zip(&sol.u).filter(|(r, _)| **r > 0.0).map(|(_, u)| *u).collect();
    let w = w_beta_values(nl, pot, sol.dim, Some(beta), &grid)?;
    let margin = u.iter().zip(&w).map(|(&u, &w)| (u - w).min(beta - u)).collect();
    Ok(BoundReport::new(grid, u, w, margin, 1e-9 * beta.max(1.0)))
}

/// `∫_{u(r)}^∞ ds/f ≤ U(r)` along `sol`; margin `U − ∫`.
pub fn implicit_lower_bound(sol: &RadialSolution, nl: &Nonlinearity, pot: &RadialPotential) -> Result<BoundReport> {
    if !nl.flags.nondecreasing {
        return Err(Error::Precondition(format!("{} is not nondecreasing", nl.key())));
    }
    require_finite_hrho(pot)?;
    let (mut grid, mut primal, mut bound, mut margin) = (vec![], vec![], vec![], vec![]);
    for (&r, &u) in sol.r.iter().zip(&sol.u) {
        let tail = nl.reciprocal_tail(u, None)?;
        let big_u = pot.newtonian_potential(r, sol.dim)?;
        grid.push(r);
        primal.push(tail);
        bound.push(big_u);
        margin.push(big_u - tail);
    }
    Ok(BoundReport::new(grid, primal, bound, margin, 1e-9))
}

/// At most `n` roughly log-spaced indices of `r` with `r ≥ from`.
fn thin_indices(r: &[f64], from: f64, n: usize) -> Vec<usize> {
    let idx: Vec<usize> = (0..r.len()).filter(|&i| r[i] >= from && r[i] > 0.0).collect();
    if idx.len() <= n {
        return idx;
    }
    let (lo, hi) = (r[idx[0]].ln(), r[*idx.last().unwrap()].ln());
    let mut out: Vec<usize> = Vec::with_capacity(n);
    for k in 0..n {
        let target = lo + (hi - lo) * k as f64 / (n - 1) as f64;
        let j = idx.partition_point(|&i| r[i].ln() < target).min(idx.len() - 1);
        if out.last() != Some(&idx[j]) {
            out.push(idx[j]);
        }
    }
    out
}

/// `u(r) ≤ Γ(r) = Φ⁻¹(c r^{1−α/2})` along `sol`, evaluated on at most 60
/// log-spaced grid points at radii `r ≥ 1`.
pub fn gamma_bound(sol: &RadialSolution, nl: &Nonlinearity, alpha: f64, c: f64) -> Result<BoundReport> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::OutOfRange(format!("c must lie in (0, 1), got {c}")));
    }
    if !(alpha > 2.0) {
        return Err(Error::Domain(format!("α must exceed 2, got {alpha}")));
    }
    let (mut grid, mut primal, mut bound, mut margin, mut undefined) = (vec![], vec![], vec![], vec![], vec![]);
    for i in thin_indices(&sol.r, 1.0, 60) {
        let r = sol.r[i];
        match nl.phi_inverse(c * r.powf(1.0 - 0.5 * alpha)) {
            Ok(g) => {
                grid.push(r);
                primal.push(sol.u[i]);
                bound.push(g);
                margin.push(g - sol.u[i]);
            }
            Err(Error::OutOfRange(_)) => undefined.push(r),
            Err(e) => return Err(e),
        }
    }
    // relative slack for the Φ⁻¹ root tolerance
    let tol = 1e-9 * bound.iter().copied().fold(0.0, f64::max);
    let mut rep = BoundReport::new(grid, primal, bound, margin, tol);
    rep.r_min = rep.grid.first().copied();
    rep.undefined = undefined;
    Ok(rep)
}

/// Largest `c` with `u ≤ Φ⁻¹(c r^{1−α/2})` at every grid radius `r ≥ r_from`:
/// `min Φ(u(r)) r^{α/2−1}`.
pub fn largest_gamma_c(sol: &RadialSolution, nl: &Nonlinearity, alpha: f64, r_from: f64) -> Result<f64> {
    let mut best = f64::INFINITY;
    for i in thin_indices(&sol.r, r_from, 60) {
        let phi = nl.phi(sol.u[i])?;
        best = best.min(phi * sol.r[i].powf(0.5 * alpha - 1.0));
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::Domain(format!("no grid points beyond r = {r_from}")))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FiddgrReport {
    pub holds: bool,
    pub best_c: f64,
    pub u: Vec<f64>,
    pub product: Vec<f64>,
}

/// Samples `(f(u)/u)·Φ(u)²` on a log grid above `max(M, 1)`. The hypothesis
/// holds when the supremum over the top two decades exceeds the supremum
/// below them by at most 5% (for short ranges the split is the log-midpoint).
pub fn fiddgr_check(nl: &Nonlinearity, m: f64) -> Result<FiddgrReport> {
    if !(m >= 0.0) {
        return Err(Error::OutOfRange(format!("M must be ≥ 0, got {m}")));
    }
    if let Some(mt) = nl.m_threshold() {
        if m < mt {
            return Err(Error::Precondition(format!("f(u)/u is nondecreasing only above {mt}")));
        }
    } else {
        return Err(Error::Precondition(format!("{}: f(u)/u is not eventually nondecreasing", nl.key())));
    }
    let lo = m.max(1.0);
    let hi = nl.natural_max().min(1e8).max(lo * 10.0);
    let u = geometric_grid(lo, hi, 8);
    let product = u
        .iter()
        .map(|&x| nl.phi(x).map(|p| nl.f(x) / x * p * p))
        .collect::<Result<Vec<_>>>()?;
    let cut = if hi / lo >= 1e3 { hi / 100.0 } else { (lo * hi).sqrt() };
    let sup_low = u.iter().zip(&product).filter(|(x, _)| **x <= cut).map(|(_, p)| *p).fold(0.0, f64::max);
    let sup_all = product.iter().copied().fold(0.0, f64::max);
    let holds = sup_all.is_finite() && sup_low > 0.0 && sup_all <= 1.05 * sup_low;
    Ok(FiddgrReport { holds, best_c: sup_all, u, product })
}

/// `P = u'²/ρ − 2F(u)` against `2C_R/(r^{2D−2}ρ(r))` on `[R, r_max]`, with
/// `C_R = R^{2D−2}u'(R)²/2`. The slack is ten times the accumulated relative
/// integration error applied to the size of both terms of `P`.
pub fn energy_p_radial(sol: &RadialSolution, pot: &RadialPotential, nl: &Nonlinearity, big_r: f64) -> Result<BoundReport> {
    let dim = sol.dim;
    if !pot.weighted_nondecreasing(dim, big_r) {
        return Err(Error::Inapplicable(format!(
            "r^{{2D−2}}ρ(r) is not nondecreasing beyond R = {big_r} for {}",
            pot.key()
        )));
    }
    let (_, du_r) = sol
        .interpolate(big_r)
        .ok_or_else(|| Error::OutOfRange(format!("R = {big_r} outside the solution grid")))?;
    let w = 2.0 * dim as f64 - 2.0;
    let c_r = big_r.powf(w) * du_r * du_r / 2.0;
    let u_max = sol.u.iter().copied().fold(0.0, f64::max);
    let rel_err = if u_max > 0.0 { sol.error_estimate / u_max } else { 0.0 };
    let (mut grid, mut primal, mut bound, mut margin) = (vec![], vec![], vec![], vec![]);
    let mut slack = 0.0f64;
    for i in 0..sol.r.len() {
        let r = sol.r[i];
        if r < big_r {
            continue;
        }
        let rho = pot.rho(r);
        let kinetic = sol.du[i] * sol.du[i] / rho;
        let pot_term = 2.0 * nl.eval_big_f(sol.u[i])?;
        let p = kinetic - pot_term;
        let b = 2.0 * c_r / (r.powf(w) * rho);
        slack = slack.max(10.0 * rel_err * (kinetic + pot_term.abs()));
        grid.push(r);
        primal.push(p);
        bound.push(b);
        margin.push(b - p);
    }
    Ok(BoundReport::new(grid, primal, bound, margin, slack))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shooting::{find_els, ShootingConfig};

    fn exact(a: f64, beta: f64, dim: usize, lo: f64, hi: f64) -> RadialSolution {
        let r = geometric_grid(lo, hi, 50);
        let u = r.iter().map(|r| a * r.powf(beta)).collect();
        let du = r.iter().map(|r| a * beta * r.powf(beta - 1.0)).collect();
        RadialSolution::from_samples(r, u, du, dim).unwrap()
    }

    #[test]
    fn w_beta_is_a_subsolution_below_beta() {
        let nl = Nonlinearity::power(2.0);
        let pot = RadialPotential::model(4.0).unwrap();
        let grid = geometric_grid(0.05, 100.0, 200);
        let rep = subsolution_w_beta(&nl, &pot, 3, Some(10.0), &grid).unwrap();
        assert!(rep.verdict, "min residual {} vs tol {}", rep.min_margin(), rep.tolerance);
        assert!(rep.undefined.is_empty());
        // f = u²: 1/w − 1/β = U, so β − w = β²U/(1 + βU) → 0
        let u = pot.newtonian_potential(100.0, 3).unwrap();
        let gap = w_beta_tail_gap(&rep, 10.0).unwrap();
        assert!(gap > 0.0 && gap < 100.0 * u);
    }

    #[test]
    fn w_beta_increases_with_beta() {
        let nl = Nonlinearity::power(2.0);
        let pot = RadialPotential::model(4.0).unwrap();
        let grid = geometric_grid(0.1, 100.0, 10);
        let w2 = w_beta_values(&nl, &pot, 3, Some(2.0), &grid).unwrap();
        let w5 = w_beta_values(&nl, &pot, 3, Some(5.0), &grid).unwrap();
        let winf = w_beta_values(&nl, &pot, 3, None, &grid).unwrap();
        for i in 0..grid.len() {
            assert!(w2[i] <= w5[i] && w5[i] <= winf[i]);
            // f = u² gives w_∞ = 1/U
            let u = pot.newtonian_potential(grid[i], 3).unwrap();
            assert!((winf[i] * u - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn implicit_lower_bound_on_exact_els() {
        let nl = Nonlinearity::power(2.0);
        let pot = RadialPotential::model(4.0).unwrap();
        let sol = exact(6.0, 2.0, 3, 1.0, 100.0);
        let rep = implicit_lower_bound(&sol, &nl, &pot).unwrap();
        assert!(rep.verdict);
        for (i, &r) in rep.grid.iter().enumerate() {
            let want = 4.0 / (3.0 * r) - 0.5 / (r * r) - 1.0 / (6.0 * r * r);
            assert!((rep.margin[i] - want).abs() < 1e-10 * (1.0 / r), "r = {r}");
        }
    }

    #[test]
    fn implicit_lower_bound_scales_with_f() {
        let pot = RadialPotential::model(4.0).unwrap();
        let sol = exact(6.0, 2.0, 3, 1.0, 10.0);
        let a = implicit_lower_bound(&sol, &Nonlinearity::power(2.0), &pot).unwrap();
        let b = implicit_lower_bound(&sol, &Nonlinearity::parse("power:p=2,c=4").unwrap(), &pot).unwrap();
        for i in 0..a.primal.len() {
            assert!((b.primal[i] - 0.25 * a.primal[i]).abs() < 1e-12 * a.primal[i]);
        }
    }

    #[test]
    fn implicit_lower_bound_needs_integrable_reciprocal() {
        let pot = RadialPotential::model(4.0).unwrap();
        let sol = exact(1.0, 1.0, 3, 1.0, 10.0);
        let err = implicit_lower_bound(&sol, &Nonlinearity::power(1.0), &pot).unwrap_err();
        assert!(matches!(err, Error::Inapplicable(_)));
    }

    #[test]
    fn gamma_matches_closed_form_for_p2() {
        const C2: f64 = 4.206546315976362;
        let nl = Nonlinearity::power(2.0);
        let sol = exact(6.0, 2.0, 3, 1.0, 100.0);
        let c = 0.9;
        let rep = gamma_bound(&sol, &nl, 4.0, c).unwrap();
        assert!(rep.verdict);
        assert_eq!(rep.r_min, Some(1.0));
        for (r, g) in rep.grid.iter().zip(&rep.bound) {
            let want = (C2 / c).powi(2) * r * r;
            assert!((g / want - 1.0).abs() < 1e-6);
        }
        assert!(rep.bound.windows(2).all(|w| w[1] >= w[0]));
        let cmax = largest_gamma_c(&sol, &nl, 4.0, 1.0).unwrap();
        assert!((cmax - C2 / 6f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn gamma_has_linear_growth_for_p3() {
        let nl = Nonlinearity::power(3.0);
        let sol = exact(2f64.sqrt(), 1.0, 3, 1.0, 100.0);
        let rep = gamma_bound(&sol, &nl, 4.0, 0.5).unwrap();
        assert!(rep.verdict);
        let ratios: Vec<f64> = rep.grid.iter().zip(&rep.bound).map(|(r, g)| g / r).collect();
        assert!(ratios.iter().all(|q| (q / ratios[0] - 1.0).abs() < 1e-6));
    }

    #[test]
    fn fiddgr_matches_scaling_constants() {
        for (p, c2) in [(2.0, 17.6950319084543), (3.0, 6.87518581802037), (5.0, 2.949171984742384)] {
            let rep = fiddgr_check(&Nonlinearity::power(p), 0.0).unwrap();
            assert!(rep.holds, "p = {p}");
            assert!((rep.best_c / c2 - 1.0).abs() < 1e-4, "p = {p}: {}", rep.best_c);
        }
    }

    #[test]
    fn energy_vanishes_on_exact_profiles() {
        let pot = RadialPotential::model(4.0).unwrap();
        for (nl, a, beta) in [(Nonlinearity::power(2.0), 6.0, 2.0), (Nonlinearity::power(3.0), 2f64.sqrt(), 1.0)] {
            let sol = exact(a, beta, 3, 1.0, 100.0);
            let rep = energy_p_radial(&sol, &pot, &nl, 1.0).unwrap();
            assert!(rep.verdict);
            for (i, &u) in sol.u.iter().enumerate() {
                assert!(rep.primal[i].abs() <= 1e-12 * nl.eval_big_f(u).unwrap());
            }
        }
    }

    #[test]
    fn energy_rejects_fast_decay() {
        let pot = RadialPotential::model(10.0).unwrap();
        let sol = exact(72.0, 8.0, 3, 1.0, 10.0);
        let err = energy_p_radial(&sol, &pot, &Nonlinearity::power(2.0), 1.0).unwrap_err();
        assert!(matches!(err, Error::Inapplicable(_)));
    }

    #[test]
    fn energy_bound_on_numeric_els() {
        let nl = Nonlinearity::power(2.0);
        let pot = RadialPotential::model(3.0).unwrap();
        let sol = find_els(&nl, &pot, 3, 1.0, &ShootingConfig { r_max: 100.0, ..Default::default() }).unwrap();
        let rep = energy_p_radial(&sol, &pot, &nl, 1.0).unwrap();
        assert!(rep.verdict, "min margin {}", rep.min_margin());
    }

    #[test]
    fn fiddgr_exponential_entry() {
        let rep = fiddgr_check(&Nonlinearity::parse("exponential").unwrap(), 0.0).unwrap();
        assert!(rep.holds, "{:?}", rep.product);
    }

    #[test]
    fn bounded_solution_is_sandwiched() {
        use crate::shooting::{find_bounded, Classification};
        let nl = Nonlinearity::power(2.0);
        let pot = RadialPotential::model(4.0).unwrap();
        let cfg = ShootingConfig { r0: Some(0.0), r_max: 100.0, ..Default::default() };
        let sol = find_bounded(&nl, &pot, 3, 1.0, &cfg).unwrap();
        assert!(matches!(sol.classification, Classification::BoundedLimit { .. }));
        let rep = bounded_sandwich(&sol, &nl, &pot, 1.0).unwrap();
        assert!(rep.verdict, "min margin {}", rep.min_margin());
    }
}
