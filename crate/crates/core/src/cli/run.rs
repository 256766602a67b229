//! Experiment execution: each kind computes, writes its CSV and JSON
//! verdict, and returns the checks it performed.

use std::path::PathBuf;

use log::info;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{BoundsKind, ExperimentConfig, ExperimentKind};
use super::io;
use crate::bounds;
use crate::error::{Error, Result};
use crate::nonlinearity::{Kind, Nonlinearity};
use crate::potential::{mean_curvature_margin, EllipsoidPotential, HrhoOutcome, RadialPotential};
use crate::quad::Improper;
use crate::shooting::{self, RadialSolution};
use crate::transformed::{self, GapConfig, TransformConfig};

/// One verified statement with its margin (positive means satisfied).
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub experiment: String,
    pub theorem_ref: String,
    pub pass: bool,
    pub margin: Option<f64>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub experiment: String,
    pub checks: Vec<Check>,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    checks: Vec<Check>,
    artifacts: Vec<PathBuf>,
}

impl<'a> Run<'a> {
    fn check(&mut self, theorem_ref: &str, pass: bool, margin: Option<f64>, tolerance: Option<f64>) {
        self.checks.push(Check {
            experiment: self.cfg.kind.to_string(),
            theorem_ref: theorem_ref.to_string(),
            pass,
            margin: margin.filter(|m| m.is_finite()),
            tolerance,
        });
    }

    fn csv(&mut self, header: &[&str], columns: &[&[f64]]) -> Result<()> {
        let path = self.cfg.csv_path();
        io::write_columns(&path, header, columns)?;
        self.artifacts.push(path);
        Ok(())
    }

    fn solution_csv(&mut self, sol: &RadialSolution) -> Result<()> {
        self.csv(&["r", "u", "du"], &[&sol.r, &sol.u, &sol.du])
    }

    /// Writes the JSON verdict with the aggregate fields first.
    fn finish(mut self, details: Value) -> Result<Outcome> {
        let pass = self.checks.iter().all(|c| c.pass);
        let worst = self
            .checks
            .iter()
            .filter(|c| c.margin.is_some())
            .min_by(|a, b| a.margin.partial_cmp(&b.margin).unwrap());
        let verdict = json!({
            "experiment": self.cfg.kind.to_string(),
            "theorem_ref": self.checks.first().map(|c| c.theorem_ref.clone()).unwrap_or_default(),
            "pass": pass,
            "margin": worst.and_then(|c| c.margin),
            "tolerance": worst.and_then(|c| c.tolerance),
            "checks": self.checks,
            "details": details,
        });
        let path = self.cfg.json_path();
        io::write_json(&path, &verdict)?;
        self.artifacts.push(path);
        Ok(Outcome {
            experiment: self.cfg.kind.to_string(),
            checks: self.checks,
            artifacts: self.artifacts,
        })
    }
}

/// Runs one experiment and writes its artifacts under `cfg.out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    info!("running {} -> {}", cfg.kind, cfg.out_dir.display());
    let run = Run {
        cfg,
        checks: Vec::new(),
        artifacts: Vec::new(),
    };
    match cfg.kind {
        ExperimentKind::Shoot => shoot(run),
        ExperimentKind::ElsFind => els_find(run),
        ExperimentKind::Bbup => bbup(run),
        ExperimentKind::Transform => transform(run),
        ExperimentKind::UniqGap => uniq_gap(run),
        ExperimentKind::Bounds(b) => bounds_check(run, b),
        ExperimentKind::KoCheck => ko_check(run),
        ExperimentKind::HrhoCheck => hrho_check(run),
        ExperimentKind::EllipsoidSweep => ellipsoid_sweep(run),
        ExperimentKind::NoMaximalDemo => no_maximal_demo(run),
    }
}

fn solution_details(sol: &RadialSolution) -> Value {
    json!({
        "classification": sol.classification,
        "r0": sol.r0,
        "u0": sol.u0,
        "du0": sol.du0,
        "error_estimate": sol.error_estimate,
        "trace": sol.trace,
    })
}

fn shoot(mut run: Run) -> Result<Outcome> {
    let c = run.cfg;
    let sol = shooting::integrate_ivp(&c.nonlinearity()?, &c.potential()?, c.dim, c.req("u0")?, c.req("du0")?, &c.shooting)?;
    run.solution_csv(&sol)?;
    let decided = sol.classification != shooting::Classification::Indeterminate;
    run.check("radial trajectory classification", decided, None, None);
    run.finish(solution_details(&sol))
}

/// `(A, β)` of the exact profile `A r^β` for a pure power against the model
/// density, if those are the inputs.
fn exact_profile(nl: &Nonlinearity, pot: &RadialPotential, dim: usize) -> Option<(f64, f64)> {
    let Some(Kind::Power { p, coef }) = nl.kind() else { return None };
    if *coef != 1.0 || *p <= 1.0 || !pot.key().starts_with("model:") {
        return None;
    }
    let alpha = pot.alpha()?;
    let beta = (alpha - 2.0) / (p - 1.0);
    let a = (beta * (beta + dim as f64 - 2.0)).powf(1.0 / (p - 1.0));
    Some((a, beta))
}

/// Largest relative deviation from `A r^β` on `[r0, r_hi]`.
pub fn max_exact_deviation(sol: &RadialSolution, a: f64, beta: f64, r_hi: f64) -> f64 {
    sol.r
        .iter()
        .zip(&sol.u)
        .filter(|(r, _)| **r <= r_hi * (1.0 + 1e-12))
        .map(|(r, u)| (u / (a * r.powf(beta)) - 1.0).abs())
        .fold(0.0, f64::max)
}

fn els_find(mut run: Run) -> Result<Outcome> {
    let c = run.cfg;
    let (nl, pot) = (c.nonlinearity()?, c.potential()?);
    let u1 = c.req("u1")?;
    let sol = shooting::find_els(&nl, &pot, c.dim, u1, &c.shooting)?;
    run.solution_csv(&sol)?;
    run.check("entire large solution by separatrix shooting", true, None, None);
    let mut details = solution_details(&sol);
    if let Some((a, beta)) = exact_profile(&nl, &pot, c.dim) {
        let r0 = sol.r0;
        if r0 > 0.0 && (u1 / (a * r0.powf(beta)) - 1.0).abs() < 1e-12 {
            let tol = 1e-4;
            let dev = max_exact_deviation(&sol, a, beta, 100.0);
            run.check("exact profile A r^beta reproduced", dev < tol, Some(tol - dev), Some(tol));
            let slope = a * beta * r0.powf(beta - 1.0);
            let err = (sol.du0 - slope).abs();
            run.check("shooting slope equals exact slope", err < 1e-6, Some(1e-6 - err), Some(1e-6));
            details["exact"] = json!({ "A": a, "beta": beta, "max_rel_deviation": dev, "slope": slope });
        }
    }
    run.finish(details)
}

fn bbup(mut run: Run) -> Result<Outcome> {
    let c = run.cfg;
    let nl = c.nonlinearity()?;
    let (m, radius) = (c.num_or("m", 1.0)?, c.num_or("R", 1.0)?);
    let sol = shooting::boundary_blowup_ball(&nl, m, radius, c.dim, &c.shooting)?;
    run.solution_csv(&sol)?;
    let mut details = solution_details(&sol);
    if let Some(Kind::Power { p, coef }) = nl.kind() {
        if *p > 1.0 {
            let k = 2.0 / (p - 1.0);
            let want = (k * (k + 1.0) / (m * coef)).powf(1.0 / (p - 1.0));
            let kappa = shooting::fit_boundary_coefficient(&sol, k)?;
            let rel = (kappa - want).abs() / want;
            run.check("boundary blow-up rate", rel < 0.05, Some(0.05 - rel), Some(0.05));
            details["kappa"] = json!(kappa);
            details["kappa_exact"] = json!(want);
        }
    }
    let u0s = c.list("u0s")?.unwrap_or_else(|| vec![1.0, 10.0, 100.0]);
    let mut radii = Vec::new();
    for &u0 in &u0s {
        radii.push(shooting::blowup_radius(&nl, m, c.dim, u0, &c.shooting)?);
    }
    let finite: Vec<f64> = radii.iter().flatten().copied().collect();
    let decreasing = finite.len() == radii.len() && finite.windows(2).all(|w| w[1] < w[0]);
    let gap = finite.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
    run.check("blow-up radius decreases in u0", decreasing, Some(gap), Some(0.0));
    details["blowup_radii"] = json!(u0s.iter().zip(&radii).map(|(u, r)| json!({"u0": u, "r_star": r})).collect::<Vec<_>>());
    run.finish(details)
}

fn transform(mut run: Run) -> Result<Outcome> {
    let c = run.cfg;
    let path = c.path("in").ok_or_else(|| Error::Parse("transform needs 'in'".into()))?;
    let sol = io::read_solution(&path, c.dim)?;
    let tc = TransformConfig::new(c.req("alpha")?, c.dim)?;
    let prof = transformed::to_transformed(&sol, &tc)?;
    let tkv = prof.tkv();
    run.csv(&["t", "v", "V", "tkV"], &[&prof.t, &prof.v, &prof.big_v, &tkv])?;
    let min_inc = transformed::check_tkv_monotone(&prof)?;
    run.check("t^K V increases along the solution", min_inc > 0.0, Some(min_inc), Some(0.0));
    run.finish(json!({ "K": prof.k, "points": prof.len(), "min_increment": min_inc }))
}

fn uniq_gap(mut run: Run) -> Result<Outcome> {
    let c = run.cfg;
    let gap_cfg = GapConfig {
        report_radius: c.num_or("report_radius", 100.0)?,
        ..GapConfig::default()
    };
    let (report, alpha) = if c.params.contains_key("a") {
        let alpha = c.req("alpha")?;
        let tc = TransformConfig::new(alpha, c.dim)?;
        let a = io::read_solution(&c.path("a").unwrap(), c.dim)?;
        let b = io::read_solution(&c.path("b").unwrap(), c.dim)?;
        (transformed::uniqueness_gap(&a, &b, &tc, &gap_cfg), alpha)
    } else {
        let (nl, pot) = (c.nonlinearity()?, c.potential()?);
        let alpha = match c.num("alpha")? {
            Some(a) => a,
            None => pot.alpha().ok_or_else(|| Error::Parse("uniq-gap needs 'alpha' for this potential".into()))?,
        };
        let tc = TransformConfig::new(alpha, c.dim)?;
        let (u1, u2) = (c.req("u1")?, c.req("u2")?);
        let (lo, hi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
        let mut scfg = c.shooting;
        scfg.r_max = scfg.r_max.max(gap_cfg.report_radius * gap_cfg.outer_factor);
        let lower = shooting::find_els(&nl, &pot, c.dim, lo, &scfg)?;
        (transformed::resolve_gap(&nl, &pot, &lower, hi - lo, &tc, &gap_cfg), alpha)
    };
    let rep = match report {
        Ok(r) => r,
        Err(Error::OrderingViolation(msg)) => {
            run.check("gap keeps its sign", false, None, None);
            return run.finish(json!({ "alpha": alpha, "error": msg }));
        }
        Err(e) => return Err(e),
    };
    run.check("gap keeps its sign", true, None, None);
    run.csv(&["r", "gap", "envelope", "ratio"], &[&rep.r, &rep.gap, &rep.envelope, &rep.ratio])?;
    let (r_lo, r_hi) = (0.1 * gap_cfg.report_radius, gap_cfg.report_radius);
    let decay = match (rep.gap_at(r_hi), rep.gap_at(r_lo)) {
        (Some(a), Some(b)) => (a / b).abs(),
        _ => return Err(Error::Precondition(format!("gap report does not cover [{r_lo}, {r_hi}]"))),
    };
    run.check("gap decays", decay < 0.2, Some(0.2 - decay), Some(0.2));
    let band = rep.band(r_lo, r_hi).unwrap_or(f64::INFINITY);
    run.check("gap stays below its envelope", band <= 10.0, Some(10.0 - band), Some(10.0));
    run.finish(json!({ "alpha": alpha, "K": rep.k, "method": rep.method, "decay": decay, "band": band, "all_resolved": rep.all_resolved() }))
}

/// The entire large solution a bound is checked against.
fn els_source(c: &ExperimentConfig) -> Result<RadialSolution> {
    match c.path("in") {
        Some(p) => io::read_solution(&p, c.dim),
        None => shooting::find_els(&c.nonlinearity()?, &c.potential()?, c.dim, c.req("u1")?, &c.shooting),
    }
}

fn report_csv(run: &mut Run, rep: &bounds::BoundReport) -> Result<()> {
    run.csv(&["r", "primal", "bound", "margin"], &[&rep.grid, &rep.primal, &rep.bound, &rep.margin])
}

fn bounds_check(mut run: Run, which: BoundsKind) -> Result<Outcome> {
    let c = run.cfg;
    let nl = c.nonlinearity()?;
    match which {
        BoundsKind::WBeta => {
            let pot = c.potential()?;
            let beta = c.req("beta")?;
            let beta = if beta.is_finite() { Some(beta) } else { None };
            let per_decade = c.num_or("per_decade", 200.0)? as usize;
            let grid = bounds::geometric_grid(c.num_or("r_lo", 0.05)?, c.num_or("r_hi", 100.0)?, per_decade.max(2));
            let rep = bounds::subsolution_w_beta(&nl, &pot, c.dim, beta, &grid)?;
            report_csv(&mut run, &rep)?;
            run.check("subsolution w_beta", rep.verdict, Some(rep.min_margin()), Some(rep.tolerance));
            let tail = beta.and_then(|b| bounds::w_beta_tail_gap(&rep, b));
            run.finish(json!({ "beta": beta, "undefined": rep.undefined, "tail_gap": tail }))
        }
        BoundsKind::Lower => {
            let sol = els_source(c)?;
            let rep = bounds::implicit_lower_bound(&sol, &nl, &c.potential()?)?;
            report_csv(&mut run, &rep)?;
            run.check("implicit growth lower bound", rep.verdict, Some(rep.min_margin()), Some(rep.tolerance));
            run.finish(json!({ "points": rep.grid.len() }))
        }
        BoundsKind::Gamma => {
            let sol = els_source(c)?;
            let alpha = match c.num("alpha")? {
                Some(a) => a,
                None => c
                    .potential()?
                    .alpha()
                    .ok_or_else(|| Error::Parse("bounds:gamma needs 'alpha'".into()))?,
            };
            let cc = c.num_or("c", 0.5)?;
            let rep = bounds::gamma_bound(&sol, &nl, alpha, cc)?;
            report_csv(&mut run, &rep)?;
            run.check("growth ceiling Gamma", rep.verdict, Some(rep.min_margin()), Some(rep.tolerance));
            let largest = bounds::largest_gamma_c(&sol, &nl, alpha, rep.r_min.unwrap_or(1.0)).ok();
            run.finish(json!({ "c": cc, "r_min": rep.r_min, "largest_c": largest, "undefined": rep.undefined }))
        }
        BoundsKind::Energy => {
            let sol = els_source(c)?;
            let big_r = c.num_or("R", sol.r0.max(sol.r.iter().copied().find(|r| *r > 0.0).unwrap_or(1.0)))?;
            let rep = bounds::energy_p_radial(&sol, &c.potential()?, &nl, big_r)?;
            report_csv(&mut run, &rep)?;
            run.check("energy functional bound", rep.verdict, Some(rep.min_margin()), Some(rep.tolerance));
            let sup = rep.primal.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            run.finish(json!({ "R": big_r, "sup_P": sup }))
        }
        BoundsKind::Fiddgr => {
            let m = match c.num("M")? {
                Some(m) => m,
                None => nl.m_threshold().unwrap_or(0.0),
            };
            let rep = bounds::fiddgr_check(&nl, m)?;
            run.csv(&["u", "product"], &[&rep.u, &rep.product])?;
            run.check("f(u)/u <= C/Phi^2", rep.holds, None, Some(0.05));
            run.finish(json!({ "holds": rep.holds, "best_C": rep.best_c, "M": m }))
        }
    }
}

fn ko_check(mut run: Run) -> Result<Outcome> {
    let c = run.cfg;
    let lower = c.num_or("lower", 1.0)?;
    let details = match c.nonlinearity()?.ko_integral(lower)? {
        Improper::Finite(t) => {
            run.check("Keller-Osserman integral", true, Some(t.value), Some(t.error_estimate));
            json!({ "finite": true, "value": t.value, "error": t.error_estimate, "lower": lower })
        }
        Improper::Divergent { exponent } => {
            run.check("Keller-Osserman integral", false, None, None);
            json!({ "finite": false, "tail_exponent": exponent, "lower": lower })
        }
    };
    run.finish(details)
}

fn hrho_check(mut run: Run) -> Result<Outcome> {
    let details = match run.cfg.potential()?.check_hrho() {
        HrhoOutcome::Finite(v) => {
            run.check("integrability of r rho", true, Some(v), None);
            json!({ "finite": true, "value": v })
        }
        HrhoOutcome::Divergent => {
            run.check("integrability of r rho", false, None, None);
            json!({ "finite": false })
        }
    };
    run.finish(details)
}

/// `α` in `[lo, hi]` where the minimal mean-curvature margin changes sign.
pub fn ellipsoid_flip(a: f64, dim: usize, level: f64, samples: usize, mut lo: f64, mut hi: f64) -> Result<f64> {
    let margin = |alpha: f64| -> Result<f64> { mean_curvature_margin(&EllipsoidPotential::new(a, alpha, dim)?, level, samples) };
    if margin(lo)? < 0.0 || margin(hi)? >= 0.0 {
        return Err(Error::NoSolutionInBracket(format!("margin does not change sign on [{lo}, {hi}]")));
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if margin(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn ellipsoid_sweep(mut run: Run) -> Result<Outcome> {
    let c = run.cfg;
    let a = c.req("a")?;
    let critical = a * a * (2.0 * c.dim as f64 - 2.0);
    let lo = c.num_or("alpha_min", (critical - 2.0).max(2.0 + 1e-3))?;
    let hi = c.num_or("alpha_max", critical + 2.0)?;
    let steps = (c.num_or("steps", 41.0)? as usize).max(2);
    let samples = c.num_or("samples", 257.0)? as usize;
    let level = c.num_or("level", 1.0)?;
    let alphas: Vec<f64> = (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect();
    let mut margins = Vec::with_capacity(steps);
    let mut agree = true;
    for &alpha in &alphas {
        let m = mean_curvature_margin(&EllipsoidPotential::new(a, alpha, c.dim)?, level, samples)?;
        let expected = alpha <= critical;
        if (m >= -1e-12) != expected && (alpha - critical).abs() > 1e-9 {
            agree = false;
        }
        margins.push(m);
    }
    let predicted: Vec<f64> = alphas.iter().map(|&al| if al <= critical { 1.0 } else { 0.0 }).collect();
    run.csv(&["alpha", "min_margin", "closed_form_holds"], &[&alphas, &margins, &predicted])?;
    run.check("margin sign matches the closed-form criterion", agree, None, None);
    let flip = if lo < critical && critical < hi {
        let f = ellipsoid_flip(a, c.dim, level, samples, lo, hi)?;
        let err = (f - critical).abs();
        run.check("sign flip at a^2(2D-2)", err < 1e-6, Some(1e-6 - err), Some(1e-6));
        Some(f)
    } else {
        None
    };
    run.finish(json!({ "a": a, "critical_alpha": critical, "flip_alpha": flip }))
}

fn no_maximal_demo(mut run: Run) -> Result<Outcome> {
    let c = run.cfg;
    let pi = std::f64::consts::PI;
    let tks = c.list("tk")?.unwrap_or_else(|| vec![3.0 * pi, 5.0 * pi, 7.0 * pi]);
    let pot = match &c.pot {
        Some(_) => c.potential()?,
        None => RadialPotential::model(4.0)?,
    };
    let u1 = c.num_or("u1", 1.0)?;
    let base = c.nl.clone().unwrap_or_else(|| "oscillating".into());
    let mut rows = Vec::new();
    let (mut r_all, mut k_all, mut u_all, mut du_all) = (vec![], vec![], vec![], vec![]);
    for (k, &tk) in tks.iter().enumerate() {
        let nl = Nonlinearity::parse(&format!("shifted:base={base},tk={tk}"))?;
        let v = shooting::find_els(&nl, &pot, c.dim, u1, &c.shooting)?;
        let u: Vec<f64> = v.u.iter().map(|x| x + tk).collect();
        let min_u = u.iter().copied().fold(f64::INFINITY, f64::min);
        run.check("shifted solution stays above its shift", min_u >= tk, Some(min_u - tk), Some(0.0));
        rows.push(json!({ "tk": tk, "slope": v.du0, "min_u": min_u, "classification": v.classification }));
        r_all.extend(&v.r);
        k_all.extend(std::iter::repeat_n(k as f64 + 1.0, v.r.len()));
        u_all.extend(u);
        du_all.extend(&v.du);
    }
    let increasing = tks.windows(2).all(|w| w[1] > w[0]);
    run.check("shifts increase without bound", increasing, None, None);
    run.csv(&["k", "r", "u", "du"], &[&k_all, &r_all, &u_all, &du_all])?;
    run.finish(json!({ "base": base, "family": rows }))
}
