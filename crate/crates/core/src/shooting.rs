//! Radial shooting for `u'' + (D−1)u'/r = ρ(r) f(u)`: trajectory
//! classification, the separatrix search for entire large solutions, bounded
//! solutions with a prescribed limit, and boundary blow-up on balls.

use log::{debug, info};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::ode::{Dopri5, StepFailure};
use crate::potential::RadialPotential;
use crate::roots;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootingConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Output and classification radius of a single shot.
    pub r_max: f64,
    /// `u` above which a fast-growing trajectory counts as blowing up.
    pub blowup_threshold: f64,
    pub max_bisect: usize,
    /// Start radius; `None` picks 1 for the model and perturbed families
    /// (data at `r = 1`) and 0 otherwise.
    pub r0: Option<f64>,
    /// Minimal logarithmic growth rate `r u'/u` that accompanies blow-up.
    pub blowup_growth: f64,
    /// How far bisection probes are followed before they count as undecided.
    pub probe_horizon: f64,
    /// Relative width of the limit enclosure at which a bounded run stops.
    pub limit_tol: f64,
    /// Largest radius a trapped trajectory is followed to sharpen its limit.
    pub limit_horizon: f64,
    /// Bisection stops once the slope bracket is this narrow relative to `b`.
    pub separatrix_rel_width: f64,
    /// A trajectory above `w_β` with this `β` at the horizon is entire large.
    pub entire_beta: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            r_max: 1e3,
            blowup_threshold: 1e12,
            max_bisect: 200,
            r0: None,
            blowup_growth: 50.0,
            probe_horizon: 1e30,
            limit_tol: 1e-10,
            limit_horizon: 1e15,
            separatrix_rel_width: 1e-12,
            entire_beta: 1e6,
        }
    }
}

impl ShootingConfig {
    /// Multiplies the step tolerances by `s`.
    pub fn scaled(mut self, s: f64) -> Self {
        self.rel_tol *= s;
        self.abs_tol *= s;
        self
    }

    pub fn start_radius(&self, pot: &RadialPotential) -> f64 {
        self.r0.unwrap_or(if pot.is_tail_family() { 1.0 } else { 0.0 })
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            self.rel_tol,
            self.abs_tol,
            self.r_max,
            self.blowup_threshold,
            self.blowup_growth,
            self.probe_horizon,
            self.limit_tol,
            self.limit_horizon,
            self.entire_beta,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) || self.separatrix_rel_width < 0.0 {
            return Err(Error::Domain("shooting tolerances and thresholds must be positive".into()));
        }
        if let Some(r0) = self.r0 {
            if !(r0 >= 0.0 && r0 < self.r_max) {
                return Err(Error::Domain(format!("need 0 ≤ r0 < r_max, got r0 = {r0}, r_max = {}", self.r_max)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Classification {
    BoundedLimit { beta: f64, uncertainty: f64 },
    EntireLarge,
    FiniteRadiusBlowup { r_star: f64, bracket: (f64, f64) },
    Indeterminate,
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::BoundedLimit { .. } => "bounded",
            Classification::EntireLarge => "entire_large",
            Classification::FiniteRadiusBlowup { .. } => "blowup",
            Classification::Indeterminate => "indeterminate",
        }
    }

    pub fn is_blowup(&self) -> bool {
        matches!(self, Classification::FiniteRadiusBlowup { .. })
    }
}

/// One bisection probe.
#[derive(Debug, Clone, Serialize)]
pub struct Probe {
    pub parameter: f64,
    pub outcome: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialSolution {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub classification: Classification,
    pub dim: usize,
    pub r0: f64,
    pub u0: f64,
    pub du0: f64,
    /// Accumulated local error estimate of `u` over the stored range.
    pub error_estimate: f64,
    pub trace: Vec<Probe>,
}

impl RadialSolution {
    /// Flux `r^{D−1}u'` on the grid.
    pub fn flux(&self) -> Vec<f64> {
        let d1 = self.dim as f64 - 1.0;
        self.r.iter().zip(&self.du).map(|(r, du)| r.powf(d1) * du).collect()
    }

    /// Cubic Hermite interpolation of `(u, u')` at `r` inside the grid.
    pub fn interpolate(&self, r: f64) -> Option<(f64, f64)> {
        let n = self.r.len();
        if n < 2 || r < self.r[0] || r > self.r[n - 1] {
            return None;
        }
        let i = match self.r.partition_point(|&x| x <= r) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let (x0, x1) = (self.r[i], self.r[i + 1]);
        let h = x1 - x0;
        let s = (r - x0) / h;
        let (y0, y1, m0, m1) = (self.u[i], self.u[i + 1], self.du[i] * h, self.du[i + 1] * h);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let u = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
        let d00 = 6.0 * s * s - 6.0 * s;
        let d10 = 3.0 * s * s - 4.0 * s + 1.0;
        let d01 = -d00;
        let d11 = 3.0 * s * s - 2.0 * s;
        let du = (d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1) / h;
        Some((u, du))
    }
}

/// Result of following one trajectory.
struct Run {
    r: Vec<f64>,
    u: Vec<f64>,
    du: Vec<f64>,
    class: Classification,
    error_estimate: f64,
}

/// How far a run is followed and what is kept.
#[derive(Clone, Copy)]
struct Horizon {
    store_to: f64,
    classify_at: f64,
    /// Whether an untrapped run at `classify_at` is compared against `w_β`.
    entire_test: bool,
}

/// Shared state for all shots of one problem.
/// Step budget of the blow-up refinement in `τ = ln u`.
const REFINE_STEPS: usize = 20_000;
/// Blow-up threshold cap for non-monotone `f`, whose oscillations must be
/// resolved step by step all the way up to the threshold.
const OSCILLATING_THRESHOLD: f64 = 1e5;

pub(crate) struct Shooter<'a> {
    nl: &'a Nonlinearity,
    pot: &'a RadialPotential,
    dim: usize,
    cfg: ShootingConfig,
    /// Increasing majorant used when `f` is not monotone.
    envelope: Option<Nonlinearity>,
    /// Largest `u` at which `f(u)` stays comfortably finite.
    u_cap: f64,
}

impl<'a> Shooter<'a> {
    pub(crate) fn new(nl: &'a Nonlinearity, pot: &'a RadialPotential, dim: usize, cfg: ShootingConfig) -> Result<Self> {
        cfg.validate()?;
        if dim < 3 {
            return Err(Error::Domain(format!("dimension must be ≥ 3, got {dim}")));
        }
        let envelope = if nl.flags.nondecreasing { None } else { nl.monotone_envelope(None).ok() };
        let u_cap = roots::expand_until(1.0, 2.0, 4000, |x| !(nl.f(x).abs() < 1e280)).map_or(1e280, |x| 0.5 * x);
        Ok(Self {
            nl,
            pot,
            dim,
            cfg,
            envelope,
            u_cap,
        })
    }

    fn rhs(&self) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
        let d1 = self.dim as f64 - 1.0;
        move |r, y| [y[1], self.pot.rho(r) * self.nl.f(y[0]) - d1 * y[1] / r]
    }

    fn threshold(&self) -> f64 {
        let thr = self.cfg.blowup_threshold.min(0.5 * self.u_cap);
        if self.envelope.is_some() {
            thr.min(OSCILLATING_THRESHOLD)
        } else {
            thr
        }
    }

    /// Upper bound for `f` on `[0, b]`, when one is available.
    fn f_sup(&self, b: f64) -> Option<f64> {
        if self.nl.flags.nondecreasing && self.nl.flags.f_of_zero_is_zero {
            Some(self.nl.f(b))
        } else {
            self.envelope.as_ref().map(|e| e.f(b))
        }
    }

    /// Trapping test at `r`: if `B = u + A + sup_{[0,B]} f · W(r)` has a
    /// solution, `u` stays below `B` for ever, and its limit lies in
    /// `u + A + [inf f, sup f]·W(r)`. Here `A = r u'/(D−2)` is the free
    /// harmonic part and `W(r) = ∫_r^∞ tρ/(D−2)` the outer potential.
    fn trapped(&self, r: f64, u: f64, du: f64) -> Option<(f64, f64)> {
        let w = self.pot.outer_potential(r, self.dim);
        if !w.is_finite() {
            return None;
        }
        let base = u + r * du / (self.dim as f64 - 2.0);
        let mut b = base.max(u);
        let mut settled = false;
        for _ in 0..400 {
            let next = (base + self.f_sup(b)? * w).max(u);
            if !next.is_finite() || next > self.u_cap {
                return None;
            }
            if next <= b * (1.0 + 1e-13) {
                settled = true;
                break;
            }
            b = next;
        }
        if !settled {
            return None;
        }
        // verify a supersolution level slightly above the numerical fixed point
        let level = b * (1.0 + 1e-9) + 1e-300;
        let f_hi = self.f_sup(level)?;
        if base + f_hi * w > level {
            return None;
        }
        let f_lo = if self.nl.flags.nondecreasing && du >= 0.0 { self.nl.f(u) } else { 0.0 };
        let (lo, hi) = (base + f_lo * w, base + f_hi * w);
        Some((0.5 * (lo + hi), 0.5 * (hi - lo)))
    }

    /// Follows the blow-up in `τ = ln u`, where `r(τ)` converges to `r*`.
    fn refine_blowup(&self, r: f64, u: f64, du: f64) -> (f64, (f64, f64)) {
        if !(du > 0.0) || !(u > 0.0) {
            return (r, (r, r));
        }
        let d1 = self.dim as f64 - 1.0;
        let rhs = |tau: f64, y: &[f64; 2]| {
            let u = tau.exp();
            let (r, w) = (y[0], y[1]);
            [u / w, (self.pot.rho(r) * self.nl.f(u) - d1 * w / r) * u / w]
        };
        let tau0 = u.ln();
        let tau_end = self.u_cap.ln().max(tau0 + 1.0);
        let mut s = Dopri5::new(&rhs, tau0, [r, du], 1e-3, 1e-12, 1e-300);
        let mut slopes = vec![(tau0, u / du)];
        let mut last = (r, du);
        let mut mark = tau0 + 1.0;
        // an oscillating f needs ever more steps per unit of τ; the geometric
        // tail below covers what the budget leaves out
        while s.t() < tau_end && s.accepted < REFINE_STEPS {
            match s.step(&rhs, tau_end) {
                Ok((t, y)) => {
                    if !(y[1] > 0.0) {
                        break;
                    }
                    last = (y[0], y[1]);
                    if t >= mark || t >= tau_end {
                        slopes.push((t, t.exp() / y[1]));
                        mark = t + 1.0;
                    }
                }
                Err(_) => break,
            }
        }
        let r_end = last.0;
        let tail = match slopes.as_slice() {
            [.., (t1, d1v), (t2, d2v)] if d2v < d1v => {
                let rate = (d1v / d2v).ln() / (t2 - t1);
                2.0 * d2v / rate.max(1e-2)
            }
            [.., (_, d)] => 100.0 * d,
            [] => 0.0,
        };
        (r_end + 0.5 * tail, (r_end, r_end + tail))
    }

    /// Regular-center data at a small radius for a start at `r = 0`.
    fn center_start(&self, u0: f64) -> (f64, [f64; 2]) {
        let rho0 = self.pot.rho(0.0);
        let c = rho0 * self.nl.f(u0);
        let scale = rho0 * (self.nl.f(u0).abs() / u0.max(1e-300) + self.nl.fprime(u0).abs());
        let rs = 1e-4 * (1.0 / scale.max(1e-300).sqrt()).min(1.0);
        let d = self.dim as f64;
        (rs, [u0 + c * rs * rs / (2.0 * d), c * rs / d])
    }

    /// `w_β(r)` for `β = cfg.entire_beta`, if the subsolution is defined.
    fn entire_floor(&self, r: f64) -> Option<f64> {
        let env = match &self.envelope {
            Some(e) => e.clone(),
            None => self.nl.monotone_envelope(None).ok()?,
        };
        let target = self.pot.newtonian_potential(r, self.dim).ok()?;
        env.envelope_tail_inverse(Some(self.cfg.entire_beta), target).ok()
    }

    fn run(&self, r0: f64, u0: f64, du0: f64, horizon: Horizon) -> Result<Run> {
        if !(u0 > 0.0) {
            return Err(Error::Domain(format!("u0 must be positive, got {u0}")));
        }
        let (start, y0) = if r0 == 0.0 {
            if du0 != 0.0 {
                return Err(Error::Domain(format!("a start at r = 0 needs du0 = 0, got {du0}")));
            }
            self.center_start(u0)
        } else {
            (r0, [u0, du0])
        };
        let rhs = self.rhs();
        let mut s = Dopri5::new(&rhs, start, y0, 1e-4 * start.max(1e-3), self.cfg.rel_tol, self.cfg.abs_tol);
        let (mut rs, mut us, mut dus) = (vec![r0], vec![u0], vec![du0]);
        if r0 == 0.0 {
            rs.push(start);
            us.push(y0[0]);
            dus.push(y0[1]);
        }
        let thr = self.threshold();
        let mut next_check = start.max(0.1) * 1.5;
        let mut trapped: Option<(f64, f64)> = None;
        let mut stored_error = 0.0;
        let class = loop {
            let limit = if trapped.is_some() {
                self.cfg.limit_horizon.max(horizon.classify_at)
            } else {
                horizon.classify_at
            };
            let (r, y) = match s.step(&rhs, limit) {
                Ok(v) => v,
                Err(StepFailure::Collapse { .. }) | Err(StepFailure::NonFinite { .. }) => {
                    let y = s.y();
                    let (r_star, bracket) = self.refine_blowup(s.t(), y[0], y[1]);
                    break Classification::FiniteRadiusBlowup { r_star, bracket };
                }
            };
            if r <= horizon.store_to {
                rs.push(r);
                us.push(y[0]);
                dus.push(y[1]);
                stored_error = s.error_sum[0];
            }
            if !(y[0] > 0.0) {
                return Err(Error::TrajectoryInvalid(format!("u reached {} at r = {r}", y[0])));
            }
            let growth = r * y[1] / y[0];
            if y[0] > thr && growth > self.cfg.blowup_growth {
                let (r_star, bracket) = self.refine_blowup(r, y[0], y[1]);
                break Classification::FiniteRadiusBlowup { r_star, bracket };
            }
            if y[0] > self.u_cap {
                break Classification::Indeterminate;
            }
            if r >= next_check || r >= limit {
                next_check = r * 1.5;
                if let Some((beta, unc)) = self.trapped(r, y[0], y[1]) {
                    trapped = Some((beta, unc));
                    if unc <= self.cfg.limit_tol * beta.abs().max(1.0) {
                        break Classification::BoundedLimit { beta, uncertainty: unc };
                    }
                }
            }
            if r >= limit {
                if let Some((beta, uncertainty)) = trapped {
                    break Classification::BoundedLimit { beta, uncertainty };
                }
                let entire = horizon.entire_test && self.entire_floor(r).is_some_and(|w| y[0] > w);
                break if entire { Classification::EntireLarge } else { Classification::Indeterminate };
            }
        };
        Ok(Run {
            r: rs,
            u: us,
            du: dus,
            class,
            error_estimate: stored_error,
        })
    }

    /// Classification of a bisection probe followed to the probe horizon.
    pub(crate) fn probe(&self, r0: f64, u0: f64, du0: f64) -> Result<Classification> {
        let h = Horizon {
            store_to: r0,
            classify_at: self.cfg.probe_horizon,
            entire_test: false,
        };
        self.run(r0, u0, du0, h).map(|run| run.class)
    }

    fn solution(&self, r0: f64, u0: f64, du0: f64, run: Run, trace: Vec<Probe>) -> RadialSolution {
        RadialSolution {
            r: run.r,
            u: run.u,
            du: run.du,
            classification: run.class,
            dim: self.dim,
            r0,
            u0,
            du0,
            error_estimate: run.error_estimate,
            trace,
        }
    }

    fn shot(&self, r0: f64, u0: f64, du0: f64, trace: Vec<Probe>) -> Result<RadialSolution> {
        let h = Horizon {
            store_to: self.cfg.r_max,
            classify_at: self.cfg.r_max,
            entire_test: true,
        };
        let run = self.run(r0, u0, du0, h)?;
        Ok(self.solution(r0, u0, du0, run, trace))
    }
}

fn outcome(c: &Result<Classification>) -> String {
    match c {
        Ok(c) => c.name().to_string(),
        Err(e) => format!("error: {e}"),
    }
}

/// Whether a probe lies above the separatrix. Only blow-up counts as above;
/// undecided probes move the bracket towards the blow-up side.
fn above(c: &Result<Classification>) -> Result<bool> {
    match c {
        Ok(c) => Ok(c.is_blowup()),
        Err(Error::TrajectoryInvalid(_)) => Ok(false),
        Err(e) => Err(e.clone()),
    }
}

/// Integrates from `(u0, du0)` at the configured start radius to `r_max`.
pub fn integrate_ivp(
    nl: &Nonlinearity,
    pot: &RadialPotential,
    dim: usize,
    u0: f64,
    du0: f64,
    cfg: &ShootingConfig,
) -> Result<RadialSolution> {
    let sh = Shooter::new(nl, pot, dim, *cfg)?;
    sh.shot(cfg.start_radius(pot), u0, du0, Vec::new())
}

/// Classification of the trajectory from `(u0, du0)` followed to the probe
/// horizon, as used inside the bisections.
pub fn classify_probe(
    nl: &Nonlinearity,
    pot: &RadialPotential,
    dim: usize,
    u0: f64,
    du0: f64,
    cfg: &ShootingConfig,
) -> Result<Classification> {
    let sh = Shooter::new(nl, pot, dim, *cfg)?;
    sh.probe(cfg.start_radius(pot), u0, du0)
}

/// Bisection on `b = u'(r0)` for the entire large solution with `u(r0) = u1`.
/// The bracket is recorded in the trace of the returned solution; its final
/// width is the last two entries' parameter distance.
pub fn find_els(
    nl: &Nonlinearity,
    pot: &RadialPotential,
    dim: usize,
    u1: f64,
    cfg: &ShootingConfig,
) -> Result<RadialSolution> {
    let (lo, hi, trace) = separatrix_bracket(nl, pot, dim, u1, cfg)?;
    let sh = Shooter::new(nl, pot, dim, *cfg)?;
    let r0 = cfg.start_radius(pot);
    let mid = 0.5 * (lo + hi);
    let mut tried = Vec::new();
    for b in [mid, lo] {
        let sol = sh.shot(r0, u1, b, trace.clone())?;
        if sol.classification == Classification::EntireLarge {
            info!("separatrix b* = {b} (bracket [{lo}, {hi}])");
            return Ok(sol);
        }
        tried.push(format!("b = {b}: {}", sol.classification.name()));
    }
    Err(Error::NoSeparatrix {
        lower: tried.join("; "),
        upper: format!("bracket [{lo}, {hi}] did not yield an entire large trajectory by r = {}", cfg.r_max),
    })
}

/// The slope bracket `[lo, hi]` around the separatrix, with the probe trace.
pub fn separatrix_bracket(
    nl: &Nonlinearity,
    pot: &RadialPotential,
    dim: usize,
    u1: f64,
    cfg: &ShootingConfig,
) -> Result<(f64, f64, Vec<Probe>)> {
    let r0 = cfg.start_radius(pot);
    if !(r0 > 0.0) {
        return Err(Error::Precondition("separatrix search needs data at a radius r0 > 0".into()));
    }
    if !(u1 > 0.0) {
        return Err(Error::Domain(format!("u1 must be positive, got {u1}")));
    }
    let sh = Shooter::new(nl, pot, dim, *cfg)?;
    let mut trace = Vec::new();
    let mut probe = |b: f64| -> Result<bool> {
        let c = sh.probe(r0, u1, b);
        debug!("probe b = {b:.17e}: {}", outcome(&c));
        trace.push(Probe {
            parameter: b,
            outcome: outcome(&c),
        });
        above(&c)
    };
    let unit = u1.max(1.0) / r0;
    let mut lo = 0.0;
    let mut hi = None;
    let mut step = unit;
    let mut tries = 0;
    while probe(lo)? {
        hi = Some(lo);
        lo -= step;
        step *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::NoSeparatrix {
                lower: format!("every slope down to {lo} blows up"),
                upper: "blowup".into(),
            });
        }
    }
    let mut hi = match hi {
        Some(h) => h,
        None => {
            let mut h = unit;
            let mut tries = 0;
            while !probe(h)? {
                lo = h;
                h *= 2.0;
                tries += 1;
                if tries > 60 {
                    return Err(Error::NoSeparatrix {
                        lower: "bounded".into(),
                        upper: format!("no blow-up for slopes up to {h}"),
                    });
                }
            }
            h
        }
    };
    for _ in 0..cfg.max_bisect {
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        if hi - lo <= cfg.separatrix_rel_width * scale {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if probe(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi, trace))
}

/// Bisection on `u0` (with zero slope at the start radius) for the bounded
/// solution whose limit at infinity is `beta`.
pub fn find_bounded(
    nl: &Nonlinearity,
    pot: &RadialPotential,
    dim: usize,
    beta: f64,
    cfg: &ShootingConfig,
) -> Result<RadialSolution> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("β must be positive and finite, got {beta}")));
    }
    let sh = Shooter::new(nl, pot, dim, *cfg)?;
    let r0 = cfg.start_radius(pot);
    let mut trace = Vec::new();
    // signed distance of the limit from β; anything unbounded counts as +∞
    let mut excess = |u0: f64| -> Result<f64> {
        let c = sh.probe(r0, u0, 0.0);
        trace.push(Probe {
            parameter: u0,
            outcome: outcome(&c),
        });
        match c? {
            Classification::BoundedLimit { beta: b, .. } => Ok(b - beta),
            _ => Ok(f64::INFINITY),
        }
    };
    let (mut lo, mut hi) = (0.0, beta);
    let mut tries = 0;
    loop {
        let e = excess(hi)?;
        if e >= 0.0 {
            if e == 0.0 {
                lo = hi;
            }
            break;
        }
        lo = hi;
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::NoSolutionInBracket(format!("limits stay below β = {beta}")));
        }
    }
    let tol = 1e-9 * beta;
    let mut best = None;
    for _ in 0..cfg.max_bisect {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let e = excess(mid)?;
        if e.abs() <= tol {
            best = Some(mid);
            break;
        }
        if e > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let u0 = best.unwrap_or(0.5 * (lo + hi));
    let sol = sh.shot(r0, u0, 0.0, trace)?;
    match sol.classification {
        Classification::BoundedLimit { beta: b, .. } if (b - beta).abs() <= 1e-6 * beta => Ok(sol),
        other => Err(Error::NoSolutionInBracket(format!(
            "β = {beta} not reached below blow-up: best u0 = {u0} gives {}",
            other.name()
        ))),
    }
}

/// Blow-up radius of the regular solution with `u(0) = u0` for constant
/// density `m`, or `None` if no blow-up is seen before the probe horizon.
pub fn blowup_radius(nl: &Nonlinearity, m: f64, dim: usize, u0: f64, cfg: &ShootingConfig) -> Result<Option<f64>> {
    let pot = RadialPotential::constant(m);
    let sh = Shooter::new(nl, &pot, dim, *cfg)?;
    match sh.probe(0.0, u0, 0.0)? {
        Classification::FiniteRadiusBlowup { r_star, .. } => Ok(Some(r_star)),
        _ => Ok(None),
    }
}

/// Solution of `Δu = m f(u)` in the ball `B_R` that blows up on its boundary,
/// found by matching the blow-up radius of the regular solution to `R`.
pub fn boundary_blowup_ball(
    nl: &Nonlinearity,
    m: f64,
    radius: f64,
    dim: usize,
    cfg: &ShootingConfig,
) -> Result<RadialSolution> {
    if !(m > 0.0) || !(radius > 0.0) {
        return Err(Error::Domain(format!("need m > 0 and R > 0, got m = {m}, R = {radius}")));
    }
    if let Ok(crate::quad::Improper::Divergent { exponent }) = nl.ko_integral(1.0) {
        return Err(Error::KoViolation(format!(
            "{}: ∫ ds/√F diverges (tail exponent {exponent:.3}), no boundary blow-up",
            nl.key()
        )));
    }
    let pot = RadialPotential::constant(m);
    let sh = Shooter::new(nl, &pot, dim, *cfg)?;
    let mut trace = Vec::new();
    let mut miss = |x: f64| -> Result<f64> {
        let c = sh.probe(0.0, x.exp(), 0.0);
        trace.push(Probe {
            parameter: x.exp(),
            outcome: outcome(&c),
        });
        match c? {
            Classification::FiniteRadiusBlowup { r_star, .. } => Ok(r_star - radius),
            _ => Ok(radius.max(1.0) * 1e3),
        }
    };
    // r* decreases in u0: find ln u0 with r* on either side of R
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    let step = std::f64::consts::LN_2 * 2.0;
    if miss(0.0)? > 0.0 {
        while miss(hi)? > 0.0 {
            lo = hi;
            hi += step;
            if hi > 700.0 {
                return Err(Error::NoSolutionInBracket("blow-up radius stays above R".into()));
            }
        }
    } else {
        while miss(lo)? <= 0.0 {
            hi = lo;
            lo -= step;
            if lo < -700.0 {
                return Err(Error::NoSolutionInBracket("blow-up radius stays below R".into()));
            }
        }
    }
    let x = roots::illinois(|x| miss(x).unwrap_or(radius.max(1.0) * 1e3), lo, hi, 1e-9 * radius, cfg.max_bisect)?;
    let u0 = x.exp();
    let h = Horizon {
        store_to: f64::INFINITY,
        classify_at: 10.0 * radius,
        entire_test: false,
    };
    let run = sh.run(0.0, u0, 0.0, h)?;
    Ok(sh.solution(0.0, u0, 0.0, run, trace))
}

/// Fits `u ≈ κ (r* − r)^{-k}` over the last decade of distances to the
/// blow-up radius stored on the grid and returns `κ`.
pub fn fit_boundary_coefficient(sol: &RadialSolution, k: f64) -> Result<f64> {
    let r_star = match sol.classification {
        Classification::FiniteRadiusBlowup { r_star, .. } => r_star,
        other => return Err(Error::Precondition(format!("trajectory is {}, not blowing up", other.name()))),
    };
    let pts: Vec<(f64, f64)> = sol
        .r
        .iter()
        .zip(&sol.u)
        .map(|(r, u)| (r_star - r, *u))
        .filter(|(d, _)| *d > 0.0)
        .collect();
    let d_min = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let window: Vec<f64> = pts
        .iter()
        .filter(|(d, _)| *d <= 10.0 * d_min)
        .map(|(d, u)| (u * d.powf(k)).ln())
        .collect();
    if window.len() < 3 {
        return Err(Error::Precondition("too few points near the blow-up radius".into()));
    }
    Ok((window.iter().sum::<f64>() / window.len() as f64).exp())
}

impl RadialSolution {
    /// Wraps sampled data (for instance a closed-form profile or a CSV file).
    pub fn from_samples(r: Vec<f64>, u: Vec<f64>, du: Vec<f64>, dim: usize) -> Result<Self> {
        if r.len() != u.len() || r.len() != du.len() {
            return Err(Error::Domain("r, u and du must have equal lengths".into()));
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("radii must be strictly increasing".into()));
        }
        let (r0, u0, du0) = match (r.first(), u.first(), du.first()) {
            (Some(a), Some(b), Some(c)) => (*a, *b, *c),
            _ => (f64::NAN, f64::NAN, f64::NAN),
        };
        Ok(Self {
            r,
            u,
            du,
            classification: Classification::Indeterminate,
            dim,
            r0,
            u0,
            du0,
            error_estimate: 0.0,
            trace: Vec::new(),
        })
    }
}
