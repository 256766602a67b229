//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::collections::BTreeMap;
use std::path::Path;

use elslab::bounds;
use elslab::cli::{ellipsoid_flip, run_experiment, ExperimentConfig, Outcome};
use elslab::nonlinearity::Nonlinearity;
use elslab::potential::{EllipsoidPotential, RadialPotential};
use elslab::quad::Improper;
use elslab::shooting::{self, RadialSolution, ShootingConfig};
use elslab::transformed::{self, TransformConfig};
use elslab::{Error, Result};

type Verdict = Result<(bool, String)>;

fn run(dir: &Path, pairs: &[(&str, &str)]) -> Result<Outcome> {
    let mut map: BTreeMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    map.insert("out_dir".into(), dir.display().to_string());
    run_experiment(&ExperimentConfig::from_map(map)?)
}

fn failed_checks(o: &Outcome) -> Vec<String> {
    o.checks.iter().filter(|c| !c.pass).map(|c| format!("{} ({:?})", c.theorem_ref, c.margin)).collect()
}

fn exact(a: f64, beta: f64, rs: &[f64], dim: usize) -> RadialSolution {
    RadialSolution::from_samples(
        rs.to_vec(),
        rs.iter().map(|r| a * r.powf(beta)).collect(),
        rs.iter().map(|r| a * beta * r.powf(beta - 1.0)).collect(),
        dim,
    )
    .unwrap()
}

/// `(A, β)` of the exact profile against `ρ = r^{-α}` for `u^p`.
fn amplitude(alpha: f64, p: f64, dim: usize) -> (f64, f64) {
    let beta = (alpha - 2.0) / (p - 1.0);
    ((beta * (beta + dim as f64 - 2.0)).powf(1.0 / (p - 1.0)), beta)
}

fn els_exact_profiles(dir: &Path) -> Verdict {
    let mut notes = Vec::new();
    let mut ok = true;
    for (p, u1) in [("2", "6"), ("3", &*2f64.sqrt().to_string())] {
        let o = run(dir, &[("experiment", "els-find"), ("nl", &format!("power:p={p}")), ("pot", "model:alpha=4"), ("D", "3"), ("u1", u1)])?;
        let exact_checks = o.checks.iter().filter(|c| c.tolerance.is_some()).count();
        ok &= o.pass() && exact_checks == 2;
        notes.push(format!("p={p}: {}", if o.pass() { "ok".into() } else { failed_checks(&o).join(", ") }));
    }
    Ok((ok, notes.join("; ")))
}

fn keller_osserman(_: &Path) -> Verdict {
    let v = match Nonlinearity::power(2.0).ko_integral(1.0)? {
        Improper::Finite(t) => t.value,
        Improper::Divergent { .. } => f64::NAN,
    };
    let err = (v - 2.0 * 3f64.sqrt()).abs();
    let divergent = matches!(Nonlinearity::power(1.0).ko_integral(1.0)?, Improper::Divergent { .. });
    Ok((err < 1e-8 && divergent, format!("p=2 value {v:.12} (err {err:.1e}), p=1 divergent: {divergent}")))
}

fn phi_slope(_: &Path) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for p in [2.0, 3.0] {
        let nl = Nonlinearity::power(p);
        let slope = (nl.phi(1e6)? / nl.phi(1e2)?).ln() / 1e4f64.ln();
        let err = (slope - (1.0 - p) / 2.0).abs();
        ok &= err < 1e-3;
        notes.push(format!("p={p}: slope {slope:.6}"));
    }
    Ok((ok, notes.join(", ")))
}

fn uniqueness_gap(dir: &Path) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for (alpha, k) in [(4.0, 0.0), (10.0, 0.75), (3.0, -1.0)] {
        let kk = TransformConfig::new(alpha, 3)?.k();
        let o = run(
            dir,
            &[("experiment", "uniq-gap"), ("nl", "power:p=2"), ("pot", &format!("model:alpha={alpha}")), ("u1", "2"), ("u2", "5")],
        )?;
        ok &= kk == k && o.pass();
        notes.push(format!("alpha={alpha} K={kk}{}", if o.pass() { String::new() } else { format!(" {:?}", failed_checks(&o)) }));
    }
    Ok((ok, notes.join(", ")))
}

fn tkv_monotone(_: &Path) -> Verdict {
    let cfg = ShootingConfig::default();
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for alpha in [4.0, 10.0, 3.0] {
        let tc = TransformConfig::new(alpha, 3)?;
        for p in [2.0, 3.0] {
            let nl = Nonlinearity::power(p);
            let pot = RadialPotential::model(alpha)?;
            let (a, _) = amplitude(alpha, p, 3);
            for u1 in [0.25 * a, 0.5 * a, a] {
                let sol = shooting::find_els(&nl, &pot, 3, u1, &cfg)?;
                let inc = transformed::check_tkv_monotone(&transformed::to_transformed(&sol, &tc)?)?;
                ok &= inc > 0.0;
                worst = worst.min(inc);
            }
        }
    }
    Ok((ok, format!("smallest increment {worst:.3e} over 18 profiles")))
}

fn hopital(_: &Path) -> Verdict {
    let cfg = ShootingConfig::default();
    let nl = Nonlinearity::power(2.0);
    let mut ok = true;
    let mut notes = Vec::new();
    for d in [3usize, 4, 5] {
        let tc = TransformConfig::new(2.0 * d as f64 - 2.0, d)?;
        let sol = shooting::find_els(&nl, &RadialPotential::perturbed(d, 1.0)?, d, 3.0, &cfg)?;
        let q = transformed::hopital_limit(&transformed::to_transformed(&sol, &tc)?, &nl)?;
        let want = 2.0 / ((d - 2) as f64).powi(2);
        ok &= (q / want - 1.0).abs() < 0.01;
        notes.push(format!("D={d}: {q:.5} vs {want:.5}"));
    }
    let rs: Vec<f64> = (0..=400).map(|i| 10f64.powf(i as f64 / 100.0)).collect();
    let tc = TransformConfig::new(4.0, 3)?;
    for (p, a, beta) in [(2.0, 6.0, 2.0), (3.0, 2f64.sqrt(), 1.0)] {
        let q = transformed::hopital_limit(&transformed::to_transformed(&exact(a, beta, &rs, 3), &tc)?, &Nonlinearity::power(p))?;
        ok &= (q - 2.0).abs() < 1e-10;
    }
    Ok((ok, notes.join(", ")))
}

fn w_beta(_: &Path) -> Verdict {
    let nl = Nonlinearity::power(2.0);
    let pot = RadialPotential::model(4.0)?;
    let grid = bounds::geometric_grid(0.05, 100.0, 200);
    let mut ok = true;
    let mut notes = Vec::new();
    for beta in [Some(10.0), None] {
        let rep = bounds::subsolution_w_beta(&nl, &pot, 3, beta, &grid)?;
        ok &= rep.verdict;
        notes.push(format!("beta={}: margin {:.2e}", beta.map_or("inf".into(), |b| b.to_string()), rep.min_margin()));
    }
    let w2 = bounds::w_beta_values(&nl, &pot, 3, Some(2.0), &grid)?;
    let w5 = bounds::w_beta_values(&nl, &pot, 3, Some(5.0), &grid)?;
    let winf = bounds::w_beta_values(&nl, &pot, 3, None, &grid)?;
    let ordered = (0..grid.len()).all(|i| w2[i] <= w5[i] && w5[i] <= winf[i] && w2[i] < 2.0 && w5[i] < 5.0);
    ok &= ordered;
    notes.push(format!("w2 <= w5 <= w_inf: {ordered}"));
    Ok((ok, notes.join(", ")))
}

fn gamma(_: &Path) -> Verdict {
    let nl = Nonlinearity::power(2.0);
    let sol = shooting::find_els(&nl, &RadialPotential::model(4.0)?, 3, 6.0, &ShootingConfig::default())?;
    let rep = bounds::gamma_bound(&sol, &nl, 4.0, 0.5)?;
    let ratios: Vec<f64> = rep.grid.iter().zip(&rep.bound).zip(&rep.primal).filter(|((r, _), _)| **r >= 10.0).map(|((_, g), u)| g / u).collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
    let flat = !ratios.is_empty() && hi / lo - 1.0 < 1e-3;
    let largest = bounds::largest_gamma_c(&sol, &nl, 4.0, 1.0)?;
    let ok = rep.verdict && rep.r_min.is_some() && flat;
    Ok((ok, format!("r_min {:?}, Gamma/u in [{lo:.6}, {hi:.6}] for r >= 10, largest c {largest:.6}", rep.r_min)))
}

fn energy(_: &Path) -> Verdict {
    let nl = Nonlinearity::power(2.0);
    let rs: Vec<f64> = (0..=300).map(|i| 10f64.powf(i as f64 / 100.0)).collect();
    let ex = exact(6.0, 2.0, &rs, 3);
    let pot4 = RadialPotential::model(4.0)?;
    let mut worst = 0.0f64;
    for i in 0..rs.len() {
        let f = nl.eval_big_f(ex.u[i])?;
        let p = ex.du[i] * ex.du[i] / pot4.rho(rs[i]) - 2.0 * f;
        worst = worst.max(p.abs() / f);
    }
    let cfg = ShootingConfig::default();
    let shot = shooting::find_els(&nl, &pot4, 3, 6.0, &cfg)?;
    let mut worst_shot = 0.0f64;
    for i in 0..shot.r.len() {
        let f = nl.eval_big_f(shot.u[i])?;
        let p = shot.du[i] * shot.du[i] / pot4.rho(shot.r[i]) - 2.0 * f;
        worst_shot = worst_shot.max(p.abs() / f);
    }
    let mut ok = worst < 1e-6 && worst_shot < 1e-6;
    let mut notes = vec![format!("exact |P|/F <= {worst:.1e}, shot |P|/F <= {worst_shot:.1e}")];
    for alpha in [3.0, 4.0] {
        let pot = RadialPotential::model(alpha)?;
        let sol = shooting::find_els(&nl, &pot, 3, 2.0, &cfg)?;
        let rep = bounds::energy_p_radial(&sol, &pot, &nl, 1.0)?;
        ok &= rep.verdict;
        notes.push(format!("alpha={alpha}: margin {:.2e}", rep.min_margin()));
    }
    let pot10 = RadialPotential::model(10.0)?;
    let sol = shooting::find_els(&nl, &pot10, 3, 2.0, &cfg)?;
    let inapplicable = matches!(bounds::energy_p_radial(&sol, &pot10, &nl, 1.0), Err(Error::Inapplicable(_)));
    ok &= inapplicable;
    notes.push(format!("alpha=10 inapplicable: {inapplicable}"));
    Ok((ok, notes.join(", ")))
}

fn ellipsoid(_: &Path) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for (d, a) in [(3usize, 0.8), (4, 0.9), (5, 1.0)] {
        let crit = a * a * (2.0 * d as f64 - 2.0);
        let flip = ellipsoid_flip(a, d, 1.0, 257, (crit - 2.0).max(2.001), crit + 2.0)?;
        ok &= (flip - crit).abs() < 1e-6;
        notes.push(format!("D={d} a={a}: {flip:.9} vs {crit:.9}"));
    }
    let mut worst = 0.0f64;
    for d in [3usize, 4, 5] {
        for alpha in [2.5, 4.0, 7.0] {
            let pot = EllipsoidPotential::new(1.0, alpha, d)?;
            for r in [0.5, 1.0, 3.0] {
                let want = (2.0 * d as f64 - 2.0 - alpha) / r;
                for theta in [0.0, 0.4, 1.2] {
                    worst = worst.max((pot.margin_at(r * r, theta) - want).abs());
                }
            }
        }
    }
    ok &= worst < 1e-8;
    notes.push(format!("radial closed form err {worst:.1e}"));
    Ok((ok, notes.join(", ")))
}

fn boundary_blowup(dir: &Path) -> Verdict {
    let o = run(dir, &[("experiment", "bbup"), ("nl", "power:p=2"), ("m", "1"), ("R", "1"), ("u0s", "1,10,100")])?;
    let detail = if o.pass() { "kappa within 5%, r* decreasing".to_string() } else { failed_checks(&o).join(", ") };
    Ok((o.pass(), detail))
}

fn no_maximal(dir: &Path) -> Verdict {
    let o = run(dir, &[("experiment", "no-maximal-demo")])?;
    let margins: Vec<String> = o.checks.iter().filter_map(|c| c.margin).map(|m| format!("{m:.3}")).collect();
    Ok((o.pass(), format!("min u_k - t_k: {}", margins.join(", "))))
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let criteria: [(&str, fn(&Path) -> Verdict); 12] = [
        ("exact entire large solutions recovered by shooting", els_exact_profiles),
        ("Keller-Osserman integral", keller_osserman),
        ("Phi power-law slope", phi_slope),
        ("uniqueness gap decays", uniqueness_gap),
        ("t^K V monotone", tkv_monotone),
        ("l'Hopital limit", hopital),
        ("w_beta subsolution", w_beta),
        ("Gamma growth ceiling", gamma),
        ("energy functional", energy),
        ("ellipsoid mean-curvature flip", ellipsoid),
        ("boundary blow-up", boundary_blowup),
        ("no maximal solution", no_maximal),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = match check(dir.path()) {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!("{} criterion {}: {name}: {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
