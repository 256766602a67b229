//! Increasing majorant `f̄ ≥ f` built from the running supremum.
//!
//! `f̄(t) = S(t) + ε·min(t,1) + ε·P(t)` where `S` is the running supremum of
//! `f` on `[0,t]` and `P` is a logarithmic ramp accumulated only over cells
//! where `S` has a flat stretch. For nondecreasing `f`, `S = f` and `P = 0`.

use super::catalog::Kind;

/// Cell width of the running-supremum table.
const CELL: f64 = 0.02;

#[derive(Debug, Clone)]
pub struct Envelope {
    pub base: Kind,
    pub eps: f64,
    table: Option<SupTable>,
}

#[derive(Debug, Clone)]
struct SupTable {
    end: f64,
    /// Running sup at node i (sup of f on [0, x_i]).
    sup: Vec<f64>,
    /// Location and value of an interior maximum of cell i, if any.
    peak: Vec<Option<(f64, f64)>>,
    /// Plateau ramp at node i.
    ramp: Vec<f64>,
    /// Whether cell i carries a plateau ramp.
    flat: Vec<bool>,
    tail_exponent: f64,
    /// Longest stretch without a new supremum.
    plateau: f64,
}

impl Envelope {
    /// Builds the envelope; `table_end` bounds the tabulated range for
    /// non-monotone bases (beyond it the supremum is extrapolated by a
    /// power law with a safety margin on the exponent).
    pub fn new(base: Kind, eps: f64, table_end: f64) -> Self {
        let table = if base.nondecreasing() {
            None
        } else {
            Some(SupTable::build(&base, table_end))
        };
        Self { base, eps, table }
    }

    /// Running supremum of the base on `[0, t]`.
    pub fn running_sup(&self, t: f64) -> f64 {
        match &self.table {
            None => self.base.f(t),
            Some(tab) => tab.sup_at(&self.base, t),
        }
    }

    fn ramp(&self, t: f64) -> f64 {
        match &self.table {
            None => 0.0,
            Some(tab) => tab.ramp_at(t),
        }
    }

    pub fn f(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        self.running_sup(t) + self.eps * (t.min(1.0) + self.ramp(t))
    }

    /// One-sided difference quotient; the envelope is only Lipschitz at the
    /// junctions of its pieces.
    pub fn fprime(&self, t: f64) -> f64 {
        let h = 1e-7 * t.abs().max(1e-3);
        (self.f(t + h) - self.f(t)) / h
    }
}

impl SupTable {
    fn build(base: &Kind, end: f64) -> Self {
        let n = (end / CELL).ceil() as usize;
        let node = |i: usize| i as f64 * CELL;
        let mut sup = Vec::with_capacity(n + 1);
        let mut peak = Vec::with_capacity(n);
        let mut ramp = Vec::with_capacity(n + 1);
        let mut flat = Vec::with_capacity(n);
        let mut running = base.f(0.0).max(0.0);
        let mut acc = 0.0;
        let mut last_rise = 0.0;
        let mut plateau: f64 = 0.0;
        sup.push(running);
        ramp.push(0.0);
        for i in 0..n {
            let (a, b) = (node(i), node(i + 1));
            let interior = cell_peak(base, a, b);
            let left_below = base.f(a) < running;
            let mut cell_max = base.f(b).max(base.f(a));
            if let Some((_, v)) = interior {
                cell_max = cell_max.max(v);
            }
            let is_flat = left_below || interior.is_some();
            if is_flat {
                acc += ((1.0 + b) / (1.0 + a)).ln();
            }
            if cell_max > running {
                plateau = plateau.max(a - last_rise);
                last_rise = b;
            }
            running = running.max(cell_max);
            sup.push(running);
            peak.push(interior);
            ramp.push(acc);
            flat.push(is_flat);
        }
        let end = node(n);
        let tenth = (n / 10).max(1);
        let fitted = (sup[n] / sup[tenth]).ln() / (end / node(tenth)).ln();
        Self {
            end,
            sup,
            peak,
            ramp,
            flat,
            tail_exponent: fitted.max(0.0) + 0.05,
            plateau: plateau.max(end - last_rise) + CELL,
        }
    }

    fn sup_at(&self, base: &Kind, t: f64) -> f64 {
        if t >= self.end {
            let s_end = *self.sup.last().unwrap();
            // shifting by the longest plateau covers the next supremum rise
            return s_end * ((t + self.plateau) / self.end).powf(self.tail_exponent) * 1.01;
        }
        let i = ((t / CELL).floor() as usize).min(self.peak.len() - 1);
        let mut s = self.sup[i].max(base.f(t));
        if let Some((x, v)) = self.peak[i] {
            if x <= t {
                s = s.max(v);
            }
        }
        s
    }

    fn ramp_at(&self, t: f64) -> f64 {
        if t >= self.end {
            return self.ramp.last().unwrap() + ((1.0 + t) / (1.0 + self.end)).ln();
        }
        let i = ((t / CELL).floor() as usize).min(self.flat.len() - 1);
        if self.flat[i] {
            self.ramp[i] + ((1.0 + t) / (1.0 + i as f64 * CELL)).ln()
        } else {
            self.ramp[i]
        }
    }
}

/// Interior local maximum of `f` on `(a, b)` located by bisection on `f'`.
fn cell_peak(base: &Kind, a: f64, b: f64) -> Option<(f64, f64)> {
    let (da, db) = (base.fprime(a), base.fprime(b));
    if !(da > 0.0 && db < 0.0) {
        return None;
    }
    let (mut lo, mut hi) = (a, b);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if base.fprime(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    Some((x, base.f(x).max(base.f(lo)).max(base.f(hi))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_base_is_unchanged_up_to_eps() {
        let env = Envelope::new(Kind::power(2.0), 1e-6, 100.0);
        assert_eq!(env.f(3.0), 9.0 + 1e-6);
        assert_eq!(env.f(0.5), 0.25 + 0.5e-6);
    }

    #[test]
    fn oscillating_envelope_dominates_and_increases() {
        let env = Envelope::new(Kind::Oscillating, 1e-6 * Kind::Oscillating.f(1.0), 200.0);
        let mut prev = env.f(0.0);
        for i in 1..=5000 {
            let t = i as f64 * 0.05;
            let v = env.f(t);
            assert!(v >= Kind::Oscillating.f(t), "t = {t}");
            assert!(v > prev, "not strictly increasing at t = {t}");
            prev = v;
        }
    }

    #[test]
    fn extrapolated_tail_still_dominates() {
        let env = Envelope::new(Kind::Oscillating, 1e-6, 200.0);
        for t in [250.0, 1e3, 1e5, 1e8] {
            let sup_near = (0..2000)
                .map(|j| Kind::Oscillating.f(t - j as f64 * 0.01))
                .fold(0.0, f64::max);
            assert!(env.f(t) >= sup_near, "t = {t}");
        }
    }
}
