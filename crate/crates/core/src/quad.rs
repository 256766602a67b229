//! Adaptive Gauss-Kronrod quadrature on finite intervals and a decade-stepping
//! scheme for integrals over `[a, ∞)` with power-law tails.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

// 15-point Kronrod abscissae (non-negative half) and weights, with the
// embedded 7-point Gauss weights for the odd-indexed nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss-Kronrod 7/15 panel: (kronrod value, |kronrod - gauss|).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Outcome of a finite-interval adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
    pub converged: bool,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

/// Tolerances shared by the integrators.
#[derive(Debug, Clone, Copy)]
pub struct QuadTol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for QuadTol {
    fn default() -> Self {
        Self {
            abs: 0.0,
            rel: 1e-12,
            max_intervals: 4000,
        }
    }
}

impl QuadTol {
    pub fn rel(rel: f64) -> Self {
        Self {
            rel,
            ..Self::default()
        }
    }
}

/// Globally adaptive bisection of the panel with the largest error estimate.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: QuadTol) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            error: 0.0,
            intervals: 0,
            converged: true,
        };
    }
    let (v, e) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value: v,
        error: e,
    });
    let mut total = v;
    let mut err = e;
    while err > tol.abs.max(tol.rel * total.abs()) && heap.len() < tol.max_intervals {
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        // stop splitting once the panel is at the resolution of f64
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // re-sum to shed the drift of the running updates
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    QuadResult {
        value,
        error,
        intervals: heap.len(),
        converged: error <= tol.abs.max(tol.rel * value.abs()),
    }
}

/// Result of a semi-infinite integral whose tail was closed analytically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailResult {
    /// Integral including the analytic tail.
    pub value: f64,
    /// Analytic tail added beyond `truncation`.
    pub tail: f64,
    /// Fitted decay exponent q of the integrand, g(s) ~ s^{-q}.
    pub exponent: f64,
    /// Truncation radius where direct quadrature stopped.
    pub truncation: f64,
    pub error_estimate: f64,
    /// False when the decade budget ran out before the tail bound fell below tolerance.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Improper {
    Finite(TailResult),
    Divergent { exponent: f64 },
}

impl Improper {
    pub fn value(&self) -> Option<f64> {
        match self {
            Improper::Finite(t) => Some(t.value),
            Improper::Divergent { .. } => None,
        }
    }
}

/// Settings for [`integrate_to_infinity`].
#[derive(Debug, Clone, Copy)]
pub struct TailTol {
    pub rel: f64,
    pub panel_rel: f64,
    pub max_decades: usize,
    /// Decade ratio above `1 - divergence_margin` (twice in a row) means divergence.
    pub divergence_margin: f64,
}

impl Default for TailTol {
    fn default() -> Self {
        Self {
            rel: 1e-10,
            panel_rel: 1e-13,
            max_decades: 90,
            divergence_margin: 1e-3,
        }
    }
}

/// Integrates a nonnegative `g` over `[start, ∞)`.
///
/// The range is cut at `start + scale` (or at `start·10^k` when `start > 0`
/// and `scale` is `None`) and then in decades. Consecutive decade integrals of
/// a power-law integrand s^{-q} have ratio 10^{1-q}; the geometric remainder
/// closes the tail once it drops below `tol.rel` of the running total.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    g: &F,
    start: f64,
    scale: Option<f64>,
    tol: TailTol,
) -> Improper {
    let panel = QuadTol {
        abs: 0.0,
        rel: tol.panel_rel,
        max_intervals: 2000,
    };
    let mut edge = match scale {
        Some(s) => start + s,
        None if start > 0.0 => 10.0 * start,
        None => 1.0,
    };
    let mut total = integrate(g, start, edge, panel).value;
    let step = |e: f64| if scale.is_some() && start != 0.0 { start + 10.0 * (e - start) } else { 10.0 * e };

    let mut last: Option<f64> = None;
    let mut last_ratio: Option<f64> = None;
    let mut near_one = 0usize;
    let mut estimate = (0.0, f64::INFINITY, 1.0);
    for _ in 0..tol.max_decades {
        let next = step(edge);
        if !next.is_finite() {
            break;
        }
        let piece = integrate(g, edge, next, panel).value;
        total += piece;
        edge = next;
        if piece == 0.0 {
            return Improper::Finite(TailResult {
                value: total,
                tail: 0.0,
                exponent: f64::INFINITY,
                truncation: edge,
                error_estimate: 0.0,
                converged: true,
            });
        }
        if let Some(prev) = last {
            let ratio = piece / prev;
            let exponent = 1.0 - ratio.log10();
            if ratio >= 1.0 - tol.divergence_margin {
                near_one += 1;
                if near_one >= 2 {
                    return Improper::Divergent { exponent };
                }
            } else {
                near_one = 0;
                let tail = piece * ratio / (1.0 - ratio);
                let drift = last_ratio.map_or(f64::INFINITY, |r| (ratio - r).abs());
                // the tail's own uncertainty is driven by the ratio drift
                let tail_err = tail * (drift / (1.0 - ratio)).min(1.0);
                estimate = (tail, tail_err, exponent);
                if tail <= tol.rel * total.abs() && tail_err <= tol.rel * total.abs() {
                    return Improper::Finite(TailResult {
                        value: total + tail,
                        tail,
                        exponent,
                        truncation: edge,
                        error_estimate: tail_err,
                        converged: true,
                    });
                }
            }
            last_ratio = Some(ratio);
        }
        last = Some(piece);
    }
    let (tail, tail_err, exponent) = estimate;
    if !tail.is_finite() || near_one > 0 {
        return Improper::Divergent { exponent };
    }
    Improper::Finite(TailResult {
        value: total + tail,
        tail,
        exponent,
        truncation: edge,
        error_estimate: tail_err.max(tail),
        converged: false,
    })
}
