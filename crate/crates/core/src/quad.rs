//! Gauss–Legendre rules and adaptive composite quadrature.
//!
//! Rules are generated once in double-double precision and cached. The
//! adaptive driver compares two Gauss–Legendre rules of different order on
//! every panel and bisects the worst panel until the summed error estimate
//! meets the absolute tolerance (or hits the rounding floor of the working
//! precision).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::dd::{DoubleDouble, Real};
use crate::error::{Error, Result};

type Dd = DoubleDouble;

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<DoubleDouble>,
    pub weights: Vec<DoubleDouble>,
}

fn legendre_and_derivative(n: usize, x: Dd) -> (Dd, Dd) {
    let mut p0 = Dd::ONE;
    let mut p1 = x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = (Dd::from_f64(2.0 * kf + 1.0) * x * p1 - Dd::from_f64(kf) * p0)
            / Dd::from_f64(kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = Dd::from_f64(n as f64) * (x * p1 - p0) / (x * x - Dd::ONE);
    (p1, dp)
}

fn legendre_and_derivative_f64(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

impl GaussLegendre {
    fn compute(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        if n == 1 {
            return Self {
                nodes: vec![Dd::ZERO],
                weights: vec![Dd::from_f64(2.0)],
            };
        }
        let mut nodes = vec![Dd::ZERO; n];
        let mut weights = vec![Dd::ZERO; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_and_derivative_f64(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let mut xd = Dd::from_f64(x);
            for _ in 0..3 {
                let (p, dp) = legendre_and_derivative(n, xd);
                xd -= p / dp;
            }
            if n % 2 == 1 && i == half - 1 {
                xd = Dd::ZERO;
            }
            let (_, dp) = legendre_and_derivative(n, xd);
            let w = Dd::from_f64(2.0) / ((Dd::ONE - xd * xd) * dp * dp);
            // ascending order
            nodes[i] = -xd;
            weights[i] = w;
            nodes[n - 1 - i] = xd;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Cached n-point rule.
    pub fn get(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(GaussLegendre::compute(n)))
            .clone()
    }

    /// The rule mapped to [a, b] in f64.
    pub fn on_interval(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let rule = Self::get(n);
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| (c + h * x.to_f64(), h * w.to_f64()))
            .unzip()
    }
}

/// Orders of the two rules compared on every adaptive panel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RulePair {
    pub low: usize,
    pub high: usize,
}

impl RulePair {
    /// Used to build moment tables.
    pub const STANDARD: RulePair = RulePair { low: 20, high: 30 };
    /// Used for residual checks, so they never share nodes with construction.
    pub const ALTERNATE: RulePair = RulePair { low: 17, high: 27 };
}

impl Default for RulePair {
    fn default() -> Self {
        Self::STANDARD
    }
}

const MAX_PANELS: usize = 4000;

struct Panel<R> {
    a: R,
    b: R,
    value: Vec<R>,
    error: f64,
    magnitude: f64,
}

fn eval_panel<R: Real, F: FnMut(R, &mut [R])>(
    f: &mut F,
    dim: usize,
    a: R,
    b: R,
    low: &GaussLegendre,
    high: &GaussLegendre,
    scratch: &mut [R],
) -> Panel<R> {
    let c = (a + b) * R::from_f64(0.5);
    let h = (b - a) * R::from_f64(0.5);
    let mut hi_sum = vec![R::zero(); dim];
    let mut lo_sum = vec![R::zero(); dim];
    let mut magnitude = 0.0f64;
    for (x, w) in high.nodes.iter().zip(&high.weights) {
        let xm = c + h * R::from_dd(*x);
        f(xm, scratch);
        let w = R::from_dd(*w);
        for (acc, v) in hi_sum.iter_mut().zip(scratch.iter()) {
            *acc += w * *v;
            magnitude = magnitude.max((w * *v).abs().to_f64());
        }
    }
    for (x, w) in low.nodes.iter().zip(&low.weights) {
        let xm = c + h * R::from_dd(*x);
        f(xm, scratch);
        let w = R::from_dd(*w);
        for (acc, v) in lo_sum.iter_mut().zip(scratch.iter()) {
            *acc += w * *v;
        }
    }
    let mut error = 0.0f64;
    for (hv, lv) in hi_sum.iter_mut().zip(&lo_sum) {
        *hv *= h;
        error = error.max(((*hv - *lv * h).abs()).to_f64());
    }
    Panel {
        a,
        b,
        value: hi_sum,
        error,
        magnitude: magnitude * h.abs().to_f64() * high.nodes.len() as f64,
    }
}

/// Integrates the vector-valued `f` over [a, b]; `f(x, out)` writes `dim`
/// values into `out`. Returns the integrals and the final error estimate.
pub fn integrate_vec<R: Real, F: FnMut(R, &mut [R])>(
    mut f: F,
    dim: usize,
    a: R,
    b: R,
    tol: f64,
    pair: RulePair,
) -> Result<(Vec<R>, f64)> {
    if dim == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let low = GaussLegendre::get(pair.low);
    let high = GaussLegendre::get(pair.high);
    let mut scratch = vec![R::zero(); dim];
    let mut panels = vec![eval_panel(&mut f, dim, a, b, &low, &high, &mut scratch)];
    loop {
        let total_err: f64 = panels.iter().map(|p| p.error).sum();
        let floor: f64 = 64.0 * R::EPSILON * panels.iter().map(|p| p.magnitude).sum::<f64>();
        if total_err <= tol.max(floor) {
            break;
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::Quadrature {
                estimate: total_err,
                tolerance: tol,
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        let mid = (p.a + p.b) * R::from_f64(0.5);
        panels.push(eval_panel(&mut f, dim, p.a, mid, &low, &high, &mut scratch));
        panels.push(eval_panel(&mut f, dim, mid, p.b, &low, &high, &mut scratch));
    }
    // sum panels in left-to-right order for reproducibility
    panels.sort_by(|x, y| x.a.partial_cmp(&y.a).expect("finite panel endpoints"));
    let mut total = vec![R::zero(); dim];
    let mut err = 0.0;
    for p in &panels {
        for (t, v) in total.iter_mut().zip(&p.value) {
            *t += *v;
        }
        err += p.error;
    }
    Ok((total, err))
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate<R: Real, F: FnMut(R) -> R>(
    mut f: F,
    a: R,
    b: R,
    tol: f64,
    pair: RulePair,
) -> Result<R> {
    let (v, _) = integrate_vec(|x, out: &mut [R]| out[0] = f(x), 1, a, b, tol, pair)?;
    Ok(v[0])
}
