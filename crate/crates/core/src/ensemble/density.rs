//! Basis functions, determinants and joint densities of MOP ensembles.
//!
//! Densities are returned as natural logarithms (−∞ for zero) since squared
//! Vandermonde factors leave the f64 range already for moderate n.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dd::{DoubleDouble, Real};
use crate::error::{Error, Result};
use crate::linalg::{Lu, Mat};
use crate::mop::MultiIndex;
use crate::weights::{Interval, SystemKind, WeightSystem};

type Dd = DoubleDouble;

/// f_k(x) = x^k (k is 0-based).
pub fn basis_f<R: Real>(k: usize, x: R) -> R {
    x.powi(k as i32)
}

/// g_k(x) = x^i w_j(x) where k = N_{j-1} + i (k is 0-based).
pub fn basis_g<R: Real>(ws: &WeightSystem, nvec: &MultiIndex, k: usize, x: R) -> R {
    let (j, i) = nvec
        .locate(k)
        .unwrap_or_else(|| panic!("basis index {k} outside 0..{}", nvec.total()));
    x.powi(i as i32) * ws.eval(j, x)
}

/// Δ(X) = Π_{j<k} (x_k - x_j).
pub fn vandermonde(x: &[f64]) -> f64 {
    let mut v = 1.0;
    for k in 0..x.len() {
        for j in 0..k {
            v *= x[k] - x[j];
        }
    }
    v
}

/// Δ(X, Y) = Π_{k,j} (x_k - y_j).
pub fn delta_cross(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .map(|a| y.iter().map(|b| a - b).product::<f64>())
        .product()
}

/// ln |Δ(X)|.
pub fn log_abs_vandermonde(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..x.len() {
        for j in 0..k {
            s += (x[k] - x[j]).abs().ln();
        }
    }
    s
}

/// ln |Δ(X, Y)|.
pub fn log_abs_delta_cross(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .map(|a| y.iter().map(|b| (a - b).abs().ln()).sum::<f64>())
        .sum()
}

fn has_coincident(x: &[f64]) -> bool {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s.windows(2)
        .any(|w| (w[1] - w[0]).abs() <= f64::EPSILON * w[0].abs().max(w[1].abs()).max(1.0))
}

/// Sign and ln|·| of a determinant; sign 0 marks an exact zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogDet {
    pub sign: f64,
    pub ln_abs: f64,
}

impl LogDet {
    pub const ZERO: LogDet = LogDet {
        sign: 0.0,
        ln_abs: f64::NEG_INFINITY,
    };

    pub fn value(&self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }
}

/// Matrix [g_j(x_k)] in the scaled variable of the hull, with its log
/// scaling: det in x = det in t · h^{Σ n_j(n_j-1)/2}.
fn g_matrix_scaled(ws: &WeightSystem, nvec: &MultiIndex, x: &[f64]) -> (Mat<Dd>, f64) {
    let map = ws.unit_map();
    let n = nvec.total();
    let mut m = Mat::<Dd>::zeros(n, n);
    for (k, &xk) in x.iter().enumerate() {
        let xd = Dd::from_f64(xk);
        let t = map.to_t(xd);
        for j in 0..nvec.p() {
            let nj = nvec.parts()[j];
            if nj == 0 {
                continue;
            }
            let w: Dd = ws.eval(j, xd);
            let mut tp = Dd::ONE;
            for row in nvec.block(j) {
                m[(row, k)] = tp * w;
                tp *= t;
            }
        }
    }
    let e: f64 = nvec
        .parts()
        .iter()
        .map(|&m| (m * m.saturating_sub(1)) as f64 / 2.0)
        .sum();
    (m, e * map.half_width.ln())
}

/// Relative size below which a double-double determinant counts as zero.
const ZERO_DET_RATIO: f64 = 1e-26;

/// det[g_j(x_k)], rows j (basis) and columns k (points), in log form.
/// Coincident points give an exact zero.
pub fn g_log_determinant(ws: &WeightSystem, nvec: &MultiIndex, x: &[f64]) -> Result<LogDet> {
    let n = nvec.total();
    if x.len() != n || ws.p() != nvec.p() {
        return Err(Error::InvalidArgument(format!(
            "configuration has {} points, multi-index needs {n}",
            x.len()
        )));
    }
    if has_coincident(x) {
        return Ok(LogDet::ZERO);
    }
    let (m, shift) = g_matrix_scaled(ws, nvec, x);
    let scale: f64 = m.column_norms().iter().map(|c| c.ln()).sum();
    let lu = Lu::new(&m);
    let (sign, ln_abs) = lu.log_abs_det();
    if sign == 0.0 || !scale.is_finite() || ln_abs - scale < ZERO_DET_RATIO.ln() {
        return Ok(LogDet::ZERO);
    }
    Ok(LogDet {
        sign,
        ln_abs: ln_abs + shift,
    })
}

/// det[g_j(x_k)] as a plain number.
pub fn g_determinant(ws: &WeightSystem, nvec: &MultiIndex, x: &[f64]) -> Result<f64> {
    Ok(g_log_determinant(ws, nvec, x)?.value())
}

/// ln |det[f_j(x_k)] · det[g_j(x_k)]|, the unnormalized log density.
pub fn log_joint_unnormalized(ws: &WeightSystem, nvec: &MultiIndex, x: &[f64]) -> Result<f64> {
    let g = g_log_determinant(ws, nvec, x)?;
    if g.sign == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(log_abs_vandermonde(x) + g.ln_abs)
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// |det f · det g| / (|D_n⃗| n!), with D_n⃗ supplied by the caller.
pub fn joint_density(ws: &WeightSystem, nvec: &MultiIndex, x: &[f64], d: f64) -> Result<f64> {
    if d == 0.0 || !d.is_finite() {
        return Err(Error::NonNormalIndex {
            multi_index: nvec.parts().to_vec(),
            condition: f64::INFINITY,
        });
    }
    let l = log_joint_unnormalized(ws, nvec, x)?;
    Ok((l - d.abs().ln() - ln_factorial(nvec.total())).exp())
}

/// Splits X by interval; None when the block counts differ from n⃗.
pub fn partition_by_intervals(
    intervals: &[Interval],
    nvec: &MultiIndex,
    x: &[f64],
) -> Option<Vec<Vec<f64>>> {
    let mut blocks = vec![Vec::new(); intervals.len()];
    for &xi in x {
        let j = intervals.iter().position(|iv| iv.contains(xi))?;
        blocks[j].push(xi);
    }
    let ok = blocks
        .iter()
        .zip(nvec.parts())
        .all(|(b, &nj)| b.len() == nj);
    ok.then_some(blocks)
}

/// ln of Π_i Δ(X^(i))² · Π_{i<j} |Δ(X^(i), X^(j))| · Π w, the factored
/// Angelesco density (unnormalized). −∞ when the block counts are wrong.
pub fn log_angelesco_density(ws: &WeightSystem, nvec: &MultiIndex, x: &[f64]) -> Result<f64> {
    if ws.kind != SystemKind::Angelesco {
        return Err(Error::Domain("factored density needs an Angelesco system".into()));
    }
    let Some(blocks) = partition_by_intervals(&ws.intervals, nvec, x) else {
        return Ok(f64::NEG_INFINITY);
    };
    let mut s = 0.0;
    for (i, b) in blocks.iter().enumerate() {
        s += 2.0 * log_abs_vandermonde(b);
        for &xi in b {
            s += ws.eval::<f64>(i, xi).ln();
        }
        for c in &blocks[i + 1..] {
            s += log_abs_delta_cross(b, c);
        }
    }
    Ok(if s.is_nan() { f64::NEG_INFINITY } else { s })
}

/// Unnormalized factored Angelesco density.
pub fn angelesco_density(ws: &WeightSystem, nvec: &MultiIndex, x: &[f64]) -> Result<f64> {
    Ok(log_angelesco_density(ws, nvec, x)?.exp())
}

/// Checks the shape required by the extended Nikishin ensemble and returns
/// (n, n_2).
fn nikishin_shape(ws: &WeightSystem, nvec: &MultiIndex) -> Result<(usize, usize)> {
    if ws.kind != SystemKind::Nikishin || ws.p() != 2 || nvec.p() != 2 {
        return Err(Error::Domain(
            "extended density needs a Nikishin system with p = 2".into(),
        ));
    }
    let (n1, n2) = (nvec.parts()[0], nvec.parts()[1]);
    if n1 + 1 < n2 {
        return Err(Error::Domain(format!(
            "extended density needs n_1 >= n_2 - 1, got ({n1}, {n2})"
        )));
    }
    if !ws.intervals[0].disjoint(&ws.intervals[1]) {
        return Err(Error::Domain("Nikishin intervals must be disjoint".into()));
    }
    Ok((n1 + n2, n2))
}

/// ln of Π w_1(x_k) Π v(y_j) Δ(X)² Δ(Y)² / |Δ(X,Y)| for X ⊂ Γ_1 and Y ⊂ Γ_2.
/// Taking |Δ(X,Y)| covers Γ_2 on either side of Γ_1.
pub fn log_nikishin_extended_density(
    ws: &WeightSystem,
    nvec: &MultiIndex,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    let (n, n2) = nikishin_shape(ws, nvec)?;
    if x.len() != n || y.len() != n2 {
        return Err(Error::InvalidArgument(format!(
            "extended configuration needs {n} x-points and {n2} y-points"
        )));
    }
    let g1 = ws.intervals[0];
    let g2 = ws.intervals[1];
    if x.iter().any(|&v| !g1.contains(v)) || y.iter().any(|&v| !g2.contains(v)) {
        return Ok(f64::NEG_INFINITY);
    }
    let v = nikishin_generator(ws);
    let mut s = 2.0 * log_abs_vandermonde(x) + 2.0 * log_abs_vandermonde(y)
        - log_abs_delta_cross(x, y);
    for &xi in x {
        s += ws.weights[0].spec.eval(xi).ln();
    }
    for &yi in y {
        s += v.eval::<f64>(yi).ln();
    }
    Ok(if s.is_nan() { f64::NEG_INFINITY } else { s })
}

pub fn nikishin_extended_density(
    ws: &WeightSystem,
    nvec: &MultiIndex,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    Ok(log_nikishin_extended_density(ws, nvec, x, y)?.exp())
}

/// The generator v of a p = 2 Nikishin system.
pub(crate) fn nikishin_generator(ws: &WeightSystem) -> &crate::weights::Weight {
    &ws.weights[1]
        .ratio
        .as_ref()
        .expect("second Nikishin weight carries a Markov ratio")
        .generator
}

/// Determinant of the n×n matrix whose columns are indexed by X and whose
/// rows are x^0..x^{n_1-1} followed by 1/(x - y_j), j = 1..n_2.
pub fn cauchy_vandermonde_det(x: &[f64], y: &[f64], n1: usize) -> Result<f64> {
    let n = x.len();
    if n1 + y.len() != n {
        return Err(Error::InvalidArgument(format!(
            "n_1 + |Y| = {} but |X| = {n}",
            n1 + y.len()
        )));
    }
    if x.iter().any(|a| y.iter().any(|b| a == b)) {
        return Err(Error::Domain("a point of X coincides with a point of Y".into()));
    }
    // Nearby points cancel heavily in f64, so factor in double-double.
    let m = Mat::from_fn(n, n, |r, k| {
        let xk = Dd::from_f64(x[k]);
        if r < n1 {
            xk.powi(r as i32)
        } else {
            Dd::one() / (xk - Dd::from_f64(y[r - n1]))
        }
    });
    Ok(Lu::new(&m).det().to_f64())
}

/// Outcome of a sign-constancy experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignReport {
    /// Common sign of the nonzero determinants (0 if all vanished).
    pub sign: i32,
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
    /// Number of nonzero determinants whose sign disagrees with `sign`.
    pub violations: usize,
    pub trials: usize,
}

impl SignReport {
    pub fn identically_zero(&self) -> bool {
        self.positive == 0 && self.negative == 0
    }
}

fn sample_ordered(rng: &mut ChaCha8Rng, union: &[Interval], n: usize) -> Vec<f64> {
    let total: f64 = union.iter().map(Interval::length).sum();
    let mut x: Vec<f64> = (0..n)
        .map(|_| {
            let mut u = rng.random::<f64>() * total;
            for iv in union {
                if u <= iv.length() {
                    return iv.a + u;
                }
                u -= iv.length();
            }
            union.last().expect("nonempty union").b
        })
        .collect();
    x.sort_by(f64::total_cmp);
    x
}

/// Draws `trials` ordered tuples x_1 < … < x_n from the union of supports and
/// records the sign of det[g_j(x_k)]. For Angelesco systems every other
/// trial places exactly n_j points in Γ_j so that nonzero determinants are
/// actually exercised.
pub fn sign_constancy_check(
    ws: &WeightSystem,
    nvec: &MultiIndex,
    trials: usize,
    seed: u64,
) -> Result<SignReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let n = nvec.total();
    let union = ws.support_union();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut pos, mut neg, mut zero) = (0, 0, 0);
    for t in 0..trials {
        let x = if ws.kind == SystemKind::Angelesco && t % 2 == 0 {
            let mut x = Vec::with_capacity(n);
            for (iv, &nj) in ws.intervals.iter().zip(nvec.parts()) {
                x.extend(sample_ordered(&mut rng, std::slice::from_ref(iv), nj));
            }
            x.sort_by(f64::total_cmp);
            x
        } else {
            sample_ordered(&mut rng, &union, n)
        };
        let d = g_log_determinant(ws, nvec, &x)?;
        match d.sign {
            s if s > 0.0 => pos += 1,
            s if s < 0.0 => neg += 1,
            _ => zero += 1,
        }
    }
    let sign = match (pos, neg) {
        (0, 0) => 0,
        _ if pos >= neg => 1,
        _ => -1,
    };
    Ok(SignReport {
        sign,
        positive: pos,
        negative: neg,
        zero,
        violations: pos.min(neg),
        trials,
    })
}

/// Result of integrating the extended Nikishin density over Y.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalizationReport {
    pub points: usize,
    pub max_relative_deviation: f64,
}

/// Compares (1/n_2!) ∫ extended(X, Y) dY, by a tensor Gauss rule on Γ_2^{n_2},
/// with |det f(X) · det g(X)| at a grid of ordered X in Γ_1.
pub fn marginalization_check(ws: &WeightSystem, nvec: &MultiIndex) -> Result<MarginalizationReport> {
    let (n, n2) = nikishin_shape(ws, nvec)?;
    if n > 5 || n2 > 3 {
        return Err(Error::InvalidArgument(
            "marginalization check is limited to n <= 5 and n_2 <= 3".into(),
        ));
    }
    let g1 = ws.intervals[0];
    let (yn, yw) = nikishin_generator(ws).fixed_rule(24);
    let m = yn.len();
    let xs = ordered_grid(g1, n, 5);
    let mut worst: f64 = 0.0;
    for x in &xs {
        let target = log_joint_unnormalized(ws, nvec, x)?.exp();
        let mut acc = 0.0;
        let mut idx = vec![0usize; n2];
        loop {
            let y: Vec<f64> = idx.iter().map(|&i| yn[i]).collect();
            let w: f64 = idx.iter().map(|&i| yw[i]).product();
            // weights of v already sit in the rule
            let core = 2.0 * log_abs_vandermonde(x) + 2.0 * log_abs_vandermonde(&y)
                - log_abs_delta_cross(x, &y);
            let wx: f64 = x.iter().map(|&xi| ws.weights[0].spec.eval(xi)).product();
            if core.is_finite() {
                acc += w * wx * core.exp();
            }
            // odometer over the tensor grid
            let mut d = 0;
            loop {
                if d == n2 {
                    break;
                }
                idx[d] += 1;
                if idx[d] < m {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == n2 {
                break;
            }
        }
        let fact: f64 = (1..=n2).map(|k| k as f64).product();
        let est = acc / fact;
        worst = worst.max(((est - target) / target).abs());
    }
    Ok(MarginalizationReport {
        points: xs.len(),
        max_relative_deviation: worst,
    })
}

/// Strictly increasing n-tuples built from a k-point interior grid.
fn ordered_grid(iv: Interval, n: usize, k: usize) -> Vec<Vec<f64>> {
    let pts: Vec<f64> = (0..k)
        .map(|i| iv.a + iv.length() * (i as f64 + 0.5) / k as f64)
        .collect();
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    if n > k {
        return out;
    }
    loop {
        out.push(idx.iter().map(|&i| pts[i]).collect());
        // next combination
        let mut i = n;
        while i > 0 && idx[i - 1] == k - n + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for j in i..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
    out
}
