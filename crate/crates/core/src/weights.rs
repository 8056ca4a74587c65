//! Weight functions, weight systems (general, Angelesco, Nikishin), Markov
//! functions and moment tables.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dd::{DoubleDouble, Real};
use crate::error::{Error, Result};
use crate::poly::AffineMap;
use crate::quad::{integrate_vec, RulePair};

type Dd = DoubleDouble;

/// Default absolute tolerance for f64 moment and transform quadrature.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Absolute tolerance used when moments feed the double-double solvers.
pub const MOMENT_TOL_DD: f64 = 1e-28;

/// Closed bounded interval [a, b] with a < b.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidArgument(format!(
                "interval needs finite endpoints with a < b, got [{a}, {b}]"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x <= self.b
    }

    /// True when the intersection has positive length.
    pub fn overlaps(&self, other: &Interval) -> bool {
        self.a.max(other.a) < self.b.min(other.b)
    }

    /// True when the closed intervals share no point.
    pub fn disjoint(&self, other: &Interval) -> bool {
        self.b < other.a || other.b < self.a
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.a, self.b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WeightFamily {
    Constant,
    /// (b - x)^alpha (x - a)^beta
    Jacobi { alpha: f64, beta: f64 },
    /// exp(-Σ_k coeffs[k] x^k), k from 0
    ExpPoly { coeffs: Vec<f64> },
}

/// A concrete weight on an interval, optionally multiplied by a positive
/// constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub family: WeightFamily,
    pub interval: Interval,
    pub scale: f64,
}

impl WeightSpec {
    pub fn new(family: WeightFamily, interval: Interval) -> Result<Self> {
        if let WeightFamily::Jacobi { alpha, beta } = family {
            if !(alpha > -1.0 && beta > -1.0) {
                return Err(Error::InvalidArgument(format!(
                    "jacobi exponents must exceed -1, got alpha = {alpha}, beta = {beta}"
                )));
            }
        }
        if let WeightFamily::ExpPoly { coeffs } = &family {
            if coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidArgument("exp_poly coefficients must be finite".into()));
            }
        }
        Ok(Self {
            family,
            interval,
            scale: 1.0,
        })
    }

    pub fn constant(a: f64, b: f64) -> Result<Self> {
        Self::new(WeightFamily::Constant, Interval::new(a, b)?)
    }

    pub fn jacobi(alpha: f64, beta: f64, a: f64, b: f64) -> Result<Self> {
        Self::new(WeightFamily::Jacobi { alpha, beta }, Interval::new(a, b)?)
    }

    pub fn exp_poly(coeffs: Vec<f64>, a: f64, b: f64) -> Result<Self> {
        Self::new(WeightFamily::ExpPoly { coeffs }, Interval::new(a, b)?)
    }

    pub fn scaled(mut self, c: f64) -> Self {
        self.scale *= c;
        self
    }

    /// Exponents of the algebraic endpoint factors at a and at b.
    fn endpoint_exponents(&self) -> (f64, f64) {
        match self.family {
            WeightFamily::Jacobi { alpha, beta } => (beta, alpha),
            _ => (0.0, 0.0),
        }
    }

    /// Weight without its endpoint factors.
    fn smooth_part<R: Real>(&self, x: R) -> R {
        let base = match &self.family {
            WeightFamily::Constant | WeightFamily::Jacobi { .. } => R::one(),
            WeightFamily::ExpPoly { coeffs } => {
                let s = coeffs
                    .iter()
                    .rev()
                    .fold(R::zero(), |acc, &c| acc * x + R::from_f64(c));
                (-s).exp()
            }
        };
        base * R::from_f64(self.scale)
    }

    pub fn eval<R: Real>(&self, x: R) -> R {
        let a = R::from_f64(self.interval.a);
        let b = R::from_f64(self.interval.b);
        if x < a || x > b {
            return R::zero();
        }
        let (ea, eb) = self.endpoint_exponents();
        let mut v = self.smooth_part(x);
        if ea != 0.0 {
            v *= (x - a).powf(ea);
        }
        if eb != 0.0 {
            v *= (b - x).powf(eb);
        }
        v
    }
}

/// Ratio w(x)/w_base(x) = sign · ∫ v(y)/(x - y) dy.
#[derive(Clone, Debug)]
pub struct MarkovRatio {
    pub generator: Arc<Weight>,
    pub sign: f64,
}

/// A weight: a base spec, possibly multiplied by a Markov function of a
/// generator weight supported elsewhere.
#[derive(Clone, Debug)]
pub struct Weight {
    pub spec: WeightSpec,
    pub ratio: Option<MarkovRatio>,
}

fn transform_tol<R: Real>() -> f64 {
    10.0 * R::QUAD_TOL
}

impl Weight {
    pub fn plain(spec: WeightSpec) -> Self {
        Self { spec, ratio: None }
    }

    pub fn support(&self) -> Interval {
        self.spec.interval
    }

    /// Value of the Markov factor (1 for a plain weight).
    pub fn ratio_at<R: Real>(&self, x: R) -> R {
        match &self.ratio {
            None => R::one(),
            Some(m) => {
                let s = stieltjes_generic(&m.generator, x, transform_tol::<R>())
                    .expect("generator support is disjoint from the base support");
                R::from_f64(m.sign) * s
            }
        }
    }

    pub fn eval<R: Real>(&self, x: R) -> R {
        let v = self.spec.eval(x);
        if v == R::zero() {
            return v;
        }
        v * self.ratio_at(x)
    }

    /// Computes ∫ F(x) w(x) dx for the vector-valued F (`f(x, out)` fills
    /// `dim` values). Algebraic endpoint singularities are removed by the
    /// substitution x = a + L·u^q on the left half (mirrored on the right).
    pub fn integrate<R: Real, F: FnMut(R, &mut [R])>(
        &self,
        mut f: F,
        dim: usize,
        tol: f64,
        pair: RulePair,
    ) -> Result<Vec<R>> {
        let iv = self.spec.interval;
        let (ea, eb) = self.spec.endpoint_exponents();
        let a = R::from_f64(iv.a);
        let b = R::from_f64(iv.b);
        let half = R::from_f64(0.5 * iv.length());
        let mut total = vec![R::zero(); dim];
        for left in [true, false] {
            let (e_near, e_far) = if left { (ea, eb) } else { (eb, ea) };
            let q = substitution_power(e_near);
            let jac_exp = q * (e_near + 1.0) - 1.0;
            let pre = half.powf(e_near + 1.0) * R::from_f64(q);
            let mut buf = vec![R::zero(); dim];
            let (part, _) = integrate_vec(
                |u: R, out: &mut [R]| {
                    let s = if q == 1.0 { u } else { u.powf(q) };
                    let x = if left { a + half * s } else { b - half * s };
                    let far = if left { b - x } else { x - a };
                    let mut w = self.spec.smooth_part(x) * pre;
                    if jac_exp != 0.0 {
                        w *= u.powf(jac_exp);
                    }
                    if e_far != 0.0 {
                        w *= far.powf(e_far);
                    }
                    if w != R::zero() {
                        w *= self.ratio_at(x);
                    }
                    f(x, &mut buf);
                    for (o, v) in out.iter_mut().zip(&buf) {
                        *o = *v * w;
                    }
                },
                dim,
                R::zero(),
                R::one(),
                0.5 * tol,
                pair,
            )?;
            for (t, p) in total.iter_mut().zip(part) {
                *t += p;
            }
        }
        Ok(total)
    }
}

impl Weight {
    /// Fixed rule with nodes x_i and weights ω_i such that
    /// Σ ω_i F(x_i) ≈ ∫ F(x) w(x) dx, using `m` Gauss nodes on each half of
    /// the support after the endpoint substitution. Suited to tensor
    /// products where adaptivity is unaffordable.
    pub fn fixed_rule(&self, m: usize) -> (Vec<f64>, Vec<f64>) {
        let iv = self.spec.interval;
        let (ea, eb) = self.spec.endpoint_exponents();
        let half = 0.5 * iv.length();
        let (us, ws) = crate::quad::GaussLegendre::on_interval(m, 0.0, 1.0);
        let mut nodes = Vec::with_capacity(2 * m);
        let mut weights = Vec::with_capacity(2 * m);
        for left in [true, false] {
            let (e_near, e_far) = if left { (ea, eb) } else { (eb, ea) };
            let q = substitution_power(e_near);
            let jac_exp = q * (e_near + 1.0) - 1.0;
            let pre = half.powf(e_near + 1.0) * q;
            for (&u, &wu) in us.iter().zip(&ws) {
                let s = u.powf(q);
                let x = if left { iv.a + half * s } else { iv.b - half * s };
                let far = if left { iv.b - x } else { x - iv.a };
                let mut w = self.spec.smooth_part(x) * pre * u.powf(jac_exp) * wu;
                if e_far != 0.0 {
                    w *= far.powf(e_far);
                }
                w *= self.ratio_at(x);
                nodes.push(x);
                weights.push(w);
            }
        }
        // ascending nodes
        let mut idx: Vec<usize> = (0..nodes.len()).collect();
        idx.sort_by(|&i, &j| nodes[i].total_cmp(&nodes[j]));
        (
            idx.iter().map(|&i| nodes[i]).collect(),
            idx.iter().map(|&i| weights[i]).collect(),
        )
    }
}

/// Exponent q in x - a = L·u^q for an endpoint factor (x - a)^e.
fn substitution_power(e: f64) -> f64 {
    if e == e.round() {
        1.0
    } else if e < 0.0 {
        1.0 / (1.0 + e)
    } else {
        2.0
    }
}

fn stieltjes_generic<R: Real>(v: &Weight, x: R, tol: f64) -> Result<R> {
    let s = v.support();
    let xf = x.to_f64();
    if s.contains(xf) {
        return Err(Error::Domain(format!(
            "Stieltjes transform evaluated at {xf}, inside the support {s}"
        )));
    }
    let out = v.integrate(
        |y: R, o: &mut [R]| o[0] = R::one() / (x - y),
        1,
        tol,
        RulePair::STANDARD,
    )?;
    Ok(out[0])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// ± ∫ v(y)/(x - y) dy for x outside the support of v.
pub fn stieltjes_transform(v: &Weight, x: f64, sign: Sign) -> Result<f64> {
    Ok(sign.value() * stieltjes_generic(v, x, DEFAULT_TOL)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    General,
    Angelesco,
    Nikishin,
}

#[derive(Clone, Debug)]
pub struct WeightSystem {
    pub kind: SystemKind,
    pub weights: Vec<Weight>,
    /// Γ_1..Γ_p. For Angelesco these are the supports; for Nikishin, Γ_1 is
    /// the common support and Γ_{j+1} carries the j-th generator.
    pub intervals: Vec<Interval>,
    /// Nikishin generators v_2..v_p as supplied.
    pub generators: Vec<WeightSpec>,
}

impl WeightSystem {
    /// Arbitrary weights with no structural guarantees.
    pub fn general(specs: Vec<WeightSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Construction("weight system needs at least one weight".into()));
        }
        Ok(Self {
            kind: SystemKind::General,
            intervals: specs.iter().map(|s| s.interval).collect(),
            weights: specs.into_iter().map(Weight::plain).collect(),
            generators: Vec::new(),
        })
    }

    pub fn p(&self) -> usize {
        self.weights.len()
    }

    /// Smallest interval containing every weight support.
    pub fn hull(&self) -> Interval {
        let a = self.weights.iter().map(|w| w.support().a).fold(f64::INFINITY, f64::min);
        let b = self
            .weights
            .iter()
            .map(|w| w.support().b)
            .fold(f64::NEG_INFINITY, f64::max);
        Interval { a, b }
    }

    /// Affine map sending the hull onto [-1, 1].
    pub fn unit_map(&self) -> AffineMap {
        let h = self.hull();
        AffineMap::onto_unit(h.a, h.b)
    }

    /// Maximal subintervals covered by at least one support, ascending.
    pub fn support_union(&self) -> Vec<Interval> {
        let mut ivs: Vec<Interval> = self.weights.iter().map(Weight::support).collect();
        ivs.sort_by(|x, y| x.a.total_cmp(&y.a));
        let mut out: Vec<Interval> = Vec::new();
        for iv in ivs {
            match out.last_mut() {
                Some(last) if iv.a <= last.b => last.b = last.b.max(iv.b),
                _ => out.push(iv),
            }
        }
        out
    }

    pub fn eval<R: Real>(&self, j: usize, x: R) -> R {
        self.weights[j].eval(x)
    }

    /// A copy with the weights (and intervals) reordered by `order`.
    /// The kind is reset to general since the structural ordering is lost.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            kind: SystemKind::General,
            weights: order.iter().map(|&i| self.weights[i].clone()).collect(),
            intervals: order.iter().map(|&i| self.weights[i].support()).collect(),
            generators: Vec::new(),
        }
    }
}

/// Angelesco system: weights on intervals with pairwise overlap of length
/// zero, relabeled left to right. Intervals may touch at an endpoint.
pub fn build_angelesco(specs: Vec<WeightSpec>) -> Result<WeightSystem> {
    if specs.is_empty() {
        return Err(Error::Construction("weight system needs at least one weight".into()));
    }
    for i in 0..specs.len() {
        for j in i + 1..specs.len() {
            if specs[i].interval.overlaps(&specs[j].interval) {
                return Err(Error::Construction(format!(
                    "Angelesco supports {} and {} overlap",
                    specs[i].interval, specs[j].interval
                )));
            }
        }
    }
    let mut specs = specs;
    specs.sort_by(|x, y| x.interval.a.total_cmp(&y.interval.a));
    Ok(WeightSystem {
        kind: SystemKind::Angelesco,
        intervals: specs.iter().map(|s| s.interval).collect(),
        weights: specs.into_iter().map(Weight::plain).collect(),
        generators: Vec::new(),
    })
}

/// Nikishin system generated by w_1 on Γ_1 and generators on Γ_2, …, Γ_p.
/// The generators after the first define, recursively, a Nikishin system on
/// Γ_2 whose weights are lifted to Γ_1 through their Markov functions.
pub fn build_nikishin(w1: WeightSpec, generators: Vec<WeightSpec>) -> Result<WeightSystem> {
    let mut intervals = vec![w1.interval];
    intervals.extend(generators.iter().map(|g| g.interval));
    for k in 0..intervals.len().saturating_sub(1) {
        if !intervals[k].disjoint(&intervals[k + 1]) {
            return Err(Error::Construction(format!(
                "consecutive Nikishin intervals {} and {} intersect",
                intervals[k],
                intervals[k + 1]
            )));
        }
    }
    let mut weights = vec![Weight::plain(w1.clone())];
    if let Some((first, rest)) = generators.split_first() {
        let sub = build_nikishin(first.clone(), rest.to_vec())?;
        // the ratio is positive on Γ_1 with this choice
        let sign = if intervals[1].b < intervals[0].a { 1.0 } else { -1.0 };
        for v in sub.weights {
            weights.push(Weight {
                spec: w1.clone(),
                ratio: Some(MarkovRatio {
                    generator: Arc::new(v),
                    sign,
                }),
            });
        }
    }
    Ok(WeightSystem {
        kind: SystemKind::Nikishin,
        weights,
        intervals,
        generators,
    })
}

/// Moments ∫ t^k w_j(x) dx, t = map.to_t(x), k = 0..=k_max, for every weight.
#[derive(Clone, Debug)]
pub struct MomentTable {
    pub map: AffineMap,
    pub rows: Vec<Vec<DoubleDouble>>,
    pub tol: f64,
}

impl MomentTable {
    /// Moments in double-double precision.
    pub fn compute(ws: &WeightSystem, k_max: usize, tol: f64, map: AffineMap) -> Result<Self> {
        Self::compute_with(ws, k_max, tol, map, RulePair::STANDARD)
    }

    /// Moments in the scaled variable of the hull with the double-double
    /// tolerance; this is the table the polynomial constructors expect.
    pub fn scaled(ws: &WeightSystem, k_max: usize) -> Result<Self> {
        Self::compute(ws, k_max, MOMENT_TOL_DD, ws.unit_map())
    }

    pub fn compute_with(
        ws: &WeightSystem,
        k_max: usize,
        tol: f64,
        map: AffineMap,
        pair: RulePair,
    ) -> Result<Self> {
        let rows = ws
            .weights
            .iter()
            .map(|w| {
                w.integrate(
                    |x: Dd, out: &mut [Dd]| {
                        let t = map.to_t(x);
                        let mut pk = Dd::ONE;
                        for o in out.iter_mut() {
                            *o = pk;
                            pk *= t;
                        }
                    },
                    k_max + 1,
                    tol,
                    pair,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { map, rows, tol })
    }

    pub fn p(&self) -> usize {
        self.rows.len()
    }

    pub fn k_max(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len().saturating_sub(1))
    }

    pub fn get(&self, j: usize, k: usize) -> DoubleDouble {
        self.rows[j][k]
    }

    pub fn row_f64(&self, j: usize) -> Vec<f64> {
        self.rows[j].iter().map(|c| c.to_f64()).collect()
    }
}

/// Raw moments c_k = ∫ x^k w_j(x) dx, k = 0..=k_max, of weight j (0-based).
pub fn moments(ws: &WeightSystem, j: usize, k_max: usize, tol: f64) -> Result<Vec<f64>> {
    if j >= ws.p() {
        return Err(Error::InvalidArgument(format!(
            "weight index {j} out of range for p = {}",
            ws.p()
        )));
    }
    let single = WeightSystem {
        kind: ws.kind,
        weights: vec![ws.weights[j].clone()],
        intervals: ws.intervals.clone(),
        generators: Vec::new(),
    };
    Ok(MomentTable::compute(&single, k_max, tol, AffineMap::IDENTITY)?.row_f64(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ln(x: f64) -> f64 {
        x.ln()
    }

    #[test]
    fn stieltjes_of_uniform_generator() {
        let v = Weight::plain(WeightSpec::constant(-2.0, -1.0).unwrap());
        let s = stieltjes_transform(&v, 0.0, Sign::Plus).unwrap();
        assert!((s - ln(2.0)).abs() < 1e-13);
        let w = Weight::plain(WeightSpec::constant(1.0, 2.0).unwrap());
        let s = stieltjes_transform(&w, 0.0, Sign::Minus).unwrap();
        assert!((s - ln(2.0)).abs() < 1e-13);
    }

    #[test]
    fn stieltjes_decays_like_mass_over_x() {
        let v = Weight::plain(WeightSpec::constant(-2.0, -1.0).unwrap());
        let x = 1e6;
        let s = stieltjes_transform(&v, x, Sign::Plus).unwrap();
        assert!((x * s - 1.0).abs() < 1e-5);
    }

    #[test]
    fn stieltjes_rejects_points_on_support() {
        let v = Weight::plain(WeightSpec::constant(-2.0, -1.0).unwrap());
        assert!(matches!(
            stieltjes_transform(&v, -1.0, Sign::Plus),
            Err(Error::Domain(_))
        ));
        assert!(stieltjes_transform(&v, -1.5, Sign::Plus).is_err());
    }

    #[test]
    fn angelesco_construction() {
        let ok = build_angelesco(vec![
            WeightSpec::constant(0.01, 1.0).unwrap(),
            WeightSpec::constant(-1.0, 0.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(ok.p(), 2);
        assert_eq!(ok.intervals[0], Interval { a: -1.0, b: 0.0 });
        let bad = build_angelesco(vec![
            WeightSpec::constant(-1.0, 0.5).unwrap(),
            WeightSpec::constant(0.0, 1.0).unwrap(),
        ]);
        assert!(matches!(bad, Err(Error::Construction(_))));
        let jac = build_angelesco(vec![
            WeightSpec::jacobi(0.5, 0.5, 1.0, 2.0).unwrap(),
            WeightSpec::jacobi(0.0, 0.0, -2.0, -1.0).unwrap(),
        ])
        .unwrap();
        assert!(jac.intervals[0].b < jac.intervals[1].a);
    }

    #[test]
    fn nikishin_p2_weight_value() {
        let ws = build_nikishin(
            WeightSpec::constant(1.0, 2.0).unwrap(),
            vec![WeightSpec::constant(-1.0, 0.0).unwrap()],
        )
        .unwrap();
        let v: f64 = ws.eval(1, 1.5);
        assert!((v - (2.5f64 / 1.5).ln()).abs() < 1e-13);
        let vd: Dd = ws.eval(1, Dd::from_f64(1.5));
        let exact = (Dd::from_f64(2.5) / Dd::from_f64(1.5)).ln();
        assert!((vd - exact).abs().to_f64() < 1e-28);
    }

    #[test]
    fn nikishin_rejects_intersecting_intervals() {
        let r = build_nikishin(
            WeightSpec::constant(1.0, 2.0).unwrap(),
            vec![WeightSpec::constant(1.0, 2.0).unwrap()],
        );
        assert!(matches!(r, Err(Error::Construction(_))));
    }

    #[test]
    fn nikishin_p3_ratios_positive() {
        let ws = build_nikishin(
            WeightSpec::constant(3.0, 4.0).unwrap(),
            vec![
                WeightSpec::constant(1.0, 2.0).unwrap(),
                WeightSpec::constant(-1.0, 0.0).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(ws.p(), 3);
        for i in 1..200 {
            let x = 3.0 + i as f64 / 200.0;
            let w1: f64 = ws.eval(0, x);
            for j in 1..3 {
                let r: f64 = ws.eval(j, x);
                assert!(r / w1 > 0.0, "j = {j}, x = {x}");
            }
        }
    }

    #[test]
    fn nikishin_mirror_sign_keeps_ratio_positive() {
        let ws = build_nikishin(
            WeightSpec::constant(-2.0, -1.0).unwrap(),
            vec![
                WeightSpec::constant(0.0, 1.0).unwrap(),
                WeightSpec::constant(2.0, 3.0).unwrap(),
            ],
        )
        .unwrap();
        for x in [-1.9, -1.5, -1.1] {
            assert!(ws.eval::<f64>(1, x) > 0.0);
            assert!(ws.eval::<f64>(2, x) > 0.0);
        }
    }

    #[test]
    fn uniform_moments() {
        let ws = WeightSystem::general(vec![WeightSpec::constant(-1.0, 1.0).unwrap()]).unwrap();
        let c = moments(&ws, 0, 4, DEFAULT_TOL).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-15);
        assert!(c[1].abs() < 1e-15);
        assert!((c[2] - 2.0 / 3.0).abs() < 1e-15);
        assert!(c[3].abs() < 1e-15);
    }

    #[test]
    fn arcsine_mass_is_pi() {
        let ws =
            WeightSystem::general(vec![WeightSpec::jacobi(-0.5, -0.5, -1.0, 1.0).unwrap()]).unwrap();
        let c = moments(&ws, 0, 6, DEFAULT_TOL).unwrap();
        assert!((c[0] - std::f64::consts::PI).abs() < 1e-12);
        // ∫ x^2 / sqrt(1 - x^2) = π/2
        assert!((c[2] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        for k in [1, 3, 5] {
            assert!(c[k].abs() < 1e-12);
        }
    }

    #[test]
    fn skewed_jacobi_in_double_double() {
        // ∫_0^1 (1 - x)^{-0.7} x^{0.3} dx = B(1.3, 0.3)
        let ws = WeightSystem::general(vec![WeightSpec::jacobi(-0.7, 0.3, 0.0, 1.0).unwrap()])
            .unwrap();
        let mt = MomentTable::compute(&ws, 0, 1e-26, AffineMap::IDENTITY).unwrap();
        let expected = 3.004_811_841_865_507;
        assert!((mt.get(0, 0).to_f64() - expected).abs() < 1e-14);
    }

    #[test]
    fn exp_poly_moments() {
        // exp(-x) on [0, 1]: c_0 = 1 - 1/e, c_1 = 1 - 2/e
        let ws =
            WeightSystem::general(vec![WeightSpec::exp_poly(vec![0.0, 1.0], 0.0, 1.0).unwrap()]).unwrap();
        let c = moments(&ws, 0, 1, DEFAULT_TOL).unwrap();
        let e = std::f64::consts::E;
        assert!((c[0] - (1.0 - 1.0 / e)).abs() < 1e-14);
        assert!((c[1] - (1.0 - 2.0 / e)).abs() < 1e-14);
    }

    #[test]
    fn weights_vanish_outside_support() {
        let spec = WeightSpec::jacobi(0.5, 1.5, 0.0, 1.0).unwrap();
        assert_eq!(spec.eval(-0.1f64), 0.0);
        assert_eq!(spec.eval(1.1f64), 0.0);
        assert!(spec.eval(0.5f64) > 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(0.0, f64::INFINITY).is_err());
        assert!(WeightSpec::jacobi(-1.0, 0.0, 0.0, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn stieltjes_is_monotone_off_support(x in 0.05f64..5.0) {
            let v = Weight::plain(WeightSpec::jacobi(0.3, -0.4, -1.0, 0.0).unwrap());
            let h = 1e-4;
            let s0 = stieltjes_transform(&v, x, Sign::Plus).unwrap();
            let s1 = stieltjes_transform(&v, x + h, Sign::Plus).unwrap();
            prop_assert!(s1 < s0);
        }

        #[test]
        fn tighter_tolerance_agrees(alpha in -0.9f64..2.0, beta in -0.9f64..2.0) {
            let ws = WeightSystem::general(vec![WeightSpec::jacobi(alpha, beta, -1.0, 2.0).unwrap()]).unwrap();
            let t = 1e-10;
            let c1 = moments(&ws, 0, 6, t).unwrap();
            let c2 = moments(&ws, 0, 6, t / 10.0).unwrap();
            for (a, b) in c1.iter().zip(&c2) {
                prop_assert!((a - b).abs() <= t);
            }
        }

        #[test]
        fn moments_scale_linearly(c in 0.1f64..10.0) {
            let spec = WeightSpec::exp_poly(vec![0.0, 0.5, -1.0], -1.0, 1.0).unwrap();
            let a = WeightSystem::general(vec![spec.clone()]).unwrap();
            let b = WeightSystem::general(vec![spec.scaled(c)]).unwrap();
            let ma = moments(&a, 0, 5, 1e-13).unwrap();
            let mb = moments(&b, 0, 5, 1e-13).unwrap();
            for (x, y) in ma.iter().zip(&mb) {
                prop_assert!((c * x - y).abs() <= 1e-12 * c.max(1.0));
            }
        }

        #[test]
        fn even_weights_have_vanishing_odd_moments(alpha in -0.9f64..3.0, half in 0.1f64..3.0) {
            let ws = WeightSystem::general(vec![WeightSpec::jacobi(alpha, alpha, -half, half).unwrap()]).unwrap();
            let c = moments(&ws, 0, 7, 1e-12).unwrap();
            for k in [1, 3, 5, 7] {
                prop_assert!(c[k].abs() <= 1e-11 * c[0].max(1.0) * half.powi(k as i32).max(1.0));
            }
        }
    }
}
