//! Polynomials in monomial and Legendre bases, evaluation in any precision,
//! and real root finding via companion/comrade eigenvalues.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dd::{DoubleDouble, Real};
use crate::error::{Error, Result};

type Dd = DoubleDouble;

/// Real polynomial with coefficients in ascending monomial order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Trailing zero coefficients are dropped.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn eval<R: Real>(&self, x: R) -> R {
        self.coeffs
            .iter()
            .rev()
            .fold(R::zero(), |acc, &c| acc * x + R::from_f64(c))
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    /// Real roots, ascending. See [`real_roots`] for the projection and
    /// refinement rules.
    pub fn roots(&self, dedupe_tol: f64) -> Result<Vec<f64>> {
        let coeffs: Vec<Dd> = self.coeffs.iter().map(|&c| Dd::from_f64(c)).collect();
        let sp = ScaledPoly::new(Basis::Monomial, coeffs, AffineMap::IDENTITY, Dd::ONE);
        sp.real_roots(dedupe_tol)
    }
}

/// t = (x - center) / half_width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub center: f64,
    pub half_width: f64,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        center: 0.0,
        half_width: 1.0,
    };

    /// Map sending [a, b] onto [-1, 1].
    pub fn onto_unit(a: f64, b: f64) -> Self {
        Self {
            center: 0.5 * (a + b),
            half_width: 0.5 * (b - a),
        }
    }

    pub fn to_t<R: Real>(&self, x: R) -> R {
        (x - R::from_f64(self.center)) / R::from_f64(self.half_width)
    }

    pub fn to_x<R: Real>(&self, t: R) -> R {
        R::from_f64(self.center) + R::from_f64(self.half_width) * t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    Monomial,
    Legendre,
}

/// p(x) = factor · Σ_k coeffs[k] · b_k(t), t = map.to_t(x), with b_k either
/// t^k or the Legendre polynomial P_k(t). Coefficients are kept in
/// double-double so that ill-conditioned expansions stay usable.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledPoly {
    pub basis: Basis,
    pub coeffs: Vec<DoubleDouble>,
    pub map: AffineMap,
    pub factor: DoubleDouble,
}

/// Values P_0(t)..P_{m-1}(t) of the Legendre polynomials.
pub fn legendre_values<R: Real>(t: R, m: usize, out: &mut [R]) {
    if m == 0 {
        return;
    }
    out[0] = R::one();
    if m == 1 {
        return;
    }
    out[1] = t;
    for k in 1..m - 1 {
        let kf = k as f64;
        out[k + 1] = (R::from_f64(2.0 * kf + 1.0) * t * out[k] - R::from_f64(kf) * out[k - 1])
            / R::from_f64(kf + 1.0);
    }
}

/// Monomial coefficients of P_0..P_{m-1}, row k holding P_k.
pub fn legendre_to_monomial(m: usize) -> Vec<Vec<Dd>> {
    let mut rows: Vec<Vec<Dd>> = Vec::with_capacity(m);
    for k in 0..m {
        let row = match k {
            0 => vec![Dd::ONE],
            1 => vec![Dd::ZERO, Dd::ONE],
            _ => {
                let kf = (k - 1) as f64;
                let a = Dd::from_f64(2.0 * kf + 1.0) / Dd::from_f64(kf + 1.0);
                let b = Dd::from_f64(kf) / Dd::from_f64(kf + 1.0);
                let mut r = vec![Dd::ZERO; k + 1];
                for (i, c) in rows[k - 1].iter().enumerate() {
                    r[i + 1] += a * *c;
                }
                for (i, c) in rows[k - 2].iter().enumerate() {
                    r[i] -= b * *c;
                }
                r
            }
        };
        rows.push(row);
    }
    rows
}

fn binomial_row(k: usize) -> Vec<Dd> {
    let mut row = vec![Dd::ONE];
    for _ in 0..k {
        let mut next = vec![Dd::ONE; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row
}

impl ScaledPoly {
    pub fn new(basis: Basis, coeffs: Vec<Dd>, map: AffineMap, factor: Dd) -> Self {
        Self {
            basis,
            coeffs,
            map,
            factor,
        }
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| *c != Dd::ZERO)
    }

    /// Value at t in the scaled variable, without the factor.
    pub fn eval_t<R: Real>(&self, t: R) -> R {
        match self.basis {
            Basis::Monomial => self
                .coeffs
                .iter()
                .rev()
                .fold(R::zero(), |acc, &c| acc * t + R::from_dd(c)),
            Basis::Legendre => {
                // Clenshaw
                let m = self.coeffs.len();
                let mut b1 = R::zero();
                let mut b2 = R::zero();
                for k in (0..m).rev() {
                    let kf = k as f64;
                    let alpha = R::from_f64(2.0 * kf + 1.0) / R::from_f64(kf + 1.0) * t;
                    let beta = R::from_f64(kf + 1.0) / R::from_f64(kf + 2.0);
                    let b0 = R::from_dd(self.coeffs[k]) + alpha * b1 - beta * b2;
                    b2 = b1;
                    b1 = b0;
                }
                b1
            }
        }
    }

    pub fn eval<R: Real>(&self, x: R) -> R {
        R::from_dd(self.factor) * self.eval_t(self.map.to_t(x))
    }

    /// Value and derivative with respect to t, plus the sum of absolute
    /// term magnitudes (a scale for residual tests).
    fn eval_t_with_derivative(&self, t: Dd) -> (Dd, Dd, Dd) {
        let m = self.coeffs.len();
        match self.basis {
            Basis::Monomial => {
                let mut p = Dd::ZERO;
                let mut dp = Dd::ZERO;
                let mut mag = Dd::ZERO;
                let at = t.abs();
                for &c in self.coeffs.iter().rev() {
                    dp = dp * t + p;
                    p = p * t + c;
                    mag = mag * at + c.abs();
                }
                (p, dp, mag)
            }
            Basis::Legendre => {
                let mut vals = vec![Dd::ZERO; m.max(2)];
                legendre_values(t, m.max(2), &mut vals);
                let mut ders = vec![Dd::ZERO; m.max(2)];
                // P'_{k+1} = P'_{k-1} + (2k+1) P_k
                ders[0] = Dd::ZERO;
                ders[1] = Dd::ONE;
                for k in 1..m.max(2) - 1 {
                    ders[k + 1] = ders[k - 1] + Dd::from_f64(2.0 * k as f64 + 1.0) * vals[k];
                }
                let mut p = Dd::ZERO;
                let mut dp = Dd::ZERO;
                let mut mag = Dd::ZERO;
                for k in 0..m {
                    p += self.coeffs[k] * vals[k];
                    dp += self.coeffs[k] * ders[k];
                    let v = vals[k].abs();
                    mag += self.coeffs[k].abs() * if v > Dd::ONE { v } else { Dd::ONE };
                }
                (p, dp, mag)
            }
        }
    }

    /// Monomial coefficients in the scaled variable t.
    pub fn monomial_coeffs_t(&self) -> Vec<Dd> {
        match self.basis {
            Basis::Monomial => self.coeffs.clone(),
            Basis::Legendre => {
                let m = self.coeffs.len();
                let table = legendre_to_monomial(m);
                let mut out = vec![Dd::ZERO; m];
                for (k, row) in table.iter().enumerate() {
                    for (i, c) in row.iter().enumerate() {
                        out[i] += self.coeffs[k] * *c;
                    }
                }
                out
            }
        }
    }

    /// Expands into ascending monomial coefficients in x.
    pub fn to_polynomial(&self) -> Polynomial {
        let a = self.monomial_coeffs_t();
        let m = a.len();
        let c = Dd::from_f64(self.map.center);
        let inv_h = Dd::ONE / Dd::from_f64(self.map.half_width);
        let mut out = vec![Dd::ZERO; m];
        let mut hk = Dd::ONE;
        for (k, ak) in a.iter().enumerate() {
            let binom = binomial_row(k);
            let scaled = *ak * hk;
            let mut cpow = Dd::ONE;
            // ((x - c)/h)^k = h^-k Σ_m C(k,m) x^m (-c)^(k-m)
            for j in (0..=k).rev() {
                out[j] += scaled * binom[j] * cpow;
                cpow = cpow * (-c);
            }
            hk = hk * inv_h;
        }
        Polynomial::new(out.into_iter().map(|v| (v * self.factor).to_f64()).collect())
    }

    fn eigen_matrix(&self, deg: usize) -> DMatrix<f64> {
        let lead = self.coeffs[deg];
        let norm: Vec<f64> = self.coeffs[..deg].iter().map(|c| (*c / lead).to_f64()).collect();
        let mut m = DMatrix::<f64>::zeros(deg, deg);
        match self.basis {
            Basis::Monomial => {
                for i in 1..deg {
                    m[(i, i - 1)] = 1.0;
                }
                for i in 0..deg {
                    m[(i, deg - 1)] = -norm[i];
                }
            }
            Basis::Legendre => {
                // t P_k = (k+1)/(2k+1) P_{k+1} + k/(2k+1) P_{k-1}
                for k in 0..deg {
                    let kf = k as f64;
                    if k + 1 < deg {
                        m[(k + 1, k)] = (kf + 1.0) / (2.0 * kf + 1.0);
                    }
                    if k >= 1 {
                        m[(k - 1, k)] = kf / (2.0 * kf + 1.0);
                    }
                }
                // last column picks up P_deg = -(1/lead) Σ c_k P_k
                let d = deg as f64;
                let s = d / (2.0 * d - 1.0);
                for i in 0..deg {
                    m[(i, deg - 1)] -= s * norm[i];
                }
            }
        }
        m
    }

    /// Real roots in x, ascending.
    ///
    /// Eigenvalues of the companion (monomial) or comrade (Legendre) matrix
    /// give starting points; those with |Im| ≤ 1e-8·max(1, |λ|) are projected
    /// onto the real axis and refined by Newton's method in double-double.
    /// Roots closer than `dedupe_tol` (in x) are merged.
    pub fn real_roots(&self, dedupe_tol: f64) -> Result<Vec<f64>> {
        let deg = match self.degree() {
            Some(d) if d >= 1 => d,
            _ => {
                return Err(Error::InvalidArgument(
                    "root finding needs degree at least 1".into(),
                ))
            }
        };
        let eig = self.eigen_matrix(deg).complex_eigenvalues();
        let mut ts: Vec<f64> = eig
            .iter()
            .filter(|z| z.im.abs() <= 1e-8 * z.re.abs().max(1.0))
            .map(|z| z.re)
            .collect();
        ts.sort_by(f64::total_cmp);
        let mut roots = Vec::with_capacity(ts.len());
        for t0 in ts {
            let mut t = Dd::from_f64(t0);
            let mut ok = false;
            let mut residual = f64::INFINITY;
            for _ in 0..60 {
                let (p, dp, mag) = self.eval_t_with_derivative(t);
                residual = p.abs().to_f64() / mag.to_f64().max(f64::MIN_POSITIVE);
                if residual <= 1e3 * Dd::EPSILON {
                    ok = true;
                    break;
                }
                if dp == Dd::ZERO {
                    break;
                }
                let step = p / dp;
                t -= step;
                if step.abs().to_f64() <= 1e-30 * t.abs().to_f64().max(1.0) {
                    let (p, _, mag) = self.eval_t_with_derivative(t);
                    residual = p.abs().to_f64() / mag.to_f64().max(f64::MIN_POSITIVE);
                    ok = residual <= 1e-20;
                    break;
                }
            }
            let x = self.map.to_x(t).to_f64();
            if !ok {
                return Err(Error::RootRefinement { root: x, residual });
            }
            roots.push(x);
        }
        roots.sort_by(f64::total_cmp);
        roots.dedup_by(|b, a| (*b - *a).abs() <= dedupe_tol);
        Ok(roots)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quadratic_roots() {
        let p = Polynomial::new(vec![-1.0 / 3.0, 0.0, 1.0]);
        let r = p.roots(1e-12).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert_eq!(r.len(), 2);
        assert!((r[0] + s).abs() < 1e-15 && (r[1] - s).abs() < 1e-15);
    }

    #[test]
    fn linear_root() {
        let r = Polynomial::new(vec![0.0, 1.0]).roots(1e-12).unwrap();
        assert_eq!(r, vec![0.0]);
    }

    #[test]
    fn monic_legendre_cubic() {
        let r = Polynomial::new(vec![0.0, -0.6, 0.0, 1.0]).roots(1e-12).unwrap();
        let s = 0.6f64.sqrt();
        assert!((r[0] + s).abs() < 1e-15);
        assert!(r[1].abs() < 1e-15);
        assert!((r[2] - s).abs() < 1e-15);
    }

    #[test]
    fn complex_roots_are_dropped() {
        let r = Polynomial::new(vec![1.0, 0.0, 1.0]).roots(1e-12).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn constant_has_no_roots() {
        assert!(Polynomial::new(vec![3.0]).roots(1e-12).is_err());
    }

    #[test]
    fn legendre_basis_matches_monomial_expansion() {
        let coeffs: Vec<Dd> = [0.3, -1.0, 0.25, 2.0, 0.5]
            .iter()
            .map(|&c| Dd::from_f64(c))
            .collect();
        let map = AffineMap::onto_unit(1.0, 3.0);
        let leg = ScaledPoly::new(Basis::Legendre, coeffs, map, Dd::from_f64(1.5));
        let mono = leg.to_polynomial();
        for x in [1.0, 1.3, 2.0, 2.9, 5.0] {
            let a = leg.eval(x);
            let b = mono.eval(x);
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "x = {x}");
        }
    }

    #[test]
    fn comrade_roots_of_legendre_p20() {
        let mut coeffs = vec![Dd::ZERO; 21];
        coeffs[20] = Dd::ONE;
        let p = ScaledPoly::new(Basis::Legendre, coeffs, AffineMap::IDENTITY, Dd::ONE);
        let roots = p.real_roots(1e-12).unwrap();
        assert_eq!(roots.len(), 20);
        // zeros of P_20 are the 20-point Gauss nodes
        let rule = crate::quad::GaussLegendre::get(20);
        for (r, x) in roots.iter().zip(&rule.nodes) {
            assert!((r - x.to_f64()).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn roots_of_product_are_recovered(mut zs in prop::collection::vec(-1.0f64..1.0, 1..8)) {
            zs.sort_by(f64::total_cmp);
            for w in zs.windows(2) {
                prop_assume!(w[1] - w[0] > 1e-2);
            }
            let mut c = vec![1.0];
            for z in &zs {
                let mut next = vec![0.0; c.len() + 1];
                for (i, v) in c.iter().enumerate() {
                    next[i + 1] += v;
                    next[i] -= z * v;
                }
                c = next;
            }
            let roots = Polynomial::new(c).roots(1e-12).unwrap();
            prop_assert_eq!(roots.len(), zs.len());
            for (r, z) in roots.iter().zip(&zs) {
                prop_assert!((r - z).abs() < 1e-10);
            }
        }
    }
}
