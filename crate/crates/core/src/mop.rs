//! Block Hankel moment matrices and type I / type II multiple orthogonal
//! polynomials.
//!
//! Everything is assembled in the scaled variable t = (x - c)/h of the
//! moment table and solved in double-double; results are mapped back to x.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::dd::{DoubleDouble, Real};
use crate::error::{Error, Result};
use crate::linalg::{Lu, Mat};
use crate::poly::{legendre_values, AffineMap, Basis, Polynomial, ScaledPoly};
use crate::quad::RulePair;
use crate::weights::{MomentTable, WeightSystem};

type Dd = DoubleDouble;

/// Largest total degree accepted by the moment-matrix constructors.
pub const MAX_DEGREE: usize = 30;
/// Largest total degree accepted by [`type2_mop_legendre`].
pub const MAX_DEGREE_LEGENDRE: usize = 120;
/// Condition estimates above this flag a result as ill-conditioned.
pub const CONDITION_WARNING: f64 = 1e12;
/// Condition estimates above this make the index numerically non-normal;
/// double-double solves lose all accuracy beyond it.
pub const CONDITION_SINGULAR: f64 = 1e28;
/// Absolute tolerance of residual quadratures.
pub const RESIDUAL_TOL: f64 = 1e-26;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex {
    parts: Vec<usize>,
}

impl MultiIndex {
    pub fn new(parts: Vec<usize>) -> Self {
        Self { parts }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn p(&self) -> usize {
        self.parts.len()
    }

    /// n = |n⃗|
    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }

    /// N_j = n_1 + … + n_j, with N_0 = 0.
    pub fn prefix(&self, j: usize) -> usize {
        self.parts[..j].iter().sum()
    }

    /// Column range of block j (0-based).
    pub fn block(&self, j: usize) -> Range<usize> {
        let s = self.prefix(j);
        s..s + self.parts[j]
    }

    /// Weight index and power for basis position k (0-based): g_k = x^i w_j.
    pub fn locate(&self, k: usize) -> Option<(usize, usize)> {
        let mut start = 0;
        for (j, &nj) in self.parts.iter().enumerate() {
            if k < start + nj {
                return Some((j, k - start));
            }
            start += nj;
        }
        None
    }

    /// n_j = round(r_j n) with largest-remainder correction so Σ n_j = n.
    pub fn from_ray(r: &[f64], n: usize) -> Result<Self> {
        if r.is_empty() || r.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "ray needs nonnegative finite entries".into(),
            ));
        }
        let s: f64 = r.iter().sum();
        if s <= 0.0 {
            return Err(Error::InvalidArgument("ray entries sum to zero".into()));
        }
        let exact: Vec<f64> = r.iter().map(|x| x / s * n as f64).collect();
        let mut parts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
        let mut rem = n - parts.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..r.len()).collect();
        order.sort_by(|&a, &b| {
            let fa = exact[a] - exact[a].floor();
            let fb = exact[b] - exact[b].floor();
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        for &i in order.iter().cycle() {
            if rem == 0 {
                break;
            }
            parts[i] += 1;
            rem -= 1;
        }
        Ok(Self { parts })
    }

    pub(crate) fn check(&self, p: usize) -> Result<usize> {
        if self.p() != p {
            return Err(Error::InvalidArgument(format!(
                "multi-index has {} entries but the system has {p} weights",
                self.p()
            )));
        }
        let n = self.total();
        if n == 0 {
            return Err(Error::InvalidArgument("multi-index must have |n| >= 1".into()));
        }
        Ok(n)
    }
}

impl From<Vec<usize>> for MultiIndex {
    fn from(parts: Vec<usize>) -> Self {
        Self::new(parts)
    }
}

/// M[r][N_{j-1} + l] = c^{(j)}_{r+l}, for rows r = 0..n-1.
#[derive(Clone, Debug)]
pub struct HankelBlockMatrix {
    pub matrix: Mat<DoubleDouble>,
    pub nvec: MultiIndex,
    pub map: AffineMap,
}

impl HankelBlockMatrix {
    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn block(&self, j: usize) -> Range<usize> {
        self.nvec.block(j)
    }

    pub fn to_f64(&self) -> Mat<f64> {
        self.matrix.to_f64()
    }
}

fn moment_order_needed(nvec: &MultiIndex, extra_rows: usize) -> usize {
    let n = nvec.total();
    let wmax = nvec.parts().iter().copied().max().unwrap_or(0);
    (n + extra_rows).saturating_sub(1) + wmax.saturating_sub(1)
}

fn check_moments(mt: &MomentTable, nvec: &MultiIndex, extra_rows: usize) -> Result<()> {
    let need = moment_order_needed(nvec, extra_rows);
    for (j, row) in mt.rows.iter().enumerate() {
        if nvec.parts()[j] > 0 && row.len() <= need {
            return Err(Error::InvalidArgument(format!(
                "moment table for weight {} stops at order {}, order {need} is needed",
                j + 1,
                row.len().saturating_sub(1)
            )));
        }
    }
    Ok(())
}

/// Assembles M_n⃗ from the table (in the table's variable).
pub fn block_hankel(mt: &MomentTable, nvec: &MultiIndex) -> Result<HankelBlockMatrix> {
    let n = nvec.check(mt.p())?;
    check_moments(mt, nvec, 0)?;
    let matrix = Mat::from_fn(n, n, |r, col| {
        let (j, l) = nvec.locate(col).expect("column inside the multi-index");
        mt.get(j, r + l)
    });
    Ok(HankelBlockMatrix {
        matrix,
        nvec: nvec.clone(),
        map: mt.map,
    })
}

/// Determinant of M_n⃗ with diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeterminantReport {
    /// D_n⃗ in the original variable x; 0 when numerically singular. May
    /// over- or underflow for large n, see `log10_abs`.
    pub determinant: f64,
    pub log10_abs: f64,
    pub sign: f64,
    /// 1-norm condition number of the matrix actually factored.
    pub condition: f64,
    pub singular: bool,
    pub ill_conditioned: bool,
}

/// Exponent e with D(x) = D(t) · h^e for moments in the scaled variable.
fn scaling_exponent(nvec: &MultiIndex) -> f64 {
    let n = nvec.total() as f64;
    let inner: f64 = nvec
        .parts()
        .iter()
        .map(|&m| (m * m.saturating_sub(1)) as f64 / 2.0)
        .sum();
    n * (n - 1.0) / 2.0 + inner
}

fn report_from_lu(lu: &Lu<Dd>, nvec: &MultiIndex, map: AffineMap) -> DeterminantReport {
    let condition = lu.condition();
    let singular = lu.is_singular() || !(condition <= CONDITION_SINGULAR);
    if singular {
        return DeterminantReport {
            determinant: 0.0,
            log10_abs: f64::NEG_INFINITY,
            sign: 0.0,
            condition,
            singular,
            ill_conditioned: true,
        };
    }
    let (sign, ln_abs) = lu.log_abs_det();
    let ln_abs = ln_abs + scaling_exponent(nvec) * map.half_width.ln();
    DeterminantReport {
        determinant: sign * ln_abs.exp(),
        log10_abs: ln_abs / std::f64::consts::LN_10,
        sign,
        condition,
        singular,
        ill_conditioned: condition > CONDITION_WARNING,
    }
}

/// D_n⃗ = det M_n⃗ by partial-pivoting LU, reported in the original variable.
pub fn normality_determinant(m: &HankelBlockMatrix) -> DeterminantReport {
    report_from_lu(&Lu::new(&m.matrix), &m.nvec, m.map)
}

fn non_normal(nvec: &MultiIndex, rep: &DeterminantReport) -> Error {
    Error::NonNormalIndex {
        multi_index: nvec.parts().to_vec(),
        condition: rep.condition,
    }
}

/// Monic type II multiple orthogonal polynomial.
#[derive(Clone, Debug)]
pub struct TypeII {
    pub nvec: MultiIndex,
    /// Monomial coefficients in x; the leading one is exactly 1.
    pub poly: Polynomial,
    /// The same polynomial in the scaled variable, double-double.
    pub scaled: ScaledPoly,
    pub determinant: DeterminantReport,
}

impl TypeII {
    pub fn eval<R: Real>(&self, x: R) -> R {
        self.scaled.eval(x)
    }

    /// Real zeros in x, ascending.
    pub fn roots(&self) -> Result<Vec<f64>> {
        to_legendre_basis(&self.scaled).real_roots(1e-14 * self.scaled.map.half_width)
    }
}

fn monic_poly_from_scaled(scaled: &ScaledPoly) -> Polynomial {
    let mut c = scaled.to_polynomial().coeffs().to_vec();
    let n = scaled.coeffs.len() - 1;
    c.resize(n + 1, 0.0);
    c[n] = 1.0;
    Polynomial::new(c)
}

fn check_degree(n: usize, max: usize) -> Result<()> {
    if n > max {
        return Err(Error::DegreeTooLarge { degree: n, max });
    }
    Ok(())
}

/// P_n⃗ from the transposed moment system Mᵀ a = -b, b_(j,l) = c^{(j)}_{n+l}.
pub fn type2_mop(mt: &MomentTable, nvec: &MultiIndex) -> Result<TypeII> {
    let n = nvec.check(mt.p())?;
    check_degree(n, MAX_DEGREE)?;
    check_moments(mt, nvec, 1)?;
    let m = block_hankel(mt, nvec)?;
    let lu = Lu::new(&m.matrix);
    let rep = report_from_lu(&lu, nvec, mt.map);
    if rep.singular {
        return Err(non_normal(nvec, &rep));
    }
    let rhs: Vec<Dd> = (0..n)
        .map(|col| {
            let (j, l) = nvec.locate(col).expect("column inside the multi-index");
            -mt.get(j, n + l)
        })
        .collect();
    let mut coeffs = lu.solve_transpose(&rhs).ok_or_else(|| non_normal(nvec, &rep))?;
    coeffs.push(Dd::ONE);
    let factor = Dd::from_f64(mt.map.half_width).powi(n as i32);
    let scaled = ScaledPoly::new(Basis::Monomial, coeffs, mt.map, factor);
    Ok(TypeII {
        nvec: nvec.clone(),
        poly: monic_poly_from_scaled(&scaled),
        scaled,
        determinant: rep,
    })
}

/// Type I polynomials A^(1..p) and the linear form Q = Σ A^(j) w_j.
#[derive(Clone, Debug)]
pub struct TypeISystem {
    pub nvec: MultiIndex,
    /// A^(j) in x (the zero polynomial when n_j = 0).
    pub polys: Vec<Polynomial>,
    pub scaled: Vec<ScaledPoly>,
    pub determinant: DeterminantReport,
}

impl TypeISystem {
    pub fn eval_a<R: Real>(&self, j: usize, x: R) -> R {
        self.scaled[j].eval(x)
    }

    /// Q_n⃗(x).
    pub fn eval_form<R: Real>(&self, ws: &WeightSystem, x: R) -> R {
        let mut q = R::zero();
        for (j, a) in self.scaled.iter().enumerate() {
            if a.coeffs.is_empty() {
                continue;
            }
            let w = ws.eval(j, x);
            if w != R::zero() {
                q += a.eval(x) * w;
            }
        }
        q
    }
}

/// Solves M a = e_{n-1}: ∫ x^k Q = 0 for k < n-1 and ∫ x^{n-1} Q = 1.
pub fn type1_mop(mt: &MomentTable, nvec: &MultiIndex) -> Result<TypeISystem> {
    let n = nvec.check(mt.p())?;
    check_degree(n, MAX_DEGREE)?;
    let m = block_hankel(mt, nvec)?;
    let lu = Lu::new(&m.matrix);
    let rep = report_from_lu(&lu, nvec, mt.map);
    if rep.singular {
        return Err(non_normal(nvec, &rep));
    }
    let mut e = vec![Dd::ZERO; n];
    e[n - 1] = Dd::ONE;
    let a = lu.solve(&e).ok_or_else(|| non_normal(nvec, &rep))?;
    // ∫ x^{n-1} Q = h^{n-1} ∫ t^{n-1} Q when the lower moments vanish
    let factor = Dd::ONE / Dd::from_f64(mt.map.half_width).powi(n as i32 - 1);
    let scaled: Vec<ScaledPoly> = (0..nvec.p())
        .map(|j| {
            ScaledPoly::new(
                Basis::Monomial,
                a[nvec.block(j)].to_vec(),
                mt.map,
                factor,
            )
        })
        .collect();
    let polys = scaled
        .iter()
        .map(|s| {
            if s.coeffs.is_empty() {
                Polynomial::zero()
            } else {
                s.to_polynomial()
            }
        })
        .collect();
    Ok(TypeISystem {
        nvec: nvec.clone(),
        polys,
        scaled,
        determinant: rep,
    })
}

/// Rewrites a scaled monomial-basis polynomial in the Legendre basis of the
/// same variable.
pub fn to_legendre_basis(p: &ScaledPoly) -> ScaledPoly {
    if p.basis == Basis::Legendre {
        return p.clone();
    }
    let m = p.coeffs.len();
    let table = crate::poly::legendre_to_monomial(m);
    // back substitution on the upper-triangular change of basis
    let mut rest = p.coeffs.clone();
    let mut out = vec![Dd::ZERO; m];
    for k in (0..m).rev() {
        let lead = table[k][k];
        let c = rest[k] / lead;
        out[k] = c;
        for (i, v) in table[k].iter().enumerate() {
            rest[i] -= c * *v;
        }
    }
    ScaledPoly::new(Basis::Legendre, out, p.map, p.factor)
}

/// Sorted real roots of a polynomial.
pub fn poly_roots(p: &Polynomial, dedupe_tol: f64) -> Result<Vec<f64>> {
    p.roots(dedupe_tol)
}

/// Anything that can be evaluated in double-double.
pub trait Evaluate {
    fn eval_dd(&self, x: Dd) -> Dd;
}

impl Evaluate for Polynomial {
    fn eval_dd(&self, x: Dd) -> Dd {
        self.eval(x)
    }
}

impl Evaluate for ScaledPoly {
    fn eval_dd(&self, x: Dd) -> Dd {
        self.eval(x)
    }
}

impl Evaluate for TypeII {
    fn eval_dd(&self, x: Dd) -> Dd {
        self.scaled.eval(x)
    }
}

/// r[j][k] = ∫ P(x) x^k w_j(x) dx for k < n_j, by a quadrature rule pair
/// distinct from the one used for moment tables.
pub fn orthogonality_residuals<P: Evaluate + ?Sized>(
    p: &P,
    ws: &WeightSystem,
    nvec: &MultiIndex,
) -> Result<Vec<Vec<f64>>> {
    nvec.check(ws.p())?;
    ws.weights
        .iter()
        .zip(nvec.parts())
        .map(|(w, &nj)| {
            if nj == 0 {
                return Ok(Vec::new());
            }
            let r = w.integrate(
                |x: Dd, out: &mut [Dd]| {
                    let mut v = p.eval_dd(x);
                    for o in out.iter_mut() {
                        *o = v;
                        v *= x;
                    }
                },
                nj,
                RESIDUAL_TOL,
                RulePair::ALTERNATE,
            )?;
            Ok(r.into_iter().map(|v| v.to_f64()).collect())
        })
        .collect()
}

/// ∫ x^k Q_n⃗ dx - δ_{k,n-1} for k = 0..n-1, by independent quadrature.
pub fn type1_residuals(sys: &TypeISystem, ws: &WeightSystem) -> Result<Vec<f64>> {
    let n = sys.nvec.check(ws.p())?;
    let mut acc = vec![Dd::ZERO; n];
    for (j, w) in ws.weights.iter().enumerate() {
        if sys.nvec.parts()[j] == 0 {
            continue;
        }
        let a = &sys.scaled[j];
        let part = w.integrate(
            |x: Dd, out: &mut [Dd]| {
                let mut v = a.eval(x);
                for o in out.iter_mut() {
                    *o = v;
                    v *= x;
                }
            },
            n,
            RESIDUAL_TOL,
            RulePair::ALTERNATE,
        )?;
        for (s, v) in acc.iter_mut().zip(part) {
            *s += v;
        }
    }
    acc[n - 1] -= Dd::ONE;
    Ok(acc.into_iter().map(|v| v.to_f64()).collect())
}

/// Largest absolute entry of a residual table.
pub fn max_abs(rows: &[Vec<f64>]) -> f64 {
    rows.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
}

/// P_n⃗ for larger degrees: the unknown is expanded in Legendre polynomials
/// of the hull variable and tested against Legendre polynomials of each
/// support, which keeps the system far better conditioned than the
/// monomial moment matrix.
pub fn type2_mop_legendre(ws: &WeightSystem, nvec: &MultiIndex) -> Result<TypeII> {
    let n = nvec.check(ws.p())?;
    check_degree(n, MAX_DEGREE_LEGENDRE)?;
    let map = ws.unit_map();
    let mut g = Mat::<Dd>::zeros(n, n + 1);
    for (j, w) in ws.weights.iter().enumerate() {
        let nj = nvec.parts()[j];
        if nj == 0 {
            continue;
        }
        let s = w.support();
        let local = AffineMap::onto_unit(s.a, s.b);
        let mut lp = vec![Dd::ZERO; nj];
        let mut hp = vec![Dd::ZERO; n + 1];
        let entries = w.integrate(
            |x: Dd, out: &mut [Dd]| {
                legendre_values(local.to_t(x), nj, &mut lp);
                legendre_values(map.to_t(x), n + 1, &mut hp);
                for l in 0..nj {
                    for k in 0..=n {
                        out[l * (n + 1) + k] = lp[l] * hp[k];
                    }
                }
            },
            nj * (n + 1),
            crate::weights::MOMENT_TOL_DD,
            RulePair::STANDARD,
        )?;
        let base = nvec.prefix(j);
        for l in 0..nj {
            for k in 0..=n {
                g[(base + l, k)] = entries[l * (n + 1) + k];
            }
        }
    }
    let sq = Mat::from_fn(n, n, |r, c| g[(r, c)]);
    let lu = Lu::new(&sq);
    let rep = report_from_lu(&lu, nvec, map);
    if rep.singular {
        return Err(non_normal(nvec, &rep));
    }
    // leading coefficient of P_n(t) is (2n)! / (2^n (n!)^2)
    let mut lead = Dd::ONE;
    for k in 1..=n {
        lead = lead * Dd::from_f64((2 * k - 1) as f64) / Dd::from_f64(k as f64);
    }
    let a_n = Dd::ONE / lead;
    let rhs: Vec<Dd> = (0..n).map(|r| -(a_n * g[(r, n)])).collect();
    let mut coeffs = lu.solve(&rhs).ok_or_else(|| non_normal(nvec, &rep))?;
    coeffs.push(a_n);
    let factor = Dd::from_f64(map.half_width).powi(n as i32);
    let scaled = ScaledPoly::new(Basis::Legendre, coeffs, map, factor);
    let mut rep = rep;
    // the matrix is not M_n⃗; its determinant is not D_n⃗
    rep.determinant = f64::NAN;
    rep.log10_abs = f64::NAN;
    Ok(TypeII {
        nvec: nvec.clone(),
        poly: monic_poly_from_scaled(&scaled),
        scaled,
        determinant: rep,
    })
}
