//! Correlation kernel K_n(x,y) = Σ φ_i(x) ψ_i(y) of a MOP ensemble.
//!
//! Both families are expanded in the scaled variable t of the moment table:
//! φ_i over t^r, ψ_i over g̃_k = t^l w_j (k = N_{j-1} + l). With PM = LU the
//! choice φ = L⁻¹P f̃, ψ = U⁻ᵀ g̃ is biorthogonal. The kernel does not depend
//! on the choice of bases, so the scaling never has to be undone.

use crate::dd::{DoubleDouble, Real};
use crate::error::{Error, Result};
use crate::linalg::{Lu, Mat};
use crate::mop::{block_hankel, HankelBlockMatrix, MultiIndex, CONDITION_SINGULAR};
use crate::poly::AffineMap;
use crate::quad::RulePair;
use crate::weights::{MomentTable, WeightSystem, MOMENT_TOL_DD};

type Dd = DoubleDouble;

/// Largest tolerated |∫φ_i ψ_k dx − δ_ik| at construction.
pub const GRAM_TOL: f64 = 1e-9;

const KERNEL_QUAD_TOL: f64 = 1e-22;

#[derive(Clone, Debug)]
pub struct Kernel {
    pub ws: WeightSystem,
    pub nvec: MultiIndex,
    pub map: AffineMap,
    /// φ_i = Σ_r phi[(i, r)] t^r.
    pub phi: Mat<Dd>,
    /// ψ_i = Σ_k psi[(i, k)] g̃_k.
    pub psi: Mat<Dd>,
    /// max |Gram − I| against an independently computed moment matrix.
    pub gram_error: f64,
}

fn non_normal(nvec: &MultiIndex, condition: f64) -> Error {
    Error::NonNormalIndex {
        multi_index: nvec.parts().to_vec(),
        condition,
    }
}

fn lower_inverse(l: &Mat<Dd>) -> Mat<Dd> {
    let n = l.rows();
    let mut inv = Mat::<Dd>::identity(n);
    for c in 0..n {
        for i in c + 1..n {
            let mut s = Dd::ZERO;
            for k in c..i {
                s += l[(i, k)] * inv[(k, c)];
            }
            inv[(i, c)] = -s;
        }
    }
    inv
}

fn upper_inverse(u: &Mat<Dd>) -> Mat<Dd> {
    let n = u.rows();
    let mut inv = Mat::<Dd>::zeros(n, n);
    for c in 0..n {
        inv[(c, c)] = Dd::ONE / u[(c, c)];
        for i in (0..c).rev() {
            let mut s = Dd::ZERO;
            for k in i + 1..=c {
                s += u[(i, k)] * inv[(k, c)];
            }
            inv[(i, c)] = -s / u[(i, i)];
        }
    }
    inv
}

/// Moment order needed for the block moment matrix of `nvec`.
fn moment_order(nvec: &MultiIndex) -> usize {
    let wmax = nvec.parts().iter().copied().max().unwrap_or(1);
    nvec.total() + wmax
}

/// Builds the biorthogonal families from M = M_n⃗ (in the matrix's variable)
/// and checks the Gram matrix against moments from a different rule pair.
pub fn biorthogonalize(m: &HankelBlockMatrix, ws: &WeightSystem, nvec: &MultiIndex) -> Result<Kernel> {
    let n = nvec.check(ws.p())?;
    if m.nvec != *nvec || m.n() != n {
        return Err(Error::InvalidArgument(
            "moment matrix was built for a different multi-index".into(),
        ));
    }
    let lu = Lu::new(&m.matrix);
    let condition = lu.condition();
    if lu.is_singular() || !(condition <= CONDITION_SINGULAR) {
        return Err(non_normal(nvec, condition));
    }
    let linv = lower_inverse(&lu.lower());
    let uinv = upper_inverse(&lu.upper());
    let perm = lu.permutation();
    let mut phi = Mat::<Dd>::zeros(n, n);
    for i in 0..n {
        for (k, &r) in perm.iter().enumerate() {
            phi[(i, r)] = linv[(i, k)];
        }
    }
    let psi = uinv.transpose();
    let mut kernel = Kernel {
        ws: ws.clone(),
        nvec: nvec.clone(),
        map: m.map,
        phi,
        psi,
        gram_error: f64::NAN,
    };
    let alt = MomentTable::compute_with(ws, moment_order(nvec), MOMENT_TOL_DD, m.map, RulePair::ALTERNATE)?;
    let gram = kernel.gram_from(&block_hankel(&alt, nvec)?);
    kernel.gram_error = gram_deviation(&gram);
    if !(kernel.gram_error <= GRAM_TOL) {
        return Err(Error::Construction(format!(
            "biorthogonality defect {:.3e} exceeds {GRAM_TOL:e}",
            kernel.gram_error
        )));
    }
    Ok(kernel)
}

/// Kernel of the ensemble (ws, n⃗), with moments in the hull variable.
pub fn kernel(ws: &WeightSystem, nvec: &MultiIndex) -> Result<Kernel> {
    nvec.check(ws.p())?;
    let mt = MomentTable::scaled(ws, moment_order(nvec))?;
    biorthogonalize(&block_hankel(&mt, nvec)?, ws, nvec)
}

/// max |G − I|.
pub fn gram_deviation(g: &Mat<Dd>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..g.rows() {
        for k in 0..g.cols() {
            let target = if i == k { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, k)].to_f64() - target).abs());
        }
    }
    worst
}

impl Kernel {
    pub fn n(&self) -> usize {
        self.phi.rows()
    }

    /// ∫ φ_i ψ_k dx = (Φ M Ψᵀ)_ik for the moment matrix `m` of the same bases.
    pub fn gram_from(&self, m: &HankelBlockMatrix) -> Mat<Dd> {
        self.phi.mul(&m.matrix).mul(&self.psi.transpose())
    }

    fn powers<R: Real>(&self, x: R) -> Vec<R> {
        let t = self.map.to_t(x);
        let mut out = Vec::with_capacity(self.n());
        let mut v = R::one();
        for _ in 0..self.n() {
            out.push(v);
            v *= t;
        }
        out
    }

    /// g̃_k(y) for k = 0..n-1.
    pub fn g_values<R: Real>(&self, y: R) -> Vec<R> {
        let t = self.map.to_t(y);
        let mut out = vec![R::zero(); self.n()];
        for j in 0..self.nvec.p() {
            let block = self.nvec.block(j);
            if block.is_empty() {
                continue;
            }
            let w: R = self.ws.eval(j, y);
            let mut v = w;
            for k in block {
                out[k] = v;
                v *= t;
            }
        }
        out
    }

    /// φ_1(x)..φ_n(x).
    pub fn phi_values<R: Real>(&self, x: R) -> Vec<R> {
        apply(&self.phi, &self.powers(x))
    }

    /// ψ_1(y)..ψ_n(y).
    pub fn psi_values<R: Real>(&self, y: R) -> Vec<R> {
        apply(&self.psi, &self.g_values(y))
    }

    pub fn eval<R: Real>(&self, x: R, y: R) -> R {
        let a = self.phi_values(x);
        let b = self.psi_values(y);
        a.into_iter().zip(b).fold(R::zero(), |s, (u, v)| s + u * v)
    }

    /// k_j(x,y) with K(x,y) = Σ_j w_j(y) k_j(x,y).
    fn split<R: Real>(&self, x: R, y: R) -> Vec<R> {
        let a = self.phi_values(x);
        let t = self.map.to_t(y);
        (0..self.nvec.p())
            .map(|j| {
                let mut s = R::zero();
                let mut tp = R::one();
                for k in self.nvec.block(j) {
                    let mut c = R::zero();
                    for (i, ai) in a.iter().enumerate() {
                        c += *ai * R::from_dd(self.psi[(i, k)]);
                    }
                    s += c * tp;
                    tp *= t;
                }
                s
            })
            .collect()
    }

    /// Applies Σ_j ∫ w_j(y) F_j(y) dy for a vector-valued F built per weight.
    fn integrate_split<F>(&self, dim: usize, mut f: F) -> Result<Vec<Dd>>
    where
        F: FnMut(usize, Dd, &mut [Dd]),
    {
        let mut total = vec![Dd::ZERO; dim];
        for j in 0..self.nvec.p() {
            if self.nvec.parts()[j] == 0 {
                continue;
            }
            let part = self.ws.weights[j].integrate(
                |y: Dd, out: &mut [Dd]| f(j, y, out),
                dim,
                KERNEL_QUAD_TOL,
                RulePair::ALTERNATE,
            )?;
            for (s, v) in total.iter_mut().zip(part) {
                *s += v;
            }
        }
        Ok(total)
    }

    /// ∫ K(x,x) dx.
    pub fn trace(&self) -> Result<f64> {
        let r = self.integrate_split(1, |j, x, out| out[0] = self.split(x, x)[j])?;
        Ok(r[0].to_f64())
    }

    /// ∫ K(x,y) K(y,z) dy for each pair (x, z).
    pub fn reproduce(&self, pairs: &[(f64, f64)]) -> Result<Vec<f64>> {
        let r = self.integrate_split(pairs.len(), |j, y, out| {
            for (o, &(x, z)) in out.iter_mut().zip(pairs) {
                *o = self.split(Dd::from_f64(x), y)[j] * self.eval(y, Dd::from_f64(z));
            }
        })?;
        Ok(r.into_iter().map(|v| v.to_f64()).collect())
    }

    /// ∫ φ_i ψ_k dx by direct quadrature of the products.
    pub fn gram_quadrature(&self) -> Result<Mat<Dd>> {
        let n = self.n();
        let r = self.integrate_split(n * n, |j, x, out| {
            let a = self.phi_values(x);
            let t = self.map.to_t(x);
            let block = self.nvec.block(j);
            let mut tl = vec![Dd::ZERO; self.n()];
            let mut tp = Dd::ONE;
            for k in block {
                tl[k] = tp;
                tp *= t;
            }
            let b = apply(&self.psi, &tl);
            for i in 0..n {
                for k in 0..n {
                    out[i * n + k] = a[i] * b[k];
                }
            }
        })?;
        Ok(Mat::from_fn(n, n, |i, k| r[i * n + k]))
    }

    /// ∫ K(x,x)/n dx.
    pub fn density_mass(&self) -> Result<f64> {
        Ok(self.trace()? / self.n() as f64)
    }
}

fn apply<R: Real>(m: &Mat<Dd>, v: &[R]) -> Vec<R> {
    (0..m.rows())
        .map(|i| {
            m.row(i)
                .iter()
                .zip(v)
                .fold(R::zero(), |s, (c, x)| s + R::from_dd(*c) * *x)
        })
        .collect()
}

/// K_n(x,y) as the biorthogonal sum.
pub fn kernel_eval(k: &Kernel, x: f64, y: f64) -> f64 {
    k.eval(Dd::from_f64(x), Dd::from_f64(y)).to_f64()
}

/// K_n(x,y) = −det[[M, f(x)], [g(y)ᵀ, 0]] / det M.
pub fn kernel_eval_bordered(
    m: &HankelBlockMatrix,
    ws: &WeightSystem,
    nvec: &MultiIndex,
    x: f64,
    y: f64,
) -> Result<f64> {
    let n = nvec.check(ws.p())?;
    if m.n() != n {
        return Err(Error::InvalidArgument(
            "moment matrix was built for a different multi-index".into(),
        ));
    }
    let lu = Lu::new(&m.matrix);
    if lu.is_singular() {
        return Err(non_normal(nvec, f64::INFINITY));
    }
    let xd = Dd::from_f64(x);
    let yd = Dd::from_f64(y);
    let tx = m.map.to_t(xd);
    let ty = m.map.to_t(yd);
    let mut b = Mat::<Dd>::zeros(n + 1, n + 1);
    let mut v = Dd::ONE;
    for r in 0..n {
        for c in 0..n {
            b[(r, c)] = m.matrix[(r, c)];
        }
        b[(r, n)] = v;
        v *= tx;
    }
    for j in 0..nvec.p() {
        let w: Dd = ws.eval(j, yd);
        let mut v = w;
        for k in nvec.block(j) {
            b[(n, k)] = v;
            v *= ty;
        }
    }
    Ok((-Lu::new(&b).det() / lu.det()).to_f64())
}

/// K_n(x,x)/n.
pub fn mean_density(k: &Kernel, x: f64) -> f64 {
    kernel_eval(k, x, x) / k.n() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{build_angelesco, build_nikishin, WeightSpec};
    use approx::assert_abs_diff_eq;

    fn legendre() -> WeightSystem {
        WeightSystem::general(vec![WeightSpec::constant(-1.0, 1.0).unwrap()]).unwrap()
    }

    fn angelesco() -> WeightSystem {
        build_angelesco(vec![
            WeightSpec::constant(-1.0, 0.0).unwrap(),
            WeightSpec::constant(0.0, 1.0).unwrap(),
        ])
        .unwrap()
    }

    fn nikishin() -> WeightSystem {
        build_nikishin(
            WeightSpec::constant(1.0, 2.0).unwrap(),
            vec![WeightSpec::constant(-1.0, 0.0).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn single_point_uniform() {
        let k = kernel(&legendre(), &MultiIndex::new(vec![1])).unwrap();
        for &x in &[-0.9, 0.0, 0.4] {
            assert_abs_diff_eq!(k.phi_values(x)[0], 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(k.psi_values(x)[0], 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(kernel_eval(&k, x, 0.3), 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(mean_density(&k, x), 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn legendre_matches_orthonormal_sum() {
        // Σ p_k(x) p_k(y) w(y) with orthonormal Legendre p_k.
        let n = 5;
        let k = kernel(&legendre(), &MultiIndex::new(vec![n])).unwrap();
        let mut px = vec![0.0; n];
        let mut py = vec![0.0; n];
        for &(x, y) in &[(0.1, -0.7), (0.9, 0.9), (-0.3, 0.55)] {
            crate::poly::legendre_values(x, n, &mut px);
            crate::poly::legendre_values(y, n, &mut py);
            let expected: f64 = (0..n)
                .map(|j| (2 * j + 1) as f64 / 2.0 * px[j] * py[j])
                .sum();
            assert_abs_diff_eq!(kernel_eval(&k, x, y), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn gram_and_trace() {
        for (ws, nvec) in [
            (legendre(), vec![6]),
            (angelesco(), vec![3, 2]),
            (nikishin(), vec![3, 3]),
        ] {
            let nvec = MultiIndex::new(nvec);
            let k = kernel(&ws, &nvec).unwrap();
            assert!(k.gram_error <= 1e-12, "{}", k.gram_error);
            let g = k.gram_quadrature().unwrap();
            assert!(gram_deviation(&g) <= 1e-12);
            assert_abs_diff_eq!(k.trace().unwrap(), nvec.total() as f64, epsilon = 1e-10);
        }
    }

    #[test]
    fn bordered_agrees() {
        let ws = nikishin();
        let nvec = MultiIndex::new(vec![2, 2]);
        let mt = MomentTable::scaled(&ws, 8).unwrap();
        let m = block_hankel(&mt, &nvec).unwrap();
        let k = biorthogonalize(&m, &ws, &nvec).unwrap();
        for &(x, y) in &[(1.1, 1.9), (1.5, 1.5), (1.95, 1.02)] {
            let a = kernel_eval(&k, x, y);
            let b = kernel_eval_bordered(&m, &ws, &nvec, x, y).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn reproducing_property() {
        let ws = angelesco();
        let k = kernel(&ws, &MultiIndex::new(vec![2, 2])).unwrap();
        let pairs = [(-0.5, 0.3), (0.8, -0.1), (0.2, 0.2)];
        let r = k.reproduce(&pairs).unwrap();
        for (v, &(x, z)) in r.iter().zip(&pairs) {
            assert_abs_diff_eq!(*v, kernel_eval(&k, x, z), epsilon = 1e-12);
        }
    }

    #[test]
    fn mismatched_matrix_is_rejected() {
        let ws = legendre();
        let mt = MomentTable::scaled(&ws, 8).unwrap();
        let m = block_hankel(&mt, &MultiIndex::new(vec![2])).unwrap();
        assert!(biorthogonalize(&m, &ws, &MultiIndex::new(vec![3])).is_err());
    }
}
