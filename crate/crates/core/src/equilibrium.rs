//! Vector equilibrium problems with Angelesco and Nikishin interaction
//! matrices, discretized on fixed midpoint grids.
//!
//! The discrete energy of masses m on the grids is Σ_jk c_jk m_jᵀ K_jk m_k +
//! Σ_j V_jᵀ m_j, where K_jk[a][b] is the mean of ln 1/|x − y| over the two
//! grid cells (mass spread uniformly over each cell). Atomic measures use
//! plain point distances.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::weights::Interval;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    /// Sorted support points.
    pub grid: Vec<f64>,
    pub masses: Vec<f64>,
    pub total_mass: f64,
    /// Width of the cell around each node; 0 for atomic measures.
    pub cell_width: f64,
}

impl DiscreteMeasure {
    pub fn new(grid: Vec<f64>, masses: Vec<f64>, cell_width: f64) -> Result<Self> {
        if grid.len() != masses.len() {
            return Err(Error::InvalidArgument(format!(
                "{} grid points but {} masses",
                grid.len(),
                masses.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::InvalidArgument("grid must be sorted".into()));
        }
        if masses.iter().any(|m| !(*m >= 0.0)) {
            return Err(Error::InvalidArgument("masses must be nonnegative".into()));
        }
        let total_mass = masses.iter().sum();
        Ok(Self {
            grid,
            masses,
            total_mass,
            cell_width,
        })
    }

    /// Midpoints of m equal cells of `iv`, carrying `mass` uniformly. The
    /// nodes of mirrored intervals are exact mirror images.
    pub fn uniform(iv: Interval, m: usize, mass: f64) -> Self {
        let h = iv.length() / m as f64;
        let mf = m as f64;
        Self {
            grid: (0..m)
                .map(|i| {
                    let s = i as f64 + 0.5;
                    ((mf - s) * iv.a + s * iv.b) / mf
                })
                .collect(),
            masses: vec![mass / m as f64; m],
            total_mass: mass,
            cell_width: h,
        }
    }

    pub fn zero() -> Self {
        Self {
            grid: Vec::new(),
            masses: Vec::new(),
            total_mass: 0.0,
            cell_width: 0.0,
        }
    }

    /// Mass per unit length (only meaningful for grid measures).
    pub fn density(&self) -> Vec<f64> {
        self.masses.iter().map(|m| m / self.cell_width).collect()
    }

    /// Cumulative masses at the grid points.
    pub fn cdf(&self) -> Vec<f64> {
        let mut s = 0.0;
        self.masses
            .iter()
            .map(|m| {
                s += m;
                s
            })
            .collect()
    }

    /// Image under x ↦ −x.
    pub fn reflected(&self) -> Self {
        Self {
            grid: self.grid.iter().rev().map(|x| -x).collect(),
            masses: self.masses.iter().rev().copied().collect(),
            total_mass: self.total_mass,
            cell_width: self.cell_width,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            masses: self.masses.iter().map(|m| m * c).collect(),
            total_mass: self.total_mass * c,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionKind {
    Angelesco,
    Nikishin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionMatrix {
    pub c: Vec<Vec<f64>>,
}

impl InteractionMatrix {
    /// Checks symmetry and positive definiteness.
    pub fn new(c: Vec<Vec<f64>>) -> Result<Self> {
        let p = c.len();
        if p == 0 || c.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidArgument("interaction matrix must be square and nonempty".into()));
        }
        for i in 0..p {
            for j in 0..i {
                if c[i][j] != c[j][i] {
                    return Err(Error::InvalidArgument("interaction matrix must be symmetric".into()));
                }
            }
        }
        let m = Self { c };
        let l = m.min_eigenvalue();
        if !(l > 0.0) {
            return Err(Error::NotPositiveDefinite(l));
        }
        Ok(m)
    }

    pub fn p(&self) -> usize {
        self.c.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let p = self.p();
        let m = DMatrix::from_fn(p, p, |i, j| self.c[i][j]);
        m.symmetric_eigenvalues().min()
    }
}

/// 1 on the diagonal; 1/2 (Angelesco) everywhere else, or −1/2 (Nikishin)
/// on the two neighbouring diagonals.
pub fn interaction_matrix(kind: InteractionKind, p: usize) -> Result<InteractionMatrix> {
    if p == 0 {
        return Err(Error::InvalidArgument("p must be at least 1".into()));
    }
    let c = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| match (kind, i.abs_diff(j)) {
                    (_, 0) => 1.0,
                    (InteractionKind::Angelesco, _) => 0.5,
                    (InteractionKind::Nikishin, 1) => -0.5,
                    (InteractionKind::Nikishin, _) => 0.0,
                })
                .collect()
        })
        .collect();
    InteractionMatrix::new(c)
}

/// Second antiderivative of ln|u| vanishing at 0.
fn log_antiderivative2(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u * u * (0.5 * u.abs().ln() - 0.75)
    }
}

/// Mean of ln 1/|s − t| for s, t uniform on cells of widths hx, hy centred
/// at x, y. Far apart cells use the moment expansion, which avoids the
/// cancellation of the closed form.
pub fn cell_log_kernel(x: f64, hx: f64, y: f64, hy: f64) -> f64 {
    let d = x - y;
    if d.abs() > 20.0 * (hx + hy) {
        let (hx2, hy2) = (hx * hx, hy * hy);
        let m2 = (hx2 + hy2) / 12.0;
        let m4 = (hx2 * hx2 + hy2 * hy2) / 80.0 + hx2 * hy2 / 24.0;
        let d2 = d * d;
        return -(d.abs().ln() - m2 / (2.0 * d2) - m4 / (4.0 * d2 * d2));
    }
    let g = log_antiderivative2;
    let (a1, a2) = (x - 0.5 * hx, x + 0.5 * hx);
    let (b1, b2) = (y - 0.5 * hy, y + 0.5 * hy);
    -(g(a2 - b1) - g(a1 - b1) - g(a2 - b2) + g(a1 - b2)) / (hx * hy)
}

/// ln 1/|x − y| for atoms, the cell mean when both measures live on cells.
fn pair_kernel(x: f64, hx: f64, y: f64, hy: f64) -> Option<f64> {
    if hx > 0.0 && hy > 0.0 {
        return Some(cell_log_kernel(x, hx, y, hy));
    }
    let d = (x - y).abs();
    (d > 0.0).then(|| -d.ln())
}

/// Σ_a Σ_b μ_a ν_b ln 1/|x_a − y_b|. With `exclude_diagonal` and μ = ν the
/// self-pairs a = b are skipped (the reduced energy of a point measure).
pub fn log_energy(mu: &DiscreteMeasure, nu: &DiscreteMeasure, exclude_diagonal: bool) -> Result<f64> {
    let same = exclude_diagonal && mu.grid == nu.grid;
    let mut s = 0.0;
    for (a, (&x, &ma)) in mu.grid.iter().zip(&mu.masses).enumerate() {
        if ma == 0.0 {
            continue;
        }
        for (b, (&y, &nb)) in nu.grid.iter().zip(&nu.masses).enumerate() {
            if nb == 0.0 || (same && a == b) {
                continue;
            }
            let k = pair_kernel(x, mu.cell_width, y, nu.cell_width).ok_or(Error::SingularEnergy(x))?;
            s += ma * nb * k;
        }
    }
    Ok(s)
}

/// Σ_j Σ_k c_jk I(μ_j, μ_k) + Σ_j ∫ V_j dμ_j.
pub fn energy_functional(
    measures: &[DiscreteMeasure],
    c: &InteractionMatrix,
    fields: &[Option<Polynomial>],
) -> Result<f64> {
    let p = c.p();
    if measures.len() != p || !(fields.is_empty() || fields.len() == p) {
        return Err(Error::InvalidArgument(format!(
            "{} measures and {} fields for a {p}×{p} interaction matrix",
            measures.len(),
            fields.len()
        )));
    }
    let mut e = 0.0;
    for j in 0..p {
        for k in 0..p {
            if c.c[j][k] != 0.0 {
                e += c.c[j][k] * log_energy(&measures[j], &measures[k], false)?;
            }
        }
        if let Some(Some(v)) = fields.get(j) {
            e += measures[j]
                .grid
                .iter()
                .zip(&measures[j].masses)
                .map(|(&x, m)| m * v.eval(x))
                .sum::<f64>();
        }
    }
    Ok(e)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquilibriumProblem {
    pub intervals: Vec<Interval>,
    pub masses: Vec<f64>,
    pub interaction: InteractionMatrix,
    /// V_j as polynomial coefficients (ascending); empty for no field.
    pub fields: Vec<Vec<f64>>,
    /// Grid points per interval.
    pub grid: usize,
    pub max_iterations: usize,
    /// Stop once the relative energy decrease of a step falls below this.
    pub tolerance: f64,
}

fn check_ray(r: &[f64]) -> Result<()> {
    if r.is_empty() || r.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) {
        return Err(Error::InvalidArgument("ray ratios must lie in (0, 1]".into()));
    }
    let s: f64 = r.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("ray ratios sum to {s}, not 1")));
    }
    Ok(())
}

impl EquilibriumProblem {
    fn with(intervals: Vec<Interval>, masses: Vec<f64>, kind: InteractionKind, grid: usize) -> Result<Self> {
        let p = intervals.len();
        Ok(Self {
            interaction: interaction_matrix(kind, p)?,
            intervals,
            masses,
            fields: vec![Vec::new(); p],
            grid,
            max_iterations: 20_000,
            tolerance: 1e-10,
        })
    }

    /// Masses μ_j(Γ_j) = r_j.
    pub fn angelesco(intervals: Vec<Interval>, r: &[f64], grid: usize) -> Result<Self> {
        check_ray(r)?;
        if intervals.len() != r.len() {
            return Err(Error::InvalidArgument("one ratio per interval is needed".into()));
        }
        for i in 0..intervals.len() {
            for j in 0..i {
                if intervals[i].overlaps(&intervals[j]) {
                    return Err(Error::Domain(format!(
                        "Angelesco intervals {} and {} overlap",
                        intervals[j], intervals[i]
                    )));
                }
            }
        }
        Self::with(intervals, r.to_vec(), InteractionKind::Angelesco, grid)
    }

    /// Masses μ_j(Γ_j) = r_j + … + r_p.
    pub fn nikishin(intervals: Vec<Interval>, r: &[f64], grid: usize) -> Result<Self> {
        check_ray(r)?;
        if intervals.len() != r.len() {
            return Err(Error::InvalidArgument("one ratio per interval is needed".into()));
        }
        for w in intervals.windows(2) {
            if !w[0].disjoint(&w[1]) {
                return Err(Error::Domain(format!(
                    "consecutive Nikishin intervals {} and {} must be disjoint",
                    w[0], w[1]
                )));
            }
        }
        let masses = (0..r.len()).map(|j| r[j..].iter().sum()).collect();
        Self::with(intervals, masses, InteractionKind::Nikishin, grid)
    }

    pub fn p(&self) -> usize {
        self.intervals.len()
    }

    fn validate(&self) -> Result<()> {
        let p = self.p();
        if p == 0 || self.masses.len() != p || self.interaction.p() != p || self.fields.len() != p {
            return Err(Error::InvalidArgument(
                "intervals, masses, fields and interaction matrix disagree in size".into(),
            ));
        }
        if self.masses.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::InvalidArgument("masses must be positive".into()));
        }
        if self.grid < 2 {
            return Err(Error::InvalidArgument("grid needs at least 2 points".into()));
        }
        let l = self.interaction.min_eigenvalue();
        if !(l > 0.0) {
            return Err(Error::NotPositiveDefinite(l));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub energy: f64,
    pub iterations: usize,
    /// max_j of (mass-weighted mean − minimum) of the effective potential.
    pub kkt_residual: f64,
    pub converged: bool,
    pub grid: usize,
    /// Energy after each accepted step.
    #[serde(skip)]
    pub energy_trace: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct EquilibriumSolution {
    pub measures: Vec<DiscreteMeasure>,
    pub report: EquilibriumReport,
}

/// Assembled quadratic form over the stacked grid.
struct Discretized {
    nodes: Vec<f64>,
    /// Offsets of the components in the stacked vector.
    offsets: Vec<usize>,
    /// Row-major (c_jk K_jk) blocks.
    a: Vec<f64>,
    v: Vec<f64>,
}

impl Discretized {
    fn new(prob: &EquilibriumProblem) -> Self {
        let p = prob.p();
        let m = prob.grid;
        let grids: Vec<DiscreteMeasure> = prob
            .intervals
            .iter()
            .map(|iv| DiscreteMeasure::uniform(*iv, m, 1.0))
            .collect();
        let nodes: Vec<f64> = grids.iter().flat_map(|g| g.grid.iter().copied()).collect();
        let comp: Vec<usize> = (0..p).flat_map(|j| std::iter::repeat_n(j, m)).collect();
        let cells: Vec<f64> = grids.iter().map(|g| g.cell_width).collect();
        let total = nodes.len();
        let mut a = vec![0.0; total * total];
        a.par_chunks_mut(total).enumerate().for_each(|(r, row)| {
            for (s, out) in row.iter_mut().enumerate() {
                let c = prob.interaction.c[comp[r]][comp[s]];
                if c == 0.0 {
                    continue;
                }
                *out = c * cell_log_kernel(nodes[r], cells[comp[r]], nodes[s], cells[comp[s]]);
            }
        });
        let v = nodes
            .iter()
            .zip(&comp)
            .map(|(&x, &j)| Polynomial::new(prob.fields[j].clone()).eval(x))
            .collect();
        Self {
            nodes,
            offsets: (0..=p).map(|j| j * m).collect(),
            a,
            v,
        }
    }

    /// Effective potential 2 A m + V.
    fn gradient(&self, m: &[f64]) -> Vec<f64> {
        let total = m.len();
        self.a
            .par_chunks(total)
            .zip(&self.v)
            .map(|(row, v)| 2.0 * row.iter().zip(m).map(|(a, x)| a * x).sum::<f64>() + v)
            .collect()
    }

    /// mᵀ A m + Vᵀ m from the gradient at m.
    fn energy(&self, m: &[f64], g: &[f64]) -> f64 {
        m.iter()
            .zip(g)
            .zip(&self.v)
            .map(|((x, g), v)| 0.5 * x * (g + v))
            .sum()
    }

    fn component<'a, T>(&self, x: &'a [T], j: usize) -> &'a [T] {
        &x[self.offsets[j]..self.offsets[j + 1]]
    }
}

fn kkt_residual(d: &Discretized, m: &[f64], g: &[f64]) -> f64 {
    let p = d.offsets.len() - 1;
    (0..p)
        .map(|j| {
            let mj = d.component(m, j);
            let gj = d.component(g, j);
            let mass: f64 = mj.iter().sum();
            let mean = mj.iter().zip(gj).map(|(a, b)| a * b).sum::<f64>() / mass;
            let min = gj.iter().copied().fold(f64::INFINITY, f64::min);
            mean - min
        })
        .fold(0.0, f64::max)
}

/// Exponentiated-gradient step on each component simplex.
fn mirror_step(d: &Discretized, masses: &[f64], m: &[f64], g: &[f64], eta: f64) -> Vec<f64> {
    let mut out = vec![0.0; m.len()];
    for (j, &mass) in masses.iter().enumerate() {
        let r = d.offsets[j]..d.offsets[j + 1];
        let gmin = g[r.clone()].iter().copied().fold(f64::INFINITY, f64::min);
        let mut s = 0.0;
        for i in r.clone() {
            out[i] = m[i] * (-eta * (g[i] - gmin) / mass).exp();
            s += out[i];
        }
        for i in r {
            out[i] *= mass / s;
        }
    }
    out
}

/// Minimizes the discretized energy over nonnegative masses with fixed
/// component totals.
pub fn minimize_equilibrium(prob: &EquilibriumProblem) -> Result<EquilibriumSolution> {
    prob.validate()?;
    let d = Discretized::new(prob);
    let p = prob.p();
    let mut m: Vec<f64> = (0..p)
        .flat_map(|j| std::iter::repeat_n(prob.masses[j] / prob.grid as f64, prob.grid))
        .collect();
    let mut g = d.gradient(&m);
    let mut e = d.energy(&m, &g);
    let mut eta = 1.0;
    let mut trace = vec![e];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < prob.max_iterations {
        iterations += 1;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = mirror_step(&d, &prob.masses, &m, &g, eta);
            let tg = d.gradient(&trial);
            let te = d.energy(&trial, &tg);
            if te <= e {
                accepted = Some((trial, tg, te));
                break;
            }
            eta *= 0.5;
        }
        let Some((nm, ng, ne)) = accepted else {
            converged = true;
            break;
        };
        let decrease = (e - ne) / e.abs().max(1.0);
        m = nm;
        g = ng;
        e = ne;
        trace.push(e);
        eta *= 1.5;
        if decrease < prob.tolerance {
            converged = true;
            break;
        }
    }
    let kkt = kkt_residual(&d, &m, &g);
    let h: Vec<f64> = prob.intervals.iter().map(|iv| iv.length() / prob.grid as f64).collect();
    let measures = (0..p)
        .map(|j| DiscreteMeasure {
            grid: d.component(&d.nodes, j).to_vec(),
            masses: d.component(&m, j).to_vec(),
            total_mass: prob.masses[j],
            cell_width: h[j],
        })
        .collect();
    Ok(EquilibriumSolution {
        measures,
        report: EquilibriumReport {
            energy: e,
            iterations,
            kkt_residual: kkt,
            converged,
            grid: prob.grid,
            energy_trace: trace,
        },
    })
}

/// Normalized zero counting measures: mass 1/n at each root, split by the
/// interval containing it (within `eps` of its endpoints).
pub fn zero_counting_measure(roots: &[f64], n: usize, intervals: &[Interval], eps: f64) -> Result<Vec<DiscreteMeasure>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let mut parts: Vec<Vec<f64>> = vec![Vec::new(); intervals.len()];
    for &x in roots {
        let j = intervals
            .iter()
            .position(|iv| x >= iv.a - eps && x <= iv.b + eps)
            .ok_or_else(|| Error::Domain(format!("root {x} lies outside every interval")))?;
        parts[j].push(x);
    }
    parts
        .into_iter()
        .map(|mut xs| {
            xs.sort_by(f64::total_cmp);
            let k = xs.len();
            DiscreteMeasure::new(xs, vec![1.0 / n as f64; k], 0.0)
        })
        .collect()
}

/// sup_x |μ((−∞, x]) − ν((−∞, x])|. Grid measures spread each mass over
/// its cell, so their distribution functions are piecewise linear; atoms
/// give steps and are compared from both sides. Points closer than a few
/// ulps are treated as one.
pub fn kolmogorov_distance(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    if (mu.total_mass - nu.total_mass).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "total masses differ: {} vs {}",
            mu.total_mass, nu.total_mass
        )));
    }
    let (pm, pn) = (mu.prefix_masses(), nu.prefix_masses());
    let mut sup: f64 = 0.0;
    for x in mu.breakpoints().into_iter().chain(nu.breakpoints()) {
        let e = 8.0 * f64::EPSILON * x.abs().max(1.0);
        for y in [x - e, x + e] {
            sup = sup.max((mu.cdf_with(&pm, y) - nu.cdf_with(&pn, y)).abs());
        }
    }
    Ok(sup)
}

impl DiscreteMeasure {
    fn prefix_masses(&self) -> Vec<f64> {
        std::iter::once(0.0).chain(self.cdf()).collect()
    }

    fn breakpoints(&self) -> Vec<f64> {
        let h = 0.5 * self.cell_width;
        if h == 0.0 {
            return self.grid.clone();
        }
        self.grid.iter().flat_map(|&x| [x - h, x + h]).collect()
    }

    /// μ((−∞, x]) given the prefix sums of the masses.
    fn cdf_with(&self, prefix: &[f64], x: f64) -> f64 {
        let h = 0.5 * self.cell_width;
        let idx = self.grid.partition_point(|&c| c - h <= x);
        let mut f = prefix[idx];
        if h > 0.0 {
            // Cells that start left of x but end right of it count partly.
            for i in (0..idx).rev() {
                let c = self.grid[i];
                if c + h <= x {
                    break;
                }
                f -= self.masses[i] * (c + h - x) / (2.0 * h);
            }
        }
        f
    }

    /// μ((−∞, x]).
    pub fn cdf_at(&self, x: f64) -> f64 {
        self.cdf_with(&self.prefix_masses(), x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn atoms(x: &[f64], m: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::new(x.to_vec(), m.to_vec(), 0.0).unwrap()
    }

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn interaction_examples() {
        let a = interaction_matrix(InteractionKind::Angelesco, 2).unwrap();
        assert_eq!(a.c, vec![vec![1.0, 0.5], vec![0.5, 1.0]]);
        let n = interaction_matrix(InteractionKind::Nikishin, 3).unwrap();
        assert_eq!(
            n.c,
            vec![vec![1.0, -0.5, 0.0], vec![-0.5, 1.0, -0.5], vec![0.0, -0.5, 1.0]]
        );
        for kind in [InteractionKind::Angelesco, InteractionKind::Nikishin] {
            assert_eq!(interaction_matrix(kind, 1).unwrap().c, vec![vec![1.0]]);
        }
        assert!(matches!(
            InteractionMatrix::new(vec![vec![1.0, 2.0], vec![2.0, 1.0]]),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn nikishin_smallest_eigenvalue() {
        for p in 1..=10 {
            let m = interaction_matrix(InteractionKind::Nikishin, p).unwrap();
            let expected = 1.0 - (std::f64::consts::PI / (p + 1) as f64).cos();
            assert_abs_diff_eq!(m.min_eigenvalue(), expected, epsilon = 1e-12);
            assert!(interaction_matrix(InteractionKind::Angelesco, p).unwrap().min_eigenvalue() > 0.0);
        }
    }

    #[test]
    fn log_energy_examples() {
        let mu = atoms(&[0.0, 1.0], &[1.0, 1.0]);
        assert_eq!(log_energy(&mu, &mu, true).unwrap(), 0.0);
        let nu = atoms(&[3.0], &[1.0]);
        assert_abs_diff_eq!(log_energy(&mu, &nu, false).unwrap(), -(6.0f64).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            log_energy(&mu.scaled(3.0), &nu.scaled(3.0), false).unwrap(),
            -9.0 * (6.0f64).ln(),
            epsilon = 1e-13
        );
        assert!(matches!(log_energy(&mu, &mu, false), Err(Error::SingularEnergy(_))));
    }

    #[test]
    fn cell_kernel_values() {
        // Uniform unit mass on a cell of width h: I = ln(1/h) + 3/2.
        let mu = DiscreteMeasure::new(vec![0.0], vec![1.0], 0.2).unwrap();
        assert_abs_diff_eq!(log_energy(&mu, &mu, false).unwrap(), -(0.2f64).ln() + 1.5, epsilon = 1e-14);
        // Both branches agree where they meet, and approach the point kernel.
        let (h, d) = (0.01, 0.4);
        let near = cell_log_kernel(0.0, h, d - 1e-12, h);
        let far = cell_log_kernel(0.0, h, d + 1e-12, h);
        assert_abs_diff_eq!(near, far, epsilon = 1e-11);
        assert_abs_diff_eq!(cell_log_kernel(0.0, 1e-6, 2.0, 1e-6), -(2f64).ln(), epsilon = 1e-12);
    }

    #[test]
    fn functional_expansions() {
        let m1 = DiscreteMeasure::uniform(iv(-1.0, 0.0), 7, 0.5);
        let m2 = DiscreteMeasure::uniform(iv(0.0, 1.0), 5, 0.5);
        let m3 = DiscreteMeasure::uniform(iv(2.0, 3.0), 4, 0.25);
        let i = |a: &DiscreteMeasure, b: &DiscreteMeasure| log_energy(a, b, false).unwrap();
        let a = interaction_matrix(InteractionKind::Angelesco, 2).unwrap();
        let e = energy_functional(&[m1.clone(), m2.clone()], &a, &[]).unwrap();
        assert_abs_diff_eq!(e, i(&m1, &m1) + i(&m2, &m2) + i(&m1, &m2), epsilon = 1e-14);
        let n = interaction_matrix(InteractionKind::Nikishin, 3).unwrap();
        let ms = [m1.clone(), m2.clone(), m3.clone()];
        let e = energy_functional(&ms, &n, &[]).unwrap();
        let explicit = i(&m1, &m1) + i(&m2, &m2) + i(&m3, &m3) - i(&m1, &m2) - i(&m2, &m3);
        assert_abs_diff_eq!(e, explicit, epsilon = 1e-14);
        let one = interaction_matrix(InteractionKind::Angelesco, 1).unwrap();
        let field = Some(Polynomial::new(vec![0.0, 0.0, 1.0]));
        let e = energy_functional(&[m1.clone()], &one, &[field]).unwrap();
        let vint: f64 = m1.grid.iter().zip(&m1.masses).map(|(x, m)| m * x * x).sum();
        assert_abs_diff_eq!(e, i(&m1, &m1) + vint, epsilon = 1e-14);
        assert!(energy_functional(&[m1], &a, &[]).is_err());
    }

    #[test]
    fn kolmogorov_examples() {
        let a = atoms(&[0.0, 1.0], &[0.5, 0.5]);
        assert_eq!(kolmogorov_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(kolmogorov_distance(&atoms(&[0.0], &[1.0]), &atoms(&[1.0], &[1.0])).unwrap(), 1.0);
        assert_eq!(kolmogorov_distance(&a, &atoms(&[0.5, 1.0], &[0.5, 0.5])).unwrap(), 0.5);
        assert!(kolmogorov_distance(&a, &atoms(&[0.0], &[2.0])).is_err());
        // Uniform on [0, 1] as one cell against an atom at 1/2.
        let cell = DiscreteMeasure::new(vec![0.5], vec![1.0], 1.0).unwrap();
        assert_abs_diff_eq!(kolmogorov_distance(&cell, &atoms(&[0.5], &[1.0])).unwrap(), 0.5, epsilon = 1e-12);
        let fine = DiscreteMeasure::uniform(iv(0.0, 1.0), 10, 1.0);
        assert!(kolmogorov_distance(&cell, &fine).unwrap() < 1e-12);
        assert_abs_diff_eq!(fine.cdf_at(0.25), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn zero_counting_examples() {
        let r = 1.0 / 3f64.sqrt();
        let ivs = [iv(-1.0, 0.0), iv(0.0, 1.0)];
        let nu = zero_counting_measure(&[-r, r], 2, &ivs, 1e-12).unwrap();
        assert_eq!(nu[0].grid, vec![-r]);
        assert_eq!(nu[1].masses, vec![0.5]);
        let nu = zero_counting_measure(&[-0.5, -0.2], 2, &ivs, 1e-12).unwrap();
        assert_eq!(nu[1].total_mass, 0.0);
        assert_eq!(nu.iter().map(|m| m.total_mass).sum::<f64>(), 1.0);
        assert!(zero_counting_measure(&[1.5], 1, &ivs, 1e-12).is_err());
    }

    #[test]
    fn arcsine_law() {
        let prob = EquilibriumProblem::angelesco(vec![iv(-1.0, 1.0)], &[1.0], 400).unwrap();
        let sol = minimize_equilibrium(&prob).unwrap();
        let mu = &sol.measures[0];
        let cdf = mu.cdf();
        let h = mu.cell_width;
        let err = mu
            .grid
            .iter()
            .zip(&cdf)
            .map(|(x, f)| (f - (0.5 + (x + 0.5 * h).asin() / std::f64::consts::PI)).abs())
            .fold(0.0, f64::max);
        // Coarse grid: the endpoint cells dominate the error.
        assert!(err < 2e-2, "{err}");
        assert!(sol.report.kkt_residual <= 10.0 * h, "{:?}", sol.report);
        assert!(sol.report.energy_trace.windows(2).all(|w| w[1] <= w[0]));
        // I(arcsine on [-1, 1]) = ln 2
        assert_abs_diff_eq!(sol.report.energy, 2f64.ln(), epsilon = 2e-2);
    }

    #[test]
    fn symmetric_angelesco_is_reflection_invariant() {
        let prob = EquilibriumProblem::angelesco(vec![iv(-1.0, 0.0), iv(0.0, 1.0)], &[0.5, 0.5], 200).unwrap();
        let sol = minimize_equilibrium(&prob).unwrap();
        let d = kolmogorov_distance(&sol.measures[0].reflected(), &sol.measures[1]).unwrap();
        assert!(d <= 1e-3, "{d}");
    }

    #[test]
    fn nikishin_masses_and_refinement() {
        let solve = |m| {
            let prob = EquilibriumProblem::nikishin(vec![iv(1.0, 2.0), iv(-1.0, 0.0)], &[0.5, 0.5], m).unwrap();
            minimize_equilibrium(&prob).unwrap()
        };
        // A cell next to a square-root endpoint singularity holds O(√h) mass,
        // which bounds how close grid measures of different widths can be.
        let coarse = solve(100);
        let fine = solve(400);
        assert!(fine.report.converged);
        for j in 0..2 {
            assert_abs_diff_eq!(fine.measures[j].masses.iter().sum::<f64>(), [1.0, 0.5][j], epsilon = 1e-12);
            assert!(kolmogorov_distance(&coarse.measures[j], &fine.measures[j]).unwrap() <= 5e-2);
        }
        assert!(fine.report.kkt_residual <= 10.0 * fine.measures[0].cell_width);
    }

    #[test]
    fn doubling_masses_quadruples_energy() {
        let mut prob = EquilibriumProblem::angelesco(vec![iv(-1.0, 0.0), iv(0.0, 1.0)], &[0.5, 0.5], 100).unwrap();
        let e1 = minimize_equilibrium(&prob).unwrap().report.energy;
        prob.masses = vec![1.0, 1.0];
        let e2 = minimize_equilibrium(&prob).unwrap().report.energy;
        assert_abs_diff_eq!(e2, 4.0 * e1, epsilon = 1e-6 * e1.abs().max(1.0));
    }

    #[test]
    fn problem_validation() {
        assert!(EquilibriumProblem::angelesco(vec![iv(-1.0, 0.5), iv(0.0, 1.0)], &[0.5, 0.5], 10).is_err());
        assert!(EquilibriumProblem::angelesco(vec![iv(-1.0, 0.0), iv(0.0, 1.0)], &[0.5, 0.6], 10).is_err());
        let p = EquilibriumProblem::nikishin(vec![iv(1.0, 2.0), iv(-1.0, 0.0)], &[0.5, 0.5], 10).unwrap();
        assert_eq!(p.masses, vec![1.0, 0.5]);
        let mut bad = p.clone();
        bad.interaction = InteractionMatrix { c: vec![vec![1.0, 2.0], vec![2.0, 1.0]] };
        assert!(matches!(minimize_equilibrium(&bad), Err(Error::NotPositiveDefinite(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn kolmogorov_is_a_metric(a in prop::collection::vec(0.0f64..1.0, 1..6), b in prop::collection::vec(0.0f64..1.0, 1..6)) {
            let mk = |v: &[f64]| {
                let mut x = v.to_vec();
                x.sort_by(f64::total_cmp);
                atoms(&x, &vec![1.0 / x.len() as f64; x.len()])
            };
            let (ma, mb) = (mk(&a), mk(&b));
            let d1 = kolmogorov_distance(&ma, &mb).unwrap();
            let d2 = kolmogorov_distance(&mb, &ma).unwrap();
            prop_assert!((d1 - d2).abs() < 1e-15);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&d1));
        }

        #[test]
        fn functional_matches_expansion(m in prop::collection::vec(0.0f64..1.0, 6)) {
            let g1 = vec![-0.9, -0.6, -0.2];
            let g2 = vec![0.1, 0.5, 0.8];
            let m1 = DiscreteMeasure::new(g1, m[..3].to_vec(), 0.1).unwrap();
            let m2 = DiscreteMeasure::new(g2, m[3..].to_vec(), 0.1).unwrap();
            let i = |a: &DiscreteMeasure, b: &DiscreteMeasure| log_energy(a, b, false).unwrap();
            let a = interaction_matrix(InteractionKind::Angelesco, 2).unwrap();
            let n = interaction_matrix(InteractionKind::Nikishin, 2).unwrap();
            let ms = [m1.clone(), m2.clone()];
            let ea = energy_functional(&ms, &a, &[]).unwrap();
            let en = energy_functional(&ms, &n, &[]).unwrap();
            prop_assert!((ea - (i(&m1, &m1) + i(&m2, &m2) + i(&m1, &m2))).abs() < 1e-14);
            prop_assert!((en - (i(&m1, &m1) + i(&m2, &m2) - i(&m1, &m2))).abs() < 1e-14);
        }
    }
}
