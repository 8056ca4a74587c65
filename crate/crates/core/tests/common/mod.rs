//! Test systems and oracles shared by the integration tests. The oracles
//! use closed-form weights and their own Gauss rules, not the library's
//! quadrature.

#![allow(dead_code)]

use mopkit::mop::MultiIndex;
use mopkit::DoubleDouble;
use mopkit::weights::{build_angelesco, build_nikishin, WeightSpec, WeightSystem};

pub fn legendre() -> WeightSystem {
    WeightSystem::general(vec![WeightSpec::constant(-1.0, 1.0).unwrap()]).unwrap()
}

pub fn angelesco_symmetric() -> WeightSystem {
    build_angelesco(vec![
        WeightSpec::constant(-1.0, 0.0).unwrap(),
        WeightSpec::constant(0.0, 1.0).unwrap(),
    ])
    .unwrap()
}

pub fn angelesco_gap() -> WeightSystem {
    build_angelesco(vec![
        WeightSpec::constant(-1.0, 0.0).unwrap(),
        WeightSpec::constant(0.5, 2.0).unwrap(),
    ])
    .unwrap()
}

/// w_1 = 1 on [0, 1], generator 1 on [-2, -1].
pub fn nikishin() -> WeightSystem {
    build_nikishin(
        WeightSpec::constant(0.0, 1.0).unwrap(),
        vec![WeightSpec::constant(-2.0, -1.0).unwrap()],
    )
    .unwrap()
}

/// Closed-form weights of a test system, with their supports.
pub struct Oracle {
    pub supports: Vec<(f64, f64)>,
    pub weight: fn(usize, DoubleDouble) -> DoubleDouble,
}

fn unit(_: usize, _: DoubleDouble) -> DoubleDouble {
    DoubleDouble::ONE
}

fn nikishin_weight(j: usize, x: DoubleDouble) -> DoubleDouble {
    match j {
        0 => DoubleDouble::ONE,
        // ∫_{-2}^{-1} dt / (x − t)
        _ => ((x + DoubleDouble::from_f64(2.0)) / (x + DoubleDouble::ONE)).ln(),
    }
}

pub fn legendre_oracle() -> Oracle {
    Oracle {
        supports: vec![(-1.0, 1.0)],
        weight: unit,
    }
}

pub fn angelesco_symmetric_oracle() -> Oracle {
    Oracle {
        supports: vec![(-1.0, 0.0), (0.0, 1.0)],
        weight: unit,
    }
}

pub fn angelesco_gap_oracle() -> Oracle {
    Oracle {
        supports: vec![(-1.0, 0.0), (0.5, 2.0)],
        weight: unit,
    }
}

pub fn nikishin_oracle() -> Oracle {
    Oracle {
        supports: vec![(0.0, 1.0), (0.0, 1.0)],
        weight: nikishin_weight,
    }
}

/// Gauss–Legendre nodes and weights on [a, b] by Newton iteration on P_m.
pub fn gauss_legendre(m: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(m);
    let mut ws = Vec::with_capacity(m);
    for i in 0..m {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        xs.push(0.5 * (a + b) + 0.5 * (b - a) * t);
        ws.push((b - a) / ((1.0 - t * t) * dp * dp));
    }
    (xs, ws)
}

impl Oracle {
    /// ∫ f(x) w_j(x) dx with a 64-point rule.
    pub fn integrate(&self, j: usize, f: impl Fn(f64) -> f64) -> f64 {
        let (a, b) = self.supports[j];
        let (xs, ws) = gauss_legendre(64, a, b);
        xs.iter()
            .zip(&ws)
            .map(|(&x, &w)| w * f(x) * (self.weight)(j, DoubleDouble::from_f64(x)).to_f64())
            .sum()
    }

    /// Same rule, with the integrand and the sum in double-double for
    /// integrands that cancel heavily.
    pub fn integrate_dd(&self, j: usize, f: impl Fn(DoubleDouble) -> DoubleDouble) -> DoubleDouble {
        let (a, b) = self.supports[j];
        let (xs, ws) = gauss_legendre(64, a, b);
        xs.iter().zip(&ws).fold(DoubleDouble::ZERO, |s, (&x, &w)| {
            let x = DoubleDouble::from_f64(x);
            s + DoubleDouble::from_f64(w) * f(x) * (self.weight)(j, x)
        })
    }

    pub fn moment(&self, j: usize, k: usize) -> f64 {
        self.integrate(j, |x| x.powi(k as i32))
    }

    /// g_k(x) for the k-th row of the block structure of `nvec`.
    pub fn g(&self, nvec: &MultiIndex, k: usize, x: f64) -> f64 {
        let (j, l) = nvec.locate(k).unwrap();
        let (a, b) = self.supports[j];
        if x < a || x > b {
            return 0.0;
        }
        x.powi(l as i32) * (self.weight)(j, DoubleDouble::from_f64(x)).to_f64()
    }
}

/// Determinant by cofactor expansion along the first row.
pub fn det_cofactor(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    match n {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => (0..n)
            .map(|c| {
                let minor: Vec<Vec<f64>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|&(k, _)| k != c).map(|(_, v)| *v).collect())
                    .collect();
                let s = if c % 2 == 0 { 1.0 } else { -1.0 };
                s * m[0][c] * det_cofactor(&minor)
            })
            .sum(),
    }
}

/// All multi-indices (a, b) with a ≤ a_max, b ≤ b_max and a + b ≥ 1.
pub fn pairs(a_max: usize, b_max: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for a in 0..=a_max {
        for b in 0..=b_max {
            if a + b > 0 {
                out.push(MultiIndex::new(vec![a, b]));
            }
        }
    }
    out
}

/// Pairs satisfying n_1 ≥ n_2 − 1.
pub fn nikishin_pairs(a_max: usize, b_max: usize) -> Vec<MultiIndex> {
    pairs(a_max, b_max)
        .into_iter()
        .filter(|m| m.parts()[0] + 1 >= m.parts()[1])
        .collect()
}
