//! Monte Carlo estimates of E[Π(z − x_k)] and E[Π(z − x_k)⁻¹], and the
//! deterministic quantities they estimate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::mop::TypeISystem;
use crate::quad::RulePair;
use crate::weights::WeightSystem;

use super::sampler::{batch_means_stderr, SampleBatch};

type Dd = DoubleDouble;

/// Sample mean with batch-means standard errors of its two parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub re: f64,
    pub im: f64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn mean(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn stderr(&self) -> f64 {
        self.stderr_re.hypot(self.stderr_im)
    }

    /// |mean − target| in units of the combined standard error.
    pub fn z_score(&self, target: Complex64) -> f64 {
        (self.mean() - target).norm() / self.stderr()
    }

    pub fn within(&self, target: Complex64, k: f64) -> bool {
        let d = (self.mean() - target).norm();
        d <= k * self.stderr() || d == 0.0
    }
}

fn estimate(batch: &SampleBatch, f: impl Fn(&[f64]) -> Complex64) -> Result<Estimate> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty sample batch".into()));
    }
    let vals: Vec<Complex64> = batch.configurations.iter().map(|c| f(c)).collect();
    let re: Vec<f64> = vals.iter().map(|v| v.re).collect();
    let im: Vec<f64> = vals.iter().map(|v| v.im).collect();
    let n = vals.len() as f64;
    Ok(Estimate {
        re: re.iter().sum::<f64>() / n,
        im: im.iter().sum::<f64>() / n,
        stderr_re: batch_means_stderr(&batch.by_chain(&re)),
        stderr_im: batch_means_stderr(&batch.by_chain(&im)),
        samples: vals.len(),
    })
}

/// Estimates E[Π(z − x_k)], which equals P_n⃗(z).
pub fn mc_char_poly(batch: &SampleBatch, z: Complex64) -> Result<Estimate> {
    estimate(batch, |c| c.iter().map(|&x| z - x).product())
}

/// Estimates E[Π(z − x_k)⁻¹], which equals ∫ Q_n⃗(x)/(z − x) dx.
pub fn mc_inverse_char_poly(batch: &SampleBatch, z: Complex64) -> Result<Estimate> {
    if z.im == 0.0 && batch.supports.iter().any(|iv| iv.contains(z.re)) {
        return Err(Error::Domain(format!(
            "z = {} lies on the support of the ensemble",
            z.re
        )));
    }
    estimate(batch, |c| c.iter().map(|&x| (z - x).inv()).product())
}

/// ∫ Q_n⃗(x)/(z − x) dx by quadrature of each term A^(j) w_j.
pub fn cauchy_transform_q(sys: &TypeISystem, ws: &WeightSystem, z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && ws.support_union().iter().any(|iv| iv.contains(z.re)) {
        return Err(Error::Domain(format!("z = {} lies on a support", z.re)));
    }
    let zr = Dd::from_f64(z.re);
    let zi = Dd::from_f64(z.im);
    let mut total = [Dd::ZERO; 2];
    for (j, w) in ws.weights.iter().enumerate() {
        if sys.nvec.parts()[j] == 0 {
            continue;
        }
        let r = w.integrate(
            |x: Dd, out: &mut [Dd]| {
                // 1/(z − x) = conj(z − x)/|z − x|²
                let dr = zr - x;
                let a = sys.eval_a(j, x) / (dr * dr + zi * zi);
                out[0] = a * dr;
                out[1] = -a * zi;
            },
            2,
            1e-24,
            RulePair::STANDARD,
        )?;
        total[0] += r[0];
        total[1] += r[1];
    }
    Ok(Complex64::new(total[0].to_f64(), total[1].to_f64()))
}
