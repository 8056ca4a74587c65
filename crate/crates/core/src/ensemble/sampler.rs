//! Metropolis-within-Gibbs sampling of MOP ensembles.
//!
//! Angelesco systems (and p = 1) are sampled with the block assignment of
//! the points held fixed. Nikishin systems with p = 2 are sampled on the
//! extended (X, Y) space, whose X-marginal is the ensemble. Both targets have
//! the pairwise form Σ u(s_k) + Σ_{k<l} c ln|s_k − s_l|, so a single-site
//! update costs O(n). Other systems fall back to the determinant form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mop::MultiIndex;
use crate::weights::{Interval, SystemKind, Weight, WeightSystem};

use super::density::{log_joint_unnormalized, nikishin_generator, sign_constancy_check};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub chains: usize,
    /// Sweeps discarded at the start of each chain.
    pub burn_in: usize,
    /// Sweeps between kept configurations.
    pub thinning: usize,
    /// Kept configurations over all chains.
    pub samples: usize,
    /// Proposal standard deviation as a fraction of the coordinate's interval.
    pub step_scale: f64,
    /// Explicit per-coordinate step sizes, overriding `step_scale`.
    pub step_sizes: Option<Vec<f64>>,
    pub seed: u64,
    pub max_init_tries: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            burn_in: 10_000,
            thinning: 10,
            samples: 10_000,
            step_scale: 0.1,
            step_sizes: None,
            seed: 0,
            max_init_tries: 1000,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("sampler {what} must be positive")));
        if self.chains == 0 {
            return bad("chains");
        }
        if self.thinning == 0 {
            return bad("thinning");
        }
        if self.samples == 0 {
            return bad("samples");
        }
        if !(self.step_scale > 0.0) {
            return bad("step_scale");
        }
        if let Some(s) = &self.step_sizes {
            if s.iter().any(|v| !(*v > 0.0)) {
                return bad("step size");
            }
        }
        if self.max_init_tries == 0 {
            return bad("max_init_tries");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleBatch {
    pub nvec: MultiIndex,
    /// Points x_1..x_n of each kept configuration, chain by chain.
    pub configurations: Vec<Vec<f64>>,
    /// Auxiliary points y_1..y_{n_2} for extended ensembles (else empty rows).
    pub aux: Vec<Vec<f64>>,
    pub chain_lengths: Vec<usize>,
    pub acceptance_rate: f64,
    /// Effective sample size of Σ x_k by batch means.
    pub ess: f64,
    pub seed: u64,
    /// Supports of the points, used to validate estimator arguments.
    pub supports: Vec<Interval>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.configurations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configurations.is_empty()
    }

    /// Splits a per-configuration series into its chains.
    pub fn by_chain<'a, T>(&self, series: &'a [T]) -> Vec<&'a [T]> {
        let mut out = Vec::with_capacity(self.chain_lengths.len());
        let mut start = 0;
        for &len in &self.chain_lengths {
            out.push(&series[start..start + len]);
            start += len;
        }
        out
    }
}

/// Standard error of the pooled mean from non-overlapping batch means
/// (batch size ⌊√len⌋ within each chain).
pub fn batch_means_stderr(chains: &[&[f64]]) -> f64 {
    let mut means = Vec::new();
    for c in chains {
        let b = ((c.len() as f64).sqrt() as usize).max(1);
        for chunk in c.chunks_exact(b) {
            means.push(chunk.iter().sum::<f64>() / b as f64);
        }
    }
    let m = means.len();
    if m < 2 {
        return f64::NAN;
    }
    let mu = means.iter().sum::<f64>() / m as f64;
    let var = means.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (m - 1) as f64;
    (var / m as f64).sqrt()
}

fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mu = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0)
}

trait Target: Sync {
    fn dim(&self) -> usize;
    /// Proposals leaving this interval are rejected.
    fn interval(&self, k: usize) -> Interval;
    fn log_density(&self, s: &[f64]) -> f64;
    /// log p(s with s_k = new) − log p(s).
    fn delta(&self, s: &[f64], k: usize, new: f64) -> f64 {
        let old = self.log_density(s);
        let mut t = s.to_vec();
        t[k] = new;
        self.log_density(&t) - old
    }
}

/// Σ_k ln u_{λ(k)}(s_k) + Σ_{k<l} c[λ(k)][λ(l)] ln|s_k − s_l|.
struct PairTarget {
    labels: Vec<usize>,
    coef: Vec<Vec<f64>>,
    weights: Vec<Weight>,
    intervals: Vec<Interval>,
}

impl PairTarget {
    fn unary(&self, k: usize, x: f64) -> f64 {
        self.weights[self.labels[k]].eval::<f64>(x).ln()
    }
}

impl Target for PairTarget {
    fn dim(&self) -> usize {
        self.labels.len()
    }

    fn interval(&self, k: usize) -> Interval {
        self.intervals[self.labels[k]]
    }

    fn log_density(&self, s: &[f64]) -> f64 {
        let mut v = 0.0;
        for k in 0..s.len() {
            if !self.interval(k).contains(s[k]) {
                return f64::NEG_INFINITY;
            }
            v += self.unary(k, s[k]);
            for l in 0..k {
                v += self.coef[self.labels[k]][self.labels[l]] * (s[k] - s[l]).abs().ln();
            }
        }
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    fn delta(&self, s: &[f64], k: usize, new: f64) -> f64 {
        let lk = self.labels[k];
        let mut d = self.unary(k, new) - self.unary(k, s[k]);
        for (l, &sl) in s.iter().enumerate() {
            if l != k {
                d += self.coef[lk][self.labels[l]] * ((new - sl) / (s[k] - sl)).abs().ln();
            }
        }
        d
    }
}

struct DeterminantTarget<'a> {
    ws: &'a WeightSystem,
    nvec: &'a MultiIndex,
    hull: Interval,
}

impl Target for DeterminantTarget<'_> {
    fn dim(&self) -> usize {
        self.nvec.total()
    }

    fn interval(&self, _k: usize) -> Interval {
        self.hull
    }

    fn log_density(&self, s: &[f64]) -> f64 {
        log_joint_unnormalized(self.ws, self.nvec, s).unwrap_or(f64::NEG_INFINITY)
    }
}

fn pair_target(ws: &WeightSystem, nvec: &MultiIndex) -> Result<Option<(PairTarget, usize)>> {
    let n = nvec.check(ws.p())?;
    if ws.p() == 1 || ws.kind == SystemKind::Angelesco {
        let p = ws.p();
        let labels = (0..p).flat_map(|j| std::iter::repeat_n(j, nvec.parts()[j])).collect();
        let coef = (0..p)
            .map(|i| (0..p).map(|j| if i == j { 2.0 } else { 1.0 }).collect())
            .collect();
        let intervals = ws.weights.iter().map(Weight::support).collect();
        return Ok(Some((
            PairTarget {
                labels,
                coef,
                weights: ws.weights.clone(),
                intervals,
            },
            n,
        )));
    }
    if ws.kind == SystemKind::Nikishin {
        if ws.p() != 2 {
            return Err(Error::Domain(
                "sampling of Nikishin ensembles is limited to p = 2".into(),
            ));
        }
        let (n1, n2) = (nvec.parts()[0], nvec.parts()[1]);
        if n1 + 1 < n2 {
            return Err(Error::Domain(format!(
                "Nikishin sampling needs n_1 >= n_2 - 1, got ({n1}, {n2})"
            )));
        }
        let labels = std::iter::repeat_n(0, n).chain(std::iter::repeat_n(1, n2)).collect();
        let weights = vec![
            Weight::plain(ws.weights[0].spec.clone()),
            nikishin_generator(ws).clone(),
        ];
        return Ok(Some((
            PairTarget {
                labels,
                coef: vec![vec![2.0, -1.0], vec![-1.0, 2.0]],
                weights,
                intervals: vec![ws.intervals[0], ws.intervals[1]],
            },
            n,
        )));
    }
    Ok(None)
}

struct ChainOutput {
    states: Vec<Vec<f64>>,
    accepted: u64,
    proposed: u64,
}

fn run_chain<T: Target>(t: &T, steps: &[f64], cfg: &SamplerConfig, chain: usize, kept: usize) -> Result<ChainOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(chain as u64);
    let dim = t.dim();
    let mut s = vec![0.0; dim];
    let mut ok = false;
    for _ in 0..cfg.max_init_tries {
        for (k, v) in s.iter_mut().enumerate() {
            let iv = t.interval(k);
            *v = iv.a + iv.length() * rng.random::<f64>();
        }
        if t.log_density(&s).is_finite() {
            ok = true;
            break;
        }
    }
    if !ok {
        return Err(Error::Initialization(format!(
            "no configuration of positive density found in {} tries",
            cfg.max_init_tries
        )));
    }
    let mut out = ChainOutput {
        states: Vec::with_capacity(kept),
        accepted: 0,
        proposed: 0,
    };
    let total = cfg.burn_in + kept * cfg.thinning;
    for sweep in 1..=total {
        let counting = sweep > cfg.burn_in;
        for k in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            let new = s[k] + steps[k] * z;
            let u: f64 = rng.random();
            if counting {
                out.proposed += 1;
            }
            if !t.interval(k).contains(new) {
                continue;
            }
            let d = t.delta(&s, k, new);
            if d >= 0.0 || u.ln() < d {
                s[k] = new;
                if counting {
                    out.accepted += 1;
                }
            }
        }
        if counting && (sweep - cfg.burn_in) % cfg.thinning == 0 {
            out.states.push(s.clone());
        }
    }
    Ok(out)
}

fn run<T: Target>(t: &T, n: usize, nvec: &MultiIndex, supports: Vec<Interval>, cfg: &SamplerConfig) -> Result<SampleBatch> {
    let dim = t.dim();
    let steps: Vec<f64> = match &cfg.step_sizes {
        Some(s) if s.len() == dim => s.clone(),
        Some(s) => {
            return Err(Error::InvalidArgument(format!(
                "{} step sizes given for {dim} coordinates",
                s.len()
            )))
        }
        None => (0..dim).map(|k| cfg.step_scale * t.interval(k).length()).collect(),
    };
    let per = cfg.samples.div_ceil(cfg.chains);
    let kept: Vec<usize> = (0..cfg.chains)
        .map(|c| per.min(cfg.samples.saturating_sub(c * per)))
        .collect();
    let chains = (0..cfg.chains)
        .into_par_iter()
        .map(|c| run_chain(t, &steps, cfg, c, kept[c]))
        .collect::<Result<Vec<_>>>()?;
    let (mut acc, mut prop) = (0u64, 0u64);
    let mut configurations = Vec::with_capacity(cfg.samples);
    let mut aux = Vec::with_capacity(cfg.samples);
    let mut chain_lengths = Vec::with_capacity(cfg.chains);
    for c in chains {
        acc += c.accepted;
        prop += c.proposed;
        chain_lengths.push(c.states.len());
        for mut s in c.states {
            aux.push(s.split_off(n));
            configurations.push(s);
        }
    }
    let mut batch = SampleBatch {
        nvec: nvec.clone(),
        configurations,
        aux,
        chain_lengths,
        acceptance_rate: acc as f64 / prop.max(1) as f64,
        ess: f64::NAN,
        seed: cfg.seed,
        supports,
    };
    let sums: Vec<f64> = batch.configurations.iter().map(|c| c.iter().sum()).collect();
    let se = batch_means_stderr(&batch.by_chain(&sums));
    if sums.len() > 1 && se > 0.0 {
        batch.ess = sample_variance(&sums) / (se * se);
    }
    Ok(batch)
}

/// Samples the ensemble of (ws, n⃗).
pub fn sample_mcmc(ws: &WeightSystem, nvec: &MultiIndex, cfg: &SamplerConfig) -> Result<SampleBatch> {
    cfg.validate()?;
    let supports = ws.support_union();
    if let Some((t, n)) = pair_target(ws, nvec)? {
        return run(&t, n, nvec, supports, cfg);
    }
    let rep = sign_constancy_check(ws, nvec, 1000, cfg.seed)?;
    if rep.identically_zero() || rep.violations > 0 {
        return Err(Error::Domain(
            "the product of determinants changes sign, so it is not a density".into(),
        ));
    }
    let t = DeterminantTarget {
        ws,
        nvec,
        hull: ws.hull(),
    };
    run(&t, nvec.total(), nvec, supports, cfg)
}
