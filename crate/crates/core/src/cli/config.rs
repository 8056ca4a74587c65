//! Experiment configuration files and their validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::SamplerConfig;
use crate::error::{Error, Result};
use crate::mop::MultiIndex;
use crate::weights::{build_angelesco, build_nikishin, Interval, WeightFamily, WeightSpec, WeightSystem};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightParams {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub coeffs: Option<Vec<f64>>,
    pub scale: Option<f64>,
}

/// One weight: {"family": "jacobi", "interval": [a, b], "params": {...}}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightDef {
    pub family: String,
    pub interval: [f64; 2],
    #[serde(default)]
    pub params: WeightParams,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindDef {
    General,
    Angelesco,
    Nikishin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDef {
    pub kind: KindDef,
    pub weights: Vec<WeightDef>,
    #[serde(default)]
    pub generators: Vec<WeightDef>,
}

/// A system given inline or as a path (relative to the config file).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemRef {
    Inline(SystemDef),
    File(PathBuf),
}

/// Multi-indices n_j = round(r_j n) along a ray.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleDef {
    pub ray: Vec<f64>,
    pub n: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumDef {
    /// Defaults to the multi-index proportions, else equal shares.
    pub ray: Option<Vec<f64>>,
    pub grid: Option<usize>,
    /// External field coefficients per component (ascending powers).
    #[serde(default)]
    pub fields: Vec<Vec<f64>>,
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyDef {
    /// Allowed Monte Carlo deviation in standard errors.
    pub sigma: f64,
    pub residual_tol: f64,
    pub trace_tol: f64,
    pub sign_trials: usize,
}

impl Default for VerifyDef {
    fn default() -> Self {
        Self {
            sigma: 3.0,
            residual_tol: 1e-9,
            trace_tol: 1e-8,
            sign_trials: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemRef,
    pub multi_index: Option<Vec<usize>>,
    pub schedule: Option<ScheduleDef>,
    pub sampler: Option<SamplerConfig>,
    /// Evaluation points z as [re, im] pairs.
    #[serde(default)]
    pub z: Vec<[f64; 2]>,
    pub grid: Option<usize>,
    pub equilibrium: Option<EquilibriumDef>,
    pub verify: Option<VerifyDef>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub level: Level,
    pub message: String,
}

impl Diagnostic {
    fn error(message: impl Into<String>) -> Self {
        Self {
            level: Level::Error,
            message: message.into(),
        }
    }

    fn warning(message: impl Into<String>) -> Self {
        Self {
            level: Level::Warning,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.level {
            Level::Error => "error",
            Level::Warning => "warning",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// A parsed config together with its resolved weight system definition.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub system: SystemDef,
    /// Raw bytes of the config file, for hashing.
    pub raw: Vec<u8>,
}

pub fn load(path: &Path) -> Result<LoadedConfig> {
    let raw = std::fs::read(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    let config: ExperimentConfig = serde_json::from_slice(&raw)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
    let system = match &config.system {
        SystemRef::Inline(s) => s.clone(),
        SystemRef::File(p) => {
            let full = path.parent().unwrap_or(Path::new(".")).join(p);
            let bytes = std::fs::read(&full)
                .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", full.display())))?;
            serde_json::from_slice(&bytes)
                .map_err(|e| Error::InvalidArgument(format!("{}: {e}", full.display())))?
        }
    };
    Ok(LoadedConfig { config, system, raw })
}

impl WeightDef {
    pub fn interval(&self) -> Result<Interval> {
        Interval::new(self.interval[0], self.interval[1])
    }

    pub fn to_spec(&self) -> Result<WeightSpec> {
        let p = &self.params;
        let family = match self.family.as_str() {
            "constant" => WeightFamily::Constant,
            "jacobi" => WeightFamily::Jacobi {
                alpha: p.alpha.unwrap_or(0.0),
                beta: p.beta.unwrap_or(0.0),
            },
            "exp_poly" => WeightFamily::ExpPoly {
                coeffs: p
                    .coeffs
                    .clone()
                    .ok_or_else(|| Error::InvalidArgument("exp_poly weight needs params.coeffs".into()))?,
            },
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown weight family \"{other}\" (expected constant, jacobi or exp_poly)"
                )))
            }
        };
        let mut spec = WeightSpec::new(family, self.interval()?)?;
        if let Some(s) = p.scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument(format!("weight scale must be positive, got {s}")));
            }
            spec = spec.scaled(s);
        }
        Ok(spec)
    }
}

impl SystemDef {
    pub fn build(&self) -> Result<WeightSystem> {
        let specs = self.weights.iter().map(WeightDef::to_spec).collect::<Result<Vec<_>>>()?;
        let gens = self.generators.iter().map(WeightDef::to_spec).collect::<Result<Vec<_>>>()?;
        match self.kind {
            KindDef::General => {
                if !gens.is_empty() {
                    return Err(Error::InvalidArgument("generators are only used by nikishin systems".into()));
                }
                WeightSystem::general(specs)
            }
            KindDef::Angelesco => {
                if !gens.is_empty() {
                    return Err(Error::InvalidArgument("generators are only used by nikishin systems".into()));
                }
                build_angelesco(specs)
            }
            KindDef::Nikishin => {
                if specs.len() != 1 {
                    return Err(Error::InvalidArgument(
                        "a nikishin system takes exactly one weight (w_1) plus its generators".into(),
                    ));
                }
                build_nikishin(specs.into_iter().next().expect("one weight"), gens)
            }
        }
    }

    /// Number of weights p of the built system.
    pub fn p(&self) -> usize {
        match self.kind {
            KindDef::Nikishin => 1 + self.generators.len(),
            _ => self.weights.len(),
        }
    }
}

impl ExperimentConfig {
    pub fn multi_index(&self) -> Result<MultiIndex> {
        self.multi_index
            .clone()
            .map(MultiIndex::new)
            .ok_or_else(|| Error::InvalidArgument("this command needs \"multi_index\"".into()))
    }

    /// The multi-index followed by the schedule entries.
    pub fn all_multi_indices(&self) -> Result<Vec<MultiIndex>> {
        let mut out: Vec<MultiIndex> = self.multi_index.iter().cloned().map(MultiIndex::new).collect();
        if let Some(s) = &self.schedule {
            for &n in &s.n {
                out.push(MultiIndex::from_ray(&s.ray, n)?);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidArgument(
                "config needs \"multi_index\" or \"schedule\"".into(),
            ));
        }
        Ok(out)
    }
}

fn check_ray(what: &str, ray: &[f64], p: usize, out: &mut Vec<Diagnostic>) {
    if ray.len() != p {
        out.push(Diagnostic::error(format!("{what} has {} entries but the system has {p} weights", ray.len())));
    }
    if ray.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
        out.push(Diagnostic::error(format!("{what} entries must lie in (0, 1]")));
    }
    let s: f64 = ray.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        out.push(Diagnostic::error(format!("{what} sums to {s}, not 1")));
    }
}

fn check_multi_index(what: &str, parts: &[usize], sys: &SystemDef, out: &mut Vec<Diagnostic>) {
    let p = sys.p();
    if parts.len() != p {
        out.push(Diagnostic::error(format!(
            "{what} {parts:?} has {} entries but the system has {p} weights",
            parts.len()
        )));
        return;
    }
    if parts.iter().sum::<usize>() == 0 {
        out.push(Diagnostic::error(format!("{what} must have |n| >= 1")));
    }
    if sys.kind == KindDef::Nikishin {
        for j in 0..p.saturating_sub(1) {
            if parts[j + 1] > parts[j] + 1 {
                out.push(Diagnostic::warning(format!(
                    "{what} {parts:?} violates the AT condition n_j >= n_{{j+1}} - 1 at j = {}; the index may not be normal and the ensemble may not be a probability density",
                    j + 1
                )));
            }
        }
    }
}

/// Schema and consistency checks that do not run any computation.
pub fn validate(loaded: &LoadedConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let sys = &loaded.system;
    let cfg = &loaded.config;
    let all: Vec<&WeightDef> = sys.weights.iter().chain(&sys.generators).collect();
    if sys.weights.is_empty() {
        out.push(Diagnostic::error("system has no weights"));
    }
    for (i, w) in all.iter().enumerate() {
        if let Err(e) = w.to_spec() {
            out.push(Diagnostic::error(format!("weight {}: {e}", i + 1)));
        }
    }
    let ivs: Vec<Option<Interval>> = all.iter().map(|w| w.interval().ok()).collect();
    match sys.kind {
        KindDef::Angelesco => {
            for i in 0..sys.weights.len() {
                for j in i + 1..sys.weights.len() {
                    if let (Some(a), Some(b)) = (ivs[i], ivs[j]) {
                        if a.overlaps(&b) {
                            out.push(Diagnostic::error(format!(
                                "angelesco intervals {a} (weight {}) and {b} (weight {}) overlap",
                                i + 1,
                                j + 1
                            )));
                        }
                    }
                }
            }
            let sorted = ivs.windows(2).all(|w| match (w[0], w[1]) {
                (Some(a), Some(b)) => a.a <= b.a,
                _ => true,
            });
            if !sorted {
                out.push(Diagnostic::warning(
                    "angelesco weights are relabeled left to right; multi-index entries refer to that order",
                ));
            }
            if !sys.generators.is_empty() {
                out.push(Diagnostic::error("generators are only used by nikishin systems"));
            }
        }
        KindDef::Nikishin => {
            if sys.weights.len() != 1 {
                out.push(Diagnostic::error("a nikishin system takes exactly one weight (w_1) plus its generators"));
            }
            if sys.generators.is_empty() {
                out.push(Diagnostic::warning("nikishin system without generators has p = 1"));
            }
            for k in 0..ivs.len().saturating_sub(1) {
                if let (Some(a), Some(b)) = (ivs[k], ivs[k + 1]) {
                    if !a.disjoint(&b) {
                        out.push(Diagnostic::error(format!(
                            "consecutive nikishin intervals {a} and {b} must be disjoint"
                        )));
                    }
                }
            }
        }
        KindDef::General => {
            if !sys.generators.is_empty() {
                out.push(Diagnostic::error("generators are only used by nikishin systems"));
            }
        }
    }
    if let Some(m) = &cfg.multi_index {
        check_multi_index("multi_index", m, sys, &mut out);
    }
    if let Some(s) = &cfg.schedule {
        check_ray("schedule.ray", &s.ray, sys.p(), &mut out);
        if s.n.is_empty() || s.n.contains(&0) {
            out.push(Diagnostic::error("schedule.n must list positive sizes"));
        } else if out.iter().all(|d| d.level != Level::Error) {
            for &n in &s.n {
                match MultiIndex::from_ray(&s.ray, n) {
                    Ok(m) => check_multi_index(&format!("schedule entry n = {n}"), m.parts(), sys, &mut out),
                    Err(e) => out.push(Diagnostic::error(format!("schedule entry n = {n}: {e}"))),
                }
            }
        }
    }
    if let Some(s) = &cfg.sampler {
        if let Err(e) = s.validate() {
            out.push(Diagnostic::error(e.to_string()));
        }
        if s.step_sizes.is_some() && sys.kind == KindDef::Nikishin {
            out.push(Diagnostic::warning(
                "nikishin samplers also move the n_2 auxiliary points; step_sizes must cover them",
            ));
        }
    }
    if let Some(e) = &cfg.equilibrium {
        if let Some(r) = &e.ray {
            check_ray("equilibrium.ray", r, sys.p(), &mut out);
        }
        if !e.fields.is_empty() && e.fields.len() != sys.p() {
            out.push(Diagnostic::error(format!(
                "equilibrium.fields has {} entries but the system has {} weights",
                e.fields.len(),
                sys.p()
            )));
        }
        if e.grid.is_some_and(|g| g < 2) {
            out.push(Diagnostic::error("equilibrium.grid needs at least 2 points"));
        }
        if sys.kind == KindDef::General && sys.p() > 1 {
            out.push(Diagnostic::warning(
                "equilibrium problems are defined for angelesco and nikishin systems only",
            ));
        }
    }
    if cfg.grid.is_some_and(|g| g < 2) {
        out.push(Diagnostic::error("grid needs at least 2 points"));
    }
    if cfg.z.iter().flatten().any(|v| !v.is_finite()) {
        out.push(Diagnostic::error("z points must be finite"));
    }
    if let Some(v) = &cfg.verify {
        if !(v.sigma >= 0.0) || !(v.residual_tol >= 0.0) || !(v.trace_tol >= 0.0) {
            out.push(Diagnostic::error("verify tolerances must be nonnegative"));
        }
    }
    if out.iter().all(|d| d.level != Level::Error) {
        if let Err(e) = sys.build() {
            out.push(Diagnostic::error(e.to_string()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loaded(json: &str) -> LoadedConfig {
        let config: ExperimentConfig = serde_json::from_str(json).unwrap();
        let SystemRef::Inline(system) = config.system.clone() else {
            panic!("inline system expected")
        };
        LoadedConfig {
            config,
            system,
            raw: json.as_bytes().to_vec(),
        }
    }

    #[test]
    fn valid_config_has_no_diagnostics() {
        let l = loaded(
            r#"{"system": {"kind": "angelesco", "weights": [
                {"family": "constant", "interval": [-1, 0]},
                {"family": "jacobi", "interval": [0, 1], "params": {"alpha": 0.5, "beta": 0}}]},
                "multi_index": [2, 2]}"#,
        );
        assert!(validate(&l).is_empty(), "{:?}", validate(&l));
        assert_eq!(l.system.build().unwrap().p(), 2);
    }

    #[test]
    fn overlapping_angelesco_names_both_intervals() {
        let l = loaded(
            r#"{"system": {"kind": "angelesco", "weights": [
                {"family": "constant", "interval": [-1, 0.5]},
                {"family": "constant", "interval": [0, 1]}]}}"#,
        );
        let d = validate(&l);
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("[-1, 0.5]") && d[0].message.contains("[0, 1]"));
    }

    #[test]
    fn nikishin_at_condition_warning() {
        let l = loaded(
            r#"{"system": {"kind": "nikishin",
                "weights": [{"family": "constant", "interval": [1, 2]}],
                "generators": [{"family": "constant", "interval": [-1, 0]}]},
                "multi_index": [1, 3]}"#,
        );
        let d = validate(&l);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].level, Level::Warning);
        assert!(d[0].message.contains("n_j >= n_{j+1} - 1"));
    }

    #[test]
    fn schema_errors() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"system": {"kind": "angelesco", "weights": []}, "bogus": 1}"#).is_err());
        let l = loaded(
            r#"{"system": {"kind": "general", "weights": [{"family": "hermite", "interval": [0, 1]}]},
                "multi_index": [1, 1], "schedule": {"ray": [0.7], "n": [3]}}"#,
        );
        let d = validate(&l);
        assert!(d.iter().filter(|d| d.level == Level::Error).count() >= 3, "{d:?}");
    }
}
