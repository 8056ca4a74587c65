//! The computations behind each subcommand and the files they write.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::ensemble::{
    cauchy_transform_q, kernel, mc_char_poly, mc_inverse_char_poly, mean_density, sample_mcmc,
    sign_constancy_check, Kernel, SamplerConfig,
};
use crate::equilibrium::{
    kolmogorov_distance, minimize_equilibrium, zero_counting_measure, DiscreteMeasure, EquilibriumProblem,
    EquilibriumSolution,
};
use crate::error::Error;
use crate::mop::{
    max_abs, orthogonality_residuals, type1_mop, type1_residuals, type2_mop, type2_mop_legendre, MultiIndex,
    TypeII, MAX_DEGREE,
};
use crate::weights::{MomentTable, SystemKind, WeightSystem};

use super::config::{LoadedConfig, VerifyDef};
use super::manifest::RunManifest;
use super::Failure;

const DEFAULT_KERNEL_GRID: usize = 101;
const DEFAULT_DENSITY_GRID: usize = 401;
const DEFAULT_EQUILIBRIUM_GRID: usize = 1000;
const DEFAULT_Z: [[f64; 2]; 3] = [[2.0, 0.0], [0.25, 1.0], [-1.5, -0.5]];

pub(crate) struct Ctx {
    pub loaded: LoadedConfig,
    pub ws: WeightSystem,
    pub out: PathBuf,
    pub seed: u64,
    pub grid: Option<usize>,
    pub samples: Option<usize>,
    pub quiet: bool,
    pub manifest: RunManifest,
}

impl Ctx {
    fn note(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }

    fn step<T>(&mut self, name: &str, f: impl FnOnce(&Self) -> Result<T, Failure>) -> Result<T, Failure> {
        self.note(&format!("{name} ..."));
        let t = Instant::now();
        let r = f(self);
        self.manifest.record(name, t, &r);
        r
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.out.join(name);
        std::fs::write(&path, bytes).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
        self.manifest.add_output(name, bytes);
        Ok(())
    }

    fn write_json(&mut self, name: &str, v: &impl Serialize) -> Result<(), Failure> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| Failure::Io(e.to_string()))?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    fn grid_or(&self, specific: Option<usize>, default: usize) -> usize {
        self.grid.or(specific).or(self.loaded.config.grid).unwrap_or(default)
    }

    fn sampler_config(&self) -> SamplerConfig {
        let mut cfg = self.loaded.config.sampler.clone().unwrap_or_default();
        cfg.seed = self.seed;
        if let Some(s) = self.samples {
            cfg.samples = s;
        }
        cfg
    }

    fn z_points(&self) -> Vec<Complex64> {
        let z = &self.loaded.config.z;
        let src: &[[f64; 2]] = if z.is_empty() { &DEFAULT_Z } else { z };
        src.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
    }
}

/// Shortest round-trip decimal, switching to exponent form for very small
/// or very large magnitudes.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Comment lines prefixed `#`, then an RFC 4180 table.
struct Csv {
    comments: String,
    table: csv::Writer<Vec<u8>>,
}

impl Default for Csv {
    fn default() -> Self {
        Self {
            comments: String::new(),
            table: csv::Writer::from_writer(Vec::new()),
        }
    }
}

impl Csv {
    fn comment(&mut self, line: impl AsRef<str>) -> &mut Self {
        let _ = writeln!(self.comments, "# {}", line.as_ref());
        self
    }

    fn header(&mut self, cols: &[String]) -> &mut Self {
        self.row(cols.iter().cloned());
        self
    }

    fn row(&mut self, cells: impl IntoIterator<Item = String>) {
        // writes into a Vec cannot fail
        self.table.write_record(cells.into_iter()).expect("in-memory csv");
    }

    fn finish(self) -> Vec<u8> {
        let mut out = self.comments.into_bytes();
        out.extend(self.table.into_inner().expect("in-memory csv"));
        out
    }
}

fn names(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// Midpoints of `m` equal cells of the hull.
fn hull_grid(ws: &WeightSystem, m: usize) -> Vec<f64> {
    let h = ws.hull();
    let step = h.length() / m as f64;
    (0..m).map(|i| h.a + (i as f64 + 0.5) * step).collect()
}

fn moment_table(ws: &WeightSystem, nvec: &MultiIndex) -> crate::Result<MomentTable> {
    MomentTable::scaled(ws, 2 * nvec.total() + 1)
}

fn build_type2(ws: &WeightSystem, nvec: &MultiIndex) -> crate::Result<(TypeII, &'static str)> {
    if nvec.total() <= MAX_DEGREE {
        Ok((type2_mop(&moment_table(ws, nvec)?, nvec)?, "moments"))
    } else {
        Ok((type2_mop_legendre(ws, nvec)?, "legendre"))
    }
}

fn type2_entry(ws: &WeightSystem, nvec: &MultiIndex) -> crate::Result<Value> {
    let (p, route) = build_type2(ws, nvec)?;
    let residuals = orthogonality_residuals(&p, ws, nvec)?;
    Ok(json!({
        "multi_index": nvec.parts(),
        "degree": nvec.total(),
        "route": route,
        "coeffs": p.poly.coeffs(),
        "roots": p.roots()?,
        "residuals": residuals,
        "max_residual": max_abs(&residuals),
        "determinant": p.determinant,
    }))
}

fn type1_entry(ws: &WeightSystem, nvec: &MultiIndex) -> crate::Result<Value> {
    let sys = type1_mop(&moment_table(ws, nvec)?, nvec)?;
    let residuals = type1_residuals(&sys, ws)?;
    let polys: Vec<&[f64]> = sys.polys.iter().map(|p| p.coeffs()).collect();
    Ok(json!({
        "multi_index": nvec.parts(),
        "degree": nvec.total(),
        "polys": polys,
        "residuals": residuals,
        "max_residual": residuals.iter().fold(0.0f64, |m, r| m.max(r.abs())),
        "determinant": sys.determinant,
    }))
}

fn kind_name(ws: &WeightSystem) -> &'static str {
    match ws.kind {
        SystemKind::General => "general",
        SystemKind::Angelesco => "angelesco",
        SystemKind::Nikishin => "nikishin",
    }
}

pub(crate) fn mop(ctx: &mut Ctx) -> Result<(), Failure> {
    let mut results = Vec::new();
    for nvec in ctx.loaded.config.all_multi_indices()? {
        let name = format!("type II {:?}", nvec.parts());
        results.push(ctx.step(&name, |c| Ok(type2_entry(&c.ws, &nvec)?))?);
    }
    let doc = json!({"command": "mop", "kind": kind_name(&ctx.ws), "results": results});
    ctx.write_json("mop.json", &doc)
}

pub(crate) fn type1(ctx: &mut Ctx) -> Result<(), Failure> {
    let mut results = Vec::new();
    for nvec in ctx.loaded.config.all_multi_indices()? {
        let name = format!("type I {:?}", nvec.parts());
        results.push(ctx.step(&name, |c| Ok(type1_entry(&c.ws, &nvec)?))?);
    }
    let doc = json!({"command": "typeI", "kind": kind_name(&ctx.ws), "results": results});
    ctx.write_json("typeI.json", &doc)
}

fn build_kernel(ctx: &mut Ctx) -> Result<(MultiIndex, Kernel, f64), Failure> {
    let nvec = ctx.loaded.config.multi_index()?;
    let k = ctx.step("kernel", |c| Ok(kernel(&c.ws, &nvec)?))?;
    let tr = ctx.step("trace", |_| Ok(k.trace()?))?;
    Ok((nvec, k, tr))
}

pub(crate) fn kernel_grid(ctx: &mut Ctx) -> Result<(), Failure> {
    let (nvec, k, tr) = build_kernel(ctx)?;
    let xs = hull_grid(&ctx.ws, ctx.grid_or(None, DEFAULT_KERNEL_GRID));
    let mut csv = Csv::default();
    csv.comment(format!("kernel K_n(x, y), multi-index {:?}", nvec.parts()))
        .comment(format!("trace: {}", fmt_f64(tr)))
        .comment(format!("gram_error: {}", fmt_f64(k.gram_error)))
        .header(&names(&["x", "y", "value"]));
    for &x in &xs {
        for &y in &xs {
            csv.row([fmt_f64(x), fmt_f64(y), fmt_f64(k.eval(x, y))]);
        }
    }
    ctx.write("kernel.csv", &csv.finish())
}

pub(crate) fn density(ctx: &mut Ctx) -> Result<(), Failure> {
    let (nvec, k, tr) = build_kernel(ctx)?;
    let xs = hull_grid(&ctx.ws, ctx.grid_or(None, DEFAULT_DENSITY_GRID));
    let mut csv = Csv::default();
    csv.comment(format!("mean density K_n(x, x)/n, multi-index {:?}", nvec.parts()))
        .comment(format!("trace: {}", fmt_f64(tr)))
        .header(&names(&["x", "density"]));
    for &x in &xs {
        csv.row([fmt_f64(x), fmt_f64(mean_density(&k, x))]);
    }
    ctx.write("density.csv", &csv.finish())
}

pub(crate) fn sample(ctx: &mut Ctx) -> Result<(), Failure> {
    let nvec = ctx.loaded.config.multi_index()?;
    let cfg = ctx.sampler_config();
    let batch = ctx.step("sample", |c| Ok(sample_mcmc(&c.ws, &nvec, &cfg)?))?;
    let n = nvec.total();
    let m = batch.aux.first().map_or(0, Vec::len);
    let mut cols = vec!["chain".to_string()];
    cols.extend((1..=n).map(|k| format!("x_{k}")));
    cols.extend((1..=m).map(|k| format!("y_{k}")));
    let mut csv = Csv::default();
    csv.comment(format!("multi-index: {:?}", nvec.parts()))
        .comment(format!("seed: {}", batch.seed))
        .comment(format!(
            "chains: {}, burn_in: {}, thinning: {}",
            cfg.chains, cfg.burn_in, cfg.thinning
        ))
        .comment(format!("acceptance_rate: {}", fmt_f64(batch.acceptance_rate)))
        .comment(format!("ess: {}", fmt_f64(batch.ess)))
        .header(&cols);
    let mut i = 0;
    for (chain, &len) in batch.chain_lengths.iter().enumerate() {
        for _ in 0..len {
            let mut row = vec![chain.to_string()];
            row.extend(batch.configurations[i].iter().map(|&x| fmt_f64(x)));
            if let Some(y) = batch.aux.get(i) {
                row.extend(y.iter().map(|&v| fmt_f64(v)));
            }
            csv.row(row);
            i += 1;
        }
    }
    ctx.write("samples.csv", &csv.finish())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
struct Check {
    name: String,
    value: f64,
    threshold: f64,
    status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

impl Check {
    fn le(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            status: if value <= threshold { CheckStatus::Pass } else { CheckStatus::Fail },
            note: None,
        }
    }

    fn skipped(name: impl Into<String>, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: f64::NAN,
            threshold: f64::NAN,
            status: CheckStatus::Skipped,
            note: Some(note.into()),
        }
    }

    fn failed(name: impl Into<String>, note: impl Into<String>) -> Self {
        Self {
            status: CheckStatus::Fail,
            ..Self::skipped(name, note)
        }
    }
}

/// MC deviation in units of the standard error (0 when both vanish).
fn deviation(est: &crate::ensemble::Estimate, target: Complex64) -> f64 {
    let d = (est.mean() - target).norm();
    if d == 0.0 {
        0.0
    } else {
        d / est.stderr()
    }
}

fn verify_checks(ctx: &mut Ctx, v: &VerifyDef) -> Result<(MultiIndex, Vec<Check>), Failure> {
    let nvec = ctx.loaded.config.multi_index()?;
    nvec.check(ctx.ws.p())?;
    let mut checks = Vec::new();
    let ws = ctx.ws.clone();

    let p2 = if nvec.total() <= MAX_DEGREE {
        let mt = moment_table(&ws, &nvec)?;
        let p = ctx.step("type II", |_| Ok(type2_mop(&mt, &nvec)?))?;
        let r = ctx.step("type II residuals", |_| Ok(orthogonality_residuals(&p, &ws, &nvec)?))?;
        checks.push(Check::le("type2_orthogonality", max_abs(&r), v.residual_tol));
        let sys = ctx.step("type I", |_| Ok(type1_mop(&mt, &nvec)?))?;
        let r = ctx.step("type I residuals", |_| Ok(type1_residuals(&sys, &ws)?))?;
        checks.push(Check::le(
            "type1_normalization",
            r.iter().fold(0.0f64, |m, x| m.max(x.abs())),
            v.residual_tol,
        ));
        Some((p, sys))
    } else {
        checks.push(Check::skipped("type2_orthogonality", format!("degree above {MAX_DEGREE}")));
        None
    };

    let (_, k, tr) = build_kernel(ctx)?;
    checks.push(Check::le("kernel_trace", (tr - nvec.total() as f64).abs(), v.trace_tol));
    let mass = ctx.step("mean density mass", |_| Ok(k.density_mass()?))?;
    checks.push(Check::le("mean_density_mass", (mass - 1.0).abs(), v.trace_tol));

    let seed = ctx.seed;
    let sign = ctx.step("sign constancy", |_| Ok(sign_constancy_check(&ws, &nvec, v.sign_trials, seed)?))?;
    let mut sign_check = Check::le("sign_constancy_violations", sign.violations as f64, 0.0);
    if sign.identically_zero() {
        sign_check.status = CheckStatus::Fail;
        sign_check.note = Some("determinant vanished on every trial".into());
    }
    let sign_ok = sign_check.status == CheckStatus::Pass;
    checks.push(sign_check);

    let nikishin_unsupported = ws.kind == SystemKind::Nikishin && ws.p() != 2;
    if !sign_ok || nikishin_unsupported {
        let why = if sign_ok {
            "sampler supports nikishin systems with p = 2 only"
        } else {
            "ensemble is not a probability density"
        };
        checks.push(Check::skipped("mc_char_poly", why));
        return Ok((nvec, checks));
    }
    let cfg = ctx.sampler_config();
    let batch = match ctx.step("sample", |c| Ok(sample_mcmc(&c.ws, &nvec, &cfg)?)) {
        Ok(b) => b,
        Err(e) => {
            checks.push(Check::failed("mc_char_poly", e.to_string()));
            return Ok((nvec, checks));
        }
    };
    for z in ctx.z_points() {
        let label = format!("({}, {})", fmt_f64(z.re), fmt_f64(z.im));
        let est = mc_char_poly(&batch, z)?;
        let target = match &p2 {
            Some((p, _)) => p.poly.eval_complex(z),
            None => build_type2(&ws, &nvec)?.0.poly.eval_complex(z),
        };
        checks.push(Check::le(format!("mc_char_poly z={label}"), deviation(&est, target), v.sigma));
        let on_support = z.im == 0.0 && ws.support_union().iter().any(|iv| iv.contains(z.re));
        match &p2 {
            Some((_, sys)) if !on_support => {
                let est = mc_inverse_char_poly(&batch, z)?;
                let target = cauchy_transform_q(sys, &ws, z)?;
                checks.push(Check::le(
                    format!("mc_inverse_char_poly z={label}"),
                    deviation(&est, target),
                    v.sigma,
                ));
            }
            _ => {}
        }
    }
    Ok((nvec, checks))
}

pub(crate) fn verify(ctx: &mut Ctx) -> Result<(), Failure> {
    let v = ctx.loaded.config.verify.clone().unwrap_or_default();
    let (nvec, checks) = verify_checks(ctx, &v)?;
    let passed = checks.iter().all(|c| c.status != CheckStatus::Fail);
    let mut csv = Csv::default();
    csv.comment(format!("multi-index: {:?}", nvec.parts()))
        .comment(format!("seed: {}", ctx.seed))
        .header(&names(&["check", "value", "threshold", "status"]));
    for c in &checks {
        let status = serde_json::to_value(c.status).expect("status serializes");
        csv.row([
            c.name.clone(),
            fmt_f64(c.value),
            fmt_f64(c.threshold),
            status.as_str().unwrap_or_default().to_string(),
        ]);
    }
    ctx.write("verify.csv", &csv.finish())?;
    let doc = json!({
        "command": "verify",
        "multi_index": nvec.parts(),
        "seed": ctx.seed,
        "settings": v,
        "checks": checks,
        "passed": passed,
    });
    ctx.write_json("verify.json", &doc)?;
    if passed {
        Ok(())
    } else {
        let failed: Vec<&str> = checks
            .iter()
            .filter(|c| c.status == CheckStatus::Fail)
            .map(|c| c.name.as_str())
            .collect();
        Err(Failure::Verification(format!("failed checks: {}", failed.join(", "))))
    }
}

fn equilibrium_problem(ctx: &Ctx, ray_default: Option<Vec<f64>>) -> Result<EquilibriumProblem, Failure> {
    let cfg = &ctx.loaded.config;
    let eq = cfg.equilibrium.clone().unwrap_or_default();
    let p = ctx.ws.p();
    let ray = eq
        .ray
        .clone()
        .or(ray_default)
        .or_else(|| {
            cfg.multi_index.as_ref().map(|m| {
                let n: usize = m.iter().sum();
                m.iter().map(|&k| k as f64 / n as f64).collect()
            })
        })
        .or_else(|| cfg.schedule.as_ref().map(|s| s.ray.clone()))
        .unwrap_or_else(|| vec![1.0 / p as f64; p]);
    let grid = ctx.grid_or(eq.grid, DEFAULT_EQUILIBRIUM_GRID);
    let intervals = ctx.ws.intervals.clone();
    let mut prob = match ctx.ws.kind {
        SystemKind::Nikishin => EquilibriumProblem::nikishin(intervals, &ray, grid)?,
        _ => EquilibriumProblem::angelesco(intervals, &ray, grid)?,
    };
    if !eq.fields.is_empty() {
        prob.fields = eq.fields;
    }
    if let Some(m) = eq.max_iterations {
        prob.max_iterations = m;
    }
    if let Some(t) = eq.tolerance {
        prob.tolerance = t;
    }
    Ok(prob)
}

fn solve(ctx: &mut Ctx, prob: &EquilibriumProblem) -> Result<EquilibriumSolution, Failure> {
    let sol = ctx.step("equilibrium", |_| Ok(minimize_equilibrium(prob)?))?;
    if !sol.report.converged {
        ctx.note(&format!(
            "warning: equilibrium stopped after {} iterations without converging",
            sol.report.iterations
        ));
    }
    Ok(sol)
}

fn measure_csv(j: usize, iv: &crate::weights::Interval, mu: &DiscreteMeasure) -> Vec<u8> {
    let mut csv = Csv::default();
    csv.comment(format!("component {}, interval {iv}", j + 1))
        .comment(format!("total mass: {}", fmt_f64(mu.total_mass)))
        .comment(format!("cell width: {}", fmt_f64(mu.cell_width)))
        .comment("cdf is the mass of (-inf, x + width/2]")
        .header(&names(&["x", "mass", "density", "cdf"]));
    for (((x, m), d), c) in mu.grid.iter().zip(&mu.masses).zip(mu.density()).zip(mu.cdf()) {
        csv.row([fmt_f64(*x), fmt_f64(*m), fmt_f64(d), fmt_f64(c)]);
    }
    csv.finish()
}

pub(crate) fn equilibrium(ctx: &mut Ctx) -> Result<(), Failure> {
    let prob = equilibrium_problem(ctx, None)?;
    let sol = solve(ctx, &prob)?;
    for (j, mu) in sol.measures.iter().enumerate() {
        let body = measure_csv(j, &prob.intervals[j], mu);
        ctx.write(&format!("equilibrium_{}.csv", j + 1), &body)?;
    }
    let doc = json!({
        "command": "equilibrium",
        "kind": kind_name(&ctx.ws),
        "intervals": prob.intervals,
        "masses": prob.masses,
        "interaction": prob.interaction,
        "report": sol.report,
    });
    ctx.write_json("equilibrium_report.json", &doc)?;
    if sol.report.converged {
        Ok(())
    } else {
        Err(Failure::Numeric(format!(
            "equilibrium did not converge in {} iterations (KKT residual {:e})",
            sol.report.iterations, sol.report.kkt_residual
        )))
    }
}

/// Distances between zero counting measures and equilibrium components.
/// Zeros of a Nikishin P_n⃗ lie on Γ_1 only, so only μ_1 is compared there.
fn compare_one(ws: &WeightSystem, n: usize, ray: &[f64], sol: &EquilibriumSolution) -> crate::Result<Vec<(usize, usize, f64)>> {
    let nvec = MultiIndex::from_ray(ray, n)?;
    let roots = type2_mop_legendre(ws, &nvec)?.roots()?;
    let comps = if ws.kind == SystemKind::Nikishin { 1 } else { ws.p() };
    let eps = 1e-9 * ws.hull().length();
    let zeros = zero_counting_measure(&roots, n, &ws.intervals[..comps], eps)?;
    let mut out = Vec::new();
    for (j, nu) in zeros.iter().enumerate() {
        let mu = &sol.measures[j];
        let nj = nu.grid.len();
        let d = if nj == 0 {
            mu.total_mass
        } else {
            kolmogorov_distance(mu, &nu.scaled(mu.total_mass / nu.total_mass))?
        };
        out.push((j + 1, nj, d));
    }
    Ok(out)
}

pub(crate) fn compare(ctx: &mut Ctx) -> Result<(), Failure> {
    let schedule = ctx
        .loaded
        .config
        .schedule
        .clone()
        .ok_or_else(|| Failure::Validation("compare needs a \"schedule\"".into()))?;
    if ctx.ws.kind == SystemKind::General && ctx.ws.p() > 1 {
        return Err(Failure::Validation(
            "compare needs an angelesco or nikishin system (or p = 1)".into(),
        ));
    }
    let prob = equilibrium_problem(ctx, Some(schedule.ray.clone()))?;
    let sol = solve(ctx, &prob)?;
    let mut csv = Csv::default();
    csv.comment(format!("ray: {:?}", schedule.ray))
        .comment(format!("equilibrium grid: {}", prob.grid))
        .comment("distance: Kolmogorov distance, zero counting measure rescaled to the component mass")
        .header(&names(&["n", "component", "n_j", "distance"]));
    let mut rows = Vec::new();
    for &n in &schedule.n {
        let ws = ctx.ws.clone();
        let r = ctx.step(&format!("zeros n = {n}"), |_| Ok(compare_one(&ws, n, &schedule.ray, &sol)?))?;
        for (j, nj, d) in r {
            csv.row([n.to_string(), j.to_string(), nj.to_string(), fmt_f64(d)]);
            rows.push(json!({"n": n, "component": j, "n_j": nj, "distance": d}));
        }
    }
    ctx.write("compare.csv", &csv.finish())?;
    let doc = json!({
        "command": "compare",
        "kind": kind_name(&ctx.ws),
        "ray": schedule.ray,
        "equilibrium": sol.report,
        "rows": rows,
    });
    ctx.write_json("compare.json", &doc)
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::Construction(_) | Error::Domain(_) => {
                Failure::Validation(e.to_string())
            }
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for v in [0.0, 1.0, -1.0 / 3.0, 1e-20, 6.02e23, 0.3183098861837907, -2.5e-5] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(1e-20), "1e-20");
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::default();
        c.comment("seed: 1").header(&names(&["x", "y"]));
        c.row(["1".to_string(), "a, b".to_string()]);
        assert_eq!(c.finish(), b"# seed: 1\nx,y\n1,\"a, b\"\n");
    }
}
