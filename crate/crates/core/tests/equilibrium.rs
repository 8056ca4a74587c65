use mopkit::equilibrium::{
    cell_log_kernel, kolmogorov_distance, minimize_equilibrium, EquilibriumProblem, EquilibriumSolution,
};
use mopkit::weights::Interval;

fn iv(a: f64, b: f64) -> Interval {
    Interval::new(a, b).unwrap()
}

fn problems(grid: usize) -> Vec<(&'static str, EquilibriumProblem)> {
    vec![
        ("arcsine", EquilibriumProblem::angelesco(vec![iv(-1.0, 1.0)], &[1.0], grid).unwrap()),
        (
            "angelesco",
            EquilibriumProblem::angelesco(vec![iv(-1.0, 0.0), iv(0.0, 1.0)], &[0.5, 0.5], grid).unwrap(),
        ),
        (
            "nikishin",
            EquilibriumProblem::nikishin(vec![iv(0.0, 1.0), iv(-2.0, -1.0)], &[0.5, 0.5], grid).unwrap(),
        ),
    ]
}

/// U_j(x_i) = Σ_k c_jk ∫ ln(1/|x − y|) dμ_k(y), cell averaged.
fn effective_potential(prob: &EquilibriumProblem, sol: &EquilibriumSolution, j: usize) -> Vec<f64> {
    let mu_j = &sol.measures[j];
    mu_j.grid
        .iter()
        .map(|&x| {
            (0..prob.p())
                .map(|k| {
                    let mu = &sol.measures[k];
                    let u: f64 = mu
                        .grid
                        .iter()
                        .zip(&mu.masses)
                        .map(|(&y, &m)| m * cell_log_kernel(x, mu_j.cell_width, y, mu.cell_width))
                        .sum();
                    prob.interaction.c[j][k] * u
                })
                .sum()
        })
        .collect()
}

#[test]
fn refinement_500_vs_2000() {
    for ((name, coarse), (_, fine)) in problems(500).into_iter().zip(problems(2000)) {
        let a = minimize_equilibrium(&coarse).unwrap();
        let b = minimize_equilibrium(&fine).unwrap();
        for (mu, nu) in a.measures.iter().zip(&b.measures) {
            let d = kolmogorov_distance(mu, nu).unwrap();
            assert!(d <= 2e-2, "{name}: {d}");
        }
    }
}

#[test]
fn energy_is_monotone_and_kkt_holds() {
    for (name, prob) in problems(300) {
        let sol = minimize_equilibrium(&prob).unwrap();
        assert!(sol.report.converged, "{name}");
        let trace = &sol.report.energy_trace;
        assert!(trace.windows(2).all(|w| w[1] <= w[0]), "{name}: energy increased");
        for j in 0..prob.p() {
            let h = sol.measures[j].cell_width;
            let u = effective_potential(&prob, &sol, j);
            let masses = &sol.measures[j].masses;
            let total: f64 = masses.iter().sum();
            let level: f64 = u.iter().zip(masses).map(|(u, m)| u * m).sum::<f64>() / total;
            let low = u.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(low >= level - 10.0 * h, "{name} component {j}: {low} vs {level}");
        }
    }
}

#[test]
fn masses_are_conserved() {
    for (name, prob) in problems(200) {
        let sol = minimize_equilibrium(&prob).unwrap();
        for (mu, &m) in sol.measures.iter().zip(&prob.masses) {
            let s: f64 = mu.masses.iter().sum();
            assert!((s - m).abs() < 1e-12, "{name}");
            assert!(mu.masses.iter().all(|&v| v >= 0.0));
        }
    }
}
