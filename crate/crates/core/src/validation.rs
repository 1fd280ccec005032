//! Self-check suite over the invariants of every module.
//!
//! [`run_validation`] is deterministic given its seed: reports for equal
//! configurations serialize to identical JSON. No timings are recorded.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ctmc::{
    build_pure_birth, rng_from_seed, sample_trajectory_with, transition_matrix, RewardFunction,
};
use crate::distribution::{
    check_remark_bounds, monte_carlo_cdf, solve_integral_equation, solve_upwind, CharFnEvaluator,
    DistributionGrid,
};
use crate::error::Result;
use crate::gsrn::{
    expected_norm_2d, norm_cdf, strong_extension_samples, weak_extension, SortedVector,
};
use crate::norm_process::{hitting_time_integral, validate_norm_axioms, NormPath};

/// Kolmogorov–Smirnov statistic of `samples` against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    ks_statistic_with_atoms(samples, &cdf, &cdf)
}

/// Kolmogorov–Smirnov statistic against a CDF with atoms: `left(x)` is the
/// left limit `F(x-)`. Ties are grouped, so a sample atom matching a law
/// atom contributes nothing.
pub fn ks_statistic_with_atoms(samples: &[f64], cdf: impl Fn(f64) -> f64, left: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let m = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        let x = s[i];
        let mut j = i;
        while j < s.len() && s[j] == x {
            j += 1;
        }
        d = d.max((left(x) - i as f64 / m).abs()).max((j as f64 / m - cdf(x)).abs());
        i = j;
    }
    d
}

/// Asymptotic p-value of the one-sample KS statistic `d` for `m` samples.
pub fn kolmogorov_pvalue(d: f64, m: usize) -> f64 {
    let sm = (m as f64).sqrt();
    let lambda = (sm + 0.12 + 0.11 / sm) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationConfig {
    pub seed: u64,
    pub quick: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Measured quantity compared against `threshold`.
    pub metric: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub quick: bool,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct Scale {
    samples: usize,
    paths: usize,
    pairs: usize,
    grid: usize,
    ks: usize,
}

fn check(name: &str, metric: f64, threshold: f64, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed,
        metric,
        threshold,
        detail,
    }
}

fn failed(name: &str, err: impl std::fmt::Display) -> CheckResult {
    check(name, f64::NAN, f64::NAN, false, format!("error: {err}"))
}

fn sup_gap(a: &DistributionGrid<f64>, b: &DistributionGrid<f64>, k: usize) -> Result<f64> {
    let mut sup: f64 = 0.0;
    for i in 0..=a.time_steps() {
        for (x, y) in a.row(k, i)?.iter().zip(&b.row(k, i)?) {
            sup = sup.max((x - y).abs());
        }
    }
    Ok(sup)
}

/// Runs every check at the scale chosen by `config.quick`.
pub fn run_validation(config: &ValidationConfig) -> ValidationReport {
    let scale = if config.quick {
        Scale {
            samples: 20_000,
            paths: 200,
            pairs: 20,
            grid: 100,
            ks: 2_000,
        }
    } else {
        Scale {
            samples: 100_000,
            paths: 1_000,
            pairs: 100,
            grid: 200,
            ks: 10_000,
        }
    };
    let seed = config.seed;
    type Step<'a> = (&'a str, Box<dyn Fn() -> Result<CheckResult> + 'a>);
    let steps: Vec<Step> = vec![
        ("transition_semigroup", Box::new(transition_semigroup)),
        ("sampler_marginals", Box::new(|| sampler_marginals(&scale, seed))),
        ("pathwise_identity", Box::new(|| pathwise_identity(&scale, seed))),
        ("norm_axioms", Box::new(|| norm_axioms(&scale, seed))),
        ("characteristic_function", Box::new(charfn_checks)),
        ("grid_invariants", Box::new(|| grid_invariants(&scale))),
        ("cross_engine_ground_state", Box::new(|| cross_engine(&scale))),
        ("remark_bounds", Box::new(|| remark(&scale))),
        ("grid_mean", Box::new(|| grid_mean(&scale))),
        ("expected_norm_properties", Box::new(|| expected_norm_props(&scale, seed))),
        ("expected_norm_monotone_in_lambda", Box::new(|| lambda_monotone(&scale))),
        ("weak_extension_plane", Box::new(|| weak_plane(&scale))),
        ("strong_extension_law", Box::new(|| strong_law(&scale, seed))),
    ];
    let mut checks: Vec<CheckResult> = steps
        .into_iter()
        .map(|(name, run)| run().unwrap_or_else(|e| failed(name, e)))
        .collect();
    match engines_vs_mc(&scale, seed) {
        Ok(c) => checks.extend(c),
        Err(e) => checks.push(failed("engines_vs_monte_carlo", e)),
    }
    ValidationReport {
        seed,
        quick: config.quick,
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

fn transition_semigroup() -> Result<CheckResult> {
    let g = build_pure_birth(10, 10.0)?;
    let mut worst: f64 = 0.0;
    for &(s, t) in &[(0.1, 0.2), (0.3, 0.7), (1.0, 2.5)] {
        let ps = transition_matrix(&g, s)?;
        let pt = transition_matrix(&g, t)?;
        let pst = transition_matrix(&g, s + t)?;
        let prod = ps.matmul(&pt);
        for i in 0..g.size() {
            worst = worst.max((ps.row(i).iter().sum::<f64>() - 1.0).abs());
            for j in 0..g.size() {
                worst = worst.max((prod.get(i, j) - pst.get(i, j)).abs());
            }
        }
    }
    Ok(check(
        "transition_semigroup",
        worst,
        1e-9,
        worst <= 1e-9,
        "max |P(s)P(t) - P(s+t)| and row-sum defect".into(),
    ))
}

fn sampler_marginals(scale: &Scale, seed: u64) -> Result<CheckResult> {
    let g = build_pure_birth(10, 10.0)?;
    let p = transition_matrix(&g, 1.0)?;
    let mut rng = rng_from_seed(seed);
    let mut counts = vec![0usize; g.size()];
    for _ in 0..scale.samples {
        counts[sample_trajectory_with(&g, 0, 1.0, &mut rng)?.final_state()] += 1;
    }
    let m = scale.samples as f64;
    let mut worst: f64 = 0.0;
    for (k, &c) in counts.iter().enumerate() {
        let q = p.get(0, k);
        let se = (q * (1.0 - q) / m).sqrt().max(1e-12);
        worst = worst.max((c as f64 / m - q).abs() / se);
    }
    Ok(check(
        "sampler_marginals",
        worst,
        4.0,
        worst <= 4.0,
        format!("max standard-error distance of P(Y_1 = k) over {} paths", scale.samples),
    ))
}

fn pathwise_identity(scale: &Scale, seed: u64) -> Result<CheckResult> {
    let mut rng = rng_from_seed(seed ^ 0x5EED);
    let mut worst: f64 = 0.0;
    for &n in &[1usize, 5, 10] {
        let g = build_pure_birth(n, 3.0 * n as f64)?;
        let f = RewardFunction::linear(n)?;
        for _ in 0..scale.paths {
            let traj = sample_trajectory_with(&g, 0, 1.0, &mut rng)?;
            let path = NormPath::from_trajectory(&traj, &f)?;
            for i in 0..=10 {
                let t = i as f64 / 10.0;
                let d = (hitting_time_integral(&traj, &f, t)? - path.path_integral(t)?).abs();
                worst = worst.max(d);
            }
        }
    }
    Ok(check(
        "pathwise_identity",
        worst,
        1e-12,
        worst <= 1e-12,
        "hitting-time form vs path integral, n in {1, 5, 10}".into(),
    ))
}

fn norm_axioms(scale: &Scale, seed: u64) -> Result<CheckResult> {
    let mut rng = rng_from_seed(seed ^ 0xA710);
    let mut violations = 0;
    for p in 0..scale.paths {
        let n = 1 + p % 20;
        let lambda = [0.5, 5.0, 50.0][p % 3];
        let g = build_pure_birth(n, lambda)?;
        let f = RewardFunction::linear(n)?;
        let path = NormPath::from_trajectory(&sample_trajectory_with(&g, 0, 1.0, &mut rng)?, &f)?;
        let vectors: Vec<[f64; 2]> = (0..scale.pairs)
            .map(|_| {
                let a: f64 = rng.random::<f64>() * 3.0;
                let b: f64 = rng.random::<f64>() * a;
                [a, b]
            })
            .collect();
        violations += validate_norm_axioms(&path, &vectors, 1e-8)?.violations.len();
    }
    Ok(check(
        "norm_axioms",
        violations as f64,
        0.0,
        violations == 0,
        format!("{} paths x {} vectors", scale.paths, scale.pairs),
    ))
}

fn charfn_checks() -> Result<CheckResult> {
    let g = build_pure_birth(10, 10.0)?;
    let f = RewardFunction::linear(10)?;
    let ev = CharFnEvaluator::new(g, f)?;
    let mut worst: f64 = 0.0;
    for &t in &[0.25, 0.5, 1.0] {
        let one: num_complex::Complex<f64> = ev.characteristic_function(t, 0.0, 0)?;
        worst = worst.max((one.re - 1.0).abs() + one.im.abs());
        for &u in &[-20.0, 3.0, 50.0] {
            worst = worst.max(ev.characteristic_function(t, u, 0)?.norm() - 1.0);
        }
        for &h in &[1e-3, 1e-4] {
            let d = (ev.characteristic_function(t, h, 0)? - ev.characteristic_function(t, -h, 0)?) / (2.0 * h);
            // central difference error is O(h²) times the third moment
            let fd = if h == 1e-3 { 1e-5 } else { 0.0 };
            worst = worst.max((d.im - ev.mean(t, 0)?).abs() - fd);
        }
    }
    let g1 = build_pure_birth(1, 1.0)?;
    let e1 = CharFnEvaluator::new(g1, RewardFunction::linear(1)?)?;
    worst = worst.max((e1.mean(1.0, 0)? - (-1.0_f64).exp()).abs());
    Ok(check(
        "characteristic_function",
        worst,
        1e-6,
        worst <= 1e-6,
        "phi(t,0)=1, |phi|<=1, finite-difference mean, n=1 mean e^-1".into(),
    ))
}

fn fig1_grids(scale: &Scale) -> Result<(DistributionGrid<f64>, DistributionGrid<f64>)> {
    let g = build_pure_birth(10, 10.0)?;
    let f = RewardFunction::linear(10)?;
    Ok((
        solve_upwind(&g, &f, scale.grid, None, 0.0)?,
        solve_integral_equation(10, 10.0, scale.grid, None)?,
    ))
}

fn grid_invariants(scale: &Scale) -> Result<CheckResult> {
    let (up, ie) = fig1_grids(scale)?;
    let mut bad = 0;
    for grid in [&up, &ie] {
        let r = grid.invariant_report(1e-9);
        bad += r.out_of_range + r.non_monotone + r.initial_mismatches + r.saturation_mismatches + r.step_mismatches;
    }
    Ok(check(
        "grid_invariants",
        bad as f64,
        0.0,
        bad == 0,
        "range, monotonicity, initial row, saturation, top-state step".into(),
    ))
}

fn cross_engine(scale: &Scale) -> Result<CheckResult> {
    let (up, ie) = fig1_grids(scale)?;
    let gap = sup_gap(&up, &ie, 0)?;
    Ok(check(
        "cross_engine_ground_state",
        gap,
        0.02,
        gap <= 0.02,
        format!("sup |F_upwind - F_integral| for initial state 0, N = {}", scale.grid),
    ))
}

/// Probes both engines against Monte Carlo. The integral engine must sit
/// within 4 standard errors; first-order upwind carries O(dx) numerical
/// diffusion, so it gets the cross-engine budget on top.
fn engines_vs_mc(scale: &Scale, seed: u64) -> Result<Vec<CheckResult>> {
    let (up, ie) = fig1_grids(scale)?;
    let g = build_pure_birth(10, 10.0)?;
    let f = RewardFunction::linear(10)?;
    let budget = 0.02;
    let mut z_ie: f64 = 0.0;
    let mut excess_up = f64::NEG_INFINITY;
    for &(t, x) in &[(0.25, 0.05), (0.5, 0.25), (0.75, 0.4), (1.0, 0.6)] {
        let mc: crate::distribution::McEstimate<f64> = monte_carlo_cdf(&g, &f, t, x, 0, scale.samples, seed)?;
        let se = mc.std_error.max(1e-12);
        z_ie = z_ie.max((ie.value(0, t, x)? - mc.estimate).abs() / se);
        excess_up = excess_up.max((up.value(0, t, x)? - mc.estimate).abs() - 4.0 * se);
    }
    Ok(vec![
        check(
            "integral_vs_monte_carlo",
            z_ie,
            4.0,
            z_ie <= 4.0,
            format!("max standard errors over 4 probes, {} paths", scale.samples),
        ),
        check(
            "upwind_vs_monte_carlo",
            excess_up,
            budget,
            excess_up <= budget,
            "max |F_upwind - F_mc| - 4 se over 4 probes".into(),
        ),
    ])
}

fn remark(scale: &Scale) -> Result<CheckResult> {
    let (up, ie) = fig1_grids(scale)?;
    let mut count = 0;
    for grid in [&up, &ie] {
        count += check_remark_bounds(grid, 0.0, 1.0)?.violations.len();
    }
    Ok(check(
        "remark_bounds",
        count as f64,
        0.0,
        count == 0,
        "F(t, x - M dt) <= F(t + dt, x) <= F(t, x - m dt), one-cell slack".into(),
    ))
}

fn grid_mean(scale: &Scale) -> Result<CheckResult> {
    let (up, ie) = fig1_grids(scale)?;
    let ev = CharFnEvaluator::new(up.generator().clone(), up.reward().clone())?;
    let mut worst: f64 = 0.0;
    for grid in [&up, &ie] {
        for &frac in &[4usize, 2, 1] {
            let i = grid.time_steps() / frac;
            let d = (grid.mean(0, i)? - ev.mean(grid.t_at(i), 0)?).abs() / grid.dx();
            worst = worst.max(d);
        }
    }
    Ok(check(
        "grid_mean",
        worst,
        2.0,
        worst <= 2.0,
        "|discrete mean - generator mean| in units of dx at t = 1/4, 1/2, 1".into(),
    ))
}

fn expected_norm_props(scale: &Scale, seed: u64) -> Result<CheckResult> {
    let (_, ie) = fig1_grids(scale)?;
    let mut rng = rng_from_seed(seed ^ 0xE0);
    let mut bad = 0;
    let tol = 1e-9;
    let e = |a: f64, b: f64| -> Result<f64> {
        let (a, b) = if a >= b { (a, b) } else { (b, a) };
        expected_norm_2d(&ie, &SortedVector::new(vec![a, b])?)
    };
    for _ in 0..scale.pairs * 10 {
        let v = [rng.random::<f64>(), rng.random::<f64>()];
        let w = [rng.random::<f64>(), rng.random::<f64>()];
        let ev = e(v[0], v[1])?;
        let ew = e(w[0], w[1])?;
        let es = e(v[0] + w[0], v[1] + w[1])?;
        let hi = v[0].max(v[1]);
        if ev < hi - tol || ev > v[0] + v[1] + tol {
            bad += 1;
        }
        // interpolating the remainder bends convexity at O(dx²)
        if es > ev + ew + ie.dx() * ie.dx() * es {
            bad += 1;
        }
        for &alpha in &[0.5, 2.0] {
            if (e(alpha * v[0], alpha * v[1])? - alpha * ev).abs() > tol * alpha {
                bad += 1;
            }
        }
    }
    Ok(check(
        "expected_norm_properties",
        bad as f64,
        0.0,
        bad == 0,
        format!("bracket, homogeneity, subadditivity on {} random pairs", scale.pairs * 10),
    ))
}

fn lambda_monotone(scale: &Scale) -> Result<CheckResult> {
    let v = SortedVector::new(vec![1.0, 1.0])?;
    let mut values = Vec::new();
    for &lambda in &[0.0, 1.0, 10.0, 100.0] {
        let grid = solve_integral_equation(10, lambda, scale.grid, None)?;
        values.push(expected_norm_2d(&grid, &v)?);
    }
    let worst_drop = values
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(check(
        "expected_norm_monotone_in_lambda",
        worst_drop,
        0.0,
        worst_drop <= 0.0,
        format!("E p(1,1) for lambda in {{0,1,10,100}}: {values:?}"),
    ))
}

fn weak_plane(scale: &Scale) -> Result<CheckResult> {
    let (_, ie) = fig1_grids(scale)?;
    let mut worst: f64 = 0.0;
    for i in 0..=10 {
        let b = i as f64 / 10.0;
        let e2 = expected_norm_2d(&ie, &SortedVector::new(vec![1.0, b])?)?;
        let e3 = weak_extension(&ie, &SortedVector::new(vec![1.0, b, 0.0])?)?;
        worst = worst.max((e2 - e3).abs());
    }
    let diag = weak_extension(&ie, &SortedVector::new(vec![1.0, 1.0, 1.0])?)?;
    let ok = worst <= 1e-12 && (1.0..=3.0).contains(&diag);
    Ok(check(
        "weak_extension_plane",
        worst,
        1e-12,
        ok,
        format!("restriction to a coordinate plane; E p_w(1,1,1) = {diag:.6}"),
    ))
}

fn strong_law(scale: &Scale, seed: u64) -> Result<CheckResult> {
    let (_, ie) = fig1_grids(scale)?;
    let g = ie.generator().clone();
    let f = ie.reward().clone();
    let v = SortedVector::new(vec![1.0, 1.0])?;
    let samples = strong_extension_samples(&g, &f, &v, scale.ks, seed)?;
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let se = (var / m).sqrt();
    let expected = expected_norm_2d(&ie, &v)?;
    let z = (mean - expected).abs() / se.max(1e-12);
    let cdf = |y: f64| norm_cdf(&ie, &v, y.clamp(1.0, 2.0)).unwrap_or(f64::NAN);
    let d = ks_statistic_with_atoms(&samples, cdf, |y| if y <= 1.0 { 0.0 } else { cdf(y) });
    let p = kolmogorov_pvalue(d, samples.len());
    Ok(check(
        "strong_extension_law",
        p,
        0.05,
        z <= 4.0 && p >= 0.05,
        format!("mean {mean:.5} vs {expected:.5} ({z:.2} se); KS D = {d:.5}, p = {p:.3}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_statistic_of_uniform_grid() {
        let s: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = ks_statistic(&s, |x| x);
        assert!((d - 0.005).abs() < 1e-12);
        assert!(kolmogorov_pvalue(d, 100) > 0.99);
    }

    #[test]
    fn atoms_are_matched_by_ties() {
        // half the mass at 0, the rest uniform on (0, 1)
        let mut s = vec![0.0; 50];
        s.extend((0..50).map(|i| (i as f64 + 0.5) / 50.0));
        let cdf = |x: f64| if x < 0.0 { 0.0 } else { 0.5 + 0.5 * x.min(1.0) };
        let left = |x: f64| if x <= 0.0 { 0.0 } else { cdf(x) };
        assert!(ks_statistic_with_atoms(&s, cdf, left) <= 0.01 + 1e-12);
        assert!(ks_statistic(&s, cdf) >= 0.5 - 1e-12);
    }

    #[test]
    fn kolmogorov_critical_value() {
        // D_crit ≈ 1.358 / sqrt(m) at the 5% level
        let m = 10_000;
        let d = 1.358 / (m as f64).sqrt();
        let p = kolmogorov_pvalue(d, m);
        assert!((p - 0.05).abs() < 0.005, "{p}");
        assert!(kolmogorov_pvalue(0.05, m) < 1e-6);
    }

    #[test]
    fn quick_report_is_deterministic() {
        let cfg = ValidationConfig { seed: 42, quick: true };
        let a = run_validation(&cfg).to_json().unwrap();
        let b = run_validation(&cfg).to_json().unwrap();
        assert_eq!(a, b);
    }
}
