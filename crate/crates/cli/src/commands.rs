use std::path::Path;

use gsrn::ctmc::{build_pure_birth, RewardFunction};
use gsrn::distribution::{
    solve_integral_equation_with, solve_monte_carlo_with, solve_upwind_with, IntegralOptions,
    MonteCarloOptions, StateSelection, UpwindOptions,
};
use gsrn::export::{write_obj, write_svg_polyline};
use gsrn::gsrn::{unit_circle, unit_sphere_3d};
use gsrn::validation::{run_validation, ValidationConfig};
use gsrn::DistributionGrid;

use crate::args::{CircleArgs, Engine, GridArgs, SolveArgs, SphereArgs, ValidateArgs};
use crate::manifest::RunManifest;
use crate::output::Outputs;
use crate::UsageError;

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn engine_name(e: Engine) -> &'static str {
    match e {
        Engine::Upwind => "upwind",
        Engine::Integral => "integral",
        Engine::Montecarlo => "montecarlo",
    }
}

/// Time steps on [0, 1] for an explicit step, which must divide 1.
fn steps_for(dt: f64) -> anyhow::Result<usize> {
    if !(dt > 0.0 && dt <= 1.0) {
        return Err(usage(format!("--dt must lie in (0, 1], got {dt}")));
    }
    let steps = (1.0 / dt).round();
    if (steps * dt - 1.0).abs() > 1e-9 {
        return Err(usage(format!("--dt {dt} does not divide the unit time interval")));
    }
    Ok(steps as usize)
}

fn solve_grid(g: &GridArgs, states: StateSelection) -> anyhow::Result<DistributionGrid> {
    if !(g.lambda >= 0.0 && g.lambda.is_finite()) {
        return Err(usage(format!("--lambda must be finite and nonnegative, got {}", g.lambda)));
    }
    if g.sigma != 0.0 && g.engine != Engine::Upwind {
        return Err(usage("--sigma applies to the upwind engine only"));
    }
    let grid = match g.engine {
        Engine::Upwind => {
            let chain = build_pure_birth(g.n, g.lambda)?;
            let f = RewardFunction::linear(g.n)?;
            let opts = UpwindOptions {
                dt: g.dt,
                sigma: g.sigma,
                states,
                ..UpwindOptions::new(g.grid)
            };
            solve_upwind_with(&chain, &f, &opts)?
        }
        Engine::Integral => {
            let opts = IntegralOptions {
                time_steps: g.dt.map(steps_for).transpose()?,
                states,
                ..IntegralOptions::new(g.grid)
            };
            solve_integral_equation_with(g.n, g.lambda, &opts)?
        }
        Engine::Montecarlo => {
            if g.samples == 0 {
                return Err(usage("--samples must be positive"));
            }
            let chain = build_pure_birth(g.n, g.lambda)?;
            let f = RewardFunction::linear(g.n)?;
            let opts = MonteCarloOptions {
                time_steps: g.dt.map(steps_for).transpose()?,
                states,
                ..MonteCarloOptions::new(g.grid, g.samples, g.seed)
            };
            solve_monte_carlo_with(&chain, &f, &opts)?
        }
    };
    Ok(grid)
}

fn stem(command: &str, g: &GridArgs) -> String {
    let mut s = format!("{command}_{}_n{}_lambda{}_N{}", engine_name(g.engine), g.n, g.lambda, g.grid);
    if g.engine == Engine::Montecarlo {
        s.push_str(&format!("_seed{}", g.seed));
    }
    s
}

fn grid_source(grid: &GridArgs, from: Option<&Path>) -> anyhow::Result<GridArgs> {
    match from {
        Some(path) => RunManifest::read(path)
            .and_then(|m| m.grid_args())
            .map_err(|e| usage(format!("--from-manifest: {e:#}"))),
        None => Ok(grid.clone()),
    }
}

pub fn solve(a: &SolveArgs) -> anyhow::Result<bool> {
    let selection = match &a.states {
        Some(s) if s.is_empty() => return Err(usage("--states needs at least one state")),
        Some(s) => StateSelection::Only(s.clone()),
        None => StateSelection::All,
    };
    let grid = solve_grid(&a.grid, selection)?;
    let mut out = Outputs::new(&a.out.out, stem("solve", &a.grid))?;
    out.write(".csv", |w| Ok(grid.write_csv(w)?))?;
    let surfaces: Vec<usize> = match &a.states {
        Some(s) => s.clone(),
        None => vec![0],
    };
    for &k in &surfaces {
        out.write(&format!("_surface_state{k}.csv"), |w| Ok(grid.write_surface_csv(k, w)?))?;
    }
    let mut m = RunManifest::with_grid("solve", &a.grid);
    m.states = a.states.clone();
    m.solved_grid = Some(grid.manifest());
    out.finish(m)?;
    Ok(true)
}

pub fn circle(a: &CircleArgs) -> anyhow::Result<bool> {
    let g = grid_source(&a.grid, a.from_manifest.as_deref())?;
    if a.angles < 3 {
        return Err(usage("--angles must be at least 3"));
    }
    let grid = solve_grid(&g, StateSelection::Only(vec![0]))?;
    let table = unit_circle(&grid, a.angles)?;
    let mut out = Outputs::new(&a.out.out, stem("circle", &g))?;
    out.write(".csv", |w| Ok(table.write_csv(w)?))?;
    let curve = table.full_curve()?;
    out.write(".svg", |w| Ok(write_svg_polyline(&curve, 512, w)?))?;
    let mut m = RunManifest::with_grid("circle", &g);
    m.angles = Some(a.angles);
    m.solved_grid = Some(grid.manifest());
    out.finish(m)?;
    Ok(true)
}

pub fn sphere(a: &SphereArgs) -> anyhow::Result<bool> {
    let g = grid_source(&a.grid, a.from_manifest.as_deref())?;
    if a.resolution < 3 {
        return Err(usage("--resolution must be at least 3"));
    }
    let grid = solve_grid(&g, StateSelection::Only(vec![0]))?;
    let table = unit_sphere_3d(&grid, a.resolution)?;
    let mut out = Outputs::new(&a.out.out, format!("{}_res{}", stem("sphere", &g), a.resolution))?;
    out.write(".csv", |w| Ok(table.write_csv(w)?))?;
    let (verts, faces) = table.full_mesh()?;
    out.write(".obj", |w| Ok(write_obj(&verts, &faces, w)?))?;
    let mut m = RunManifest::with_grid("sphere", &g);
    m.resolution = Some(a.resolution);
    m.solved_grid = Some(grid.manifest());
    out.finish(m)?;
    Ok(true)
}

pub fn validate(a: &ValidateArgs) -> anyhow::Result<bool> {
    let report = run_validation(&ValidationConfig {
        seed: a.seed,
        quick: a.quick,
    });
    for c in &report.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        eprintln!("{verdict} {}: {} (metric {}, threshold {})", c.name, c.detail, c.metric, c.threshold);
    }
    let json = report.to_json()? + "\n";
    let name = format!("validate_seed{}{}", a.seed, if a.quick { "_quick" } else { "" });
    let mut out = Outputs::new(&a.out.out, name)?;
    out.write(".json", |w| Ok(w.write_all(json.as_bytes())?))?;
    let mut m = RunManifest::new("validate", a.seed);
    m.quick = Some(a.quick);
    out.finish(m)?;
    print!("{json}");
    Ok(report.passed)
}
