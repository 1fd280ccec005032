use std::path::Path;

use anyhow::Context;
use gsrn::distribution::GridManifest;
use serde::{Deserialize, Serialize};

use crate::args::{Engine, GridArgs};

/// Everything needed to rerun a command and get the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub n: Option<usize>,
    pub lambda: Option<f64>,
    #[serde(rename = "N")]
    pub grid: Option<usize>,
    pub dt: Option<f64>,
    pub sigma: Option<f64>,
    pub seed: u64,
    pub samples: Option<usize>,
    pub resolution: Option<usize>,
    pub angles: Option<usize>,
    pub engine: Option<Engine>,
    pub states: Option<Vec<usize>>,
    pub quick: Option<bool>,
    /// Output file names, relative to the manifest's directory.
    pub outputs: Vec<String>,
    /// What the solver actually used (resolved step sizes, retained states).
    pub solved_grid: Option<GridManifest>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            n: None,
            lambda: None,
            grid: None,
            dt: None,
            sigma: None,
            seed,
            samples: None,
            resolution: None,
            angles: None,
            engine: None,
            states: None,
            quick: None,
            outputs: Vec::new(),
            solved_grid: None,
        }
    }

    pub fn with_grid(command: &str, g: &GridArgs) -> Self {
        let mut m = Self::new(command, g.seed);
        m.n = Some(g.n);
        m.lambda = Some(g.lambda);
        m.grid = Some(g.grid);
        m.dt = g.dt;
        m.sigma = Some(g.sigma);
        m.engine = Some(g.engine);
        if g.engine == Engine::Montecarlo {
            m.samples = Some(g.samples);
        }
        m
    }

    /// Grid parameters recorded by a `solve` run.
    pub fn grid_args(&self) -> anyhow::Result<GridArgs> {
        let missing = |what: &str| anyhow::anyhow!("manifest lacks {what}");
        Ok(GridArgs {
            n: self.n.ok_or_else(|| missing("n"))?,
            lambda: self.lambda.ok_or_else(|| missing("lambda"))?,
            grid: self.grid.ok_or_else(|| missing("N"))?,
            dt: self.dt,
            sigma: self.sigma.unwrap_or(0.0),
            engine: self.engine.ok_or_else(|| missing("engine"))?,
            samples: self.samples.unwrap_or(0),
            seed: self.seed,
        })
    }

    pub fn to_json(&self) -> anyhow::Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}
