//! Law of the path integral `X_t` given the initial state.
//!
//! A [`DistributionGrid`] holds `F_k(t, x) = P(X_t <= x | Y_0 = k)` on
//! `[0, 1]²` for a set of initial states. Three engines fill it: an upwind
//! scheme for the transport system, a backward recursion on the integral
//! equation (pure-birth chains only), and Monte Carlo. The characteristic
//! function and the mean are available through [`CharFnEvaluator`].
//!
//! At an atom of `X_t` the grid reports the right-continuous value, so the
//! top state of a pure-birth chain reads exactly `1(x >= t)`.

mod charfn;
mod integral;
mod monte_carlo;
mod remark;
mod singular;
mod upwind;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ctmc::{GeneratorMatrix, RewardFunction};
use crate::error::{invalid, out_of_range, Error, Result};
use crate::scalar::{normal_cdf, Real};

pub use charfn::{mean_via_generator, CharFnEvaluator};
pub use integral::{solve_integral_equation, solve_integral_equation_with, IntegralOptions};
pub use monte_carlo::{
    monte_carlo_cdf, solve_monte_carlo, solve_monte_carlo_with, McEstimate, MonteCarloOptions,
};
pub use remark::{check_remark_bounds, RemarkReport, RemarkViolation};
pub use singular::Singular;
pub use upwind::{solve_upwind, solve_upwind_with, UpwindOptions};

use singular::Chain;

/// Engine that produced a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Upwind,
    IntegralEquation,
    MonteCarlo,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Upwind => "upwind",
            Scheme::IntegralEquation => "integral_equation",
            Scheme::MonteCarlo => "monte_carlo",
        }
    }
}

/// Initial states whose surfaces are kept in memory.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum StateSelection {
    #[default]
    All,
    Only(Vec<usize>),
}

impl StateSelection {
    pub(crate) fn resolve(&self, size: usize) -> Result<Vec<usize>> {
        match self {
            StateSelection::All => Ok((0..size).collect()),
            StateSelection::Only(list) => {
                if list.is_empty() {
                    return invalid("state selection is empty");
                }
                let mut v = list.clone();
                v.sort_unstable();
                v.dedup();
                if let Some(&bad) = v.iter().find(|&&k| k >= size) {
                    return Err(Error::OutOfRange(format!("state {bad} outside 0..{size}")));
                }
                Ok(v)
            }
        }
    }
}

/// Reproduction metadata for a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridManifest {
    pub scheme: Scheme,
    pub n: usize,
    pub lambda: Option<f64>,
    pub internal_points: usize,
    pub time_steps: usize,
    pub dt: f64,
    pub dx: f64,
    pub sigma: f64,
    pub states: Vec<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

/// `F_k(t_i, x_j)` for retained initial states on a uniform `[0, 1]²` grid.
///
/// The x axis has `N` internal nodes plus both endpoints, `Δx = 1/(N+1)`.
/// Values are stored as a remainder on top of a closed-form singular part,
/// so nodal values and bilinear queries both see the exact jumps.
#[derive(Debug, Clone)]
pub struct DistributionGrid<T: Real> {
    generator: GeneratorMatrix<T>,
    reward: RewardFunction<T>,
    chain: Chain<T>,
    scheme: Scheme,
    singular: Singular,
    internal_points: usize,
    time_steps: usize,
    dt: T,
    dx: T,
    sigma: T,
    eps: T,
    states: Vec<usize>,
    remainder: Vec<Vec<T>>,
    samples: Option<usize>,
    seed: Option<u64>,
}

pub(crate) struct GridParts<T: Real> {
    pub generator: GeneratorMatrix<T>,
    pub reward: RewardFunction<T>,
    pub scheme: Scheme,
    pub singular: Singular,
    pub internal_points: usize,
    pub time_steps: usize,
    pub sigma: T,
    pub states: Vec<usize>,
    pub remainder: Vec<Vec<T>>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

pub(crate) fn check_grid_size(internal_points: usize) -> Result<()> {
    if internal_points == 0 {
        return invalid("need at least one internal x node");
    }
    Ok(())
}

/// Tolerance used when deciding whether a node sits on an atom.
pub(crate) fn atom_eps<T: Real>(dx: T) -> T {
    dx * T::lit(1e-9).max(T::epsilon() * T::lit(64.0))
}

impl<T: Real> DistributionGrid<T> {
    pub(crate) fn from_parts(p: GridParts<T>) -> Self {
        let dx = T::one() / T::from_usize_lossy(p.internal_points + 1);
        let dt = T::one() / T::from_usize_lossy(p.time_steps);
        let chain = Chain::new(&p.generator, &p.reward);
        Self {
            generator: p.generator,
            reward: p.reward,
            chain,
            scheme: p.scheme,
            singular: p.singular,
            internal_points: p.internal_points,
            time_steps: p.time_steps,
            dt,
            dx,
            sigma: p.sigma,
            eps: atom_eps(dx),
            states: p.states,
            remainder: p.remainder,
            samples: p.samples,
            seed: p.seed,
        }
    }

    pub fn generator(&self) -> &GeneratorMatrix<T> {
        &self.generator
    }

    pub fn reward(&self) -> &RewardFunction<T> {
        &self.reward
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn singular(&self) -> Singular {
        self.singular
    }

    /// `N`, the number of internal x nodes.
    pub fn internal_points(&self) -> usize {
        self.internal_points
    }

    pub fn time_steps(&self) -> usize {
        self.time_steps
    }

    pub fn x_nodes(&self) -> usize {
        self.internal_points + 2
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    /// Retained initial states, ascending.
    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn has_state(&self, k: usize) -> bool {
        self.states.binary_search(&k).is_ok()
    }

    #[inline]
    pub fn t_at(&self, i: usize) -> T {
        T::from_usize_lossy(i) * self.dt
    }

    #[inline]
    pub fn x_at(&self, j: usize) -> T {
        T::from_usize_lossy(j) * self.dx
    }

    pub fn time_axis(&self) -> Vec<T> {
        (0..=self.time_steps).map(|i| self.t_at(i)).collect()
    }

    pub fn x_axis(&self) -> Vec<T> {
        (0..self.x_nodes()).map(|j| self.x_at(j)).collect()
    }

    fn slot(&self, state: usize) -> Result<usize> {
        self.states.binary_search(&state).map_err(|_| {
            Error::OutOfRange(format!("state {state} was not retained in this grid"))
        })
    }

    #[inline]
    fn singular_part(&self, state: usize, t: T, x: T) -> T {
        self.chain
            .singular(self.singular, state, t, x, self.sigma, self.eps)
    }

    #[inline]
    fn raw_node(&self, slot: usize, i: usize, j: usize) -> T {
        let state = self.states[slot];
        self.singular_part(state, self.t_at(i), self.x_at(j)) + self.remainder[slot][i * self.x_nodes() + j]
    }

    /// `F_state(t_i, x_j)`.
    pub fn node(&self, state: usize, i: usize, j: usize) -> Result<T> {
        let slot = self.slot(state)?;
        if i > self.time_steps || j >= self.x_nodes() {
            return out_of_range(format!("node ({i}, {j}) outside the grid"));
        }
        Ok(self.raw_node(slot, i, j).clamp_to(T::zero(), T::one()))
    }

    /// `F_state(t_i, ·)` at every x node.
    pub fn row(&self, state: usize, i: usize) -> Result<Vec<T>> {
        let slot = self.slot(state)?;
        if i > self.time_steps {
            return out_of_range(format!("time index {i} outside the grid"));
        }
        Ok((0..self.x_nodes())
            .map(|j| self.raw_node(slot, i, j).clamp_to(T::zero(), T::one()))
            .collect())
    }

    /// `F_state(t, x)`: the singular part is evaluated exactly, the
    /// remainder bilinearly.
    pub fn value(&self, state: usize, t: T, x: T) -> Result<T> {
        let slot = self.slot(state)?;
        let slack = self.eps;
        if !(t >= -slack && t <= T::one() + slack) {
            return out_of_range(format!("t = {t} outside [0, 1]"));
        }
        if x.is_nan() {
            return invalid("x is NaN");
        }
        let t = t.clamp_to(T::zero(), T::one());
        if self.sigma == T::zero() {
            if x < -slack {
                return Ok(T::zero());
            }
            if x > T::one() {
                return Ok(T::one());
            }
        }
        let s = self.singular_part(state, t, x);
        let r = if x < T::zero() {
            T::zero()
        } else {
            self.interpolate(slot, t, x.min(T::one()))
        };
        Ok((s + r).clamp_to(T::zero(), T::one()))
    }

    fn interpolate(&self, slot: usize, t: T, x: T) -> T {
        let nx = self.x_nodes();
        let (i0, a) = cell(t / self.dt, self.time_steps);
        let (j0, b) = cell(x / self.dx, nx - 1);
        let r = &self.remainder[slot];
        let at = |i: usize, j: usize| r[i * nx + j];
        let one = T::one();
        (one - a) * ((one - b) * at(i0, j0) + b * at(i0, j0 + 1))
            + a * ((one - b) * at(i0 + 1, j0) + b * at(i0 + 1, j0 + 1))
    }

    /// Discrete Stieltjes mean `Σ_j x_j (F_j - F_{j-1})` at time index `i`.
    pub fn mean(&self, state: usize, i: usize) -> Result<T> {
        let row = self.row(state, i)?;
        let mut prev = T::zero();
        let mut m = T::zero();
        for (j, &v) in row.iter().enumerate() {
            m = m + self.x_at(j) * (v - prev);
            prev = v;
        }
        Ok(m)
    }

    /// Checks range, monotonicity in `x`, the initial row, saturation for
    /// `x >= (max f) t + Δx`, and the travelling step of absorbing states.
    /// Mismatches within one cell of a step are ignored.
    pub fn invariant_report(&self, tol: T) -> InvariantReport<T> {
        let mut rep = InvariantReport::<T>::default();
        let nx = self.x_nodes();
        let fmax = self.reward.max();
        for (slot, &k) in self.states.iter().enumerate() {
            let absorbing = self.generator.is_absorbing(k);
            let fk = self.reward.value(k);
            for i in 0..=self.time_steps {
                let t = self.t_at(i);
                let mut prev = T::zero();
                for j in 0..nx {
                    let x = self.x_at(j);
                    let raw = self.raw_node(slot, i, j);
                    rep.nodes_checked += 1;
                    if raw < -tol || raw > T::one() + tol || raw.is_nan() {
                        rep.out_of_range += 1;
                    }
                    let v = raw.clamp_to(T::zero(), T::one());
                    if j > 0 && v < prev - tol {
                        rep.non_monotone += 1;
                        rep.max_monotone_drop = rep.max_monotone_drop.max(prev - v);
                    }
                    prev = v;
                    if self.sigma > T::zero() {
                        if i == 0 && (v - normal_cdf(x, self.sigma)).abs() > tol {
                            rep.initial_mismatches += 1;
                        }
                        continue;
                    }
                    if i == 0 && (v - T::one()).abs() > tol {
                        rep.initial_mismatches += 1;
                    }
                    if x >= fmax * t + self.dx && (v - T::one()).abs() > tol {
                        rep.saturation_mismatches += 1;
                    }
                    if absorbing && (x - fk * t).abs() > self.dx {
                        let expected = if x >= fk * t { T::one() } else { T::zero() };
                        if (v - expected).abs() > tol {
                            rep.step_mismatches += 1;
                        }
                    }
                }
            }
        }
        rep
    }

    pub fn manifest(&self) -> GridManifest {
        GridManifest {
            scheme: self.scheme,
            n: self.generator.size() - 1,
            lambda: self
                .generator
                .pure_birth_parameters()
                .map(|(_, l)| l.to_f64_lossy()),
            internal_points: self.internal_points,
            time_steps: self.time_steps,
            dt: self.dt.to_f64_lossy(),
            dx: self.dx.to_f64_lossy(),
            sigma: self.sigma.to_f64_lossy(),
            states: self.states.clone(),
            samples: self.samples,
            seed: self.seed,
        }
    }

    /// Long-form CSV `state,t,x,F` over every retained node.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["state", "t", "x", "F"])?;
        for (slot, &k) in self.states.iter().enumerate() {
            let ks = k.to_string();
            for i in 0..=self.time_steps {
                let ts = self.t_at(i).to_string();
                for j in 0..self.x_nodes() {
                    let v = self.raw_node(slot, i, j).clamp_to(T::zero(), T::one());
                    w.write_record([ks.as_str(), &ts, &self.x_at(j).to_string(), &v.to_string()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Surface of one state as a matrix: first row `t\x` and the x axis,
    /// then one row per time node.
    pub fn write_surface_csv<W: Write>(&self, state: usize, writer: W) -> Result<()> {
        let slot = self.slot(state)?;
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t\\x".to_string()];
        header.extend(self.x_axis().iter().map(|x| x.to_string()));
        w.write_record(&header)?;
        for i in 0..=self.time_steps {
            let mut rec = vec![self.t_at(i).to_string()];
            rec.extend((0..self.x_nodes()).map(|j| {
                self.raw_node(slot, i, j)
                    .clamp_to(T::zero(), T::one())
                    .to_string()
            }));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Index of the cell containing `pos` (in units of the step) and the
/// fractional offset inside it, for an axis with `last + 1` nodes.
#[inline]
fn cell<T: Real>(pos: T, last: usize) -> (usize, T) {
    let pos = pos.max(T::zero());
    let i = pos.floor().to_usize().unwrap_or(last).min(last - 1);
    let frac = (pos - T::from_usize_lossy(i)).clamp_to(T::zero(), T::one());
    (i, frac)
}

/// Counts of invariant breaches found by [`DistributionGrid::invariant_report`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InvariantReport<T> {
    pub nodes_checked: usize,
    pub out_of_range: usize,
    pub non_monotone: usize,
    pub max_monotone_drop: T,
    pub initial_mismatches: usize,
    pub saturation_mismatches: usize,
    pub step_mismatches: usize,
}

impl<T> InvariantReport<T> {
    pub fn is_clean(&self) -> bool {
        self.out_of_range == 0
            && self.non_monotone == 0
            && self.initial_mismatches == 0
            && self.saturation_mismatches == 0
            && self.step_mismatches == 0
    }
}
