//! Monte Carlo estimates of `P(X_t < x)` and of whole grids.
//!
//! Samples are split into fixed-size shards, each driven by its own ChaCha
//! stream derived from the seed, so results do not depend on the number of
//! worker threads.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::Exp1;
use rayon::prelude::*;

use super::singular::{Chain, Singular};
use super::{check_grid_size, DistributionGrid, GridParts, Scheme, StateSelection};
use crate::ctmc::{GeneratorMatrix, RewardFunction};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

const SHARD: usize = 4096;

fn shard_rng(seed: u64, shard: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard as u64);
    rng
}

fn shard_sizes(samples: usize) -> Vec<usize> {
    let full = samples / SHARD;
    let mut v = vec![SHARD; full];
    if !samples.is_multiple_of(SHARD) {
        v.push(samples % SHARD);
    }
    v
}

/// Simulates one path started at `y0` and writes `X_{times[i]}` into `out`;
/// `times` must be nondecreasing.
pub(crate) fn path_integrals_at<T: Real, R: Rng + ?Sized>(
    chain: &Chain<T>,
    y0: usize,
    times: &[T],
    out: &mut [T],
    rng: &mut R,
) {
    let mut state = y0;
    let mut since = T::zero();
    let mut acc = T::zero();
    let mut next_jump = since + holding(chain, state, rng);
    for (o, &t) in out.iter_mut().zip(times) {
        while next_jump <= t {
            acc = acc + chain.speed[state] * (next_jump - since);
            since = next_jump;
            state = jump_target(chain, state, rng);
            next_jump = since + holding(chain, state, rng);
        }
        *o = acc + chain.speed[state] * (t - since);
    }
}

fn holding<T: Real, R: Rng + ?Sized>(chain: &Chain<T>, state: usize, rng: &mut R) -> T {
    let rate = chain.rate[state];
    if rate > T::zero() {
        let e: f64 = rng.sample(Exp1);
        T::lit(e) / rate
    } else {
        T::infinity()
    }
}

fn jump_target<T: Real, R: Rng + ?Sized>(chain: &Chain<T>, state: usize, rng: &mut R) -> usize {
    let succ = &chain.successors[state];
    if succ.len() == 1 {
        return succ[0].0;
    }
    let target = T::lit(rng.random::<f64>()) * chain.rate[state];
    let mut acc = T::zero();
    for &(l, q) in succ {
        acc = acc + q;
        if target < acc {
            return l;
        }
    }
    succ.last().map(|&(l, _)| l).unwrap_or(state)
}

/// Point estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<T> {
    pub estimate: T,
    pub std_error: T,
    pub samples: usize,
}

impl<T: Real> McEstimate<T> {
    fn from_count(hits: usize, samples: usize) -> Self {
        let m = T::from_usize_lossy(samples);
        let p = T::from_usize_lossy(hits) / m;
        Self {
            estimate: p,
            std_error: (p * (T::one() - p) / m).sqrt(),
            samples,
        }
    }

    /// Whether `value` lies within `k` standard errors of the estimate.
    pub fn within(&self, value: T, k: T) -> bool {
        (value - self.estimate).abs() <= k * self.std_error
    }
}

/// Fraction of sampled paths with `X_t < x` (strict).
pub fn monte_carlo_cdf<T: Real>(
    g: &GeneratorMatrix<T>,
    f: &RewardFunction<T>,
    t: T,
    x: T,
    y0: usize,
    samples: usize,
    seed: u64,
) -> Result<McEstimate<T>> {
    f.check_size(g.size())?;
    if samples == 0 {
        return invalid("need at least one sample");
    }
    if y0 >= g.size() {
        return Err(Error::OutOfRange(format!("state {y0} outside 0..{}", g.size())));
    }
    if !(t >= T::zero()) || !t.is_finite() {
        return invalid(format!("t must be finite and nonnegative, got {t}"));
    }
    let chain = Chain::new(g, f);
    let hits: usize = shard_sizes(samples)
        .into_par_iter()
        .enumerate()
        .map(|(s, size)| {
            let mut rng = shard_rng(seed, s);
            let mut out = [T::zero()];
            (0..size)
                .filter(|_| {
                    path_integrals_at(&chain, y0, &[t], &mut out, &mut rng);
                    out[0] < x
                })
                .count()
        })
        .sum();
    Ok(McEstimate::from_count(hits, samples))
}

/// Settings for [`solve_monte_carlo_with`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonteCarloOptions {
    pub internal_points: usize,
    /// `None` uses `N + 1`.
    pub time_steps: Option<usize>,
    pub samples: usize,
    pub seed: u64,
    pub states: StateSelection,
}

impl MonteCarloOptions {
    pub fn new(internal_points: usize, samples: usize, seed: u64) -> Self {
        Self {
            internal_points,
            time_steps: None,
            samples,
            seed,
            states: StateSelection::All,
        }
    }
}

pub fn solve_monte_carlo<T: Real>(
    g: &GeneratorMatrix<T>,
    f: &RewardFunction<T>,
    internal_points: usize,
    samples: usize,
    seed: u64,
) -> Result<DistributionGrid<T>> {
    solve_monte_carlo_with(g, f, &MonteCarloOptions::new(internal_points, samples, seed))
}

/// Empirical `P(X_{t_i} <= x_j)` at every node; each retained state uses
/// its own seed stream family so grids are reproducible state by state.
pub fn solve_monte_carlo_with<T: Real>(
    g: &GeneratorMatrix<T>,
    f: &RewardFunction<T>,
    opts: &MonteCarloOptions,
) -> Result<DistributionGrid<T>> {
    f.check_size(g.size())?;
    check_grid_size(opts.internal_points)?;
    if opts.samples == 0 {
        return invalid("need at least one sample");
    }
    let steps = opts.time_steps.unwrap_or(opts.internal_points + 1);
    if steps == 0 {
        return invalid("need at least one time step");
    }
    let retained = opts.states.resolve(g.size())?;
    let nx = opts.internal_points + 2;
    let dx = T::one() / T::from_usize_lossy(opts.internal_points + 1);
    let h = T::one() / T::from_usize_lossy(steps);
    let times: Vec<T> = (0..=steps).map(|i| T::from_usize_lossy(i) * h).collect();
    let chain = Chain::new(g, f);
    let nudge = T::lit(1e-9).max(T::epsilon() * T::lit(64.0));
    let m = T::from_usize_lossy(opts.samples);

    let mut remainder = Vec::with_capacity(retained.len());
    for &y0 in &retained {
        let seed = opts.seed.wrapping_add((y0 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let counts = shard_sizes(opts.samples)
            .into_par_iter()
            .enumerate()
            .map(|(s, size)| {
                let mut rng = shard_rng(seed, s);
                let mut hist = vec![0u64; (steps + 1) * nx];
                let mut out = vec![T::zero(); steps + 1];
                for _ in 0..size {
                    path_integrals_at(&chain, y0, &times, &mut out, &mut rng);
                    for (i, &xv) in out.iter().enumerate() {
                        // first node with x_j >= X
                        let b = (xv / dx - nudge).ceil().max(T::zero());
                        let b = b.to_usize().unwrap_or(nx).min(nx);
                        if b < nx {
                            hist[i * nx + b] += 1;
                        }
                    }
                }
                hist
            })
            .reduce(
                || vec![0u64; (steps + 1) * nx],
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    a
                },
            );
        let mut cdf = vec![T::zero(); (steps + 1) * nx];
        for i in 0..=steps {
            let mut run = 0u64;
            for j in 0..nx {
                run += counts[i * nx + j];
                cdf[i * nx + j] = T::from_u64(run).unwrap_or(T::zero()) / m;
            }
        }
        remainder.push(cdf);
    }

    Ok(DistributionGrid::from_parts(GridParts {
        generator: g.clone(),
        reward: f.clone(),
        scheme: Scheme::MonteCarlo,
        singular: Singular::None,
        internal_points: opts.internal_points,
        time_steps: steps,
        sigma: T::zero(),
        states: retained,
        remainder,
        samples: Some(opts.samples),
        seed: Some(opts.seed),
    }))
}
