//! Finite-state continuous-time Markov chains: generators, transition
//! matrices and trajectory sampling.

pub mod expm;
mod sample;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

pub use expm::{expm, expm_action, matrix_exponential_action, SquareMatrix};
pub use sample::{rng_from_seed, sample_trajectory, sample_trajectory_with, SimRng};

/// Diagonal entries at or above this value mark an absorbing state.
pub const ABSORBING_THRESHOLD: f64 = -1e-14;

const ROW_SUM_TOL: f64 = 1e-12;

/// Infinitesimal generator of a finite-state CTMC.
///
/// Off-diagonal entries are nonnegative jump rates and every row sums to
/// zero. States are the dense indices `0..size`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeneratorJson<T>", into = "GeneratorJson<T>")]
#[serde(bound = "T: Real")]
pub struct GeneratorMatrix<T: Real> {
    matrix: SquareMatrix<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct GeneratorJson<T: Real> {
    size: usize,
    entries: Vec<Vec<T>>,
}

impl<T: Real> TryFrom<GeneratorJson<T>> for GeneratorMatrix<T> {
    type Error = Error;

    fn try_from(raw: GeneratorJson<T>) -> Result<Self> {
        if raw.entries.len() != raw.size {
            return Err(Error::DimensionMismatch {
                expected: raw.size,
                actual: raw.entries.len(),
            });
        }
        Self::new(raw.entries)
    }
}

impl<T: Real> From<GeneratorMatrix<T>> for GeneratorJson<T> {
    fn from(g: GeneratorMatrix<T>) -> Self {
        GeneratorJson {
            size: g.size(),
            entries: (0..g.size()).map(|i| g.matrix.row(i).to_vec()).collect(),
        }
    }
}

impl<T: Real> GeneratorMatrix<T> {
    /// Builds a generator from its rows, checking the rate-matrix invariants.
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return invalid("generator needs at least one state");
        }
        let mut data = Vec::with_capacity(size * size);
        for row in rows {
            if row.len() != size {
                return Err(Error::DimensionMismatch {
                    expected: size,
                    actual: row.len(),
                });
            }
            data.extend(row);
        }
        Self::from_matrix(SquareMatrix::from_row_major(size, data)?)
    }

    pub fn from_matrix(matrix: SquareMatrix<T>) -> Result<Self> {
        let n = matrix.dim();
        for i in 0..n {
            let row = matrix.row(i);
            let mut scale = T::one();
            let mut sum = T::zero();
            for (j, &x) in row.iter().enumerate() {
                if !x.is_finite() {
                    return invalid(format!("non-finite generator entry at ({i},{j})"));
                }
                if i != j && x < T::zero() {
                    return invalid(format!("negative off-diagonal rate {x} at ({i},{j})"));
                }
                scale = scale.max(x.abs());
                sum = sum + x;
            }
            if sum.abs() > T::lit(ROW_SUM_TOL) * scale {
                return invalid(format!("row {i} sums to {sum}, expected 0"));
            }
        }
        Ok(Self { matrix })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.matrix.dim()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.matrix.get(i, j)
    }

    pub fn matrix(&self) -> &SquareMatrix<T> {
        &self.matrix
    }

    /// Total exit rate `-G_kk` of state `k`.
    #[inline]
    pub fn exit_rate(&self, k: usize) -> T {
        -self.matrix.get(k, k)
    }

    #[inline]
    pub fn is_absorbing(&self, k: usize) -> bool {
        self.matrix.get(k, k) >= T::lit(ABSORBING_THRESHOLD)
    }

    /// States reachable in one jump from `k`, with their rates.
    pub fn successors(&self, k: usize) -> Vec<(usize, T)> {
        self.matrix
            .row(k)
            .iter()
            .enumerate()
            .filter(|&(j, &r)| j != k && r > T::zero())
            .map(|(j, &r)| (j, r))
            .collect()
    }

    /// `(n, λ)` if this is the pure-birth generator `λ N` on `n + 1` states.
    pub fn pure_birth_parameters(&self) -> Option<(usize, T)> {
        let size = self.size();
        if size < 2 {
            return None;
        }
        let lambda = self.get(0, 1);
        for i in 0..size {
            for j in 0..size {
                let expected = if i + 1 == size {
                    T::zero()
                } else if j == i {
                    -lambda
                } else if j == i + 1 {
                    lambda
                } else {
                    T::zero()
                };
                if self.get(i, j) != expected {
                    return None;
                }
            }
        }
        Some((size - 1, lambda))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Pure-birth generator `λ N` on states `0..=n`; state `n` is absorbing.
pub fn build_pure_birth<T: Real>(n: usize, lambda: T) -> Result<GeneratorMatrix<T>> {
    if n == 0 {
        return invalid("pure-birth chain needs n >= 1");
    }
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return invalid(format!("rate must be finite and nonnegative, got {lambda}"));
    }
    let matrix = SquareMatrix::from_fn(n + 1, |i, j| {
        if i == n {
            T::zero()
        } else if i == j {
            -lambda
        } else if j == i + 1 {
            lambda
        } else {
            T::zero()
        }
    });
    Ok(GeneratorMatrix { matrix })
}

/// `P(t) = e^{tG}`, with round-off excursions clamped into `[0, 1]`.
pub fn transition_matrix<T: Real>(g: &GeneratorMatrix<T>, t: T) -> Result<SquareMatrix<T>> {
    if !(t >= T::zero()) || !t.is_finite() {
        return invalid(format!("time must be finite and nonnegative, got {t}"));
    }
    let p = expm(&g.matrix.scale(t))?;
    Ok(p.map(|x| x.clamp_to(T::zero(), T::one())))
}

/// Reward (slope) values `f(k)` indexed by state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RewardFunction<T: Real> {
    values: Vec<T>,
}

impl<T: Real> RewardFunction<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return invalid("reward function needs at least one state");
        }
        if let Some((k, v)) = values
            .iter()
            .enumerate()
            .find(|(_, &v)| !(v >= T::zero() && v <= T::one()))
        {
            return invalid(format!("reward f({k}) = {v} outside [0, 1]"));
        }
        Ok(Self { values })
    }

    /// `f(k) = k / n` on states `0..=n`.
    pub fn linear(n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("linear reward needs n >= 1");
        }
        let nn = T::from_usize_lossy(n);
        Self::new((0..=n).map(|k| T::from_usize_lossy(k) / nn).collect())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn value(&self, k: usize) -> T {
        self.values[k]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn is_injective(&self) -> bool {
        let mut sorted = self.values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("rewards are finite"));
        sorted.windows(2).all(|w| w[0] < w[1])
    }

    pub(crate) fn check_size(&self, states: usize) -> Result<()> {
        if self.len() != states {
            return Err(Error::DimensionMismatch {
                expected: states,
                actual: self.len(),
            });
        }
        Ok(())
    }
}

/// One realization of a CTMC on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Real> {
    initial_state: usize,
    jump_times: Vec<T>,
    states: Vec<usize>,
    horizon: T,
}

impl<T: Real> Trajectory<T> {
    /// `states` lists the visited states, starting with the initial one.
    pub fn new(states: Vec<usize>, jump_times: Vec<T>, horizon: T) -> Result<Self> {
        if states.len() != jump_times.len() + 1 {
            return invalid(format!(
                "{} states for {} jumps",
                states.len(),
                jump_times.len()
            ));
        }
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return invalid(format!("horizon must be positive, got {horizon}"));
        }
        let mut last = T::zero();
        for &t in &jump_times {
            if !(t > last) || t > horizon {
                return invalid("jump times must be strictly increasing within (0, horizon]");
            }
            last = t;
        }
        if states.windows(2).any(|w| w[0] == w[1]) {
            return invalid("consecutive states must differ");
        }
        Ok(Self {
            initial_state: states[0],
            jump_times,
            states,
            horizon,
        })
    }

    pub(crate) fn from_parts_unchecked(states: Vec<usize>, jump_times: Vec<T>, horizon: T) -> Self {
        Self {
            initial_state: states[0],
            jump_times,
            states,
            horizon,
        }
    }

    /// Trajectory that never leaves `state`.
    pub fn constant(state: usize, horizon: T) -> Result<Self> {
        Self::new(vec![state], Vec::new(), horizon)
    }

    #[inline]
    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn jump_times(&self) -> &[T] {
        &self.jump_times
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    #[inline]
    pub fn horizon(&self) -> T {
        self.horizon
    }

    #[inline]
    pub fn jump_count(&self) -> usize {
        self.jump_times.len()
    }

    /// State occupied at time `t` (right-continuous).
    pub fn state_at(&self, t: T) -> usize {
        let idx = self.jump_times.partition_point(|&s| s <= t);
        self.states[idx]
    }

    pub fn final_state(&self) -> usize {
        *self.states.last().expect("at least one state")
    }

    /// Every jump goes from `k` to `k + 1`.
    pub fn is_pure_birth(&self) -> bool {
        self.states.windows(2).all(|w| w[1] == w[0] + 1)
    }

    /// Writes `jump_time,new_state` rows; the first row `0,<initial state>`
    /// records where the chain starts.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["jump_time", "new_state"])?;
        w.write_record([format!("{:e}", T::zero()), self.initial_state.to_string()])?;
        for (t, s) in self.jump_times.iter().zip(&self.states[1..]) {
            w.write_record([format!("{t:e}"), s.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, horizon: T) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut states = Vec::new();
        let mut times = Vec::new();
        for (i, rec) in r.deserialize::<(f64, usize)>().enumerate() {
            let (t, s) = rec?;
            if i == 0 {
                if t != 0.0 {
                    return invalid("first trajectory row must be the initial state at time 0");
                }
            } else {
                times.push(T::lit(t));
            }
            states.push(s);
        }
        if states.is_empty() {
            return invalid("empty trajectory file");
        }
        Self::new(states, times, horizon)
    }
}
