//! Discrete form of `-M ∂_x F <= ∂_t F <= -m ∂_x F`.
//!
//! Since `X_t + m Δt <= X_{t+Δt} <= X_t + M Δt`, the exact law satisfies
//! `F(t, x - M Δt) <= F(t + Δt, x) <= F(t, x - m Δt)`. The check widens both
//! sides by one x cell to absorb interpolation smearing.

use super::DistributionGrid;
use crate::error::{invalid, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemarkViolation<T> {
    pub state: usize,
    pub time_index: usize,
    pub x_index: usize,
    /// Amount by which the sandwich is broken.
    pub excess: T,
    /// `true` for the lower bound, `false` for the upper.
    pub lower: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemarkReport<T> {
    pub checked: usize,
    pub violations: Vec<RemarkViolation<T>>,
    pub max_excess: T,
}

impl<T> RemarkReport<T> {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the sandwich at every node of every retained state. `min_f` and
/// `max_f` are the extreme slopes; they must bracket the grid's reward.
pub fn check_remark_bounds<T: Real>(grid: &DistributionGrid<T>, min_f: T, max_f: T) -> Result<RemarkReport<T>> {
    if !(min_f <= max_f) {
        return invalid(format!("need min f <= max f, got {min_f} > {max_f}"));
    }
    let (dt, dx) = (grid.dt(), grid.dx());
    let tol = T::lit(1e-9).max(T::epsilon() * T::lit(64.0));
    let mut violations = Vec::new();
    let mut checked = 0;
    let mut max_excess = T::zero();
    for &k in grid.states() {
        for i in 0..grid.time_steps() {
            let t = grid.t_at(i);
            let next = grid.row(k, i + 1)?;
            for (j, &v) in next.iter().enumerate() {
                let x = grid.x_at(j);
                let lo = grid.value(k, t, x - max_f * dt - dx)?;
                let hi = grid.value(k, t, x - min_f * dt + dx)?;
                checked += 1;
                for (excess, lower) in [(lo - v, true), (v - hi, false)] {
                    if excess > tol {
                        max_excess = max_excess.max(excess);
                        violations.push(RemarkViolation {
                            state: k,
                            time_index: i,
                            x_index: j,
                            excess,
                            lower,
                        });
                    }
                }
            }
        }
    }
    Ok(RemarkReport {
        checked,
        violations,
        max_excess,
    })
}
