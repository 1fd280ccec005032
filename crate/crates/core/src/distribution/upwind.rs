//! Upwind scheme for `∂_t F_k + f_k ∂_x F_k = Σ_l G_kl F_l`.
//!
//! Each step transports the remainder along the characteristic of its own
//! state with a first-order backward difference (all speeds are
//! nonnegative). The diagonal decay `-a_k F_k` is integrated exactly and
//! the jump inflow `Σ_{l≠k} G_kl F_l` by the trapezoid rule against the
//! decay kernel, so stiff rates never restrict the step. States are swept
//! from the highest index down, which makes the pure-birth inflow implicit
//! at no cost; inflow from lower states uses the previous level.

use super::singular::{Chain, Singular};
use super::{atom_eps, check_grid_size, DistributionGrid, GridParts, Scheme, StateSelection};
use crate::ctmc::{GeneratorMatrix, RewardFunction};
use crate::error::{invalid, Result};
use crate::scalar::{one_minus_exp_over, ramp_exp_weight, Real};

/// Settings for [`solve_upwind_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct UpwindOptions<T> {
    /// `N`, internal x nodes.
    pub internal_points: usize,
    /// Time step; `None` picks the largest CFL-admissible `Δx / max f`.
    pub dt: Option<T>,
    /// Gaussian smoothing of the initial step; `0` for the exact law.
    pub sigma: T,
    pub states: StateSelection,
}

impl<T: Real> UpwindOptions<T> {
    pub fn new(internal_points: usize) -> Self {
        Self {
            internal_points,
            dt: None,
            sigma: T::zero(),
            states: StateSelection::All,
        }
    }
}

pub fn solve_upwind<T: Real>(
    g: &GeneratorMatrix<T>,
    f: &RewardFunction<T>,
    internal_points: usize,
    dt: Option<T>,
    sigma: T,
) -> Result<DistributionGrid<T>> {
    let opts = UpwindOptions {
        internal_points,
        dt,
        sigma,
        states: StateSelection::All,
    };
    solve_upwind_with(g, f, &opts)
}

pub fn solve_upwind_with<T: Real>(
    g: &GeneratorMatrix<T>,
    f: &RewardFunction<T>,
    opts: &UpwindOptions<T>,
) -> Result<DistributionGrid<T>> {
    f.check_size(g.size())?;
    check_grid_size(opts.internal_points)?;
    let sigma = opts.sigma;
    if !(sigma >= T::zero()) || !sigma.is_finite() {
        return invalid(format!("sigma must be finite and nonnegative, got {sigma}"));
    }
    let retained = opts.states.resolve(g.size())?;
    let n_int = opts.internal_points;
    let nx = n_int + 2;
    let dx = T::one() / T::from_usize_lossy(n_int + 1);
    let fmax = f.max();
    let bound = if fmax > T::zero() { dx / fmax } else { dx };
    let dt = match opts.dt {
        Some(dt) => {
            if !(dt > T::zero()) || !dt.is_finite() {
                return invalid(format!("time step must be positive, got {dt}"));
            }
            if dt * fmax > dx * (T::one() + T::lit(1e-9)) {
                return invalid(format!(
                    "CFL condition violated: dt = {dt} exceeds the admissible bound dx / max f = {bound}"
                ));
            }
            dt
        }
        None => bound,
    };
    let steps = (T::one() / dt - T::lit(1e-9))
        .ceil()
        .to_usize()
        .unwrap_or(1)
        .max(1);
    let h = T::one() / T::from_usize_lossy(steps);

    let chain = Chain::new(g, f);
    let size = chain.size();
    let eps = atom_eps(dx);
    let singular = if sigma == T::zero() {
        Singular::AtomOneJump
    } else {
        Singular::Atom
    };
    let x: Vec<T> = (0..nx).map(|j| T::from_usize_lossy(j) * dx).collect();

    // per-state decay factor, trapezoid weights and Courant number
    let decay: Vec<T> = chain.rate.iter().map(|&a| (-a * h).exp()).collect();
    let w_old: Vec<T> = chain.rate.iter().map(|&a| h * ramp_exp_weight(a * h)).collect();
    let w_new: Vec<T> = chain
        .rate
        .iter()
        .zip(&w_old)
        .map(|(&a, &wo)| h * one_minus_exp_over(a * h) - wo)
        .collect();
    let courant: Vec<T> = chain.speed.iter().map(|&s| s * h / dx).collect();

    // what the remainder of state l feeds forward besides itself
    let inflow_extra = |l: usize, t: T, xq: T| -> T {
        match singular {
            Singular::AtomOneJump => chain.one_jump(l, t, xq, eps),
            _ => chain.atom(l, t, xq, sigma, eps),
        }
    };

    let mut cur = vec![vec![T::zero(); nx]; size];
    let mut next = cur.clone();
    let mut history: Vec<Vec<T>> = retained
        .iter()
        .map(|_| Vec::with_capacity((steps + 1) * nx))
        .collect();
    for (slot, &k) in retained.iter().enumerate() {
        history[slot].extend_from_slice(&cur[k]);
    }
    let mut shifted = vec![T::zero(); nx];

    for step in 0..steps {
        let t0 = T::from_usize_lossy(step) * h;
        let t1 = T::from_usize_lossy(step + 1) * h;
        for k in (0..size).rev() {
            let c = courant[k];
            let back = chain.speed[k] * h;
            let (row, after) = next[k..].split_first_mut().unwrap();
            upwind_shift(&cur[k], c, &mut shifted);
            for j in 0..nx {
                row[j] = decay[k] * shifted[j];
            }
            for &(l, q) in &chain.successors[k] {
                upwind_shift(&cur[l], c, &mut shifted);
                for j in 0..nx {
                    let old = shifted[j] + inflow_extra(l, t0, x[j] - back);
                    let new = if l > k {
                        after[l - k - 1][j] + inflow_extra(l, t1, x[j])
                    } else {
                        old
                    };
                    row[j] = row[j] + q * (w_new[k] * new + w_old[k] * old);
                }
            }
            if sigma == T::zero() {
                // X_t <= t max f, so F is exactly 1 from there on
                let reach = fmax * t1 - eps;
                for j in (0..nx).rev() {
                    if x[j] < reach && j + 1 < nx {
                        break;
                    }
                    row[j] = T::one() - chain.singular(singular, k, t1, x[j], sigma, eps);
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
        for (slot, &k) in retained.iter().enumerate() {
            history[slot].extend_from_slice(&cur[k]);
        }
    }

    Ok(DistributionGrid::from_parts(GridParts {
        generator: g.clone(),
        reward: f.clone(),
        scheme: Scheme::Upwind,
        singular,
        internal_points: n_int,
        time_steps: steps,
        sigma,
        states: retained,
        remainder: history,
        samples: None,
        seed: None,
    }))
}

/// One backward-difference transport step with zero inflow at `x < 0`.
fn upwind_shift<T: Real>(src: &[T], c: T, dst: &mut [T]) {
    let mut left = T::zero();
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = s - c * (s - left);
        left = s;
    }
}
