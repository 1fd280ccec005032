//! Backward recursion on the integral equation of the pure-birth chain.
//!
//! With `f(k) = k/n`, exit rate `a_k` and kernel `K(u) = a_k e^{-a_k u}`,
//!
//! ```text
//! F_k(t, x) = e^{-a_k t} 1(x >= f_k t) + ∫_0^t K(t - s) F_{k+1}(s, x - f_k (t - s)) ds
//! ```
//!
//! and the top state is the travelling step `1(x >= t)`. Writing
//! `F_{k+1} = atom + R_{k+1}`, the atom contributes in closed form and only
//! the continuous `R_{k+1}` is integrated numerically: piecewise in `s` with
//! the basis `{1, e^{-a_{k+1} s}}` (so the exponential decay of `R` is
//! resolved at any rate) and linearly interpolated in `x`. The stored
//! remainder also has the closed-form one-jump term taken out, matching the
//! upwind grids.

use super::singular::{exp_linear_integral, Chain, Singular};
use super::{atom_eps, check_grid_size, DistributionGrid, GridParts, Scheme, StateSelection};
use crate::ctmc::{build_pure_birth, RewardFunction};
use crate::error::{invalid, Result};
use crate::scalar::{one_minus_exp_over, ramp_exp_weight, Real};

/// Settings for [`solve_integral_equation_with`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegralOptions {
    /// `N`, internal x nodes.
    pub internal_points: usize,
    /// Time steps on `[0, 1]`; `None` uses `N + 1`, i.e. `Δt = Δx`.
    pub time_steps: Option<usize>,
    pub states: StateSelection,
}

impl IntegralOptions {
    pub fn new(internal_points: usize) -> Self {
        Self {
            internal_points,
            time_steps: None,
            states: StateSelection::All,
        }
    }
}

pub fn solve_integral_equation<T: Real>(
    n: usize,
    lambda: T,
    internal_points: usize,
    time_steps: Option<usize>,
) -> Result<DistributionGrid<T>> {
    let opts = IntegralOptions {
        internal_points,
        time_steps,
        states: StateSelection::All,
    };
    solve_integral_equation_with(n, lambda, &opts)
}

pub fn solve_integral_equation_with<T: Real>(
    n: usize,
    lambda: T,
    opts: &IntegralOptions,
) -> Result<DistributionGrid<T>> {
    let g = build_pure_birth(n, lambda)?;
    let f = RewardFunction::<T>::linear(n)?;
    check_grid_size(opts.internal_points)?;
    let n_int = opts.internal_points;
    let steps = opts.time_steps.unwrap_or(n_int + 1);
    if steps == 0 {
        return invalid("need at least one time step");
    }
    let retained = opts.states.resolve(g.size())?;
    let lowest = retained[0];

    let nx = n_int + 2;
    let dx = T::one() / T::from_usize_lossy(n_int + 1);
    let h = T::one() / T::from_usize_lossy(steps);
    let eps = atom_eps(dx);
    let chain = Chain::new(&g, &f);
    let x: Vec<T> = (0..nx).map(|j| T::from_usize_lossy(j) * dx).collect();
    let plane = (steps + 1) * nx;

    let mut remainder: Vec<Vec<T>> = vec![Vec::new(); retained.len()];
    // the top state is all atom
    let mut upper = vec![T::zero(); plane];
    if let Ok(slot) = retained.binary_search(&n) {
        remainder[slot] = upper.clone();
    }
    let mut lower = vec![T::zero(); plane];

    let mut w_node = vec![T::zero(); steps + 1];
    for k in (lowest..n).rev() {
        let b = chain.rate[k];
        let a = chain.rate[k + 1];
        let (fk, fk1) = (chain.speed[k], chain.speed[k + 1]);
        lower.iter_mut().for_each(|v| *v = T::zero());

        // weights of one interval [s_m, s_m + h] ending d steps before t
        let (wl, wr) = interval_weights(a, b, h, steps);
        // cell offset of x - f_k (t - s_m) for t - s_m = d h
        let offsets: Vec<(usize, T)> = (0..=steps)
            .map(|d| {
                let q = fk * T::from_usize_lossy(d) * h / dx;
                let whole = q.floor();
                (whole.to_usize().unwrap_or(usize::MAX), q - whole)
            })
            .collect();

        for i in 1..=steps {
            let t = T::from_usize_lossy(i) * h;
            for m in 0..=i {
                let mut w = T::zero();
                if m < i {
                    w = w + wl[i - m - 1];
                }
                if m > 0 {
                    w = w + wr[i - m];
                }
                w_node[m] = w;
            }
            let out = &mut lower[i * nx..(i + 1) * nx];
            for j in 0..nx {
                // atom of F_{k+1} survives while s <= (x - f_k t)/(f_{k+1} - f_k)
                let cut = ((x[j] - fk * t) / (fk1 - fk)).clamp_to(T::zero(), t);
                out[j] = b * exp_linear_integral(a, b, t, T::zero(), cut);
            }
            for m in 0..=i {
                let w = w_node[m];
                if w == T::zero() {
                    continue;
                }
                let (q, theta) = offsets[i - m];
                let src = &upper[m * nx..(m + 1) * nx];
                // R_{k+1} vanishes for x <= 0
                for j in q.min(nx)..nx {
                    let j0 = j - q;
                    // position j0 - theta lies between nodes j0 - 1 and j0
                    let here = src[j0];
                    let below = if j0 == 0 { T::zero() } else { src[j0 - 1] };
                    let v = here - theta * (here - below);
                    out[j] = out[j] + w * v;
                }
            }
            out[nx - 1] = T::one() - chain.atom(k, t, T::one(), T::zero(), eps);
        }
        if let Ok(slot) = retained.binary_search(&k) {
            // keep only what is left after the closed-form one-jump term
            let mut r = lower.clone();
            for i in 0..=steps {
                let t = T::from_usize_lossy(i) * h;
                for j in 0..nx {
                    r[i * nx + j] = r[i * nx + j] - chain.one_jump(k, t, x[j], eps);
                }
            }
            remainder[slot] = r;
        }
        std::mem::swap(&mut upper, &mut lower);
    }

    Ok(DistributionGrid::from_parts(GridParts {
        generator: g,
        reward: f,
        scheme: Scheme::IntegralEquation,
        singular: Singular::AtomOneJump,
        internal_points: n_int,
        time_steps: steps,
        sigma: T::zero(),
        states: retained,
        remainder,
        samples: None,
        seed: None,
    }))
}

/// Left and right weights of `∫ b e^{-b(t-s)} φ(s) ds` over the interval
/// `[t - (d+1) h, t - d h]`, where `φ` interpolates its endpoint values in
/// the span of `{1, e^{-a s}}` (plain linear when `a h` is tiny).
fn interval_weights<T: Real>(a: T, b: T, h: T, steps: usize) -> (Vec<T>, Vec<T>) {
    let mut wl = Vec::with_capacity(steps);
    let mut wr = Vec::with_capacity(steps);
    let bh = b * h;
    let total_unit = h * one_minus_exp_over(bh);
    let ah = a * h;
    let right_unit = if ah < T::lit(1e-3) {
        h * (one_minus_exp_over(bh) - ramp_exp_weight(bh))
    } else {
        // ∫_0^h e^{-b(h-u)} (1 - e^{-a u}) du / (1 - e^{-a h})
        let mixed = exp_linear_integral(a, b, h, T::zero(), h);
        (total_unit - mixed) / (-(-ah).exp_m1())
    };
    for d in 0..steps {
        let base = b * (-b * T::from_usize_lossy(d) * h).exp();
        let right = base * right_unit;
        wr.push(right);
        wl.push(base * total_unit - right);
    }
    (wl, wr)
}
