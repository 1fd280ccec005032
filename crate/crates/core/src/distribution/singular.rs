//! Closed-form singular parts of `F`.
//!
//! Started in state `k`, the chain either never leaves `k` (an atom of mass
//! `e^{-a_k t}` at `x = f_k t`) or leaves at least once. The first piece is
//! a travelling step; the probability of exactly one jump `k -> l` is also
//! available in closed form and carries the kink where the step dies out.
//! Subtracting both leaves a remainder that is continuous in `x`.

use crate::ctmc::{GeneratorMatrix, RewardFunction};
use crate::scalar::{normal_cdf, one_minus_exp_over, Real};

/// Per-state data the engines need: exit rates, speeds and jump targets.
#[derive(Debug, Clone)]
pub(crate) struct Chain<T: Real> {
    pub rate: Vec<T>,
    pub speed: Vec<T>,
    pub successors: Vec<Vec<(usize, T)>>,
}

impl<T: Real> Chain<T> {
    pub fn new(g: &GeneratorMatrix<T>, f: &RewardFunction<T>) -> Self {
        let size = g.size();
        let rate = (0..size)
            .map(|k| if g.is_absorbing(k) { T::zero() } else { g.exit_rate(k) })
            .collect();
        let successors = (0..size)
            .map(|k| if g.is_absorbing(k) { Vec::new() } else { g.successors(k) })
            .collect();
        Self {
            rate,
            speed: f.values().to_vec(),
            successors,
        }
    }

    pub fn size(&self) -> usize {
        self.rate.len()
    }
}

/// Which closed-form pieces are subtracted before discretizing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Singular {
    /// Values are stored as-is.
    None,
    /// The no-jump atom only.
    Atom,
    /// The no-jump atom and the exactly-one-jump term.
    AtomOneJump,
}

/// Step `1(x >= c)` or its Gaussian smoothing.
#[inline]
pub(crate) fn step<T: Real>(x: T, c: T, sigma: T, eps: T) -> T {
    if sigma > T::zero() {
        normal_cdf(x - c, sigma)
    } else if x >= c - eps {
        T::one()
    } else {
        T::zero()
    }
}

/// `∫_{lo}^{hi} e^{-a τ - b (t - τ)} dτ` without overflow.
#[inline]
pub(crate) fn exp_linear_integral<T: Real>(a: T, b: T, t: T, lo: T, hi: T) -> T {
    let len = hi - lo;
    if !(len > T::zero()) {
        return T::zero();
    }
    let at_lo = -a * lo - b * (t - lo);
    let at_hi = -a * hi - b * (t - hi);
    let peak = at_lo.max(at_hi);
    peak.exp() * len * one_minus_exp_over((a - b).abs() * len)
}

impl<T: Real> Chain<T> {
    /// Probability of no jump by `t`, times the step at `f_k t`.
    #[inline]
    pub fn atom(&self, k: usize, t: T, x: T, sigma: T, eps: T) -> T {
        (-self.rate[k] * t).exp() * step(x, self.speed[k] * t, sigma, eps)
    }

    /// `P(exactly one jump, to l, and X_t <= x)` for the unsmoothed chain.
    pub fn one_jump_to(&self, k: usize, l: usize, q: T, t: T, x: T, eps: T) -> T {
        let (fk, fl) = (self.speed[k], self.speed[l]);
        let (ak, al) = (self.rate[k], self.rate[l]);
        // position after jumping at τ is fl t + (fk - fl) τ
        let (lo, hi) = if fk == fl {
            if x >= fk * t - eps {
                (T::zero(), t)
            } else {
                return T::zero();
            }
        } else {
            let cut = (x - fl * t) / (fk - fl);
            if fk > fl {
                (T::zero(), cut.clamp_to(T::zero(), t))
            } else {
                (cut.clamp_to(T::zero(), t), t)
            }
        };
        q * exp_linear_integral(ak, al, t, lo, hi)
    }

    pub fn one_jump(&self, k: usize, t: T, x: T, eps: T) -> T {
        self.successors[k]
            .iter()
            .map(|&(l, q)| self.one_jump_to(k, l, q, t, x, eps))
            .fold(T::zero(), |a, b| a + b)
    }

    pub fn singular(&self, kind: Singular, k: usize, t: T, x: T, sigma: T, eps: T) -> T {
        match kind {
            Singular::None => T::zero(),
            Singular::Atom => self.atom(k, t, x, sigma, eps),
            Singular::AtomOneJump => self.atom(k, t, x, sigma, eps) + self.one_jump(k, t, x, eps),
        }
    }
}
