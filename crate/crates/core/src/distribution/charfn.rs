//! Characteristic function `φ(t, u) = e^{t(G + iu M_f)} 1` and the mean.

use num_complex::Complex;

use crate::ctmc::{expm_action, GeneratorMatrix, RewardFunction, SquareMatrix};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// A generator paired with a reward, for transform-side computations.
#[derive(Debug, Clone, PartialEq)]
pub struct CharFnEvaluator<T: Real> {
    generator: GeneratorMatrix<T>,
    reward: RewardFunction<T>,
}

impl<T: Real> CharFnEvaluator<T> {
    pub fn new(generator: GeneratorMatrix<T>, reward: RewardFunction<T>) -> Result<Self> {
        reward.check_size(generator.size())?;
        Ok(Self { generator, reward })
    }

    pub fn generator(&self) -> &GeneratorMatrix<T> {
        &self.generator
    }

    pub fn reward(&self) -> &RewardFunction<T> {
        &self.reward
    }

    fn check(&self, t: T, y0: usize) -> Result<()> {
        if !(t >= T::zero()) || !t.is_finite() {
            return invalid(format!("t must be finite and nonnegative, got {t}"));
        }
        if y0 >= self.generator.size() {
            return Err(Error::OutOfRange(format!(
                "state {y0} outside 0..{}",
                self.generator.size()
            )));
        }
        Ok(())
    }

    /// `E[e^{iu X_t} | Y_0 = y0]`.
    pub fn characteristic_function(&self, t: T, u: T, y0: usize) -> Result<Complex<T>> {
        self.check(t, y0)?;
        if u == T::zero() {
            return Ok(Complex::new(T::one(), T::zero()));
        }
        let size = self.generator.size();
        let a = SquareMatrix::from_fn(size, |i, j| {
            let re = self.generator.get(i, j) * t;
            let im = if i == j { u * self.reward.value(i) * t } else { T::zero() };
            T::cplx(Complex::new(re, im))
        });
        let ones = vec![T::cplx(Complex::new(T::one(), T::zero())); size];
        let phi = expm_action(&a, &ones)?;
        Ok(T::uncplx(phi[y0]))
    }

    /// `E[X_t | Y_0 = y0] = ∫_0^t (e^{sG} f)(y0) ds` by adaptive Simpson.
    pub fn mean(&self, t: T, y0: usize) -> Result<T> {
        self.check(t, y0)?;
        if t == T::zero() {
            return Ok(T::zero());
        }
        let integrand = |s: T| -> Result<T> {
            let a = self.generator.matrix().scale(s);
            Ok(expm_action(&a, self.reward.values())?[y0])
        };
        let tol = T::lit(1e-10).max(T::epsilon() * T::lit(256.0));
        let (fa, fm, fb) = (integrand(T::zero())?, integrand(t / T::lit(2.0))?, integrand(t)?);
        let whole = simpson(T::zero(), t, fa, fm, fb);
        let value = adaptive(&integrand, T::zero(), t, fa, fm, fb, whole, tol, 48)?;
        let lo = t * self.reward.min();
        let hi = t * self.reward.max();
        Ok(value.clamp_to(lo, hi))
    }
}

/// Free-function form of [`CharFnEvaluator::mean`].
pub fn mean_via_generator<T: Real>(ev: &CharFnEvaluator<T>, t: T, y0: usize) -> Result<T> {
    ev.mean(t, y0)
}

fn simpson<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<T: Real>(
    f: &impl Fn(T) -> Result<T>,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: usize,
) -> Result<T> {
    let m = (a + b) / T::lit(2.0);
    let lm = (a + m) / T::lit(2.0);
    let rm = (m + b) / T::lit(2.0);
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= T::lit(15.0) * tol {
        return Ok(left + right + delta / T::lit(15.0));
    }
    let half = tol / T::lit(2.0);
    Ok(adaptive(f, a, m, fa, flm, fm, left, half, depth - 1)?
        + adaptive(f, m, b, fm, frm, fb, right, half, depth - 1)?)
}
