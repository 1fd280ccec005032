//! Dense matrix exponential kernels.
//!
//! [`expm`] uses scaling and squaring around the degree-13 diagonal Padé
//! approximant. [`expm_action`] computes `e^A v` without forming `e^A`, by
//! substepping a truncated Taylor series with `||A/s||_1 <= 1` per substep.

use num_complex::Complex;
use num_traits::{Float, Zero};

use crate::error::{invalid, Error, Result};
use crate::scalar::{Entry, Real};

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<S> {
    dim: usize,
    data: Vec<S>,
}

impl<S: Entry> SquareMatrix<S> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![S::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = S::one();
        }
        m
    }

    pub fn from_row_major(dim: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: S) {
        self.data[i * self.dim + j] = value;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn map<R: Entry>(&self, f: impl Fn(S) -> R) -> SquareMatrix<R> {
        SquareMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, s: S) -> Self {
        self.map(|x| x * s)
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> S::Real {
        let n = self.dim;
        (0..n)
            .map(|j| (0..n).map(|i| self.get(i, j).modulus()).sum::<S::Real>())
            .fold(S::Real::zero(), |a, b| a.max(b))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == S::zero() {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d = *d + a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[S]) -> Vec<S> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(v)
                    .fold(S::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    fn add_scaled(&self, other: &Self, s: S) -> Self {
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b * s)
                .collect(),
        }
    }

    /// Solves `self * X = rhs` by LU with partial pivoting.
    fn solve(&self, rhs: &Self) -> Result<Self> {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&p, &q| {
                    a[p * n + col]
                        .modulus()
                        .partial_cmp(&a[q * n + col].modulus())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(col);
            if a[pivot * n + col].modulus() == S::Real::zero() {
                return invalid("singular Padé denominator");
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                    b.swap(col * n + j, pivot * n + j);
                }
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let factor = a[r * n + col] / d;
                if factor == S::zero() {
                    continue;
                }
                for j in col..n {
                    a[r * n + j] = a[r * n + j] - factor * a[col * n + j];
                }
                for j in 0..n {
                    b[r * n + j] = b[r * n + j] - factor * b[col * n + j];
                }
            }
        }
        for col in (0..n).rev() {
            let d = a[col * n + col];
            for j in 0..n {
                let mut acc = b[col * n + j];
                for k in col + 1..n {
                    acc = acc - a[col * n + k] * b[k * n + j];
                }
                b[col * n + j] = acc / d;
            }
        }
        Ok(Self { dim: n, data: b })
    }
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

/// `e^A` by scaling and squaring with a [13/13] Padé approximant.
pub fn expm<S: Entry>(a: &SquareMatrix<S>) -> Result<SquareMatrix<S>> {
    let n = a.dim();
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = a.norm1().to_f64_lossy();
    if !norm.is_finite() {
        return invalid("matrix exponential of a non-finite matrix");
    }
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a.scale(S::from_real(<S::Real as Real>::lit(2f64.powi(-squarings))));
    let b = |k: usize| S::from_real(<S::Real as Real>::lit(PADE13[k]));

    let id = SquareMatrix::identity(n);
    let a2 = scaled.matmul(&scaled);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);

    // U = A [A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I]
    let inner_u = a6.scale(b(13)).add_scaled(&a4, b(11)).add_scaled(&a2, b(9));
    let u = a6
        .matmul(&inner_u)
        .add_scaled(&a6, b(7))
        .add_scaled(&a4, b(5))
        .add_scaled(&a2, b(3))
        .add_scaled(&id, b(1));
    let u = scaled.matmul(&u);
    // V = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    let inner_v = a6.scale(b(12)).add_scaled(&a4, b(10)).add_scaled(&a2, b(8));
    let v = a6
        .matmul(&inner_v)
        .add_scaled(&a6, b(6))
        .add_scaled(&a4, b(4))
        .add_scaled(&a2, b(2))
        .add_scaled(&id, b(0));

    let numer = v.add_scaled(&u, S::one());
    let denom = v.add_scaled(&u, -S::one());
    let mut r = denom.solve(&numer)?;
    for _ in 0..squarings {
        r = r.matmul(&r);
    }
    Ok(r)
}

/// `e^A v` by shifted, substepped Taylor series.
pub fn expm_action<S: Entry>(a: &SquareMatrix<S>, v: &[S]) -> Result<Vec<S>> {
    let n = a.dim();
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: v.len(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    // shift by the mean diagonal entry; e^A v = e^mu e^{A - mu I} v
    let mut mu = S::zero();
    for i in 0..n {
        mu = mu + a.get(i, i);
    }
    let mu = mu / S::from_real(<S::Real as Real>::from_usize_lossy(n));
    let mut shifted = a.clone();
    for i in 0..n {
        shifted.set(i, i, a.get(i, i) - mu);
    }
    let norm = shifted.norm1().to_f64_lossy();
    if !norm.is_finite() {
        return invalid("matrix exponential action of a non-finite matrix");
    }
    let steps = norm.ceil().max(1.0) as usize;
    let inv_steps = S::from_real(<S::Real as Real>::from_usize_lossy(steps).recip());
    let step_matrix = shifted.scale(inv_steps);
    let step_scale = (mu * inv_steps).exp_entry();
    let eps = <S::Real as num_traits::Float>::epsilon();

    let inf_norm = |x: &[S]| {
        x.iter()
            .map(|e| e.modulus())
            .fold(S::Real::zero(), |a, b| a.max(b))
    };

    let mut w = v.to_vec();
    for _ in 0..steps {
        let mut term = w.clone();
        let mut acc = w.clone();
        let mut previous_small = false;
        for k in 1..=120usize {
            let kk = S::from_real(<S::Real as Real>::from_usize_lossy(k).recip());
            term = step_matrix.matvec(&term);
            for t in term.iter_mut() {
                *t = *t * kk;
            }
            for (a, &t) in acc.iter_mut().zip(&term) {
                *a = *a + t;
            }
            let small = inf_norm(&term) <= eps * inf_norm(&acc);
            if small && previous_small {
                break;
            }
            previous_small = small;
        }
        for a in acc.iter_mut() {
            *a = *a * step_scale;
        }
        w = acc;
    }
    Ok(w)
}

/// Computes `e^A v` for a complex square matrix given row-major.
pub fn matrix_exponential_action<T: Real>(
    a: &SquareMatrix<Complex<T>>,
    v: &[Complex<T>],
) -> Result<Vec<Complex<T>>> {
    let a = SquareMatrix {
        dim: a.dim,
        data: a.data.iter().map(|&z| T::cplx(z)).collect(),
    };
    let v: Vec<_> = v.iter().map(|&z| T::cplx(z)).collect();
    Ok(expm_action(&a, &v)?.into_iter().map(T::uncplx).collect())
}
