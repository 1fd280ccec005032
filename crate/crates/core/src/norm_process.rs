//! Norm-process realizations and the planar random norm they induce.
//!
//! A realization is stored as a convex piecewise-linear path anchored at
//! zero. For sorted `v = (v1, v2)` the induced norm is the unique root `p` in
//! `[v1, v1 + v2]` of `v1 / p + X(v2 / p) = 1`; the left side is strictly
//! decreasing in `p`, so bisection on that bracket always converges.

use std::io::{Read, Write};

use num_complex::Complex;

use crate::ctmc::{RewardFunction, Trajectory};
use crate::error::{invalid, out_of_range, Error, Result};
use crate::scalar::Real;

/// Relative root tolerance used when the caller does not pick one.
pub const DEFAULT_RELATIVE_TOL: f64 = 1e-12;

/// Convex, 1-Lipschitz, nondecreasing piecewise-linear path with `X(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormPath<T: Real> {
    breakpoints: Vec<T>,
    slopes: Vec<T>,
    values: Vec<T>,
    horizon: T,
}

impl<T: Real> NormPath<T> {
    /// `breakpoints[i]` is where segment `i` (slope `slopes[i]`) starts; the
    /// first breakpoint must be `0` and the last segment runs to `horizon`.
    pub fn new(breakpoints: Vec<T>, slopes: Vec<T>, horizon: T) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != slopes.len() {
            return invalid("need one slope per breakpoint and at least one segment");
        }
        if breakpoints[0] != T::zero() {
            return invalid("first breakpoint must be 0");
        }
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return invalid(format!("horizon must be positive, got {horizon}"));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return invalid("breakpoints must be strictly increasing");
        }
        if *breakpoints.last().unwrap() > horizon {
            return invalid("breakpoint beyond horizon");
        }
        if slopes.iter().any(|&s| !(s >= T::zero() && s <= T::one())) {
            return invalid("slopes must lie in [0, 1]");
        }
        if slopes.windows(2).any(|w| w[1] < w[0]) {
            return invalid("slopes must be nondecreasing (convex path)");
        }
        let mut values = Vec::with_capacity(breakpoints.len());
        let mut acc = T::zero();
        values.push(acc);
        for i in 1..breakpoints.len() {
            acc = acc + slopes[i - 1] * (breakpoints[i] - breakpoints[i - 1]);
            values.push(acc);
        }
        Ok(Self {
            breakpoints,
            slopes,
            values,
            horizon,
        })
    }

    /// Linear path `X_t = slope * t`.
    pub fn linear(slope: T, horizon: T) -> Result<Self> {
        Self::new(vec![T::zero()], vec![slope], horizon)
    }

    /// Path integral of `f(Y)` along a trajectory.
    pub fn from_trajectory(traj: &Trajectory<T>, f: &RewardFunction<T>) -> Result<Self> {
        let mut breakpoints = Vec::with_capacity(traj.jump_count() + 1);
        let mut slopes = Vec::with_capacity(traj.jump_count() + 1);
        breakpoints.push(T::zero());
        for (i, &s) in traj.states().iter().enumerate() {
            if s >= f.len() {
                return Err(Error::OutOfRange(format!(
                    "state {s} has no reward value ({} defined)",
                    f.len()
                )));
            }
            if i > 0 {
                breakpoints.push(traj.jump_times()[i - 1]);
            }
            slopes.push(f.value(s));
        }
        if slopes.windows(2).any(|w| w[1] < w[0]) {
            return invalid("slope sequence along the trajectory is not monotone");
        }
        Self::new(breakpoints, slopes, traj.horizon())
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[T] {
        &self.slopes
    }

    #[inline]
    pub fn horizon(&self) -> T {
        self.horizon
    }

    /// Exact evaluation of `X_t`.
    pub fn path_integral(&self, t: T) -> Result<T> {
        if !(t >= T::zero()) || t > self.horizon {
            return out_of_range(format!("t = {t} outside [0, {}]", self.horizon));
        }
        Ok(self.eval(t))
    }

    #[inline]
    fn eval(&self, t: T) -> T {
        let i = self.breakpoints.partition_point(|&b| b <= t) - 1;
        self.values[i] + self.slopes[i] * (t - self.breakpoints[i])
    }

    /// Norm of a sorted pair `v1 >= v2 >= 0` with bisection tolerance `tol`
    /// (absolute, in units of `p`).
    pub fn evaluate_norm(&self, v: [T; 2], tol: T) -> Result<T> {
        let [v1, v2] = v;
        if !(v2 >= T::zero()) || !(v1 >= v2) || !v1.is_finite() {
            return invalid(format!("expected v1 >= v2 >= 0, got ({v1}, {v2})"));
        }
        if self.horizon < T::one() {
            return invalid("norm evaluation needs a path horizon of at least 1");
        }
        if v1 == T::zero() {
            return Ok(T::zero());
        }
        let residual = |p: T| v1 / p + self.eval(v2 / p) - T::one();
        let mut lo = v1;
        let mut hi = v1 + v2;
        // the residual is nonincreasing in p, so endpoint roots are exact
        if residual(lo) <= T::zero() {
            return Ok(lo);
        }
        if residual(hi) >= T::zero() {
            return Ok(hi);
        }
        for _ in 0..400 {
            if hi - lo <= tol {
                break;
            }
            let mid = lo + (hi - lo) / T::lit(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            if residual(mid) > T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo + (hi - lo) / T::lit(2.0))
    }

    /// [`evaluate_norm`](Self::evaluate_norm) with tolerance
    /// `1e-12 * ||v||_1`.
    pub fn norm(&self, v: [T; 2]) -> Result<T> {
        self.evaluate_norm(v, default_tolerance(v))
    }

    /// Writes `breakpoint,slope` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["breakpoint", "slope"])?;
        for (b, s) in self.breakpoints.iter().zip(&self.slopes) {
            w.write_record([b.to_string(), s.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, horizon: T) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut breakpoints = Vec::new();
        let mut slopes = Vec::new();
        for rec in r.deserialize::<(f64, f64)>() {
            let (b, s) = rec?;
            breakpoints.push(T::lit(b));
            slopes.push(T::lit(s));
        }
        Self::new(breakpoints, slopes, horizon)
    }
}

pub fn default_tolerance<T: Real>(v: [T; 2]) -> T {
    T::lit(DEFAULT_RELATIVE_TOL) * (v[0].abs() + v[1].abs())
}

/// One realization of the planar random norm.
#[derive(Debug, Clone, PartialEq)]
pub struct GsrnSample<T: Real> {
    path: NormPath<T>,
    relative_tol: T,
}

impl<T: Real> GsrnSample<T> {
    pub fn new(path: NormPath<T>) -> Result<Self> {
        Self::with_tolerance(path, T::lit(DEFAULT_RELATIVE_TOL))
    }

    pub fn with_tolerance(path: NormPath<T>, relative_tol: T) -> Result<Self> {
        if path.horizon() < T::one() {
            return invalid("norm evaluation needs a path horizon of at least 1");
        }
        if !(relative_tol > T::zero()) {
            return invalid("tolerance must be positive");
        }
        Ok(Self { path, relative_tol })
    }

    pub fn path(&self) -> &NormPath<T> {
        &self.path
    }

    pub fn relative_tol(&self) -> T {
        self.relative_tol
    }

    /// Norm of an arbitrary real pair through the gauge-invariant symmetric
    /// reduction `|v|`, sorted descending.
    pub fn norm(&self, v: &[T]) -> Result<T> {
        if v.len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: v.len(),
            });
        }
        let (a, b) = (v[0].abs(), v[1].abs());
        let sorted = if a >= b { [a, b] } else { [b, a] };
        self.path
            .evaluate_norm(sorted, self.relative_tol * (sorted[0] + sorted[1]))
    }

    pub fn norm_complex(&self, v: &[Complex<T>]) -> Result<T> {
        let moduli: Vec<T> = v.iter().map(|z| z.norm()).collect();
        self.norm(&moduli)
    }
}

/// `(1/n) Σ_{ξ<n} (t - τ_{ξ+})_+` where `τ_{ξ+}` is the first time the chain
/// is strictly above level `ξ`; requires `f(k) = k / n` and a pure-birth path.
pub fn hitting_time_integral<T: Real>(traj: &Trajectory<T>, f: &RewardFunction<T>, t: T) -> Result<T> {
    let n = f.len().checked_sub(1).filter(|&n| n > 0).ok_or_else(|| {
        Error::InvalidArgument("hitting-time form needs at least two states".into())
    })?;
    let nn = T::from_usize_lossy(n);
    for k in 0..=n {
        let expected = T::from_usize_lossy(k) / nn;
        if (f.value(k) - expected).abs() > T::lit(1e-12).max(T::epsilon()) {
            return invalid(format!("hitting-time form needs f(k) = k/n, got f({k}) = {}", f.value(k)));
        }
    }
    if !traj.is_pure_birth() {
        return invalid("hitting-time form needs a pure-birth trajectory");
    }
    if traj.final_state() > n {
        return Err(Error::OutOfRange(format!(
            "trajectory reaches state {} beyond n = {n}",
            traj.final_state()
        )));
    }
    if !(t >= T::zero()) || t > traj.horizon() {
        return out_of_range(format!("t = {t} outside [0, {}]", traj.horizon()));
    }
    let y0 = traj.initial_state();
    let mut total = T::zero();
    for level in 0..n {
        let hit = if y0 > level {
            Some(T::zero())
        } else {
            // states[m] = level + 1 is entered at jump_times[m - 1]
            let m = level + 1 - y0;
            traj.jump_times().get(m - 1).copied()
        };
        if let Some(tau) = hit {
            if t > tau {
                total = total + (t - tau);
            }
        }
    }
    Ok(total / nn)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axiom {
    Definiteness,
    Homogeneity,
    Subadditivity,
    Bracket,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomViolation<T> {
    pub axiom: Axiom,
    pub vectors: Vec<[T; 2]>,
    pub excess: T,
}

/// Outcome of [`validate_norm_axioms`].
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport<T> {
    pub vectors_checked: usize,
    pub pairs_checked: usize,
    pub violations: Vec<AxiomViolation<T>>,
}

impl<T> AxiomReport<T> {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, axiom: Axiom) -> usize {
        self.violations.iter().filter(|v| v.axiom == axiom).count()
    }
}

pub const HOMOGENEITY_FACTORS: [f64; 3] = [0.5, 2.0, 10.0];

/// Checks definiteness, homogeneity, the `[‖v‖∞, ‖v‖₁]` bracket on every
/// test vector and subadditivity on consecutive (cyclic) pairs. Tolerances
/// are relative to the 1-norm of the vectors involved.
pub fn validate_norm_axioms<T: Real>(path: &NormPath<T>, test_vectors: &[[T; 2]], tol: T) -> Result<AxiomReport<T>> {
    if test_vectors.is_empty() {
        return invalid("need at least one test vector");
    }
    let root_tol = |v: [T; 2]| default_tolerance(v).min(tol * (v[0] + v[1]) * T::lit(1e-3));
    let p = |v: [T; 2]| path.evaluate_norm(v, root_tol(v));
    let mut violations = Vec::new();
    let mut norms = Vec::with_capacity(test_vectors.len());
    for &v in test_vectors {
        let pv = p(v)?;
        norms.push(pv);
        let l1 = v[0] + v[1];
        let is_zero = v[0] == T::zero();
        if is_zero != (pv == T::zero()) {
            violations.push(AxiomViolation {
                axiom: Axiom::Definiteness,
                vectors: vec![v],
                excess: pv,
            });
        }
        let below = v[0] - pv;
        let above = pv - l1;
        if below > tol * l1 || above > tol * l1 {
            violations.push(AxiomViolation {
                axiom: Axiom::Bracket,
                vectors: vec![v],
                excess: below.max(above),
            });
        }
        for &alpha in &HOMOGENEITY_FACTORS {
            let a = T::lit(alpha);
            let scaled = p([v[0] * a, v[1] * a])?;
            let err = (scaled - a * pv).abs();
            if err > tol * a * l1 {
                violations.push(AxiomViolation {
                    axiom: Axiom::Homogeneity,
                    vectors: vec![v, [a, a]],
                    excess: err,
                });
            }
        }
    }
    let m = test_vectors.len();
    let pairs = if m > 1 { m } else { 0 };
    for i in 0..pairs {
        let j = (i + 1) % m;
        let (v, w) = (test_vectors[i], test_vectors[j]);
        let sum = [v[0] + w[0], v[1] + w[1]];
        let lhs = p(sum)?;
        let excess = lhs - norms[i] - norms[j];
        if excess > tol * (sum[0] + sum[1]) {
            violations.push(AxiomViolation {
                axiom: Axiom::Subadditivity,
                vectors: vec![v, w],
                excess,
            });
        }
    }
    Ok(AxiomReport {
        vectors_checked: m,
        pairs_checked: pairs,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_path() -> NormPath<f64> {
        NormPath::linear(0.0, 1.0).unwrap()
    }

    fn one_path() -> NormPath<f64> {
        NormPath::linear(1.0, 1.0).unwrap()
    }

    #[test]
    fn from_trajectory_examples() {
        let f = RewardFunction::new(vec![0.0, 1.0]).unwrap();
        let stay0 = Trajectory::constant(0, 1.0).unwrap();
        let x = NormPath::from_trajectory(&stay0, &f).unwrap();
        assert_eq!(x.path_integral(0.7).unwrap(), 0.0);

        let stay1 = Trajectory::constant(1, 1.0).unwrap();
        let x = NormPath::from_trajectory(&stay1, &f).unwrap();
        assert_eq!(x.path_integral(0.7).unwrap(), 0.7);

        let jump = Trajectory::new(vec![0, 1], vec![0.5], 1.0).unwrap();
        let x = NormPath::from_trajectory(&jump, &f).unwrap();
        assert_eq!(x.path_integral(1.0).unwrap(), 0.5);
        assert_eq!(x.path_integral(0.0).unwrap(), 0.0);
    }

    #[test]
    fn non_monotone_slopes_are_rejected() {
        let f = RewardFunction::new(vec![0.0, 1.0]).unwrap();
        let down = Trajectory::new(vec![1, 0], vec![0.5], 1.0).unwrap();
        assert!(matches!(
            NormPath::from_trajectory(&down, &f),
            Err(Error::InvalidArgument(_))
        ));
        assert!(NormPath::new(vec![0.0, 0.5], vec![0.6, 0.2], 1.0).is_err());
        assert!(NormPath::new(vec![0.1], vec![0.2], 1.0).is_err());
    }

    #[test]
    fn path_integral_range() {
        let x = NormPath::<f64>::new(vec![0.0, 0.3, 0.6], vec![0.1, 0.4, 0.9], 1.0).unwrap();
        assert!(matches!(x.path_integral(1.5), Err(Error::OutOfRange(_))));
        assert!(x.path_integral(-0.1).is_err());
        let expected = 0.1 * 0.3 + 0.4 * 0.3 + 0.9 * 0.4;
        assert!((x.path_integral(1.0).unwrap() - expected).abs() < 1e-15);
        assert_eq!(one_path().path_integral(0.37).unwrap(), 0.37);
    }

    #[test]
    fn norm_limit_cases() {
        assert!((zero_path().norm([1.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((one_path().norm([1.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((zero_path().norm([1.0, 1.0]).unwrap() - 1.0).abs() < 1e-11);
        assert!((one_path().norm([1.0, 1.0]).unwrap() - 2.0).abs() < 1e-11);
        assert_eq!(zero_path().norm([0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn norm_rejects_unsorted_or_negative() {
        assert!(one_path().norm([0.5, 1.0]).is_err());
        assert!(one_path().norm([1.0, -0.5]).is_err());
        let short = NormPath::linear(0.5, 0.5).unwrap();
        assert!(short.norm([1.0, 1.0]).is_err());
    }

    #[test]
    fn norm_residual_is_small() {
        let x = NormPath::<f64>::new(vec![0.0, 0.2, 0.45], vec![0.0, 0.3, 0.8], 1.0).unwrap();
        for &v in &[[1.0, 0.3], [2.0, 2.0], [0.7, 0.1], [5.0, 4.5]] {
            let p = x.norm(v).unwrap();
            let r = v[0] / p + x.path_integral(v[1] / p).unwrap() - 1.0;
            assert!(r.abs() <= 1e-11, "{v:?}: {r}");
            assert!(p >= v[0] && p <= v[0] + v[1]);
        }
    }

    #[test]
    fn gauge_reduction() {
        let x = NormPath::new(vec![0.0, 0.4], vec![0.2, 0.7], 1.0).unwrap();
        let s = GsrnSample::new(x.clone()).unwrap();
        let direct = x.norm([0.9, 0.4]).unwrap();
        assert_eq!(s.norm(&[-0.4, 0.9]).unwrap(), direct);
        let z = [Complex::new(0.0, 0.9), Complex::new(-0.4, 0.0)];
        assert_eq!(s.norm_complex(&z).unwrap(), direct);
        assert!(s.norm(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn hitting_time_examples() {
        let f = RewardFunction::<f64>::linear(4).unwrap();
        let stay = Trajectory::constant(0, 1.0).unwrap();
        assert_eq!(hitting_time_integral(&stay, &f, 0.8).unwrap(), 0.0);
        let top = Trajectory::constant(4, 1.0).unwrap();
        assert!((hitting_time_integral(&top, &f, 0.8).unwrap() - 0.8).abs() < 1e-15);

        let tr = Trajectory::new(vec![1, 2, 3], vec![0.2, 0.7], 1.0).unwrap();
        let path = NormPath::from_trajectory(&tr, &f).unwrap();
        for &t in &[0.0, 0.1, 0.2, 0.5, 0.7, 1.0] {
            let a = hitting_time_integral(&tr, &f, t).unwrap();
            let b = path.path_integral(t).unwrap();
            assert!((a - b).abs() < 1e-12);
        }

        let bad = Trajectory::new(vec![0, 2], vec![0.3], 1.0).unwrap();
        assert!(hitting_time_integral(&bad, &f, 0.5).is_err());
        let g = RewardFunction::new(vec![0.0, 0.3, 0.5, 0.7, 1.0]).unwrap();
        assert!(hitting_time_integral(&tr, &g, 0.5).is_err());
    }

    #[test]
    fn axioms_hold_for_limit_paths() {
        let vs = vec![[1.0, 0.0], [0.3, 0.2], [2.0, 1.5], [0.0, 0.0], [1.0, 1.0]];
        for path in [zero_path(), one_path()] {
            let report = validate_norm_axioms(&path, &vs, 1e-10).unwrap();
            assert!(report.is_clean(), "{:?}", report.violations);
            assert_eq!(report.pairs_checked, 5);
        }
        assert!(validate_norm_axioms(&one_path(), &[], 1e-10).is_err());
    }

    #[test]
    fn path_csv_round_trip() {
        let x = NormPath::new(vec![0.0, 0.25, 0.5], vec![0.0, 0.5, 1.0], 1.0).unwrap();
        let mut buf = Vec::new();
        x.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("breakpoint,slope\n"));
        assert_eq!(NormPath::read_csv(buf.as_slice(), 1.0).unwrap(), x);
    }

    fn arb_path() -> impl proptest::strategy::Strategy<Value = NormPath<f64>> {
        use proptest::prelude::*;
        proptest::collection::vec((0.001f64..0.5, 0.0f64..1.0), 1..8).prop_map(|pieces| {
            let mut breakpoints = vec![0.0];
            let mut slopes: Vec<f64> = pieces.iter().map(|p| p.1).collect();
            slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut t = 0.0;
            for p in &pieces[1..] {
                t += p.0;
                if t >= 1.0 {
                    break;
                }
                breakpoints.push(t);
            }
            slopes.truncate(breakpoints.len());
            NormPath::new(breakpoints, slopes, 1.0).unwrap()
        })
    }

    proptest::proptest! {
        #[test]
        fn norm_lies_in_the_bracket(path in arb_path(), a in 0.0f64..10.0, r in 0.0f64..1.0) {
            let v = [a, a * r];
            let p = path.norm(v).unwrap();
            let tol = 1e-9 * (1.0 + a);
            proptest::prop_assert!(p >= v[0] - tol && p <= v[0] + v[1] + tol);
        }

        #[test]
        fn norm_axioms_hold(path in arb_path(), vs in proptest::collection::vec((0.0f64..5.0, 0.0f64..1.0), 2..6)) {
            let vectors: Vec<[f64; 2]> = vs.iter().map(|&(a, r)| [a, a * r]).collect();
            let report = validate_norm_axioms(&path, &vectors, 1e-8).unwrap();
            proptest::prop_assert!(report.is_clean(), "{:?}", report.violations);
        }

        #[test]
        fn path_integral_is_lipschitz(path in arb_path(), s in 0.0f64..1.0, t in 0.0f64..1.0) {
            let (s, t) = if s <= t { (s, t) } else { (t, s) };
            let d = path.path_integral(t).unwrap() - path.path_integral(s).unwrap();
            proptest::prop_assert!(d >= -1e-15 && d <= t - s + 1e-15);
        }
    }
}
