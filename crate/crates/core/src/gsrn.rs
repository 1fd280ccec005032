//! Expected norms, unit circles and spheres, and the higher-dimensional
//! extensions of a planar random norm.
//!
//! Everything works on sorted nonnegative representatives: a gauge-invariant
//! symmetric norm only sees `|v|` sorted in decreasing order. Full curves
//! and meshes are recovered afterwards from the symmetry group (8 elements
//! in the plane, 48 in space).

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ctmc::{sample_trajectory_with, GeneratorMatrix, RewardFunction};
use crate::distribution::{DistributionGrid, GridManifest};
use crate::error::{invalid, Error, Result};
use crate::norm_process::{default_tolerance, NormPath};
use crate::scalar::Real;

/// Minimum number of nodes in the tail-integral quadrature.
pub const MIN_TAIL_NODES: usize = 200;

/// Nonnegative components in nonincreasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SortedVector<T: Real> {
    components: Vec<T>,
}

impl<T: Real> SortedVector<T> {
    /// Checks that `components` are finite, nonnegative and nonincreasing.
    pub fn new(components: Vec<T>) -> Result<Self> {
        if components.is_empty() {
            return invalid("vector has no components");
        }
        if components.iter().any(|c| !c.is_finite() || *c < T::zero()) {
            return invalid("components must be finite and nonnegative");
        }
        if components.windows(2).any(|w| w[1] > w[0]) {
            return invalid("components must be sorted in nonincreasing order");
        }
        Ok(Self { components })
    }

    /// The gauge-invariant symmetric reduction: absolute values, sorted.
    pub fn from_unsorted(v: &[T]) -> Result<Self> {
        let mut c: Vec<T> = v.iter().map(|x| x.abs()).collect();
        c.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        Self::new(c)
    }

    pub fn from_complex(v: &[Complex<T>]) -> Result<Self> {
        let moduli: Vec<T> = v.iter().map(|z| z.norm()).collect();
        Self::from_unsorted(&moduli)
    }

    pub fn components(&self) -> &[T] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn norm_inf(&self) -> T {
        self.components[0]
    }

    pub fn norm_1(&self) -> T {
        self.components.iter().fold(T::zero(), |a, &b| a + b)
    }

    pub fn norm_2(&self) -> T {
        self.components
            .iter()
            .fold(T::zero(), |a, &b| a + b * b)
            .sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.components[0] == T::zero()
    }

    pub fn scaled(&self, alpha: T) -> Result<Self> {
        Self::new(self.components.iter().map(|&c| c * alpha).collect())
    }

    fn pair(&self) -> Result<[T; 2]> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: self.dim(),
            });
        }
        Ok([self.components[0], self.components[1]])
    }
}

fn sorted_pair<T: Real>(a: T, b: T) -> [T; 2] {
    if a >= b {
        [a, b]
    } else {
        [b, a]
    }
}

fn require_ground_state<T: Real>(grid: &DistributionGrid<T>) -> Result<()> {
    if !grid.has_state(0) {
        return Err(Error::OutOfRange(
            "the grid must retain initial state 0".into(),
        ));
    }
    Ok(())
}

/// `P(p(v) <= y) = F_0(v2 / y, 1 - v1 / y)` for `y` in `[v1, v1 + v2]`.
pub fn norm_cdf<T: Real>(grid: &DistributionGrid<T>, v: &SortedVector<T>, y: T) -> Result<T> {
    let [v1, v2] = v.pair()?;
    if v.is_zero() {
        return invalid("norm_cdf needs a nonzero vector");
    }
    require_ground_state(grid)?;
    cdf_unchecked(grid, [v1, v2], y)
}

fn cdf_unchecked<T: Real>(grid: &DistributionGrid<T>, v: [T; 2], y: T) -> Result<T> {
    let [v1, v2] = v;
    let slack = T::lit(1e-12).max(T::epsilon() * T::lit(16.0)) * (v1 + v2);
    if !(y >= v1 - slack && y <= v1 + v2 + slack) {
        return Err(Error::OutOfRange(format!(
            "y = {y} outside the bracket [{v1}, {}]",
            v1 + v2
        )));
    }
    let y = y.clamp_to(v1, v1 + v2);
    let t = (v2 / y).clamp_to(T::zero(), T::one());
    let x = (T::one() - v1 / y).clamp_to(T::zero(), T::one());
    grid.value(0, t, x)
}

/// `E[p(v)] = v1 + ∫_{v1}^{v1+v2} (1 - P(p <= y)) dy`, trapezoid rule with
/// `max(N, 200)` intervals.
pub fn expected_norm_2d<T: Real>(grid: &DistributionGrid<T>, v: &SortedVector<T>) -> Result<T> {
    let pair = v.pair()?;
    require_ground_state(grid)?;
    expected_pair(grid, pair)
}

fn expected_pair<T: Real>(grid: &DistributionGrid<T>, v: [T; 2]) -> Result<T> {
    let [v1, v2] = v;
    if v1 == T::zero() || v2 == T::zero() {
        return Ok(v1);
    }
    let m = grid.internal_points().max(MIN_TAIL_NODES);
    let h = v2 / T::from_usize_lossy(m);
    let mut acc = T::zero();
    for i in 0..=m {
        let y = if i == m { v1 + v2 } else { v1 + T::from_usize_lossy(i) * h };
        let tail = T::one() - cdf_unchecked(grid, v, y)?;
        let w = if i == 0 || i == m { T::lit(0.5) } else { T::one() };
        acc = acc + w * tail;
    }
    Ok((v1 + h * acc).clamp_to(v1, v1 + v2))
}

/// Nested weak extension, innermost pair first: `w = E[p(v_{n-1}, v_n)]`,
/// then `w = E[p(v_k, w)]` for `k = n-2, …, 1`.
pub fn weak_extension<T: Real>(grid: &DistributionGrid<T>, v: &SortedVector<T>) -> Result<T> {
    Ok(*weak_extension_levels(grid, v)?.last().unwrap())
}

/// Every intermediate value of [`weak_extension`], innermost first; the
/// last entry is the extension itself.
pub fn weak_extension_levels<T: Real>(grid: &DistributionGrid<T>, v: &SortedVector<T>) -> Result<Vec<T>> {
    let c = v.components();
    if c.len() < 2 {
        return invalid("the weak extension needs at least two components");
    }
    require_ground_state(grid)?;
    let n = c.len();
    let mut w = expected_pair(grid, [c[n - 2], c[n - 1]])?;
    let mut levels = vec![w];
    for k in (0..n - 2).rev() {
        w = expected_pair(grid, sorted_pair(c[k], w))?;
        levels.push(w);
    }
    Ok(levels)
}

fn strong_with<T: Real>(
    g: &GeneratorMatrix<T>,
    f: &RewardFunction<T>,
    c: &[T],
    rng: &mut ChaCha8Rng,
) -> Result<T> {
    let n = c.len();
    let mut draw = || -> Result<NormPath<T>> {
        let traj = sample_trajectory_with(g, 0, T::one(), rng)?;
        NormPath::from_trajectory(&traj, f)
    };
    let eval = |path: &NormPath<T>, pair: [T; 2]| path.evaluate_norm(pair, default_tolerance(pair));
    let mut w = eval(&draw()?, [c[n - 2], c[n - 1]])?;
    for k in (0..n - 2).rev() {
        w = eval(&draw()?, sorted_pair(c[k], w))?;
    }
    Ok(w)
}

fn check_strong_inputs<T: Real>(g: &GeneratorMatrix<T>, f: &RewardFunction<T>, v: &SortedVector<T>) -> Result<()> {
    if v.dim() < 2 {
        return invalid("the strong extension needs at least two components");
    }
    if f.len() != g.size() {
        return Err(Error::DimensionMismatch {
            expected: g.size(),
            actual: f.len(),
        });
    }
    Ok(())
}

/// One draw of the strong extension: `n - 1` independent planar norms,
/// nested from the innermost pair outward.
pub fn strong_extension_sample<T: Real>(
    g: &GeneratorMatrix<T>,
    f: &RewardFunction<T>,
    v: &SortedVector<T>,
    seed: u64,
) -> Result<T> {
    check_strong_inputs(g, f, v)?;
    strong_with(g, f, v.components(), &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `count` independent draws; sample `i` uses stream `i` of the seed, so
/// the result does not depend on scheduling.
pub fn strong_extension_samples<T: Real>(
    g: &GeneratorMatrix<T>,
    f: &RewardFunction<T>,
    v: &SortedVector<T>,
    count: usize,
    seed: u64,
) -> Result<Vec<T>> {
    check_strong_inputs(g, f, v)?;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            strong_with(g, f, v.components(), &mut rng)
        })
        .collect()
}

/// Vertices and triangles indexing them.
pub type Mesh<T> = (Vec<[T; 3]>, Vec<[usize; 3]>);

/// What produced a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableProvenance {
    pub kind: String,
    /// Angle count (circle) or mesh resolution (sphere).
    pub density: usize,
    pub symmetry_group_order: usize,
    pub grid: GridManifest,
}

/// `E[p(v)]` over sorted unit directions, with the derived unit-ball points
/// `v / E[p(v)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ExpectedNormTable<T: Real> {
    pub dimension: usize,
    pub directions: Vec<SortedVector<T>>,
    pub values: Vec<T>,
    /// Triangles over `directions` (sphere tables only).
    pub faces: Vec<[usize; 3]>,
    pub provenance: TableProvenance,
}

impl<T: Real> ExpectedNormTable<T> {
    /// Unit-ball boundary points of the sorted representatives.
    pub fn points(&self) -> Vec<Vec<T>> {
        self.directions
            .iter()
            .zip(&self.values)
            .map(|(d, &e)| d.components().iter().map(|&c| c / e).collect())
            .collect()
    }

    /// Number of entries outside `[‖v‖∞, ‖v‖₁]` by more than `tol` (relative).
    pub fn bracket_violations(&self, tol: T) -> usize {
        self.directions
            .iter()
            .zip(&self.values)
            .filter(|(d, &e)| {
                let scale = d.norm_1();
                e < d.norm_inf() - tol * scale || e > scale + tol * scale
            })
            .count()
    }

    /// Closed curve through all eight images of the octant points, ordered
    /// by angle (planar tables only).
    pub fn full_curve(&self) -> Result<Vec<[T; 2]>> {
        if self.dimension != 2 {
            return invalid("full_curve needs a planar table");
        }
        let octant: Vec<[T; 2]> = self.points().iter().map(|p| [p[0], p[1]]).collect();
        // angle 0..π/4 as stored, π/4..π/2 by swapping in reverse order
        let mut quarter = octant.clone();
        quarter.extend(octant.iter().rev().skip(1).map(|p| [p[1], p[0]]));
        let mut curve = quarter.clone();
        curve.extend(quarter.iter().rev().skip(1).map(|p| [-p[0], p[1]]));
        curve.extend(quarter.iter().skip(1).map(|p| [-p[0], -p[1]]));
        curve.extend(quarter.iter().rev().skip(1).map(|p| [p[0], -p[1]]));
        Ok(curve)
    }

    /// All 48 images of the octant mesh as vertices and triangles (sphere
    /// tables only). Seams between images repeat vertices.
    pub fn full_mesh(&self) -> Result<Mesh<T>> {
        if self.dimension != 3 {
            return invalid("full_mesh needs a spatial table");
        }
        let base: Vec<[T; 3]> = self.points().iter().map(|p| [p[0], p[1], p[2]]).collect();
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut verts = Vec::with_capacity(base.len() * 48);
        let mut faces = Vec::with_capacity(self.faces.len() * 48);
        for perm in perms {
            for signs in 0..8u8 {
                let offset = verts.len();
                for p in &base {
                    let mut q = [T::zero(); 3];
                    for (axis, &src) in perm.iter().enumerate() {
                        let s = if signs & (1 << axis) != 0 { -T::one() } else { T::one() };
                        q[axis] = s * p[src];
                    }
                    verts.push(q);
                }
                // keep outward orientation under reflections
                let odd = perm_parity(perm) ^ (signs.count_ones() % 2 == 1);
                for f in &self.faces {
                    let tri = [f[0] + offset, f[1] + offset, f[2] + offset];
                    faces.push(if odd { [tri[0], tri[2], tri[1]] } else { tri });
                }
            }
        }
        Ok((verts, faces))
    }

    /// CSV with direction components, the expected norm and the unit-ball
    /// point.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.dimension).map(|i| format!("v{i}")).collect();
        header.push("expected_norm".into());
        header.extend((0..self.dimension).map(|i| format!("q{i}")));
        w.write_record(&header)?;
        for ((d, e), q) in self.directions.iter().zip(&self.values).zip(self.points()) {
            let mut rec: Vec<String> = d.components().iter().map(|c| c.to_string()).collect();
            rec.push(e.to_string());
            rec.extend(q.iter().map(|c| c.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn perm_parity(p: [usize; 3]) -> bool {
    let mut inversions = 0;
    for i in 0..3 {
        for j in i + 1..3 {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 1
}

/// Expected-norm unit circle on `angle_count` equally spaced angles of the
/// first octant `θ ∈ [0, π/4]`.
pub fn unit_circle<T: Real>(grid: &DistributionGrid<T>, angle_count: usize) -> Result<ExpectedNormTable<T>> {
    if angle_count < 3 {
        return invalid("need at least three angles");
    }
    require_ground_state(grid)?;
    let directions: Vec<SortedVector<T>> = (0..angle_count)
        .map(|i| {
            let theta = FRAC_PI_4 * i as f64 / (angle_count - 1) as f64;
            let (c, s) = (T::lit(theta.cos()), T::lit(theta.sin()));
            SortedVector::new(vec![c, s.min(c)])
        })
        .collect::<Result<_>>()?;
    let values = directions
        .par_iter()
        .map(|d| expected_pair(grid, [d.components()[0], d.components()[1]]))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExpectedNormTable {
        dimension: 2,
        directions,
        values,
        faces: Vec::new(),
        provenance: TableProvenance {
            kind: "unit_circle".into(),
            density: angle_count,
            symmetry_group_order: 8,
            grid: grid.manifest(),
        },
    })
}

/// Weak-extension unit sphere over the sorted octant cone spanned by
/// `(1,0,0)`, `(1,1,0)` and `(1,1,1)`, meshed barycentrically with
/// `resolution` subdivisions per edge.
pub fn unit_sphere_3d<T: Real>(grid: &DistributionGrid<T>, resolution: usize) -> Result<ExpectedNormTable<T>> {
    if resolution < 3 {
        return invalid("resolution must be at least 3");
    }
    require_ground_state(grid)?;
    let r = resolution;
    let mut index = vec![vec![usize::MAX; r + 1]; r + 1];
    let mut directions = Vec::new();
    for i in 0..=r {
        for j in 0..=r - i {
            // weights (r-i-j, i, j) on the three generators
            let (b, c) = (T::from_usize_lossy(i), T::from_usize_lossy(j));
            let a = T::from_usize_lossy(r - i - j);
            let raw = SortedVector::new(vec![a + b + c, b + c, c])?;
            let len = raw.norm_2();
            index[i][j] = directions.len();
            directions.push(raw.scaled(T::one() / len)?);
        }
    }
    let mut faces = Vec::new();
    for i in 0..r {
        for j in 0..r - i {
            faces.push([index[i][j], index[i + 1][j], index[i][j + 1]]);
            if i + j + 1 < r {
                faces.push([index[i + 1][j], index[i + 1][j + 1], index[i][j + 1]]);
            }
        }
    }
    let values = directions
        .par_iter()
        .map(|d| weak_extension(grid, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExpectedNormTable {
        dimension: 3,
        directions,
        values,
        faces,
        provenance: TableProvenance {
            kind: "unit_sphere_3d".into(),
            density: resolution,
            symmetry_group_order: 48,
            grid: grid.manifest(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmc::build_pure_birth;
    use crate::distribution::{solve_integral_equation, solve_upwind};

    fn grid(n: usize, lambda: f64, nn: usize) -> DistributionGrid<f64> {
        solve_integral_equation(n, lambda, nn, None).unwrap()
    }

    fn sv(c: &[f64]) -> SortedVector<f64> {
        SortedVector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn sorted_vector_validation_and_reduction() {
        assert!(SortedVector::new(vec![0.5, 1.0]).is_err());
        assert!(SortedVector::new(vec![1.0, -0.1]).is_err());
        assert!(SortedVector::<f64>::new(vec![]).is_err());
        let v = SortedVector::<f64>::from_unsorted(&[-0.2, 3.0, -1.0]).unwrap();
        assert_eq!(v.components(), &[3.0, 1.0, 0.2]);
        let z = SortedVector::from_complex(&[Complex::new(0.0, -2.0), Complex::new(3.0, 4.0)]).unwrap();
        assert_eq!(z.components(), &[5.0, 2.0]);
        assert_eq!(v.norm_inf(), 3.0);
        assert!((v.norm_1() - 4.2).abs() < 1e-15);
    }

    #[test]
    fn frozen_chain_gives_the_max_norm() {
        let g = grid(1, 0.0, 100);
        let v = sv(&[1.0, 1.0]);
        assert!((expected_norm_2d(&g, &v).unwrap() - 1.0).abs() < 1e-12);
        assert!((norm_cdf(&g, &v, 1.0 + 1e-6).unwrap() - 1.0).abs() < 1e-12);
        assert!((weak_extension(&g, &sv(&[1.0, 1.0, 1.0])).unwrap() - 1.0).abs() < 1e-12);
        assert!(norm_cdf(&g, &v, 2.5).is_err());
        assert!(norm_cdf(&g, &v, 0.9).is_err());
    }

    #[test]
    fn axis_direction_has_norm_one() {
        let g = grid(5, 7.0, 80);
        assert_eq!(expected_norm_2d(&g, &sv(&[1.0, 0.0])).unwrap(), 1.0);
        assert_eq!(weak_extension(&g, &sv(&[1.0, 0.0, 0.0])).unwrap(), 1.0);
        assert_eq!(expected_norm_2d(&g, &sv(&[0.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn fast_chain_concentrates_near_the_one_norm() {
        // at y = ‖v‖₁ itself the cdf is always 1 (X_t <= t), so probe just below
        let g = grid(1, 100.0, 400);
        let v = sv(&[1.0, 1.0]);
        assert_eq!(norm_cdf(&g, &v, 2.0).unwrap(), 1.0);
        let y = 1.95;
        let exact = (-100.0 * (2.0 / y - 1.0_f64)).exp();
        let got = norm_cdf(&g, &v, y).unwrap();
        assert!(got < 0.1 && (got - exact).abs() < 1e-3, "{got} vs {exact}");
        let e = expected_norm_2d(&g, &v).unwrap();
        assert!(e > 1.95 && e <= 2.0, "{e}");
    }

    #[test]
    fn expected_norm_is_homogeneous_and_bracketed() {
        let g = grid(6, 12.0, 120);
        for &(a, b) in &[(1.0, 0.3), (0.8, 0.8), (2.0, 0.1)] {
            let e = expected_norm_2d(&g, &sv(&[a, b])).unwrap();
            assert!(e >= a && e <= a + b);
            for &alpha in &[0.5, 2.0] {
                let s = expected_norm_2d(&g, &sv(&[a * alpha, b * alpha])).unwrap();
                assert!((s - alpha * e).abs() < 1e-12 * alpha);
            }
        }
    }

    #[test]
    fn weak_extension_reduces_to_the_plane() {
        let g = grid(6, 12.0, 120);
        for &(a, b) in &[(1.0, 0.3), (0.8, 0.8)] {
            let e2 = expected_norm_2d(&g, &sv(&[a, b])).unwrap();
            let e3 = weak_extension(&g, &sv(&[a, b, 0.0])).unwrap();
            let e4 = weak_extension(&g, &sv(&[a, b, 0.0, 0.0])).unwrap();
            assert_eq!(e2, e3);
            assert_eq!(e2, e4);
        }
        let levels = weak_extension_levels(&g, &sv(&[1.0, 0.7, 0.4])).unwrap();
        assert_eq!(levels.len(), 2);
        assert!(levels[0] >= 0.7 && levels[0] <= 1.1);
    }

    #[test]
    fn circle_and_sphere_stay_between_the_reference_balls() {
        let g = grid(8, 20.0, 100);
        let circle = unit_circle(&g, 33).unwrap();
        assert_eq!(circle.bracket_violations(1e-12), 0);
        for q in circle.points() {
            let inf = q[0].abs().max(q[1].abs());
            assert!(inf <= 1.0 + 1e-12 && q[0] + q[1] >= 1.0 - 1e-12);
        }
        let curve = circle.full_curve().unwrap();
        assert_eq!(curve.len(), 8 * 32 + 1);
        assert!((curve[0][0] - 1.0).abs() < 1e-12 && curve[0][1] == 0.0);
        assert_eq!(curve.first(), curve.last());

        let sphere = unit_sphere_3d(&g, 6).unwrap();
        assert_eq!(sphere.directions.len(), 28);
        assert_eq!(sphere.faces.len(), 36);
        assert_eq!(sphere.bracket_violations(1e-12), 0);
        let (verts, faces) = sphere.full_mesh().unwrap();
        assert_eq!(verts.len(), 48 * 28);
        assert_eq!(faces.len(), 48 * 36);
    }

    #[test]
    fn frozen_chain_circle_is_the_square() {
        let g = grid(1, 0.0, 200);
        let circle = unit_circle(&g, 17).unwrap();
        for q in circle.full_curve().unwrap() {
            assert!((q[0].abs().max(q[1].abs()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn strong_extension_basic_properties() {
        let gen = build_pure_birth(10, 10.0).unwrap();
        let f = RewardFunction::linear(10).unwrap();
        for seed in 0..20 {
            assert_eq!(strong_extension_sample(&gen, &f, &sv(&[1.0, 0.0, 0.0]), seed).unwrap(), 1.0);
            let v = sv(&[1.0, 0.6, 0.3]);
            let p = strong_extension_sample(&gen, &f, &v, seed).unwrap();
            assert!((1.0..=1.9).contains(&p));
        }
        let v = sv(&[1.0, 1.0]);
        let a = strong_extension_samples(&gen, &f, &v, 500, 9).unwrap();
        let b = strong_extension_samples(&gen, &f, &v, 500, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn strong_mean_matches_expected_norm() {
        let gen = build_pure_birth(10, 10.0).unwrap();
        let f = RewardFunction::linear(10).unwrap();
        let g = grid(10, 10.0, 200);
        let v = sv(&[1.0, 0.7]);
        let s = strong_extension_samples(&gen, &f, &v, 20_000, 4).unwrap();
        let m = s.iter().sum::<f64>() / s.len() as f64;
        let var = s.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (s.len() - 1) as f64;
        let se = (var / s.len() as f64).sqrt();
        let e = expected_norm_2d(&g, &v).unwrap();
        assert!((m - e).abs() < 4.0 * se + 1e-3, "{m} vs {e} (se {se})");
    }

    #[test]
    fn engines_give_close_expected_norms() {
        let gen = build_pure_birth(10, 10.0).unwrap();
        let f = RewardFunction::linear(10).unwrap();
        let up = solve_upwind(&gen, &f, 200, None, 0.0).unwrap();
        let ie = grid(10, 10.0, 200);
        let v = sv(&[1.0, 1.0]);
        let a = expected_norm_2d(&up, &v).unwrap();
        let b = expected_norm_2d(&ie, &v).unwrap();
        assert!((a - b).abs() < 5e-3, "{a} vs {b}");
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]

        #[test]
        fn sorted_vector_orders_magnitudes(c in proptest::collection::vec(-10.0f64..10.0, 1..6)) {
            let v = SortedVector::from_unsorted(&c).unwrap();
            for w in v.components().windows(2) {
                proptest::prop_assert!(w[0] >= w[1] && w[1] >= 0.0);
            }
            proptest::prop_assert!((v.norm_1() - c.iter().map(|x| x.abs()).sum::<f64>()).abs() < 1e-12);
        }

        #[test]
        fn norm_cdf_is_monotone(b in 0.0f64..1.0, y0 in 0.0f64..1.0, y1 in 0.0f64..1.0) {
            let g = grid(5, 5.0, 40);
            let v = sv(&[1.0, b]);
            let (lo, hi) = if y0 <= y1 { (y0, y1) } else { (y1, y0) };
            let at = |y: f64| norm_cdf(&g, &v, 1.0 + b * y).unwrap();
            let (flo, fhi) = (at(lo), at(hi));
            proptest::prop_assert!(flo <= fhi + 1e-12);
            proptest::prop_assert!((0.0..=1.0).contains(&flo) && (0.0..=1.0).contains(&fhi));
        }

        #[test]
        fn expected_norm_is_homogeneous(a in 0.01f64..10.0, r in 0.0f64..1.0, alpha in 0.01f64..10.0) {
            let g = grid(5, 5.0, 40);
            let e = expected_norm_2d(&g, &sv(&[a, a * r])).unwrap();
            let es = expected_norm_2d(&g, &sv(&[alpha * a, alpha * a * r])).unwrap();
            proptest::prop_assert!((es - alpha * e).abs() <= 1e-10 * alpha * a);
            proptest::prop_assert!(e >= a - 1e-10 && e <= a * (1.0 + r) + 1e-10);
        }
    }
}
