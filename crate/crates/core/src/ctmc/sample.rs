use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::{GeneratorMatrix, Trajectory};
use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Seedable, platform-independent generator used for every stochastic routine.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Samples one trajectory on `[0, horizon]` starting from `y0`.
pub fn sample_trajectory<T: Real>(
    g: &GeneratorMatrix<T>,
    y0: usize,
    horizon: T,
    seed: u64,
) -> Result<Trajectory<T>> {
    sample_trajectory_with(g, y0, horizon, &mut rng_from_seed(seed))
}

/// Gillespie simulation: exponential holding times with rate `-G_kk`, next
/// state drawn proportionally to the off-diagonal row.
pub fn sample_trajectory_with<T: Real, R: Rng + ?Sized>(
    g: &GeneratorMatrix<T>,
    y0: usize,
    horizon: T,
    rng: &mut R,
) -> Result<Trajectory<T>> {
    if y0 >= g.size() {
        return invalid(format!("initial state {y0} outside 0..{}", g.size()));
    }
    if !(horizon > T::zero()) || !horizon.is_finite() {
        return invalid(format!("horizon must be positive, got {horizon}"));
    }
    let mut states = vec![y0];
    let mut times = Vec::new();
    let mut state = y0;
    let mut clock = T::zero();
    loop {
        if g.is_absorbing(state) {
            break;
        }
        let rate = g.exit_rate(state);
        let e: f64 = rng.sample(Exp1);
        let hold = T::lit(e) / rate;
        clock = clock + hold;
        if !(clock <= horizon) {
            break;
        }
        // guard against a zero holding time collapsing two jumps together
        if let Some(&last) = times.last() {
            if !(clock > last) {
                continue;
            }
        } else if !(clock > T::zero()) {
            continue;
        }
        let target = T::lit(rng.random::<f64>()) * rate;
        let row = g.matrix().row(state);
        let mut acc = T::zero();
        let mut next = None;
        let mut last_positive = state;
        for (j, &r) in row.iter().enumerate() {
            if j == state || r <= T::zero() {
                continue;
            }
            last_positive = j;
            acc = acc + r;
            if target < acc {
                next = Some(j);
                break;
            }
        }
        state = next.unwrap_or(last_positive);
        states.push(state);
        times.push(clock);
    }
    Ok(Trajectory::from_parts_unchecked(states, times, horizon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmc::{build_pure_birth, transition_matrix};

    #[test]
    fn zero_rates_never_jump() {
        let g = build_pure_birth(3, 0.0_f64).unwrap();
        let tr = sample_trajectory(&g, 0, 5.0, 1).unwrap();
        assert_eq!(tr.jump_count(), 0);
        assert_eq!(tr.state_at(4.9), 0);
    }

    #[test]
    fn absorbing_start_never_jumps() {
        let g = build_pure_birth(5, 7.0_f64).unwrap();
        let tr = sample_trajectory(&g, 5, 1.0, 3).unwrap();
        assert_eq!(tr.jump_count(), 0);
        assert_eq!(tr.final_state(), 5);
    }

    #[test]
    fn deterministic_given_seed() {
        let g = build_pure_birth(10, 10.0_f64).unwrap();
        let a = sample_trajectory(&g, 0, 1.0, 42).unwrap();
        let b = sample_trajectory(&g, 0, 1.0, 42).unwrap();
        let c = sample_trajectory(&g, 0, 1.0, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_inputs() {
        let g = build_pure_birth(2, 1.0_f64).unwrap();
        assert!(sample_trajectory(&g, 3, 1.0, 0).is_err());
        assert!(sample_trajectory(&g, 0, 0.0, 0).is_err());
    }

    #[test]
    fn general_generator_visits_all_successors() {
        let g = GeneratorMatrix::new(vec![
            vec![-3.0, 1.0, 2.0],
            vec![1.0, -1.0, 0.0],
            vec![0.5, 0.5, -1.0_f64],
        ])
        .unwrap();
        let mut rng = rng_from_seed(9);
        let mut first = [0usize; 3];
        for _ in 0..20_000 {
            let tr = sample_trajectory_with(&g, 0, 10.0, &mut rng).unwrap();
            if tr.jump_count() > 0 {
                first[tr.states()[1]] += 1;
            }
        }
        let total = (first[1] + first[2]) as f64;
        let p1 = first[1] as f64 / total;
        // jump-chain probability 1/3
        assert!((p1 - 1.0 / 3.0).abs() < 4.0 * (2.0 / 9.0 / total).sqrt());
    }

    #[test]
    fn empirical_marginals_match_transition_matrix() {
        let g = build_pure_birth(10, 10.0_f64).unwrap();
        let p = transition_matrix(&g, 1.0).unwrap();
        let samples = 100_000;
        let mut counts = [0usize; 11];
        let mut rng = rng_from_seed(2024);
        let mut jumps = 0usize;
        for _ in 0..samples {
            let tr = sample_trajectory_with(&g, 0, 1.0, &mut rng).unwrap();
            assert!(tr.is_pure_birth() && tr.jump_count() <= 10);
            jumps += tr.jump_count();
            counts[tr.final_state()] += 1;
        }
        for k in 0..11 {
            let q = p.get(0, k);
            let emp = counts[k] as f64 / samples as f64;
            let se = (q * (1.0 - q) / samples as f64).sqrt();
            assert!((emp - q).abs() <= 4.0 * se + 1e-12, "state {k}: {emp} vs {q}");
        }
        // E[jumps] = sum_k k P(Y_1 = k) since each jump moves up one state
        let mean_jumps: f64 = (0..11).map(|k| k as f64 * p.get(0, k)).sum();
        let emp = jumps as f64 / samples as f64;
        assert!((emp - mean_jumps).abs() < 0.02, "{emp} vs {mean_jumps}");
    }

    proptest::proptest! {
        #[test]
        fn pure_birth_paths_climb_one_step(n in 1usize..20, lambda in 0.1f64..100.0, seed in 0u64..1000) {
            let g = build_pure_birth(n, lambda).unwrap();
            let tr = sample_trajectory(&g, 0, 1.0, seed).unwrap();
            proptest::prop_assert!(tr.is_pure_birth());
            for (k, &s) in tr.states().iter().enumerate() {
                proptest::prop_assert_eq!(s, k);
            }
            for w in tr.jump_times().windows(2) {
                proptest::prop_assert!(w[0] < w[1]);
            }
        }
    }
}
