use aggfield::angular::AngularMeasure;
use aggfield::field::{
    aggregate_field, copy_with_q, empirical_cov, grid_indices, product_values, simulate_walk, single_field_values,
    walk_from_uniforms, CopyScratch, WalkPartialSums,
};
use aggfield::persistence::PersistenceLaw;
use aggfield::rng::stream;
use aggfield::theory::exact_cov_pinned;
use proptest::prelude::*;

fn steps(w: &WalkPartialSums) -> Vec<i64> {
    w.cumulative.windows(2).map(|p| p[1] - p[0]).collect()
}

/// `Σ ε¹_{j1} ε²_{j2}` over the lattice rectangle `[1, a] × [1, b]`.
fn lattice_sum(e1: &[i64], e2: &[i64], a: usize, b: usize) -> i64 {
    let mut s = 0;
    for x in &e1[..a] {
        for y in &e2[..b] {
            s += x * y;
        }
    }
    s
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn forced_paths() {
    assert_eq!(walk_from_uniforms(true, 0.9, &[0.1; 3]).cumulative, vec![0, 1, 2, 3, 4]);
    assert_eq!(walk_from_uniforms(true, 0.5, &[0.9; 3]).cumulative, vec![0, 1, 0, 1, 0]);
}

#[test]
fn fully_persistent_product_and_empty_rectangle() {
    let w = WalkPartialSums::from_steps(&[1; 8]);
    let v = product_values(&w, &w, &grid_indices([8, 8], &[[1.0, 1.0], [0.0, 0.7]]).unwrap());
    assert_eq!(v, vec![64, 0]);
    let e1 = WalkPartialSums::from_steps(&[1, -1, -1]);
    let e2 = WalkPartialSums::from_steps(&[1, 1, -1]);
    let v = product_values(&e1, &e2, &grid_indices([3, 3], &[[1.0, 1.0]]).unwrap());
    assert_eq!(v, vec![lattice_sum(&steps(&e1), &steps(&e2), 3, 3)]);
    assert_eq!(v, vec![-1]);
}

#[test]
fn iid_signs_have_variance_n() {
    let mut rng = stream(5, &[0]);
    let xs: Vec<f64> = (0..100_000)
        .map(|_| *simulate_walk(64, 0.5, &mut rng).cumulative.last().unwrap() as f64)
        .map(|s| s * s)
        .collect();
    let (mean, se) = mean_and_se(&xs);
    assert!((mean - 64.0).abs() < 4.0 * se, "{mean} ± {se}");
}

#[test]
fn aggregated_field_is_centered() {
    let law = PersistenceLaw::dependent(1.2, 0.8, AngularMeasure::beta_density(2.0, 2.0).unwrap()).unwrap();
    let grid = [[1.0, 1.0], [0.5, 0.25]];
    let runs: Vec<Vec<i64>> = (0..1000)
        .map(|r| aggregate_field([16, 16], &grid, &law, 5, r).unwrap().values)
        .collect();
    for k in 0..grid.len() {
        let xs: Vec<f64> = runs.iter().map(|v| v[k] as f64).collect();
        let (mean, se) = mean_and_se(&xs);
        assert!(mean.abs() < 4.0 * se, "point {k}: {mean} ± {se}");
    }
}

#[test]
fn single_copy_matches_aggregate_of_one() {
    let law = PersistenceLaw::independent(0.7, 0.8).unwrap();
    let grid = [[1.0, 1.0], [0.3, 0.6]];
    let run = aggregate_field([10, 12], &grid, &law, 1, 99).unwrap();
    let idx = grid_indices([10, 12], &grid).unwrap();
    let mut out = vec![0; grid.len()];
    aggfield::field::single_copy(&law, &idx, 99, 0, &mut CopyScratch::default(), &mut out);
    assert_eq!(run.values, out);
}

#[test]
fn empirical_cov_examples() {
    let zeros = vec![vec![0.0, 0.0]; 5];
    let e = empirical_cov(&zeros, &[(0, 1)]).unwrap()[0];
    assert_eq!((e.estimate, e.stderr), (0.0, 0.0));
    let constant = vec![vec![3.0, 3.0]; 5];
    let e = empirical_cov(&constant, &[(0, 1)]).unwrap()[0];
    assert_eq!((e.estimate, e.stderr), (9.0, 0.0));
    let signs: Vec<Vec<f64>> = (0..7).map(|i| if i % 3 == 0 { vec![1.0, 1.0] } else { vec![-1.0, -1.0] }).collect();
    let e = empirical_cov(&signs, &[(0, 1)]).unwrap()[0];
    assert_eq!((e.estimate, e.stderr), (1.0, 0.0));
}

#[test]
fn pinned_covariance_factorizes() {
    // with q fixed the two axes are independent, so the Monte Carlo
    // covariance must match the product of the per-axis covariances
    let q = [0.8, 0.65];
    let n = [12u64, 9];
    let grid = [[1.0, 1.0], [0.5, 2.0 / 3.0]];
    let idx = grid_indices(n, &grid).unwrap();
    let mut scratch = CopyScratch::default();
    let runs: Vec<Vec<f64>> = (0..200_000u64)
        .map(|c| {
            let mut r1 = stream(17, &[c, 1]);
            let mut r2 = stream(17, &[c, 2]);
            let mut out = vec![0; 2];
            copy_with_q(q, &idx, [&mut r1, &mut r2], &mut scratch, &mut out);
            out.iter().map(|&v| v as f64).collect()
        })
        .collect();
    let est = empirical_cov(&runs, &[(0, 0), (0, 1)]).unwrap();
    for (e, (s, t)) in est.iter().zip([(grid[0], grid[0]), (grid[0], grid[1])]) {
        let want = exact_cov_pinned(n, s, t, q).unwrap();
        assert!((e.estimate - want).abs() < 4.0 * e.stderr, "{e:?} vs {want}");
    }
}

#[test]
fn translated_windows_have_equal_variance() {
    // stationarity: the sum over steps 9..16 has the law of the sum over 1..8
    let law = PersistenceLaw::independent(0.8, 0.8).unwrap();
    let mut rng = stream(31, &[0]);
    let (mut first, mut shifted) = (Vec::new(), Vec::new());
    for _ in 0..100_000 {
        let q = law.sample_q(&mut rng).q();
        let w = simulate_walk(16, q[0], &mut rng);
        let c = &w.cumulative;
        first.push((c[8] as f64).powi(2));
        shifted.push(((c[16] - c[8]) as f64).powi(2));
    }
    let (a, sa) = mean_and_se(&first);
    let (b, sb) = mean_and_se(&shifted);
    assert!((a - b).abs() < 4.0 * (sa * sa + sb * sb).sqrt(), "{a} vs {b}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_identity_matches_lattice(seed in any::<u64>(), n1 in 1u64..=8, n2 in 1u64..=8, q1 in 0.5f64..1.0, q2 in 0.5f64..1.0) {
        let mut rng = stream(seed, &[0]);
        let w1 = simulate_walk(n1 as usize, q1, &mut rng);
        let w2 = simulate_walk(n2 as usize, q2, &mut rng);
        let grid: Vec<[f64; 2]> = (0..=4).flat_map(|i| (0..=4).map(move |j| [i as f64 / 4.0, j as f64 / 4.0])).collect();
        let idx = grid_indices([n1, n2], &grid).unwrap();
        let values = product_values(&w1, &w2, &idx);
        let (e1, e2) = (steps(&w1), steps(&w2));
        for (v, [a, b]) in values.iter().zip(idx) {
            prop_assert_eq!(*v, lattice_sum(&e1, &e2, a, b));
        }
    }

    #[test]
    fn single_field_values_is_a_product(seed in any::<u64>(), t1 in 0.0f64..=1.0, t2 in 0.0f64..=1.0) {
        let law = PersistenceLaw::dependent(1.0, 1.0, AngularMeasure::point_mass(0.5).unwrap()).unwrap();
        let v = single_field_values([6, 7], &[[t1, t2], [1.0, 1.0], [t1, 1.0], [1.0, t2]], &law, &mut stream(seed, &[1])).unwrap();
        prop_assert_eq!(v[0] * v[1], v[2] * v[3]);
    }
}
