use fedload::clustering::{
    binomial, correlation_matrix, select_federation, CorrelationMatrix, SearchStrategy,
};
use fedload::loaddata::{generate_synthetic, SyntheticSpec};
use proptest::prelude::*;
use rand::Rng;

fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Best mean pairwise coefficient over all `k`-subsets, by bitmask.
fn brute_force(r: &[Vec<f64>], k: usize) -> f64 {
    let n = r.len();
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..1 << n {
        if mask.count_ones() as usize != k {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let mut sum = 0.0;
        let mut pairs = 0;
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                sum += r[i][j];
                pairs += 1;
            }
        }
        best = best.max(if pairs == 0 { 1.0 } else { sum / pairs as f64 });
    }
    best
}

fn random_pool(n: usize, seed: u64) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut rng = fedload::seed::rng(seed);
    let common: Vec<f64> = (0..96).map(|_| rng.random_range(-1.0..1.0)).collect();
    let series = (0..n)
        .map(|_| {
            let w = rng.random_range(0.0..1.0);
            common.iter().map(|c| w * c + (1.0 - w) * rng.random_range(-1.0..1.0)).collect()
        })
        .collect();
    ((0..n).map(|i| format!("h{i:02}")).collect(), series)
}

fn matrix_and_oracle(ids: &[String], series: &[Vec<f64>]) -> (CorrelationMatrix, Vec<Vec<f64>>) {
    let refs: Vec<&[f64]> = series.iter().map(Vec::as_slice).collect();
    let m = correlation_matrix(ids, &refs).unwrap();
    let r = series
        .iter()
        .map(|x| series.iter().map(|y| pearson_oracle(x, y)).collect())
        .collect();
    (m, r)
}

#[test]
fn matrix_matches_two_pass_pearson() {
    let (ids, series) = random_pool(6, 1);
    let (m, r) = matrix_and_oracle(&ids, &series);
    for (i, row) in r.iter().enumerate() {
        for (j, expected) in row.iter().enumerate() {
            assert!((m.get(i, j).unwrap() - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn exhaustive_selection_matches_brute_force() {
    for seed in 0..4 {
        let (ids, series) = random_pool(10, seed);
        let (m, r) = matrix_and_oracle(&ids, &series);
        let labels = vec!["ACORN-A".to_string(); 10];
        for k in 1..=10 {
            let sel = select_federation(&m, &labels, None, k, SearchStrategy::Exhaustive).unwrap();
            assert!((sel.correlation_rate - brute_force(&r, k)).abs() < 1e-12, "seed {seed} k {k}");
            assert_eq!(sel.indices.len(), k);
            let rate = m.mean_pairwise(&sel.indices).unwrap();
            assert!((rate - sel.correlation_rate).abs() < 1e-12);
        }
    }
}

#[test]
fn beam_search_is_close_to_exhaustive() {
    for seed in 10..20 {
        let (ids, series) = random_pool(8, seed);
        let (m, r) = matrix_and_oracle(&ids, &series);
        let labels = vec!["g".to_string(); 8];
        for k in 2..=8 {
            let best = brute_force(&r, k);
            let beam = select_federation(&m, &labels, None, k, SearchStrategy::Beam { width: 8 }).unwrap();
            assert!(beam.correlation_rate >= 0.95 * best, "seed {seed} k {k}");
        }
    }
}

#[test]
fn best_rate_does_not_increase_with_federation_size() {
    let (ids, series) = random_pool(12, 5);
    let (m, _) = matrix_and_oracle(&ids, &series);
    let labels = vec!["g".to_string(); 12];
    let rates: Vec<f64> = (2..=12)
        .map(|k| select_federation(&m, &labels, None, k, SearchStrategy::Auto).unwrap().correlation_rate)
        .collect();
    assert!(rates.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{rates:?}");
}

#[test]
fn group_filter_restricts_the_pool() {
    let mut series = generate_synthetic(&SyntheticSpec {
        n_clients: 4,
        days: 7,
        acorn_group: "ACORN-H".into(),
        id_prefix: "H".into(),
        ..SyntheticSpec::default()
    })
    .unwrap();
    series.extend(
        generate_synthetic(&SyntheticSpec {
            n_clients: 4,
            days: 7,
            seed: 1,
            acorn_group: "ACORN-L".into(),
            id_prefix: "L".into(),
            ..SyntheticSpec::default()
        })
        .unwrap(),
    );
    let ids: Vec<String> = series.iter().map(|s| s.client_id.clone()).collect();
    let labels: Vec<String> = series.iter().map(|s| s.acorn_group.clone()).collect();
    let refs: Vec<&[f64]> = series.iter().map(|s| s.values.as_slice()).collect();
    let m = correlation_matrix(&ids, &refs).unwrap();
    let only_l = ["ACORN-L".to_string()];
    let sel = select_federation(&m, &labels, Some(&only_l), 3, SearchStrategy::Auto).unwrap();
    assert!(sel.ids.iter().all(|id| id.starts_with('L')));
    assert!(select_federation(&m, &labels, Some(&only_l), 5, SearchStrategy::Auto).is_err());
    let whole = select_federation(&m, &labels, None, 8, SearchStrategy::Auto).unwrap();
    assert_eq!(whole.ids.len(), 8);
}

#[test]
fn binomial_values() {
    assert_eq!(binomial(5, 2), 10);
    assert_eq!(binomial(23, 11), 1_352_078);
    assert_eq!(binomial(3, 5), 0);
    assert_eq!(binomial(200, 100), u128::MAX);
}

proptest! {
    #[test]
    fn auto_matches_brute_force_on_small_pools(seed in 0u64..1000, n in 3usize..9, k in 1usize..9) {
        prop_assume!(k <= n);
        let (ids, series) = random_pool(n, seed);
        let (m, r) = matrix_and_oracle(&ids, &series);
        let labels = vec!["g".to_string(); n];
        let sel = select_federation(&m, &labels, None, k, SearchStrategy::Auto).unwrap();
        prop_assert!((sel.correlation_rate - brute_force(&r, k)).abs() < 1e-12);
    }
}
