use std::collections::{BTreeMap, BTreeSet};

use fedload::secagg::{
    dequantize, quantize, reconstruct, run_secagg_round, secure_mean, share,
    share_with_coefficients, PrimeField, QuantizationSpec, SecAggConfig, SecAggSession, Share,
    MERSENNE_61,
};
use fedload::Error;
use proptest::prelude::*;
use rand::Rng;

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
        .collect()
}

#[test]
fn fixed_sharing_example() {
    let f = PrimeField::new(257).unwrap();
    let shares = share_with_coefficients(&f, 42, &[7], 3).unwrap();
    assert_eq!(
        shares,
        vec![Share { x: 1, y: 49 }, Share { x: 2, y: 56 }, Share { x: 3, y: 63 }]
    );
    assert_eq!(reconstruct(&f, &shares[1..], 2).unwrap(), 42);
}

#[test]
fn any_t_shares_reconstruct_and_fewer_do_not() {
    let f = PrimeField::default();
    let mut rng = fedload::seed::rng(1);
    let (n, t) = (6, 4);
    for _ in 0..5 {
        let secret = rng.random_range(0..MERSENNE_61);
        let shares = share(&f, secret, n, t, &mut rng).unwrap();
        for k in t..=n {
            for idx in subsets(n, k) {
                let pick: Vec<Share> = idx.iter().map(|&i| shares[i]).collect();
                assert_eq!(reconstruct(&f, &pick, t).unwrap(), secret);
            }
        }
        for idx in subsets(n, t - 1) {
            let pick: Vec<Share> = idx.iter().map(|&i| shares[i]).collect();
            assert!(matches!(reconstruct(&f, &pick, t), Err(Error::Threshold { .. })));
        }
    }
    let dup = [Share { x: 1, y: 2 }, Share { x: 1, y: 2 }];
    assert!(matches!(reconstruct(&f, &dup, 2), Err(Error::DuplicateShare(1))));
}

#[test]
fn fewer_than_t_shares_reveal_nothing_in_a_small_field() {
    // With t = 3 over GF(257), every pair of share values at x = 1, 2 is
    // produced by exactly one polynomial for every secret.
    let f = PrimeField::new(257).unwrap();
    let p = f.modulus() as usize;
    for secret in [0u64, 1, 42, 128, 256] {
        let mut hits = vec![0u8; p * p];
        for c1 in 0..p as u64 {
            for c2 in 0..p as u64 {
                let s = share_with_coefficients(&f, secret, &[c1, c2], 3).unwrap();
                hits[s[0].y as usize * p + s[1].y as usize] += 1;
            }
        }
        assert!(hits.iter().all(|&h| h == 1), "secret {secret}");
    }
    // One share under t = 2: uniform over the field for every secret.
    for secret in 0..p as u64 {
        let mut seen = BTreeSet::new();
        for c in 0..p as u64 {
            seen.insert(share_with_coefficients(&f, secret, &[c], 2).unwrap()[0].y);
        }
        assert_eq!(seen.len(), p);
    }
}

#[test]
fn protocol_sum_survives_dropouts_up_to_the_threshold() {
    let f = PrimeField::default();
    let ids: Vec<u64> = (1..=7).collect();
    let t = 5;
    let mut rng = fedload::seed::rng(9);
    let inputs: BTreeMap<u64, Vec<u64>> = ids
        .iter()
        .map(|&id| (id, (0..4).map(|_| rng.random_range(0..1u64 << 40)).collect()))
        .collect();
    for dropped in [vec![], vec![3], vec![1, 7]] {
        let dropouts: BTreeSet<u64> = dropped.iter().copied().collect();
        let mut session = SecAggSession::new(&ids, t, f, 17).unwrap();
        let sum = run_secagg_round(&mut session, &inputs, &dropouts).unwrap();
        let mut expected = vec![0u64; 4];
        for (id, v) in &inputs {
            if !dropouts.contains(id) {
                f.add_assign(&mut expected, v);
            }
        }
        assert_eq!(sum, expected, "dropouts {dropped:?}");
        let mut log = Vec::new();
        session.write_transcript(&mut log).unwrap();
        assert!(String::from_utf8(log).unwrap().lines().count() >= ids.len());
    }
    let mut session = SecAggSession::new(&ids, t, f, 17).unwrap();
    let err = run_secagg_round(&mut session, &inputs, &BTreeSet::from([1, 2, 3])).unwrap_err();
    assert!(matches!(err, Error::Abort(_)));
}

#[test]
fn masked_inputs_differ_from_plain_inputs() {
    let f = PrimeField::default();
    let mut session = SecAggSession::new(&[1, 2, 3], 2, f, 4).unwrap();
    let plain = vec![5u64; 32];
    let masked = session.mask_input(2, &plain).unwrap();
    assert_eq!(masked.len(), 32);
    assert!(masked.iter().zip(&plain).all(|(m, p)| m != p));
}

#[test]
fn secure_mean_matches_plain_mean_within_quantization_error() {
    let mut rng = fedload::seed::rng(3);
    let n = 6;
    let updates: BTreeMap<u64, Vec<f64>> = (0..n as u64)
        .map(|id| (id, (0..50).map(|_| rng.random_range(-1.0..1.0)).collect()))
        .collect();
    let dropouts = BTreeSet::from([4]);
    let out = secure_mean(&updates, &dropouts, &SecAggConfig::default(), 1.0, 21).unwrap();
    assert_eq!(out.survivors, vec![0, 1, 2, 3, 5]);
    assert_eq!(out.dropouts, vec![4]);
    let tol = n as f64 * 2f64.powi(-15);
    for (j, mean) in out.mean.iter().enumerate() {
        let plain: f64 = out.survivors.iter().map(|id| updates[id][j]).sum::<f64>() / 5.0;
        assert!((mean - plain).abs() <= tol);
    }
    assert_eq!(out.mean.len(), 50);
}

#[test]
fn quantization_rejects_out_of_range_and_overflowing_specs() {
    let f = PrimeField::default();
    let spec = QuantizationSpec::new(1.0, 16, 10);
    assert!(quantize(&[1.5], &spec, &f).is_err());
    assert!(quantize(&[f64::NAN], &spec, &f).is_err());
    let small = PrimeField::new(257).unwrap();
    assert!(quantize(&[0.1], &spec, &small).is_err());
}

proptest! {
    #[test]
    fn quantization_round_trip_error_is_half_a_step(
        xs in proptest::collection::vec(-2.0f64..2.0, 1..30),
        bits in 8u32..24,
    ) {
        let f = PrimeField::default();
        let spec = QuantizationSpec::new(2.0, bits, 100);
        let back = dequantize(&quantize(&xs, &spec, &f).unwrap(), &spec, 1);
        for (x, y) in xs.iter().zip(&back) {
            prop_assert!((x - y).abs() <= 0.5 * 2f64.powi(-(bits as i32)) + 1e-15);
        }
    }

    #[test]
    fn summed_codes_decode_to_the_sum(
        rows in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 5), 1..8),
    ) {
        let f = PrimeField::default();
        let spec = QuantizationSpec::new(1.0, 16, 8);
        let mut acc = vec![0u64; 5];
        for r in &rows {
            f.add_assign(&mut acc, &quantize(r, &spec, &f).unwrap());
        }
        let sum = dequantize(&acc, &spec, rows.len());
        for (j, s) in sum.iter().enumerate() {
            let plain: f64 = rows.iter().map(|r| r[j]).sum();
            prop_assert!((s - plain).abs() <= rows.len() as f64 * 2f64.powi(-17) + 1e-12);
        }
    }

    #[test]
    fn sharing_round_trips_for_random_secrets(secret in 0u64..MERSENNE_61, t in 1usize..6, extra in 0usize..4) {
        let f = PrimeField::default();
        let mut rng = fedload::seed::rng(secret);
        let shares = share(&f, secret, t + extra, t, &mut rng).unwrap();
        prop_assert_eq!(reconstruct(&f, &shares[extra..], t).unwrap(), secret);
    }
}
