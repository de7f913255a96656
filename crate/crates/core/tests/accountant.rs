use fedload::accountant::{
    compose_and_convert, default_orders, epsilon_for, rdp_gaussian, rdp_subsampled_gaussian,
    write_breakdown_csv, MechanismEvent, PrivacyLedger,
};
use proptest::prelude::*;

/// `A_α = E_{x∼N(0,z²)} [((1−q) + q·exp((2x−1)/(2z²)))^α]` by composite
/// Simpson quadrature, then `ln A_α / (α−1)`.
fn rdp_by_quadrature(alpha: f64, q: f64, z: f64) -> f64 {
    let (lo, hi) = (-30.0 * z, 30.0 * z + 30.0);
    let n = 400_000;
    let h = (hi - lo) / n as f64;
    let f = |x: f64| {
        let density = (-x * x / (2.0 * z * z)).exp() / (z * (2.0 * std::f64::consts::PI).sqrt());
        let ratio = (1.0 - q) + q * ((2.0 * x - 1.0) / (2.0 * z * z)).exp();
        density * ratio.powf(alpha)
    };
    let mut sum = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(lo + i as f64 * h);
    }
    (sum * h / 3.0).ln() / (alpha - 1.0)
}

#[test]
fn subsampled_rdp_matches_quadrature() {
    for (alpha, q, z) in [(8.0, 0.1, 0.9), (2.0, 0.1, 0.9), (16.0, 0.05, 1.5), (5.0, 0.3, 2.0)] {
        let closed = rdp_subsampled_gaussian(alpha, q, z).unwrap();
        let numeric = rdp_by_quadrature(alpha, q, z);
        assert!(
            ((closed - numeric) / numeric).abs() < 1e-8,
            "α={alpha} q={q} z={z}: {closed} vs {numeric}"
        );
    }
}

#[test]
fn gaussian_examples() {
    assert_eq!(rdp_gaussian(2.0, 1.0).unwrap(), 1.0);
    assert_eq!(rdp_gaussian(2.0, 2.0).unwrap(), 0.25);
    assert!(rdp_gaussian(1.0, 1.0).is_err());
    assert!(rdp_gaussian(2.0, 0.0).is_err());
}

#[test]
fn full_sampling_composes_like_plain_gaussian() {
    let mut ledger = PrivacyLedger::new();
    ledger.push_repeated(100, 1.0, 0.7).unwrap();
    for (alpha, total) in ledger.orders().iter().zip(ledger.rdp_totals()) {
        let plain: f64 = (0..100).map(|_| rdp_gaussian(*alpha, 0.7).unwrap()).sum();
        assert_eq!(*total, plain);
    }
}

#[test]
fn single_order_conversion_formula() {
    let mut ledger = PrivacyLedger::with_orders(vec![2.0]).unwrap();
    ledger.push(MechanismEvent { round: 0, q: 0.2, noise_multiplier: 1.1 }).unwrap();
    let (eps, alpha) = compose_and_convert(&ledger, 1e-5).unwrap();
    assert_eq!(alpha, 2.0);
    let expected = rdp_subsampled_gaussian(2.0, 0.2, 1.1).unwrap() + (1e5f64).ln();
    assert!((eps - expected).abs() < 1e-12);
}

#[test]
fn epsilon_decreases_over_the_published_noise_grid() {
    let eps: Vec<f64> = (1..=9)
        .map(|i| epsilon_for(100, 0.1, f64::from(i) / 10.0, 4e-3).unwrap().0)
        .collect();
    assert!(eps.windows(2).all(|w| w[1] < w[0]), "{eps:?}");
    assert!(eps[0] > 100.0 && eps[8] < 10.0);
}

#[test]
fn ledger_errors() {
    assert!(compose_and_convert(&PrivacyLedger::new(), 1e-5).is_err());
    let mut ledger = PrivacyLedger::new();
    ledger.push(MechanismEvent { round: 3, q: 0.1, noise_multiplier: 1.0 }).unwrap();
    assert!(ledger.push(MechanismEvent { round: 2, q: 0.1, noise_multiplier: 1.0 }).is_err());
    assert!(compose_and_convert(&ledger, 0.0).is_err());
    assert!(PrivacyLedger::with_orders(vec![0.5]).is_err());
}

#[test]
fn breakdown_csv_lists_every_order() {
    let mut ledger = PrivacyLedger::new();
    ledger.push_repeated(10, 0.1, 1.0).unwrap();
    let mut buf = Vec::new();
    write_breakdown_csv(&ledger.breakdown(1e-5).unwrap(), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("alpha,rdp,epsilon\n2,"));
    assert_eq!(text.lines().count(), default_orders().len() + 1);
}

proptest! {
    #[test]
    fn epsilon_monotone_in_rounds_q_and_z(
        rounds in 1usize..200,
        q in 0.01f64..0.9,
        z in 0.5f64..3.0,
    ) {
        let base = epsilon_for(rounds, q, z, 1e-5).unwrap().0;
        prop_assert!(epsilon_for(rounds + 10, q, z, 1e-5).unwrap().0 >= base);
        prop_assert!(epsilon_for(rounds, (q * 1.1).min(1.0), z, 1e-5).unwrap().0 >= base);
        prop_assert!(epsilon_for(rounds, q, z * 1.1, 1e-5).unwrap().0 < base);
    }

    #[test]
    fn rdp_increases_with_order(q in 0.01f64..1.0, z in 0.3f64..4.0, a in 2u32..40) {
        let lo = rdp_subsampled_gaussian(f64::from(a), q, z).unwrap();
        let hi = rdp_subsampled_gaussian(f64::from(a + 1), q, z).unwrap();
        prop_assert!(hi >= lo);
    }
}
