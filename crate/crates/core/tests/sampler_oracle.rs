use droplet::contour::extract_contours;
use droplet::enum_oracle::{contour_count_pmf, enumerate_distribution};
use droplet::lattice::Boundary;
use droplet::sampler::{CanonicalChain, ChainParams};
use droplet::stats::chi_square_test;

#[test]
fn canonical_contour_count_matches_enumeration() {
    let law = enumerate_distribution(4, 0.6, Boundary::Plus).unwrap();
    let exact = contour_count_pmf(&law, 8).unwrap();
    let max_count = *exact.keys().last().unwrap();
    let probs: Vec<f64> = (0..=max_count).map(|k| exact.get(&k).copied().unwrap_or(0.0)).collect();
    let params = ChainParams { beta: 0.6, sweeps: 200_000, thermalization: 1000, sample_stride: 10, seed: 31, target_m: Some(8) };
    let mut observed = vec![0u64; probs.len()];
    for g in CanonicalChain::new(4, &params, 0).unwrap() {
        let n = extract_contours(&g).unwrap().len();
        assert!(n <= max_count);
        observed[n] += 1;
    }
    let test = chi_square_test(&observed, &probs, 5.0);
    assert!(test.p_value > 0.001, "chi2 = {} on {} dof", test.statistic, test.dof);
}

#[test]
fn chains_are_reproducible_and_independent() {
    let params = ChainParams { beta: 0.7, sweeps: 50, thermalization: 10, sample_stride: 5, seed: 3, target_m: Some(100) };
    let a: Vec<_> = CanonicalChain::new(12, &params, 1).unwrap().collect();
    let b: Vec<_> = CanonicalChain::new(12, &params, 1).unwrap().collect();
    let c: Vec<_> = CanonicalChain::new(12, &params, 2).unwrap().collect();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.iter().all(|g| g.total_magnetization() == 100));
}
