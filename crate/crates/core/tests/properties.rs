use cms_bnp::fit::{wasserstein1, SummaryVector};
use cms_bnp::hashing::{draw_family, HashFamily};
use cms_bnp::models::{dm_log_likelihood, PypParams};
use cms_bnp::posterior::*;
use cms_bnp::sketch::{cms_estimate, HashedRow, SketchMatrix};
use cms_bnp::specialfn::{log_integral, tanh_sinh_rule, Domain};
use proptest::prelude::*;

fn summary(v: &[u32]) -> SummaryVector {
    SummaryVector::new(v.iter().map(|&x| x as f64).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn w1_is_a_metric(x in prop::collection::vec(0u32..1000, 1..40), seed in any::<u64>()) {
        let n = x.len();
        let y: Vec<u32> = (0..n).map(|i| (cms_bnp::hashing::splitmix64(seed ^ i as u64) % 1000) as u32).collect();
        let z: Vec<u32> = (0..n).map(|i| (cms_bnp::hashing::splitmix64(!seed ^ i as u64) % 1000) as u32).collect();
        let (sx, sy, sz) = (summary(&x), summary(&y), summary(&z));
        let dxy = wasserstein1(&sx, &sy).unwrap();
        prop_assert_eq!(dxy, wasserstein1(&sy, &sx).unwrap());
        prop_assert_eq!(wasserstein1(&sx, &sx).unwrap(), 0.0);
        prop_assert!(dxy <= wasserstein1(&sx, &sz).unwrap() + wasserstein1(&sz, &sy).unwrap() + 1e-9);
        let mut rev = x.clone();
        rev.reverse();
        prop_assert_eq!(wasserstein1(&summary(&rev), &sy).unwrap(), dxy);
        if dxy == 0.0 {
            let (mut a, mut b) = (x.clone(), y.clone());
            a.sort_unstable();
            b.sort_unstable();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn sketch_rows_sum_to_m_and_cms_overestimates(tokens in prop::collection::vec(0u64..200, 1..400), seed in any::<u64>()) {
        let fam = draw_family(3, 11, seed).unwrap();
        let mut sk = SketchMatrix::new(fam.clone());
        sk.extend(tokens.iter().copied());
        for n in 0..3 {
            prop_assert_eq!(sk.row(n).iter().sum::<u64>(), tokens.len() as u64);
        }
        for t in 0..200u64 {
            let f = tokens.iter().filter(|&&x| x == t).count() as u64;
            prop_assert!(cms_estimate(&sk.hashed_row(t)) >= f);
        }
        let back = SketchMatrix::from_snapshot(&sk.to_snapshot().unwrap()).unwrap();
        prop_assert_eq!(back.counts(), sk.counts());
        prop_assert_eq!(HashFamily::from_text(&fam.to_text()).unwrap(), fam);
    }

    #[test]
    fn dm_likelihood_ignores_bucket_order(row in prop::collection::vec(0u64..50, 2..12), theta in 0.01f64..100.0, rot in 0usize..12) {
        let j = row.len();
        let mut other = row.clone();
        other.rotate_left(rot % j);
        let a = dm_log_likelihood(&row, j, theta).unwrap();
        let b = dm_log_likelihood(&other, j, theta).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn dp_posteriors_normalize_and_respect_support(
        row in prop::collection::vec(0u64..300, 1..5), theta in 0.01f64..500.0, j in 1usize..400,
    ) {
        let row = HashedRow::new(row);
        let p = dp_posterior_multi(theta, j, &row).unwrap();
        prop_assert!((p.total() - 1.0).abs() < 1e-8);
        prop_assert_eq!(p.support_max() as u64, row.min());
        prop_assert!(p.mean() <= row.min() as f64 + 1e-9);
    }

    #[test]
    fn exact_pyp_posteriors_normalize(
        alpha in 0.01f64..0.95, theta in 0.05f64..50.0, j in 2usize..30, m in 1u64..60, frac in 0.0f64..=1.0,
    ) {
        let cx = PypPosteriorContext::new(PypParams::new(alpha, theta).unwrap(), j, m).unwrap();
        let c = (frac * m as f64).round() as u64;
        let p = pyp_posterior_exact(&cx, c).unwrap();
        prop_assert!((p.total() - 1.0).abs() < 1e-8);
        prop_assert!(p.mean() <= c as f64 + 1e-9);
    }

    #[test]
    fn range_joint_is_symmetric(c1 in 0u64..30, c2 in 0u64..30, theta in 0.1f64..20.0, j in 3usize..20) {
        let m = 80;
        let a = dp_range2_single(theta, j, m, c1, c2).unwrap();
        let b = dp_range2_single(theta, j, m, c2, c1).unwrap();
        prop_assert!((a.total() - 1.0).abs() < 1e-8);
        for l1 in 0..=c1 as usize {
            for l2 in 0..=c2 as usize {
                prop_assert!((a.prob(l1, l2) - b.prob(l2, l1)).abs() < 1e-12);
            }
        }
        let s = range_sum_posterior(&a);
        let lin = a.marginal_first().mean() + a.marginal_second().mean();
        prop_assert!((s.mean() - lin).abs() < 1e-9);
    }

    #[test]
    fn log_integral_is_shift_invariant(shift in -700.0f64..700.0) {
        let rule = tanh_sinh_rule(8);
        let base = log_integral(|y| -y * y, &rule, Domain::RealLine).ln();
        let moved = log_integral(|y| -y * y + shift, &rule, Domain::RealLine).ln();
        prop_assert!((moved - shift - base).abs() < 1e-12);
    }
}
