use super::*;
use proptest::prelude::*;

/// AUC as the probability that a random positive outscores a random
/// negative, ties counting one half.
fn pairwise_auc(positive: &[bool], scores: &[f64]) -> Option<f64> {
    let mut wins = 0.0;
    let mut pairs = 0usize;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if positive[i] && !positive[j] {
                pairs += 1;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    (pairs > 0).then(|| wins / pairs as f64)
}

#[test]
fn binary_hand_case() {
    // TP=8, FP=2, FN=2, TN=8 with class 0 positive.
    let mut labels = vec![0; 10];
    labels.extend([1; 10]);
    let mut preds = vec![0; 8];
    preds.extend([1; 2]);
    preds.extend([0; 2]);
    preds.extend([1; 8]);
    let scores: Vec<Vec<f64>> = preds.iter().map(|&p| if p == 0 { vec![0.9, 0.1] } else { vec![0.1, 0.9] }).collect();
    let m = classification_metrics(&labels, &preds, &scores, 2).unwrap();
    assert!((m.per_class[0].precision - 0.8).abs() < 1e-12);
    assert!((m.per_class[0].recall - 0.8).abs() < 1e-12);
    assert!((m.per_class[0].f1 - 0.8).abs() < 1e-12);
    assert!((m.specificity.unwrap() - 0.8).abs() < 1e-12);
    assert!((m.accuracy - 0.8).abs() < 1e-12);
    assert!(m.warnings.is_empty());
}

#[test]
fn all_correct() {
    let labels = [0, 1, 2, 2, 1];
    let scores: Vec<Vec<f64>> = labels.iter().map(|&c| (0..3).map(|k| if k == c { 0.8 } else { 0.1 }).collect()).collect();
    let m = classification_metrics(&labels, &labels, &scores, 3).unwrap();
    assert_eq!((m.accuracy, m.f1, m.auc), (1.0, 1.0, 1.0));
    assert_eq!(m.specificity, None);
}

#[test]
fn uniform_scores_give_half_auc() {
    let labels = [0, 1, 2, 0, 1, 2, 2];
    let scores = vec![vec![1.0 / 3.0; 3]; labels.len()];
    let m = classification_metrics(&labels, &[0; 7], &scores, 3).unwrap();
    for c in &m.per_class {
        assert!((c.auc - 0.5).abs() < 1e-12);
    }
}

#[test]
fn zero_denominators_warn() {
    let m = classification_metrics(&[0, 0], &[0, 0], &[vec![0.6, 0.4], vec![0.7, 0.3]], 2).unwrap();
    assert_eq!(m.per_class[1].precision, 0.0);
    assert_eq!(m.specificity, Some(0.0));
    assert!(m.warnings.iter().any(|w| w.contains("specificity")));
    assert!(m.warnings.iter().any(|w| w.contains("auc")));
}

#[test]
fn length_mismatch_rejected() {
    assert!(classification_metrics(&[0, 1], &[0], &[vec![1.0, 0.0]], 2).is_err());
}

#[test]
fn error_at_k_cases() {
    assert_eq!(error_at_k(&[1, 2, 3, 4], 2).unwrap(), 0.5);
    assert_eq!(error_at_k(&[1; 5], 1).unwrap(), 0.0);
    let mut ranks = vec![1; 75];
    ranks.extend([2; 25]);
    assert_eq!(error_at_k(&ranks, 1).unwrap(), 0.25);
    assert!(error_at_k(&[], 1).is_err());
    assert!(error_at_k(&[1], 0).is_err());
}

#[test]
fn random_baseline_cases() {
    assert_eq!(random_baseline_error_at_k(&[1; 10], 1, 100, 0).unwrap(), 0.0);
    assert_eq!(random_baseline_error_at_k(&[3, 5, 2], 5, 100, 0).unwrap(), 0.0);
    let e = random_baseline_error_at_k(&[2], 1, 10_000, 7).unwrap();
    assert!((e - 0.5).abs() < 0.02, "{e}");
    assert_eq!(
        random_baseline_error_at_k(&[4, 6], 2, 500, 3).unwrap(),
        random_baseline_error_at_k(&[4, 6], 2, 500, 3).unwrap()
    );
    assert!(random_baseline_error_at_k(&[2], 1, 0, 0).is_err());
}

proptest! {
    #[test]
    fn trapezoid_matches_pairwise(pairs in prop::collection::vec((any::<bool>(), 0u8..5), 2..40)) {
        let positive: Vec<bool> = pairs.iter().map(|p| p.0).collect();
        let scores: Vec<f64> = pairs.iter().map(|p| p.1 as f64 / 4.0).collect();
        match (roc_auc(&positive, &scores), pairwise_auc(&positive, &scores)) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
            (a, b) => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn auc_invariant_under_monotone_map(pairs in prop::collection::vec((any::<bool>(), -5.0f64..5.0), 2..30)) {
        let positive: Vec<bool> = pairs.iter().map(|p| p.0).collect();
        let scores: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let mapped: Vec<f64> = scores.iter().map(|s| s.exp() * 3.0 + 1.0).collect();
        prop_assert_eq!(roc_auc(&positive, &scores), roc_auc(&positive, &mapped));
    }

    #[test]
    fn error_at_k_non_increasing(ranks in prop::collection::vec(1usize..10, 1..50)) {
        let max = *ranks.iter().max().unwrap();
        let mut prev = 1.0;
        for k in 1..=max + 1 {
            let e = error_at_k(&ranks, k).unwrap();
            prop_assert!(e <= prev && (0.0..=1.0).contains(&e));
            prev = e;
        }
        prop_assert_eq!(error_at_k(&ranks, max).unwrap(), 0.0);
    }

    #[test]
    fn macro_f1_between_class_extremes(pairs in prop::collection::vec((0usize..3, 0usize..3), 1..30)) {
        let labels: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let preds: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let scores = vec![vec![1.0 / 3.0; 3]; labels.len()];
        let m = classification_metrics(&labels, &preds, &scores, 3).unwrap();
        let lo = m.per_class.iter().map(|c| c.f1).fold(f64::INFINITY, f64::min);
        let hi = m.per_class.iter().map(|c| c.f1).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo - 1e-12 <= m.f1 && m.f1 <= hi + 1e-12);
    }
}
