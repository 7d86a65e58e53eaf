use super::*;
use proptest::prelude::*;
use std::collections::HashMap;

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn fixture() -> TokenizedCorpus {
    use Level::*;
    vec![
        (toks("connection refused host"), Error),
        (toks("connection established host"), Info),
        (toks("disk full"), Warning),
        (toks("connection refused"), Error),
        (toks("disk"), Info),
    ]
}

#[test]
fn window_definition() {
    let c = ngram_counts(&[(toks("a b c"), Level::Warning)], 2).unwrap();
    assert_eq!(c.counts.len(), 2);
    assert_eq!(c.counts[&toks("a b")], [0, 1, 0]);
    assert_eq!(c.counts[&toks("b c")], [0, 1, 0]);
    assert!(ngram_counts(&[], 3).unwrap().counts.is_empty());
    assert!(ngram_counts(&[], 6).is_err());
}

#[test]
fn hand_counted_fixture() {
    let uni = ngram_counts(&fixture(), 1).unwrap();
    let want: HashMap<&str, [usize; 3]> = [
        ("connection", [1, 0, 2]),
        ("refused", [0, 0, 2]),
        ("host", [1, 0, 1]),
        ("established", [1, 0, 0]),
        ("disk", [1, 1, 0]),
        ("full", [0, 1, 0]),
    ]
    .into();
    assert_eq!(uni.counts.len(), want.len());
    for (k, v) in want {
        assert_eq!(uni.counts[&toks(k)], v, "{k}");
    }
    let bi = ngram_counts(&fixture(), 2).unwrap();
    assert_eq!(bi.counts[&toks("connection refused")], [0, 0, 2]);
    assert_eq!(bi.counts.len(), 5);
    assert_eq!(ngram_counts(&fixture(), 3).unwrap().counts.len(), 2);
}

#[test]
fn entropy_values() {
    assert_eq!(normalized_entropy([5, 0, 0]).unwrap(), 0.0);
    assert!((normalized_entropy([1, 1, 1]).unwrap() - 1.0).abs() < 1e-15);
    // -(2/3 ln 2/3 + 1/3 ln 1/3) / ln 3 evaluated separately.
    let p: f64 = 2.0 / 3.0;
    let q: f64 = 1.0 / 3.0;
    let want = -(p * p.ln() + q * q.ln()) / 3f64.ln();
    let got = normalized_entropy([2, 1, 0]).unwrap();
    assert!((got - want).abs() < 1e-15);
    assert!((got - 0.5794).abs() < 5e-5);
    assert!(normalized_entropy([0, 0, 0]).is_err());
}

#[test]
fn quantiles_interpolate() {
    let v = [0.0, 1.0, 2.0, 10.0];
    assert_eq!(quantile(&v, 0.0), 0.0);
    assert_eq!(quantile(&v, 0.5), 1.5);
    assert_eq!(quantile(&v, 0.25), 0.75);
    assert_eq!(quantile(&v, 1.0), 10.0);
    let s = Summary::of(&[3.0]).unwrap();
    assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (3.0, 3.0, 3.0, 3.0, 3.0));
}

#[test]
fn single_level_corpus_has_zero_entropy() {
    let corpus = vec![(toks("a b c"), Level::Info), (toks("b c d"), Level::Info)];
    let d = entropy_distribution(&corpus, &[1, 2, 3, 4, 5]).unwrap();
    assert_eq!(d.pooled.max, 0.0);
    assert_eq!(d.per_n.len(), 3);
    assert!(entropy_distribution(&[], &[1]).is_err());
}

#[test]
fn overlap_cases() {
    use Level::*;
    let disjoint = vec![(toks("a b"), Info), (toks("c d"), Error)];
    assert_eq!(level_pair_overlap(&disjoint, Info, Error, &[1, 2]).unwrap(), 0.0);
    let same = vec![(toks("a b"), Info), (toks("a b"), Error)];
    assert_eq!(level_pair_overlap(&same, Info, Error, &[1, 2]).unwrap(), 1.0);
    // {connection, host} shared out of {connection, refused, host, established, disk}.
    let f = fixture();
    assert_eq!(level_pair_overlap(&f, Error, Info, &[1]).unwrap(), 0.4);
    assert!(level_pair_overlap(&f, Info, Info, &[1]).is_err());
    assert!(level_pair_overlap(&[], Info, Error, &[1]).is_err());
}

#[test]
fn contingency_hand_tally() {
    let names: Vec<String> = ["info", "warning", "error"].map(String::from).to_vec();
    let labels = [0, 0, 0, 0, 1, 1, 1, 2, 2, 2];
    let preds = [0, 0, 1, 2, 1, 2, 2, 2, 2, 0];
    let t = contingency_from(&labels, &preds, &names).unwrap();
    assert_eq!(t.counts, vec![vec![2, 1, 1], vec![0, 1, 2], vec![1, 0, 2]]);
    assert_eq!(t.row_percentages[0], vec![None, Some(25.0), Some(25.0)]);
    assert_eq!(t.row_percentages[2][0], Some(100.0 / 3.0));
    let perfect = contingency_from(&labels, &labels, &names).unwrap();
    assert!(perfect.row_percentages.iter().flatten().flatten().all(|&p| p == 0.0));
}

proptest! {
    #[test]
    fn entropy_bounds(c in prop::array::uniform3(0usize..20)) {
        prop_assume!(c.iter().sum::<usize>() > 0);
        let h = normalized_entropy(c).unwrap();
        prop_assert!((0.0..=1.0).contains(&h));
        let positive = c.iter().filter(|&&x| x > 0).count();
        prop_assert_eq!(h == 0.0, positive == 1);
        if c[0] == c[1] && c[1] == c[2] {
            prop_assert!((h - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn count_totals(lens in prop::collection::vec((0usize..8, 0usize..3), 0..20), n in 1usize..=5) {
        let corpus: TokenizedCorpus = lens
            .iter()
            .enumerate()
            .map(|(i, &(len, l))| ((0..len).map(|j| format!("t{}", (i + j) % 4)).collect(), Level::ALL[l]))
            .collect();
        let counts = ngram_counts(&corpus, n).unwrap();
        for level in Level::ALL {
            let got: usize = counts.counts.values().map(|c| c[level.index()]).sum();
            let want: usize = corpus.iter().filter(|(_, l)| *l == level).map(|(t, _)| (t.len() + 1).saturating_sub(n)).sum();
            prop_assert_eq!(got, want);
        }
    }

    #[test]
    fn overlap_symmetric(lens in prop::collection::vec((1usize..6, 0usize..3, 0usize..5), 1..20)) {
        let corpus: TokenizedCorpus = lens
            .iter()
            .map(|&(len, l, s)| ((0..len).map(|j| format!("w{}", (s + j) % 5)).collect(), Level::ALL[l]))
            .collect();
        for (a, b) in [(Level::Info, Level::Error), (Level::Warning, Level::Info)] {
            let ab = level_pair_overlap(&corpus, a, b, &[1, 2]);
            let ba = level_pair_overlap(&corpus, b, a, &[1, 2]);
            match (ab, ba) {
                (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false),
            }
        }
    }
}
