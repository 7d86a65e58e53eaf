use super::*;
use crate::encoder::{encode_input, ModelConfig, Vocabulary};

fn model(seed: u64) -> EncoderModel {
    let cfg = ModelConfig { max_len: 10, model_dim: 8, heads: 2, layers: 2, classes: 3, seed };
    EncoderModel::new(cfg, Vocabulary::new(["a", "b", "c", "d", "e", "f"])).unwrap()
}

fn sum(v: &[f64]) -> f64 {
    v.iter().sum()
}

#[test]
fn intensity_and_sign() {
    assert_eq!(intensity(&[3.0, 4.0]), 25.0);
    assert_eq!(intensity(&[0.0; 4]), 0.0);
    assert_eq!(sign(&[0.0; 4]), Sign::Positive);
    assert_eq!(sign(&[1.0, -2.0, 0.5]), Sign::Negative);
    assert_eq!(sign(&[2.0, -2.0]), Sign::Positive);
    assert_eq!(sign(&[-2.0, 2.0]), Sign::Negative);
}

#[test]
fn single_player_gets_the_whole_difference() {
    let m = model(1);
    let x = encode_input(&["c"], &m.vocab, 10);
    let a = shapley_values(&m, &x, 2, Mode::Exact, 1, 0).unwrap();
    assert_eq!(a.positions, [1]);
    assert!((sum(&a.values[0]) - (a.full - a.baseline)).abs() < 1e-12);
    let e = importance_scores(&a, &["c".into()], "error").unwrap();
    assert_eq!(e.tokens[0].rank, 1);
}

#[test]
fn efficiency_on_random_models() {
    for seed in 0..5 {
        let m = model(seed);
        let toks = ["a", "b", "c", "d", "e", "f", "a", "zzz"];
        let x = encode_input(&toks[..3 + seed as usize], &m.vocab, 10);
        for class in 0..3 {
            let a = shapley_values(&m, &x, class, Mode::Exact, 1, 0).unwrap();
            let total: f64 = a.values.iter().map(|v| sum(v)).sum();
            assert!((total - (a.full - a.baseline)).abs() < 1e-9);
            for (v, t) in a.values.iter().zip(&a.totals) {
                assert!((sum(v) - t).abs() < 1e-12);
                assert!(v.iter().all(|x| x * t >= 0.0));
            }
        }
    }
}

#[test]
fn constructed_game_axioms() {
    // v = 2[a] + 2[b] + 3[a][c] with player d null; a and b are not
    // symmetric because of the interaction, but swapping b <-> d changes
    // nothing for d.
    let v = |m: &[bool]| -> Result<f64> {
        let f = |i: usize| if m[i] { 1.0 } else { 0.0 };
        Ok(2.0 * f(0) + 2.0 * f(1) + 3.0 * f(0) * f(2))
    };
    let phi = exact_shapley(4, v).unwrap();
    assert!((phi[0] - 3.5).abs() < 1e-12);
    assert!((phi[1] - 2.0).abs() < 1e-12);
    assert!((phi[2] - 1.5).abs() < 1e-12);
    assert_eq!(phi[3], 0.0);
    let sym = |m: &[bool]| -> Result<f64> { Ok(((m[0] as u8 + m[1] as u8) as f64).powi(2) + m[2] as u8 as f64) };
    let phi = exact_shapley(3, sym).unwrap();
    assert!((phi[0] - phi[1]).abs() < 1e-12);
    assert!((phi.iter().sum::<f64>() - 5.0).abs() < 1e-12);
}

#[test]
fn sampled_tracks_exact() {
    let m = model(3);
    let x = encode_input(&["a", "b", "c", "d", "e"], &m.vocab, 10);
    let exact = shapley_values(&m, &x, 0, Mode::Exact, 1, 0).unwrap();
    let sampled = shapley_values(&m, &x, 0, Mode::Sampled, 512, 9).unwrap();
    for (e, s) in exact.totals.iter().zip(&sampled.totals) {
        assert!((e - s).abs() < 0.05, "{e} vs {s}");
    }
    // Every permutation telescopes, so sampled values are efficient too.
    assert!((sum(&sampled.totals) - (sampled.full - sampled.baseline)).abs() < 1e-9);
    assert_eq!(sampled, shapley_values(&m, &x, 0, Mode::Sampled, 512, 9).unwrap());
}

#[test]
fn limits() {
    let m = model(0);
    let cfg = ModelConfig { max_len: 16, ..m.config.clone() };
    let big = EncoderModel::new(cfg, m.vocab.clone()).unwrap();
    let x = encode_input(&["a"; 13], &big.vocab, 16);
    assert!(matches!(
        shapley_values(&big, &x, 0, Mode::Exact, 1, 0),
        Err(Error::TooManyPlayers { max: 12, got: 13 })
    ));
    assert!(shapley_values(&big, &x, 0, Mode::Sampled, 0, 0).is_err());
    assert!(shapley_values(&big, &x, 0, Mode::Sampled, 4, 0).is_ok());
}

#[test]
fn ordering_is_a_permutation() {
    let m = model(4);
    let toks: Vec<String> = ["b", "d", "a", "f"].map(String::from).to_vec();
    let x = encode_input(&toks, &m.vocab, 10);
    let a = shapley_values(&m, &x, 1, Mode::Exact, 1, 0).unwrap();
    let e = importance_scores(&a, &toks, "warning").unwrap();
    let mut names: Vec<&str> = e.tokens.iter().map(|t| t.token.as_str()).collect();
    names.sort_unstable();
    assert_eq!(names, ["a", "b", "d", "f"]);
    assert!(e.tokens.windows(2).all(|w| w[0].intensity >= w[1].intensity));
    assert_eq!(e.tokens.iter().map(|t| t.rank).collect::<Vec<_>>(), [1, 2, 3, 4]);
    let json = serde_json::to_value(&e).unwrap();
    assert_eq!(json["mode"], "exact");
    assert!(json["tokens"][0]["sign"] == "+" || json["tokens"][0]["sign"] == "-");
    assert!(importance_scores(&a, &toks[..2], "x").is_err());
}
