use super::*;
use rand::Rng;

fn tiny(seed: u64) -> EncoderModel {
    let cfg = ModelConfig {
        max_len: 6,
        model_dim: 4,
        heads: 1,
        layers: 1,
        classes: 3,
        seed,
    };
    EncoderModel::new(cfg, Vocabulary::new(["a", "b", "c", "d"])).unwrap()
}

fn small(seed: u64) -> EncoderModel {
    let cfg = ModelConfig {
        max_len: 8,
        model_dim: 8,
        heads: 2,
        layers: 2,
        classes: 2,
        seed,
    };
    EncoderModel::new(cfg, Vocabulary::new(["a", "b", "c", "d", "e"])).unwrap()
}

fn loss(m: &EncoderModel, x: &[usize], target: usize) -> f64 {
    -m.forward(x).unwrap()[target].ln()
}

/// Central differences on every parameter element; returns the worst
/// relative error over elements with |g| > 1e-8. A step of 1e-4 keeps
/// cancellation error well below the tolerance for the smallest gradients.
fn gradient_check(m: &EncoderModel, x: &[usize], target: usize) -> (f64, usize) {
    let analytic = m.backward(x, target).unwrap();
    let h = 1e-4;
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut probe = m.clone();
    for (pi, g) in analytic.iter().enumerate() {
        for j in 0..g.data.len() {
            if g.data[j].abs() <= 1e-8 {
                continue;
            }
            let orig = probe.params()[pi].data[j];
            probe.params_mut()[pi].data[j] = orig + h;
            let up = loss(&probe, x, target);
            probe.params_mut()[pi].data[j] = orig - h;
            let down = loss(&probe, x, target);
            probe.params_mut()[pi].data[j] = orig;
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - g.data[j]).abs() / fd.abs().max(g.data[j].abs());
            worst = worst.max(rel);
            checked += 1;
        }
    }
    (worst, checked)
}

#[test]
fn encode_input_rules() {
    let v = Vocabulary::new(["connection", "refused"]);
    let c = v.get("connection").unwrap();
    let r = v.get("refused").unwrap();
    assert_eq!(encode_input(&["connection", "refused"], &v, 6), [LMT, c, r, PD, PD, PD]);
    assert_eq!(encode_input(&["connection", "timeout"], &v, 4), [LMT, c, UNK, PD]);
    let long: Vec<String> = (0..60).map(|i| if i % 2 == 0 { "connection".into() } else { "refused".into() }).collect();
    let enc = encode_input(&long, &v, 50);
    assert_eq!(enc.len(), 50);
    assert_eq!(enc[0], LMT);
    assert!(enc[1..].iter().all(|&i| i == c || i == r));
    assert_eq!(enc[49], c);
}

#[test]
fn vocabulary_reserved_slots() {
    let v = Vocabulary::new(["x", "[PD]", "y", "x"]);
    assert_eq!(v.len(), 5);
    assert_eq!(v.get("[LMT]"), Some(LMT));
    assert_eq!(v.get("[PD]"), Some(PD));
    assert_eq!(v.get("[UNK]"), Some(UNK));
    assert_eq!(Vocabulary::from_list(v.tokens().to_vec()).unwrap(), v);
    assert!(Vocabulary::from_list(vec!["x".into()]).is_err());
}

#[test]
fn config_validation() {
    let ok = ModelConfig::default();
    assert!(ok.validate().is_ok());
    assert!(ModelConfig { heads: 3, ..ok.clone() }.validate().is_err());
    assert!(ModelConfig { max_len: 1, ..ok.clone() }.validate().is_err());
    assert!(ModelConfig { classes: 4, ..ok }.validate().is_err());
}

#[test]
fn softmax_closed_form() {
    // Independent evaluation: e^2 / (e^2 + 2) and 1 / (e^2 + 2).
    let e2 = std::f64::consts::E * std::f64::consts::E;
    let top = e2 / (e2 + 2.0);
    let rest = 1.0 / (e2 + 2.0);
    let s = softmax(&[2.0, 0.0, 0.0]);
    assert!((s[0] - top).abs() < 1e-12);
    assert!((s[1] - rest).abs() < 1e-12 && (s[2] - rest).abs() < 1e-12);
    assert!((s[0] - 0.787).abs() < 5e-4 && (s[1] - 0.107).abs() < 5e-4);
}

#[test]
fn scores_sum_to_one_and_are_deterministic() {
    let m = small(3);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let len = rng.gen_range(0..8);
        let x: Vec<usize> = std::iter::once(LMT)
            .chain((1..8).map(|p| if p <= len { rng.gen_range(2..m.vocab.len()) } else { PD }))
            .collect();
        let s = m.forward(&x).unwrap();
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        assert!(s.iter().all(|&p| p > 0.0 && p < 1.0));
        assert_eq!(m.forward(&x).unwrap(), s);
    }
}

#[test]
fn seeded_initialization() {
    assert_eq!(small(9), small(9));
    assert_ne!(small(9).params(), small(10).params());
    for t in small(9).params() {
        assert!(t.data.iter().all(|&x| x as f32 as f64 == x));
    }
}

#[test]
fn finite_differences_tiny_config() {
    for seed in 0..8 {
        let m = tiny(seed);
        for (x, target) in [
            (vec![LMT, 3, 4, 5, PD, PD], 0),
            (vec![LMT, 6, 3, 3, 4, 5], 2),
            (vec![LMT, 2, PD, 4, PD, PD], 1),
        ] {
            let (worst, checked) = gradient_check(&m, &x, target);
            assert!(checked > 50, "only {checked} elements checked");
            assert!(worst <= 1e-3, "seed {seed}: relative error {worst}");
        }
    }
}

#[test]
fn finite_differences_multi_head() {
    let m = small(5);
    let (worst, _) = gradient_check(&m, &[LMT, 3, 4, 5, 6, 7, PD, PD], 1);
    assert!(worst <= 1e-3, "relative error {worst}");
}

#[test]
fn head_bias_gradient_identity() {
    let m = small(2);
    let x = [LMT, 3, 4, PD, PD, PD, PD, PD];
    let p = m.forward(&x).unwrap();
    let g = m.backward(&x, 1).unwrap();
    let hb = g.last().unwrap();
    for c in 0..2 {
        let want = p[c] - if c == 1 { 1.0 } else { 0.0 };
        assert!((hb.data[c] - want).abs() < 1e-12);
    }
}

#[test]
fn zero_head_gradient_rows() {
    let mut m = tiny(1);
    let h = m.params().len() - 2;
    m.params_mut()[h].fill(0.0);
    let x = [LMT, 3, 4, PD, PD, PD];
    let g = m.backward(&x, 0).unwrap();
    let rows: Vec<&[f64]> = (0..3).map(|c| g[h].row(c)).collect();
    // Uniform scores: non-target rows are each h/3, the target row is -2h/3.
    assert_eq!(rows[1], rows[2]);
    for k in 0..4 {
        assert!((rows[0][k] + 2.0 * rows[1][k]).abs() < 1e-12);
    }
}

#[test]
fn padding_is_masked_exactly() {
    let m = small(4);
    let x = [LMT, 3, 4, PD, PD, PD, PD, PD];
    let before = m.forward(&x).unwrap();
    let mut scrambled = m.clone();
    for k in 0..8 {
        scrambled.params_mut()[TOK].row_mut(PD)[k] = 100.0 * (k as f64 - 3.5);
        for p in 3..8 {
            scrambled.params_mut()[POS].row_mut(p)[k] = -50.0 + p as f64;
        }
    }
    assert_eq!(scrambled.forward(&x).unwrap(), before);
    let g = m.backward(&x, 0).unwrap();
    assert!(g[TOK].row(PD).iter().all(|&v| v == 0.0));
    assert!((3..8).all(|p| g[POS].row(p).iter().all(|&v| v == 0.0)));
}

#[test]
fn vocabulary_permutation_invariance() {
    let m = small(6);
    let names = ["a", "b", "c", "d", "e"];
    let perm = [4, 2, 0, 3, 1];
    let shuffled: Vec<&str> = perm.iter().map(|&i| names[i]).collect();
    let vocab2 = Vocabulary::new(&shuffled);
    let mut params = m.params().to_vec();
    for (new_i, name) in shuffled.iter().enumerate() {
        let old = m.vocab.get(name).unwrap();
        params[TOK].row_mut(3 + new_i).copy_from_slice(m.params()[TOK].row(old));
    }
    let m2 = EncoderModel::from_parts(m.config.clone(), vocab2, params).unwrap();
    for text in [vec!["a", "c"], vec!["e", "d", "b", "a"], vec![]] {
        let s1 = m.forward(&encode_input(&text, &m.vocab, 8)).unwrap();
        let s2 = m2.forward(&encode_input(&text, &m2.vocab, 8)).unwrap();
        assert_eq!(s1, s2);
    }
}

#[test]
fn non_finite_names_layer() {
    let mut m = small(1);
    m.params_mut()[2 + LAYER_PARAMS.len() + W1].data[0] = f64::NAN;
    let err = m.forward(&[LMT, 3, 4, 5, PD, PD, PD, PD]).unwrap_err();
    assert!(err.to_string().contains("encoder layer 1"), "{err}");
}

#[test]
fn checkpoint_round_trip() {
    let m = small(8);
    let extra = serde_json::json!({"task": "level_ie"});
    let bytes = write_checkpoint(&m, &extra);
    let (back, e) = read_checkpoint(&bytes).unwrap();
    assert_eq!(back, m);
    assert_eq!(e, extra);
    assert_eq!(write_checkpoint(&back, &e), bytes);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let x: Vec<usize> = (0..8).map(|p| if p == 0 { LMT } else { rng.gen_range(1..m.vocab.len()) }).collect();
        assert_eq!(m.forward(&x).unwrap(), back.forward(&x).unwrap());
    }
}

#[test]
fn checkpoint_corruption_detected() {
    let m = small(8);
    let bytes = write_checkpoint(&m, &serde_json::Value::Null);
    let mut bad = bytes.clone();
    bad[25] ^= 0x55;
    assert!(matches!(read_checkpoint(&bad), Err(Error::Checkpoint(_))));
    assert!(matches!(read_checkpoint(&bytes[..bytes.len() - 3]), Err(Error::Checkpoint(_))));
    let mut v2 = bytes.clone();
    v2[8] = 2;
    let err = read_checkpoint(&v2).unwrap_err();
    assert!(err.to_string().contains("version"), "{err}");
    assert!(read_checkpoint(b"not a checkpoint at all").is_err());
}

