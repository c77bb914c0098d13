use divbench_core::dat::{dat_score, validate_response, Condition, DatResponse, SCORED_PAIRS};
use divbench_core::StaticEmbeddingStore;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DIM: usize = 50;

fn random_store(rng: &mut ChaCha8Rng, n_words: usize) -> (Vec<String>, Vec<Vec<f64>>, StaticEmbeddingStore) {
    let words: Vec<String> = (0..n_words).map(|i| format!("w{i}")).collect();
    let vecs: Vec<Vec<f64>> = (0..n_words)
        .map(|_| (0..DIM).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let store = StaticEmbeddingStore::from_entries(words.iter().cloned().zip(vecs.iter().cloned())).unwrap();
    (words, vecs, store)
}

fn naive_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for i in 0..a.len() {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    100.0 * (1.0 - ab / (aa.sqrt() * bb.sqrt()))
}

fn response(words: Vec<String>) -> DatResponse {
    DatResponse {
        id: "r".into(),
        words,
        source: "human".into(),
        condition: Condition::Dat,
        temperature: None,
    }
}

#[test]
fn matches_brute_force_on_random_vocabularies() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut scored = 0;
    for _ in 0..1000 {
        let (words, vecs, store) = random_store(&mut rng, 15);
        // Ten picks mixing known words, repeats and unknown tokens.
        let picks: Vec<String> = (0..10)
            .map(|_| {
                if rng.gen_bool(0.1) {
                    format!("zz{}", rng.gen_range(0..5))
                } else {
                    words[rng.gen_range(0..words.len())].clone()
                }
            })
            .collect();

        let mut seen = Vec::new();
        for p in &picks {
            if let Some(i) = words.iter().position(|w| w == p) {
                if !seen.contains(&i) {
                    seen.push(i);
                }
            }
        }
        let v = validate_response(&response(picks), &store);
        if seen.len() < 7 {
            assert!(!v.is_scoreable);
            assert!(dat_score(&v, &store).is_err());
            continue;
        }
        seen.truncate(7);
        let mut total = 0.0;
        for i in 0..7 {
            for j in i + 1..7 {
                total += naive_distance(&vecs[seen[i]], &vecs[seen[j]]);
            }
        }
        let expected = total / 21.0;
        let got = dat_score(&v, &store).unwrap();
        assert_eq!(got.n_pairs, SCORED_PAIRS);
        assert!((got.value - expected).abs() < 1e-9, "{} vs {}", got.value, expected);
        scored += 1;
    }
    assert!(scored > 100);
}

#[test]
fn plural_fallback_resolves_to_stem() {
    let store = StaticEmbeddingStore::from_entries([
        ("cat", vec![1.0, 0.0]),
        ("box", vec![0.0, 1.0]),
    ])
    .unwrap();
    let v = validate_response(&response(vec!["Cats".into(), "boxes".into(), "dogs".into()]), &store);
    assert_eq!(v.checks[0].resolved.as_deref(), Some("cat"));
    assert_eq!(v.checks[1].resolved.as_deref(), Some("box"));
    assert_eq!(v.checks[2].resolved, None);
}

fn seven_vectors() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 8), 7).prop_filter("nonzero rows", |rows| {
        rows.iter().all(|r| r.iter().map(|x| x * x).sum::<f64>() > 1e-6)
    })
}

fn score_of(rows: &[Vec<f64>], order: &[usize]) -> f64 {
    let words: Vec<String> = (0..rows.len()).map(|i| format!("w{i}")).collect();
    let store = StaticEmbeddingStore::from_entries(words.iter().cloned().zip(rows.iter().cloned())).unwrap();
    let picked: Vec<String> = order.iter().map(|&i| words[i].clone()).collect();
    dat_score(&validate_response(&response(picked), &store), &store).unwrap().value
}

proptest! {
    #[test]
    fn score_in_range_and_order_invariant(rows in seven_vectors(), shuffle in Just((0..7usize).collect::<Vec<_>>()).prop_shuffle()) {
        let base = score_of(&rows, &[0, 1, 2, 3, 4, 5, 6]);
        let permuted = score_of(&rows, &shuffle);
        prop_assert!((0.0..=200.0).contains(&base));
        prop_assert!((base - permuted).abs() < 1e-9);
    }

    #[test]
    fn score_invariant_to_vector_scale(rows in seven_vectors(), k in 0.01f64..100.0) {
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|x| x * k).collect()).collect();
        let order = [0, 1, 2, 3, 4, 5, 6];
        prop_assert!((score_of(&rows, &order) - score_of(&scaled, &order)).abs() < 1e-9);
    }
}
