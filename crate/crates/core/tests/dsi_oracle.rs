use divbench_core::dsi::{dsi_score, score_text, DsiMode};
use divbench_core::embed::{CombineMode, ContextScope, ContextualEmbedderSpec, MockContextualProvider};
use divbench_core::text::StopWords;
use divbench_core::EmbeddingVector;
use proptest::prelude::*;

fn cos_dist(a: &[f64], b: &[f64]) -> f64 {
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    1.0 - ab / (aa.sqrt() * bb.sqrt())
}

fn rows() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.01f64..1.0, 6), 2..50)
}

proptest! {
    #[test]
    fn matches_double_loop(rows in rows()) {
        let vecs: Vec<EmbeddingVector> = rows.iter().map(|r| EmbeddingVector::new(r.clone()).unwrap()).collect();
        let n = rows.len();

        let mut all = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i < j {
                    all += cos_dist(&rows[i], &rows[j]);
                }
            }
        }
        let all = all / (n * (n - 1) / 2) as f64;
        let succ: f64 = (1..n).map(|i| cos_dist(&rows[i - 1], &rows[i])).sum::<f64>() / (n - 1) as f64;

        let got_all = dsi_score(&vecs, DsiMode::AllPairs).unwrap();
        let got_succ = dsi_score(&vecs, DsiMode::Successive).unwrap();
        prop_assert!((got_all.value - all).abs() < 1e-12);
        prop_assert!((got_succ.value - succ).abs() < 1e-12);
        prop_assert_eq!(got_all.n_pairs, n * (n - 1) / 2);
        prop_assert_eq!(got_succ.n_pairs, n - 1);
    }

    #[test]
    fn identical_vectors_score_zero(row in prop::collection::vec(0.01f64..1.0, 6), n in 2usize..20) {
        let vecs = vec![EmbeddingVector::new(row).unwrap(); n];
        prop_assert!(dsi_score(&vecs, DsiMode::AllPairs).unwrap().value.abs() < 1e-12);
    }
}

#[test]
fn too_few_vectors_is_an_error() {
    let one = vec![EmbeddingVector::new(vec![1.0]).unwrap()];
    assert!(dsi_score(&one, DsiMode::Successive).is_err());
}

#[test]
fn text_scoring_is_deterministic_and_records_spec() {
    let provider = MockContextualProvider::new(12, 16);
    let spec = ContextualEmbedderSpec::new([6, 7], CombineMode::Average, ContextScope::Sentence).unwrap();
    let sw = StopWords::english();
    let text = "The river bends. Lanterns drift over water while owls call.";
    let a = score_text(text, &sw, &spec, &provider, DsiMode::Successive).unwrap();
    let b = score_text(text, &sw, &spec, &provider, DsiMode::Successive).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.embedder_spec.as_ref(), Some(&spec));
    assert!(a.value >= 0.0 && a.value <= 2.0);
}
