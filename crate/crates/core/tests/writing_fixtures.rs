use divbench_core::writing::{count_syllables, validate_structure, TaskKind, WritingTaskSpec};

const VALID: &str = include_str!("fixtures/haiku_valid.txt");
const MALFORMED: &str = include_str!("fixtures/haiku_malformed.txt");
const AUDIT: &str = include_str!("fixtures/syllable_audit.txt");

#[test]
fn valid_haikus_pass() {
    let spec = WritingTaskSpec::for_kind(TaskKind::Haiku);
    let entries: Vec<&str> = VALID.split("\n\n").map(str::trim).filter(|e| !e.is_empty()).collect();
    assert_eq!(entries.len(), 20);
    for e in entries {
        let v = validate_structure(e, &spec);
        assert!(v.passes, "{e:?}: {} ({})", v.reason, v.details);
    }
}

#[test]
fn malformed_haikus_fail() {
    let spec = WritingTaskSpec::for_kind(TaskKind::Haiku);
    let entries: Vec<&str> = MALFORMED.split("\n---\n").map(|e| e.trim_matches('\n')).collect();
    assert_eq!(entries.len(), 10);
    for e in entries {
        let v = validate_structure(e, &spec);
        assert!(!v.passes, "{e:?} passed with {}", v.details);
    }
}

#[test]
fn syllable_counter_agrees_with_audit_list() {
    let rows: Vec<(&str, usize)> = AUDIT
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (w, n) = l.split_once(' ').unwrap();
            (w, n.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 200);
    let agree = rows.iter().filter(|(w, n)| count_syllables(w).ok() == Some(*n)).count();
    let misses: Vec<_> = rows.iter().filter(|(w, n)| count_syllables(w).ok() != Some(*n)).collect();
    assert!(agree as f64 / rows.len() as f64 >= 0.90, "{agree}/200, misses {misses:?}");
}

#[test]
fn word_limits_apply() {
    let syn = WritingTaskSpec::for_kind(TaskKind::Synopsis);
    let fifty = vec!["word"; 50].join(" ");
    assert!(validate_structure(&fifty, &syn).passes);
    let v = validate_structure(&format!("{fifty} extra"), &syn);
    assert!(!v.passes);
    assert_eq!(v.reason, "word count 51 exceeds limit 50");
}
