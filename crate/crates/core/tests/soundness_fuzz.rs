use pwhile_dp::aprhl::fuzz::{soundness_fuzz, FuzzConfig, FuzzReport};
use pwhile_dp::aprhl::rules::Mutation;

fn summary(r: &FuzzReport) -> String {
    let mut s = format!("validated {} counterexamples {}\n", r.validated, r.counterexamples.len());
    for (rule, st) in &r.per_rule {
        s += &format!(
            "  {rule:10} gen {:4} rej {:4} skip {:4} ok {:4} cex {}\n",
            st.generated, st.rejected, st.skipped, st.validated, st.counterexamples
        );
    }
    s
}

#[test]
fn rules_survive_the_oracle() {
    let r = soundness_fuzz(&FuzzConfig::default());
    println!("{}", summary(&r));
    assert_eq!(r.invalid_premises, 0);
    assert!(r.counterexamples.is_empty(), "{:#?}", r.counterexamples.first());
    assert!(r.validated >= 500, "{}", summary(&r));
    for (rule, st) in &r.per_rule {
        assert!(st.validated > 0, "no validated instance of {rule}");
    }
}

#[test]
fn summed_seq_grade_is_caught() {
    let cfg = FuzzConfig {
        trials: 500,
        rules: vec!["seq".into()],
        mutation: Some(Mutation::SeqSum),
        ..FuzzConfig::default()
    };
    let r = soundness_fuzz(&cfg);
    println!("{}", summary(&r));
    let first = r.counterexamples.iter().map(|c| c.trial).min();
    assert!(first.is_some(), "mutation survived 500 trials");
    println!("first counterexample at trial {:?}", first);
}

#[test]
fn min_comp_grade_is_reported() {
    let cfg = FuzzConfig {
        trials: 1000,
        rules: vec!["comp".into(), "comp_endo".into()],
        mutation: Some(Mutation::CompMin),
        ..FuzzConfig::default()
    };
    let r = soundness_fuzz(&cfg);
    println!("{}", summary(&r));
    let c = r.counterexamples.first().expect("min-based comp grade should be refuted");
    println!("{c:#?}");
}
