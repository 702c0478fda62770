//! Alignment DP optimality against exhaustive enumeration, plus the
//! symmetry and ordering properties of the scores.

use proptest::prelude::*;
use viserec::scoring::{align_labels, score, EditCosts, EditOp};

/// Minimum alignment cost by exhaustive recursion, independent of the DP.
fn brute_force_cost(reference: &[String], hypothesis: &[String], costs: &EditCosts) -> u32 {
    fn go(r: &[String], h: &[String], costs: &EditCosts) -> u32 {
        match (r.is_empty(), h.is_empty()) {
            (true, true) => 0,
            (true, false) => costs.insertion * h.len() as u32,
            (false, true) => costs.deletion * r.len() as u32,
            (false, false) => {
                let diag = if r[0] == h[0] { 0 } else { costs.substitution }
                    + go(&r[1..], &h[1..], costs);
                let del = costs.deletion + go(&r[1..], h, costs);
                let ins = costs.insertion + go(r, &h[1..], costs);
                diag.min(del).min(ins)
            }
        }
    }
    go(reference, hypothesis, costs)
}

fn label_seq(max_len: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(
        prop::sample::select(vec!["a", "b", "c"]).prop_map(|s| s.to_string()),
        0..=max_len,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dp_cost_equals_exhaustive_minimum(r in label_seq(6), h in label_seq(6)) {
        let costs = EditCosts::default();
        let alignment = align_labels(&r, &h, &costs);
        prop_assert_eq!(alignment.cost, brute_force_cost(&r, &h, &costs));
        // Counts are consistent with the inputs.
        let n = alignment.count(EditOp::Hit)
            + alignment.count(EditOp::Substitution)
            + alignment.count(EditOp::Deletion);
        prop_assert_eq!(n as usize, r.len());
        let m = alignment.count(EditOp::Hit)
            + alignment.count(EditOp::Substitution)
            + alignment.count(EditOp::Insertion);
        prop_assert_eq!(m as usize, h.len());
    }

    #[test]
    fn swapping_roles_swaps_deletions_and_insertions(r in label_seq(6), h in label_seq(6)) {
        let costs = EditCosts::default();
        let fwd = align_labels(&r, &h, &costs);
        let rev = align_labels(&h, &r, &costs);
        prop_assert_eq!(fwd.cost, rev.cost);
        prop_assert_eq!(fwd.count(EditOp::Hit), rev.count(EditOp::Hit));
        prop_assert_eq!(fwd.count(EditOp::Substitution), rev.count(EditOp::Substitution));
        prop_assert_eq!(fwd.count(EditOp::Deletion), rev.count(EditOp::Insertion));
        prop_assert_eq!(fwd.count(EditOp::Insertion), rev.count(EditOp::Deletion));
    }

    #[test]
    fn accuracy_never_exceeds_correctness(r in label_seq(6), h in label_seq(6)) {
        let alignment = align_labels(&r, &h, &EditCosts::default());
        if let Ok(report) = score(std::slice::from_ref(&alignment)) {
            prop_assert!(report.accuracy <= report.correctness + 1e-12);
            if alignment.count(EditOp::Insertion) == 0 {
                prop_assert_eq!(report.accuracy, report.correctness);
            } else {
                prop_assert!(report.accuracy < report.correctness);
            }
        }
    }
}

#[test]
fn transposed_confusion_matches_swapped_counts() {
    // Swapping ref and hyp transposes hit/substitution counts.
    let r: Vec<String> = ["a", "b", "c", "a"].iter().map(|s| s.to_string()).collect();
    let h: Vec<String> = ["b", "b", "c", "c"].iter().map(|s| s.to_string()).collect();
    let labels: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let fwd = viserec::scoring::confusion(
        &[align_labels(&r, &h, &EditCosts::default())],
        &labels,
    )
    .unwrap();
    let rev = viserec::scoring::confusion(
        &[align_labels(&h, &r, &EditCosts::default())],
        &labels,
    )
    .unwrap();
    for a in &labels {
        for b in &labels {
            assert_eq!(fwd.get(a, b), rev.get(b, a), "{a}->{b}");
        }
    }
}
