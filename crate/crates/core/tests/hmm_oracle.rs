//! Cross-checks between the HMM subsystems: flat-start symmetry, alignment
//! versus decoding scores, and tied-model behavior under re-estimation.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use viserec::frames::FrameSet;
use viserec::hmm::{
    baum_welch, flat_start, force_align, tie_silence_models, viterbi_decode, AlignOptions,
    DecodeParams, FlatStartOptions,
};
use viserec::lm::{build_network, estimate_bigram, NetworkOptions};

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn expansions(pairs: &[(&str, &[&str])]) -> BTreeMap<String, Vec<Vec<String>>> {
    pairs
        .iter()
        .map(|(w, v)| {
            (
                w.to_string(),
                vec![v.iter().map(|s| s.to_string()).collect()],
            )
        })
        .collect()
}

fn random_frames(rng: &mut ChaCha8Rng, t: usize, dim: usize) -> FrameSet {
    let mut f = FrameSet::new(dim, 1.0);
    for _ in 0..t {
        let frame: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        f.push(&frame).unwrap();
    }
    f
}

#[test]
fn flat_start_total_likelihood_identical_across_models() {
    // With jitter disabled every model is parameter-identical, so the
    // forward likelihood of an utterance is the same whichever equal-length
    // label sequence it trains against.
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let data = random_frames(&mut rng, 24, 3);
    let (set, _) = flat_start(
        &strings(&["a", "b", "c"]),
        2,
        2,
        &data,
        &FlatStartOptions { jitter: 0.0 },
    )
    .unwrap();
    let lls: Vec<f64> = ["a", "b", "c"]
        .iter()
        .map(|label| {
            let mut models = set.clone();
            let utts = vec![(&data, strings(&[label, label]))];
            baum_welch(&mut models, &utts, 1)
                .unwrap()
                .log_likelihoods[0]
        })
        .collect();
    assert_eq!(lls[0], lls[1]);
    assert_eq!(lls[1], lls[2]);
}

#[test]
fn alignment_score_matches_single_word_decode() {
    // A one-word network and a forced alignment to that word build the
    // same lattice, so the Viterbi scores coincide.
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let data = random_frames(&mut rng, 12, 2);
    let (set, _) = flat_start(
        &strings(&["x", "y"]),
        2,
        1,
        &data,
        &FlatStartOptions::default(),
    )
    .unwrap();
    let exp = expansions(&[("W", &["x", "y", "x"])]);
    let opts = AlignOptions {
        boundary_silence: false,
        optional_short_pause: false,
        ..AlignOptions::default()
    };
    let aligned = force_align(&set, &data, &strings(&["W"]), &exp, &opts).unwrap();

    let lm = estimate_bigram(&[strings(&["W"])], 0.0).unwrap();
    let network = build_network(
        &lm,
        &exp,
        NetworkOptions {
            boundary_silence: false,
            optional_short_pause: false,
            ..NetworkOptions::default()
        },
    )
    .unwrap();
    let decoded = viterbi_decode(&set, &network, &data, &DecodeParams::default()).unwrap();
    assert!(
        (aligned.log_score - decoded.log_score).abs() <= 1e-12,
        "align {} vs decode {}",
        aligned.log_score,
        decoded.log_score
    );
    assert_eq!(decoded.words, vec!["W"]);
    // Segment labels agree too.
    let align_labels: Vec<&str> = aligned.segments.iter().map(|s| s.label.as_str()).collect();
    let decode_labels: Vec<String> = decoded
        .transcript
        .units
        .iter()
        .map(|u| u.label.clone())
        .collect();
    assert_eq!(
        align_labels,
        decode_labels.iter().map(|s| s.as_str()).collect::<Vec<_>>()
    );
}

#[test]
fn reestimation_after_tying_keeps_weights_normalized() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let utts_data: Vec<FrameSet> = (0..5).map(|_| random_frames(&mut rng, 16, 2)).collect();
    let mut pooled = FrameSet::new(2, 1.0);
    for f in &utts_data {
        for frame in f.iter() {
            pooled.push(frame).unwrap();
        }
    }
    let (mut set, _) = flat_start(
        &strings(&["sil", "sp", "v"]),
        3,
        3,
        &pooled,
        &FlatStartOptions::default(),
    )
    .unwrap();
    let utts1: Vec<(&FrameSet, Vec<String>)> = utts_data
        .iter()
        .map(|f| (f, strings(&["sil", "v", "sil"])))
        .collect();
    baum_welch(&mut set, &utts1, 4).unwrap();
    tie_silence_models(&mut set, "sil", "sp").unwrap();
    let utts2: Vec<(&FrameSet, Vec<String>)> = utts_data
        .iter()
        .map(|f| (f, strings(&["sil", "v", "sp", "v", "sil"])))
        .collect();
    baum_welch(&mut set, &utts2, 2).unwrap();
    // validate() checks weight normalization, row stochasticity, the
    // variance floor and bitwise-identical tied states.
    set.validate().unwrap();
    assert_eq!(
        set.get("sil").unwrap().states[1],
        set.get("sp").unwrap().states[0]
    );
}

#[test]
fn segments_tile_every_alignment() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for _ in 0..10 {
        let t = rng.random_range(8..20);
        let data = random_frames(&mut rng, t, 2);
        let (set, _) = flat_start(
            &strings(&["a", "b"]),
            2,
            1,
            &data,
            &FlatStartOptions::default(),
        )
        .unwrap();
        let exp = expansions(&[("WA", &["a"]), ("WB", &["b", "a"])]);
        let opts = AlignOptions {
            boundary_silence: false,
            optional_short_pause: false,
            ..AlignOptions::default()
        };
        let words = if rng.random::<bool>() {
            strings(&["WA", "WB"])
        } else {
            strings(&["WB", "WA"])
        };
        let aligned = force_align(&set, &data, &words, &exp, &opts).unwrap();
        let mut cursor = 0usize;
        for seg in &aligned.segments {
            assert_eq!(seg.start, cursor, "gap before {}", seg.label);
            assert!(seg.end > seg.start);
            cursor = seg.end;
        }
        assert_eq!(cursor, t, "segments must tile the utterance");
        assert_eq!(aligned.words, words);
    }
}
