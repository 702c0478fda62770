//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measurements. Run with
//! `cargo test -p viserec-cli --test acceptance -- --nocapture`.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Instant;
use viserec::analysis::{
    fractional_ranks, inverse_recognition_prob, parse_correlations_csv, parse_decline_csv,
    parse_fold_stats_csv, parse_ranking_csv, rank_visemes, spearman, viseme_probabilities,
    write_correlations_csv, write_decline_csv, write_fold_stats_csv, write_ranking_csv,
    CorrelationResult, FoldStatistics, PValueMethod, ProbMode,
};
use viserec::corpus::{generate_corpus, make_folds, run_recipe, train_models, RecipeConfig, SyntheticSpec};
use viserec::features::{select_mode_count, LinearModel, ObservationMatrix};
use viserec::frames::FrameSet;
use viserec::hmm::{viterbi_decode, DecodeParams, GaussComponent, GmmHmm, MixtureState, ModelSet};
use viserec::lm::{build_network, estimate_bigram, BigramLm, NetworkOptions, WordNetwork};
use viserec::scoring::{align_labels, confusion, score, ConfusionMatrix, EditCosts, ScoreReport};
use viserec::viseme::{VisemeId, VisemeMap};

// ── Criterion 1: Viterbi equals exhaustive enumeration ──────────────────

struct ToyInstance {
    models: ModelSet,
    lm: BigramLm,
    network: WordNetwork,
    frames: FrameSet,
    words: Vec<String>,
}

fn random_toy(rng: &mut ChaCha8Rng) -> ToyInstance {
    let dim = 2;
    let n_models = rng.random_range(1..=3);
    let names = ["WA", "WB", "WC"];
    let labels = ["ma", "mb", "mc"];
    let mut models = ModelSet::new(dim, vec![0.0; dim], vec![1.0; dim], vec![0.0; dim]);
    for k in 0..n_models {
        let n_states = rng.random_range(1..=2);
        let order = n_states + 2;
        let mut trans = vec![0.0; order * order];
        trans[0 * order + 1] = 1.0;
        for s in 1..=n_states {
            let stay: f64 = rng.random_range(0.2..0.8);
            trans[s * order + s] = stay;
            trans[s * order + s + 1] = 1.0 - stay;
        }
        let states = (0..n_states)
            .map(|_| MixtureState {
                components: vec![GaussComponent {
                    weight: 1.0,
                    mean: (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect(),
                    var: (0..dim).map(|_| rng.random_range(0.3..1.5)).collect(),
                }],
            })
            .collect();
        models.insert(GmmHmm {
            label: labels[k].to_string(),
            n_states,
            trans,
            states,
            tie_tags: vec![None; n_states],
        });
    }
    // Training lines covering every word, plus random continuations.
    let mut lines: Vec<Vec<String>> = (0..n_models).map(|k| vec![names[k].to_string()]).collect();
    for _ in 0..3 {
        let len = rng.random_range(1..=3);
        lines.push(
            (0..len)
                .map(|_| names[rng.random_range(0..n_models)].to_string())
                .collect(),
        );
    }
    let floor = if rng.random::<bool>() { 0.02 } else { 0.0 };
    let lm = estimate_bigram(&lines, floor).unwrap();
    let expansions: BTreeMap<String, Vec<Vec<String>>> = (0..n_models)
        .map(|k| (names[k].to_string(), vec![vec![labels[k].to_string()]]))
        .collect();
    let network = build_network(
        &lm,
        &expansions,
        NetworkOptions {
            boundary_silence: false,
            optional_short_pause: false,
            ..NetworkOptions::default()
        },
    )
    .unwrap();
    let t_len = rng.random_range(3..=6);
    let mut frames = FrameSet::new(dim, 1.0);
    for _ in 0..t_len {
        let frame: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        frames.push(&frame).unwrap();
    }
    ToyInstance {
        models,
        lm,
        network,
        frames,
        words: (0..n_models).map(|k| names[k].to_string()).collect(),
    }
}

fn model_for<'a>(toy: &'a ToyInstance, word: &str) -> &'a GmmHmm {
    let label = match word {
        "WA" => "ma",
        "WB" => "mb",
        _ => "mc",
    };
    toy.models.get(label).unwrap()
}

/// Best (score, word sequence) by exhaustive enumeration of every word
/// sequence and every state path, independent of the decoder.
fn oracle_decode(toy: &ToyInstance) -> Option<(f64, Vec<String>)> {
    let t_len = toy.frames.len();
    let mut best: Option<(f64, Vec<String>)> = None;

    fn state_paths(
        slots: &[&GmmHmm],
        frames: &FrameSet,
        t: usize,
        slot: usize,
        state: usize,
        acc: f64,
        best: &mut f64,
    ) {
        let model = slots[slot];
        let frame = frames.frame(t);
        let acc = acc + model.states[state].components[0].weight.ln()
            + model.states[state].components[0].log_density(frame);
        if t + 1 == frames.len() {
            // Must exit through the remaining chain without emitting.
            if slot + 1 == slots.len() {
                let exit = model.tr(state + 1, model.n_states + 1);
                if exit > 0.0 {
                    let total = acc + exit.ln();
                    if total > *best {
                        *best = total;
                    }
                }
            }
            return;
        }
        let stay = model.tr(state + 1, state + 1);
        if stay > 0.0 {
            state_paths(slots, frames, t + 1, slot, state, acc + stay.ln(), best);
        }
        if state + 1 < model.n_states {
            let advance = model.tr(state + 1, state + 2);
            if advance > 0.0 {
                state_paths(slots, frames, t + 1, slot, state + 1, acc + advance.ln(), best);
            }
        }
        if slot + 1 < slots.len() {
            let exit = model.tr(state + 1, model.n_states + 1);
            let enter = slots[slot + 1].tr(0, 1);
            if exit > 0.0 && enter > 0.0 {
                state_paths(
                    slots,
                    frames,
                    t + 1,
                    slot + 1,
                    0,
                    acc + exit.ln() + enter.ln(),
                    best,
                );
            }
        }
    }

    fn word_sequences(
        toy: &ToyInstance,
        seq: &mut Vec<String>,
        min_dur: usize,
        lm_acc: f64,
        t_len: usize,
        best: &mut Option<(f64, Vec<String>)>,
    ) {
        if !seq.is_empty() {
            let end = toy.lm.log_prob(seq.last().unwrap(), "</s>");
            if end > f64::NEG_INFINITY {
                let slots: Vec<&GmmHmm> = seq.iter().map(|w| model_for(toy, w)).collect();
                let entry = slots[0].tr(0, 1);
                if entry > 0.0 {
                    let mut path_best = f64::NEG_INFINITY;
                    state_paths(&slots, &toy.frames, 0, 0, 0, entry.ln(), &mut path_best);
                    if path_best > f64::NEG_INFINITY {
                        let total = lm_acc + end + path_best;
                        if best.as_ref().map_or(true, |(b, _)| total > *b) {
                            *best = Some((total, seq.clone()));
                        }
                    }
                }
            }
        }
        for w in &toy.words.clone() {
            let dur = model_for(toy, w).n_states;
            if min_dur + dur > t_len {
                continue;
            }
            let prev = seq.last().map(|s| s.as_str()).unwrap_or("<s>");
            let step = toy.lm.log_prob(prev, w);
            if step == f64::NEG_INFINITY {
                continue;
            }
            seq.push(w.clone());
            word_sequences(toy, seq, min_dur + dur, lm_acc + step, t_len, best);
            seq.pop();
        }
    }

    let mut seq = Vec::new();
    word_sequences(toy, &mut seq, 0, 0.0, t_len, &mut best);
    best
}

#[test]
fn criterion_1_viterbi_matches_exhaustive_enumeration() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut checked = 0usize;
    let mut attempts = 0usize;
    while checked < 200 {
        attempts += 1;
        assert!(attempts < 2000, "toy generation degenerated");
        let toy = random_toy(&mut rng);
        let decoded = viterbi_decode(
            &toy.models,
            &toy.network,
            &toy.frames,
            &DecodeParams::default(),
        );
        let oracle = oracle_decode(&toy);
        match (decoded, oracle) {
            (Ok(out), Some((best, words))) => {
                assert!(
                    (out.log_score - best).abs() <= 1e-9,
                    "instance {checked}: decoder {} vs oracle {best}",
                    out.log_score
                );
                assert_eq!(out.words, words, "instance {checked}");
                checked += 1;
            }
            (Err(_), None) => {} // Infeasible instance; draw another.
            (Ok(out), None) => panic!("decoder found {:?}, oracle found nothing", out.words),
            (Err(e), Some((best, _))) => panic!("oracle found {best}, decoder failed: {e}"),
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    println!(
        "criterion 1 PASS: {checked} toy instances match exhaustive enumeration \
         (tolerance 1e-9) in {elapsed:?}"
    );
}

// ── Criterion 2: EM monotonicity over the 4→2→2 recipe ─────────────────

#[test]
fn criterion_2_em_log_likelihood_non_decreasing() {
    let spec = SyntheticSpec::desk_default(15, 500, 6.0, 202);
    assert_eq!(spec.dim, 10);
    let corpus = generate_corpus(&spec).unwrap();
    assert_eq!(corpus.n_lines(), 500);
    let config = RecipeConfig::default();
    assert_eq!((config.r1, config.r2, config.r3), (4, 2, 2));
    let all: Vec<usize> = (0..corpus.n_lines()).collect();
    let trained = train_models(&config, &corpus, &all).unwrap();
    assert_eq!(trained.reestimation_blocks.len(), 3);
    assert_eq!(trained.reestimation_blocks[0].len(), 4);
    assert_eq!(trained.reestimation_blocks[1].len(), 2);
    assert_eq!(trained.reestimation_blocks[2].len(), 2);
    for (b, block) in trained.reestimation_blocks.iter().enumerate() {
        for (i, w) in block.windows(2).enumerate() {
            assert!(
                w[1] >= w[0] - 1e-6,
                "block {b} step {i}: log-likelihood fell {} -> {}",
                w[0],
                w[1]
            );
        }
    }
    println!(
        "criterion 2 PASS: log-likelihood non-decreasing across 4+2+2 re-estimations \
         (blocks {:?})",
        trained
            .reestimation_blocks
            .iter()
            .map(|b| b.len())
            .collect::<Vec<_>>()
    );
}

// ── Criterion 3: PCA against an independent eigendecomposition ──────────

fn jacobi_eigenvalues(matrix: &[Vec<f64>]) -> Vec<f64> {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let frobenius = |a: &Vec<Vec<f64>>| -> f64 {
        a.iter()
            .flat_map(|row| row.iter().map(|x| x * x))
            .sum::<f64>()
            .sqrt()
    };
    for _ in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p][q] * a[p][q];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + frobenius(&a)) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigenvalues: Vec<f64> = (0..n).map(|i| a[i][i].max(0.0)).collect();
    eigenvalues.sort_by(|x, y| y.partial_cmp(x).unwrap());
    eigenvalues
}

fn oracle_covariance(data: &ObservationMatrix) -> Vec<Vec<f64>> {
    let (n, d) = (data.count(), data.dim());
    let mut mean = vec![0.0; d];
    for row in data.iter() {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov = vec![vec![0.0; d]; d];
    for row in data.iter() {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (row[i] - mean[i]) * (row[j] - mean[j]);
            }
        }
    }
    for row in &mut cov {
        for x in row.iter_mut() {
            *x /= (n - 1) as f64;
        }
    }
    cov
}

#[test]
fn criterion_3_pca_matches_eigendecomposition_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for case in 0..100 {
        let d = rng.random_range(2..=18);
        let n = rng.random_range(3..=28);
        let scales: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 5.0 + 0.1).collect();
        let mut data = ObservationMatrix::new(d);
        for _ in 0..n {
            let row: Vec<f64> = scales
                .iter()
                .map(|&s| (rng.random::<f64>() - 0.5) * s)
                .collect();
            data.push_row(&row).unwrap();
        }
        let model = LinearModel::train(&data, 0.95).unwrap();
        let oracle = jacobi_eigenvalues(&oracle_covariance(&data));
        let expected_m = select_mode_count(&oracle, 0.95);
        assert_eq!(model.mode_count(), expected_m, "case {case}");

        // Orthonormality within 1e-8.
        for i in 0..model.mode_count() {
            for j in 0..model.mode_count() {
                let dot: f64 = model.modes[i]
                    .iter()
                    .zip(&model.modes[j])
                    .map(|(a, b)| a * b)
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() <= 1e-8, "case {case} modes {i},{j}");
            }
        }
        // Round trip within the span, 1e-8.
        let params: Vec<f64> = (0..model.mode_count())
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        let x = model.reconstruct(&params).unwrap();
        let again = model.reconstruct(&model.project(&x).unwrap()).unwrap();
        for (a, b) in x.iter().zip(&again) {
            assert!((a - b).abs() <= 1e-8, "case {case}: {a} vs {b}");
        }
    }
    println!(
        "criterion 3 PASS: 100 random matrices match the Jacobi oracle at fraction 0.95; \
         round trip and orthonormality within 1e-8"
    );
}

// ── Criterion 4: end-to-end synthetic recognition ────────────────────────

#[test]
fn criterion_4_end_to_end_synthetic_recognition() {
    let start = Instant::now();
    // Class mean separation 6 sigma (the criterion requires at least 5).
    let spec = SyntheticSpec::desk_default(15, 500, 6.0, 404);
    let corpus = generate_corpus(&spec).unwrap();
    let config = RecipeConfig::default();
    let test_size = corpus.n_lines() * 42 / 108;
    let folds = make_folds(corpus.n_lines(), test_size, 5, config.seed).unwrap();
    let outcomes = run_recipe(&config, &corpus, &folds);
    assert_eq!(outcomes.len(), 5);
    let mut accuracies = Vec::new();
    for (i, outcome) in outcomes.iter().enumerate() {
        let outcome = outcome.as_ref().unwrap_or_else(|e| panic!("fold {i}: {e}"));
        assert!(
            outcome.score.accuracy >= 90.0,
            "fold {i}: accuracy {:.4} below 90",
            outcome.score.accuracy
        );
        accuracies.push(outcome.score.accuracy);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 600, "took {elapsed:?}");
    println!(
        "criterion 4 PASS: per-fold accuracies {:?} all >= 90 in {elapsed:?}",
        accuracies
            .iter()
            .map(|a| (a * 100.0).round() / 100.0)
            .collect::<Vec<_>>()
    );
}

// ── Criterion 5: scoring fixtures ────────────────────────────────────────

#[test]
fn criterion_5_scoring_fixtures() {
    let costs = EditCosts::default();
    assert_eq!((costs.substitution, costs.deletion, costs.insertion), (10, 7, 7));
    let s = |v: &[&str]| -> Vec<String> { v.iter().map(|x| x.to_string()).collect() };
    // (ref, hyp, H, D, S, I)
    let fixtures: Vec<(Vec<String>, Vec<String>, u64, u64, u64, u64)> = vec![
        (s(&["a", "b", "c"]), s(&["a", "b", "c"]), 3, 0, 0, 0),
        (s(&["a", "b", "c"]), s(&["a", "x", "b", "c"]), 3, 0, 0, 1),
        (s(&["a"]), s(&["b"]), 0, 0, 1, 0),
        (s(&["a", "b"]), s(&["b"]), 1, 1, 0, 0),
        (s(&[]), s(&["a", "b"]), 0, 0, 0, 2),
        (s(&["a", "b", "c", "d"]), s(&[]), 0, 4, 0, 0),
        (s(&["a"]), s(&["a", "a", "a", "a"]), 1, 0, 0, 3),
        (s(&["a", "b", "a"]), s(&["a", "b", "a", "b"]), 3, 0, 0, 1),
        (s(&["x", "y"]), s(&["y", "x"]), 1, 1, 0, 1),
        (s(&["a", "b", "c"]), s(&["c", "b", "a"]), 1, 0, 2, 0),
    ];
    let mut alignments = Vec::new();
    for (i, (r, h, eh, ed, es, ei)) in fixtures.iter().enumerate() {
        let a = align_labels(r, h, &costs);
        use viserec::scoring::EditOp::*;
        assert_eq!(a.count(Hit), *eh, "fixture {i} hits");
        assert_eq!(a.count(Deletion), *ed, "fixture {i} deletions");
        assert_eq!(a.count(Substitution), *es, "fixture {i} substitutions");
        assert_eq!(a.count(Insertion), *ei, "fixture {i} insertions");
        alignments.push(a);
    }
    // Pooled formulas.
    let report = score(&alignments).unwrap();
    assert_eq!(report.n, 22);
    assert_eq!(report.h, 13);
    assert_eq!(report.d, 6);
    assert_eq!(report.s, 3);
    assert_eq!(report.i, 8);
    assert_eq!(report.n, report.h + report.d + report.s);
    assert!((report.correctness - 100.0 * 13.0 / 22.0).abs() < 1e-12);
    assert!((report.accuracy - 100.0 * 5.0 / 22.0).abs() < 1e-12);
    // Negative accuracy: one hit, three insertions.
    let negative = score(std::slice::from_ref(&alignments[6])).unwrap();
    assert_eq!(negative.correctness, 100.0);
    assert_eq!(negative.accuracy, -200.0);
    println!(
        "criterion 5 PASS: 10 fixtures reproduce exact H/D/S/I under costs 10/7/7; \
         pooled correctness {:.4}, accuracy {:.4}, negative case -200",
        report.correctness, report.accuracy
    );
}

// ── Criterion 6: Spearman ────────────────────────────────────────────────

fn oracle_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let num: f64 = a.iter().zip(b).map(|(&x, &y)| (x - ma) * (y - mb)).sum();
    let da: f64 = a.iter().map(|&x| (x - ma) * (x - ma)).sum();
    let db: f64 = b.iter().map(|&y| (y - mb) * (y - mb)).sum();
    num / (da * db).sqrt()
}

fn oracle_permutation_p(ra: &[f64], rb: &[f64], r_obs: f64) -> f64 {
    fn walk(items: &mut Vec<f64>, k: usize, rb: &[f64], thr: f64, hits: &mut u64, total: &mut u64) {
        if k == items.len() {
            *total += 1;
            if oracle_pearson(items, rb).abs() >= thr {
                *hits += 1;
            }
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            walk(items, k + 1, rb, thr, hits, total);
            items.swap(k, i);
        }
    }
    let mut items = ra.to_vec();
    let (mut hits, mut total) = (0, 0);
    walk(&mut items, 0, rb, r_obs.abs() - 1e-9, &mut hits, &mut total);
    hits as f64 / total as f64
}

#[test]
fn criterion_6_spearman() {
    // Identity and reversal.
    let a = [1.0, 2.0, 3.0, 4.0, 5.0];
    let up = [2.0, 4.0, 6.0, 8.0, 10.0];
    let down = [5.0, 4.0, 3.0, 2.0, 1.0];
    assert!((spearman(&a, &up).unwrap().r - 1.0).abs() <= 1e-15);
    assert!((spearman(&a, &down).unwrap().r + 1.0).abs() <= 1e-15);

    // Documented 4-item example: ranks a [1,2,3,4], b [2,1,4,3] -> 0.6.
    let xa = [40.0, 30.0, 20.0, 10.0];
    let xb = [30.0, 40.0, 10.0, 20.0];
    let four = spearman(&xa, &xb).unwrap();
    assert!((four.r - 0.6).abs() <= 1e-15, "r = {}", four.r);

    // Tie-corrected equals Pearson on fractional ranks within 1e-12.
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for _ in 0..25 {
        let n = rng.random_range(4..=14);
        let a: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * 6.0).round()).collect();
        let b: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * 6.0).round()).collect();
        let ra = fractional_ranks(&a);
        let rb = fractional_ranks(&b);
        if ra.iter().all(|&x| x == ra[0]) || rb.iter().all(|&x| x == rb[0]) {
            continue;
        }
        let got = spearman(&a, &b).unwrap();
        let want = oracle_pearson(&ra, &rb);
        assert!((got.r - want).abs() <= 1e-12, "{} vs {want}", got.r);
    }

    // Permutation p-value equals exhaustive enumeration exactly, n <= 10.
    let mut checked = 0;
    for &n in &[4usize, 5, 6, 7, 10] {
        let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let result = spearman(&a, &b).unwrap();
        assert_eq!(result.method, PValueMethod::Permutation);
        let oracle = oracle_permutation_p(&fractional_ranks(&a), &fractional_ranks(&b), result.r);
        assert_eq!(result.p_value, oracle, "n = {n}");
        checked += 1;
    }
    println!(
        "criterion 6 PASS: r=1/-1/0.6 anchors, tie-corrected = Pearson-on-ranks (1e-12), \
         permutation p exact on {checked} sizes up to n=10"
    );
}

// ── Criterion 7: garbage merging reproduces the reduced map ─────────────

#[test]
fn criterion_7_garbage_merge_reproduces_reduced_map() {
    let map = VisemeMap::builtin_default();
    // Synthetic counts: exactly v08, v09, v14, v15 under 150.
    let mut counts: BTreeMap<VisemeId, u64> = BTreeMap::new();
    for (i, id) in map.class_ids().enumerate() {
        let rare = matches!(id.as_str(), "v08" | "v09" | "v14" | "v15");
        counts.insert(id.clone(), if rare { 30 + i as u64 } else { 150 + i as u64 * 10 });
    }
    let merged = map.merge_below_threshold(&counts, 150).unwrap();

    // Expected structure, as id -> phone-set pairs.
    let class = |id: &str, phones: &[&str]| -> (String, BTreeSet<String>) {
        (
            id.to_string(),
            phones.iter().map(|p| p.to_string()).collect(),
        )
    };
    let expected: BTreeSet<(String, BTreeSet<String>)> = [
        class("v01", &["p", "b", "m"]),
        class("v02", &["f", "v"]),
        class("v03", &["th", "dh"]),
        class("v04", &["t", "d", "n", "k", "g", "h", "j", "ng", "y"]),
        class("v05", &["s", "z"]),
        class("v06", &["l"]),
        class("v07", &["r"]),
        class("v10", &["i", "ih"]),
        class("v11", &["eh", "ae", "ey", "ay"]),
        class("v12", &["aa", "ao", "ah"]),
        class("v13", &["uh", "er", "ax"]),
        class("v16", &["iy", "hh"]),
        class("v17", &["aw", "ow"]),
        class("v18", &["sil"]),
        class("sp", &["sp"]),
        class("garb", &["u", "uw", "oy", "w", "sh", "zh", "ch", "jh"]),
    ]
    .into_iter()
    .collect();
    let got: BTreeSet<(String, BTreeSet<String>)> = merged
        .classes()
        .map(|(id, phones)| {
            (
                id.as_str().to_string(),
                phones.iter().map(|p| p.as_str().to_string()).collect(),
            )
        })
        .collect();
    assert_eq!(got, expected, "merged class structure mismatch");
    println!(
        "criterion 7 PASS: threshold 150 merges exactly v08, v09, v14, v15 into garb; \
         class structure matches by set equality"
    );
}

// ── Criterion 8: confusion analysis ──────────────────────────────────────

#[test]
fn criterion_8_confusion_analysis() {
    let s = |v: &[&str]| -> Vec<String> { v.iter().map(|x| x.to_string()).collect() };
    let labels = s(&["va", "vb", "vc", "vd"]);
    // Column normalization on a busy matrix.
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let alignments: Vec<_> = (0..12)
        .map(|_| {
            let draw = |rng: &mut ChaCha8Rng, len: usize| -> Vec<String> {
                (0..len)
                    .map(|_| labels[rng.random_range(0..labels.len())].clone())
                    .collect()
            };
            let r_len = rng.random_range(1..7);
            let h_len = rng.random_range(1..7);
            let r = draw(&mut rng, r_len);
            let h = draw(&mut rng, h_len);
            align_labels(&r, &h, &EditCosts::default())
        })
        .collect();
    let cm = confusion(&alignments, &labels).unwrap();
    for hyp in &labels {
        let total = cm.column_total(hyp);
        if total == 0 {
            continue;
        }
        let sum: f64 = labels
            .iter()
            .map(|r| cm.get(r, hyp) as f64 / total as f64)
            .sum();
        assert!((sum - 1.0).abs() <= 1e-12, "column {hyp} sums to {sum}");
    }

    // Identity matrix: every probability 1.0.
    let perfect = align_labels(&labels, &labels, &EditCosts::default());
    let identity = confusion(std::slice::from_ref(&perfect), &labels).unwrap();
    let probs = viseme_probabilities(std::slice::from_ref(&identity), ProbMode::PerFoldMean)
        .unwrap();
    for vp in &probs {
        assert_eq!(vp.p, Some(1.0), "{}", vp.viseme);
    }
    let ranking = rank_visemes(&probs, 0.0);
    assert_eq!(ranking.groups.len(), 1);
    assert_eq!(ranking.groups[0].p, 1.0);

    // Report files parse back losslessly.
    let ranking_csv = write_ranking_csv(&ranking);
    assert_eq!(parse_ranking_csv(&ranking_csv, "mem").unwrap(), ranking);
    let curve = viserec::analysis::decline_curve(&probs, 3);
    let decline_csv = write_decline_csv(&curve);
    assert_eq!(parse_decline_csv(&decline_csv, "mem").unwrap(), curve);
    let corr = vec![(
        "shape".to_string(),
        "appearance".to_string(),
        CorrelationResult {
            r: 0.9231,
            p_value: 1.63e-2,
            n: 15,
            method: PValueMethod::TApproximation,
        },
    )];
    let corr_csv = write_correlations_csv(&corr);
    assert_eq!(parse_correlations_csv(&corr_csv, "mem").unwrap(), corr);
    let stats = vec![(
        "t1 shape".to_string(),
        FoldStatistics {
            mean: 21.736,
            standard_error: 0.7501,
            n_folds: 5,
        },
    )];
    let stats_csv = write_fold_stats_csv(&stats);
    assert_eq!(parse_fold_stats_csv(&stats_csv, "mem").unwrap(), stats);
    let cm_csv = cm.to_csv();
    assert_eq!(ConfusionMatrix::parse_csv(&cm_csv, "mem").unwrap(), cm);
    let prob = inverse_recognition_prob(&identity, "va").unwrap();
    assert_eq!(prob, Some(1.0));
    println!(
        "criterion 8 PASS: columns normalize, identity ranking all-1.0, \
         five report formats round-trip losslessly"
    );
}

// ── Criterion 9: determinism of cmd_run ──────────────────────────────────

fn run_binary(args: &[&str]) {
    let exe = env!("CARGO_BIN_EXE_viserec");
    let output = std::process::Command::new(exe)
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        output.status.success(),
        "viserec {args:?} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

fn tree_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn criterion_9_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    run_binary(&[
        "synth",
        "--out",
        corpus.to_str().unwrap(),
        "--seed",
        "99",
        "--lines",
        "120",
        "--classes",
        "8",
    ]);
    let manifest = corpus.join("corpus.manifest");
    let run = |name: &str, jobs: &str| -> std::path::PathBuf {
        let out = dir.path().join(name);
        run_binary(&[
            "run",
            "--manifest",
            manifest.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--folds",
            "3",
            "--jobs",
            jobs,
            "--threshold",
            "40",
            "--seed",
            "5",
        ]);
        out
    };
    let a = run("run_a", "1");
    let b = run("run_b", "1");
    let c = run("run_c", "4");

    let ta = tree_bytes(&a);
    let tb = tree_bytes(&b);
    assert_eq!(
        ta.keys().collect::<Vec<_>>(),
        tb.keys().collect::<Vec<_>>(),
        "output trees list different files"
    );
    for (path, bytes) in &ta {
        assert_eq!(bytes, &tb[path], "byte difference in {path}");
    }

    // Jobs 4: numerically identical score reports per fold.
    for fold in 0..3 {
        let fa = ScoreReport::read(&a.join(format!("fold_{fold:02}/score.txt"))).unwrap();
        let fc = ScoreReport::read(&c.join(format!("fold_{fold:02}/score.txt"))).unwrap();
        assert_eq!(fa, fc, "fold {fold} reports differ across job counts");
    }
    println!(
        "criterion 9 PASS: two --jobs 1 runs byte-identical ({} files); \
         --jobs 4 score reports numerically identical",
        ta.len()
    );
}
