//! The end-to-end training and recognition recipe.
//!
//! Training per fold: viseme transcript conversion, garbage merge on
//! training-fold counts, flat start, a first block of embedded
//! re-estimations, silence/short-pause tying, a second block, forced
//! alignment with word break points, a third block on the aligned
//! transcripts, and bigram network estimation from the training fold.
//! Recognition then decodes the test fold and scores it.
//!
//! The first re-estimation block trains without inter-word short pauses
//! (the untied short-pause model cannot absorb zero frames); after tying,
//! the second block inserts the short pause between every word pair and
//! the tee topology soaks up the gaps that never happened.

use super::{Corpus, Fold, FoldSpec, RecipeConfig, Utterance};
use crate::error::{Error, Result};
use crate::frames::FrameSet;
use crate::hmm::{
    baum_welch, flat_start, force_align, tie_silence_models, viterbi_decode, AlignOptions,
    DecodeOutput, DecodeParams, FlatStartOptions, ModelSet,
};
use crate::lm::{build_network, estimate_bigram, NetworkOptions, WordNetwork};
use crate::scoring::{align_labels, confusion, score, ConfusionMatrix, EditCosts, ScoreReport};
use crate::viseme::{count_visemes, words_to_visemes, VisemeId, VisemeMap};
use std::collections::BTreeMap;

/// Models and supporting artifacts from the training side of the recipe.
#[derive(Debug, Clone)]
pub struct TrainedFold {
    pub merged_map: VisemeMap,
    pub models: ModelSet,
    pub network: WordNetwork,
    pub expansions: BTreeMap<String, Vec<Vec<String>>>,
    pub sil_id: String,
    pub sp_id: String,
    /// Corpus log-likelihood per re-estimation iteration, one vector per
    /// block (before tying, after tying, after forced alignment).
    pub reestimation_blocks: Vec<Vec<f64>>,
    pub trace: Vec<String>,
    pub warnings: Vec<String>,
}

/// Everything one fold produces.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub fold_index: usize,
    pub merged_map: VisemeMap,
    pub models: ModelSet,
    pub network: WordNetwork,
    /// Per-test-utterance recognition output, keyed by corpus line index.
    pub hypotheses: Vec<(usize, DecodeOutput)>,
    pub score: ScoreReport,
    pub confusion: ConfusionMatrix,
    pub reestimation_blocks: Vec<Vec<f64>>,
    /// Stage names in execution order.
    pub trace: Vec<String>,
    pub warnings: Vec<String>,
}

/// Run the full recipe over every fold. Fold failures (for example a
/// garbage merge that leaves no trainable class) abort only that fold;
/// each fold's slot carries its own result.
pub fn run_recipe(
    config: &RecipeConfig,
    corpus: &Corpus,
    folds: &FoldSpec,
) -> Vec<Result<FoldOutcome>> {
    folds
        .folds
        .iter()
        .enumerate()
        .map(|(i, fold)| run_fold(config, corpus, fold, i))
        .collect()
}

/// Ground-truth labels of an utterance remapped through the merged map,
/// optionally keeping short pauses.
fn remap_truth(
    utt: &Utterance,
    remap: &BTreeMap<VisemeId, VisemeId>,
    sp_id: &str,
    keep_sp: bool,
) -> Result<Vec<String>> {
    let mut out = Vec::with_capacity(utt.truth.units.len());
    for unit in &utt.truth.units {
        let id = VisemeId::new(&unit.label)?;
        let new = remap
            .get(&id)
            .ok_or_else(|| Error::UnknownLabel(unit.label.clone()))?;
        if new.as_str() == sp_id && !keep_sp {
            continue;
        }
        out.push(new.as_str().to_string());
    }
    Ok(out)
}

/// Run the training stages of the recipe over the given corpus lines.
pub fn train_models(
    config: &RecipeConfig,
    corpus: &Corpus,
    train_lines: &[usize],
) -> Result<TrainedFold> {
    let mut trace = Vec::new();
    let mut warnings = Vec::new();
    let mut blocks = Vec::new();
    let stage = |name: &str, e: Error| e.in_stage(name);

    let train: Vec<&Utterance> = train_lines.iter().map(|&i| &corpus.utterances[i]).collect();
    if train.is_empty() {
        return Err(Error::EmptyData("no training lines".to_string()));
    }

    // Viseme transcript conversion over the training fold.
    trace.push("convert".to_string());
    let mut converted = Vec::with_capacity(train.len());
    for utt in &train {
        converted.push(
            words_to_visemes(&corpus.dict, &corpus.map, &utt.words)
                .map_err(|e| stage("convert", e))?,
        );
    }
    let counts =
        count_visemes(converted.iter(), &corpus.map).map_err(|e| stage("convert", e))?;

    // Garbage merge on training-fold counts only.
    trace.push("garbage-merge".to_string());
    let merged = corpus
        .map
        .merge_below_threshold(&counts, config.threshold)
        .map_err(|e| stage("garbage-merge", e))?;
    let remap = corpus
        .map
        .remap_to(&merged)
        .map_err(|e| stage("garbage-merge", e))?;
    let sil_id = merged
        .silence_id()
        .ok_or_else(|| stage("garbage-merge", Error::MissingModel("sil".to_string())))?
        .as_str()
        .to_string();
    let sp_id = merged
        .short_pause_id()
        .ok_or_else(|| stage("garbage-merge", Error::MissingModel("sp".to_string())))?
        .as_str()
        .to_string();

    // Flat start from the pooled training frames.
    trace.push("flat-start".to_string());
    let mut pooled = FrameSet::new(train[0].frames.dim(), train[0].frames.rate());
    for utt in &train {
        for frame in utt.frames.iter() {
            pooled.push(frame).map_err(|e| stage("flat-start", e))?;
        }
    }
    let labels: Vec<String> = merged.class_ids().map(|c| c.as_str().to_string()).collect();
    let (mut models, fs_warnings) = flat_start(
        &labels,
        config.n_states,
        config.n_mix,
        &pooled,
        &FlatStartOptions::default(),
    )
    .map_err(|e| stage("flat-start", e))?;
    warnings.extend(fs_warnings);

    // First re-estimation block: no inter-word short pause.
    let r1_transcripts: Vec<Vec<String>> = train
        .iter()
        .map(|utt| remap_truth(utt, &remap, &sp_id, false))
        .collect::<Result<_>>()
        .map_err(|e| stage("reestimate", e))?;
    let r1_utts: Vec<(&FrameSet, Vec<String>)> = train
        .iter()
        .zip(&r1_transcripts)
        .map(|(utt, labels)| (&utt.frames, labels.clone()))
        .collect();
    if config.r1 > 0 {
        let report =
            baum_welch(&mut models, &r1_utts, config.r1).map_err(|e| stage("reestimate", e))?;
        for _ in 0..config.r1 {
            trace.push("reestimate".to_string());
        }
        blocks.push(report.log_likelihoods);
        record_train_warnings(&mut warnings, "r1", &report.skipped, &report.warnings);
    } else {
        blocks.push(Vec::new());
    }

    // Tie silence and short pause.
    trace.push("tie-sil-sp".to_string());
    tie_silence_models(&mut models, &sil_id, &sp_id).map_err(|e| stage("tie-sil-sp", e))?;

    // Second block: short pause between every word pair.
    let r2_utts: Vec<(&FrameSet, Vec<String>)> = train
        .iter()
        .map(|utt| {
            let mut labels = vec![sil_id.clone()];
            let t = words_to_visemes(&corpus.dict, &corpus.map, &utt.words)?;
            for (k, unit) in t.units.iter().enumerate() {
                if unit.word_start && k > 0 {
                    labels.push(sp_id.clone());
                }
                let id = VisemeId::new(&unit.label)?;
                labels.push(
                    remap
                        .get(&id)
                        .ok_or_else(|| Error::UnknownLabel(unit.label.clone()))?
                        .as_str()
                        .to_string(),
                );
            }
            labels.push(sil_id.clone());
            Ok((&utt.frames, labels))
        })
        .collect::<Result<_>>()
        .map_err(|e: Error| stage("reestimate", e))?;
    if config.r2 > 0 {
        let report =
            baum_welch(&mut models, &r2_utts, config.r2).map_err(|e| stage("reestimate", e))?;
        for _ in 0..config.r2 {
            trace.push("reestimate".to_string());
        }
        blocks.push(report.log_likelihoods);
        record_train_warnings(&mut warnings, "r2", &report.skipped, &report.warnings);
    } else {
        blocks.push(Vec::new());
    }

    // Forced alignment with word break points.
    trace.push("force-align".to_string());
    let expansions = word_expansions(corpus, &merged).map_err(|e| stage("force-align", e))?;
    let align_opts = AlignOptions {
        boundary_silence: true,
        optional_short_pause: true,
        sil_label: sil_id.clone(),
        sp_label: sp_id.clone(),
        record_states: false,
    };
    let mut aligned_utts: Vec<(&FrameSet, Vec<String>)> = Vec::with_capacity(train.len());
    for utt in &train {
        match force_align(&models, &utt.frames, &utt.words, &expansions, &align_opts) {
            Ok(out) => {
                let labels: Vec<String> =
                    out.segments.iter().map(|s| s.label.clone()).collect();
                aligned_utts.push((&utt.frames, labels));
            }
            Err(Error::InfeasibleAlignment { frames, min_frames }) => {
                warnings.push(format!(
                    "force-align: dropped an utterance ({frames} frames, needs {min_frames})"
                ));
            }
            Err(e) => return Err(stage("force-align", e)),
        }
    }
    if aligned_utts.is_empty() {
        return Err(stage(
            "force-align",
            Error::EmptyData("no utterance could be aligned".to_string()),
        ));
    }

    // Third block on the force-aligned transcripts.
    if config.r3 > 0 {
        let report = baum_welch(&mut models, &aligned_utts, config.r3)
            .map_err(|e| stage("reestimate", e))?;
        for _ in 0..config.r3 {
            trace.push("reestimate".to_string());
        }
        blocks.push(report.log_likelihoods);
        record_train_warnings(&mut warnings, "r3", &report.skipped, &report.warnings);
    } else {
        blocks.push(Vec::new());
    }

    // Bigram word network over the training fold.
    trace.push("bigram-network".to_string());
    let train_lines_words: Vec<Vec<String>> =
        train.iter().map(|utt| utt.words.clone()).collect();
    let lm = estimate_bigram(&train_lines_words, config.lm_floor)
        .map_err(|e| stage("bigram-network", e))?;
    let network = build_network(
        &lm,
        &expansions,
        NetworkOptions {
            boundary_silence: true,
            optional_short_pause: true,
            sil_label: sil_id.clone(),
            sp_label: sp_id.clone(),
        },
    )
    .map_err(|e| stage("bigram-network", e))?;

    Ok(TrainedFold {
        merged_map: merged,
        models,
        network,
        expansions,
        sil_id,
        sp_id,
        reestimation_blocks: blocks,
        trace,
        warnings,
    })
}

/// Run one fold of the recipe: train, decode the test lines, score.
pub fn run_fold(
    config: &RecipeConfig,
    corpus: &Corpus,
    fold: &Fold,
    fold_index: usize,
) -> Result<FoldOutcome> {
    let stage = |name: &str, e: Error| e.in_stage(name);
    if fold.test.is_empty() {
        return Err(Error::EmptyData(format!(
            "fold {fold_index} has an empty test set"
        )));
    }
    let mut trained = train_models(config, corpus, &fold.train)?;
    let remap = corpus
        .map
        .remap_to(&trained.merged_map)
        .map_err(|e| stage("score", e))?;

    // Decode the test fold.
    trained.trace.push("decode".to_string());
    let params = DecodeParams {
        lm_scale: config.lm_scale,
        insertion_penalty: config.insertion_penalty,
    };
    let test: Vec<(usize, &Utterance)> = fold
        .test
        .iter()
        .map(|&i| (i, &corpus.utterances[i]))
        .collect();
    let mut hypotheses = Vec::with_capacity(test.len());
    for &(line, utt) in &test {
        let out = viterbi_decode(&trained.models, &trained.network, &utt.frames, &params)
            .map_err(|e| stage("decode", e))?;
        hypotheses.push((line, out));
    }

    // Score against the remapped ground truth, short pauses excluded.
    trained.trace.push("score".to_string());
    let class_labels: Vec<String> = trained
        .merged_map
        .class_ids()
        .filter(|id| id.as_str() != trained.sp_id)
        .map(|id| id.as_str().to_string())
        .collect();
    let mut alignments = Vec::with_capacity(test.len());
    for (&(_, utt), (_, hyp)) in test.iter().zip(&hypotheses) {
        let reference =
            remap_truth(utt, &remap, &trained.sp_id, false).map_err(|e| stage("score", e))?;
        let hyp_labels: Vec<String> = hyp
            .transcript
            .units
            .iter()
            .map(|u| u.label.clone())
            .filter(|l| l != &trained.sp_id)
            .collect();
        alignments.push(align_labels(&reference, &hyp_labels, &EditCosts::default()));
    }
    let report = score(&alignments).map_err(|e| stage("score", e))?;
    let cm = confusion(&alignments, &class_labels).map_err(|e| stage("score", e))?;

    Ok(FoldOutcome {
        fold_index,
        merged_map: trained.merged_map,
        models: trained.models,
        network: trained.network,
        hypotheses,
        score: report,
        confusion: cm,
        reestimation_blocks: trained.reestimation_blocks,
        trace: trained.trace,
        warnings: trained.warnings,
    })
}

/// Per-word pronunciation variants expanded to merged viseme strings,
/// duplicates removed.
pub fn word_expansions(
    corpus: &Corpus,
    merged: &VisemeMap,
) -> Result<BTreeMap<String, Vec<Vec<String>>>> {
    let mut out = BTreeMap::new();
    for word in corpus.dict.words() {
        let mut variants: Vec<Vec<String>> = Vec::new();
        for phones in corpus.dict.variants(word).expect("word from dict") {
            let mut expansion = Vec::with_capacity(phones.len());
            for p in phones {
                expansion.push(merged.class_of(p)?.as_str().to_string());
            }
            if !variants.contains(&expansion) {
                variants.push(expansion);
            }
        }
        out.insert(word.clone(), variants);
    }
    Ok(out)
}

fn record_train_warnings(
    warnings: &mut Vec<String>,
    block: &str,
    skipped: &[(usize, String)],
    train_warnings: &[String],
) {
    for (index, reason) in skipped {
        warnings.push(format!("{block}: skipped utterance {index}: {reason}"));
    }
    for w in train_warnings {
        warnings.push(format!("{block}: {w}"));
    }
}
