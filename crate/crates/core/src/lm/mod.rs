//! Bigram language models and the word-level decoding network.

use crate::error::{Error, Result};
use crate::textio;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

/// Sentence-start marker.
pub const SENTENCE_START: &str = "<s>";
/// Sentence-end marker.
pub const SENTENCE_END: &str = "</s>";

/// A floored maximum-likelihood bigram model. Each training transcript is
/// one sentence: counts include start and end markers per line.
#[derive(Debug, Clone, PartialEq)]
pub struct BigramLm {
    vocab: Vec<String>,
    /// predecessor -> successor -> probability (linear space).
    rows: BTreeMap<String, BTreeMap<String, f64>>,
    floor: f64,
}

/// Estimate a bigram model with absolute flooring.
///
/// Probabilities below the floor are pinned at the floor and the remaining
/// entries rescaled, repeating until every probability in a row is at least
/// the floor and the row sums to one.
pub fn estimate_bigram(transcripts: &[Vec<String>], floor: f64) -> Result<BigramLm> {
    let mut vocab: BTreeSet<String> = BTreeSet::new();
    for t in transcripts {
        for w in t {
            vocab.insert(w.clone());
        }
    }
    if vocab.is_empty() {
        return Err(Error::EmptyData("no words in training transcripts".to_string()));
    }
    // Successor space: vocabulary plus the end marker.
    let n_succ = vocab.len() + 1;
    if floor < 0.0 || (floor > 0.0 && floor * n_succ as f64 >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "floor {floor} leaves no probability mass over {n_succ} successors"
        )));
    }

    let mut counts: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for t in transcripts {
        if t.is_empty() {
            continue;
        }
        let mut prev = SENTENCE_START.to_string();
        for w in t {
            *counts.entry(prev).or_default().entry(w.clone()).or_insert(0) += 1;
            prev = w.clone();
        }
        *counts
            .entry(prev)
            .or_default()
            .entry(SENTENCE_END.to_string())
            .or_insert(0) += 1;
    }

    let successors: Vec<String> = vocab
        .iter()
        .cloned()
        .chain(std::iter::once(SENTENCE_END.to_string()))
        .collect();
    let predecessors: Vec<String> = std::iter::once(SENTENCE_START.to_string())
        .chain(vocab.iter().cloned())
        .collect();

    let mut rows = BTreeMap::new();
    for pred in &predecessors {
        let row_counts = counts.get(pred);
        let total: u64 = row_counts.map(|r| r.values().sum()).unwrap_or(0);
        if total == 0 {
            // Unreachable for words drawn from the transcripts: every
            // occurrence contributes a successor or end-marker count.
            continue;
        }
        let mut probs: BTreeMap<String, f64> = successors
            .iter()
            .map(|s| {
                let c = row_counts.and_then(|r| r.get(s)).copied().unwrap_or(0);
                let ml = if total > 0 { c as f64 / total as f64 } else { 0.0 };
                (s.clone(), ml)
            })
            .collect();
        if floor > 0.0 {
            water_fill(&mut probs, floor);
        } else {
            probs.retain(|_, p| *p > 0.0);
        }
        if !probs.is_empty() {
            rows.insert(pred.clone(), probs);
        }
    }

    Ok(BigramLm {
        vocab: vocab.into_iter().collect(),
        rows,
        floor,
    })
}

/// Pin entries below the floor at the floor and rescale the rest to keep
/// the row stochastic; repeat until stable.
fn water_fill(probs: &mut BTreeMap<String, f64>, floor: f64) {
    loop {
        let pinned: Vec<String> = probs
            .iter()
            .filter(|(_, &p)| p < floor)
            .map(|(k, _)| k.clone())
            .collect();
        let pinned_before: usize = probs.values().filter(|&&p| p == floor).count();
        let pinned_mass = floor * (pinned.len() + pinned_before) as f64;
        let free_mass: f64 = probs
            .values()
            .filter(|&&p| p > floor)
            .sum();
        if pinned.is_empty() {
            break;
        }
        let scale = (1.0 - pinned_mass) / free_mass;
        for (k, p) in probs.iter_mut() {
            if pinned.contains(k) || *p == floor {
                *p = floor;
            } else {
                *p *= scale;
            }
        }
    }
}

impl BigramLm {
    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Linear-space probability; zero for unseen pairs under a zero floor.
    pub fn prob(&self, predecessor: &str, successor: &str) -> f64 {
        self.rows
            .get(predecessor)
            .and_then(|r| r.get(successor))
            .copied()
            .unwrap_or(0.0)
    }

    /// Log probability; negative infinity for impossible pairs.
    pub fn log_prob(&self, predecessor: &str, successor: &str) -> f64 {
        let p = self.prob(predecessor, successor);
        if p > 0.0 {
            p.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Successors of a predecessor with positive probability.
    pub fn successors(&self, predecessor: &str) -> impl Iterator<Item = (&str, f64)> {
        self.rows
            .get(predecessor)
            .into_iter()
            .flat_map(|r| r.iter().map(|(s, &p)| (s.as_str(), p)))
    }
}

/// Options controlling network construction.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkOptions {
    /// Append a mandatory silence model at utterance start and end.
    pub boundary_silence: bool,
    /// Allow an optional short pause after each word.
    pub optional_short_pause: bool,
    pub sil_label: String,
    pub sp_label: String,
}

impl Default for NetworkOptions {
    fn default() -> NetworkOptions {
        NetworkOptions {
            boundary_silence: true,
            optional_short_pause: true,
            sil_label: "sil".to_string(),
            sp_label: "sp".to_string(),
        }
    }
}

/// A bigram-weighted word graph with per-word viseme expansions. Arc
/// weights are the raw bigram log probabilities; scale and insertion
/// penalty are decoder parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct WordNetwork {
    /// `(from, to, logp)` arcs, lexicographically ordered. Node names are
    /// vocabulary words plus the sentence markers.
    pub arcs: Vec<(String, String, f64)>,
    /// Word to pronunciation variants, each a viseme label string.
    pub expansions: BTreeMap<String, Vec<Vec<String>>>,
    pub options: NetworkOptions,
}

/// Build the decoding network: the bigram graph restricted to positive
/// probability arcs, with expansions attached.
pub fn build_network(
    lm: &BigramLm,
    expansions: &BTreeMap<String, Vec<Vec<String>>>,
    options: NetworkOptions,
) -> Result<WordNetwork> {
    for w in lm.vocab() {
        match expansions.get(w) {
            Some(variants) if !variants.is_empty() && variants.iter().all(|v| !v.is_empty()) => {}
            _ => return Err(Error::MissingExpansion(w.clone())),
        }
    }
    let mut arcs = Vec::new();
    let mut preds: Vec<&str> = vec![SENTENCE_START];
    preds.extend(lm.vocab().iter().map(|s| s.as_str()));
    for pred in preds {
        for (succ, p) in lm.successors(pred) {
            if p > 0.0 {
                arcs.push((pred.to_string(), succ.to_string(), p.ln()));
            }
        }
    }
    arcs.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    let expansions: BTreeMap<String, Vec<Vec<String>>> = lm
        .vocab()
        .iter()
        .map(|w| (w.clone(), expansions[w].clone()))
        .collect();
    let network = WordNetwork {
        arcs,
        expansions,
        options,
    };
    network.check_reachability()?;
    Ok(network)
}

impl WordNetwork {
    pub fn words(&self) -> impl Iterator<Item = &String> {
        self.expansions.keys()
    }

    /// Every word must be reachable from the start marker and co-reachable
    /// to the end marker.
    pub fn check_reachability(&self) -> Result<()> {
        let mut forward: BTreeSet<&str> = BTreeSet::new();
        let mut frontier = vec![SENTENCE_START];
        while let Some(node) = frontier.pop() {
            for (from, to, _) in &self.arcs {
                if from == node && forward.insert(to) {
                    frontier.push(to);
                }
            }
        }
        let mut backward: BTreeSet<&str> = BTreeSet::new();
        let mut frontier = vec![SENTENCE_END];
        while let Some(node) = frontier.pop() {
            for (from, to, _) in &self.arcs {
                if to == node && backward.insert(from) {
                    frontier.push(from);
                }
            }
        }
        for w in self.words() {
            if !forward.contains(w.as_str()) || !backward.contains(w.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "word '{w}' is not on a start-to-end path"
                )));
            }
        }
        Ok(())
    }

    /// Canonical text form: header, sorted arc list, sorted expansions.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "network sil={} sp={} boundary_silence={} optional_short_pause={}\n",
            self.options.sil_label,
            self.options.sp_label,
            self.options.boundary_silence,
            self.options.optional_short_pause
        ));
        for (from, to, w) in &self.arcs {
            out.push_str(&format!("arc {from} {to} {}\n", textio::fmt_f64(*w)));
        }
        for (word, variants) in &self.expansions {
            for v in variants {
                out.push_str(&format!("expansion {word} {}\n", v.join(" ")));
            }
        }
        out
    }

    pub fn parse(text: &str, path: &str) -> Result<WordNetwork> {
        let mut options = None;
        let mut arcs = Vec::new();
        let mut expansions: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
        for (lineno, line) in textio::content_lines(text) {
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "network" => {
                    let mut opts = NetworkOptions::default();
                    for kv in &fields[1..] {
                        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Parse {
                            path: path.to_string(),
                            line: lineno,
                            msg: format!("expected key=value, got '{kv}'"),
                        })?;
                        match k {
                            "sil" => opts.sil_label = v.to_string(),
                            "sp" => opts.sp_label = v.to_string(),
                            "boundary_silence" => opts.boundary_silence = v == "true",
                            "optional_short_pause" => opts.optional_short_pause = v == "true",
                            _ => {
                                return Err(Error::Parse {
                                    path: path.to_string(),
                                    line: lineno,
                                    msg: format!("unknown network option '{k}'"),
                                })
                            }
                        }
                    }
                    options = Some(opts);
                }
                "arc" if fields.len() == 4 => {
                    arcs.push((
                        fields[1].to_string(),
                        fields[2].to_string(),
                        textio::parse_f64(fields[3], path, lineno)?,
                    ));
                }
                "expansion" if fields.len() >= 3 => {
                    expansions
                        .entry(fields[1].to_string())
                        .or_default()
                        .push(fields[2..].iter().map(|s| s.to_string()).collect());
                }
                _ => {
                    return Err(Error::Parse {
                        path: path.to_string(),
                        line: lineno,
                        msg: format!("unrecognized line '{line}'"),
                    })
                }
            }
        }
        Ok(WordNetwork {
            arcs,
            expansions,
            options: options.ok_or_else(|| Error::Parse {
                path: path.to_string(),
                line: 0,
                msg: "missing network header".to_string(),
            })?,
        })
    }

    pub fn read(path: &Path) -> Result<WordNetwork> {
        WordNetwork::parse(&textio::read_file(path)?, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        textio::write_file(path, &self.to_text())
    }
}
