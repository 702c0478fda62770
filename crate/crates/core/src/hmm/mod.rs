//! Gaussian-mixture hidden Markov models.
//!
//! Each model is left-to-right with self-loops: a non-emitting entry state,
//! `n_states` emitting states with diagonal-covariance Gaussian mixtures,
//! and a non-emitting exit. A positive entry-to-exit transition makes a
//! model a "tee" that can absorb zero frames (the short-pause topology).
//!
//! All probability math runs in log space. Emission parameters of states
//! sharing a tie tag are pooled during re-estimation and written back
//! identically, so tied states stay bitwise equal.

mod align;
mod decode;
mod graph;
mod io;
mod train;

pub use align::{force_align, AlignOptions, AlignedSegment, AlignmentOutput};
pub use decode::{viterbi_decode, DecodeOutput, DecodeParams};
pub use train::{baum_welch, TrainReport};

use crate::error::{Error, Result};
use crate::frames::FrameSet;
use std::collections::BTreeMap;

pub(crate) const LOG_2PI: f64 = 1.8378770664093453;

/// Numerically-stable log of a sum of exponentials.
pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// One diagonal-covariance Gaussian mixture component.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl GaussComponent {
    /// Log density at `x` under the diagonal Gaussian.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for ((&xi, &mi), &vi) in x.iter().zip(&self.mean).zip(&self.var) {
            let d = xi - mi;
            acc += LOG_2PI + vi.ln() + d * d / vi;
        }
        -0.5 * acc
    }
}

/// The Gaussian mixture of one emitting state.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureState {
    pub components: Vec<GaussComponent>,
}

impl MixtureState {
    /// Log likelihood of a frame under the mixture.
    pub fn log_likelihood(&self, x: &[f64]) -> f64 {
        let joints: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.weight.ln() + c.log_density(x))
            .collect();
        log_sum_exp(&joints)
    }

    /// Per-component `ln w_m + ln N_m(x)`, appended to `out`.
    pub(crate) fn component_log_joints(&self, x: &[f64], out: &mut Vec<f64>) {
        for c in &self.components {
            out.push(c.weight.ln() + c.log_density(x));
        }
    }
}

/// A left-to-right GMM-HMM with non-emitting entry and exit states.
///
/// `trans` is the flattened `(n_states + 2) x (n_states + 2)` transition
/// matrix in linear space; index 0 is the entry, `n_states + 1` the exit.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmHmm {
    pub label: String,
    pub n_states: usize,
    pub trans: Vec<f64>,
    pub states: Vec<MixtureState>,
    /// Per-state tie tags; states sharing a tag share emission parameters.
    pub tie_tags: Vec<Option<String>>,
}

impl GmmHmm {
    pub fn order(&self) -> usize {
        self.n_states + 2
    }

    pub fn tr(&self, from: usize, to: usize) -> f64 {
        self.trans[from * self.order() + to]
    }

    pub fn tr_mut(&mut self, from: usize, to: usize) -> &mut f64 {
        let order = self.order();
        &mut self.trans[from * order + to]
    }

    /// True when the model can pass from entry to exit without emitting.
    pub fn is_tee(&self) -> bool {
        self.tr(0, self.n_states + 1) > 0.0
    }

    /// Fewest frames a path through the model can emit.
    pub fn min_duration(&self) -> usize {
        // Shortest path over positive arcs; each emitting state costs one.
        let order = self.order();
        let mut dist = vec![usize::MAX; order];
        dist[0] = 0;
        // Left-to-right: a single forward sweep settles all distances.
        for from in 0..order {
            if dist[from] == usize::MAX {
                continue;
            }
            for to in (from + 1).max(1)..order {
                if self.tr(from, to) > 0.0 {
                    let cost = if to <= self.n_states { 1 } else { 0 };
                    dist[to] = dist[to].min(dist[from] + cost);
                }
            }
        }
        dist[self.n_states + 1]
    }

    /// Check row stochasticity, topology, weight normalization and the
    /// variance floor.
    pub fn validate(&self, var_floor: &[f64]) -> Result<()> {
        let order = self.order();
        if self.states.len() != self.n_states || self.tie_tags.len() != self.n_states {
            return Err(Error::InvalidParameter(format!(
                "model '{}' has inconsistent state counts",
                self.label
            )));
        }
        for from in 0..order - 1 {
            let row_sum: f64 = (0..order).map(|to| self.tr(from, to)).sum();
            let has_arcs = row_sum > 0.0;
            if has_arcs && (row_sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "model '{}' row {from} sums to {row_sum}",
                    self.label
                )));
            }
            for to in 0..order {
                let p = self.tr(from, to);
                if p < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "model '{}' has negative transition", self.label
                    )));
                }
                let backward = p > 0.0 && (to < from || (to == from && from == 0) || to == 0);
                if backward {
                    return Err(Error::InvalidParameter(format!(
                        "model '{}' has a backward transition {from}->{to}",
                        self.label
                    )));
                }
            }
        }
        for (si, state) in self.states.iter().enumerate() {
            let wsum: f64 = state.components.iter().map(|c| c.weight).sum();
            if (wsum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "model '{}' state {si} weights sum to {wsum}",
                    self.label
                )));
            }
            for c in &state.components {
                for (d, (&v, &floor)) in c.var.iter().zip(var_floor).enumerate() {
                    if v < floor - 1e-15 {
                        return Err(Error::InvalidParameter(format!(
                            "model '{}' state {si} dim {d} variance {v} below floor {floor}",
                            self.label
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A bank of models sharing one feature dimension, plus the global data
/// statistics flat start derived the bank from.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    pub feature_dim: usize,
    pub global_mean: Vec<f64>,
    pub global_var: Vec<f64>,
    pub var_floor: Vec<f64>,
    models: BTreeMap<String, GmmHmm>,
}

impl ModelSet {
    /// An empty set with the given dimension and global statistics.
    pub fn new(
        feature_dim: usize,
        global_mean: Vec<f64>,
        global_var: Vec<f64>,
        var_floor: Vec<f64>,
    ) -> ModelSet {
        ModelSet {
            feature_dim,
            global_mean,
            global_var,
            var_floor,
            models: BTreeMap::new(),
        }
    }

    pub fn get(&self, label: &str) -> Result<&GmmHmm> {
        self.models
            .get(label)
            .ok_or_else(|| Error::MissingModel(label.to_string()))
    }

    pub fn get_mut(&mut self, label: &str) -> Result<&mut GmmHmm> {
        self.models
            .get_mut(label)
            .ok_or_else(|| Error::MissingModel(label.to_string()))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.models.contains_key(label)
    }

    pub fn insert(&mut self, model: GmmHmm) {
        self.models.insert(model.label.clone(), model);
    }

    pub fn labels(&self) -> impl Iterator<Item = &String> {
        self.models.keys()
    }

    pub fn models(&self) -> impl Iterator<Item = &GmmHmm> {
        self.models.values()
    }

    pub(crate) fn models_mut(&mut self) -> impl Iterator<Item = &mut GmmHmm> {
        self.models.values_mut()
    }

    pub fn validate(&self) -> Result<()> {
        for m in self.models.values() {
            m.validate(&self.var_floor)?;
        }
        // Tied states must hold identical parameters.
        let mut by_tag: BTreeMap<&str, &MixtureState> = BTreeMap::new();
        for m in self.models.values() {
            for (s, tag) in m.tie_tags.iter().enumerate() {
                if let Some(tag) = tag {
                    match by_tag.get(tag.as_str()) {
                        None => {
                            by_tag.insert(tag, &m.states[s]);
                        }
                        Some(first) => {
                            if *first != &m.states[s] {
                                return Err(Error::InvalidParameter(format!(
                                    "tie tag '{tag}' members diverged"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Flat-start options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatStartOptions {
    /// Scale of the deterministic component jitter; zero leaves every
    /// component at the global mean.
    pub jitter: f64,
}

impl Default for FlatStartOptions {
    fn default() -> FlatStartOptions {
        FlatStartOptions { jitter: 0.2 }
    }
}

/// Initialize one model per label from the global data statistics: every
/// state gets the global mean and variance, mixture weights are uniform,
/// transitions are uniform over the allowed left-to-right arcs.
///
/// Component `j` of an `M`-component mixture has its mean offset by
/// `jitter * sigma * (j - (M-1)/2) / M` per dimension so identical
/// components can diverge under re-estimation.
pub fn flat_start(
    labels: &[String],
    n_states: usize,
    n_mix: usize,
    data: &FrameSet,
    options: &FlatStartOptions,
) -> Result<(ModelSet, Vec<String>)> {
    if n_states < 1 || n_mix < 1 {
        return Err(Error::InvalidParameter(
            "flat start needs at least one state and one mixture component".to_string(),
        ));
    }
    if data.is_empty() {
        return Err(Error::EmptyData("flat start needs training frames".to_string()));
    }
    let dim = data.dim();
    let n = data.len() as f64;
    let mut mean = vec![0.0; dim];
    for frame in data.iter() {
        for (m, &x) in mean.iter_mut().zip(frame) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; dim];
    for frame in data.iter() {
        for ((v, &x), &m) in var.iter_mut().zip(frame).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let mut warnings = Vec::new();
    for (d, v) in var.iter_mut().enumerate() {
        *v /= n;
        if *v <= 0.0 {
            *v = 1e-8;
            warnings.push(format!("flat start: dimension {d} has zero variance, floored"));
        }
    }
    let var_floor: Vec<f64> = var.iter().map(|&v| 1e-4 * v).collect();

    let mut set = ModelSet {
        feature_dim: dim,
        global_mean: mean.clone(),
        global_var: var.clone(),
        var_floor,
        models: BTreeMap::new(),
    };
    for label in labels {
        let order = n_states + 2;
        let mut trans = vec![0.0; order * order];
        trans[1] = 1.0; // entry row
        for s in 1..=n_states {
            let next = if s == n_states { n_states + 1 } else { s + 1 };
            trans[s * order + s] = 0.5;
            trans[s * order + next] = 0.5;
        }
        let state = MixtureState {
            components: (0..n_mix)
                .map(|j| {
                    let offset = (j as f64 - (n_mix as f64 - 1.0) / 2.0) / n_mix as f64;
                    GaussComponent {
                        weight: 1.0 / n_mix as f64,
                        mean: mean
                            .iter()
                            .zip(&var)
                            .map(|(&m, &v)| m + options.jitter * v.sqrt() * offset)
                            .collect(),
                        var: var.clone(),
                    }
                })
                .collect(),
        };
        set.insert(GmmHmm {
            label: label.clone(),
            n_states,
            trans,
            states: vec![state; n_states],
            tie_tags: vec![None; n_states],
        });
    }
    Ok((set, warnings))
}

/// Tie the short-pause model to the silence model: `sp` becomes a single
/// emitting state sharing parameters with silence's middle state, plus a
/// tee transition so it can absorb zero frames between words.
pub fn tie_silence_models(models: &mut ModelSet, sil_label: &str, sp_label: &str) -> Result<()> {
    if !models.contains(sp_label) {
        return Err(Error::MissingModel(sp_label.to_string()));
    }
    let tag = format!("tie:{sil_label}:{sp_label}");
    let mid_state = {
        let sil = models.get_mut(sil_label)?;
        let mid = sil.n_states / 2;
        sil.tie_tags[mid] = Some(tag.clone());
        sil.states[mid].clone()
    };
    let order = 3;
    let mut trans = vec![0.0; order * order];
    trans[1] = 0.5; // entry row: emit or skip
    trans[2] = 0.5;
    trans[1 * order + 1] = 0.5;
    trans[1 * order + 2] = 0.5;
    models.insert(GmmHmm {
        label: sp_label.to_string(),
        n_states: 1,
        trans,
        states: vec![mid_state],
        tie_tags: vec![Some(tag)],
    });
    Ok(())
}
