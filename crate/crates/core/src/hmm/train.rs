//! Embedded Baum-Welch re-estimation.
//!
//! Each utterance trains against the concatenation of the models named by
//! its transcript, with no fixed segment boundaries and no pruning. The
//! composite is a chain of models joined at non-emitting junctions; tee
//! models pass junction probability through without emitting. All
//! recursions run in log space.
//!
//! Per iteration the trainer accumulates, over every utterance, state and
//! mixture occupancies plus transition counts, then re-estimates means,
//! diagonal variances, mixture weights and transition rows. Accumulators of
//! states sharing a tie tag are pooled and written back identically.

use super::{log_add, log_sum_exp, GaussComponent, GmmHmm, MixtureState, ModelSet};
use crate::error::{Error, Result};
use crate::frames::FrameSet;
use std::collections::BTreeMap;

/// Occupancy below which a mixture component is reset to the global
/// statistics.
const STARVED_OCCUPANCY: f64 = 2.0;
/// Weight a reset component re-enters with, before renormalization.
const RESET_WEIGHT: f64 = 1e-3;
/// State occupancy below which the previous parameters are kept.
const STATE_OCC_EPS: f64 = 1e-6;

/// Outcome of a re-estimation run.
#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    /// Total corpus log-likelihood per iteration, evaluated under the
    /// parameters that iteration started from.
    pub log_likelihoods: Vec<f64>,
    /// Utterances skipped, with reasons (recorded on the first iteration).
    pub skipped: Vec<(usize, String)>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
struct CompAcc {
    occ: f64,
    sum: Vec<f64>,
    sqsum: Vec<f64>,
}

#[derive(Debug, Clone)]
struct StateAcc {
    comps: Vec<CompAcc>,
}

impl StateAcc {
    fn new(n_comps: usize, dim: usize) -> StateAcc {
        StateAcc {
            comps: vec![
                CompAcc {
                    occ: 0.0,
                    sum: vec![0.0; dim],
                    sqsum: vec![0.0; dim],
                };
                n_comps
            ],
        }
    }

    fn total_occ(&self) -> f64 {
        self.comps.iter().map(|c| c.occ).sum()
    }

    fn merge(&mut self, other: &StateAcc) {
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            a.occ += b.occ;
            for (x, y) in a.sum.iter_mut().zip(&b.sum) {
                *x += y;
            }
            for (x, y) in a.sqsum.iter_mut().zip(&b.sqsum) {
                *x += y;
            }
        }
    }
}

#[derive(Debug, Clone)]
struct ModelAcc {
    trans: Vec<f64>,
    states: Vec<StateAcc>,
}

/// Per-label emission tables for one utterance.
struct LabelEmissions {
    /// `state * T + t` -> mixture log likelihood.
    state_ll: Vec<f64>,
    /// Per state: `t * n_comps + m` -> `ln w_m + ln N_m`.
    comp_ll: Vec<Vec<f64>>,
}

/// Embedded re-estimation of every model named by the transcripts.
///
/// Utterances shorter than the minimal path through their transcript are
/// skipped with a warning; an error is returned only when every utterance
/// is skipped.
pub fn baum_welch(
    models: &mut ModelSet,
    utterances: &[(&FrameSet, Vec<String>)],
    iterations: usize,
) -> Result<TrainReport> {
    if iterations < 1 {
        return Err(Error::InvalidParameter(
            "re-estimation needs at least one iteration".to_string(),
        ));
    }
    let mut report = TrainReport::default();
    for iteration in 0..iterations {
        let mut accs: BTreeMap<String, ModelAcc> = BTreeMap::new();
        let mut ll = 0.0;
        let mut used = 0usize;
        for (index, (frames, labels)) in utterances.iter().enumerate() {
            match accumulate_utterance(models, frames, labels, &mut accs)? {
                Some(utt_ll) => {
                    ll += utt_ll;
                    used += 1;
                }
                None => {
                    if iteration == 0 {
                        report.skipped.push((
                            index,
                            format!(
                                "{} frames cannot fit a {}-label transcript",
                                frames.len(),
                                labels.len()
                            ),
                        ));
                    }
                }
            }
        }
        if used == 0 {
            return Err(Error::EmptyData(
                "every utterance was skipped during re-estimation".to_string(),
            ));
        }
        report.log_likelihoods.push(ll);
        apply_updates(models, &accs, &mut report.warnings);
    }
    Ok(report)
}

/// Forward-backward one utterance and add its statistics to `accs`.
/// Returns the utterance log-likelihood, or `None` when skipped.
fn accumulate_utterance(
    models: &ModelSet,
    frames: &FrameSet,
    labels: &[String],
    accs: &mut BTreeMap<String, ModelAcc>,
) -> Result<Option<f64>> {
    let t_len = frames.len();
    if labels.is_empty() || t_len == 0 {
        return Ok(None);
    }
    if frames.dim() != models.feature_dim {
        return Err(Error::DimensionMismatch {
            expected: models.feature_dim,
            got: frames.dim(),
        });
    }
    let slots: Vec<&GmmHmm> = labels
        .iter()
        .map(|l| models.get(l))
        .collect::<Result<_>>()?;
    let min_len: usize = slots.iter().map(|m| m.min_duration()).sum();
    if t_len < min_len {
        return Ok(None);
    }

    // Emission tables per distinct label.
    let mut emissions: BTreeMap<&str, LabelEmissions> = BTreeMap::new();
    for model in &slots {
        if emissions.contains_key(model.label.as_str()) {
            continue;
        }
        let n = model.n_states;
        let mut state_ll = vec![0.0; n * t_len];
        let mut comp_ll = Vec::with_capacity(n);
        for (s, state) in model.states.iter().enumerate() {
            let m_comps = state.components.len();
            let mut joints = vec![0.0; t_len * m_comps];
            for (t, frame) in frames.iter().enumerate() {
                let mut tmp = Vec::with_capacity(m_comps);
                state.component_log_joints(frame, &mut tmp);
                state_ll[s * t_len + t] = log_sum_exp(&tmp);
                joints[t * m_comps..(t + 1) * m_comps].copy_from_slice(&tmp);
            }
            comp_ll.push(joints);
        }
        emissions.insert(
            model.label.as_str(),
            LabelEmissions { state_ll, comp_ll },
        );
    }
    let b = |slot: usize, s: usize, t: usize| -> f64 {
        emissions[slots[slot].label.as_str()].state_ll[s * t_len + t]
    };

    let k_slots = slots.len();
    let base: Vec<usize> = slots
        .iter()
        .scan(0usize, |acc, m| {
            let b = *acc;
            *acc += m.n_states;
            Some(b)
        })
        .collect();
    let c_total: usize = slots.iter().map(|m| m.n_states).sum();
    let lin = |i: usize, s: usize| log_prob(slots[i].tr(0, s + 1));
    let lout = |i: usize, s: usize| log_prob(slots[i].tr(s + 1, slots[i].n_states + 1));
    let lskip = |i: usize| log_prob(slots[i].tr(0, slots[i].n_states + 1));
    let ltr = |i: usize, s: usize, s2: usize| log_prob(slots[i].tr(s + 1, s2 + 1));

    const NEG: f64 = f64::NEG_INFINITY;
    let idx = |t: usize, c: usize| t * c_total + c;
    let jdx = |t: usize, j: usize| t * (k_slots + 1) + j;

    // Junction cascade before any frame.
    let mut alpha_pre = vec![NEG; k_slots + 1];
    alpha_pre[0] = 0.0;
    for j in 1..=k_slots {
        alpha_pre[j] = alpha_pre[j - 1] + lskip(j - 1);
    }

    let mut alpha = vec![NEG; t_len * c_total];
    let mut alpha_j = vec![NEG; t_len * (k_slots + 1)];
    for t in 0..t_len {
        for i in 0..k_slots {
            for s in 0..slots[i].n_states {
                let c = base[i] + s;
                let from_entry = if t == 0 {
                    alpha_pre[i] + lin(i, s)
                } else {
                    alpha_j[jdx(t - 1, i)] + lin(i, s)
                };
                let mut acc = from_entry;
                if t > 0 {
                    for s2 in 0..slots[i].n_states {
                        let w = ltr(i, s2, s);
                        if w == NEG {
                            continue;
                        }
                        acc = log_add(acc, alpha[idx(t - 1, base[i] + s2)] + w);
                    }
                }
                alpha[idx(t, c)] = if acc == NEG { NEG } else { acc + b(i, s, t) };
            }
        }
        alpha_j[jdx(t, 0)] = NEG;
        for j in 1..=k_slots {
            let i = j - 1;
            let mut acc = alpha_j[jdx(t, j - 1)] + lskip(i);
            for s in 0..slots[i].n_states {
                let w = lout(i, s);
                if w == NEG {
                    continue;
                }
                acc = log_add(acc, alpha[idx(t, base[i] + s)] + w);
            }
            alpha_j[jdx(t, j)] = acc;
        }
    }
    let log_p = alpha_j[jdx(t_len - 1, k_slots)];
    if log_p == NEG {
        // Numerically impossible path despite the length check.
        return Ok(None);
    }

    // Backward.
    let mut beta_post = vec![NEG; k_slots + 1];
    beta_post[k_slots] = 0.0;
    for j in (0..k_slots).rev() {
        beta_post[j] = lskip(j) + beta_post[j + 1];
    }
    let mut beta = vec![NEG; t_len * c_total];
    let mut beta_j = vec![NEG; t_len * (k_slots + 1)];
    for t in (0..t_len).rev() {
        if t == t_len - 1 {
            for j in 0..=k_slots {
                beta_j[jdx(t, j)] = beta_post[j];
            }
            for i in 0..k_slots {
                for s in 0..slots[i].n_states {
                    beta[idx(t, base[i] + s)] = lout(i, s) + beta_post[i + 1];
                }
            }
            continue;
        }
        beta_j[jdx(t, k_slots)] = NEG;
        for j in (0..k_slots).rev() {
            let mut acc = lskip(j) + beta_j[jdx(t, j + 1)];
            for s in 0..slots[j].n_states {
                let w = lin(j, s);
                if w == NEG {
                    continue;
                }
                acc = log_add(acc, w + b(j, s, t + 1) + beta[idx(t + 1, base[j] + s)]);
            }
            beta_j[jdx(t, j)] = acc;
        }
        for i in 0..k_slots {
            for s in 0..slots[i].n_states {
                let mut acc = lout(i, s) + beta_j[jdx(t, i + 1)];
                for s2 in 0..slots[i].n_states {
                    let w = ltr(i, s, s2);
                    if w == NEG {
                        continue;
                    }
                    acc = log_add(acc, w + b(i, s2, t + 1) + beta[idx(t + 1, base[i] + s2)]);
                }
                beta[idx(t, base[i] + s)] = acc;
            }
        }
    }
    // Pre-frame junction cascade of the backward pass; its start value is
    // the backward total and must match the forward total.
    let mut beta_pre0 = vec![NEG; k_slots + 1];
    beta_pre0[k_slots] = NEG;
    for j in (0..k_slots).rev() {
        let mut acc = lskip(j) + beta_pre0[j + 1];
        for s in 0..slots[j].n_states {
            let w = lin(j, s);
            if w == NEG {
                continue;
            }
            acc = log_add(acc, w + b(j, s, 0) + beta[idx(0, base[j] + s)]);
        }
        beta_pre0[j] = acc;
    }
    debug_assert!(
        (beta_pre0[0] - log_p).abs() <= 1e-6 * log_p.abs().max(1.0),
        "forward/backward disagree: {} vs {log_p}",
        beta_pre0[0]
    );

    // Accumulate.
    for (i, model) in slots.iter().enumerate() {
        let order = model.order();
        let n = model.n_states;
        let acc = accs.entry(model.label.clone()).or_insert_with(|| ModelAcc {
            trans: vec![0.0; order * order],
            states: model
                .states
                .iter()
                .map(|st| StateAcc::new(st.components.len(), models.feature_dim))
                .collect(),
        });
        let table = &emissions[model.label.as_str()];
        for t in 0..t_len {
            let frame = frames.frame(t);
            for s in 0..n {
                let c = base[i] + s;
                let post = alpha[idx(t, c)] + beta[idx(t, c)] - log_p;
                if post == NEG {
                    continue;
                }
                // Split state occupancy over mixture components.
                let m_comps = model.states[s].components.len();
                let joints = &table.comp_ll[s][t * m_comps..(t + 1) * m_comps];
                let state_ll = table.state_ll[s * t_len + t];
                for (m, &joint) in joints.iter().enumerate() {
                    let g = (post + joint - state_ll).exp();
                    if g == 0.0 {
                        continue;
                    }
                    let comp = &mut acc.states[s].comps[m];
                    comp.occ += g;
                    for ((sum, sq), &x) in
                        comp.sum.iter_mut().zip(comp.sqsum.iter_mut()).zip(frame)
                    {
                        *sum += g * x;
                        *sq += g * x * x;
                    }
                }
                // Internal transitions.
                if t + 1 < t_len {
                    for s2 in 0..n {
                        let w = ltr(i, s, s2);
                        if w == NEG {
                            continue;
                        }
                        let xi = (alpha[idx(t, c)]
                            + w
                            + b(i, s2, t + 1)
                            + beta[idx(t + 1, base[i] + s2)]
                            - log_p)
                            .exp();
                        acc.trans[(s + 1) * order + s2 + 1] += xi;
                    }
                }
                // State to exit.
                let w = lout(i, s);
                if w != NEG {
                    let xi = (alpha[idx(t, c)] + w + beta_j[jdx(t, i + 1)] - log_p).exp();
                    acc.trans[(s + 1) * order + n + 1] += xi;
                }
                // Entry to state.
                let w = lin(i, s);
                if w != NEG {
                    let from = if t == 0 {
                        alpha_pre[i]
                    } else {
                        alpha_j[jdx(t - 1, i)]
                    };
                    if from != NEG {
                        let xi = (from + w + b(i, s, t) + beta[idx(t, c)] - log_p).exp();
                        acc.trans[s + 1] += xi; // entry row
                    }
                }
            }
            // Entry to exit (tee pass-through) after frame t; at the last
            // frame the backward junction value is the end cascade.
            let w = lskip(i);
            if w != NEG {
                let from = alpha_j[jdx(t, i)];
                if from != NEG {
                    let xi = (from + w + beta_j[jdx(t, i + 1)] - log_p).exp();
                    acc.trans[n + 1] += xi; // entry row
                }
            }
        }
        // Tee pass-through before the first frame.
        let w = lskip(i);
        if w != NEG && alpha_pre[i] != NEG && beta_pre0[i + 1] != NEG {
            let xi = (alpha_pre[i] + w + beta_pre0[i + 1] - log_p).exp();
            acc.trans[n + 1] += xi; // entry row
        }
    }
    Ok(Some(log_p))
}

fn log_prob(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Re-estimate parameters from accumulators, pooling tied states.
fn apply_updates(
    models: &mut ModelSet,
    accs: &BTreeMap<String, ModelAcc>,
    warnings: &mut Vec<String>,
) {
    let global_mean = models.global_mean.clone();
    let global_var = models.global_var.clone();
    let var_floor = models.var_floor.clone();

    // Transition rows, independent per model.
    for model in models.models_mut() {
        let Some(acc) = accs.get(&model.label) else {
            continue;
        };
        let order = model.order();
        for from in 0..order - 1 {
            let total: f64 = (0..order).map(|to| acc.trans[from * order + to]).sum();
            if total <= 0.0 {
                continue;
            }
            for to in 0..order {
                *model.tr_mut(from, to) = acc.trans[from * order + to] / total;
            }
        }
    }

    // Tie groups over all models, tagged or singleton.
    let mut groups: BTreeMap<String, Vec<(String, usize)>> = BTreeMap::new();
    for model in models.models() {
        for (s, tag) in model.tie_tags.iter().enumerate() {
            let key = match tag {
                Some(tag) => format!("tag:{tag}"),
                None => format!("one:{}:{s}", model.label),
            };
            groups.entry(key).or_default().push((model.label.clone(), s));
        }
    }

    for members in groups.values() {
        // Pool accumulators across members.
        let mut pooled: Option<StateAcc> = None;
        for (label, s) in members {
            if let Some(acc) = accs.get(label) {
                match &mut pooled {
                    None => pooled = Some(acc.states[*s].clone()),
                    Some(p) => p.merge(&acc.states[*s]),
                }
            }
        }
        let Some(pooled) = pooled else {
            continue;
        };
        let total = pooled.total_occ();
        if total < STATE_OCC_EPS {
            let (label, s) = &members[0];
            warnings.push(format!(
                "state {s} of '{label}' has no occupancy, parameters kept"
            ));
            continue;
        }
        let mut comps = Vec::with_capacity(pooled.comps.len());
        let mut starved = 0usize;
        for comp in &pooled.comps {
            if comp.occ < STARVED_OCCUPANCY {
                starved += 1;
                comps.push(GaussComponent {
                    weight: RESET_WEIGHT,
                    mean: global_mean.clone(),
                    var: global_var.clone(),
                });
            } else {
                let mean: Vec<f64> = comp.sum.iter().map(|&s| s / comp.occ).collect();
                let var: Vec<f64> = comp
                    .sqsum
                    .iter()
                    .zip(&mean)
                    .zip(&var_floor)
                    .map(|((&sq, &m), &floor)| (sq / comp.occ - m * m).max(floor))
                    .collect();
                comps.push(GaussComponent {
                    weight: comp.occ / total,
                    mean,
                    var,
                });
            }
        }
        if starved > 0 {
            let (label, s) = &members[0];
            warnings.push(format!(
                "{starved} starved component(s) reset in state {s} of '{label}'"
            ));
        }
        let wsum: f64 = comps.iter().map(|c| c.weight).sum();
        for c in &mut comps {
            c.weight /= wsum;
        }
        let state = MixtureState { components: comps };
        for (label, s) in members {
            models
                .get_mut(label)
                .expect("tie group member exists")
                .states[*s] = state.clone();
        }
    }
}
