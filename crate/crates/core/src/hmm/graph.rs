//! Compiled state graphs for Viterbi alignment and decoding.
//!
//! A graph is built from model instances wired between non-emitting
//! junction nodes. Junctions and model entry/exit arcs are epsilon
//! transitions; compilation eliminates them, leaving weighted arcs between
//! emitting states plus initial and final weights. Tee models contribute
//! pass-through epsilon paths.
//!
//! Arcs remember whether they crossed a junction, so the backtrace can
//! split segments and count repeated words even when a path re-enters the
//! node it just left.
//!
//! Node creation order is canonical: callers add words in sorted order, so
//! on exact score ties the Viterbi backtrace prefers the lexicographically
//! smaller label and the earlier transition.

use super::{GmmHmm, MixtureState};
use crate::error::{Error, Result};
use crate::frames::FrameSet;
use std::collections::BTreeMap;

/// Metadata of one emitting node.
#[derive(Debug, Clone)]
pub(crate) struct NodeMeta {
    pub label: String,
    pub state: usize,
    /// Word instance the node belongs to; `None` for glue models (sil/sp).
    pub word: Option<u32>,
    /// True for nodes of the first model of a word variant chain: entering
    /// one across a junction starts a new word token.
    pub word_entry: bool,
}

#[derive(Debug, Clone, Copy)]
enum EpsTarget {
    Eps(usize),
    Emit(usize),
}

pub(crate) struct GraphBuilder<'a> {
    nodes: Vec<NodeMeta>,
    node_emission: Vec<u32>,
    emissions: Vec<&'a MixtureState>,
    emission_ids: BTreeMap<(usize, usize), u32>,
    emit_arcs: Vec<Vec<(u32, f64)>>,
    emit_exit: Vec<Vec<(usize, f64)>>,
    eps_arcs: Vec<Vec<(EpsTarget, f64)>>,
    words: Vec<String>,
}

impl<'a> GraphBuilder<'a> {
    pub fn new() -> GraphBuilder<'a> {
        GraphBuilder {
            nodes: Vec::new(),
            node_emission: Vec::new(),
            emissions: Vec::new(),
            emission_ids: BTreeMap::new(),
            emit_arcs: Vec::new(),
            emit_exit: Vec::new(),
            eps_arcs: Vec::new(),
            words: Vec::new(),
        }
    }

    pub fn eps_node(&mut self) -> usize {
        self.eps_arcs.push(Vec::new());
        self.eps_arcs.len() - 1
    }

    pub fn eps_arc(&mut self, from: usize, to: usize, weight: f64) {
        if weight > f64::NEG_INFINITY {
            self.eps_arcs[from].push((EpsTarget::Eps(to), weight));
        }
    }

    /// Register a word instance; nodes referencing it report the word in
    /// decode output.
    pub fn word_instance(&mut self, word: &str) -> u32 {
        self.words.push(word.to_string());
        (self.words.len() - 1) as u32
    }

    fn emission_id(&mut self, model: &'a GmmHmm, state: usize) -> u32 {
        let key = (model as *const GmmHmm as usize, state);
        if let Some(&id) = self.emission_ids.get(&key) {
            return id;
        }
        let id = self.emissions.len() as u32;
        self.emissions.push(&model.states[state]);
        self.emission_ids.insert(key, id);
        id
    }

    /// Wire a model instance between two junctions.
    pub fn add_model(
        &mut self,
        model: &'a GmmHmm,
        from: usize,
        to: usize,
        word: Option<u32>,
        word_entry: bool,
    ) {
        let n = model.n_states;
        let base = self.nodes.len();
        for s in 0..n {
            self.nodes.push(NodeMeta {
                label: model.label.clone(),
                state: s,
                word,
                word_entry,
            });
            let id = self.emission_id(model, s);
            self.node_emission.push(id);
            self.emit_arcs.push(Vec::new());
            self.emit_exit.push(Vec::new());
        }
        for s in 0..n {
            let p = model.tr(0, s + 1);
            if p > 0.0 {
                self.eps_arcs[from].push((EpsTarget::Emit(base + s), p.ln()));
            }
            let exit = model.tr(s + 1, n + 1);
            if exit > 0.0 {
                self.emit_exit[base + s].push((to, exit.ln()));
            }
            for s2 in 0..n {
                let p = model.tr(s + 1, s2 + 1);
                if p > 0.0 {
                    self.emit_arcs[base + s2].push((base as u32 + s as u32, p.ln()));
                }
            }
        }
        let tee = model.tr(0, n + 1);
        if tee > 0.0 {
            self.eps_arcs[from].push((EpsTarget::Eps(to), tee.ln()));
        }
    }

    /// Eliminate epsilon nodes and freeze the graph.
    pub fn finish(self, start: usize, end: usize) -> Result<StateGraph<'a>> {
        let n_eps = self.eps_arcs.len();
        let n_emit = self.nodes.len();
        let mut memo: Vec<Option<Closure>> = vec![None; n_eps];
        let mut state = vec![0u8; n_eps];
        for e in 0..n_eps {
            eps_closure(e, end, &self.eps_arcs, &mut memo, &mut state)?;
        }
        let closure = |e: usize| memo[e].as_ref().expect("closure computed");

        // Internal and junction-crossing arcs between the same node pair
        // stay distinct; only same-kind duplicates merge by max weight.
        let mut arcs_in: Vec<BTreeMap<(u32, bool), f64>> = vec![BTreeMap::new(); n_emit];
        for (dst, arcs) in self.emit_arcs.iter().enumerate() {
            for &(src, w) in arcs {
                merge_max(&mut arcs_in[dst], (src, false), w);
            }
        }
        let mut fin = vec![f64::NEG_INFINITY; n_emit];
        for u in 0..n_emit {
            for &(eps, w) in &self.emit_exit[u] {
                let cl = closure(eps);
                for (&v, &w2) in &cl.emits {
                    merge_max(&mut arcs_in[v], (u as u32, true), w + w2);
                }
                if cl.end > f64::NEG_INFINITY {
                    fin[u] = fin[u].max(w + cl.end);
                }
            }
        }
        let start_cl = closure(start);
        let init: Vec<(u32, f64)> = start_cl
            .emits
            .iter()
            .map(|(&v, &w)| (v as u32, w))
            .collect();
        let empty_score = start_cl.end;

        // (src asc, internal before junction): ties keep the earlier kind.
        let arcs_in: Vec<Vec<Arc>> = arcs_in
            .into_iter()
            .map(|m| {
                m.into_iter()
                    .map(|((src, junction), w)| Arc { src, w, junction })
                    .collect()
            })
            .collect();
        Ok(StateGraph {
            nodes: self.nodes,
            node_emission: self.node_emission,
            emissions: self.emissions,
            arcs_in,
            init,
            fin,
            empty_score,
            words: self.words,
        })
    }
}

fn merge_max(map: &mut BTreeMap<(u32, bool), f64>, key: (u32, bool), w: f64) {
    map.entry(key)
        .and_modify(|old| {
            if w > *old {
                *old = w;
            }
        })
        .or_insert(w);
}

#[derive(Debug, Clone, Copy)]
struct Arc {
    src: u32,
    w: f64,
    junction: bool,
}

#[derive(Debug, Clone)]
struct Closure {
    emits: BTreeMap<usize, f64>,
    end: f64,
}

fn eps_closure(
    node: usize,
    end: usize,
    eps_arcs: &[Vec<(EpsTarget, f64)>],
    memo: &mut Vec<Option<Closure>>,
    state: &mut Vec<u8>,
) -> Result<()> {
    if state[node] == 2 {
        return Ok(());
    }
    if state[node] == 1 {
        return Err(Error::InvalidParameter(
            "epsilon cycle in decoding graph".to_string(),
        ));
    }
    state[node] = 1;
    let mut emits: BTreeMap<usize, f64> = BTreeMap::new();
    let mut endw = if node == end { 0.0 } else { f64::NEG_INFINITY };
    for &(target, w) in &eps_arcs[node] {
        match target {
            EpsTarget::Emit(v) => {
                let entry = emits.entry(v).or_insert(f64::NEG_INFINITY);
                if w > *entry {
                    *entry = w;
                }
            }
            EpsTarget::Eps(next) => {
                eps_closure(next, end, eps_arcs, memo, state)?;
                let cl = memo[next].as_ref().expect("just computed");
                for (&v, &w2) in &cl.emits {
                    let entry = emits.entry(v).or_insert(f64::NEG_INFINITY);
                    if w + w2 > *entry {
                        *entry = w + w2;
                    }
                }
                if cl.end > f64::NEG_INFINITY {
                    endw = endw.max(w + cl.end);
                }
            }
        }
    }
    memo[node] = Some(Closure { emits, end: endw });
    state[node] = 2;
    Ok(())
}

/// A frozen graph over emitting states.
pub(crate) struct StateGraph<'a> {
    nodes: Vec<NodeMeta>,
    node_emission: Vec<u32>,
    emissions: Vec<&'a MixtureState>,
    arcs_in: Vec<Vec<Arc>>,
    init: Vec<(u32, f64)>,
    fin: Vec<f64>,
    /// Score of an epsilon-only start-to-end path, for zero-frame input.
    empty_score: f64,
    words: Vec<String>,
}

/// The best path through a graph: its log score, per-frame node ids, and
/// per-frame junction-crossing flags (`crossings[t]` is true when the path
/// crossed a junction entering `nodes[t]`; `crossings[0]` always is).
pub(crate) struct ViterbiPath {
    pub log_score: f64,
    pub nodes: Vec<u32>,
    pub crossings: Vec<bool>,
}

impl<'a> StateGraph<'a> {
    pub fn node(&self, id: u32) -> &NodeMeta {
        &self.nodes[id as usize]
    }

    pub fn word_name(&self, word: u32) -> &str {
        &self.words[word as usize]
    }

    /// Fewest frames any complete path emits, or `None` when no complete
    /// path exists at all.
    pub fn min_frames(&self) -> Option<usize> {
        if self.empty_score > f64::NEG_INFINITY {
            return Some(0);
        }
        let n = self.nodes.len();
        let mut dist = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::new();
        for &(v, _) in &self.init {
            if dist[v as usize] == usize::MAX {
                dist[v as usize] = 1;
                queue.push_back(v as usize);
            }
        }
        // All arcs cost one frame, so plain BFS yields shortest counts.
        let mut out_arcs: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (dst, arcs) in self.arcs_in.iter().enumerate() {
            for arc in arcs {
                out_arcs[arc.src as usize].push(dst as u32);
            }
        }
        while let Some(u) = queue.pop_front() {
            for &v in &out_arcs[u] {
                if dist[v as usize] == usize::MAX {
                    dist[v as usize] = dist[u] + 1;
                    queue.push_back(v as usize);
                }
            }
        }
        (0..n)
            .filter(|&v| self.fin[v] > f64::NEG_INFINITY && dist[v] != usize::MAX)
            .map(|v| dist[v])
            .min()
    }

    /// Best-path search. Ties resolve to the smallest node id, which is
    /// the lexicographically smallest label under canonical construction,
    /// then to the earlier (internal before junction) transition.
    pub fn viterbi(&self, frames: &FrameSet) -> Result<ViterbiPath> {
        let t_len = frames.len();
        if t_len == 0 {
            if self.empty_score > f64::NEG_INFINITY {
                return Ok(ViterbiPath {
                    log_score: self.empty_score,
                    nodes: Vec::new(),
                    crossings: Vec::new(),
                });
            }
            return Err(Error::DecodeFailure(
                "no epsilon path for an empty utterance".to_string(),
            ));
        }
        let n = self.nodes.len();
        if n == 0 {
            return Err(Error::DecodeFailure("empty decoding graph".to_string()));
        }

        // Emission log-likelihoods per unique state, per frame.
        let n_emis = self.emissions.len();
        let mut emis = vec![0.0f64; n_emis * t_len];
        for (e, state) in self.emissions.iter().enumerate() {
            for (t, frame) in frames.iter().enumerate() {
                emis[e * t_len + t] = state.log_likelihood(frame);
            }
        }
        let emis_at = |v: usize, t: usize| emis[self.node_emission[v] as usize * t_len + t];

        let mut delta = vec![f64::NEG_INFINITY; n];
        let mut backptr = vec![u32::MAX; n * t_len];
        for &(v, w) in &self.init {
            let cand = w + emis_at(v as usize, 0);
            if cand > delta[v as usize] {
                delta[v as usize] = cand;
            }
        }
        let mut next = vec![f64::NEG_INFINITY; n];
        for t in 1..t_len {
            for v in 0..n {
                let mut best = f64::NEG_INFINITY;
                let mut best_arc = u32::MAX;
                for (k, arc) in self.arcs_in[v].iter().enumerate() {
                    let cand = delta[arc.src as usize] + arc.w;
                    if cand > best {
                        best = cand;
                        best_arc = k as u32;
                    }
                }
                next[v] = if best == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    best + emis_at(v, t)
                };
                backptr[t * n + v] = best_arc;
            }
            std::mem::swap(&mut delta, &mut next);
        }

        let mut best = f64::NEG_INFINITY;
        let mut best_v = u32::MAX;
        for v in 0..n {
            if self.fin[v] == f64::NEG_INFINITY {
                continue;
            }
            let cand = delta[v] + self.fin[v];
            if cand > best {
                best = cand;
                best_v = v as u32;
            }
        }
        if best_v == u32::MAX {
            return Err(Error::DecodeFailure(format!(
                "no complete path for {t_len} frames"
            )));
        }

        let mut nodes = vec![0u32; t_len];
        let mut crossings = vec![false; t_len];
        let mut v = best_v;
        for t in (0..t_len).rev() {
            nodes[t] = v;
            if t > 0 {
                let arc = self.arcs_in[v as usize][backptr[t * n + v as usize] as usize];
                crossings[t] = arc.junction;
                v = arc.src;
            } else {
                crossings[0] = true;
            }
        }
        Ok(ViterbiPath {
            log_score: best,
            nodes,
            crossings,
        })
    }
}
