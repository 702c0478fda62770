//! Model-set file format: one text block per model with its transition
//! matrix and per-state mixtures, tie tags explicit, floats with 17
//! significant digits.

use super::{GaussComponent, GmmHmm, MixtureState, ModelSet};
use crate::error::{Error, Result};
use crate::textio;
use std::collections::BTreeMap;
use std::path::Path;

impl ModelSet {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("modelset dim {}\n", self.feature_dim));
        out.push_str(&format!("global_mean {}\n", join(&self.global_mean)));
        out.push_str(&format!("global_var {}\n", join(&self.global_var)));
        out.push_str(&format!("var_floor {}\n", join(&self.var_floor)));
        for model in self.models() {
            out.push_str(&format!("model {} states {}\n", model.label, model.n_states));
            for from in 0..model.order() {
                let row: Vec<String> = (0..model.order())
                    .map(|to| textio::fmt_f64(model.tr(from, to)))
                    .collect();
                out.push_str(&format!("trans {}\n", row.join(" ")));
            }
            for (s, state) in model.states.iter().enumerate() {
                match &model.tie_tags[s] {
                    Some(tag) => out.push_str(&format!(
                        "state {s} mix {} tie {tag}\n",
                        state.components.len()
                    )),
                    None => {
                        out.push_str(&format!("state {s} mix {}\n", state.components.len()))
                    }
                }
                for c in &state.components {
                    out.push_str(&format!("comp {}\n", textio::fmt_f64(c.weight)));
                    out.push_str(&format!("mean {}\n", join(&c.mean)));
                    out.push_str(&format!("var {}\n", join(&c.var)));
                }
            }
        }
        out
    }

    pub fn parse(text: &str, path: &str) -> Result<ModelSet> {
        let mut dim = None;
        let mut global_mean = None;
        let mut global_var = None;
        let mut var_floor = None;
        let mut models: BTreeMap<String, GmmHmm> = BTreeMap::new();
        let mut current: Option<GmmHmm> = None;
        let mut trans_rows: Vec<Vec<f64>> = Vec::new();

        let finalize = |model: Option<GmmHmm>,
                        trans_rows: &mut Vec<Vec<f64>>,
                        models: &mut BTreeMap<String, GmmHmm>|
         -> Result<()> {
            if let Some(mut m) = model {
                let order = m.n_states + 2;
                if trans_rows.len() != order || trans_rows.iter().any(|r| r.len() != order) {
                    return Err(Error::Parse {
                        path: path.to_string(),
                        line: 0,
                        msg: format!("model '{}' has a malformed transition matrix", m.label),
                    });
                }
                m.trans = trans_rows.drain(..).flatten().collect();
                models.insert(m.label.clone(), m);
            }
            Ok(())
        };

        for (lineno, line) in textio::content_lines(text) {
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "modelset" if fields.len() == 3 && fields[1] == "dim" => {
                    dim = Some(textio::parse_usize(fields[2], path, lineno)?);
                }
                "global_mean" => global_mean = Some(parse_vec(&fields[1..], path, lineno)?),
                "global_var" => global_var = Some(parse_vec(&fields[1..], path, lineno)?),
                "var_floor" => var_floor = Some(parse_vec(&fields[1..], path, lineno)?),
                "model" if fields.len() == 4 && fields[2] == "states" => {
                    finalize(current.take(), &mut trans_rows, &mut models)?;
                    let n_states = textio::parse_usize(fields[3], path, lineno)?;
                    current = Some(GmmHmm {
                        label: fields[1].to_string(),
                        n_states,
                        trans: Vec::new(),
                        states: Vec::new(),
                        tie_tags: Vec::new(),
                    });
                }
                "trans" => {
                    trans_rows.push(parse_vec(&fields[1..], path, lineno)?);
                }
                "state" => {
                    let model = current.as_mut().ok_or_else(|| Error::Parse {
                        path: path.to_string(),
                        line: lineno,
                        msg: "state outside a model block".to_string(),
                    })?;
                    let tag = match fields.len() {
                        4 => None,
                        6 if fields[4] == "tie" => Some(fields[5].to_string()),
                        _ => {
                            return Err(Error::Parse {
                                path: path.to_string(),
                                line: lineno,
                                msg: format!("malformed state line '{line}'"),
                            })
                        }
                    };
                    model.states.push(MixtureState { components: Vec::new() });
                    model.tie_tags.push(tag);
                }
                "comp" if fields.len() == 2 => {
                    let model = current.as_mut().ok_or_else(|| Error::Parse {
                        path: path.to_string(),
                        line: lineno,
                        msg: "comp outside a model block".to_string(),
                    })?;
                    let state = model.states.last_mut().ok_or_else(|| Error::Parse {
                        path: path.to_string(),
                        line: lineno,
                        msg: "comp outside a state block".to_string(),
                    })?;
                    state.components.push(GaussComponent {
                        weight: textio::parse_f64(fields[1], path, lineno)?,
                        mean: Vec::new(),
                        var: Vec::new(),
                    });
                }
                "mean" | "var" => {
                    let model = current.as_mut().ok_or_else(|| Error::Parse {
                        path: path.to_string(),
                        line: lineno,
                        msg: format!("{} outside a model block", fields[0]),
                    })?;
                    let comp = model
                        .states
                        .last_mut()
                        .and_then(|s| s.components.last_mut())
                        .ok_or_else(|| Error::Parse {
                            path: path.to_string(),
                            line: lineno,
                            msg: format!("{} outside a component block", fields[0]),
                        })?;
                    let vec = parse_vec(&fields[1..], path, lineno)?;
                    if fields[0] == "mean" {
                        comp.mean = vec;
                    } else {
                        comp.var = vec;
                    }
                }
                other => {
                    return Err(Error::Parse {
                        path: path.to_string(),
                        line: lineno,
                        msg: format!("unknown key '{other}'"),
                    })
                }
            }
        }
        finalize(current.take(), &mut trans_rows, &mut models)?;

        let missing = |what: &str| Error::Parse {
            path: path.to_string(),
            line: 0,
            msg: format!("missing '{what}'"),
        };
        let set = ModelSet {
            feature_dim: dim.ok_or_else(|| missing("modelset dim"))?,
            global_mean: global_mean.ok_or_else(|| missing("global_mean"))?,
            global_var: global_var.ok_or_else(|| missing("global_var"))?,
            var_floor: var_floor.ok_or_else(|| missing("var_floor"))?,
            models,
        };
        for model in set.models() {
            if model.states.len() != model.n_states {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: 0,
                    msg: format!(
                        "model '{}' declares {} states but lists {}",
                        model.label,
                        model.n_states,
                        model.states.len()
                    ),
                });
            }
        }
        Ok(set)
    }

    pub fn read(path: &Path) -> Result<ModelSet> {
        ModelSet::parse(&textio::read_file(path)?, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        textio::write_file(path, &self.to_text())
    }
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|&x| textio::fmt_f64(x))
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_vec(fields: &[&str], path: &str, lineno: usize) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|tok| textio::parse_f64(tok, path, lineno))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::FrameSet;
    use crate::hmm::{flat_start, tie_silence_models, FlatStartOptions};

    #[test]
    fn model_set_round_trip_preserves_everything() {
        let mut data = FrameSet::new(2, 1.0);
        for i in 0..6 {
            data.push(&[i as f64 * 0.7, 1.0 - i as f64 * 0.1]).unwrap();
        }
        let labels: Vec<String> = ["sil", "sp", "v01"].iter().map(|s| s.to_string()).collect();
        let (mut set, _) =
            flat_start(&labels, 3, 2, &data, &FlatStartOptions::default()).unwrap();
        tie_silence_models(&mut set, "sil", "sp").unwrap();
        let text = set.to_text();
        let again = ModelSet::parse(&text, "mem").unwrap();
        assert_eq!(set, again);
        assert_eq!(again.to_text(), text);
        assert_eq!(again.get("sp").unwrap().tie_tags[0].as_deref(), Some("tie:sil:sp"));
    }
}
