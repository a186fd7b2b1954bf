//! Line-oriented key/value graph documents.
//!
//! ```text
//! [graph]
//! name = tiny
//! channels = 1
//!
//! [layer 1]
//! kind = causal_conv
//! in_ch = 1
//! out_ch = 1
//! k = 3
//! stride = 1
//! act = linear
//! ```
//!
//! An optional trailing `[plan]` block (`mode`, `pairs`, `shifts`) records
//! the schedule of a transformed graph; it is checked against the plan the
//! layers actually encode.

use super::{ActivationKind, GraphSpec, LayerKind, LayerSpec, Reconstruction};
use crate::plan::{PlanMode, SoiPlan};
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug)]
struct Entry {
    value: String,
    line: usize,
    column: usize,
}

#[derive(Debug)]
enum Section {
    Graph,
    Layer(usize),
    Plan,
}

#[derive(Debug)]
struct Block {
    section: Section,
    line: usize,
    entries: BTreeMap<String, Entry>,
}

fn split_blocks(text: &str) -> Result<Vec<Block>> {
    let mut blocks: Vec<Block> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let indent = raw.len() - raw.trim_start().len();
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(inner) = rest.strip_suffix(']') else {
                return Err(Error::parse(line_no, indent + 1, "unterminated section header"));
            };
            let mut words = inner.split_whitespace();
            let section = match (words.next(), words.next(), words.next()) {
                (Some("graph"), None, _) => Section::Graph,
                (Some("plan"), None, _) => Section::Plan,
                (Some("layer"), Some(idx), None) => match idx.parse::<usize>() {
                    Ok(i) if i >= 1 => Section::Layer(i),
                    _ => {
                        return Err(Error::parse(
                            line_no,
                            indent + 8,
                            format!("bad layer index `{idx}`"),
                        ))
                    }
                },
                (Some("layer"), None, _) => {
                    return Err(Error::parse(line_no, indent + 1, "layer header needs an index"))
                }
                _ => {
                    return Err(Error::parse(
                        line_no,
                        indent + 1,
                        format!("unknown section `[{inner}]`"),
                    ))
                }
            };
            blocks.push(Block {
                section,
                line: line_no,
                entries: BTreeMap::new(),
            });
            continue;
        }
        let Some(eq) = trimmed.find('=') else {
            return Err(Error::parse(line_no, indent + 1, "expected `key = value`"));
        };
        let key = trimmed[..eq].trim();
        let value = trimmed[eq + 1..].trim();
        if key.is_empty() {
            return Err(Error::parse(line_no, indent + 1, "empty key"));
        }
        let Some(block) = blocks.last_mut() else {
            return Err(Error::parse(line_no, indent + 1, "key outside of any section"));
        };
        let value_col = indent + eq + 2 + (trimmed[eq + 1..].len() - trimmed[eq + 1..].trim_start().len());
        if block.entries.contains_key(key) {
            return Err(Error::parse(line_no, indent + 1, format!("duplicate key `{key}`")));
        }
        block.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line: line_no,
                column: value_col,
            },
        );
    }
    Ok(blocks)
}

struct Fields<'a> {
    block: &'a mut Block,
}

impl Fields<'_> {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.block.entries.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<Entry> {
        self.take(key).ok_or_else(|| {
            Error::parse(self.block.line, 1, format!("missing required key `{key}`"))
        })
    }

    fn count(&mut self, key: &str) -> Result<usize> {
        let e = self.required(key)?;
        parse_usize(&e)
    }

    fn finish(self) -> Result<()> {
        if let Some((key, e)) = self.block.entries.iter().next() {
            return Err(Error::parse(
                e.line,
                1,
                format!("unknown key `{key}` for this block"),
            ));
        }
        Ok(())
    }
}

fn parse_usize(e: &Entry) -> Result<usize> {
    e.value
        .parse::<usize>()
        .map_err(|_| Error::parse(e.line, e.column, format!("expected a count, got `{}`", e.value)))
}

fn parse_layer(index: usize, block: &mut Block) -> Result<LayerSpec> {
    let mut f = Fields { block };
    let kind_entry = f.required("kind")?;
    let in_channels = f.count("in_ch")?;
    let out_channels = f.count("out_ch")?;
    let kind = match kind_entry.value.as_str() {
        "causal_conv" => LayerKind::CausalConv {
            kernel_size: f.count("k")?,
            stride: f.count("stride")?,
        },
        "transposed_upsample" => LayerKind::TransposedUpsample {
            kernel_size: f.count("k")?,
        },
        "extrapolate_upsample" => {
            let e = f.required("mode")?;
            let mode = e
                .value
                .parse::<Reconstruction>()
                .map_err(|m| Error::parse(e.line, e.column, m))?;
            LayerKind::ExtrapolateUpsample { mode }
        }
        "activation" => LayerKind::Activation,
        "batch_norm" => LayerKind::BatchNormInference,
        "channel_concat" => LayerKind::ChannelConcat {
            source: f.count("source")?,
        },
        "time_shift" => LayerKind::TimeShift {
            shift: f.count("shift")?,
        },
        other => {
            return Err(Error::parse(
                kind_entry.line,
                kind_entry.column,
                format!("unknown layer kind `{other}`"),
            ))
        }
    };
    let activation = match f.take("act") {
        Some(e) => e
            .value
            .parse::<ActivationKind>()
            .map_err(|m| Error::parse(e.line, e.column, m))?,
        None => ActivationKind::Linear,
    };
    f.finish()?;
    Ok(LayerSpec {
        index,
        kind,
        in_channels,
        out_channels,
        activation,
    })
}

struct DeclaredPlan {
    line: usize,
    mode: String,
    pairs: String,
    shifts: String,
}

fn parse_document(text: &str) -> Result<(GraphSpec, Option<DeclaredPlan>)> {
    let mut blocks = split_blocks(text)?;
    let mut graph: Option<GraphSpec> = None;
    let mut plan = None;
    for block in blocks.iter_mut() {
        let line = block.line;
        match block.section {
            Section::Graph => {
                if graph.is_some() {
                    return Err(Error::parse(line, 1, "duplicate [graph] block"));
                }
                let mut f = Fields { block };
                let name = f.required("name")?.value;
                let channels = f.count("channels")?;
                f.finish()?;
                graph = Some(GraphSpec::new(name, channels));
            }
            Section::Layer(index) => {
                let Some(g) = graph.as_mut() else {
                    return Err(Error::parse(line, 1, "[layer] before [graph]"));
                };
                if plan.is_some() {
                    return Err(Error::parse(line, 1, "[layer] after [plan]"));
                }
                if index <= g.layers.len() {
                    return Err(Error::parse(line, 8, format!("duplicate index {index}")));
                }
                if index != g.layers.len() + 1 {
                    return Err(Error::parse(
                        line,
                        8,
                        format!("expected layer {}, found {index}", g.layers.len() + 1),
                    ));
                }
                let layer = parse_layer(index, block)?;
                g.layers.push(layer);
            }
            Section::Plan => {
                if graph.is_none() {
                    return Err(Error::parse(line, 1, "[plan] before [graph]"));
                }
                if plan.is_some() {
                    return Err(Error::parse(line, 1, "duplicate [plan] block"));
                }
                let mut f = Fields { block };
                let mode = f.required("mode")?.value;
                let pairs = f.take("pairs").map(|e| e.value).unwrap_or_default();
                let shifts = f.take("shifts").map(|e| e.value).unwrap_or_default();
                f.finish()?;
                plan = Some(DeclaredPlan {
                    line,
                    mode,
                    pairs,
                    shifts,
                });
            }
        }
    }
    let graph = graph.ok_or_else(|| Error::parse(1, 1, "missing [graph] block"))?;
    Ok((graph, plan))
}

/// Parses a graph document. An embedded `[plan]` block is ignored here; use
/// [`parse_graph_document`] to have it checked.
pub fn parse_graph_spec(text: &str) -> Result<GraphSpec> {
    parse_document(text).map(|(g, _)| g)
}

/// Parses a graph document together with its embedded plan, if any. The
/// declared plan must match the one derived from the layers.
pub fn parse_graph_document(text: &str) -> Result<(GraphSpec, Option<SoiPlan>)> {
    let (g, declared) = parse_document(text)?;
    let Some(declared) = declared else {
        return Ok((g, None));
    };
    let plan = SoiPlan::derive(&g)?;
    let (mode, pairs, shifts) = plan_fields(&plan);
    if declared.mode != mode || declared.pairs != pairs || declared.shifts != shifts {
        return Err(Error::parse(
            declared.line,
            1,
            format!(
                "declared plan (mode {}, pairs `{}`, shifts `{}`) does not match the layers (mode {mode}, pairs `{pairs}`, shifts `{shifts}`)",
                declared.mode, declared.pairs, declared.shifts
            ),
        ));
    }
    Ok((g, Some(plan)))
}

fn plan_fields(plan: &SoiPlan) -> (String, String, String) {
    let pairs = plan
        .pairs
        .iter()
        .map(|p| format!("{}:{}:{}", p.down, p.last, p.reconstruction))
        .collect::<Vec<_>>()
        .join(", ");
    let shifts = plan
        .shifts
        .iter()
        .map(|s| format!("{}:{}", s.layer, s.frames))
        .collect::<Vec<_>>()
        .join(", ");
    let mode = match plan.mode {
        PlanMode::PartiallyPredictive => "pp",
        PlanMode::FullyPredictive => "fp",
        PlanMode::Hybrid => "hybrid",
    };
    (mode.to_string(), pairs, shifts)
}

/// Canonical text form of a graph.
pub fn serialize_graph(g: &GraphSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[graph]");
    let _ = writeln!(out, "name = {}", g.name);
    let _ = writeln!(out, "channels = {}", g.frame_channels);
    for l in &g.layers {
        let _ = writeln!(out);
        let _ = writeln!(out, "[layer {}]", l.index);
        let _ = writeln!(out, "kind = {}", l.kind.name());
        let _ = writeln!(out, "in_ch = {}", l.in_channels);
        let _ = writeln!(out, "out_ch = {}", l.out_channels);
        match l.kind {
            LayerKind::CausalConv {
                kernel_size,
                stride,
            } => {
                let _ = writeln!(out, "k = {kernel_size}");
                let _ = writeln!(out, "stride = {stride}");
            }
            LayerKind::TransposedUpsample { kernel_size } => {
                let _ = writeln!(out, "k = {kernel_size}");
            }
            LayerKind::ExtrapolateUpsample { mode } => {
                let _ = writeln!(out, "mode = {mode}");
            }
            LayerKind::ChannelConcat { source } => {
                let _ = writeln!(out, "source = {source}");
            }
            LayerKind::TimeShift { shift } => {
                let _ = writeln!(out, "shift = {shift}");
            }
            LayerKind::Activation | LayerKind::BatchNormInference => {}
        }
        if l.activation != ActivationKind::Linear || matches!(l.kind, LayerKind::Activation) {
            let _ = writeln!(out, "act = {}", l.activation.name());
        }
    }
    out
}

/// Canonical text form with the plan embedded.
pub fn serialize_graph_with_plan(g: &GraphSpec, plan: &SoiPlan) -> String {
    let mut out = serialize_graph(g);
    let (mode, pairs, shifts) = plan_fields(plan);
    let _ = writeln!(out);
    let _ = writeln!(out, "[plan]");
    let _ = writeln!(out, "mode = {mode}");
    let _ = writeln!(out, "pairs = {pairs}");
    let _ = writeln!(out, "shifts = {shifts}");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[graph]\nname = tiny\nchannels = 1\n\n[layer 1]\nkind = causal_conv\nin_ch = 1\nout_ch = 1\nk = 3\nstride = 1\n";

    #[test]
    fn minimal_document() {
        let g = parse_graph_spec(MINIMAL).unwrap();
        assert_eq!(g.depth(), 1);
        assert_eq!(
            g.layer(1).kind,
            LayerKind::CausalConv {
                kernel_size: 3,
                stride: 1
            }
        );
        assert_eq!(serialize_graph(&g), MINIMAL);
    }

    #[test]
    fn errors_carry_positions() {
        let bad = MINIMAL.replace("causal_conv", "dense");
        match parse_graph_spec(&bad).unwrap_err() {
            Error::Parse {
                line,
                column,
                message,
            } => {
                assert_eq!(line, 6);
                assert_eq!(column, 8);
                assert!(message.contains("unknown layer kind"));
            }
            e => panic!("unexpected {e:?}"),
        }
        let dup = format!("{MINIMAL}\n[layer 1]\nkind = activation\nin_ch = 1\nout_ch = 1\n");
        assert!(parse_graph_spec(&dup)
            .unwrap_err()
            .to_string()
            .contains("duplicate index"));
        let unknown = MINIMAL.replace("stride = 1", "stride = 1\ndilation = 2");
        assert!(parse_graph_spec(&unknown)
            .unwrap_err()
            .to_string()
            .contains("unknown key `dilation`"));
        let syntax = MINIMAL.replace("k = 3", "k 3");
        assert!(matches!(
            parse_graph_spec(&syntax),
            Err(Error::Parse { line: 9, .. })
        ));
    }

    #[test]
    fn dangling_source_is_a_validation_error() {
        let text = format!(
            "{MINIMAL}\n[layer 2]\nkind = causal_conv\nin_ch = 1\nout_ch = 1\nk = 1\nstride = 1\n\n[layer 3]\nkind = channel_concat\nin_ch = 1\nout_ch = 2\nsource = 99\n"
        );
        let g = parse_graph_spec(&text).unwrap();
        let r = crate::graph::validate_graph(&g);
        assert!(r
            .diagnostics
            .iter()
            .any(|d| d.message.contains("dangling skip source")));
    }

    #[test]
    fn declared_plan_is_checked() {
        let g = parse_graph_spec(MINIMAL).unwrap();
        let plan = SoiPlan::derive(&g).unwrap();
        let text = serialize_graph_with_plan(&g, &plan);
        let (g2, p2) = parse_graph_document(&text).unwrap();
        assert_eq!(g2, g);
        assert_eq!(p2, Some(plan));
        let lie = text.replace("mode = pp", "mode = fp");
        assert!(parse_graph_document(&lie).is_err());
    }
}
