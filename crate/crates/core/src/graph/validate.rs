use super::{GraphSpec, LayerKind, Reconstruction};
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DiagnosticCode {
    EmptyGraph,
    ZeroChannels,
    BadKernel,
    BadStride,
    BadShift,
    BadMode,
    DanglingSkip,
    ChannelMismatch,
    UnmatchedStride,
    UnmatchedUpsample,
    ShiftInsideSpan,
    NoopActivation,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::EmptyGraph => "EMPTY_GRAPH",
            DiagnosticCode::ZeroChannels => "ZERO_CHANNELS",
            DiagnosticCode::BadKernel => "BAD_KERNEL",
            DiagnosticCode::BadStride => "BAD_STRIDE",
            DiagnosticCode::BadShift => "BAD_SHIFT",
            DiagnosticCode::BadMode => "BAD_MODE",
            DiagnosticCode::DanglingSkip => "DANGLING_SKIP",
            DiagnosticCode::ChannelMismatch => "CHANNEL_MISMATCH",
            DiagnosticCode::UnmatchedStride => "UNMATCHED_STRIDE",
            DiagnosticCode::UnmatchedUpsample => "UNMATCHED_UPSAMPLE",
            DiagnosticCode::ShiftInsideSpan => "SHIFT_INSIDE_SPAN",
            DiagnosticCode::NoopActivation => "NOOP_ACTIVATION",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            DiagnosticCode::NoopActivation => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// 0 when the diagnostic concerns the graph as a whole.
    pub layer: usize,
    pub code: DiagnosticCode,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "layer {}: {}: {}", self.layer, self.code, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn has(&self, code: DiagnosticCode) -> bool {
        self.diagnostics.iter().any(|d| d.code == code)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics
            .iter()
            .filter(|d| d.code.severity() == Severity::Error)
    }

    pub(crate) fn into_result(self) -> crate::Result<()> {
        if self.ok {
            return Ok(());
        }
        let msg = self
            .errors()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        Err(crate::Error::Validation(msg))
    }
}

/// Result of matching strided convolutions to upsamplers, innermost first.
pub(crate) struct PairMatching {
    /// `(strided_conv, upsample)` index pairs in order of the upsample.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_strides: Vec<usize>,
    pub unmatched_upsamples: Vec<usize>,
}

/// Matches every stride-2 conv with the nearest following unmatched
/// upsampler, the way brackets nest.
pub(crate) fn match_pairs(g: &GraphSpec) -> PairMatching {
    let mut open = Vec::new();
    let mut m = PairMatching {
        pairs: Vec::new(),
        unmatched_strides: Vec::new(),
        unmatched_upsamples: Vec::new(),
    };
    for l in &g.layers {
        if l.kind.is_strided() {
            open.push(l.index);
        } else if l.kind.is_upsample() {
            match open.pop() {
                Some(d) => m.pairs.push((d, l.index)),
                None => m.unmatched_upsamples.push(l.index),
            }
        }
    }
    m.unmatched_strides = open;
    m
}

/// Checks every structural invariant and reports all violations.
pub fn validate_graph(g: &GraphSpec) -> ValidationReport {
    let mut diags = Vec::new();
    let mut push = |layer: usize, code: DiagnosticCode, message: String| {
        diags.push(Diagnostic {
            layer,
            code,
            message,
        })
    };

    if g.layers.is_empty() {
        push(0, DiagnosticCode::EmptyGraph, "graph has no layers".into());
    }
    if g.frame_channels == 0 {
        push(0, DiagnosticCode::ZeroChannels, "input has zero channels".into());
    }

    for l in &g.layers {
        let i = l.index;
        if l.in_channels == 0 || l.out_channels == 0 {
            push(i, DiagnosticCode::ZeroChannels, "zero channel count".into());
        }
        let upstream = g.channels_of(i - 1);
        if l.in_channels != upstream {
            push(
                i,
                DiagnosticCode::ChannelMismatch,
                format!("in_ch {} but previous layer emits {}", l.in_channels, upstream),
            );
        }
        match l.kind {
            LayerKind::CausalConv {
                kernel_size,
                stride,
            } => {
                if kernel_size < 1 {
                    push(i, DiagnosticCode::BadKernel, "kernel size must be >= 1".into());
                }
                if stride != 1 && stride != 2 {
                    push(
                        i,
                        DiagnosticCode::BadStride,
                        format!("stride {stride} unsupported, expected 1 or 2"),
                    );
                }
            }
            LayerKind::TransposedUpsample { kernel_size } => {
                if kernel_size < 1 {
                    push(i, DiagnosticCode::BadKernel, "kernel size must be >= 1".into());
                }
            }
            LayerKind::ExtrapolateUpsample { mode } => {
                if mode == Reconstruction::TransposedConv {
                    push(
                        i,
                        DiagnosticCode::BadMode,
                        "transposed_conv needs a transposed_upsample layer".into(),
                    );
                }
                same_width(&mut push, l.index, l.in_channels, l.out_channels);
            }
            LayerKind::Activation => {
                same_width(&mut push, l.index, l.in_channels, l.out_channels);
                if l.activation == super::ActivationKind::Linear {
                    push(
                        i,
                        DiagnosticCode::NoopActivation,
                        "linear activation layer has no effect".into(),
                    );
                }
            }
            LayerKind::BatchNormInference => {
                same_width(&mut push, l.index, l.in_channels, l.out_channels)
            }
            LayerKind::TimeShift { shift } => {
                if shift == 0 {
                    push(i, DiagnosticCode::BadShift, "shift must be >= 1 frame".into());
                }
                same_width(&mut push, l.index, l.in_channels, l.out_channels);
            }
            LayerKind::ChannelConcat { source } => {
                if source >= i {
                    push(
                        i,
                        DiagnosticCode::DanglingSkip,
                        format!("dangling skip source {source}: must precede layer {i}"),
                    );
                } else {
                    let want = l.in_channels + g.channels_of(source);
                    if l.out_channels != want {
                        push(
                            i,
                            DiagnosticCode::ChannelMismatch,
                            format!(
                                "concat emits {} channels, expected {} + {} = {want}",
                                l.out_channels,
                                l.in_channels,
                                g.channels_of(source)
                            ),
                        );
                    }
                }
            }
        }
    }

    let matching = match_pairs(g);
    for d in &matching.unmatched_strides {
        push(
            *d,
            DiagnosticCode::UnmatchedStride,
            "stride-2 conv has no downstream upsample".into(),
        );
    }
    for u in &matching.unmatched_upsamples {
        push(
            *u,
            DiagnosticCode::UnmatchedUpsample,
            "upsample has no preceding stride-2 conv".into(),
        );
    }
    for l in &g.layers {
        if let LayerKind::TimeShift { .. } = l.kind {
            if let Some((d, u)) = matching
                .pairs
                .iter()
                .find(|(d, u)| *d < l.index && l.index <= *u)
            {
                push(
                    l.index,
                    DiagnosticCode::ShiftInsideSpan,
                    format!("time shift sits inside the strided span {d}..{u}"),
                );
            }
        }
    }

    let ok = !diags
        .iter()
        .any(|d| d.code.severity() == Severity::Error);
    ValidationReport {
        ok,
        diagnostics: diags,
    }
}

fn same_width(
    push: &mut impl FnMut(usize, DiagnosticCode, String),
    index: usize,
    inc: usize,
    outc: usize,
) {
    if inc != outc {
        push(
            index,
            DiagnosticCode::ChannelMismatch,
            format!("channel-preserving layer maps {inc} to {outc}"),
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ActivationKind::*;

    fn conv(g: &mut GraphSpec, i: usize, o: usize, k: usize, s: usize) {
        g.push(
            LayerKind::CausalConv {
                kernel_size: k,
                stride: s,
            },
            i,
            o,
            Linear,
        );
    }

    #[test]
    fn unmatched_stride_is_reported() {
        let mut g = GraphSpec::new("t", 1);
        conv(&mut g, 1, 1, 3, 1);
        conv(&mut g, 1, 1, 3, 2);
        conv(&mut g, 1, 1, 3, 1);
        let r = validate_graph(&g);
        assert!(!r.ok);
        assert!(r.has(DiagnosticCode::UnmatchedStride));
    }

    #[test]
    fn reports_every_violation() {
        let mut g = GraphSpec::new("t", 2);
        conv(&mut g, 2, 4, 0, 3);
        g.push(LayerKind::TimeShift { shift: 0 }, 4, 4, Linear);
        let r = validate_graph(&g);
        assert!(r.has(DiagnosticCode::BadKernel));
        assert!(r.has(DiagnosticCode::BadStride));
        assert!(r.has(DiagnosticCode::BadShift));
        assert_eq!(r.errors().count(), 3);
    }

    /// Propagates shapes independently of the validator and checks that a
    /// hand-built mismatch downstream of a concat is caught.
    #[test]
    fn concat_mismatch_confirmed_by_shape_propagation() {
        let mut g = GraphSpec::new("t", 3);
        conv(&mut g, 3, 5, 2, 1);
        g.push(LayerKind::ChannelConcat { source: 0 }, 5, 8, Linear);
        // consumer believes the concat produced 5 + 5 channels
        conv(&mut g, 10, 4, 2, 1);

        let mut width = vec![3usize];
        for l in &g.layers {
            let w = match l.kind {
                LayerKind::ChannelConcat { source } => width[l.index - 1] + width[source],
                _ => l.out_channels,
            };
            width.push(w);
        }
        let propagated_mismatch = g
            .layers
            .iter()
            .any(|l| l.in_channels != width[l.index - 1]);
        assert!(propagated_mismatch);

        let r = validate_graph(&g);
        assert!(!r.ok);
        assert!(r.has(DiagnosticCode::ChannelMismatch));
        assert_eq!(
            r.diagnostics
                .iter()
                .filter(|d| d.code == DiagnosticCode::ChannelMismatch)
                .map(|d| d.layer)
                .collect::<Vec<_>>(),
            vec![3]
        );
    }

    #[test]
    fn dangling_skip() {
        let mut g = GraphSpec::new("t", 1);
        conv(&mut g, 1, 1, 1, 1);
        g.push(LayerKind::ChannelConcat { source: 99 }, 1, 2, Linear);
        let r = validate_graph(&g);
        assert!(r.has(DiagnosticCode::DanglingSkip));
    }

    #[test]
    fn warnings_do_not_fail() {
        let mut g = GraphSpec::new("t", 1);
        conv(&mut g, 1, 1, 1, 1);
        g.push(LayerKind::Activation, 1, 1, Linear);
        let r = validate_graph(&g);
        assert!(r.ok);
        assert_eq!(r.diagnostics.len(), 1);
    }
}
