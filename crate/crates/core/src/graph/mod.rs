//! Network descriptions: layer specs, graph text format, validation and the
//! scattered-inference rewrites (strided-cloned pairs and time shifts).

mod text;
mod transform;
pub(crate) mod validate;

pub use text::{parse_graph_document, parse_graph_spec, serialize_graph, serialize_graph_with_plan};
pub use transform::{apply_scc_transform, apply_time_shift};
pub use validate::{validate_graph, Diagnostic, DiagnosticCode, Severity, ValidationReport};

use serde::Serialize;
use std::fmt;
use std::str::FromStr;

/// Point-wise nonlinearity applied after a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    #[default]
    Linear,
    Relu,
    Elu,
}

impl ActivationKind {
    #[inline]
    pub fn apply(self, v: f32) -> f32 {
        match self {
            ActivationKind::Linear => v,
            ActivationKind::Relu => {
                if v > 0.0 {
                    v
                } else {
                    0.0
                }
            }
            ActivationKind::Elu => {
                if v > 0.0 {
                    v
                } else {
                    v.exp_m1()
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Linear => "linear",
            ActivationKind::Relu => "relu",
            ActivationKind::Elu => "elu",
        }
    }
}

impl FromStr for ActivationKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(ActivationKind::Linear),
            "relu" => Ok(ActivationKind::Relu),
            "elu" => Ok(ActivationKind::Elu),
            other => Err(format!("unknown activation `{other}`")),
        }
    }
}

/// How an upsample layer fills the frames skipped by its strided partner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reconstruction {
    /// Repeat the last computed frame.
    Duplicate,
    /// Odd positions take the next even frame.
    Nearest,
    /// Odd positions take the midpoint of the neighbouring even frames.
    Linear,
    /// Catmull-Rom midpoint over the neighbouring even frames.
    Cubic,
    /// Learned stride-2 transposed convolution.
    TransposedConv,
}

impl Reconstruction {
    pub const ALL: [Reconstruction; 5] = [
        Reconstruction::Duplicate,
        Reconstruction::Nearest,
        Reconstruction::Linear,
        Reconstruction::Cubic,
        Reconstruction::TransposedConv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Reconstruction::Duplicate => "duplicate",
            Reconstruction::Nearest => "nearest",
            Reconstruction::Linear => "linear",
            Reconstruction::Cubic => "cubic",
            Reconstruction::TransposedConv => "transposed_conv",
        }
    }

    /// Interpolating modes look one even frame ahead.
    pub fn waits_for_next_frame(self) -> bool {
        matches!(
            self,
            Reconstruction::Nearest | Reconstruction::Linear | Reconstruction::Cubic
        )
    }

    /// Number of frames the upsampler keeps between executions.
    pub fn held_frames(self) -> usize {
        match self {
            Reconstruction::Cubic => 2,
            _ => 1,
        }
    }
}

impl FromStr for Reconstruction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Reconstruction::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown reconstruction mode `{s}`"))
    }
}

impl fmt::Display for Reconstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    CausalConv { kernel_size: usize, stride: usize },
    TransposedUpsample { kernel_size: usize },
    ExtrapolateUpsample { mode: Reconstruction },
    Activation,
    BatchNormInference,
    /// Channel-axis concatenation of the previous layer's output with the
    /// output of `source` (0 is the network input).
    ChannelConcat { source: usize },
    TimeShift { shift: usize },
}

impl LayerKind {
    pub fn name(&self) -> &'static str {
        match self {
            LayerKind::CausalConv { .. } => "causal_conv",
            LayerKind::TransposedUpsample { .. } => "transposed_upsample",
            LayerKind::ExtrapolateUpsample { .. } => "extrapolate_upsample",
            LayerKind::Activation => "activation",
            LayerKind::BatchNormInference => "batch_norm",
            LayerKind::ChannelConcat { .. } => "channel_concat",
            LayerKind::TimeShift { .. } => "time_shift",
        }
    }

    pub fn is_upsample(&self) -> bool {
        matches!(
            self,
            LayerKind::TransposedUpsample { .. } | LayerKind::ExtrapolateUpsample { .. }
        )
    }

    pub fn is_strided(&self) -> bool {
        matches!(self, LayerKind::CausalConv { stride: 2, .. })
    }

    /// Reconstruction mode when the layer is an upsampler.
    pub fn reconstruction(&self) -> Option<Reconstruction> {
        match *self {
            LayerKind::TransposedUpsample { .. } => Some(Reconstruction::TransposedConv),
            LayerKind::ExtrapolateUpsample { mode } => Some(mode),
            _ => None,
        }
    }

    pub fn kernel_size(&self) -> Option<usize> {
        match *self {
            LayerKind::CausalConv { kernel_size, .. }
            | LayerKind::TransposedUpsample { kernel_size } => Some(kernel_size),
            _ => None,
        }
    }

    pub fn has_weights(&self) -> bool {
        matches!(
            self,
            LayerKind::CausalConv { .. }
                | LayerKind::TransposedUpsample { .. }
                | LayerKind::BatchNormInference
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LayerSpec {
    /// 1-based position in topological order.
    pub index: usize,
    pub kind: LayerKind,
    pub in_channels: usize,
    pub out_channels: usize,
    pub activation: ActivationKind,
}

impl LayerSpec {
    /// Multiply-accumulates performed each time the layer executes.
    pub fn macs_per_execution(&self) -> u64 {
        match self.kind.kernel_size() {
            Some(k) => (self.out_channels * self.in_channels * k) as u64,
            None => 0,
        }
    }
}

/// An ordered layer list. Layer `i` reads the output of layer `i - 1`
/// (layer 0 being the network input); concat layers additionally read
/// their `source`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GraphSpec {
    pub name: String,
    pub frame_channels: usize,
    pub layers: Vec<LayerSpec>,
}

impl GraphSpec {
    pub fn new(name: impl Into<String>, frame_channels: usize) -> Self {
        GraphSpec {
            name: name.into(),
            frame_channels,
            layers: Vec::new(),
        }
    }

    /// Appends a layer, assigning its index.
    pub fn push(
        &mut self,
        kind: LayerKind,
        in_channels: usize,
        out_channels: usize,
        activation: ActivationKind,
    ) -> usize {
        let index = self.layers.len() + 1;
        self.layers.push(LayerSpec {
            index,
            kind,
            in_channels,
            out_channels,
            activation,
        });
        index
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Layer by 1-based index.
    pub fn layer(&self, index: usize) -> &LayerSpec {
        &self.layers[index - 1]
    }

    /// Output channel count of node `index` (0 is the network input).
    pub fn channels_of(&self, index: usize) -> usize {
        if index == 0 {
            self.frame_channels
        } else {
            self.layers[index - 1].out_channels
        }
    }

    pub fn output_channels(&self) -> usize {
        self.channels_of(self.depth())
    }

    /// Skip edges `(source, concat_layer)` declared by concat layers.
    pub fn skip_edges(&self) -> Vec<(usize, usize)> {
        self.layers
            .iter()
            .filter_map(|l| match l.kind {
                LayerKind::ChannelConcat { source } => Some((source, l.index)),
                _ => None,
            })
            .collect()
    }

    /// Nodes read by layer `index`.
    pub fn inputs_of(&self, index: usize) -> Vec<usize> {
        match self.layer(index).kind {
            LayerKind::ChannelConcat { source } => vec![index - 1, source],
            _ => vec![index - 1],
        }
    }

    pub fn conv_layers(&self) -> impl Iterator<Item = &LayerSpec> {
        self.layers
            .iter()
            .filter(|l| matches!(l.kind, LayerKind::CausalConv { .. }))
    }

    pub(crate) fn renumber(&mut self) {
        for (i, l) in self.layers.iter_mut().enumerate() {
            l.index = i + 1;
        }
    }
}
