use super::{validate_graph, ActivationKind, GraphSpec, LayerKind, LayerSpec, Reconstruction};
use crate::plan::SoiPlan;
use crate::{Error, Result};

/// Kernel length of upsamplers inserted for `transposed_conv` reconstruction:
/// one tap per output phase.
pub const INSERTED_TRANSPOSED_KERNEL: usize = 2;

/// Turns the span `l_d..=l_u` into a strided-cloned pair.
///
/// Layer `l_d` becomes a stride-2 conv and an upsampler is inserted right
/// after `l_u`. Unless `l_u` is already followed by a concat of `l_d`'s
/// input, a concat with that input is inserted after the upsampler and the
/// widened channel count is propagated downstream.
pub fn apply_scc_transform(
    g: &GraphSpec,
    l_d: usize,
    l_u: usize,
    reconstruction: Reconstruction,
) -> Result<(GraphSpec, SoiPlan)> {
    let plan = SoiPlan::derive(g)?;
    if l_d == 0 || l_u > g.depth() {
        return Err(Error::Transform(format!(
            "pair {l_d}:{l_u} out of range 1..={}",
            g.depth()
        )));
    }
    if l_d >= l_u {
        return Err(Error::Transform(format!(
            "l_d must precede l_u (got {l_d}:{l_u})"
        )));
    }
    match g.layer(l_d).kind {
        LayerKind::CausalConv { stride: 1, .. } => {}
        LayerKind::CausalConv { .. } => {
            return Err(Error::Transform(format!(
                "layer {l_d} is already strided"
            )))
        }
        _ => {
            return Err(Error::Transform(format!(
                "l_d = {l_d} is not a conv layer"
            )))
        }
    }
    for p in &plan.pairs {
        let (d, u) = (p.down, p.upsample);
        let inside = d < l_d && l_u < u;
        let around = l_d < d && u <= l_u;
        let disjoint = l_u < d || u < l_d;
        if !(inside || around || disjoint) {
            return Err(Error::Transform(format!(
                "pair {l_d}:{l_u} partially overlaps existing pair {d}..{u}"
            )));
        }
    }

    let mut out = g.clone();
    if let LayerKind::CausalConv { stride, .. } = &mut out.layers[l_d - 1].kind {
        *stride = 2;
    }

    let width = g.channels_of(l_u);
    let upsample = match reconstruction {
        Reconstruction::TransposedConv => LayerKind::TransposedUpsample {
            kernel_size: INSERTED_TRANSPOSED_KERNEL,
        },
        mode => LayerKind::ExtrapolateUpsample { mode },
    };
    insert_after(&mut out, l_u, upsample, width, width);

    let skip_source = l_d - 1;
    let skip_exists = l_u < g.depth()
        && matches!(g.layer(l_u + 1).kind, LayerKind::ChannelConcat { source } if source == skip_source);
    if !skip_exists {
        let wide = width + g.channels_of(skip_source);
        insert_after(
            &mut out,
            l_u + 1,
            LayerKind::ChannelConcat {
                source: skip_source,
            },
            width,
            wide,
        );
        propagate_widths(&mut out);
    }

    let plan = SoiPlan::derive(&out)?;
    Ok((out, plan))
}

/// Inserts a time shift of `k` frames after `layer`; when `layer` closes a
/// strided-cloned pair the shift goes after its upsampler, so extrapolation
/// happens before shifting.
pub fn apply_time_shift(g: &GraphSpec, layer: usize, k: usize) -> Result<(GraphSpec, SoiPlan)> {
    let plan = SoiPlan::derive(g)?;
    if k == 0 {
        return Err(Error::Transform("shift must be at least one frame".into()));
    }
    if layer == 0 {
        return Err(Error::Transform("shift placed before layer 1".into()));
    }
    if layer > g.depth() {
        return Err(Error::Transform(format!(
            "shift position {layer} beyond depth {}",
            g.depth()
        )));
    }
    let at = plan
        .pairs
        .iter()
        .find(|p| p.last == layer)
        .map_or(layer, |p| p.upsample);
    let width = g.channels_of(at);
    let mut out = g.clone();
    insert_after(&mut out, at, LayerKind::TimeShift { shift: k }, width, width);

    let report = validate_graph(&out);
    if !report.ok {
        return Err(Error::Transform(
            report
                .errors()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join("; "),
        ));
    }
    let plan = SoiPlan::derive(&out)?;
    Ok((out, plan))
}

fn insert_after(g: &mut GraphSpec, pos: usize, kind: LayerKind, inc: usize, outc: usize) {
    for l in g.layers.iter_mut().skip(pos) {
        if let LayerKind::ChannelConcat { source } = &mut l.kind {
            if *source > pos {
                *source += 1;
            }
        }
    }
    g.layers.insert(
        pos,
        LayerSpec {
            index: pos + 1,
            kind,
            in_channels: inc,
            out_channels: outc,
            activation: ActivationKind::Linear,
        },
    );
    g.renumber();
}

/// Recomputes channel counts after a layer was widened: every layer reads
/// its predecessor's width, channel-preserving layers pass it on, concats
/// add their source, convolutions keep their declared output.
fn propagate_widths(g: &mut GraphSpec) {
    for i in 0..g.layers.len() {
        let upstream = g.channels_of(i);
        let l = &mut g.layers[i];
        l.in_channels = upstream;
        match l.kind {
            LayerKind::CausalConv { .. } | LayerKind::TransposedUpsample { .. } => {}
            LayerKind::ChannelConcat { source } => {
                let extra = if source == 0 {
                    g.frame_channels
                } else {
                    g.layers[source - 1].out_channels
                };
                g.layers[i].out_channels = upstream + extra;
            }
            _ => l.out_channels = upstream,
        }
    }
}
