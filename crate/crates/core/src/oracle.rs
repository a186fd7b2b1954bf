//! Whole-sequence reference evaluation.
//!
//! [`run_offline`] evaluates the network as a plain multi-rate pipeline:
//! strided convs halve the length of their output series and upsamplers
//! restore it. [`run_offline_soi`] evaluates the scattered schedule on a
//! single full-rate time axis where a layer that does not run at time `t`
//! keeps its previous output. Both are written for clarity, not speed, and
//! serve as ground truth for the streaming engine.
//!
//! Every dot product accumulates tap-major, then channel, starting from
//! zero, and adds the bias last. The streaming engine uses the same order,
//! so results compare bit for bit.

use crate::graph::{GraphSpec, LayerKind, LayerSpec, Reconstruction};
use crate::plan::SoiPlan;
use crate::series::Series;
use crate::weights::{KernelTensor, WeightStore};
use crate::{Error, Result};

/// Valid cross-correlation of `x` with `kernel`.
pub fn conv1d_valid(
    x: &Series,
    kernel: &KernelTensor,
    bias: &[f32],
    stride: usize,
) -> Result<Series> {
    if x.channels() != kernel.in_channels {
        return Err(Error::Shape(format!(
            "input has {} channels, kernel expects {}",
            x.channels(),
            kernel.in_channels
        )));
    }
    if stride == 0 {
        return Err(Error::Shape("stride must be positive".into()));
    }
    let k = kernel.taps;
    if x.len() < k {
        return Err(Error::Shape(format!(
            "input of {} frames is shorter than the kernel ({k})",
            x.len()
        )));
    }
    let frames = (x.len() - k) / stride + 1;
    let mut out = Series::zeros(kernel.out_channels, frames);
    for j in 0..frames {
        let start = j * stride;
        for o in 0..kernel.out_channels {
            let mut acc = 0.0f32;
            for m in 0..k {
                let xf = x.frame(start + m);
                for (c, xv) in xf.iter().enumerate() {
                    acc += kernel.at(o, c, m) * xv;
                }
            }
            out.frame_mut(j)[o] = acc + bias[o];
        }
    }
    Ok(out)
}

fn left_pad(x: &Series, frames: usize) -> Series {
    let mut data = vec![0.0; frames * x.channels()];
    data.extend_from_slice(x.as_slice());
    Series::new(x.channels(), data).expect("padded series keeps its channel count")
}

fn conv_weights<'a>(w: &'a WeightStore, l: &LayerSpec) -> Result<(&'a KernelTensor, &'a [f32])> {
    w.conv(l.index)
        .ok_or_else(|| Error::Shape(format!("layer {} has no kernel", l.index)))
}

/// Causal convolution over every window of `z` (left zero padding).
fn causal_windows(z: &Series, kernel: &KernelTensor, bias: &[f32]) -> Result<Series> {
    conv1d_valid(&left_pad(z, kernel.taps - 1), kernel, bias, 1)
}

/// Reconstructs `len` frames at the upsampler's output rate from the
/// half-rate sequence `y`.
fn upsample_sequence(
    layer: &LayerSpec,
    w: &WeightStore,
    y: &Series,
    len: usize,
) -> Result<Series> {
    let mut v = Series::zeros(layer.out_channels, len);
    match layer.kind {
        LayerKind::TransposedUpsample { .. } => {
            let (kernel, bias) = conv_weights(w, layer)?;
            for r in 0..len {
                let s_now = r / 2;
                let parity = r % 2;
                for o in 0..layer.out_channels {
                    let mut acc = 0.0f32;
                    // taps with the output's parity, oldest input last
                    let mut m = parity;
                    while m < kernel.taps {
                        let back = (m - parity) / 2;
                        if back <= s_now {
                            let yf = y.frame(s_now - back);
                            for (c, yv) in yf.iter().enumerate() {
                                acc += kernel.at(o, c, m) * yv;
                            }
                        }
                        m += 2;
                    }
                    v.frame_mut(r)[o] = acc + bias[o];
                }
            }
        }
        LayerKind::ExtrapolateUpsample { mode } => {
            let ch = layer.out_channels;
            let at = |s: usize| y.frame(s.min(y.len() - 1));
            for r in 0..len {
                let frame: Vec<f32> = match mode {
                    Reconstruction::Duplicate => y.frame(r / 2).to_vec(),
                    _ => {
                        // one frame of look-ahead: position r shows r - 1
                        if r == 0 {
                            vec![0.0; ch]
                        } else {
                            let p = r - 1;
                            let s = p / 2;
                            if p % 2 == 0 {
                                y.frame(s).to_vec()
                            } else {
                                let (p0, p1, p2) = (at(s.saturating_sub(1)), at(s), at(s + 1));
                                (0..ch)
                                    .map(|c| match mode {
                                        Reconstruction::Nearest => p2[c],
                                        Reconstruction::Linear => (p1[c] + p2[c]) * 0.5,
                                        Reconstruction::Cubic => {
                                            let p3 = p2[c];
                                            ((p1[c] + p2[c]) * 9.0 - (p0[c] + p3)) * 0.0625
                                        }
                                        _ => unreachable!(),
                                    })
                                    .collect()
                            }
                        }
                    }
                };
                v.frame_mut(r).copy_from_slice(&frame);
            }
        }
        _ => unreachable!("not an upsampler"),
    }
    Ok(v)
}

fn apply_activation(layer: &LayerSpec, s: &mut Series) {
    let act = layer.activation;
    for t in 0..s.len() {
        for v in s.frame_mut(t) {
            *v = act.apply(*v);
        }
    }
}

/// Point-wise layers: activation, batch norm, concat, applied to one frame.
fn pointwise(layer: &LayerSpec, w: &WeightStore, prev: &[f32], source: Option<&[f32]>) -> Result<Vec<f32>> {
    let mut out: Vec<f32> = match layer.kind {
        LayerKind::Activation => prev.to_vec(),
        LayerKind::BatchNormInference => {
            let (scale, offset) = w
                .affine(layer.index)
                .ok_or_else(|| Error::Shape(format!("layer {} has no affine weights", layer.index)))?;
            prev.iter()
                .zip(scale.iter().zip(offset))
                .map(|(x, (a, b))| x * a + b)
                .collect()
        }
        LayerKind::ChannelConcat { .. } => {
            let mut v = prev.to_vec();
            v.extend_from_slice(source.expect("concat source"));
            v
        }
        _ => unreachable!("not a point-wise layer"),
    };
    for v in &mut out {
        *v = layer.activation.apply(*v);
    }
    Ok(out)
}

fn check_inputs(g: &GraphSpec, w: &WeightStore, x: &Series) -> Result<()> {
    crate::graph::validate_graph(g).into_result()?;
    w.check_shapes(g)?;
    if x.channels() != g.frame_channels {
        return Err(Error::Shape(format!(
            "input has {} channels, graph expects {}",
            x.channels(),
            g.frame_channels
        )));
    }
    x.ensure_finite()
}

fn ensure_finite_at(layer: usize, s: &Series) -> Result<()> {
    s.ensure_finite().map_err(|e| match e {
        Error::NonFinite { what } => Error::NonFinite {
            what: format!("{what} in the output of layer {layer}"),
        },
        e => e,
    })
}

/// Plain whole-sequence inference. Each conv sees `kernel_size - 1` zero
/// frames of history, so the output has as many frames as the input.
pub fn run_offline(g: &GraphSpec, w: &WeightStore, x: &Series) -> Result<Series> {
    check_inputs(g, w, x)?;
    let t_len = x.len();
    // (rate, series) per node; rate r means one frame every r input frames
    let mut nodes: Vec<(usize, Series)> = vec![(1, x.clone())];
    for layer in &g.layers {
        let (rate, input) = nodes[layer.index - 1].clone();
        let len_at = |r: usize| t_len.div_ceil(r);
        let (out_rate, mut out) = match layer.kind {
            LayerKind::CausalConv { stride, .. } => {
                let (kernel, bias) = conv_weights(w, layer)?;
                let padded = left_pad(&input, kernel.taps - 1);
                let s = if input.is_empty() {
                    Series::zeros(layer.out_channels, 0)
                } else {
                    conv1d_valid(&padded, kernel, bias, stride)?
                };
                (rate * stride, s)
            }
            LayerKind::TransposedUpsample { .. } | LayerKind::ExtrapolateUpsample { .. } => {
                let r = rate / 2;
                (r, upsample_sequence(layer, w, &input, len_at(r))?)
            }
            LayerKind::TimeShift { shift } => {
                let mut s = Series::zeros(layer.out_channels, input.len());
                for t in shift..input.len() {
                    s.frame_mut(t).copy_from_slice(input.frame(t - shift));
                }
                (rate, s)
            }
            LayerKind::ChannelConcat { source } => {
                let (src_rate, src) = &nodes[source];
                if *src_rate != rate {
                    return Err(Error::Shape(format!(
                        "layer {} concatenates series of rates 1/{rate} and 1/{src_rate}",
                        layer.index
                    )));
                }
                let mut s = Series::zeros(layer.out_channels, input.len());
                for t in 0..input.len() {
                    let f = pointwise(layer, w, input.frame(t), Some(src.frame(t)))?;
                    s.frame_mut(t).copy_from_slice(&f);
                }
                nodes.push((rate, s));
                continue;
            }
            LayerKind::Activation | LayerKind::BatchNormInference => {
                let mut s = Series::zeros(layer.out_channels, input.len());
                for t in 0..input.len() {
                    let f = pointwise(layer, w, input.frame(t), None)?;
                    s.frame_mut(t).copy_from_slice(&f);
                }
                nodes.push((rate, s));
                continue;
            }
        };
        if !matches!(layer.kind, LayerKind::TimeShift { .. }) {
            apply_activation(layer, &mut out);
        }
        ensure_finite_at(layer.index, &out)?;
        nodes.push((out_rate, out));
    }
    let (rate, out) = nodes.pop().expect("at least one layer");
    debug_assert_eq!(rate, 1);
    Ok(out)
}

/// Whole-sequence evaluation of the scattered schedule.
pub fn run_offline_soi(g: &GraphSpec, plan: &SoiPlan, w: &WeightStore, x: &Series) -> Result<Series> {
    run_offline_soi_trace(g, plan, w, x).map(|mut nodes| nodes.pop().expect("output node"))
}

/// Like [`run_offline_soi`] but returns the full-rate output of every node
/// (entry 0 is the input).
pub fn run_offline_soi_trace(
    g: &GraphSpec,
    plan: &SoiPlan,
    w: &WeightStore,
    x: &Series,
) -> Result<Vec<Series>> {
    check_inputs(g, w, x)?;
    plan.check_consistent(g)?;
    let t_len = x.len();
    let mut nodes: Vec<Series> = vec![x.clone()];
    for layer in &g.layers {
        let l = layer.index;
        let period = plan.period[l];
        let update = plan.update_period[l];
        let input = &nodes[l - 1];
        let runs = t_len.div_ceil(period);
        // what the layer consumed at each of its runs
        let consumed = Series::from_frames(
            input.channels(),
            (0..runs).map(|i| input.frame(i * period)),
        )?;
        let mut out = Series::zeros(layer.out_channels, t_len);
        match layer.kind {
            LayerKind::CausalConv { .. } => {
                let (kernel, bias) = conv_weights(w, layer)?;
                let mut windows = causal_windows(&consumed, kernel, bias)?;
                apply_activation(layer, &mut windows);
                for t in 0..t_len {
                    // strided layers forward only windows on their update phase
                    let i = (t / update) * (update / period);
                    out.frame_mut(t).copy_from_slice(windows.frame(i));
                }
            }
            LayerKind::TransposedUpsample { .. } | LayerKind::ExtrapolateUpsample { .. } => {
                let mut v = upsample_sequence(layer, w, &consumed, t_len.div_ceil(update))?;
                apply_activation(layer, &mut v);
                for t in 0..t_len {
                    out.frame_mut(t).copy_from_slice(v.frame(t / update));
                }
            }
            LayerKind::TimeShift { shift } => {
                debug_assert_eq!(period, 1);
                for t in shift..t_len {
                    out.frame_mut(t).copy_from_slice(input.frame(t - shift));
                }
            }
            LayerKind::ChannelConcat { source } => {
                let src = &nodes[source];
                for t in 0..t_len {
                    let at = (t / period) * period;
                    let f = pointwise(layer, w, input.frame(at), Some(src.frame(at)))?;
                    out.frame_mut(t).copy_from_slice(&f);
                }
            }
            LayerKind::Activation | LayerKind::BatchNormInference => {
                for t in 0..t_len {
                    let at = (t / period) * period;
                    let f = pointwise(layer, w, input.frame(at), None)?;
                    out.frame_mut(t).copy_from_slice(&f);
                }
            }
        }
        ensure_finite_at(l, &out)?;
        nodes.push(out);
    }
    Ok(nodes)
}
