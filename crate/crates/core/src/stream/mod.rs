//! Frame-by-frame execution with cached partial states.
//!
//! Every node keeps a short history of its visible output indexed by data
//! time. A layer with lag `d` processes data time `t - d` during inference
//! `t` and performs work only when that data time falls on its period.
//! Work that does not need the frame of inference `t` can be done early
//! through [`StreamState::precompute`].

mod extrapolate;

pub use extrapolate::extrapolate;

use crate::graph::{GraphSpec, LayerKind, LayerSpec, Reconstruction};
use crate::plan::{PlanMode, SoiPlan};
use crate::weights::WeightStore;
use crate::{Error, Result};
use std::collections::VecDeque;

/// Fixed-capacity frame ring, zero-initialised, oldest frame first.
#[derive(Debug, Clone)]
struct Ring {
    channels: usize,
    capacity: usize,
    head: usize,
    data: Vec<f32>,
}

impl Ring {
    fn new(capacity: usize, channels: usize) -> Self {
        Ring {
            channels,
            capacity,
            head: 0,
            data: vec![0.0; capacity * channels],
        }
    }

    #[inline]
    fn frame(&self, i: usize) -> &[f32] {
        let slot = (self.head + i) % self.capacity;
        &self.data[slot * self.channels..(slot + 1) * self.channels]
    }

    fn push(&mut self, f: &[f32]) {
        if self.capacity == 0 {
            return;
        }
        let slot = self.head;
        self.data[slot * self.channels..(slot + 1) * self.channels].copy_from_slice(f);
        self.head = (self.head + 1) % self.capacity;
    }
}

#[derive(Debug, Clone)]
enum LayerState {
    Stateless,
    Conv { cache: Ring },
    Transposed { past: Ring, runs: usize },
    Extrapolate { held: Ring, runs: usize },
}

/// Visible output of one node, as `(data_time, frame)` change points.
#[derive(Debug, Clone)]
struct History {
    channels: usize,
    entries: VecDeque<(usize, Vec<f32>)>,
}

impl History {
    fn new(channels: usize) -> Self {
        History {
            channels,
            entries: VecDeque::new(),
        }
    }

    fn value_at(&self, tau: Option<usize>) -> Vec<f32> {
        if let Some(tau) = tau {
            for (at, f) in self.entries.iter().rev() {
                if *at <= tau {
                    return f.clone();
                }
            }
        }
        vec![0.0; self.channels]
    }

    fn record(&mut self, tau: usize, frame: Vec<f32>) {
        debug_assert!(self.entries.back().is_none_or(|(at, _)| *at < tau));
        self.entries.push_back((tau, frame));
    }

    fn forget_before(&mut self, tau: usize) {
        while self.entries.len() >= 2 && self.entries[1].0 <= tau {
            self.entries.pop_front();
        }
    }
}

/// What one push did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub t: usize,
    pub output: Vec<f32>,
    /// MACs performed by this push (excluding a consumed receipt).
    pub macs_performed: u64,
    pub layers_executed: Vec<usize>,
    /// MACs per node, index 0 being the input.
    pub layer_macs: Vec<u64>,
    /// Fresh output of each executed layer.
    pub values: Vec<(usize, Vec<f32>)>,
    /// Receipt merged into this inference, if one was pending.
    pub receipt: Option<PrecomputeReceipt>,
}

impl StepResult {
    /// MACs of the whole inference, including precomputed work.
    pub fn total_macs(&self) -> u64 {
        self.macs_performed + self.receipt.as_ref().map_or(0, |r| r.macs_performed)
    }
}

/// Work done ahead of the frame of inference `valid_for_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecomputeReceipt {
    pub valid_for_t: usize,
    pub computed_layers: Vec<usize>,
    pub macs_performed: u64,
    pub layer_macs: Vec<u64>,
    pub values: Vec<(usize, Vec<f32>)>,
}

/// All mutable state of one stream.
#[derive(Debug, Clone)]
pub struct StreamState {
    graph: GraphSpec,
    plan: SoiPlan,
    weights: WeightStore,
    t: usize,
    nodes: Vec<History>,
    layers: Vec<LayerState>,
    /// Data time through which each node's visible output is final.
    known: Vec<Option<usize>>,
    /// Largest `lag + shift` among the readers of each node.
    reach: Vec<usize>,
    /// Layers whose work for inference `t` is still to do.
    pending: Vec<bool>,
    started: bool,
    receipt: Option<PrecomputeReceipt>,
}

/// Checks the graph, plan and weights against each other and returns a
/// zero-initialised stream.
pub fn init_stream(g: &GraphSpec, plan: &SoiPlan, w: &WeightStore) -> Result<StreamState> {
    plan.check_consistent(g)?;
    w.check_shapes(g)?;
    let n = g.depth();
    let mut reach = vec![0usize; n + 1];
    for l in &g.layers {
        let shift = match l.kind {
            LayerKind::TimeShift { shift } => shift,
            _ => 0,
        };
        for i in g.inputs_of(l.index) {
            reach[i] = reach[i].max(plan.lag[l.index] + shift);
        }
    }
    let mut s = StreamState {
        graph: g.clone(),
        plan: plan.clone(),
        weights: w.clone(),
        t: 0,
        nodes: Vec::new(),
        layers: Vec::new(),
        known: Vec::new(),
        reach,
        pending: Vec::new(),
        started: false,
        receipt: None,
    };
    s.clear();
    Ok(s)
}

impl StreamState {
    fn clear(&mut self) {
        let g = &self.graph;
        let n = g.depth();
        self.t = 0;
        self.nodes = (0..=n).map(|i| History::new(g.channels_of(i))).collect();
        self.layers = std::iter::once(LayerState::Stateless)
            .chain(g.layers.iter().map(|l| match l.kind {
                LayerKind::CausalConv { kernel_size, .. } => LayerState::Conv {
                    cache: Ring::new(kernel_size - 1, l.in_channels),
                },
                LayerKind::TransposedUpsample { kernel_size } => LayerState::Transposed {
                    past: Ring::new(kernel_size.div_ceil(2) - 1, l.in_channels),
                    runs: 0,
                },
                LayerKind::ExtrapolateUpsample { mode } => LayerState::Extrapolate {
                    held: Ring::new(mode.held_frames(), l.in_channels),
                    runs: 0,
                },
                _ => LayerState::Stateless,
            }))
            .collect();
        self.known = vec![None; n + 1];
        self.pending = vec![false; n + 1];
        self.started = false;
        self.receipt = None;
    }

    /// Back to the state [`init_stream`] returned.
    pub fn reset(&mut self) {
        self.clear();
    }

    /// Index of the next inference.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn graph(&self) -> &GraphSpec {
        &self.graph
    }

    pub fn plan(&self) -> &SoiPlan {
        &self.plan
    }

    pub fn pending_receipt(&self) -> Option<&PrecomputeReceipt> {
        self.receipt.as_ref()
    }

    /// Bytes held by conv caches, upsampler holds and shift delays.
    pub fn footprint(&self) -> usize {
        crate::meter::cache_footprint(&self.graph, &self.plan)
    }

    /// Latest final output of node `index` and its data time.
    pub fn layer_output(&self, index: usize) -> Option<(usize, Vec<f32>)> {
        let tau = self.known[index]?;
        Some((tau, self.nodes[index].value_at(Some(tau))))
    }

    fn begin(&mut self) {
        if self.started {
            return;
        }
        let t = self.t;
        for l in 1..=self.graph.depth() {
            self.pending[l] = self.plan.runs_at(l, t);
            if !self.plan.updates_at(l, t) || !self.pending[l] {
                // a held output is already final
                if let Some(tau) = self.plan.data_time(l, t) {
                    self.known[l] = Some(tau);
                }
            }
        }
        self.started = true;
    }

    /// Data times read by layer `l` when processing `tau`.
    fn reads(&self, layer: &LayerSpec, tau: usize) -> Vec<(usize, Option<usize>)> {
        match layer.kind {
            LayerKind::TimeShift { shift } => vec![(layer.index - 1, tau.checked_sub(shift))],
            LayerKind::ChannelConcat { source } => {
                vec![(layer.index - 1, Some(tau)), (source, Some(tau))]
            }
            _ => vec![(layer.index - 1, Some(tau))],
        }
    }

    fn ready(&self, layer: &LayerSpec, tau: usize) -> bool {
        self.reads(layer, tau).iter().all(|&(node, at)| match at {
            None => true,
            Some(at) => self.known[node].is_some_and(|k| k >= at),
        })
    }

    /// Runs layer `l` for the current inference; returns MACs and the
    /// frame it made visible at the processed data time.
    fn execute(&mut self, l: usize) -> Result<(u64, Vec<f32>)> {
        let tau = self.plan.data_time(l, self.t).expect("pending layer has data");
        let period = self.plan.period[l];
        let update = self.plan.update_period[l];
        let layer = self.graph.layer(l).clone();
        let act = layer.activation;
        let input = self.nodes[l - 1].value_at(Some(tau));
        let mut macs = 0u64;
        let mut emitted: Vec<(usize, Vec<f32>)> = Vec::with_capacity(2);
        match (&layer.kind, &mut self.layers[l]) {
            (LayerKind::CausalConv { kernel_size, .. }, LayerState::Conv { cache }) => {
                let (kernel, bias) = self.weights.conv(l).expect("checked shapes");
                let k = *kernel_size;
                let mut out = vec![0.0f32; layer.out_channels];
                for (o, slot) in out.iter_mut().enumerate() {
                    let mut acc = 0.0f32;
                    for m in 0..k {
                        let xf = if m + 1 == k { &input[..] } else { cache.frame(m) };
                        for (c, xv) in xf.iter().enumerate() {
                            acc += kernel.at(o, c, m) * xv;
                        }
                        macs += layer.in_channels as u64;
                    }
                    *slot = act.apply(acc + bias[o]);
                }
                cache.push(&input);
                if tau % update == 0 {
                    emitted.push((tau, out));
                } else {
                    // strided layer off its emission phase: computed, not shown
                    return self.finish(l, tau, macs, vec![], out);
                }
            }
            (LayerKind::TransposedUpsample { kernel_size }, LayerState::Transposed { past, runs }) => {
                let (kernel, bias) = self.weights.conv(l).expect("checked shapes");
                let k = *kernel_size;
                let s = *runs;
                let held = past.capacity;
                for parity in 0..2 {
                    let mut out = vec![0.0f32; layer.out_channels];
                    for (o, slot) in out.iter_mut().enumerate() {
                        let mut acc = 0.0f32;
                        for m in (parity..k).step_by(2) {
                            let back = (m - parity) / 2;
                            if back <= s {
                                let yf = if back == 0 { &input[..] } else { past.frame(held - back) };
                                for (c, yv) in yf.iter().enumerate() {
                                    acc += kernel.at(o, c, m) * yv;
                                }
                            }
                            macs += layer.in_channels as u64;
                        }
                        *slot = act.apply(acc + bias[o]);
                    }
                    emitted.push((tau + parity * update, out));
                }
                past.push(&input);
                *runs += 1;
            }
            (LayerKind::ExtrapolateUpsample { mode }, LayerState::Extrapolate { held, runs }) => {
                let mode = *mode;
                let s = *runs;
                if mode == Reconstruction::Duplicate {
                    emitted.push((tau, input.iter().map(|v| act.apply(*v)).collect()));
                } else {
                    let first: Vec<f32> = if s == 0 {
                        vec![0.0; layer.out_channels]
                    } else {
                        let prev = held.frame(held.capacity - 1).to_vec();
                        let window: Vec<&[f32]> = match mode {
                            Reconstruction::Cubic => {
                                let older = if s >= 2 { held.frame(0) } else { &prev[..] };
                                vec![older, &prev, &input, &input]
                            }
                            _ => vec![&prev, &input],
                        };
                        extrapolate(&window, mode)?
                    };
                    emitted.push((tau, first.iter().map(|v| act.apply(*v)).collect()));
                    emitted.push((tau + update, input.iter().map(|v| act.apply(*v)).collect()));
                }
                held.push(&input);
                *runs += 1;
            }
            (LayerKind::TimeShift { shift }, _) => {
                let delayed = self.nodes[l - 1].value_at(tau.checked_sub(*shift));
                emitted.push((tau, delayed));
            }
            (LayerKind::ChannelConcat { source }, _) => {
                let mut f: Vec<f32> = input.iter().map(|v| act.apply(*v)).collect();
                let src = self.nodes[*source].value_at(Some(tau));
                f.extend(src.iter().map(|v| act.apply(*v)));
                emitted.push((tau, f));
            }
            (LayerKind::BatchNormInference, _) => {
                let (scale, offset) = self.weights.affine(l).expect("checked shapes");
                let f = input
                    .iter()
                    .zip(scale.iter().zip(offset))
                    .map(|(x, (a, b))| act.apply(x * a + b))
                    .collect();
                emitted.push((tau, f));
            }
            (LayerKind::Activation, _) => {
                emitted.push((tau, input.iter().map(|v| act.apply(*v)).collect()));
            }
            _ => unreachable!("layer state matches layer kind"),
        }
        debug_assert!(period >= 1);
        let shown = emitted[0].1.clone();
        self.finish(l, tau, macs, emitted, shown)
    }

    fn finish(
        &mut self,
        l: usize,
        tau: usize,
        macs: u64,
        emitted: Vec<(usize, Vec<f32>)>,
        value: Vec<f32>,
    ) -> Result<(u64, Vec<f32>)> {
        if value.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: format!("output of layer {l} at inference {}", self.t),
            });
        }
        for (at, f) in emitted {
            self.nodes[l].record(at, f);
        }
        self.known[l] = Some(tau);
        self.pending[l] = false;
        Ok((macs, value))
    }

    /// Runs every layer of the next inference that does not need its frame.
    pub fn precompute(&mut self) -> Result<PrecomputeReceipt> {
        if self.plan.mode == PlanMode::PartiallyPredictive {
            return Err(Error::PlanContract(
                "NO_PRECOMPUTABLE_LAYERS: the plan has no time shift".into(),
            ));
        }
        if self.receipt.is_some() {
            return Err(Error::PlanContract(format!(
                "RECEIPT_PENDING: inference {} was already precomputed",
                self.t
            )));
        }
        self.begin();
        let n = self.graph.depth();
        let mut receipt = PrecomputeReceipt {
            valid_for_t: self.t,
            computed_layers: Vec::new(),
            macs_performed: 0,
            layer_macs: vec![0; n + 1],
            values: Vec::new(),
        };
        for l in 1..=n {
            if !self.pending[l] {
                continue;
            }
            let tau = self.plan.data_time(l, self.t).expect("pending layer has data");
            if !self.ready(self.graph.layer(l), tau) {
                continue;
            }
            let (macs, value) = self.execute(l)?;
            receipt.computed_layers.push(l);
            receipt.macs_performed += macs;
            receipt.layer_macs[l] = macs;
            receipt.values.push((l, value));
        }
        self.receipt = Some(receipt.clone());
        Ok(receipt)
    }

    /// Feeds the frame of inference `t` and returns one output frame.
    ///
    /// After an error the stream must be [`reset`](Self::reset).
    pub fn push_frame(&mut self, x: &[f32]) -> Result<StepResult> {
        if x.len() != self.graph.frame_channels {
            return Err(Error::Shape(format!(
                "frame has {} channels, graph expects {}",
                x.len(),
                self.graph.frame_channels
            )));
        }
        if let Some(c) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: format!("{} in channel {c} of input frame {}", x[c], self.t),
            });
        }
        self.begin();
        let t = self.t;
        let n = self.graph.depth();
        self.nodes[0].record(t, x.to_vec());
        self.known[0] = Some(t);
        let mut step = StepResult {
            t,
            output: Vec::new(),
            macs_performed: 0,
            layers_executed: Vec::new(),
            layer_macs: vec![0; n + 1],
            values: Vec::new(),
            receipt: self.receipt.take(),
        };
        for l in 1..=n {
            if !self.pending[l] {
                continue;
            }
            let (macs, value) = self.execute(l)?;
            step.layers_executed.push(l);
            step.macs_performed += macs;
            step.layer_macs[l] = macs;
            step.values.push((l, value));
        }
        step.output = self.nodes[n].value_at(Some(t));
        for (i, h) in self.nodes.iter_mut().enumerate() {
            if let Some(keep) = (t + 1).checked_sub(self.reach[i] + 1) {
                h.forget_before(keep);
            }
        }
        self.t += 1;
        self.started = false;
        Ok(step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{apply_scc_transform, ActivationKind};
    use crate::oracle::{run_offline, run_offline_soi_trace};
    use crate::series::Series;

    fn conv(k: usize) -> LayerKind {
        LayerKind::CausalConv {
            kernel_size: k,
            stride: 1,
        }
    }

    fn chain(n: usize, k: usize) -> GraphSpec {
        let mut g = GraphSpec::new("chain", 1);
        for _ in 0..n {
            g.push(conv(k), 1, 1, ActivationKind::Linear);
        }
        g
    }

    fn stream_all(s: &mut StreamState, x: &Series) -> Vec<StepResult> {
        x.frames().map(|f| s.push_frame(f).unwrap()).collect()
    }

    #[test]
    fn single_conv_cache_and_identity() {
        let g = chain(1, 3);
        let plan = SoiPlan::derive(&g).unwrap();
        let s = init_stream(&g, &plan, &WeightStore::zeros(&g)).unwrap();
        match &s.layers[1] {
            LayerState::Conv { cache } => {
                assert_eq!(cache.capacity, 2);
                assert!(cache.data.iter().all(|v| *v == 0.0));
            }
            other => panic!("{other:?}"),
        }

        let g = chain(1, 1);
        let plan = SoiPlan::derive(&g).unwrap();
        let mut w = [1.0f32, 0.0].into_iter();
        let w = WeightStore::from_fn(&g, || w.next().unwrap());
        let mut s = init_stream(&g, &plan, &w).unwrap();
        for v in [0.5f32, -3.0, 7.25] {
            assert_eq!(s.push_frame(&[v]).unwrap().output, [v]);
        }
    }

    #[test]
    fn two_tap_sum_with_zero_warm_up() {
        let g = chain(1, 2);
        let plan = SoiPlan::derive(&g).unwrap();
        let mut w = [1.0f32, 1.0, 0.0].into_iter();
        let w = WeightStore::from_fn(&g, || w.next().unwrap());
        let mut s = init_stream(&g, &plan, &w).unwrap();
        let out: Vec<f32> = [1.0f32, 2.0, 3.0]
            .iter()
            .map(|v| s.push_frame(&[*v]).unwrap().output[0])
            .collect();
        assert_eq!(out, [1.0, 3.0, 5.0]);
    }

    #[test]
    fn odd_phase_holds_duplicate_with_no_work() {
        let (g, plan) = apply_scc_transform(&chain(4, 2), 2, 3, Reconstruction::Duplicate).unwrap();
        let w = WeightStore::from_fn(&g, {
            let mut v = 0.0f32;
            move || {
                v += 0.25;
                v
            }
        });
        let mut s = init_stream(&g, &plan, &w).unwrap();
        let r0 = s.push_frame(&[1.0]).unwrap();
        let held = s.layer_output(4).unwrap().1;
        let r1 = s.push_frame(&[-2.0]).unwrap();
        // the strided layer consumes every frame; the span behind it rests
        assert_eq!(r1.layer_macs[2], r0.layer_macs[2]);
        assert_eq!(r1.layer_macs[3], 0);
        assert!(r0.layer_macs[3] > 0);
        assert_eq!(s.layer_output(4).unwrap(), (1, held));
    }

    #[test]
    fn empty_plan_matches_offline_bitwise() {
        let mut g = GraphSpec::new("mix", 2);
        g.push(conv(3), 2, 3, ActivationKind::Elu);
        g.push(LayerKind::BatchNormInference, 3, 3, ActivationKind::Linear);
        g.push(conv(2), 3, 2, ActivationKind::Relu);
        g.push(LayerKind::ChannelConcat { source: 1 }, 2, 5, ActivationKind::Linear);
        g.push(conv(4), 5, 2, ActivationKind::Linear);
        let plan = SoiPlan::derive(&g).unwrap();
        let mut seed = 7u32;
        let mut next = move || {
            seed = seed.wrapping_mul(1_664_525).wrapping_add(1_013_904_223);
            (seed >> 8) as f32 / (1u32 << 24) as f32 - 0.5
        };
        let w = WeightStore::from_fn(&g, &mut next);
        let x = Series::new(2, (0..40).map(|_| next() * 4.0).collect()).unwrap();
        let want = run_offline(&g, &w, &x).unwrap();
        let mut s = init_stream(&g, &plan, &w).unwrap();
        let got: Vec<f32> = stream_all(&mut s, &x).into_iter().flat_map(|r| r.output).collect();
        assert_eq!(got, want.as_slice());
    }

    #[test]
    fn reset_replays_identically() {
        let (g, plan) = apply_scc_transform(&chain(3, 3), 1, 3, Reconstruction::Cubic).unwrap();
        let w = WeightStore::from_fn(&g, || 0.3);
        let x = Series::new(1, (0..17).map(|i| (i as f32).sin()).collect()).unwrap();
        let mut s = init_stream(&g, &plan, &w).unwrap();
        let bytes = s.footprint();
        let first = stream_all(&mut s, &x.prefix(9));
        s.reset();
        assert_eq!(s.t(), 0);
        assert_eq!(s.footprint(), bytes);
        assert_eq!(stream_all(&mut s, &x.prefix(9)), first);
    }

    #[test]
    fn shifted_output_starts_with_zero_history() {
        let mut g = GraphSpec::new("fp", 1);
        g.push(conv(1), 1, 1, ActivationKind::Linear);
        g.push(LayerKind::TimeShift { shift: 2 }, 1, 1, ActivationKind::Linear);
        let plan = SoiPlan::derive(&g).unwrap();
        let w = WeightStore::from_fn(&g, || 1.0);
        let mut s = init_stream(&g, &plan, &w).unwrap();
        let out: Vec<f32> = [3.0f32, 4.0, 5.0, 6.0]
            .iter()
            .map(|v| s.push_frame(&[*v]).unwrap().output[0])
            .collect();
        assert_eq!(out, [0.0, 0.0, 4.0, 5.0]);
    }

    #[test]
    fn precompute_contract() {
        let g = chain(2, 2);
        let plan = SoiPlan::derive(&g).unwrap();
        let mut s = init_stream(&g, &plan, &WeightStore::zeros(&g)).unwrap();
        let err = s.precompute().unwrap_err();
        assert!(matches!(&err, Error::PlanContract(m) if m.starts_with("NO_PRECOMPUTABLE_LAYERS")));

        let mut g = chain(2, 2);
        g.push(LayerKind::TimeShift { shift: 1 }, 1, 1, ActivationKind::Linear);
        let plan = SoiPlan::derive(&g).unwrap();
        let w = WeightStore::from_fn(&g, || 0.5);
        let mut s = init_stream(&g, &plan, &w).unwrap();
        let mut plain = s.clone();
        for (t, v) in [1.0f32, 2.0, -1.0, 4.0].into_iter().enumerate() {
            let r = s.precompute().unwrap();
            assert!(s.precompute().is_err());
            let all: &[usize] = if t == 0 { &[3] } else { &[1, 2, 3] };
            assert_eq!(r.computed_layers, all);
            let step = s.push_frame(&[v]).unwrap();
            assert_eq!(step.macs_performed, 0);
            let reference = plain.push_frame(&[v]).unwrap();
            assert_eq!(step.output, reference.output);
            assert_eq!(step.total_macs(), reference.macs_performed);
        }
    }

    #[test]
    fn interpolating_modes_match_hold_semantics() {
        for mode in Reconstruction::ALL {
            let (g, plan) = apply_scc_transform(&chain(3, 2), 1, 2, mode).unwrap();
            let w = WeightStore::from_fn(&g, {
                let mut v = 0.1f32;
                move || {
                    v = -v * 1.3;
                    v
                }
            });
            let x = Series::new(1, (0..23).map(|i| ((i * 7 % 11) as f32) - 5.0).collect()).unwrap();
            let trace = run_offline_soi_trace(&g, &plan, &w, &x).unwrap();
            let mut s = init_stream(&g, &plan, &w).unwrap();
            for (t, f) in x.frames().enumerate() {
                let r = s.push_frame(f).unwrap();
                assert_eq!(r.output, trace.last().unwrap().frame(t), "{mode} t={t}");
                for l in 1..=g.depth() {
                    let (tau, v) = s.layer_output(l).unwrap();
                    assert_eq!(v, trace[l].frame(tau), "{mode} layer {l} t={t}");
                }
            }
        }
    }
}
