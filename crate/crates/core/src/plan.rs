//! The scattered-inference schedule derived from a graph.
//!
//! A plan is fully determined by the graph it was derived from: strided
//! convs matched to upsamplers give the pairs, time-shift layers give the
//! shifts. Three per-layer quantities drive execution:
//!
//! * `period`: the layer runs once every `period` inferences, where
//!   `period = 2^(number of pairs (d, u) with d < l <= u)`.
//! * `lag`: the layer processes data time `t - lag` during inference `t`.
//!   Work whose result is only needed after a time shift is deferred by the
//!   shift, so it can run before the next frame arrives.
//! * `phase = lag mod period`: the residue class of inferences at which the
//!   layer runs.

use crate::graph::{validate::match_pairs, validate_graph, GraphSpec, LayerKind, Reconstruction};
use crate::{Error, Result};
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SccPair {
    /// The stride-2 conv.
    pub down: usize,
    /// The layer whose output is reconstructed.
    pub last: usize,
    /// The upsample layer, always `last + 1`.
    pub upsample: usize,
    pub reconstruction: Reconstruction,
    /// Frames of algorithmic latency added by look-ahead interpolation.
    pub extra_latency: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ShiftPoint {
    /// Index of the time-shift layer.
    pub layer: usize,
    pub frames: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PlanMode {
    #[serde(rename = "PP")]
    PartiallyPredictive,
    #[serde(rename = "FP")]
    FullyPredictive,
    #[serde(rename = "hybrid")]
    Hybrid,
}

impl PlanMode {
    pub fn name(self) -> &'static str {
        match self {
            PlanMode::PartiallyPredictive => "pp",
            PlanMode::FullyPredictive => "fp",
            PlanMode::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for PlanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SoiPlan {
    pub pairs: Vec<SccPair>,
    pub shifts: Vec<ShiftPoint>,
    pub mode: PlanMode,
    /// Indexed by layer (entry 0 is the input and always 1).
    pub period: Vec<usize>,
    /// Indexed by layer; entry 0 is the input node.
    pub lag: Vec<usize>,
    /// Indexed by layer, `lag mod period`.
    pub phase: Vec<usize>,
    /// Indexed by layer: how often the layer's visible output changes.
    pub update_period: Vec<usize>,
}

impl SoiPlan {
    /// Derives the plan encoded by a valid graph.
    pub fn derive(g: &GraphSpec) -> Result<SoiPlan> {
        validate_graph(g).into_result()?;
        let n = g.depth();
        let matching = match_pairs(g);

        let mut period = vec![1usize; n + 1];
        for &(d, u) in &matching.pairs {
            for p in period.iter_mut().take(u + 1).skip(d + 1) {
                *p *= 2;
            }
        }

        let mut update_period = period.clone();
        for l in &g.layers {
            if l.kind.is_strided() {
                update_period[l.index] = period[l.index] * 2;
            } else if l.kind.is_upsample() {
                update_period[l.index] = period[l.index] / 2;
            }
        }

        let mut pairs: Vec<SccPair> = matching
            .pairs
            .iter()
            .map(|&(d, u)| {
                let reconstruction = g.layer(u).kind.reconstruction().expect("upsample layer");
                let extra_latency = if reconstruction.waits_for_next_frame() {
                    update_period[u]
                } else {
                    0
                };
                SccPair {
                    down: d,
                    last: u - 1,
                    upsample: u,
                    reconstruction,
                    extra_latency,
                }
            })
            .collect();
        pairs.sort_by_key(|p| (p.down, p.upsample));

        let shifts: Vec<ShiftPoint> = g
            .layers
            .iter()
            .filter_map(|l| match l.kind {
                LayerKind::TimeShift { shift } => Some(ShiftPoint {
                    layer: l.index,
                    frames: shift,
                }),
                _ => None,
            })
            .collect();

        let mode = if shifts.is_empty() {
            PlanMode::PartiallyPredictive
        } else if shifts
            .iter()
            .any(|s| pairs.iter().any(|p| p.upsample + 1 < s.layer))
        {
            PlanMode::Hybrid
        } else {
            PlanMode::FullyPredictive
        };

        let lag = compute_lags(g);
        let phase = lag
            .iter()
            .zip(&period)
            .map(|(&l, &p)| l % p)
            .collect();

        Ok(SoiPlan {
            pairs,
            shifts,
            mode,
            period,
            lag,
            phase,
            update_period,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty() && self.shifts.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.period.len() - 1
    }

    /// Length of one full schedule cycle (all periods are powers of two).
    pub fn cycle(&self) -> usize {
        self.period.iter().copied().max().unwrap_or(1)
    }

    /// Inferences needed before every layer processes non-negative data time.
    pub fn warm_up(&self) -> usize {
        self.lag.iter().copied().max().unwrap_or(0)
    }

    pub fn total_shift(&self) -> usize {
        self.shifts.iter().map(|s| s.frames).sum()
    }

    /// Total look-ahead latency contributed by interpolating upsamplers.
    pub fn extra_latency(&self) -> usize {
        self.pairs.iter().map(|p| p.extra_latency).sum()
    }

    /// Data time processed by `layer` during inference `t`, if any.
    #[inline]
    pub fn data_time(&self, layer: usize, t: usize) -> Option<usize> {
        t.checked_sub(self.lag[layer])
    }

    /// Whether `layer` performs its computation during inference `t`.
    #[inline]
    pub fn runs_at(&self, layer: usize, t: usize) -> bool {
        self.data_time(layer, t)
            .is_some_and(|tau| tau % self.period[layer] == 0)
    }

    /// Whether `layer`'s visible output changes during inference `t`.
    #[inline]
    pub fn updates_at(&self, layer: usize, t: usize) -> bool {
        self.data_time(layer, t)
            .is_some_and(|tau| tau % self.update_period[layer] == 0)
    }

    /// Fails unless `self` is exactly the plan encoded by `g`.
    pub fn check_consistent(&self, g: &GraphSpec) -> Result<()> {
        let derived = SoiPlan::derive(g)?;
        if &derived != self {
            return Err(Error::PlanContract(
                "plan does not match the graph it is used with".into(),
            ));
        }
        Ok(())
    }

    /// Fixed-width period/phase table, one row per layer.
    pub fn period_table(&self, g: &GraphSpec) -> String {
        let mut out = String::from("layer  kind                  period  phase  lag\n");
        for l in &g.layers {
            out.push_str(&format!(
                "{:>5}  {:<20}  {:>6}  {:>5}  {:>3}\n",
                l.index,
                l.kind.name(),
                self.period[l.index],
                self.phase[l.index],
                self.lag[l.index]
            ));
        }
        out.push_str(&format!(
            "mode {}  pairs {}  shifts {}  extra latency {}\n",
            self.mode,
            self.pairs.len(),
            self.shifts.len(),
            self.extra_latency()
        ));
        out
    }
}

/// Lag of every node: the least total shift on any path to the output.
fn compute_lags(g: &GraphSpec) -> Vec<usize> {
    let n = g.depth();
    let mut lag = vec![usize::MAX; n + 1];
    lag[n] = 0;
    for l in (1..=n).rev() {
        let own = lag[l];
        debug_assert_ne!(own, usize::MAX);
        let layer = g.layer(l);
        let through = match layer.kind {
            LayerKind::TimeShift { shift } => own + shift,
            _ => own,
        };
        lag[l - 1] = lag[l - 1].min(through);
        if let LayerKind::ChannelConcat { source } = layer.kind {
            lag[source] = lag[source].min(own);
        }
    }
    lag
}
