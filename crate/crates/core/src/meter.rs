//! Multiply-accumulate accounting.
//!
//! Only conv and transposed-conv kernels count. Averages are exact
//! rationals over one schedule cycle.

use crate::graph::{GraphSpec, LayerKind};
use crate::plan::{PlanMode, SoiPlan};
use crate::stream::StepResult;
use crate::{Error, Result};
use num_rational::Ratio;
use serde::Serialize;
use std::fmt::Write as _;

pub type Rational = Ratio<u64>;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerMacs {
    pub index: usize,
    pub macs_per_execution: u64,
    pub period: usize,
    pub average_macs_per_inference: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacReport {
    pub per_layer: Vec<LayerMacs>,
    pub total_average: Rational,
    pub total_peak: u64,
    /// Average cost of the same layers with every period set to 1.
    pub baseline: u64,
    pub retain: Rational,
    pub precomputed_fraction: Rational,
    pub cache_bytes: usize,
}

fn ratio_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Serialize)]
struct LayerView {
    index: usize,
    macs_per_execution: u64,
    period: usize,
    average_macs_per_inference: f64,
    average_macs_per_inference_exact: String,
}

#[derive(Serialize)]
struct ReportView {
    per_layer: Vec<LayerView>,
    total_average: f64,
    total_average_exact: String,
    total_peak: u64,
    baseline: u64,
    retain: f64,
    retain_exact: String,
    precomputed_fraction: f64,
    precomputed_fraction_exact: String,
    cache_bytes: usize,
}

impl Serialize for MacReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ReportView {
            per_layer: self
                .per_layer
                .iter()
                .map(|l| LayerView {
                    index: l.index,
                    macs_per_execution: l.macs_per_execution,
                    period: l.period,
                    average_macs_per_inference: ratio_f64(&l.average_macs_per_inference),
                    average_macs_per_inference_exact: l.average_macs_per_inference.to_string(),
                })
                .collect(),
            total_average: ratio_f64(&self.total_average),
            total_average_exact: self.total_average.to_string(),
            total_peak: self.total_peak,
            baseline: self.baseline,
            retain: ratio_f64(&self.retain),
            retain_exact: self.retain.to_string(),
            precomputed_fraction: ratio_f64(&self.precomputed_fraction),
            precomputed_fraction_exact: self.precomputed_fraction.to_string(),
            cache_bytes: self.cache_bytes,
        }
        .serialize(s)
    }
}

impl MacReport {
    /// Fixed-width table followed by the totals.
    pub fn to_table(&self, g: &GraphSpec) -> String {
        let mut out = String::from("layer  kind                  macs/exec  period  avg/inference\n");
        for l in &self.per_layer {
            let _ = writeln!(
                out,
                "{:>5}  {:<20}  {:>9}  {:>6}  {:>13.3}",
                l.index,
                g.layer(l.index).kind.name(),
                l.macs_per_execution,
                l.period,
                ratio_f64(&l.average_macs_per_inference)
            );
        }
        let _ = writeln!(out, "average MACs/inference  {:.3} ({})", ratio_f64(&self.total_average), self.total_average);
        let _ = writeln!(out, "peak MACs/inference     {}", self.total_peak);
        let _ = writeln!(out, "baseline MACs/inference {}", self.baseline);
        let _ = writeln!(out, "complexity retain       {:.2}%", 100.0 * ratio_f64(&self.retain));
        let _ = writeln!(out, "precomputed             {:.2}%", 100.0 * ratio_f64(&self.precomputed_fraction));
        let _ = writeln!(out, "cache                   {} bytes", self.cache_bytes);
        out
    }
}

fn baseline(g: &GraphSpec) -> u64 {
    g.layers.iter().map(|l| l.macs_per_execution()).sum()
}

fn ratio_or(num: u64, den: u64, empty: u64) -> Rational {
    if den == 0 {
        Rational::from_integer(empty)
    } else {
        Rational::new(num, den)
    }
}

/// First inference of the steady-state window used for cycle sums.
fn steady_start(plan: &SoiPlan) -> usize {
    plan.warm_up() + 2 * plan.cycle()
}

/// Cost model derived from the period law alone.
pub fn analytic_mac_profile(g: &GraphSpec, plan: &SoiPlan) -> Result<MacReport> {
    plan.check_consistent(g)?;
    let per_layer: Vec<LayerMacs> = g
        .layers
        .iter()
        .map(|l| {
            let macs = l.macs_per_execution();
            let period = plan.period[l.index];
            LayerMacs {
                index: l.index,
                macs_per_execution: macs,
                period,
                average_macs_per_inference: Rational::new(macs, period as u64),
            }
        })
        .collect();
    let total_average = per_layer
        .iter()
        .fold(Rational::from_integer(0), |acc, l| acc + l.average_macs_per_inference);
    let start = steady_start(plan);
    let total_peak = (start..start + plan.cycle())
        .map(|t| {
            g.layers
                .iter()
                .filter(|l| plan.runs_at(l.index, t))
                .map(|l| l.macs_per_execution())
                .sum::<u64>()
        })
        .max()
        .unwrap_or(0);
    let base = baseline(g);
    Ok(MacReport {
        retain: if base == 0 {
            Rational::from_integer(1)
        } else {
            total_average / Rational::from_integer(base)
        },
        per_layer,
        total_average,
        total_peak,
        baseline: base,
        precomputed_fraction: precomputed_fraction(g, plan)?,
        cache_bytes: cache_footprint(g, plan),
    })
}

/// Aggregates the MACs counted by the stream engine. The trace must cover
/// one full cycle after warm-up; receipts merged into steps count too.
pub fn measured_mac_profile(g: &GraphSpec, plan: &SoiPlan, trace: &[StepResult]) -> Result<MacReport> {
    plan.check_consistent(g)?;
    let cycle = plan.cycle();
    let window: Vec<&StepResult> = trace
        .iter()
        .filter(|s| s.t >= plan.warm_up())
        .take(cycle)
        .collect();
    if window.len() < cycle || window.windows(2).any(|w| w[1].t != w[0].t + 1) {
        return Err(Error::TraceTooShort {
            len: trace.len(),
            cycle: plan.warm_up() + cycle,
        });
    }
    let n = g.depth();
    let mut sums = vec![0u64; n + 1];
    let mut precomputed = 0u64;
    let mut peak = 0u64;
    for s in &window {
        for (l, m) in s.layer_macs.iter().enumerate() {
            sums[l] += m;
        }
        if let Some(r) = &s.receipt {
            for (l, m) in r.layer_macs.iter().enumerate() {
                sums[l] += m;
            }
            precomputed += r.macs_performed;
        }
        peak = peak.max(s.total_macs());
    }
    let per_layer: Vec<LayerMacs> = g
        .layers
        .iter()
        .map(|l| LayerMacs {
            index: l.index,
            macs_per_execution: l.macs_per_execution(),
            period: plan.period[l.index],
            average_macs_per_inference: Rational::new(sums[l.index], cycle as u64),
        })
        .collect();
    let total: u64 = sums.iter().sum();
    let total_average = Rational::new(total, cycle as u64);
    let base = baseline(g);
    Ok(MacReport {
        per_layer,
        retain: if base == 0 {
            Rational::from_integer(1)
        } else {
            total_average / Rational::from_integer(base)
        },
        total_average,
        total_peak: peak,
        baseline: base,
        precomputed_fraction: ratio_or(precomputed, total, 0),
        cache_bytes: cache_footprint(g, plan),
    })
}

/// Latest input frame read by each execution, indexed by layer and data
/// time `0..horizon` (`None` means only constants were read).
fn trace_taint(g: &GraphSpec, plan: &SoiPlan, horizon: usize) -> Vec<Vec<Option<usize>>> {
    let n = g.depth();
    let mut visible = vec![vec![None; horizon]; n + 1];
    let mut run = vec![vec![None; horizon]; n + 1];
    visible[0] = (0..horizon).map(Some).collect();
    for layer in &g.layers {
        let l = layer.index;
        let p = plan.period[l];
        let u = plan.update_period[l];
        let input = visible[l - 1].clone();
        let mut vis = vec![None; horizon];
        let mut runs = vec![None; horizon];
        for tau in 0..horizon {
            let hold = if tau > 0 { vis[tau - 1] } else { None };
            if tau % p != 0 {
                if layer.kind.is_upsample() && tau % u == 0 {
                    // second phase was produced by the previous execution
                    vis[tau] = runs[tau - u];
                } else {
                    vis[tau] = hold;
                }
                continue;
            }
            let dep = match layer.kind {
                LayerKind::CausalConv { kernel_size, .. } => {
                    let s = tau / p;
                    (s.saturating_sub(kernel_size - 1)..=s).map(|i| input[i * p]).max().flatten()
                }
                LayerKind::TransposedUpsample { kernel_size } => {
                    let s = tau / p;
                    (s.saturating_sub((kernel_size - 1) / 2)..=s).map(|i| input[i * p]).max().flatten()
                }
                LayerKind::ExtrapolateUpsample { mode } => {
                    let s = tau / p;
                    (s.saturating_sub(mode.held_frames())..=s).map(|i| input[i * p]).max().flatten()
                }
                LayerKind::TimeShift { shift } => tau.checked_sub(shift).and_then(|i| input[i]),
                LayerKind::ChannelConcat { source } => input[tau].max(visible[source][tau]),
                LayerKind::Activation | LayerKind::BatchNormInference => input[tau],
            };
            runs[tau] = dep;
            vis[tau] = if tau % u == 0 { dep } else { hold };
            if let LayerKind::ExtrapolateUpsample { mode } = layer.kind {
                if mode.waits_for_next_frame() && tau == 0 {
                    vis[0] = None;
                }
            }
        }
        visible[l] = vis;
        run[l] = runs;
    }
    run
}

/// Layers executing at inference `t` whose work reads only frames before
/// `t`, found by dependency tracing.
pub fn past_only_layers(g: &GraphSpec, plan: &SoiPlan, t: usize) -> Vec<usize> {
    let taint = trace_taint(g, plan, t + 1);
    g.layers
        .iter()
        .filter(|l| plan.runs_at(l.index, t))
        .filter(|l| {
            let tau = plan.data_time(l.index, t).expect("running layer has data");
            taint[l.index][tau].is_none_or(|d| d < t)
        })
        .map(|l| l.index)
        .collect()
}

/// Share of average MACs spent in work that can run before the current
/// frame arrives. Zero for PP plans, which accept no precompute requests.
pub fn precomputed_fraction(g: &GraphSpec, plan: &SoiPlan) -> Result<Rational> {
    plan.check_consistent(g)?;
    if plan.mode == PlanMode::PartiallyPredictive {
        return Ok(Rational::from_integer(0));
    }
    let start = steady_start(plan);
    let end = start + plan.cycle();
    let taint = trace_taint(g, plan, end);
    let (mut early, mut total) = (0u64, 0u64);
    for t in start..end {
        for l in &g.layers {
            if !plan.runs_at(l.index, t) {
                continue;
            }
            let tau = plan.data_time(l.index, t).expect("running layer has data");
            let macs = l.macs_per_execution();
            total += macs;
            if taint[l.index][tau].is_none_or(|d| d < t) {
                early += macs;
            }
        }
    }
    Ok(ratio_or(early, total, 0))
}

/// Bytes of streaming state: conv caches, transposed-conv input history,
/// upsampler holds and shift delays, all binary32.
pub fn cache_footprint(g: &GraphSpec, plan: &SoiPlan) -> usize {
    let mut values = 0usize;
    for l in &g.layers {
        values += match l.kind {
            LayerKind::CausalConv { kernel_size, .. } => (kernel_size - 1) * l.in_channels,
            LayerKind::TransposedUpsample { kernel_size } => {
                (kernel_size.div_ceil(2) - 1) * l.in_channels
            }
            LayerKind::TimeShift { shift } => shift * l.in_channels,
            _ => 0,
        };
    }
    for p in &plan.pairs {
        values += p.reconstruction.held_frames() * g.layer(p.upsample).in_channels;
    }
    values * 4
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{apply_scc_transform, ActivationKind, Reconstruction};
    use crate::stream::init_stream;
    use crate::WeightStore;

    fn chain(n: usize, k: usize) -> GraphSpec {
        let mut g = GraphSpec::new("chain", 1);
        for _ in 0..n {
            g.push(
                LayerKind::CausalConv {
                    kernel_size: k,
                    stride: 1,
                },
                1,
                1,
                ActivationKind::Linear,
            );
        }
        g
    }

    #[test]
    fn empty_plan_retains_everything() {
        let g = chain(3, 2);
        let plan = SoiPlan::derive(&g).unwrap();
        let r = analytic_mac_profile(&g, &plan).unwrap();
        assert_eq!(r.retain, Rational::from_integer(1));
        assert_eq!(r.total_peak, 6);
        assert_eq!(r.precomputed_fraction, Rational::from_integer(0));
    }

    #[test]
    fn one_layer_trace_counts_by_hand() {
        let g = chain(1, 3);
        let plan = SoiPlan::derive(&g).unwrap();
        let mut s = init_stream(&g, &plan, &WeightStore::zeros(&g)).unwrap();
        let trace: Vec<_> = (0..8).map(|_| s.push_frame(&[1.0]).unwrap()).collect();
        assert!(trace.iter().all(|r| r.macs_performed == 3));
        assert_eq!(trace.iter().map(|r| r.macs_performed).sum::<u64>(), 24);
        let m = measured_mac_profile(&g, &plan, &trace).unwrap();
        assert_eq!(m, analytic_mac_profile(&g, &plan).unwrap());
    }

    #[test]
    fn short_trace_is_rejected() {
        let (g, plan) = apply_scc_transform(&chain(3, 2), 1, 3, Reconstruction::Duplicate).unwrap();
        let mut s = init_stream(&g, &plan, &WeightStore::zeros(&g)).unwrap();
        let trace = vec![s.push_frame(&[0.0]).unwrap()];
        assert!(matches!(
            measured_mac_profile(&g, &plan, &trace),
            Err(Error::TraceTooShort { len: 1, cycle: 2 })
        ));
    }

    #[test]
    fn uniform_chain_retain() {
        let g = chain(14, 3);
        let (g, plan) = apply_scc_transform(&g, 1, 14, Reconstruction::Duplicate).unwrap();
        let r = analytic_mac_profile(&g, &plan).unwrap();
        assert_eq!(r.retain, Rational::new(15, 28));
    }

    #[test]
    fn footprint_examples() {
        let g = chain(1, 3);
        let plan = SoiPlan::derive(&g).unwrap();
        assert_eq!(cache_footprint(&g, &plan), 8);

        let mut g = GraphSpec::new("wide", 4);
        g.push(
            LayerKind::CausalConv {
                kernel_size: 2,
                stride: 1,
            },
            4,
            4,
            ActivationKind::Linear,
        );
        let before = cache_footprint(&g, &SoiPlan::derive(&g).unwrap());
        g.push(LayerKind::TimeShift { shift: 2 }, 4, 4, ActivationKind::Linear);
        let after = cache_footprint(&g, &SoiPlan::derive(&g).unwrap());
        assert_eq!(after - before, 32);
    }

    #[test]
    fn output_shift_is_fully_precomputable() {
        let mut g = chain(4, 2);
        g.push(LayerKind::TimeShift { shift: 1 }, 1, 1, ActivationKind::Linear);
        let plan = SoiPlan::derive(&g).unwrap();
        assert_eq!(precomputed_fraction(&g, &plan).unwrap(), Rational::from_integer(1));
        assert_eq!(past_only_layers(&g, &plan, 9), [1, 2, 3, 4, 5]);
    }

    #[test]
    fn shift_with_skip_splits_the_network() {
        // 1 -> 2 -> shift -> 4 (conv) -> concat(source 2) -> 6 (conv)
        let conv = |ch_in| (LayerKind::CausalConv { kernel_size: 2, stride: 1 }, ch_in);
        let mut g = GraphSpec::new("skip", 1);
        for (kind, ch_in) in [conv(1), conv(1)] {
            g.push(kind, ch_in, 1, ActivationKind::Linear);
        }
        g.push(LayerKind::TimeShift { shift: 1 }, 1, 1, ActivationKind::Linear);
        g.push(conv(1).0, 1, 1, ActivationKind::Linear);
        g.push(LayerKind::ChannelConcat { source: 2 }, 1, 2, ActivationKind::Linear);
        g.push(conv(2).0, 2, 1, ActivationKind::Linear);
        let plan = SoiPlan::derive(&g).unwrap();
        // layers 3 and 4 read only the past: 2 of 2 + 2 + 2 + 4 MACs
        assert_eq!(past_only_layers(&g, &plan, 5), [3, 4]);
        assert_eq!(precomputed_fraction(&g, &plan).unwrap(), Rational::new(2, 10));
    }
}
