#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use soi_core::graph::{apply_scc_transform, apply_time_shift};
use soi_core::{
    ActivationKind, GraphSpec, LayerKind, PlanMode, Reconstruction, Series, SoiPlan, WeightStore,
};

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn conv(k: usize) -> LayerKind {
    LayerKind::CausalConv {
        kernel_size: k,
        stride: 1,
    }
}

fn activation(rng: &mut ChaCha8Rng) -> ActivationKind {
    *[ActivationKind::Linear, ActivationKind::Relu, ActivationKind::Elu]
        .choose(rng)
        .unwrap()
}

/// Rate-1 graph of convs, activations, batch norms and concats.
pub fn random_plain_graph(rng: &mut ChaCha8Rng, max_depth: usize, max_ch: usize, max_k: usize) -> GraphSpec {
    let frame = rng.gen_range(1..=max_ch);
    let mut g = GraphSpec::new("random", frame);
    let depth = rng.gen_range(1..=max_depth);
    while g.depth() < depth {
        let i = g.depth() + 1;
        let c_in = g.channels_of(i - 1);
        let roll = rng.gen_range(0..10);
        if roll < 6 || i == 1 {
            let out = rng.gen_range(1..=max_ch);
            let act = activation(rng);
            g.push(conv(rng.gen_range(1..=max_k)), c_in, out, act);
        } else if roll == 6 {
            g.push(LayerKind::Activation, c_in, c_in, activation(rng));
        } else if roll == 7 {
            g.push(LayerKind::BatchNormInference, c_in, c_in, ActivationKind::Linear);
        } else {
            let source = rng.gen_range(0..i - 1);
            let wide = c_in + g.channels_of(source);
            if wide > max_ch {
                continue;
            }
            g.push(LayerKind::ChannelConcat { source }, c_in, wide, ActivationKind::Linear);
        }
    }
    // end on a conv so the output is never a bare copy of the input
    if !matches!(g.layers.last().unwrap().kind, LayerKind::CausalConv { .. }) {
        let c_in = g.output_channels();
        g.push(conv(rng.gen_range(1..=max_k)), c_in, rng.gen_range(1..=max_ch), ActivationKind::Linear);
    }
    g
}

/// A chain of `n` convs with varied widths and kernels.
pub fn random_chain(rng: &mut ChaCha8Rng, n: usize, max_ch: usize, max_k: usize) -> GraphSpec {
    let mut g = GraphSpec::new("chain", rng.gen_range(1..=max_ch));
    for i in 1..=n {
        let c_in = g.channels_of(i - 1);
        let act = if i == n { ActivationKind::Linear } else { activation(rng) };
        g.push(conv(rng.gen_range(1..=max_k)), c_in, rng.gen_range(1..=max_ch), act);
    }
    g
}

/// Adds up to `pairs` random pairs; every attempt that the rewrite rejects
/// is skipped.
pub fn add_random_pairs(
    rng: &mut ChaCha8Rng,
    mut g: GraphSpec,
    pairs: usize,
    modes: &[Reconstruction],
) -> (GraphSpec, SoiPlan) {
    let mut plan = SoiPlan::derive(&g).unwrap();
    let mut added = 0;
    for _ in 0..pairs * 20 {
        if added == pairs {
            break;
        }
        let n = g.depth();
        if n < 2 {
            break;
        }
        let d = rng.gen_range(1..n);
        let u = rng.gen_range(d + 1..=n);
        let mode = *modes.choose(rng).unwrap();
        if let Ok((g2, p2)) = apply_scc_transform(&g, d, u, mode) {
            g = g2;
            plan = p2;
            added += 1;
        }
    }
    (g, plan)
}

pub fn add_random_shift(rng: &mut ChaCha8Rng, g: GraphSpec, max_k: usize) -> (GraphSpec, SoiPlan) {
    for _ in 0..50 {
        let at = rng.gen_range(1..=g.depth());
        let k = rng.gen_range(1..=max_k);
        if let Ok(r) = apply_time_shift(&g, at, k) {
            return r;
        }
    }
    let n = g.depth();
    apply_time_shift(&g, n, 1).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Pp,
    Nested,
    Fp,
    Hybrid,
}

/// Graph and plan of the requested flavor; `mode` is used for every pair.
pub fn random_soi_case(rng: &mut ChaCha8Rng, flavor: Flavor, mode: Reconstruction) -> (GraphSpec, SoiPlan) {
    loop {
        let n = rng.gen_range(3..=8);
        let base = random_chain(rng, n, 6, 4);
        let (g, plan) = match flavor {
            Flavor::Pp => {
                let count = rng.gen_range(1..=2);
                add_random_pairs(rng, base, count, &[mode])
            }
            Flavor::Nested => {
                let (g, _) = add_random_pairs(rng, base, 1, &[mode]);
                let Some(p) = SoiPlan::derive(&g).unwrap().pairs.first().cloned() else {
                    continue;
                };
                // strictly inside the existing span
                let mut found = None;
                for d in p.down + 1..p.upsample {
                    for u in d + 1..p.upsample {
                        if let Ok(r) = apply_scc_transform(&g, d, u, mode) {
                            found = Some(r);
                            break;
                        }
                    }
                    if found.is_some() {
                        break;
                    }
                }
                match found {
                    Some(r) => r,
                    None => continue,
                }
            }
            Flavor::Fp => {
                let count = rng.gen_range(0..=1);
                let (g, _) = add_random_pairs(rng, base, count, &[mode]);
                add_random_shift(rng, g, 3)
            }
            Flavor::Hybrid => {
                let (g, _) = add_random_pairs(rng, base, 1, &[mode]);
                let Some(p) = SoiPlan::derive(&g).unwrap().pairs.first().cloned() else {
                    continue;
                };
                if p.upsample + 2 > g.depth() {
                    continue;
                }
                let at = rng.gen_range(p.upsample + 2..=g.depth());
                match apply_time_shift(&g, at, rng.gen_range(1..=2)) {
                    Ok(r) => r,
                    Err(_) => continue,
                }
            }
        };
        let want = match flavor {
            Flavor::Pp | Flavor::Nested => PlanMode::PartiallyPredictive,
            Flavor::Fp => PlanMode::FullyPredictive,
            Flavor::Hybrid => PlanMode::Hybrid,
        };
        let nested_ok = flavor != Flavor::Nested || plan.cycle() >= 4;
        if plan.mode == want && nested_ok && (flavor == Flavor::Fp || !plan.pairs.is_empty()) {
            return (g, plan);
        }
    }
}

pub fn random_weights(rng: &mut ChaCha8Rng, g: &GraphSpec) -> WeightStore {
    WeightStore::from_fn(g, || rng.gen_range(-0.6f32..0.6))
}

pub fn random_series(rng: &mut ChaCha8Rng, channels: usize, frames: usize) -> Series {
    Series::new(channels, (0..channels * frames).map(|_| rng.gen_range(-2.0f32..2.0)).collect()).unwrap()
}

/// Every (flavor, mode) combination, cycling.
pub fn soi_corpus(seed: u64, count: usize) -> Vec<(GraphSpec, SoiPlan)> {
    let flavors = [Flavor::Pp, Flavor::Nested, Flavor::Fp, Flavor::Hybrid];
    let mut r = rng(seed);
    (0..count)
        .map(|i| {
            let flavor = flavors[i % flavors.len()];
            let mode = Reconstruction::ALL[(i / flavors.len()) % Reconstruction::ALL.len()];
            random_soi_case(&mut r, flavor, mode)
        })
        .collect()
}

/// Uniform-cost chain: every layer `width -> width` with kernel `k`.
pub fn uniform_chain(n: usize, width: usize, k: usize) -> GraphSpec {
    let mut g = GraphSpec::new("uniform", width);
    for _ in 0..n {
        g.push(conv(k), width, width, ActivationKind::Linear);
    }
    g
}
