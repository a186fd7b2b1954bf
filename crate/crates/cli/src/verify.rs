use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soi_core::oracle::{run_offline, run_offline_soi};
use soi_core::{init_stream, Error, GraphSpec, PlanMode, Series, SoiPlan, WeightStore};
use std::fmt::Write as _;

pub const PROPERTIES: [&str; 5] = ["stmc", "soi", "causality", "odd_phase", "fp_purity"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    NotApplicable,
}

impl Outcome {
    fn cell(self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "FAIL",
            Outcome::NotApplicable => "n/a",
        }
    }
}

pub struct Report {
    pub rows: Vec<[Outcome; 5]>,
}

impl Report {
    pub fn first_failure(&self) -> Option<(usize, &'static str)> {
        self.rows.iter().enumerate().find_map(|(i, row)| {
            row.iter()
                .position(|o| *o == Outcome::Fail)
                .map(|p| (i, PROPERTIES[p]))
        })
    }

    pub fn matrix(&self) -> String {
        let mut out = String::from("trial");
        for p in PROPERTIES {
            let _ = write!(out, "  {p:>10}");
        }
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(out, "{i:>5}");
            for o in row {
                let _ = write!(out, "  {:>10}", o.cell());
            }
            out.push('\n');
        }
        out
    }
}

fn random_series(rng: &mut ChaCha8Rng, channels: usize, frames: usize) -> Series {
    let data = (0..channels * frames).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
    Series::new(channels, data).expect("whole frames")
}

pub fn random_weights(g: &GraphSpec, seed: u64, scale: f32) -> WeightStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    WeightStore::from_fn(g, || rng.gen_range(-scale..scale))
}

fn stream_outputs(g: &GraphSpec, plan: &SoiPlan, w: &WeightStore, x: &Series) -> Result<Series, Error> {
    let mut s = init_stream(g, plan, w)?;
    let mut frames = Vec::with_capacity(x.len());
    for f in x.frames() {
        frames.push(s.push_frame(f)?.output);
    }
    Series::from_frames(g.output_channels(), frames.iter().map(|f| f.as_slice()))
}

fn check(ok: bool) -> Outcome {
    if ok {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

/// Runs every property on `trials` seeded inputs. Weights are drawn per
/// trial unless given.
pub fn run(
    g: &GraphSpec,
    plan: &SoiPlan,
    weights: Option<&WeightStore>,
    trials: usize,
    frames: usize,
    seed: u64,
) -> Result<Report, Error> {
    let mut rows = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
        let drawn;
        let w = match weights {
            Some(w) => w,
            None => {
                drawn = random_weights(g, rng.gen(), 0.5);
                &drawn
            }
        };
        let x = random_series(&mut rng, g.frame_channels, frames);
        let soi = run_offline_soi(g, plan, w, &x)?;
        let streamed = stream_outputs(g, plan, w, &x)?;

        let stmc = match run_offline(g, w, &x) {
            Ok(plain) if plan.is_empty() => check(plain == streamed),
            // a scheduled graph still evaluates as a multi-rate network
            Ok(plain) => check(plain == soi),
            Err(Error::Shape(_)) => Outcome::NotApplicable,
            Err(e) => return Err(e),
        };
        let soi_ok = check(streamed == soi);

        let p = if frames > 1 { rng.gen_range(0..frames - 1) } else { 0 };
        let mut y = x.clone();
        for t in p + 1..y.len() {
            for v in y.frame_mut(t) {
                *v = rng.gen_range(-1.0f32..1.0);
            }
        }
        let causal = run_offline_soi(g, plan, w, &y)?.prefix(p + 1) == soi.prefix(p + 1)
            && stream_outputs(g, plan, w, &y)?.prefix(p + 1) == streamed.prefix(p + 1);

        let mut s = init_stream(g, plan, w)?;
        let mut odd_ok = true;
        for f in x.frames() {
            let step = s.push_frame(f)?;
            for l in &g.layers {
                let want = if plan.runs_at(l.index, step.t) {
                    l.macs_per_execution()
                } else {
                    0
                };
                odd_ok &= step.layer_macs[l.index] == want;
            }
        }
        let odd = if plan.pairs.is_empty() {
            Outcome::NotApplicable
        } else {
            check(odd_ok)
        };

        let purity = if plan.mode == PlanMode::PartiallyPredictive {
            Outcome::NotApplicable
        } else {
            let mut s = init_stream(g, plan, w)?;
            let mut ok = true;
            for (t, f) in x.frames().enumerate() {
                let mut probe = s.clone();
                let receipt = probe.precompute()?;
                for _ in 0..3 {
                    let other: Vec<f32> = f.iter().map(|_| rng.gen_range(-1.0f32..1.0)).collect();
                    ok &= probe.clone().push_frame(&other)?.receipt.as_ref() == Some(&receipt);
                }
                let merged = probe.push_frame(f)?;
                let plain = s.push_frame(f)?;
                ok &= merged.output == plain.output && merged.output == streamed.frame(t);
                ok &= merged.total_macs() == plain.macs_performed;
            }
            check(ok)
        };
        rows.push([stmc, soi_ok, check(causal), odd, purity]);
    }
    Ok(Report { rows })
}
