mod files;
mod verify;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use soi_core::graph::{apply_scc_transform, apply_time_shift, serialize_graph_with_plan, validate_graph};
use soi_core::meter::analytic_mac_profile;
use soi_core::{init_stream, Error, Reconstruction, Series};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "soi", version, about = "Scattered online inference for causal conv networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rewrite a graph with strided-cloned pairs and time shifts.
    Transform {
        graph: PathBuf,
        /// Pair `l_d:l_u[:mode]`; applied in order, before any shift.
        #[arg(long = "scc", value_name = "D:U[:MODE]")]
        scc: Vec<String>,
        /// Shift `layer:k`; indices refer to the graph after all pairs.
        #[arg(long = "shift", value_name = "LAYER:K")]
        shift: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stream a series through the network, one frame at a time.
    Run {
        graph: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Do all work that does not need the next frame before it arrives.
        #[arg(long)]
        precompute: bool,
    },
    /// Check the engine against the offline oracles on seeded inputs.
    Verify {
        graph: PathBuf,
        /// Weight container; random weights per trial when omitted.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 64)]
        frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Report multiply-accumulate costs of the graph's schedule.
    Profile {
        graph: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Global magnitude pruning in fixed-size steps.
    Prune {
        weights: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write seeded random weights that fit a graph.
    InitWeights {
        graph: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        scale: f32,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

/// A verified property did not hold.
#[derive(Debug)]
struct PropertyFailure(String);

impl std::fmt::Display for PropertyFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for PropertyFailure {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<PropertyFailure>().is_some() {
        return 1;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Shape(_)) => 3,
        Some(Error::NonFinite { .. }) => 4,
        Some(Error::PlanContract(_)) => 5,
        Some(Error::TraceTooShort { .. }) => 1,
        _ => 2,
    }
}

fn parse_pair(spec: &str) -> Result<(usize, usize, Reconstruction)> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Validation(format!("bad --scc `{spec}`, expected D:U[:MODE]"));
    if !(2..=3).contains(&parts.len()) {
        return Err(bad().into());
    }
    let d = parts[0].parse().map_err(|_| bad())?;
    let u = parts[1].parse().map_err(|_| bad())?;
    let mode = match parts.get(2) {
        Some(m) => m.parse().map_err(Error::Validation)?,
        None => Reconstruction::Duplicate,
    };
    Ok((d, u, mode))
}

fn parse_shift(spec: &str) -> Result<(usize, usize)> {
    let bad = || Error::Validation(format!("bad --shift `{spec}`, expected LAYER:K"));
    let (l, k) = spec.split_once(':').ok_or_else(bad)?;
    Ok((l.parse().map_err(|_| bad())?, k.parse().map_err(|_| bad())?))
}

fn transform(graph: PathBuf, scc: Vec<String>, shift: Vec<String>, out: PathBuf) -> Result<()> {
    let pairs = scc.iter().map(|s| parse_pair(s)).collect::<Result<Vec<_>>>()?;
    let shifts = shift.iter().map(|s| parse_shift(s)).collect::<Result<Vec<_>>>()?;
    let (mut g, mut plan) = files::load_graph(&graph).map_err(|e| {
        if let Some(Error::Validation(_)) = e.downcast_ref::<Error>() {
            if let Ok(text) = std::fs::read_to_string(&graph) {
                if let Ok(g) = soi_core::graph::parse_graph_spec(&text) {
                    for d in validate_graph(&g).diagnostics {
                        eprintln!("{d}");
                    }
                }
            }
        }
        e
    })?;
    for (d, u, mode) in pairs {
        (g, plan) = apply_scc_transform(&g, d, u, mode).with_context(|| format!("--scc {d}:{u}:{mode}"))?;
    }
    for (l, k) in shifts {
        (g, plan) = apply_time_shift(&g, l, k).with_context(|| format!("--shift {l}:{k}"))?;
    }
    files::write_atomic(&out, serialize_graph_with_plan(&g, &plan).as_bytes())?;
    print!("{}", plan.period_table(&g));
    Ok(())
}

fn run(graph: PathBuf, weights: PathBuf, input: PathBuf, output: PathBuf, precompute: bool) -> Result<()> {
    let (g, plan) = files::load_graph(&graph)?;
    let w = files::load_weights(&weights, &g)?;
    let x = files::load_series(&input, g.frame_channels)?;
    if x.channels() != g.frame_channels {
        return Err(Error::Shape(format!(
            "{} has {} channels, graph expects {}",
            input.display(),
            x.channels(),
            g.frame_channels
        ))
        .into());
    }
    let mut s = init_stream(&g, &plan, &w)?;
    let mut frames = Vec::with_capacity(x.len());
    let (mut early, mut late) = (0u64, 0u64);
    for f in x.frames() {
        if precompute {
            early += s.precompute()?.macs_performed;
        }
        let step = s.push_frame(f)?;
        late += step.macs_performed;
        frames.push(step.output);
    }
    let y = Series::from_frames(g.output_channels(), frames.iter().map(|f| f.as_slice()))?;
    files::save_series(&output, &y)?;
    if precompute {
        println!("precomputed MACs {early}, on-arrival MACs {late}");
    } else {
        println!("MACs {late}");
    }
    Ok(())
}

fn verify(graph: PathBuf, weights: Option<PathBuf>, trials: usize, frames: usize, seed: u64) -> Result<()> {
    let (g, plan) = files::load_graph(&graph)?;
    let w = weights.map(|p| files::load_weights(&p, &g)).transpose()?;
    let report = verify::run(&g, &plan, w.as_ref(), trials, frames, seed)?;
    print!("{}", report.matrix());
    if let Some((trial, property)) = report.first_failure() {
        return Err(PropertyFailure(format!("property {property} failed in trial {trial}")).into());
    }
    println!("all properties hold over {trials} trials");
    Ok(())
}

fn profile(graph: PathBuf, format: Format) -> Result<()> {
    let (g, plan) = files::load_graph(&graph)?;
    let report = analytic_mac_profile(&g, &plan)?;
    match format {
        Format::Text => {
            print!("{}", plan.period_table(&g));
            print!("{}", report.to_table(&g));
        }
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(())
}

fn prune(weights: PathBuf, count: usize, steps: usize, out: PathBuf) -> Result<()> {
    let mut w = soi_core::WeightStore::load(&weights).with_context(|| format!("in {}", weights.display()))?;
    let requested = count
        .checked_mul(steps)
        .ok_or_else(|| anyhow!("--count × --steps overflows"))?;
    let available = w.unmasked_count();
    if requested > available {
        return Err(Error::OverPrune { requested, available }.into());
    }
    println!("step 0: {} nonzero", w.nonzero_kernel_count());
    for step in 1..=steps {
        w = w.prune_global_magnitude(count)?;
        println!("step {step}: {} nonzero", w.nonzero_kernel_count());
    }
    files::save_weights(&out, &w)
}

fn init_weights(graph: PathBuf, seed: u64, scale: f32, out: PathBuf) -> Result<()> {
    let (g, _) = files::load_graph(&graph)?;
    if !(scale.is_finite() && scale > 0.0) {
        bail!(Error::Validation(format!("--scale must be positive, got {scale}")));
    }
    files::save_weights(&out, &verify::random_weights(&g, seed, scale))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Transform { graph, scc, shift, out } => transform(graph, scc, shift, out),
        Command::Run {
            graph,
            weights,
            input,
            output,
            precompute,
        } => run(graph, weights, input, output, precompute),
        Command::Verify {
            graph,
            weights,
            trials,
            frames,
            seed,
        } => verify(graph, weights, trials, frames, seed),
        Command::Profile { graph, format } => profile(graph, format),
        Command::Prune {
            weights,
            count,
            steps,
            out,
        } => prune(weights, count, steps, out),
        Command::InitWeights { graph, seed, scale, out } => init_weights(graph, seed, scale, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
