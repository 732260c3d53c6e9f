use std::io;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sfv_core::{
    bound_width, informal_rate, propagate_formal, propagate_sampled, verify, Backend,
    DecisionProperty, Network, OutputBounds, SamplingConfig, VerifierConfig,
};

use crate::args::{BackendArg, BenchArgs, ReportArg};
use crate::manifest::EffectiveRun;
use crate::verify::write_json;

/// One back-end on one property, summarised over the repeats.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub backend: String,
    pub property: String,
    pub repeats: usize,
    pub rate_mean: f64,
    pub rate_std: f64,
    pub violation_mean: f64,
    pub unknown_mean: f64,
    pub unknown_std: f64,
    pub width_mean: f64,
    pub width_max: f64,
    pub propagations_mean: f64,
    pub samples: usize,
    pub max_depth: usize,
    pub seed: u64,
    pub wall_time_mean: f64,
    pub wall_time_std: f64,
}

struct Run {
    rate: f64,
    violation: f64,
    unknown: f64,
    propagations: f64,
    wall: f64,
}

pub fn run(cfg: &EffectiveRun, args: &BenchArgs) -> Result<u8> {
    anyhow::ensure!(args.repeat >= 1, "--repeat must be at least 1");
    let net = cfg.load_network()?;
    let props = cfg.load_properties(&net)?;
    let mut rows = Vec::new();
    for prop in &props {
        for &b in &args.backends {
            rows.push(bench_backend(&net, prop, cfg, b, args.repeat)?);
        }
        if args.informal_samples > 0 {
            rows.push(bench_informal(&net, prop, cfg, args)?);
        }
    }
    emit(cfg, &rows)?;
    Ok(0)
}

fn bench_backend(
    net: &Network,
    prop: &DecisionProperty,
    cfg: &EffectiveRun,
    b: BackendArg,
    repeat: usize,
) -> Result<BenchRow> {
    let backend = Backend::from(b);
    let base = cfg.config_for(backend);
    let mut runs = Vec::with_capacity(repeat);
    for k in 0..repeat {
        let seed = base.rng_seed.wrapping_add(k as u64);
        let c = VerifierConfig {
            rng_seed: seed,
            sampling: SamplingConfig {
                seed,
                ..base.sampling
            },
            ..base.clone()
        };
        let t = Instant::now();
        let r = verify(net, prop, &c).with_context(|| format!("verifying {}", prop.name))?;
        runs.push(Run {
            rate: r.safe_rate,
            violation: r.violation_rate,
            unknown: r.unknown_rate,
            propagations: r.propagations as f64,
            wall: t.elapsed().as_secs_f64(),
        });
    }
    let root = match backend {
        Backend::Formal => propagate_formal(net, &prop.input_box)?,
        Backend::Sampled | Backend::Hybrid => {
            propagate_sampled(net, &prop.input_box, &base.sampling)?
        }
    };
    let samples = if backend == Backend::Formal {
        0
    } else {
        base.sampling.n
    };
    Ok(summarise(
        format!("{backend:?}").to_lowercase(),
        prop,
        &runs,
        &root,
        samples,
        base.max_depth,
        base.rng_seed,
    ))
}

/// Plain Monte Carlo: fraction of uniform samples where the assertion holds.
fn bench_informal(
    net: &Network,
    prop: &DecisionProperty,
    cfg: &EffectiveRun,
    args: &BenchArgs,
) -> Result<BenchRow> {
    let seed = cfg.config.rng_seed;
    let n = args.informal_samples;
    let mut runs = Vec::with_capacity(args.repeat);
    for k in 0..args.repeat {
        let t = Instant::now();
        let rate = informal_rate(net, prop, n, seed.wrapping_add(k as u64))?;
        runs.push(Run {
            rate,
            violation: 1.0 - rate,
            unknown: 0.0,
            propagations: n as f64,
            wall: t.elapsed().as_secs_f64(),
        });
    }
    let sampling = SamplingConfig {
        n: n.max(2),
        seed,
        include_vertices: false,
    };
    let root = propagate_sampled(net, &prop.input_box, &sampling)?;
    Ok(summarise("informal".into(), prop, &runs, &root, n, 0, seed))
}

fn summarise(
    backend: String,
    prop: &DecisionProperty,
    runs: &[Run],
    root: &OutputBounds,
    samples: usize,
    max_depth: usize,
    seed: u64,
) -> BenchRow {
    let col = |f: fn(&Run) -> f64| runs.iter().map(f).collect::<Vec<_>>();
    let widths: Vec<f64> = (0..root.outs.len())
        .filter_map(|j| bound_width(root, j).ok())
        .collect();
    let (rate_mean, rate_std) = mean_std(&col(|r| r.rate));
    let (unknown_mean, unknown_std) = mean_std(&col(|r| r.unknown));
    let (wall_time_mean, wall_time_std) = mean_std(&col(|r| r.wall));
    BenchRow {
        backend,
        property: prop.name.clone(),
        repeats: runs.len(),
        rate_mean,
        rate_std,
        violation_mean: mean_std(&col(|r| r.violation)).0,
        unknown_mean,
        unknown_std,
        width_mean: mean_std(&widths).0,
        width_max: widths.iter().copied().fold(0.0, f64::max),
        propagations_mean: mean_std(&col(|r| r.propagations)).0,
        samples,
        max_depth,
        seed,
        wall_time_mean,
        wall_time_std,
    }
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn emit(cfg: &EffectiveRun, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(io::stdout());
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    std::fs::create_dir_all(&cfg.out)
        .with_context(|| format!("cannot create output directory {}", cfg.out.display()))?;
    if cfg.wants(ReportArg::Csv) {
        let path = cfg.out.join("bench.csv");
        let mut f = csv::Writer::from_path(&path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        for row in rows {
            f.serialize(row)?;
        }
        f.flush()?;
    }
    if cfg.wants(ReportArg::Json) {
        #[derive(Serialize)]
        struct BenchFile<'a> {
            run: &'a EffectiveRun,
            rows: &'a [BenchRow],
        }
        write_json(&cfg.out.join("bench.json"), &BenchFile { run: cfg, rows })?;
    }
    Ok(())
}
