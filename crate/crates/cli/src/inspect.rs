//! `bounds` and `oracle`: raw bound computation and dense-grid references.

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sfv_core::{
    grid_bounds, grid_rate, propagate_formal, propagate_sampled, Backend, GridSpec, InputBox,
    Network, OutputBounds,
};

use crate::args::{BoundsArgs, OracleArgs, ReportArg};
use crate::manifest::EffectiveRun;

#[derive(Serialize)]
struct BoundsRow {
    region: String,
    source: &'static str,
    output: usize,
    lo: f64,
    hi: f64,
    width: f64,
}

pub fn bounds(cfg: &EffectiveRun, args: &BoundsArgs) -> Result<u8> {
    let net = cfg.load_network()?;
    let mut rows = Vec::new();
    for (label, region) in regions(cfg, &net, args.input_box.as_deref())? {
        let mut sources = Vec::new();
        if matches!(cfg.config.backend, Backend::Sampled | Backend::Hybrid) {
            sources.push((
                "sampled",
                propagate_sampled(&net, &region, &cfg.config.sampling)?,
            ));
        }
        if matches!(cfg.config.backend, Backend::Formal | Backend::Hybrid) {
            sources.push(("formal", propagate_formal(&net, &region)?));
        }
        for (source, b) in sources {
            push_rows(&mut rows, &label, source, &b);
        }
    }
    print_rows(cfg, &rows)?;
    Ok(0)
}

#[derive(Serialize)]
struct RateRow {
    property: String,
    grid_points: u128,
    points_per_dim: usize,
    safe_rate: f64,
}

pub fn oracle(cfg: &EffectiveRun, args: &OracleArgs) -> Result<u8> {
    let net = cfg.load_network()?;
    if !cfg.props.is_empty() {
        let mut rates = Vec::new();
        for p in cfg.load_properties(&net)? {
            let grid = GridSpec::densest(p.input_box.clone(), args.grid, args.budget)?;
            rates.push(RateRow {
                property: p.name.clone(),
                grid_points: grid.total_points(),
                points_per_dim: grid.points_per_dim,
                safe_rate: grid_rate(&net, &p, &grid)
                    .with_context(|| format!("grid rate for {}", p.name))?,
            });
        }
        if explicit_format(cfg).is_some() {
            print_table(cfg, &rates)?;
        } else {
            for r in &rates {
                println!(
                    "{} grid safe_rate {} ({} points, {} per dim)",
                    r.property, r.safe_rate, r.grid_points, r.points_per_dim
                );
            }
        }
    }
    let mut rows = Vec::new();
    for (label, region) in regions(cfg, &net, args.input_box.as_deref())? {
        let grid = GridSpec::densest(region, args.grid, args.budget)?;
        push_rows(&mut rows, &label, "grid", &grid_bounds(&net, &grid)?);
    }
    print_rows(cfg, &rows)?;
    Ok(0)
}

/// The `--box` region if given, otherwise every property box.
fn regions(
    cfg: &EffectiveRun,
    net: &Network,
    input_box: Option<&str>,
) -> Result<Vec<(String, InputBox)>> {
    if let Some(text) = input_box {
        let bounds: Vec<(f64, f64)> = serde_json::from_str(text)
            .with_context(|| format!("--box {text:?} is not a JSON list of [lo, hi] pairs"))?;
        let region = InputBox::from_bounds(&bounds).with_context(|| format!("--box {text}"))?;
        if region.dim() != net.input_dim() {
            bail!(
                "--box has {} dimensions but the network takes {}",
                region.dim(),
                net.input_dim()
            );
        }
        return Ok(vec![("box".into(), region)]);
    }
    if cfg.props.is_empty() {
        bail!("no region given (use --box or --props)");
    }
    Ok(cfg
        .load_properties(net)?
        .into_iter()
        .map(|p| (p.name, p.input_box))
        .collect())
}

fn push_rows(rows: &mut Vec<BoundsRow>, region: &str, source: &'static str, b: &OutputBounds) {
    for (output, iv) in b.outs.iter().enumerate() {
        rows.push(BoundsRow {
            region: region.to_string(),
            source,
            output,
            lo: iv.lo(),
            hi: iv.hi(),
            width: iv.width(),
        });
    }
}

/// Text lines by default; `--report csv` or `--report json` for machine output.
fn print_rows(cfg: &EffectiveRun, rows: &[BoundsRow]) -> Result<()> {
    if explicit_format(cfg).is_some() {
        return print_table(cfg, rows);
    }
    for r in rows {
        println!(
            "{} {} y{} [{}, {}]",
            r.region, r.source, r.output, r.lo, r.hi
        );
    }
    Ok(())
}

fn print_table<T: Serialize>(cfg: &EffectiveRun, rows: &[T]) -> Result<()> {
    match explicit_format(cfg) {
        Some(ReportArg::Json) => println!("{}", serde_json::to_string_pretty(rows)?),
        _ => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// A single requested report format, if exactly one was asked for.
fn explicit_format(cfg: &EffectiveRun) -> Option<ReportArg> {
    match cfg.report.as_slice() {
        [one] => Some(*one),
        _ => None,
    }
}
