use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sfv_core::{aggregate, verify, AggregateReport, VerificationReport};

use crate::args::ReportArg;
use crate::manifest::EffectiveRun;

/// Exit statuses of `verify`.
pub const EXIT_PROVED: u8 = 0;
pub const EXIT_VIOLATED: u8 = 1;
pub const EXIT_UNKNOWN: u8 = 2;

#[derive(Serialize)]
struct PropertyFile<'a> {
    run: &'a EffectiveRun,
    #[serde(flatten)]
    report: &'a VerificationReport,
}

#[derive(Serialize)]
struct AggregateFile<'a> {
    run: &'a EffectiveRun,
    #[serde(flatten)]
    aggregate: &'a AggregateReport,
}

pub fn run(cfg: &EffectiveRun) -> Result<u8> {
    let net = cfg.load_network()?;
    let props = cfg.load_properties(&net)?;
    let reports = props
        .iter()
        .map(|p| verify(&net, p, &cfg.config).with_context(|| format!("verifying {}", p.name)))
        .collect::<Result<Vec<_>>>()?;
    let agg = aggregate(&reports)?;
    write_reports(cfg, &reports, &agg)?;

    println!(
        "{:<32} {:>10} {:>10} {:>10}",
        "property", "safe", "violation", "unknown"
    );
    for r in &reports {
        println!(
            "{:<32} {:>10.6} {:>10.6} {:>10.6}",
            r.property, r.safe_rate, r.violation_rate, r.unknown_rate
        );
    }
    println!(
        "{:<32} {:>10.6} {:>10.6} {:>10.6}",
        "mean", agg.safe_rate, agg.violation_rate, agg.unknown_rate
    );
    println!("reports written to {}", cfg.out.display());
    Ok(status(&reports))
}

pub fn status(reports: &[VerificationReport]) -> u8 {
    if reports.iter().any(|r| r.violation_rate > 0.0) {
        EXIT_VIOLATED
    } else if reports.iter().any(|r| r.unknown_rate > 0.0) {
        EXIT_UNKNOWN
    } else {
        EXIT_PROVED
    }
}

fn write_reports(
    cfg: &EffectiveRun,
    reports: &[VerificationReport],
    agg: &AggregateReport,
) -> Result<()> {
    let out = &cfg.out;
    fs::create_dir_all(out)
        .with_context(|| format!("cannot create output directory {}", out.display()))?;
    for (i, r) in reports.iter().enumerate() {
        let name = format!("{:03}-{}.json", i, file_stem(&r.property));
        write_json(
            &out.join(name),
            &PropertyFile {
                run: cfg,
                report: r,
            },
        )?;
    }
    if cfg.wants(ReportArg::Json) {
        write_json(
            &out.join("aggregate.json"),
            &AggregateFile {
                run: cfg,
                aggregate: agg,
            },
        )?;
    }
    if cfg.wants(ReportArg::Csv) {
        let path = out.join("aggregate.csv");
        let mut w = csv::Writer::from_path(&path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        for row in &agg.rows {
            w.serialize(row)?;
        }
        w.flush()
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
