//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

mod common;

use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sfv_core::{
    grid_bounds, grid_rate, informal_rate, parse_properties, propagate_formal, propagate_sampled,
    random_network, verify, verify_tree, Backend, DecisionProperty, DominanceAssertion, GridSpec,
    InputBox, MixedLeafPolicy, Network, SamplingConfig, SplitStrategy, VerificationReport,
    VerifierConfig,
};

use common::*;

type Outcome = Result<String, String>;

/// Every report produced while checking criteria 1-5, with the net and
/// property it came from, for the counterexample and rate-sum checks.
#[derive(Default)]
struct Ledger {
    reports: Vec<(Network, DecisionProperty, VerificationReport)>,
}

impl Ledger {
    fn record(&mut self, net: &Network, prop: &DecisionProperty, report: &VerificationReport) {
        self.reports
            .push((net.clone(), prop.clone(), report.clone()));
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion_1(ledger: &mut Ledger) -> Outcome {
    let net = crossing_net();
    let prop = crossing_property();
    let start = Instant::now();

    let mut formal = VerifierConfig::for_backend(Backend::Formal);
    formal.max_depth = 20;
    let rf = verify(&net, &prop, &formal).map_err(|e| e.to_string())?;
    ledger.record(&net, &prop, &rf);

    let mut sampled = VerifierConfig::for_backend(Backend::Sampled);
    sampled.sampling.n = 20;
    sampled.mixed_leaf_policy = MixedLeafPolicy::ProportionalBySamples;
    let rs = verify(&net, &prop, &sampled).map_err(|e| e.to_string())?;
    ledger.record(&net, &prop, &rs);
    let elapsed = start.elapsed().as_secs_f64();

    ensure((rf.safe_rate - 0.5).abs() <= 1e-4, || {
        format!("formal safe {}", rf.safe_rate)
    })?;
    ensure((rf.violation_rate - 0.5).abs() <= 1e-4, || {
        format!("formal violation {}", rf.violation_rate)
    })?;
    ensure(rf.unknown_rate < 2e-4, || {
        format!("formal unknown {}", rf.unknown_rate)
    })?;
    ensure((rs.safe_rate - 0.5).abs() <= 0.01, || {
        format!("sampled safe {}", rs.safe_rate)
    })?;
    ensure((rs.violation_rate - 0.5).abs() <= 0.01, || {
        format!("sampled violation {}", rs.violation_rate)
    })?;
    ensure(elapsed < 5.0, || format!("took {elapsed:.2}s"))?;
    Ok(format!(
        "formal safe {:.7} viol {:.7} unk {:.2e}; sampled safe {:.5} viol {:.5}; {elapsed:.3}s",
        rf.safe_rate, rf.violation_rate, rf.unknown_rate, rs.safe_rate, rs.violation_rate
    ))
}

fn criterion_2(nets: &[Network]) -> Outcome {
    let mut checked = 0usize;
    for (i, net) in nets.iter().enumerate() {
        let region = InputBox::unit(net.input_dim()).unwrap();
        let bounds = propagate_formal(net, &region).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(77 + i as u64);
        for _ in 0..10_000 {
            let x = region.sample_point(&mut rng);
            let y = net.forward(&x).unwrap();
            ensure(bounds.contains_point(&y), || {
                format!("net {i}: {x:?} -> {y:?} escapes formal bounds")
            })?;
            checked += 1;
        }
    }
    Ok(format!("{} nets, {checked} points, 0 escapes", nets.len()))
}

fn criterion_3(nets: &[Network]) -> Outcome {
    let mut min_ppd = usize::MAX;
    for (i, net) in nets.iter().enumerate() {
        let region = InputBox::unit(net.input_dim()).unwrap();
        let grid = GridSpec::densest(region.clone(), 1000, 200_000).map_err(|e| e.to_string())?;
        min_ppd = min_ppd.min(grid.points_per_dim);
        let dense = grid_bounds(net, &grid).map_err(|e| e.to_string())?;
        let formal = propagate_formal(net, &region).map_err(|e| e.to_string())?;
        let cfg = SamplingConfig::new(20, i as u64).unwrap();
        let sampled = propagate_sampled(net, &region, &cfg).map_err(|e| e.to_string())?;
        ensure(dense.encloses(&sampled), || {
            format!("net {i}: sampled bounds exceed the grid hull")
        })?;
        ensure(formal.encloses(&dense), || {
            format!("net {i}: grid hull exceeds formal bounds")
        })?;
    }
    Ok(format!(
        "{} nets, sampled ⊆ grid ⊆ formal in all cases (grid ≥ {min_ppd}/dim)",
        nets.len()
    ))
}

fn criterion_4(ledger: &mut Ledger) -> Outcome {
    let net = random_network(&[2, 64, 64, 2], 5).unwrap();
    let prop = DecisionProperty::new(
        "mixed-2x64",
        InputBox::unit(2).unwrap(),
        DominanceAssertion::less_than(0, 1).unwrap(),
    );
    let informal = informal_rate(&net, &prop, 200_000, 3).map_err(|e| e.to_string())?;
    ensure((0.05..=0.95).contains(&informal), || {
        format!("fixture is not mixed: informal rate {informal}")
    })?;

    // deepen the formal run until at most 1% of the box is undecided
    let mut formal = VerifierConfig::for_backend(Backend::Formal);
    formal.split_strategy = SplitStrategy::WidestDim;
    let mut depth = 18;
    let rf = loop {
        formal.max_depth = depth;
        let r = verify(&net, &prop, &formal).map_err(|e| e.to_string())?;
        if r.unknown_rate <= 0.01 || depth >= 30 {
            break r;
        }
        depth += 2;
    };
    ensure(rf.unknown_rate <= 0.01, || {
        format!("formal did not converge: unknown {}", rf.unknown_rate)
    })?;
    ledger.record(&net, &prop, &rf);

    let mut sampled = VerifierConfig::for_backend(Backend::Sampled);
    sampled.max_depth = 12;
    let rs = verify(&net, &prop, &sampled).map_err(|e| e.to_string())?;
    ledger.record(&net, &prop, &rs);

    let mut csv =
        String::from("backend,max_depth,safe_rate,unknown_rate,propagations,wall_time_secs\n");
    for r in [&rf, &rs] {
        let _ = writeln!(
            csv,
            "{:?},{},{},{},{},{}",
            r.config.backend,
            r.config.max_depth,
            r.safe_rate,
            r.unknown_rate,
            r.propagations,
            r.wall_time_secs
        );
    }
    let out = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("speedup.csv");
    std::fs::write(&out, &csv).map_err(|e| e.to_string())?;

    let diff = (rs.safe_rate - rf.safe_rate).abs();
    ensure(diff <= 0.01, || {
        format!("sampled {} vs formal {}", rs.safe_rate, rf.safe_rate)
    })?;
    ensure(rs.wall_time_secs * 2.0 <= rf.wall_time_secs, || {
        format!(
            "sampled {:.3}s vs formal {:.3}s",
            rs.wall_time_secs, rf.wall_time_secs
        )
    })?;
    Ok(format!(
        "formal d{} safe {:.4} (unk {:.4}) in {:.3}s; sampled d12 safe {:.4} in {:.3}s; speedup {:.0}x; csv {}",
        rf.config.max_depth,
        rf.safe_rate,
        rf.unknown_rate,
        rf.wall_time_secs,
        rs.safe_rate,
        rs.wall_time_secs,
        rf.wall_time_secs / rs.wall_time_secs,
        out.display()
    ))
}

fn criterion_5(ledger: &mut Ledger) -> Outcome {
    let mut worst_slack = f64::INFINITY;
    let mut max_unknown: f64 = 0.0;
    for (i, (net, prop)) in small_family(25, 5).into_iter().enumerate() {
        let mut cfg = VerifierConfig::for_backend(Backend::Formal);
        cfg.max_depth = 4 * net.input_dim() + 10;
        let r = verify(&net, &prop, &cfg).map_err(|e| e.to_string())?;
        let grid = GridSpec::densest(prop.input_box.clone(), 1000, 1_000_000)
            .map_err(|e| e.to_string())?;
        let oracle = grid_rate(&net, &prop, &grid).map_err(|e| e.to_string())?;
        let gap = (r.safe_rate - oracle).abs();
        let allowed = r.unknown_rate + 0.01;
        ensure(gap <= allowed, || {
            format!(
                "net {i}: safe {} vs grid {oracle} with unknown {}",
                r.safe_rate, r.unknown_rate
            )
        })?;
        worst_slack = worst_slack.min(allowed - gap);
        max_unknown = max_unknown.max(r.unknown_rate);
        ledger.record(&net, &prop, &r);
    }
    Ok(format!(
        "25 nets agree; smallest slack {worst_slack:.4}, largest unknown {max_unknown:.4}"
    ))
}

fn decided(r: &VerificationReport) -> f64 {
    r.safe_rate + r.violation_rate
}

fn criterion_6(ledger: &Ledger) -> Outcome {
    // rate sum over every report seen so far
    for (_, p, r) in &ledger.reports {
        let sum = r.safe_rate + r.violation_rate + r.unknown_rate;
        ensure((sum - 1.0).abs() <= 1e-9, || {
            format!("{}: rates sum to {sum}", p.name)
        })?;
    }

    // leaf partition at every tree level
    let mut cases: Vec<(Network, DecisionProperty, VerifierConfig)> = Vec::new();
    for (k, (net, prop)) in small_family(6, 11).into_iter().enumerate() {
        for (b, backend) in [Backend::Formal, Backend::Sampled, Backend::Hybrid]
            .into_iter()
            .enumerate()
        {
            let mut cfg = VerifierConfig::for_backend(backend);
            cfg.max_depth = 12;
            cfg.split_arity = 2 + (k + b) % 2;
            cfg.rng_seed = k as u64;
            cases.push((net.clone(), prop.clone(), cfg));
        }
    }
    let mut trees = 0;
    for (net, prop, cfg) in &cases {
        let (_, tree) = verify_tree(net, prop, cfg).map_err(|e| e.to_string())?;
        let root_volume = tree.region.volume();
        let nodes = tree.walk();
        let max_depth = nodes.iter().map(|n| n.depth).max().unwrap_or(0);
        for level in 0..=max_depth {
            let covered: f64 = nodes
                .iter()
                .filter(|n| (n.is_leaf() && n.depth <= level) || (!n.is_leaf() && n.depth == level))
                .map(|n| n.region.volume() / root_volume)
                .sum();
            ensure((covered - 1.0).abs() <= 1e-9, || {
                format!("{}: level {level} covers {covered}", prop.name)
            })?;
        }
        trees += 1;
    }

    // refinement monotonicity, formal backend with widest-dimension splits
    for (net, prop) in small_family(8, 13) {
        let mut last = 0.0;
        for depth in 4..=14 {
            let mut cfg = VerifierConfig::for_backend(Backend::Formal);
            cfg.split_strategy = SplitStrategy::WidestDim;
            cfg.max_depth = depth;
            let r = verify(&net, &prop, &cfg).map_err(|e| e.to_string())?;
            ensure(decided(&r) >= last, || {
                format!(
                    "{}: decided mass fell from {last} to {} at depth {depth}",
                    prop.name,
                    decided(&r)
                )
            })?;
            last = decided(&r);
        }
    }

    // seed-fixed determinism
    let mut compared = 0;
    for (net, prop, cfg) in cases.iter().step_by(2) {
        let a = verify(net, prop, cfg)
            .map_err(|e| e.to_string())?
            .without_timing()
            .to_json();
        let b = verify(net, prop, cfg)
            .map_err(|e| e.to_string())?
            .without_timing()
            .to_json();
        ensure(a == b, || {
            format!("{}: reports differ between runs", prop.name)
        })?;
        compared += 1;
    }
    Ok(format!(
        "{} reports sum to 1; {trees} trees partition at every level; monotone over depths 4-14; {compared} report pairs identical",
        ledger.reports.len()
    ))
}

fn criterion_7() -> Outcome {
    let dir = repo_root().join("properties");
    let cartpole = parse_properties(dir.join("cartpole.json")).map_err(|e| e.to_string())?;
    let expect0 = InputBox::from_bounds(&[(0.2, 0.8), (0.4, 0.6), (0.7, 1.0), (0.5, 1.0)]).unwrap();
    let expect1 = InputBox::from_bounds(&[(0.2, 0.8), (0.4, 0.6), (0.0, 0.3), (0.0, 0.5)]).unwrap();
    ensure(cartpole.len() == 2, || {
        format!("{} cartpole properties", cartpole.len())
    })?;
    ensure(cartpole[0].input_box == expect0, || {
        "cartpole-0 box differs".into()
    })?;
    ensure(cartpole[1].input_box == expect1, || {
        "cartpole-1 box differs".into()
    })?;
    ensure(
        cartpole[0].assertion == DominanceAssertion::less_than(0, 1).unwrap(),
        || "cartpole-0 assertion".into(),
    )?;
    ensure(
        cartpole[1].assertion == DominanceAssertion::less_than(1, 0).unwrap(),
        || "cartpole-1 assertion".into(),
    )?;

    let manip = parse_properties(dir.join("manipulator.json")).map_err(|e| e.to_string())?;
    ensure(manip.len() == 12, || {
        format!("{} manipulator properties", manip.len())
    })?;
    let net = random_network(&[9, 64, 64, 12], 9).unwrap();
    for joint in 0..6 {
        for (side, pin, loser) in [("L", 1.0, 2 * joint), ("R", 0.0, 2 * joint + 1)] {
            let name = format!("manipulator-{joint}{side}");
            let p = manip
                .iter()
                .find(|p| p.name == name)
                .ok_or_else(|| format!("missing {name}"))?;
            let pinned = p.input_box.dims()[joint];
            ensure(pinned.lo() == pin && pinned.hi() == pin, || {
                format!("{name}: joint not pinned")
            })?;
            ensure(
                p.assertion.loser() == loser && p.assertion.winners().len() == 11,
                || format!("{name}: wrong assertion"),
            )?;
            let r = verify(&net, p, &VerifierConfig::for_backend(Backend::Sampled))
                .map_err(|e| e.to_string())?;
            let rates = [r.safe_rate, r.violation_rate, r.unknown_rate];
            ensure(rates.iter().all(|v| v.is_finite()), || {
                format!("{name}: non-finite rates")
            })?;
            ensure(decided(&r) > 0.0, || format!("{name}: no decided mass"))?;
            ensure((rates.iter().sum::<f64>() - 1.0).abs() <= 1e-9, || {
                format!("{name}: rates do not sum to 1")
            })?;
        }
    }
    Ok("cartpole boxes exact; 12 manipulator properties (6 joints x L/R) with pinned joints give finite rates".into())
}

fn criterion_8(ledger: &Ledger) -> Outcome {
    let mut total = 0;
    for (net, prop, r) in &ledger.reports {
        for x in &r.counterexamples {
            ensure(prop.input_box.contains_point(x), || {
                format!("{}: {x:?} outside the box", prop.name)
            })?;
            let y = net.forward(x).map_err(|e| e.to_string())?;
            ensure(prop.assertion.violated_at(&y), || {
                format!("{}: {x:?} does not violate", prop.name)
            })?;
            total += 1;
        }
    }
    ensure(total > 0, || "no counterexamples were produced".into())?;
    Ok(format!(
        "{total} counterexamples from {} reports all re-verify",
        ledger.reports.len()
    ))
}

fn main() {
    let mut ledger = Ledger::default();
    let nets = soundness_family();
    let mut results: Vec<(&str, Outcome, f64)> = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        let tag = if outcome.is_ok() { "PASS" } else { "FAIL" };
        let detail = match &outcome {
            Ok(s) | Err(s) => s.clone(),
        };
        println!("{tag} {name} ({secs:.1}s): {detail}");
        results.push((name, outcome, secs));
    };

    run("criterion 1 analytic crossing rates", &mut || {
        criterion_1(&mut ledger)
    });
    run("criterion 2 formal soundness", &mut || criterion_2(&nets));
    run("criterion 3 sampled/grid/formal sandwich", &mut || {
        criterion_3(&nets)
    });
    run("criterion 4 sampled speedup", &mut || {
        criterion_4(&mut ledger)
    });
    run("criterion 5 grid oracle agreement", &mut || {
        criterion_5(&mut ledger)
    });
    run("criterion 6 invariants", &mut || criterion_6(&ledger));
    run("criterion 7 bundled property encodings", &mut criterion_7);
    run("criterion 8 counterexample validity", &mut || {
        criterion_8(&ledger)
    });

    let failed = results.iter().filter(|(_, o, _)| o.is_err()).count();
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
