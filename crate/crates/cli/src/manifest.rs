use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sfv_core::{
    load_network, parse_properties_for, Backend, DecisionProperty, MixedLeafPolicy, Network,
    NetworkFormat, SplitStrategy, VerifierConfig,
};

use crate::args::{Common, ReportArg};

pub const SEED_ENV: &str = "SFV_SEED";
pub const DEFAULT_OUT: &str = "sfv-out";

/// Run description read from `--manifest`. Relative paths resolve against
/// the manifest's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub network: Option<PathBuf>,
    pub format: Option<NetworkFormat>,
    #[serde(default)]
    pub props: Vec<PathBuf>,
    #[serde(default)]
    pub config: ManifestConfig,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub report: Vec<ReportArg>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestConfig {
    pub backend: Option<Backend>,
    pub samples: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_width: Option<f64>,
    pub split: Option<SplitStrategy>,
    pub split_arity: Option<usize>,
    pub seed: Option<u64>,
    pub mixed_leaf_policy: Option<MixedLeafPolicy>,
    pub max_counterexamples: Option<usize>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read manifest {}", path.display()))?;
        let mut m: RunManifest = serde_json::from_str(&text).map_err(|e| {
            anyhow::anyhow!(
                "{}:{}:{}: invalid manifest: {e}",
                path.display(),
                e.line(),
                e.column()
            )
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        m.network.iter_mut().for_each(rebase);
        m.props.iter_mut().for_each(rebase);
        m.out.iter_mut().for_each(rebase);
        Ok(m)
    }
}

/// Settings after merging flags over the manifest over defaults.
/// Serialized into every report.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveRun {
    pub network: Option<PathBuf>,
    pub format: Option<NetworkFormat>,
    pub props: Vec<PathBuf>,
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub report: Vec<ReportArg>,
    pub config: VerifierConfig,
    /// Leaf policy set explicitly; otherwise it follows the back-end.
    #[serde(skip)]
    leaf_policy: Option<MixedLeafPolicy>,
}

pub fn resolve(cli: &Common) -> Result<EffectiveRun> {
    let m = match &cli.manifest {
        Some(p) => RunManifest::load(p)?,
        None => RunManifest::default(),
    };
    let c = &m.config;
    let backend = cli
        .backend
        .map(Backend::from)
        .or(c.backend)
        .unwrap_or(Backend::Sampled);
    let mut config = VerifierConfig::for_backend(backend);
    if let Some(n) = cli.samples.or(c.samples) {
        config.sampling.n = n;
    }
    if let Some(d) = cli.max_depth.or(c.max_depth) {
        config.max_depth = d;
    }
    if let Some(w) = cli.min_width.or(c.min_width) {
        config.min_width = w;
    }
    if let Some(s) = cli.split.map(SplitStrategy::from).or(c.split) {
        config.split_strategy = s;
    }
    if let Some(a) = c.split_arity {
        config.split_arity = a;
    }
    if let Some(p) = c.mixed_leaf_policy {
        config.mixed_leaf_policy = p;
    }
    if let Some(k) = c.max_counterexamples {
        config.max_counterexamples = k;
    }
    let seed = match cli.seed.or(c.seed) {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    config.rng_seed = seed;
    config.sampling.seed = seed;
    config.validate()?;

    let threads = cli.threads.or(m.threads);
    if threads == Some(0) {
        bail!("--threads must be at least 1");
    }
    let report = if !cli.report.is_empty() {
        dedup(&cli.report)
    } else if !m.report.is_empty() {
        dedup(&m.report)
    } else {
        vec![ReportArg::Json, ReportArg::Csv]
    };
    Ok(EffectiveRun {
        network: cli.network.clone().or(m.network),
        format: cli.format.map(NetworkFormat::from).or(m.format),
        props: if cli.props.is_empty() {
            m.props
        } else {
            cli.props.clone()
        },
        threads,
        out: cli
            .out
            .clone()
            .or(m.out)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        report,
        config,
        leaf_policy: c.mixed_leaf_policy,
    })
}

fn env_seed() -> Result<Option<u64>> {
    match env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
        Err(env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(e).context(SEED_ENV),
    }
}

fn dedup(r: &[ReportArg]) -> Vec<ReportArg> {
    let mut out = Vec::new();
    for x in r {
        if !out.contains(x) {
            out.push(*x);
        }
    }
    out
}

impl EffectiveRun {
    pub fn load_network(&self) -> Result<Network> {
        let Some(path) = &self.network else {
            bail!("no network given (use --network or a manifest)");
        };
        let format = self
            .format
            .unwrap_or_else(|| NetworkFormat::from_path(path));
        Ok(load_network(path, format)?)
    }

    pub fn load_properties(&self, net: &Network) -> Result<Vec<DecisionProperty>> {
        if self.props.is_empty() {
            bail!("no property files given (use --props or a manifest)");
        }
        let mut all = Vec::new();
        for p in &self.props {
            all.extend(parse_properties_for(p, net)?);
        }
        Ok(all)
    }

    /// The effective config with another back-end swapped in.
    pub fn config_for(&self, backend: Backend) -> VerifierConfig {
        VerifierConfig {
            backend,
            mixed_leaf_policy: self
                .leaf_policy
                .unwrap_or(VerifierConfig::for_backend(backend).mixed_leaf_policy),
            ..self.config.clone()
        }
    }

    pub fn wants(&self, r: ReportArg) -> bool {
        self.report.contains(&r)
    }
}
