use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use ptannulus::operator::{GainLossTerm, HermitianTerm, PotentialSpec, TermKey, DEFAULT_CUTOFF};
use ptannulus::threshold::DEFAULT_RESOLUTION;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Contents of a `--config` JSON file. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub gain_loss: Vec<GainLossTerm>,
    #[serde(default)]
    pub hermitian: Vec<HermitianTerm>,
    #[serde(rename = "cutoff_M")]
    pub cutoff: Option<usize>,
    pub resolution: Option<f64>,
    pub grid: Option<[usize; 2]>,
    pub a_ratio: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

fn parse_assignment(s: &str) -> Result<(TermKey, f64), String> {
    let (key, value) = s.split_once('=').ok_or_else(|| format!("expected <term>=<strength>, got `{s}`"))?;
    let key: TermKey = key.parse().map_err(|e: ptannulus::Error| e.to_string())?;
    let value: f64 = value.trim().parse().map_err(|_| format!("bad strength in `{s}`"))?;
    Ok((key, value))
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Angular-momentum cutoff M (basis |m| ≤ M).
    #[arg(long = "M")]
    pub cutoff: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Gain-loss order n of V_n.
    #[arg(long)]
    pub n: Option<u32>,
    /// Gain-loss strength β of V_n.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Hermitian order p of U_p.
    #[arg(long)]
    pub p: Option<u32>,
    /// Hermitian strength λ of U_p.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Additional term, `v:<n>=<beta>` or `u:<p>=<lambda>`; repeatable.
    #[arg(long = "term", value_parser = parse_assignment)]
    pub terms: Vec<(TermKey, f64)>,
    /// Rerun at cutoff 2M and compare; exit 3 on disagreement.
    #[arg(long)]
    pub check_convergence: bool,
}

/// Fully resolved run settings.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub spec: PotentialSpec,
    pub cutoff: usize,
    pub resolution: f64,
    pub grid: Option<[usize; 2]>,
    pub a_ratio: f64,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub check_convergence: bool,
}

impl Common {
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let mut spec = PotentialSpec::new(file.gain_loss, file.hermitian)?;
        match (self.n, self.beta) {
            (Some(n), beta) => spec = spec.with_strength(TermKey::GainLoss(n), beta.unwrap_or(0.0)),
            (None, Some(_)) => return Err(CliError::Usage("--beta needs --n".into())),
            (None, None) => {}
        }
        match (self.p, self.lambda) {
            (Some(p), lambda) => spec = spec.with_strength(TermKey::Hermitian(p), lambda.unwrap_or(0.0)),
            (None, Some(_)) => return Err(CliError::Usage("--lambda needs --p".into())),
            (None, None) => {}
        }
        for &(key, value) in &self.terms {
            spec = spec.with_strength(key, value);
        }
        let spec = spec.normalized()?;
        let workers = self.workers.or(file.workers);
        if workers == Some(0) {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        Ok(Resolved {
            spec,
            cutoff: self.cutoff.or(file.cutoff).unwrap_or(DEFAULT_CUTOFF),
            resolution: file.resolution.unwrap_or(DEFAULT_RESOLUTION),
            grid: file.grid,
            a_ratio: file.a_ratio.unwrap_or(0.0),
            out: self.out.clone().or(file.output_dir).unwrap_or_else(|| PathBuf::from(".")),
            workers,
            check_convergence: self.check_convergence,
        })
    }
}

/// Hex SHA-256 of the canonical JSON of a run description.
pub fn config_hash(value: &serde_json::Value) -> String {
    let digest = Sha256::digest(value.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// The parts of a run that determine its output (no paths, no worker count).
#[derive(Debug, Serialize)]
pub struct RunDescription<'a, P: Serialize> {
    pub command: &'a str,
    pub spec: &'a PotentialSpec,
    #[serde(rename = "cutoff_M")]
    pub cutoff: usize,
    pub params: P,
}
