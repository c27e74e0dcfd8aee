use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::error::CliError;

/// Every tunable of every subcommand. All fields are optional so that a
/// JSON config file can fill whatever the flags leave unset.
#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Instance family: single-qubit, planted, gapless, degenerate, grover,
    /// counting, tfim or file.
    #[arg(long)]
    pub family: Option<String>,
    /// Hamiltonian JSON for `--family file`.
    #[arg(long)]
    pub hamiltonian: Option<PathBuf>,
    /// Number of system qubits.
    #[arg(long)]
    pub n: Option<usize>,
    /// Overlap lower bound γ (also the planted overlap).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Spectral gap lower bound Δ (also the planted gap).
    #[arg(long = "delta-gap")]
    pub delta_gap: Option<f64>,
    /// Energy upper bound μ.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Grid spacing of the energy search.
    #[arg(long)]
    pub h: Option<f64>,
    /// Target infidelity ε (sign-polynomial accuracy for sign-poly,
    /// phase-factors and reflector-sweep).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Failure budget ϑ of the energy search.
    #[arg(long)]
    pub vartheta: Option<f64>,
    /// oracle_threshold, statistical_model or circuit_qpe.
    #[arg(long = "ae-mode")]
    pub ae_mode: Option<String>,
    /// circuit or spectral.
    #[arg(long)]
    pub backend: Option<String>,
    /// deterministic or oblivious.
    #[arg(long)]
    pub amplify: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// json or csv.
    #[arg(long)]
    pub format: Option<String>,
    /// Sign-polynomial δ; resolution δ for low-energy; exponent δ for
    /// lowerbound-demo.
    #[arg(long)]
    pub delta: Option<f64>,
    /// ε′ for low-energy preparation.
    #[arg(long = "eps-prime")]
    pub eps_prime: Option<f64>,
    /// Parameter a of the single-qubit family.
    #[arg(long)]
    pub a: Option<f64>,
    /// Interpolation parameter τ of the Grover family.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Marked string index (grover) or marked-set size (counting).
    #[arg(long)]
    pub marked: Option<usize>,
    /// Number of sample points in sweeps.
    #[arg(long)]
    pub points: Option<usize>,
    /// Shift of the energy grid origin below -α.
    #[arg(long = "grid-offset")]
    pub grid_offset: Option<f64>,
    /// Flat JSON file with any of the keys above (snake_case); flags win.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

macro_rules! overlay {
    ($flags:ident, $file:ident; $($f:ident),*) => {
        RunConfig {
            $($f: $flags.$f.or($file.$f),)*
            config: $flags.config,
        }
    };
}

impl RunConfig {
    /// Reads `--config` (if any) and lets flags override it.
    pub fn resolve(self) -> Result<Self, CliError> {
        match &self.config {
            None => Ok(self),
            Some(path) => {
                let file = Self::load(path)?;
                Ok(self.over(file))
            }
        }
    }

    fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("bad config {}: {e}", path.display())))
    }

    fn over(self, file: Self) -> Self {
        let flags = self;
        overlay!(flags, file; family, hamiltonian, n, gamma, delta_gap, mu, h, eps, vartheta,
            ae_mode, backend, amplify, seed, out, format, delta, eps_prime, a, tau, marked,
            points, grid_offset)
    }
}
