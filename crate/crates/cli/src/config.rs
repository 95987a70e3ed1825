use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

/// Every knob of a run. The same fields are accepted as flags and as keys of
/// a JSON config file; flags win.
#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Monodromy one-liner, e.g. "4 3 2 1".
    #[arg(long)]
    pub perm: Option<String>,
    /// Lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    /// Named self-inducing input: symmetric4 or golden.
    #[arg(long)]
    pub preset: Option<String>,
    /// Draw lengths uniformly from the simplex using the seed.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub random_lambda: Option<bool>,

    /// Rauzy steps (induct) or Zorich steps (zorich, lyapunov).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Breaking-sequence depth N.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Induction depth used for frames and rotation vectors.
    #[arg(long)]
    pub trace_levels: Option<usize>,

    /// Fixed sampling radius; without it, start at 0.5 and halve until the
    /// curve is injective.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Rotation vector in radians, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,
    /// Uniformly random rotation vector (a negative control).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub random_theta: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,

    /// Levels covered by the quasi-embedding checks.
    #[arg(long)]
    pub qe_levels: Option<usize>,
    #[arg(long)]
    pub qe_samples: Option<usize>,
    #[arg(long)]
    pub embed_samples: Option<usize>,
    /// Also require the final curve to be neither straight nor circular.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub nontrivial: Option<bool>,
    #[arg(long)]
    pub cut_depth: Option<usize>,
    #[arg(long)]
    pub tol_nontrivial: Option<f64>,

    /// Curve parameter of the orbit's starting point.
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Distance to the curve within which a point is assigned an atom.
    #[arg(long)]
    pub atom_tol: Option<f64>,

    /// Output file for the main result (stdout otherwise).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Extra levels drawn into the SVG and CSV, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub show_levels: Option<Vec<usize>>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// `self` with every field set in `flags` replaced.
    pub fn overridden_by(self, flags: RunConfig) -> RunConfig {
        overlay!(
            self,
            flags,
            perm,
            lambda,
            preset,
            random_lambda,
            steps,
            levels,
            trace_levels,
            delta,
            theta,
            random_theta,
            seed,
            qe_levels,
            qe_samples,
            embed_samples,
            nontrivial,
            cut_depth,
            tol_nontrivial,
            x0,
            iterations,
            atom_tol,
            out,
            svg,
            csv,
            show_levels
        )
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}
