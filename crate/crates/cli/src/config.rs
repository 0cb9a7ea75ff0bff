use std::path::PathBuf;

use clap::Args;

/// Everything the pipeline commands share. Flags are global so they can sit
/// before or after the subcommand.
#[derive(Debug, Clone, Args)]
pub struct PipelineConfig {
    /// HURDAT2-format input file.
    #[arg(long, global = true, env = "BEZIERFOLD_DATA", default_value = "data/hurdat2_synthetic.txt")]
    pub data: PathBuf,

    /// Output directory for caches and exports.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Basin prefix of storm identifiers to keep.
    #[arg(long, global = true, default_value = "AL")]
    pub basin: String,

    /// First season year kept.
    #[arg(long, global = true, default_value_t = 2010)]
    pub year_min: i32,

    /// Last season year kept.
    #[arg(long, global = true, default_value_t = 2021)]
    pub year_max: i32,

    /// Spline segment count L used by pga/classify/export-tracks.
    #[arg(long, global = true, default_value_t = 2)]
    pub segments: usize,

    /// Discretization K of the tangent-bundle geodesic solver.
    #[arg(long, global = true, default_value_t = 10)]
    pub discretization: usize,

    /// Number of principal modes kept; all available when omitted.
    #[arg(long, global = true)]
    pub modes: Option<usize>,

    /// RBF kernel coefficient.
    #[arg(long, global = true, default_value_t = 0.7)]
    pub gamma: f64,

    /// Soft-margin penalty C.
    #[arg(long = "svm-c", global = true, default_value_t = 3.0)]
    pub svm_c: f64,

    /// Cross-validation fold count.
    #[arg(long, global = true, default_value_t = 3)]
    pub folds: usize,

    /// Cross-validation repetition count.
    #[arg(long, global = true, default_value_t = 1000)]
    pub repetitions: usize,

    /// Seed for every random choice in the pipeline.
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,

    /// Keep only fixes at the 00/06/12/18 UTC synoptic hours.
    #[arg(long, global = true)]
    pub synoptic_only: bool,

    /// Z-score features before the kernel (sensitivity analysis).
    #[arg(long, global = true)]
    pub standardize: bool,
}

impl PipelineConfig {
    /// Rejects impossible values, warns about untested ones.
    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(self.year_min <= self.year_max, "year range is empty");
        anyhow::ensure!(self.segments >= 1, "segment count must be positive");
        anyhow::ensure!(self.discretization >= 1, "discretization must be positive");
        anyhow::ensure!(self.gamma > 0.0, "gamma must be positive");
        anyhow::ensure!(self.svm_c > 0.0, "C must be positive");
        anyhow::ensure!(self.folds >= 2, "cross-validation needs at least 2 folds");
        anyhow::ensure!(self.repetitions >= 1, "repetition count must be positive");
        if let Some(m) = self.modes {
            anyhow::ensure!(m >= 1, "mode count must be positive");
        }
        if self.segments > 2 {
            eprintln!(
                "warning: the reported experiments use 1 or 2 segments; L={} is untested",
                self.segments
            );
        }
        Ok(())
    }

    pub fn filter_options(&self) -> bezierfold::hurdat::FilterOptions {
        bezierfold::hurdat::FilterOptions {
            basin: self.basin.clone(),
            year_min: self.year_min,
            year_max: self.year_max,
            synoptic_only: self.synoptic_only,
        }
    }

    pub fn svm_params(&self) -> bezierfold::stats_ml::SvmParams {
        bezierfold::stats_ml::SvmParams {
            gamma: self.gamma,
            c: self.svm_c,
            ..Default::default()
        }
    }
}
