use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;

/// Content hash over the parts that determine a cached artifact. Config
/// changes or input edits move the cache to a new file instead of silently
/// invalidating the old one.
pub fn short_hash(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part.as_bytes());
        hasher.update([0]);
    }
    let digest = hasher.finalize();
    digest[..6].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn cache_dir(config: &PipelineConfig) -> PathBuf {
    config.out.join("cache")
}

pub fn ensure_dirs(config: &PipelineConfig) -> anyhow::Result<()> {
    fs::create_dir_all(cache_dir(config))
        .with_context(|| format!("creating {}", cache_dir(config).display()))
}

/// Reads a cache written by an earlier command; a miss names the command
/// that would produce it.
pub fn require(path: &Path, producer: &str) -> anyhow::Result<String> {
    if !path.exists() {
        anyhow::bail!(
            "missing cache {} for this configuration; run `bezierfold {producer}` first",
            path.display()
        );
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write(path: &Path, content: &str) -> anyhow::Result<()> {
    fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

// ── Per-stage keys ──────────────────────────────────────────────────────
//
// Each stage is keyed by the content of its immediate inputs, so the keys
// chain: editing the data file re-keys every downstream cache.

pub fn track_cache_path(config: &PipelineConfig, input: &str) -> PathBuf {
    let h = short_hash(&[
        "tracks-v1",
        &config.basin,
        &config.year_min.to_string(),
        &config.year_max.to_string(),
        &config.synoptic_only.to_string(),
        input,
    ]);
    cache_dir(config).join(format!("tracks-{h}.txt"))
}

pub fn spline_cache_path(config: &PipelineConfig, segments: usize, tracks: &str) -> PathBuf {
    let h = short_hash(&["splines-v1", &segments.to_string(), tracks]);
    cache_dir(config).join(format!("splines-L{segments}-{h}.txt"))
}

fn modes_key(config: &PipelineConfig) -> String {
    match config.modes {
        Some(m) => m.to_string(),
        None => "all".to_string(),
    }
}

pub fn pga_sasaki_key(config: &PipelineConfig, splines: &str) -> String {
    short_hash(&[
        "pga-sasaki-v1",
        &config.discretization.to_string(),
        &modes_key(config),
        splines,
    ])
}

pub fn pga_l2_key(config: &PipelineConfig, tracks: &str) -> String {
    short_hash(&["pga-l2-v1", &modes_key(config), tracks])
}

pub fn pga_scores_path(config: &PipelineConfig, family: &str, key: &str) -> PathBuf {
    cache_dir(config).join(format!("pga-{family}-{key}.csv"))
}

pub fn pga_variances_path(config: &PipelineConfig, family: &str, key: &str) -> PathBuf {
    cache_dir(config).join(format!("pga-{family}-var-{key}.csv"))
}

pub fn pga_modes_path(config: &PipelineConfig, key: &str) -> PathBuf {
    cache_dir(config).join(format!("pga-modes-{key}.txt"))
}

pub fn classify_key(config: &PipelineConfig, sasaki: &str, l2: &str) -> String {
    short_hash(&[
        "classify-v1",
        &config.gamma.to_string(),
        &config.svm_c.to_string(),
        &config.folds.to_string(),
        &config.repetitions.to_string(),
        &config.seed.to_string(),
        &config.standardize.to_string(),
        sasaki,
        l2,
    ])
}

pub fn classify_csv_path(config: &PipelineConfig, key: &str) -> PathBuf {
    cache_dir(config).join(format!("classify-{key}.csv"))
}

pub fn classify_json_path(config: &PipelineConfig, key: &str) -> PathBuf {
    cache_dir(config).join(format!("classify-{key}.json"))
}
