use std::fs;

use anyhow::Context;
use bezierfold::hurdat::{filter_dataset, label_category, parse_hurdat2, tracks_to_text, StormClass};

use crate::cache;
use crate::config::PipelineConfig;

/// Parse, screen, label, persist. Prints the cardinality summary the rest
/// of the pipeline is built around.
pub fn run(config: &PipelineConfig) -> anyhow::Result<i32> {
    let input = fs::read_to_string(&config.data)
        .with_context(|| format!("reading {}", config.data.display()))?;
    let parsed = parse_hurdat2(&input)?;
    let (kept, report) = filter_dataset(&parsed, &config.filter_options());

    let mut counts = [0usize; 3];
    for track in &kept {
        counts[label_category(track)?.index()] += 1;
    }

    cache::ensure_dirs(config)?;
    let path = cache::track_cache_path(config, &input);
    cache::write(&path, &tracks_to_text(&kept))?;

    println!(
        "{} tracks ({} {}-{}, synoptic-only {})",
        kept.len(),
        config.basin,
        config.year_min,
        config.year_max,
        config.synoptic_only
    );
    for (class, count) in [StormClass::Tropical, StormClass::Hurricane, StormClass::Major]
        .into_iter()
        .zip(counts)
    {
        println!("  {:<12} {count}", class.as_str());
    }
    println!("  out of scope {}", report.out_of_scope);
    for (id, reason) in &report.rejected {
        println!("  rejected {id}: {reason}");
    }
    for (id, note) in &report.warnings {
        println!("  warning {id}: {note}");
    }
    println!("track cache: {}", path.display());
    Ok(0)
}
