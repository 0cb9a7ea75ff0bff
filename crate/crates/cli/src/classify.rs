use std::fmt::Write as _;
use std::fs;
use std::time::Instant;

use anyhow::Context;
use bezierfold::hurdat::StormClass;
use bezierfold::stats_ml::{feature_matrix, repeated_cv, standardize, CvSummary, FeatureVector};

use crate::cache;
use crate::config::PipelineConfig;

/// Repeated stratified cross-validation of the RBF-kernel SVM on both
/// feature encodings. Scores are cached keyed by features and SVM/CV
/// settings; identical configurations reuse them byte for byte.
pub fn run(config: &PipelineConfig) -> anyhow::Result<i32> {
    let input = fs::read_to_string(&config.data)
        .with_context(|| format!("reading {}", config.data.display()))?;
    let track_text = cache::require(&cache::track_cache_path(config, &input), "ingest")?;
    let spline_text = cache::require(
        &cache::spline_cache_path(config, config.segments, &track_text),
        "regress",
    )?;
    let sasaki_key = cache::pga_sasaki_key(config, &spline_text);
    let l2_key = cache::pga_l2_key(config, &track_text);
    let sasaki_csv = cache::require(&cache::pga_scores_path(config, "sasaki", &sasaki_key), "pga")?;
    let l2_csv = cache::require(&cache::pga_scores_path(config, "l2", &l2_key), "pga")?;

    cache::ensure_dirs(config)?;
    let key = cache::classify_key(config, &sasaki_csv, &l2_csv);
    let csv_path = cache::classify_csv_path(config, &key);
    let json_path = cache::classify_json_path(config, &key);
    if !(csv_path.exists() && json_path.exists()) {
        let mut csv = String::from("repetition,fold,method,accuracy\n");
        let mut json = serde_json::Map::new();
        json.insert("folds".into(), config.folds.into());
        json.insert("repetitions".into(), config.repetitions.into());
        json.insert("seed".into(), config.seed.into());
        json.insert("gamma".into(), config.gamma.into());
        json.insert("c".into(), config.svm_c.into());
        json.insert("standardize".into(), config.standardize.into());
        for (method, scores_csv) in [("sasaki", &sasaki_csv), ("l2", &l2_csv)] {
            let clock = Instant::now();
            let features = parse_features(scores_csv)?;
            let (mut x, y) = feature_matrix(&features)?;
            if config.standardize {
                standardize(&mut x);
            }
            let summary = repeated_cv(
                &x,
                &y,
                config.folds,
                config.repetitions,
                config.seed,
                config.svm_params(),
            )?;
            for (i, score) in summary.scores.iter().enumerate() {
                let _ = writeln!(csv, "{},{},{method},{score}", i / config.folds, i % config.folds);
            }
            json.insert(method.to_string(), summary_json(&summary));
            println!(
                "{method}: mean balanced accuracy {:.4} (median {:.4}, IQR {:.4}-{:.4}) in {:.1}s",
                summary.mean,
                summary.median,
                summary.quartile_low,
                summary.quartile_high,
                clock.elapsed().as_secs_f64()
            );
        }
        cache::write(&csv_path, &csv)?;
        let mut json_text = serde_json::to_string_pretty(&serde_json::Value::Object(json))?;
        json_text.push('\n');
        cache::write(&json_path, &json_text)?;
    } else {
        println!("classification cache already present: {}", csv_path.display());
    }

    cache::write(&config.out.join("classification.csv"), &fs::read_to_string(&csv_path)?)?;
    cache::write(
        &config.out.join("classification_summary.json"),
        &fs::read_to_string(&json_path)?,
    )?;
    println!("exports: classification.csv, classification_summary.json");
    Ok(0)
}

fn summary_json(summary: &CvSummary) -> serde_json::Value {
    let n = summary.scores.len() as f64;
    let var = summary
        .scores
        .iter()
        .map(|s| (s - summary.mean).powi(2))
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    serde_json::json!({
        "mean": summary.mean,
        "std": var.sqrt(),
        "median": summary.median,
        "quartile_low": summary.quartile_low,
        "quartile_high": summary.quartile_high,
        "scores": summary.scores.len(),
    })
}

/// Reads a PGA score export back into labelled feature vectors.
pub fn parse_features(csv: &str) -> anyhow::Result<Vec<FeatureVector>> {
    let mut features = Vec::new();
    for line in csv.lines().skip(1) {
        let mut fields = line.split(',');
        let id = fields.next().context("empty score row")?;
        let label_text = fields.next().with_context(|| format!("score row without label: {line:?}"))?;
        let label = StormClass::from_str(label_text)
            .with_context(|| format!("unknown class label {label_text:?}"))?;
        let values = fields
            .map(|f| f.parse::<f64>().with_context(|| format!("bad score {f:?} for {id}")))
            .collect::<anyhow::Result<Vec<f64>>>()?;
        features.push(FeatureVector {
            source_id: id.to_string(),
            label,
            values,
        });
    }
    anyhow::ensure!(!features.is_empty(), "score export has no rows");
    Ok(features)
}
