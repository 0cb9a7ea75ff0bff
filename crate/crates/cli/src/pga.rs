use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::time::Instant;

use anyhow::Context;
use bezierfold::bezier::{spline_from_text, spline_to_text, CubicSpline};
use bezierfold::bezierfold::{decode, encode, Bezierfold};
use bezierfold::hurdat::{label_category, resample32, tracks_from_text, StormClass, Track};
use bezierfold::stats_ml::product_pga;
use bezierfold::Manifold;

use crate::cache;
use crate::config::PipelineConfig;
use crate::regress;

/// Principal geodesic analysis of the fitted splines under the pullback
/// Sasaki metric, plus the pointwise baseline on 32-point resamplings.
/// Scores, variances, and decoded mode trajectories are cached; stable-name
/// copies land in the output directory for plotting.
pub fn run(config: &PipelineConfig) -> anyhow::Result<i32> {
    let input = fs::read_to_string(&config.data)
        .with_context(|| format!("reading {}", config.data.display()))?;
    let track_text = cache::require(&cache::track_cache_path(config, &input), "ingest")?;
    let tracks = tracks_from_text(&track_text)?;
    let spline_text = cache::require(
        &cache::spline_cache_path(config, config.segments, &track_text),
        "regress",
    )?;
    let (records, _) = regress::parse_cache(&spline_text)?;
    anyhow::ensure!(records.len() >= 2, "need at least two fitted tracks");
    cache::ensure_dirs(config)?;

    let by_id: HashMap<&str, &Track> = tracks.iter().map(|t| (t.id.as_str(), t)).collect();
    let labels: Vec<StormClass> = records
        .iter()
        .map(|rec| {
            let track = by_id
                .get(rec.id.as_str())
                .with_context(|| format!("spline cache names unknown track {}", rec.id))?;
            Ok(label_category(track)?)
        })
        .collect::<anyhow::Result<_>>()?;
    let modes = config.modes.unwrap_or(usize::MAX);

    let sasaki_key = cache::pga_sasaki_key(config, &spline_text);
    let sasaki_scores = cache::pga_scores_path(config, "sasaki", &sasaki_key);
    let sasaki_vars = cache::pga_variances_path(config, "sasaki", &sasaki_key);
    let modes_path = cache::pga_modes_path(config, &sasaki_key);
    if !(sasaki_scores.exists() && sasaki_vars.exists() && modes_path.exists()) {
        let clock = Instant::now();
        let codes = records
            .iter()
            .map(|rec| encode(&rec.spline))
            .collect::<bezierfold::Result<Vec<_>>>()?;
        let space = Bezierfold::with_segments(Manifold::sphere(), config.discretization);
        let model = space.pga(&codes, modes)?;
        cache::write(&sasaki_scores, &scores_csv(&records, &labels, &model.scores))?;
        cache::write(&sasaki_vars, &variances_csv(&model.variances))?;
        cache::write(&modes_path, &modes_text(&space, &model)?)?;
        println!(
            "Sasaki PGA: {} modes ({} dropped) over {} splines in {:.1}s",
            model.variances.len(),
            model.dropped,
            codes.len(),
            clock.elapsed().as_secs_f64()
        );
    } else {
        println!("Sasaki PGA cache already present: {}", sasaki_scores.display());
    }

    let l2_key = cache::pga_l2_key(config, &track_text);
    let l2_scores = cache::pga_scores_path(config, "l2", &l2_key);
    let l2_vars = cache::pga_variances_path(config, "l2", &l2_key);
    if !(l2_scores.exists() && l2_vars.exists()) {
        let clock = Instant::now();
        let trajectories = records
            .iter()
            .map(|rec| Ok(resample32(by_id[rec.id.as_str()])?.points))
            .collect::<bezierfold::Result<Vec<_>>>()?;
        let baseline = product_pga(&Manifold::sphere(), &trajectories, modes)?;
        cache::write(&l2_scores, &scores_csv(&records, &labels, &baseline.scores))?;
        cache::write(&l2_vars, &variances_csv(&baseline.variances))?;
        println!(
            "pointwise baseline PGA: {} modes ({} dropped) in {:.1}s",
            baseline.variances.len(),
            baseline.dropped,
            clock.elapsed().as_secs_f64()
        );
    } else {
        println!("baseline PGA cache already present: {}", l2_scores.display());
    }

    let sasaki_csv = fs::read_to_string(&sasaki_scores)?;
    let l2_csv = fs::read_to_string(&l2_scores)?;
    cache::write(&config.out.join("pga_sasaki.csv"), &sasaki_csv)?;
    cache::write(&config.out.join("pga_sasaki_variances.csv"), &fs::read_to_string(&sasaki_vars)?)?;
    cache::write(&config.out.join("pga_l2.csv"), &l2_csv)?;
    cache::write(&config.out.join("pga_l2_variances.csv"), &fs::read_to_string(&l2_vars)?)?;

    let mean_track = mean_track_csv(&fs::read_to_string(&modes_path)?)?;
    cache::write(&config.out.join("pga_mean_track.csv"), &mean_track)?;

    let ratio = separation_ratio(&sasaki_csv, &l2_csv)?;
    println!("group-mean separation ratio (Sasaki vs pointwise, first two modes): {ratio:.3}");
    println!("exports: pga_sasaki.csv, pga_l2.csv, variance sidecars, pga_mean_track.csv");
    Ok(0)
}

fn scores_csv(records: &[regress::FitRecord], labels: &[StormClass], scores: &[Vec<f64>]) -> String {
    let width = scores.first().map_or(0, Vec::len);
    let mut out = String::from("id,label");
    for m in 1..=width {
        let _ = write!(out, ",score{m}");
    }
    out.push('\n');
    for ((rec, label), row) in records.iter().zip(labels).zip(scores) {
        let _ = write!(out, "{},{}", rec.id, label.as_str());
        for s in row {
            let _ = write!(out, ",{s}");
        }
        out.push('\n');
    }
    out
}

fn variances_csv(variances: &[f64]) -> String {
    let mut out = String::from("mode,variance\n");
    for (m, v) in variances.iter().enumerate() {
        let _ = writeln!(out, "{},{v}", m + 1);
    }
    out
}

/// Decoded mean and per-mode trajectories `exp(mean, ±sqrt(variance)·dir)`,
/// one labelled spline record each.
fn modes_text(space: &Bezierfold, model: &bezierfold::bezierfold::PGAModel) -> anyhow::Result<String> {
    let mut out = String::from("mean\n");
    out.push_str(&spline_to_text(&decode(&model.mean)?));
    for (m, (dir, var)) in model.directions.iter().zip(&model.variances).enumerate() {
        for sign in [1.0, -1.0] {
            let code = space.exp(&dir.scale(sign * var.sqrt()))?;
            let _ = writeln!(out, "mode {} {}", m + 1, if sign > 0.0 { '+' } else { '-' });
            out.push_str(&spline_to_text(&decode(&code)?));
        }
    }
    Ok(out)
}

/// Parses the modes cache: the mean spline and the signed mode trajectories.
pub fn parse_modes_text(text: &str) -> anyhow::Result<(CubicSpline, Vec<(usize, char, CubicSpline)>)> {
    let sphere = Manifold::sphere();
    let mut lines = text.lines().peekable();
    let mut mean = None;
    let mut modes = Vec::new();
    while let Some(header) = lines.next() {
        let count_line = lines.peek().context("modes cache is truncated")?;
        let segments: usize = count_line
            .trim()
            .parse()
            .with_context(|| format!("bad segment count {count_line:?}"))?;
        let mut block = String::new();
        for _ in 0..1 + 4 * segments {
            block.push_str(lines.next().context("modes cache is truncated")?);
            block.push('\n');
        }
        let spline = spline_from_text(sphere.clone(), &block)?;
        if header == "mean" {
            mean = Some(spline);
        } else {
            let mut fields = header.split_whitespace();
            anyhow::ensure!(fields.next() == Some("mode"), "unexpected modes cache line {header:?}");
            let index: usize = fields.next().context("mode index missing")?.parse()?;
            let sign = fields
                .next()
                .and_then(|s| s.chars().next())
                .context("mode sign missing")?;
            modes.push((index, sign, spline));
        }
    }
    Ok((mean.context("modes cache has no mean record")?, modes))
}

/// Mean trajectory sampled for plotting: 100 points per segment.
fn mean_track_csv(modes_cache: &str) -> anyhow::Result<String> {
    let (mean, _) = parse_modes_text(modes_cache)?;
    let mut out = String::from("t,lat,lon\n");
    for (t, p) in sample_spline(&mean)? {
        let (lat, lon) = bezierfold::hurdat::lat_lon_degrees(&p);
        let _ = writeln!(out, "{t},{lat},{lon}");
    }
    Ok(out)
}

/// Uniform parameter sweep with 100 samples per segment.
pub fn sample_spline(spline: &CubicSpline) -> anyhow::Result<Vec<(f64, bezierfold::Point)>> {
    let l = spline.segments();
    let count = 100 * l;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let t = l as f64 * k as f64 / (count - 1) as f64;
        out.push((t, spline.eval(t)?));
    }
    Ok(out)
}

/// Between-class centroid spread over within-class spread in the first two
/// score dimensions, Sasaki relative to the baseline. Scale-free, so the
/// two representations' different score units cancel.
pub fn separation_ratio(sasaki_csv: &str, l2_csv: &str) -> anyhow::Result<f64> {
    Ok(separation(sasaki_csv)? / separation(l2_csv)?)
}

fn separation(csv: &str) -> anyhow::Result<f64> {
    let mut by_class: std::collections::BTreeMap<String, Vec<[f64; 2]>> = Default::default();
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        anyhow::ensure!(fields.len() >= 4, "score row with fewer than two modes: {line:?}");
        let score: [f64; 2] = [fields[2].parse()?, fields[3].parse()?];
        by_class.entry(fields[1].to_string()).or_default().push(score);
    }
    anyhow::ensure!(by_class.len() >= 2, "need at least two classes");
    let centroids: Vec<[f64; 2]> = by_class
        .values()
        .map(|rows| {
            let n = rows.len() as f64;
            [
                rows.iter().map(|r| r[0]).sum::<f64>() / n,
                rows.iter().map(|r| r[1]).sum::<f64>() / n,
            ]
        })
        .collect();
    let mut between = 0.0;
    let mut pairs = 0;
    for i in 0..centroids.len() {
        for j in i + 1..centroids.len() {
            let dx = centroids[i][0] - centroids[j][0];
            let dy = centroids[i][1] - centroids[j][1];
            between += (dx * dx + dy * dy).sqrt();
            pairs += 1;
        }
    }
    between /= pairs as f64;
    let mut within = 0.0;
    let mut count = 0;
    for (rows, centroid) in by_class.values().zip(&centroids) {
        for r in rows {
            within += (r[0] - centroid[0]).powi(2) + (r[1] - centroid[1]).powi(2);
            count += 1;
        }
    }
    Ok(between / (within / count as f64).sqrt())
}
