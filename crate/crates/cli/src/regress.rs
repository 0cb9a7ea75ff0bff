use std::fmt::Write as _;
use std::fs;
use std::time::Instant;

use anyhow::Context;
use bezierfold::bezier::{fit_spline, r_squared, spline_from_text, spline_to_text, CubicSpline, TimedSamples};
use bezierfold::hurdat::{label_category, tracks_from_text, Track};
use bezierfold::Manifold;
use rayon::prelude::*;

use crate::cache;
use crate::config::PipelineConfig;

/// One fitted track as stored in the spline cache.
pub struct FitRecord {
    pub id: String,
    pub spline: CubicSpline,
    pub r2: f64,
    pub objective: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Fits every track with one- and two-segment splines, caches the results,
/// and regenerates the fit-quality exports from the caches.
pub fn run(config: &PipelineConfig) -> anyhow::Result<i32> {
    let input = fs::read_to_string(&config.data)
        .with_context(|| format!("reading {}", config.data.display()))?;
    let track_text = cache::require(&cache::track_cache_path(config, &input), "ingest")?;
    let tracks = tracks_from_text(&track_text)?;
    cache::ensure_dirs(config)?;

    let mut partial = false;
    for segments in [1, 2] {
        let path = cache::spline_cache_path(config, segments, &track_text);
        if path.exists() {
            println!("spline cache (L={segments}) already present: {}", path.display());
            continue;
        }
        let clock = Instant::now();
        let (text, failures) = fit_all(&tracks, segments);
        partial |= failures > 0;
        cache::write(&path, &text)?;
        println!(
            "fitted {} tracks with L={segments} in {:.1}s ({failures} failures): {}",
            tracks.len() - failures,
            clock.elapsed().as_secs_f64(),
            path.display()
        );
    }

    let mut histogram = String::from("id,label,segments,r_squared\n");
    let mut report = String::from("id,label,segments,r_squared,objective,grad_norm,iterations,converged\n");
    for segments in [1, 2] {
        let text = cache::require(&cache::spline_cache_path(config, segments, &track_text), "regress")?;
        let (records, failed) = parse_cache(&text)?;
        partial |= !failed.is_empty();
        let mut mean = 0.0;
        let mut high = 0usize;
        for rec in &records {
            let track = tracks.iter().find(|t| t.id == rec.id);
            let label = track
                .and_then(|t| label_category(t).ok())
                .map_or("none", |c| c.as_str());
            let _ = writeln!(histogram, "{},{},{},{}", rec.id, label, segments, rec.r2);
            let _ = writeln!(
                report,
                "{},{},{},{},{},{},{},{}",
                rec.id, label, segments, rec.r2, rec.objective, rec.grad_norm, rec.iterations, rec.converged
            );
            mean += rec.r2;
            high += (rec.r2 >= 0.95) as usize;
        }
        mean /= records.len().max(1) as f64;
        println!(
            "L={segments}: mean R2 {:.4}, {}/{} tracks with R2 >= 0.95",
            mean,
            high,
            records.len()
        );
        for (id, reason) in failed {
            eprintln!("L={segments}: {id} failed: {reason}");
        }
    }
    cache::write(&config.out.join("regression_r2.csv"), &histogram)?;
    cache::write(&config.out.join("regression_report.csv"), &report)?;
    println!("exports: regression_r2.csv, regression_report.csv");
    Ok(if partial { 1 } else { 0 })
}

fn fit_all(tracks: &[Track], segments: usize) -> (String, usize) {
    let fitted: Vec<(String, Result<FitRecord, String>)> = tracks
        .par_iter()
        .map(|track| (track.id.clone(), fit_track(track, segments).map_err(|e| e.to_string())))
        .collect();
    let mut out = String::new();
    let mut failures = 0;
    for (id, result) in fitted {
        match result {
            Ok(rec) => {
                let _ = writeln!(
                    out,
                    "track {id} r2={} objective={} grad_norm={} iterations={} converged={}",
                    rec.r2, rec.objective, rec.grad_norm, rec.iterations, rec.converged
                );
                out.push_str(&spline_to_text(&rec.spline));
            }
            Err(reason) => {
                let _ = writeln!(out, "failed {id} {reason}");
                failures += 1;
            }
        }
    }
    (out, failures)
}

pub fn fit_track(track: &Track, segments: usize) -> bezierfold::Result<FitRecord> {
    let data = track_samples(track, segments)?;
    let (spline, fit) = fit_spline(&data, segments)?;
    let r2 = r_squared(&spline, &data)?;
    Ok(FitRecord {
        id: track.id.clone(),
        spline,
        r2,
        objective: fit.objective,
        grad_norm: fit.grad_norm,
        iterations: fit.iterations,
        converged: fit.converged,
    })
}

pub fn track_samples(track: &Track, segments: usize) -> bezierfold::Result<TimedSamples> {
    let t0 = track.samples[0].time;
    let times: Vec<f64> = track
        .samples
        .iter()
        .map(|s| (s.time - t0).num_seconds() as f64)
        .collect();
    let points = track.samples.iter().map(|s| s.point.clone()).collect::<Vec<_>>();
    let (data, _) = TimedSamples::from_unnormalized(Manifold::sphere(), &times, &points, segments)?;
    Ok(data)
}

/// Reads a spline cache back: fit records plus (id, reason) for the tracks
/// whose fit failed when the cache was written.
pub fn parse_cache(text: &str) -> anyhow::Result<(Vec<FitRecord>, Vec<(String, String)>)> {
    let sphere = Manifold::sphere();
    let mut records = Vec::new();
    let mut failed = Vec::new();
    let mut lines = text.lines().peekable();
    while let Some(header) = lines.next() {
        if let Some(rest) = header.strip_prefix("failed ") {
            let (id, reason) = rest.split_once(' ').unwrap_or((rest, ""));
            failed.push((id.to_string(), reason.to_string()));
            continue;
        }
        let rest = header
            .strip_prefix("track ")
            .with_context(|| format!("unexpected spline cache line {header:?}"))?;
        let mut fields = rest.split_whitespace();
        let id = fields.next().context("spline cache record without id")?.to_string();
        let mut rec = FitRecord {
            id,
            spline: placeholder_spline(),
            r2: f64::NAN,
            objective: f64::NAN,
            grad_norm: f64::NAN,
            iterations: 0,
            converged: false,
        };
        for field in fields {
            let (key, value) = field
                .split_once('=')
                .with_context(|| format!("malformed field {field:?} in spline cache"))?;
            match key {
                "r2" => rec.r2 = value.parse()?,
                "objective" => rec.objective = value.parse()?,
                "grad_norm" => rec.grad_norm = value.parse()?,
                "iterations" => rec.iterations = value.parse()?,
                "converged" => rec.converged = value.parse()?,
                _ => anyhow::bail!("unknown field {key:?} in spline cache"),
            }
        }
        let count_line = lines
            .peek()
            .with_context(|| format!("spline record for {} is truncated", rec.id))?;
        let segments: usize = count_line
            .trim()
            .parse()
            .with_context(|| format!("bad segment count {count_line:?}"))?;
        let mut block = String::new();
        for _ in 0..1 + 4 * segments {
            let line = lines
                .next()
                .with_context(|| format!("spline record for {} is truncated", rec.id))?;
            block.push_str(line);
            block.push('\n');
        }
        rec.spline = spline_from_text(sphere.clone(), &block)?;
        records.push(rec);
    }
    Ok((records, failed))
}

fn placeholder_spline() -> CubicSpline {
    let p = bezierfold::Point::from_lat_lon(0.0, 0.0);
    CubicSpline::new(Manifold::sphere(), vec![p.clone(), p.clone(), p.clone(), p])
        .expect("constant spline is valid")
}
