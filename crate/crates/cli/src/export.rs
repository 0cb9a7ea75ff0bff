use std::fs;

use anyhow::Context;
use bezierfold::bezier::CubicSpline;
use bezierfold::hurdat::{label_category, lat_lon_degrees, tracks_from_text};
use serde_json::json;

use crate::cache;
use crate::config::PipelineConfig;
use crate::pga::{parse_modes_text, sample_spline};
use crate::regress;

/// One GeoJSON FeatureCollection with the raw tracks, their fitted splines
/// (100 points per segment), and the decoded PGA mean and mode
/// trajectories. Properties carry ids and fit quality for styling.
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
    let modes_text = cache::require(
        &cache::pga_modes_path(config, &cache::pga_sasaki_key(config, &spline_text)),
        "pga",
    )?;
    let (mean, modes) = parse_modes_text(&modes_text)?;

    let mut features = Vec::new();
    for track in &tracks {
        let coords: Vec<[f64; 2]> = track
            .samples
            .iter()
            .map(|s| {
                let (lat, lon) = lat_lon_degrees(&s.point);
                [lon, lat]
            })
            .collect();
        features.push(json!({
            "type": "Feature",
            "geometry": { "type": "LineString", "coordinates": coords },
            "properties": {
                "kind": "track",
                "id": track.id,
                "name": track.name,
                "label": label_category(track)?.as_str(),
                "samples": track.samples.len(),
            },
        }));
    }
    for rec in &records {
        features.push(json!({
            "type": "Feature",
            "geometry": { "type": "LineString", "coordinates": line_coords(&rec.spline)? },
            "properties": {
                "kind": "spline",
                "id": rec.id,
                "segments": rec.spline.segments(),
                "r_squared": rec.r2,
            },
        }));
    }
    features.push(json!({
        "type": "Feature",
        "geometry": { "type": "LineString", "coordinates": line_coords(&mean)? },
        "properties": { "kind": "pga_mean", "segments": mean.segments() },
    }));
    for (index, sign, spline) in &modes {
        features.push(json!({
            "type": "Feature",
            "geometry": { "type": "LineString", "coordinates": line_coords(spline)? },
            "properties": {
                "kind": "pga_mode",
                "mode": index,
                "sign": sign.to_string(),
            },
        }));
    }

    let collection = json!({ "type": "FeatureCollection", "features": features });
    let path = config.out.join("tracks.geojson");
    let mut text = serde_json::to_string(&collection)?;
    text.push('\n');
    cache::write(&path, &text)?;
    println!(
        "{}: {} tracks, {} splines, mean, {} mode trajectories",
        path.display(),
        tracks.len(),
        records.len(),
        modes.len()
    );
    Ok(0)
}

fn line_coords(spline: &CubicSpline) -> anyhow::Result<Vec<[f64; 2]>> {
    Ok(sample_spline(spline)?
        .into_iter()
        .map(|(_, p)| {
            let (lat, lon) = lat_lon_degrees(&p);
            [lon, lat]
        })
        .collect())
}
