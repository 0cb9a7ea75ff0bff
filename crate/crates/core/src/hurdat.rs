//! HURDAT2 best-track ingestion: parsing the NOAA fixed-field format,
//! filtering to a basin and year range, Saffir-Simpson labeling, geodesic
//! resampling, and a plain-text cache format for parsed tracks.

use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point};
use chrono::{NaiveDate, NaiveDateTime};

/// Saffir-Simpson category 1 starts here (knots).
pub const HURRICANE_KT: i32 = 64;

/// Saffir-Simpson category 4 starts here (knots); categories above 3 are
/// "major".
pub const MAJOR_KT: i32 = 113;

/// Observed sample-count range of the modern Atlantic record; departures are
/// reported as warnings, not errors.
pub const SAMPLES_WARN_RANGE: std::ops::RangeInclusive<usize> = 13..=96;

/// Missing-data sentinel for maxwind in HURDAT2.
const MISSING_WIND: i32 = -99;

/// Intensity groups: below hurricane strength, hurricane categories 1-3,
/// and major hurricanes (category 4 and up).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StormClass {
    Tropical,
    Hurricane,
    Major,
}

impl StormClass {
    pub fn as_str(self) -> &'static str {
        match self {
            StormClass::Tropical => "tropical",
            StormClass::Hurricane => "hurricane",
            StormClass::Major => "major",
        }
    }

    pub fn index(self) -> usize {
        match self {
            StormClass::Tropical => 0,
            StormClass::Hurricane => 1,
            StormClass::Major => 2,
        }
    }

    pub fn from_str(s: &str) -> Option<StormClass> {
        match s {
            "tropical" => Some(StormClass::Tropical),
            "hurricane" => Some(StormClass::Hurricane),
            "major" => Some(StormClass::Major),
            _ => None,
        }
    }
}

/// One best-track fix: UTC time, position as a unit vector, intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSample {
    pub time: NaiveDateTime,
    pub point: Point,
    pub maxwind: i32,
}

/// A storm's track: identifier, name, and its chronological fixes.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: String,
    pub name: String,
    pub samples: Vec<TrackSample>,
}

impl Track {
    /// Basin prefix of the identifier ("AL" for Atlantic).
    pub fn basin(&self) -> &str {
        self.id.get(..2).unwrap_or("")
    }

    /// Season year from the identifier's trailing digits.
    pub fn year(&self) -> Option<i32> {
        self.id.get(self.id.len().saturating_sub(4)..)?.parse().ok()
    }
}

/// A track reduced to 32 positions at uniformly spaced normalized times.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampledTrack {
    pub source_id: String,
    pub points: Vec<Point>,
}

/// Number of points in a resampled track.
pub const RESAMPLE_COUNT: usize = 32;

/// Parses a HURDAT2 text stream: repeated blocks of a storm header
/// ("AL092011, IRENE, 39,") followed by that many data rows. Rows with the
/// missing-wind sentinel are dropped from the sample list.
pub fn parse_hurdat2(text: &str) -> Result<Vec<Track>> {
    let mut tracks: Vec<Track> = Vec::new();
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());

    let mut pending = lines.next();
    if pending.is_none() {
        return Err(Error::EmptyInput);
    }
    while let Some((header_line, header)) = pending {
        let fields: Vec<&str> = header.split(',').map(str::trim).collect();
        if fields.len() < 3 {
            return Err(Error::MalformedHeader {
                line: header_line,
                reason: format!("expected 'id, name, row count', got {header:?}"),
            });
        }
        let id = fields[0].to_string();
        if !is_storm_id(&id) {
            return Err(Error::MalformedHeader {
                line: header_line,
                reason: format!("storm id expected (basin + number + year), got {:?}", id),
            });
        }
        let name = fields[1].to_string();
        let promised: usize = fields[2].parse().map_err(|_| Error::MalformedHeader {
            line: header_line,
            reason: format!("row count expected, got {:?}", fields[2]),
        })?;

        let mut samples: Vec<TrackSample> = Vec::with_capacity(promised);
        for k in 0..promised {
            let (line_no, line) = lines.next().ok_or(Error::MalformedHeader {
                line: header_line,
                reason: format!("{id} promises {promised} rows, stream ends after {k}"),
            })?;
            if let Some(sample) = parse_row(line_no, line)? {
                if let Some(prev) = samples.last() {
                    if sample.time <= prev.time {
                        return Err(Error::MalformedRow {
                            line: line_no,
                            reason: format!(
                                "timestamps must increase; {} follows {}",
                                sample.time, prev.time
                            ),
                        });
                    }
                }
                samples.push(sample);
            }
        }
        tracks.push(Track { id, name, samples });
        pending = lines.next();
    }
    Ok(tracks)
}

fn is_storm_id(id: &str) -> bool {
    id.len() == 8
        && id.chars().take(2).all(|c| c.is_ascii_uppercase())
        && id.chars().skip(2).all(|c| c.is_ascii_digit())
}

/// One data row; `Ok(None)` for rows dropped over missing wind.
fn parse_row(line_no: usize, line: &str) -> Result<Option<TrackSample>> {
    let bad_row = |reason: String| Error::MalformedRow {
        line: line_no,
        reason,
    };
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() < 7 {
        return Err(bad_row(format!(
            "expected at least 7 comma-separated fields, got {}",
            fields.len()
        )));
    }
    if fields[0].len() != 8 || !fields[0].chars().all(|c| c.is_ascii_digit()) {
        return Err(bad_row(format!("date YYYYMMDD expected, got {:?}", fields[0])));
    }
    let year: i32 = fields[0][..4].parse().unwrap();
    let month: u32 = fields[0][4..6].parse().unwrap();
    let day: u32 = fields[0][6..].parse().unwrap();
    if fields[1].len() != 4 || !fields[1].chars().all(|c| c.is_ascii_digit()) {
        return Err(bad_row(format!("time HHMM expected, got {:?}", fields[1])));
    }
    let hour: u32 = fields[1][..2].parse().unwrap();
    let minute: u32 = fields[1][2..].parse().unwrap();
    let time = NaiveDate::from_ymd_opt(year, month, day)
        .and_then(|d| d.and_hms_opt(hour, minute, 0))
        .ok_or_else(|| bad_row(format!("invalid calendar time {} {}", fields[0], fields[1])))?;

    let lat = parse_hemisphere(fields[4], 'N', 'S')
        .ok_or_else(|| bad_row(format!("latitude like '15.0N' expected, got {:?}", fields[4])))?;
    let lon = parse_hemisphere(fields[5], 'E', 'W')
        .ok_or_else(|| bad_row(format!("longitude like '59.0W' expected, got {:?}", fields[5])))?;
    let maxwind: i32 = fields[6]
        .parse()
        .map_err(|_| bad_row(format!("wind in knots expected, got {:?}", fields[6])))?;
    if maxwind == MISSING_WIND {
        return Ok(None);
    }
    Ok(Some(TrackSample {
        time,
        point: Point::from_lat_lon(lat.to_radians(), lon.to_radians()),
        maxwind,
    }))
}

/// "15.0N" -> 15.0, "59.0W" -> -59.0; positive and negative hemisphere
/// suffixes per call site.
fn parse_hemisphere(field: &str, positive: char, negative: char) -> Option<f64> {
    let last = field.chars().last()?;
    let value: f64 = field[..field.len() - 1].trim().parse().ok()?;
    if !value.is_finite() || value < 0.0 {
        return None;
    }
    if last == positive {
        Some(value)
    } else if last == negative {
        Some(-value)
    } else {
        None
    }
}

/// Selection and screening settings for [`filter_dataset`].
#[derive(Debug, Clone)]
pub struct FilterOptions {
    pub basin: String,
    pub year_min: i32,
    pub year_max: i32,
    /// Keep only fixes at the 00/06/12/18 UTC synoptic hours.
    pub synoptic_only: bool,
}

impl Default for FilterOptions {
    fn default() -> FilterOptions {
        FilterOptions {
            basin: "AL".to_string(),
            year_min: 2010,
            year_max: 2021,
            synoptic_only: false,
        }
    }
}

/// Why tracks were rejected and which kept tracks look unusual.
#[derive(Debug, Clone, Default)]
pub struct FilterReport {
    /// (id, reason) per rejected in-scope track.
    pub rejected: Vec<(String, String)>,
    /// (id, note) for kept tracks outside the expected sample-count range.
    pub warnings: Vec<(String, String)>,
    /// Tracks outside the basin/year selection (not counted as rejections).
    pub out_of_scope: usize,
}

/// Selects basin/year-range tracks and screens them: at least 2 samples and
/// every fix within a quarter circle of the first. Returns the survivors and
/// a report of everything else.
pub fn filter_dataset(tracks: &[Track], options: &FilterOptions) -> (Vec<Track>, FilterReport) {
    use chrono::Timelike;
    let sphere = Manifold::sphere();
    let mut kept = Vec::new();
    let mut report = FilterReport::default();
    for track in tracks {
        if track.basin() != options.basin
            || !track
                .year()
                .is_some_and(|y| (options.year_min..=options.year_max).contains(&y))
        {
            report.out_of_scope += 1;
            continue;
        }
        let mut candidate = track.clone();
        if options.synoptic_only {
            candidate
                .samples
                .retain(|s| s.time.hour() % 6 == 0 && s.time.minute() == 0);
        }
        if candidate.samples.len() < 2 {
            report.rejected.push((
                candidate.id,
                format!("{} usable fixes; a track needs at least 2", candidate.samples.len()),
            ));
            continue;
        }
        let start = &candidate.samples[0].point;
        let spread = candidate
            .samples
            .iter()
            .map(|s| sphere.dist(start, &s.point))
            .fold(0.0, f64::max);
        if spread >= std::f64::consts::FRAC_PI_2 {
            report.rejected.push((
                candidate.id,
                format!("spread {spread:.3} rad from the first fix exceeds a quarter circle"),
            ));
            continue;
        }
        if !SAMPLES_WARN_RANGE.contains(&candidate.samples.len()) {
            report.warnings.push((
                candidate.id.clone(),
                format!(
                    "{} samples, outside the observed range {}..={}",
                    candidate.samples.len(),
                    SAMPLES_WARN_RANGE.start(),
                    SAMPLES_WARN_RANGE.end()
                ),
            ));
        }
        kept.push(candidate);
    }
    (kept, report)
}

/// Peak intensity over the track decides the class.
pub fn label_category(track: &Track) -> Result<StormClass> {
    let peak = track
        .samples
        .iter()
        .map(|s| s.maxwind)
        .max()
        .ok_or(Error::NoWindData)?;
    Ok(if peak < HURRICANE_KT {
        StormClass::Tropical
    } else if peak < MAJOR_KT {
        StormClass::Hurricane
    } else {
        StormClass::Major
    })
}

/// Geodesic resampling at 32 uniform positions of the normalized time
/// interval. Endpoints are the original endpoints, bit for bit.
pub fn resample32(track: &Track) -> Result<ResampledTrack> {
    let n = track.samples.len();
    if n < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: n,
            params: 0,
        });
    }
    let sphere = Manifold::sphere();
    let t0 = track.samples[0].time;
    let times: Vec<f64> = track
        .samples
        .iter()
        .map(|s| (s.time - t0).num_seconds() as f64)
        .collect();
    let span = times[n - 1];
    let mut points = Vec::with_capacity(RESAMPLE_COUNT);
    points.push(track.samples[0].point.clone());
    for k in 1..RESAMPLE_COUNT - 1 {
        let t = span * k as f64 / (RESAMPLE_COUNT - 1) as f64;
        let j = match times.binary_search_by(|x| x.partial_cmp(&t).expect("finite")) {
            Ok(j) => j.min(n - 2),
            Err(next) => next - 1,
        };
        let s = ((t - times[j]) / (times[j + 1] - times[j])).clamp(0.0, 1.0);
        let a = &track.samples[j].point;
        let b = &track.samples[j + 1].point;
        let v = sphere.log(a, b)?;
        points.push(sphere.exp(a, &v.scale(s))?);
    }
    points.push(track.samples[n - 1].point.clone());
    Ok(ResampledTrack {
        source_id: track.id.clone(),
        points,
    })
}

// ── Track cache ─────────────────────────────────────────────────────────
//
// Line-delimited store for parsed tracks: per track a header
// "id, name, label, sample count" and one row "YYYYMMDDHHMM, lat, lon, wind"
// per fix, angles in degrees with 6 fractional digits. The fixed formatting
// makes serialize -> parse -> serialize the identity on the text.

const CACHE_TIME_FORMAT: &str = "%Y%m%d%H%M";

/// Latitude/longitude in degrees recovered from the unit vector.
pub fn lat_lon_degrees(p: &Point) -> (f64, f64) {
    let c = p.coords();
    (
        c[2].clamp(-1.0, 1.0).asin().to_degrees(),
        c[1].atan2(c[0]).to_degrees(),
    )
}

pub fn tracks_to_text(tracks: &[Track]) -> String {
    let mut out = String::new();
    for track in tracks {
        let label = label_category(track).map(StormClass::as_str).unwrap_or("none");
        out.push_str(&format!(
            "{}, {}, {}, {}\n",
            track.id,
            track.name,
            label,
            track.samples.len()
        ));
        for s in &track.samples {
            let (lat, lon) = lat_lon_degrees(&s.point);
            out.push_str(&format!(
                "{}, {:.6}, {:.6}, {}\n",
                s.time.format(CACHE_TIME_FORMAT),
                lat,
                lon,
                s.maxwind
            ));
        }
    }
    out
}

pub fn tracks_from_text(text: &str) -> Result<Vec<Track>> {
    let mut tracks = Vec::new();
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let mut pending = lines.next();
    if pending.is_none() {
        return Err(Error::EmptyInput);
    }
    while let Some((header_line, header)) = pending {
        let fields: Vec<&str> = header.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::MalformedHeader {
                line: header_line,
                reason: format!("expected 'id, name, label, count', got {header:?}"),
            });
        }
        let count: usize = fields[3].parse().map_err(|_| Error::MalformedHeader {
            line: header_line,
            reason: format!("sample count expected, got {:?}", fields[3]),
        })?;
        let mut samples = Vec::with_capacity(count);
        for k in 0..count {
            let (line_no, line) = lines.next().ok_or(Error::MalformedHeader {
                line: header_line,
                reason: format!("{} promises {count} samples, found {k}", fields[0]),
            })?;
            samples.push(parse_cache_row(line_no, line)?);
        }
        tracks.push(Track {
            id: fields[0].to_string(),
            name: fields[1].to_string(),
            samples,
        });
        pending = lines.next();
    }
    Ok(tracks)
}

fn parse_cache_row(line_no: usize, line: &str) -> Result<TrackSample> {
    let bad_row = |reason: String| Error::MalformedRow {
        line: line_no,
        reason,
    };
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(bad_row(format!(
            "expected 'time, lat, lon, wind', got {line:?}"
        )));
    }
    let time = NaiveDateTime::parse_from_str(fields[0], CACHE_TIME_FORMAT)
        .map_err(|e| bad_row(format!("bad timestamp {:?}: {e}", fields[0])))?;
    let lat: f64 = fields[1]
        .parse()
        .map_err(|_| bad_row(format!("bad latitude {:?}", fields[1])))?;
    let lon: f64 = fields[2]
        .parse()
        .map_err(|_| bad_row(format!("bad longitude {:?}", fields[2])))?;
    let maxwind: i32 = fields[3]
        .parse()
        .map_err(|_| bad_row(format!("bad wind {:?}", fields[3])))?;
    Ok(TrackSample {
        time,
        point: Point::from_lat_lon(lat.to_radians(), lon.to_radians()),
        maxwind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
AL092011,             IRENE,      4,
20110821, 0000,  , TS, 15.0N,  59.0W,  45, 1006,
20110821, 0600,  , TS, 16.0N,  60.5W,  45, 1005,
20110821, 1200,  , TS, 17.2N,  61.9W, -99, 1004,
20110821, 1800,  , HU, 18.1N,  63.2W,  65, 1003,
EP052014,      LOWELL,      2,
20140820, 0000,  , TS, 18.0N, 110.0W,  40, 1002,
20140820, 0600,  , TS, 18.5N, 111.0W,  45, 1001,
";

    fn storm(id: &str, samples: Vec<TrackSample>) -> Track {
        Track {
            id: id.to_string(),
            name: "TEST".to_string(),
            samples,
        }
    }

    fn fix(day_hour: (u32, u32), lat: f64, lon: f64, wind: i32) -> TrackSample {
        TrackSample {
            time: NaiveDate::from_ymd_opt(2015, 7, day_hour.0)
                .unwrap()
                .and_hms_opt(day_hour.1, 0, 0)
                .unwrap(),
            point: Point::from_lat_lon(lat.to_radians(), lon.to_radians()),
            maxwind: wind,
        }
    }

    #[test]
    fn parses_headers_rows_and_drops_missing_wind() {
        let tracks = parse_hurdat2(SAMPLE).unwrap();
        assert_eq!(tracks.len(), 2);
        assert_eq!(tracks[0].id, "AL092011");
        assert_eq!(tracks[0].name, "IRENE");
        assert_eq!(tracks[0].samples.len(), 3, "the -99 row is dropped");
        assert_eq!(tracks[0].samples[2].maxwind, 65);
        assert_eq!(tracks[1].id, "EP052014");

        // First fix: 15.0N 59.0W.
        let p = &tracks[0].samples[0].point;
        let (phi, lam) = (15.0_f64.to_radians(), (-59.0_f64).to_radians());
        let expect = [phi.cos() * lam.cos(), phi.cos() * lam.sin(), phi.sin()];
        for c in 0..3 {
            assert!((p.coords()[c] - expect[c]).abs() < 1e-12);
        }
    }

    #[test]
    fn southern_and_eastern_hemispheres_flip_signs() {
        let text = "\
SH011970, UNNAMED,  1,
19700105, 0000,  , TS, 12.0S, 100.0E,  40, 1000,
";
        let tracks = parse_hurdat2(text).unwrap();
        let p = &tracks[0].samples[0].point;
        assert!(p.coords()[2] < 0.0, "southern latitude");
        let (lat, lon) = lat_lon_degrees(p);
        assert!((lat + 12.0).abs() < 1e-9);
        assert!((lon - 100.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_malformed_input_with_line_numbers() {
        assert!(matches!(parse_hurdat2(""), Err(Error::EmptyInput)));
        assert!(matches!(parse_hurdat2("  \n \n"), Err(Error::EmptyInput)));

        let bad_header = "AL09, IRENE, 1,\n20110821, 0000,  , TS, 15.0N, 59.0W, 45, 1006,\n";
        assert!(matches!(
            parse_hurdat2(bad_header),
            Err(Error::MalformedHeader { line: 1, .. })
        ));

        let bad_date = "AL092011, IRENE, 1,\n2011082, 0000,  , TS, 15.0N, 59.0W, 45, 1006,\n";
        assert!(matches!(
            parse_hurdat2(bad_date),
            Err(Error::MalformedRow { line: 2, .. })
        ));

        let bad_lat = "AL092011, IRENE, 1,\n20110821, 0000,  , TS, 15.0X, 59.0W, 45, 1006,\n";
        assert!(matches!(
            parse_hurdat2(bad_lat),
            Err(Error::MalformedRow { line: 2, .. })
        ));

        let truncated = "AL092011, IRENE, 3,\n20110821, 0000,  , TS, 15.0N, 59.0W, 45, 1006,\n";
        assert!(matches!(
            parse_hurdat2(truncated),
            Err(Error::MalformedHeader { line: 1, .. })
        ));

        let backwards = "\
AL092011, IRENE, 2,
20110821, 0600,  , TS, 15.0N, 59.0W, 45, 1006,
20110821, 0000,  , TS, 16.0N, 60.0W, 45, 1006,
";
        assert!(matches!(
            parse_hurdat2(backwards),
            Err(Error::MalformedRow { line: 3, .. })
        ));
    }

    #[test]
    fn filter_selects_basin_years_and_screens_validity() {
        let in_scope: Vec<TrackSample> = (0..14)
            .map(|k| fix((1 + k / 4, 6 * (k % 4)), 15.0 + k as f64, -60.0, 50))
            .collect();
        let tracks = vec![
            storm("AL012015", in_scope.clone()),
            storm("AL011990", in_scope.clone()),
            storm("EP012015", in_scope.clone()),
            storm("AL022015", vec![fix((1, 0), 15.0, -60.0, 45)]),
            storm(
                "AL032015",
                vec![fix((1, 0), 0.0, 0.0, 45), fix((1, 6), 0.0, -100.0, 45)],
            ),
        ];
        let (kept, report) = filter_dataset(&tracks, &FilterOptions::default());
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].id, "AL012015");
        assert_eq!(report.out_of_scope, 2, "wrong year and wrong basin");
        assert_eq!(report.rejected.len(), 2);
        assert!(report.rejected[0].1.contains("at least 2"), "{:?}", report.rejected);
        assert!(report.rejected[1].1.contains("quarter circle"));
        assert!(report.warnings.is_empty());

        // Short tracks emit a warning but stay.
        let short = vec![storm(
            "AL042015",
            (0..4).map(|k| fix((1, 6 * k), 15.0, -60.0 + k as f64, 45)).collect(),
        )];
        let (kept, report) = filter_dataset(&short, &FilterOptions::default());
        assert_eq!(kept.len(), 1);
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn synoptic_filter_drops_off_hour_fixes() {
        let mut samples: Vec<TrackSample> = (0..13)
            .map(|k| fix((1 + k / 4, 6 * (k % 4)), 15.0 + k as f64, -60.0, 50))
            .collect();
        use chrono::Timelike;
        let mut landfall = fix((1, 9), 15.1, -60.0, 55);
        landfall.time = landfall.time.with_minute(30).unwrap();
        samples.insert(2, landfall);
        samples.sort_by_key(|s| s.time);
        let tracks = vec![storm("AL012015", samples)];

        let options = FilterOptions {
            synoptic_only: true,
            ..FilterOptions::default()
        };
        let (kept, _) = filter_dataset(&tracks, &options);
        assert_eq!(kept[0].samples.len(), 13);
        let (kept, _) = filter_dataset(&tracks, &FilterOptions::default());
        assert_eq!(kept[0].samples.len(), 14);
    }

    #[test]
    fn labels_follow_the_intensity_thresholds() {
        let label_of = |winds: &[i32]| {
            let samples = winds
                .iter()
                .enumerate()
                .map(|(k, &w)| fix((1 + k as u32 / 4, 6 * (k as u32 % 4)), 15.0, -60.0, w))
                .collect();
            label_category(&storm("AL012015", samples)).unwrap()
        };
        assert_eq!(label_of(&[30, 45, 40]), StormClass::Tropical);
        assert_eq!(label_of(&[30, 64, 40]), StormClass::Hurricane);
        assert_eq!(label_of(&[30, 112, 40]), StormClass::Hurricane);
        assert_eq!(label_of(&[30, 113, 40]), StormClass::Major);
        assert_eq!(label_of(&[137]), StormClass::Major);

        // Monotone in the peak.
        let mut last = 0;
        for peak in 20..150 {
            let idx = label_of(&[peak]).index();
            assert!(idx >= last, "label dropped at {peak} kt");
            last = idx;
        }

        let empty = storm("AL012015", vec![]);
        assert!(matches!(label_category(&empty), Err(Error::NoWindData)));
    }

    #[test]
    fn resampling_uniform_32_track_is_the_identity() {
        let m = Manifold::sphere();
        let a = Point::from_lat_lon(0.3, -1.0);
        let b = Point::from_lat_lon(0.5, -0.6);
        let v = m.log(&a, &b).unwrap();
        let samples: Vec<TrackSample> = (0..32)
            .map(|k| {
                let mut s = fix((1 + k / 4, 6 * (k % 4)), 0.0, 0.0, 45);
                s.point = m.exp(&a, &v.scale(k as f64 / 31.0)).unwrap();
                s
            })
            .collect();
        let track = storm("AL012015", samples);
        let resampled = resample32(&track).unwrap();
        assert_eq!(resampled.points.len(), 32);
        for (orig, new) in track.samples.iter().zip(&resampled.points) {
            assert!(m.dist(&orig.point, new) < 1e-12);
        }
    }

    #[test]
    fn two_fixes_resample_uniformly_along_the_geodesic() {
        let m = Manifold::sphere();
        let track = storm(
            "AL012015",
            vec![fix((1, 0), 10.0, -50.0, 45), fix((2, 0), 20.0, -60.0, 45)],
        );
        let resampled = resample32(&track).unwrap();
        let a = &track.samples[0].point;
        let v = m.log(a, &track.samples[1].point).unwrap();
        for (k, p) in resampled.points.iter().enumerate() {
            let expect = m.exp(a, &v.scale(k as f64 / 31.0)).unwrap();
            assert!(m.dist(p, &expect) < 1e-12, "k={k}");
        }
        assert_eq!(resampled.points[0], track.samples[0].point);
        assert_eq!(resampled.points[31], track.samples[1].point);
    }

    #[test]
    fn resampling_never_lengthens_the_polyline() {
        let m = Manifold::sphere();
        let samples: Vec<TrackSample> = (0..10)
            .map(|k| {
                let wobble = if k % 2 == 0 { 1.5 } else { -1.5 };
                fix(
                    (1 + k / 4, 6 * (k % 4)),
                    12.0 + 2.0 * k as f64 + wobble,
                    -55.0 - 1.5 * k as f64,
                    45,
                )
            })
            .collect();
        let track = storm("AL012015", samples);
        let polyline = |pts: &[Point]| -> f64 {
            pts.windows(2).map(|w| m.dist(&w[0], &w[1])).sum()
        };
        let original: Vec<Point> = track.samples.iter().map(|s| s.point.clone()).collect();
        let resampled = resample32(&track).unwrap();
        assert!(polyline(&resampled.points) <= polyline(&original) + 1e-9);
    }

    #[test]
    fn cache_round_trips_text_exactly() {
        let tracks = parse_hurdat2(SAMPLE).unwrap();
        let text = tracks_to_text(&tracks);
        let back = tracks_from_text(&text).unwrap();
        assert_eq!(back.len(), tracks.len());
        for (a, b) in tracks.iter().zip(&back) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.name, b.name);
            assert_eq!(a.samples.len(), b.samples.len());
            for (x, y) in a.samples.iter().zip(&b.samples) {
                assert_eq!(x.time, y.time);
                assert_eq!(x.maxwind, y.maxwind);
                let gap: f64 = x
                    .point
                    .coords()
                    .iter()
                    .zip(y.point.coords())
                    .map(|(p, q)| (p - q).abs())
                    .fold(0.0, f64::max);
                assert!(gap < 1e-7, "6-digit degrees keep 1e-7 in the embedding");
            }
        }
        // Fixed point of the formatting: one more round trip is bit-exact.
        assert_eq!(tracks_to_text(&back), text);
    }

    #[test]
    fn cache_rejects_malformed_records() {
        assert!(matches!(tracks_from_text(""), Err(Error::EmptyInput)));
        let bad = "AL012015, TEST, tropical, 1\n201507010000, 15.0, -60.0\n";
        assert!(matches!(
            tracks_from_text(bad),
            Err(Error::MalformedRow { line: 2, .. })
        ));
        let short = "AL012015, TEST, tropical, 2\n201507010000, 15.0, -60.0, 45\n";
        assert!(matches!(
            tracks_from_text(short),
            Err(Error::MalformedHeader { line: 1, .. })
        ));
    }
}
