//! Recording and event CSV ingestion, JSON reports, CSV plot tables and
//! atomic file writes.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{MainSeqReport, PvafReport};
use crate::error::{Error, Result};
use crate::filter::ResponseRow;
use crate::sampling::SamplingSweepResult;
use crate::series::{validate_series, EventLabel, SaccadeEvent, TimeSeries};

pub const RECORDING_COLUMNS: [&str; 3] = ["t_ms", "x_deg", "y_deg"];
pub const EVENT_COLUMNS: [&str; 3] = ["onset_ms", "offset_ms", "label"];
/// Allowed relative deviation of each sample interval from `1000 / rate`.
pub const INTERVAL_TOLERANCE: f64 = 0.01;
/// Slack for ms → index conversion so 300.0000001 ms still maps to 300.
const INDEX_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    X,
    Y,
}

impl std::str::FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Self::X),
            "y" => Ok(Self::Y),
            other => Err(Error::InvalidArgument(format!("unknown channel {other:?}"))),
        }
    }
}

fn column_positions(headers: &csv::StringRecord, want: &[&str]) -> Result<Vec<usize>> {
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    want.iter()
        .map(|w| {
            names.iter().position(|n| n == w).ok_or_else(|| {
                Error::MalformedHeader(format!("expected columns {}, found {}", want.join(","), names.join(",")))
            })
        })
        .collect()
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(input)
}

fn headers<R: Read>(rdr: &mut csv::Reader<R>) -> Result<csv::StringRecord> {
    let h = rdr.headers()?.clone();
    if h.is_empty() || h.iter().all(|c| c.trim().is_empty()) {
        return Err(Error::EmptyFile);
    }
    Ok(h)
}

/// Empty cells and `NaN` map to `None`.
fn optional_cell(cell: &str, line: usize) -> Result<Option<f64>> {
    if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    cell.parse::<f64>().map(Some).map_err(|_| Error::MalformedRow {
        line,
        reason: format!("not a number: {cell:?}"),
    })
}

fn required_cell(cell: &str, line: usize, what: &str) -> Result<f64> {
    optional_cell(cell, line)?.ok_or_else(|| Error::MalformedRow {
        line,
        reason: format!("missing {what}"),
    })
}

/// Parses a `t_ms,x_deg,y_deg` recording from any reader.
pub fn read_recording<R: Read>(input: R, expected_rate_hz: f64, channel: Channel) -> Result<TimeSeries> {
    let mut rdr = reader(input);
    let cols = column_positions(&headers(&mut rdr)?, &RECORDING_COLUMNS)?;
    let value_col = match channel {
        Channel::X => cols[1],
        Channel::Y => cols[2],
    };
    let mut raw = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        // Header is line 1.
        let line = i + 2;
        let t = required_cell(&rec[cols[0]], line, "t_ms")?;
        raw.push((t, optional_cell(&rec[value_col], line)?));
    }
    if raw.is_empty() {
        return Err(Error::EmptyFile);
    }
    validate_series(&raw, expected_rate_hz, INTERVAL_TOLERANCE)
}

pub fn parse_recording(path: &Path, expected_rate_hz: f64, channel: Channel) -> Result<TimeSeries> {
    read_recording(fs::File::open(path)?, expected_rate_hz, channel)
}

/// Parses `onset_ms,offset_ms,label` rows into sample indices of a
/// recording at `rate_hz` whose first sample is at `start_time_ms`.
/// Onsets round down and offsets round up, so an event never loses
/// annotated samples.
pub fn read_events<R: Read>(input: R, rate_hz: f64, start_time_ms: f64) -> Result<Vec<SaccadeEvent>> {
    let mut rdr = reader(input);
    let cols = column_positions(&headers(&mut rdr)?, &EVENT_COLUMNS)?;
    let to_pos = |ms: f64| (ms - start_time_ms) * rate_hz / 1000.0;
    let mut events = Vec::new();
    let mut last_onset = f64::NEG_INFINITY;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let onset_ms = required_cell(&rec[cols[0]], line, "onset_ms")?;
        let offset_ms = required_cell(&rec[cols[1]], line, "offset_ms")?;
        let label: EventLabel = rec[cols[2]].parse().map_err(|e: Error| Error::MalformedRow {
            line,
            reason: e.to_string(),
        })?;
        if offset_ms < onset_ms {
            return Err(Error::OffsetBeforeOnset { line });
        }
        if onset_ms < last_onset {
            return Err(Error::MalformedRow {
                line,
                reason: "onsets must be non-decreasing".into(),
            });
        }
        last_onset = onset_ms;
        let (on, off) = (to_pos(onset_ms), to_pos(offset_ms));
        if on < -INDEX_EPS {
            return Err(Error::MalformedRow {
                line,
                reason: format!("onset {onset_ms} ms precedes the recording"),
            });
        }
        let onset_index = (on + INDEX_EPS).floor().max(0.0) as usize;
        let offset_index = (off - INDEX_EPS).ceil().max(0.0) as usize;
        events.push(SaccadeEvent::new(onset_index, offset_index, label)?);
    }
    Ok(events)
}

pub fn parse_events(path: &Path, rate_hz: f64, start_time_ms: f64) -> Result<Vec<SaccadeEvent>> {
    read_events(fs::File::open(path)?, rate_hz, start_time_ms)
}

/// Writes via a sibling temporary file and a rename, so readers see either
/// the old file or the complete new one.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

pub fn digest_file(role: &str, path: &Path) -> Result<InputDigest> {
    let bytes = fs::read(path)?;
    Ok(InputDigest {
        role: role.to_string(),
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseTable {
    pub filter: String,
    pub rows: Vec<ResponseRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSeries {
    pub name: String,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandsResult {
    pub rate_hz: f64,
    pub start_time_ms: f64,
    pub unfiltered: Vec<f64>,
    pub bands: Vec<BandSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinRateResult {
    pub max_signal_freq_hz: f64,
    pub domain: crate::sampling::AnalysisDomain,
    pub rate_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Results {
    FrequencyResponse { tables: Vec<ResponseTable> },
    Bands(BandsResult),
    Pvaf(PvafReport),
    MainSequence(Box<MainSeqReport>),
    SamplingSweep(SamplingSweepResult),
    MinRate(MinRateResult),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub version: String,
    pub inputs: Vec<InputDigest>,
    pub params: BTreeMap<String, serde_json::Value>,
    pub results: Results,
}

impl AnalysisReport {
    pub fn new(inputs: Vec<InputDigest>, params: BTreeMap<String, serde_json::Value>, results: Results) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs,
            params,
            results,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    /// Plot-ready CSV view of the results.
    pub fn to_csv(&self) -> Result<String> {
        results_csv(&self.results)
    }
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn results_csv(results: &Results) -> Result<String> {
    match results {
        Results::FrequencyResponse { tables } => csv_string(
            &["filter", "freq_hz", "magnitude_single_pass", "magnitude_zero_phase"],
            tables.iter().flat_map(|t| {
                t.rows.iter().map(move |r| {
                    vec![
                        t.filter.clone(),
                        num(r.freq_hz),
                        num(r.magnitude_single_pass),
                        num(r.magnitude_zero_phase),
                    ]
                })
            }),
        ),
        Results::Bands(b) => {
            let mut header = vec!["t_ms".to_string(), "unfiltered".to_string()];
            header.extend(b.bands.iter().map(|s| s.name.clone()));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            csv_string(
                &header,
                (0..b.unfiltered.len()).map(|i| {
                    let mut row = vec![num(b.start_time_ms + 1000.0 * i as f64 / b.rate_hz), num(b.unfiltered[i])];
                    row.extend(b.bands.iter().map(|s| num(s.samples[i])));
                    row
                }),
            )
        }
        Results::Pvaf(p) => {
            let mut header = vec!["row".to_string()];
            header.extend(p.table.band_names.iter().cloned());
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let per_row = p.table.per_event_pvaf.iter().enumerate().map(|(i, r)| {
                std::iter::once(i.to_string()).chain(r.iter().map(|v| num(*v))).collect()
            });
            let summary = [("median", &p.table.median_pvaf), ("mad", &p.table.mad_pvaf)]
                .into_iter()
                .map(|(name, v)| std::iter::once(name.to_string()).chain(v.iter().map(|x| num(*x))).collect());
            csv_string(&header, per_row.chain(summary))
        }
        Results::MainSequence(m) => csv_string(
            &["condition", "model", "coefficient", "estimate", "ci_low", "ci_high", "adj_r2", "n_points"],
            m.conditions.iter().flat_map(|c| {
                [&c.power_law, &c.exponential].into_iter().flat_map(move |f| {
                    (0..2).map(move |k| {
                        vec![
                            c.label.clone(),
                            f.model.to_string(),
                            f.model.coeff_names()[k].to_string(),
                            num(f.coeffs[k]),
                            num(f.ci95[k][0]),
                            num(f.ci95[k][1]),
                            num(f.adj_r2),
                            f.n_points.to_string(),
                        ]
                    })
                })
            }),
        ),
        Results::SamplingSweep(s) => csv_string(
            &["n_per_period", "min", "q25", "median", "q75", "max"],
            s.rows.iter().map(|r| {
                let q = r.summary;
                vec![num(r.samples_per_period), num(q.min), num(q.q25), num(q.median), num(q.q75), num(q.max)]
            }),
        ),
        Results::MinRate(m) => csv_string(
            &["max_signal_freq_hz", "domain", "rate_hz"],
            [vec![
                num(m.max_signal_freq_hz),
                format!("{:?}", m.domain).to_lowercase(),
                num(m.rate_hz),
            ]],
        ),
    }
}

/// `t_ms,x_deg,y_deg`; masked samples are written as empty cells.
pub fn recording_csv(x: &TimeSeries, y: Option<&TimeSeries>) -> Result<String> {
    if let Some(y) = y {
        if y.len() != x.len() {
            return Err(Error::LengthMismatch { expected: x.len(), got: y.len() });
        }
    }
    let cell = |ts: &TimeSeries, i: usize| {
        if ts.valid_mask()[i] {
            num(ts.samples()[i])
        } else {
            String::new()
        }
    };
    csv_string(
        &RECORDING_COLUMNS,
        (0..x.len()).map(|i| vec![num(x.time_ms(i)), cell(x, i), y.map(|y| cell(y, i)).unwrap_or_else(|| "0".into())]),
    )
}

pub fn events_csv(events: &[SaccadeEvent], rate_hz: f64, start_time_ms: f64) -> Result<String> {
    let ms = |i: usize| num(start_time_ms + 1000.0 * i as f64 / rate_hz);
    csv_string(
        &EVENT_COLUMNS,
        events
            .iter()
            .map(|e| vec![ms(e.onset_index), ms(e.offset_index), e.label.to_string()]),
    )
}
