//! Command-line surface. [`run_command`] parses argv, runs one analysis and
//! returns the process exit status (0 ok, 2 input error, 3 numerical).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::analysis::{
    amplitude_grid, conditions_for, main_sequence_study, pvaf_batch, MainSeqConfig, PvafConfig, DEFAULT_CUTOFFS,
};
use crate::error::{Error, Result, EXIT_INPUT};
use crate::filter::{
    apply_bank, default_bands, design_bank, design_filter, response_table, BandSpec, FilterSpec, DEFAULT_ORDER,
};
use crate::io::{
    digest_file, events_csv, parse_events, parse_recording, recording_csv, write_atomic, AnalysisReport, BandSeries,
    BandsResult, Channel, InputDigest, MinRateResult, ResponseTable, Results,
};
use crate::kinematics::{detect_saccades, extract_snippet, velocity, SG_POLY_ORDER, SG_WINDOW, SNIPPET_PAD_MS};
use crate::sampling::{min_sampling_rate, sweep_sampling, AmplitudeEstimator, AnalysisDomain, DEFAULT_TRIALS};
use crate::series::{SaccadeEvent, TimeSeries};
use crate::synth::{main_sequence_corpus, two_tone, CorpusSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "signoise", version, about = "Frequency-band signal/noise analysis for eye-movement recordings")]
pub struct Cli {
    /// Sampling rate of input recordings (Hz).
    #[arg(long, global = true, default_value_t = 1000.0)]
    pub rate: f64,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Comma-separated bands, e.g. "0-25,26-50" (a zero low edge is low-pass).
    #[arg(long, global = true, value_delimiter = ',')]
    pub bands: Option<Vec<String>>,
    /// Comma-separated low-pass cutoffs (Hz).
    #[arg(long, global = true, value_delimiter = ',')]
    pub cutoffs: Option<Vec<f64>>,
    /// Report path; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct InputArgs {
    /// Recording CSV with columns t_ms,x_deg,y_deg.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "x")]
    pub channel: String,
    /// Events CSV with columns onset_ms,offset_ms,label.
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Find events with the velocity-threshold detector instead.
    #[arg(long, conflicts_with = "events")]
    pub detect: bool,
    #[arg(long, default_value_t = 30.0)]
    pub threshold_dps: f64,
    #[arg(long, default_value_t = 5.0)]
    pub min_duration_ms: f64,
    #[arg(long, default_value_t = SNIPPET_PAD_MS)]
    pub pad_ms: f64,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ResponseKind {
    Lowpass,
    Bands,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Mainseq,
    TwoTone,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Magnitude response tables for low-pass or band filters.
    FreqResponse {
        #[arg(long, value_enum, default_value_t = ResponseKind::Lowpass)]
        kind: ResponseKind,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        #[arg(long, default_value_t = 1.0)]
        freq_step: f64,
    },
    /// Split a recording (or one event snippet) into frequency bands.
    Bands {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "x")]
        channel: String,
        #[arg(long, requires = "event")]
        events: Option<PathBuf>,
        /// Index of the event whose padded snippet is decomposed.
        #[arg(long, requires = "events")]
        event: Option<usize>,
        #[arg(long, default_value_t = SNIPPET_PAD_MS)]
        pad_ms: f64,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
    },
    /// Per-event PVAF by band, with median and MAD.
    Pvaf {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Main-sequence fits across low-pass conditions.
    Mainseq {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0.5)]
        grid_min: f64,
        #[arg(long, default_value_t = 25.0)]
        grid_max: f64,
        #[arg(long, default_value_t = 0.1)]
        grid_step: f64,
    },
    /// Amplitude estimates of a unit sine vs samples per period.
    SimulateSampling {
        #[arg(long, default_value_t = 1.0)]
        freq: f64,
        #[arg(long, value_delimiter = ',', default_value = "2,3,5,10,20")]
        n_per_period: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        /// peak-above-mean or half-p2p.
        #[arg(long, default_value = "peak-above-mean")]
        estimator: String,
    },
    /// Minimum sampling rate under the 2x (frequency) or 10x (time) rule.
    MinRate {
        #[arg(long)]
        freq: f64,
        #[arg(long, default_value = "time")]
        domain: String,
    },
    /// Write a synthetic recording (and its events) as CSV.
    Synth {
        #[arg(long, value_enum, default_value_t = SynthKind::Mainseq)]
        kind: SynthKind,
        #[arg(long, default_value_t = 500)]
        n_saccades: usize,
        #[arg(long, default_value_t = 2000.0)]
        duration_ms: f64,
        #[arg(long)]
        events_out: Option<PathBuf>,
    },
}

/// Parses `argv` (program name first) and runs the command, writing
/// results to stdout and a JSON error line to stderr on failure.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_command_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_command_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    return 0;
                }
                _ => EXIT_INPUT,
            };
            let _ = writeln!(err, "{}", error_line("usage", &e.to_string().trim_end().replace('\n', " ")));
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{}", error_line(e.code(), &e.to_string()));
            e.exit_code()
        }
    }
}

fn error_line(code: &str, message: &str) -> String {
    json!({ "error": { "code": code, "message": message } }).to_string()
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let mut params: BTreeMap<String, Value> = BTreeMap::new();
    params.insert("command".into(), json!(command_name(&cli.command)));
    let (inputs, results) = match &cli.command {
        Command::FreqResponse { kind, order, freq_step } => {
            params.insert("order".into(), json!(order));
            params.insert("freq_step_hz".into(), json!(freq_step));
            params.insert("rate_hz".into(), json!(cli.rate));
            let specs: Vec<(String, FilterSpec)> = match kind {
                ResponseKind::Lowpass => {
                    let cutoffs = cli.cutoffs.clone().unwrap_or_else(|| DEFAULT_CUTOFFS.to_vec());
                    params.insert("cutoffs_hz".into(), json!(cutoffs));
                    cutoffs
                        .iter()
                        .map(|&c| {
                            let s = FilterSpec::lowpass(*order, c, cli.rate);
                            (s.label(), s)
                        })
                        .collect()
                }
                ResponseKind::Bands => {
                    let bands = bands_from(cli)?;
                    params.insert("bands".into(), json!(band_names(&bands)));
                    bands.iter().map(|b| (b.name.clone(), b.filter_spec(*order, cli.rate))).collect()
                }
            };
            if !(*freq_step > 0.0) {
                return Err(Error::InvalidArgument(format!("freq step must be positive, got {freq_step}")));
            }
            let nyquist = cli.rate / 2.0;
            let n = (nyquist / freq_step + 1e-9).floor() as usize;
            let freqs: Vec<f64> = (0..=n).map(|i| i as f64 * freq_step).collect();
            let tables = specs
                .into_iter()
                .map(|(name, spec)| {
                    let stages = design_filter(&spec)?;
                    Ok(ResponseTable {
                        filter: name,
                        rows: response_table(&stages, &freqs)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (vec![], Results::FrequencyResponse { tables })
        }
        Command::Bands {
            input,
            channel,
            events,
            event,
            pad_ms,
            order,
        } => {
            let ts = parse_recording(input, cli.rate, channel.parse::<Channel>()?)?;
            let mut inputs = vec![digest_file("recording", input)?];
            params.insert("channel".into(), json!(channel));
            params.insert("rate_hz".into(), json!(cli.rate));
            params.insert("order".into(), json!(order));
            let window = match (events, event) {
                (Some(path), Some(k)) => {
                    inputs.push(digest_file("events", path)?);
                    let evs = parse_events(path, cli.rate, ts.start_time_ms())?;
                    let ev = evs.get(*k).ok_or_else(|| {
                        Error::InvalidArgument(format!("event index {k} out of range ({} events)", evs.len()))
                    })?;
                    params.insert("event_index".into(), json!(k));
                    params.insert("pad_ms".into(), json!(pad_ms));
                    extract_snippet(&ts, ev, *pad_ms)?.series
                }
                _ => ts,
            };
            let bands = bands_from(cli)?;
            params.insert("bands".into(), json!(band_names(&bands)));
            let parts = apply_bank(&design_bank(&bands, *order, cli.rate)?, &window)?;
            (
                inputs,
                Results::Bands(BandsResult {
                    rate_hz: window.rate_hz(),
                    start_time_ms: window.start_time_ms(),
                    unfiltered: window.samples().to_vec(),
                    bands: bands
                        .iter()
                        .zip(parts)
                        .map(|(b, p)| BandSeries {
                            name: b.name.clone(),
                            samples: p.samples().to_vec(),
                        })
                        .collect(),
                }),
            )
        }
        Command::Pvaf { input } => {
            let (ts, events, inputs) = load_input(cli, input, &mut params)?;
            let bands = bands_from(cli)?;
            params.insert("bands".into(), json!(band_names(&bands)));
            let cfg = PvafConfig {
                bands,
                order: input.order,
                pad_ms: input.pad_ms,
            };
            let report = pvaf_batch(&ts, events.as_deref(), &cfg)?;
            (inputs, Results::Pvaf(report))
        }
        Command::Mainseq {
            input,
            grid_min,
            grid_max,
            grid_step,
        } => {
            let (ts, events, inputs) = load_input(cli, input, &mut params)?;
            let events = events.ok_or(Error::InvalidArgument("mainseq needs --events or --detect".into()))?;
            let cutoffs = cli.cutoffs.clone().unwrap_or_else(|| DEFAULT_CUTOFFS.to_vec());
            params.insert("cutoffs_hz".into(), json!(cutoffs));
            params.insert("sg_window".into(), json!(SG_WINDOW));
            params.insert("sg_poly_order".into(), json!(SG_POLY_ORDER));
            params.insert("grid".into(), json!([grid_min, grid_max, grid_step]));
            let cfg = MainSeqConfig {
                conditions: conditions_for(&cutoffs),
                order: input.order,
                pad_ms: input.pad_ms,
                grid: amplitude_grid(*grid_min, *grid_max, *grid_step)?,
                ..MainSeqConfig::default()
            };
            let report = main_sequence_study(&ts, &events, &cfg)?;
            (inputs, Results::MainSequence(Box::new(report)))
        }
        Command::SimulateSampling {
            freq,
            n_per_period,
            trials,
            estimator,
        } => {
            let est: AmplitudeEstimator = estimator.parse()?;
            params.insert("freq_hz".into(), json!(freq));
            params.insert("n_per_period".into(), json!(n_per_period));
            params.insert("trials".into(), json!(trials));
            params.insert("seed".into(), json!(cli.seed));
            params.insert("estimator".into(), json!(est));
            let r = sweep_sampling(*freq, n_per_period, *trials, cli.seed, est)?;
            (vec![], Results::SamplingSweep(r))
        }
        Command::MinRate { freq, domain } => {
            let domain: AnalysisDomain = domain.parse()?;
            let rate = min_sampling_rate(*freq, domain)?;
            writeln!(out, "{rate}")?;
            if cli.out.is_none() {
                return Ok(());
            }
            params.insert("freq_hz".into(), json!(freq));
            params.insert("domain".into(), json!(domain));
            (
                vec![],
                Results::MinRate(MinRateResult {
                    max_signal_freq_hz: *freq,
                    domain,
                    rate_hz: rate,
                }),
            )
        }
        Command::Synth {
            kind,
            n_saccades,
            duration_ms,
            events_out,
        } => return synth(cli, *kind, *n_saccades, *duration_ms, events_out.as_deref(), out),
    };
    let report = AnalysisReport::new(inputs, params, results);
    let text = match cli.format {
        Format::Json => report.to_json()?,
        Format::Csv => report.to_csv()?,
    };
    match &cli.out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::FreqResponse { .. } => "freq-response",
        Command::Bands { .. } => "bands",
        Command::Pvaf { .. } => "pvaf",
        Command::Mainseq { .. } => "mainseq",
        Command::SimulateSampling { .. } => "simulate-sampling",
        Command::MinRate { .. } => "min-rate",
        Command::Synth { .. } => "synth",
    }
}

fn bands_from(cli: &Cli) -> Result<Vec<BandSpec>> {
    match &cli.bands {
        Some(list) => list.iter().map(|s| s.parse()).collect(),
        None => Ok(default_bands()),
    }
}

fn band_names(bands: &[BandSpec]) -> Vec<String> {
    bands.iter().map(|b| b.name.clone()).collect()
}

type LoadedInput = (TimeSeries, Option<Vec<SaccadeEvent>>, Vec<InputDigest>);

fn load_input(cli: &Cli, input: &InputArgs, params: &mut BTreeMap<String, Value>) -> Result<LoadedInput> {
    let ts = parse_recording(&input.input, cli.rate, input.channel.parse::<Channel>()?)?;
    let mut inputs = vec![digest_file("recording", &input.input)?];
    params.insert("channel".into(), json!(input.channel));
    params.insert("rate_hz".into(), json!(cli.rate));
    params.insert("order".into(), json!(input.order));
    params.insert("pad_ms".into(), json!(input.pad_ms));
    let events = if let Some(path) = &input.events {
        inputs.push(digest_file("events", path)?);
        params.insert("event_source".into(), json!("file"));
        Some(parse_events(path, cli.rate, ts.start_time_ms())?)
    } else if input.detect {
        params.insert("event_source".into(), json!("velocity-threshold detector (non-canonical)"));
        params.insert("threshold_dps".into(), json!(input.threshold_dps));
        params.insert("min_duration_ms".into(), json!(input.min_duration_ms));
        let v = velocity(&ts, SG_WINDOW, SG_POLY_ORDER)?;
        Some(detect_saccades(&v, input.threshold_dps, input.min_duration_ms))
    } else {
        params.insert("event_source".into(), json!("whole recording"));
        None
    };
    Ok((ts, events, inputs))
}

fn synth(
    cli: &Cli,
    kind: SynthKind,
    n_saccades: usize,
    duration_ms: f64,
    events_out: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let (ts, events) = match kind {
        SynthKind::Mainseq => {
            let rec = main_sequence_corpus(&CorpusSpec {
                n_saccades,
                rate_hz: cli.rate,
                seed: cli.seed,
                ..CorpusSpec::default()
            })?;
            (rec.series, rec.events)
        }
        SynthKind::TwoTone => (two_tone(cli.rate, duration_ms)?, Vec::new()),
    };
    let text = recording_csv(&ts, None)?;
    match &cli.out {
        Some(p) => write_atomic(p, text.as_bytes())?,
        None => out.write_all(text.as_bytes())?,
    }
    if let Some(p) = events_out {
        write_atomic(p, events_csv(&events, ts.rate_hz(), ts.start_time_ms())?.as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("signoise").chain(args.iter().copied());
        let code = run_command_with(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn min_rate_prints_rule() {
        assert_eq!(run(&["min-rate", "--freq", "75", "--domain", "time"]).1, "750\n");
        assert_eq!(run(&["min-rate", "--freq", "150", "--domain", "frequency"]).1, "300\n");
    }

    #[test]
    fn errors_carry_codes() {
        let (code, _, err) = run(&["min-rate", "--freq", "0"]);
        assert_eq!(code, 2);
        let v: Value = serde_json::from_str(err.trim()).unwrap();
        assert_eq!(v["error"]["code"], "non_positive_frequency");

        let (code, _, err) = run(&["no-such-command"]);
        assert_eq!(code, 2);
        assert!(err.contains("\"usage\""));

        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("mainseq"));
    }

    #[test]
    fn sweep_csv_columns() {
        let (code, out, _) = run(&["simulate-sampling", "--trials", "20", "--format", "csv", "--n-per-period", "4,8"]);
        assert_eq!(code, 0);
        let mut lines = out.lines();
        assert_eq!(lines.next().unwrap(), "n_per_period,min,q25,median,q75,max");
        assert_eq!(out.lines().count(), 3);
    }

    #[test]
    fn freq_response_json() {
        let (code, out, _) = run(&["freq-response", "--cutoffs", "25", "--freq-step", "25"]);
        assert_eq!(code, 0);
        let r = AnalysisReport::from_json(&out).unwrap();
        let Results::FrequencyResponse { tables } = r.results else {
            panic!("wrong result kind")
        };
        assert_eq!(tables[0].filter, "lowpass-25");
        assert_eq!(tables[0].rows.len(), 21);
        assert!((tables[0].rows[1].magnitude_zero_phase - 0.5).abs() < 1e-3);
    }
}
