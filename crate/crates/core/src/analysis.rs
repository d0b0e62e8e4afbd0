//! Batch pipelines over annotated recordings: per-event PVAF band
//! attribution, and the main-sequence study across low-pass conditions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{apply_bank, apply_zero_phase, design_bank, design_filter, BandSpec, FilterSpec, DEFAULT_ORDER};
use crate::kinematics::{extract_snippet, saccade_features_with, SG_POLY_ORDER, SG_WINDOW, SNIPPET_PAD_MS};
use crate::series::{SaccadeEvent, TimeSeries};
use crate::stats::{
    aggregate_pvaf, ci_overlap_report, difference_curve, fit_exponential, fit_power_law, incremental_pvaf,
    paired_t_test, ConditionOverlap, DifferenceCurve, MainSequenceFit, PvafTable, TTestResult,
};

/// An event left out of an analysis, with the error that excluded it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedEvent {
    pub event_index: usize,
    pub onset_index: usize,
    pub offset_index: usize,
    pub code: String,
    pub reason: String,
}

impl SkippedEvent {
    fn new(event_index: usize, ev: &SaccadeEvent, err: &Error) -> Self {
        Self {
            event_index,
            onset_index: ev.onset_index,
            offset_index: ev.offset_index,
            code: err.code().to_string(),
            reason: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvafConfig {
    pub bands: Vec<BandSpec>,
    pub order: usize,
    pub pad_ms: f64,
}

impl Default for PvafConfig {
    fn default() -> Self {
        Self {
            bands: crate::filter::default_bands(),
            order: DEFAULT_ORDER,
            pad_ms: SNIPPET_PAD_MS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvafReport {
    pub table: PvafTable,
    /// Indices (into the analysed rows) whose regression was rank deficient.
    pub rank_deficient_rows: Vec<usize>,
    pub skipped: Vec<SkippedEvent>,
    /// Set when no events were given and the whole recording is one row.
    pub whole_recording: bool,
}

/// PVAF per event snippet, aggregated by band. Without events the whole
/// recording is analysed as a single window.
pub fn pvaf_batch(ts: &TimeSeries, events: Option<&[SaccadeEvent]>, cfg: &PvafConfig) -> Result<PvafReport> {
    if cfg.bands.is_empty() {
        return Err(Error::EmptyInput("no frequency bands"));
    }
    let bank = design_bank(&cfg.bands, cfg.order, ts.rate_hz())?;
    let names: Vec<String> = cfg.bands.iter().map(|b| b.name.clone()).collect();
    let row_for = |window: &TimeSeries| -> Result<(Vec<f64>, bool)> {
        let parts = apply_bank(&bank, window)?;
        let out = incremental_pvaf(window, &parts)?;
        Ok((out.pvaf, out.rank_deficient))
    };

    let mut rows = Vec::new();
    let mut rank_deficient_rows = Vec::new();
    let mut skipped = Vec::new();
    match events {
        None => {
            let (row, rd) = row_for(ts)?;
            if rd {
                rank_deficient_rows.push(0);
            }
            rows.push(row);
        }
        Some(events) => {
            for (i, ev) in events.iter().enumerate() {
                let result = extract_snippet(ts, ev, cfg.pad_ms).and_then(|s| row_for(&s.series));
                match result {
                    Ok((row, rd)) => {
                        if rd {
                            rank_deficient_rows.push(rows.len());
                        }
                        rows.push(row);
                    }
                    Err(e) if e.is_numerical() || is_event_local(&e) => skipped.push(SkippedEvent::new(i, ev, &e)),
                    Err(e) => return Err(e),
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("every event was skipped"));
    }
    Ok(PvafReport {
        table: aggregate_pvaf(&names, rows)?,
        rank_deficient_rows,
        skipped,
        whole_recording: events.is_none(),
    })
}

/// Errors that disqualify one event without invalidating the run.
fn is_event_local(e: &Error) -> bool {
    matches!(
        e,
        Error::SnippetOutOfBounds { .. }
            | Error::ContainsGaps { .. }
            | Error::DegenerateEvent { .. }
            | Error::OutOfBounds { .. }
            | Error::SeriesTooShort { .. }
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub label: String,
    /// Low-pass cutoff; `None` for the unfiltered condition.
    pub cutoff_hz: Option<f64>,
}

impl Condition {
    pub fn unfiltered() -> Self {
        Self {
            label: "unfiltered".into(),
            cutoff_hz: None,
        }
    }

    pub fn lowpass(cutoff_hz: f64) -> Self {
        Self {
            label: format!("lowpass-{cutoff_hz}"),
            cutoff_hz: Some(cutoff_hz),
        }
    }
}

pub const DEFAULT_CUTOFFS: [f64; 6] = [25.0, 50.0, 75.0, 100.0, 125.0, 150.0];

/// Unfiltered followed by one low-pass condition per cutoff.
pub fn conditions_for(cutoffs: &[f64]) -> Vec<Condition> {
    std::iter::once(Condition::unfiltered())
        .chain(cutoffs.iter().map(|&c| Condition::lowpass(c)))
        .collect()
}

/// Amplitude grid `lo, lo + step, …, hi` (inclusive up to rounding).
pub fn amplitude_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && step > 0.0) {
        return Err(Error::InvalidArgument(format!("bad amplitude grid {lo}..{hi} step {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + step * i as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainSeqConfig {
    pub conditions: Vec<Condition>,
    pub order: usize,
    pub pad_ms: f64,
    pub sg_window: usize,
    pub sg_poly_order: usize,
    pub grid: Vec<f64>,
}

impl Default for MainSeqConfig {
    fn default() -> Self {
        Self {
            conditions: conditions_for(&DEFAULT_CUTOFFS),
            order: DEFAULT_ORDER,
            pad_ms: SNIPPET_PAD_MS,
            sg_window: SG_WINDOW,
            sg_poly_order: SG_POLY_ORDER,
            grid: amplitude_grid(0.5, 25.0, 0.1).expect("static grid"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub label: String,
    pub cutoff_hz: Option<f64>,
    /// `(amplitude_deg, peak_velocity_dps)` per analysed event.
    pub points: Vec<(f64, f64)>,
    pub power_law: MainSequenceFit,
    pub exponential: MainSequenceFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainSeqReport {
    pub conditions: Vec<ConditionResult>,
    /// Paired over conditions: power-law adjusted R² vs exponential.
    pub model_comparison: Option<TTestResult>,
    /// Reference (first condition) minus each other condition, power law.
    pub difference_curves: Vec<DifferenceCurve>,
    pub ci_overlap_power_law: Vec<ConditionOverlap>,
    pub ci_overlap_exponential: Vec<ConditionOverlap>,
    pub skipped: Vec<SkippedEvent>,
}

/// Main-sequence features for every event under every condition, fitted
/// with both models. Each snippet (event ± pad) is filtered on its own so
/// that conditions differ only in the low-pass applied.
pub fn main_sequence_study(ts: &TimeSeries, events: &[SaccadeEvent], cfg: &MainSeqConfig) -> Result<MainSeqReport> {
    if cfg.conditions.is_empty() {
        return Err(Error::EmptyInput("no conditions"));
    }
    let filters = cfg
        .conditions
        .iter()
        .map(|c| {
            c.cutoff_hz
                .map(|hz| design_filter(&FilterSpec::lowpass(cfg.order, hz, ts.rate_hz())))
                .transpose()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut points: Vec<Vec<(f64, f64)>> = vec![Vec::new(); cfg.conditions.len()];
    let mut skipped = Vec::new();
    for (i, ev) in events.iter().enumerate() {
        let per_event = extract_snippet(ts, ev, cfg.pad_ms).and_then(|snip| {
            filters
                .iter()
                .map(|f| {
                    let filtered = match f {
                        Some(stages) => apply_zero_phase(stages, &snip.series)?,
                        None => snip.series.clone(),
                    };
                    let feat = saccade_features_with(&filtered, &snip.event, cfg.sg_window, cfg.sg_poly_order)?;
                    Ok((feat.amplitude_deg, feat.peak_velocity_dps))
                })
                .collect::<Result<Vec<_>>>()
        });
        match per_event {
            Ok(row) if row.iter().all(|&(a, v)| a > 0.0 && v > 0.0) => {
                row.into_iter().zip(points.iter_mut()).for_each(|(p, col)| col.push(p));
            }
            Ok(_) => skipped.push(SkippedEvent::new(i, ev, &Error::NonPositiveData)),
            Err(e) if is_event_local(&e) => skipped.push(SkippedEvent::new(i, ev, &e)),
            Err(e) => return Err(e),
        }
    }

    let mut results = Vec::with_capacity(cfg.conditions.len());
    for (cond, pts) in cfg.conditions.iter().zip(points) {
        let power_law = fit_power_law(&pts)?.with_label(&cond.label);
        let exponential = fit_exponential(&pts)?.with_label(&cond.label);
        results.push(ConditionResult {
            label: cond.label.clone(),
            cutoff_hz: cond.cutoff_hz,
            points: pts,
            power_law,
            exponential,
        });
    }

    let model_comparison = if results.len() >= 2 {
        let pl: Vec<f64> = results.iter().map(|r| r.power_law.adj_r2).collect();
        let ex: Vec<f64> = results.iter().map(|r| r.exponential.adj_r2).collect();
        match paired_t_test(&pl, &ex) {
            Ok(t) => Some(t),
            Err(Error::ZeroVariance) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    let reference = &results[0];
    let others = &results[1..];
    let difference_curves = others
        .iter()
        .map(|r| difference_curve(&reference.power_law, &r.power_law, &cfg.grid))
        .collect::<Result<Vec<_>>>()?;
    let pl_fits: Vec<MainSequenceFit> = others.iter().map(|r| r.power_law.clone()).collect();
    let ex_fits: Vec<MainSequenceFit> = others.iter().map(|r| r.exponential.clone()).collect();
    Ok(MainSeqReport {
        ci_overlap_power_law: ci_overlap_report(&reference.power_law, &pl_fits)?,
        ci_overlap_exponential: ci_overlap_report(&reference.exponential, &ex_fits)?,
        conditions: results,
        model_comparison,
        difference_curves,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::default_bands;
    use crate::series::EventLabel;
    use crate::stats::Overlap;
    use crate::synth::{main_sequence_corpus, two_tone, CorpusSpec};

    #[test]
    fn two_tone_whole_recording() {
        let ts = two_tone(1000.0, 2000.0).unwrap();
        let r = pvaf_batch(&ts, None, &PvafConfig::default()).unwrap();
        let med = &r.table.median_pvaf;
        assert!(r.whole_recording);
        assert!((med[0] - 99.01).abs() < 0.2, "{med:?}");
        assert!((med[4] - 0.99).abs() < 0.2, "{med:?}");
        assert!(med.iter().sum::<f64>() <= 100.0 + 1e-6);
    }

    #[test]
    fn pvaf_skips_edge_events() {
        let ts = two_tone(1000.0, 2000.0).unwrap();
        let events = [
            SaccadeEvent::new(50, 80, EventLabel::Saccade).unwrap(),
            SaccadeEvent::new(900, 950, EventLabel::Saccade).unwrap(),
        ];
        let r = pvaf_batch(&ts, Some(&events), &PvafConfig::default()).unwrap();
        assert_eq!(r.table.per_event_pvaf.len(), 1);
        assert_eq!(r.skipped.len(), 1);
        assert_eq!(r.skipped[0].event_index, 0);
        assert_eq!(r.skipped[0].code, "snippet_out_of_bounds");
        assert_eq!(r.table.band_names, default_bands().iter().map(|b| b.name.clone()).collect::<Vec<_>>());
        assert!(matches!(
            pvaf_batch(&ts, Some(&events[..1]), &PvafConfig::default()),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn grid_and_conditions() {
        let g = amplitude_grid(0.5, 25.0, 0.1).unwrap();
        assert_eq!(g.len(), 246);
        assert!((g[245] - 25.0).abs() < 1e-9);
        let c = conditions_for(&DEFAULT_CUTOFFS);
        assert_eq!(c.len(), 7);
        assert_eq!(c[0].label, "unfiltered");
        assert_eq!(c[3].label, "lowpass-75");
    }

    #[test]
    fn identical_conditions_are_not_distinct() {
        let rec = main_sequence_corpus(&CorpusSpec {
            n_saccades: 60,
            ..CorpusSpec::default()
        })
        .unwrap();
        // Every condition unfiltered: fits coincide, so all CIs contain the
        // reference estimates and all differences vanish.
        let cfg = MainSeqConfig {
            conditions: vec![Condition::unfiltered(); 3],
            ..MainSeqConfig::default()
        };
        let r = main_sequence_study(&rec.series, &rec.events, &cfg).unwrap();
        assert!(r.ci_overlap_power_law.iter().all(|c| c.all_not_distinct()));
        assert!(r.ci_overlap_exponential.iter().all(|c| c.all_not_distinct()));
        assert!(r.difference_curves.iter().all(|d| d.diff.iter().all(|&v| v == 0.0)));
        assert!(r.model_comparison.is_none());
    }

    #[test]
    fn heavy_lowpass_depresses_small_saccades() {
        let rec = main_sequence_corpus(&CorpusSpec {
            n_saccades: 120,
            ..CorpusSpec::default()
        })
        .unwrap();
        let cfg = MainSeqConfig {
            conditions: conditions_for(&[25.0, 150.0]),
            ..MainSeqConfig::default()
        };
        let r = main_sequence_study(&rec.series, &rec.events, &cfg).unwrap();
        assert_eq!(r.conditions.len(), 3);
        assert_eq!(r.conditions[0].points.len() + r.skipped.len(), 120);
        let lp25 = &r.difference_curves[0];
        assert!(lp25.diff[0] > 0.0);
        assert_eq!(r.ci_overlap_power_law[0].coefficients[0].flag, Overlap::Distinct);
        assert!(r.model_comparison.is_some());
    }
}
