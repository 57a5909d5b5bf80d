//! Beat and downbeat F-measure, and the timing/work benchmark.

use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::signal::ActivationStream;
use crate::space::Work;
use crate::tracker::{Engine, Tracker, TrackerConfig};

/// Default matching window, seconds.
pub const DEFAULT_TOLERANCE: f64 = 0.07;

// Absorbs representation error of times computed as index * delta.
const MATCH_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreReport {
    pub f_measure: f64,
    pub precision: f64,
    pub recall: f64,
    pub matched: usize,
    pub estimated: usize,
    pub reference: usize,
    pub tolerance: f64,
}

impl ScoreReport {
    pub fn to_text(&self, label: &str) -> String {
        format!(
            "{label}.f_measure={:.6}\n{label}.precision={:.6}\n{label}.recall={:.6}\n\
             {label}.matched={}\n{label}.estimated={}\n{label}.reference={}\n{label}.tolerance={}\n",
            self.f_measure,
            self.precision,
            self.recall,
            self.matched,
            self.estimated,
            self.reference,
            self.tolerance
        )
    }

    pub const CSV_HEADER: &'static str = "label,f_measure,precision,recall,matched,estimated,reference,tolerance";

    pub fn to_csv_row(&self, label: &str) -> String {
        format!(
            "{label},{:.6},{:.6},{:.6},{},{},{},{}",
            self.f_measure,
            self.precision,
            self.recall,
            self.matched,
            self.estimated,
            self.reference,
            self.tolerance
        )
    }
}

fn check_sorted(times: &[f64], what: &str) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::param(format!("{what} times must be finite")));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param(format!("{what} times are not sorted ascending")));
    }
    Ok(())
}

/// F-measure with greedy one-to-one matching in time order: each estimate
/// takes the earliest unmatched reference within `tolerance` seconds.
pub fn f_measure(estimated: &[f64], reference: &[f64], tolerance: f64) -> Result<ScoreReport> {
    if !(tolerance >= 0.0 && tolerance.is_finite()) {
        return Err(Error::param(format!("tolerance must be non-negative, got {tolerance}")));
    }
    check_sorted(estimated, "estimated")?;
    check_sorted(reference, "reference")?;

    let window = tolerance + MATCH_SLACK;
    let mut next = 0;
    let mut matched = 0;
    for &e in estimated {
        while next < reference.len() && reference[next] < e - window {
            next += 1;
        }
        if next < reference.len() && (reference[next] - e).abs() <= window {
            matched += 1;
            next += 1;
        }
    }

    let precision = if estimated.is_empty() { 0.0 } else { matched as f64 / estimated.len() as f64 };
    let recall = if reference.is_empty() { 0.0 } else { matched as f64 / reference.len() as f64 };
    let f = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(ScoreReport {
        f_measure: f,
        precision,
        recall,
        matched,
        estimated: estimated.len(),
        reference: reference.len(),
        tolerance,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StreamBench {
    pub frames: u64,
    pub duration: f64,
    /// Wall-clock seconds spent in inference.
    pub seconds: f64,
    pub beat_work: Work,
    pub bar_work: Work,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub engine: Engine,
    pub streams: Vec<StreamBench>,
    /// State counts of the beat and bar levels.
    pub beat_states: usize,
    pub bar_states: usize,
}

impl BenchReport {
    pub fn total_frames(&self) -> u64 {
        self.streams.iter().map(|s| s.frames).sum()
    }

    pub fn total_seconds(&self) -> f64 {
        self.streams.iter().map(|s| s.seconds).sum()
    }

    pub fn total_duration(&self) -> f64 {
        self.streams.iter().map(|s| s.duration).sum()
    }

    /// Inference seconds per 30 seconds of audio.
    pub fn mean_seconds_per_30s(&self) -> f64 {
        let d = self.total_duration();
        if d > 0.0 {
            self.total_seconds() * 30.0 / d
        } else {
            0.0
        }
    }

    pub fn total_work(&self) -> Work {
        let mut w = Work::default();
        for s in &self.streams {
            w.add(s.beat_work);
            w.add(s.bar_work);
        }
        w
    }

    pub fn beat_work(&self) -> Work {
        let mut w = Work::default();
        for s in &self.streams {
            w.add(s.beat_work);
        }
        w
    }

    fn per_frame(&self, v: u64) -> f64 {
        let n = self.total_frames();
        if n == 0 {
            0.0
        } else {
            v as f64 / n as f64
        }
    }

    /// Beat-level state probabilities written per frame.
    pub fn beat_touched_per_frame(&self) -> f64 {
        self.per_frame(self.beat_work().touched_states)
    }

    /// Beat plus bar level state probabilities written per frame.
    pub fn touched_per_frame(&self) -> f64 {
        self.per_frame(self.total_work().touched_states)
    }

    pub fn multiply_adds_per_frame(&self) -> f64 {
        self.per_frame(self.total_work().multiply_adds)
    }

    /// `key=value` lines. Timings are left out when `with_timing` is false so
    /// the report is reproducible byte for byte.
    pub fn to_text(&self, with_timing: bool) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "engine={}", self.engine.name());
        let _ = writeln!(out, "streams={}", self.streams.len());
        let _ = writeln!(out, "beat_states={}", self.beat_states);
        let _ = writeln!(out, "bar_states={}", self.bar_states);
        let _ = writeln!(out, "frames={}", self.total_frames());
        let _ = writeln!(out, "beat_touched_states_per_frame={:.3}", self.beat_touched_per_frame());
        let _ = writeln!(out, "touched_states_per_frame={:.3}", self.touched_per_frame());
        let _ = writeln!(out, "multiply_adds_per_frame={:.3}", self.multiply_adds_per_frame());
        if with_timing {
            let _ = writeln!(out, "total_seconds={:.6}", self.total_seconds());
            let _ = writeln!(out, "mean_seconds_per_30s={:.6}", self.mean_seconds_per_30s());
        }
        out
    }

    /// One CSV row per stream.
    pub fn to_csv(&self, with_timing: bool) -> String {
        let mut out = String::from("engine,stream,frames,duration,beat_touched_states,bar_touched_states,multiply_adds");
        if with_timing {
            out.push_str(",seconds");
        }
        out.push('\n');
        for (i, s) in self.streams.iter().enumerate() {
            let _ = write!(
                out,
                "{},{},{},{:.6},{},{},{}",
                self.engine.name(),
                i,
                s.frames,
                s.duration,
                s.beat_work.touched_states,
                s.bar_work.touched_states,
                s.beat_work.multiply_adds + s.bar_work.multiply_adds
            );
            if with_timing {
                let _ = write!(out, ",{:.6}", s.seconds);
            }
            out.push('\n');
        }
        out
    }
}

/// Runs a fresh tracker over each stream, one at a time, timing only the frame
/// loop.
pub fn bench_tracker(streams: &[ActivationStream], engine: Engine, config: &TrackerConfig) -> Result<BenchReport> {
    let config = config.with_engine(engine);
    if let Some(first) = streams.first() {
        if streams.iter().any(|s| (s.delta - first.delta).abs() > 1e-12) {
            return Err(Error::param("all benchmark streams must share one hop"));
        }
    }
    let probe = Tracker::new(config)?;
    let (beat_states, bar_states) = probe.state_counts();

    let mut results = Vec::with_capacity(streams.len());
    for stream in streams {
        let mut tracker = Tracker::new(config)?;
        let start = Instant::now();
        tracker.process_stream(stream)?;
        let seconds = start.elapsed().as_secs_f64();
        let (beat_work, bar_work) = tracker.work();
        results.push(StreamBench {
            frames: tracker.frames_processed(),
            duration: stream.duration(),
            seconds,
            beat_work,
            bar_work,
        });
    }
    Ok(BenchReport {
        engine,
        streams: results,
        beat_states,
        bar_states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synth_stream, SynthParams};

    #[test]
    fn perfect_match() {
        let t = [0.5, 1.0, 1.5, 2.0];
        let r = f_measure(&t, &t, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(r.f_measure, 1.0);
        assert_eq!(r.matched, 4);
    }

    #[test]
    fn empty_estimates_score_zero() {
        let r = f_measure(&[], &[1.0, 2.0], DEFAULT_TOLERANCE).unwrap();
        assert_eq!(r.f_measure, 0.0);
        assert_eq!(r.recall, 0.0);
        let r = f_measure(&[], &[], DEFAULT_TOLERANCE).unwrap();
        assert_eq!(r.f_measure, 0.0);
    }

    #[test]
    fn offsets_inside_window_all_match() {
        let reference: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let estimated: Vec<f64> = reference.iter().map(|t| t + 0.05).collect();
        assert_eq!(f_measure(&estimated, &reference, 0.07).unwrap().f_measure, 1.0);
        let late: Vec<f64> = reference.iter().map(|t| t + 0.08).collect();
        assert_eq!(f_measure(&late, &reference, 0.07).unwrap().f_measure, 0.0);
    }

    #[test]
    fn boundary_of_window_is_inclusive() {
        // 0.07 is not exactly representable; 0.52 - 0.45 lands a hair above it
        let r = f_measure(&[0.52], &[0.45], 0.07).unwrap();
        assert_eq!(r.matched, 1);
    }

    #[test]
    fn each_reference_matches_once() {
        let r = f_measure(&[1.0, 1.01, 1.02], &[1.0], 0.07).unwrap();
        assert_eq!(r.matched, 1);
        assert!((r.precision - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.recall, 1.0);
        assert!((r.f_measure - 0.5).abs() < 1e-12);
    }

    #[test]
    fn partial_scores() {
        // 2 of 3 estimates hit, 2 of 4 references found
        let r = f_measure(&[0.0, 1.0, 5.0], &[0.0, 1.0, 2.0, 3.0], 0.07).unwrap();
        assert_eq!(r.matched, 2);
        let (p, rc) = (2.0 / 3.0, 0.5);
        assert!((r.f_measure - 2.0 * p * rc / (p + rc)).abs() < 1e-12);
    }

    #[test]
    fn unsorted_input_is_rejected() {
        assert!(f_measure(&[1.0, 0.5], &[0.5, 1.0], 0.07).is_err());
        assert!(f_measure(&[0.5, 1.0], &[1.0, 0.5], 0.07).is_err());
        assert!(f_measure(&[0.5], &[0.5], -0.1).is_err());
    }

    #[test]
    fn bench_counts_steps_and_states() {
        let (stream, _) = synth_stream(&SynthParams::clean(120.0, 4, 30.0)).unwrap();
        let config = TrackerConfig::default();
        let one = bench_tracker(std::slice::from_ref(&stream), Engine::OneDim, &config).unwrap();
        assert_eq!(one.total_frames(), 1500);
        assert_eq!(one.beat_touched_per_frame(), 55.0);
        let two = bench_tracker(std::slice::from_ref(&stream), Engine::Baseline2d, &config).unwrap();
        assert_eq!(two.beat_touched_per_frame(), 1449.0);
        assert_eq!((two.beat_states, two.bar_states), (1449, 20));
        let ratio = one.multiply_adds_per_frame() / two.multiply_adds_per_frame();
        assert!(ratio <= 0.1, "multiply-add ratio {ratio}");
    }

    #[test]
    fn bench_of_nothing_is_empty() {
        let r = bench_tracker(&[], Engine::OneDim, &TrackerConfig::default()).unwrap();
        assert!(r.streams.is_empty());
        assert_eq!(r.total_frames(), 0);
        assert_eq!(r.mean_seconds_per_30s(), 0.0);
    }

    #[test]
    fn bench_rejects_mixed_hops() {
        let (a, _) = synth_stream(&SynthParams::clean(120.0, 4, 1.0)).unwrap();
        let mut p = SynthParams::clean(120.0, 4, 1.0);
        p.delta = 0.01;
        let (b, _) = synth_stream(&p).unwrap();
        assert!(bench_tracker(&[a, b], Engine::OneDim, &TrackerConfig::default()).is_err());
    }

    #[test]
    fn report_text_without_timing_is_stable() {
        let (stream, _) = synth_stream(&SynthParams::clean(90.0, 3, 5.0)).unwrap();
        let run = || {
            bench_tracker(std::slice::from_ref(&stream), Engine::OneDim, &TrackerConfig::default())
                .unwrap()
                .to_text(false)
        };
        assert_eq!(run(), run());
        assert!(run().contains("beat_touched_states_per_frame=55.000"));
    }
}
