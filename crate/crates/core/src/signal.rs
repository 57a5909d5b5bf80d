//! Activation and annotation files, and a synthetic activation generator.
//!
//! Activation file:
//!
//! ```text
//! #delta=0.02 frames=3 channels=beat,downbeat
//! 1.000000 1.000000
//! 0.000000 0.000000
//! 0.000000 0.000000
//! ```
//!
//! Annotation file: one `<time_sec> <beat_position>` pair per line, where beat
//! position 1 marks a downbeat. Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::space::frames_per_interval;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActivationFrame {
    pub index: u64,
    pub beat: f64,
    pub downbeat: f64,
}

impl ActivationFrame {
    pub fn new(index: u64, beat: f64, downbeat: f64) -> Self {
        ActivationFrame { index, beat, downbeat }
    }
}

/// Activations at a fixed hop, frame `i` at time `i * delta`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivationStream {
    pub delta: f64,
    pub frames: Vec<ActivationFrame>,
}

impl ActivationStream {
    /// Builds a stream from `(beat, downbeat)` pairs, indexing frames from 0.
    pub fn from_pairs(delta: f64, pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Format(format!("delta must be positive, got {delta}")));
        }
        let frames = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (b, d))| ActivationFrame::new(i as u64, b, d))
            .collect::<Vec<_>>();
        for f in &frames {
            if !in_unit(f.beat) || !in_unit(f.downbeat) {
                return Err(Error::param(format!(
                    "frame {} has activations outside [0, 1]",
                    f.index
                )));
            }
        }
        Ok(ActivationStream { delta, frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.frames.len() as f64 * self.delta
    }

    /// First `n` frames.
    pub fn prefix(&self, n: usize) -> ActivationStream {
        ActivationStream {
            delta: self.delta,
            frames: self.frames[..n.min(self.frames.len())].to_vec(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "#delta={} frames={} channels=beat,downbeat\n",
            self.delta,
            self.frames.len()
        );
        for f in &self.frames {
            let _ = writeln!(out, "{:.6} {:.6}", f.beat, f.downbeat);
        }
        out
    }

    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        w.write_all(self.to_text().as_bytes())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn in_unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

/// Reads an activation file from disk.
pub fn parse_activations(path: impl AsRef<Path>) -> Result<ActivationStream> {
    let text = fs::read_to_string(path)?;
    parse_activations_str(&text)
}

pub fn parse_activations_str(text: &str) -> Result<ActivationStream> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Format("empty activation file".into()))?;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse { line: 1, message: "header must start with '#'".into() })?;

    let mut delta = None;
    let mut count = None;
    let mut channels = None;
    for token in header.split_whitespace() {
        let (key, value) = token.split_once('=').ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("expected key=value, got {token:?}"),
        })?;
        let bad = |what: &str| Error::Parse {
            line: 1,
            message: format!("invalid {what}: {value:?}"),
        };
        match key {
            "delta" => delta = Some(value.parse::<f64>().map_err(|_| bad("delta"))?),
            "frames" => count = Some(value.parse::<usize>().map_err(|_| bad("frame count"))?),
            "channels" => channels = Some(value.to_string()),
            _ => {}
        }
    }
    let delta = delta.ok_or_else(|| Error::Format("header lacks delta".into()))?;
    let count = count.ok_or_else(|| Error::Format("header lacks frames".into()))?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Format(format!("delta must be positive, got {delta}")));
    }
    if channels.as_deref() != Some("beat,downbeat") {
        return Err(Error::Format("header must declare channels=beat,downbeat".into()));
    }

    let mut frames = Vec::with_capacity(count);
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let mut value = |name: &str| -> Result<f64> {
            let raw = fields.next().ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("missing {name} activation"),
            })?;
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("{name} activation {raw:?} is not a number"),
            })?;
            if !in_unit(v) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("{name} activation {v} outside [0, 1]"),
                });
            }
            Ok(v)
        };
        let beat = value("beat")?;
        let downbeat = value("downbeat")?;
        if fields.next().is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: "expected exactly two columns".into(),
            });
        }
        frames.push(ActivationFrame::new(frames.len() as u64, beat, downbeat));
    }
    if frames.len() != count {
        return Err(Error::Format(format!(
            "header declares {count} frames, file has {}",
            frames.len()
        )));
    }
    Ok(ActivationStream { delta, frames })
}

/// One annotated beat; `beat_position == 1` is a downbeat.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Annotation {
    pub time: f64,
    pub beat_position: u32,
}

impl Annotation {
    pub fn is_downbeat(&self) -> bool {
        self.beat_position == 1
    }
}

pub fn annotations_to_text(annotations: &[Annotation]) -> String {
    let mut out = String::new();
    for a in annotations {
        let _ = writeln!(out, "{:.6} {}", a.time, a.beat_position);
    }
    out
}

pub fn parse_annotations(path: impl AsRef<Path>) -> Result<Vec<Annotation>> {
    let text = fs::read_to_string(path)?;
    parse_annotations_str(&text)
}

pub fn parse_annotations_str(text: &str) -> Result<Vec<Annotation>> {
    let mut out: Vec<Annotation> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: line_no, message };
        let mut fields = line.split_whitespace();
        let time: f64 = fields
            .next()
            .and_then(|t| t.parse().ok())
            .filter(|t: &f64| t.is_finite() && *t >= 0.0)
            .ok_or_else(|| parse_err("expected a non-negative time".into()))?;
        let beat_position: u32 = fields
            .next()
            .and_then(|p| p.parse().ok())
            .filter(|p| *p >= 1)
            .ok_or_else(|| parse_err("expected a beat position >= 1".into()))?;
        if fields.next().is_some() {
            return Err(parse_err("expected exactly two columns".into()));
        }
        if let Some(prev) = out.last() {
            if time <= prev.time {
                return Err(Error::Format(format!(
                    "annotation times must increase strictly (line {line_no})"
                )));
            }
        }
        out.push(Annotation { time, beat_position });
    }
    Ok(out)
}

/// Beat times of an annotation list.
pub fn beat_times(annotations: &[Annotation]) -> Vec<f64> {
    annotations.iter().map(|a| a.time).collect()
}

/// Downbeat times of an annotation list.
pub fn downbeat_times(annotations: &[Annotation]) -> Vec<f64> {
    annotations
        .iter()
        .filter(|a| a.is_downbeat())
        .map(|a| a.time)
        .collect()
}

/// Parameters of [`synth_stream`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthParams {
    pub tempo: f64,
    pub meter: u32,
    pub delta: f64,
    pub duration: f64,
    pub pulse_amp: f64,
    pub noise_std: f64,
    pub jitter_frames: u32,
    pub seed: u64,
}

impl SynthParams {
    /// Clean pulse train at `tempo` BPM with `meter` beats per bar, 20 ms hop.
    pub fn clean(tempo: f64, meter: u32, duration: f64) -> Self {
        SynthParams {
            tempo,
            meter,
            delta: 0.02,
            duration,
            pulse_amp: 1.0,
            noise_std: 0.0,
            jitter_frames: 0,
            seed: 0,
        }
    }
}

/// Generates a labelled activation stream: pulses of `pulse_amp` every
/// `round(60 / (tempo * delta))` frames, starting at frame 0, with every
/// `meter`-th pulse repeated on the downbeat channel.
///
/// Each pulse is displaced by a uniform integer offset in
/// `-jitter_frames..=jitter_frames`, then Gaussian noise is added to both
/// channels and clipped to `[0, 1]`. The annotations hold the actual pulse
/// times.
pub fn synth_stream(p: &SynthParams) -> Result<(ActivationStream, Vec<Annotation>)> {
    if !(p.delta > 0.0 && p.delta.is_finite()) {
        return Err(Error::param(format!("delta must be positive, got {}", p.delta)));
    }
    if !(p.duration >= 0.0 && p.duration.is_finite()) {
        return Err(Error::param(format!("duration must be non-negative, got {}", p.duration)));
    }
    if p.meter == 0 {
        return Err(Error::param("meter must be at least 1"));
    }
    if !in_unit(p.pulse_amp) {
        return Err(Error::param(format!("pulse amplitude must lie in [0, 1], got {}", p.pulse_amp)));
    }
    if !(p.noise_std >= 0.0 && p.noise_std.is_finite()) {
        return Err(Error::param(format!("noise std must be non-negative, got {}", p.noise_std)));
    }
    let period = frames_per_interval(1, p.tempo, p.delta)?;
    let n = (p.duration / p.delta).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);

    let mut beat = vec![0.0; n];
    let mut downbeat = vec![0.0; n];
    let mut annotations = Vec::new();
    let jitter = i64::from(p.jitter_frames);
    let mut last: Option<usize> = None;
    for (k, nominal) in (0..n).step_by(period).enumerate() {
        let offset = if jitter > 0 { rng.random_range(-jitter..=jitter) } else { 0 };
        let mut at = (nominal as i64 + offset).clamp(0, n as i64 - 1) as usize;
        if let Some(prev) = last {
            if at <= prev {
                at = prev + 1;
            }
        }
        if at >= n {
            break;
        }
        last = Some(at);
        let position = (k as u32 % p.meter) + 1;
        beat[at] = p.pulse_amp;
        if position == 1 {
            downbeat[at] = p.pulse_amp;
        }
        annotations.push(Annotation {
            time: at as f64 * p.delta,
            beat_position: position,
        });
    }

    if p.noise_std > 0.0 {
        let normal = Normal::new(0.0, p.noise_std).map_err(|e| Error::param(e.to_string()))?;
        for i in 0..n {
            beat[i] = (beat[i] + normal.sample(&mut rng)).clamp(0.0, 1.0);
            downbeat[i] = (downbeat[i] + normal.sample(&mut rng)).clamp(0.0, 1.0);
        }
    }

    let stream = ActivationStream::from_pairs(p.delta, beat.into_iter().zip(downbeat))?;
    Ok((stream, annotations))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_well_formed_file() {
        let text = "#delta=0.02 frames=3 channels=beat,downbeat\n0.9 0.8\n0.1 0\n0 0\n";
        let s = parse_activations_str(text).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.delta, 0.02);
        assert_eq!(s.frames[0], ActivationFrame::new(0, 0.9, 0.8));
        assert_eq!(s.frames[2].index, 2);
    }

    #[test]
    fn out_of_range_value_reports_line() {
        let text = "#delta=0.02 frames=2 channels=beat,downbeat\n0.5 0.5\n1.5 0.0\n";
        match parse_activations_str(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_report_line() {
        for (text, want) in [
            ("#delta=0.02 frames=1 channels=beat,downbeat\nabc 0\n", 2),
            ("#delta=0.02 frames=1 channels=beat,downbeat\n0.5\n", 2),
            ("#delta=0.02 frames=2 channels=beat,downbeat\n0.5 0\n0.1 0.2 0.3\n", 3),
        ] {
            match parse_activations_str(text) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn header_errors() {
        let mismatch = "#delta=0.02 frames=4 channels=beat,downbeat\n0 0\n0 0\n0 0\n";
        assert!(matches!(parse_activations_str(mismatch), Err(Error::Format(_))));
        let zero_delta = "#delta=0 frames=0 channels=beat,downbeat\n";
        assert!(matches!(parse_activations_str(zero_delta), Err(Error::Format(_))));
        let neg_delta = "#delta=-0.01 frames=0 channels=beat,downbeat\n";
        assert!(matches!(parse_activations_str(neg_delta), Err(Error::Format(_))));
        assert!(parse_activations_str("").is_err());
        assert!(parse_activations_str("delta=0.02 frames=0\n").is_err());
        assert!(parse_activations_str("#delta=0.02 frames=0 channels=beat\n").is_err());
    }

    #[test]
    fn annotations_parse_and_reject_unsorted() {
        let a = parse_annotations_str("# tempo=120\n0.0 1\n0.5 2\n1.0 3\n").unwrap();
        assert_eq!(a.len(), 3);
        assert!(a[0].is_downbeat());
        assert_eq!(downbeat_times(&a), vec![0.0]);
        assert!(matches!(parse_annotations_str("0.5 1\n0.5 2\n"), Err(Error::Format(_))));
        assert!(matches!(parse_annotations_str("0.5 0\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_annotations_str("x 1\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn synth_clean_train() {
        let (s, ann) = synth_stream(&SynthParams::clean(120.0, 4, 10.0)).unwrap();
        assert_eq!(s.len(), 500);
        let beats: Vec<usize> = s
            .frames
            .iter()
            .filter(|f| f.beat > 0.0)
            .map(|f| f.index as usize)
            .collect();
        assert_eq!(beats, (0..500).step_by(25).collect::<Vec<_>>());
        let downs: Vec<usize> = s
            .frames
            .iter()
            .filter(|f| f.downbeat > 0.0)
            .map(|f| f.index as usize)
            .collect();
        assert_eq!(downs, (0..500).step_by(100).collect::<Vec<_>>());
        assert_eq!(ann.len(), 20);
        for (a, &idx) in ann.iter().zip(&beats) {
            assert_eq!(a.time, idx as f64 * 0.02);
        }
        assert_eq!(ann.iter().map(|a| a.beat_position).take(5).collect::<Vec<_>>(), [1, 2, 3, 4, 1]);
    }

    #[test]
    fn synth_zero_duration_is_empty() {
        let (s, ann) = synth_stream(&SynthParams::clean(120.0, 4, 0.0)).unwrap();
        assert!(s.is_empty());
        assert!(ann.is_empty());
    }

    #[test]
    fn synth_is_deterministic_per_seed() {
        let mut p = SynthParams::clean(100.0, 3, 20.0);
        p.noise_std = 0.1;
        p.jitter_frames = 2;
        p.seed = 11;
        assert_eq!(synth_stream(&p).unwrap(), synth_stream(&p).unwrap());
        let mut q = p;
        q.seed = 12;
        assert_ne!(synth_stream(&p).unwrap().0, synth_stream(&q).unwrap().0);
    }

    #[test]
    fn synth_jitter_stays_within_bounds() {
        let mut p = SynthParams::clean(120.0, 4, 30.0);
        p.jitter_frames = 2;
        p.seed = 5;
        let (_, ann) = synth_stream(&p).unwrap();
        for (k, a) in ann.iter().enumerate() {
            let frame = (a.time / 0.02).round() as i64;
            assert!((frame - 25 * k as i64).abs() <= 2);
        }
    }

    #[test]
    fn synth_rejects_bad_parameters() {
        let ok = SynthParams::clean(120.0, 4, 1.0);
        for bad in [
            SynthParams { tempo: 0.0, ..ok },
            SynthParams { meter: 0, ..ok },
            SynthParams { delta: 0.0, ..ok },
            SynthParams { duration: -1.0, ..ok },
            SynthParams { pulse_amp: 1.5, ..ok },
            SynthParams { noise_std: -0.1, ..ok },
        ] {
            assert!(synth_stream(&bad).is_err(), "{bad:?}");
        }
    }
}
