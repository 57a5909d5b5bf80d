//! Causal joint beat, downbeat, tempo and meter tracking.
//!
//! The beat level is advanced once per audio frame. When it reports a beat,
//! the bar level is advanced once, observing the downbeat activation of that
//! frame. Events are returned from [`Tracker::process_frame`] as soon as they
//! are decided; nothing looks ahead.

use crate::error::{Error, Result};
use crate::pointer::{PointerHmm, DEFAULT_P_SWITCH};
use crate::signal::{ActivationFrame, ActivationStream, Annotation};
use crate::space::{Interval, Level, SpaceConfig, StepOutcome, StreamFilter, Work};

/// Which state space backs the tracker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Engine {
    /// 1D jump-back spaces at both levels.
    OneDim,
    /// 2D efficient beat pointer with the cascade bar space.
    Baseline2d,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::OneDim => "1d",
            Engine::Baseline2d => "2d",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackerConfig {
    /// Beat-level parameters; `level` is forced to [`Level::Beat`].
    pub beat: SpaceConfig,
    pub bar_min: usize,
    pub bar_max: usize,
    /// Gate for the downbeat activation.
    pub bar_threshold: f64,
    pub engine: Engine,
    pub seed: Option<u64>,
    /// Row-switch probability of the 2D engine.
    pub p_switch: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        let beat = SpaceConfig::beat();
        TrackerConfig {
            beat,
            bar_min: crate::space::DEFAULT_BAR_MIN,
            bar_max: crate::space::DEFAULT_BAR_MAX,
            bar_threshold: beat.threshold,
            engine: Engine::OneDim,
            seed: None,
            p_switch: DEFAULT_P_SWITCH,
        }
    }
}

impl TrackerConfig {
    pub fn with_engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    fn beat_space(&self) -> SpaceConfig {
        self.beat.with_level(Level::Beat)
    }

    fn bar_space(&self) -> SpaceConfig {
        let mut c = self.beat.with_level(Level::Bar {
            min_len: self.bar_min,
            max_len: self.bar_max,
        });
        c.threshold = self.bar_threshold;
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.beat_space().validate()?;
        self.bar_space().validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    Beat,
    /// A beat that also starts a bar.
    Downbeat,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RhythmEvent {
    /// Seconds, `frame_index * delta`.
    pub time: f64,
    pub frame_index: u64,
    pub kind: EventKind,
    /// Tempo estimate in BPM at the time of the event.
    pub tempo: f64,
    /// Beats per bar.
    pub meter: u32,
    /// Posterior mass of the beat state.
    pub beat_confidence: f64,
    /// Emitted before the beat level had seen `S_max` frames.
    pub warmup: bool,
    /// 1-based beat position within the current bar.
    pub bar_position: u32,
}

impl RhythmEvent {
    pub fn is_downbeat(&self) -> bool {
        self.kind == EventKind::Downbeat
    }

    pub fn to_annotation(&self) -> Annotation {
        Annotation {
            time: self.time,
            beat_position: self.bar_position,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub events: Vec<RhythmEvent>,
    pub tempo: f64,
    pub meter: u32,
    pub frames: u64,
}

impl Summary {
    pub fn beat_times(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.time).collect()
    }

    pub fn downbeat_times(&self) -> Vec<f64> {
        self.events
            .iter()
            .filter(|e| e.is_downbeat())
            .map(|e| e.time)
            .collect()
    }

    pub fn annotations(&self) -> Vec<Annotation> {
        self.events.iter().map(RhythmEvent::to_annotation).collect()
    }
}

/// The 2D pointer model with its running belief.
#[derive(Clone, Debug)]
struct PointerFilter {
    hmm: PointerHmm,
    belief: Vec<f64>,
    work: Work,
}

impl PointerFilter {
    fn new(hmm: PointerHmm) -> Self {
        PointerFilter {
            belief: hmm.uniform_belief(),
            hmm,
            work: Work::default(),
        }
    }

    fn advance(&mut self, activation: f64) -> Result<StepOutcome> {
        self.belief = self
            .hmm
            .forward_step_counted(&self.belief, activation, &mut self.work)?;
        let decoded = self.hmm.beat_positions(&self.belief);
        let beat_mass = self
            .hmm
            .rows()
            .map(|row| {
                let idx = self
                    .hmm
                    .index_of(crate::pointer::PointerState { row, position: 1 })
                    .expect("row start exists");
                self.belief[idx]
            })
            .sum();
        Ok(StepOutcome {
            gated: activation >= self.hmm.threshold(),
            at_beat_state: decoded.is_beat,
            beat_mass,
        })
    }

    fn interval(&self) -> Interval {
        let d = self.hmm.beat_positions(&self.belief);
        Interval {
            position: d.state.row,
            value: d.value,
        }
    }
}

#[derive(Clone, Debug)]
enum LevelModel {
    JumpBack(StreamFilter),
    Pointer(PointerFilter),
}

impl LevelModel {
    fn advance(&mut self, activation: f64) -> Result<StepOutcome> {
        match self {
            LevelModel::JumpBack(f) => f.advance(activation),
            LevelModel::Pointer(f) => f.advance(activation),
        }
    }

    fn interval(&self) -> Interval {
        match self {
            LevelModel::JumpBack(f) => f.interval(),
            LevelModel::Pointer(f) => f.interval(),
        }
    }

    fn work(&self) -> Work {
        match self {
            LevelModel::JumpBack(f) => f.work(),
            LevelModel::Pointer(f) => f.work,
        }
    }

    fn num_states(&self) -> usize {
        match self {
            LevelModel::JumpBack(f) => f.space().num_states(),
            LevelModel::Pointer(f) => f.hmm.num_states(),
        }
    }

    /// Position of the MAP hypothesis within the current interval.
    fn map_position(&self) -> usize {
        match self {
            LevelModel::JumpBack(f) => f.belief().map_position(),
            LevelModel::Pointer(f) => f.hmm.beat_positions(&f.belief).state.position,
        }
    }
}

/// One stream's tracking state.
#[derive(Clone, Debug)]
pub struct Tracker {
    config: TrackerConfig,
    beat: LevelModel,
    bar: LevelModel,
    delta: f64,
    next_index: u64,
    warmup_frames: u64,
    events: Vec<RhythmEvent>,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        let beat_space = config.beat_space();
        let bar_space = config.bar_space();
        let (beat, bar) = match config.engine {
            Engine::OneDim => (
                LevelModel::JumpBack(StreamFilter::new(beat_space, config.seed)?),
                LevelModel::JumpBack(StreamFilter::new(
                    bar_space,
                    config.seed.map(|s| s.wrapping_add(1)),
                )?),
            ),
            Engine::Baseline2d => (
                LevelModel::Pointer(PointerFilter::new(PointerHmm::beat(&beat_space, config.p_switch)?)),
                LevelModel::Pointer(PointerFilter::new(PointerHmm::cascade_bar(
                    &bar_space,
                    config.bar_min,
                    config.bar_max,
                    config.p_switch,
                )?)),
            ),
        };
        let warmup_frames = beat_space.interval_bounds()?.1 as u64;
        Ok(Tracker {
            config,
            beat,
            bar,
            delta: beat_space.delta,
            next_index: 0,
            warmup_frames,
            events: Vec::new(),
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Consumes one frame. Frames must arrive with indices 0, 1, 2, ...
    ///
    /// A beat is reported when the frame is gated and the beat level's
    /// posterior argmax is the beat state. A beat is a downbeat when the bar
    /// level, advanced on that beat, lands its argmax on position 1 with a gated
    /// downbeat activation.
    pub fn process_frame(&mut self, frame: ActivationFrame) -> Result<Option<RhythmEvent>> {
        if frame.index != self.next_index {
            return Err(Error::Sequencing {
                expected: self.next_index,
                got: frame.index,
            });
        }
        if !(0.0..=1.0).contains(&frame.downbeat) {
            return Err(Error::param(format!(
                "downbeat activation must lie in [0, 1], got {}",
                frame.downbeat
            )));
        }
        let outcome = self.beat.advance(frame.beat)?;
        self.next_index += 1;
        if !(outcome.gated && outcome.at_beat_state) {
            return Ok(None);
        }

        let bar = self.bar.advance(frame.downbeat)?;
        let kind = if bar.gated && bar.at_beat_state {
            EventKind::Downbeat
        } else {
            EventKind::Beat
        };
        let event = RhythmEvent {
            time: frame.index as f64 * self.delta,
            frame_index: frame.index,
            kind,
            tempo: self.beat.interval().value,
            meter: self.bar.interval().value.round() as u32,
            beat_confidence: outcome.beat_mass,
            warmup: frame.index < self.warmup_frames,
            bar_position: self.bar.map_position() as u32,
        };
        self.events.push(event);
        Ok(Some(event))
    }

    /// Runs every frame of `stream` and returns the summary.
    pub fn process_stream(&mut self, stream: &ActivationStream) -> Result<Summary> {
        if (stream.delta - self.delta).abs() > 1e-12 {
            return Err(Error::param(format!(
                "stream hop {} differs from tracker hop {}",
                stream.delta, self.delta
            )));
        }
        for frame in &stream.frames {
            self.process_frame(*frame)?;
        }
        Ok(self.finalize())
    }

    /// Current beat-level decode (interval in frames, tempo in BPM).
    pub fn beat_interval(&self) -> Interval {
        self.beat.interval()
    }

    /// Current bar-level decode (interval and value in beats).
    pub fn bar_interval(&self) -> Interval {
        self.bar.interval()
    }

    pub fn frames_processed(&self) -> u64 {
        self.next_index
    }

    pub fn events(&self) -> &[RhythmEvent] {
        &self.events
    }

    /// Work done by the beat and bar levels so far.
    pub fn work(&self) -> (Work, Work) {
        (self.beat.work(), self.bar.work())
    }

    pub fn state_counts(&self) -> (usize, usize) {
        (self.beat.num_states(), self.bar.num_states())
    }

    /// Accumulated events and the current decodes. Does not change the tracker.
    pub fn finalize(&self) -> Summary {
        Summary {
            events: self.events.clone(),
            tempo: self.beat.interval().value,
            meter: self.bar.interval().value.round() as u32,
            frames: self.next_index,
        }
    }
}
