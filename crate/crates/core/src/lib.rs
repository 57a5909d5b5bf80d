//! Causal beat, downbeat, tempo and meter tracking on a compact 1D
//! jump-back state space.
//!
//! A classic efficient pointer model tracks a beat with one row of positions
//! per tempo, 1,449 states for 55–215 BPM at a 20 ms hop. The jump-back space
//! keeps a single row of 55 positions (frames since the last beat) and learns,
//! per position, how likely the pointer is to return to the beat state. The
//! peak of those jump-back weights is the tempo. The same construction at beat
//! granularity tracks bar length (meter) with 6 states instead of 20.
//!
//! ```
//! use jumpback::signal::{synth_stream, SynthParams};
//! use jumpback::tracker::{Tracker, TrackerConfig};
//!
//! let (stream, _truth) = synth_stream(&SynthParams::clean(120.0, 4, 20.0)).unwrap();
//! let mut tracker = Tracker::new(TrackerConfig::default()).unwrap();
//! let summary = tracker.process_stream(&stream).unwrap();
//! assert_eq!(summary.tempo.round(), 120.0);
//! assert_eq!(summary.meter, 4);
//! ```
//!
//! Modules:
//!
//! - [`space`]: the jump-back space, predict/update, reward learning, decoding.
//! - [`pointer`]: the 2D efficient pointer baseline and state-count accounting.
//! - [`tracker`]: the frame-by-frame beat/downbeat pipeline.
//! - [`signal`]: activation/annotation files and a synthetic generator.
//! - [`eval`]: F-measure and the timing/work benchmark.
//! - [`cli`]: the `jumpback` command line.

pub mod cli;
pub mod error;
pub mod eval;
pub mod pointer;
pub mod signal;
pub mod space;
pub mod tracker;

pub use error::{Error, Result};
pub use space::{decode_interval, init_space, predict, reward_update, update, BeliefState, JumpBackSpace, SpaceConfig};
pub use tracker::{Engine, RhythmEvent, Summary, Tracker, TrackerConfig};
