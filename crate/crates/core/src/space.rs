//! The 1D jump-back state space and its exact streaming inference.
//!
//! A pointer walks right one position per step along `1..=S_max`. From any
//! position `s` it may instead jump back to position 1 (the beat or downbeat
//! state) with probability `gamma[s]`. The learned `gamma` vector replaces the
//! tempo (or bar length) dimension of a classic 2D pointer model: its peak sits
//! at the interval length currently in effect.
//!
//! Positions are 1-based in the API and in docs. Internally every vector is
//! stored 0-based, so position `s` lives at index `s - 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_DELTA: f64 = 0.02;
pub const DEFAULT_TEMPO_MIN: f64 = 55.0;
pub const DEFAULT_TEMPO_MAX: f64 = 215.0;
pub const DEFAULT_EPSILON: f64 = 1e-5;
pub const DEFAULT_THRESHOLD: f64 = 0.4;
pub const DEFAULT_LAMBDA: f64 = 0.99;
pub const DEFAULT_BAR_MIN: usize = 2;
pub const DEFAULT_BAR_MAX: usize = 6;

/// Initial jump-back weight on the eligible range when no seed is given.
pub const UNIFORM_GAMMA: f64 = 0.5;

/// Tolerance used when checking that a distribution sums to one.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Which rhythmic level a space tracks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    /// Positions are audio frames; the interval is a beat period.
    Beat,
    /// Positions are beats; the interval is a bar length in beats.
    Bar { min_len: usize, max_len: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceConfig {
    /// Frame hop in seconds.
    pub delta: f64,
    /// Slowest tempo in BPM.
    pub tempo_min: f64,
    /// Fastest tempo in BPM.
    pub tempo_max: f64,
    /// Likelihood floor for every non-beat hypothesis.
    pub epsilon: f64,
    /// Activations below this are treated as carrying no beat evidence.
    pub threshold: f64,
    /// Forgetting factor of the jump-back weight update.
    pub lambda: f64,
    pub level: Level,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig::beat()
    }
}

impl SpaceConfig {
    /// Beat-level space with the default 55–215 BPM range at 20 ms hops.
    pub fn beat() -> Self {
        SpaceConfig {
            delta: DEFAULT_DELTA,
            tempo_min: DEFAULT_TEMPO_MIN,
            tempo_max: DEFAULT_TEMPO_MAX,
            epsilon: DEFAULT_EPSILON,
            threshold: DEFAULT_THRESHOLD,
            lambda: DEFAULT_LAMBDA,
            level: Level::Beat,
        }
    }

    /// Bar-level space covering bar lengths of 2 to 6 beats.
    pub fn bar() -> Self {
        SpaceConfig::beat().with_level(Level::Bar {
            min_len: DEFAULT_BAR_MIN,
            max_len: DEFAULT_BAR_MAX,
        })
    }

    pub fn with_level(mut self, level: Level) -> Self {
        self.level = level;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.delta,
            self.tempo_min,
            self.tempo_max,
            self.epsilon,
            self.threshold,
            self.lambda,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::param("configuration values must be finite"));
        }
        if self.delta <= 0.0 {
            return Err(Error::param(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.tempo_min > 0.0 && self.tempo_min < self.tempo_max) {
            return Err(Error::param(format!(
                "need 0 < tempo_min < tempo_max, got {} and {}",
                self.tempo_min, self.tempo_max
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::param(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < self.threshold && self.threshold <= 1.0) {
            return Err(Error::param(format!(
                "need 0 < epsilon < threshold <= 1, got epsilon={} threshold={}",
                self.epsilon, self.threshold
            )));
        }
        let (s_min, s_max) = self.raw_bounds()?;
        if s_min < 1 || s_max <= s_min {
            return Err(Error::param(format!(
                "interval range collapses: S_min={s_min}, S_max={s_max}"
            )));
        }
        Ok(())
    }

    /// `(S_min, S_max)`: the shortest and longest interval, in positions.
    pub fn interval_bounds(&self) -> Result<(usize, usize)> {
        self.validate()?;
        self.raw_bounds()
    }

    fn raw_bounds(&self) -> Result<(usize, usize)> {
        match self.level {
            Level::Beat => Ok((
                frames_per_interval(1, self.tempo_max, self.delta)?,
                frames_per_interval(1, self.tempo_min, self.delta)?,
            )),
            Level::Bar { min_len, max_len } => Ok((min_len, max_len)),
        }
    }
}

/// Number of frames spanned by `beats_per_bar` beats at `tempo` BPM:
/// `round(B * 60 / (tempo * delta))`, rounding half away from zero, never less
/// than one.
pub fn frames_per_interval(beats_per_bar: u32, tempo: f64, delta: f64) -> Result<usize> {
    if !(tempo > 0.0 && tempo.is_finite()) {
        return Err(Error::param(format!("tempo must be positive, got {tempo}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param(format!("delta must be positive, got {delta}")));
    }
    if beats_per_bar == 0 {
        return Err(Error::param("beats per bar must be at least 1"));
    }
    let frames = (f64::from(beats_per_bar) * 60.0 / (tempo * delta)).round();
    Ok((frames as usize).max(1))
}

/// Per-position jump-back probabilities for one tracking level.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpBackSpace {
    config: SpaceConfig,
    s_min: usize,
    s_max: usize,
    gamma: Vec<f64>,
    // gamma[S_max] is pinned to 1 for the transition model, so the evidence
    // for the longest interval is learned separately for decoding.
    terminal_weight: f64,
}

impl JumpBackSpace {
    /// Space with deterministic uniform weights: `UNIFORM_GAMMA` on the eligible
    /// range and for the terminal weight.
    pub fn new(config: SpaceConfig) -> Result<Self> {
        let (s_min, s_max) = config.interval_bounds()?;
        let mut gamma = vec![0.0; s_max];
        for g in &mut gamma[s_min - 1..s_max - 1] {
            *g = UNIFORM_GAMMA;
        }
        gamma[s_max - 1] = 1.0;
        Ok(JumpBackSpace {
            config,
            s_min,
            s_max,
            gamma,
            terminal_weight: UNIFORM_GAMMA,
        })
    }

    /// Space with an explicit `gamma` vector (index `s - 1` holds `gamma(s)`).
    ///
    /// The vector must already satisfy the boundary rules. The terminal weight
    /// starts at zero.
    pub fn with_gamma(config: SpaceConfig, gamma: Vec<f64>) -> Result<Self> {
        let (s_min, s_max) = config.interval_bounds()?;
        if gamma.len() != s_max {
            return Err(Error::param(format!(
                "gamma has {} entries, space has {s_max} positions",
                gamma.len()
            )));
        }
        if gamma.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(Error::param("gamma entries must lie in [0, 1]"));
        }
        if gamma[..s_min - 1].iter().any(|&g| g != 0.0) {
            return Err(Error::param(format!(
                "gamma must be zero below position {s_min}"
            )));
        }
        if gamma[s_max - 1] != 1.0 {
            return Err(Error::param("gamma at the last position must be exactly 1"));
        }
        Ok(JumpBackSpace {
            config,
            s_min,
            s_max,
            gamma,
            terminal_weight: 0.0,
        })
    }

    pub fn with_terminal_weight(mut self, weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::param("terminal weight must lie in [0, 1]"));
        }
        self.terminal_weight = weight;
        Ok(self)
    }

    pub fn config(&self) -> &SpaceConfig {
        &self.config
    }

    /// Number of positions, `S_max`.
    pub fn num_states(&self) -> usize {
        self.s_max
    }

    /// Shortest interval, `S_min`.
    pub fn min_interval(&self) -> usize {
        self.s_min
    }

    /// Jump-back probabilities; index `s - 1` holds position `s`.
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Jump-back probability at 1-based `position`.
    pub fn gamma_at(&self, position: usize) -> f64 {
        self.gamma[position - 1]
    }

    /// Learned decoding weight of the longest interval.
    pub fn terminal_weight(&self) -> f64 {
        self.terminal_weight
    }

    /// 0-based index range of the positions whose weight is learned,
    /// `S_min..=S_max-1`.
    fn eligible(&self) -> std::ops::Range<usize> {
        self.s_min - 1..self.s_max - 1
    }
}

/// Posterior over pointer positions after frame `frame_index`.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefState {
    probs: Vec<f64>,
    frame_index: u64,
}

impl BeliefState {
    pub fn uniform(num_states: usize) -> Self {
        BeliefState {
            probs: vec![1.0 / num_states as f64; num_states],
            frame_index: 0,
        }
    }

    /// Validated belief: entries non-negative, summing to one within
    /// [`SUM_TOLERANCE`].
    pub fn from_probs(probs: Vec<f64>, frame_index: u64) -> Result<Self> {
        check_distribution(&probs, "belief")?;
        Ok(BeliefState { probs, frame_index })
    }

    /// Point mass at 1-based `position`.
    pub fn point(num_states: usize, position: usize) -> Self {
        let mut probs = vec![0.0; num_states];
        probs[position - 1] = 1.0;
        BeliefState {
            probs,
            frame_index: 0,
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }

    /// Probability of the beat (or downbeat) state, position 1.
    pub fn beat_mass(&self) -> f64 {
        self.probs[0]
    }

    /// 1-based position of the largest entry; ties go to the smaller position.
    pub fn map_position(&self) -> usize {
        argmax(&self.probs) + 1
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }
}

/// One-step-ahead distribution `p(phi_{k+1} | y_{1:k})`.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub probs: Vec<f64>,
    /// Index of the frame this prediction is for.
    pub frame_index: u64,
}

/// Everything [`reward_update`] needs from one predict/update cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardTrace {
    pub predicted: Vec<f64>,
    pub prev_posterior: Vec<f64>,
    pub new_posterior: Vec<f64>,
    /// Whether the activation reached the gate threshold.
    pub gated: bool,
    /// The activation observed at the new frame.
    pub activation: f64,
}

/// Operation counts accumulated by the counted inference routines.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Work {
    /// Distinct state probabilities written per forward step, summed.
    pub touched_states: u64,
    /// Multiply or multiply-add operations, summed.
    pub multiply_adds: u64,
}

impl Work {
    pub fn add(&mut self, other: Work) {
        self.touched_states += other.touched_states;
        self.multiply_adds += other.multiply_adds;
    }
}

/// Deterministic-uniform space and belief without a seed; seeded random ones
/// otherwise. Seeded spaces draw `gamma` uniformly on the eligible range and the
/// belief uniformly on the simplex.
pub fn init_space(config: SpaceConfig, seed: Option<u64>) -> Result<(JumpBackSpace, BeliefState)> {
    let mut space = JumpBackSpace::new(config)?;
    let n = space.num_states();
    let Some(seed) = seed else {
        return Ok((space, BeliefState::uniform(n)));
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in space.eligible() {
        space.gamma[i] = rng.random::<f64>();
    }
    space.terminal_weight = rng.random::<f64>();

    // Normalized exponentials are uniform on the simplex.
    let mut probs: Vec<f64> = (0..n)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);

    Ok((space, BeliefState { probs, frame_index: 0 }))
}

/// Prediction step: push every hypothesis one position right, except the
/// fraction `gamma[s]` that jumps back to position 1.
pub fn predict(belief: &BeliefState, space: &JumpBackSpace) -> Result<Prediction> {
    predict_counted(belief, space, &mut Work::default())
}

pub(crate) fn predict_counted(
    belief: &BeliefState,
    space: &JumpBackSpace,
    work: &mut Work,
) -> Result<Prediction> {
    let n = space.num_states();
    if belief.probs.len() != n {
        return Err(Error::param(format!(
            "belief has {} entries, space has {n} positions",
            belief.probs.len()
        )));
    }
    let mut out = vec![0.0; n];
    predict_into(&belief.probs, &space.gamma, &mut out, work);
    Ok(Prediction {
        probs: out,
        frame_index: belief.frame_index + 1,
    })
}

fn predict_into(probs: &[f64], gamma: &[f64], out: &mut [f64], work: &mut Work) {
    let n = probs.len();
    let mut jumped = 0.0;
    for s in 0..n - 1 {
        let p = probs[s];
        let g = gamma[s];
        jumped += g * p;
        out[s + 1] = (1.0 - g) * p;
    }
    // gamma[S_max] == 1: the last position only feeds position 1.
    jumped += probs[n - 1];
    out[0] = jumped;

    work.touched_states += n as u64;
    work.multiply_adds += 2 * (n as u64 - 1) + 1;
}

/// Observation update with the gated beat likelihood.
///
/// Position 1 gets likelihood `activation` when it reaches the threshold, every
/// other case gets `epsilon`. Below the threshold the likelihood is constant, so
/// the posterior is the prediction itself.
pub fn update(pred: &Prediction, activation: f64, space: &JumpBackSpace) -> Result<BeliefState> {
    update_counted(pred, activation, space, &mut Work::default())
}

pub(crate) fn update_counted(
    pred: &Prediction,
    activation: f64,
    space: &JumpBackSpace,
    work: &mut Work,
) -> Result<BeliefState> {
    let n = space.num_states();
    if pred.probs.len() != n {
        return Err(Error::param(format!(
            "prediction has {} entries, space has {n} positions",
            pred.probs.len()
        )));
    }
    let mut probs = vec![0.0; n];
    update_into(&pred.probs, activation, &space.config, &mut probs, work)?;
    Ok(BeliefState {
        probs,
        frame_index: pred.frame_index,
    })
}

fn update_into(pred: &[f64], activation: f64, config: &SpaceConfig, out: &mut [f64], work: &mut Work) -> Result<()> {
    check_activation(activation)?;
    work.multiply_adds += pred.len() as u64;

    if activation < config.threshold {
        let total: f64 = pred.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::Degenerate("prediction carries no probability mass".into()));
        }
        out.copy_from_slice(pred);
        return Ok(());
    }

    let eps = config.epsilon;
    out[0] = activation * pred[0];
    for (o, p) in out[1..].iter_mut().zip(&pred[1..]) {
        *o = eps * p;
    }
    let z: f64 = out.iter().sum();
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Degenerate(format!("normalizer is {z}")));
    }
    out.iter_mut().for_each(|p| *p /= z);
    Ok(())
}

/// Jump-back reward and punishment learning for one frame.
///
/// On a gated frame, the mass that sat at position `s + 1` after prediction
/// failed to jump back from `s` in time; the drop it suffers in the update step
/// is credited to `gamma[s]`. On a non-gated frame every jump back was wrong, and
/// each eligible `s` is charged the mass it sent back, `gamma[s] * prev[s]`.
/// Each weight then moves by `gamma <- lambda * gamma + (1 - lambda) * signal`
/// and is clamped to `[0, 1]`.
///
/// The terminal weight of the longest interval follows the same rule, treating
/// the forced jump from `S_max` as if the mass had continued to a virtual
/// position past the end.
pub fn reward_update(space: &mut JumpBackSpace, trace: &RewardTrace) -> Result<()> {
    let n = space.num_states();
    for (name, v) in [
        ("predicted", &trace.predicted),
        ("prev_posterior", &trace.prev_posterior),
        ("new_posterior", &trace.new_posterior),
    ] {
        if v.len() != n {
            return Err(Error::param(format!(
                "trace vector {name} has {} entries, space has {n} positions",
                v.len()
            )));
        }
    }
    learn(
        space,
        &trace.predicted,
        &trace.prev_posterior,
        &trace.new_posterior,
        trace.gated,
        trace.activation,
    );
    Ok(())
}

fn learn(space: &mut JumpBackSpace, predicted: &[f64], prev: &[f64], post: &[f64], gated: bool, activation: f64) {
    let n = space.num_states();
    let lambda = space.config.lambda;
    let eps = space.config.epsilon;
    let blend = |old: f64, signal: f64| (lambda * old + (1.0 - lambda) * signal).clamp(0.0, 1.0);

    let terminal_signal;
    if gated {
        for s in space.eligible() {
            let signal = predicted[s + 1] - post[s + 1];
            space.gamma[s] = blend(space.gamma[s], signal);
        }
        let z = activation * predicted[0] + eps * predicted[1..].iter().sum::<f64>();
        terminal_signal = if z > 0.0 { prev[n - 1] * (1.0 - eps / z) } else { 0.0 };
    } else {
        for s in space.eligible() {
            let signal = -space.gamma[s] * prev[s];
            space.gamma[s] = blend(space.gamma[s], signal);
        }
        terminal_signal = -prev[n - 1];
    }
    space.terminal_weight = blend(space.terminal_weight, terminal_signal);

    for g in &mut space.gamma[..space.s_min - 1] {
        *g = 0.0;
    }
    space.gamma[n - 1] = 1.0;
}

/// Decoded interval: the position with the largest learned weight and what it
/// means at this level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    /// 1-based position, i.e. the interval length in frames (beat level) or
    /// beats (bar level).
    pub position: usize,
    /// Tempo in BPM (beat level) or beats per bar (bar level).
    pub value: f64,
}

/// Argmax of the learned weights over `S_min..=S_max`, smallest position on
/// ties. `S_max` is represented by its terminal weight.
pub fn decode_interval(space: &JumpBackSpace) -> Interval {
    let eligible = space.eligible();
    let mut best = eligible.start;
    let mut best_w = f64::NEG_INFINITY;
    for s in eligible {
        if space.gamma[s] > best_w {
            best = s;
            best_w = space.gamma[s];
        }
    }
    if space.terminal_weight > best_w {
        best = space.s_max - 1;
    }
    let position = best + 1;
    let value = match space.config.level {
        Level::Beat => 60.0 / (position as f64 * space.config.delta),
        Level::Bar { .. } => position as f64,
    };
    Interval { position, value }
}

/// A space and its belief, advanced one observation at a time without
/// allocating.
#[derive(Clone, Debug)]
pub struct StreamFilter {
    space: JumpBackSpace,
    belief: BeliefState,
    predicted: Vec<f64>,
    posterior: Vec<f64>,
    work: Work,
}

/// What one [`StreamFilter::advance`] call observed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub gated: bool,
    /// Posterior argmax is the beat state.
    pub at_beat_state: bool,
    /// Posterior mass at the beat state.
    pub beat_mass: f64,
}

impl StreamFilter {
    pub fn new(config: SpaceConfig, seed: Option<u64>) -> Result<Self> {
        let (space, belief) = init_space(config, seed)?;
        Self::from_parts(space, belief)
    }

    pub fn from_parts(space: JumpBackSpace, belief: BeliefState) -> Result<Self> {
        let n = space.num_states();
        if belief.probs.len() != n {
            return Err(Error::param("belief does not match space size"));
        }
        Ok(StreamFilter {
            space,
            belief,
            predicted: vec![0.0; n],
            posterior: vec![0.0; n],
            work: Work::default(),
        })
    }

    /// predict, update, then learn from the pair.
    pub fn advance(&mut self, activation: f64) -> Result<StepOutcome> {
        predict_into(&self.belief.probs, &self.space.gamma, &mut self.predicted, &mut self.work);
        update_into(&self.predicted, activation, &self.space.config, &mut self.posterior, &mut self.work)?;
        let gated = activation >= self.space.config.threshold;
        learn(
            &mut self.space,
            &self.predicted,
            &self.belief.probs,
            &self.posterior,
            gated,
            activation,
        );
        self.work.multiply_adds += 2 * self.space.eligible().len() as u64;

        std::mem::swap(&mut self.belief.probs, &mut self.posterior);
        self.belief.frame_index += 1;
        Ok(StepOutcome {
            gated,
            at_beat_state: self.belief.map_position() == 1,
            beat_mass: self.belief.beat_mass(),
        })
    }

    pub fn space(&self) -> &JumpBackSpace {
        &self.space
    }

    pub fn belief(&self) -> &BeliefState {
        &self.belief
    }

    pub fn interval(&self) -> Interval {
        decode_interval(&self.space)
    }

    pub fn work(&self) -> Work {
        self.work
    }
}

fn check_activation(b: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::param(format!("activation must lie in [0, 1], got {b}")));
    }
    Ok(())
}

pub(crate) fn check_distribution(probs: &[f64], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::param(format!("{what} is empty")));
    }
    if probs.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
        return Err(Error::param(format!("{what} has negative or non-finite entries")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::param(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

/// Index of the largest entry, first one on ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bar_config(min_len: usize, max_len: usize) -> SpaceConfig {
        SpaceConfig::bar().with_level(Level::Bar { min_len, max_len })
    }

    #[test]
    fn frames_per_interval_values() {
        assert_eq!(frames_per_interval(1, 215.0, 0.02).unwrap(), 14);
        assert_eq!(frames_per_interval(1, 55.0, 0.02).unwrap(), 55);
        assert_eq!(frames_per_interval(1, 60.0, 1.0).unwrap(), 1);
        assert_eq!(frames_per_interval(4, 120.0, 0.01).unwrap(), 200);
        // 60 / (80 * 0.3) = 2.5 rounds away from zero
        assert_eq!(frames_per_interval(1, 80.0, 0.3).unwrap(), 3);
        assert_eq!(frames_per_interval(1, 1e9, 0.02).unwrap(), 1);
    }

    #[test]
    fn frames_per_interval_rejects_bad_parameters() {
        assert!(matches!(frames_per_interval(1, 0.0, 0.02), Err(Error::Parameter(_))));
        assert!(matches!(frames_per_interval(1, -5.0, 0.02), Err(Error::Parameter(_))));
        assert!(matches!(frames_per_interval(1, 120.0, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(frames_per_interval(0, 120.0, 0.02), Err(Error::Parameter(_))));
    }

    #[test]
    fn config_validation() {
        assert!(SpaceConfig::beat().validate().is_ok());
        let mut c = SpaceConfig::beat();
        c.tempo_min = 215.0;
        assert!(c.validate().is_err());
        let mut c = SpaceConfig::beat();
        c.lambda = 1.5;
        assert!(c.validate().is_err());
        let mut c = SpaceConfig::beat();
        c.epsilon = 0.5;
        assert!(c.validate().is_err());
        let mut c = SpaceConfig::beat();
        c.delta = -0.01;
        assert!(c.validate().is_err());
        assert!(bar_config(4, 4).validate().is_err());
        assert!(bar_config(0, 4).validate().is_err());
    }

    #[test]
    fn init_uniform_beat_space() {
        let (space, belief) = init_space(SpaceConfig::beat(), None).unwrap();
        assert_eq!(space.num_states(), 55);
        assert_eq!(space.min_interval(), 14);
        assert!(belief.probs().iter().all(|&p| p == 1.0 / 55.0));
        assert!(space.gamma()[..13].iter().all(|&g| g == 0.0));
        assert!(space.gamma()[13..54].iter().all(|&g| g == UNIFORM_GAMMA));
        assert_eq!(space.gamma_at(55), 1.0);
    }

    #[test]
    fn init_bar_space_has_six_states() {
        let (space, _) = init_space(SpaceConfig::bar(), None).unwrap();
        assert_eq!(space.num_states(), 6);
    }

    #[test]
    fn seeded_init_is_deterministic_and_valid() {
        let a = init_space(SpaceConfig::beat(), Some(7)).unwrap();
        let b = init_space(SpaceConfig::beat(), Some(7)).unwrap();
        let c = init_space(SpaceConfig::beat(), Some(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let (space, belief) = a;
        check_distribution(belief.probs(), "belief").unwrap();
        assert!(space.gamma()[..13].iter().all(|&g| g == 0.0));
        assert_eq!(space.gamma_at(55), 1.0);
        assert!(space.gamma().iter().all(|g| (0.0..=1.0).contains(g)));
    }

    #[test]
    fn predict_below_min_interval_only_advances() {
        let space = JumpBackSpace::with_gamma(bar_config(2, 4), vec![0.0, 0.3, 0.6, 1.0]).unwrap();
        let pred = predict(&BeliefState::point(4, 1), &space).unwrap();
        assert_eq!(pred.probs, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn predict_last_position_jumps_back() {
        let space = JumpBackSpace::with_gamma(bar_config(2, 4), vec![0.0, 0.3, 0.6, 1.0]).unwrap();
        let pred = predict(&BeliefState::point(4, 4), &space).unwrap();
        assert_eq!(pred.probs, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn predict_hand_evaluated() {
        let space = JumpBackSpace::with_gamma(bar_config(2, 4), vec![0.0, 0.2, 0.4, 1.0]).unwrap();
        let belief = BeliefState::from_probs(vec![0.0, 0.5, 0.5, 0.0], 3).unwrap();
        let pred = predict(&belief, &space).unwrap();
        for (got, want) in pred.probs.iter().zip([0.3, 0.0, 0.4, 0.3]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        assert_eq!(pred.frame_index, 4);
    }

    #[test]
    fn predict_rejects_length_mismatch() {
        let space = JumpBackSpace::new(bar_config(2, 4)).unwrap();
        let err = predict(&BeliefState::uniform(5), &space).unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
    }

    fn small_space(epsilon: f64, threshold: f64) -> JumpBackSpace {
        let mut config = bar_config(2, 3);
        config.epsilon = epsilon;
        config.threshold = threshold;
        JumpBackSpace::new(config).unwrap()
    }

    #[test]
    fn update_below_threshold_returns_prediction() {
        let space = small_space(0.1, 0.5);
        let pred = Prediction {
            probs: vec![0.3, 0.4, 0.3],
            frame_index: 9,
        };
        let post = update(&pred, 0.49, &space).unwrap();
        assert_eq!(post.probs(), &pred.probs[..]);
        assert_eq!(post.frame_index(), 9);
    }

    #[test]
    fn update_hand_evaluated() {
        let space = small_space(0.1, 0.5);
        let pred = Prediction {
            probs: vec![0.3, 0.4, 0.3],
            frame_index: 1,
        };
        let post = update(&pred, 0.9, &space).unwrap();
        let want = [0.27 / 0.34, 0.04 / 0.34, 0.03 / 0.34];
        for (got, want) in post.probs().iter().zip(want) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(post.probs()[0], 0.7941, epsilon = 1e-4);
    }

    #[test]
    fn update_point_mass_at_beat_state_stays() {
        let space = small_space(0.1, 0.5);
        let pred = Prediction {
            probs: vec![1.0, 0.0, 0.0],
            frame_index: 1,
        };
        assert_eq!(update(&pred, 1.0, &space).unwrap().probs(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn update_errors() {
        let space = small_space(0.1, 0.5);
        let zero = Prediction {
            probs: vec![0.0; 3],
            frame_index: 1,
        };
        assert!(matches!(update(&zero, 0.9, &space), Err(Error::Degenerate(_))));
        assert!(matches!(update(&zero, 0.1, &space), Err(Error::Degenerate(_))));
        let ok = Prediction {
            probs: vec![0.3, 0.4, 0.3],
            frame_index: 1,
        };
        assert!(matches!(update(&ok, 1.2, &space), Err(Error::Parameter(_))));
        assert!(matches!(update(&ok, -0.1, &space), Err(Error::Parameter(_))));
        assert!(matches!(update(&ok, f64::NAN, &space), Err(Error::Parameter(_))));
    }

    fn trace(predicted: Vec<f64>, prev: Vec<f64>, new: Vec<f64>, gated: bool, b: f64) -> RewardTrace {
        RewardTrace {
            predicted,
            prev_posterior: prev,
            new_posterior: new,
            gated,
            activation: b,
        }
    }

    #[test]
    fn reward_with_zero_signal_decays_by_lambda() {
        let mut config = bar_config(2, 5);
        config.lambda = 0.9;
        let mut space = JumpBackSpace::new(config).unwrap();
        let p = vec![0.2; 5];
        // gated, predicted == posterior, nothing at the last position
        let t = trace(p.clone(), vec![0.5, 0.5, 0.0, 0.0, 0.0], p, true, 1.0);
        reward_update(&mut space, &t).unwrap();
        for s in 2..=4 {
            assert_abs_diff_eq!(space.gamma_at(s), 0.45, epsilon = 1e-15);
        }
        assert_eq!(space.gamma_at(1), 0.0);
        assert_eq!(space.gamma_at(5), 1.0);
    }

    #[test]
    fn reward_gated_credits_source_position() {
        let mut config = bar_config(2, 3);
        config.lambda = 0.9;
        config.epsilon = 0.1;
        config.threshold = 0.5;
        let mut space = JumpBackSpace::new(config).unwrap();
        let predicted = vec![0.3, 0.4, 0.3];
        let pred = Prediction {
            probs: predicted.clone(),
            frame_index: 1,
        };
        let post = update(&pred, 0.9, &space).unwrap();
        let t = trace(predicted, vec![1.0 / 3.0; 3], post.probs().to_vec(), true, 0.9);
        reward_update(&mut space, &t).unwrap();
        // posterior [0.7941, 0.1176, 0.0882]; position 3 drops 0.3 - 0.0882,
        // credited to position 2
        let signal = 0.3 - 0.03 / 0.34;
        assert_abs_diff_eq!(space.gamma_at(2), 0.9 * 0.5 + 0.1 * signal, epsilon = 1e-12);
        assert_abs_diff_eq!(space.gamma_at(2), 0.471_176_470_588_235_3, epsilon = 1e-12);
        assert_eq!(space.gamma_at(3), 1.0);
    }

    #[test]
    fn reward_without_jumps_keeps_zero_gamma() {
        let config = bar_config(2, 4);
        let mut space = JumpBackSpace::with_gamma(config, vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let t = trace(
            vec![0.1, 0.4, 0.3, 0.2],
            vec![0.4, 0.3, 0.2, 0.1],
            vec![0.1, 0.4, 0.3, 0.2],
            false,
            0.0,
        );
        reward_update(&mut space, &t).unwrap();
        assert_eq!(space.gamma(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn reward_punishes_wrong_jumps_by_source() {
        let mut config = bar_config(2, 4);
        config.lambda = 0.5;
        let mut space = JumpBackSpace::with_gamma(config, vec![0.0, 0.4, 0.8, 1.0]).unwrap();
        let prev = vec![0.0, 0.5, 0.5, 0.0];
        let t = trace(vec![0.6, 0.0, 0.3, 0.1], prev.clone(), vec![0.6, 0.0, 0.3, 0.1], false, 0.0);
        reward_update(&mut space, &t).unwrap();
        // signal = -gamma * prev
        assert_abs_diff_eq!(space.gamma_at(2), 0.5 * 0.4 - 0.5 * 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(space.gamma_at(3), 0.5 * 0.8 - 0.5 * 0.4, epsilon = 1e-15);
    }

    #[test]
    fn reward_rejects_shape_mismatch() {
        let mut space = JumpBackSpace::new(bar_config(2, 4)).unwrap();
        let t = trace(vec![0.5, 0.5], vec![0.25; 4], vec![0.25; 4], true, 1.0);
        assert!(reward_update(&mut space, &t).is_err());
    }

    #[test]
    fn decode_beat_tempo() {
        let config = SpaceConfig::beat();
        let mut gamma = vec![0.0; 55];
        gamma[54] = 1.0;
        gamma[24] = 0.9;
        gamma[30] = 0.2;
        let space = JumpBackSpace::with_gamma(config, gamma.clone()).unwrap();
        let iv = decode_interval(&space);
        assert_eq!(iv.position, 25);
        assert_abs_diff_eq!(iv.value, 120.0, epsilon = 1e-9);

        gamma[24] = 0.0;
        gamma[13] = 0.9;
        let iv = decode_interval(&JumpBackSpace::with_gamma(config, gamma).unwrap());
        assert_eq!(iv.position, 14);
        assert_abs_diff_eq!(iv.value, 214.285_714_285_714_3, epsilon = 1e-9);
    }

    #[test]
    fn decode_ties_go_to_smaller_position() {
        let mut gamma = vec![0.0; 55];
        gamma[54] = 1.0;
        gamma[19] = 0.7;
        gamma[24] = 0.7;
        let space = JumpBackSpace::with_gamma(SpaceConfig::beat(), gamma).unwrap();
        assert_eq!(decode_interval(&space).position, 20);
    }

    #[test]
    fn decode_uses_terminal_weight_for_longest_interval() {
        let space = JumpBackSpace::with_gamma(bar_config(2, 6), vec![0.0, 0.1, 0.2, 0.1, 0.0, 1.0])
            .unwrap()
            .with_terminal_weight(0.3)
            .unwrap();
        let iv = decode_interval(&space);
        assert_eq!(iv.position, 6);
        assert_eq!(iv.value, 6.0);
    }

    #[test]
    fn with_gamma_enforces_boundary_rules() {
        let c = bar_config(2, 4);
        assert!(JumpBackSpace::with_gamma(c, vec![0.1, 0.2, 0.3, 1.0]).is_err());
        assert!(JumpBackSpace::with_gamma(c, vec![0.0, 0.2, 0.3, 0.9]).is_err());
        assert!(JumpBackSpace::with_gamma(c, vec![0.0, 1.2, 0.3, 1.0]).is_err());
        assert!(JumpBackSpace::with_gamma(c, vec![0.0, 0.2, 1.0]).is_err());
    }

    #[test]
    fn stream_filter_matches_free_functions() {
        let config = SpaceConfig::beat();
        let mut filter = StreamFilter::new(config, Some(3)).unwrap();
        let (mut space, mut belief) = init_space(config, Some(3)).unwrap();
        for k in 0..300 {
            let b = if k % 25 == 0 { 0.9 } else { 0.05 };
            let pred = predict(&belief, &space).unwrap();
            let post = update(&pred, b, &space).unwrap();
            let t = RewardTrace {
                predicted: pred.probs.clone(),
                prev_posterior: belief.probs().to_vec(),
                new_posterior: post.probs().to_vec(),
                gated: b >= config.threshold,
                activation: b,
            };
            reward_update(&mut space, &t).unwrap();
            belief = post;
            filter.advance(b).unwrap();
        }
        assert_eq!(filter.space(), &space);
        assert_eq!(filter.belief(), &belief);
        assert_eq!(filter.belief().frame_index(), 300);
    }
}
