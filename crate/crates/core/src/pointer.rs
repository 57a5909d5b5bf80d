//! Baseline 2D pointer models and state-count accounting.
//!
//! [`PointerHmm`] is the efficient pointer HMM: one row per interval length
//! `m` in `min_row..=max_row`, each row holding `m` positions. Within a row the
//! pointer advances deterministically; at the end of a row it wraps to position
//! 1 of the same row, or of an adjacent row with probability `p_switch`.
//! The same structure serves both the beat-level model (rows are frames per beat)
//! and the cascade bar model (rows are beats per bar).

use crate::error::{Error, Result};
use crate::space::{argmax, check_distribution, frames_per_interval, Level, SpaceConfig, Work};

pub const DEFAULT_P_SWITCH: f64 = 0.02;

/// The five state-space constructions whose sizes are compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    /// 2D efficient beat pointer: `sum(m)` over all frames-per-beat rows.
    EfficientBeat,
    /// 2D cascade bar space alone: `sum(len)` over the bar-length range.
    CascadeBar,
    /// Efficient beat space plus cascade bar space.
    CascadeTotal,
    /// One efficient space per bar length, all run independently.
    IndependentBars,
    /// 1D jump-back beat space: `M(T_min)` positions.
    OneDimBeat,
    /// 1D jump-back bar space: longest bar length.
    OneDimBar,
}

impl SpaceKind {
    pub const ALL: [SpaceKind; 6] = [
        SpaceKind::EfficientBeat,
        SpaceKind::CascadeBar,
        SpaceKind::IndependentBars,
        SpaceKind::CascadeTotal,
        SpaceKind::OneDimBeat,
        SpaceKind::OneDimBar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::EfficientBeat => "efficient_beat",
            SpaceKind::CascadeBar => "cascade_bar",
            SpaceKind::CascadeTotal => "cascade_total",
            SpaceKind::IndependentBars => "independent_bars",
            SpaceKind::OneDimBeat => "one_dim_beat",
            SpaceKind::OneDimBar => "one_dim_bar",
        }
    }
}

/// Exact number of states of a construction for the given tempo range and hop
/// and bar-length range.
pub fn count_states(kind: SpaceKind, beat: &SpaceConfig, bar_min: usize, bar_max: usize) -> Result<u64> {
    beat.validate()?;
    if bar_min < 1 || bar_max < bar_min {
        return Err(Error::param(format!(
            "bar length range {bar_min}..={bar_max} is empty"
        )));
    }
    let fastest = frames_per_interval(1, beat.tempo_max, beat.delta)? as u64;
    let slowest = frames_per_interval(1, beat.tempo_min, beat.delta)? as u64;
    let efficient: u64 = (fastest..=slowest).sum();
    let bars: u64 = (bar_min as u64..=bar_max as u64).sum();
    Ok(match kind {
        SpaceKind::EfficientBeat => efficient,
        SpaceKind::CascadeBar => bars,
        SpaceKind::CascadeTotal => efficient + bars,
        SpaceKind::IndependentBars => efficient * bars,
        SpaceKind::OneDimBeat => slowest,
        SpaceKind::OneDimBar => bar_max as u64,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointerHmm {
    min_row: usize,
    max_row: usize,
    /// Flattened offset of each row's first position.
    offsets: Vec<usize>,
    num_states: usize,
    p_switch: f64,
    epsilon: f64,
    threshold: f64,
    level: Level,
    delta: f64,
}

/// A `(row length, position)` pair; both 1-based in the sense that `position`
/// runs over `1..=row`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PointerState {
    pub row: usize,
    pub position: usize,
}

impl PointerHmm {
    /// Beat-level efficient pointer model for the tempo range of `config`.
    pub fn beat(config: &SpaceConfig, p_switch: f64) -> Result<Self> {
        let beat_config = config.with_level(Level::Beat);
        let (min_row, max_row) = beat_config.interval_bounds()?;
        Self::build(min_row, max_row, p_switch, &beat_config)
    }

    /// Cascade bar space with one row per bar length, stepped once per beat.
    pub fn cascade_bar(config: &SpaceConfig, min_len: usize, max_len: usize, p_switch: f64) -> Result<Self> {
        let bar_config = config.with_level(Level::Bar { min_len, max_len });
        bar_config.validate()?;
        Self::build(min_len, max_len, p_switch, &bar_config)
    }

    fn build(min_row: usize, max_row: usize, p_switch: f64, config: &SpaceConfig) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_switch) {
            return Err(Error::param(format!("p_switch must lie in [0, 1], got {p_switch}")));
        }
        let mut offsets = Vec::with_capacity(max_row - min_row + 1);
        let mut total = 0;
        for m in min_row..=max_row {
            offsets.push(total);
            total += m;
        }
        Ok(PointerHmm {
            min_row,
            max_row,
            offsets,
            num_states: total,
            p_switch,
            epsilon: config.epsilon,
            threshold: config.threshold,
            level: config.level,
            delta: config.delta,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Row lengths, shortest first.
    pub fn rows(&self) -> impl Iterator<Item = usize> {
        self.min_row..=self.max_row
    }

    pub fn index_of(&self, state: PointerState) -> Option<usize> {
        if state.row < self.min_row || state.row > self.max_row {
            return None;
        }
        if state.position < 1 || state.position > state.row {
            return None;
        }
        Some(self.offsets[state.row - self.min_row] + state.position - 1)
    }

    pub fn state_at(&self, index: usize) -> PointerState {
        let r = match self.offsets.binary_search(&index) {
            Ok(r) => r,
            Err(r) => r - 1,
        };
        PointerState {
            row: self.min_row + r,
            position: index - self.offsets[r] + 1,
        }
    }

    pub fn uniform_belief(&self) -> Vec<f64> {
        vec![1.0 / self.num_states as f64; self.num_states]
    }

    /// Point mass at `state`.
    pub fn point_belief(&self, state: PointerState) -> Result<Vec<f64>> {
        let idx = self
            .index_of(state)
            .ok_or_else(|| Error::param(format!("{state:?} is outside the state space")))?;
        let mut belief = vec![0.0; self.num_states];
        belief[idx] = 1.0;
        Ok(belief)
    }

    /// Transition from the end of row `r` (0-based) to the start of each row.
    /// Rows at the edge keep the missing neighbour's share.
    fn wrap_weights(&self, r: usize) -> (f64, f64, f64) {
        let rows = self.max_row - self.min_row + 1;
        let half = self.p_switch / 2.0;
        let down = if r > 0 { half } else { 0.0 };
        let up = if r + 1 < rows { half } else { 0.0 };
        (down, 1.0 - down - up, up)
    }

    fn predict(&self, belief: &[f64], work: &mut Work) -> Vec<f64> {
        let mut out = vec![0.0; self.num_states];
        let rows = self.max_row - self.min_row + 1;
        for r in 0..rows {
            let m = self.min_row + r;
            let off = self.offsets[r];
            out[off + 1..off + m].copy_from_slice(&belief[off..off + m - 1]);
            work.multiply_adds += (m - 1) as u64;

            let end = belief[off + m - 1];
            let (down, stay, up) = self.wrap_weights(r);
            out[off] += stay * end;
            work.multiply_adds += 1;
            if down > 0.0 {
                out[self.offsets[r - 1]] += down * end;
                work.multiply_adds += 1;
            }
            if up > 0.0 {
                out[self.offsets[r + 1]] += up * end;
                work.multiply_adds += 1;
            }
        }
        work.touched_states += self.num_states as u64;
        out
    }

    fn is_row_start(&self, index: usize) -> bool {
        self.offsets.binary_search(&index).is_ok()
    }

    pub(crate) fn forward_step_counted(&self, belief: &[f64], activation: f64, work: &mut Work) -> Result<Vec<f64>> {
        if belief.len() != self.num_states {
            return Err(Error::param(format!(
                "belief has {} entries, model has {} states",
                belief.len(),
                self.num_states
            )));
        }
        if !(0.0..=1.0).contains(&activation) {
            return Err(Error::param(format!("activation must lie in [0, 1], got {activation}")));
        }
        let mut post = self.predict(belief, work);
        work.multiply_adds += self.num_states as u64;
        if activation < self.threshold {
            let total: f64 = post.iter().sum();
            if total.is_nan() || total <= 0.0 {
                return Err(Error::Degenerate("prediction carries no probability mass".into()));
            }
            return Ok(post);
        }
        let mut next_start = 0;
        for (i, p) in post.iter_mut().enumerate() {
            if next_start < self.offsets.len() && i == self.offsets[next_start] {
                *p *= activation;
                next_start += 1;
            } else {
                *p *= self.epsilon;
            }
        }
        let z: f64 = post.iter().sum();
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::Degenerate(format!("normalizer is {z}")));
        }
        post.iter_mut().for_each(|p| *p /= z);
        Ok(post)
    }

    /// One prediction plus update over the 2D space. The observation model is
    /// the gated one of the 1D space: activation at row starts when gated,
    /// `epsilon` everywhere else.
    pub fn forward_step(&self, belief: &[f64], activation: f64) -> Result<Vec<f64>> {
        check_distribution(belief, "belief")?;
        self.forward_step_counted(belief, activation, &mut Work::default())
    }

    /// MAP decode: whether the most likely state is a row start, and the
    /// interval value of its row (BPM at beat level, beats per bar at bar
    /// level). Ties go to the smallest flattened index.
    pub fn beat_positions(&self, belief: &[f64]) -> Decoded {
        let idx = argmax(belief);
        let state = self.state_at(idx);
        Decoded {
            is_beat: self.is_row_start(idx),
            state,
            value: self.row_value(state.row),
        }
    }

    fn row_value(&self, row: usize) -> f64 {
        match self.level {
            Level::Beat => 60.0 / (row as f64 * self.delta),
            Level::Bar { .. } => row as f64,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decoded {
    pub is_beat: bool,
    pub state: PointerState,
    /// BPM at beat level, beats per bar at bar level.
    pub value: f64,
}

/// Forward step as a free function.
pub fn hmm_forward_step(hmm: &PointerHmm, belief: &[f64], activation: f64) -> Result<Vec<f64>> {
    hmm.forward_step(belief, activation)
}

/// MAP decode as a free function; returns `(is_beat, value)`.
pub fn hmm_beat_positions(hmm: &PointerHmm, belief: &[f64]) -> (bool, f64) {
    let d = hmm.beat_positions(belief);
    (d.is_beat, d.value)
}
