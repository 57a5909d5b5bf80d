//! Causal beat, downbeat, tempo and meter tracking of a noisy synthetic stream.
use jumpback::signal::{synth_stream, SynthParams};
use jumpback::tracker::EventKind;
use jumpback::{Tracker, TrackerConfig};

fn main() -> jumpback::Result<()> {
    let params = SynthParams {
        noise_std: 0.1,
        jitter_frames: 1,
        seed: 3,
        ..SynthParams::clean(96.0, 3, 30.0)
    };
    let (stream, _) = synth_stream(&params)?;

    let mut tracker = Tracker::new(TrackerConfig::default())?;
    for frame in &stream.frames {
        if let Some(ev) = tracker.process_frame(*frame)? {
            let mark = if ev.kind == EventKind::Downbeat { "DOWNBEAT" } else { "beat" };
            if ev.frame_index % 5 == 0 || ev.is_downbeat() {
                println!(
                    "{:7.2}s {:8} pos={} tempo={:6.1} meter={}{}",
                    ev.time,
                    mark,
                    ev.bar_position,
                    ev.tempo,
                    ev.meter,
                    if ev.warmup { " (warm-up)" } else { "" }
                );
            }
        }
    }
    let summary = tracker.finalize();
    println!(
        "\nfinal: tempo={:.1} BPM meter={} beats={} downbeats={}",
        summary.tempo,
        summary.meter,
        summary.beat_times().len(),
        summary.downbeat_times().len()
    );
    Ok(())
}
