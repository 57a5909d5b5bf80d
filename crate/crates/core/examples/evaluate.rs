//! Beat and downbeat F-measure of the tracker against synthetic ground truth.
use jumpback::eval::{f_measure, DEFAULT_TOLERANCE};
use jumpback::signal::{beat_times, downbeat_times, synth_stream, SynthParams};
use jumpback::{Tracker, TrackerConfig};

fn main() -> jumpback::Result<()> {
    println!("{:>6} {:>5} {:>6} {:>8} {:>10}", "tempo", "meter", "noise", "beat F", "downbeat F");
    for (tempo, meter) in [(70.0, 4), (110.0, 3), (150.0, 4)] {
        for noise in [0.0, 0.1, 0.2] {
            let params = SynthParams {
                noise_std: noise,
                jitter_frames: u32::from(noise > 0.0),
                seed: 11,
                ..SynthParams::clean(tempo, meter, 60.0)
            };
            let (stream, truth) = synth_stream(&params)?;
            let summary = Tracker::new(TrackerConfig::default())?.process_stream(&stream)?;
            let beat = f_measure(&summary.beat_times(), &beat_times(&truth), DEFAULT_TOLERANCE)?;
            let down = f_measure(&summary.downbeat_times(), &downbeat_times(&truth), DEFAULT_TOLERANCE)?;
            println!(
                "{tempo:>6.0} {meter:>5} {noise:>6.2} {:>8.3} {:>10.3}",
                beat.f_measure, down.f_measure
            );
        }
    }
    Ok(())
}
