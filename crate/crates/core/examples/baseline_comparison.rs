//! Work and wall-clock time of the jump-back tracker against the 2D pointer
//! baseline on the same streams.
use jumpback::eval::bench_tracker;
use jumpback::signal::{synth_stream, SynthParams};
use jumpback::{Engine, TrackerConfig};

fn main() -> jumpback::Result<()> {
    let streams = [(60.0, 3), (90.0, 4), (120.0, 4), (180.0, 3)]
        .into_iter()
        .map(|(tempo, meter)| synth_stream(&SynthParams::clean(tempo, meter, 30.0)).map(|(s, _)| s))
        .collect::<jumpback::Result<Vec<_>>>()?;

    let config = TrackerConfig::default();
    let one = bench_tracker(&streams, Engine::OneDim, &config)?;
    let two = bench_tracker(&streams, Engine::Baseline2d, &config)?;

    for r in [&one, &two] {
        println!(
            "{:>3}: {:5}+{:<3} states  {:7.1} touched/frame  {:7.1} mult-adds/frame  {:.5} s per 30 s",
            r.engine.name(),
            r.beat_states,
            r.bar_states,
            r.touched_per_frame(),
            r.multiply_adds_per_frame(),
            r.mean_seconds_per_30s()
        );
    }
    println!(
        "\ntouched ratio {:.4}, speedup {:.1}x",
        one.touched_per_frame() / two.touched_per_frame(),
        two.mean_seconds_per_30s() / one.mean_seconds_per_30s()
    );
    Ok(())
}
