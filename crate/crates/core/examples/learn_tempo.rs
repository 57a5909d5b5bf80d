//! Feed a pulse train to a bare jump-back space and watch the learned
//! weights peak at the true interval.
use jumpback::space::StreamFilter;
use jumpback::SpaceConfig;

fn main() -> jumpback::Result<()> {
    let period = 25; // 120 BPM at 50 frames per second
    let mut filter = StreamFilter::new(SpaceConfig::beat(), Some(7))?;
    for frame in 0..1500usize {
        let b = if frame % period == 0 { 1.0 } else { 0.0 };
        filter.advance(b)?;
        if frame % 250 == 0 && frame > 0 {
            let interval = filter.interval();
            let gamma = filter.space().gamma();
            println!(
                "t={:5.1}s  argmax={:2} frames  tempo={:6.1} BPM  gamma[{period}]={:.3}  beat mass={:.3}",
                frame as f64 * 0.02,
                interval.position,
                interval.value,
                gamma[period - 1],
                filter.belief().beat_mass(),
            );
        }
    }

    let gamma = filter.space().gamma();
    println!("\nlearned weights (position: value, > 0.01 only)");
    for (i, g) in gamma.iter().enumerate().filter(|(_, g)| **g > 0.01) {
        println!("  {:2}: {:.3}", i + 1, g);
    }
    Ok(())
}
