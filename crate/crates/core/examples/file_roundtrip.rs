//! Write activations and annotations to disk, read them back, track from the file.
use jumpback::signal::{annotations_to_text, parse_activations, parse_annotations, synth_stream, SynthParams};
use jumpback::{Tracker, TrackerConfig};

fn main() -> jumpback::Result<()> {
    let dir = std::env::temp_dir().join(format!("jumpback-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let act_path = dir.join("activations.txt");
    let ann_path = dir.join("reference.txt");

    let (stream, truth) = synth_stream(&SynthParams::clean(128.0, 4, 10.0))?;
    stream.save(&act_path)?;
    std::fs::write(&ann_path, annotations_to_text(&truth))?;

    let loaded = parse_activations(&act_path)?;
    let reference = parse_annotations(&ann_path)?;
    println!("{} frames at {} s hop, {} reference beats", loaded.len(), loaded.delta, reference.len());
    print!("header and first rows:\n{}", loaded.to_text().lines().take(4).map(|l| format!("  {l}\n")).collect::<String>());

    let summary = Tracker::new(TrackerConfig::default())?.process_stream(&loaded)?;
    println!("tracked: tempo={:.1} meter={}", summary.tempo, summary.meter);
    let events = summary.annotations();
    println!("last events:");
    print!("{}", annotations_to_text(&events[events.len().saturating_sub(4)..]));

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
