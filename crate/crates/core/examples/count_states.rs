//! State counts of each state-space construction over a range of frame rates.
use jumpback::pointer::{count_states, SpaceKind};
use jumpback::SpaceConfig;

fn main() -> jumpback::Result<()> {
    print!("{:>8}", "delta");
    for kind in SpaceKind::ALL {
        print!(" {:>16}", kind.name());
    }
    println!();
    for delta in [0.01, 0.02, 0.04, 0.05] {
        let cfg = SpaceConfig { delta, ..SpaceConfig::beat() };
        print!("{delta:>8.3}");
        for kind in SpaceKind::ALL {
            print!(" {:>16}", count_states(kind, &cfg, 2, 6)?);
        }
        println!();
    }
    Ok(())
}
