//! Filter bank and scattering transform of one synthetic frame: prints the
//! Littlewood–Paley bound, the path count and the mean coefficient per
//! order, raw and normalized.

use kshs::scattering::{frame_subbands, FrameImage, ScatteringConfig};
use kshs::synth::{synthetic_video, SynthConfig};

fn main() -> kshs::Result<()> {
    let config = ScatteringConfig::default();
    let bank = config.filter_bank()?;
    println!(
        "J={} L={} M={} on {:?}: {} subbands, Littlewood-Paley bound {:.6}",
        config.scales,
        config.orientations,
        config.depth,
        config.working_size,
        config.band_count(),
        bank.littlewood_paley_bound()
    );

    let synth = SynthConfig {
        frames: 1,
        ..SynthConfig::default()
    };
    let frame = FrameImage::new(synthetic_video(&synth, 0, 0).remove(0))?;
    for normalized in [false, true] {
        let maps = frame_subbands(&frame, &bank, config.depth, normalized)?;
        let mut per_order = [(0.0, 0usize); 3];
        for (path, map) in maps.paths().iter().zip(maps.maps()) {
            let slot = &mut per_order[path.order()];
            slot.0 += map.mean();
            slot.1 += 1;
        }
        println!("normalized={normalized}");
        for (order, (sum, count)) in per_order.iter().enumerate() {
            println!("  order {order}: {count:>3} maps, mean coefficient {:.4e}", sum / *count as f64);
        }
    }
    Ok(())
}
