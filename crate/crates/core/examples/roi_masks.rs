//! Builds both forehead masks for one synthetic frame and prints them as text.

use rppg::roi::mask_for;
use rppg::synth::{render, template_forehead_spec, SynthConfig};
use rppg::{Method, RoiMask};

fn draw(mask: &RoiMask, frame: &rppg::Frame, step: u32) {
    for row in (0..frame.height).step_by(step as usize) {
        let line: String = (0..frame.width)
            .step_by(step as usize)
            .map(|col| {
                if mask.contains(col, row) {
                    '#'
                } else if frame.green(col, row) < 100 {
                    ':'
                } else if frame.green(col, row) < 200 {
                    '.'
                } else {
                    ' '
                }
            })
            .collect();
        if !line.trim().is_empty() {
            println!("{}", line.trim_end());
        }
    }
}

fn main() -> rppg::Result<()> {
    let config = SynthConfig {
        width: 160,
        height: 120,
        duration_s: 1.0,
        noise_sigma: 0.0,
        bbox_jitter_sigma: 0.02,
        landmark_jitter_sigma: 0.004,
        seed: 3,
        ..SynthConfig::default()
    };
    let (clip, geometry) = render(&config)?;
    let spec = template_forehead_spec();

    // Two frames apart, so the effect of detector jitter is visible.
    for index in [0, 15] {
        let frame = &clip.frames[index];
        for method in Method::ALL {
            let mask = mask_for(method, &geometry[index], &spec, frame.width, frame.height)?
                .expect("synth geometry is complete");
            println!(
                "frame {index}, {}: {} pixels in {} row spans",
                method.title(),
                mask.pixel_count(),
                mask.spans().len()
            );
            draw(&mask, frame, 2);
            println!();
        }
    }
    println!("legend: # mask, : hair or brow, . skin, blank background");
    Ok(())
}
