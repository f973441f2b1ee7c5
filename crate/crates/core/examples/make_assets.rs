//! Writes the victim weights and textures used by the shipped scenarios.
//!
//! ```text
//! cargo run -p advray --example make_assets -- scenarios
//! ```

use std::path::PathBuf;

use advray::formats::encode_texture_raw;
use advray::raytrace::Texture;
use advray::rng::SplitMix64;
use advray::victim::{init_random, save_weights, Arch, Layer, VictimModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "scenarios".into()));
    let dir = root.join("weights");
    std::fs::create_dir_all(&dir)?;

    // Logit k is ten times the mean of channel k: class 0 follows red.
    let mut w = vec![0.0f32; 9];
    for c in 0..3 {
        w[c * 3 + c] = 10.0;
    }
    let linear = VictimModel::new(
        vec![
            Layer::GlobalAvgPool,
            Layer::Dense {
                out: 3,
                inp: 3,
                weights: w,
                bias: vec![0.0; 3],
            },
        ],
        (32, 32),
    )?;
    std::fs::write(dir.join("linear_red.avw"), save_weights(&linear))?;

    let cnn = init_random(Arch::TinyCnn, 3, (32, 32), 2024)?;
    std::fs::write(dir.join("tiny_cnn.avw"), save_weights(&cnn))?;

    // Mottled green-dominant texture, exactly representable in f32.
    let mut rng = SplitMix64::new(5);
    let data = (0..32 * 32)
        .flat_map(|_| [0.45, 0.55, 0.3])
        .map(|base: f64| ((base + rng.uniform(-0.45, 0.45)).clamp(0.0, 1.0) as f32) as f64)
        .collect();
    let tex = Texture {
        width: 32,
        height: 32,
        data,
    };
    std::fs::create_dir_all(root.join("textures"))?;
    std::fs::write(root.join("textures/mottled.tex"), encode_texture_raw(&tex))?;
    println!("wrote assets under {}", root.display());
    Ok(())
}
