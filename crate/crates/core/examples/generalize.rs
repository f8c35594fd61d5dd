//! Applies a shapes model to hand-drawn images it never saw in training.
//! Each argument is a 28x28 PGM; without arguments two crossing strokes are
//! drawn in memory. Assignments are written next to the inputs as PPM files.
//!
//! cargo run --release --example generalize -- [image.pgm ...]

use std::path::PathBuf;

use recon_cluster::dae::{train, Activation, DaeModel, TrainConfig};
use recon_cluster::datasets::{generate, BinaryImage, DatasetName, DatasetSpec, Split};
use recon_cluster::rc::{run_rc, RcConfig};
use recon_cluster::render::{assignment_ppm, load_pgm, Palette};

fn main() -> recon_cluster::Result<()> {
    let spec = |split, count, seed| DatasetSpec::new(DatasetName::Shapes, split, count, seed);
    let imgs = |s| -> recon_cluster::Result<Vec<_>> { Ok(generate(&s)?.into_iter().map(|e| e.image).collect()) };
    let cfg = TrainConfig {
        learning_rate: 0.05,
        noise_p: 0.1,
        max_epochs: 30,
        ..TrainConfig::default()
    };
    let model = DaeModel::new_random(784, 250, Activation::Relu, 1);
    let model = train(model, &imgs(spec(Split::TrainSingle, 3000, 1))?, &imgs(spec(Split::Validation, 300, 2))?, &cfg)?.model;

    let mut inputs: Vec<(PathBuf, BinaryImage)> = vec![];
    for arg in std::env::args().skip(1) {
        let path = PathBuf::from(arg);
        inputs.push((path.clone(), load_pgm(&path)?));
    }
    if inputs.is_empty() {
        let mask: Vec<bool> = (0..784).map(|i| (i / 28 == 9 && i % 28 > 3 && i % 28 < 24) || (i % 28 == 14 && i / 28 > 3)).collect();
        inputs.push((PathBuf::from("out/cross.pgm"), BinaryImage::from_mask(28, 28, &mask)?));
        std::fs::create_dir_all("out").map_err(|e| recon_cluster::Error::io("out", e))?;
    }
    for (path, image) in inputs {
        let trace = run_rc(&model, image.pixels(), &RcConfig::with_k(2))?;
        let ppm = assignment_ppm(&trace.final_gamma, 28, 28, &Palette::default(), Some(&image.lit()))?;
        let out = path.with_file_name(format!("{}_assignment.ppm", path.file_stem().unwrap().to_string_lossy()));
        std::fs::write(&out, ppm).map_err(|e| recon_cluster::Error::io(&out, e))?;
        println!("{}: {} iterations, wrote {}", path.display(), trace.iterations(), out.display());
    }
    Ok(())
}
