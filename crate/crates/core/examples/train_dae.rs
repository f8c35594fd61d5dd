//! Trains a denoising autoencoder on single bars and compares its
//! reconstruction loss on corrupted validation images with the identity map.
//!
//! cargo run --release --example train_dae

use recon_cluster::dae::{bce_loss, clip, salt_pepper, train, Activation, DaeModel, TrainConfig};
use recon_cluster::datasets::{generate, BinaryImage, DatasetName, DatasetSpec, Split};
use recon_cluster::numerics::Rng;

fn images(split: Split, count: usize, seed: u64) -> recon_cluster::Result<Vec<BinaryImage>> {
    Ok(generate(&DatasetSpec::new(DatasetName::Bars, split, count, seed))?.into_iter().map(|e| e.image).collect())
}

fn main() -> recon_cluster::Result<()> {
    let train_set = images(Split::TrainSingle, 2000, 1)?;
    let val_set = images(Split::Validation, 300, 2)?;
    let cfg = TrainConfig {
        learning_rate: 0.1,
        noise_p: 0.1,
        max_epochs: 30,
        ..TrainConfig::default()
    };
    let model = DaeModel::new_random(400, 100, Activation::Sigmoid, 3);
    let report = train(model, &train_set, &val_set, &cfg)?;
    for (epoch, loss) in report.val_losses.iter().enumerate().step_by(5) {
        println!("epoch {epoch:>3}  validation BCE {loss:.3}");
    }
    println!("stopped after {} epochs, best {:.3} at epoch {}", report.epochs_run, report.best_val_loss, report.best_epoch);

    let mut rng = Rng::new(4);
    let (mut dae, mut identity) = (0.0, 0.0);
    for img in &val_set {
        let noisy = salt_pepper(img.pixels(), cfg.noise_p, &mut rng);
        let mu = report.model.decode(&report.model.encode(&noisy)?)?;
        dae += bce_loss(&mu, img.pixels());
        identity += bce_loss(&noisy.iter().map(|v| clip(*v)).collect::<Vec<_>>(), img.pixels());
    }
    let n = val_set.len() as f64;
    println!("corrupted validation BCE: autoencoder {:.3}, identity map {:.3}", dae / n, identity / n);
    Ok(())
}
