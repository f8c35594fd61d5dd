//! Scores a bars model with soft and hard RC over a range of K and prints a
//! table of mean AMI, confidence and final log-likelihood.
//!
//! cargo run --release --example evaluate_scores

use recon_cluster::dae::{train, Activation, DaeModel, TrainConfig};
use recon_cluster::datasets::{generate, DatasetName, DatasetSpec, Split};
use recon_cluster::metrics::score_dataset;
use recon_cluster::rc::{AssignmentMode, RcConfig};

fn main() -> recon_cluster::Result<()> {
    let spec = |split, count, seed| DatasetSpec::new(DatasetName::Bars, split, count, seed);
    let imgs = |s| -> recon_cluster::Result<Vec<_>> { Ok(generate(&s)?.into_iter().map(|e| e.image).collect()) };
    let cfg = TrainConfig {
        learning_rate: 0.1,
        noise_p: 0.0,
        max_epochs: 30,
        ..TrainConfig::default()
    };
    let model = DaeModel::new_random(400, 250, Activation::Relu, 1);
    let model = train(model, &imgs(spec(Split::TrainSingle, 2000, 1))?, &imgs(spec(Split::Validation, 300, 2))?, &cfg)?.model;
    let test = generate(&spec(Split::TestMulti, 200, 3))?;

    println!("{:<5} {:>3} {:>9} {:>11} {:>10} {:>10}", "mode", "K", "mean AMI", "confidence", "final ll", "converged");
    for mode in [AssignmentMode::Soft, AssignmentMode::Hard] {
        for k in [2, 6, 12] {
            let rc = RcConfig {
                k,
                assignment_mode: mode,
                keep_snapshots: false,
                ..RcConfig::default()
            };
            let s = score_dataset(&model, &test, &rc)?.summary;
            println!(
                "{:<5} {k:>3} {:>9.4} {:>11.3} {:>10.2} {:>9.0}%",
                mode.as_str(),
                s.mean_ami,
                s.mean_confidence,
                s.mean_final_ll,
                100.0 * s.converged_fraction
            );
        }
    }
    Ok(())
}
