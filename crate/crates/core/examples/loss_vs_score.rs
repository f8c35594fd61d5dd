//! Trains a handful of bars DAEs that differ only in learning rate and seed
//! and reports how well a low validation loss predicts a high binding score.
//!
//! cargo run --release --example loss_vs_score -- [n_models]

use recon_cluster::datasets::DatasetName;
use recon_cluster::search::{loss_vs_score_study, pearson, reference_config, SearchData, SearchSettings, TrainingMode};

fn main() -> recon_cluster::Result<()> {
    let n_models = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let dataset = DatasetName::Bars;
    let mode = TrainingMode::SingleObject;
    let data = SearchData::generate(dataset, mode, (1000, 200, 50), 5, &Default::default())?;
    let settings = SearchSettings {
        max_epochs: 20,
        ..SearchSettings::new(dataset, mode, n_models, 5)
    };
    let (base, _) = reference_config(dataset, mode).expect("known dataset");
    let records = loss_vs_score_study(&data, &settings, base, 100, n_models, (1e-3, 0.3))?;
    let (mut neg_loss, mut score) = (vec![], vec![]);
    for r in &records {
        match (r.val_loss, r.score) {
            (Some(l), Some(s)) => {
                println!("lr {:.5}  val loss {l:>8.2}  AMI {s:.3}", r.learning_rate);
                neg_loss.push(-l);
                score.push(s);
            }
            _ => println!("lr {:.5}  failed: {}", r.learning_rate, r.error.as_deref().unwrap_or("")),
        }
    }
    println!("Pearson(-validation loss, AMI) = {:.3}", pearson(&neg_loss, &score));
    Ok(())
}
