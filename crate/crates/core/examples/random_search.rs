//! Random hyperparameter search on the two-pattern superposition dataset,
//! followed by a comparison with the known good configuration.
//!
//! cargo run --release --example random_search -- [n_trials]

use recon_cluster::datasets::DatasetName;
use recon_cluster::search::{
    reference_config, run_search, run_trial, SearchData, SearchSettings, SearchSpace, TrainingMode,
};

fn main() -> recon_cluster::Result<()> {
    let n_trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let dataset = DatasetName::SimpleSuperposition;
    let mode = TrainingMode::SingleObject;
    let data = SearchData::generate(dataset, mode, (1000, 200, 50), 11, &Default::default())?;
    let settings = SearchSettings {
        max_epochs: 20,
        ..SearchSettings::new(dataset, mode, n_trials, 11)
    };
    let result = run_search(&data, &SearchSpace::default(), &settings, |t| {
        let c = &t.config;
        match t.score {
            Some(s) => println!(
                "trial {:>2}: lr {:.5} hidden {:>4} {:<7} noise {:.1} -> val {:.2}, AMI {s:.3}",
                t.index,
                c.learning_rate,
                c.hidden_size,
                c.activation.as_str(),
                c.noise_p,
                t.best_val_loss.unwrap_or(f64::NAN)
            ),
            None => println!("trial {:>2}: failed ({})", t.index, t.error.as_deref().unwrap_or("")),
        }
    })?;
    let best = result.best_trial();
    println!("best trial {} with AMI {:.3}", best.index, best.score.unwrap());
    println!("{}", best.config.to_key_values(dataset).render());

    let (reference, _) = reference_config(dataset, mode).expect("known dataset");
    let r = run_trial(&data, &settings, reference, n_trials, 99);
    println!("reference configuration scores {:.3}", r.score.unwrap_or(f64::NAN));
    Ok(())
}
