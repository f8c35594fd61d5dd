//! Binds a three-shape image: trains a DAE on single shapes, runs RC at K = 3
//! and prints the log-likelihood per iteration next to the final grouping.
//!
//! cargo run --release --example bind_shapes

use recon_cluster::dae::{train, Activation, DaeModel, TrainConfig};
use recon_cluster::datasets::{generate, DatasetName, DatasetSpec, Split};
use recon_cluster::metrics::{ami, confidence, hard_labels};
use recon_cluster::rc::{run_rc, RcConfig};

fn main() -> recon_cluster::Result<()> {
    let spec = |split, count, seed| DatasetSpec::new(DatasetName::Shapes, split, count, seed);
    let imgs = |s| -> recon_cluster::Result<Vec<_>> { Ok(generate(&s)?.into_iter().map(|e| e.image).collect()) };
    let cfg = TrainConfig {
        learning_rate: 0.05,
        noise_p: 0.1,
        max_epochs: 40,
        ..TrainConfig::default()
    };
    let model = DaeModel::new_random(784, 250, Activation::Relu, 1);
    let model = train(model, &imgs(spec(Split::TrainSingle, 3000, 1))?, &imgs(spec(Split::Validation, 300, 2))?, &cfg)?.model;

    let ex = &generate(&spec(Split::TestMulti, 1, 3))?[0];
    let trace = run_rc(&model, ex.image.pixels(), &RcConfig::with_k(3))?;
    for (i, ll) in trace.log_likelihoods.iter().enumerate() {
        println!("iteration {:>2}  log-likelihood {ll:.3}", i + 1);
    }
    let pred = hard_labels(&trace.final_gamma);
    let mask = ex.truth.eval_mask();
    println!(
        "converged: {}, AMI {:.3}, confidence {:.3}",
        trace.converged,
        ami(&pred, &ex.truth.labels(), mask)?,
        confidence(&trace.final_gamma, mask)?
    );
    for y in 0..28 {
        let row: String = (0..28)
            .map(|x| if ex.image.pixels()[y * 28 + x] > 0.5 { (b'0' + pred[y * 28 + x] as u8) as char } else { '.' })
            .collect();
        println!("  {row}");
    }
    Ok(())
}
